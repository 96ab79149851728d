use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;
use serde::Serialize;
use serde_json::json;

use secwire::bounds::{theorem1_bound, theorem2_bound, theorem3_bound, BoundParams};
use secwire::channels::ChannelTriple;
use secwire::error::{Error, Result};
use secwire::feedback::{run_session, CodedTransport, IdealTransport, Transport};
use secwire::fsm::{max_mi_security, simulate_system, sweep_initial_states, SimulationConfig};
use secwire::info::{channel_capacity, gamma, gamma_curve, mutual_information, oracle, secrecy_capacity, ProbVector};
use secwire::io;
use secwire::parsing::{conditional_lz_complexity, incremental_parse, joint_parse, lz_complexity};
use secwire::report::{Format, Report};
use secwire::rng::substream;
use secwire::separation::{run_separation, LengthMode};
use secwire::wyner::{build_code, randomness_audit, simulate_decoding, wiretapper_information, AuditParams};
use secwire::wyner::{code_leakage, exact_error_probability};

const USAGE_EXIT: u8 = 64;

#[derive(Parser)]
#[command(name = "secwire", version, about = "Secure transmission of individual sequences over wiretap channels")]
struct Cli {
    #[arg(long, value_enum, global = true, default_value = "json")]
    format: OutputFormat,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// LZ78 parse and (conditional) LZ complexity of a sequence.
    Parse(ParseArgs),
    /// Validate a channel pair and show the cascade.
    Channel(ChannelArgs),
    /// Channel capacity, secrecy capacity or Gamma[R].
    Capacity(CapacityArgs),
    /// Lower bounds on bandwidth expansion and local randomness.
    #[command(subcommand)]
    Bound(BoundCommand),
    /// Monte Carlo simulation of a finite-state encoder/decoder pair.
    Simulate(SimulateArgs),
    /// Build and evaluate a binning wiretap code.
    Wyner(WynerArgs),
    /// Feedback sessions with list decoding at the receiver.
    Feedback(FeedbackArgs),
    /// LZ78 compression carried by a binning wiretap code.
    Separate(SeparateArgs),
    /// Exact max-MI leakage of an encoder over n source symbols.
    Leakage(LeakageArgs),
}

#[derive(Args, Serialize)]
struct ParseArgs {
    #[arg(long)]
    seq: PathBuf,
    #[arg(long)]
    side: Option<PathBuf>,
    /// Include the phrases in the output.
    #[arg(long)]
    phrases: bool,
}

#[derive(Args, Serialize)]
struct PairArgs {
    #[arg(long)]
    main: PathBuf,
    #[arg(long)]
    wiretap: PathBuf,
}

#[derive(Args, Serialize)]
struct ChannelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pair: PairArgs,
    /// Include the cascade rows in the result.
    #[arg(long)]
    emit_cascade: bool,
    /// Also write the cascade to this channel file.
    #[arg(long)]
    cascade_out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CapacityArgs {
    #[arg(long)]
    main: PathBuf,
    #[arg(long)]
    wiretap: Option<PathBuf>,
    /// Evaluate Gamma at this rate.
    #[arg(long)]
    gamma: Option<f64>,
    /// Evaluate Gamma on this many evenly spaced rates in [0, C_M).
    #[arg(long)]
    gamma_points: Option<usize>,
    /// Cross-check against the simplex-grid oracle with this spacing.
    #[arg(long)]
    oracle_step: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args, Serialize, Clone)]
struct BoundCommon {
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    qe: usize,
    #[arg(long, default_value_t = 1)]
    qd: usize,
    #[arg(long, default_value_t = 0.0)]
    eps_r: f64,
    #[arg(long, default_value_t = 0.0)]
    eps_s: f64,
    #[arg(long, default_value_t = 0.0)]
    eps_n: f64,
    #[arg(long)]
    main: PathBuf,
    #[arg(long)]
    wiretap: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

impl BoundCommon {
    fn params(&self) -> BoundParams {
        BoundParams {
            k: self.k,
            m: self.m,
            q_e: self.qe,
            q_d: self.qd,
            eps_r: self.eps_r,
            eps_s: self.eps_s,
            eps_n: self.eps_n,
            ..BoundParams::default()
        }
    }
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Bandwidth expansion from LZ complexity.
    T1 {
        #[arg(long)]
        seq: PathBuf,
        #[command(flatten)]
        common: BoundCommon,
    },
    /// Local random bits per encoder step.
    T2 {
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[command(flatten)]
        common: BoundCommon,
    },
    /// Bandwidth expansion from conditional LZ complexity.
    T3 {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        side: PathBuf,
        #[command(flatten)]
        common: BoundCommon,
    },
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    enc: PathBuf,
    #[arg(long)]
    dec: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pair: PairArgs,
    #[arg(long)]
    seq: PathBuf,
    #[arg(long)]
    side: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Repeat from every pair of initial states and report the worst.
    #[arg(long)]
    sweep: bool,
    #[arg(long)]
    exact_leakage: bool,
    /// Collect the empirical joint law over super-blocks of this many chunks.
    #[arg(long)]
    joint_blocks: Option<usize>,
}

#[derive(Args, Serialize)]
struct WynerArgs {
    #[arg(long = "N")]
    n: usize,
    #[arg(long)]
    secret_bits: usize,
    #[arg(long)]
    random_bits: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pair: PairArgs,
    #[arg(long, default_value_t = 10000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    audit: bool,
    /// Source symbols per block in the audit; defaults to the secret bits.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    eps_s: f64,
    #[arg(long, default_value_t = 1)]
    qe: usize,
    #[arg(long, default_value_t = 1)]
    ell: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args, Serialize)]
struct FeedbackArgs {
    #[arg(long)]
    seq: PathBuf,
    #[arg(long)]
    side: PathBuf,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    sessions: usize,
    #[arg(long)]
    seed: u64,
    /// Carry chunks over a binning wiretap code instead of an ideal link.
    #[arg(long, requires_all = ["n", "main", "wiretap"])]
    coded: bool,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    main: Option<PathBuf>,
    #[arg(long)]
    wiretap: Option<PathBuf>,
    /// Random bits of the code; defaults to ceil(N I(X*;Z*)).
    #[arg(long)]
    random_bits: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    FixedToVariable,
    VariableToFixed,
}

#[derive(Args, Serialize)]
struct SeparateArgs {
    #[arg(long)]
    seq: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pair: PairArgs,
    #[arg(long = "N")]
    n: usize,
    #[arg(long)]
    secret_bits: usize,
    #[arg(long)]
    random_bits: usize,
    #[arg(long, value_enum, default_value = "fixed-to-variable")]
    mode: Mode,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args, Serialize)]
struct LeakageArgs {
    #[arg(long)]
    enc: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pair: PairArgs,
    /// Source symbols.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Cross-check against the grid oracle with this spacing (at most four source sequences).
    #[arg(long)]
    oracle_step: Option<f64>,
}

fn triple(pair: &PairArgs) -> Result<ChannelTriple> {
    ChannelTriple::new(io::read_channel(&pair.main)?, io::read_channel(&pair.wiretap)?)
}

fn phrase_text(u: &[u32], alphabet: usize) -> String {
    if alphabet <= 10 {
        u.iter().map(|&s| char::from(b'0' + s as u8)).collect()
    } else {
        u.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
    }
}

fn parse_cmd(a: &ParseArgs) -> Result<Report> {
    let u = io::read_sequence(&a.seq)?;
    let alpha = u.alphabet().size();
    let result = match &a.side {
        None => {
            let p = incremental_parse(&u);
            let mut r = json!({
                "n": u.len(),
                "c": p.count(),
                "rho": lz_complexity(&u)?,
                "last_incomplete": p.last_incomplete,
            });
            if a.phrases {
                r["phrases"] = p.phrase_slices(u.symbols()).map(|s| phrase_text(s, alpha)).collect();
            }
            r
        }
        Some(side) => {
            let w = io::read_sequence(side)?;
            let jp = joint_parse(&u, &w)?;
            let mut r = json!({
                "n": u.len(),
                "c_joint": jp.c_joint,
                "c_w": jp.c_w(),
                "multiplicities": jp.multiplicities(),
                "rho": conditional_lz_complexity(&u, &w)?,
                "last_incomplete": jp.last_incomplete,
            });
            if a.phrases {
                let omega = w.alphabet().size();
                r["phrases"] = jp
                    .phrases
                    .iter()
                    .map(|rg| {
                        json!({
                            "u": phrase_text(&u.symbols()[rg.clone()], alpha),
                            "w": phrase_text(&w.symbols()[rg.clone()], omega),
                        })
                    })
                    .collect();
            }
            r
        }
    };
    Report::new("parse", a, &result)
}

fn channel_cmd(a: &ChannelArgs) -> Result<Report> {
    let t = triple(&a.pair)?;
    let c = t.cascade();
    let mut result = json!({
        "main": {"inputs": t.main().inputs(), "outputs": t.main().outputs()},
        "wiretap": {"inputs": t.wiretap().inputs(), "outputs": t.wiretap().outputs()},
        "cascade": {"inputs": c.inputs(), "outputs": c.outputs()},
    });
    if a.emit_cascade {
        result["cascade"]["rows"] = c.rows().map(|r| r.to_vec()).collect::<Vec<_>>().into();
    }
    if let Some(path) = &a.cascade_out {
        io::write_channel(path, c)?;
    }
    Report::new("channel", a, &result)
}

fn capacity_cmd(a: &CapacityArgs) -> Result<Report> {
    let main = io::read_channel(&a.main)?;
    let Some(wiretap) = &a.wiretap else {
        let cap = channel_capacity(&main, a.tol)?;
        let mut result = json!({"value": cap.value, "argmax": cap.argmax, "gap": cap.certified_gap, "iterations": cap.iterations});
        if let Some(step) = a.oracle_step {
            result["oracle"] = serde_json::to_value(oracle::capacity_oracle(&main, step)?).expect("serializable");
        }
        return Report::new("capacity", a, &result);
    };
    let t = ChannelTriple::new(main, io::read_channel(wiretap)?)?;
    let cs = secrecy_capacity(&t, a.tol)?;
    let mut result = json!({
        "value": cs.value,
        "argmax": cs.argmax,
        "gap": cs.certified_gap,
        "iterations": cs.iterations,
        "i_xz_star": mutual_information(&cs.argmax, t.cascade())?,
    });
    if let Some(step) = a.oracle_step {
        result["oracle"] = serde_json::to_value(oracle::secrecy_capacity_oracle(&t, step)?).expect("serializable");
    }
    if let Some(rate) = a.gamma {
        result["gamma"] = serde_json::to_value(gamma(&t, rate, a.tol.max(1e-9))?).expect("serializable");
    }
    let mut report;
    if let Some(points) = a.gamma_points {
        let curve = gamma_curve(&t, points, a.tol.max(1e-9))?;
        result["c_m"] = curve.c_m.into();
        result["gamma_max_increase"] = curve.max_increase().into();
        result["gamma_max_concavity_violation"] = curve.max_concavity_violation().into();
        report = Report::new("capacity", a, &result)?;
        for p in &curve.points {
            report.push_row(&json!({"rate": p.rate, "gamma": p.value, "upper_bound": p.upper_bound, "gap": p.certified_gap}))?;
        }
    } else {
        report = Report::new("capacity", a, &result)?;
    }
    Ok(report)
}

fn bound_cmd(b: &BoundCommand) -> Result<Report> {
    let (name, common) = match b {
        BoundCommand::T1 { common, .. } => ("t1", common),
        BoundCommand::T2 { common, .. } => ("t2", common),
        BoundCommand::T3 { common, .. } => ("t3", common),
    };
    let t = ChannelTriple::new(io::read_channel(&common.main)?, io::read_channel(&common.wiretap)?)?;
    let params = common.params();
    params.validate()?;
    let (config, result) = match b {
        BoundCommand::T1 { seq, .. } => {
            let u = io::read_sequence(seq)?;
            let c_s = secrecy_capacity(&t, common.tol)?.value;
            (json!({"bound": name, "seq": seq, "common": common}), serde_json::to_value(theorem1_bound(&u, &params, c_s)?))
        }
        BoundCommand::T3 { seq, side, .. } => {
            let u = io::read_sequence(seq)?;
            let w = io::read_sequence(side)?;
            let c_s = secrecy_capacity(&t, common.tol)?.value;
            (
                json!({"bound": name, "seq": seq, "side": side, "common": common}),
                serde_json::to_value(theorem3_bound(&u, &w, &params, c_s)?),
            )
        }
        BoundCommand::T2 { ell, .. } => {
            let i = wiretapper_information(&t, common.tol)?;
            let bound = theorem2_bound(&params, *ell, i)?;
            (
                json!({"bound": name, "ell": ell, "common": common}),
                Ok(json!({"random_bits_per_step": bound, "i_xz_star": i, "vacuous": bound <= 0.0})),
            )
        }
    };
    Report::new("bound", &config, &result.expect("serializable"))
}

fn simulate_cmd(a: &SimulateArgs) -> Result<Report> {
    let enc = io::read_encoder(&a.enc)?;
    let dec = io::read_decoder(&a.dec)?;
    let t = triple(&a.pair)?;
    let u = io::read_sequence(&a.seq)?;
    let w = a.side.as_deref().map(io::read_sequence).transpose()?;
    let mut config = SimulationConfig::new(a.trials, a.seed);
    config.joint_blocks = a.joint_blocks;
    config.exact_leakage = a.exact_leakage;
    if a.sweep {
        let sweep = sweep_initial_states(&enc, &dec, &t, &u, w.as_ref(), &config)?;
        let worst = sweep.worst();
        let mut report = Report::new(
            "simulate",
            a,
            &json!({"worst_initial_states": worst.initial_states, "worst_bit_error_rate": worst.bit_error_rate, "runs": sweep.runs.len()}),
        )?;
        for run in &sweep.runs {
            report.push_row(run)?;
        }
        Ok(report)
    } else {
        let stats = simulate_system(&enc, &dec, &t, &u, w.as_ref(), &config)?;
        Report::new("simulate", a, &stats)
    }
}

fn wyner_cmd(a: &WynerArgs) -> Result<Report> {
    let t = triple(&a.pair)?;
    let code = build_code(a.n, a.secret_bits, a.random_bits, &ProbVector::uniform(t.main().inputs()), a.seed)?;
    let exact = exact_error_probability(&code, t.main())?;
    let mut result = json!({
        "code": code,
        "exact_error": {"secret": exact.secret, "codeword": exact.codeword},
        "simulated_error": simulate_decoding(&code, t.main(), a.trials, a.seed)?,
        "leakage_bits": code_leakage(&code, t.cascade())?,
    });
    if a.audit {
        let params = AuditParams { eps_s: a.eps_s, q_e: a.qe, ell: a.ell, tol: a.tol };
        let mut audit = randomness_audit(&code, &t, &params)?;
        if let Some(k) = a.k {
            audit.bound = secwire::bounds::randomness_bound(a.n, k, a.eps_s, a.qe, a.ell, audit.i_xz_star);
            audit.margin = audit.random_bits as f64 - audit.bound;
            audit.passes = audit.margin >= 0.0;
            audit.leakage_line = k as f64 * a.eps_s;
        }
        result["audit"] = serde_json::to_value(audit).expect("serializable");
    }
    Report::new("wyner", a, &result)
}

/// Independent per-session seeds derived from the run seed.
fn session_seeds(seed: u64, session: u64) -> (u64, u64) {
    let mut rng = substream(seed, session);
    (rng.next_u64(), rng.next_u64())
}

fn feedback_cmd(a: &FeedbackArgs) -> Result<Report> {
    use rayon::prelude::*;
    let u = io::read_sequence(&a.seq)?;
    let w = io::read_sequence(&a.side)?;
    let coded = if a.coded {
        let pair = PairArgs { main: a.main.clone().expect("required"), wiretap: a.wiretap.clone().expect("required") };
        let t = triple(&pair)?;
        let n = a.n.expect("required");
        let j = match a.random_bits {
            Some(j) => j,
            None => (n as f64 * wiretapper_information(&t, 1e-9)? - 1e-9).ceil().max(0.0) as usize,
        };
        let code = build_code(n, a.r, j, &ProbVector::uniform(t.main().inputs()), a.seed)?;
        Some((t, code))
    } else {
        None
    };
    let transcripts = (0..a.sessions as u64)
        .into_par_iter()
        .map(|s| {
            let (bin_seed, link_seed) = session_seeds(a.seed, s);
            let mut ideal = IdealTransport::default();
            let mut link;
            let transport: &mut dyn Transport = match &coded {
                Some((t, code)) => {
                    link = CodedTransport::new(code, t, link_seed);
                    &mut link
                }
                None => &mut ideal,
            };
            run_session(&u, &w, a.r, a.delta, transport, bin_seed).map(|tr| (s, bin_seed, tr))
        })
        .collect::<Result<Vec<_>>>()?;
    let errors = transcripts.iter().filter(|t| !t.2.correct).count();
    let late = transcripts.iter().filter(|t| t.2.stopped_at.map_or(true, |i| i > t.2.i_star)).count();
    let mean_ratio = transcripts.iter().map(|t| t.2.compression_ratio).sum::<f64>() / transcripts.len().max(1) as f64;
    let mut report = Report::new(
        "feedback",
        a,
        &json!({"sessions": a.sessions, "errors": errors, "stopped_after_i_star": late, "mean_compression_ratio": mean_ratio}),
    )?;
    for (s, bin_seed, tr) in &transcripts {
        let mut row = serde_json::to_value(tr).expect("serializable");
        row["session"] = (*s).into();
        row["bin_seed"] = (*bin_seed).into();
        report.push_row(&row)?;
    }
    Ok(report)
}

fn separate_cmd(a: &SeparateArgs) -> Result<Report> {
    let u = io::read_sequence(&a.seq)?;
    let t = triple(&a.pair)?;
    let c_s = secrecy_capacity(&t, a.tol)?.value;
    let code = build_code(a.n, a.secret_bits, a.random_bits, &ProbVector::uniform(t.main().inputs()), a.seed)?;
    let mode = match a.mode {
        Mode::FixedToVariable => LengthMode::FixedToVariable,
        Mode::VariableToFixed => LengthMode::VariableToFixed { delta: a.delta },
    };
    let r = run_separation(&u, &code, &t, mode, c_s, a.seed)?;
    let mut result = serde_json::to_value(r).expect("serializable");
    result["c_s"] = c_s.into();
    Report::new("separate", a, &result)
}

fn leakage_cmd(a: &LeakageArgs) -> Result<Report> {
    let enc = io::read_encoder(&a.enc)?;
    let t = triple(&a.pair)?;
    let leak = max_mi_security(&enc, &t, a.n, a.tol)?;
    let mut result = serde_json::to_value(&leak).expect("serializable");
    if let Some(step) = a.oracle_step {
        let induced = secwire::fsm::induced_security_channel(&enc, &t, a.n)?;
        result["oracle"] = serde_json::to_value(oracle::capacity_oracle(&induced, step)?).expect("serializable");
    }
    Report::new("leakage", a, &result)
}

fn run(cli: &Cli) -> Result<()> {
    let report = match &cli.command {
        Command::Parse(a) => parse_cmd(a)?,
        Command::Channel(a) => channel_cmd(a)?,
        Command::Capacity(a) => capacity_cmd(a)?,
        Command::Bound(b) => bound_cmd(b)?,
        Command::Simulate(a) => simulate_cmd(a)?,
        Command::Wyner(a) => wyner_cmd(a)?,
        Command::Feedback(a) => feedback_cmd(a)?,
        Command::Separate(a) => separate_cmd(a)?,
        Command::Leakage(a) => leakage_cmd(a)?,
    };
    let format = match cli.format {
        OutputFormat::Json => Format::Json,
        OutputFormat::Csv => Format::Csv,
    };
    report.emit(format, cli.output.as_deref())
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("SECWIRE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("SECWIRE_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_EXIT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        return fail(&e);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
