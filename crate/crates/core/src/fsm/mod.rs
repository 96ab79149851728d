//! Finite-state encoders and decoders.
//!
//! The source is processed in chunks of `k` symbols. The encoder emits a
//! random chunk of `m` channel symbols drawn from `P(x~|u~,s)` (optionally
//! also indexed by a side-information chunk `w~`) and moves to a state
//! chosen deterministically from `(u~, s)`. The decoder maps each received
//! chunk of `m` symbols to `k` source symbols, also with a deterministic
//! state update.

mod exact;

pub use exact::{
    conditional_leakage, induced_security_channel, induced_security_channel_from, leakage_sandwich,
    max_mi_security, SandwichReport, SecurityLeakage,
};

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{sample_with, ChannelTriple};
use crate::error::{Error, Result};
use crate::parsing::{block_from_index, block_index, Alphabet, SymbolSequence};
use crate::rng::substream;

/// Emission probabilities within this distance of summing to one are accepted.
const EMIT_TOLERANCE: f64 = 1e-12;

fn blocks(radix: usize, len: usize) -> Result<usize> {
    (radix as u64)
        .checked_pow(len as u32)
        .filter(|&b| b <= u32::MAX as u64)
        .map(|b| b as usize)
        .ok_or_else(|| Error::invalid(format!("{radix}^{len} blocks do not fit a table")))
}

/// Dimensions of an encoder. `side = 1` means no side information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EncoderShape {
    pub k: usize,
    pub m: usize,
    pub states: usize,
    pub source: usize,
    pub side: usize,
    pub channel: usize,
}

impl EncoderShape {
    pub fn plain(k: usize, m: usize, states: usize, source: usize, channel: usize) -> Self {
        EncoderShape { k, m, states, source, side: 1, channel }
    }

    fn check(&self) -> Result<()> {
        if self.k == 0 || self.m == 0 || self.states == 0 {
            return Err(Error::invalid("k, m and the state count must be positive"));
        }
        if self.source == 0 || self.side == 0 || self.channel == 0 {
            return Err(Error::EmptyAlphabet);
        }
        Ok(())
    }
}

/// Stochastic finite-state encoder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EncoderSpec {
    shape: EncoderShape,
    source_blocks: usize,
    side_blocks: usize,
    /// Sparse rows `(x~ index, probability)`, indexed by `(s, u~, w~)`.
    emit: Vec<Vec<(u64, f64)>>,
    next: Vec<u32>,
    initial_state: usize,
}

impl EncoderSpec {
    /// Builds the tables from `f(s, u~, w~) -> (emission, next state)`.
    /// Repeated channel blocks in an emission are merged.
    pub fn from_fn(
        shape: EncoderShape,
        mut f: impl FnMut(usize, &[u32], &[u32]) -> (Vec<(Vec<u32>, f64)>, usize),
    ) -> Result<Self> {
        shape.check()?;
        let source_blocks = blocks(shape.source, shape.k)?;
        let side_blocks = if shape.side == 1 { 1 } else { blocks(shape.side, shape.k)? };
        blocks(shape.channel, shape.m)?;
        let rows = shape.states * source_blocks * side_blocks;
        let mut emit = Vec::with_capacity(rows);
        let mut next = Vec::with_capacity(rows);
        let mut ub = vec![0u32; shape.k];
        let mut wb = vec![0u32; if shape.side == 1 { 0 } else { shape.k }];
        for s in 0..shape.states {
            for u in 0..source_blocks {
                block_from_index(u as u64, shape.source, &mut ub);
                for w in 0..side_blocks {
                    block_from_index(w as u64, shape.side, &mut wb);
                    let (dist, to) = f(s, &ub, &wb);
                    let mut row: BTreeMap<u64, f64> = BTreeMap::new();
                    for (x, p) in dist {
                        if x.len() != shape.m || x.iter().any(|&c| c as usize >= shape.channel) {
                            return Err(Error::invalid(format!(
                                "state {s}, input block {u}: emitted block {x:?} is not in the channel alphabet"
                            )));
                        }
                        *row.entry(block_index(&x, shape.channel)).or_default() += p;
                    }
                    emit.push(row.into_iter().filter(|&(_, p)| p != 0.0).collect());
                    next.push(to as u32);
                }
            }
        }
        EncoderSpec::from_tables(shape, emit, next, 0)
    }

    /// Builds from raw tables; rows are indexed by `(s * |U|^k + u~) * |W|^k + w~`.
    pub fn from_tables(
        shape: EncoderShape,
        emit: Vec<Vec<(u64, f64)>>,
        next: Vec<u32>,
        initial_state: usize,
    ) -> Result<Self> {
        shape.check()?;
        let source_blocks = blocks(shape.source, shape.k)?;
        let side_blocks = if shape.side == 1 { 1 } else { blocks(shape.side, shape.k)? };
        let channel_blocks = blocks(shape.channel, shape.m)? as u64;
        let rows = shape.states * source_blocks * side_blocks;
        if emit.len() != rows || next.len() != rows {
            return Err(Error::invalid(format!(
                "encoder tables need {rows} rows, got {} emission and {} next-state rows",
                emit.len(),
                next.len()
            )));
        }
        for (r, row) in emit.iter().enumerate() {
            if row.iter().any(|&(x, p)| x >= channel_blocks || !(0.0..=1.0).contains(&p)) {
                return Err(Error::invalid(format!("encoder row {r} has an invalid entry")));
            }
            let residual = row.iter().map(|e| e.1).sum::<f64>() - 1.0;
            if residual.abs() > EMIT_TOLERANCE {
                return Err(Error::NotStochastic { row: r, residual });
            }
        }
        if let Some(&bad) = next.iter().find(|&&s| s as usize >= shape.states) {
            return Err(Error::invalid(format!("next state {bad} out of range")));
        }
        if initial_state >= shape.states {
            return Err(Error::invalid(format!("initial state {initial_state} out of range")));
        }
        Ok(EncoderSpec { shape, source_blocks, side_blocks, emit, next, initial_state })
    }

    /// `x~ = u~` with one state.
    pub fn identity(alphabet: usize, k: usize) -> Result<Self> {
        EncoderSpec::from_fn(EncoderShape::plain(k, k, 1, alphabet, alphabet), |_, u, _| {
            (vec![(u.to_vec(), 1.0)], 0)
        })
    }

    /// `x~ = u u ... u` (`m` copies), `k = 1`.
    pub fn repetition(alphabet: usize, m: usize) -> Result<Self> {
        EncoderSpec::from_fn(EncoderShape::plain(1, m, 1, alphabet, alphabet), |_, u, _| {
            (vec![(vec![u[0]; m], 1.0)], 0)
        })
    }

    pub fn with_initial_state(mut self, state: usize) -> Result<Self> {
        if state >= self.shape.states {
            return Err(Error::invalid(format!("initial state {state} out of range")));
        }
        self.initial_state = state;
        Ok(self)
    }

    pub fn shape(&self) -> &EncoderShape {
        &self.shape
    }

    pub fn states(&self) -> usize {
        self.shape.states
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn has_side_information(&self) -> bool {
        self.shape.side > 1
    }

    pub(crate) fn row_index(&self, state: usize, u: usize, w: usize) -> usize {
        (state * self.source_blocks + u) * self.side_blocks + w
    }

    pub fn emission(&self, state: usize, u: usize, w: usize) -> &[(u64, f64)] {
        &self.emit[self.row_index(state, u, w)]
    }

    pub fn next_state(&self, state: usize, u: usize, w: usize) -> usize {
        self.next[self.row_index(state, u, w)] as usize
    }

    pub(crate) fn rows(&self) -> impl Iterator<Item = &[(u64, f64)]> {
        self.emit.iter().map(|r| r.as_slice())
    }

    pub(crate) fn source_blocks(&self) -> usize {
        self.source_blocks
    }

    /// Side-chunk index of chunk `i`, or 0 without side information.
    fn side_chunk(&self, w: Option<&[u32]>, i: usize) -> usize {
        match w {
            Some(w) if self.shape.side > 1 => {
                block_index(&w[i * self.shape.k..(i + 1) * self.shape.k], self.shape.side) as usize
            }
            _ => 0,
        }
    }

    /// Runs the encoder from `state`, returning the channel input and the
    /// state at the start of every chunk.
    pub(crate) fn run<R: Rng>(
        &self,
        u: &[u32],
        w: Option<&[u32]>,
        mut state: usize,
        rng: &mut R,
    ) -> (Vec<u32>, Vec<u32>) {
        let EncoderShape { k, m, channel, source, .. } = self.shape;
        let chunks = u.len() / k;
        let mut x = vec![0u32; chunks * m];
        let mut path = Vec::with_capacity(chunks);
        for i in 0..chunks {
            path.push(state as u32);
            let ui = block_index(&u[i * k..(i + 1) * k], source) as usize;
            let r = self.row_index(state, ui, self.side_chunk(w, i));
            let row = &self.emit[r];
            let t: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = row.last().map(|e| e.0).unwrap_or(0);
            for &(xb, p) in row {
                acc += p;
                if t < acc {
                    pick = xb;
                    break;
                }
            }
            block_from_index(pick, channel, &mut x[i * m..(i + 1) * m]);
            state = self.next[r] as usize;
        }
        (x, path)
    }

    fn check_input(&self, u: &SymbolSequence, w: Option<&SymbolSequence>) -> Result<()> {
        if u.alphabet().size() != self.shape.source {
            return Err(Error::AlphabetMismatch {
                expected: self.shape.source,
                found: u.alphabet().size(),
            });
        }
        if u.len() % self.shape.k != 0 {
            return Err(Error::NotDivisible { what: "source length", n: u.len(), by: self.shape.k });
        }
        check_side(self.shape.side, u.len(), w)
    }
}

fn check_side(side: usize, n: usize, w: Option<&SymbolSequence>) -> Result<()> {
    match w {
        None if side > 1 => Err(Error::invalid("this machine needs a side-information sequence")),
        Some(w) if side > 1 && w.alphabet().size() != side => Err(Error::AlphabetMismatch {
            expected: side,
            found: w.alphabet().size(),
        }),
        Some(w) if w.len() != n => Err(Error::LengthMismatch { left: n, right: w.len() }),
        _ => Ok(()),
    }
}

/// Dimensions of a decoder. `side = 1` means no side information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DecoderShape {
    pub m: usize,
    pub k: usize,
    pub states: usize,
    pub channel: usize,
    pub source: usize,
    pub side: usize,
}

impl DecoderShape {
    pub fn plain(m: usize, k: usize, states: usize, channel: usize, source: usize) -> Self {
        DecoderShape { m, k, states, channel, source, side: 1 }
    }
}

/// Deterministic finite-state decoder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoderSpec {
    shape: DecoderShape,
    channel_blocks: usize,
    side_blocks: usize,
    /// Reconstructed chunk index, indexed by `(s, y~, w~)`.
    out: Vec<u64>,
    next: Vec<u32>,
    initial_state: usize,
}

impl DecoderSpec {
    /// Builds the tables from `f(s, y~, w~) -> (reconstruction, next state)`.
    pub fn from_fn(
        shape: DecoderShape,
        mut f: impl FnMut(usize, &[u32], &[u32]) -> (Vec<u32>, usize),
    ) -> Result<Self> {
        let channel_blocks = blocks(shape.channel.max(1), shape.m)?;
        let side_blocks = if shape.side == 1 { 1 } else { blocks(shape.side, shape.k)? };
        let mut out = Vec::new();
        let mut next = Vec::new();
        let mut yb = vec![0u32; shape.m];
        let mut wb = vec![0u32; if shape.side == 1 { 0 } else { shape.k }];
        for s in 0..shape.states {
            for y in 0..channel_blocks {
                block_from_index(y as u64, shape.channel, &mut yb);
                for w in 0..side_blocks {
                    block_from_index(w as u64, shape.side, &mut wb);
                    let (v, to) = f(s, &yb, &wb);
                    if v.len() != shape.k || v.iter().any(|&c| c as usize >= shape.source) {
                        return Err(Error::invalid(format!(
                            "state {s}, channel block {y}: output {v:?} is not a source block"
                        )));
                    }
                    out.push(block_index(&v, shape.source));
                    next.push(to as u32);
                }
            }
        }
        DecoderSpec::from_tables(shape, out, next, 0)
    }

    /// Builds from raw tables; rows are indexed by `(s * |Y|^m + y~) * |W|^k + w~`.
    pub fn from_tables(shape: DecoderShape, out: Vec<u64>, next: Vec<u32>, initial_state: usize) -> Result<Self> {
        if shape.k == 0 || shape.m == 0 || shape.states == 0 {
            return Err(Error::invalid("k, m and the state count must be positive"));
        }
        if shape.source == 0 || shape.channel == 0 || shape.side == 0 {
            return Err(Error::EmptyAlphabet);
        }
        let channel_blocks = blocks(shape.channel, shape.m)?;
        let side_blocks = if shape.side == 1 { 1 } else { blocks(shape.side, shape.k)? };
        let source_blocks = blocks(shape.source, shape.k)? as u64;
        let rows = shape.states * channel_blocks * side_blocks;
        if out.len() != rows || next.len() != rows {
            return Err(Error::invalid(format!(
                "decoder tables need {rows} rows, got {} output and {} next-state rows",
                out.len(),
                next.len()
            )));
        }
        if out.iter().any(|&v| v >= source_blocks) {
            return Err(Error::invalid("decoder output out of range"));
        }
        if let Some(&bad) = next.iter().find(|&&s| s as usize >= shape.states) {
            return Err(Error::invalid(format!("next state {bad} out of range")));
        }
        if initial_state >= shape.states {
            return Err(Error::invalid(format!("initial state {initial_state} out of range")));
        }
        Ok(DecoderSpec { shape, channel_blocks, side_blocks, out, next, initial_state })
    }

    pub fn identity(alphabet: usize, k: usize) -> Result<Self> {
        DecoderSpec::from_fn(DecoderShape::plain(k, k, 1, alphabet, alphabet), |_, y, _| (y.to_vec(), 0))
    }

    /// Majority vote over `m` repetitions of a symbol; ties go to the smallest symbol.
    pub fn majority(alphabet: usize, m: usize) -> Result<Self> {
        DecoderSpec::from_fn(DecoderShape::plain(m, 1, 1, alphabet, alphabet), |_, y, _| {
            let mut counts = vec![0usize; alphabet];
            y.iter().for_each(|&c| counts[c as usize] += 1);
            let best = (0..alphabet).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a))).unwrap();
            (vec![best as u32], 0)
        })
    }

    /// Always outputs `symbol`.
    pub fn constant(channel: usize, source: usize, m: usize, k: usize, symbol: u32) -> Result<Self> {
        DecoderSpec::from_fn(DecoderShape::plain(m, k, 1, channel, source), |_, _, _| (vec![symbol; k], 0))
    }

    pub fn with_initial_state(mut self, state: usize) -> Result<Self> {
        if state >= self.shape.states {
            return Err(Error::invalid(format!("initial state {state} out of range")));
        }
        self.initial_state = state;
        Ok(self)
    }

    pub fn shape(&self) -> &DecoderShape {
        &self.shape
    }

    pub fn states(&self) -> usize {
        self.shape.states
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn output(&self, state: usize, y: usize, w: usize) -> (u64, usize) {
        let r = (state * self.channel_blocks + y) * self.side_blocks + w;
        (self.out[r], self.next[r] as usize)
    }

    pub(crate) fn run(&self, y: &[u32], w: Option<&[u32]>, mut state: usize) -> (Vec<u32>, Vec<u32>) {
        let DecoderShape { k, m, channel, source, side, .. } = self.shape;
        let chunks = y.len() / m;
        let mut v = vec![0u32; chunks * k];
        let mut path = Vec::with_capacity(chunks);
        for i in 0..chunks {
            path.push(state as u32);
            let yi = block_index(&y[i * m..(i + 1) * m], channel) as usize;
            let wi = match w {
                Some(w) if side > 1 => block_index(&w[i * k..(i + 1) * k], side) as usize,
                _ => 0,
            };
            let (out, to) = self.output(state, yi, wi);
            block_from_index(out, source, &mut v[i * k..(i + 1) * k]);
            state = to;
        }
        (v, path)
    }
}

/// Encodes `u` chunk by chunk from the encoder's initial state.
pub fn encode_stream(enc: &EncoderSpec, u: &SymbolSequence, seed: u64) -> Result<SymbolSequence> {
    encode_stream_with_side(enc, u, None, seed)
}

pub fn encode_stream_with_side(
    enc: &EncoderSpec,
    u: &SymbolSequence,
    w: Option<&SymbolSequence>,
    seed: u64,
) -> Result<SymbolSequence> {
    enc.check_input(u, w)?;
    let mut rng = substream(seed, 0);
    let (x, _) = enc.run(u.symbols(), w.map(|w| w.symbols()), enc.initial_state, &mut rng);
    SymbolSequence::new(Alphabet::new(enc.shape.channel)?, x)
}

pub fn decode_stream(dec: &DecoderSpec, y: &SymbolSequence) -> Result<SymbolSequence> {
    decode_stream_with_side(dec, y, None)
}

pub fn decode_stream_with_side(
    dec: &DecoderSpec,
    y: &SymbolSequence,
    w: Option<&SymbolSequence>,
) -> Result<SymbolSequence> {
    if y.alphabet().size() != dec.shape.channel {
        return Err(Error::AlphabetMismatch {
            expected: dec.shape.channel,
            found: y.alphabet().size(),
        });
    }
    if y.len() % dec.shape.m != 0 {
        return Err(Error::NotDivisible { what: "channel output length", n: y.len(), by: dec.shape.m });
    }
    let n = y.len() / dec.shape.m * dec.shape.k;
    check_side(dec.shape.side, n, w)?;
    let (v, _) = dec.run(y.symbols(), w.map(|w| w.symbols()), dec.initial_state);
    SymbolSequence::new(Alphabet::new(dec.shape.source)?, v)
}

/// Simulation settings.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationConfig {
    pub trials: usize,
    pub seed: u64,
    /// Overrides the machines' initial states `(encoder, decoder)`.
    pub initial_states: Option<(usize, usize)>,
    /// Accumulate the empirical joint law over super-blocks of this many chunks.
    pub joint_blocks: Option<usize>,
    /// Also compute the exact max-MI leakage of the whole sequence length.
    pub exact_leakage: bool,
}

impl SimulationConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        SimulationConfig { trials, seed, initial_states: None, joint_blocks: None, exact_leakage: false }
    }
}

/// Key of the empirical joint law: block indices and the states at the
/// start of the super-block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct JointKey {
    pub u: u64,
    pub x: u64,
    pub y: u64,
    pub z: u64,
    pub s_e: u32,
    pub s_d: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointEntry {
    #[serde(flatten)]
    pub key: JointKey,
    pub probability: f64,
}

/// Empirical joint law of `(u^K, x^M, y^M, z^M, s_e, s_d)` over aligned
/// super-blocks of `chunks` encoder steps, averaged over trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalJoint {
    pub chunks: usize,
    pub entries: Vec<JointEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationStats {
    /// Stream average of the symbol error probability.
    pub bit_error_rate: f64,
    /// Largest per-chunk error rate `(1/k) sum_i Pr{V_i != u_i}` over chunk positions.
    pub worst_chunk_error_rate: f64,
    pub trials: usize,
    pub symbol_errors: u64,
    pub initial_states: (usize, usize),
    pub empirical_joint: Option<EmpiricalJoint>,
    /// Exact `max_mu I(U^n;Z^N)` in bits when requested.
    pub leakage_bits: Option<f64>,
}

#[derive(Default)]
struct TrialTally {
    chunk_errors: Vec<u64>,
    joint: BTreeMap<JointKey, u64>,
}

impl TrialTally {
    fn merge(mut self, other: TrialTally) -> TrialTally {
        if self.chunk_errors.is_empty() {
            self.chunk_errors = other.chunk_errors;
        } else {
            for (a, b) in self.chunk_errors.iter_mut().zip(other.chunk_errors) {
                *a += b;
            }
        }
        for (key, c) in other.joint {
            *self.joint.entry(key).or_default() += c;
        }
        self
    }
}

/// Monte Carlo estimate of the decoder's symbol error rate over encoder and
/// channel randomness. Trial `t` uses substream `t` of the seed, so the
/// result does not depend on the thread count.
pub fn simulate_system(
    enc: &EncoderSpec,
    dec: &DecoderSpec,
    triple: &ChannelTriple,
    u: &SymbolSequence,
    w: Option<&SymbolSequence>,
    config: &SimulationConfig,
) -> Result<SimulationStats> {
    enc.check_input(u, w)?;
    check_side(dec.shape.side, u.len(), w)?;
    let (es, ds) = (enc.shape, dec.shape);
    if es.k != ds.k || es.m != ds.m {
        return Err(Error::invalid(format!(
            "encoder chunks (k={}, m={}) do not match decoder chunks (k={}, m={})",
            es.k, es.m, ds.k, ds.m
        )));
    }
    if es.source != ds.source {
        return Err(Error::AlphabetMismatch { expected: es.source, found: ds.source });
    }
    if triple.main().inputs() != es.channel {
        return Err(Error::AlphabetMismatch { expected: es.channel, found: triple.main().inputs() });
    }
    if triple.main().outputs() != ds.channel {
        return Err(Error::AlphabetMismatch { expected: ds.channel, found: triple.main().outputs() });
    }
    if config.trials == 0 {
        return Err(Error::invalid("at least one trial is needed"));
    }
    let (s0e, s0d) = config.initial_states.unwrap_or((enc.initial_state, dec.initial_state));
    if s0e >= es.states || s0d >= ds.states {
        return Err(Error::invalid(format!("initial states ({s0e}, {s0d}) out of range")));
    }
    let chunks = u.len() / es.k;
    if let Some(l) = config.joint_blocks {
        if l == 0 || chunks % l != 0 {
            return Err(Error::NotDivisible { what: "chunk count", n: chunks, by: l });
        }
    }

    let us = u.symbols();
    let ws = w.map(|w| w.symbols());
    let z_radix = triple.wiretap().outputs();
    let tally = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(config.seed, t as u64);
            let (x, se) = enc.run(us, ws, s0e, &mut rng);
            let y = sample_with(triple.main(), &x, &mut rng).expect("encoder output is in range");
            let z = sample_with(triple.wiretap(), &y, &mut rng).expect("channel output is in range");
            let (v, sd) = dec.run(&y, ws, s0d);
            let chunk_errors = (0..chunks)
                .map(|i| (i * es.k..(i + 1) * es.k).filter(|&j| v[j] != us[j]).count() as u64)
                .collect();
            let mut joint = BTreeMap::new();
            if let Some(l) = config.joint_blocks {
                let (kk, mm) = (es.k * l, es.m * l);
                for b in 0..chunks / l {
                    let key = JointKey {
                        u: block_index(&us[b * kk..(b + 1) * kk], es.source),
                        x: block_index(&x[b * mm..(b + 1) * mm], es.channel),
                        y: block_index(&y[b * mm..(b + 1) * mm], ds.channel),
                        z: block_index(&z[b * mm..(b + 1) * mm], z_radix),
                        s_e: se[b * l],
                        s_d: sd[b * l],
                    };
                    *joint.entry(key).or_default() += 1;
                }
            }
            TrialTally { chunk_errors, joint }
        })
        .reduce(TrialTally::default, TrialTally::merge);

    let trials = config.trials as f64;
    let symbol_errors: u64 = tally.chunk_errors.iter().sum();
    let worst = tally.chunk_errors.iter().copied().max().unwrap_or(0);
    let empirical_joint = config.joint_blocks.map(|l| {
        let total = (config.trials * (chunks / l)) as f64;
        EmpiricalJoint {
            chunks: l,
            entries: tally
                .joint
                .into_iter()
                .map(|(key, c)| JointEntry { key, probability: c as f64 / total })
                .collect(),
        }
    });
    let leakage_bits = if config.exact_leakage {
        Some(max_mi_security(enc, triple, u.len(), 1e-9)?.total_bits)
    } else {
        None
    };
    Ok(SimulationStats {
        bit_error_rate: symbol_errors as f64 / (trials * u.len() as f64),
        worst_chunk_error_rate: worst as f64 / (trials * es.k as f64),
        trials: config.trials,
        symbol_errors,
        initial_states: (s0e, s0d),
        empirical_joint,
        leakage_bits,
    })
}

/// Results for every pair of initial states and the index of the worst one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialStateSweep {
    pub runs: Vec<SimulationStats>,
    pub worst: usize,
}

impl InitialStateSweep {
    pub fn worst(&self) -> &SimulationStats {
        &self.runs[self.worst]
    }
}

/// Repeats the simulation from every `(s0_e, s0_d)` pair with the same seed.
pub fn sweep_initial_states(
    enc: &EncoderSpec,
    dec: &DecoderSpec,
    triple: &ChannelTriple,
    u: &SymbolSequence,
    w: Option<&SymbolSequence>,
    config: &SimulationConfig,
) -> Result<InitialStateSweep> {
    let mut runs = Vec::with_capacity(enc.states() * dec.states());
    for se in 0..enc.states() {
        for sd in 0..dec.states() {
            let c = SimulationConfig {
                initial_states: Some((se, sd)),
                exact_leakage: false,
                ..config.clone()
            };
            runs.push(simulate_system(enc, dec, triple, u, w, &c)?);
        }
    }
    let worst = (0..runs.len())
        .max_by(|&a, &b| {
            let key = |r: &SimulationStats| (r.bit_error_rate, r.worst_chunk_error_rate);
            key(&runs[a]).partial_cmp(&key(&runs[b])).unwrap().then(b.cmp(&a))
        })
        .unwrap();
    Ok(InitialStateSweep { runs, worst })
}
