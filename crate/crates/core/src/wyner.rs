//! Desk-scale binning wiretap codes.
//!
//! A random codebook of `2^(secret_bits + random_bits)` words is split into
//! `2^secret_bits` bins. The secret picks the bin and local random bits pick
//! the word inside it. Codeword `(bin, inner)` sits at index
//! `bin << random_bits | inner`.

use serde::Serialize;

use crate::bounds::randomness_bound;
use crate::channels::{draw, ChannelTriple, TransitionMatrix};
use crate::error::{check_budget, Error, Result};
use crate::info::{entropy, mutual_information, secrecy_capacity, ProbVector};
use crate::parsing::SymbolSequence;
use crate::rng::substream;
use crate::ENUMERATION_BUDGET;

/// Largest supported `secret_bits + random_bits`.
pub const MAX_CODE_BITS: usize = 24;

/// Log-likelihoods this close are treated as ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WynerCode {
    pub n: usize,
    pub secret_bits: usize,
    pub random_bits: usize,
    pub alphabet: usize,
    pub input_dist: ProbVector,
    #[serde(skip)]
    codewords: Vec<u32>,
}

impl WynerCode {
    pub fn size(&self) -> usize {
        1 << (self.secret_bits + self.random_bits)
    }

    pub fn bins(&self) -> usize {
        1 << self.secret_bits
    }

    pub fn codeword(&self, index: usize) -> &[u32] {
        &self.codewords[index * self.n..(index + 1) * self.n]
    }

    pub fn index(&self, secret: u64, inner: u64) -> usize {
        ((secret << self.random_bits) | inner) as usize
    }

    pub fn split(&self, index: usize) -> (u64, u64) {
        ((index >> self.random_bits) as u64, (index & ((1 << self.random_bits) - 1)) as u64)
    }

    /// Builds a code from explicit codewords in index order.
    pub fn from_codewords(
        n: usize,
        secret_bits: usize,
        random_bits: usize,
        alphabet: usize,
        codewords: Vec<u32>,
    ) -> Result<Self> {
        if secret_bits + random_bits > MAX_CODE_BITS {
            return Err(Error::invalid(format!("at most {MAX_CODE_BITS} code bits are supported")));
        }
        let size = 1usize << (secret_bits + random_bits);
        if codewords.len() != size * n {
            return Err(Error::invalid(format!("expected {size} codewords of length {n}")));
        }
        if let Some(&bad) = codewords.iter().find(|&&c| c as usize >= alphabet) {
            return Err(Error::invalid(format!("codeword symbol {bad} outside alphabet of size {alphabet}")));
        }
        Ok(WynerCode {
            n,
            secret_bits,
            random_bits,
            alphabet,
            input_dist: ProbVector::uniform(alphabet),
            codewords,
        })
    }
}

/// Draws every codeword i.i.d. from `p`.
pub fn build_code(n: usize, secret_bits: usize, random_bits: usize, p: &ProbVector, seed: u64) -> Result<WynerCode> {
    if n == 0 {
        return Err(Error::invalid("block length must be positive"));
    }
    let alphabet = p.len();
    let bits = (secret_bits + random_bits) as f64;
    if bits > n as f64 * (alphabet as f64).log2() + 1e-12 {
        return Err(Error::invalid(format!(
            "rate {:.4} exceeds log2 of the alphabet size {alphabet}",
            bits / n as f64
        )));
    }
    if secret_bits + random_bits > MAX_CODE_BITS {
        return Err(Error::invalid(format!("at most {MAX_CODE_BITS} code bits are supported")));
    }
    let size = 1usize << (secret_bits + random_bits);
    check_budget(size, 1, n as u128, ENUMERATION_BUDGET << 4)?;
    let mut rng = substream(seed, 0);
    let codewords = (0..size * n).map(|_| draw(p.as_slice(), &mut rng) as u32).collect();
    Ok(WynerCode { n, secret_bits, random_bits, alphabet, input_dist: p.clone(), codewords })
}

/// The codeword for `(secret, inner)`.
pub fn wyner_encode(code: &WynerCode, secret: u64, inner: u64) -> Result<&[u32]> {
    if secret >= code.bins() as u64 || inner >= 1 << code.random_bits {
        return Err(Error::invalid(format!(
            "index ({secret}, {inner}) outside {} bins of {} words",
            code.bins(),
            1u64 << code.random_bits
        )));
    }
    Ok(code.codeword(code.index(secret, inner)))
}

fn check_channel(code: &WynerCode, ch: &TransitionMatrix) -> Result<()> {
    if ch.inputs() != code.alphabet {
        return Err(Error::AlphabetMismatch { expected: code.alphabet, found: ch.inputs() });
    }
    Ok(())
}

fn log_table(ch: &TransitionMatrix) -> Vec<f64> {
    ch.as_flat().iter().map(|&p| p.log2()).collect()
}

/// Returns the index of the most likely codeword for `y`; ties go to the
/// smallest index. Partial sums are nonincreasing, so a word is abandoned
/// once it falls below the incumbent.
fn ml_index(code: &WynerCode, y: &[u32], logs: &[f64], outputs: usize) -> usize {
    let mut best = (f64::NEG_INFINITY, 0usize);
    for c in 0..code.size() {
        let word = code.codeword(c);
        let mut ll = 0.0;
        for (&x, &yi) in word.iter().zip(y) {
            ll += logs[x as usize * outputs + yi as usize];
            if ll < best.0 - TIE_TOLERANCE || ll == f64::NEG_INFINITY {
                break;
            }
        }
        if ll > best.0 + TIE_TOLERANCE || (best.0 == f64::NEG_INFINITY && ll > f64::NEG_INFINITY) {
            best = (ll, c);
        }
    }
    best.1
}

/// Maximum-likelihood decision `(secret, inner)` for a received block.
pub fn ml_decode(code: &WynerCode, y: &SymbolSequence, ch: &TransitionMatrix) -> Result<(u64, u64)> {
    check_channel(code, ch)?;
    if y.len() != code.n {
        return Err(Error::LengthMismatch { left: code.n, right: y.len() });
    }
    if y.alphabet().size() != ch.outputs() {
        return Err(Error::AlphabetMismatch { expected: ch.outputs(), found: y.alphabet().size() });
    }
    Ok(code.split(ml_index(code, y.symbols(), &log_table(ch), ch.outputs())))
}

/// Calls `f(y index, P(y|x))` for every `y` with positive probability.
fn for_each_output(ch: &TransitionMatrix, x: &[u32], f: &mut impl FnMut(usize, f64)) {
    fn go(ch: &TransitionMatrix, x: &[u32], pos: usize, idx: usize, p: f64, f: &mut impl FnMut(usize, f64)) {
        if pos == x.len() {
            f(idx, p);
            return;
        }
        for (y, &q) in ch.row(x[pos] as usize).iter().enumerate() {
            if q > 0.0 {
                go(ch, x, pos + 1, idx * ch.outputs() + y, p * q, f);
            }
        }
    }
    go(ch, x, 0, 0, 1.0, f)
}

/// Error probabilities of ML decoding under uniform `(secret, inner)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecodingError {
    /// Decoded secret differs from the sent one.
    pub secret: f64,
    /// Decoded codeword index differs from the sent one.
    pub codeword: f64,
}

/// Exact ML error probability by summing the channel law over all outputs.
pub fn exact_error_probability(code: &WynerCode, ch: &TransitionMatrix) -> Result<DecodingError> {
    check_channel(code, ch)?;
    let outputs = check_budget(ch.outputs(), code.n, 1, ENUMERATION_BUDGET)? as usize;
    let logs = log_table(ch);
    // best (log-likelihood, index) per output block, scanning words in index order
    let mut best = vec![(f64::NEG_INFINITY, usize::MAX); outputs];
    let mut yb = vec![0u32; code.n];
    for c in 0..code.size() {
        let word = code.codeword(c);
        for_each_output(ch, word, &mut |y, _| {
            crate::parsing::block_from_index(y as u64, ch.outputs(), &mut yb);
            let ll: f64 = word.iter().zip(&yb).map(|(&x, &yi)| logs[x as usize * ch.outputs() + yi as usize]).sum();
            if best[y].1 == usize::MAX || ll > best[y].0 + TIE_TOLERANCE {
                best[y] = (ll, c);
            }
        });
    }
    let mut right_word = 0.0;
    let mut right_secret = 0.0;
    for c in 0..code.size() {
        let bin = code.split(c).0;
        for_each_output(ch, code.codeword(c), &mut |y, p| {
            let winner = best[y].1;
            if winner == c {
                right_word += p;
            }
            if code.split(winner).0 == bin {
                right_secret += p;
            }
        });
    }
    let m = code.size() as f64;
    Ok(DecodingError {
        secret: (1.0 - right_secret / m).max(0.0),
        codeword: (1.0 - right_word / m).max(0.0),
    })
}

/// Exact `I(S;Z^N)` in bits for uniform secret and inner bits.
pub fn code_leakage(code: &WynerCode, cascade: &TransitionMatrix) -> Result<f64> {
    check_channel(code, cascade)?;
    let outputs = check_budget(cascade.outputs(), code.n, 1, ENUMERATION_BUDGET)? as usize;
    let inner = 1usize << code.random_bits;
    let mut marginal = vec![0.0; outputs];
    let mut conditional = 0.0;
    let mut per_bin = vec![0.0; outputs];
    for bin in 0..code.bins() {
        per_bin.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..inner {
            for_each_output(cascade, code.codeword(bin * inner + i), &mut |z, p| per_bin[z] += p);
        }
        per_bin.iter_mut().for_each(|v| *v /= inner as f64);
        conditional += entropy(&per_bin);
        for (m, &v) in marginal.iter_mut().zip(&per_bin) {
            *m += v;
        }
    }
    let bins = code.bins() as f64;
    marginal.iter_mut().for_each(|v| *v /= bins);
    Ok((entropy(&marginal) - conditional / bins).clamp(0.0, code.secret_bits as f64))
}

/// Random-bit consumption of a code against the lower bound
/// `m I(X*;Z*) - k eps_s - log(q_e) / ell`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RandomnessAudit {
    pub random_bits: usize,
    pub i_xz_star: f64,
    pub bound: f64,
    /// `random_bits - bound`.
    pub margin: f64,
    pub passes: bool,
    pub leakage_bits: f64,
    /// Allowed leakage `k eps_s`.
    pub leakage_line: f64,
}

/// Parameters of the audit; `k` is taken as the secret bits and `m` as the
/// block length of the code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditParams {
    pub eps_s: f64,
    pub q_e: usize,
    pub ell: usize,
    pub tol: f64,
}

impl Default for AuditParams {
    fn default() -> Self {
        AuditParams { eps_s: 0.1, q_e: 1, ell: 1, tol: 1e-9 }
    }
}

/// `I(X*;Z*)` at the secrecy-capacity-achieving input of `triple`.
pub fn wiretapper_information(triple: &ChannelTriple, tol: f64) -> Result<f64> {
    let cs = secrecy_capacity(triple, tol)?;
    mutual_information(&cs.argmax, triple.cascade())
}

pub fn randomness_audit(code: &WynerCode, triple: &ChannelTriple, params: &AuditParams) -> Result<RandomnessAudit> {
    let i_xz_star = wiretapper_information(triple, params.tol)?;
    if params.ell == 0 || params.q_e == 0 {
        return Err(Error::invalid("ell and q_e must be positive"));
    }
    let k_eps = code.secret_bits as f64 * params.eps_s;
    let bound = randomness_bound(code.n, code.secret_bits, params.eps_s, params.q_e, params.ell, i_xz_star);
    let margin = code.random_bits as f64 - bound;
    Ok(RandomnessAudit {
        random_bits: code.random_bits,
        i_xz_star,
        bound,
        margin,
        passes: margin >= 0.0,
        leakage_bits: code_leakage(code, triple.cascade())?,
        leakage_line: k_eps,
    })
}

/// Secret and random bit counts for block length `n` at a fraction of the
/// secrecy capacity, with `random_bits = ceil(n I(X*;Z*))`.
pub fn rate_plan(n: usize, c_s: f64, i_xz_star: f64, secret_fraction: f64) -> (usize, usize) {
    let secret = (secret_fraction * c_s * n as f64 + 1e-9).floor() as usize;
    let random = (n as f64 * i_xz_star - 1e-9).ceil().max(0.0) as usize;
    (secret, random)
}

/// Monte Carlo decoding error rate of the secret over `trials` uses.
pub fn simulate_decoding(code: &WynerCode, ch: &TransitionMatrix, trials: usize, seed: u64) -> Result<f64> {
    use rayon::prelude::*;
    check_channel(code, ch)?;
    let logs = log_table(ch);
    let errors: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, t as u64);
            let c = rand::Rng::gen_range(&mut rng, 0..code.size());
            let y = crate::channels::sample_with(ch, code.codeword(c), &mut rng).expect("codeword in range");
            let d = ml_index(code, &y, &logs, ch.outputs());
            usize::from(code.split(d).0 != code.split(c).0)
        })
        .sum();
    Ok(errors as f64 / trials as f64)
}
