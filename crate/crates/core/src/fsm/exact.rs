//! Exact source-to-wiretapper laws of small systems.
//!
//! The induced channel `P(z^N|u^n)` is a product of chunk kernels
//! `G(z~|u~,w~,s) = sum_x P(x~|u~,w~,s) Q_MW(z~|x~)` along the deterministic
//! state path, so it is built depth-first over chunks with shared prefixes.

use serde::Serialize;

use super::EncoderSpec;
use crate::channels::{ChannelTriple, TransitionMatrix};
use crate::error::{check_budget, Error, Result};
use crate::info::{channel_capacity, entropy, ProbVector};
use crate::parsing::{block_from_index, block_index};
use crate::ENUMERATION_BUDGET;

/// Chunk kernels for every encoder row, `|Z|^m` columns each.
struct Kernel {
    cols: usize,
    data: Vec<f64>,
}

impl Kernel {
    fn new(enc: &EncoderSpec, cascade: &TransitionMatrix) -> Result<Kernel> {
        let shape = enc.shape();
        if cascade.inputs() != shape.channel {
            return Err(Error::AlphabetMismatch { expected: shape.channel, found: cascade.inputs() });
        }
        let z = cascade.outputs();
        let cols = check_budget(z, shape.m, 1, ENUMERATION_BUDGET)? as usize;
        let rows = enc.rows().count();
        check_budget(cols, 1, rows as u128, ENUMERATION_BUDGET)?;
        let mut data = vec![0.0; rows * cols];
        let mut xb = vec![0u32; shape.m];
        for (r, row) in enc.rows().enumerate() {
            let out = &mut data[r * cols..(r + 1) * cols];
            for &(x, p) in row {
                block_from_index(x, shape.channel, &mut xb);
                let q = memoryless_row(cascade, &xb);
                for (o, v) in out.iter_mut().zip(q) {
                    *o += p * v;
                }
            }
        }
        Ok(Kernel { cols, data })
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// `prod_j Q(z_j|x_j)` over all `z` blocks, first symbol most significant.
fn memoryless_row(ch: &TransitionMatrix, x: &[u32]) -> Vec<f64> {
    x.iter().fold(vec![1.0], |acc, &xi| kron(&acc, ch.row(xi as usize)))
}

fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &p in a {
        out.extend(b.iter().map(|&q| p * q));
    }
    out
}

/// Flat `alpha^n x |Z|^N` matrix for a fixed side sequence (chunk indices)
/// and initial state.
fn induced_rows(enc: &EncoderSpec, kernel: &Kernel, chunks: usize, w: &[usize], s0: usize) -> Vec<f64> {
    let source_blocks = enc.source_blocks();
    let cols = kernel.cols.pow(chunks as u32);
    let rows = source_blocks.pow(chunks as u32);
    let mut out = vec![0.0; rows * cols];
    descend(enc, kernel, w, 0, s0, 0, &[1.0], &mut out, cols);
    out
}

#[allow(clippy::too_many_arguments)]
fn descend(
    enc: &EncoderSpec,
    kernel: &Kernel,
    w: &[usize],
    level: usize,
    state: usize,
    prefix: usize,
    acc: &[f64],
    out: &mut [f64],
    cols: usize,
) {
    if level == w.len() {
        out[prefix * cols..(prefix + 1) * cols].copy_from_slice(acc);
        return;
    }
    for u in 0..enc.source_blocks() {
        let r = enc.row_index(state, u, w[level]);
        let next = kron(acc, kernel.row(r));
        descend(enc, kernel, w, level + 1, enc.next[r] as usize, prefix * enc.source_blocks() + u, &next, out, cols);
    }
}

fn chunk_count(enc: &EncoderSpec, n: usize) -> Result<usize> {
    let k = enc.shape().k;
    if n == 0 || n % k != 0 {
        return Err(Error::NotDivisible { what: "block length", n, by: k });
    }
    Ok(n / k)
}

/// Entries of the induced channel: `alpha^n * |Z|^N`.
fn check_size(enc: &EncoderSpec, cascade: &TransitionMatrix, n: usize, extra: u128) -> Result<()> {
    let shape = enc.shape();
    let cols = check_budget(cascade.outputs(), n / shape.k * shape.m, extra, ENUMERATION_BUDGET)?;
    check_budget(shape.source, n, cols, ENUMERATION_BUDGET)?;
    Ok(())
}

/// Exact `P(z^N|u^n)` from the encoder's initial state.
pub fn induced_security_channel(enc: &EncoderSpec, triple: &ChannelTriple, n: usize) -> Result<TransitionMatrix> {
    induced_security_channel_from(enc, triple, n, enc.initial_state(), None)
}

/// Exact `P(z^N|u^n)` from state `s0`, with a fixed side sequence for
/// encoders that use one.
pub fn induced_security_channel_from(
    enc: &EncoderSpec,
    triple: &ChannelTriple,
    n: usize,
    s0: usize,
    w: Option<&[u32]>,
) -> Result<TransitionMatrix> {
    let chunks = chunk_count(enc, n)?;
    if s0 >= enc.states() {
        return Err(Error::invalid(format!("initial state {s0} out of range")));
    }
    let side = side_chunks(enc, n, w)?;
    check_size(enc, triple.cascade(), n, 1)?;
    let kernel = Kernel::new(enc, triple.cascade())?;
    let data = induced_rows(enc, &kernel, chunks, &side, s0);
    let rows = enc.source_blocks().pow(chunks as u32);
    TransitionMatrix::from_flat(rows, data.len() / rows, data)
}

fn side_chunks(enc: &EncoderSpec, n: usize, w: Option<&[u32]>) -> Result<Vec<usize>> {
    let shape = enc.shape();
    let chunks = n / shape.k;
    match w {
        _ if shape.side == 1 => Ok(vec![0; chunks]),
        None => Err(Error::invalid("this encoder needs a side-information sequence")),
        Some(w) if w.len() != n => Err(Error::LengthMismatch { left: n, right: w.len() }),
        Some(w) => {
            if let Some(&bad) = w.iter().find(|&&c| c as usize >= shape.side) {
                return Err(Error::invalid(format!("side symbol {bad} out of range")));
            }
            Ok(w.chunks(shape.k).map(|c| block_index(c, shape.side) as usize).collect())
        }
    }
}

/// Worst-case leakage `max_mu I(U^n;Z^N)`, the capacity of the induced channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecurityLeakage {
    pub n: usize,
    pub total_bits: f64,
    pub per_symbol: f64,
    pub certified_gap: f64,
    /// Maximizing source law over `U^n`.
    pub argmax: ProbVector,
}

pub fn max_mi_security(enc: &EncoderSpec, triple: &ChannelTriple, n: usize, tol: f64) -> Result<SecurityLeakage> {
    let ch = induced_security_channel(enc, triple, n)?;
    let cap = channel_capacity(&ch, tol)?;
    Ok(SecurityLeakage {
        n,
        total_bits: cap.value,
        per_symbol: cap.value / n as f64,
        certified_gap: cap.certified_gap,
        argmax: cap.argmax,
    })
}

/// `I(A;B|C)` of a table laid out as `[a][c][b]`.
fn conditional_mi(joint: &[f64], a: usize, c: usize, b: usize) -> f64 {
    let mut ac = vec![0.0; a * c];
    let mut cb = vec![0.0; c * b];
    let mut cm = vec![0.0; c];
    for ai in 0..a {
        for ci in 0..c {
            let base = (ai * c + ci) * b;
            for bi in 0..b {
                let p = joint[base + bi];
                ac[ai * c + ci] += p;
                cb[ci * b + bi] += p;
                cm[ci] += p;
            }
        }
    }
    (entropy(&ac) + entropy(&cb) - entropy(joint) - entropy(&cm)).max(0.0)
}

/// Returns `(I(U;Z|W), I(U;Z|W'))` for `mu` laid out as `[u][w][s]`, with
/// `s` ranging over `initial_states`.
fn leakage_pair(
    enc: &EncoderSpec,
    triple: &ChannelTriple,
    leak: &TransitionMatrix,
    n: usize,
    mu: &[f64],
    initial_states: &[usize],
) -> Result<(f64, f64)> {
    let chunks = chunk_count(enc, n)?;
    let shape = *enc.shape();
    let omega = leak.inputs();
    if shape.side > 1 && shape.side != omega {
        return Err(Error::AlphabetMismatch { expected: shape.side, found: omega });
    }
    let wdot = leak.outputs();
    let widest = omega.max(wdot);
    check_size(enc, triple.cascade(), n, check_budget(widest, n, 1, ENUMERATION_BUDGET)?)?;
    let u_count = shape.source.pow(n as u32);
    let w_count = omega.pow(n as u32);
    let wd_count = wdot.pow(n as u32);
    let states = initial_states.len();
    if mu.len() != u_count * w_count * states {
        return Err(Error::invalid(format!(
            "joint law has {} entries, expected {}",
            mu.len(),
            u_count * w_count * states
        )));
    }
    let leak_n = leak.power(n, ENUMERATION_BUDGET)?;
    let kernel = Kernel::new(enc, triple.cascade())?;
    let z_count = kernel.cols.pow(chunks as u32);

    let mut given_w = vec![0.0; u_count * w_count * z_count];
    let mut given_wdot = vec![0.0; u_count * wd_count * z_count];
    let mut wb = vec![0u32; n];
    for wi in 0..w_count {
        block_from_index(wi as u64, omega, &mut wb);
        let side = side_chunks(enc, n, Some(&wb))?;
        for (si, &s0) in initial_states.iter().enumerate() {
            let rows = induced_rows(enc, &kernel, chunks, &side, s0);
            for u in 0..u_count {
                let m = mu[(u * w_count + wi) * states + si];
                if m == 0.0 {
                    continue;
                }
                let pz = &rows[u * z_count..(u + 1) * z_count];
                let dst = &mut given_w[(u * w_count + wi) * z_count..][..z_count];
                dst.iter_mut().zip(pz).for_each(|(d, &p)| *d += m * p);
                for wd in 0..wd_count {
                    let l = leak_n.get(wi, wd);
                    if l == 0.0 {
                        continue;
                    }
                    let dst = &mut given_wdot[(u * wd_count + wd) * z_count..][..z_count];
                    dst.iter_mut().zip(pz).for_each(|(d, &p)| *d += m * l * p);
                }
            }
        }
    }
    Ok((
        conditional_mi(&given_w, u_count, w_count, z_count),
        conditional_mi(&given_wdot, u_count, wd_count, z_count),
    ))
}

fn check_law(mu: &ProbVector) -> Result<()> {
    if mu.as_slice().iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("joint law has non-finite entries"));
    }
    Ok(())
}

/// Exact `I(U^n;Z^N|W'^n)` where `W'^n` is `W^n` through the memoryless
/// `leak` channel and `mu` is a law over `(u^n, w^n)` indexed `u * omega^n + w`.
pub fn conditional_leakage(
    enc: &EncoderSpec,
    triple: &ChannelTriple,
    leak: &TransitionMatrix,
    n: usize,
    mu: &ProbVector,
) -> Result<f64> {
    check_law(mu)?;
    Ok(leakage_pair(enc, triple, leak, n, mu.as_slice(), &[enc.initial_state()])?.1)
}

/// Both sides of `I(U;Z|W) <= I(U;Z|W') + log q_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichReport {
    pub given_w: f64,
    pub given_degraded: f64,
    pub log_qe: f64,
    /// `given_degraded + log_qe - given_w`.
    pub slack: f64,
}

impl SandwichReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.slack >= -tol
    }
}

/// Evaluates the side-information switch for an encoder that does not see
/// `W`, with the initial encoder state treated as random: `mu` is a law over
/// `(u^n, w^n, s0)` indexed `(u * omega^n + w) * q_e + s0`.
pub fn leakage_sandwich(
    enc: &EncoderSpec,
    triple: &ChannelTriple,
    leak: &TransitionMatrix,
    n: usize,
    mu: &ProbVector,
) -> Result<SandwichReport> {
    if enc.has_side_information() {
        return Err(Error::invalid("the switch needs an encoder that ignores the side information"));
    }
    check_law(mu)?;
    let states: Vec<usize> = (0..enc.states()).collect();
    let (given_w, given_degraded) = leakage_pair(enc, triple, leak, n, mu.as_slice(), &states)?;
    let log_qe = (enc.states() as f64).log2();
    Ok(SandwichReport {
        given_w,
        given_degraded,
        log_qe,
        slack: given_degraded + log_qe - given_w,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{EncoderShape, EncoderSpec};
    use super::*;
    use crate::info::mutual_information;
    use crate::rng::substream;
    use rand::Rng;

    fn triple(p1: f64, p2: f64) -> ChannelTriple {
        ChannelTriple::new(TransitionMatrix::bsc(p1), TransitionMatrix::bsc(p2)).unwrap()
    }

    /// Two-state encoder with a noisy bit in state 1.
    fn noisy_two_state() -> EncoderSpec {
        EncoderSpec::from_fn(EncoderShape::plain(1, 2, 2, 2, 2), |s, u, _| {
            let dist = if s == 0 {
                vec![(vec![u[0], u[0]], 1.0)]
            } else {
                vec![(vec![u[0], 0], 0.7), (vec![1 - u[0], 1], 0.3)]
            };
            (dist, s ^ u[0] as usize)
        })
        .unwrap()
    }

    /// Sums over every encoder output sequence and every channel output
    /// symbol by symbol, with no kernels and no prefix sharing.
    fn naive_induced(enc: &EncoderSpec, cascade: &TransitionMatrix, n: usize, s0: usize) -> Vec<f64> {
        let shape = *enc.shape();
        let chunks = n / shape.k;
        let z_len = chunks * shape.m;
        let zc = cascade.outputs().pow(z_len as u32);
        let mut out = vec![0.0; shape.source.pow(n as u32) * zc];
        let mut ub = vec![0u32; n];
        let mut zb = vec![0u32; z_len];
        for u in 0..shape.source.pow(n as u32) {
            block_from_index(u as u64, shape.source, &mut ub);
            // enumerate x sequences with their probabilities
            let mut paths: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), 1.0)];
            let mut state = s0;
            for i in 0..chunks {
                let ui = block_index(&ub[i * shape.k..(i + 1) * shape.k], shape.source) as usize;
                let mut grown = Vec::new();
                for (x, p) in &paths {
                    for &(xb, q) in enc.emission(state, ui, 0) {
                        let mut block = vec![0u32; shape.m];
                        block_from_index(xb, shape.channel, &mut block);
                        let mut x2 = x.clone();
                        x2.extend(block);
                        grown.push((x2, p * q));
                    }
                }
                paths = grown;
                state = enc.next_state(state, ui, 0);
            }
            for z in 0..zc {
                block_from_index(z as u64, cascade.outputs(), &mut zb);
                out[u * zc + z] = paths
                    .iter()
                    .map(|(x, p)| p * x.iter().zip(&zb).map(|(&a, &b)| cascade.get(a as usize, b as usize)).product::<f64>())
                    .sum();
            }
        }
        out
    }

    #[test]
    fn deterministic_noiseless_rows_are_point_masses() {
        let t = ChannelTriple::new(TransitionMatrix::identity(2), TransitionMatrix::identity(2)).unwrap();
        let enc = EncoderSpec::identity(2, 1).unwrap();
        let ch = induced_security_channel(&enc, &t, 3).unwrap();
        for (u, row) in ch.rows().enumerate() {
            assert_eq!(row[u], 1.0);
        }
        let leak = max_mi_security(&enc, &t, 3, 1e-10).unwrap();
        assert!((leak.total_bits - 3.0).abs() < 1e-9);
        assert!((leak.per_symbol - 1.0).abs() < 1e-9);
    }

    #[test]
    fn useless_wiretap_gives_identical_rows() {
        let ch = induced_security_channel(&noisy_two_state(), &triple(0.1, 0.5), 3).unwrap();
        assert!(ch.is_output_independent());
        let leak = max_mi_security(&noisy_two_state(), &triple(0.1, 0.5), 3, 1e-10).unwrap();
        assert!(leak.total_bits.abs() < 1e-12);
    }

    #[test]
    fn matches_naive_enumeration() {
        let t = triple(0.1, 0.15);
        let enc = noisy_two_state();
        for s0 in 0..2 {
            let fast = induced_security_channel_from(&enc, &t, 3, s0, None).unwrap();
            let slow = naive_induced(&enc, t.cascade(), 3, s0);
            for (a, b) in fast.as_flat().iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn budget_guard() {
        let enc = EncoderSpec::identity(2, 1).unwrap();
        let r = induced_security_channel(&enc, &triple(0.1, 0.1), 13);
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn monte_carlo_agrees_with_exact_rows() {
        let enc = noisy_two_state();
        let t = triple(0.05, 0.1);
        let ch = induced_security_channel(&enc, &t, 2).unwrap();
        let u = [1u32, 0];
        let trials = 20_000;
        let mut counts = vec![0usize; ch.outputs()];
        for i in 0..trials {
            let mut rng = substream(7, i);
            let (x, _) = enc.run(&u, None, 0, &mut rng);
            let z = crate::channels::sample_with(t.cascade(), &x, &mut rng).unwrap();
            counts[block_index(&z, 2) as usize] += 1;
        }
        let row = ch.row(block_index(&u, 2) as usize);
        for (c, &p) in counts.iter().zip(row) {
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((*c as f64 / trials as f64 - p).abs() <= 4.0 * sigma + 1e-12);
        }
    }

    fn random_law(size: usize, seed: u64) -> ProbVector {
        let mut rng = substream(seed, 0);
        let w: Vec<f64> = (0..size).map(|_| rng.gen::<f64>()).collect();
        ProbVector::from_weights(&w).unwrap()
    }

    #[test]
    fn independent_degraded_side_information_is_unconditional() {
        let enc = noisy_two_state();
        let t = triple(0.05, 0.1);
        let n = 2;
        let mu = random_law(16, 3);
        let flat = TransitionMatrix::from_rows(&[vec![0.4, 0.6], vec![0.4, 0.6]]).unwrap();
        let cond = conditional_leakage(&enc, &t, &flat, n, &mu).unwrap();
        // marginal of U
        let pu: Vec<f64> = (0..4).map(|u| (0..4).map(|w| mu.as_slice()[u * 4 + w]).sum()).collect();
        let ch = induced_security_channel(&enc, &t, n).unwrap();
        let plain = mutual_information(&ProbVector::new(pu).unwrap(), &ch).unwrap();
        assert!((cond - plain).abs() < 1e-12);

        let dead = ChannelTriple::new(TransitionMatrix::bsc(0.2), TransitionMatrix::bsc(0.5)).unwrap();
        assert!(conditional_leakage(&enc, &dead, &TransitionMatrix::identity(2), n, &mu).unwrap() < 1e-12);
    }

    #[test]
    fn identity_leak_matches_chain_rule() {
        // I(U;Z|W) = I(U,W;Z) - I(W;Z)
        let enc = noisy_two_state();
        let t = triple(0.05, 0.1);
        let n = 2;
        let mu = random_law(16, 11);
        let cond = conditional_leakage(&enc, &t, &TransitionMatrix::identity(2), n, &mu).unwrap();
        let ch = induced_security_channel(&enc, &t, n).unwrap();
        let zc = ch.outputs();
        let mut uw_z = vec![0.0; 16 * zc];
        let mut w_z = vec![0.0; 4 * zc];
        for u in 0..4 {
            for w in 0..4 {
                for z in 0..zc {
                    let p = mu.as_slice()[u * 4 + w] * ch.get(u, z);
                    uw_z[(u * 4 + w) * zc + z] += p;
                    w_z[w * zc + z] += p;
                }
            }
        }
        let oracle = crate::info::joint_mutual_information(&uw_z, 16, zc)
            - crate::info::joint_mutual_information(&w_z, 4, zc);
        assert!((cond - oracle).abs() < 1e-12);
    }

    #[test]
    fn sandwich_on_random_systems() {
        let enc = noisy_two_state();
        let t = triple(0.05, 0.1);
        let leak = TransitionMatrix::bsc(0.2);
        for seed in 0..5 {
            let mu = random_law(4 * 4 * 2, seed);
            let r = leakage_sandwich(&enc, &t, &leak, 2, &mu).unwrap();
            assert!(r.holds(1e-9), "{r:?}");
            assert_eq!(r.log_qe, 1.0);
        }
    }
}
