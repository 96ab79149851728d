//! Separate source and channel coding: an LZ78 bitstream carried by a
//! binning wiretap code.
//!
//! The LZ78 encoder writes phrase `j` (1-based) as a pointer to its prefix
//! phrase in `ceil(log2 j)` bits, followed by its last symbol in
//! `ceil(log2 alpha)` bits. A final phrase that repeats an earlier one is
//! written as a pointer only. The decoder needs `n` to recognise it.
//!
//! Two framings signal how much was sent:
//!
//! * fixed-to-variable: all of `u` is compressed and a length header of
//!   about `log(n log alpha)` bits precedes the payload; the number of
//!   channel blocks depends on `u`.
//! * variable-to-fixed: the channel budget is fixed in advance at
//!   `lambda = rho_LZ / (C_s (1 - delta))` channel symbols per source
//!   symbol, and the longest prefix of `u` that fits is sent, with its length
//!   in the header.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use crate::channels::{sample_with, ChannelTriple};
use crate::error::{Error, Result};
use crate::parsing::{lz_complexity, Alphabet, SymbolSequence};
use crate::rng::substream;
use crate::wyner::{code_leakage, ml_decode, wyner_encode, WynerCode};

fn bit_width(count: usize) -> usize {
    if count <= 1 {
        0
    } else {
        (usize::BITS - (count - 1).leading_zeros()) as usize
    }
}

fn push_bits(out: &mut Vec<bool>, value: u64, width: usize) {
    out.extend((0..width).rev().map(|i| (value >> i) & 1 == 1));
}

struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl BitReader<'_> {
    fn read(&mut self, width: usize) -> Result<u64> {
        if self.pos + width > self.bits.len() {
            return Err(Error::invalid("bitstream ended early"));
        }
        let v = self.bits[self.pos..self.pos + width].iter().fold(0u64, |acc, &b| acc << 1 | u64::from(b));
        self.pos += width;
        Ok(v)
    }
}

pub fn lz78_encode(u: &SymbolSequence) -> Vec<bool> {
    let sym_width = bit_width(u.alphabet().size());
    let mut trie: HashMap<(usize, u32), usize> = HashMap::new();
    let mut out = Vec::new();
    let mut phrases = 1usize; // phrase 0 is the empty string
    let mut node = 0usize;
    for &s in u.symbols() {
        match trie.get(&(node, s)) {
            Some(&child) => node = child,
            None => {
                push_bits(&mut out, node as u64, bit_width(phrases));
                push_bits(&mut out, s as u64, sym_width);
                trie.insert((node, s), phrases);
                phrases += 1;
                node = 0;
            }
        }
    }
    if node != 0 {
        push_bits(&mut out, node as u64, bit_width(phrases));
    }
    out
}

pub fn lz78_decode(bits: &[bool], alphabet: Alphabet, n: usize) -> Result<SymbolSequence> {
    let sym_width = bit_width(alphabet.size());
    // phrase j = (prefix phrase, last symbol, length)
    let mut dict: Vec<(usize, u32, usize)> = vec![(0, 0, 0)];
    let mut out = Vec::with_capacity(n);
    let mut r = BitReader { bits, pos: 0 };
    while out.len() < n {
        let ptr = r.read(bit_width(dict.len()))? as usize;
        if ptr >= dict.len() {
            return Err(Error::invalid(format!("phrase pointer {ptr} out of range")));
        }
        let start = out.len();
        let mut p = ptr;
        while p != 0 {
            out.push(dict[p].1);
            p = dict[p].0;
        }
        out[start..].reverse();
        let len = dict[ptr].2;
        if len == n - start {
            break;
        }
        let s = r.read(sym_width)? as u32;
        if s as usize >= alphabet.size() {
            return Err(Error::invalid(format!("symbol {s} outside alphabet")));
        }
        out.push(s);
        dict.push((ptr, s, len + 1));
    }
    if out.len() != n {
        return Err(Error::invalid("decoded length overshoots"));
    }
    SymbolSequence::new(alphabet, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum LengthMode {
    FixedToVariable,
    VariableToFixed { delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub n: usize,
    /// Source symbols carried; `n` in fixed-to-variable mode.
    pub symbols_sent: usize,
    pub rho_lz: f64,
    pub header_bits: usize,
    pub payload_bits: usize,
    pub blocks: usize,
    pub channel_symbols: usize,
    /// Realised channel symbols per source symbol, over all of `u`.
    pub lambda: f64,
    pub lambda_target: Option<f64>,
    pub block_errors: usize,
    pub correct: bool,
    /// Exact per-block leakage of the code under a uniform secret.
    pub block_leakage_bits: f64,
}

fn header_width(mode: LengthMode, n: usize, alphabet: usize) -> usize {
    match mode {
        LengthMode::FixedToVariable => {
            let max_len = n * (bit_width(n.max(2)) + bit_width(alphabet));
            bit_width(max_len + 1)
        }
        LengthMode::VariableToFixed { .. } => bit_width(n + 1),
    }
}

/// Longest prefix whose encoding fits in `budget` bits.
fn longest_fitting_prefix(u: &SymbolSequence, budget: usize) -> usize {
    let (mut lo, mut hi) = (0usize, u.len());
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if lz78_encode(&u.prefix(mid)).len() <= budget {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Compresses `u`, frames it, sends it block by block through the code over
/// the main channel and decodes at the legitimate receiver.
pub fn run_separation(
    u: &SymbolSequence,
    code: &WynerCode,
    triple: &ChannelTriple,
    mode: LengthMode,
    c_s: f64,
    seed: u64,
) -> Result<SeparationReport> {
    if code.secret_bits == 0 {
        return Err(Error::invalid("code carries no secret bits"));
    }
    if u.is_empty() {
        return Err(Error::EmptySequence("separation"));
    }
    let n = u.len();
    let s = code.secret_bits;
    let rho = lz_complexity(u)?;
    let h = header_width(mode, n, u.alphabet().size());
    let (symbols_sent, payload, blocks, lambda_target) = match mode {
        LengthMode::FixedToVariable => {
            let payload = lz78_encode(u);
            let blocks = (h + payload.len()).div_ceil(s);
            (n, payload, blocks, None)
        }
        LengthMode::VariableToFixed { delta } => {
            if !(0.0..1.0).contains(&delta) || c_s <= 0.0 {
                return Err(Error::invalid("variable-to-fixed needs 0 <= delta < 1 and C_s > 0"));
            }
            let lambda = rho / (c_s * (1.0 - delta));
            let blocks = ((lambda * n as f64) / code.n as f64).ceil().max(1.0) as usize;
            let sent = longest_fitting_prefix(u, (blocks * s).saturating_sub(h));
            (sent, lz78_encode(&u.prefix(sent)), blocks, Some(lambda))
        }
    };
    let header_value = match mode {
        LengthMode::FixedToVariable => payload.len(),
        LengthMode::VariableToFixed { .. } => symbols_sent,
    };
    let mut frame = Vec::with_capacity(blocks * s);
    push_bits(&mut frame, header_value as u64, h);
    frame.extend_from_slice(&payload);
    frame.resize(blocks * s, false);

    let mut rng = substream(seed, 0);
    let mut received = Vec::with_capacity(frame.len());
    let mut block_errors = 0;
    for chunk in frame.chunks(s) {
        let secret = chunk.iter().fold(0u64, |acc, &b| acc << 1 | u64::from(b));
        let inner = if code.random_bits == 0 { 0 } else { rng.gen_range(0..1u64 << code.random_bits) };
        let x = wyner_encode(code, secret, inner)?;
        let y = SymbolSequence::new(triple.main().out_alphabet(), sample_with(triple.main(), x, &mut rng)?)?;
        let (decoded, _) = ml_decode(code, &y, triple.main())?;
        block_errors += usize::from(decoded != secret);
        push_bits(&mut received, decoded, s);
    }

    let correct = (|| -> Result<bool> {
        let mut r = BitReader { bits: &received, pos: 0 };
        let value = r.read(h)? as usize;
        let (len, count) = match mode {
            LengthMode::FixedToVariable => (value, n),
            LengthMode::VariableToFixed { .. } => (received.len() - h, value),
        };
        if count > n || h + len > received.len() {
            return Ok(false);
        }
        let v = lz78_decode(&received[h..h + len], u.alphabet(), count)?;
        Ok(count == symbols_sent && v == u.prefix(count))
    })()
    .unwrap_or(false);

    Ok(SeparationReport {
        n,
        symbols_sent,
        rho_lz: rho,
        header_bits: h,
        payload_bits: payload.len(),
        blocks,
        channel_symbols: blocks * code.n,
        lambda: (blocks * code.n) as f64 / n as f64,
        lambda_target,
        block_errors,
        correct,
        block_leakage_bits: code_leakage(code, triple.cascade())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::TransitionMatrix;
    use crate::info::ProbVector;
    use crate::parsing::incremental_parse;
    use crate::wyner::build_code;
    use proptest::prelude::*;

    #[test]
    fn example_bitstream() {
        // phrases 0,00,01,1,011,0: pointers of 0,1,2,2,3,3 bits, 5 symbols
        let u = SymbolSequence::binary("0000110110");
        let bits = lz78_encode(&u);
        assert_eq!(bits.len(), 11 + 5);
        let rendered: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        assert_eq!(rendered, "0100110010111001");
        assert_eq!(lz78_decode(&bits, u.alphabet(), 10).unwrap(), u);
    }

    proptest! {
        #[test]
        fn round_trip(alpha in 1usize..6, data in proptest::collection::vec(0u32..6, 0..300)) {
            let data: Vec<u32> = data.into_iter().map(|s| s % alpha as u32).collect();
            let u = SymbolSequence::new(Alphabet::new(alpha).unwrap(), data).unwrap();
            let bits = lz78_encode(&u);
            prop_assert_eq!(lz78_decode(&bits, u.alphabet(), u.len()).unwrap(), u.clone());
            // length matches the phrase count: sum of pointer widths plus symbols
            let p = incremental_parse(&u);
            let c = p.count();
            let mut expect: usize = (1..=c).map(bit_width).sum();
            expect += (c - usize::from(p.last_incomplete)) * bit_width(alpha);
            prop_assert_eq!(bits.len(), expect);
        }
    }

    #[test]
    fn truncated_stream_is_rejected() {
        let u = SymbolSequence::binary("0110100110010110");
        let bits = lz78_encode(&u);
        assert!(lz78_decode(&bits[..bits.len() - 2], u.alphabet(), u.len()).is_err());
    }

    fn noiseless() -> ChannelTriple {
        ChannelTriple::new(TransitionMatrix::identity(2), TransitionMatrix::bsc(0.25)).unwrap()
    }

    #[test]
    fn fixed_to_variable_over_noiseless_main_is_exact() {
        let u = SymbolSequence::binary("000000000000000000000000000000001111111111111111");
        let code = WynerCode::from_codewords(4, 3, 1, 2, (0..16u32).flat_map(|i| (0..4).rev().map(move |b| (i >> b) & 1)).collect()).unwrap();
        let r = run_separation(&u, &code, &noiseless(), LengthMode::FixedToVariable, 0.8, 5).unwrap();
        assert!(r.correct);
        assert_eq!(r.block_errors, 0);
        assert_eq!(r.blocks, (r.header_bits + r.payload_bits).div_ceil(3));
        assert_eq!(r.lambda, (r.blocks * 4) as f64 / 48.0);
    }

    #[test]
    fn variable_to_fixed_sends_a_prefix_within_budget() {
        let u = SymbolSequence::binary("0110100110010110100101100110100110010110011010010110100110010110");
        let code = WynerCode::from_codewords(4, 3, 1, 2, (0..16u32).flat_map(|i| (0..4).rev().map(move |b| (i >> b) & 1)).collect()).unwrap();
        let r = run_separation(&u, &code, &noiseless(), LengthMode::VariableToFixed { delta: 0.1 }, 0.75, 5).unwrap();
        let target = r.lambda_target.unwrap();
        assert!((target - r.rho_lz / (0.75 * 0.9)).abs() < 1e-12);
        assert_eq!(r.blocks, ((target * 64.0) / 4.0).ceil() as usize);
        assert!(r.header_bits + r.payload_bits <= r.blocks * 3);
        assert!(r.symbols_sent <= 64 && r.correct);
        // one more symbol would not have fit
        if r.symbols_sent < 64 {
            assert!(lz78_encode(&u.prefix(r.symbols_sent + 1)).len() + r.header_bits > r.blocks * 3);
        }
    }

    #[test]
    fn noisy_main_channel_reports_errors_and_is_deterministic() {
        let triple = ChannelTriple::new(TransitionMatrix::bsc(0.2), TransitionMatrix::bsc(0.2)).unwrap();
        let code = build_code(6, 2, 1, &ProbVector::uniform(2), 3).unwrap();
        let u = SymbolSequence::binary("00010011000111010110");
        let a = run_separation(&u, &code, &triple, LengthMode::FixedToVariable, 0.5, 11).unwrap();
        let b = run_separation(&u, &code, &triple, LengthMode::FixedToVariable, 0.5, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.block_errors > 0);
        assert!(!a.correct);
        assert!(a.block_leakage_bits >= 0.0 && a.block_leakage_bits <= 2.0);
    }
}
