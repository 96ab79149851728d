//! Random binning with incremental transmission and ACK feedback.
//!
//! Every source sequence gets a pseudo-random bit string. The encoder sends
//! it `r` bits at a time; after chunk `i` the decoder lists every sequence
//! whose first `i r` bits match, and acknowledges once the list holds a
//! sequence `u'` with `n rho(u'|w) <= i r - n delta`. It then outputs the
//! list member with the smallest conditional LZ complexity.

use rand::RngCore;
use serde::Serialize;

use crate::channels::{sample_with, ChannelTriple};
use crate::error::{check_budget, Error, Result};
use crate::parsing::{conditional_lz_complexity, Alphabet, SymbolSequence};
use crate::rng::substream;
use crate::wyner::{ml_decode, wyner_encode, WynerCode};

/// Largest candidate space the list decoder will scan.
pub const LIST_BUDGET: u128 = 1 << 20;

/// Slack on the ACK threshold and the stopping-time arithmetic.
pub const THRESHOLD_SLACK: f64 = 1e-9;

/// Lazily keyed bin index: the bits of `u` are the output of a generator
/// seeded by `(seed, index of u)`, so no table is materialized and shorter
/// prefixes are always prefixes of longer ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BinAssignment {
    pub n: usize,
    pub alphabet: usize,
    pub bits_per_sequence: usize,
    pub seed: u64,
}

impl BinAssignment {
    /// `bits_per_sequence = ceil(n log2 alpha)`.
    pub fn new(n: usize, alphabet: Alphabet, seed: u64) -> Result<Self> {
        let a = alphabet.size();
        check_budget(a, n, 1, u64::MAX as u128)?;
        let bits = (n as f64 * (a as f64).log2() - 1e-9).ceil().max(0.0) as usize;
        Ok(BinAssignment { n, alphabet: a, bits_per_sequence: bits.min(64), seed })
    }

    /// All bits of `b(u)` packed first-bit-most-significant.
    pub fn bits_of_index(&self, index: u64) -> u64 {
        if self.bits_per_sequence == 0 {
            return 0;
        }
        substream(self.seed, index).next_u64() >> (64 - self.bits_per_sequence)
    }

    pub fn bits(&self, u: &SymbolSequence) -> Result<u64> {
        if u.len() != self.n || u.alphabet().size() != self.alphabet {
            return Err(Error::invalid("sequence does not match the assignment"));
        }
        Ok(self.bits_of_index(u.index()))
    }

    /// The first `len` bits of a packed string.
    pub fn prefix(&self, bits: u64, len: usize) -> u64 {
        let len = len.min(self.bits_per_sequence);
        if len == 0 {
            0
        } else {
            bits >> (self.bits_per_sequence - len)
        }
    }
}

/// Outcome of one list-decoding step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ListDecision {
    pub ack: bool,
    /// Smallest-complexity list member, present when `ack`.
    pub candidate: Option<SymbolSequence>,
    pub list_size: usize,
    /// List members meeting the threshold.
    pub qualifying: usize,
}

/// Precomputed `(bits, n rho(u'|w))` for every candidate `u'`.
#[derive(Debug, Clone)]
pub struct CandidateTable {
    assign: BinAssignment,
    bits: Vec<u64>,
    code_lengths: Vec<f64>,
}

impl CandidateTable {
    pub fn build(assign: &BinAssignment, w: &SymbolSequence) -> Result<Self> {
        if w.len() != assign.n {
            return Err(Error::LengthMismatch { left: assign.n, right: w.len() });
        }
        let size = check_budget(assign.alphabet, assign.n, 1, LIST_BUDGET)? as u64;
        let alphabet = Alphabet::new(assign.alphabet)?;
        let mut bits = Vec::with_capacity(size as usize);
        let mut code_lengths = Vec::with_capacity(size as usize);
        for index in 0..size {
            let u = SymbolSequence::from_index(alphabet, assign.n, index);
            bits.push(assign.bits_of_index(index));
            code_lengths.push(assign.n as f64 * conditional_lz_complexity(&u, w)?);
        }
        Ok(CandidateTable { assign: *assign, bits, code_lengths })
    }

    pub fn code_length(&self, index: u64) -> f64 {
        self.code_lengths[index as usize]
    }

    pub fn max_code_length(&self) -> f64 {
        self.code_lengths.iter().cloned().fold(0.0, f64::max)
    }

    /// One decoding step after `i` chunks of `r` bits, with `received`
    /// holding the first `min(i r, bits_per_sequence)` bits.
    pub fn step(&self, received: u64, i: usize, r: usize, delta: f64) -> ListDecision {
        let len = (i * r).min(self.assign.bits_per_sequence);
        let budget = (i * r) as f64 - self.assign.n as f64 * delta + THRESHOLD_SLACK;
        let mut best: Option<(f64, usize)> = None;
        let mut list_size = 0;
        let mut qualifying = 0;
        for (index, (&b, &cl)) in self.bits.iter().zip(&self.code_lengths).enumerate() {
            if self.assign.prefix(b, len) != received {
                continue;
            }
            list_size += 1;
            if cl <= budget {
                qualifying += 1;
            }
            if best.map_or(true, |(v, _)| cl < v) {
                best = Some((cl, index));
            }
        }
        let ack = qualifying > 0;
        let alphabet = Alphabet::new(self.assign.alphabet).expect("nonempty alphabet");
        ListDecision {
            ack,
            candidate: best
                .filter(|_| ack)
                .map(|(_, index)| SymbolSequence::from_index(alphabet, self.assign.n, index as u64)),
            list_size,
            qualifying,
        }
    }
}

/// A single list-decoding step without a precomputed table.
pub fn list_decode_step(
    assign: &BinAssignment,
    w: &SymbolSequence,
    received: u64,
    i: usize,
    r: usize,
    delta: f64,
) -> Result<ListDecision> {
    Ok(CandidateTable::build(assign, w)?.step(received, i, r, delta))
}

/// What the receiving end got for one chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub bits: Vec<bool>,
    /// The link detected or caused a decoding error for this chunk.
    pub error: bool,
}

/// A duplex link: chunks go forward, ACKs come back.
pub trait Transport {
    fn send_chunk(&mut self, chunk: &[bool]) -> Result<Delivery>;

    fn feedback(&mut self, _ack: bool) {}
}

/// Error-free delivery.
#[derive(Debug, Default, Clone)]
pub struct IdealTransport {
    pub sent: Vec<Vec<bool>>,
    pub acks: Vec<bool>,
}

impl Transport for IdealTransport {
    fn send_chunk(&mut self, chunk: &[bool]) -> Result<Delivery> {
        self.sent.push(chunk.to_vec());
        Ok(Delivery { bits: chunk.to_vec(), error: false })
    }

    fn feedback(&mut self, ack: bool) {
        self.acks.push(ack);
    }
}

/// Sends each chunk as the secret of a binning wiretap code over the main
/// channel and decodes it by maximum likelihood.
pub struct CodedTransport<'a> {
    code: &'a WynerCode,
    triple: &'a ChannelTriple,
    seed: u64,
    uses: u64,
}

impl<'a> CodedTransport<'a> {
    pub fn new(code: &'a WynerCode, triple: &'a ChannelTriple, seed: u64) -> Self {
        CodedTransport { code, triple, seed, uses: 0 }
    }
}

impl Transport for CodedTransport<'_> {
    fn send_chunk(&mut self, chunk: &[bool]) -> Result<Delivery> {
        if chunk.len() > self.code.secret_bits {
            return Err(Error::invalid(format!(
                "chunk of {} bits does not fit {} secret bits",
                chunk.len(),
                self.code.secret_bits
            )));
        }
        let mut rng = substream(self.seed, self.uses);
        self.uses += 1;
        // chunk bits fill the secret from the most significant end
        let pad = self.code.secret_bits - chunk.len();
        let secret = chunk.iter().fold(0u64, |acc, &b| acc << 1 | b as u64) << pad;
        let inner = if self.code.random_bits == 0 { 0 } else { rng.next_u64() >> (64 - self.code.random_bits) };
        let x = wyner_encode(self.code, secret, inner)?;
        let y = sample_with(self.triple.main(), x, &mut rng)?;
        let y = SymbolSequence::new(self.triple.main().out_alphabet(), y)?;
        let (decoded, _) = ml_decode(self.code, &y, self.triple.main())?;
        let bits: Vec<bool> = (0..chunk.len())
            .map(|j| decoded >> (self.code.secret_bits - 1 - j) & 1 == 1)
            .collect();
        let error = decoded != secret;
        Ok(Delivery { bits, error })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionTranscript {
    pub n: usize,
    pub r: usize,
    pub delta: f64,
    /// `rho_LZ(u|w)` of the true sequence.
    pub rho: f64,
    /// `ceil((n rho + n delta) / r)`.
    pub i_star: usize,
    pub chunks_sent: usize,
    /// Chunk index at which the ACK was sent.
    pub stopped_at: Option<usize>,
    pub reconstruction: Option<SymbolSequence>,
    pub correct: bool,
    /// `chunks_sent * r / n`.
    pub compression_ratio: f64,
    pub list_size: usize,
    /// Sequences other than `u` that met the threshold at the stop.
    pub impostors: usize,
    pub chunk_errors: usize,
}

/// `ceil((n rho + n delta) / r)` with a small slack against rounding.
pub fn stopping_time(n: usize, rho: f64, delta: f64, r: usize) -> usize {
    (((n as f64 * (rho + delta)) / r as f64) - THRESHOLD_SLACK).ceil().max(0.0) as usize
}

/// Runs one session. The bin assignment is seeded by `seed`.
pub fn run_session(
    u: &SymbolSequence,
    w: &SymbolSequence,
    r: usize,
    delta: f64,
    transport: &mut dyn Transport,
    seed: u64,
) -> Result<SessionTranscript> {
    if r == 0 {
        return Err(Error::invalid("chunk size r must be positive"));
    }
    if !(delta >= 0.0) {
        return Err(Error::invalid(format!("delta = {delta} must be nonnegative")));
    }
    if u.len() != w.len() {
        return Err(Error::LengthMismatch { left: u.len(), right: w.len() });
    }
    let n = u.len();
    let assign = BinAssignment::new(n, u.alphabet(), seed)?;
    let table = CandidateTable::build(&assign, w)?;
    let rho = conditional_lz_complexity(u, w)?;
    let i_star = stopping_time(n, rho, delta, r);
    let truth = assign.bits(u)?;
    let total = assign.bits_per_sequence;
    // no list member can need more chunks than this
    let give_up = stopping_time(n, table.max_code_length() / n as f64, delta, r).max(total.div_ceil(r)) + 1;

    let mut received = 0u64;
    let mut received_len = 0usize;
    let mut chunk_errors = 0;
    let mut i = 0;
    let mut last = ListDecision { ack: false, candidate: None, list_size: 0, qualifying: 0 };
    while i < give_up {
        i += 1;
        let start = ((i - 1) * r).min(total);
        let end = (i * r).min(total);
        let chunk: Vec<bool> = (start..end).map(|j| truth >> (total - 1 - j) & 1 == 1).collect();
        let delivery = transport.send_chunk(&chunk)?;
        if delivery.error || delivery.bits != chunk {
            chunk_errors += 1;
        }
        for &b in &delivery.bits[..chunk.len()] {
            received = received << 1 | b as u64;
        }
        received_len += chunk.len();
        debug_assert_eq!(received_len, end);
        last = table.step(received, i, r, delta);
        transport.feedback(last.ack);
        if last.ack {
            break;
        }
    }
    let reconstruction = last.candidate.clone();
    let correct = reconstruction.as_ref() == Some(u);
    let budget = (i * r) as f64 - n as f64 * delta + THRESHOLD_SLACK;
    let truth_qualifies = assign.prefix(truth, i * r) == received && n as f64 * rho <= budget;
    let impostors = last.qualifying - usize::from(truth_qualifies);
    Ok(SessionTranscript {
        n,
        r,
        delta,
        rho,
        i_star,
        chunks_sent: i,
        stopped_at: last.ack.then_some(i),
        reconstruction,
        correct,
        compression_ratio: (i * r) as f64 / n as f64,
        list_size: last.list_size,
        impostors,
        chunk_errors,
    })
}
