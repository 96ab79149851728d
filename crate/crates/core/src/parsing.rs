//! Incremental (LZ78) parsing of individual sequences.
//!
//! A single trie-based engine drives both the plain parse of `u^n` and the
//! parse of the pair stream `((u_1,w_1),...,(u_n,w_n))`; pair symbols are
//! flattened into the product alphabet as `u * omega + w`.
//!
//! For a single sequence every phrase, including a possibly incomplete last
//! one, counts toward `c(u^n)`. The joint count `c(u^n, w^n)` counts
//! distinct pair phrases only, so that `sum_l c_l = c(u^n, w^n)`.
//! Logarithms are base 2.

use std::collections::HashMap;
use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};

/// A finite alphabet `{0, 1, ..., size - 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        Ok(Alphabet { size })
    }

    pub const fn binary() -> Self {
        Alphabet { size: 2 }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `log2(size)`.
    pub fn log_size(&self) -> f64 {
        (self.size as f64).log2()
    }
}

/// A finite-alphabet individual sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolSequence {
    alphabet: Alphabet,
    data: Vec<u32>,
}

/// Serializes as a digit string when the alphabet has at most ten symbols,
/// and as a list of integers otherwise.
impl Serialize for SymbolSequence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.alphabet.size() <= 10 {
            let digits: String = self.data.iter().map(|&s| char::from(b'0' + s as u8)).collect();
            serializer.serialize_str(&digits)
        } else {
            self.data.serialize(serializer)
        }
    }
}

impl SymbolSequence {
    pub fn new(alphabet: Alphabet, data: Vec<u32>) -> Result<Self> {
        if let Some((position, &symbol)) = data
            .iter()
            .enumerate()
            .find(|(_, &s)| s as usize >= alphabet.size())
        {
            return Err(Error::SymbolOutOfRange {
                symbol,
                position,
                size: alphabet.size(),
            });
        }
        Ok(SymbolSequence { alphabet, data })
    }

    /// Parses a string of decimal digits, e.g. `"0000110110"`.
    pub fn from_digits(alphabet: Alphabet, digits: &str) -> Result<Self> {
        let data = digits
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| {
                c.to_digit(10)
                    .ok_or_else(|| Error::invalid(format!("'{c}' is not a decimal digit")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, data)
    }

    /// Binary sequence from a digit string. Panics on invalid input; meant
    /// for literals.
    pub fn binary(digits: &str) -> Self {
        Self::from_digits(Alphabet::binary(), digits).expect("invalid binary literal")
    }

    /// Decodes the `index`-th sequence of length `n` in lexicographic order
    /// (first symbol most significant).
    pub fn from_index(alphabet: Alphabet, n: usize, mut index: u64) -> Self {
        let a = alphabet.size() as u64;
        let mut data = vec![0u32; n];
        for slot in data.iter_mut().rev() {
            *slot = (index % a) as u32;
            index /= a;
        }
        SymbolSequence { alphabet, data }
    }

    /// Lexicographic index of this sequence among all sequences of its length.
    pub fn index(&self) -> u64 {
        block_index(&self.data, self.alphabet.size())
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn symbols(&self) -> &[u32] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// The first `n` symbols.
    pub fn prefix(&self, n: usize) -> SymbolSequence {
        SymbolSequence {
            alphabet: self.alphabet,
            data: self.data[..n.min(self.data.len())].to_vec(),
        }
    }

    pub fn into_symbols(self) -> Vec<u32> {
        self.data
    }
}

/// Mixed-radix index of a block, first symbol most significant.
pub fn block_index(block: &[u32], radix: usize) -> u64 {
    block
        .iter()
        .fold(0u64, |acc, &s| acc * radix as u64 + s as u64)
}

/// Writes the block with the given index into `out`.
pub fn block_from_index(mut index: u64, radix: usize, out: &mut [u32]) {
    for slot in out.iter_mut().rev() {
        *slot = (index % radix as u64) as u32;
        index /= radix as u64;
    }
}

/// Result of incremental parsing: phrase boundaries as half-open ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhraseParse {
    pub phrases: Vec<Range<usize>>,
    /// The final phrase repeats an earlier phrase because the input ran out.
    pub last_incomplete: bool,
}

impl PhraseParse {
    /// `c(u^n)`.
    pub fn count(&self) -> usize {
        self.phrases.len()
    }

    /// Phrases as symbol slices of the parsed sequence.
    pub fn phrase_slices<'a>(&'a self, u: &'a [u32]) -> impl Iterator<Item = &'a [u32]> + 'a {
        self.phrases.iter().map(move |r| &u[r.clone()])
    }
}

/// The dictionary trie shared by plain and pair parsing.
struct PhraseTrie {
    children: HashMap<(usize, u32), usize>,
    nodes: usize,
}

impl PhraseTrie {
    fn new() -> Self {
        PhraseTrie {
            children: HashMap::new(),
            nodes: 1,
        }
    }

    /// Parses `keys`; each returned range is one phrase.
    fn parse(mut self, keys: &[u32]) -> PhraseParse {
        let mut phrases = Vec::new();
        let mut start = 0;
        let mut node = 0usize;
        for (i, &key) in keys.iter().enumerate() {
            match self.children.get(&(node, key)) {
                Some(&child) => node = child,
                None => {
                    self.children.insert((node, key), self.nodes);
                    self.nodes += 1;
                    phrases.push(start..i + 1);
                    start = i + 1;
                    node = 0;
                }
            }
        }
        let last_incomplete = start < keys.len();
        if last_incomplete {
            phrases.push(start..keys.len());
        }
        PhraseParse {
            phrases,
            last_incomplete,
        }
    }
}

/// LZ78 incremental parse: each new phrase is the shortest string not seen
/// before as a phrase, except possibly the last.
pub fn incremental_parse(u: &SymbolSequence) -> PhraseParse {
    PhraseTrie::new().parse(u.symbols())
}

fn c_log_c(c: usize) -> f64 {
    if c <= 1 {
        0.0
    } else {
        c as f64 * (c as f64).log2()
    }
}

/// `rho_LZ(u^n) = c log c / n`, in bits per symbol.
pub fn lz_complexity(u: &SymbolSequence) -> Result<f64> {
    if u.is_empty() {
        return Err(Error::EmptySequence("LZ complexity"));
    }
    Ok(c_log_c(incremental_parse(u).count()) / u.len() as f64)
}

/// Joint parse of a pair of sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JointPhraseParse {
    /// `c(u^n, w^n)`: number of distinct pair phrases. An incomplete last
    /// phrase repeats an earlier one and is not counted again.
    pub c_joint: usize,
    /// Distinct w-phrases in order of first appearance with their
    /// multiplicities `c_l(u^n | w^n)`.
    pub w_phrases: Vec<(Vec<u32>, usize)>,
    /// All pair phrases, partitioning `[0, n)`.
    pub phrases: Vec<Range<usize>>,
    pub last_incomplete: bool,
}

impl JointPhraseParse {
    /// `c(w^n)`: number of distinct w-phrases in the joint parse.
    pub fn c_w(&self) -> usize {
        self.w_phrases.len()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.w_phrases.iter().map(|(_, c)| *c).collect()
    }

    /// `sum_l c_l log c_l`, i.e. `n * rho_LZ(u^n | w^n)`.
    pub fn code_length(&self) -> f64 {
        self.w_phrases.iter().map(|&(_, c)| c_log_c(c)).sum()
    }
}

/// Parses the pair stream `((u_1,w_1),...,(u_n,w_n))`.
pub fn joint_parse(u: &SymbolSequence, w: &SymbolSequence) -> Result<JointPhraseParse> {
    if u.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: w.len(),
        });
    }
    let omega = w.alphabet().size() as u32;
    let keys: Vec<u32> = u
        .symbols()
        .iter()
        .zip(w.symbols())
        .map(|(&a, &b)| a * omega + b)
        .collect();
    let parse = PhraseTrie::new().parse(&keys);

    let distinct = parse.count() - usize::from(parse.last_incomplete);
    let ws = w.symbols();
    let mut slot: HashMap<&[u32], usize> = HashMap::new();
    let mut w_phrases: Vec<(Vec<u32>, usize)> = Vec::new();
    for range in &parse.phrases[..distinct] {
        let phrase = &ws[range.clone()];
        match slot.get(phrase) {
            Some(&l) => w_phrases[l].1 += 1,
            None => {
                slot.insert(phrase, w_phrases.len());
                w_phrases.push((phrase.to_vec(), 1));
            }
        }
    }
    Ok(JointPhraseParse {
        c_joint: distinct,
        w_phrases,
        phrases: parse.phrases,
        last_incomplete: parse.last_incomplete,
    })
}

/// `rho_LZ(u^n | w^n) = (1/n) sum_l c_l log c_l`.
pub fn conditional_lz_complexity(u: &SymbolSequence, w: &SymbolSequence) -> Result<f64> {
    let parse = joint_parse(u, w)?;
    if u.is_empty() {
        return Err(Error::EmptySequence("conditional LZ complexity"));
    }
    Ok(parse.code_length() / u.len() as f64)
}

/// Entropy (bits) of the empirical distribution of non-overlapping
/// `block`-blocks of `u`, divided by `block`.
pub fn empirical_block_entropy(u: &SymbolSequence, block: usize) -> Result<f64> {
    if block == 0 {
        return Err(Error::invalid("block length must be positive"));
    }
    if u.is_empty() {
        return Err(Error::EmptySequence("empirical block entropy"));
    }
    if u.len() % block != 0 {
        return Err(Error::NotDivisible {
            what: "sequence length",
            n: u.len(),
            by: block,
        });
    }
    let mut counts: HashMap<&[u32], usize> = HashMap::new();
    for chunk in u.symbols().chunks(block) {
        *counts.entry(chunk).or_default() += 1;
    }
    let total = (u.len() / block) as f64;
    let h: f64 = counts
        .values()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum();
    Ok(h / block as f64)
}

/// Finite-n penalty in the block-entropy vs LZ-complexity inequality:
/// `2K(log a + 1)^2 / ((1-eps_n) log n) + 2K a^{2K} log a / n + 1/K`.
/// Returns `+inf` when the middle term overflows.
pub fn entropy_lz_penalty(alphabet: usize, n: usize, block: usize, eps_n: f64) -> f64 {
    let log_a = (alphabet as f64).log2();
    let k = block as f64;
    let log_n = (n as f64).log2();
    let first = 2.0 * k * (log_a + 1.0).powi(2) / ((1.0 - eps_n) * log_n);
    let second = if log_a == 0.0 {
        0.0
    } else {
        let exponent = (2.0 * k).log2() + 2.0 * k * log_a + log_a.log2() - log_n;
        if exponent > 1000.0 {
            f64::INFINITY
        } else {
            exponent.exp2()
        }
    };
    first + second + 1.0 / k
}

/// One evaluation of the block-entropy diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyLzDiagnostic {
    pub block: usize,
    pub block_entropy: f64,
    pub lz_complexity: f64,
    pub penalty: f64,
    /// `block_entropy >= lz_complexity - penalty`.
    pub holds: bool,
}

/// Evaluates the diagnostic for every block length in `blocks` dividing `n`.
/// Violations are reported, not raised.
pub fn entropy_lz_diagnostic(
    u: &SymbolSequence,
    blocks: &[usize],
    eps_n: f64,
) -> Result<Vec<EntropyLzDiagnostic>> {
    let rho = lz_complexity(u)?;
    blocks
        .iter()
        .filter(|&&b| b > 0 && u.len() % b == 0)
        .map(|&block| {
            let block_entropy = empirical_block_entropy(u, block)?;
            let penalty = entropy_lz_penalty(u.alphabet().size(), u.len(), block, eps_n);
            Ok(EntropyLzDiagnostic {
                block,
                block_entropy,
                lz_complexity: rho,
                penalty,
                holds: block_entropy >= rho - penalty,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn phrases_of(s: &str) -> Vec<String> {
        let u = SymbolSequence::binary(s);
        incremental_parse(&u)
            .phrase_slices(u.symbols())
            .map(|p| p.iter().map(|d| char::from(b'0' + *d as u8)).collect())
            .collect()
    }

    #[test]
    fn ten_symbol_example() {
        assert_eq!(phrases_of("0000110110"), ["0", "00", "01", "1", "011", "0"]);
        let parse = incremental_parse(&SymbolSequence::binary("0000110110"));
        assert_eq!(parse.count(), 6);
        assert!(parse.last_incomplete);
    }

    #[test]
    fn all_zeros() {
        assert_eq!(phrases_of("0000000000"), ["0", "00", "000", "0000"]);
        let rho = lz_complexity(&SymbolSequence::binary("0000000000")).unwrap();
        assert!((rho - 0.8).abs() < 1e-12);
    }

    #[test]
    fn complexity_values() {
        let rho = lz_complexity(&SymbolSequence::binary("0000110110")).unwrap();
        assert!((rho - 6.0 * 6f64.log2() / 10.0).abs() < 1e-12);
        assert!((rho - 1.5510).abs() < 1e-4);
        assert_eq!(lz_complexity(&SymbolSequence::binary("0")).unwrap(), 0.0);
        assert_eq!(incremental_parse(&SymbolSequence::binary("0")).count(), 1);
    }

    #[test]
    fn empty_sequence() {
        let u = SymbolSequence::binary("");
        assert_eq!(incremental_parse(&u).count(), 0);
        assert!(matches!(lz_complexity(&u), Err(Error::EmptySequence(_))));
    }

    #[test]
    fn symbol_out_of_range() {
        let err = SymbolSequence::new(Alphabet::binary(), vec![0, 2]).unwrap_err();
        assert!(matches!(err, Error::SymbolOutOfRange { position: 1, .. }));
    }

    #[test]
    fn pair_example_from_phrases() {
        // u = 0|1|00|01, w = 0|1|01|01 concatenated
        let u = SymbolSequence::binary("010001");
        let w = SymbolSequence::binary("010101");
        let jp = joint_parse(&u, &w).unwrap();
        assert_eq!(jp.c_joint, 4);
        assert_eq!(jp.c_w(), 3);
        assert_eq!(jp.multiplicities(), vec![1, 1, 2]);
        assert_eq!(jp.w_phrases[2].0, vec![0, 1]);
        let rho = conditional_lz_complexity(&u, &w).unwrap();
        assert!((rho - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pair_example_constant_side() {
        let u = SymbolSequence::binary("010011");
        let w = SymbolSequence::binary("000000");
        let jp = joint_parse(&u, &w).unwrap();
        assert_eq!(jp.c_joint, 4);
        assert_eq!(jp.c_w(), 2);
        assert_eq!(jp.multiplicities(), vec![2, 2]);
        let rho = conditional_lz_complexity(&u, &w).unwrap();
        assert!((rho - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        let u = SymbolSequence::binary("01");
        let w = SymbolSequence::binary("011");
        assert!(matches!(
            joint_parse(&u, &w),
            Err(Error::LengthMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn block_entropy_examples() {
        let zeros = SymbolSequence::binary("000000000000");
        assert_eq!(empirical_block_entropy(&zeros, 3).unwrap(), 0.0);
        let alt = SymbolSequence::binary("010101010101");
        assert_eq!(empirical_block_entropy(&alt, 2).unwrap(), 0.0);
        assert!(matches!(
            empirical_block_entropy(&alt, 5),
            Err(Error::NotDivisible { .. })
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data: Vec<u32> = (0..1 << 14).map(|_| rng.gen_range(0..2)).collect();
        let u = SymbolSequence::new(Alphabet::binary(), data).unwrap();
        let h = empirical_block_entropy(&u, 4).unwrap();
        assert!((h - 1.0).abs() < 0.05, "h = {h}");
    }

    #[test]
    fn index_round_trip() {
        let u = SymbolSequence::binary("1011");
        assert_eq!(u.index(), 11);
        assert_eq!(SymbolSequence::from_index(Alphabet::binary(), 4, 11), u);
    }

    fn arb_sequence(max_alpha: usize, max_len: usize) -> impl Strategy<Value = SymbolSequence> {
        (1..=max_alpha).prop_flat_map(move |a| {
            prop::collection::vec(0..a as u32, 0..max_len)
                .prop_map(move |d| SymbolSequence::new(Alphabet::new(a).unwrap(), d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn parse_partitions_and_is_prefix_closed(u in arb_sequence(4, 300)) {
            let parse = incremental_parse(&u);
            let mut next = 0;
            for r in &parse.phrases {
                prop_assert_eq!(r.start, next);
                prop_assert!(r.end > r.start);
                next = r.end;
            }
            prop_assert_eq!(next, u.len());

            let s = u.symbols();
            let complete = if parse.last_incomplete {
                &parse.phrases[..parse.phrases.len() - 1]
            } else {
                &parse.phrases[..]
            };
            let mut seen = std::collections::HashSet::new();
            for r in complete {
                let phrase = &s[r.clone()];
                let stem = &phrase[..phrase.len() - 1];
                prop_assert!(stem.is_empty() || seen.contains(stem));
                prop_assert!(seen.insert(phrase));
            }
            if parse.last_incomplete {
                let last = &s[parse.phrases.last().unwrap().clone()];
                prop_assert!(seen.contains(last));
            }
        }

        #[test]
        fn multiplicities_sum_to_joint_count(
            (u, w) in (1usize..=4, 1usize..=4, 0usize..400).prop_flat_map(|(a, b, n)| (
                prop::collection::vec(0..a as u32, n)
                    .prop_map(move |d| SymbolSequence::new(Alphabet::new(a).unwrap(), d).unwrap()),
                prop::collection::vec(0..b as u32, n)
                    .prop_map(move |d| SymbolSequence::new(Alphabet::new(b).unwrap(), d).unwrap()),
            ))
        ) {
            let jp = joint_parse(&u, &w).unwrap();
            prop_assert_eq!(jp.multiplicities().iter().sum::<usize>(), jp.c_joint);
        }

        #[test]
        fn self_conditioning_is_zero(u in arb_sequence(4, 300)) {
            prop_assume!(!u.is_empty());
            prop_assert_eq!(conditional_lz_complexity(&u, &u).unwrap(), 0.0);
        }

        #[test]
        fn constant_side_reproduces_plain_parse(u in arb_sequence(3, 300)) {
            let w = SymbolSequence::new(Alphabet::binary(), vec![0; u.len()]).unwrap();
            let jp = joint_parse(&u, &w).unwrap();
            let plain = incremental_parse(&u);
            prop_assert_eq!(&jp.phrases, &plain.phrases);
            prop_assert_eq!(jp.c_joint, plain.count() - usize::from(plain.last_incomplete));
        }
    }
}
