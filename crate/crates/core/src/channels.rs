//! Discrete memoryless channels.

use rand::Rng;
use serde::Serialize;

use crate::error::{check_budget, Error, Result};
use crate::parsing::{block_from_index, Alphabet, SymbolSequence};
use crate::rng::substream;

/// Tolerance on row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// A row violating stochasticity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub row: usize,
    /// Row sum minus one, or the offending entry when it lies outside `[0, 1]`.
    pub residual: f64,
}

/// Checks that every row of a row-major `inputs x outputs` table is a
/// probability vector. Reports the first bad row.
pub fn validate_rows(inputs: usize, outputs: usize, data: &[f64]) -> std::result::Result<(), Violation> {
    debug_assert_eq!(data.len(), inputs * outputs);
    for (row, chunk) in data.chunks(outputs).enumerate() {
        if let Some(&bad) = chunk.iter().find(|&&p| !(0.0..=1.0).contains(&p)) {
            return Err(Violation { row, residual: bad });
        }
        let residual = chunk.iter().sum::<f64>() - 1.0;
        if residual.abs() > ROW_SUM_TOLERANCE {
            return Err(Violation { row, residual });
        }
    }
    Ok(())
}

/// Row-stochastic matrix `Q(out | in)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionMatrix {
    inputs: usize,
    outputs: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds a matrix from row-major data, rejecting non-stochastic rows.
    pub fn from_flat(inputs: usize, outputs: usize, data: Vec<f64>) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::EmptyAlphabet);
        }
        if data.len() != inputs * outputs {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: inputs * outputs,
            });
        }
        validate_rows(inputs, outputs, &data)
            .map_err(|v| Error::NotStochastic { row: v.row, residual: v.residual })?;
        // normalize signed zeros so equality and printing are stable
        let data = data.into_iter().map(|p| if p == 0.0 { 0.0 } else { p }).collect();
        Ok(TransitionMatrix { inputs, outputs, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let outputs = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != outputs) {
            return Err(Error::LengthMismatch {
                left: rows[bad].len(),
                right: outputs,
            });
        }
        Self::from_flat(rows.len(), outputs, rows.concat())
    }

    /// Rescales each row to sum to one. Only used on explicit request.
    pub fn renormalized(inputs: usize, outputs: usize, mut data: Vec<f64>) -> Result<Self> {
        for chunk in data.chunks_mut(outputs.max(1)) {
            let s: f64 = chunk.iter().sum();
            if s > 0.0 {
                chunk.iter_mut().for_each(|p| *p /= s);
            }
        }
        Self::from_flat(inputs, outputs, data)
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Self {
        Self::from_flat(2, 2, vec![1.0 - p, p, p, 1.0 - p]).expect("crossover outside [0,1]")
    }

    /// Noiseless channel on `size` symbols.
    pub fn identity(size: usize) -> Self {
        Self::from_fn(size, size, |x, y| if x == y { 1.0 } else { 0.0 })
    }

    /// Deterministic channel `y = map(x)`.
    pub fn deterministic(inputs: usize, outputs: usize, map: impl Fn(usize) -> usize) -> Self {
        Self::from_fn(inputs, outputs, |x, y| if map(x) == y { 1.0 } else { 0.0 })
    }

    /// Panics if `f` does not produce stochastic rows.
    pub fn from_fn(inputs: usize, outputs: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let data = (0..inputs)
            .flat_map(|x| (0..outputs).map(move |y| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::from_flat(inputs, outputs, data).expect("rows are not stochastic")
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn in_alphabet(&self) -> Alphabet {
        Alphabet::new(self.inputs).expect("nonempty")
    }

    pub fn out_alphabet(&self) -> Alphabet {
        Alphabet::new(self.outputs).expect("nonempty")
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.outputs)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.outputs + y]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Re-checks stochasticity of the stored rows.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        validate_rows(self.inputs, self.outputs, &self.data)
    }

    /// True when all rows are equal, i.e. the output carries no information.
    pub fn is_output_independent(&self) -> bool {
        let first = self.row(0);
        self.rows()
            .all(|r| r.iter().zip(first).all(|(a, b)| (a - b).abs() <= 1e-15))
    }

    /// Memoryless extension to blocks of length `n`; block indices are
    /// lexicographic with the first symbol most significant.
    pub fn power(&self, n: usize, budget: u128) -> Result<TransitionMatrix> {
        check_budget(self.inputs * self.outputs, n, 1, budget)?;
        let rows = self.inputs.pow(n as u32);
        let cols = self.outputs.pow(n as u32);
        let mut data = vec![1.0f64; rows * cols];
        let mut xb = vec![0u32; n];
        let mut yb = vec![0u32; n];
        for x in 0..rows {
            block_from_index(x as u64, self.inputs, &mut xb);
            for y in 0..cols {
                block_from_index(y as u64, self.outputs, &mut yb);
                data[x * cols + y] = xb
                    .iter()
                    .zip(&yb)
                    .map(|(&a, &b)| self.get(a as usize, b as usize))
                    .product();
            }
        }
        Ok(TransitionMatrix { inputs: rows, outputs: cols, data })
    }

    /// Matrix product `self * other` without stochasticity re-check.
    pub(crate) fn compose_unchecked(&self, other: &TransitionMatrix) -> TransitionMatrix {
        let mut data = vec![0.0; self.inputs * other.outputs];
        for x in 0..self.inputs {
            let out = &mut data[x * other.outputs..(x + 1) * other.outputs];
            for (y, &p) in self.row(x).iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (o, &q) in out.iter_mut().zip(other.row(y)) {
                    *o += p * q;
                }
            }
        }
        TransitionMatrix { inputs: self.inputs, outputs: other.outputs, data }
    }
}

/// `Q_MW(z|x) = sum_y Q_M(y|x) Q_W(z|y)`.
pub fn cascade(main: &TransitionMatrix, wiretap: &TransitionMatrix) -> Result<TransitionMatrix> {
    if main.outputs() != wiretap.inputs() {
        return Err(Error::AlphabetMismatch {
            expected: main.outputs(),
            found: wiretap.inputs(),
        });
    }
    Ok(main.compose_unchecked(wiretap))
}

/// Main channel `X -> Y`, wiretap channel `Y -> Z`, and their cascade.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelTriple {
    main: TransitionMatrix,
    wiretap: TransitionMatrix,
    cascade: TransitionMatrix,
}

impl ChannelTriple {
    pub fn new(main: TransitionMatrix, wiretap: TransitionMatrix) -> Result<Self> {
        let cascade = cascade(&main, &wiretap)?;
        Ok(ChannelTriple { main, wiretap, cascade })
    }

    pub fn main(&self) -> &TransitionMatrix {
        &self.main
    }

    pub fn wiretap(&self) -> &TransitionMatrix {
        &self.wiretap
    }

    pub fn cascade(&self) -> &TransitionMatrix {
        &self.cascade
    }
}

/// Draws `y_i ~ Q(.|x_i)` independently by inverse CDF. Deterministic in `seed`.
pub fn sample(ch: &TransitionMatrix, x: &SymbolSequence, seed: u64) -> Result<SymbolSequence> {
    let mut rng = substream(seed, 0);
    sample_with(ch, x.symbols(), &mut rng).and_then(|y| SymbolSequence::new(ch.out_alphabet(), y))
}

pub(crate) fn sample_with<R: Rng>(ch: &TransitionMatrix, x: &[u32], rng: &mut R) -> Result<Vec<u32>> {
    x.iter()
        .enumerate()
        .map(|(position, &s)| {
            if s as usize >= ch.inputs() {
                return Err(Error::SymbolOutOfRange {
                    symbol: s,
                    position,
                    size: ch.inputs(),
                });
            }
            Ok(draw(ch.row(s as usize), rng) as u32)
        })
        .collect()
}

/// Inverse-CDF draw from a probability row.
pub(crate) fn draw<R: Rng>(row: &[f64], rng: &mut R) -> usize {
    let t: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if t < acc {
                return i;
            }
        }
    }
    last
}
