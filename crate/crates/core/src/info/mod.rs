//! Entropies, mutual information, and the capacity-type optimizations:
//! channel capacity, secrecy capacity `max_P [I(X;Y) - I(X;Z)]`, and the
//! rate-constrained secrecy function `Gamma[R]`.
//!
//! All quantities are in bits; `0 log 0 = 0` throughout.

mod capacity;
pub mod oracle;
mod secrecy;

pub use capacity::channel_capacity;
pub use secrecy::{gamma, gamma_curve, secrecy_capacity, secrecy_objective, GammaCurve, GammaPoint};

use serde::Serialize;

use crate::channels::TransitionMatrix;
use crate::error::{Error, Result};

/// Tolerance on the sum of a probability vector.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(dist: Vec<f64>) -> Result<Self> {
        if dist.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        if let Some(&bad) = dist.iter().find(|&&p| !(p >= 0.0 && p <= 1.0)) {
            return Err(Error::invalid(format!("probability {bad} outside [0, 1]")));
        }
        let residual = dist.iter().sum::<f64>() - 1.0;
        if residual.abs() > SUM_TOLERANCE {
            return Err(Error::NotStochastic { row: 0, residual });
        }
        Ok(ProbVector(dist))
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::invalid("weights must be nonnegative with a positive sum"));
        }
        Ok(ProbVector(weights.iter().map(|w| w / total).collect()))
    }

    pub fn uniform(size: usize) -> Self {
        ProbVector(vec![1.0 / size as f64; size])
    }

    pub fn point(size: usize, at: usize) -> Self {
        let mut v = vec![0.0; size];
        v[at] = 1.0;
        ProbVector(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn from_raw(v: Vec<f64>) -> Self {
        ProbVector(v)
    }
}

/// Outcome of a concave maximization over the simplex.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityResult {
    pub value: f64,
    pub argmax: ProbVector,
    pub iterations: usize,
    /// Upper bound on `optimum - value`.
    pub certified_gap: f64,
    pub converged: bool,
}

/// `h2(p) = -p log p - (1-p) log(1-p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("binary entropy argument {p} outside [0, 1]")));
    }
    Ok(plogp(p) + plogp(1.0 - p))
}

/// `-p log2 p` with `0 log 0 = 0`.
pub(crate) fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits of a (not necessarily normalized) mass vector.
pub fn entropy(dist: &[f64]) -> f64 {
    dist.iter().map(|&p| plogp(p)).sum()
}

fn check_dims(p: &[f64], ch: &TransitionMatrix) -> Result<()> {
    if p.len() != ch.inputs() {
        return Err(Error::AlphabetMismatch {
            expected: ch.inputs(),
            found: p.len(),
        });
    }
    Ok(())
}

/// Output law `q(y) = sum_x p(x) Q(y|x)`.
pub fn output_distribution(p: &[f64], ch: &TransitionMatrix) -> Vec<f64> {
    let mut q = vec![0.0; ch.outputs()];
    for (x, &px) in p.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (qy, &w) in q.iter_mut().zip(ch.row(x)) {
            *qy += px * w;
        }
    }
    q
}

/// `D(Q(.|x) || q)` for every input `x`, in bits. Entries are `+inf` when a
/// row puts mass where `q` has none.
pub(crate) fn row_divergences(ch: &TransitionMatrix, q: &[f64], out: &mut [f64]) {
    for (x, d) in out.iter_mut().enumerate() {
        *d = ch
            .row(x)
            .iter()
            .zip(q)
            .map(|(&w, &qy)| {
                if w == 0.0 {
                    0.0
                } else if qy == 0.0 {
                    f64::INFINITY
                } else {
                    w * (w / qy).log2()
                }
            })
            .sum();
    }
}

/// `I(X;Y)` for input law `p` and channel `ch`.
pub fn mutual_information(p: &ProbVector, ch: &TransitionMatrix) -> Result<f64> {
    check_dims(p.as_slice(), ch)?;
    Ok(mi_raw(p.as_slice(), ch))
}

pub(crate) fn mi_raw(p: &[f64], ch: &TransitionMatrix) -> f64 {
    let q = output_distribution(p, ch);
    let mut d = vec![0.0; ch.inputs()];
    row_divergences(ch, &q, &mut d);
    p.iter()
        .zip(&d)
        .filter(|(&px, _)| px > 0.0)
        .map(|(&px, &dx)| px * dx)
        .sum::<f64>()
        .max(0.0)
}

/// Mutual information `I(A;B)` of a joint mass table `rows x cols` (row-major).
pub fn joint_mutual_information(joint: &[f64], rows: usize, cols: usize) -> f64 {
    let mut pa = vec![0.0; rows];
    let mut pb = vec![0.0; cols];
    for a in 0..rows {
        for b in 0..cols {
            let p = joint[a * cols + b];
            pa[a] += p;
            pb[b] += p;
        }
    }
    (entropy(&pa) + entropy(&pb) - entropy(joint)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.11).unwrap() - 0.4999).abs() < 1e-4);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn mutual_information_values() {
        let flat = TransitionMatrix::from_rows(&[vec![0.2, 0.8], vec![0.2, 0.8], vec![0.2, 0.8]]).unwrap();
        let p = ProbVector::new(vec![0.1, 0.3, 0.6]).unwrap();
        assert!(mutual_information(&p, &flat).unwrap().abs() < 1e-15);

        let mi = mutual_information(&ProbVector::uniform(5), &TransitionMatrix::identity(5)).unwrap();
        assert!((mi - 5f64.log2()).abs() < 1e-12);

        let mi = mutual_information(&ProbVector::uniform(2), &TransitionMatrix::bsc(0.1)).unwrap();
        assert!((mi - (1.0 - binary_entropy(0.1).unwrap())).abs() < 1e-12);
        assert!((mi - 0.5310).abs() < 1e-4);
    }

    #[test]
    fn dimension_mismatch() {
        let err = mutual_information(&ProbVector::uniform(3), &TransitionMatrix::bsc(0.1)).unwrap_err();
        assert!(matches!(err, Error::AlphabetMismatch { expected: 2, found: 3 }));
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![1.2, -0.2]).is_err());
        assert!(ProbVector::new(vec![]).is_err());
        assert_eq!(ProbVector::from_weights(&[1.0, 3.0]).unwrap().as_slice(), &[0.25, 0.75]);
    }

    #[test]
    fn joint_mi_matches_channel_form() {
        let ch = TransitionMatrix::from_rows(&[vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]).unwrap();
        let p = [0.35, 0.65];
        let joint: Vec<f64> = (0..2).flat_map(|x| (0..3).map(move |y| (x, y))).map(|(x, y)| p[x] * ch.get(x, y)).collect();
        let a = joint_mutual_information(&joint, 2, 3);
        let b = mutual_information(&ProbVector::new(p.to_vec()).unwrap(), &ch).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
