use super::{output_distribution, row_divergences, CapacityResult, ProbVector};
use crate::channels::TransitionMatrix;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200_000;

/// Channel capacity by Blahut–Arimoto alternating maximization.
///
/// Each iterate `p` gives `I(p) <= C <= max_x D(Q(.|x) || pQ)`; iteration
/// stops when the difference is at most `tol`. If the iteration cap is hit
/// first the best iterate is returned with `converged = false`.
pub fn channel_capacity(ch: &TransitionMatrix, tol: f64) -> Result<CapacityResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let inputs = ch.inputs();
    let mut p = vec![1.0 / inputs as f64; inputs];
    let mut d = vec![0.0; inputs];
    let mut iterations = 0;
    loop {
        let q = output_distribution(&p, ch);
        row_divergences(ch, &q, &mut d);
        let lower: f64 = p.iter().zip(&d).filter(|(&px, _)| px > 0.0).map(|(px, dx)| px * dx).sum();
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let gap = (upper - lower).max(0.0);
        if gap <= tol || iterations >= MAX_ITERATIONS {
            return Ok(CapacityResult {
                value: lower.max(0.0),
                argmax: ProbVector::from_raw(p),
                iterations,
                certified_gap: gap,
                converged: gap <= tol,
            });
        }
        // shift exponents by the max for stability
        let mut total = 0.0;
        for (px, &dx) in p.iter_mut().zip(&d) {
            *px *= (dx - upper).exp2();
            total += *px;
        }
        p.iter_mut().for_each(|px| *px /= total);
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::binary_entropy;

    #[test]
    fn bsc_capacity() {
        let r = channel_capacity(&TransitionMatrix::bsc(0.1), 1e-9).unwrap();
        assert!(r.converged);
        assert!((r.value - (1.0 - binary_entropy(0.1).unwrap())).abs() < 1e-9);
    }

    #[test]
    fn identity_and_useless() {
        let r = channel_capacity(&TransitionMatrix::identity(4), 1e-9).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
        let flat = TransitionMatrix::from_rows(&[vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let r = channel_capacity(&flat, 1e-9).unwrap();
        assert!(r.value.abs() < 1e-12);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn z_channel_gap_is_certified() {
        // Z channel: capacity at p(1) = 2/5 for crossover 1/2, value log2(5/4)
        let z = TransitionMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let r = channel_capacity(&z, 1e-10).unwrap();
        let exact = (5.0f64 / 4.0).log2();
        assert!(r.value <= exact + 1e-12);
        assert!(exact - r.value <= r.certified_gap + 1e-12);
        assert!((r.argmax.as_slice()[1] - 0.4).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(channel_capacity(&TransitionMatrix::bsc(0.1), 0.0).is_err());
    }
}
