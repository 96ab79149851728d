//! Secrecy capacity and `Gamma[R]` for a physically degraded triple.
//!
//! Both reduce to maximizing `a I(X;Y) - I(X;Z)` over the input simplex
//! with `a >= 1`, which is concave when `Z` is produced from `Y`. The
//! maximizer is pairwise Frank–Wolfe with exact line search; the
//! Frank–Wolfe duality gap certifies the result.

use rayon::prelude::*;
use serde::Serialize;

use super::{channel_capacity, mi_raw, output_distribution, CapacityResult, ProbVector};
use crate::channels::{ChannelTriple, TransitionMatrix};
use crate::error::{Error, Result};
use crate::rng::substream;

const MAX_ITERATIONS: usize = 50_000;
const LINE_SEARCH_STEPS: usize = 64;
const STARTS: usize = 8;
/// Floor on output probabilities inside the gradient; keeps divergences
/// finite at the boundary of the simplex.
const Q_FLOOR: f64 = 1e-300;

/// `I(X;Y) - I(X;Z)` at input law `p`.
pub fn secrecy_objective(p: &ProbVector, triple: &ChannelTriple) -> Result<f64> {
    if p.len() != triple.main().inputs() {
        return Err(Error::AlphabetMismatch {
            expected: triple.main().inputs(),
            found: p.len(),
        });
    }
    Ok(mi_raw(p.as_slice(), triple.main()) - mi_raw(p.as_slice(), triple.cascade()))
}

/// `weight * I(X;Y) - I(X;Z)`.
struct Objective<'a> {
    main: &'a TransitionMatrix,
    cascade: &'a TransitionMatrix,
    weight: f64,
}

fn floored_divergence(row: &[f64], q: &[f64]) -> f64 {
    row.iter()
        .zip(q)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, &qy)| w * (w / qy.max(Q_FLOOR)).log2())
        .sum()
}

impl Objective<'_> {
    fn value(&self, p: &[f64]) -> f64 {
        self.weight * mi_raw(p, self.main) - mi_raw(p, self.cascade)
    }

    /// Gradient up to an additive constant (irrelevant on the simplex).
    fn gradient(&self, p: &[f64], grad: &mut [f64]) {
        let qy = output_distribution(p, self.main);
        let qz = output_distribution(p, self.cascade);
        for (x, g) in grad.iter_mut().enumerate() {
            *g = self.weight * floored_divergence(self.main.row(x), &qy)
                - floored_divergence(self.cascade.row(x), &qz);
        }
    }

    /// Directional derivative along `e_to - e_from` at `p`.
    fn slope(&self, p: &[f64], to: usize, from: usize) -> f64 {
        let qy = output_distribution(p, self.main);
        let qz = output_distribution(p, self.cascade);
        let at = |x: usize| {
            self.weight * floored_divergence(self.main.row(x), &qy)
                - floored_divergence(self.cascade.row(x), &qz)
        };
        at(to) - at(from)
    }
}

struct Ascent {
    p: Vec<f64>,
    value: f64,
    gap: f64,
    iterations: usize,
}

/// Pairwise Frank–Wolfe ascent from `start` until the duality gap is below `tol`.
fn ascend(obj: &Objective<'_>, start: Vec<f64>, tol: f64) -> Ascent {
    let n = start.len();
    let mut p = start;
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut iterations = 0;
    loop {
        obj.gradient(&p, &mut grad);
        let (toward, &best) = grad
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let inner: f64 = p.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let gap = (best - inner).max(0.0);
        if gap <= tol || iterations >= MAX_ITERATIONS {
            let value = obj.value(&p);
            return Ascent { p, value, gap, iterations };
        }
        let away = (0..n)
            .filter(|&x| p[x] > 0.0)
            .min_by(|&a, &b| grad[a].total_cmp(&grad[b]))
            .expect("support is nonempty");
        if away == toward {
            let value = obj.value(&p);
            return Ascent { p, value, gap, iterations };
        }
        let max_step = p[away];
        let shifted = |step: f64, buf: &mut Vec<f64>| {
            buf.copy_from_slice(&p);
            buf[toward] += step;
            buf[away] -= step;
            if buf[away] < 0.0 {
                buf[away] = 0.0;
            }
        };
        shifted(max_step, &mut trial);
        let step = if obj.slope(&trial, toward, away) >= 0.0 {
            max_step
        } else {
            // the slope is decreasing along the segment: bisect for its root
            let (mut lo, mut hi) = (0.0, max_step);
            for _ in 0..LINE_SEARCH_STEPS {
                let mid = 0.5 * (lo + hi);
                shifted(mid, &mut trial);
                if obj.slope(&trial, toward, away) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        if step == 0.0 {
            let value = obj.value(&p);
            return Ascent { p, value, gap, iterations };
        }
        if step == max_step {
            p[toward] += p[away];
            p[away] = 0.0;
        } else {
            p[toward] += step;
            p[away] -= step;
        }
        iterations += 1;
    }
}

/// Deterministic multistart set: uniform, vertex-leaning mixtures, then
/// seeded random interior points.
fn starting_points(n: usize) -> Vec<Vec<f64>> {
    use rand::Rng;
    let mut starts = vec![vec![1.0 / n as f64; n]];
    for x in 0..n.min(STARTS - 1) {
        let mut p = vec![0.5 / n as f64; n];
        p[x] += 0.5;
        starts.push(p);
    }
    let mut rng = substream(0x5ec_c4b, n as u64);
    while starts.len() < STARTS {
        let w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
        let total: f64 = w.iter().sum();
        starts.push(w.into_iter().map(|v| v / total).collect());
    }
    starts
}

fn best_of(obj: &Objective<'_>, starts: Vec<Vec<f64>>, tol: f64) -> Ascent {
    let runs: Vec<Ascent> = starts.into_par_iter().map(|s| ascend(obj, s, tol)).collect();
    let top = runs.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
    // earliest start within the tolerance of the best value
    runs.into_iter()
        .find(|r| r.value >= top - tol.max(1e-12))
        .expect("at least one start")
}

/// `C_s = max_P [I(X;Y) - I(X;Z)]`.
pub fn secrecy_capacity(triple: &ChannelTriple, tol: f64) -> Result<CapacityResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let obj = Objective {
        main: triple.main(),
        cascade: triple.cascade(),
        weight: 1.0,
    };
    let run = best_of(&obj, starting_points(triple.main().inputs()), tol);
    Ok(CapacityResult {
        value: run.value.max(0.0),
        argmax: ProbVector::from_raw(run.p),
        iterations: run.iterations,
        certified_gap: run.gap,
        converged: run.gap <= tol,
    })
}

/// One evaluation of `Gamma[R]`.
#[derive(Debug, Clone, Serialize)]
pub struct GammaPoint {
    pub rate: f64,
    pub value: f64,
    pub argmax: ProbVector,
    /// Lagrange multiplier of the rate constraint.
    pub multiplier: f64,
    /// Dual upper bound on `Gamma[R]`.
    pub upper_bound: f64,
    pub certified_gap: f64,
}

/// `Gamma[R] = max { I(X;Y) - I(X;Z) : I(X;Y) >= R }`.
///
/// Solved through the Lagrangian `max_P (1 + nu) I(X;Y) - I(X;Z) - nu R`:
/// bisection on `nu` brackets the multiplier, and the primal point is
/// recovered on the mixture path between the two bracketing maximizers,
/// bisecting for the point where `I(X;Y) = R`.
pub fn gamma(triple: &ChannelTriple, rate: f64, tol: f64) -> Result<GammaPoint> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    if !(rate >= 0.0) {
        return Err(Error::invalid(format!("rate must be nonnegative, got {rate}")));
    }
    let main = triple.main();
    let cascade = triple.cascade();
    let inner_tol = (tol * 1e-3).max(1e-13);
    let cap = channel_capacity(main, inner_tol)?;
    if rate > cap.value + cap.certified_gap + tol {
        return Err(Error::Infeasible {
            rate,
            capacity: cap.value,
        });
    }
    let f = |p: &[f64]| mi_raw(p, main) - mi_raw(p, cascade);
    let mi_main = |p: &[f64]| mi_raw(p, main);

    let unconstrained = secrecy_capacity(triple, inner_tol)?;
    if mi_main(unconstrained.argmax.as_slice()) >= rate - inner_tol {
        return Ok(GammaPoint {
            rate,
            value: unconstrained.value,
            upper_bound: unconstrained.value + unconstrained.certified_gap,
            certified_gap: unconstrained.certified_gap,
            argmax: unconstrained.argmax,
            multiplier: 0.0,
        });
    }

    let solve = |nu: f64, start: Vec<f64>| {
        let obj = Objective { main, cascade, weight: 1.0 + nu };
        ascend(&obj, start, inner_tol)
    };

    let mut lo = (0.0, unconstrained.argmax.as_slice().to_vec());
    let mut hi_nu = 1.0;
    let mut hi = loop {
        let run = solve(hi_nu, lo.1.clone());
        if mi_main(&run.p) >= rate {
            break Some(run);
        }
        lo = (hi_nu, run.p);
        if hi_nu > 1e9 {
            break None;
        }
        hi_nu *= 2.0;
    };
    let (hi_p, upper_bound) = match hi.take() {
        Some(mut run) => {
            for _ in 0..200 {
                if hi_nu - lo.0 <= 1e-13 * hi_nu.max(1.0) {
                    break;
                }
                let mid = 0.5 * (lo.0 + hi_nu);
                let next = solve(mid, run.p.clone());
                if mi_main(&next.p) >= rate {
                    hi_nu = mid;
                    run = next;
                } else {
                    lo = (mid, next.p);
                }
            }
            let dual = f(&run.p) + hi_nu * (mi_main(&run.p) - rate) + run.gap;
            (run.p, dual)
        }
        // rate at the capacity edge: only capacity-achieving inputs qualify
        None => {
            let p = cap.argmax.as_slice().to_vec();
            let v = f(&p);
            (p, v + cap.certified_gap * (1.0 + hi_nu))
        }
    };

    // smallest feasible mixture weight on the segment lo -> hi
    let mix = |t: f64| -> Vec<f64> { lo.1.iter().zip(&hi_p).map(|(a, b)| (1.0 - t) * a + t * b).collect() };
    let (mut t_lo, mut t_hi) = (0.0, 1.0);
    if mi_main(&hi_p) >= rate {
        for _ in 0..80 {
            let mid = 0.5 * (t_lo + t_hi);
            if mi_main(&mix(mid)) >= rate {
                t_hi = mid;
            } else {
                t_lo = mid;
            }
        }
    }
    let p = mix(t_hi);
    let value = f(&p);
    Ok(GammaPoint {
        rate,
        value,
        argmax: ProbVector::from_raw(p),
        multiplier: hi_nu,
        upper_bound: upper_bound.max(value),
        certified_gap: (upper_bound - value).max(0.0),
    })
}

/// `Gamma` evaluated on a grid of rates.
#[derive(Debug, Clone, Serialize)]
pub struct GammaCurve {
    /// Main-channel capacity.
    pub c_m: f64,
    pub points: Vec<GammaPoint>,
}

impl GammaCurve {
    /// Largest increase `Gamma[R_{i+1}] - Gamma[R_i]` along the grid (should be <= 0).
    pub fn max_increase(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1].value - w[0].value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest midpoint-concavity violation on an evenly spaced grid.
    pub fn max_concavity_violation(&self) -> f64 {
        self.points
            .windows(3)
            .map(|w| 0.5 * (w[0].value + w[2].value) - w[1].value)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evaluates `Gamma` on `points` evenly spaced rates `C_M * i / points`,
/// `i = 0..points`, i.e. `[0, C_M)`.
pub fn gamma_curve(triple: &ChannelTriple, points: usize, tol: f64) -> Result<GammaCurve> {
    let cap = channel_capacity(triple.main(), (tol * 1e-3).max(1e-13))?;
    let rates: Vec<f64> = (0..points).map(|i| cap.value * i as f64 / points as f64).collect();
    let points = rates
        .into_par_iter()
        .map(|r| gamma(triple, r, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(GammaCurve { c_m: cap.value, points })
}
