//! Converse bounds for finite-state secure transmission of an individual
//! sequence: the bandwidth-expansion lower bounds without and with decoder
//! side information, and the local-randomness lower bound.
//!
//! Reports keep every term so the bound can be recomputed by hand, and never
//! clamp a negative numerator: such bounds are flagged `vacuous` instead.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::binary_entropy;
use crate::parsing::{conditional_lz_complexity, lz_complexity, SymbolSequence};

/// Parameters shared by the bound evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    /// Source symbols per encoder step.
    pub k: usize,
    /// Channel symbols per encoder step.
    pub m: usize,
    /// Encoder states.
    pub q_e: usize,
    /// Decoder states.
    pub q_d: usize,
    pub eps_r: f64,
    pub eps_s: f64,
    /// Finite-n slack in the entropy-vs-LZ inequality; 0 gives the most
    /// optimistic evaluation.
    pub eps_n: f64,
    /// Source alphabet size.
    pub alpha: usize,
    /// Side-information alphabet size.
    pub omega: usize,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            k: 1,
            m: 1,
            q_e: 1,
            q_d: 1,
            eps_r: 0.0,
            eps_s: 0.0,
            eps_n: 0.0,
            alpha: 2,
            omega: 2,
        }
    }
}

impl BoundParams {
    /// Bandwidth expansion factor `m / k`.
    pub fn lambda(&self) -> f64 {
        self.m as f64 / self.k as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.m == 0 {
            return Err(Error::invalid("block lengths k and m must be positive"));
        }
        if self.q_e == 0 || self.q_d == 0 {
            return Err(Error::invalid("state counts must be positive"));
        }
        if !(0.0..=1.0).contains(&self.eps_r) {
            return Err(Error::invalid(format!("eps_r = {} outside [0, 1]", self.eps_r)));
        }
        if !(self.eps_s >= 0.0) {
            return Err(Error::invalid(format!("eps_s = {} is negative", self.eps_s)));
        }
        if !(0.0..1.0).contains(&self.eps_n) {
            return Err(Error::invalid(format!("eps_n = {} outside [0, 1)", self.eps_n)));
        }
        if self.alpha == 0 || self.omega == 0 {
            return Err(Error::EmptyAlphabet);
        }
        Ok(())
    }
}

/// `Delta(eps_r) = h2(eps_r) + eps_r log(alpha - 1)`.
pub fn delta_eps(eps_r: f64, alpha: usize) -> Result<f64> {
    if alpha < 2 {
        return Err(Error::invalid(format!("alphabet size must be at least 2, got {alpha}")));
    }
    let h = binary_entropy(eps_r)?;
    Ok(h + if eps_r > 0.0 { eps_r * ((alpha - 1) as f64).log2() } else { 0.0 })
}

/// Positive divisors of `n` in ascending order.
pub fn divisors(n: usize) -> Vec<usize> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// A minimized redundancy term and the block multiplier that achieves it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Redundancy {
    pub value: f64,
    pub ell_star: usize,
}

fn check_divides(n: usize, k: usize) -> Result<usize> {
    if n == 0 || k == 0 || n % k != 0 {
        return Err(Error::NotDivisible {
            what: "sequence length",
            n,
            by: k,
        });
    }
    Ok(n / k)
}

/// `2^x` with overflow mapped to `+inf`.
fn exp2_clamped(x: f64) -> f64 {
    if x > 1000.0 {
        f64::INFINITY
    } else {
        x.exp2()
    }
}

/// Bracketed expression of the redundancy term without side information,
/// at a single `ell`.
pub fn zeta_term(n: usize, params: &BoundParams, ell: usize) -> f64 {
    let (first, rest) = zeta_parts(n, params, ell);
    first + rest
}

/// `(term depending on q_d, terms increasing in ell)`.
fn zeta_parts(n: usize, params: &BoundParams, ell: usize) -> (f64, f64) {
    let kl = (params.k * ell) as f64;
    let log_a = (params.alpha as f64).log2();
    let log_n = (n as f64).log2();
    let first = ((params.q_d as f64).log2() + 1.0) / kl;
    let second = 2.0 * kl * (log_a + 1.0).powi(2) / ((1.0 - params.eps_n) * log_n);
    let third = if log_a == 0.0 {
        0.0
    } else {
        // 2 kl alpha^{2 kl} log(alpha) / n in log-space
        exp2_clamped((2.0 * kl).log2() + 2.0 * kl * log_a + log_a.log2() - log_n)
    };
    (first, second + third)
}

/// Bracketed expression of the redundancy term with side information, at a
/// single `ell`.
pub fn eta_term(n: usize, params: &BoundParams, ell: usize) -> f64 {
    let (first, rest) = eta_parts(n, params, ell);
    first + rest
}

/// `log2 A` for `A = ((a w)^{K+1} - 1) / (a w - 1)`.
fn log2_a(ao: f64, big_k: f64) -> f64 {
    let e = (big_k + 1.0) * ao.log2();
    // log2(ao^{K+1} - 1) = e + log2(1 - 2^{-e})
    e + (-(-e).exp2()).ln_1p() / std::f64::consts::LN_2 - (ao - 1.0).log2()
}

fn eta_parts(n: usize, params: &BoundParams, ell: usize) -> (f64, f64) {
    let kl = (params.k * ell) as f64;
    let ao = (params.alpha * params.omega) as f64;
    let log_n = (n as f64).log2();
    let log_a = log2_a(ao, kl);
    // log2(4 A^2) = 2 + 2 log2 A
    let log_4a2 = 2.0 + 2.0 * log_a;
    let first = ((params.q_d as f64 * params.q_e as f64).log2() + 1.0) / kl;
    let second = log_4a2 / ((1.0 - params.eps_n) * log_n);
    let third = exp2_clamped(2.0 * log_a + log_4a2.log2() - log_n);
    (first, second + third)
}

/// Minimizes over divisors of `n/k` in ascending order, stopping once the
/// `ell`-increasing part alone reaches the incumbent (the remaining part is
/// positive and decreasing, so no larger `ell` can win).
fn minimize(
    n: usize,
    params: &BoundParams,
    parts: impl Fn(usize, &BoundParams, usize) -> (f64, f64),
) -> Result<Redundancy> {
    params.validate()?;
    let blocks = check_divides(n, params.k)?;
    let mut best = Redundancy {
        value: f64::INFINITY,
        ell_star: 1,
    };
    for ell in divisors(blocks) {
        let (first, rest) = parts(n, params, ell);
        if rest >= best.value {
            break;
        }
        let value = first + rest;
        if value < best.value {
            best = Redundancy { value, ell_star: ell };
        }
    }
    Ok(best)
}

/// `zeta_n(q_d, k)`: minimum over divisors `ell` of `n/k`.
pub fn zeta_n(n: usize, params: &BoundParams) -> Result<Redundancy> {
    minimize(n, params, zeta_parts)
}

/// `eta_n(q_e q_d, k)`: minimum over divisors `ell` of `n/k`.
pub fn eta_n(n: usize, params: &BoundParams) -> Result<Redundancy> {
    if params.alpha * params.omega < 2 {
        return Err(Error::invalid("side-information bound needs alpha * omega >= 2"));
    }
    minimize(n, params, eta_parts)
}

/// Named terms of a bandwidth-expansion bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundTerms {
    /// `rho_LZ(u^n)` or `rho_LZ(u^n | w^n)`.
    pub rho: f64,
    pub delta: f64,
    pub eps_s: f64,
    /// `zeta_n` or `eta_n`.
    pub redundancy: f64,
    pub c_s: f64,
}

impl BoundTerms {
    pub fn numerator(&self) -> f64 {
        self.rho - self.delta - self.eps_s - self.redundancy
    }

    pub fn value(&self) -> f64 {
        self.numerator() / self.c_s
    }
}

/// An evaluated lower bound on the bandwidth expansion factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound_value: f64,
    pub terms: BoundTerms,
    pub ell_star: usize,
    /// Numerator `<= 0`: the bound says nothing.
    pub vacuous: bool,
    pub n: usize,
    pub eps_n: f64,
    /// Evaluation on a truncated prefix, offered when `n/k` is prime.
    pub truncated: Option<Box<BoundReport>>,
}

impl BoundReport {
    fn from_terms(terms: BoundTerms, ell_star: usize, n: usize, eps_n: f64) -> Self {
        BoundReport {
            bound_value: terms.value(),
            terms,
            ell_star,
            vacuous: terms.numerator() <= 0.0,
            n,
            eps_n,
            truncated: None,
        }
    }
}

fn is_prime(n: usize) -> bool {
    n >= 2 && divisors(n).len() == 2
}

/// Largest multiple of `k * floor(sqrt(log2 n))` not exceeding `n`, used
/// when `n/k` is prime. `None` when it would not change anything.
pub fn truncated_length(n: usize, k: usize) -> Option<usize> {
    let ell = ((n as f64).log2().sqrt().floor() as usize).max(1);
    let step = k * ell;
    let shorter = n - n % step;
    (ell > 1 && shorter > 0 && shorter < n).then_some(shorter)
}

fn check_cs(c_s: f64) -> Result<()> {
    if !(c_s > 0.0) {
        return Err(Error::NoSecrecyCapacity(c_s));
    }
    Ok(())
}

/// Lower bound on `lambda` from the LZ complexity of `u^n`.
pub fn theorem1_bound(u: &SymbolSequence, params: &BoundParams, c_s: f64) -> Result<BoundReport> {
    check_cs(c_s)?;
    let n = u.len();
    let params = BoundParams { alpha: u.alphabet().size(), ..*params };
    let z = zeta_n(n, &params)?;
    let terms = BoundTerms {
        rho: lz_complexity(u)?,
        delta: delta_eps(params.eps_r, params.alpha.max(2))?,
        eps_s: params.eps_s,
        redundancy: z.value,
        c_s,
    };
    let mut report = BoundReport::from_terms(terms, z.ell_star, n, params.eps_n);
    if is_prime(n / params.k) {
        if let Some(shorter) = truncated_length(n, params.k) {
            report.truncated = Some(Box::new(theorem1_bound(&u.prefix(shorter), &params, c_s)?));
        }
    }
    Ok(report)
}

/// Lower bound on `lambda` from the conditional LZ complexity of `u^n` given `w^n`.
pub fn theorem3_bound(
    u: &SymbolSequence,
    w: &SymbolSequence,
    params: &BoundParams,
    c_s: f64,
) -> Result<BoundReport> {
    check_cs(c_s)?;
    if u.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: w.len(),
        });
    }
    let n = u.len();
    let params = BoundParams {
        alpha: u.alphabet().size(),
        omega: w.alphabet().size(),
        ..*params
    };
    let e = eta_n(n, &params)?;
    let terms = BoundTerms {
        rho: conditional_lz_complexity(u, w)?,
        delta: delta_eps(params.eps_r, params.alpha.max(2))?,
        eps_s: params.eps_s,
        redundancy: e.value,
        c_s,
    };
    let mut report = BoundReport::from_terms(terms, e.ell_star, n, params.eps_n);
    if is_prime(n / params.k) {
        if let Some(shorter) = truncated_length(n, params.k) {
            report.truncated = Some(Box::new(theorem3_bound(
                &u.prefix(shorter),
                &w.prefix(shorter),
                &params,
                c_s,
            )?));
        }
    }
    Ok(report)
}

/// Assembles a bound from precomputed terms.
pub fn bound_from_terms(terms: BoundTerms, ell_star: usize, n: usize, eps_n: f64) -> Result<BoundReport> {
    check_cs(terms.c_s)?;
    Ok(BoundReport::from_terms(terms, ell_star, n, eps_n))
}

/// Lower bound on the random bits `j` per encoder step:
/// `m I(X*;Z*) - k eps_s - log(q_e) / ell`.
pub fn theorem2_bound(params: &BoundParams, ell: usize, i_xz_star: f64) -> Result<f64> {
    if ell == 0 {
        return Err(Error::invalid("ell must be positive"));
    }
    params.validate()?;
    Ok(randomness_bound(params.m, params.k, params.eps_s, params.q_e, ell, i_xz_star))
}

/// `m I - k eps_s - log(q_e) / ell` without parameter validation; `k` may be 0.
pub fn randomness_bound(m: usize, k: usize, eps_s: f64, q_e: usize, ell: usize, i_xz_star: f64) -> f64 {
    m as f64 * i_xz_star - k as f64 * eps_s - (q_e as f64).log2() / ell as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: usize) -> Vec<usize> {
        (1..=n).filter(|d| n % d == 0).collect()
    }

    #[test]
    fn delta_values() {
        assert_eq!(delta_eps(0.0, 5).unwrap(), 0.0);
        assert!((delta_eps(0.5, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!((delta_eps(0.5, 4).unwrap() - 1.7925).abs() < 1e-4);
        assert!(delta_eps(1.5, 2).is_err());
        assert!(delta_eps(0.1, 1).is_err());
    }

    #[test]
    fn divisor_lists() {
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(divisors(1), vec![1]);
        assert_eq!(divisors(1024).len(), 11);
        for n in 1..500 {
            assert_eq!(divisors(n), trial_division(n));
        }
    }

    #[test]
    fn zeta_examples() {
        let p = BoundParams::default();
        let z = zeta_n(1024, &p).unwrap();
        assert_eq!(z.ell_star, 1);
        assert!((z.value - 1.8078).abs() < 5e-5);
        // 1 + 8/10 + 8/1024
        assert!((z.value - (1.0 + 0.8 + 8.0 / 1024.0)).abs() < 1e-12);

        let p8 = BoundParams { q_d: 8, ..p };
        let z = zeta_n(1 << 20, &p8).unwrap();
        assert_eq!(z.ell_star, 4);
        assert!((z.value - 2.602).abs() < 5e-4);
    }

    #[test]
    fn zeta_monotone_in_decoder_states() {
        let mut last = 0.0;
        for q_d in 1..40 {
            let z = zeta_n(4096, &BoundParams { q_d, ..Default::default() }).unwrap();
            assert!(z.value >= last);
            last = z.value;
        }
    }

    #[test]
    fn eta_example() {
        let p = BoundParams::default();
        let e = eta_n(1024, &p).unwrap();
        assert_eq!(e.ell_star, 1);
        let expected = 1.0 + 100f64.log2() / 10.0 + 25.0 * 100f64.log2() / 1024.0;
        assert!((e.value - expected).abs() < 1e-12);
        assert!((e.value - 1.826).abs() < 1e-3);
        let degenerate = BoundParams { alpha: 1, omega: 1, ..p };
        assert!(eta_n(1024, &degenerate).is_err());
    }

    #[test]
    fn eta_monotone_in_state_product() {
        let a = eta_n(2048, &BoundParams { q_e: 2, q_d: 2, ..Default::default() }).unwrap();
        let b = eta_n(2048, &BoundParams { q_e: 4, q_d: 2, ..Default::default() }).unwrap();
        assert!(b.value >= a.value);
    }

    #[test]
    fn not_divisible() {
        let p = BoundParams { k: 3, ..Default::default() };
        assert!(matches!(zeta_n(1024, &p), Err(Error::NotDivisible { .. })));
    }

    #[test]
    fn bound_arithmetic() {
        let t = BoundTerms { rho: 0.5, delta: 0.0, eps_s: 0.01, redundancy: 0.2, c_s: 0.2111 };
        let r = bound_from_terms(t, 1, 100, 0.0).unwrap();
        assert!((r.bound_value - 1.3737).abs() < 1e-4);
        assert!(!r.vacuous);

        let t = BoundTerms { rho: 0.4, delta: 0.0, eps_s: 0.01, redundancy: 0.15, c_s: 0.2111 };
        assert!((bound_from_terms(t, 1, 100, 0.0).unwrap().bound_value - 1.1369).abs() < 1e-4);

        let t = BoundTerms { rho: 0.31, delta: 0.1, eps_s: 0.01, redundancy: 0.2, c_s: 0.5 };
        let r = bound_from_terms(t, 1, 100, 0.0).unwrap();
        assert!(r.bound_value.abs() < 1e-15);
        assert!(r.vacuous);

        assert!(matches!(bound_from_terms(BoundTerms { c_s: 0.0, ..t }, 1, 1, 0.0), Err(Error::NoSecrecyCapacity(_))));
    }

    #[test]
    fn bound_monotone_in_leakage_and_redundancy() {
        let base = BoundTerms { rho: 0.9, delta: 0.05, eps_s: 0.0, redundancy: 0.1, c_s: 0.3 };
        let mut last = f64::INFINITY;
        for i in 0..20 {
            let v = BoundTerms { eps_s: i as f64 * 0.01, ..base }.value();
            assert!(v <= last);
            last = v;
        }
        last = f64::INFINITY;
        for i in 0..20 {
            let v = BoundTerms { redundancy: i as f64 * 0.05, ..base }.value();
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn randomness_bound() {
        let p = BoundParams { m: 5, eps_s: 0.0, q_e: 1, ..Default::default() };
        assert!((theorem2_bound(&p, 3, 0.4).unwrap() - 2.0).abs() < 1e-15);

        let p = BoundParams { k: 2, m: 3, eps_s: 0.01, q_e: 2, ..Default::default() };
        let i = 1.0 - binary_entropy(0.18).unwrap();
        assert!((i - 0.3199).abs() < 1e-4);
        let j = theorem2_bound(&p, 4, i).unwrap();
        assert!((j - (3.0 * i - 0.02 - 0.25)).abs() < 1e-15);
        assert!((j - 0.6897).abs() < 1e-3);
        assert!(theorem2_bound(&p, 4, 0.0).unwrap() <= 0.0);
    }

    #[test]
    fn self_side_information_is_vacuous() {
        let u = SymbolSequence::binary(&"0110100110010110".repeat(8));
        let r = theorem3_bound(&u, &u, &BoundParams::default(), 0.2).unwrap();
        assert_eq!(r.terms.rho, 0.0);
        assert!(r.vacuous);
    }

    #[test]
    fn prime_block_count_offers_truncation() {
        // n = 1031 is prime
        let u = SymbolSequence::binary(&"0110".repeat(258)[..1031]);
        let r = theorem1_bound(&u, &BoundParams::default(), 0.5).unwrap();
        let t = r.truncated.expect("truncated evaluation");
        assert_eq!(t.n, 1029);
        assert_eq!(t.n % 3, 0);
        assert_eq!(truncated_length(1024, 1), Some(1023));
        assert_eq!(truncated_length(3, 1), None);
    }
}
