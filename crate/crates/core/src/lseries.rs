//! The Dirichlet series `L(s) = Σ |b(n)|² / (‖θ‖² n^s)` of a theta series,
//! its gamma factor and completion, residue estimates at `s = 1`, and the
//! summed coefficient mass `𝓕_X`.

use std::f64::consts::PI;
use std::sync::Arc;

use statrs::function::gamma::{gamma, ln_gamma};

use crate::arith::residue_class_member;
use crate::error::{domain, Result};
use crate::modular::{ThetaFamily, ThetaSeries};

/// Exponent in the divisor bound `τ(n) ≤ C_δ n^δ` used for tail bounds.
pub const DIVISOR_EXPONENT: f64 = 0.125;

/// Head sum of `L_{k,j}(s)` over `n ≤ cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPartial {
    pub m: u32,
    pub j: usize,
    pub s: f64,
    pub cutoff: u64,
    pub value: f64,
    /// Upper bound on `Σ_{n > cutoff}`; infinite when `s ≤ 7/4`.
    pub tail_bound: f64,
    /// `Σ_{n > cutoff}` assuming the mean of `|b(n)|²/‖θ‖²` over
    /// `(cutoff/2, cutoff]` persists.
    pub tail_estimate: f64,
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// `C_δ = Π_{p < 2^{1/δ}} max_a (a+1)/p^{aδ}`, so that `τ(n) ≤ C_δ n^δ`.
pub fn divisor_bound_constant(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return domain(format!("divisor exponent must lie in (0, 1], got {delta}"));
    }
    let limit = 2f64.powf(1.0 / delta);
    let mut c = 1.0;
    for p in (2..limit.ceil() as u64).filter(|&p| is_prime(p)) {
        let mut best: f64 = 1.0;
        for a in 1..200 {
            let v = (a as f64 + 1.0) / (p as f64).powf(a as f64 * delta);
            best = best.max(v);
        }
        c *= best;
    }
    Ok(c)
}

/// Upper bound on `|b_{m,j}(n)|²`: with `r₃(n) ≤ 4 C_δ n^δ (2√n + 1)` and
/// `|φ| ≤ √(2m+1)` on the sphere, `|b(n)|² ≤ (2m+1) r₃(n)² n^{-1/2}`.
fn b_squared_bound(m: u32, c_delta: f64, n: f64) -> f64 {
    let r3 = 4.0 * c_delta * n.powf(DIVISOR_EXPONENT) * (2.0 * n.sqrt() + 1.0);
    (2 * m + 1) as f64 * r3 * r3 / n.sqrt()
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 1.0) || !s.is_finite() {
        return domain(format!("s must exceed 1, got {s}"));
    }
    Ok(())
}

fn positive_norm(theta: &ThetaSeries) -> Result<f64> {
    let norm = theta.l2_norm_sq()?;
    if !(norm > 0.0) {
        return domain(format!("θ_({}, {}) has zero norm", theta.degree(), theta.j));
    }
    Ok(norm)
}

fn series_for(m: u32, j: usize, max_n: u64) -> Result<ThetaSeries> {
    ThetaSeries::new(Arc::new(ThetaFamily::new(m, max_n.max(1))?), j)
}

/// Tail bound for `Σ_{n > cutoff} |b(n)|²/(‖θ‖² n^s)` by the integral test.
fn dirichlet_tail(m: u32, norm: f64, s: f64, cutoff: u64) -> Result<f64> {
    let excess = s - 1.5 - 2.0 * DIVISOR_EXPONENT;
    if excess <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let c_delta = divisor_bound_constant(DIVISOR_EXPONENT)?;
    let n = cutoff.max(1) as f64;
    // b² n^{-s} ≤ K n^{-excess-1} (1 + 1/(2√n))², decreasing in n.
    let k = b_squared_bound(m, c_delta, n) / (n.powf(0.5 + 2.0 * DIVISOR_EXPONENT));
    let head_term = if cutoff == 0 { k } else { 0.0 };
    Ok((head_term + k * n.powf(-excess) / excess) / norm)
}

/// `Σ_{n ≤ cutoff} |b(n)|² / (‖θ‖² n^s)` with a tail bound.
pub fn dirichlet_partial_for(theta: &ThetaSeries, s: f64, cutoff: u64) -> Result<DirichletPartial> {
    check_s(s)?;
    let norm = positive_norm(theta)?;
    theta.family.check(theta.j, cutoff)?;
    let mut value = 0.0;
    let mut upper_half = 0.0;
    for n in 1..=cutoff {
        let b = theta.b(n)?;
        value += b * b / (n as f64).powf(s);
        if 2 * n > cutoff {
            upper_half += b * b;
        }
    }
    let tail_estimate = if cutoff < 2 {
        0.0
    } else {
        let density = upper_half / (cutoff - cutoff / 2) as f64 / norm;
        let c = cutoff as f64 + 0.5;
        density * c.powf(1.0 - s) / (s - 1.0)
    };
    Ok(DirichletPartial {
        m: theta.degree(),
        j: theta.j,
        s,
        cutoff,
        value: value / norm,
        tail_bound: dirichlet_tail(theta.degree(), norm, s, cutoff)?,
        tail_estimate,
    })
}

/// [`dirichlet_partial_for`] on a freshly built `θ_{m,j}`.
pub fn dirichlet_partial(m: u32, j: usize, s: f64, cutoff: u64) -> Result<DirichletPartial> {
    check_s(s)?;
    dirichlet_partial_for(&series_for(m, j, cutoff)?, s, cutoff)
}

/// `γ(k, s) = Γ(s) Γ(s + k - 1)`.
pub fn gamma_factor(k: f64, s: f64) -> Result<f64> {
    check_gamma_args(k, s)?;
    Ok(gamma(s) * gamma(s + k - 1.0))
}

/// `ln γ(k, s)`.
pub fn ln_gamma_factor(k: f64, s: f64) -> Result<f64> {
    check_gamma_args(k, s)?;
    Ok(ln_gamma(s) + ln_gamma(s + k - 1.0))
}

fn check_gamma_args(k: f64, s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return domain(format!("gamma factor needs s > 0, got {s}"));
    }
    if !(k >= 1.0) || (2.0 * k).fract() != 0.0 {
        return domain(format!("weight must be a half-integer at least 1, got {k}"));
    }
    Ok(())
}

/// `ζ(σ)` for real `σ > 1` by direct summation of `terms` terms plus the
/// trapezoid tail estimate; returns `(value, error_bound)`.
pub fn zeta_real(sigma: f64, terms: u64) -> Result<(f64, f64)> {
    if !(sigma > 1.0) {
        return domain(format!("ζ(σ) needs σ > 1, got {sigma}"));
    }
    let n = terms.max(1);
    let head: f64 = (1..=n).rev().map(|i| (i as f64).powf(-sigma)).sum();
    let nf = n as f64;
    // Σ_{i>n} i^{-σ} lies between ∫_{n+1}^∞ and ∫_n^∞.
    let upper = nf.powf(1.0 - sigma) / (sigma - 1.0);
    let lower = (nf + 1.0).powf(1.0 - sigma) / (sigma - 1.0);
    let estimate = upper - 0.5 * nf.powf(-sigma);
    Ok((head + estimate, (upper - lower).max(upper - estimate)))
}

const ZETA_TERMS: u64 = 100_000;

fn completion_factor(k: f64, s: f64) -> Result<f64> {
    let (zeta, _) = zeta_real(2.0 * s, ZETA_TERMS)?;
    let log_scale = -2.0 * (s + k - 1.0) * (2.0 * PI).ln() + ln_gamma_factor(k, s)?;
    Ok(zeta * log_scale.exp())
}

/// `Λ(s)` head: `ζ(2s) (2π)^{-2(s+k-1)} γ(k, s) L_partial(s)`.
pub fn completed_lambda_partial_for(theta: &ThetaSeries, s: f64, cutoff: u64) -> Result<f64> {
    let l = dirichlet_partial_for(theta, s, cutoff)?;
    Ok(completion_factor(theta.weight(), s)? * l.value)
}

/// `Λ(s)` with the head completed by [`DirichletPartial::tail_estimate`].
pub fn completed_lambda_estimate_for(theta: &ThetaSeries, s: f64, cutoff: u64) -> Result<f64> {
    let l = dirichlet_partial_for(theta, s, cutoff)?;
    Ok(completion_factor(theta.weight(), s)? * (l.value + l.tail_estimate))
}

/// [`completed_lambda_partial_for`] on a freshly built `θ_{m,j}`.
pub fn completed_lambda_partial(m: u32, j: usize, s: f64, cutoff: u64) -> Result<f64> {
    check_s(s)?;
    completed_lambda_partial_for(&series_for(m, j, cutoff)?, s, cutoff)
}

/// `𝓕_X = Σ_j Σ_{n ≤ X} |b_{m,j}(n)|²` over the whole degree-`m` basis.
pub fn fx_sum_for(family: &ThetaFamily, x: u64) -> Result<f64> {
    fx_sum_over(family, x, true)
}

/// `𝓕_X` over all `n ≤ X`, or over eligible `n` only when `complete_sum`
/// is false.
pub fn fx_sum_over(family: &ThetaFamily, x: u64, complete_sum: bool) -> Result<f64> {
    if x < 1 {
        return domain("X must be at least 1");
    }
    family.check(0, x)?;
    let mut total = 0.0;
    for j in 0..family.dimension() {
        for n in (1..=x).filter(|&n| complete_sum || residue_class_member(n)) {
            let b = family.normalized_coefficient(j, n)?;
            total += b * b;
        }
    }
    Ok(total)
}

/// [`fx_sum_for`] on a freshly built degree-`m` family; `m = 0` has no
/// theta family and odd `m` gives 0.
pub fn fx_sum(x: u64, m: u32) -> Result<f64> {
    if x < 1 {
        return domain("X must be at least 1");
    }
    if m % 2 == 1 {
        return Ok(0.0);
    }
    fx_sum_for(&ThetaFamily::new(m, x)?, x)
}

/// Cesàro estimate of the residue of `L` at `s = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueEstimate {
    pub m: u32,
    pub j: usize,
    pub x: u64,
    /// `(1/X) Σ_{n ≤ X} |b(n)|² / ‖θ‖²`.
    pub raw: f64,
    /// `raw · (4π)^{-k} Γ(k)`.
    pub normalized: f64,
}

pub fn residue_estimate_for(theta: &ThetaSeries, x: u64) -> Result<ResidueEstimate> {
    if x < 100 {
        return domain(format!("X must be at least 100, got {x}"));
    }
    let norm = positive_norm(theta)?;
    theta.family.check(theta.j, x)?;
    let mut sum = 0.0;
    for n in 1..=x {
        let b = theta.b(n)?;
        sum += b * b;
    }
    let raw = sum / norm / x as f64;
    let k = theta.weight();
    let normalized = raw * (ln_gamma(k) - k * (4.0 * PI).ln()).exp();
    Ok(ResidueEstimate { m: theta.degree(), j: theta.j, x, raw, normalized })
}

pub fn residue_estimate(m: u32, j: usize, x: u64) -> Result<ResidueEstimate> {
    if m % 2 == 1 {
        return domain(format!("odd degree {m} has no nonzero theta series"));
    }
    residue_estimate_for(&series_for(m, j, x)?, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta(m: u32, j: usize, n: u64) -> ThetaSeries {
        series_for(m, j, n).unwrap()
    }

    #[test]
    fn divisor_bound_holds() {
        let c = divisor_bound_constant(DIVISOR_EXPONENT).unwrap();
        assert!(c.is_finite() && c > 1.0);
        for n in 1..20_000u64 {
            let tau = crate::arith::divisor_count(n) as f64;
            assert!(tau <= c * (n as f64).powf(DIVISOR_EXPONENT), "{n}");
        }
        assert!(divisor_bound_constant(0.0).is_err());
    }

    #[test]
    fn b_bound_dominates() {
        let c = divisor_bound_constant(DIVISOR_EXPONENT).unwrap();
        let fam = ThetaFamily::new(6, 3000).unwrap();
        for j in 0..fam.dimension() {
            for n in 1..=3000 {
                let b = fam.normalized_coefficient(j, n).unwrap();
                assert!(b * b <= b_squared_bound(6, c, n as f64));
            }
        }
    }

    #[test]
    fn partial_sums_basic() {
        let t = theta(4, 0, 4000);
        let zero = dirichlet_partial_for(&t, 3.0, 0).unwrap();
        assert_eq!(zero.value, 0.0);
        let a = dirichlet_partial_for(&t, 3.0, 100).unwrap();
        let b = dirichlet_partial_for(&t, 3.0, 200).unwrap();
        assert!(a.value <= b.value);
        let c = dirichlet_partial_for(&t, 3.0, 2000).unwrap();
        let d = dirichlet_partial_for(&t, 3.0, 4000).unwrap();
        assert!(d.value - c.value <= c.tail_bound, "{c:?} {d:?}");
        assert!(d.tail_bound < c.tail_bound);
        assert!(dirichlet_partial_for(&t, 1.5, 100).unwrap().tail_bound.is_infinite());
        assert!(dirichlet_partial_for(&t, 1.0, 100).is_err());
        assert!(dirichlet_partial(3, 0, 2.0, 100).is_err());
        assert!(dirichlet_partial(2, 0, 2.0, 100).is_err());
    }

    #[test]
    fn reversed_order_agrees() {
        let t = theta(4, 0, 3000);
        let norm = t.l2_norm_sq().unwrap();
        let p = dirichlet_partial_for(&t, 3.0, 3000).unwrap();
        let mut rev = 0.0;
        for n in (1..=3000u64).rev() {
            let a = t.a(n).unwrap();
            rev += a * a / (n as f64).powf(3.0 + t.weight() - 1.0);
        }
        assert!((p.value - rev / norm).abs() <= 1e-12 * p.value);
    }

    #[test]
    fn gamma_factor_examples() {
        let want = 0.75 * PI.sqrt();
        assert!((gamma_factor(2.5, 1.0).unwrap() - want).abs() < 1e-14);
        let k = 6.5;
        let want = PI.sqrt() * gamma(k - 0.5);
        assert!((gamma_factor(k, 0.5).unwrap() - want).abs() < 1e-12 * want);
        for two_k in 3..=24 {
            let k = two_k as f64 / 2.0;
            for i in 1..=16 {
                let s = i as f64 * 0.25;
                let g = gamma_factor(k, s).unwrap();
                let l = ln_gamma_factor(k, s).unwrap().exp();
                assert!((g - l).abs() <= 1e-12 * g, "k={k} s={s}");
            }
        }
        assert!(gamma_factor(2.5, 0.0).is_err());
        assert!(gamma_factor(2.5, -1.0).is_err());
    }

    #[test]
    fn zeta_values() {
        let (z2, e2) = zeta_real(2.0, 1000).unwrap();
        assert!((z2 - PI * PI / 6.0).abs() < 1e-9 && e2 < 1e-5);
        let (z4, _) = zeta_real(4.0, 1000).unwrap();
        assert!((z4 - PI.powi(4) / 90.0).abs() < 1e-14);
        assert!(zeta_real(1.0, 10).is_err());
    }

    #[test]
    fn completed_lambda_structure() {
        let t = theta(4, 0, 2000);
        let v = completed_lambda_partial_for(&t, 2.0, 2000).unwrap();
        assert!(v.is_finite() && v > 0.0);
        let doubled = ThetaSeries::new(Arc::new(t.family.scaled(2f64.sqrt())), 0).unwrap();
        let norm = t.l2_norm_sq().unwrap();
        let l1 = dirichlet_partial_for(&t, 2.0, 2000).unwrap().value * norm;
        let l2 = dirichlet_partial_for(&doubled, 2.0, 2000).unwrap().value * doubled.l2_norm_sq().unwrap();
        assert!((l2 - 2.0 * l1).abs() < 1e-12 * l2);
    }

    #[test]
    fn completed_lambda_simple_pole() {
        let t = theta(4, 0, 200_000);
        let vals: Vec<f64> = [1.5, 1.25, 1.125, 1.0625]
            .iter()
            .map(|&s| (s - 1.0) * completed_lambda_estimate_for(&t, s, 200_000).unwrap())
            .collect();
        let d1 = (vals[1] - vals[0]).abs();
        let d2 = (vals[2] - vals[1]).abs();
        let d3 = (vals[3] - vals[2]).abs();
        assert!(d2 < d1 && d3 < d2, "{vals:?}");
        let head = completed_lambda_partial_for(&t, 1.5, 200_000).unwrap();
        assert!(head < vals[0] / 0.5);
    }

    #[test]
    fn fx_examples() {
        assert_eq!(fx_sum(100, 3).unwrap(), 0.0);
        assert_eq!(fx_sum(1, 2).unwrap(), 0.0);
        assert!(fx_sum(0, 2).is_err());
        let fam = ThetaFamily::new(4, 8000).unwrap();
        for x in [1000, 2000, 4000] {
            let r = fx_sum_for(&fam, 2 * x).unwrap() / fx_sum_for(&fam, x).unwrap();
            assert!((1.6..=2.4).contains(&r), "X={x}: {r}");
        }
        let lo = fx_sum_for(&fam, 500).unwrap() / 500.0;
        let hi = fx_sum_for(&fam, 8000).unwrap() / 8000.0;
        assert!(lo > 0.0 && hi > 0.0 && (0.5..2.0).contains(&(hi / lo)));
        let eligible = fx_sum_over(&fam, 2000, false).unwrap();
        assert!(eligible > 0.0 && eligible < fx_sum_for(&fam, 2000).unwrap());
    }

    #[test]
    fn fx_equals_basis_free_sum() {
        // Σ_j a_j(n)² = n^m Σ_{x,y} (2m+1) P_m(⟨x,y⟩/n) by the addition law.
        let m = 4u32;
        let fam = ThetaFamily::new(m, 300).unwrap();
        let mut want = 0.0;
        for n in 1..=300u64 {
            let shell = crate::arith::enumerate_shell(n).unwrap();
            let s = crate::variance::weyl_square_sums(&shell, m);
            want += s[m as usize] / (n as f64).sqrt();
        }
        let got = fx_sum_for(&fam, 300).unwrap();
        assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
    }

    #[test]
    fn residue_stabilizes() {
        let fam = Arc::new(ThetaFamily::new(4, 8000).unwrap());
        let t = ThetaSeries::new(fam.clone(), 0).unwrap();
        let a = residue_estimate_for(&t, 2000).unwrap();
        let b = residue_estimate_for(&t, 4000).unwrap();
        assert!(a.normalized > 0.0);
        assert!((a.raw / b.raw - 1.0).abs() < 0.15, "{a:?} {b:?}");
        // Unfolding against the Eisenstein series of Γ₀(4) predicts 1/vol = 1/(2π).
        assert!((b.normalized * 2.0 * PI - 1.0).abs() < 0.05, "{b:?}");
        assert!(residue_estimate(4, 0, 99).is_err());
        assert!(residue_estimate(5, 0, 200).is_err());
    }
}
