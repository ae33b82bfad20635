//! Kloosterman sums with the half-integral weight multiplier, Bessel
//! functions of half-integer order, and the Petersson-type inequality for a
//! single normalized theta series.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::arith::{divisor_count, gcd, jacobi_symbol, mod_inverse};
use crate::error::{domain, Result};
use crate::modular::ThetaFamily;

/// `ε_d`: 1 for `d ≡ 1 (mod 4)`, `i` for `d ≡ 3 (mod 4)`.
pub fn epsilon_d(d: i64) -> Result<Complex64> {
    match d.rem_euclid(4) {
        1 => Ok(Complex64::new(1.0, 0.0)),
        3 => Ok(Complex64::new(0.0, 1.0)),
        _ => domain(format!("ε_d needs odd d, got {d}")),
    }
}

/// `i^e` for an integer exponent, exactly.
fn i_pow(e: i64) -> Complex64 {
    match e.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `ε_d^{-2k} (c/d)` with `2k = two_k`, as an exact unit or zero.
fn multiplier(c: i64, d: i64, two_k: i64) -> Complex64 {
    let eps_power = if d.rem_euclid(4) == 1 { 0 } else { -two_k };
    let symbol = jacobi_symbol(c, d).unwrap_or(0) as f64;
    i_pow(eps_power) * symbol
}

fn check_args(c: i64, two_k: i64) -> Result<()> {
    if c <= 0 || c % 4 != 0 {
        return domain(format!("modulus must be a positive multiple of 4, got {c}"));
    }
    if two_k % 2 == 0 {
        return domain(format!("2k must be odd, got {two_k}"));
    }
    Ok(())
}

/// `K(a, b; c) = Σ_{d mod c, (d,c)=1} ε_d^{-2k} (c/d) e((a d̄ + b d)/c)`,
/// with `d` running over least positive residues. Negative `two_k` gives
/// the sum with the conjugate multiplier.
pub fn kloosterman_sum(a: i64, b: i64, c: i64, two_k: i64) -> Result<Complex64> {
    check_args(c, two_k)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for d in (1..c).step_by(2) {
        if gcd(d as u64, c as u64) != 1 {
            continue;
        }
        let dbar = mod_inverse(d, c)?;
        let phase = ((a as i128 * dbar as i128 + b as i128 * d as i128).rem_euclid(c as i128)) as f64 / c as f64;
        acc += multiplier(c, d, two_k) * Complex64::from_polar(1.0, 2.0 * PI * phase);
    }
    Ok(acc)
}

/// Reference evaluation of [`kloosterman_sum`] that finds inverses by search
/// and evaluates the multiplier from its definition.
pub fn kloosterman_sum_naive(a: i64, b: i64, c: i64, two_k: i64) -> Result<Complex64> {
    check_args(c, two_k)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for d in 1..c {
        let Some(dbar) = (1..c).find(|x| (x * d) % c == 1) else {
            continue;
        };
        let eps = epsilon_d(d)?.powi(-two_k as i32);
        let symbol = jacobi_symbol(c, d)? as f64;
        let angle = 2.0 * PI * ((a * dbar + b * d).rem_euclid(c) as f64 / c as f64);
        acc += eps * symbol * Complex64::new(angle.cos(), angle.sin());
    }
    Ok(acc)
}

/// `(n, c)^{1/2} c^{1/2} τ(c) - |K(n, n; c)|`.
pub fn kloosterman_bound_margin(n: i64, c: i64, two_k: i64) -> Result<f64> {
    let k = kloosterman_sum(n, n, c, two_k)?;
    let g = gcd(n.unsigned_abs(), c as u64) as f64;
    Ok(g.sqrt() * (c as f64).sqrt() * divisor_count(c as u64) as f64 - k.norm())
}

/// `J_{m+1/2}(x)` for `x > 0`.
pub fn bessel_half_integer(m: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("Bessel argument must be positive, got {x}"));
    }
    Ok(bessel_unchecked(m, x))
}

fn bessel_unchecked(m: u32, x: f64) -> f64 {
    let nu = m as f64 + 0.5;
    let pre = (2.0 / (PI * x)).sqrt();
    let j0 = pre * x.sin();
    let j1 = pre * (x.sin() / x - x.cos());
    if m == 0 {
        return j0;
    }
    if x >= nu {
        // Upward recurrence is stable above the order.
        let (mut a, mut b) = (j0, j1);
        for i in 1..m {
            let c = (2.0 * (i as f64 + 0.5) / x) * b - a;
            a = b;
            b = c;
        }
        return b;
    }
    if x * x < 4.0 * (nu + 1.0) {
        return bessel_series(nu, x);
    }
    // Miller's downward recurrence, normalized against the larger of j0, j1.
    let start = m + 20 + x as u32;
    let (mut above, mut cur) = (0.0f64, 1e-280f64);
    let mut at_m = 0.0;
    let mut vals = (0.0, 0.0);
    for i in (0..=start).rev() {
        let below = (2.0 * (i as f64 + 0.5) / x) * cur - above;
        if i == m {
            at_m = cur;
        }
        if i == 1 {
            vals.1 = cur;
        }
        if i == 0 {
            vals.0 = cur;
            break;
        }
        above = cur;
        cur = below;
        if cur.abs() > 1e250 {
            above *= 1e-250;
            cur *= 1e-250;
            at_m *= 1e-250;
            vals.1 *= 1e-250;
        }
    }
    if j0.abs() >= j1.abs() {
        at_m * j0 / vals.0
    } else {
        at_m * j1 / vals.1
    }
}

fn bessel_series(nu: f64, x: f64) -> f64 {
    let h = x / 2.0;
    let mut term = (nu * h.ln() - ln_gamma(nu + 1.0)).exp();
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= -h * h / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// One Petersson-type inequality `|a(n)|²/‖θ‖² ≤ rhs (+ tail)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeterssonCheck {
    pub n: u64,
    pub c_max: u64,
    pub lhs: f64,
    pub rhs: f64,
    /// `(4πn)^{k-1}/Γ(k-1)`, the diagonal term of `rhs`.
    pub leading: f64,
    /// Bound on the Kloosterman terms with `c > c_max`, in `rhs` units.
    pub tail: f64,
    /// `rhs + tail - lhs`.
    pub margin: f64,
    /// Imaginary part of the rotated Kloosterman series relative to
    /// `leading`; zero up to roundoff.
    pub imaginary_residue: f64,
}

/// `Σ_{c ≡ 0 (4), c ≤ c_max} c^{-1} J_{k-1}(4πn/c) K̄(n, n; c)` for each `n`,
/// where `K̄` carries the conjugate multiplier `ε_d^{2k} (c/d)`.
pub fn kloosterman_series(two_k: i64, ns: &[u64], c_max: u64) -> Result<Vec<Complex64>> {
    if two_k < 3 || two_k % 2 == 0 {
        return domain(format!("2k must be odd and at least 3, got {two_k}"));
    }
    let m = ((two_k - 3) / 2) as u32;
    let cs: Vec<u64> = (4..=c_max).step_by(4).collect();
    let per_c: Vec<Vec<Complex64>> = cs
        .par_iter()
        .map(|&c| {
            let ci = c as i64;
            let roots: Vec<Complex64> =
                (0..c).map(|r| Complex64::from_polar(1.0, 2.0 * PI * r as f64 / c as f64)).collect();
            let mut weights = vec![Complex64::new(0.0, 0.0); c as usize];
            for d in (1..ci).step_by(2) {
                if gcd(d as u64, c) != 1 {
                    continue;
                }
                let dbar = mod_inverse(d, ci).unwrap_or(0);
                weights[((d + dbar) % ci) as usize] += multiplier(ci, d, -two_k);
            }
            let support: Vec<(usize, Complex64)> =
                weights.into_iter().enumerate().filter(|(_, w)| w.norm_sqr() > 0.0).collect();
            ns.iter()
                .map(|&n| {
                    let mut k = Complex64::new(0.0, 0.0);
                    for &(r, w) in &support {
                        k += w * roots[((n as u128 * r as u128) % c as u128) as usize];
                    }
                    k * bessel_unchecked(m, 4.0 * PI * n as f64 / c as f64) / c as f64
                })
                .collect()
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); ns.len()];
    for row in &per_c {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    Ok(out)
}

/// Petersson-type inequality for `θ_{m,j}/‖θ_{m,j}‖` at each `n` in `ns`.
pub fn petersson_bound_checks(
    family: &ThetaFamily,
    norm_sq: f64,
    j: usize,
    ns: &[u64],
    c_max: u64,
) -> Result<Vec<PeterssonCheck>> {
    if family.degree % 2 == 1 {
        return domain(format!("odd degree {} has zero theta series", family.degree));
    }
    // A family with no octahedrally invariant part vanishes identically and
    // contributes nothing to the left side.
    let vanishing = family.invariant_dimension() == 0;
    if !vanishing && !(norm_sq > 0.0) {
        return domain(format!("θ_({}, {j}) has zero norm", family.degree));
    }
    if c_max < 4 {
        return domain("c_max must be at least 4");
    }
    let k = family.weight();
    let nu = k - 1.0;
    let two_k = (2 * family.degree + 3) as i64;
    let series = kloosterman_series(two_k, ns, c_max)?;
    // i^{-k} as the principal power e^{-iπk/2}.
    let rot = Complex64::from_polar(1.0, -PI * k / 2.0);
    let t = (c_max / 4) as f64;
    ns.iter()
        .zip(series)
        .map(|(&n, s)| {
            let a = family.coefficient(j, n)?;
            let lhs = if vanishing { 0.0 } else { a * a / norm_sq };
            let scale = (4.0 * PI * n as f64).powf(nu) / gamma(nu);
            let rotated = rot * s;
            let rhs = scale * (1.0 + 2.0 * PI * rotated.re);
            // |J| ≤ (x/2)^ν/Γ(ν+1), |K| ≤ (n,c)^{1/2} c^{1/2} τ(c) ≤ 2 √n c.
            let per_c = 2.0 * (n as f64).sqrt() * (2.0 * PI * n as f64).powf(nu) / gamma(nu + 1.0);
            let tail_sum = per_c * 4f64.powf(-nu) * t.powf(1.0 - nu) / (nu - 1.0);
            let tail = scale * 2.0 * PI * tail_sum;
            Ok(PeterssonCheck {
                n,
                c_max,
                lhs,
                rhs,
                leading: scale,
                tail,
                margin: rhs + tail - lhs,
                imaginary_residue: 2.0 * PI * rotated.im,
            })
        })
        .collect()
}

/// Single-`n` form of [`petersson_bound_checks`].
pub fn petersson_bound_check(
    family: &ThetaFamily,
    norm_sq: f64,
    j: usize,
    n: u64,
    c_max: u64,
) -> Result<PeterssonCheck> {
    Ok(petersson_bound_checks(family, norm_sq, j, &[n], c_max)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modular::GridSpec;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_d(1).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(epsilon_d(3).unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(epsilon_d(7).unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(epsilon_d(-1).unwrap(), Complex64::new(0.0, 1.0));
        assert!(epsilon_d(4).is_err());
    }

    #[test]
    fn hand_example() {
        let k = kloosterman_sum(0, 0, 4, 5).unwrap();
        assert!(close(k, Complex64::new(1.0, -1.0), 1e-15), "{k}");
        assert!(close(kloosterman_sum_naive(0, 0, 4, 5).unwrap(), Complex64::new(1.0, -1.0), 1e-15));
        assert!(kloosterman_sum(1, 1, 6, 5).is_err());
        assert!(kloosterman_sum(1, 1, 0, 5).is_err());
        assert!(kloosterman_sum(1, 1, 8, 4).is_err());
    }

    #[test]
    fn dual_implementations_agree() {
        for c in [4, 8, 12, 16] {
            for a in -10..=10 {
                for b in -10..=10 {
                    for two_k in [5, 7, 9] {
                        let x = kloosterman_sum(a, b, c, two_k).unwrap();
                        let y = kloosterman_sum_naive(a, b, c, two_k).unwrap();
                        assert!(close(x, y, 1e-12), "{a} {b} {c}: {x} vs {y}");
                    }
                }
            }
        }
    }

    #[test]
    fn periodicity_and_symmetry() {
        for c in [4, 12, 20, 36] {
            for a in 0..8 {
                for b in 0..8 {
                    let k = kloosterman_sum(a, b, c, 7).unwrap();
                    assert_eq!(k, kloosterman_sum(a + c, b, c, 7).unwrap());
                    let neg = kloosterman_sum(-a, -b, c, 7).unwrap();
                    assert!((k.norm() - neg.norm()).abs() < 1e-12);
                    assert!(k.norm() <= c as f64 / 2.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn bound_margin_examples() {
        assert!(kloosterman_bound_margin(1, 4, 5).unwrap() >= 0.0);
        let k = kloosterman_sum(1, 1, 4, 5).unwrap().norm();
        assert!((kloosterman_bound_margin(1, 4, 5).unwrap() - (6.0 - k)).abs() < 1e-14);
        for n in 1..10 {
            let a = kloosterman_bound_margin(n, 12, 7).unwrap();
            let b = kloosterman_bound_margin(n + 12, 12, 7).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bessel_closed_forms() {
        let x = PI / 2.0;
        assert!((bessel_half_integer(0, x).unwrap() - 2.0 / PI).abs() < 1e-15);
        for &x in &[0.01, 0.3, 1.0, 2.5, 7.0, 30.0] {
            let want = (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos());
            let got = bessel_half_integer(1, x).unwrap();
            assert!((got - want).abs() < 1e-12 * want.abs().max(1e-3), "x={x}");
        }
        assert!(bessel_half_integer(2, 0.0).is_err());
    }

    #[test]
    fn bessel_recurrence_and_bound() {
        for m in 1..12u32 {
            let nu = m as f64 + 0.5;
            for i in 1..400 {
                let x = i as f64 * 0.125;
                let (a, b, c) = (
                    bessel_unchecked(m - 1, x),
                    bessel_unchecked(m, x),
                    bessel_unchecked(m + 1, x),
                );
                let scale = a.abs().max(b.abs()).max(c.abs()).max(1e-300);
                assert!((a + c - 2.0 * nu / x * b).abs() < 1e-10 * scale.max(1.0), "m={m} x={x}");
                assert!(b <= (x / 2.0).powf(nu) / gamma(nu + 1.0) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn bessel_matches_series_across_regimes() {
        for m in 0..10u32 {
            let nu = m as f64 + 0.5;
            for &x in &[0.05, 0.7, 2.0, 4.0, 6.0, 9.0] {
                let got = bessel_unchecked(m, x);
                let want = bessel_series(nu, x);
                assert!((got - want).abs() < 1e-11 * want.abs().max(1e-6), "m={m} x={x}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn petersson_inequality_holds() {
        let fam = ThetaFamily::new(4, 600).unwrap();
        let norms = fam.l2_norms(GridSpec::default()).unwrap();
        let odd = ThetaFamily::new(3, 600).unwrap();
        assert!(petersson_bound_check(&odd, 0.0, 0, 1, 100).is_err());
        for j in 0..fam.dimension() {
            if norms[j] == 0.0 {
                continue;
            }
            let ns: Vec<u64> = (1..=20).collect();
            for chk in petersson_bound_checks(&fam, norms[j], j, &ns, 2000).unwrap() {
                assert!(chk.margin >= 0.0, "{chk:?}");
                assert!(chk.imaginary_residue.abs() < 1e-12, "{chk:?}");
                // S_{11/2}(Γ₀(4)) is one-dimensional, so the inequality is an equality.
                assert!((chk.lhs - chk.rhs).abs() < 1e-4 * chk.leading, "{chk:?}");
            }
        }
    }

    #[test]
    fn weight_seven_halves_space_is_empty() {
        // S_{7/2}(Γ₀(4)) = 0, so the Kloosterman side must cancel the
        // diagonal term.
        let fam = ThetaFamily::new(2, 40).unwrap();
        let ns: Vec<u64> = (1..=12).collect();
        for chk in petersson_bound_checks(&fam, 0.0, 0, &ns, 4000).unwrap() {
            assert_eq!(chk.lhs, 0.0);
            assert!(chk.rhs.abs() < 1e-6 * chk.leading + chk.tail, "{chk:?}");
        }
    }
}
