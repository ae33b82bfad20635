//! Harmonic homogeneous polynomials on `R^3`, Legendre polynomials and the
//! zonal (Funk–Hecke) transform of rotation-invariant kernels.
//!
//! Bases are orthonormal for the normalized surface measure `σ`, so the
//! addition identity reads `Σ_j φ_j(z)² = 2m + 1` on the unit sphere and a
//! zonal kernel `f(<z, w>)` expands as `Σ_m T(m) (2m+1) P_m(<z, w>)` with
//! `T(m) = ½ ∫ f(t) P_m(t) dt`.

use std::collections::BTreeMap;

use crate::capstat::{cap_area, cap_intersection_area};
use crate::error::{capacity, domain, Result};
use crate::quadrature::GaussLegendre;

/// Largest degree accepted by [`build_basis`].
pub const MAX_BASIS_DEGREE: u32 = 24;

/// Legendre polynomial `P_m(t)` by the three-term recurrence.
pub fn legendre(m: u32, t: f64) -> Result<f64> {
    if !(t.abs() <= 1.0) {
        return domain(format!("Legendre argument {t} outside [-1, 1]"));
    }
    if t == 1.0 {
        return Ok(1.0);
    }
    Ok(legendre_unchecked(m, t))
}

pub(crate) fn legendre_unchecked(m: u32, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if m == 0 {
        return 1.0;
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `P_0(t), ..., P_max(t)`.
pub fn legendre_table(max: u32, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max as usize + 1);
    out.push(1.0);
    if max >= 1 {
        out.push(t);
    }
    for k in 2..=max as usize {
        let kf = k as f64;
        let p = ((2.0 * kf - 1.0) * t * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
        out.push(p);
    }
    out
}

/// A homogeneous polynomial in `x, y, z`, stored as a map from exponent
/// triples to coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    pub terms: BTreeMap<[u32; 3], f64>,
}

impl Poly {
    pub fn monomial(exp: [u32; 3], coef: f64) -> Self {
        let mut terms = BTreeMap::new();
        if coef != 0.0 {
            terms.insert(exp, coef);
        }
        Self { terms }
    }

    pub fn add_scaled(&mut self, other: &Poly, scale: f64) {
        for (e, c) in &other.terms {
            *self.terms.entry(*e).or_insert(0.0) += scale * c;
        }
        self.terms.retain(|_, c| *c != 0.0);
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                *out.terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::monomial([0, 0, 0], 1.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Symbolic Laplacian.
    pub fn laplacian(&self) -> Poly {
        let mut out = Poly::default();
        for (e, c) in &self.terms {
            for axis in 0..3 {
                if e[axis] >= 2 {
                    let mut f = *e;
                    f[axis] -= 2;
                    *out.terms.entry(f).or_insert(0.0) += c * (e[axis] * (e[axis] - 1)) as f64;
                }
            }
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn eval(&self, v: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * v[0].powi(e[0] as i32) * v[1].powi(e[1] as i32) * v[2].powi(e[2] as i32))
            .sum()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }
}

/// `∫ x^a y^b z^c dσ` over the unit sphere with `σ` normalized to mass one.
pub fn sphere_moment(e: [u32; 3]) -> f64 {
    if e.iter().any(|k| k % 2 == 1) {
        return 0.0;
    }
    // (a-1)!!(b-1)!!(c-1)!! / (a+b+c+1)!!, accumulated as a running ratio.
    let mut num: Vec<f64> = Vec::new();
    for &k in &e {
        let mut j = 1;
        while j < k {
            num.push(j as f64);
            j += 2;
        }
    }
    let total = e[0] + e[1] + e[2];
    let mut den: Vec<f64> = Vec::new();
    let mut j = 3;
    while j <= total + 1 {
        den.push(j as f64);
        j += 2;
    }
    let mut value = 1.0;
    let mut ni = num.into_iter();
    for d in den {
        value /= d;
        if let Some(n) = ni.next() {
            value *= n;
        }
    }
    for n in ni {
        value *= n;
    }
    value
}

/// `<p, q>_σ` computed exactly from sphere moments.
pub fn sphere_inner(p: &Poly, q: &Poly) -> f64 {
    let mut acc = 0.0;
    for (ea, ca) in &p.terms {
        for (eb, cb) in &q.terms {
            acc += ca * cb * sphere_moment([ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]]);
        }
    }
    acc
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients of `P_m(t)` in the monomial basis, index = power of `t`.
fn legendre_coefficients(m: u32) -> Vec<f64> {
    let mut c = vec![0.0; m as usize + 1];
    let scale = 0.5f64.powi(m as i32);
    for k in 0..=m / 2 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        c[(m - 2 * k) as usize] = sign * scale * binomial(m, k) * binomial(2 * m - 2 * k, m);
    }
    c
}

/// The `2m + 1` real solid harmonics of degree `m`, unnormalized:
/// `r^{m-q} P_m^{(q)}(z/r)` times the real and imaginary parts of `(x + iy)^q`.
pub fn solid_harmonic_seeds(m: u32) -> Vec<Poly> {
    let mut deriv = legendre_coefficients(m);
    let r2 = {
        let mut p = Poly::monomial([2, 0, 0], 1.0);
        p.add_scaled(&Poly::monomial([0, 2, 0], 1.0), 1.0);
        p.add_scaled(&Poly::monomial([0, 0, 2], 1.0), 1.0);
        p
    };
    let mut seeds = Vec::with_capacity(2 * m as usize + 1);
    // (x + iy)^q as (real, imaginary) parts.
    let mut re = Poly::monomial([0, 0, 0], 1.0);
    let mut im = Poly::default();
    for q in 0..=m {
        // Q(z, r^2) = Σ_i c_i z^i (r^2)^{(m-q-i)/2}
        let mut zonal = Poly::default();
        for (i, &c) in deriv.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let i = i as u32;
            let k = (m - q - i) / 2;
            let term = Poly::monomial([0, 0, i], c).mul(&r2.pow(k));
            zonal.add_scaled(&term, 1.0);
        }
        if q == 0 {
            seeds.push(zonal);
        } else {
            seeds.push(re.mul(&zonal));
            seeds.push(im.mul(&zonal));
        }
        // Advance (x + iy)^q -> (x + iy)^{q+1}.
        let x = Poly::monomial([1, 0, 0], 1.0);
        let y = Poly::monomial([0, 1, 0], 1.0);
        let mut next_re = re.mul(&x);
        next_re.add_scaled(&im.mul(&y), -1.0);
        let mut next_im = re.mul(&y);
        next_im.add_scaled(&im.mul(&x), 1.0);
        re = next_re;
        im = next_im;
        // Differentiate the Legendre polynomial once more.
        deriv = deriv.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
        if deriv.is_empty() {
            deriv.push(0.0);
        }
    }
    seeds
}

/// Exponent triples of degree-`m` monomials in a fixed order.
pub fn monomial_exponents(m: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for a in (0..=m).rev() {
        for b in (0..=m - a).rev() {
            out.push([a, b, m - a - b]);
        }
    }
    out
}

/// A `σ`-orthonormal basis of degree-`m` harmonic homogeneous polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicBasis {
    pub degree: u32,
    pub exponents: Vec<[u32; 3]>,
    /// `polys[j][i]` is the coefficient of `exponents[i]` in `φ_j`.
    pub polys: Vec<Vec<f64>>,
}

impl HarmonicBasis {
    pub fn dimension(&self) -> usize {
        self.polys.len()
    }

    /// Orthonormalizes an arbitrary spanning family of harmonic polynomials
    /// of degree `m` (modified Gram–Schmidt with one reorthogonalization pass).
    pub fn from_seeds(m: u32, seeds: &[Poly]) -> Result<Self> {
        let exponents = monomial_exponents(m);
        let mut ortho: Vec<Poly> = Vec::new();
        for seed in seeds {
            let mut v = seed.clone();
            for _ in 0..2 {
                for u in &ortho {
                    let c = sphere_inner(&v, u);
                    v.add_scaled(u, -c);
                }
            }
            let norm = sphere_inner(&v, &v).sqrt();
            let scale = seed_scale(seed);
            if norm <= 1e-10 * scale {
                continue;
            }
            let mut unit = Poly::default();
            unit.add_scaled(&v, 1.0 / norm);
            ortho.push(unit);
        }
        if ortho.len() != 2 * m as usize + 1 {
            return domain(format!(
                "seed family spans {} dimensions, expected {}",
                ortho.len(),
                2 * m + 1
            ));
        }
        let polys = ortho
            .iter()
            .map(|p| exponents.iter().map(|e| p.terms.get(e).copied().unwrap_or(0.0)).collect())
            .collect();
        Ok(Self { degree: m, exponents, polys })
    }

    pub fn poly(&self, j: usize) -> Poly {
        let mut p = Poly::default();
        for (e, &c) in self.exponents.iter().zip(&self.polys[j]) {
            if c != 0.0 {
                p.terms.insert(*e, c);
            }
        }
        p
    }

    /// Monomial values at `v`, in the order of `exponents`.
    pub fn monomials(&self, v: [f64; 3]) -> Vec<f64> {
        let m = self.degree as usize;
        let pw = |t: f64| {
            let mut p = vec![1.0; m + 1];
            for i in 1..=m {
                p[i] = p[i - 1] * t;
            }
            p
        };
        let (px, py, pz) = (pw(v[0]), pw(v[1]), pw(v[2]));
        self.exponents
            .iter()
            .map(|e| px[e[0] as usize] * py[e[1] as usize] * pz[e[2] as usize])
            .collect()
    }

    /// `φ_j(v)` for every `j`; exact polynomial evaluation.
    pub fn eval(&self, v: [f64; 3]) -> Vec<f64> {
        let mono = self.monomials(v);
        self.polys
            .iter()
            .map(|coeffs| coeffs.iter().zip(&mono).map(|(c, x)| c * x).sum())
            .collect()
    }

    /// Accumulates `φ_j(v)` into `acc[j]`.
    pub fn accumulate(&self, v: [f64; 3], acc: &mut [f64]) {
        let mono = self.monomials(v);
        for (slot, coeffs) in acc.iter_mut().zip(&self.polys) {
            *slot += coeffs.iter().zip(&mono).map(|(c, x)| c * x).sum::<f64>();
        }
    }
}

fn seed_scale(p: &Poly) -> f64 {
    sphere_inner(p, p).sqrt().max(p.max_abs_coefficient() * 1e-3).max(f64::MIN_POSITIVE)
}

/// Builds the deterministic basis from the real solid harmonics.
pub fn build_basis(m: u32) -> Result<HarmonicBasis> {
    if m > MAX_BASIS_DEGREE {
        return capacity(format!("basis degree {m} exceeds ceiling {MAX_BASIS_DEGREE}"));
    }
    HarmonicBasis::from_seeds(m, &solid_harmonic_seeds(m))
}

/// `φ_j(v)` for every basis element.
pub fn eval_basis(basis: &HarmonicBasis, v: [f64; 3]) -> Vec<f64> {
    basis.eval(v)
}

/// A rotation-invariant kernel on the sphere, a function of geodesic distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZonalKernel {
    /// Indicator of a closed cap of angular radius `r`.
    SharpCap(f64),
    /// Disc indicator normalized to unit `σ`-mass.
    Disc(f64),
    /// Sharp cap of radius `r` convolved with the unit-mass disc of radius `ρ`.
    CapConvolvedDisc(f64, f64),
}

impl ZonalKernel {
    pub fn validate(&self) -> Result<()> {
        let ok = |a: f64| a > 0.0 && a < std::f64::consts::PI;
        let valid = match *self {
            ZonalKernel::SharpCap(r) => ok(r) || r == std::f64::consts::PI,
            ZonalKernel::Disc(rho) => ok(rho),
            ZonalKernel::CapConvolvedDisc(r, rho) => (ok(r) || r == std::f64::consts::PI) && ok(rho),
        };
        if valid {
            Ok(())
        } else {
            domain(format!("kernel angles out of range: {self:?}"))
        }
    }

    /// Kernel value at `t = cos d`.
    pub fn value(&self, t: f64) -> f64 {
        let t = t.clamp(-1.0, 1.0);
        match *self {
            ZonalKernel::SharpCap(r) => {
                if t >= r.cos() - 1e-15 {
                    1.0
                } else {
                    0.0
                }
            }
            ZonalKernel::Disc(rho) => {
                if t >= rho.cos() {
                    1.0 / cap_area(rho).unwrap_or(1.0)
                } else {
                    0.0
                }
            }
            ZonalKernel::CapConvolvedDisc(r, rho) => {
                cap_intersection_area(r, rho, t.acos()) / cap_area(rho).unwrap_or(1.0)
            }
        }
    }

    /// Geodesic distances in `[0, π]` where the kernel is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            ZonalKernel::SharpCap(r) => vec![r],
            ZonalKernel::Disc(rho) => vec![rho],
            ZonalKernel::CapConvolvedDisc(r, rho) => {
                vec![(r - rho).abs(), r + rho, 2.0 * std::f64::consts::PI - r - rho]
            }
        }
    }
}

/// `T(m)` for a cap of angular radius `r`, `m ≥ 1`:
/// `(P_{m-1}(cos r) - P_{m+1}(cos r)) / (2(2m+1))`.
pub fn cap_coefficient_closed_form(r: f64, m: u32) -> Result<f64> {
    if m == 0 {
        return domain("use the cap area for the degree-0 coefficient");
    }
    if !(r > 0.0 && r <= std::f64::consts::PI) {
        return domain(format!("cap radius {r} outside (0, π]"));
    }
    let c = r.cos();
    Ok((legendre_unchecked(m - 1, c) - legendre_unchecked(m + 1, c)) / (2.0 * (2 * m + 1) as f64))
}

fn cap_coefficients(r: f64, max: u32) -> Vec<f64> {
    let c = r.cos();
    let p = legendre_table(max + 1, c);
    let mut out = Vec::with_capacity(max as usize + 1);
    out.push((1.0 - c) / 2.0);
    for m in 1..=max as usize {
        out.push((p[m - 1] - p[m + 1]) / (2.0 * (2 * m + 1) as f64));
    }
    out
}

/// Zonal coefficients `T(0..=M)` of a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalCoefficients {
    pub values: Vec<f64>,
}

impl ZonalCoefficients {
    pub fn truncation(&self) -> u32 {
        self.values.len() as u32 - 1
    }
}

/// `T(0), ..., T(max)` in closed form.
pub fn zonal_coefficients(kernel: ZonalKernel, max: u32) -> Result<ZonalCoefficients> {
    kernel.validate()?;
    let values = match kernel {
        ZonalKernel::SharpCap(r) => cap_coefficients(r, max),
        ZonalKernel::Disc(rho) => {
            let area = cap_area(rho)?;
            cap_coefficients(rho, max).into_iter().map(|v| v / area).collect()
        }
        ZonalKernel::CapConvolvedDisc(r, rho) => {
            let area = cap_area(rho)?;
            cap_coefficients(r, max)
                .into_iter()
                .zip(cap_coefficients(rho, max))
                .map(|(a, b)| a * b / area)
                .collect()
        }
    };
    Ok(ZonalCoefficients { values })
}

/// `T(f)(m) = ½ ∫_{-1}^{1} f(t) P_m(t) dt` in closed form.
pub fn zonal_transform(kernel: ZonalKernel, m: u32) -> Result<f64> {
    Ok(zonal_coefficients(kernel, m)?.values[m as usize])
}

/// The same transform by piecewise quadrature of the kernel values, split
/// at the kernel's breakpoints. Each panel uses the substitution
/// `t = a + (b - a)(3s² - 2s³)`, which smooths the algebraic endpoint
/// singularities of the lune area.
pub fn zonal_transform_quadrature(kernel: ZonalKernel, m: u32, nodes: usize) -> Result<f64> {
    use std::f64::consts::PI;
    kernel.validate()?;
    let mut cuts = vec![-1.0, 1.0];
    cuts.extend(
        kernel
            .breakpoints()
            .into_iter()
            .filter(|b| *b > 0.0 && *b < PI)
            .map(f64::cos),
    );
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let rule = GaussLegendre::new(nodes);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        total += rule.integrate(0.0, 1.0, |s| {
            let t = a + (b - a) * s * s * (3.0 - 2.0 * s);
            let jac = (b - a) * 6.0 * s * (1.0 - s);
            kernel.value(t) * legendre_unchecked(m, t) * jac
        });
    }
    Ok(0.5 * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
        let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / r, v[1] / r, v[2] / r]
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre(0, 0.3).unwrap(), 1.0);
        assert!((legendre(2, 0.0).unwrap() + 0.5).abs() < 1e-16);
        assert_eq!(legendre(7, 1.0).unwrap(), 1.0);
        assert!(legendre(3, 1.5).is_err());
        let t = 0.37;
        let p3 = (5.0 * t * t * t - 3.0 * t) / 2.0;
        assert!((legendre(3, t).unwrap() - p3).abs() < 1e-15);
    }

    #[test]
    fn moments() {
        assert_eq!(sphere_moment([0, 0, 0]), 1.0);
        assert!((sphere_moment([2, 0, 0]) - 1.0 / 3.0).abs() < 1e-16);
        assert!((sphere_moment([4, 0, 0]) - 0.2).abs() < 1e-16);
        assert!((sphere_moment([2, 2, 0]) - 1.0 / 15.0).abs() < 1e-16);
        assert_eq!(sphere_moment([1, 1, 0]), 0.0);
    }

    #[test]
    fn degree_zero_and_one() {
        let b0 = build_basis(0).unwrap();
        assert_eq!(b0.dimension(), 1);
        assert!((b0.eval([0.3, 0.4, (1.0f64 - 0.25).sqrt()])[0] - 1.0).abs() < 1e-15);
        let b1 = build_basis(1).unwrap();
        let vals = b1.eval([0.0, 0.0, 1.0]);
        let ss: f64 = vals.iter().map(|v| v * v).sum();
        assert!((ss - 3.0).abs() < 1e-14);
        for p in &b1.polys {
            for &c in p {
                assert!(c == 0.0 || (c.abs() - 3f64.sqrt()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn seeds_are_exactly_harmonic() {
        // Integer-valued coefficients stay exact in f64 up to degree 12.
        for m in 0..=12 {
            for seed in solid_harmonic_seeds(m) {
                assert!(seed.laplacian().terms.is_empty(), "degree {m}");
            }
        }
        for m in 13..=MAX_BASIS_DEGREE {
            for seed in solid_harmonic_seeds(m) {
                let scale = seed.max_abs_coefficient() * (m * m) as f64;
                assert!(seed.laplacian().max_abs_coefficient() <= 1e-13 * scale, "degree {m}");
            }
        }
    }

    #[test]
    fn basis_is_harmonic_and_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in 0..=12 {
            let basis = build_basis(m).unwrap();
            assert_eq!(basis.dimension(), 2 * m as usize + 1);
            for j in 0..basis.dimension() {
                let p = basis.poly(j);
                let scale = p.max_abs_coefficient() * (m * m + 1) as f64;
                assert!(p.laplacian().max_abs_coefficient() <= 1e-12 * scale, "m = {m}");
            }
            let v = random_unit(&mut rng);
            let at_v = basis.eval(v);
            let at_2v = basis.eval([2.0 * v[0], 2.0 * v[1], 2.0 * v[2]]);
            for (a, b) in at_v.iter().zip(&at_2v) {
                assert!((b - 2f64.powi(m as i32) * a).abs() < 1e-10 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn gram_matrix_is_identity() {
        for m in 0..=16 {
            let basis = build_basis(m).unwrap();
            let polys: Vec<_> = (0..basis.dimension()).map(|j| basis.poly(j)).collect();
            for (i, p) in polys.iter().enumerate() {
                for (j, q) in polys.iter().enumerate() {
                    let g = sphere_inner(p, q);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g - want).abs() < 1e-12, "m={m} ({i},{j}) {g}");
                }
            }
        }
    }

    #[test]
    fn gram_matrix_by_quadrature() {
        // Product rule: Gauss–Legendre in cos θ times a uniform φ grid.
        let basis = build_basis(2).unwrap();
        let rule = GaussLegendre::new(16);
        let nphi = 32;
        let mut gram = [[0.0; 5]; 5];
        for (t, w) in rule.on_interval(-1.0, 1.0) {
            let s = (1.0 - t * t).sqrt();
            for k in 0..nphi {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / nphi as f64;
                let vals = basis.eval([s * phi.cos(), s * phi.sin(), t]);
                for i in 0..5 {
                    for j in 0..5 {
                        gram[i][j] += 0.5 * w / nphi as f64 * vals[i] * vals[j];
                    }
                }
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i][j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn addition_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 0..=10 {
            let basis = build_basis(m).unwrap();
            for _ in 0..100 {
                let z = random_unit(&mut rng);
                let s: f64 = basis.eval(z).iter().map(|v| v * v).sum();
                assert!((s - (2 * m + 1) as f64).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn capacity_ceiling() {
        assert!(matches!(build_basis(MAX_BASIS_DEGREE + 1), Err(crate::Error::Capacity(_))));
    }

    #[test]
    fn basis_is_deterministic() {
        assert_eq!(build_basis(6).unwrap(), build_basis(6).unwrap());
    }

    #[test]
    fn cap_transform_examples() {
        let r: f64 = 0.7;
        assert!((zonal_transform(ZonalKernel::SharpCap(r), 0).unwrap() - (1.0 - r.cos()) / 2.0).abs() < 1e-15);
        let want1 = (1.0 - r.cos().powi(2)) / 4.0;
        assert!((zonal_transform(ZonalKernel::SharpCap(r), 1).unwrap() - want1).abs() < 1e-15);
        assert!((cap_coefficient_closed_form(r, 1).unwrap() - want1).abs() < 1e-15);
        for m in 1..30 {
            assert!(cap_coefficient_closed_form(std::f64::consts::PI, m).unwrap().abs() < 1e-15);
        }
        assert!(cap_coefficient_closed_form(r, 0).is_err());
    }

    #[test]
    fn cap_closed_form_matches_quadrature() {
        let rule = GaussLegendre::new(64);
        let c = 0.5f64.cos();
        let quad = 0.5 * rule.integrate(c, 1.0, |t| legendre_unchecked(4, t));
        assert!((cap_coefficient_closed_form(0.5, 4).unwrap() - quad).abs() < 1e-12);
        for m in 0..=40 {
            for kernel in [ZonalKernel::SharpCap(0.5), ZonalKernel::Disc(0.2), ZonalKernel::SharpCap(2.5)] {
                let closed = zonal_transform(kernel, m).unwrap();
                let quad = zonal_transform_quadrature(kernel, m, 64).unwrap();
                assert!((closed - quad).abs() < 1e-12 * (1.0 + closed.abs()), "{kernel:?} m={m}");
            }
        }
    }

    #[test]
    fn funk_hecke_multiplicativity() {
        for &r in &[0.2, 0.5, 1.0] {
            for &rho in &[0.2, 0.5, 1.0] {
                let kernel = ZonalKernel::CapConvolvedDisc(r, rho);
                let closed = zonal_coefficients(kernel, 40).unwrap();
                for m in 0..=40u32 {
                    let quad = zonal_transform_quadrature(kernel, m, 96).unwrap();
                    let want = closed.values[m as usize];
                    let scale = want.abs().max(1e-5 * closed.values[0]);
                    assert!((quad - want).abs() <= 1e-10 * scale, "r={r} rho={rho} m={m}: {quad} vs {want}");
                }
            }
        }
    }

    #[test]
    fn masses() {
        assert!((zonal_transform(ZonalKernel::Disc(0.3), 0).unwrap() - 1.0).abs() < 1e-14);
        let r: f64 = 0.9;
        let sigma = (1.0 - r.cos()) / 2.0;
        assert!((zonal_transform(ZonalKernel::CapConvolvedDisc(r, 0.1), 0).unwrap() - sigma).abs() < 1e-14);
    }

    #[test]
    fn convolved_decay_shape() {
        // |T(m)| ≤ C m^{-3/2} σ^{1/4} min(1, sin(ρ)^{1/2} / (m^{3/2}(1 - cos ρ))); report C.
        let mut worst: f64 = 0.0;
        for &r in &[0.2, 0.5, 1.0] {
            for &rho in &[0.05, 0.1, 0.3] {
                let sigma = (1.0 - f64::cos(r)) / 2.0;
                let coeffs = zonal_coefficients(ZonalKernel::CapConvolvedDisc(r, rho), 400).unwrap();
                for m in 1..=400u32 {
                    let mf = m as f64;
                    let shape = mf.powf(-1.5)
                        * sigma.powf(0.25)
                        * (rho.sin().sqrt() / (mf.powf(1.5) * (1.0 - rho.cos()))).min(1.0);
                    worst = worst.max(coeffs.values[m as usize].abs() / shape);
                }
            }
        }
        eprintln!("fitted decay constant C = {worst:.4}");
        assert!(worst.is_finite() && worst < 10.0);
    }

    #[test]
    fn sup_norm_equals_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in [2u32, 5, 9] {
            let basis = build_basis(m).unwrap();
            let mut best: f64 = 0.0;
            for _ in 0..50 {
                let z = random_unit(&mut rng);
                best = best.max(basis.eval(z).iter().map(|v| v * v).sum());
            }
            assert!((best - (2 * m + 1) as f64).abs() < 1e-10);
        }
    }
}
