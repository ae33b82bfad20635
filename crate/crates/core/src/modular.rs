//! Theta series `θ(z) = Σ_ℓ φ(ℓ) e(z|ℓ|²)` of weight `k = m + 3/2` attached to
//! harmonic polynomials, evaluated anywhere in the upper half-plane through
//! the invariant `g(z) = |θ(z)|² y^k`.
//!
//! `g` is invariant under `Γ₀(4)` and under the Fricke involution
//! `z ↦ -1/(4z)`. Near the cusp `1/2` it is computed from
//! `g(1/2 + w) = |S(u)|² (Im u / 2)^k` with `u = -1/(2w)` and
//! `S(u) = Σ_{ℓ ∈ Z³ + (½,½,½)} φ(ℓ) e^{πiu|ℓ|²}`, which follows from Poisson
//! summation. Between these moves every point lands where one of the two
//! expansions converges at rate at least `e^{-π}` per term.
//!
//! The squared norm is `‖θ‖² = ∫_{Γ₀(4)\H} |θ|² y^{k-2} dx dy = ∫ g dμ`.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::arith::{enumerate_shell, isqrt};
use crate::error::{capacity, domain, Result};
use crate::harmonics::{build_basis, sphere_inner, HarmonicBasis, Poly, MAX_BASIS_DEGREE};
use crate::quadrature::GaussLegendre;

/// Smallest `Im z` accepted by the direct q-series [`theta_eval`].
pub const THETA_Y_MIN: f64 = 0.05;

/// Absolute truncation tolerance used by the evaluator of `g`.
const EVAL_TOL: f64 = 1e-17;

/// Smallest coefficient table kept by a family, enough for the evaluator.
const MIN_TABLE: u64 = 512;

/// Largest coefficient table a family will build.
pub const MAX_TABLE: u64 = 5_000_000;

/// Half-lattice terms kept, exponents up to `8·HALF_TERMS`.
const HALF_TERMS: usize = 257;

/// Upper bound `2(2√n+1)² n^{m/2} (2m+1)^{1/2}` on `|Σ_{|ℓ|²=n} φ(ℓ)|`.
fn coefficient_bound(m: u32, n: f64) -> f64 {
    let s = n.sqrt();
    2.0 * (2.0 * s + 1.0).powi(2) * n.powf(m as f64 / 2.0) * (2.0 * m as f64 + 1.0).sqrt()
}

/// Smallest `N` with `Σ_{n>N} bound(n) e^{-rate·n} < tol`, using that the
/// term ratios decrease once below one.
fn terms_needed(bound: impl Fn(f64) -> f64, rate: f64, tol: f64) -> u64 {
    let term = |n: u64| bound(n as f64) * (-rate * n as f64).exp();
    let mut n = 1u64;
    loop {
        let (a, b) = (term(n), term(n + 1));
        if b == 0.0 {
            return n;
        }
        let ratio = b / a;
        if ratio < 1.0 && b / (1.0 - ratio) < tol {
            return n;
        }
        n += 1;
        if n > 10_000_000 {
            return n;
        }
    }
}

/// Coefficient tables for every basis element of one degree.
#[derive(Debug, Clone)]
pub struct ThetaFamily {
    pub degree: u32,
    pub basis: HarmonicBasis,
    max_n: u64,
    /// `coeffs[j][n] = a_j(n)` for `n ≤ max_n`.
    coeffs: Vec<Vec<f64>>,
    /// `half[j][i] = 2^{-m} Σ φ_j(ℓ)` over all-odd `ℓ` with `|ℓ|² = 8i + 3`.
    half: Vec<Vec<f64>>,
    invariant_dimension: usize,
    /// Multiplier on the coefficient bound, 1 unless the family was rescaled.
    bound_scale: f64,
}

/// Orthonormal basis `ψ_i` of the degree-`m` harmonics fixed by the 48
/// signed permutations, with `proj[j][i] = <φ_j, ψ_i>`.
struct InvariantPart {
    psi: Vec<Poly>,
    proj: Vec<Vec<f64>>,
}

/// Average over the cube group: odd exponents cancel, even ones are
/// symmetrized over the six coordinate permutations.
fn cube_average(p: &Poly) -> Poly {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Poly::default();
    for e in p.terms.keys() {
        if e.iter().any(|v| v % 2 == 1) || out.terms.contains_key(e) {
            continue;
        }
        let mut orbit: Vec<[u32; 3]> = PERMS.iter().map(|q| [e[q[0]], e[q[1]], e[q[2]]]).collect();
        let mean = orbit.iter().map(|f| p.terms.get(f).copied().unwrap_or(0.0)).sum::<f64>() / 6.0;
        orbit.sort();
        orbit.dedup();
        for f in orbit {
            if mean != 0.0 {
                out.terms.insert(f, mean);
            }
        }
    }
    out
}

fn invariant_part(basis: &HarmonicBasis) -> InvariantPart {
    let mut psi: Vec<Poly> = Vec::new();
    for j in 0..basis.dimension() {
        let mut v = cube_average(&basis.poly(j));
        for _ in 0..2 {
            for u in &psi {
                let c = sphere_inner(&v, u);
                v.add_scaled(u, -c);
            }
        }
        let norm = sphere_inner(&v, &v).sqrt();
        if norm > 1e-8 {
            let mut unit = Poly::default();
            unit.add_scaled(&v, 1.0 / norm);
            psi.push(unit);
        }
    }
    let proj = (0..basis.dimension())
        .map(|j| {
            let phi = basis.poly(j);
            // Overlaps at roundoff level are structural zeros.
            psi.iter()
                .map(|u| sphere_inner(&phi, u))
                .map(|c| if c.abs() < 1e-12 { 0.0 } else { c })
                .collect()
        })
        .collect();
    InvariantPart { psi, proj }
}

/// Size of the cube-group orbit of `(x, y, z)` with `0 ≤ x ≤ y ≤ z`.
fn orbit_size(x: i64, y: i64, z: i64) -> f64 {
    let perms = if x == y && y == z {
        1
    } else if x == y || y == z {
        3
    } else {
        6
    };
    let signs = [x, y, z].iter().filter(|&&v| v != 0).count();
    (perms << signs) as f64
}

/// Number of fixed work chunks; independent of the worker count.
const CHUNKS: i64 = 16;

impl ThetaFamily {
    /// Builds `a_j(n)` for `n ≤ max_n` (at least 512) and the half-lattice
    /// coefficients. Shells are invariant under the cube group, so only the
    /// invariant part of each `φ_j` contributes; it is summed over orbit
    /// representatives.
    pub fn new(m: u32, max_n: u64) -> Result<Self> {
        if m == 0 {
            return domain("degree 0 gives a non-cuspidal theta series");
        }
        if m > MAX_BASIS_DEGREE {
            return capacity(format!("degree {m} exceeds ceiling {MAX_BASIS_DEGREE}"));
        }
        if max_n > MAX_TABLE {
            return capacity(format!("coefficient table to n = {max_n} exceeds ceiling {MAX_TABLE}"));
        }
        let basis = build_basis(m)?;
        let max_n = max_n.max(MIN_TABLE);
        let dim = basis.dimension();
        let inv = invariant_part(&basis);
        let d = inv.psi.len();
        let eval = |psi: &Poly, p: [f64; 3]| psi.eval(p);

        let partial: Vec<Vec<Vec<f64>>> = (0..CHUNKS)
            .into_par_iter()
            .map(|chunk| {
                let mut acc = vec![vec![0.0; max_n as usize + 1]; d];
                if d == 0 {
                    return acc;
                }
                let mut x = chunk;
                while 3 * x * x <= max_n as i64 {
                    let mut y = x;
                    while x * x + 2 * y * y <= max_n as i64 {
                        let zmax = isqrt((max_n as i64 - x * x - y * y) as u64) as i64;
                        for z in y..=zmax {
                            let n = (x * x + y * y + z * z) as usize;
                            if n == 0 {
                                continue;
                            }
                            let w = orbit_size(x, y, z);
                            let p = [x as f64, y as f64, z as f64];
                            for (a, psi) in acc.iter_mut().zip(&inv.psi) {
                                a[n] += w * eval(psi, p);
                            }
                        }
                        y += 1;
                    }
                    x += CHUNKS;
                }
                acc
            })
            .collect();
        let mut inv_coeffs = vec![vec![0.0; max_n as usize + 1]; d];
        for part in &partial {
            for (c, p) in inv_coeffs.iter_mut().zip(part) {
                for (a, b) in c.iter_mut().zip(p) {
                    *a += b;
                }
            }
        }

        let half_max = 8 * (HALF_TERMS as i64 - 1) + 3;
        let mut inv_half = vec![vec![0.0; HALF_TERMS]; d];
        let scale = 0.5f64.powi(m as i32);
        let mut x = 1;
        while 3 * x * x <= half_max {
            let mut y = x;
            while x * x + 2 * y * y <= half_max {
                let mut z = y;
                while x * x + y * y + z * z <= half_max {
                    let n = x * x + y * y + z * z;
                    let i = ((n - 3) / 8) as usize;
                    let w = orbit_size(x, y, z) * scale;
                    for (h, psi) in inv_half.iter_mut().zip(&inv.psi) {
                        h[i] += w * eval(psi, [x as f64, y as f64, z as f64]);
                    }
                    z += 2;
                }
                y += 2;
            }
            x += 2;
        }

        let combine = |tables: &[Vec<f64>], len: usize| -> Vec<Vec<f64>> {
            (0..dim)
                .map(|j| {
                    let mut row = vec![0.0; len];
                    for (c, t) in inv.proj[j].iter().zip(tables) {
                        for (r, v) in row.iter_mut().zip(t) {
                            *r += c * v;
                        }
                    }
                    row
                })
                .collect()
        };
        let coeffs = combine(&inv_coeffs, max_n as usize + 1);
        let half = combine(&inv_half, HALF_TERMS);
        Ok(Self { degree: m, basis, max_n, coeffs, half, invariant_dimension: d, bound_scale: 1.0 })
    }

    /// Dimension of the cube-invariant harmonics of this degree; the whole
    /// family vanishes identically when it is zero.
    pub fn invariant_dimension(&self) -> usize {
        self.invariant_dimension
    }

    pub fn weight(&self) -> f64 {
        self.degree as f64 + 1.5
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn max_n(&self) -> u64 {
        self.max_n
    }

    pub(crate) fn check(&self, j: usize, n: u64) -> Result<()> {
        if j >= self.dimension() {
            return domain(format!("index j = {j} outside 0..{}", self.dimension()));
        }
        if n > self.max_n {
            return capacity(format!("coefficient n = {n} beyond table size {}", self.max_n));
        }
        Ok(())
    }

    /// `a_j(n)`; `a_j(0) = 0`.
    pub fn coefficient(&self, j: usize, n: u64) -> Result<f64> {
        self.check(j, n)?;
        Ok(self.coeffs[j][n as usize])
    }

    /// `a_j(0..=max_n)`.
    pub fn coefficients(&self, j: usize) -> &[f64] {
        &self.coeffs[j]
    }

    /// `b_j(n) = a_j(n) n^{-(k-1)/2}`.
    pub fn normalized_coefficient(&self, j: usize, n: u64) -> Result<f64> {
        if n == 0 {
            return domain("normalized coefficients start at n = 1");
        }
        Ok(self.coefficient(j, n)? * (n as f64).powf(-(self.weight() - 1.0) / 2.0))
    }

    /// Half-lattice coefficients `c_j(i)`, exponent `(8i + 3)/4`.
    pub fn half_coefficients(&self, j: usize) -> &[f64] {
        &self.half[j]
    }

    /// A copy with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for row in out.coeffs.iter_mut().chain(out.half.iter_mut()) {
            row.iter_mut().for_each(|v| *v *= factor);
        }
        out.bound_scale *= factor.abs().max(1.0);
        out
    }

    /// `θ_j(z)` for every `j` by the direct q-series.
    fn theta_direct(&self, z: Complex64, tol: f64) -> Result<Vec<Complex64>> {
        let m = self.degree;
        let n_max = terms_needed(|n| self.bound_scale * coefficient_bound(m, n), 2.0 * PI * z.im, tol);
        if n_max > self.max_n {
            return capacity(format!("q-series needs {n_max} terms, table holds {}", self.max_n));
        }
        let q = (Complex64::new(0.0, 2.0 * PI) * z).exp();
        let mut out = vec![Complex64::new(0.0, 0.0); self.dimension()];
        let mut qn = q;
        for n in 1..=n_max as usize {
            for (o, c) in out.iter_mut().zip(&self.coeffs) {
                *o += c[n] * qn;
            }
            qn *= q;
        }
        Ok(out)
    }

    /// `S_j(u) = Σ_i c_j(i) e^{πiu(8i+3)/4}` for every `j`.
    fn theta_half(&self, u: Complex64, tol: f64) -> Result<Vec<Complex64>> {
        let m = self.degree;
        let bound = |i: f64| self.bound_scale * 0.5f64.powi(m as i32) * coefficient_bound(m, 8.0 * i + 3.0);
        let i_max = terms_needed(bound, 2.0 * PI * u.im, tol) as usize;
        if i_max >= self.half[0].len() {
            return capacity(format!("half-cusp series needs {i_max} terms"));
        }
        let i_pi_u = Complex64::new(0.0, PI) * u;
        let mut e = (i_pi_u * 0.75).exp();
        let step = (i_pi_u * 2.0).exp();
        let mut out = vec![Complex64::new(0.0, 0.0); self.dimension()];
        for i in 0..=i_max {
            for (o, c) in out.iter_mut().zip(&self.half) {
                *o += c[i] * e;
            }
            e *= step;
        }
        Ok(out)
    }

    fn g_direct(&self, z: Complex64) -> Result<Vec<f64>> {
        let yk = z.im.powf(self.weight());
        Ok(self.theta_direct(z, EVAL_TOL)?.iter().map(|t| t.norm_sqr() * yk).collect())
    }

    /// `g` near the cusp `1/2` from `z = 1/2 + w`.
    fn g_half(&self, w: Complex64) -> Result<Vec<f64>> {
        let u = -1.0 / (2.0 * w);
        let f = (u.im / 2.0).powf(self.weight());
        Ok(self.theta_half(u, EVAL_TOL)?.iter().map(|s| s.norm_sqr() * f).collect())
    }

    /// `g_j(z) = |θ_j(z)|² (Im z)^k` for every `j`, at any `z` in the upper
    /// half-plane.
    pub fn g_values(&self, z: Complex64) -> Result<Vec<f64>> {
        if !(z.im > 0.0) || !z.re.is_finite() {
            return domain(format!("point {z} not in the upper half-plane"));
        }
        let (z, w) = reduce(z);
        let im_u = z.im / (2.0 * w.norm_sqr());
        if im_u > z.im {
            self.g_half(w)
        } else {
            self.g_direct(z)
        }
    }

    /// `θ_j(z)` by the direct q-series with a proven truncation bound.
    pub fn theta_eval(&self, j: usize, z: Complex64, tol: f64) -> Result<Complex64> {
        if z.im < THETA_Y_MIN {
            return domain(format!("Im z = {} below y_min = {THETA_Y_MIN}", z.im));
        }
        if !(tol > 0.0) {
            return domain("tolerance must be positive");
        }
        self.check(j, 0)?;
        if self.invariant_dimension == 0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let m = self.degree;
        let n_max = terms_needed(|n| coefficient_bound(m, n), 2.0 * PI * z.im, tol);
        if n_max > self.max_n {
            return capacity(format!("q-series needs {n_max} terms, table holds {}", self.max_n));
        }
        let q = (Complex64::new(0.0, 2.0 * PI) * z).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut qn = q;
        for n in 1..=n_max as usize {
            acc += self.coeffs[j][n] * qn;
            qn *= q;
        }
        Ok(acc)
    }

    /// `‖θ_j‖²` for every `j`.
    pub fn l2_norms(&self, grid: GridSpec) -> Result<Vec<f64>> {
        grid.validate()?;
        let dim = self.dimension();
        if self.invariant_dimension == 0 {
            return Ok(vec![0.0; dim]);
        }
        let k = self.weight();
        let y_top = grid.y_max;
        let gx = GaussLegendre::new(grid.nx);
        let gy = GaussLegendre::new(grid.ny);
        let reps = coset_reps();
        let xs: Vec<(f64, f64)> = gx.on_interval(-0.5, 0.5).collect();
        let rows: Vec<Result<Vec<f64>>> = xs
            .par_iter()
            .map(|&(x, wx)| {
                let mut acc = vec![0.0; dim];
                let y0 = (1.0 - x * x).sqrt();
                for (y, wy) in gy.on_interval(y0, y_top) {
                    let z = Complex64::new(x, y);
                    let weight = wx * wy / (y * y);
                    for rep in &reps {
                        for (a, g) in acc.iter_mut().zip(self.g_values(rep.act(z))?) {
                            *a += weight * g;
                        }
                    }
                }
                Ok(acc)
            })
            .collect();
        let mut total = vec![0.0; dim];
        for row in rows {
            for (t, v) in total.iter_mut().zip(row?) {
                *t += v;
            }
        }
        // Exact cusp contributions above y_max: ∞ (identity), 0 (four reps, from y_max/4), 1/2.
        for (j, t) in total.iter_mut().enumerate() {
            for (n, a) in self.coeffs[j].iter().enumerate().skip(1).take(200) {
                let lambda = 4.0 * PI * n as f64;
                *t += a * a * (upper_integral(k - 1.0, lambda, y_top) + upper_integral(k - 1.0, lambda, y_top / 4.0));
            }
            for (i, c) in self.half[j].iter().enumerate().take(200) {
                let lambda = PI * (8 * i + 3) as f64;
                *t += c * c * upper_integral(k - 1.0, lambda, y_top);
            }
        }
        Ok(total)
    }
}

/// `∫_Y^∞ e^{-λy} y^{a-1} dy`.
fn upper_integral(a: f64, lambda: f64, y: f64) -> f64 {
    let q = gamma_ur(a, lambda * y);
    if q == 0.0 {
        return 0.0;
    }
    (ln_gamma(a) - a * lambda.ln()).exp() * q
}

/// Moves `z` by translations and the Fricke involution, which leave `g`
/// unchanged, until either `Im z` or the local parameter `Im u` at the cusp
/// `1/2` is at least `1/2`. Returns `z` and `w = z ∓ 1/2`.
fn reduce(mut z: Complex64) -> (Complex64, Complex64) {
    loop {
        z.re -= z.re.round();
        let w = if z.re >= 0.0 { z - 0.5 } else { z + 0.5 };
        let im_u = z.im / (2.0 * w.norm_sqr());
        if z.im >= 0.5 || im_u >= 0.5 || z.norm_sqr() >= 0.25 {
            return (z, w);
        }
        z = -1.0 / (4.0 * z);
    }
}

/// An element of `SL₂(Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sl2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

/// A representative of a right coset `Γ₀(4)γ`.
pub type CosetRep = Sl2;

impl Sl2 {
    pub const IDENTITY: Sl2 = Sl2 { a: 1, b: 0, c: 0, d: 1 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        if a * d - b * c != 1 {
            return domain(format!("[[{a}, {b}], [{c}, {d}]] does not have determinant 1"));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn mul(&self, o: &Sl2) -> Sl2 {
        Sl2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Sl2 {
        Sl2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn in_gamma0_4(&self) -> bool {
        self.c % 4 == 0
    }

    /// Möbius action `(az + b)/(cz + d)`.
    pub fn act(&self, z: Complex64) -> Complex64 {
        (self.a as f64 * z + self.b as f64) / (self.c as f64 * z + self.d as f64)
    }
}

/// Right coset representatives of `Γ₀(4)` in `SL₂(Z)`.
pub fn coset_reps() -> Vec<CosetRep> {
    vec![
        Sl2::IDENTITY,
        Sl2 { a: 0, b: -1, c: 1, d: 0 },
        Sl2 { a: 0, b: -1, c: 1, d: 1 },
        Sl2 { a: 0, b: -1, c: 1, d: 2 },
        Sl2 { a: 0, b: -1, c: 1, d: 3 },
        Sl2 { a: 1, b: 0, c: 2, d: 1 },
    ]
}

/// Quadrature over the truncated fundamental domain `{|x| ≤ 1/2, |z| ≥ 1, y ≤ y_max}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub y_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nx: 40, ny: 40, y_max: 2.0 }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 || !(self.y_max >= 1.0) {
            return domain("grid needs nx, ny ≥ 2 and y_max ≥ 1");
        }
        Ok(())
    }
}

/// `Σ_{|ℓ|²=n} φ_{m,j}(ℓ)` over the enumerated shell.
pub fn theta_coefficient(m: u32, j: usize, n: u64) -> Result<f64> {
    let basis = build_basis(m)?;
    if j >= basis.dimension() {
        return domain(format!("index j = {j} outside 0..{}", basis.dimension()));
    }
    if n == 0 {
        return domain("coefficients start at n = 1");
    }
    let shell = enumerate_shell(n)?;
    let pts = &shell.points;
    let count = pts.len();
    let mut acc = 0.0;
    for i in 0..count / 2 {
        acc += basis.eval(pts[i].to_f64())[j] + basis.eval(pts[count - 1 - i].to_f64())[j];
    }
    Ok(acc)
}

/// `a(n) n^{-(k-1)/2}` with `k = m + 3/2`.
pub fn normalized_coefficient(m: u32, j: usize, n: u64) -> Result<f64> {
    let k = m as f64 + 1.5;
    Ok(theta_coefficient(m, j, n)? * (n as f64).powf(-(k - 1.0) / 2.0))
}

/// A single theta series with a lazily computed norm.
#[derive(Debug, Clone)]
pub struct ThetaSeries {
    pub family: Arc<ThetaFamily>,
    pub j: usize,
    norm: OnceLock<f64>,
}

impl ThetaSeries {
    pub fn new(family: Arc<ThetaFamily>, j: usize) -> Result<Self> {
        family.check(j, 0)?;
        Ok(Self { family, j, norm: OnceLock::new() })
    }

    pub fn degree(&self) -> u32 {
        self.family.degree
    }

    pub fn weight(&self) -> f64 {
        self.family.weight()
    }

    pub fn a(&self, n: u64) -> Result<f64> {
        self.family.coefficient(self.j, n)
    }

    pub fn b(&self, n: u64) -> Result<f64> {
        self.family.normalized_coefficient(self.j, n)
    }

    /// `‖θ‖²` on the default grid, computed once.
    pub fn l2_norm_sq(&self) -> Result<f64> {
        if let Some(v) = self.norm.get() {
            return Ok(*v);
        }
        let v = self.family.l2_norms(GridSpec::default())?[self.j];
        Ok(*self.norm.get_or_init(|| v))
    }
}

/// `θ_{m,j}(z)` truncated so that the neglected tail is below `tol`.
pub fn theta_eval(m: u32, j: usize, z: Complex64, tol: f64) -> Result<Complex64> {
    if z.im < THETA_Y_MIN {
        return domain(format!("Im z = {} below y_min = {THETA_Y_MIN}", z.im));
    }
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }
    let n_max = terms_needed(|n| coefficient_bound(m, n), 2.0 * PI * z.im, tol);
    ThetaFamily::new(m, n_max)?.theta_eval(j, z, tol)
}

/// `‖θ_{m,j}‖²`.
pub fn theta_l2(m: u32, j: usize, grid: GridSpec) -> Result<f64> {
    let family = ThetaFamily::new(m, MIN_TABLE)?;
    family.check(j, 0)?;
    Ok(family.l2_norms(grid)?[j])
}

/// `| |θ(γz)|² Im(γz)^k - |θ(z)|² Im(z)^k |` from direct q-series.
pub fn invariance_defect(family: &ThetaFamily, j: usize, z: Complex64, gamma: Sl2) -> Result<f64> {
    if gamma.a * gamma.d - gamma.b * gamma.c != 1 || !gamma.in_gamma0_4() {
        return domain("γ must lie in Γ₀(4)");
    }
    let w = gamma.act(z);
    let k = family.weight();
    let g = |p: Complex64| -> Result<f64> { Ok(family.theta_eval(j, p, 1e-15)?.norm_sqr() * p.im.powf(k)) };
    Ok((g(w)? - g(z)?).abs())
}

/// Sampling of `G(y) = ∫₀¹ g(x + iy) dx` on Gauss–Legendre nodes in `ln y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripGrid {
    pub y_min: f64,
    pub y_max: f64,
    pub panels_per_decade: usize,
    pub nodes: usize,
    /// Trapezoid points in `x` are `max(64, x_density / y)`.
    pub x_density: f64,
}

impl Default for StripGrid {
    fn default() -> Self {
        Self { y_min: 1e-4, y_max: 1.0, panels_per_decade: 2, nodes: 16, x_density: 7.0 }
    }
}

#[derive(Debug, Clone)]
pub struct StripProfile {
    pub grid: StripGrid,
    /// `(y, weight in ln y)` nodes.
    pub nodes: Vec<(f64, f64)>,
    /// `values[i][j] = G_j(y_i)`.
    pub values: Vec<Vec<f64>>,
}

/// Horizontal averages of `g` for every `j`.
pub fn strip_profile(family: &ThetaFamily, grid: StripGrid) -> Result<StripProfile> {
    if !(grid.y_min > 0.0 && grid.y_min < grid.y_max) || grid.nodes < 2 || grid.panels_per_decade == 0 {
        return domain("strip grid needs 0 < y_min < y_max and at least two nodes");
    }
    let (lo, hi) = (grid.y_min.ln(), grid.y_max.ln());
    let panels = (((hi - lo) / std::f64::consts::LN_10) * grid.panels_per_decade as f64).ceil() as usize;
    let rule = GaussLegendre::new(grid.nodes);
    let width = (hi - lo) / panels as f64;
    let mut nodes = Vec::new();
    for p in 0..panels {
        let a = lo + p as f64 * width;
        nodes.extend(rule.on_interval(a, a + width).map(|(t, w)| (t.exp(), w)));
    }
    let dim = family.dimension();
    let values = nodes
        .iter()
        .map(|&(y, _)| {
            let nx = ((grid.x_density / y).ceil() as usize).max(64);
            let chunk = nx.div_ceil(CHUNKS as usize);
            let parts: Vec<Result<Vec<f64>>> = (0..CHUNKS as usize)
                .into_par_iter()
                .map(|c| {
                    let mut acc = vec![0.0; dim];
                    for i in (c * chunk)..((c + 1) * chunk).min(nx) {
                        let x = i as f64 / nx as f64;
                        for (a, g) in acc.iter_mut().zip(family.g_values(Complex64::new(x, y))?) {
                            *a += g;
                        }
                    }
                    Ok(acc)
                })
                .collect();
            let mut total = vec![0.0; dim];
            for part in parts {
                for (t, v) in total.iter_mut().zip(part?) {
                    *t += v / nx as f64;
                }
            }
            Ok(total)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StripProfile { grid, nodes, values })
}

/// Both sides of the unfolding identity at real `s > 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankinSelberg {
    pub s: f64,
    pub cutoff: u64,
    /// `(4π)^{-(s+k-1)} Γ(s+k-1) Σ |a(n)|² n^{-(s+k-1)}` with its estimated tail.
    pub lhs: f64,
    pub lhs_tail: f64,
    /// `∫₀^∞ G(y) y^{s+k-2} dy` assembled from quadrature and cusp tails.
    pub rhs: f64,
    pub rhs_small_y: f64,
    pub relative_difference: f64,
}

/// Unfolding check from a precomputed profile and norm.
pub fn rankin_selberg_from_profile(
    family: &ThetaFamily,
    profile: &StripProfile,
    norm_sq: f64,
    j: usize,
    s: f64,
    cutoff: u64,
) -> Result<RankinSelberg> {
    if !(s > 1.0) {
        return domain(format!("s = {s} must exceed 1"));
    }
    family.check(j, cutoff)?;
    if cutoff < 16 {
        return domain("cutoff must be at least 16");
    }
    if family.invariant_dimension == 0 {
        return Ok(RankinSelberg {
            s,
            cutoff,
            lhs: 0.0,
            lhs_tail: 0.0,
            rhs: 0.0,
            rhs_small_y: 0.0,
            relative_difference: 0.0,
        });
    }
    let k = family.weight();
    let e = s + k - 1.0;
    let pre = (ln_gamma(e) - e * (4.0 * PI).ln()).exp();
    let a = family.coefficients(j);
    let head: f64 = (1..=cutoff as usize).map(|n| a[n] * a[n] * (n as f64).powf(-e)).sum();
    let lo = cutoff / 2 + 1;
    let mean_b2 = (lo..=cutoff).map(|n| a[n as usize].powi(2) * (n as f64).powf(1.0 - k)).sum::<f64>()
        / (cutoff - lo + 1) as f64;
    let nf = cutoff as f64;
    let tail = mean_b2 * (nf.powf(1.0 - s) / (s - 1.0) - 0.5 * nf.powf(-s));
    let lhs = pre * (head + tail);

    let mut middle = 0.0;
    for (&(y, w), vals) in profile.nodes.iter().zip(&profile.values) {
        middle += w * vals[j] * y.powf(s - 1.0);
    }
    let y_top = profile.grid.y_max;
    let top: f64 = (1..=cutoff.min(400) as usize)
        .map(|n| a[n] * a[n] * (4.0 * PI * n as f64).powf(-e) * ln_gamma(e).exp() * gamma_ur(e, 4.0 * PI * n as f64 * y_top))
        .sum();
    let y0 = profile.grid.y_min;
    let small = norm_sq / (2.0 * PI) * y0.powf(s - 1.0) / (s - 1.0);
    let rhs = middle + top + small;
    let scale = lhs.abs().max(rhs.abs());
    let relative_difference = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    Ok(RankinSelberg { s, cutoff, lhs, lhs_tail: pre * tail, rhs, rhs_small_y: small, relative_difference })
}

/// Unfolding check for one `(m, j, s)`; builds the tables it needs.
pub fn rankin_selberg_check(m: u32, j: usize, s: f64, cutoff: u64, grid: StripGrid) -> Result<RankinSelberg> {
    if !(s > 1.0) {
        return domain(format!("s = {s} must exceed 1"));
    }
    let family = ThetaFamily::new(m, cutoff)?;
    family.check(j, 0)?;
    let norm = family.l2_norms(GridSpec::default())?[j];
    let profile = strip_profile(&family, grid)?;
    rankin_selberg_from_profile(&family, &profile, norm, j, s, cutoff)
}
