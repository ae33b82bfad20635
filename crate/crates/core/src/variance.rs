//! Weyl sums, the cap-count variance by direct integration and by its
//! spectral expansion, windowed averages over shells and the conjecture
//! ratio `Var / (N σ)`.
//!
//! For a cap `Ω` of area `σ` and a shell with `N` points,
//! `Var = ∫ |Z(ζ) - Nσ|² dσ(ζ) = Σ_{m≥1} T(m)² Σ_j W_{m,j}²` where `T` is the
//! zonal transform of the (possibly smoothed) cap indicator. The inner sum
//! is basis independent and equals `(2m+1) Σ_{x,y} P_m(<x̂, ŷ>)`, which is
//! how [`variance_spectral`] evaluates it.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::arith::{eligible_in, enumerate_shell, Shell};
use crate::capstat::{cap_area, cap_intersection_area, count_units_in_cap, smoothed_count_units, SphericalCap};
use crate::error::{domain, Error, Result};
use crate::harmonics::{legendre_table, zonal_coefficients, HarmonicBasis, ZonalKernel};
use crate::quadrature::GaussLegendre;

/// Samples per Monte-Carlo block; each block draws from its own stream.
pub const MC_BLOCK: u64 = 8192;

/// `W_{m,j}(n)` for every `j` of one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylSumTable {
    pub n: u64,
    pub degree: u32,
    pub values: Vec<f64>,
}

impl WeylSumTable {
    pub fn square_sum(&self) -> f64 {
        self.values.iter().map(|w| w * w).sum()
    }
}

/// Sums `f` over the shell, pairing each point with its antipode so that odd
/// integrands cancel exactly.
fn antipodal_sum(shell: &Shell, dim: usize, mut f: impl FnMut([f64; 3], &mut [f64])) -> Vec<f64> {
    let pts = &shell.points;
    let count = pts.len();
    let mut total = vec![0.0; dim];
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    for i in 0..count / 2 {
        a.iter_mut().for_each(|v| *v = 0.0);
        b.iter_mut().for_each(|v| *v = 0.0);
        f(pts[i].to_f64(), &mut a);
        f(pts[count - 1 - i].to_f64(), &mut b);
        for k in 0..dim {
            total[k] += a[k] + b[k];
        }
    }
    total
}

/// `W_{m,j}(n) = Σ_x φ_j(x / √n)`.
pub fn weyl_sums(shell: &Shell, basis: &HarmonicBasis) -> WeylSumTable {
    let s = (shell.n as f64).sqrt();
    let values = antipodal_sum(shell, basis.dimension(), |p, acc| {
        basis.accumulate([p[0] / s, p[1] / s, p[2] / s], acc)
    });
    WeylSumTable { n: shell.n, degree: basis.degree, values }
}

/// The same sums by homogeneity: `n^{-m/2} Σ_x φ_j(x)`.
pub fn weyl_sums_homogeneous(shell: &Shell, basis: &HarmonicBasis) -> WeylSumTable {
    let scale = (shell.n as f64).powf(-(basis.degree as f64) / 2.0);
    let values = antipodal_sum(shell, basis.dimension(), |p, acc| basis.accumulate(p, acc))
        .into_iter()
        .map(|v| v * scale)
        .collect();
    WeylSumTable { n: shell.n, degree: basis.degree, values }
}

/// `Σ_j W_{m,j}(n)²` for `m = 0..=max` via the addition theorem, from the
/// histogram of pairwise inner products.
pub fn weyl_square_sums(shell: &Shell, max: u32) -> Vec<f64> {
    let mut out = vec![0.0; max as usize + 1];
    if shell.is_empty() {
        return out;
    }
    let n = shell.n as f64;
    for (i, &h) in shell.dot_histogram().iter().enumerate() {
        if h == 0 {
            continue;
        }
        let t = (i as f64 - n) / n;
        for (slot, p) in out.iter_mut().zip(legendre_table(max, t)) {
            *slot += h as f64 * p;
        }
    }
    for (m, v) in out.iter_mut().enumerate() {
        *v *= (2 * m + 1) as f64;
    }
    out
}

/// How the integral over cap translates is evaluated by [`variance_direct`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampler {
    MonteCarlo { samples: u64, seed: u64 },
    ProductQuadrature { n_theta: usize, n_phi: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceMethod {
    Direct,
    Spectral,
    /// Sharp caps only: the pair sum of cap-intersection areas.
    Exact,
}

/// A variance engine together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    Direct(Sampler),
    Spectral { truncation: u32 },
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceResult {
    pub n: u64,
    pub r: f64,
    pub rho: Option<f64>,
    pub value: f64,
    pub method: VarianceMethod,
    /// Standard error (Monte Carlo), coarse-grid difference (quadrature)
    /// or rigorous truncation bound (spectral).
    pub error_estimate: f64,
    pub truncation: Option<u32>,
}

fn validate(r: f64, rho: Option<f64>) -> Result<()> {
    cap_area(r)?;
    if let Some(rho) = rho {
        if !(rho > 0.0 && rho < PI / 2.0) {
            return domain(format!("smoothing radius {rho} outside (0, π/2)"));
        }
    }
    Ok(())
}

fn kernel(r: f64, rho: Option<f64>) -> ZonalKernel {
    match rho {
        None => ZonalKernel::SharpCap(r),
        Some(rho) => ZonalKernel::CapConvolvedDisc(r, rho),
    }
}

fn uniform_point(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-12 {
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    }
}

/// Count (sharp or smoothed) at one cap center.
fn count_at(units: &[[f64; 3]], center: [f64; 3], r: f64, rho: Option<f64>) -> f64 {
    let cap = SphericalCap { center, radius: r };
    match rho {
        None => count_units_in_cap(units, &cap) as f64,
        Some(rho) => smoothed_count_units(units, &cap, rho).unwrap_or(0.0),
    }
}

/// `∫ |Z(ζ) - Nσ|² dσ(ζ)` by sampling cap centers.
pub fn variance_direct(shell: &Shell, r: f64, rho: Option<f64>, sampler: Sampler) -> Result<VarianceResult> {
    validate(r, rho)?;
    let units = shell.unit_points();
    let mean = shell.count() as f64 * cap_area(r)?;
    let dev = |center: [f64; 3]| {
        let d = count_at(&units, center, r, rho) - mean;
        d * d
    };
    let (value, error_estimate) = match sampler {
        Sampler::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return domain("Monte Carlo needs at least two samples");
            }
            let blocks = samples.div_ceil(MC_BLOCK);
            let partial: Vec<(f64, f64)> = (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(b);
                    let len = MC_BLOCK.min(samples - b * MC_BLOCK);
                    let (mut s, mut s2) = (0.0, 0.0);
                    for _ in 0..len {
                        let f = dev(uniform_point(&mut rng));
                        s += f;
                        s2 += f * f;
                    }
                    (s, s2)
                })
                .collect();
            let (s, s2) = partial.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
            let n = samples as f64;
            let avg = s / n;
            let var = ((s2 - n * avg * avg) / (n - 1.0)).max(0.0);
            (avg, (var / n).sqrt())
        }
        Sampler::ProductQuadrature { n_theta, n_phi } => {
            if rho.is_none() {
                return Err(Error::Usage(
                    "product quadrature needs a smoothed count; use Monte Carlo for sharp caps".into(),
                ));
            }
            if n_theta < 2 || n_phi < 2 {
                return domain("product quadrature needs at least 2 × 2 nodes");
            }
            let fine = product_rule(n_theta, n_phi, &dev);
            let coarse = product_rule(n_theta.div_ceil(2), n_phi.div_ceil(2), &dev);
            (fine, (fine - coarse).abs())
        }
    };
    Ok(VarianceResult {
        n: shell.n,
        r,
        rho,
        value,
        method: VarianceMethod::Direct,
        error_estimate,
        truncation: None,
    })
}

/// Mean of `f` over the sphere: Gauss–Legendre in `cos θ`, midpoint in `φ`.
fn product_rule(n_theta: usize, n_phi: usize, f: &(impl Fn([f64; 3]) -> f64 + Sync)) -> f64 {
    let rule = GaussLegendre::new(n_theta);
    let rows: Vec<f64> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(&t, &w)| {
            let s = (1.0 - t * t).max(0.0).sqrt();
            let row: f64 = (0..n_phi)
                .map(|k| {
                    let phi = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
                    f([s * phi.cos(), s * phi.sin(), t])
                })
                .sum();
            0.5 * w * row / n_phi as f64
        })
        .collect();
    rows.iter().sum()
}

/// `Σ_{m>L} (2m+1) T(m)²` bounded through `|P_n(cos θ)| < (2/(π n sin θ))^{1/2}`.
fn tail_bound(r: f64, rho: Option<f64>, l: u32) -> f64 {
    if l < 2 {
        return f64::INFINITY;
    }
    let lf = (l - 1) as f64;
    let sr = r.sin();
    if sr <= 0.0 {
        return if r >= PI { 0.0 } else { f64::INFINITY };
    }
    let sharp = 1.0 / (PI * sr * lf);
    match rho {
        None => sharp,
        Some(rho) => {
            let area = (1.0 - rho.cos()) / 2.0;
            let smooth = 1.0 / (8.0 * PI * PI * sr * rho.sin() * area * area * lf.powi(4));
            sharp.min(smooth)
        }
    }
}

/// `Σ_{m=1}^{M} T(m)² Σ_j W_{m,j}²`, with a rigorous bound on the omitted tail.
///
/// For sharp caps the diagonal (`x = y`) part of the omitted tail,
/// `N Σ_{m>M} (2m+1) T(m)²`, is added in closed form: the indicator kernel
/// satisfies `Σ_{m≥0} (2m+1) T(m)² = σ`.
pub fn variance_spectral(shell: &Shell, r: f64, rho: Option<f64>, truncation: u32) -> Result<VarianceResult> {
    validate(r, rho)?;
    if truncation < 2 {
        return domain(format!("truncation degree {truncation} below 2"));
    }
    let coeffs = zonal_coefficients(kernel(r, rho), 4 * truncation)?.values;
    let squares = weyl_square_sums(shell, truncation);
    let mut value: f64 = (1..=truncation as usize).map(|m| coeffs[m] * coeffs[m] * squares[m]).sum();
    let count = shell.count() as f64;
    if rho.is_none() {
        let sigma = cap_area(r)?;
        let head: f64 = (1..=truncation as usize).map(|m| (2 * m + 1) as f64 * coeffs[m] * coeffs[m]).sum();
        value += count * (sigma - sigma * sigma - head).max(0.0);
    }
    let mid: f64 = (truncation as usize + 1..=4 * truncation as usize)
        .map(|m| (2 * m + 1) as f64 * coeffs[m] * coeffs[m])
        .sum();
    let error_estimate = if shell.is_empty() {
        0.0
    } else {
        count * count * (mid + tail_bound(r, rho, 4 * truncation))
    };
    Ok(VarianceResult {
        n: shell.n,
        r,
        rho,
        value: value.max(0.0),
        method: VarianceMethod::Spectral,
        error_estimate,
        truncation: Some(truncation),
    })
}

/// Sharp-cap variance without truncation:
/// `Σ_{x,y} |Ω_x ∩ Ω_y| - N²σ²`, the caps centred at the projected points.
pub fn variance_exact(shell: &Shell, r: f64) -> Result<VarianceResult> {
    validate(r, None)?;
    let n = shell.n as f64;
    let mut pairs = 0.0;
    for (i, &h) in shell.dot_histogram().iter().enumerate() {
        if h > 0 {
            let theta = ((i as f64 - n) / n).clamp(-1.0, 1.0).acos();
            pairs += h as f64 * cap_intersection_area(r, r, theta);
        }
    }
    let mean = shell.count() as f64 * cap_area(r)?;
    Ok(VarianceResult {
        n: shell.n,
        r,
        rho: None,
        value: (pairs - mean * mean).max(0.0),
        method: VarianceMethod::Exact,
        error_estimate: 1e-12 * pairs.max(1.0),
        truncation: None,
    })
}

/// Dispatches to the requested engine.
pub fn variance(shell: &Shell, r: f64, rho: Option<f64>, engine: Engine) -> Result<VarianceResult> {
    match engine {
        Engine::Direct(sampler) => variance_direct(shell, r, rho, sampler),
        Engine::Spectral { truncation } => variance_spectral(shell, r, rho, truncation),
        Engine::Exact => match rho {
            None => variance_exact(shell, r),
            Some(_) => Err(Error::Usage("the exact engine handles sharp caps only".into())),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageResult {
    pub x: u64,
    pub h: Option<u64>,
    pub delta: f64,
    pub c: f64,
    pub rho: Option<f64>,
    /// Target cap area `σ = c X^{δ/2}` and its radius.
    pub sigma: f64,
    pub r: f64,
    pub value: f64,
    /// `A / (X^{1/2} σ)`.
    pub ratio: f64,
    /// Eligible shells that entered the sum.
    pub terms: usize,
}

/// Averages the variance over eligible `n` in `[X, X+H]` (divided by `H`,
/// or by 1 when `H = 0`) or, without `H`, over `[1, X]` divided by `X`.
pub fn average_variance(
    x: u64,
    h: Option<u64>,
    delta: f64,
    c: f64,
    rho: Option<f64>,
    engine: Engine,
) -> Result<AverageResult> {
    average_variance_with(x, h, delta, c, rho, engine, false)
}

/// [`average_variance`], optionally summing over every `n` in the window
/// rather than the eligible ones only.
pub fn average_variance_with(
    x: u64,
    h: Option<u64>,
    delta: f64,
    c: f64,
    rho: Option<f64>,
    engine: Engine,
    complete_sum: bool,
) -> Result<AverageResult> {
    if x < 2 {
        return domain(format!("X = {x} below 2"));
    }
    if !(delta > -1.0 && delta < 0.0) || !(c > 0.0) {
        return domain(format!("need δ ∈ (-1, 0) and c > 0, got δ = {delta}, c = {c}"));
    }
    let sigma = c * (x as f64).powf(delta / 2.0);
    if !(sigma > 0.0 && sigma < 1.0) {
        return domain(format!("cap area {sigma} outside (0, 1)"));
    }
    let r = (1.0 - 2.0 * sigma).acos();
    validate(r, rho)?;
    let (lo, hi, divisor) = match h {
        Some(h) => (x, x + h, h.max(1) as f64),
        None => (1, x, x as f64),
    };
    let ns: Vec<u64> = if complete_sum { (lo..=hi).collect() } else { eligible_in(lo, hi).collect() };
    if ns.is_empty() {
        return domain("empty window: no eligible n");
    }
    let values: Vec<f64> = ns
        .par_iter()
        .map(|&n| {
            let shell = enumerate_shell(n)?;
            Ok(variance(&shell, r, rho, engine)?.value)
        })
        .collect::<Result<_>>()?;
    let value = values.iter().sum::<f64>() / divisor;
    Ok(AverageResult {
        x,
        h,
        delta,
        c,
        rho,
        sigma,
        r,
        value,
        ratio: value / ((x as f64).sqrt() * sigma),
        terms: ns.len(),
    })
}

/// `Var(Ω, n) / (N_n σ(Ω))`.
pub fn conjecture_ratio(shell: &Shell, r: f64, engine: Engine) -> Result<f64> {
    if shell.is_empty() {
        return domain(format!("shell {} is empty", shell.n));
    }
    let v = variance(shell, r, None, engine)?;
    Ok(v.value / (shell.count() as f64 * cap_area(r)?))
}
