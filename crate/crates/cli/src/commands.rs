//! One function per subcommand, each producing a [`Report`].

use std::sync::Arc;

use rayon::prelude::*;
use sphere_lab::arith::enumerate_shell;
use sphere_lab::harmonics::build_basis;
use sphere_lab::kloosterman::{kloosterman_bound_margin, kloosterman_sum, petersson_bound_checks};
use sphere_lab::lseries::{
    completed_lambda_partial_for, dirichlet_partial_for, fx_sum_over, residue_estimate,
};
use sphere_lab::modular::{
    rankin_selberg_from_profile, strip_profile, GridSpec, StripGrid, ThetaFamily, ThetaSeries,
};
use sphere_lab::variance::{
    average_variance_with, conjecture_ratio, variance, weyl_sums, Engine, Sampler,
};

use crate::config::{Params, DEFAULT_SEED};
use crate::report::Report;
use crate::CliError;

pub struct CommandSpec {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [&'static str],
    pub schema: &'static str,
    pub seeded: bool,
}

const ENGINE_KEYS: [&str; 7] = ["method", "M", "sampler", "samples", "seed", "n_theta", "n_phi"];

macro_rules! keys {
    ($($k:expr),* ; engine) => {
        &[$($k,)* ENGINE_KEYS[0], ENGINE_KEYS[1], ENGINE_KEYS[2], ENGINE_KEYS[3], ENGINE_KEYS[4], ENGINE_KEYS[5], ENGINE_KEYS[6]]
    };
    ($($k:expr),*) => { &[$($k),*] };
}

pub const COMMANDS: &[CommandSpec] = &[
    CommandSpec { name: "shell", about: "List the lattice points on the sphere x²+y²+z² = n", keys: keys!("n"), schema: "shell", seeded: false },
    CommandSpec { name: "weyl", about: "Weyl sums W_{m,j}(n) for every basis index j", keys: keys!("n", "n_max", "m"), schema: "weyl", seeded: false },
    CommandSpec { name: "variance", about: "Cap-count variance for one shell or a range of shells", keys: keys!("n", "n_max", "r", "rho"; engine), schema: "variance", seeded: true },
    CommandSpec { name: "average", about: "Windowed average of the variance with cap area c·X^{δ/2}", keys: keys!("x", "h", "delta", "c", "rho", "complete_sum"; engine), schema: "average", seeded: true },
    CommandSpec { name: "conjecture", about: "Var/(N_n σ) per shell; σ defaults to N_n^{-1/2}", keys: keys!("n", "n_max", "r"; engine), schema: "conjecture", seeded: true },
    CommandSpec { name: "theta-coeff", about: "Theta coefficients a(n) and b(n) for n ≤ N", keys: keys!("m", "j", "N"), schema: "theta-coeff", seeded: false },
    CommandSpec { name: "theta-l2", about: "Squared L² norms of theta series", keys: keys!("m", "j", "nx", "ny", "y_max"), schema: "theta-l2", seeded: false },
    CommandSpec { name: "rankin-selberg", about: "Both sides of the unfolding identity at real s > 1", keys: keys!("m", "j", "s", "N"), schema: "rankin-selberg", seeded: false },
    CommandSpec { name: "kloosterman", about: "Kloosterman sums K(a, b; c) and the Weil-type margin", keys: keys!("a", "b", "c", "c_max", "two_k"), schema: "kloosterman", seeded: false },
    CommandSpec { name: "petersson", about: "Petersson-type inequality for n ≤ N", keys: keys!("m", "j", "N", "c_max"), schema: "petersson", seeded: false },
    CommandSpec { name: "lseries", about: "Head of L_{k,j}(s) and of its completion", keys: keys!("m", "j", "s", "N"), schema: "lseries", seeded: false },
    CommandSpec { name: "fx", about: "Summed coefficient mass over the whole basis", keys: keys!("x", "m", "complete_sum"), schema: "fx", seeded: false },
    CommandSpec { name: "residue", about: "Cesàro estimate of the residue at s = 1", keys: keys!("m", "j", "x"), schema: "residue", seeded: false },
];

pub fn command_spec(name: &str) -> Option<&'static CommandSpec> {
    COMMANDS.iter().find(|c| c.name == name)
}

pub fn run_command(name: &str, p: &Params) -> Result<Report, CliError> {
    match name {
        "shell" => shell(p),
        "weyl" => weyl(p),
        "variance" => variance_cmd(p),
        "average" => average(p),
        "conjecture" => conjecture(p),
        "theta-coeff" => theta_coeff(p),
        "theta-l2" => theta_l2(p),
        "rankin-selberg" => rankin_selberg(p),
        "kloosterman" => kloosterman(p),
        "petersson" => petersson(p),
        "lseries" => lseries(p),
        "fx" => fx(p),
        "residue" => residue(p),
        other => Err(CliError::Usage(format!("unknown command {other}"))),
    }
}

struct EngineChoice {
    engine: Engine,
    method: &'static str,
    truncation: Option<u32>,
}

fn engine(p: &Params, default_method: &str) -> Result<EngineChoice, CliError> {
    let method: String = p.get_or("method", default_method.to_string())?;
    match method.as_str() {
        "spectral" => {
            let m = p.get_or("M", 128u32)?;
            Ok(EngineChoice { engine: Engine::Spectral { truncation: m }, method: "spectral", truncation: Some(m) })
        }
        "exact" => Ok(EngineChoice { engine: Engine::Exact, method: "exact", truncation: None }),
        "direct" => {
            let sampler = match p.get_or("sampler", "mc".to_string())?.as_str() {
                "mc" => Sampler::MonteCarlo {
                    samples: p.get_or("samples", 100_000u64)?,
                    seed: p.get_or("seed", DEFAULT_SEED)?,
                },
                "quadrature" => Sampler::ProductQuadrature {
                    n_theta: p.get_or("n_theta", 64usize)?,
                    n_phi: p.get_or("n_phi", 128usize)?,
                },
                other => return Err(CliError::Validation(format!("unknown sampler {other}"))),
            };
            Ok(EngineChoice { engine: Engine::Direct(sampler), method: "direct", truncation: None })
        }
        other => Err(CliError::Validation(format!("unknown method {other}"))),
    }
}

fn n_range(p: &Params) -> Result<Vec<u64>, CliError> {
    let n: u64 = p.get("n")?;
    let hi = p.get_or("n_max", n)?;
    if hi < n {
        return Err(CliError::Validation(format!("n_max = {hi} below n = {n}")));
    }
    Ok((n..=hi).collect())
}

fn sweep<T: Send>(
    ns: &[u64],
    f: impl Fn(u64) -> Result<T, CliError> + Sync + Send,
) -> Result<Vec<T>, CliError> {
    ns.par_iter().map(|&n| f(n)).collect()
}

fn shell(p: &Params) -> Result<Report, CliError> {
    let s = enumerate_shell(p.get("n")?)?;
    let mut r = Report::new("shell");
    for pt in &s.points {
        r.push(vec![pt.x.into(), pt.y.into(), pt.z.into()]);
    }
    Ok(r)
}

fn weyl(p: &Params) -> Result<Report, CliError> {
    let m: u32 = p.get("m")?;
    let basis = build_basis(m)?;
    let ns = n_range(p)?;
    let tables = sweep(&ns, |n| Ok(weyl_sums(&enumerate_shell(n)?, &basis)))?;
    let mut r = Report::new("weyl");
    for t in tables {
        for (j, v) in t.values.iter().enumerate() {
            r.push(vec![t.n.into(), m.into(), j.into(), (*v).into()]);
        }
    }
    Ok(r)
}

fn variance_cmd(p: &Params) -> Result<Report, CliError> {
    let rad: f64 = p.get("r")?;
    let rho: Option<f64> = p.opt("rho")?;
    let e = engine(p, "spectral")?;
    let ns = n_range(p)?;
    let results = sweep(&ns, |n| Ok(variance(&enumerate_shell(n)?, rad, rho, e.engine)?))?;
    let mut r = Report::new("variance");
    for v in results {
        r.push(vec![
            v.n.into(),
            v.r.into(),
            v.rho.into(),
            e.method.into(),
            e.truncation.into(),
            v.value.into(),
            v.error_estimate.into(),
        ]);
    }
    Ok(r)
}

fn average(p: &Params) -> Result<Report, CliError> {
    let e = engine(p, "spectral")?;
    let a = average_variance_with(
        p.get("x")?,
        p.opt("h")?,
        p.get("delta")?,
        p.get("c")?,
        p.opt("rho")?,
        e.engine,
        p.flag("complete_sum")?,
    )?;
    let mut r = Report::new("average");
    r.push(vec![
        a.x.into(),
        a.h.into(),
        a.delta.into(),
        a.c.into(),
        a.rho.into(),
        a.sigma.into(),
        a.r.into(),
        e.method.into(),
        e.truncation.into(),
        a.value.into(),
        a.ratio.into(),
        a.terms.into(),
    ]);
    Ok(r)
}

fn conjecture(p: &Params) -> Result<Report, CliError> {
    let e = engine(p, "exact")?;
    let fixed_r: Option<f64> = p.opt("r")?;
    let ns = n_range(p)?;
    let rows = sweep(&ns, |n| {
        let shell = enumerate_shell(n)?;
        if shell.is_empty() {
            return Ok(None);
        }
        let count = shell.count();
        let r = match fixed_r {
            Some(r) => r,
            None => (1.0 - 2.0 / (count as f64).sqrt()).acos(),
        };
        let sigma = (1.0 - r.cos()) / 2.0;
        let ratio = conjecture_ratio(&shell, r, e.engine)?;
        Ok(Some(vec![n.into(), count.into(), r.into(), sigma.into(), e.method.into(), ratio.into()]))
    })?;
    let mut r = Report::new("conjecture");
    rows.into_iter().flatten().for_each(|row| r.push(row));
    Ok(r)
}

fn indices(p: &Params, family: &ThetaFamily) -> Result<Vec<usize>, CliError> {
    match p.opt::<usize>("j")? {
        Some(j) if j < family.dimension() => Ok(vec![j]),
        Some(j) => Err(CliError::Validation(format!("j = {j} outside 0..{}", family.dimension()))),
        None => Ok((0..family.dimension()).collect()),
    }
}

fn theta_coeff(p: &Params) -> Result<Report, CliError> {
    let m: u32 = p.get("m")?;
    let n_max: u64 = p.get_or("N", 100)?;
    let family = ThetaFamily::new(m, n_max)?;
    let mut r = Report::new("theta-coeff");
    for j in indices(p, &family)? {
        for n in 1..=n_max {
            r.push(vec![
                m.into(),
                j.into(),
                n.into(),
                family.coefficient(j, n)?.into(),
                family.normalized_coefficient(j, n)?.into(),
            ]);
        }
    }
    Ok(r)
}

fn grid(p: &Params) -> Result<GridSpec, CliError> {
    let d = GridSpec::default();
    Ok(GridSpec { nx: p.get_or("nx", d.nx)?, ny: p.get_or("ny", d.ny)?, y_max: p.get_or("y_max", d.y_max)? })
}

fn theta_l2(p: &Params) -> Result<Report, CliError> {
    let m: u32 = p.get("m")?;
    let family = ThetaFamily::new(m, 512)?;
    let norms = family.l2_norms(grid(p)?)?;
    let mut r = Report::new("theta-l2");
    for j in indices(p, &family)? {
        r.push(vec![m.into(), j.into(), norms[j].into()]);
    }
    Ok(r)
}

fn rankin_selberg(p: &Params) -> Result<Report, CliError> {
    let m: u32 = p.get("m")?;
    let s: f64 = p.get("s")?;
    let cutoff: u64 = p.get_or("N", 20_000)?;
    let family = ThetaFamily::new(m, cutoff)?;
    let js = indices(p, &family)?;
    let norms = family.l2_norms(GridSpec::default())?;
    let profile = strip_profile(&family, StripGrid::default())?;
    let mut r = Report::new("rankin-selberg");
    for j in js {
        let rs = rankin_selberg_from_profile(&family, &profile, norms[j], j, s, cutoff)?;
        r.push(vec![
            m.into(),
            j.into(),
            s.into(),
            cutoff.into(),
            rs.lhs.into(),
            rs.rhs.into(),
            rs.relative_difference.into(),
        ]);
    }
    Ok(r)
}

fn kloosterman(p: &Params) -> Result<Report, CliError> {
    let a: i64 = p.get_or("a", 1)?;
    let b: i64 = p.get_or("b", a)?;
    let c: i64 = p.get("c")?;
    let two_k: i64 = p.get("two_k")?;
    let c_max: i64 = p.get_or("c_max", c)?;
    let cs: Vec<u64> = (c..=c_max).step_by(4).map(|c| c as u64).collect();
    let rows = sweep(&cs, |c| {
        let c = c as i64;
        let k = kloosterman_sum(a, b, c, two_k)?;
        let margin = if a == b { Some(kloosterman_bound_margin(a, c, two_k)?) } else { None };
        Ok(vec![a.into(), b.into(), c.into(), two_k.into(), k.re.into(), k.im.into(), k.norm().into(), margin.into()])
    })?;
    let mut r = Report::new("kloosterman");
    rows.into_iter().for_each(|row| r.push(row));
    Ok(r)
}

fn petersson(p: &Params) -> Result<Report, CliError> {
    let m: u32 = p.get("m")?;
    let n_max: u64 = p.get_or("N", 20)?;
    let c_max: u64 = p.get_or("c_max", 10_000)?;
    if n_max < 1 {
        return Err(CliError::Validation("N must be at least 1".into()));
    }
    let family = ThetaFamily::new(m, n_max)?;
    let norms = family.l2_norms(GridSpec::default())?;
    let explicit = p.raw("j").is_some();
    let vanishing = family.invariant_dimension() == 0;
    let js: Vec<usize> =
        indices(p, &family)?.into_iter().filter(|&j| explicit || vanishing || norms[j] > 0.0).collect();
    if js.is_empty() {
        return Err(CliError::Validation(format!("every θ_({m}, j) has zero norm")));
    }
    let ns: Vec<u64> = (1..=n_max).collect();
    let mut r = Report::new("petersson");
    for j in js {
        for chk in petersson_bound_checks(&family, norms[j], j, &ns, c_max)? {
            r.push(vec![
                m.into(),
                j.into(),
                chk.n.into(),
                chk.c_max.into(),
                chk.lhs.into(),
                chk.rhs.into(),
                chk.tail.into(),
                chk.margin.into(),
            ]);
        }
    }
    Ok(r)
}

fn lseries(p: &Params) -> Result<Report, CliError> {
    let m: u32 = p.get("m")?;
    let j: usize = p.get("j")?;
    let s: f64 = p.get("s")?;
    let cutoff: u64 = p.get_or("N", 2000)?;
    let theta = ThetaSeries::new(Arc::new(ThetaFamily::new(m, cutoff.max(1))?), j)?;
    let l = dirichlet_partial_for(&theta, s, cutoff)?;
    let lambda = completed_lambda_partial_for(&theta, s, cutoff)?;
    let mut r = Report::new("lseries");
    r.push(vec![
        m.into(),
        j.into(),
        s.into(),
        cutoff.into(),
        l.value.into(),
        l.tail_bound.into(),
        l.tail_estimate.into(),
        lambda.into(),
    ]);
    Ok(r)
}

fn fx(p: &Params) -> Result<Report, CliError> {
    let x: u64 = p.get("x")?;
    let m: u32 = p.get("m")?;
    let complete = p.flag("complete_sum")?;
    if x < 1 {
        return Err(CliError::Validation("x must be at least 1".into()));
    }
    let value = if m % 2 == 1 { 0.0 } else { fx_sum_over(&ThetaFamily::new(m, x)?, x, complete)? };
    let mut r = Report::new("fx");
    r.push(vec![x.into(), m.into(), (if complete { "true" } else { "false" }).into(), value.into()]);
    Ok(r)
}

fn residue(p: &Params) -> Result<Report, CliError> {
    let e = residue_estimate(p.get("m")?, p.get("j")?, p.get("x")?)?;
    let mut r = Report::new("residue");
    r.push(vec![e.m.into(), e.j.into(), e.x.into(), e.raw.into(), e.normalized.into()]);
    Ok(r)
}
