//! Spherical caps: areas, sharp and smoothed counts of shell points.

use std::f64::consts::PI;

use crate::arith::Shell;
use crate::error::{domain, Result};

/// Slack applied when deciding whether a point lies on a cap boundary.
pub const BOUNDARY_SLACK: f64 = 1e-12;

/// A closed geodesic ball on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCap {
    pub center: [f64; 3],
    pub radius: f64,
}

impl SphericalCap {
    pub fn new(center: [f64; 3], radius: f64) -> Result<Self> {
        let norm = dot(center, center).sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return domain(format!("cap center has norm {norm}"));
        }
        if !(radius > 0.0 && radius <= PI) {
            return domain(format!("cap radius {radius} outside (0, π]"));
        }
        let center = [center[0] / norm, center[1] / norm, center[2] / norm];
        Ok(Self { center, radius })
    }

    pub fn area(&self) -> f64 {
        (1.0 - self.radius.cos()) / 2.0
    }

    pub fn contains(&self, v: [f64; 3]) -> bool {
        dot(self.center, v) >= (self.radius + BOUNDARY_SLACK).min(PI).cos()
    }
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Normalized area `(1 - cos r)/2` of a cap of angular radius `r`.
pub fn cap_area(r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= PI) {
        return domain(format!("cap radius {r} outside (0, π]"));
    }
    Ok((1.0 - r.cos()) / 2.0)
}

/// Angular radius of a cap with normalized area `sigma ∈ (0, 1]`.
pub fn cap_radius_for_area(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return domain(format!("cap area {sigma} outside (0, 1]"));
    }
    Ok((1.0 - 2.0 * sigma).clamp(-1.0, 1.0).acos())
}

/// Great-circle distance between unit vectors.
pub fn geodesic_distance(u: [f64; 3], v: [f64; 3]) -> Result<f64> {
    for w in [u, v] {
        let n = dot(w, w).sqrt();
        if (n - 1.0).abs() > 1e-10 {
            return domain(format!("vector of norm {n} is not on the unit sphere"));
        }
    }
    Ok(dot(u, v).clamp(-1.0, 1.0).acos())
}

/// Number of projected shell points inside the closed cap.
pub fn count_in_cap(shell: &Shell, cap: &SphericalCap) -> usize {
    count_units_in_cap(&shell.unit_points(), cap)
}

pub fn count_units_in_cap(units: &[[f64; 3]], cap: &SphericalCap) -> usize {
    let threshold = (cap.radius + BOUNDARY_SLACK).min(PI).cos();
    units.iter().filter(|&&u| dot(cap.center, u) >= threshold).count()
}

/// Normalized area of the intersection of caps with radii `r1`, `r2` whose
/// centers are `theta` apart.
pub fn cap_intersection_area(r1: f64, r2: f64, theta: f64) -> f64 {
    let a1 = (1.0 - r1.cos()) / 2.0;
    let a2 = (1.0 - r2.cos()) / 2.0;
    if theta >= r1 + r2 {
        return 0.0;
    }
    if theta <= (r1 - r2).abs() {
        return a1.min(a2);
    }
    if theta >= 2.0 * PI - r1 - r2 {
        // Complements are disjoint; the caps together cover the sphere.
        return a1 + a2 - 1.0;
    }
    let (c1, s1) = (r1.cos(), r1.sin());
    let (c2, s2) = (r2.cos(), r2.sin());
    let (ct, st) = (theta.cos(), theta.sin());
    let acos = |x: f64| x.clamp(-1.0, 1.0).acos();
    let vertex = acos((ct - c1 * c2) / (s1 * s2));
    let arc1 = acos((c2 - ct * c1) / (st * s1));
    let arc2 = acos((c1 - ct * c2) / (st * s2));
    let area = 2.0 * (PI - vertex - c1 * arc1 - c2 * arc2);
    (area / (4.0 * PI)).clamp(0.0, a1.min(a2))
}

/// Sharp count against the cap convolved with the unit-mass disc of radius `rho`.
pub fn smoothed_count(shell: &Shell, cap: &SphericalCap, rho: f64) -> Result<f64> {
    smoothed_count_units(&shell.unit_points(), cap, rho)
}

pub fn smoothed_count_units(units: &[[f64; 3]], cap: &SphericalCap, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < PI / 2.0) {
        return domain(format!("smoothing radius {rho} outside (0, π/2)"));
    }
    let disc = (1.0 - rho.cos()) / 2.0;
    let far = if cap.radius + rho < PI { (cap.radius + rho).cos() } else { -2.0 };
    let near = (cap.radius - rho).abs().cos();
    let inner = disc.min((1.0 - cap.radius.cos()) / 2.0);
    let total: f64 = units
        .iter()
        .map(|&u| {
            let t = dot(cap.center, u);
            if t <= far {
                0.0
            } else if t > near {
                inner
            } else {
                cap_intersection_area(cap.radius, rho, t.clamp(-1.0, 1.0).acos())
            }
        })
        .sum();
    Ok(total / disc)
}
