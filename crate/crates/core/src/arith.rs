//! Integer arithmetic: sphere shells, residue classes, divisors, Jacobi symbols,
//! modular inverses and gamma values at half-integers.

use std::f64::consts::PI;

use crate::error::{domain, capacity, Result};

/// Largest radius squared accepted by [`enumerate_shell`].
pub const MAX_SHELL_N: u64 = 50_000_000;

/// A point of `Z^3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticePoint {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl LatticePoint {
    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        Self { x, y, z }
    }

    pub fn norm_sq(&self) -> u64 {
        (self.x * self.x + self.y * self.y + self.z * self.z) as u64
    }

    pub fn dot(&self, other: &LatticePoint) -> i64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn to_f64(self) -> [f64; 3] {
        [self.x as f64, self.y as f64, self.z as f64]
    }

    /// Radial projection onto the unit sphere. The origin maps to itself.
    pub fn unit(&self) -> [f64; 3] {
        let r = (self.norm_sq() as f64).sqrt();
        if r == 0.0 {
            return [0.0; 3];
        }
        [self.x as f64 / r, self.y as f64 / r, self.z as f64 / r]
    }

    /// Applies a signed permutation matrix.
    pub fn transform(&self, g: &SignedPermutation) -> LatticePoint {
        let v = [self.x, self.y, self.z];
        let w: [i64; 3] = std::array::from_fn(|row| g.sign[row] * v[g.perm[row]]);
        LatticePoint::new(w[0], w[1], w[2])
    }
}

/// The integer points on the sphere of radius `√n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Shell {
    pub n: u64,
    /// Points in lexicographic order of `(x, y, z)`.
    pub points: Vec<LatticePoint>,
    /// Whether `n` lies in the eligible class (`n mod 8 ∉ {0, 4, 7}`).
    pub eligible: bool,
}

impl Shell {
    /// `N_n`, the number of points.
    pub fn count(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points projected onto the unit sphere, in the same order as `points`.
    pub fn unit_points(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(LatticePoint::unit).collect()
    }

    /// Histogram of pairwise inner products `<x, y>` for ordered pairs of
    /// points. Entry `i` counts pairs with inner product `i - n`.
    pub fn dot_histogram(&self) -> Vec<u64> {
        let n = self.n as i64;
        let mut hist = vec![0u64; (2 * n + 1) as usize];
        for p in &self.points {
            for q in &self.points {
                hist[(p.dot(q) + n) as usize] += 1;
            }
        }
        hist
    }
}

/// `true` iff `n mod 8 ∉ {0, 4, 7}`.
pub fn residue_class_member(n: u64) -> bool {
    !matches!(n % 8, 0 | 4 | 7)
}

/// Eligible integers in the closed interval `[lo, hi]`.
pub fn eligible_in(lo: u64, hi: u64) -> impl Iterator<Item = u64> {
    (lo.max(1)..=hi).filter(|&n| residue_class_member(n))
}

/// Floor of the square root, exact for all `u64`.
pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// All integer solutions of `x² + y² + z² = n` in lexicographic order.
pub fn enumerate_shell(n: u64) -> Result<Shell> {
    if n == 0 {
        return domain("shell index must be positive");
    }
    if n > MAX_SHELL_N {
        return capacity(format!("shell index {n} exceeds ceiling {MAX_SHELL_N}"));
    }
    let bound = isqrt(n) as i64;
    let mut points = Vec::new();
    for x in -bound..=bound {
        let rest_x = n - (x * x) as u64;
        let by = isqrt(rest_x) as i64;
        for y in -by..=by {
            let rest = rest_x - (y * y) as u64;
            let z = isqrt(rest) as i64;
            if (z * z) as u64 == rest {
                if z == 0 {
                    points.push(LatticePoint::new(x, y, 0));
                } else {
                    points.push(LatticePoint::new(x, y, -z));
                    points.push(LatticePoint::new(x, y, z));
                }
            }
        }
    }
    Ok(Shell { n, points, eligible: residue_class_member(n) })
}

/// Number of positive divisors.
pub fn divisor_count(n: u64) -> u64 {
    assert!(n >= 1, "divisor_count of zero");
    let mut m = n;
    let mut count = 1;
    let mut p = 2;
    while p * p <= m {
        let mut e = 0;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        count *= e + 1;
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        count *= 2;
    }
    count
}

pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Jacobi symbol `(c/d)` for odd positive `d` and any integer `c`.
///
/// For `c ≡ 0 (mod 4)` the value is periodic in `d` with period `c`, which is
/// what the half-integral weight multiplier needs.
pub fn jacobi_symbol(c: i64, d: i64) -> Result<i32> {
    if d <= 0 || d % 2 == 0 {
        return domain(format!("Jacobi symbol needs an odd positive modulus, got {d}"));
    }
    let mut a = c.rem_euclid(d) as u64;
    let mut n = d as u64;
    let mut sign = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    Ok(if n == 1 { sign } else { 0 })
}

/// Inverse of `d` modulo `c`, in `[0, c)`.
pub fn mod_inverse(d: i64, c: i64) -> Result<i64> {
    if c <= 0 {
        return domain(format!("modulus must be positive, got {c}"));
    }
    if c == 1 {
        return Ok(0);
    }
    let (mut old_r, mut r) = (d.rem_euclid(c), c);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return domain(format!("{d} is not invertible modulo {c}"));
    }
    Ok(old_s.rem_euclid(c))
}

/// `Γ(t)` for `t = two_t / 2 > 0`, by the factorial and double-factorial
/// formulas. Overflows to `+inf` past `t ≈ 171`; use [`ln_gamma_half`] there.
pub fn gamma_half(two_t: u32) -> Result<f64> {
    if two_t == 0 {
        return domain("gamma is undefined at 0");
    }
    let mut value = if two_t % 2 == 0 { 1.0 } else { PI.sqrt() };
    // Γ(t) = (t-1)(t-2)...(t0) Γ(t0) with t0 ∈ {1/2, 1}.
    let mut k = two_t;
    while k > 2 {
        k -= 2;
        value *= k as f64 / 2.0;
    }
    Ok(value)
}

/// `ln Γ(t)` for `t = two_t / 2 > 0`.
pub fn ln_gamma_half(two_t: u32) -> Result<f64> {
    if two_t == 0 {
        return domain("gamma is undefined at 0");
    }
    let mut value = if two_t % 2 == 0 { 0.0 } else { 0.5 * PI.ln() };
    let mut k = two_t;
    while k > 2 {
        k -= 2;
        value += (k as f64 / 2.0).ln();
    }
    Ok(value)
}

/// A signed permutation of coordinates: `(g v)_row = sign[row] * v[perm[row]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedPermutation {
    pub perm: [usize; 3],
    pub sign: [i64; 3],
}

impl SignedPermutation {
    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|row| self.sign[row] as f64 * v[self.perm[row]])
    }
}

/// The 48 symmetries of the cube, which preserve every shell.
pub fn octahedral_group() -> Vec<SignedPermutation> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(48);
    for perm in PERMS {
        for bits in 0..8 {
            let sign = std::array::from_fn(|i| if bits >> i & 1 == 1 { -1 } else { 1 });
            out.push(SignedPermutation { perm, sign });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_count(n: u64) -> usize {
        let b = isqrt(n) as i64;
        let mut count = 0;
        for x in -b..=b {
            for y in -b..=b {
                for z in -b..=b {
                    if (x * x + y * y + z * z) as u64 == n {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    #[test]
    fn residue_class_examples() {
        assert!(residue_class_member(3));
        assert!(!residue_class_member(7));
        assert!(!residue_class_member(8));
        assert!(!residue_class_member(12));
        assert!(residue_class_member(1));
    }

    #[test]
    fn small_shells() {
        let s1 = enumerate_shell(1).unwrap();
        assert_eq!(s1.count(), 6);
        assert!(s1.points.contains(&LatticePoint::new(0, 0, -1)));
        assert!(enumerate_shell(7).unwrap().is_empty());
        let s5 = enumerate_shell(5).unwrap();
        assert_eq!(s5.count(), 24);
        for p in &s5.points {
            let mut a = [p.x.abs(), p.y.abs(), p.z.abs()];
            a.sort();
            assert_eq!(a, [0, 1, 2]);
        }
        let mut sorted = s5.points.clone();
        sorted.sort();
        assert_eq!(sorted, s5.points);
    }

    #[test]
    fn shell_errors() {
        assert!(matches!(enumerate_shell(0), Err(crate::Error::Domain(_))));
        assert!(matches!(enumerate_shell(MAX_SHELL_N + 1), Err(crate::Error::Capacity(_))));
    }

    #[test]
    fn shell_matches_brute_force_small() {
        for n in 1..=300 {
            assert_eq!(enumerate_shell(n).unwrap().count(), brute_count(n), "n = {n}");
        }
    }

    #[test]
    fn shells_are_octahedrally_symmetric() {
        let group = octahedral_group();
        assert_eq!(group.len(), 48);
        for n in [3u64, 9, 26, 101, 350] {
            let shell = enumerate_shell(n).unwrap();
            for g in &group {
                let mut image: Vec<_> = shell.points.iter().map(|p| p.transform(g)).collect();
                image.sort();
                assert_eq!(image, shell.points);
            }
        }
    }

    #[test]
    fn four_adic_exclusion() {
        for a in 0..3u32 {
            for b in 0..20u64 {
                let n = 4u64.pow(a) * (8 * b + 7);
                assert_eq!(enumerate_shell(n).unwrap().count(), 0, "n = {n}");
            }
        }
    }

    #[test]
    fn divisors() {
        assert_eq!(divisor_count(1), 1);
        assert_eq!(divisor_count(12), 6);
        for p in [2u64, 3, 5, 7919, 104_729] {
            assert_eq!(divisor_count(p), 2);
        }
        assert_eq!(divisor_count(360), 24);
    }

    #[test]
    fn jacobi_examples() {
        assert_eq!(jacobi_symbol(1, 9).unwrap(), 1);
        assert_eq!(jacobi_symbol(2, 15).unwrap(), 1);
        assert_eq!(jacobi_symbol(3, 9).unwrap(), 0);
        assert_eq!(jacobi_symbol(2, 3).unwrap(), -1);
        assert_eq!(jacobi_symbol(-1, 3).unwrap(), -1);
        assert_eq!(jacobi_symbol(-1, 5).unwrap(), 1);
        assert!(jacobi_symbol(3, 10).is_err());
        assert!(jacobi_symbol(3, -3).is_err());
    }

    #[test]
    fn jacobi_matches_euler_criterion_for_primes() {
        for p in [3i64, 5, 7, 11, 13, 97] {
            for a in 0..p {
                let mut pow = 1i64;
                for _ in 0..(p - 1) / 2 {
                    pow = pow * a % p;
                }
                let euler = if pow == p - 1 { -1 } else { pow as i32 };
                assert_eq!(jacobi_symbol(a, p).unwrap(), euler, "({a}/{p})");
            }
        }
    }

    #[test]
    fn jacobi_multiplicative() {
        for d in (1..=99).step_by(2) {
            for a in 1..=50 {
                for b in 1..=50 {
                    let lhs = jacobi_symbol(a * b, d).unwrap();
                    let rhs = jacobi_symbol(a, d).unwrap() * jacobi_symbol(b, d).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn jacobi_periodic_in_modulus_for_multiples_of_four() {
        for c in (4..=60).step_by(4) {
            for d in (1..200).step_by(2) {
                assert_eq!(jacobi_symbol(c, d).unwrap(), jacobi_symbol(c, d + c).unwrap());
            }
        }
    }

    #[test]
    fn inverses() {
        assert_eq!(mod_inverse(3, 4).unwrap(), 3);
        assert_eq!(mod_inverse(1, 17).unwrap(), 1);
        assert_eq!(mod_inverse(5, 12).unwrap(), 5);
        assert_eq!(mod_inverse(-1, 12).unwrap(), 11);
        assert!(mod_inverse(4, 12).is_err());
    }

    #[test]
    fn gamma_values() {
        let sqrt_pi = PI.sqrt();
        assert!((gamma_half(1).unwrap() - sqrt_pi).abs() < 1e-15);
        assert!((gamma_half(5).unwrap() - 0.75 * sqrt_pi).abs() < 1e-15);
        assert_eq!(gamma_half(8).unwrap(), 6.0);
        assert!(gamma_half(0).is_err());
        for two_t in 1..=60u32 {
            let t = two_t as f64 / 2.0;
            let lhs = gamma_half(two_t + 2).unwrap();
            let rhs = t * gamma_half(two_t).unwrap();
            assert!((lhs - rhs).abs() <= 1e-14 * rhs.abs());
            let ln = ln_gamma_half(two_t).unwrap();
            assert!((ln.exp() - gamma_half(two_t).unwrap()).abs() <= 1e-12 * gamma_half(two_t).unwrap());
        }
    }

    #[test]
    fn dot_histogram_counts_pairs() {
        let shell = enumerate_shell(1).unwrap();
        let h = shell.dot_histogram();
        assert_eq!(h, vec![6, 24, 6]);
    }
}
