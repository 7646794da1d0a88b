//! Metric profiles `f` for `ds² = f²(y) dx² + dy²` and torus/cover coordinates.
//!
//! Both circle factors have period 1. For the round profile
//! `f(y) = R − r cos(2πy)` this means lengths are those of the euclidean
//! torus of revolution divided by `2π` in the `x` direction and the meridian
//! is normalized to length 1; comparisons with the euclidean torus hold up to
//! that constant factor.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, floor, sin, sqrt};

use crate::{Error, Result};

const TAU: f64 = 2.0 * PI;

/// Number of grid points used for the positivity / minimum scan.
pub const POSITIVITY_GRID: usize = 10_000;

/// The closed-form family a profile belongs to.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum ProfileKind {
    Flat,
    /// `f(y) = R − r cos(2πy)`.
    Round {
        r: f64,
        #[cfg_attr(feature = "serde", serde(rename = "R"))]
        big_r: f64,
    },
    /// `f(y) = a0 + Σ cos[k−1]·cos(2πky) + sin[k−1]·sin(2πky)`.
    Fourier {
        a0: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        cos: Vec<f64>,
        #[cfg_attr(feature = "serde", serde(default))]
        sin: Vec<f64>,
    },
}

/// `f(y)` together with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileValue {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
}

/// A validated, strictly positive profile.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "ProfileKind", into = "ProfileKind"))]
pub struct MetricProfile {
    kind: ProfileKind,
    minima: Vec<(f64, f64)>,
    min_value: f64,
    max_value: f64,
}

impl TryFrom<ProfileKind> for MetricProfile {
    type Error = Error;

    fn try_from(kind: ProfileKind) -> Result<Self> {
        MetricProfile::new(kind)
    }
}

impl From<MetricProfile> for ProfileKind {
    fn from(p: MetricProfile) -> Self {
        p.kind
    }
}

impl MetricProfile {
    pub fn new(kind: ProfileKind) -> Result<Self> {
        match &kind {
            ProfileKind::Flat => {}
            ProfileKind::Round { r, big_r } => {
                if !(r.is_finite() && big_r.is_finite()) || *r <= 0.0 {
                    return Err(Error::InvalidProfile("round profile needs r > 0"));
                }
                if big_r <= r {
                    return Err(Error::InvalidProfile("round profile needs R > r"));
                }
            }
            ProfileKind::Fourier { a0, cos, sin } => {
                if !a0.is_finite() || cos.iter().chain(sin.iter()).any(|c| !c.is_finite()) {
                    return Err(Error::InvalidProfile("non-finite Fourier coefficient"));
                }
            }
        }
        let mut profile = MetricProfile { kind, minima: Vec::new(), min_value: 0.0, max_value: 0.0 };
        profile.scan()?;
        Ok(profile)
    }

    pub fn flat() -> Self {
        Self::new(ProfileKind::Flat).expect("flat profile is valid")
    }

    pub fn round(r: f64, big_r: f64) -> Result<Self> {
        Self::new(ProfileKind::Round { r, big_r })
    }

    pub fn fourier(a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        Self::new(ProfileKind::Fourier { a0, cos, sin })
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn is_flat(&self) -> bool {
        match &self.kind {
            ProfileKind::Flat => true,
            ProfileKind::Round { .. } => false,
            ProfileKind::Fourier { cos, sin, .. } => {
                cos.iter().chain(sin.iter()).all(|c| *c == 0.0)
            }
        }
    }

    /// Grid scan plus Newton polish of every local minimum; rejects `min f ≤ 0`.
    fn scan(&mut self) -> Result<()> {
        if self.is_flat() {
            let c = self.value(0.0);
            if c <= 0.0 {
                return Err(Error::NonPositiveProfile { min: c, at: 0.0 });
            }
            self.minima.clear();
            self.min_value = c;
            self.max_value = c;
            return Ok(());
        }
        let n = POSITIVITY_GRID;
        let h = 1.0 / n as f64;
        let vals: Vec<f64> = (0..n).map(|i| self.value(i as f64 * h)).collect();
        let mut minima = Vec::new();
        let mut max_value = f64::NEG_INFINITY;
        for i in 0..n {
            let prev = vals[(i + n - 1) % n];
            let next = vals[(i + 1) % n];
            max_value = max_value.max(vals[i]);
            if vals[i] <= prev && vals[i] < next {
                let y = self.polish_critical(i as f64 * h, h);
                minima.push((y, self.value(y)));
            }
        }
        let (at, min) = minima
            .iter()
            .copied()
            .fold((0.0, f64::INFINITY), |acc, m| if m.1 < acc.1 { m } else { acc });
        if !(min > 0.0) {
            return Err(Error::NonPositiveProfile { min, at });
        }
        self.minima = minima;
        self.min_value = min;
        self.max_value = max_value;
        Ok(())
    }

    fn polish_critical(&self, y0: f64, bracket: f64) -> f64 {
        let mut y = y0;
        for _ in 0..50 {
            let v = self.eval(y);
            if v.d2f <= 0.0 {
                break;
            }
            let step = v.df / v.d2f;
            if step.abs() > bracket {
                break;
            }
            y -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        if (y - y0).abs() > bracket {
            y0
        } else {
            wrap01(y)
        }
    }

    /// `(f, f', f'')` at `y`.
    pub fn eval(&self, y: f64) -> ProfileValue {
        match &self.kind {
            ProfileKind::Flat => ProfileValue { f: 1.0, df: 0.0, d2f: 0.0 },
            ProfileKind::Round { r, big_r } => {
                let (s, c) = (sin(TAU * y), cos(TAU * y));
                ProfileValue { f: big_r - r * c, df: r * TAU * s, d2f: r * TAU * TAU * c }
            }
            ProfileKind::Fourier { a0, cos: cs, sin: ss } => {
                let mut v = ProfileValue { f: *a0, df: 0.0, d2f: 0.0 };
                let harmonics = cs.len().max(ss.len());
                for k in 1..=harmonics {
                    let a = cs.get(k - 1).copied().unwrap_or(0.0);
                    let b = ss.get(k - 1).copied().unwrap_or(0.0);
                    let w = TAU * k as f64;
                    let (s, c) = (sin(w * y), cos(w * y));
                    v.f += a * c + b * s;
                    v.df += w * (b * c - a * s);
                    v.d2f -= w * w * (a * c + b * s);
                }
                v
            }
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        self.eval(y).f
    }

    /// Gaussian curvature `K = −f''/f`.
    pub fn gaussian_curvature(&self, y: f64) -> f64 {
        let v = self.eval(y);
        -v.d2f / v.f
    }

    /// g-length of the circle of latitude `x ↦ (x, y)`.
    pub fn latitude_length(&self, y: f64) -> f64 {
        self.value(y)
    }

    /// Distance from `p` to the circle of latitude `T × {a}`.
    ///
    /// Any path gains at least its vertical displacement in length and the
    /// vertical segment realizes it, so this is the circle distance in `y`.
    pub fn dist_to_latitude(&self, p: TorusPoint, a: f64) -> f64 {
        circle_dist(p.y, a)
    }

    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    /// Local minima `(y, f(y))` found by the construction scan (empty for flat).
    pub fn local_minima(&self) -> &[(f64, f64)] {
        &self.minima
    }

    /// The unique global minimum location, if the scan found exactly one.
    pub fn unique_minimum(&self, tol: f64) -> Option<f64> {
        let mut hits = self.minima.iter().filter(|m| m.1 <= self.min_value + tol);
        let first = hits.next()?;
        if hits.any(|m| circle_dist(m.0, first.0) > 1e-6) {
            None
        } else {
            Some(first.0)
        }
    }

    /// Checks invariance under `y ↦ 2a − y` on a sample grid.
    pub fn is_reflection_symmetric(&self, a: f64, tol: f64) -> bool {
        let n = 1000;
        (0..n).all(|i| {
            let s = i as f64 / n as f64;
            (self.value(a + s) - self.value(a - s)).abs() <= tol
        })
    }

    /// Local metric norm of a displacement based at latitude `y`.
    pub fn norm(&self, y: f64, dx: f64, dy: f64) -> f64 {
        let f = self.value(y);
        sqrt(f * f * dx * dx + dy * dy)
    }

    /// Short-range distance between two cover points (midpoint metric).
    pub fn local_distance(&self, a: CoverPoint, b: CoverPoint) -> f64 {
        self.norm(0.5 * (a.y + b.y), b.x - a.x, b.y - a.y)
    }

    /// Short-range distance between torus points, using the nearest lift.
    pub fn torus_local_distance(&self, a: TorusPoint, b: TorusPoint) -> f64 {
        let dx = signed_circle_diff(b.x, a.x);
        let dy = signed_circle_diff(b.y, a.y);
        self.norm(a.y + 0.5 * dy, dx, dy)
    }
}

/// A point of `T² = ℝ²/ℤ²`, stored in `[0,1) × [0,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        TorusPoint { x: wrap01(x), y: wrap01(y) }
    }

    /// The lift in the fundamental domain `[0,1)²`.
    pub fn lift(self) -> CoverPoint {
        CoverPoint::new(self.x, self.y)
    }
}

/// A point of the universal cover `ℝ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverPoint {
    pub x: f64,
    pub y: f64,
}

impl CoverPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        CoverPoint { x, y }
    }

    pub fn project(self) -> TorusPoint {
        TorusPoint::new(self.x, self.y)
    }

    pub fn translate(self, m: i64, n: i64) -> Self {
        CoverPoint::new(self.x + m as f64, self.y + n as f64)
    }

    pub fn euclid(self, other: CoverPoint) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

/// Canonical representative of `v` in `[0, 1)`.
pub fn wrap01(v: f64) -> f64 {
    let w = v - floor(v);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// `a − b` reduced to `[−1/2, 1/2)`.
pub fn signed_circle_diff(a: f64, b: f64) -> f64 {
    let d = wrap01(a - b);
    if d >= 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// Distance on the circle `ℝ/ℤ`.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    signed_circle_diff(a, b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn round() -> MetricProfile {
        MetricProfile::round(1.0, 2.0).unwrap()
    }

    fn fourier() -> MetricProfile {
        MetricProfile::fourier(2.0, alloc::vec![-0.6, 0.15], alloc::vec![0.1, -0.05]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let flat = MetricProfile::flat();
        assert_eq!(flat.eval(0.3), ProfileValue { f: 1.0, df: 0.0, d2f: 0.0 });
        let v = round().eval(0.0);
        assert_eq!((v.f, v.df), (1.0, 0.0));
        assert_relative_eq!(v.d2f, 4.0 * PI * PI, max_relative = 1e-15);
        let v = round().eval(0.5);
        assert_relative_eq!(v.f, 3.0, max_relative = 1e-15);
        assert!(v.df.abs() < 1e-14);
        assert_relative_eq!(v.d2f, -4.0 * PI * PI, max_relative = 1e-15);
    }

    #[test]
    fn derivatives_match_central_differences() {
        // Relative to the sup norm of each derivative over the circle.
        let h = 1e-4;
        for p in [round(), fourier()] {
            let grid: Vec<f64> = (0..50).map(|i| i as f64 / 50.0 + 0.013).collect();
            let sup1 = grid.iter().map(|&y| p.eval(y).df.abs()).fold(1.0, f64::max);
            let sup2 = grid.iter().map(|&y| p.eval(y).d2f.abs()).fold(1.0, f64::max);
            for &y in &grid {
                let v = p.eval(y);
                let fd1 = (p.value(y + h) - p.value(y - h)) / (2.0 * h);
                let fd2 = (p.value(y + h) - 2.0 * v.f + p.value(y - h)) / (h * h);
                assert!((fd1 - v.df).abs() / sup1 < 1e-6, "f' at {y}");
                assert!((fd2 - v.d2f).abs() / sup2 < 1e-6, "f'' at {y}: {fd2} vs {}", v.d2f);
            }
        }
    }

    #[test]
    fn curvature_examples() {
        assert_eq!(MetricProfile::flat().gaussian_curvature(0.77), 0.0);
        assert_relative_eq!(round().gaussian_curvature(0.0), -4.0 * PI * PI, max_relative = 1e-14);
        assert_relative_eq!(round().gaussian_curvature(0.5), 4.0 * PI * PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn curvature_matches_brioschi_finite_differences() {
        // For E = f², F = 0, G = 1 Brioschi reduces to
        // K = −(E_yy)/(2E) + (E_y)²/(4E²); E is differenced numerically.
        let p = fourier();
        let h = 1e-4;
        for i in 0..20 {
            let y = i as f64 / 20.0 + 0.031;
            let e = |y: f64| p.value(y).powi(2);
            let ey = (e(y + h) - e(y - h)) / (2.0 * h);
            let eyy = (e(y + h) - 2.0 * e(y) + e(y - h)) / (h * h);
            let k = -eyy / (2.0 * e(y)) + ey * ey / (4.0 * e(y) * e(y));
            assert_relative_eq!(k, p.gaussian_curvature(y), max_relative = 1e-5, epsilon = 1e-6);
        }
    }

    #[test]
    fn latitude_lengths() {
        assert_eq!(MetricProfile::flat().latitude_length(0.7), 1.0);
        assert_eq!(round().latitude_length(0.0), 1.0);
        assert_relative_eq!(round().latitude_length(0.5), 3.0);
    }

    #[test]
    fn latitude_distance_wraps() {
        let p = round();
        assert_relative_eq!(p.dist_to_latitude(TorusPoint::new(0.0, 0.25), 0.0), 0.25);
        assert_relative_eq!(p.dist_to_latitude(TorusPoint::new(0.0, 0.9), 0.0), 0.1, epsilon = 1e-15);
        assert_eq!(p.dist_to_latitude(TorusPoint::new(0.3, 0.4), 0.4), 0.0);
    }

    #[test]
    fn round_minimum_is_unique_and_symmetric() {
        let p = round();
        assert_eq!(p.min_value(), 1.0);
        assert_eq!(p.unique_minimum(1e-9), Some(0.0));
        assert!(p.is_reflection_symmetric(0.0, 1e-12));
        let n = POSITIVITY_GRID;
        let (iy, _) = (0..n)
            .map(|i| (i, p.value(i as f64 / n as f64)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        assert_eq!(iy, 0);
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(MetricProfile::round(1.0, 1.0).is_err());
        assert!(MetricProfile::round(-1.0, 2.0).is_err());
        assert!(matches!(
            MetricProfile::fourier(0.5, alloc::vec![1.0], alloc::vec![]),
            Err(Error::NonPositiveProfile { .. })
        ));
        assert!(MetricProfile::fourier(f64::NAN, alloc::vec![], alloc::vec![]).is_err());
    }

    #[test]
    fn two_equal_minima_are_not_unique() {
        // f = 2 − cos(4πy): minima at 0 and 1/2 with equal value.
        let p = MetricProfile::fourier(2.0, alloc::vec![0.0, -1.0], alloc::vec![]).unwrap();
        assert_eq!(p.local_minima().len(), 2);
        assert_eq!(p.unique_minimum(1e-9), None);
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap01(-0.25), 0.75);
        assert_eq!(wrap01(1.0), 0.0);
        assert_eq!(wrap01(-1e-18), 0.0);
        assert_relative_eq!(signed_circle_diff(0.95, 0.05), -0.1, epsilon = 1e-15);
        let t = TorusPoint::new(3.2, -0.3);
        assert_relative_eq!(t.x, 0.2, epsilon = 1e-15);
        assert_relative_eq!(t.y, 0.7, epsilon = 1e-15);
    }
}
