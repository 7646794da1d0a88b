//! Closed geodesics of least length in a homotopy class.
//!
//! Birkhoff shortening on polygons, coarse to fine: each sweep moves every
//! other vertex to the geodesic midpoint of its neighbours, then the odd
//! ones. Converged polygons are clustered, and one polygon per cluster is
//! polished into an exact closed geodesic by Newton iteration on the start
//! offset (across the class) and the start angle.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{atan2, ceil, floor, hypot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fire, Gate, HomologyClass};
use crate::flow::{closure_residual, FlowConfig, GeodesicTrace};
use crate::metric::{wrap01, CoverPoint, MetricProfile};
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MinimalOptions {
    /// Number of initial loops, spread across a transversal.
    pub seeds: usize,
    /// Final polygon size is this times `|m| + |n|`.
    pub vertices_per_unit: usize,
    /// Initial polygon size per unit of `|m| + |n|`.
    pub coarse_vertices_per_unit: usize,
    /// Sweep cap per refinement level.
    pub max_sweeps: usize,
    /// Stop a level when one sweep shortens the polygon by less than this.
    pub sweep_tol: f64,
    /// Amplitude of the random normal offsets added to seed vertices.
    pub perturbation: f64,
    pub seed: u64,
    /// Hausdorff threshold for calling two loops the same.
    pub cluster_tol: f64,
    /// Loops within this (relative) length of the shortest are reported.
    pub length_tol: f64,
    pub newton_tol: f64,
    pub newton_iter: usize,
    pub flow: FlowConfig,
}

impl Default for MinimalOptions {
    fn default() -> Self {
        MinimalOptions {
            seeds: 32,
            vertices_per_unit: 64,
            coarse_vertices_per_unit: 8,
            max_sweeps: 2000,
            sweep_tol: 1e-12,
            perturbation: 1e-3,
            seed: 0,
            cluster_tol: 1e-4,
            length_tol: 1e-6,
            newton_tol: 1e-11,
            newton_iter: 30,
            flow: FlowConfig::default(),
        }
    }
}

/// A closed geodesic, traced once from a point on the seed transversal.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodicGeodesic {
    pub trace: GeodesicTrace,
    pub class: HomologyClass,
    /// Mean of `det(h, γ)` over the loop, mod 1 (the mean height for `(1, 0)`).
    pub key: f64,
}

impl PeriodicGeodesic {
    pub fn length(&self) -> f64 {
        self.trace.length()
    }
}

/// A curve on the torus cut into short segments and bucketed on a grid, for
/// distance queries up to `reach`.
#[derive(Debug, Clone)]
pub(crate) struct DenseCurve {
    points: Vec<(f64, f64)>,
    cells: BTreeMap<(i32, i32), Vec<[f64; 4]>>,
    reach: f64,
}

const CELLS: i32 = 100;

impl DenseCurve {
    pub(crate) fn from_points(points: &[(f64, f64)], closed_by: Option<(f64, f64)>, reach: f64) -> Self {
        let c = 1.0 / CELLS as f64;
        let mut cells: BTreeMap<(i32, i32), Vec<[f64; 4]>> = BTreeMap::new();
        let mut segs: Vec<((f64, f64), (f64, f64))> = points.windows(2).map(|w| (w[0], w[1])).collect();
        if let (Some(h), Some(&last), Some(&first)) = (closed_by, points.last(), points.first()) {
            segs.push((last, (first.0 + h.0, first.1 + h.1)));
        }
        for (a, b) in segs {
            let (sx, sy) = (floor(a.0), floor(a.1));
            let (a, b) = ((a.0 - sx, a.1 - sy), (b.0 - sx, b.1 - sy));
            let i0 = floor((a.0.min(b.0) - reach) / c) as i32;
            let i1 = floor((a.0.max(b.0) + reach) / c) as i32;
            let j0 = floor((a.1.min(b.1) - reach) / c) as i32;
            let j1 = floor((a.1.max(b.1) + reach) / c) as i32;
            for i in i0..=i1 {
                for j in j0..=j1 {
                    let (ti, tj) = (i.div_euclid(CELLS), j.div_euclid(CELLS));
                    let seg = [a.0 - ti as f64, a.1 - tj as f64, b.0 - ti as f64, b.1 - tj as f64];
                    cells.entry((i.rem_euclid(CELLS), j.rem_euclid(CELLS))).or_default().push(seg);
                }
            }
        }
        let points = points.iter().map(|&(x, y)| (wrap01(x), wrap01(y))).collect();
        DenseCurve { points, cells, reach }
    }

    /// Hermite-interpolated trace with at most `spacing` between points.
    pub(crate) fn from_trace(trace: &GeodesicTrace, spacing: f64, closed_by: Option<(f64, f64)>, reach: f64) -> Self {
        let s = trace.samples();
        let mut pts = Vec::with_capacity(s.len() * 4);
        for w in s.windows(2) {
            let (a, b) = (w[0], w[1]);
            let h = b.t - a.t;
            let k = ceil(h / spacing).max(1.0) as usize;
            for j in 0..k {
                let u = j as f64 / k as f64;
                let (h00, h10, h01, h11) =
                    (2.0 * u * u * u - 3.0 * u * u + 1.0, u * u * u - 2.0 * u * u + u, -2.0 * u * u * u + 3.0 * u * u, u * u * u - u * u);
                let x = h00 * a.state.pos.x + h10 * h * a.state.xi + h01 * b.state.pos.x + h11 * h * b.state.xi;
                let y = h00 * a.state.pos.y + h10 * h * a.state.eta + h01 * b.state.pos.y + h11 * h * b.state.eta;
                pts.push((x, y));
            }
        }
        if closed_by.is_none() {
            let e = trace.end().pos;
            pts.push((e.x, e.y));
        }
        Self::from_points(&pts, closed_by, reach)
    }

    /// Torus distance from `p` to the curve, or `∞` beyond `reach`.
    pub(crate) fn distance(&self, x: f64, y: f64) -> f64 {
        let (x, y) = (wrap01(x), wrap01(y));
        let c = 1.0 / CELLS as f64;
        let key = ((floor(x / c) as i32).min(CELLS - 1), (floor(y / c) as i32).min(CELLS - 1));
        let Some(segs) = self.cells.get(&key) else {
            return f64::INFINITY;
        };
        let mut best = f64::INFINITY;
        for s in segs {
            best = best.min(point_segment(x, y, s));
        }
        if best <= self.reach {
            best
        } else {
            f64::INFINITY
        }
    }
}

fn point_segment(x: f64, y: f64, s: &[f64; 4]) -> f64 {
    let (dx, dy) = (s[2] - s[0], s[3] - s[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 > 0.0 { (((x - s[0]) * dx + (y - s[1]) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
    hypot(x - s[0] - t * dx, y - s[1] - t * dy)
}

pub(crate) fn polyline_distance(curve: &DenseCurve, p: CoverPoint) -> f64 {
    curve.distance(p.x, p.y)
}

/// Hausdorff distance in coordinates on the torus, or `∞` once it exceeds `cutoff`.
pub(crate) fn hausdorff(a: &DenseCurve, b: &DenseCurve, cutoff: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (u, v) in [(a, b), (b, a)] {
        for &(x, y) in &u.points {
            let d = v.distance(x, y);
            if d > cutoff {
                return f64::INFINITY;
            }
            worst = worst.max(d);
        }
    }
    worst
}

fn accel(profile: &MetricProfile, y: f64, vx: f64, vy: f64) -> (f64, f64) {
    let v = profile.eval(y);
    (-2.0 * v.df / v.f * vx * vy, v.f * v.df * vx * vx)
}

/// Midpoint of the short geodesic from `a` to `b`, to third order in `|b − a|`.
fn geodesic_midpoint(profile: &MetricProfile, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let (mx, my) = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
    let (ax, ay) = accel(profile, my, b.0 - a.0, b.1 - a.1);
    (mx - 0.125 * ax, my - 0.125 * ay)
}

struct Polygon {
    v: Vec<(f64, f64)>,
    h: (f64, f64),
}

impl Polygon {
    fn at(&self, i: isize) -> (f64, f64) {
        let n = self.v.len() as isize;
        let k = i.div_euclid(n);
        let p = self.v[i.rem_euclid(n) as usize];
        (p.0 + k as f64 * self.h.0, p.1 + k as f64 * self.h.1)
    }

    fn length(&self, profile: &MetricProfile) -> f64 {
        (0..self.v.len() as isize)
            .map(|i| {
                let (a, b) = (self.at(i), self.at(i + 1));
                profile.norm(0.5 * (a.1 + b.1), b.0 - a.0, b.1 - a.1)
            })
            .sum()
    }

    fn sweep(&mut self, profile: &MetricProfile) {
        let n = self.v.len();
        for parity in 0..2 {
            for i in (parity..n).step_by(2) {
                let (a, b) = (self.at(i as isize - 1), self.at(i as isize + 1));
                self.v[i] = geodesic_midpoint(profile, a, b);
            }
        }
    }

    fn refine(&mut self, profile: &MetricProfile) {
        let n = self.v.len() as isize;
        let mut out = Vec::with_capacity(2 * n as usize);
        for i in 0..n {
            out.push(self.at(i));
            out.push(geodesic_midpoint(profile, self.at(i), self.at(i + 1)));
        }
        self.v = out;
    }

    fn key(&self) -> f64 {
        let s: f64 = self.v.iter().map(|p| self.h.0 * p.1 - self.h.1 * p.0).sum();
        wrap01(s / self.v.len() as f64)
    }
}

fn trace_key(trace: &GeodesicTrace, h: (f64, f64)) -> f64 {
    let s = trace.samples();
    let mut acc = 0.0;
    for w in s.windows(2) {
        let (a, b) = (w[0].state.pos, w[1].state.pos);
        let da = h.0 * a.y - h.1 * a.x;
        let db = h.0 * b.y - h.1 * b.x;
        acc += 0.5 * (da + db) * (w[1].t - w[0].t);
    }
    wrap01(acc / trace.length())
}

fn circular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Leader clustering: items in key order join the first leader within `tol`.
fn cluster(keys: &[f64], curves: &[DenseCurve], tol: f64, window: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
    let mut leaders: Vec<usize> = Vec::new();
    for i in order {
        let joined = leaders
            .iter()
            .any(|&l| circular_gap(keys[l], keys[i]) <= window && hausdorff(&curves[l], &curves[i], tol) <= tol);
        if !joined {
            leaders.push(i);
        }
    }
    leaders
}

fn seed_polygon(h: HomologyClass, g: HomologyClass, j: usize, opts: &MinimalOptions) -> Polygon {
    let units = (h.m.abs() + h.n.abs()) as usize;
    let n = (opts.coarse_vertices_per_unit * units).max(4);
    let (hx, hy) = h.vector();
    let hn = hypot(hx, hy);
    let normal = (-hy / hn, hx / hn);
    let s = j as f64 / opts.seeds as f64;
    let base = (s * g.m as f64, s * g.n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(j as u64));
    let v = (0..n)
        .map(|k| {
            let t = k as f64 / n as f64;
            let a = opts.perturbation * rng.random_range(-1.0..=1.0);
            (base.0 + t * hx + a * normal.0, base.1 + t * hy + a * normal.1)
        })
        .collect();
    Polygon { v, h: (hx, hy) }
}

fn shorten(profile: &MetricProfile, mut poly: Polygon, target: usize, opts: &MinimalOptions) -> Polygon {
    loop {
        let mut last = poly.length(profile);
        for _ in 0..opts.max_sweeps {
            poly.sweep(profile);
            let l = poly.length(profile);
            let done = (last - l).abs() < opts.sweep_tol;
            last = l;
            if done {
                break;
            }
        }
        if poly.v.len() >= target {
            return poly;
        }
        poly.refine(profile);
    }
}

fn wrap_pi(a: f64) -> f64 {
    a - 2.0 * PI * libm::round(a / (2.0 * PI))
}

/// Newton iteration on `(τ, θ)`: start at `v₀ + τ·n̂` with angle `θ` and
/// require the geodesic to come back to `v₀ + h + τ·n̂` with angle `θ`.
fn polish(profile: &MetricProfile, poly: &Polygon, opts: &MinimalOptions) -> Option<GeodesicTrace> {
    let v0 = poly.v[0];
    let (hx, hy) = poly.h;
    let hn = hypot(hx, hy);
    let hu = (hx / hn, hy / hn);
    let nu = (-hu.1, hu.0);
    let gate = Gate { target: CoverPoint::new(v0.0 + hx, v0.1 + hy), dir: hu };
    let l_ref = poly.length(profile);
    let horizon = 2.0 * l_ref + 2.0;
    let eval = |tau: f64, theta: f64| {
        let from = CoverPoint::new(v0.0 + tau * nu.0, v0.1 + tau * nu.1);
        let hit = fire(profile, from, theta / (2.0 * PI), &gate, l_ref, horizon, &opts.flow).ok()??;
        let r1 = hit.miss - tau;
        let r2 = wrap_pi(hit.trace.end().angle(profile) - theta);
        Some((r1, r2, hit.trace))
    };
    let (a, b) = (poly.at(-1), poly.at(1));
    let mut theta = atan2(b.1 - a.1, profile.value(v0.1) * (b.0 - a.0));
    let mut tau = 0.0;
    let mut cur = eval(tau, theta)?;
    for _ in 0..opts.newton_iter {
        let (r1, r2) = (cur.0, cur.1);
        if r1.abs().max(r2.abs()) < opts.newton_tol {
            break;
        }
        let d = 1e-7;
        let et = eval(tau + d, theta)?;
        let ea = eval(tau, theta + d)?;
        let j = [[(et.0 - r1) / d, (ea.0 - r1) / d], [(et.1 - r2) / d, (ea.1 - r2) / d]];
        // Damped normal equations: the pseudo-inverse on degenerate families.
        let ata = [
            [j[0][0] * j[0][0] + j[1][0] * j[1][0], j[0][0] * j[0][1] + j[1][0] * j[1][1]],
            [j[0][0] * j[0][1] + j[1][0] * j[1][1], j[0][1] * j[0][1] + j[1][1] * j[1][1]],
        ];
        let mu = 1e-14 * (ata[0][0] + ata[1][1]) + 1e-300;
        let atr = [j[0][0] * r1 + j[1][0] * r2, j[0][1] * r1 + j[1][1] * r2];
        let (a11, a12, a22) = (ata[0][0] + mu, ata[0][1], ata[1][1] + mu);
        let det = a11 * a22 - a12 * a12;
        let dt = -(a22 * atr[0] - a12 * atr[1]) / det;
        let dth = -(a11 * atr[1] - a12 * atr[0]) / det;
        // Halve the step until the residual drops.
        let norm = r1.abs().max(r2.abs());
        let mut lam = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            if let Some(e) = eval(tau + lam * dt, theta + lam * dth) {
                if e.0.abs().max(e.1.abs()) < norm {
                    accepted = Some((tau + lam * dt, theta + lam * dth, e));
                    break;
                }
            }
            lam *= 0.5;
        }
            let Some((t2, th2, e)) = accepted else {
            break;
        };
        tau = t2;
        theta = th2;
        cur = e;
    }
    let trace = cur.2;
    (closure_residual(&trace) <= opts.flow.closure_tol).then_some(trace)
}

/// Closed geodesics of least length in the prime class `h`, one per cluster,
/// sorted by [`PeriodicGeodesic::key`].
pub fn minimal_periodic(profile: &MetricProfile, h: HomologyClass, opts: &MinimalOptions) -> Result<Vec<PeriodicGeodesic>> {
    let g = h.transversal().ok_or(Error::NotPrime(h))?;
    let units = (h.m.abs() + h.n.abs()) as usize;
    let target = opts.vertices_per_unit * units;
    let hv = h.vector();
    let seeds: Vec<usize> = (0..opts.seeds.max(1)).collect();
    let polys = par::map(&seeds, |&j| shorten(profile, seed_polygon(h, g, j, opts), target, opts));
    let reach = 10.0 * opts.cluster_tol;
    let window = 10.0 * hypot(hv.0, hv.1) * opts.cluster_tol + 1e-9;
    let keys: Vec<f64> = polys.iter().map(Polygon::key).collect();
    let curves: Vec<DenseCurve> = par::map(&polys, |p| DenseCurve::from_points(&p.v, Some(hv), reach));
    let leaders = cluster(&keys, &curves, opts.cluster_tol, window);
    let polished: Vec<GeodesicTrace> = par::map(&leaders, |&i| polish(profile, &polys[i], opts)).into_iter().flatten().collect();
    let lmin = polished.iter().map(|t| t.length()).fold(f64::INFINITY, f64::min);
    if !lmin.is_finite() {
        return Err(Error::NoConvergence { best_miss: f64::INFINITY });
    }
    let keep: Vec<GeodesicTrace> = polished
        .into_iter()
        .filter(|t| t.length() <= lmin + opts.length_tol * lmin.max(1.0))
        .collect();
    let keys: Vec<f64> = keep.iter().map(|t| trace_key(t, hv)).collect();
    let curves: Vec<DenseCurve> = par::map(&keep, |t| DenseCurve::from_trace(t, 0.004, Some(hv), reach));
    let leaders = cluster(&keys, &curves, opts.cluster_tol, window);
    let mut out: Vec<PeriodicGeodesic> =
        leaders.into_iter().map(|i| PeriodicGeodesic { trace: keep[i].clone(), class: h, key: keys[i] }).collect();
    out.sort_by(|a, b| a.key.total_cmp(&b.key));
    Ok(out)
}
