//! Geodesics joining two points, and closed geodesics in a homotopy class.
//!
//! Everything is solved in the universal cover `ℝ²`. A joining geodesic from
//! `p` to `q` is labelled by the deck translation `(m, n)` taking the lift of
//! `q` in `[0,1)²` to the end of the lifted geodesic.

mod clairaut;
mod shorten;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use libm::{ceil, floor, hypot};

use crate::flow::{has_conjugate_points, integrate_until, locate_event, FlowConfig, GeodesicTrace, PhaseState, TraceSample};
use crate::metric::{CoverPoint, MetricProfile, TorusPoint};
use crate::{par, Error, Result};

pub use clairaut::{join_in_strip, StripOptions};
pub use shorten::{minimal_periodic, MinimalOptions, PeriodicGeodesic};
pub(crate) use shorten::{polyline_distance, DenseCurve};

/// A free homotopy class of loops on `T²`, identified with `(m, n) ∈ ℤ²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HomologyClass {
    pub m: i64,
    pub n: i64,
}

impl fmt::Display for HomologyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.m, self.n)
    }
}

impl HomologyClass {
    pub const fn new(m: i64, n: i64) -> Self {
        HomologyClass { m, n }
    }

    /// `gcd(|m|, |n|)` with `gcd(0, k) = k`.
    pub fn gcd(&self) -> i64 {
        let (mut a, mut b) = (self.m.abs(), self.n.abs());
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }

    pub fn is_zero(&self) -> bool {
        self.m == 0 && self.n == 0
    }

    pub fn is_prime(&self) -> bool {
        self.gcd() == 1
    }

    /// Algebraic intersection number `h₁ · h₂ = m₁n₂ − n₁m₂`.
    pub fn dot(&self, other: &HomologyClass) -> i64 {
        self.m * other.n - self.n * other.m
    }

    /// A class `g` with `self · g = 1`, for prime classes.
    pub fn transversal(&self) -> Option<HomologyClass> {
        if !self.is_prime() {
            return None;
        }
        // Extended Euclid on |m|, |n|: x|m| + y|n| = 1.
        let (mut r0, mut r1) = (self.m.abs(), self.n.abs());
        let (mut x0, mut x1) = (1i64, 0i64);
        let (mut y0, mut y1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (x0, x1) = (x1, x0 - q * x1);
            (y0, y1) = (y1, y0 - q * y1);
        }
        let x = if self.m < 0 { -x0 } else { x0 };
        let y = if self.n < 0 { -y0 } else { y0 };
        // m·x + n·y = 1, so g = (−y, x) gives m·x − n·(−y) = 1.
        let g = HomologyClass::new(-y, x);
        debug_assert_eq!(self.dot(&g), 1);
        Some(g)
    }

    pub fn vector(&self) -> (f64, f64) {
        (self.m as f64, self.n as f64)
    }
}

/// A geodesic from the lift of `p` in `[0,1)²` to a lift of `q`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JoiningGeodesic {
    pub trace: GeodesicTrace,
    pub offset: HomologyClass,
    /// Cover distance from the end of the trace to the target lift.
    pub hit_error: f64,
    /// Initial metric angle with `∂/∂x`, in radians.
    pub angle: f64,
}

impl JoiningGeodesic {
    pub fn length(&self) -> f64 {
        self.trace.length()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShootOptions {
    pub flow: FlowConfig,
    pub hit_tol: f64,
    pub max_iter: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions { flow: FlowConfig::default().with_relative_transverse(), hit_tol: 1e-8, max_iter: 80 }
    }
}

/// The line through `target` perpendicular to the chord from the start.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Gate {
    target: CoverPoint,
    dir: (f64, f64),
}

impl Gate {
    pub(crate) fn new(from: CoverPoint, target: CoverPoint) -> Self {
        let (dx, dy) = (target.x - from.x, target.y - from.y);
        let n = hypot(dx, dy);
        Gate { target, dir: (dx / n, dy / n) }
    }

    fn along(&self, x: f64, y: f64) -> f64 {
        (x - self.target.x) * self.dir.0 + (y - self.target.y) * self.dir.1
    }

    fn across(&self, x: f64, y: f64) -> f64 {
        (y - self.target.y) * self.dir.0 - (x - self.target.x) * self.dir.1
    }
}

pub(crate) struct Hit {
    pub trace: GeodesicTrace,
    pub miss: f64,
}

/// Integrates from `from` at `turns` and cuts the trace at the upward gate
/// crossing nearest `t_ref`.
pub(crate) fn fire(
    profile: &MetricProfile,
    from: CoverPoint,
    turns: f64,
    gate: &Gate,
    t_ref: f64,
    horizon: f64,
    cfg: &FlowConfig,
) -> Result<Option<Hit>> {
    let start = PhaseState::from_turns(profile, from, turns);
    let mut crossings: Vec<usize> = Vec::new();
    let mut k = 0usize;
    let trace = integrate_until(profile, start, horizon, cfg, |a, b| {
        let i = k;
        k += 1;
        let (pa, pb) = (a.state.pos, b.state.pos);
        if gate.along(pa.x, pa.y) < 0.0 && gate.along(pb.x, pb.y) >= 0.0 {
            crossings.push(i);
        }
        !crossings.is_empty() && b.t > t_ref + 1.0
    })?;
    let Some(&i) = crossings.iter().min_by(|&&a, &&b| {
        let da = (trace.samples()[a].t - t_ref).abs();
        let db = (trace.samples()[b].t - t_ref).abs();
        da.total_cmp(&db)
    }) else {
        return Ok(None);
    };
    let (tc, st) = locate_event(profile, &trace, cfg, i, |y| gate.along(y[0], y[1]));
    let miss = gate.across(st.pos.x, st.pos.y);
    Ok(Some(Hit { trace: cut(&trace, i, tc, st), miss }))
}

/// Samples `0..=i` followed by the state at `tc ∈ (t_i, t_{i+1}]`.
pub(crate) fn cut(trace: &GeodesicTrace, i: usize, tc: f64, st: PhaseState) -> GeodesicTrace {
    let mut samples: Vec<TraceSample> = trace.samples()[..=i].to_vec();
    if tc > samples[i].t {
        samples.push(TraceSample { t: tc, state: st });
    } else if i > 0 {
        samples[i].state = st;
    }
    GeodesicTrace::from_samples(samples).expect("cut keeps parameters increasing")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    None,
    Low,
    High,
}

/// Illinois iteration on the initial direction (in turns) between two
/// directions whose misses have opposite signs.
#[allow(clippy::too_many_arguments)]
pub(crate) fn refine(
    profile: &MetricProfile,
    from: CoverPoint,
    gate: &Gate,
    mut a: (f64, f64),
    mut b: (f64, f64),
    t_ref: f64,
    horizon: f64,
    opts: &ShootOptions,
) -> Result<(Hit, f64)> {
    let mut best: Option<(Hit, f64)> = None;
    let mut side = Side::None;
    for _ in 0..opts.max_iter {
        let (lo, hi) = if a.0 < b.0 { (a.0, b.0) } else { (b.0, a.0) };
        let mut u = b.0 - b.1 * (b.0 - a.0) / (b.1 - a.1);
        if !(u > lo && u < hi) {
            u = 0.5 * (lo + hi);
        }
        if u <= lo || u >= hi {
            break;
        }
        let Some(hit) = fire(profile, from, u, gate, t_ref, horizon, &opts.flow)? else {
            break;
        };
        let s = hit.miss;
        let done = s.abs() <= 1e-2 * opts.hit_tol;
        if best.as_ref().is_none_or(|(h, _)| s.abs() < h.miss.abs()) {
            best = Some((hit, u));
        }
        if done {
            break;
        }
        if (s > 0.0) == (b.1 > 0.0) {
            b = (u, s);
            if side == Side::High {
                a.1 *= 0.5;
            }
            side = Side::High;
        } else {
            a = (u, s);
            if side == Side::Low {
                b.1 *= 0.5;
            }
            side = Side::Low;
        }
    }
    match best {
        Some((hit, u)) if hit.miss.abs() <= opts.hit_tol => Ok((hit, u)),
        Some((hit, _)) => Err(Error::NoConvergence { best_miss: hit.miss.abs() }),
        None => Err(Error::NoConvergence { best_miss: f64::INFINITY }),
    }
}

fn offset_between(from: CoverPoint, to: CoverPoint) -> HomologyClass {
    HomologyClass::new((floor(to.x) - floor(from.x)) as i64, (floor(to.y) - floor(from.y)) as i64)
}

fn turns_to_angle(u: f64) -> f64 {
    let w = u - libm::round(u);
    2.0 * PI * w
}

/// Refines the direction `theta0` (radians) at `p` until the geodesic hits
/// `target` within the hit tolerance; the trace is cut at closest approach.
pub fn shoot(
    profile: &MetricProfile,
    p: TorusPoint,
    target: CoverPoint,
    theta0: f64,
    max_length: f64,
    opts: &ShootOptions,
) -> Result<JoiningGeodesic> {
    shoot_from(profile, p.lift(), target, theta0, max_length, opts)
}

/// [`shoot`] from an arbitrary cover point.
pub fn shoot_from(
    profile: &MetricProfile,
    from: CoverPoint,
    target: CoverPoint,
    theta0: f64,
    max_length: f64,
    opts: &ShootOptions,
) -> Result<JoiningGeodesic> {
    if from.euclid(target) == 0.0 {
        return Err(Error::InvalidArgument("target coincides with the start"));
    }
    if !(max_length > 0.0) {
        return Err(Error::InvalidArgument("max_length must be positive"));
    }
    let gate = Gate::new(from, target);
    let u0 = theta0 / (2.0 * PI);
    let miss_at = |u: f64| -> Result<Option<Hit>> { fire(profile, from, u, &gate, 0.0, max_length, &opts.flow) };
    let finish = |hit: Hit, u: f64| JoiningGeodesic {
        hit_error: hit.trace.end().pos.euclid(target),
        offset: offset_between(from, target),
        angle: turns_to_angle(u),
        trace: hit.trace,
    };
    let Some(h0) = miss_at(u0)? else {
        return Err(Error::NoConvergence { best_miss: f64::INFINITY });
    };
    if h0.miss.abs() <= 1e-2 * opts.hit_tol {
        return Ok(finish(h0, u0));
    }
    let s0 = h0.miss;
    let mut best = s0.abs();
    let mut delta = 1e-4;
    for _ in 0..20 {
        for u in [u0 + delta, u0 - delta] {
            if let Some(h) = miss_at(u)? {
                best = best.min(h.miss.abs());
                if (h.miss > 0.0) != (s0 > 0.0) {
                    let (hit, u) = refine(profile, from, &gate, (u0, s0), (u, h.miss), 0.0, max_length, opts)?;
                    return Ok(finish(hit, u));
                }
            }
        }
        delta *= 2.0;
        if delta > 0.25 {
            break;
        }
    }
    Err(Error::NoConvergence { best_miss: best })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnumerateOptions {
    /// Initial number of uniformly spaced directions.
    pub sweep: usize,
    /// The sweep doubles until a doubling finds nothing new or this cap is hit.
    pub max_sweep: usize,
    /// Tolerance of the coarse sweep integration.
    pub sweep_tol: f64,
    /// Half-width of the window around each target in which passes are recorded.
    pub window: f64,
    pub shoot: ShootOptions,
    /// Geodesics leaving with `|η| < polish_below` are refined again with `polish`.
    pub polish_below: f64,
    pub polish: FlowConfig,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions {
            sweep: 4096,
            max_sweep: 16384,
            sweep_tol: 1e-9,
            window: 0.5,
            shoot: ShootOptions::default(),
            polish_below: 1e-3,
            polish: FlowConfig::coarse(1e-14),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Enumeration {
    /// Sorted by length.
    pub geodesics: Vec<JoiningGeodesic>,
    /// Final number of uniform sweep directions.
    pub sweep: usize,
    /// Geodesics first found by the last doubling; zero means the sweep saturated.
    pub new_in_last_doubling: usize,
}

#[derive(Debug, Clone, Copy)]
struct Pass {
    lift: (i64, i64),
    ordinal: u32,
    miss: f64,
    t: f64,
}

struct Ray {
    turns: f64,
    passes: Vec<Pass>,
}

struct Targets {
    base: CoverPoint,
    gates: BTreeMap<(i64, i64), Gate>,
}

impl Targets {
    fn nearby(&self, a: CoverPoint, b: CoverPoint, w: f64) -> impl Iterator<Item = (&(i64, i64), &Gate)> {
        let m0 = floor(a.x.min(b.x) - self.base.x - w) as i64;
        let m1 = ceil(a.x.max(b.x) - self.base.x + w) as i64;
        let n0 = floor(a.y.min(b.y) - self.base.y - w) as i64;
        let n1 = ceil(a.y.max(b.y) - self.base.y + w) as i64;
        self.gates.range((m0, n0)..=(m1, n1)).filter(move |(k, _)| k.1 >= n0 && k.1 <= n1)
    }
}

fn sweep_ray(profile: &MetricProfile, from: CoverPoint, turns: f64, targets: &Targets, horizon: f64, w: f64, cfg: &FlowConfig) -> Ray {
    let start = PhaseState::from_turns(profile, from, turns);
    let mut passes = Vec::new();
    let mut counts: BTreeMap<(i64, i64), u32> = BTreeMap::new();
    let _ = integrate_until(profile, start, horizon, cfg, |a, b| {
        let (pa, pb) = (a.state.pos, b.state.pos);
        for (lift, gate) in targets.nearby(pa, pb, w) {
            let ga = gate.along(pa.x, pa.y);
            let gb = gate.along(pb.x, pb.y);
            if ga < 0.0 && gb >= 0.0 {
                let lam = -ga / (gb - ga);
                let x = pa.x + lam * (pb.x - pa.x);
                let y = pa.y + lam * (pb.y - pa.y);
                let miss = gate.across(x, y);
                if miss.abs() < w {
                    let c = counts.entry(*lift).or_insert(0);
                    passes.push(Pass { lift: *lift, ordinal: *c, miss, t: a.t + lam * (b.t - a.t) });
                    *c += 1;
                }
            }
        }
        false
    });
    Ray { turns, passes }
}

/// Directions accumulating at the latitude directions, where geodesics that
/// shadow a closed latitude need exponentially small angles.
fn graded_directions() -> Vec<f64> {
    let mut v = Vec::new();
    let mut e = -3.5;
    while e >= -14.0 {
        let u = libm::pow(10.0, e) / (2.0 * PI);
        v.extend_from_slice(&[u, 1.0 - u, 0.5 - u, 0.5 + u]);
        e -= 0.25;
    }
    v
}

struct Bracket {
    lift: (i64, i64),
    a: (f64, f64),
    b: (f64, f64),
    t_ref: f64,
}

fn brackets(rays: &[Ray]) -> Vec<Bracket> {
    let mut out = Vec::new();
    for i in 0..rays.len() {
        let j = (i + 1) % rays.len();
        let ua = rays[i].turns;
        let ub = if j == 0 { rays[0].turns + 1.0 } else { rays[j].turns };
        for c in &rays[i].passes {
            if c.miss == 0.0 {
                out.push(Bracket { lift: c.lift, a: (ua, 0.0), b: (ua, 0.0), t_ref: c.t });
                continue;
            }
            if let Some(d) = rays[j].passes.iter().find(|d| d.lift == c.lift && d.ordinal == c.ordinal) {
                if d.miss != 0.0 && (d.miss > 0.0) != (c.miss > 0.0) {
                    out.push(Bracket { lift: c.lift, a: (ua, c.miss), b: (ub, d.miss), t_ref: 0.5 * (c.t + d.t) });
                }
            }
        }
    }
    out
}

fn same_geodesic(a: &JoiningGeodesic, b: &JoiningGeodesic) -> bool {
    let (sa, sb) = (a.trace.start(), b.trace.start());
    a.offset == b.offset
        && (a.length() - b.length()).abs() < 1e-6
        && (sa.xi - sb.xi).abs() < 1e-6
        && (sa.eta - sb.eta).abs() < 1e-6
        && (sa.eta > 0.0) == (sb.eta > 0.0)
}

fn lower_bound(profile: &MetricProfile, dx: f64, dy: f64) -> f64 {
    hypot(profile.min_value() * dx, dy)
}

/// All joining geodesics from `p` to `q` of length at most `max_length`
/// found by a direction sweep. Completeness is best effort.
pub fn enumerate_joining(profile: &MetricProfile, p: TorusPoint, q: TorusPoint, max_length: f64, opts: &EnumerateOptions) -> Enumeration {
    let from = p.lift();
    let base = q.lift();
    let same = p.x == q.x && p.y == q.y;
    let mut gates = BTreeMap::new();
    let fmin = profile.min_value();
    let nmax = ceil(max_length) as i64 + 1;
    let mmax = ceil(max_length / fmin) as i64 + 1;
    for m in -mmax..=mmax {
        for n in -nmax..=nmax {
            if same && m == 0 && n == 0 {
                continue;
            }
            let t = base.translate(m, n);
            if lower_bound(profile, t.x - from.x, t.y - from.y) <= max_length {
                gates.insert((m, n), Gate::new(from, t));
            }
        }
    }
    enumerate_targets(profile, from, Targets { base, gates }, max_length, opts)
}

/// Near-latitude starts carry `η` values so small that the endpoint
/// velocity is only meaningful at a tighter tolerance.
fn polish_grazing(profile: &MetricProfile, from: CoverPoint, targets: &Targets, g: &JoiningGeodesic, horizon: f64, opts: &EnumerateOptions) -> Option<JoiningGeodesic> {
    let eta = g.trace.start().eta;
    if eta == 0.0 || eta.abs() >= opts.polish_below {
        return None;
    }
    let lift = (g.offset.m, g.offset.n);
    let gate = targets.gates.get(&lift)?;
    let u0 = g.angle / (2.0 * PI);
    let k = libm::round(2.0 * u0) * 0.5;
    let d = 1e-3 * (u0 - k).abs();
    let shoot = ShootOptions { flow: opts.polish, ..opts.shoot };
    let t_ref = g.length();
    let miss = |u: f64| fire(profile, from, u, gate, t_ref, horizon, &shoot.flow).ok().flatten().map(|h| h.miss);
    let (ma, mb) = (miss(u0 - d)?, miss(u0 + d)?);
    let slope = (mb - ma) / (2.0 * d);
    if slope == 0.0 || !slope.is_finite() {
        return None;
    }
    // Secant guess, then widen until the miss changes sign.
    let guess = u0 - 0.5 * (ma + mb) / slope;
    let mut w = 0.1 * (guess - u0).abs() + d;
    let mut bracket = None;
    for _ in 0..8 {
        let (lo, hi) = (guess - w, guess + w);
        if (lo - k) * (u0 - k) <= 0.0 || (hi - k) * (u0 - k) <= 0.0 {
            return None;
        }
        let (ml, mh) = (miss(lo)?, miss(hi)?);
        if (ml > 0.0) != (mh > 0.0) {
            bracket = Some(((lo, ml), (hi, mh)));
            break;
        }
        w *= 2.0;
    }
    let (a, b) = bracket?;
    let (hit, u) = refine(profile, from, gate, a, b, t_ref, horizon, &shoot).ok()?;
    let target = targets.base.translate(lift.0, lift.1);
    let hit_error = hit.trace.end().pos.euclid(target);
    let close = (hit.trace.length() - g.length()).abs() < 1e-6;
    (close && hit_error <= g.hit_error.max(shoot.hit_tol)).then(|| JoiningGeodesic { hit_error, offset: g.offset, angle: turns_to_angle(u), trace: hit.trace })
}

fn enumerate_targets(profile: &MetricProfile, from: CoverPoint, targets: Targets, max_length: f64, opts: &EnumerateOptions) -> Enumeration {
    if targets.gates.is_empty() {
        return Enumeration { geodesics: Vec::new(), sweep: opts.sweep, new_in_last_doubling: 0 };
    }
    let w = opts.window;
    let horizon = max_length + w;
    let coarse = FlowConfig { relative_transverse: true, ..FlowConfig::coarse(opts.sweep_tol) };
    let fire_rays = |dirs: &[f64]| par::map(dirs, |&u| sweep_ray(profile, from, u, &targets, horizon, w, &coarse));

    let mut n = opts.sweep.max(4);
    let mut dirs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    dirs.extend(graded_directions());
    let mut rays = fire_rays(&dirs);
    let mut found: Vec<JoiningGeodesic> = Vec::new();
    let mut new_last;
    loop {
        rays.sort_by(|a, b| a.turns.total_cmp(&b.turns));
        let todo: Vec<Bracket> = brackets(&rays)
            .into_iter()
            .filter(|br| {
                // Skip intervals that already contain a refined geodesic.
                let (lo, hi) = if br.a.0 <= br.b.0 { (br.a.0, br.b.0) } else { (br.b.0, br.a.0) };
                !found.iter().any(|g| {
                    let u = g.angle / (2.0 * PI);
                    let u = if u < lo { u + 1.0 } else { u };
                    (g.offset.m, g.offset.n) == br.lift && u >= lo && u <= hi
                })
            })
            .collect();
        let refined = par::map(&todo, |br| {
            let gate = targets.gates[&br.lift];
            let res = if br.a.0 == br.b.0 {
                fire(profile, from, br.a.0, &gate, br.t_ref, horizon, &opts.shoot.flow)
                    .ok()
                    .flatten()
                    .filter(|h| h.miss.abs() <= opts.shoot.hit_tol)
                    .map(|h| (h, br.a.0))
            } else {
                refine(profile, from, &gate, br.a, br.b, br.t_ref, horizon, &opts.shoot).ok()
            };
            res.map(|(hit, u)| {
                let target = targets.base.translate(br.lift.0, br.lift.1);
                JoiningGeodesic {
                    hit_error: hit.trace.end().pos.euclid(target),
                    offset: HomologyClass::new(br.lift.0, br.lift.1),
                    angle: turns_to_angle(u),
                    trace: hit.trace,
                }
            })
        });
        new_last = 0;
        for g in refined.into_iter().flatten() {
            if g.length() <= max_length && !found.iter().any(|f| same_geodesic(f, &g)) {
                found.push(g);
                new_last += 1;
            }
        }
        if new_last == 0 || 2 * n > opts.max_sweep {
            break;
        }
        let fresh: Vec<f64> = (0..n).map(|i| (2 * i + 1) as f64 / (2 * n) as f64).collect();
        rays.extend(fire_rays(&fresh));
        n *= 2;
    }
    let polished = par::map(&found, |g| polish_grazing(profile, from, &targets, g, horizon, opts));
    for (g, p) in found.iter_mut().zip(polished) {
        if let Some(p) = p {
            *g = p;
        }
    }
    found.sort_by(|a, b| {
        a.length()
            .total_cmp(&b.length())
            .then(a.offset.cmp(&b.offset))
            .then(a.angle.total_cmp(&b.angle))
    });
    Enumeration { geodesics: found, sweep: n, new_in_last_doubling: new_last }
}

/// Result of comparing a geodesic segment with the shortest one found
/// between the same endpoints in the same lift.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MinimalityCheck {
    pub minimal: bool,
    /// `length − best`, never negative.
    pub margin: f64,
    pub best_length: f64,
    pub conjugate_point: Option<f64>,
}

/// Checks that no shorter geodesic joins the endpoints of `trace` in the
/// same lift, and that the trace carries no interior conjugate point.
pub fn is_homotopically_minimal(profile: &MetricProfile, trace: &GeodesicTrace, opts: &EnumerateOptions) -> Result<MinimalityCheck> {
    let conj = has_conjugate_points(profile, trace, &opts.shoot.flow)?;
    let from = trace.start().pos;
    let to = trace.end().pos;
    let len = trace.length();
    let mut gates = BTreeMap::new();
    gates.insert((0, 0), Gate::new(from, to));
    let en = enumerate_targets(profile, from, Targets { base: to, gates }, len * (1.0 + 1e-9) + 1e-9, opts);
    let best = en.geodesics.first().map_or(len, |g| g.length()).min(len);
    let margin = len - best;
    Ok(MinimalityCheck { minimal: conj.is_none() && margin <= 1e-6, margin, best_length: best, conjugate_point: conj })
}

/// Normalized lift displacement of `trace`.
pub fn homological_direction(trace: &GeodesicTrace, min_horizon: f64) -> Result<(f64, f64)> {
    if trace.length() < min_horizon {
        return Err(Error::InvalidArgument("trace shorter than the minimum horizon"));
    }
    let (dx, dy) = trace.displacement();
    let n = hypot(dx, dy);
    if !(n > 1e-12) {
        return Err(Error::ZeroDisplacement(n));
    }
    Ok((dx / n, dy / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gcd_and_primality() {
        assert_eq!(HomologyClass::new(0, 5).gcd(), 5);
        assert_eq!(HomologyClass::new(-4, 6).gcd(), 2);
        assert!(HomologyClass::new(1, 0).is_prime());
        assert!(!HomologyClass::new(0, 0).is_prime());
        assert!(!HomologyClass::new(2, 2).is_prime());
        assert!(HomologyClass::new(-3, 7).is_prime());
    }

    #[test]
    fn transversal_has_unit_intersection() {
        for (m, n) in [(1, 0), (0, 1), (1, 1), (1, -1), (-1, 0), (0, -1), (3, 7), (-5, 2), (4, -9)] {
            let h = HomologyClass::new(m, n);
            assert_eq!(h.dot(&h.transversal().unwrap()), 1, "{h}");
        }
        assert!(HomologyClass::new(2, 4).transversal().is_none());
    }

    #[test]
    fn flat_shoot_is_straight() {
        let flat = MetricProfile::flat();
        let g = shoot(&flat, TorusPoint::new(0.0, 0.0), CoverPoint::new(3.0, 4.0), 0.9, 10.0, &ShootOptions::default()).unwrap();
        assert_relative_eq!(g.length(), 5.0, epsilon = 1e-9);
        assert_relative_eq!(g.angle, libm::atan2(4.0, 3.0), epsilon = 1e-9);
        assert!(g.hit_error < 1e-8);
    }

    #[test]
    fn equator_arc_is_hit_exactly() {
        let p = MetricProfile::round(1.0, 2.0).unwrap();
        let g = shoot(&p, TorusPoint::new(0.0, 0.0), CoverPoint::new(0.5, 0.0), 0.0, 2.0, &ShootOptions::default()).unwrap();
        assert_relative_eq!(g.length(), 0.5, epsilon = 1e-10);
        assert!(g.trace.samples().iter().all(|s| s.state.pos.y == 0.0));
    }

    #[test]
    fn flat_opposite_targets() {
        let flat = MetricProfile::flat();
        let o = ShootOptions::default();
        let a = shoot(&flat, TorusPoint::new(0.0, 0.0), CoverPoint::new(1.0, 0.0), 0.1, 3.0, &o).unwrap();
        let b = shoot(&flat, TorusPoint::new(0.0, 0.0), CoverPoint::new(-1.0, 0.0), 3.0, 3.0, &o).unwrap();
        assert_relative_eq!(a.length(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(b.length(), 1.0, epsilon = 1e-9);
        assert!((a.angle - b.angle).abs() > 3.0);
    }

    #[test]
    fn direction_of_equator() {
        let p = MetricProfile::round(1.0, 2.0).unwrap();
        let tr = crate::flow::integrate(&p, PhaseState::new(CoverPoint::new(0.0, 0.0), -1.0, 0.0), 3.0, &FlowConfig::default()).unwrap();
        assert_eq!(homological_direction(&tr, 1.0).unwrap(), (-1.0, 0.0));
        assert!(homological_direction(&tr, 10.0).is_err());
    }
}
