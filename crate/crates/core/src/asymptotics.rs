//! Busemann functions, coray checks, admissible cylinders and excursion
//! profiles of joining geodesics inside a cylinder.

use alloc::vec;
use alloc::vec::Vec;

use libm::{atan2, fabs};

use crate::connect::{
    is_homotopically_minimal, join_in_strip, minimal_periodic, polyline_distance, shoot_from, DenseCurve, EnumerateOptions,
    HomologyClass, JoiningGeodesic, MinimalOptions, PeriodicGeodesic, ShootOptions, StripOptions,
};
use crate::flow::{integrate, state_at, FlowConfig, GeodesicTrace, PhaseState};
use crate::metric::{wrap01, CoverPoint, MetricProfile, TorusPoint};
use crate::{par, Error, Result};

/// A geodesic taken as a ray up to its horizon.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RaySpec {
    pub carrier: GeodesicTrace,
    pub asserted_minimal: bool,
}

impl RaySpec {
    /// Trusts the caller that `carrier` is minimal.
    pub fn asserted(carrier: GeodesicTrace) -> Self {
        RaySpec { carrier, asserted_minimal: true }
    }

    /// The latitude `y` traversed in `+x` (or `−x` when `forward` is false)
    /// from `x0` for `horizon` units. Minimal when `f(y)` is the global minimum.
    pub fn latitude(profile: &MetricProfile, x0: f64, y: f64, forward: bool, horizon: f64, cfg: &FlowConfig) -> Result<Self> {
        if profile.eval(y).df != 0.0 {
            return Err(Error::InvalidArgument("latitude is not a geodesic"));
        }
        let turns = if forward { 0.0 } else { 0.5 };
        let carrier = integrate(profile, PhaseState::from_turns(profile, CoverPoint::new(x0, y), turns), horizon, cfg)?;
        let asserted_minimal = profile.value(y) <= profile.min_value();
        Ok(RaySpec { carrier, asserted_minimal })
    }

    /// Checks homotopic minimality on up to `pieces` consecutive subsegments
    /// of length `segment`.
    pub fn checked(profile: &MetricProfile, carrier: GeodesicTrace, segment: f64, pieces: usize, opts: &EnumerateOptions) -> Result<Self> {
        let mut minimal = true;
        let mut t0 = 0.0;
        for _ in 0..pieces {
            let t1 = (t0 + segment).min(carrier.length());
            if t1 <= t0 {
                break;
            }
            let piece = sub_trace(profile, &carrier, t0, t1, &opts.shoot.flow)?;
            minimal &= is_homotopically_minimal(profile, &piece, opts)?.minimal;
            t0 = t1;
        }
        Ok(RaySpec { carrier, asserted_minimal: minimal })
    }

    pub fn horizon(&self) -> f64 {
        self.carrier.length()
    }

    pub fn point(&self, profile: &MetricProfile, t: f64, cfg: &FlowConfig) -> CoverPoint {
        state_at(profile, &self.carrier, t, cfg).pos
    }

    /// `(y, direction)` when the carrier runs along a geodesic latitude.
    fn latitude_of(&self, profile: &MetricProfile) -> Option<(f64, f64)> {
        let s = self.carrier.start();
        let flat_run = self.carrier.samples().iter().all(|q| q.state.pos.y == s.pos.y && q.state.eta == 0.0);
        (flat_run && profile.eval(s.pos.y).df == 0.0).then(|| (s.pos.y, s.xi.signum()))
    }
}

/// The piece of `trace` over `[t0, t1]`, reparametrized from 0.
pub fn sub_trace(profile: &MetricProfile, trace: &GeodesicTrace, t0: f64, t1: f64, cfg: &FlowConfig) -> Result<GeodesicTrace> {
    use crate::flow::TraceSample;
    if !(0.0 <= t0 && t0 < t1 && t1 <= trace.length()) {
        return Err(Error::InvalidArgument("subsegment outside the trace"));
    }
    let mut samples = vec![TraceSample { t: 0.0, state: state_at(profile, trace, t0, cfg) }];
    for s in trace.samples() {
        if s.t > t0 && s.t < t1 {
            samples.push(TraceSample { t: s.t - t0, state: s.state });
        }
    }
    samples.push(TraceSample { t: t1 - t0, state: state_at(profile, trace, t1, cfg) });
    GeodesicTrace::from_samples(samples)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BusemannOptions {
    pub strip: StripOptions,
    pub shoot: ShootOptions,
    /// Along a latitude ray, targets further than this past the foot of `p`
    /// are replaced by the point at this distance.
    pub cap: f64,
    /// Points this close to a latitude ray are moved onto it.
    pub snap: f64,
}

impl Default for BusemannOptions {
    fn default() -> Self {
        BusemannOptions { strip: StripOptions::default(), shoot: ShootOptions::default(), cap: 60.0, snap: 1e-12 }
    }
}

/// `d(p, c(t)) − t`, with `d` measured in the universal cover.
pub fn busemann_estimate(profile: &MetricProfile, ray: &RaySpec, p: CoverPoint, t: f64, opts: &BusemannOptions) -> Result<f64> {
    let horizon = ray.horizon();
    if !(t >= 0.0 && t <= horizon) {
        return Err(Error::HorizonExceeded { t, horizon });
    }
    if !profile.is_flat() {
        if let Some((yc, dir)) = ray.latitude_of(profile) {
            let f = profile.value(yc);
            let x0 = ray.carrier.start().pos.x;
            let foot = (dir * (p.x - x0) * f).max(0.0);
            let t_eff = t.min(foot + opts.cap);
            let target = CoverPoint::new(x0 + dir * t_eff / f, yc);
            let mut from = p;
            if fabs(from.y - yc) <= opts.snap {
                from.y = yc;
            }
            if from.euclid(target) == 0.0 {
                return Ok(-t_eff);
            }
            let strip = if from.y >= yc { (yc, yc + 1.0) } else { (yc - 1.0, yc) };
            if from.y > strip.1 || from.y < strip.0 {
                return Err(Error::InvalidArgument("point is not adjacent to the ray"));
            }
            let d = join_in_strip(profile, from, target, strip, &opts.strip)?.length();
            return Ok(d - t_eff);
        }
    }
    let target = ray.point(profile, t, &opts.shoot.flow);
    if p.euclid(target) == 0.0 {
        return Ok(-t);
    }
    let theta0 = atan2(target.y - p.y, profile.value(p.y) * (target.x - p.x));
    let reach = 2.0 * (t + p.euclid(ray.carrier.start().pos) * profile.max_value()) + 10.0;
    let d = shoot_from(profile, p, target, theta0, reach, &opts.shoot)?.length();
    Ok(d - t)
}

/// Estimates at `H/4`, `H/2` and `H` for the ray horizon `H`.
pub fn busemann_tail(profile: &MetricProfile, ray: &RaySpec, p: CoverPoint, opts: &BusemannOptions) -> Result<[(f64, f64); 3]> {
    let h = ray.horizon();
    let mut out = [(0.0, 0.0); 3];
    for (slot, t) in out.iter_mut().zip([0.25 * h, 0.5 * h, h]) {
        *slot = (t, busemann_estimate(profile, ray, p, t, opts)?);
    }
    Ok(out)
}

/// `|B(γ(t)) − B(γ(s)) − (s − t)|` at the ray horizon; zero for corays.
pub fn coray_residual(profile: &MetricProfile, ray: &RaySpec, candidate: &GeodesicTrace, s: f64, t: f64, opts: &BusemannOptions) -> Result<f64> {
    if !(0.0 <= s && s < t && t <= candidate.length()) {
        return Err(Error::InvalidArgument("need 0 ≤ s < t ≤ candidate length"));
    }
    let h = ray.horizon();
    let a = state_at(profile, candidate, s, &opts.shoot.flow).pos;
    let b = state_at(profile, candidate, t, &opts.shoot.flow).pos;
    let ba = busemann_estimate(profile, ray, a, h, opts)?;
    let bb = busemann_estimate(profile, ray, b, h, opts)?;
    Ok(fabs(bb - ba - (s - t)))
}

/// A component of the complement of the minimal closed geodesics of a class.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdmissibleCylinder {
    /// Transversal coordinate of the lower boundary (its latitude for `(±1, 0)`).
    pub a_low: f64,
    /// Upper boundary, with `a_low < a_high ≤ a_low + 1`.
    pub a_high: f64,
    pub class: HomologyClass,
    pub boundary_traces: [GeodesicTrace; 2],
}

/// A pair of cover points inside a cylinder strip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripPair {
    pub from: CoverPoint,
    pub to: CoverPoint,
    /// `to` lies on the boundary.
    pub one_sided: bool,
}

impl AdmissibleCylinder {
    fn latitude_class(&self) -> Option<f64> {
        (self.class.n == 0 && self.class.m.abs() == 1).then_some(self.class.m as f64)
    }

    pub fn strip(&self) -> (f64, f64) {
        (self.a_low, self.a_high)
    }

    /// Distance to the boundary for a point of the strip at height `y`.
    pub fn boundary_distance(&self, y: f64) -> f64 {
        (y - self.a_low).min(self.a_high - y).max(0.0)
    }

    /// Lifts `p` (interior) and `q` (interior or boundary) into the strip,
    /// snapping points within `tol` of a boundary onto it.
    pub fn lift_pair(&self, p: TorusPoint, q: TorusPoint, tol: f64) -> Result<StripPair> {
        if self.latitude_class().is_none() {
            return Err(Error::InvalidArgument("only latitude cylinders are supported"));
        }
        let lift = |y: f64| {
            let mut h = self.a_low + wrap01(y - self.a_low);
            if h - self.a_low > 1.0 - tol {
                h -= 1.0;
            }
            h
        };
        let yp = lift(p.y);
        if !(yp > self.a_low + tol && yp < self.a_high - tol) {
            return Err(Error::InvalidArgument("p must lie inside the cylinder"));
        }
        let mut yq = lift(q.y);
        let mut one_sided = false;
        if fabs(yq - self.a_low) <= tol {
            (yq, one_sided) = (self.a_low, true);
        } else if fabs(yq - self.a_high) <= tol {
            (yq, one_sided) = (self.a_high, true);
        } else if yq > self.a_high {
            return Err(Error::InvalidArgument("q must lie in the closed cylinder"));
        }
        Ok(StripPair { from: CoverPoint::new(p.x, yp), to: CoverPoint::new(q.x, yq), one_sided })
    }

    /// Shortest geodesic inside the strip from `pair.from` to `pair.to + n·class`.
    pub fn joining(&self, profile: &MetricProfile, pair: &StripPair, n: i64, opts: &StripOptions) -> Result<JoiningGeodesic> {
        let k = self.latitude_class().ok_or(Error::InvalidArgument("only latitude cylinders are supported"))?;
        let to = CoverPoint::new(pair.to.x + n as f64 * k, pair.to.y);
        join_in_strip(profile, pair.from, to, self.strip(), opts).map_err(|_| Error::MissingGeodesic { n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CylinderOptions {
    pub minimal: MinimalOptions,
    /// Number of gridpoints along the transversal.
    pub grid: usize,
    /// A gridpoint this close to a minimizer counts as covered.
    pub foliation_tol: f64,
}

impl Default for CylinderOptions {
    fn default() -> Self {
        CylinderOptions { minimal: MinimalOptions { seeds: 2048, ..MinimalOptions::default() }, grid: 2048, foliation_tol: 1e-3 }
    }
}

/// Minimal closed geodesics of a class and the cylinders between them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CylinderScan {
    pub loops: Vec<PeriodicGeodesic>,
    /// Every gridpoint lies within the foliation tolerance of some loop.
    pub foliated: bool,
    pub cylinders: Vec<AdmissibleCylinder>,
}

pub fn cylinder_scan(profile: &MetricProfile, h: HomologyClass, opts: &CylinderOptions) -> Result<CylinderScan> {
    let g = h.transversal().ok_or(Error::NotPrime(h))?;
    let loops = minimal_periodic(profile, h, &opts.minimal)?;
    let hv = h.vector();
    let curves: Vec<DenseCurve> = par::map(&loops, |l| DenseCurve::from_trace(&l.trace, 0.25 * opts.foliation_tol, Some(hv), 2.0 * opts.foliation_tol));
    let grid: Vec<usize> = (0..opts.grid).collect();
    let covered = par::map(&grid, |&j| {
        let s = j as f64 / opts.grid as f64;
        let p = CoverPoint::new(s * g.m as f64, s * g.n as f64);
        curves.iter().any(|c| polyline_distance(c, p) <= opts.foliation_tol)
    });
    let foliated = covered.iter().all(|&c| c);
    let mut cylinders = Vec::new();
    if !foliated {
        let k = loops.len();
        for i in 0..k {
            let (lo, hi) = (&loops[i], &loops[(i + 1) % k]);
            let (a_low, a_high) = (snap_latitude(profile, h, lo.key), snap_latitude(profile, h, hi.key));
            let a_high = if i + 1 == k { a_high + 1.0 } else { a_high };
            cylinders.push(AdmissibleCylinder { a_low, a_high, class: h, boundary_traces: [lo.trace.clone(), hi.trace.clone()] });
        }
    }
    Ok(CylinderScan { loops, foliated, cylinders })
}

/// Moves a latitude boundary onto the exact critical latitude of `f` it approximates.
fn snap_latitude(profile: &MetricProfile, h: HomologyClass, key: f64) -> f64 {
    if h.n != 0 {
        return key;
    }
    profile
        .local_minima()
        .iter()
        .map(|&(ym, _)| ym + libm::round(key - ym))
        .find(|&y| fabs(y - key) < 1e-9)
        .unwrap_or(key)
}

/// Complement components of the union of minimal closed geodesics in `h`;
/// empty when those geodesics cover the torus at the grid resolution.
pub fn detect_cylinders(profile: &MetricProfile, h: HomologyClass, opts: &CylinderOptions) -> Result<Vec<AdmissibleCylinder>> {
    cylinder_scan(profile, h, opts).map(|s| s.cylinders)
}

/// One geodesic at one `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExcursionRecord {
    pub n: i64,
    pub length: f64,
    pub eps: f64,
    /// The geodesic is within `ε` of the boundary on `[entry, exit]`.
    pub entry: f64,
    pub exit: f64,
    pub max_dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExcursionProfile {
    pub one_sided: bool,
    pub records: Vec<ExcursionRecord>,
}

impl ExcursionProfile {
    /// Empirical `T(ε)` over the records with `n ≤ n_max`.
    pub fn t_eps(&self, eps: f64, n_max: i64) -> f64 {
        self.records
            .iter()
            .filter(|r| r.eps == eps && r.n <= n_max)
            .map(|r| r.entry.max(r.length - r.exit))
            .fold(0.0, f64::max)
    }

    /// `T_n(ε)` for a single geodesic.
    pub fn t_n(&self, eps: f64, n: i64) -> Option<f64> {
        self.records.iter().find(|r| r.eps == eps && r.n == n).map(|r| r.entry.max(r.length - r.exit))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExcursionOptions {
    pub strip: StripOptions,
    /// Points within this of a boundary are treated as on it.
    pub boundary_tol: f64,
}

impl Default for ExcursionOptions {
    fn default() -> Self {
        ExcursionOptions { strip: StripOptions::default(), boundary_tol: 1e-9 }
    }
}

/// Entry/exit times of `trace` into the `ε`-neighbourhood of the boundary.
pub fn excursion_records(
    profile: &MetricProfile,
    cyl: &AdmissibleCylinder,
    n: i64,
    trace: &GeodesicTrace,
    eps: &[f64],
    one_sided: bool,
    cfg: &FlowConfig,
) -> Vec<ExcursionRecord> {
    let s = trace.samples();
    let len = trace.length();
    let d: Vec<f64> = s.iter().map(|q| cyl.boundary_distance(q.state.pos.y)).collect();
    let max_dist = d.iter().copied().fold(0.0, f64::max);
    let weight = |t: f64| if one_sided { t } else { t.min(len - t) };
    eps.iter()
        .map(|&e| {
            let bad = |v: f64| v > e;
            // sup of the weight over {t : d(t) > ε}, which is attained at a
            // sample, at a level crossing, or at the middle of a bad run
            let mut worst: f64 = 0.0;
            for (i, &di) in d.iter().enumerate() {
                if bad(di) {
                    worst = worst.max(weight(s[i].t));
                }
            }
            for i in 0..s.len().saturating_sub(1) {
                let (a, b) = (bad(d[i]), bad(d[i + 1]));
                if a != b {
                    let (mut lo, mut hi) = (s[i].t, s[i + 1].t);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        let v = cyl.boundary_distance(state_at(profile, trace, mid, cfg).pos.y);
                        if bad(v) == a {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                        if hi - lo < 1e-13 * len.max(1.0) {
                            break;
                        }
                    }
                    worst = worst.max(weight(if a { lo } else { hi }));
                } else if a && !one_sided && s[i].t <= 0.5 * len && s[i + 1].t >= 0.5 * len {
                    worst = worst.max(0.5 * len);
                }
            }
            let exit = if one_sided { len } else { len - worst };
            ExcursionRecord { n, length: len, eps: e, entry: worst, exit: exit.max(worst), max_dist }
        })
        .collect()
}

/// Shortest strip geodesics from `p` to `q + n·k` for each `n`, profiled
/// against every `ε` in `eps`.
pub fn excursion_profile(
    profile: &MetricProfile,
    cyl: &AdmissibleCylinder,
    p: TorusPoint,
    q: TorusPoint,
    ns: &[i64],
    eps: &[f64],
    opts: &ExcursionOptions,
) -> Result<ExcursionProfile> {
    if profile.is_flat() {
        return Err(Error::NoCylinder("flat profiles are foliated by minimal latitudes"));
    }
    let pair = cyl.lift_pair(p, q, opts.boundary_tol)?;
    let per_n = par::map(ns, |&n| {
        let g = cyl.joining(profile, &pair, n, &opts.strip)?;
        Ok(excursion_records(profile, cyl, n, &g.trace, eps, pair.one_sided, &opts.strip.flow))
    });
    let mut records = Vec::new();
    for r in per_n {
        records.extend(r?);
    }
    Ok(ExcursionProfile { one_sided: pair.one_sided, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn round() -> MetricProfile {
        MetricProfile::round(1.0, 2.0).unwrap()
    }

    fn equator_ray(p: &MetricProfile, h: f64) -> RaySpec {
        RaySpec::latitude(p, 0.0, 0.0, true, h, &FlowConfig::default()).unwrap()
    }

    #[test]
    fn points_on_the_ray() {
        let p = round();
        let ray = equator_ray(&p, 50.0);
        let o = BusemannOptions::default();
        assert_eq!(busemann_estimate(&p, &ray, CoverPoint::new(0.0, 0.0), 30.0, &o).unwrap(), -0.0);
        assert_relative_eq!(busemann_estimate(&p, &ray, CoverPoint::new(3.0, 0.0), 30.0, &o).unwrap(), -3.0, epsilon = 1e-12);
        assert!(matches!(busemann_estimate(&p, &ray, CoverPoint::new(0.0, 0.0), 51.0, &o), Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn estimates_decrease_off_the_ray() {
        let p = round();
        let ray = equator_ray(&p, 50.0);
        let o = BusemannOptions::default();
        let b: Vec<f64> = [10.0, 20.0, 40.0].iter().map(|&t| busemann_estimate(&p, &ray, CoverPoint::new(0.0, 0.2), t, &o).unwrap()).collect();
        assert!(b[1] <= b[0] + 1e-12 && b[2] <= b[1] + 1e-12, "{b:?}");
        assert!(b[0] - b[1] < 0.05 && b[1] - b[2] < 0.05);
    }

    #[test]
    fn flat_perpendicular_is_not_a_coray() {
        let flat = MetricProfile::flat();
        let ray = RaySpec::asserted(integrate(&flat, PhaseState::from_turns(&flat, CoverPoint::new(0.0, 0.0), 0.0), 200.0, &FlowConfig::default()).unwrap());
        let up = integrate(&flat, PhaseState::from_turns(&flat, CoverPoint::new(0.3, 0.1), 0.25), 2.0, &FlowConfig::default()).unwrap();
        let along = integrate(&flat, PhaseState::from_turns(&flat, CoverPoint::new(0.3, 0.1), 0.0), 2.0, &FlowConfig::default()).unwrap();
        let o = BusemannOptions::default();
        assert!(coray_residual(&flat, &ray, &up, 0.0, 1.0, &o).unwrap() >= 0.5);
        assert!(coray_residual(&flat, &ray, &along, 0.0, 1.0, &o).unwrap() < 1e-3);
    }

    #[test]
    fn cylinders_of_the_round_torus() {
        let p = round();
        let opts = CylinderOptions { minimal: MinimalOptions { seeds: 64, ..Default::default() }, ..Default::default() };
        let cyl = detect_cylinders(&p, HomologyClass::new(1, 0), &opts).unwrap();
        assert_eq!(cyl.len(), 1);
        assert!(fabs(cyl[0].a_low) < 1e-9 && fabs(cyl[0].a_high - 1.0) < 1e-9);
        assert!(detect_cylinders(&MetricProfile::flat(), HomologyClass::new(1, 0), &CylinderOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn excursions_hug_the_boundary() {
        let p = round();
        let opts = CylinderOptions { minimal: MinimalOptions { seeds: 8, ..Default::default() }, ..Default::default() };
        let cyl = detect_cylinders(&p, HomologyClass::new(1, 0), &opts).unwrap().remove(0);
        let prof = excursion_profile(&p, &cyl, TorusPoint::new(0.0, 0.25), TorusPoint::new(0.0, 0.25), &[2, 4, 8], &[0.05], &ExcursionOptions::default()).unwrap();
        assert!(!prof.one_sided);
        for r in &prof.records {
            assert!(r.entry <= r.exit && r.exit <= r.length);
            assert_relative_eq!(r.max_dist, 0.25, epsilon = 1e-9);
        }
        let t4 = prof.t_eps(0.05, 4);
        assert!(prof.t_eps(0.05, 8) <= 2.0 * t4);
    }
}
