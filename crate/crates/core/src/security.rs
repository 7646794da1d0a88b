//! Blocking sets and insecurity evidence.
//!
//! On a torus of revolution whose profile has a unique minimum at `a` and is
//! symmetric about it, the map `(x, y) ↦ (2r − x, 2a − y)` with `r` a
//! midpoint of `p` and `q` is an isometric involution swapping the two
//! points; its fixed points block every geodesic between them. Everywhere
//! else a sequence of joining geodesics hugging a cylinder boundary escapes
//! any finite set, which [`insecurity_certificate`] checks condition by
//! condition.

use alloc::vec::Vec;

use libm::{asin, fabs, hypot};

use crate::asymptotics::{cylinder_scan, excursion_records, AdmissibleCylinder, CylinderOptions, ExcursionProfile};
use crate::connect::{enumerate_joining, EnumerateOptions, HomologyClass, JoiningGeodesic, StripOptions};
use crate::flow::{has_conjugate_points, monodromy, state_at, FlowConfig, GeodesicTrace, PhaseState};
use crate::metric::{circle_dist, wrap01, CoverPoint, MetricProfile, TorusPoint};
use crate::{par, Error, Result};

/// `(x, y) ↦ (2r − x, 2a − y)` on the torus.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Involution {
    pub r: f64,
    pub a: f64,
    pub fixed_points: [TorusPoint; 4],
}

impl Involution {
    pub fn new(r: f64, a: f64) -> Self {
        let (r, a) = (wrap01(r), wrap01(a));
        let fixed_points = [
            TorusPoint::new(r, a),
            TorusPoint::new(r + 0.5, a),
            TorusPoint::new(r, a + 0.5),
            TorusPoint::new(r + 0.5, a + 0.5),
        ];
        Involution { r, a, fixed_points }
    }

    pub fn apply(&self, p: TorusPoint) -> TorusPoint {
        TorusPoint::new(2.0 * self.r - p.x, 2.0 * self.a - p.y)
    }

    pub fn apply_cover(&self, p: CoverPoint) -> CoverPoint {
        CoverPoint::new(2.0 * self.r - p.x, 2.0 * self.a - p.y)
    }

    /// Pushes a tangent vector forward; the map is affine with linear part `−Id`.
    pub fn push_vector(&self, v: (f64, f64)) -> (f64, f64) {
        (-v.0, -v.1)
    }

    /// Fixed points not within `delta` of `p` or `q`.
    pub fn blocking_candidates(&self, p: TorusPoint, q: TorusPoint, delta: f64) -> Vec<TorusPoint> {
        self.fixed_points
            .iter()
            .copied()
            .filter(|b| torus_coord_distance(*b, p) > delta && torus_coord_distance(*b, q) > delta)
            .collect()
    }
}

fn torus_coord_distance(a: TorusPoint, b: TorusPoint) -> f64 {
    hypot(circle_dist(a.x, b.x), circle_dist(a.y, b.y))
}

/// The involution swapping `(p, a)` and `(q, a)` (with `r` the midpoint of
/// `p` and `q` along the shorter arc), after checking that `f` has a unique
/// minimum at `a` and is symmetric about it.
pub fn involution_for_pair(profile: &MetricProfile, a: f64, p: f64, q: f64, tol: f64) -> Result<Involution> {
    match profile.unique_minimum(tol) {
        Some(m) if circle_dist(m, a) <= 1e-6 => {}
        _ => return Err(Error::HypothesisViolated("profile needs a unique minimum at the symmetry latitude")),
    }
    if !profile.is_reflection_symmetric(a, tol) {
        return Err(Error::HypothesisViolated("profile is not symmetric about its minimum"));
    }
    let r = p + 0.5 * crate::metric::signed_circle_diff(q, p);
    Ok(Involution::new(r, a))
}

/// Closest approach of `trace` to `b`, refined by golden-section search
/// around every sampled local minimum below `near`.
fn closest_approach(profile: &MetricProfile, trace: &GeodesicTrace, b: TorusPoint, near: f64, cfg: &FlowConfig) -> (f64, f64) {
    let s = trace.samples();
    let d = |pos: CoverPoint| profile.torus_local_distance(pos.project(), b);
    let ds: Vec<f64> = s.iter().map(|q| d(q.state.pos)).collect();
    let mut best = (f64::INFINITY, 0.0);
    for (i, &di) in ds.iter().enumerate() {
        if di < best.0 {
            best = (di, s[i].t);
        }
    }
    let at = |t: f64| d(state_at(profile, trace, t, cfg).pos);
    for i in 0..ds.len() {
        let left = if i > 0 { ds[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < ds.len() { ds[i + 1] } else { f64::INFINITY };
        if ds[i] > near || ds[i] > left || ds[i] > right {
            continue;
        }
        let mut lo = s[i.saturating_sub(1)].t;
        let mut hi = s[(i + 1).min(ds.len() - 1)].t;
        let g = 0.5 * (libm::sqrt(5.0) - 1.0);
        let (mut c, mut e) = (hi - g * (hi - lo), lo + g * (hi - lo));
        let (mut fc, mut fe) = (at(c), at(e));
        for _ in 0..80 {
            if hi - lo < 1e-13 {
                break;
            }
            if fc < fe {
                (hi, e, fe) = (e, c, fc);
                c = hi - g * (hi - lo);
                fc = at(c);
            } else {
                (lo, c, fc) = (c, e, fe);
                e = lo + g * (hi - lo);
                fe = at(e);
            }
        }
        let (v, t) = if fc < fe { (fc, c) } else { (fe, e) };
        if v < best.0 {
            best = (v, t);
        }
    }
    best
}

/// Distance from `v` in the velocity space, `|ċ(L) − ċ(0)|`.
pub fn endpoint_velocity_gap(trace: &GeodesicTrace) -> f64 {
    let (a, b) = (trace.start(), trace.end());
    hypot(b.xi - a.xi, b.eta - a.eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockingOptions {
    pub enumerate: EnumerateOptions,
    /// Sampled approaches closer than this are refined.
    pub near: f64,
}

impl Default for BlockingOptions {
    fn default() -> Self {
        BlockingOptions { enumerate: EnumerateOptions::default(), near: 0.1 }
    }
}

/// How one joining geodesic meets the candidate set.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeodesicVerdict {
    pub offset_m: i64,
    pub offset_n: i64,
    pub length: f64,
    pub hit_error: f64,
    /// Index into the candidate set of the closest point.
    pub nearest: Option<usize>,
    pub t: f64,
    pub distance: f64,
    pub blocked: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Verdict {
    #[cfg_attr(feature = "serde", serde(rename = "BLOCKED_AT_SCALE"))]
    BlockedAtScale,
    /// Indices of unblocked geodesics.
    #[cfg_attr(feature = "serde", serde(rename = "UNBLOCKED_WITNESSES"))]
    UnblockedWitnesses(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SecurityReport {
    pub p: TorusPoint,
    pub q: TorusPoint,
    pub lmax: f64,
    pub delta: f64,
    pub candidates: Vec<TorusPoint>,
    pub sweep: usize,
    pub new_in_last_doubling: usize,
    pub geodesics: Vec<GeodesicVerdict>,
    pub verdict: Verdict,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub traces: Vec<JoiningGeodesic>,
}

impl SecurityReport {
    pub fn is_blocked(&self) -> bool {
        self.verdict == Verdict::BlockedAtScale
    }
}

/// Checks the geodesics of `joining` against `candidates`.
pub fn judge(profile: &MetricProfile, joining: &[JoiningGeodesic], candidates: &[TorusPoint], delta: f64, near: f64, cfg: &FlowConfig) -> Vec<GeodesicVerdict> {
    par::map(joining, |g| {
        let mut best = (None, 0.0, f64::INFINITY);
        for (k, &b) in candidates.iter().enumerate() {
            let (d, t) = closest_approach(profile, &g.trace, b, near.max(delta), cfg);
            if d < best.2 {
                best = (Some(k), t, d);
            }
        }
        GeodesicVerdict {
            offset_m: g.offset.m,
            offset_n: g.offset.n,
            length: g.length(),
            hit_error: g.hit_error,
            nearest: best.0,
            t: best.1,
            distance: best.2,
            blocked: best.2 < delta,
        }
    })
}

/// Enumerates joining geodesics up to `lmax` and checks that each passes
/// within `delta` of a candidate.
pub fn verify_blocking(
    profile: &MetricProfile,
    p: TorusPoint,
    q: TorusPoint,
    candidates: &[TorusPoint],
    lmax: f64,
    delta: f64,
    opts: &BlockingOptions,
) -> Result<SecurityReport> {
    if candidates.iter().any(|&b| torus_coord_distance(b, p) <= delta || torus_coord_distance(b, q) <= delta) {
        return Err(Error::InvalidArgument("blocking candidates must stay away from p and q"));
    }
    let en = enumerate_joining(profile, p, q, lmax, &opts.enumerate);
    let geodesics = judge(profile, &en.geodesics, candidates, delta, opts.near, &opts.enumerate.shoot.flow);
    let open: Vec<usize> = geodesics.iter().enumerate().filter(|(_, v)| !v.blocked).map(|(i, _)| i).collect();
    let verdict = if open.is_empty() { Verdict::BlockedAtScale } else { Verdict::UnblockedWitnesses(open) };
    Ok(SecurityReport {
        p,
        q,
        lmax,
        delta,
        candidates: candidates.to_vec(),
        sweep: en.sweep,
        new_in_last_doubling: en.new_in_last_doubling,
        geodesics,
        verdict,
        traces: en.geodesics,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MidpointCluster {
    pub center: TorusPoint,
    pub members: Vec<usize>,
    /// The cluster sits on `p` or `q`.
    pub at_endpoint: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MidpointAnalysis {
    pub midpoints: Vec<TorusPoint>,
    pub clusters: Vec<MidpointCluster>,
    /// Largest distance of a midpoint from its cluster center.
    pub spread: f64,
}

/// Midpoints `c(L/2)` of the given geodesics, clustered by leader
/// assignment at threshold `tol`.
pub fn midpoint_clusters(profile: &MetricProfile, joining: &[JoiningGeodesic], p: TorusPoint, q: TorusPoint, tol: f64, cfg: &FlowConfig) -> MidpointAnalysis {
    let midpoints: Vec<TorusPoint> = par::map(joining, |g| state_at(profile, &g.trace, 0.5 * g.length(), cfg).pos.project());
    let mut clusters: Vec<MidpointCluster> = Vec::new();
    let mut spread: f64 = 0.0;
    for (i, &m) in midpoints.iter().enumerate() {
        match clusters.iter_mut().find(|c| torus_coord_distance(c.center, m) <= tol) {
            Some(c) => {
                spread = spread.max(torus_coord_distance(c.center, m));
                c.members.push(i);
            }
            None => clusters.push(MidpointCluster {
                center: m,
                members: alloc::vec![i],
                at_endpoint: torus_coord_distance(m, p) <= tol || torus_coord_distance(m, q) <= tol,
            }),
        }
    }
    MidpointAnalysis { midpoints, clusters, spread }
}

pub fn midpoint_analysis(profile: &MetricProfile, p: TorusPoint, q: TorusPoint, lmax: f64, tol: f64, opts: &EnumerateOptions) -> (Vec<JoiningGeodesic>, MidpointAnalysis) {
    let en = enumerate_joining(profile, p, q, lmax, opts);
    let m = midpoint_clusters(profile, &en.geodesics, p, q, tol, &opts.shoot.flow);
    (en.geodesics, m)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CertificateVerdict {
    #[cfg_attr(feature = "serde", serde(rename = "VALID"))]
    Valid,
    #[cfg_attr(feature = "serde", serde(rename = "INVALID"))]
    Invalid,
}

/// Evidence for one geodesic of the sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CertificateEntry {
    pub n: i64,
    pub length: f64,
    pub hit_error: f64,
    /// Smallest distance to the cylinder boundary over the open interval.
    pub min_boundary_distance: f64,
    pub conjugate_point: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InsecurityCertificate {
    pub p: TorusPoint,
    pub q: TorusPoint,
    pub cylinder_low: f64,
    pub cylinder_high: f64,
    pub class: HomologyClass,
    pub one_sided: bool,
    pub boundary_period: f64,
    pub eps: Vec<f64>,
    pub entries: Vec<CertificateEntry>,
    /// Lengths strictly increase with gaps within the tolerance of the boundary period.
    pub lengths_ok: bool,
    /// Interiors avoid the boundary.
    pub avoids_boundary: bool,
    pub no_conjugate_points: bool,
    /// `T_n(ε)` over the upper half of the range stays within the factor of its value at `n_max / 2`.
    pub excursion_bounded: bool,
    pub excursion: ExcursionProfile,
    pub verdict: CertificateVerdict,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub geodesics: Vec<JoiningGeodesic>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CertificateOptions {
    pub strip: StripOptions,
    /// Allowed relative deviation of `L_{n+1} − L_n` from the boundary period.
    pub gap_tol: f64,
    /// Allowed growth of `T_n(ε)` over its value at `n_max / 2`.
    pub excursion_factor: f64,
    pub boundary_tol: f64,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        CertificateOptions { strip: StripOptions::default(), gap_tol: 0.2, excursion_factor: 2.0, boundary_tol: 1e-9 }
    }
}

/// Joining geodesics from `p` to `q + n·k`, `n = 1..=n_max`, inside the
/// cylinder, with the four conditions that make `(p, q)` insecure.
pub fn insecurity_certificate(
    profile: &MetricProfile,
    cyl: &AdmissibleCylinder,
    p: TorusPoint,
    q: TorusPoint,
    n_max: i64,
    eps: &[f64],
    opts: &CertificateOptions,
) -> Result<InsecurityCertificate> {
    if profile.is_flat() {
        return Err(Error::NoCylinder("flat profiles are foliated by minimal latitudes"));
    }
    if n_max < 2 {
        return Err(Error::InvalidArgument("n_max must be at least 2"));
    }
    let pair = cyl.lift_pair(p, q, opts.boundary_tol)?;
    let ns: Vec<i64> = (1..=n_max).collect();
    let cfg = &opts.strip.flow;
    let built = par::map(&ns, |&n| -> Result<_> {
        let g = cyl.joining(profile, &pair, n, &opts.strip)?;
        let s = g.trace.samples();
        let last = if pair.one_sided { s.len() - 1 } else { s.len() };
        let min_d = s[..last].iter().skip(1).map(|q| cyl.boundary_distance(q.state.pos.y)).fold(f64::INFINITY, f64::min);
        let conj = has_conjugate_points(profile, &g.trace, cfg)?;
        let rec = excursion_records(profile, cyl, n, &g.trace, eps, pair.one_sided, cfg);
        let entry = CertificateEntry { n, length: g.length(), hit_error: g.hit_error, min_boundary_distance: min_d, conjugate_point: conj };
        Ok((g, entry, rec))
    });
    let mut geodesics = Vec::with_capacity(ns.len());
    let mut entries = Vec::with_capacity(ns.len());
    let mut records = Vec::new();
    for b in built {
        let (g, e, r) = b?;
        geodesics.push(g);
        entries.push(e);
        records.extend(r);
    }
    let excursion = ExcursionProfile { one_sided: pair.one_sided, records };
    let period = cyl.boundary_traces[0].length().min(cyl.boundary_traces[1].length());
    let lengths_ok = entries.windows(2).all(|w| {
        let gap = w[1].length - w[0].length;
        gap > 0.0 && fabs(gap - period) <= opts.gap_tol * period
    });
    let avoids_boundary = entries.iter().all(|e| e.min_boundary_distance > 0.0);
    let no_conjugate_points = entries.iter().all(|e| e.conjugate_point.is_none());
    let half = n_max / 2;
    let excursion_bounded = eps.iter().all(|&e| {
        let Some(base) = excursion.t_n(e, half) else {
            return false;
        };
        ns.iter().filter(|&&n| n > half).all(|&n| excursion.t_n(e, n).is_some_and(|t| t <= opts.excursion_factor * base))
    });
    let verdict = if lengths_ok && avoids_boundary && no_conjugate_points && excursion_bounded {
        CertificateVerdict::Valid
    } else {
        CertificateVerdict::Invalid
    };
    Ok(InsecurityCertificate {
        p,
        q,
        cylinder_low: cyl.a_low,
        cylinder_high: cyl.a_high,
        class: cyl.class,
        one_sided: pair.one_sided,
        boundary_period: period,
        eps: eps.to_vec(),
        entries,
        lengths_ok,
        avoids_boundary,
        no_conjugate_points,
        excursion_bounded,
        excursion,
        verdict,
        geodesics,
    })
}

/// A geodesic of the certificate that avoids the candidate set.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EscapeWitness {
    pub n: i64,
    /// Closest approach to the candidate set.
    pub distance: f64,
}

/// The first geodesic of a valid certificate staying at least `delta` from
/// every point of `blockers`, or `None` when all of them are caught.
pub fn escape_test(profile: &MetricProfile, cert: &InsecurityCertificate, blockers: &[TorusPoint], delta: f64, cfg: &FlowConfig) -> Result<Option<EscapeWitness>> {
    if cert.verdict != CertificateVerdict::Valid {
        return Err(Error::HypothesisViolated("escape test needs a valid certificate"));
    }
    if blockers.iter().any(|&b| torus_coord_distance(b, cert.p) <= delta || torus_coord_distance(b, cert.q) <= delta) {
        return Err(Error::InvalidArgument("blockers must stay away from p and q"));
    }
    for (g, e) in cert.geodesics.iter().zip(&cert.entries) {
        let d = blockers
            .iter()
            .map(|&b| closest_approach(profile, &g.trace, b, 0.1_f64.max(delta), cfg).0)
            .fold(f64::INFINITY, f64::min);
        if d >= delta {
            return Ok(Some(EscapeWitness { n: e.n, distance: d }));
        }
    }
    Ok(None)
}

/// One transversal crossing of two closed geodesics.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Crossing {
    pub t1: f64,
    pub t2: f64,
    pub point: TorusPoint,
    /// Orientation of `(ċ₁, ċ₂)`.
    pub sign: i32,
    /// Riemannian angle between the two velocities.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntersectionCount {
    pub count: usize,
    pub signed_sum: i64,
    pub crossings: Vec<Crossing>,
}

/// Counts the points of `c₁(ℝ) ∩ c₂(ℝ)` on the torus for two closed
/// geodesics, each traced over one period.
pub fn intersection_count(profile: &MetricProfile, c1: &GeodesicTrace, c2: &GeodesicTrace, cfg: &FlowConfig) -> Result<IntersectionCount> {
    let (l1, l2) = (c1.length(), c2.length());
    let bbox = |t: &GeodesicTrace| {
        t.positions().fold((f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY), |b, p| {
            (b.0.min(p.x), b.1.min(p.y), b.2.max(p.x), b.3.max(p.y))
        })
    };
    let (b1, b2) = (bbox(c1), bbox(c2));
    let s1 = c1.samples();
    let s2 = c2.samples();
    let mut raw: Vec<(f64, f64, f64, f64)> = Vec::new();
    let i_lo = libm::floor(b1.0 - b2.2) as i64;
    let i_hi = libm::ceil(b1.2 - b2.0) as i64;
    let j_lo = libm::floor(b1.1 - b2.3) as i64;
    let j_hi = libm::ceil(b1.3 - b2.1) as i64;
    for i in i_lo..=i_hi {
        for j in j_lo..=j_hi {
            let (dx, dy) = (i as f64, j as f64);
            for a in s1.windows(2) {
                let (a0, a1) = (a[0].state.pos, a[1].state.pos);
                for b in s2.windows(2) {
                    let (b0, b1) = (b[0].state.pos, b[1].state.pos);
                    let (b0, b1) = (CoverPoint::new(b0.x + dx, b0.y + dy), CoverPoint::new(b1.x + dx, b1.y + dy));
                    if let Some((u, v)) = segment_hit(a0, a1, b0, b1) {
                        let t1 = a[0].t + u * (a[1].t - a[0].t);
                        let t2 = b[0].t + v * (b[1].t - b[0].t);
                        raw.push((t1, t2, dx, dy));
                    }
                }
            }
        }
    }
    let mut crossings: Vec<Crossing> = Vec::new();
    let mut seen: Vec<(f64, f64)> = Vec::new();
    let wrap = |t: f64, l: f64| {
        let w = t - l * libm::floor(t / l);
        if w >= l - 1e-9 {
            0.0
        } else {
            w
        }
    };
    for (t1, t2, dx, dy) in raw {
        let (t1, t2) = newton_crossing(profile, c1, c2, t1, t2, (dx, dy), cfg);
        let key = (wrap(t1, l1), wrap(t2, l2));
        let dup = seen.iter().any(|k| {
            let d1 = fabs(k.0 - key.0).min(l1 - fabs(k.0 - key.0));
            let d2 = fabs(k.1 - key.1).min(l2 - fabs(k.1 - key.1));
            d1 < 1e-7 && d2 < 1e-7
        });
        if dup {
            continue;
        }
        seen.push(key);
        let u = state_at(profile, c1, t1.clamp(0.0, l1), cfg);
        let v = state_at(profile, c2, t2.clamp(0.0, l2), cfg);
        let cross = u.xi * v.eta - u.eta * v.xi;
        let f = profile.value(u.pos.y);
        let angle = asin((f * fabs(cross)).min(1.0));
        if angle < 1e-6 {
            return Err(Error::TangencyDetected { angle });
        }
        crossings.push(Crossing { t1: key.0, t2: key.1, point: u.pos.project(), sign: if cross > 0.0 { 1 } else { -1 }, angle });
    }
    crossings.sort_by(|a, b| a.t1.total_cmp(&b.t1));
    let signed_sum = crossings.iter().map(|c| c.sign as i64).sum();
    Ok(IntersectionCount { count: crossings.len(), signed_sum, crossings })
}

/// Parameters `(u, v) ∈ [0,1]²` where segments `a0a1` and `b0b1` meet.
fn segment_hit(a0: CoverPoint, a1: CoverPoint, b0: CoverPoint, b1: CoverPoint) -> Option<(f64, f64)> {
    let (rx, ry) = (a1.x - a0.x, a1.y - a0.y);
    let (sx, sy) = (b1.x - b0.x, b1.y - b0.y);
    let den = rx * sy - ry * sx;
    if den == 0.0 {
        return None;
    }
    let (qx, qy) = (b0.x - a0.x, b0.y - a0.y);
    let u = (qx * sy - qy * sx) / den;
    let v = (qx * ry - qy * rx) / den;
    ((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v)).then_some((u, v))
}

fn newton_crossing(profile: &MetricProfile, c1: &GeodesicTrace, c2: &GeodesicTrace, mut t1: f64, mut t2: f64, shift: (f64, f64), cfg: &FlowConfig) -> (f64, f64) {
    let at = |tr: &GeodesicTrace, t: f64| -> PhaseState { state_at(profile, tr, t.clamp(0.0, tr.length()), cfg) };
    for _ in 0..8 {
        let (u, v) = (at(c1, t1), at(c2, t2));
        let (rx, ry) = (u.pos.x - v.pos.x - shift.0, u.pos.y - v.pos.y - shift.1);
        let det = -u.xi * v.eta + u.eta * v.xi;
        if det == 0.0 {
            break;
        }
        // [ξ₁ −ξ₂; η₁ −η₂] (dt₁, dt₂) = −r
        let d1 = (-rx * -v.eta - -v.xi * -ry) / det;
        let d2 = (u.xi * -ry - u.eta * -rx) / det;
        t1 += d1;
        t2 += d2;
        if fabs(d1) + fabs(d2) < 1e-14 {
            break;
        }
    }
    (t1, t2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GOptions {
    pub cylinders: CylinderOptions,
    /// Monodromy eigenvalues must differ from 1 by more than this.
    pub eigen_tol: f64,
}

impl Default for GOptions {
    fn default() -> Self {
        GOptions { cylinders: CylinderOptions::default(), eigen_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassDiagnostic {
    pub class: HomologyClass,
    pub clusters: usize,
    pub min_length: f64,
    pub foliated: bool,
    pub cylinders: usize,
    /// `min |λ − 1|` over the monodromy eigenvalues of the minimizer, when unique.
    pub eigen_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GReport {
    pub classes: Vec<ClassDiagnostic>,
    pub g1: bool,
    /// First pair of classes with unit intersection and unique minimizers.
    pub g2: Option<(HomologyClass, HomologyClass)>,
    pub g3: bool,
    /// Dedup threshold at which uniqueness was judged.
    pub resolution: f64,
}

pub const DEFAULT_CLASSES: [HomologyClass; 4] =
    [HomologyClass::new(1, 0), HomologyClass::new(0, 1), HomologyClass::new(1, 1), HomologyClass::new(1, -1)];

/// Scans the classes for a non-foliated class (G1), a unimodular pair of
/// classes with unique minimizers (G2), and nondegeneracy of those (G3).
pub fn g_conditions(profile: &MetricProfile, classes: &[HomologyClass], opts: &GOptions) -> Result<GReport> {
    let mut diags = Vec::with_capacity(classes.len());
    for &h in classes {
        let scan = cylinder_scan(profile, h, &opts.cylinders)?;
        let eigen_gap = match scan.loops.as_slice() {
            [only] => Some(monodromy(profile, &only.trace, &opts.cylinders.minimal.flow)?.distance_from_one()),
            _ => None,
        };
        diags.push(ClassDiagnostic {
            class: h,
            clusters: scan.loops.len(),
            min_length: scan.loops.iter().map(|l| l.length()).fold(f64::INFINITY, f64::min),
            foliated: scan.foliated,
            cylinders: scan.cylinders.len(),
            eigen_gap,
        });
    }
    let g1 = diags.iter().any(|d| d.cylinders > 0);
    let mut g2 = None;
    let mut g3 = false;
    'outer: for (i, a) in diags.iter().enumerate() {
        for b in &diags[i + 1..] {
            if a.class.dot(&b.class).abs() == 1 && a.clusters == 1 && b.clusters == 1 {
                let nondeg = [a, b].iter().all(|d| d.eigen_gap.is_some_and(|e| e > opts.eigen_tol));
                if g2.is_none() {
                    g2 = Some((a.class, b.class));
                }
                if nondeg {
                    g2 = Some((a.class, b.class));
                    g3 = true;
                    break 'outer;
                }
            }
        }
    }
    Ok(GReport { classes: diags, g1, g2, g3, resolution: opts.cylinders.minimal.cluster_tol })
}
