//! Joining geodesics inside a strip bounded by two closed latitudes.
//!
//! Angle shooting cannot resolve geodesics that shadow a hyperbolic latitude
//! for a long time: the initial angle is exponentially small in the shadowing
//! time and the end point depends on it exponentially. Here each geodesic is
//! instead parameterized by where it comes closest to a latitude (its apex, or
//! its speed `|η|` across the lowest latitude it crosses). The trajectory is
//! integrated outwards from that point with relative error control on `y` and
//! `η`, in an integer-translated frame that puts the shadowed latitude near 0.

use alloc::vec::Vec;

use libm::{exp, log, round, sqrt};

use super::{offset_between, JoiningGeodesic};
use crate::flow::{integrate, integrate_until, locate_event, FlowConfig, GeodesicTrace, PhaseState, TraceSample};
use crate::metric::{CoverPoint, MetricProfile};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StripOptions {
    pub flow: FlowConfig,
    /// Tolerance on the horizontal displacement.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest admissible `ln` of the apex gap or crossing speed.
    pub min_log: f64,
}

impl Default for StripOptions {
    fn default() -> Self {
        StripOptions { flow: FlowConfig::default().with_relative_transverse(), tol: 1e-10, max_iter: 200, min_log: -690.0 }
    }
}

/// Integrates until `y` crosses `level` moving in direction `dir`.
/// `None` when the geodesic turns back or runs past `horizon` first.
fn branch(profile: &MetricProfile, start: PhaseState, level: f64, dir: f64, horizon: f64, cfg: &FlowConfig) -> Result<Option<GeodesicTrace>> {
    if dir * (start.pos.y - level) >= 0.0 {
        return GeodesicTrace::from_samples(alloc::vec![TraceSample { t: 0.0, state: start }]).map(Some);
    }
    let mut reached = false;
    let trace = integrate_until(profile, start, horizon, cfg, |_, b| {
        reached = dir * (b.state.pos.y - level) >= 0.0;
        reached || dir * b.state.eta < 0.0
    })?;
    if trace.samples().len() < 2 {
        return Ok(None);
    }
    let i = trace.samples().len() - 2;
    let trace = if reached {
        trace
    } else {
        // The level may be crossed and recrossed inside the last step.
        if trace.length() >= horizon || trace.samples()[i].state.eta * dir <= 0.0 {
            return Ok(None);
        }
        let (tt, turn) = locate_event(profile, &trace, cfg, i, |y| dir * y[3]);
        if dir * (turn.pos.y - level) < 0.0 {
            return Ok(None);
        }
        super::cut(&trace, i, tt, turn)
    };
    let i = trace.samples().len() - 2;
    let (tc, st) = locate_event(profile, &trace, cfg, i, |y| dir * (y[1] - level));
    let mut st = st;
    st.pos.y = level;
    Ok(Some(super::cut(&trace, i, tc, st)))
}

fn concat(a: &GeodesicTrace, b: &GeodesicTrace) -> GeodesicTrace {
    let mut samples = a.samples().to_vec();
    let t0 = a.length();
    samples.extend(b.samples()[1..].iter().map(|s| TraceSample { t: t0 + s.t, state: s.state }));
    GeodesicTrace::from_samples(samples).expect("branches join at the apex")
}

struct Eval {
    dx: f64,
    path: GeodesicTrace,
}

/// A one-parameter family whose horizontal reach decreases in `lam`.
struct Family<'a> {
    profile: &'a MetricProfile,
    /// Levels in the local frame: the path runs from `y_from` to `y_to`.
    y_from: f64,
    y_to: f64,
    sgn: f64,
    kind: Kind,
    horizon: f64,
    cfg: FlowConfig,
}

#[derive(Clone, Copy)]
enum Kind {
    /// Apex at `base + dir·e^lam`; the path leaves the apex in direction `dir`.
    Turning { base: f64, dir: f64 },
    /// Crosses latitude `ym` with `|η| = e^lam`, going from `y_from` to `y_to`.
    Monotone { ym: f64 },
}

impl Family<'_> {
    fn eval(&self, lam: f64) -> Result<Option<Eval>> {
        let p = self.profile;
        let (start, back_dir, fwd_dir) = match self.kind {
            Kind::Turning { base, dir } => {
                let y = base + dir * exp(lam);
                (PhaseState::new(CoverPoint::new(0.0, y), self.sgn / p.value(y), 0.0), dir, dir)
            }
            Kind::Monotone { ym } => {
                let sigma = exp(lam).min(1.0);
                let up = if self.y_to > self.y_from { 1.0 } else { -1.0 };
                let xi = self.sgn * sqrt((1.0 - sigma) * (1.0 + sigma)) / p.value(ym);
                (PhaseState::new(CoverPoint::new(0.0, ym), xi, up * sigma), -up, up)
            }
        };
        let Some(fwd) = branch(p, start, self.y_to, fwd_dir, self.horizon, &self.cfg)? else {
            return Ok(None);
        };
        let Some(back) = branch(p, start.reversed(), self.y_from, back_dir, self.horizon, &self.cfg)? else {
            return Ok(None);
        };
        let path = concat(&back.reversed(), &fwd);
        let dx = self.sgn * (fwd.end().pos.x - back.end().pos.x);
        Ok(Some(Eval { dx, path }))
    }

    /// Largest `lam < lam_hi` whose path exists, when `lam_hi` itself does not.
    fn feasible_below(&self, lam_hi: f64, opts: &StripOptions) -> Result<Option<(f64, Eval)>> {
        let mut bad = lam_hi;
        let mut step = 1.0 / 64.0;
        let (mut good, mut e_good) = loop {
            let lam = lam_hi - step;
            if lam < opts.min_log {
                return Ok(None);
            }
            match self.eval(lam)? {
                Some(e) => break (lam, e),
                None => bad = lam,
            }
            step *= 2.0;
        };
        for _ in 0..60 {
            if bad - good <= 1e-13 {
                break;
            }
            let mid = 0.5 * (good + bad);
            match self.eval(mid)? {
                Some(e) => (good, e_good) = (mid, e),
                None => bad = mid,
            }
        }
        Ok(Some((good, e_good)))
    }

    /// Solves `dx(lam) = target` for `lam ≤ lam_hi`.
    fn solve(&self, target: f64, lam_hi: f64, opts: &StripOptions) -> Result<Option<Eval>> {
        let tol = opts.tol * target.max(1.0);
        let (lam_hi, e_hi) = match self.eval(lam_hi)? {
            Some(e) => (lam_hi, e),
            None => match self.feasible_below(lam_hi, opts)? {
                Some(x) => x,
                None => return Ok(None),
            },
        };
        if (e_hi.dx - target).abs() <= tol {
            return Ok(Some(e_hi));
        }
        if e_hi.dx > target {
            return Ok(None);
        }
        // Walk towards the latitude until the reach overshoots.
        let (mut hi, mut g_hi) = (lam_hi, e_hi.dx - target);
        let mut step = 1.0;
        let (mut lo, mut g_lo) = loop {
            let lam = (hi - step).max(opts.min_log);
            match self.eval(lam)? {
                Some(e) if (e.dx - target).abs() <= tol => return Ok(Some(e)),
                Some(e) if e.dx > target => break (lam, e.dx - target),
                Some(e) => {
                    hi = lam;
                    g_hi = e.dx - target;
                }
                None => break (lam, f64::INFINITY),
            }
            if lam <= opts.min_log {
                return Ok(None);
            }
            step *= 2.0;
        };
        // Illinois with bisection whenever an end is unbounded.
        let mut side = 0i8;
        let mut best: Option<Eval> = None;
        for _ in 0..opts.max_iter {
            let mut lam = if g_lo.is_finite() { hi - g_hi * (hi - lo) / (g_hi - g_lo) } else { 0.5 * (lo + hi) };
            if !(lam > lo && lam < hi) {
                lam = 0.5 * (lo + hi);
            }
            if lam <= lo || lam >= hi {
                break;
            }
            let Some(e) = self.eval(lam)? else {
                lo = lam;
                g_lo = f64::INFINITY;
                side = 0;
                continue;
            };
            let g = e.dx - target;
            let better = best.as_ref().is_none_or(|b| g.abs() < (b.dx - target).abs());
            if g.abs() <= tol {
                return Ok(Some(e));
            }
            if g > 0.0 {
                lo = lam;
                g_lo = g;
                if side == 1 {
                    g_hi *= 0.5;
                }
                side = 1;
            } else {
                hi = lam;
                g_hi = g;
                if side == -1 && g_lo.is_finite() {
                    g_lo *= 0.5;
                }
                side = -1;
            }
            if better {
                best = Some(e);
            }
        }
        match best {
            Some(b) if (b.dx - target).abs() <= 1e3 * tol => Ok(Some(b)),
            Some(b) => Err(Error::NoConvergence { best_miss: (b.dx - target).abs() }),
            None => Ok(None),
        }
    }
}

fn nearest_integer(v: f64) -> f64 {
    round(v)
}

/// Lowest point of `f` on `[a, b]` (cover latitudes).
fn argmin_on(profile: &MetricProfile, a: f64, b: f64) -> f64 {
    let mut best = if profile.value(a) <= profile.value(b) { a } else { b };
    let (k0, k1) = (libm::floor(a) as i64 - 1, libm::ceil(b) as i64 + 1);
    for &(ym, _) in profile.local_minima() {
        for k in k0..=k1 {
            let y = ym + k as f64;
            if y > a && y < b && profile.value(y) < profile.value(best) {
                best = y;
            }
        }
    }
    best
}

/// Shortest geodesic from `from` to `to` that stays in the closed strip
/// `low ≤ Y ≤ high` and turns at most once.
///
/// Both boundary latitudes are assumed to be closed geodesics (`f' = 0`).
/// Candidates are the geodesic shadowing the lower boundary, the one
/// shadowing the upper boundary, the monotone one (endpoints at different
/// heights), and the latitude segment itself when both endpoints lie on the
/// same closed latitude.
pub fn join_in_strip(profile: &MetricProfile, from: CoverPoint, to: CoverPoint, strip: (f64, f64), opts: &StripOptions) -> Result<JoiningGeodesic> {
    let (low, high) = strip;
    let eps = 1e-12;
    if !(low < high) {
        return Err(Error::InvalidArgument("strip must have low < high"));
    }
    if [from.y, to.y].iter().any(|&y| y < low - eps || y > high + eps) {
        return Err(Error::InvalidArgument("endpoints must lie in the strip"));
    }
    if from.euclid(to) == 0.0 {
        return Err(Error::InvalidArgument("target coincides with the start"));
    }
    let ddx = to.x - from.x;
    let target = ddx.abs();
    let sgn = if ddx < 0.0 { -1.0 } else { 1.0 };
    let horizon = target * profile.max_value() + (to.y - from.y).abs() + 2.0 * (high - low) + 10.0;
    let mut candidates: Vec<(GeodesicTrace, f64)> = Vec::new();

    // Latitude segment.
    if from.y == to.y && profile.eval(from.y).df == 0.0 {
        let start = PhaseState::new(from, sgn / profile.value(from.y), 0.0);
        let tr = integrate(profile, start, profile.value(from.y) * target, &opts.flow)?;
        candidates.push((tr, 0.0));
    }

    let mut fams: Vec<(Family, f64, f64)> = Vec::new();
    let mk = |shift: f64, kind: Kind| Family {
        profile,
        y_from: from.y - shift,
        y_to: to.y - shift,
        sgn,
        kind,
        horizon,
        cfg: opts.flow,
    };
    let gap_low = from.y.min(to.y) - low;
    if gap_low > eps {
        let s = nearest_integer(low);
        fams.push((mk(s, Kind::Turning { base: low - s, dir: 1.0 }), log(gap_low * (1.0 - 1e-9)), s));
    }
    let gap_high = high - from.y.max(to.y);
    if gap_high > eps {
        let s = nearest_integer(high);
        fams.push((mk(s, Kind::Turning { base: high - s, dir: -1.0 }), log(gap_high * (1.0 - 1e-9)), s));
    }
    if from.y != to.y {
        let ym = argmin_on(profile, from.y.min(to.y), from.y.max(to.y));
        let s = nearest_integer(ym);
        fams.push((mk(s, Kind::Monotone { ym: ym - s }), 0.0, s));
    }
    let mut last_err = None;
    for (fam, lam_hi, shift) in &fams {
        match fam.solve(target, *lam_hi, opts) {
            Ok(Some(e)) => candidates.push((e.path, *shift)),
            Ok(None) => {}
            Err(e) => last_err = Some(e),
        }
    }
    let Some((path, shift)) = candidates.into_iter().min_by(|a, b| a.0.length().total_cmp(&b.0.length())) else {
        return Err(last_err.unwrap_or(Error::NoConvergence { best_miss: f64::INFINITY }));
    };
    let first = path.start().pos;
    let trace = path.translated(from.x - first.x, shift);
    let hit_error = trace.end().pos.euclid(to);
    let angle = trace.start().angle(profile);
    Ok(JoiningGeodesic { trace, offset: offset_between(from, to), hit_error, angle })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn round() -> MetricProfile {
        MetricProfile::round(1.0, 2.0).unwrap()
    }

    #[test]
    fn shadowing_geodesic_turns_near_the_equator() {
        let p = round();
        let g = join_in_strip(&p, CoverPoint::new(0.1, 0.25), CoverPoint::new(8.37, 0.25), (0.0, 1.0), &StripOptions::default()).unwrap();
        assert!(g.hit_error < 1e-9, "{}", g.hit_error);
        let ymin = g.trace.positions().map(|q| q.y).fold(f64::INFINITY, f64::min);
        assert!(ymin > 0.0 && ymin < 1e-8, "{ymin}");
        assert_eq!(g.offset, crate::connect::HomologyClass::new(8, 0));
    }

    #[test]
    fn one_sided_geodesic_ends_on_the_equator() {
        let p = round();
        let g = join_in_strip(&p, CoverPoint::new(0.1, 0.25), CoverPoint::new(6.5, 0.0), (0.0, 1.0), &StripOptions::default()).unwrap();
        assert!(g.hit_error < 1e-9);
        assert_eq!(g.trace.end().pos.y, 0.0);
        assert!(g.trace.samples().iter().all(|s| s.state.eta <= 0.0));
    }

    #[test]
    fn latitude_segment() {
        let p = round();
        let g = join_in_strip(&p, CoverPoint::new(0.0, 0.0), CoverPoint::new(7.25, 0.0), (0.0, 1.0), &StripOptions::default()).unwrap();
        assert_relative_eq!(g.length(), 7.25, epsilon = 1e-12);
    }

    #[test]
    fn meridian_when_vertically_aligned() {
        let p = round();
        let g = join_in_strip(&p, CoverPoint::new(0.3, 0.1), CoverPoint::new(0.3, 0.8), (0.0, 1.0), &StripOptions::default()).unwrap();
        assert_relative_eq!(g.length(), 0.7, epsilon = 1e-10);
    }
}
