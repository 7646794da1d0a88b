//! Geodesic flow, Jacobi fields and monodromy on `ds² = f²(y)dx² + dy²`.
//!
//! States live in the universal cover. The geodesic equations are
//!
//! ```text
//! x' = ξ,   y' = η,   ξ' = −2 (f'/f) ξ η,   η' = f f' ξ²
//! ```
//!
//! and are integrated with [`Dop853`] plus a projection back onto the unit
//! speed level `f²ξ² + η² = 1` after every accepted step.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{atan2, cos, sin, sqrt};

use crate::metric::{CoverPoint, MetricProfile};
use crate::ode::{bisect_in_step, Control, Dop853, OdeSystem};
use crate::{Error, Result};

/// Integration settings shared by every geodesic computation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the arclength between consecutive trace samples.
    pub output_step: f64,
    /// Closure tolerance for periodic traces (position mod ℤ² and velocity).
    pub closure_tol: f64,
    /// Pure relative error control on `y` and `η`; used when a geodesic
    /// hugs the latitude `y = 0` at exponentially small distance.
    pub relative_transverse: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { rtol: 1e-12, atol: 1e-12, output_step: 0.05, closure_tol: 1e-8, relative_transverse: false }
    }
}

impl FlowConfig {
    pub fn coarse(tol: f64) -> Self {
        FlowConfig { rtol: tol, atol: tol, ..Self::default() }
    }

    pub fn with_relative_transverse(mut self) -> Self {
        self.relative_transverse = true;
        self
    }

    pub(crate) fn solver<const N: usize>(&self) -> Dop853<N> {
        let mut s = Dop853::new(self.rtol, self.atol, self.output_step);
        if self.relative_transverse {
            s.atol[1] = 0.0;
            s.atol[3] = 0.0;
        }
        s.initial_step = self.output_step.min(1e-2);
        s
    }
}

/// A tangent vector `ξ ∂/∂x + η ∂/∂y` based at a cover point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseState {
    pub pos: CoverPoint,
    pub xi: f64,
    pub eta: f64,
}

impl PhaseState {
    pub const fn new(pos: CoverPoint, xi: f64, eta: f64) -> Self {
        PhaseState { pos, xi, eta }
    }

    /// Unit vector making angle `theta` with `∂/∂x` (measured in the metric).
    pub fn from_angle(profile: &MetricProfile, pos: CoverPoint, theta: f64) -> Self {
        Self::from_turns(profile, pos, theta / (2.0 * PI))
    }

    /// Unit vector at `turns` full turns from `∂/∂x`; quarter turns are exact.
    pub fn from_turns(profile: &MetricProfile, pos: CoverPoint, turns: f64) -> Self {
        let (c, s) = cos_sin_turns(turns);
        PhaseState { pos, xi: c / profile.value(pos.y), eta: s }
    }

    /// Metric angle of the velocity with `∂/∂x`, in `(−π, π]`.
    pub fn angle(&self, profile: &MetricProfile) -> f64 {
        atan2(self.eta, profile.value(self.pos.y) * self.xi)
    }

    pub fn speed_sq(&self, profile: &MetricProfile) -> f64 {
        let f = profile.value(self.pos.y);
        f * f * self.xi * self.xi + self.eta * self.eta
    }

    pub fn normalized(self, profile: &MetricProfile) -> Self {
        let s = sqrt(self.speed_sq(profile));
        PhaseState { xi: self.xi / s, eta: self.eta / s, ..self }
    }

    /// Same point, opposite velocity.
    pub fn reversed(self) -> Self {
        PhaseState { xi: -self.xi, eta: -self.eta, ..self }
    }

    pub(crate) fn to_array(self) -> [f64; 4] {
        [self.pos.x, self.pos.y, self.xi, self.eta]
    }

    pub(crate) fn from_slice(a: &[f64]) -> Self {
        PhaseState { pos: CoverPoint::new(a[0], a[1]), xi: a[2], eta: a[3] }
    }
}

/// `(cos 2πu, sin 2πu)` with exact values at multiples of a quarter turn.
pub fn cos_sin_turns(u: f64) -> (f64, f64) {
    let q = libm::round(4.0 * u);
    let r = u - 0.25 * q;
    let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (cos(2.0 * PI * r), sin(2.0 * PI * r)) };
    match (q as i64).rem_euclid(4) {
        0 => (c, s),
        1 => (-s, c),
        2 => (-c, -s),
        _ => (s, -c),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceSample {
    pub t: f64,
    pub state: PhaseState,
}

/// An arclength-sampled geodesic in the universal cover.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeodesicTrace {
    samples: Vec<TraceSample>,
    length: f64,
}

impl GeodesicTrace {
    /// Builds a trace from samples with strictly increasing `t` starting at 0.
    pub fn from_samples(samples: Vec<TraceSample>) -> Result<Self> {
        let first = samples.first().ok_or(Error::InvalidArgument("empty trace"))?;
        if first.t != 0.0 {
            return Err(Error::InvalidArgument("trace must start at t = 0"));
        }
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::InvalidArgument("trace parameters must increase"));
        }
        let length = samples[samples.len() - 1].t;
        Ok(GeodesicTrace { samples, length })
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn start(&self) -> PhaseState {
        self.samples[0].state
    }

    pub fn end(&self) -> PhaseState {
        self.samples[self.samples.len() - 1].state
    }

    pub fn displacement(&self) -> (f64, f64) {
        let (a, b) = (self.start().pos, self.end().pos);
        (b.x - a.x, b.y - a.y)
    }

    /// The same geodesic traversed backwards.
    pub fn reversed(&self) -> Self {
        let samples = self
            .samples
            .iter()
            .rev()
            .map(|s| TraceSample { t: self.length - s.t, state: s.state.reversed() })
            .collect::<Vec<_>>();
        let mut samples = samples;
        samples[0].t = 0.0;
        GeodesicTrace { samples, length: self.length }
    }

    /// Translation by a cover displacement (an isometry only for `dy ∈ ℤ`).
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        let samples = self
            .samples
            .iter()
            .map(|s| {
                let mut st = s.state;
                st.pos = CoverPoint::new(st.pos.x + dx, st.pos.y + dy);
                TraceSample { t: s.t, state: st }
            })
            .collect();
        GeodesicTrace { samples, length: self.length }
    }

    /// Index `i` with `t_i ≤ t < t_{i+1}` (clamped).
    pub fn segment_index(&self, t: f64) -> usize {
        let i = self.samples.partition_point(|s| s.t <= t);
        i.saturating_sub(1).min(self.samples.len().saturating_sub(2))
    }

    /// Sampled positions as `(x, y)` pairs.
    pub fn positions(&self) -> impl Iterator<Item = CoverPoint> + '_ {
        self.samples.iter().map(|s| s.state.pos)
    }
}

pub(crate) struct Geodesic<'a>(pub &'a MetricProfile);

impl OdeSystem<4> for Geodesic<'_> {
    fn rhs(&self, y: &[f64; 4]) -> [f64; 4] {
        geodesic_rhs_array(self.0, y)
    }

    fn project(&self, y: &mut [f64; 4]) -> bool {
        project_unit(self.0, y)
    }
}

fn geodesic_rhs_array(profile: &MetricProfile, s: &[f64]) -> [f64; 4] {
    let v = profile.eval(s[1]);
    let (xi, eta) = (s[2], s[3]);
    [xi, eta, -2.0 * (v.df / v.f) * xi * eta, v.f * v.df * xi * xi]
}

fn project_unit(profile: &MetricProfile, s: &mut [f64]) -> bool {
    let f = profile.value(s[1]);
    let norm = sqrt(f * f * s[2] * s[2] + s[3] * s[3]);
    if norm == 1.0 || norm == 0.0 {
        return false;
    }
    s[2] /= norm;
    s[3] /= norm;
    true
}

/// Geodesic plus one normal Jacobi field `(J, J')`.
struct WithJacobi<'a>(&'a MetricProfile);

impl OdeSystem<6> for WithJacobi<'_> {
    fn rhs(&self, y: &[f64; 6]) -> [f64; 6] {
        let g = geodesic_rhs_array(self.0, y);
        let k = self.0.gaussian_curvature(y[1]);
        [g[0], g[1], g[2], g[3], y[5], -k * y[4]]
    }

    fn project(&self, y: &mut [f64; 6]) -> bool {
        project_unit(self.0, y)
    }
}

/// Geodesic plus the fundamental matrix of the Jacobi equation.
struct WithFundamental<'a>(&'a MetricProfile);

impl OdeSystem<8> for WithFundamental<'_> {
    fn rhs(&self, y: &[f64; 8]) -> [f64; 8] {
        let g = geodesic_rhs_array(self.0, y);
        let k = self.0.gaussian_curvature(y[1]);
        [g[0], g[1], g[2], g[3], y[5], -k * y[4], y[7], -k * y[6]]
    }

    fn project(&self, y: &mut [f64; 8]) -> bool {
        project_unit(self.0, y)
    }
}

/// Time derivative `(x', y', ξ', η')` of a phase state.
pub fn geodesic_rhs(profile: &MetricProfile, state: &PhaseState) -> [f64; 4] {
    geodesic_rhs_array(profile, &state.to_array())
}

/// Clairaut integral `F = f²(y) ξ`.
pub fn clairaut(profile: &MetricProfile, state: &PhaseState) -> f64 {
    let f = profile.value(state.pos.y);
    f * f * state.xi
}

/// Integrates the unit-speed geodesic from `start` for arclength `length`.
pub fn integrate(profile: &MetricProfile, start: PhaseState, length: f64, cfg: &FlowConfig) -> Result<GeodesicTrace> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidArgument("length must be positive"));
    }
    integrate_until(profile, start, length, cfg, |_, _| false)
}

/// Like [`integrate`] but stops after the first accepted step for which
/// `stop(previous, current)` returns `true`.
pub fn integrate_until<F>(
    profile: &MetricProfile,
    start: PhaseState,
    max_length: f64,
    cfg: &FlowConfig,
    mut stop: F,
) -> Result<GeodesicTrace>
where
    F: FnMut(&TraceSample, &TraceSample) -> bool,
{
    let solver = cfg.solver::<4>();
    let sys = Geodesic(profile);
    let start = start.normalized(profile);
    let mut samples = Vec::with_capacity((max_length / cfg.output_step) as usize + 2);
    samples.push(TraceSample { t: 0.0, state: start });
    solver.run(&sys, start.to_array(), max_length, |step| {
        let cur = TraceSample { t: step.t + step.h, state: PhaseState::from_slice(&step.end) };
        let prev = samples[samples.len() - 1];
        samples.push(cur);
        if stop(&prev, &cur) {
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    let length = samples[samples.len() - 1].t;
    Ok(GeodesicTrace { samples, length })
}

/// State at arclength `t` along `trace`, recomputed from the preceding sample.
pub fn state_at(profile: &MetricProfile, trace: &GeodesicTrace, t: f64, cfg: &FlowConfig) -> PhaseState {
    let i = trace.segment_index(t);
    let s = trace.samples[i];
    let solver = cfg.solver::<4>();
    PhaseState::from_slice(&solver.substep(&Geodesic(profile), &s.state.to_array(), t - s.t))
}

/// Locates the first sign change of `g` along `trace` inside `(t_lo, t_hi)`.
pub(crate) fn locate_event<G>(
    profile: &MetricProfile,
    trace: &GeodesicTrace,
    cfg: &FlowConfig,
    i: usize,
    g: G,
) -> (f64, PhaseState)
where
    G: Fn(&[f64; 4]) -> f64,
{
    let solver = cfg.solver::<4>();
    let a = trace.samples[i];
    let b = trace.samples[i + 1];
    let step = crate::ode::Step { t: a.t, h: b.t - a.t, start: a.state.to_array(), end: b.state.to_array() };
    let (tau, s) = bisect_in_step(&solver, &Geodesic(profile), &step, g, 1e-13);
    (a.t + tau, PhaseState::from_slice(&s))
}

/// Scalar normal Jacobi field along a trace with its zero crossings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JacobiSolution {
    /// `(t, J, J')`
    pub samples: Vec<(f64, f64, f64)>,
    pub zeros: Vec<f64>,
}

/// Solves `J'' + K(γ(t)) J = 0` along `trace` from `(J(0), J'(0)) = (j0, dj0)`.
///
/// The geodesic is restarted from every trace sample so the carrier is the
/// given trace; zeros are located by bisection to 1e-10 in `t`.
pub fn jacobi(profile: &MetricProfile, trace: &GeodesicTrace, j0: f64, dj0: f64, cfg: &FlowConfig) -> Result<JacobiSolution> {
    let solver = cfg.solver::<6>();
    let sys = WithJacobi(profile);
    let mut samples = Vec::with_capacity(trace.samples.len());
    let mut zeros = Vec::new();
    let (mut j, mut dj) = (j0, dj0);
    samples.push((0.0, j, dj));
    for w in trace.samples.windows(2) {
        let (a, b) = (w[0], w[1]);
        let g = a.state.to_array();
        let y0 = [g[0], g[1], g[2], g[3], j, dj];
        let (_, y1) = solver.run(&sys, y0, b.t - a.t, |step| {
            let (ja, jb) = (step.start[4], step.end[4]);
            if jb == 0.0 {
                zeros.push(a.t + step.t + step.h);
            } else if ja != 0.0 && (ja > 0.0) != (jb > 0.0) {
                let (tau, _) = bisect_in_step(&solver, &sys, step, |y| y[4], 1e-11);
                zeros.push(a.t + step.t + tau);
            }
            Control::Continue
        })?;
        j = y1[4];
        dj = y1[5];
        samples.push((b.t, j, dj));
    }
    Ok(JacobiSolution { samples, zeros })
}

/// First conjugate point to `t = 0` in `(0, length)`, if any.
pub fn has_conjugate_points(profile: &MetricProfile, trace: &GeodesicTrace, cfg: &FlowConfig) -> Result<Option<f64>> {
    let sol = jacobi(profile, trace, 0.0, 1.0, cfg)?;
    Ok(sol.zeros.into_iter().find(|&t| t > 0.0 && t < trace.length))
}

/// Fundamental matrix of the normal Jacobi equation over one period.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Monodromy {
    /// `[[J₁(L), J₂(L)], [J₁'(L), J₂'(L)]]` for `(J, J')(0) = (1,0), (0,1)`.
    pub matrix: [[f64; 2]; 2],
}

impl Monodromy {
    pub fn det(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.matrix[0][0] + self.matrix[1][1]
    }

    /// Eigenvalues as `(re, im)` pairs.
    pub fn eigenvalues(&self) -> [(f64, f64); 2] {
        let half = 0.5 * self.trace();
        let disc = half * half - self.det();
        if disc >= 0.0 {
            let r = sqrt(disc);
            // Avoid cancellation in the small root.
            let big = if half >= 0.0 { half + r } else { half - r };
            let small = if big != 0.0 { self.det() / big } else { 0.0 };
            [(big, 0.0), (small, 0.0)]
        } else {
            let r = sqrt(-disc);
            [(half, r), (half, -r)]
        }
    }

    /// Smallest distance from an eigenvalue to 1.
    pub fn distance_from_one(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|&(re, im)| libm::hypot(re - 1.0, im))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks that `trace` closes up: end position ≡ start mod ℤ², same velocity.
pub fn closure_residual(trace: &GeodesicTrace) -> f64 {
    let (a, b) = (trace.start(), trace.end());
    let dx = b.pos.x - a.pos.x;
    let dy = b.pos.y - a.pos.y;
    let rx = dx - libm::round(dx);
    let ry = dy - libm::round(dy);
    rx.abs().max(ry.abs()).max((b.xi - a.xi).abs()).max((b.eta - a.eta).abs())
}

/// Linearized Poincaré map (normal Jacobi monodromy) of a periodic trace.
pub fn monodromy(profile: &MetricProfile, periodic: &GeodesicTrace, cfg: &FlowConfig) -> Result<Monodromy> {
    let residual = closure_residual(periodic);
    if !(residual <= cfg.closure_tol) {
        return Err(Error::NotPeriodic { residual });
    }
    let solver = cfg.solver::<8>();
    let sys = WithFundamental(profile);
    let mut fields = [1.0, 0.0, 0.0, 1.0];
    for w in periodic.samples.windows(2) {
        let g = w[0].state.to_array();
        let y0 = [g[0], g[1], g[2], g[3], fields[0], fields[1], fields[2], fields[3]];
        let (_, y1) = solver.run(&sys, y0, w[1].t - w[0].t, |_| Control::Continue)?;
        fields = [y1[4], y1[5], y1[6], y1[7]];
    }
    Ok(Monodromy { matrix: [[fields[0], fields[2]], [fields[1], fields[3]]] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn round() -> MetricProfile {
        MetricProfile::round(1.0, 2.0).unwrap()
    }

    fn cfg() -> FlowConfig {
        FlowConfig::default()
    }

    #[test]
    fn rhs_examples() {
        let flat = MetricProfile::flat();
        let s = PhaseState::new(CoverPoint::new(0.3, 0.1), 0.6, 0.8);
        assert_eq!(geodesic_rhs(&flat, &s), [0.6, 0.8, 0.0, 0.0]);
        let p = round();
        let eq = PhaseState::new(CoverPoint::new(0.2, 0.0), 1.0, 0.0);
        assert_eq!(geodesic_rhs(&p, &eq)[3], 0.0);
        let meridian = PhaseState::new(CoverPoint::new(0.2, 0.37), 0.0, 1.0);
        let d = geodesic_rhs(&p, &meridian);
        assert_eq!((d[2], d[3]), (0.0, 0.0));
    }

    #[test]
    fn quarter_turns_are_exact() {
        assert_eq!(cos_sin_turns(0.0), (1.0, 0.0));
        assert_eq!(cos_sin_turns(0.25), (0.0, 1.0));
        assert_eq!(cos_sin_turns(0.5), (-1.0, 0.0));
        assert_eq!(cos_sin_turns(0.75), (0.0, -1.0));
        let (c, s) = cos_sin_turns(0.1);
        assert_relative_eq!(c, libm::cos(0.2 * PI), epsilon = 1e-15);
        assert_relative_eq!(s, libm::sin(0.2 * PI), epsilon = 1e-15);
    }

    #[test]
    fn flat_straight_line() {
        let flat = MetricProfile::flat();
        let tr = integrate(&flat, PhaseState::new(CoverPoint::new(0.0, 0.0), 1.0, 0.0), 5.0, &cfg()).unwrap();
        assert_eq!(tr.length(), 5.0);
        assert_relative_eq!(tr.end().pos.x, 5.0, epsilon = 1e-12);
        assert_eq!(tr.end().pos.y, 0.0);
        assert!(tr.samples().windows(2).all(|w| w[1].t - w[0].t <= cfg().output_step + 1e-15));
    }

    #[test]
    fn inner_equator_closes_after_one_period() {
        let p = round();
        let start = PhaseState::from_angle(&p, CoverPoint::new(0.0, 0.0), 0.0);
        let tr = integrate(&p, start, 1.0, &cfg()).unwrap();
        assert_relative_eq!(tr.end().pos.x, 1.0, epsilon = 1e-12);
        assert_eq!(tr.end().pos.y, 0.0);
        assert!(closure_residual(&tr) < 1e-10);
    }

    #[test]
    fn crossing_the_equator_keeps_sign_of_eta() {
        let p = round();
        let start = PhaseState::from_angle(&p, CoverPoint::new(0.0, 0.0), 0.3);
        let tr = integrate(&p, start, 50.0, &cfg()).unwrap();
        assert!(tr.samples().iter().all(|s| s.state.eta > 0.0));
    }

    #[test]
    fn clairaut_examples() {
        let flat = MetricProfile::flat();
        assert_eq!(clairaut(&flat, &PhaseState::new(CoverPoint::new(0.4, 0.9), 0.6, 0.8)), 0.6);
        let p = round();
        let eq = PhaseState::new(CoverPoint::new(0.0, 0.0), 1.0 / p.value(0.0), 0.0);
        assert_eq!(clairaut(&p, &eq), 1.0);
    }

    #[test]
    fn reversal_returns_to_start() {
        let p = round();
        let start = PhaseState::from_angle(&p, CoverPoint::new(0.1, 0.3), 1.0);
        let fwd = integrate(&p, start, 7.0, &cfg()).unwrap();
        let back = integrate(&p, fwd.end().reversed(), 7.0, &cfg()).unwrap();
        assert!(back.end().pos.euclid(start.pos) < 1e-7);
    }

    #[test]
    fn state_at_matches_samples() {
        let p = round();
        let start = PhaseState::from_angle(&p, CoverPoint::new(0.1, 0.3), 1.0);
        let tr = integrate(&p, start, 3.0, &cfg()).unwrap();
        let s = tr.samples()[17];
        let q = state_at(&p, &tr, s.t, &cfg());
        assert!(q.pos.euclid(s.state.pos) < 1e-13);
    }

    #[test]
    fn flat_jacobi_is_linear() {
        let flat = MetricProfile::flat();
        let tr = integrate(&flat, PhaseState::new(CoverPoint::new(0.0, 0.0), 0.6, 0.8), 4.0, &cfg()).unwrap();
        let sol = jacobi(&flat, &tr, 0.0, 1.0, &cfg()).unwrap();
        assert!(sol.zeros.is_empty());
        for &(t, j, dj) in &sol.samples {
            assert_relative_eq!(j, t, epsilon = 1e-12);
            assert_relative_eq!(dj, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn outer_equator_has_conjugate_point() {
        let p = round();
        let start = PhaseState::from_angle(&p, CoverPoint::new(0.0, 0.5), 0.0);
        let tr = integrate(&p, start, 10.0, &cfg()).unwrap();
        let first = has_conjugate_points(&p, &tr, &cfg()).unwrap().unwrap();
        let k = 4.0 * PI * PI / 3.0;
        assert_relative_eq!(first, PI / sqrt(k), epsilon = 1e-9);
    }

    #[test]
    fn flat_monodromy_is_parabolic() {
        let flat = MetricProfile::flat();
        let tr = integrate(&flat, PhaseState::new(CoverPoint::new(0.0, 0.3), 1.0, 0.0), 1.0, &cfg()).unwrap();
        let m = monodromy(&flat, &tr, &cfg()).unwrap();
        assert_relative_eq!(m.matrix[0][0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(m.matrix[0][1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(m.matrix[1][0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(m.matrix[1][1], 1.0, epsilon = 1e-12);
        assert!(m.distance_from_one() < 1e-6);
    }

    #[test]
    fn monodromy_rejects_open_traces() {
        let p = round();
        let tr = integrate(&p, PhaseState::from_angle(&p, CoverPoint::new(0.0, 0.0), 0.0), 0.7, &cfg()).unwrap();
        assert!(matches!(monodromy(&p, &tr, &cfg()), Err(Error::NotPeriodic { .. })));
    }
}
