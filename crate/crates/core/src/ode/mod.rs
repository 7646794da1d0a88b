//! Adaptive explicit Runge–Kutta integration (Dormand–Prince 8(5,3)).
//!
//! Autonomous systems only; the independent variable always starts at 0 and
//! increases. Accepted steps are reported to a callback, and any point inside
//! an accepted step can be recomputed with [`Dop853::substep`], which is how
//! events are located without a dense-output interpolant.

mod tableau;

use libm::{pow, sqrt};

use crate::{Error, Result};
use tableau::{A, B, E3, E5, STAGES};

/// Right-hand side of an autonomous system `y' = F(y)`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, y: &[f64; N]) -> [f64; N];

    /// Projects an accepted state back onto an invariant manifold.
    /// Returns `true` when `y` was modified.
    fn project(&self, _y: &mut [f64; N]) -> bool {
        false
    }
}

/// One accepted step from `t` to `t + h`.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub t: f64,
    pub h: f64,
    pub start: [f64; N],
    pub end: [f64; N],
}

/// What the step callback wants the driver to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy)]
pub struct Dop853<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
    pub max_step: f64,
    pub min_step: f64,
    pub initial_step: f64,
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

impl<const N: usize> Dop853<N> {
    pub fn new(rtol: f64, atol: f64, max_step: f64) -> Self {
        Dop853 { rtol, atol: [atol; N], max_step, min_step: 1e-14, initial_step: 1e-2 }
    }

    fn stages<S: OdeSystem<N>>(&self, sys: &S, y: &[f64; N], f0: &[f64; N], h: f64) -> ([[f64; N]; STAGES], [f64; N]) {
        let mut k = [[0.0; N]; STAGES];
        k[0] = *f0;
        for s in 1..STAGES {
            let mut ys = *y;
            for (i, yi) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                *yi += h * acc;
            }
            k[s] = sys.rhs(&ys);
        }
        let mut y_new = *y;
        for (i, yi) in y_new.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                acc += B[j] * kj[i];
            }
            *yi += h * acc;
        }
        (k, y_new)
    }

    /// Single step of size `h` without error control.
    pub fn substep<S: OdeSystem<N>>(&self, sys: &S, y: &[f64; N], h: f64) -> [f64; N] {
        if h == 0.0 {
            return *y;
        }
        let f0 = sys.rhs(y);
        let (_, mut y_new) = self.stages(sys, y, &f0, h);
        sys.project(&mut y_new);
        y_new
    }

    fn error_norm(&self, k: &[[f64; N]; STAGES], f_new: &[f64; N], y: &[f64; N], y_new: &[f64; N], h: f64) -> f64 {
        let mut e5 = 0.0;
        let mut e3 = 0.0;
        for i in 0..N {
            let mut scale = self.atol[i] + self.rtol * y[i].abs().max(y_new[i].abs());
            if scale == 0.0 {
                scale = f64::MIN_POSITIVE;
            }
            let mut a5 = E5[STAGES] * f_new[i];
            let mut a3 = E3[STAGES] * f_new[i];
            for j in 0..STAGES {
                a5 += E5[j] * k[j][i];
                a3 += E3[j] * k[j][i];
            }
            e5 += (a5 / scale) * (a5 / scale);
            e3 += (a3 / scale) * (a3 / scale);
        }
        if e5 == 0.0 && e3 == 0.0 {
            return 0.0;
        }
        h.abs() * e5 / sqrt((e5 + 0.01 * e3) * N as f64)
    }

    /// Integrates from `y0` over `[0, t_end]`, reporting each accepted step.
    ///
    /// Returns the final `(t, y)`; `t < t_end` when the callback stopped early.
    pub fn run<S, F>(&self, sys: &S, y0: [f64; N], t_end: f64, mut on_step: F) -> Result<(f64, [f64; N])>
    where
        S: OdeSystem<N>,
        F: FnMut(&Step<N>) -> Control,
    {
        let mut y = y0;
        sys.project(&mut y);
        let mut t = 0.0;
        let mut f = sys.rhs(&y);
        let mut h = self.initial_step.min(self.max_step);
        while t < t_end {
            let remaining = t_end - t;
            let mut last = false;
            if h >= remaining || remaining - h < 1e-12 * t_end.max(1.0) {
                h = remaining;
                last = true;
            }
            let (k, y_new) = self.stages(sys, &y, &f, h);
            let f_new = sys.rhs(&y_new);
            let err = self.error_norm(&k, &f_new, &y, &y_new, h);
            if err <= 1.0 {
                let mut y_acc = y_new;
                let moved = sys.project(&mut y_acc);
                let t_new = if last { t_end } else { t + h };
                let step = Step { t, h: t_new - t, start: y, end: y_acc };
                t = t_new;
                y = y_acc;
                f = if moved { sys.rhs(&y) } else { f_new };
                if on_step(&step) == Control::Stop {
                    break;
                }
                let factor = if err == 0.0 { MAX_FACTOR } else { (SAFETY * pow(err, -1.0 / 8.0)).min(MAX_FACTOR) };
                h = (h * factor).min(self.max_step);
            } else {
                h *= (SAFETY * pow(err, -1.0 / 8.0)).max(MIN_FACTOR);
                if h < self.min_step {
                    return Err(Error::StepFailure { t });
                }
            }
        }
        Ok((t, y))
    }
}

/// Locates a sign change of `g` inside an accepted step by bisection on
/// substeps from the step start. Returns `(tau, state)` with `tau ∈ [0, h]`.
pub fn bisect_in_step<const N: usize, S, G>(
    solver: &Dop853<N>,
    sys: &S,
    step: &Step<N>,
    g: G,
    t_tol: f64,
) -> (f64, [f64; N])
where
    S: OdeSystem<N>,
    G: Fn(&[f64; N]) -> f64,
{
    let g0 = g(&step.start) > 0.0;
    let mut lo = 0.0;
    let mut hi = step.h;
    for _ in 0..60 {
        if hi - lo <= t_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let s = solver.substep(sys, &step.start, mid);
        if (g(&s) > 0.0) == g0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    (tau, solver.substep(sys, &step.start, tau))
}

#[cfg(test)]
mod tests {
    use super::tableau::C;
    use super::*;
    use approx::assert_relative_eq;

    struct Harmonic;
    impl OdeSystem<2> for Harmonic {
        fn rhs(&self, y: &[f64; 2]) -> [f64; 2] {
            [y[1], -y[0]]
        }
    }

    struct Decay;
    impl OdeSystem<1> for Decay {
        fn rhs(&self, y: &[f64; 1]) -> [f64; 1] {
            [-y[0]]
        }
    }

    #[test]
    fn tableau_is_consistent() {
        for s in 0..STAGES {
            let row: f64 = A[s].iter().sum();
            assert!((row - C[s]).abs() < 1e-14, "row {s}");
        }
        assert!((B.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // Error estimators annihilate constants.
        assert!(E5.iter().sum::<f64>().abs() < 1e-14);
        assert!(E3.iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn harmonic_oscillator_to_tight_tolerance() {
        let solver = Dop853::<2>::new(1e-12, 1e-12, 0.5);
        let (t, y) = solver.run(&Harmonic, [1.0, 0.0], 20.0, |_| Control::Continue).unwrap();
        assert_eq!(t, 20.0);
        assert_relative_eq!(y[0], libm::cos(20.0), epsilon = 1e-10);
        assert_relative_eq!(y[1], -libm::sin(20.0), epsilon = 1e-10);
    }

    #[test]
    fn eighth_order_convergence_of_substep() {
        let solver = Dop853::<1>::new(1e-12, 1e-12, 1.0);
        let err = |h: f64| (solver.substep(&Decay, &[1.0], h)[0] - libm::exp(-h)).abs();
        // Local error is O(h⁹).
        let ratio = err(0.4) / err(0.2);
        assert!(ratio > 2f64.powi(8), "ratio {ratio}");
    }

    #[test]
    fn stop_and_bisect() {
        let solver = Dop853::<2>::new(1e-12, 1e-12, 0.3);
        let mut hit = None;
        solver
            .run(&Harmonic, [1.0, 0.0], 10.0, |step| {
                if step.start[0] > 0.0 && step.end[0] <= 0.0 {
                    let (tau, _) = bisect_in_step(&solver, &Harmonic, step, |y| y[0], 1e-13);
                    hit = Some(step.t + tau);
                    Control::Stop
                } else {
                    Control::Continue
                }
            })
            .unwrap();
        assert_relative_eq!(hit.unwrap(), core::f64::consts::FRAC_PI_2, epsilon = 1e-11);
    }
}
