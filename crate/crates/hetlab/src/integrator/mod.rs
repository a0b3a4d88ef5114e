//! Adaptive explicit Runge-Kutta integration of the vector field.
//!
//! The stepper is the classic Dormand-Prince 5(4) embedded pair with FSAL,
//! a PI step-size controller and the free 4th-order interpolant for dense
//! output. The field is a smooth polynomial and non-stiff at the scales of
//! interest, so an explicit pair is sufficient.

mod section;

pub use section::{
    integrate_to_section, CrossingDirection, SectionEvent, SectionOutcome, SectionSpec,
};
pub(crate) use section::locate_crossing;

use crate::error::IntegratorError;
use crate::model::{field, jacobian, CoefficientSet, StateVector};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Step-size and termination controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    /// Integration horizon (relative to the start time of the run).
    pub max_time: f64,
    pub max_steps: u64,
    /// Norm beyond which the trajectory is declared blown up.
    pub blowup_norm: f64,
    /// Field-norm threshold for equilibrium convergence.
    pub converge_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            initial_step: 1e-3,
            max_step: 1.0,
            max_time: 100.0,
            max_steps: 10_000_000,
            blowup_norm: 1e6,
            converge_tol: 1e-13,
        }
    }
}

impl IntegratorConfig {
    pub fn with_max_time(max_time: f64) -> Self {
        IntegratorConfig {
            max_time,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(IntegratorError::ConfigError(format!(
                "tolerances must be positive (rel_tol = {}, abs_tol = {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if !(self.initial_step > 0.0) || !(self.max_step > 0.0) {
            return Err(IntegratorError::ConfigError(
                "step sizes must be positive".into(),
            ));
        }
        if !(self.max_time > 0.0) || !self.max_time.is_finite() {
            return Err(IntegratorError::ConfigError(format!(
                "max_time = {} must be positive and finite",
                self.max_time
            )));
        }
        if self.max_steps == 0 {
            return Err(IntegratorError::ConfigError(
                "max_steps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    TimeLimit,
    StepLimit,
    EventHit,
    Blowup,
    ConvergedToPoint,
}

/// An accepted-step record of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub termination: Termination,
    pub steps_accepted: u64,
    pub steps_rejected: u64,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the start")
    }

    pub fn final_state(&self) -> StateVector {
        *self.states.last().expect("trajectory has at least the start")
    }

    /// CSV export: header `t,x1,x2,x3,x4`, one row per accepted step,
    /// 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x1,x2,x3,x4")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                t, s.x1, s.x2, s.x3, s.x4
            )?;
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error coefficients (5th order minus embedded 4th order)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense-output coefficients
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI controller constants (standard choices for this pair)
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Quartic interpolant over one accepted step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    r: [StateVector; 5],
}

impl DenseSegment {
    /// Evaluate at `theta` in [0, 1] across the step.
    pub fn eval_theta(&self, theta: f64) -> StateVector {
        let t1 = 1.0 - theta;
        self.r[0]
            + (self.r[1] + (self.r[2] + (self.r[3] + self.r[4] * t1) * theta) * t1) * theta
    }

}

/// One accepted step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepRecord {
    pub t_new: f64,
    pub y_new: StateVector,
    pub dense: DenseSegment,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum StepOutcome {
    Accepted(StepRecord),
    Finished(Termination),
}

/// The adaptive stepper. Drivers call [`Stepper::advance`] repeatedly; each
/// call yields one accepted step (with its interpolant) or the termination
/// reason.
pub(crate) struct Stepper {
    coeffs: CoefficientSet,
    cfg: IntegratorConfig,
    pub t: f64,
    pub y: StateVector,
    k1: StateVector,
    h: f64,
    t_end: f64,
    err_old: f64,
    pub steps_accepted: u64,
    pub steps_rejected: u64,
    quiet_streak: u32,
    quiet_anchor: StateVector,
}

impl Stepper {
    pub fn new(
        coeffs: &CoefficientSet,
        x0: StateVector,
        t0: f64,
        cfg: &IntegratorConfig,
    ) -> Result<Self, IntegratorError> {
        cfg.validate()?;
        coeffs.validate().map_err(IntegratorError::Model)?;
        if !x0.is_finite() {
            return Err(IntegratorError::Model(
                crate::error::ModelError::NonFiniteInput(format!("state {:?}", x0.as_array())),
            ));
        }
        let k1 = field(coeffs, &x0);
        Ok(Stepper {
            coeffs: *coeffs,
            cfg: *cfg,
            t: t0,
            y: x0,
            k1,
            h: cfg.initial_step.min(cfg.max_step),
            t_end: t0 + cfg.max_time,
            err_old: 1e-4,
            steps_accepted: 0,
            steps_rejected: 0,
            quiet_streak: 0,
            quiet_anchor: x0,
        })
    }

    /// Equilibrium check at the current point: either a genuine sink, or the
    /// state is numerically pinned (tiny field over several consecutive
    /// accepted steps with no displacement), which happens when a trajectory
    /// collapses onto an invariant subspace whose interior equilibrium is a
    /// full-space saddle.
    fn converged(&mut self) -> bool {
        let fnorm = self.k1.norm();
        if fnorm >= self.cfg.converge_tol {
            self.quiet_streak = 0;
            return false;
        }
        let j = jacobian(&self.coeffs, &self.y);
        let m = nalgebra::Matrix4::from_fn(|r, c| j[r][c]);
        if m.complex_eigenvalues().iter().all(|z| z.re < 0.0) {
            return true;
        }
        if self.quiet_streak == 0 {
            self.quiet_anchor = self.y;
        }
        self.quiet_streak += 1;
        self.quiet_streak >= 8 && self.y.dist(&self.quiet_anchor) < 1e3 * self.cfg.converge_tol
    }

    pub fn advance(&mut self) -> StepOutcome {
        if self.steps_accepted == 0 && self.converged() {
            return StepOutcome::Finished(Termination::ConvergedToPoint);
        }
        if self.t >= self.t_end {
            return StepOutcome::Finished(Termination::TimeLimit);
        }
        loop {
            if self.steps_accepted + self.steps_rejected >= self.cfg.max_steps {
                return StepOutcome::Finished(Termination::StepLimit);
            }
            let h = self.h.min(self.t_end - self.t).min(self.cfg.max_step);
            let c = &self.coeffs;
            let y = self.y;
            let k1 = self.k1;

            let k2 = field(c, &(y + k1 * (A21 * h)));
            let k3 = field(c, &(y + (k1 * A31 + k2 * A32) * h));
            let k4 = field(c, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * h));
            let k5 = field(c, &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h));
            let k6 = field(
                c,
                &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h),
            );
            let dy = (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * h;
            let y_new = y + dy;
            let k7 = field(c, &y_new);

            let err_vec =
                (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
            let scale = self.cfg.abs_tol + self.cfg.rel_tol * y.norm().max(y_new.norm());
            let err = err_vec.norm() / scale;

            if err.is_finite() && err <= 1.0 {
                // accept
                let t_new = self.t + h;
                let bspl = k1 * h - dy;
                let dense = DenseSegment {
                    t0: self.t,
                    h,
                    r: [
                        y,
                        dy,
                        bspl,
                        dy - k7 * h - bspl,
                        (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * h,
                    ],
                };
                self.steps_accepted += 1;

                // PI controller
                let err_bounded = err.max(1e-10);
                let fac = err_bounded.powf(EXPO1) / self.err_old.powf(BETA);
                let fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                self.h = (h / fac).min(self.cfg.max_step);
                self.err_old = err_bounded;

                self.t = t_new;
                self.y = y_new;
                self.k1 = k7;

                if !y_new.is_finite() || y_new.norm() > self.cfg.blowup_norm {
                    return StepOutcome::Finished(Termination::Blowup);
                }
                if self.converged() {
                    return StepOutcome::Finished(Termination::ConvergedToPoint);
                }
                return StepOutcome::Accepted(StepRecord { t_new, y_new, dense });
            }

            // reject and shrink
            self.steps_rejected += 1;
            if !err.is_finite() {
                self.h = h * FAC_MIN;
                if self.h < 1e-300 {
                    return StepOutcome::Finished(Termination::Blowup);
                }
                continue;
            }
            let fac = (err.powf(EXPO1) / SAFETY).min(1.0 / FAC_MIN);
            self.h = h / fac;
        }
    }
}

/// Integrate from `x0` until the configured horizon, step budget, blowup or
/// equilibrium convergence, recording every accepted step.
pub fn integrate(
    coeffs: &CoefficientSet,
    x0: &StateVector,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegratorError> {
    let mut stepper = Stepper::new(coeffs, *x0, 0.0, cfg)?;
    let mut times = vec![0.0];
    let mut states = vec![*x0];
    let termination = loop {
        match stepper.advance() {
            StepOutcome::Accepted(rec) => {
                times.push(rec.t_new);
                states.push(rec.y_new);
            }
            StepOutcome::Finished(term) => {
                if stepper.t > *times.last().unwrap() {
                    times.push(stepper.t);
                    states.push(stepper.y);
                }
                break term;
            }
        }
    };
    Ok(Trajectory {
        times,
        states,
        termination,
        steps_accepted: stepper.steps_accepted,
        steps_rejected: stepper.steps_rejected,
    })
}

/// Fixed-step fifth-order integration (no error control). Used by the order
/// studies; the step count is `ceil(t_end / h)` with the last step clipped.
pub fn integrate_fixed_step(
    coeffs: &CoefficientSet,
    x0: &StateVector,
    h: f64,
    t_end: f64,
) -> Result<StateVector, IntegratorError> {
    coeffs.validate().map_err(IntegratorError::Model)?;
    if !(h > 0.0) || !(t_end > 0.0) {
        return Err(IntegratorError::ConfigError(
            "fixed step and horizon must be positive".into(),
        ));
    }
    let mut t = 0.0;
    let mut y = *x0;
    let mut k1 = field(coeffs, &y);
    while t < t_end {
        let step = h.min(t_end - t);
        let k2 = field(coeffs, &(y + k1 * (A21 * step)));
        let k3 = field(coeffs, &(y + (k1 * A31 + k2 * A32) * step));
        let k4 = field(coeffs, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * step));
        let k5 = field(
            coeffs,
            &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * step),
        );
        let k6 = field(
            coeffs,
            &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * step),
        );
        y += (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * step;
        t += step;
        k1 = field(coeffs, &y);
    }
    Ok(y)
}
