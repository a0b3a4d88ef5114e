//! Section crossings: scalar event functions located on the dense output.

use super::{DenseSegment, IntegratorConfig, StepOutcome, Stepper, Termination, Trajectory};
use crate::error::IntegratorError;
use crate::model::{CoefficientSet, StateVector};
use serde::{Deserialize, Serialize};

/// Required sign-change direction of the event function at a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingDirection {
    /// g passes from negative to positive.
    Increasing,
    /// g passes from positive to negative.
    Decreasing,
}

/// Built-in Poincare sections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SectionSpec {
    /// g = |x - center| - radius, crossed inward.
    EnterBall {
        center: StateVector,
        radius: f64,
    },
    /// g = sqrt(x3^2 + x4^2) - radius, crossed outward.
    RadiusInPlane { radius: f64 },
}

impl SectionSpec {
    pub fn id(&self) -> String {
        match self {
            SectionSpec::EnterBall { center, radius } => format!(
                "enter_ball(({}, {}, {}, {}), {})",
                center.x1, center.x2, center.x3, center.x4, radius
            ),
            SectionSpec::RadiusInPlane { radius } => format!("radius_in_plane({radius})"),
        }
    }

    pub fn direction(&self) -> CrossingDirection {
        match self {
            SectionSpec::EnterBall { .. } => CrossingDirection::Decreasing,
            SectionSpec::RadiusInPlane { .. } => CrossingDirection::Increasing,
        }
    }

    pub fn eval(&self, x: &StateVector) -> f64 {
        match self {
            SectionSpec::EnterBall { center, radius } => x.dist(center) - radius,
            SectionSpec::RadiusInPlane { radius } => x.radius34() - radius,
        }
    }

    /// Already past the section in the crossing direction.
    fn beyond(&self, g: f64) -> bool {
        match self.direction() {
            CrossingDirection::Increasing => g >= 0.0,
            CrossingDirection::Decreasing => g <= 0.0,
        }
    }
}

/// A located crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionEvent {
    pub time: f64,
    pub state: StateVector,
    /// +1 for an increasing crossing, -1 for a decreasing one.
    pub direction_sign: i8,
}

/// Either the first directed crossing, or the reason the run ended without
/// one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SectionOutcome {
    Event(SectionEvent),
    Timeout(Termination),
}

fn direction_sign(dir: CrossingDirection) -> i8 {
    match dir {
        CrossingDirection::Increasing => 1,
        CrossingDirection::Decreasing => -1,
    }
}

/// Number of interior dense-output probes per accepted step when scanning for
/// a sign change; guards against crossings that enter and leave within one
/// step.
const EVENT_PROBES: usize = 8;

/// Locate the first directed crossing of `section` inside an accepted step,
/// given the value `g_prev` at the step start. Bisects the dense output until
/// `|g| <= 1e-10 * (1 + |x|)`.
pub(crate) fn locate_crossing(
    section: &SectionSpec,
    dense: &DenseSegment,
    g_prev: f64,
) -> Option<SectionEvent> {
    let want_increasing = section.direction() == CrossingDirection::Increasing;
    let crossed = |a: f64, b: f64| {
        if want_increasing {
            a < 0.0 && b >= 0.0
        } else {
            a > 0.0 && b <= 0.0
        }
    };

    let mut lo_theta = 0.0;
    let mut g_lo = g_prev;
    let mut hit = None;
    for i in 1..=EVENT_PROBES {
        let theta = i as f64 / EVENT_PROBES as f64;
        let g = section.eval(&dense.eval_theta(theta));
        if crossed(g_lo, g) {
            hit = Some((lo_theta, theta));
            break;
        }
        lo_theta = theta;
        g_lo = g;
    }
    let (mut lo, mut hi) = hit?;

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let x = dense.eval_theta(mid);
        let g = section.eval(&x);
        if g.abs() <= 1e-10 * (1.0 + x.norm()) {
            return Some(SectionEvent {
                time: dense.t0 + mid * dense.h,
                state: x,
                direction_sign: direction_sign(section.direction()),
            });
        }
        let g_lo_now = section.eval(&dense.eval_theta(lo));
        if crossed(g_lo_now, g) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // interval exhausted to machine resolution; report the midpoint
    let mid = 0.5 * (lo + hi);
    let x = dense.eval_theta(mid);
    Some(SectionEvent {
        time: dense.t0 + mid * dense.h,
        state: x,
        direction_sign: direction_sign(section.direction()),
    })
}

/// Integrate until the first directed crossing of the section. A start point
/// already past the section in the crossing direction yields an event at
/// t = 0. Returns the trajectory up to the event (or the full run on
/// timeout).
pub fn integrate_to_section(
    coeffs: &CoefficientSet,
    x0: &StateVector,
    section: &SectionSpec,
    cfg: &IntegratorConfig,
) -> Result<(Trajectory, SectionOutcome), IntegratorError> {
    let mut stepper = Stepper::new(coeffs, *x0, 0.0, cfg)?;
    let mut times = vec![0.0];
    let mut states = vec![*x0];

    let g0 = section.eval(x0);
    if section.beyond(g0) {
        let event = SectionEvent {
            time: 0.0,
            state: *x0,
            direction_sign: direction_sign(section.direction()),
        };
        let traj = Trajectory {
            times,
            states,
            termination: Termination::EventHit,
            steps_accepted: 0,
            steps_rejected: 0,
        };
        return Ok((traj, SectionOutcome::Event(event)));
    }

    let mut g_prev = g0;
    loop {
        match stepper.advance() {
            StepOutcome::Accepted(rec) => {
                if let Some(event) = locate_crossing(section, &rec.dense, g_prev) {
                    times.push(event.time);
                    states.push(event.state);
                    let traj = Trajectory {
                        times,
                        states,
                        termination: Termination::EventHit,
                        steps_accepted: stepper.steps_accepted,
                        steps_rejected: stepper.steps_rejected,
                    };
                    return Ok((traj, SectionOutcome::Event(event)));
                }
                times.push(rec.t_new);
                states.push(rec.y_new);
                g_prev = section.eval(&rec.y_new);
            }
            StepOutcome::Finished(term) => {
                if stepper.t > *times.last().unwrap() {
                    times.push(stepper.t);
                    states.push(stepper.y);
                }
                let traj = Trajectory {
                    times,
                    states,
                    termination: term,
                    steps_accepted: stepper.steps_accepted,
                    steps_rejected: stepper.steps_rejected,
                };
                return Ok((traj, SectionOutcome::Timeout(term)));
            }
        }
    }
}
