//! Loop-by-loop classification of a trajectory near the two competing
//! subcycles.
//!
//! A loop is delimited by three Poincare sections visited in order: entry
//! into a ball around `xi_b`, outward crossing of the cylinder
//! `sqrt(x3^2 + x4^2) = h` (where the exit angle `phi = atan2(|x4|, |x3|)` is
//! recorded), and entry into a ball around `xi_a`. An exit angle near 0 means
//! the trajectory hugs the P13 branch of the 2-dimensional connection, near
//! pi/2 the P14 branch.

use crate::analysis::compute_equilibria;
use crate::integrator::{
    CrossingDirection, IntegratorConfig, SectionSpec, StepOutcome, Stepper, Termination,
};
use crate::model::{CoefficientSet, StateVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Verdict for one initial condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    AttractedP13,
    AttractedP14,
    OtherAttractor,
    Escaped,
    Undecided,
}

impl Outcome {
    pub const ALL: [Outcome; 5] = [
        Outcome::AttractedP13,
        Outcome::AttractedP14,
        Outcome::OtherAttractor,
        Outcome::Escaped,
        Outcome::Undecided,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Outcome::AttractedP13 => "attracted_p13",
            Outcome::AttractedP14 => "attracted_p14",
            Outcome::OtherAttractor => "other_attractor",
            Outcome::Escaped => "escaped",
            Outcome::Undecided => "undecided",
        }
    }
}

/// One completed loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub index: usize,
    /// Exit angle at the cylinder section, in [0, pi/2].
    pub phi: f64,
    /// Closest approach to xi_a since the previous loop closed.
    pub min_dist_a: f64,
    /// Closest approach to xi_b since the previous loop closed.
    pub min_dist_b: f64,
    pub duration: f64,
}

/// Section radii and decision thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyParams {
    pub r_a: f64,
    pub r_b: f64,
    /// Radius of the cylinder section where the exit angle is measured.
    pub section_radius: f64,
    /// Angular margin for calling an exit angle 0 or pi/2.
    pub phi_tol: f64,
    /// Leg budget before any loop has completed; afterwards a leg gets ten
    /// median loop durations.
    pub initial_leg_tmax: f64,
    /// Overall time budget per initial condition.
    pub total_tmax: f64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams {
            r_a: 0.1,
            r_b: 0.1,
            section_radius: 0.5,
            phi_tol: 0.01,
            initial_leg_tmax: 300.0,
            total_tmax: 20_000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    WaitB,
    WaitPhi,
    WaitA,
}

enum LegEnd {
    Hit {
        time: f64,
        state: StateVector,
    },
    Ended {
        term: Termination,
        state: StateVector,
    },
}

/// Integrate one leg, tracking the closest approaches to the two equilibria
/// on dense-output samples.
#[allow(clippy::too_many_arguments)]
fn run_leg(
    coeffs: &CoefficientSet,
    x: StateVector,
    t0: f64,
    section: &SectionSpec,
    leg_tmax: f64,
    base_cfg: &IntegratorConfig,
    xi_a: &StateVector,
    xi_b: &StateVector,
    min_a: &mut f64,
    min_b: &mut f64,
) -> LegEnd {
    let g0 = section.eval(&x);
    let beyond = match section.direction() {
        CrossingDirection::Increasing => g0 >= 0.0,
        CrossingDirection::Decreasing => g0 <= 0.0,
    };
    if beyond {
        return LegEnd::Hit { time: t0, state: x };
    }
    let cfg = IntegratorConfig {
        max_time: leg_tmax,
        ..*base_cfg
    };
    let mut stepper = match Stepper::new(coeffs, x, t0, &cfg) {
        Ok(s) => s,
        Err(_) => {
            return LegEnd::Ended {
                term: Termination::StepLimit,
                state: x,
            }
        }
    };
    let mut g_prev = g0;
    loop {
        match stepper.advance() {
            StepOutcome::Accepted(rec) => {
                for i in 1..=8 {
                    let s = rec.dense.eval_theta(i as f64 / 8.0);
                    *min_a = min_a.min(s.dist(xi_a));
                    *min_b = min_b.min(s.dist(xi_b));
                }
                if let Some(ev) = crate::integrator::locate_crossing(section, &rec.dense, g_prev)
                {
                    return LegEnd::Hit {
                        time: ev.time,
                        state: ev.state,
                    };
                }
                g_prev = section.eval(&rec.y_new);
            }
            StepOutcome::Finished(term) => {
                return LegEnd::Ended {
                    term,
                    state: stepper.y,
                }
            }
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// Classify one initial condition by marching it around the cycle sections
/// until a verdict fires or the budgets run out.
pub fn classify_trajectory(
    coeffs: &CoefficientSet,
    x0: &StateVector,
    loops_max: usize,
    params: &ClassifyParams,
    cfg: &IntegratorConfig,
) -> (Outcome, Vec<LoopRecord>) {
    let Ok((a, b)) = compute_equilibria(coeffs) else {
        return (Outcome::Undecided, Vec::new());
    };
    let xi_a = a.state();
    let xi_b = b.state();

    let mut records: Vec<LoopRecord> = Vec::new();
    let mut stage = Stage::WaitB;
    let mut x = *x0;
    let mut t = 0.0;
    let mut loop_start = 0.0;
    let mut cur_phi = f64::NAN;
    let mut min_a = f64::INFINITY;
    let mut min_b = f64::INFINITY;

    loop {
        if t >= params.total_tmax {
            return (Outcome::Undecided, records);
        }
        let section = match stage {
            Stage::WaitB => SectionSpec::EnterBall {
                center: xi_b,
                radius: params.r_b,
            },
            Stage::WaitPhi => SectionSpec::RadiusInPlane {
                radius: params.section_radius,
            },
            Stage::WaitA => SectionSpec::EnterBall {
                center: xi_a,
                radius: params.r_a,
            },
        };
        let leg_tmax = if records.is_empty() {
            params.initial_leg_tmax
        } else {
            10.0 * median(records.iter().map(|r| r.duration).collect())
        }
        .min(params.total_tmax - t);

        match run_leg(
            coeffs, x, t, &section, leg_tmax, cfg, &xi_a, &xi_b, &mut min_a, &mut min_b,
        ) {
            LegEnd::Hit { time, state } => {
                t = time;
                x = state;
                match stage {
                    Stage::WaitB => stage = Stage::WaitPhi,
                    Stage::WaitPhi => {
                        cur_phi = x.x4.abs().atan2(x.x3.abs());
                        stage = Stage::WaitA;
                    }
                    Stage::WaitA => {
                        records.push(LoopRecord {
                            index: records.len(),
                            phi: cur_phi,
                            min_dist_a: min_a.min(x.dist(&xi_a)),
                            min_dist_b: min_b,
                            duration: t - loop_start,
                        });
                        loop_start = t;
                        min_a = f64::INFINITY;
                        min_b = f64::INFINITY;
                        stage = Stage::WaitB;

                        if records.len() >= 3 {
                            let last = &records[records.len() - 3..];
                            let da: Vec<f64> = last.iter().map(|r| r.min_dist_a).collect();
                            let db: Vec<f64> = last.iter().map(|r| r.min_dist_b).collect();
                            let shrinking = strictly_decreasing(&da) && strictly_decreasing(&db);
                            if shrinking && last.iter().all(|r| r.phi < params.phi_tol) {
                                return (Outcome::AttractedP13, records);
                            }
                            if shrinking
                                && last.iter().all(|r| r.phi > FRAC_PI_2 - params.phi_tol)
                            {
                                return (Outcome::AttractedP14, records);
                            }
                        }
                        if records.len() >= loops_max {
                            return (Outcome::Undecided, records);
                        }
                    }
                }
            }
            LegEnd::Ended { term, state } => {
                let outcome = match term {
                    Termination::Blowup => Outcome::Escaped,
                    Termination::ConvergedToPoint => {
                        let near_cycle = state.dist(&xi_a).min(state.dist(&xi_b))
                            <= params.r_a.max(params.r_b);
                        if near_cycle {
                            // converged onto a cycle equilibrium along an
                            // invariant subspace
                            Outcome::Undecided
                        } else {
                            Outcome::OtherAttractor
                        }
                    }
                    // no section hit within the budget while staying bounded:
                    // a bounded limit set away from the cycle
                    Termination::TimeLimit => Outcome::OtherAttractor,
                    _ => Outcome::Undecided,
                };
                return (outcome, records);
            }
        }
    }
}
