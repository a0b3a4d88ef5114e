//! Shooting, trajectory classification, Monte Carlo basin estimation,
//! stability-index estimation and the end-to-end adjudication pipeline.

mod adjudicate;
mod basin;
mod classify;
mod index;

pub use adjudicate::{
    adjudicate, AdjudicationBudget, AdjudicationReport, AttractionVerdict, ConnectionSummary,
};
pub use basin::{basin_fraction, wilson_interval, BasinReport, CycleId, SampleRecord, TubeParams};
pub use classify::{classify_trajectory, ClassifyParams, LoopRecord, Outcome};
pub use index::{default_ladder, stability_index_estimate, IndexEstimate, IndexTarget, IndexVerdict};

use crate::analysis::{compute_equilibria, EquilibriumLabel, EquilibriumRecord};
use crate::error::ExperimentError;
use crate::integrator::{integrate_to_section, IntegratorConfig, SectionOutcome, SectionSpec};
use crate::model::{subspace_distance, CoefficientSet, StateVector, SubspaceId};
use serde::{Deserialize, Serialize};

/// A shooting run along an unstable eigendirection inside an invariant
/// carrier subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionRecord {
    pub from: EquilibriumLabel,
    pub to: EquilibriumLabel,
    pub carrier: SubspaceId,
    pub offset: f64,
    pub verified: bool,
    pub terminal_distance: f64,
    pub transit_time: f64,
    /// Largest distance to the carrier subspace along the run.
    pub max_carrier_drift: f64,
    /// Accepted-step polyline of the run; used to build sampling tubes.
    #[serde(skip)]
    pub path: Vec<StateVector>,
}

fn equilibrium(
    records: &(EquilibriumRecord, EquilibriumRecord),
    label: EquilibriumLabel,
) -> EquilibriumRecord {
    match label {
        EquilibriumLabel::XiA => records.0,
        EquilibriumLabel::XiB => records.1,
    }
}

/// Axis index (into the state) of the unstable eigendirection of `from`
/// inside the carrier, together with the eigenvalue. The Jacobian is diagonal
/// on the axis, so the eigenvectors are the coordinate axes.
fn shoot_axis(carrier: SubspaceId, from: EquilibriumLabel) -> Option<usize> {
    match (carrier, from) {
        (SubspaceId::P12, EquilibriumLabel::XiA) => Some(1),
        (SubspaceId::P13, EquilibriumLabel::XiB) => Some(2),
        (SubspaceId::P14, EquilibriumLabel::XiB) => Some(3),
        _ => None,
    }
}

/// Default integration horizon for shooting runs; the slowest reference
/// transit (the P13 branch, contraction rate ~0.12) needs a few hundred time
/// units to reach the target ball.
pub const CONNECTION_TMAX: f64 = 500.0;

/// Radius of the target ball that declares a connection verified.
pub const CONNECTION_TARGET_RADIUS: f64 = 1e-7;

/// Follow the unstable eigendirection of `from` within `carrier` until the
/// trajectory enters a tight ball around `to`.
pub fn verify_connection(
    coeffs: &CoefficientSet,
    from: EquilibriumLabel,
    to: EquilibriumLabel,
    carrier: SubspaceId,
    offset: f64,
) -> Result<ConnectionRecord, ExperimentError> {
    if !(offset > 0.0) {
        return Err(ExperimentError::PreconditionViolated(format!(
            "offset = {offset} must be positive"
        )));
    }
    let records = compute_equilibria(coeffs)?;
    let from_rec = equilibrium(&records, from);
    let to_rec = equilibrium(&records, to);

    let axis = shoot_axis(carrier, from).ok_or_else(|| {
        ExperimentError::PreconditionViolated(format!(
            "no unstable eigendirection of {from:?} inside {carrier:?}"
        ))
    })?;
    let eigenvalue = from_rec.eigenvalues[axis];
    if eigenvalue <= 0.0 {
        return Err(ExperimentError::NoUnstableDirection { eigenvalue });
    }

    let mut start = from_rec.state().as_array();
    start[axis] += offset;
    let x0 = StateVector::from_array(start);

    let section = SectionSpec::EnterBall {
        center: to_rec.state(),
        radius: CONNECTION_TARGET_RADIUS,
    };
    let cfg = IntegratorConfig::with_max_time(CONNECTION_TMAX);
    let (traj, out) = integrate_to_section(coeffs, &x0, &section, &cfg)?;

    let max_carrier_drift = traj
        .states
        .iter()
        .map(|s| subspace_distance(carrier, s))
        .fold(0.0_f64, f64::max);

    let (verified, terminal_distance, transit_time) = match out {
        SectionOutcome::Event(e) => (true, e.state.dist(&to_rec.state()), e.time),
        SectionOutcome::Timeout(_) => (
            false,
            traj.final_state().dist(&to_rec.state()),
            traj.final_time(),
        ),
    };

    Ok(ConnectionRecord {
        from,
        to,
        carrier,
        offset,
        verified: verified && terminal_distance <= 1e-6,
        terminal_distance,
        transit_time,
        max_carrier_drift,
        path: traj.states,
    })
}

/// Convenience wrapper: the three connections of the two competing cycles.
pub fn verify_cycle_connections(
    coeffs: &CoefficientSet,
    offset: f64,
) -> Result<[ConnectionRecord; 3], ExperimentError> {
    Ok([
        verify_connection(
            coeffs,
            EquilibriumLabel::XiA,
            EquilibriumLabel::XiB,
            SubspaceId::P12,
            offset,
        )?,
        verify_connection(
            coeffs,
            EquilibriumLabel::XiB,
            EquilibriumLabel::XiA,
            SubspaceId::P13,
            offset,
        )?,
        verify_connection(
            coeffs,
            EquilibriumLabel::XiB,
            EquilibriumLabel::XiA,
            SubspaceId::P14,
            offset,
        )?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_connections_verify() {
        let c = CoefficientSet::reference();
        let [cab, cba13, cba14] = verify_cycle_connections(&c, 1e-5).unwrap();
        for (rec, name) in [(&cab, "C_ab"), (&cba13, "C_ba|P13"), (&cba14, "C_ba|P14")] {
            assert!(rec.verified, "{name} unverified: {rec:?}");
            assert!(
                rec.terminal_distance <= 1e-6,
                "{name} terminal distance {}",
                rec.terminal_distance
            );
            assert!(
                rec.max_carrier_drift <= 1e-9,
                "{name} drift {}",
                rec.max_carrier_drift
            );
            assert!(rec.path.len() > 10);
        }
        assert!(cab.transit_time < 60.0);
        assert!(cba13.transit_time < 250.0);
        assert!(cba14.transit_time < 120.0);
    }

    #[test]
    fn missing_unstable_direction_is_reported() {
        let c = CoefficientSet::reference();
        // xi_a has no expanding direction inside P13
        let res = verify_connection(
            &c,
            EquilibriumLabel::XiA,
            EquilibriumLabel::XiB,
            SubspaceId::P13,
            1e-5,
        );
        assert!(matches!(
            res,
            Err(ExperimentError::PreconditionViolated(_))
        ));
        // a set where lambda2(xi_a) is negative: shooting in P12 impossible
        let mut flipped = c;
        flipped.d2 = 4.0; // lambda2(xi_a) = 1 + x^2 + 4x < 0 at x_a
        let res = verify_connection(
            &flipped,
            EquilibriumLabel::XiA,
            EquilibriumLabel::XiB,
            SubspaceId::P12,
            1e-5,
        );
        assert!(matches!(res, Err(ExperimentError::NoUnstableDirection { .. })));
    }
}
