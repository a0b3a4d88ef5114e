//! End-to-end adjudication: run every analytic checker, verify the three
//! connections, measure both basins, and reconcile the printed claims with
//! the eigenvalue-based ones and with the simulation.

use super::basin::{basin_fraction, BasinReport, CycleId, TubeParams};
use super::{verify_connection, ConnectionRecord};
use crate::analysis::{
    check_construction, check_hypotheses, check_table1, finalize_hc, ConditionReport,
    ConstructionReport, EquilibriumLabel, HypothesesReport, PrincipalPlane, Table1Report,
};
use crate::integrator::IntegratorConfig;
use crate::model::{CoefficientSet, SubspaceId};
use serde::{Deserialize, Serialize};

/// Budgets for the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjudicationBudget {
    /// Tube radii; the two smallest are measured for both cycles.
    pub eps_levels: Vec<f64>,
    pub samples_per_eps: u64,
    pub seed: u64,
    pub skip_basin: bool,
    pub shoot_offset: f64,
    pub tube: TubeParams,
    pub integrator: IntegratorConfig,
}

impl Default for AdjudicationBudget {
    fn default() -> Self {
        AdjudicationBudget {
            eps_levels: vec![1e-2, 1e-3],
            samples_per_eps: 1000,
            seed: 1,
            skip_basin: false,
            shoot_offset: 1e-5,
            tube: TubeParams::default(),
            integrator: IntegratorConfig::default(),
        }
    }
}

/// Scalar summary of a shooting run (the polyline stays in memory only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSummary {
    pub name: String,
    pub verified: bool,
    pub terminal_distance: f64,
    pub transit_time: f64,
    pub max_carrier_drift: f64,
    pub error: Option<String>,
}

impl ConnectionSummary {
    fn from_result(name: &str, res: &Result<ConnectionRecord, crate::error::ExperimentError>) -> Self {
        match res {
            Ok(rec) => ConnectionSummary {
                name: name.to_string(),
                verified: rec.verified,
                terminal_distance: rec.terminal_distance,
                transit_time: rec.transit_time,
                max_carrier_drift: rec.max_carrier_drift,
                error: None,
            },
            Err(e) => ConnectionSummary {
                name: name.to_string(),
                verified: false,
                terminal_distance: f64::NAN,
                transit_time: f64::NAN,
                max_carrier_drift: f64::NAN,
                error: Some(e.to_string()),
            },
        }
    }
}

/// What the measured basins say.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttractionVerdict {
    P13,
    P14,
    Both,
    Neither,
    Ambiguous,
    Skipped,
}

/// The end-to-end verdict with every sub-report attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjudicationReport {
    pub conditions: ConditionReport,
    pub construction: ConstructionReport,
    pub connections: Vec<ConnectionSummary>,
    pub principal_plane: Option<PrincipalPlane>,
    pub delta_product_sign: Option<i8>,
    /// Reading of the external stability criterion: positive delta predicts
    /// the P14 cycle attracts, negative the P13 cycle.
    pub predicted_attracting_cycle: Option<CycleId>,
    pub basin_reports: Vec<BasinReport>,
    pub simulated_attracting_cycle: AttractionVerdict,
    pub printed_vs_direct_condition3_agree: Option<bool>,
    pub prediction_vs_simulation_agree: Option<bool>,
    pub simulated_attractor_is_principal: Option<bool>,
    pub anomalies: Vec<String>,
    pub skipped: Vec<String>,
}

/// A cycle counts as attracting when the lower confidence bound of its own
/// tube fraction clears this floor; neither attracts when both upper bounds
/// stay below it.
const ATTRACTION_FLOOR: f64 = 0.01;

fn basin_verdict(reports: &[BasinReport]) -> AttractionVerdict {
    let smallest_eps = reports
        .iter()
        .map(|r| r.eps)
        .fold(f64::INFINITY, f64::min);
    let mut attracting = Vec::new();
    let mut all_below = true;
    for rep in reports.iter().filter(|r| r.eps == smallest_eps) {
        let (_, (lo, hi)) = rep.own_fraction();
        if lo > ATTRACTION_FLOOR {
            attracting.push(rep.cycle);
        }
        if hi >= ATTRACTION_FLOOR {
            all_below = false;
        }
    }
    match attracting.as_slice() {
        [] if all_below => AttractionVerdict::Neither,
        [] => AttractionVerdict::Ambiguous,
        [CycleId::P13Cycle] => AttractionVerdict::P13,
        [CycleId::P14Cycle] => AttractionVerdict::P14,
        _ => AttractionVerdict::Both,
    }
}

/// Run the whole pipeline. Partial failures never abort: they are recorded in
/// the report's `skipped` and `anomalies` lists.
pub fn adjudicate(coeffs: &CoefficientSet, budget: &AdjudicationBudget) -> AdjudicationReport {
    let table1: Table1Report = check_table1(coeffs);
    let construction = check_construction(coeffs);
    let hypotheses: Option<HypothesesReport> = check_hypotheses(coeffs).ok();

    let mut anomalies = Vec::new();
    let mut skipped = Vec::new();

    let equilibria_ok = construction.equilibria.is_some();
    let mut connections = Vec::new();
    let mut cab_ok = false;
    let mut cba13_ok = false;
    let mut cba14_ok = false;
    if equilibria_ok {
        let cab = verify_connection(
            coeffs,
            EquilibriumLabel::XiA,
            EquilibriumLabel::XiB,
            SubspaceId::P12,
            budget.shoot_offset,
        );
        let cba13 = verify_connection(
            coeffs,
            EquilibriumLabel::XiB,
            EquilibriumLabel::XiA,
            SubspaceId::P13,
            budget.shoot_offset,
        );
        let cba14 = verify_connection(
            coeffs,
            EquilibriumLabel::XiB,
            EquilibriumLabel::XiA,
            SubspaceId::P14,
            budget.shoot_offset,
        );
        cab_ok = cab.as_ref().map(|r| r.verified).unwrap_or(false);
        cba13_ok = cba13.as_ref().map(|r| r.verified).unwrap_or(false);
        cba14_ok = cba14.as_ref().map(|r| r.verified).unwrap_or(false);
        connections.push(ConnectionSummary::from_result("C_ab|P12", &cab));
        connections.push(ConnectionSummary::from_result("C_ba|P13", &cba13));
        connections.push(ConnectionSummary::from_result("C_ba|P14", &cba14));
    } else {
        skipped.push("connections: no axis equilibria".into());
    }

    let mut hypotheses = hypotheses;
    if let Some(h) = hypotheses.as_mut() {
        finalize_hc(
            h,
            construction.sign_patterns_hold(),
            cab_ok,
            cba13_ok,
            cba14_ok,
        );
    }

    // discrepancy (a): printed row C17 against the direct hypothesis
    let printed_vs_direct = hypotheses.as_ref().map(|h| {
        let printed_pass = table1.row("C17").and_then(|r| r.pass) == Some(true);
        let agree = printed_pass == h.h3_direct.pass;
        if !agree {
            anomalies.push(format!(
                "printed condition C17 {} while the direct eigenvalue form {} \
                 (weakest-contraction product {} vs strongest-expansion product {})",
                if printed_pass { "passes" } else { "fails" },
                if h.h3_direct.pass { "passes" } else { "fails" },
                h.h3_direct.weakest_contraction_product,
                h.h3_direct.strongest_expansion_product
            ));
        }
        agree
    });

    // discrepancy (b): principal plane against the printed claim
    if let Some(plane) = construction.principal_plane {
        if plane != PrincipalPlane::P13 {
            anomalies.push(format!(
                "principal plane determined directly as {plane:?}, not P13 as printed"
            ));
        }
    }

    let delta_sign = hypotheses.as_ref().map(|h| {
        if h.delta_product > 0.0 {
            1
        } else if h.delta_product < 0.0 {
            -1
        } else {
            0
        }
    });
    let predicted = match delta_sign {
        Some(1) => Some(CycleId::P14Cycle),
        Some(-1) => Some(CycleId::P13Cycle),
        _ => None,
    };

    // basins for both cycles at the two smallest radii
    let mut basin_reports = Vec::new();
    let simulated = if budget.skip_basin {
        skipped.push("basin measurements: disabled by budget".into());
        AttractionVerdict::Skipped
    } else if !(cab_ok && (cba13_ok || cba14_ok)) {
        skipped.push("basin measurements: cycle connections unverified".into());
        AttractionVerdict::Skipped
    } else {
        let mut eps = budget.eps_levels.clone();
        eps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eps.dedup();
        let eps: Vec<f64> = eps.into_iter().take(2).collect();
        let mut run_index = 0u64;
        for cycle in [CycleId::P13Cycle, CycleId::P14Cycle] {
            let carrier_ok = match cycle {
                CycleId::P13Cycle => cba13_ok,
                CycleId::P14Cycle => cba14_ok,
            };
            if !carrier_ok {
                skipped.push(format!("basin of {cycle:?}: carrier connection unverified"));
                continue;
            }
            for &e in &eps {
                let seed = budget.seed ^ ((run_index + 1) << 32);
                run_index += 1;
                match basin_fraction(
                    coeffs,
                    cycle,
                    e,
                    budget.samples_per_eps,
                    seed,
                    &budget.tube,
                    &budget.integrator,
                ) {
                    Ok(rep) => basin_reports.push(rep),
                    Err(err) => skipped.push(format!(
                        "basin of {cycle:?} at eps = {e}: {err}"
                    )),
                }
            }
        }
        if basin_reports.is_empty() {
            AttractionVerdict::Skipped
        } else {
            basin_verdict(&basin_reports)
        }
    };

    // discrepancy (c): the simulated attractor is the principal cycle
    let principal_cycle = match construction.principal_plane {
        Some(PrincipalPlane::P13) => Some(CycleId::P13Cycle),
        Some(PrincipalPlane::P14) => Some(CycleId::P14Cycle),
        _ => None,
    };
    let simulated_cycle = match simulated {
        AttractionVerdict::P13 => Some(CycleId::P13Cycle),
        AttractionVerdict::P14 => Some(CycleId::P14Cycle),
        _ => None,
    };
    let simulated_is_principal = match (simulated, principal_cycle) {
        (AttractionVerdict::Skipped, _) | (_, None) => None,
        (AttractionVerdict::Both, _) => Some(true),
        _ => Some(simulated_cycle == principal_cycle),
    };
    if simulated_is_principal == Some(true) {
        anomalies.push(format!(
            "the simulated attracting cycle {simulated:?} is the principal one"
        ));
    }

    // discrepancy (d): neither cycle attracts at the tested radii
    if simulated == AttractionVerdict::Neither {
        anomalies.push(
            "neither cycle attracts at the tested radii (both upper confidence bounds \
             below 1%)"
                .into(),
        );
    }

    let prediction_vs_simulation = match (predicted, simulated) {
        (_, AttractionVerdict::Skipped) | (None, _) => None,
        (Some(p), s) => Some(match (p, s) {
            (CycleId::P13Cycle, AttractionVerdict::P13) => true,
            (CycleId::P14Cycle, AttractionVerdict::P14) => true,
            _ => false,
        }),
    };
    if prediction_vs_simulation == Some(false) {
        anomalies.push(format!(
            "delta-based prediction ({predicted:?}) disagrees with the measured verdict \
             ({simulated:?})"
        ));
    }

    let principal_plane = construction.principal_plane;
    AdjudicationReport {
        conditions: ConditionReport {
            table1,
            hypotheses,
        },
        construction,
        connections,
        principal_plane,
        delta_product_sign: delta_sign,
        predicted_attracting_cycle: predicted,
        basin_reports,
        simulated_attracting_cycle: simulated,
        printed_vs_direct_condition3_agree: printed_vs_direct,
        prediction_vs_simulation_agree: prediction_vs_simulation,
        simulated_attractor_is_principal: simulated_is_principal,
        anomalies,
        skipped,
    }
}
