//! Stability-index estimation on a verified connection point of the
//! reference set: the run must produce one fraction per ladder level and a
//! verdict, whatever the verdict turns out to be.

use hetlab::analysis::EquilibriumLabel;
use hetlab::experiments::{
    stability_index_estimate, verify_connection, CycleId, IndexTarget, TubeParams,
};
use hetlab::integrator::IntegratorConfig;
use hetlab::model::SubspaceId;
use hetlab::CoefficientSet;

#[test]
fn index_estimate_on_a_connection_point_is_fully_populated() {
    let c = CoefficientSet::reference();
    let cab = verify_connection(
        &c,
        EquilibriumLabel::XiA,
        EquilibriumLabel::XiB,
        SubspaceId::P12,
        1e-5,
    )
    .unwrap();
    assert!(cab.verified);
    let mid = cab.path[cab.path.len() / 2];

    let ladder: Vec<f64> = (0..6).map(|k| 1e-2 * 0.5_f64.powi(k)).collect();
    let est = stability_index_estimate(
        &c,
        IndexTarget::Cycle(CycleId::P14Cycle),
        &mid,
        &ladder,
        100,
        3,
        &TubeParams::default(),
        &IntegratorConfig::default(),
    )
    .unwrap();

    assert_eq!(est.fractions.len(), ladder.len());
    assert!(est.fractions.iter().all(|f| (0.0..=1.0).contains(f)));
    assert_eq!(est.samples_per_level, 100);
    // deterministic replay
    let replay = stability_index_estimate(
        &c,
        IndexTarget::Cycle(CycleId::P14Cycle),
        &mid,
        &ladder,
        100,
        3,
        &TubeParams::default(),
        &IntegratorConfig::default(),
    )
    .unwrap();
    assert_eq!(est, replay);
    println!(
        "index estimate at a C_ab point: fractions {:?}, verdict {:?}",
        est.fractions, est.verdict
    );
}
