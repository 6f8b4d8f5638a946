//! One seeded end-to-end convergence run at desk scale.

use minorspec::diagnostics::{convergence_run, plan_convergence};
use minorspec::limits::norm_bound;
use minorspec::params::{ErgodicParams, RawParams};
use minorspec::spectral::Interval;

#[test]
fn counting_and_projection_measures_settle() {
    let params = ErgodicParams::validate(&RawParams {
        gamma1: 0.0,
        gamma2: 0.0,
        points: vec![2.0, -1.0],
        tail: None,
        tail_bound: None,
    })
    .unwrap();
    let intervals = vec![
        Interval::closed(1.5, 2.5),
        Interval::open(-1.5, -0.5),
        Interval::closed(0.5, 1.5),
    ];
    let plan = plan_convergence(
        params.clone(),
        20260822,
        vec![32, 64, 128, 256],
        intervals.clone(),
        vec![(0, 0), (0, 1)],
        None,
        1,
    )
    .unwrap();
    let report = convergence_run(&plan).unwrap();

    // Counting masses are exact at the largest grid dimension: one point in
    // each spike interval, nothing in between.
    let targets = [1.0, 1.0, 0.0];
    for (iv, target) in intervals.iter().zip(targets) {
        let lam = report.slot_values(256, iv, Some((0, 0)), |c| c.lambda_n);
        assert_eq!(lam, vec![target]);
        let inf = report.slot_values(256, iv, Some((0, 0)), |c| c.lambda_inf);
        assert_eq!(inf, vec![target]);
    }

    // Projection errors shrink from the smallest to the largest dimension.
    for iv in &intervals[..2] {
        for pair in [(0, 0), (0, 1)] {
            let at_32 = report.slot_values(32, iv, Some(pair), |c| c.abs_err_sigma)[0];
            let at_256 = report.slot_values(256, iv, Some(pair), |c| c.abs_err_sigma)[0];
            assert!(
                at_256 < at_32.max(0.05),
                "pair {pair:?} on {iv:?}: {at_32} -> {at_256}"
            );
        }
    }

    // The centered norm series sits below the energy bound with slack.
    let bound = norm_bound(&params) + 0.25;
    for cell in &report.norms {
        assert!(cell.norm_over_n <= bound);
    }
}
