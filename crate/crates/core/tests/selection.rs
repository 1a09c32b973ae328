use spatial_select::analysis::{check_endpoint_ratio, endpoint_ratio_bound, OneDTwoPointCase, DEFAULT_RESOLUTION};
use spatial_select::{
    centroid_greedy, grid_greedy, objective, CovarianceModel, GroundSetSweep, Point, ProblemInstance, Region,
    SelectionState,
};

fn survey_instance(n: usize, side: f64, k: usize, seed: u64) -> ProblemInstance {
    // Small deterministic LCG keeps this test free of RNG dependencies.
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64 * side
    };
    let omega = (0..n).map(|_| Point::xy(next(), next())).collect();
    ProblemInstance::new(Region::square(side).unwrap(), omega, k, CovarianceModel::SURVEY).unwrap()
}

#[test]
fn report_accounting() {
    let inst = survey_instance(30, 60.0, 10, 3);
    for rep in [grid_greedy(&inst, 8).unwrap(), centroid_greedy(&inst).unwrap()] {
        let direct = objective(&inst.model, &inst.omega, &rep.selected).unwrap();
        assert!((rep.objective - direct).abs() <= 1e-8 * direct, "{:?}", rep.method);
        assert!((rep.objective - rep.gains.iter().sum::<f64>()).abs() <= 1e-8 * rep.objective);
        assert!(rep.gains.iter().all(|&g| g >= 0.0));
        assert_eq!(rep.selected.len(), inst.budget);
        // Each recorded gain equals the direct objective difference.
        for k in 1..=rep.selected.len() {
            let a = objective(&inst.model, &inst.omega, &rep.selected[..k]).unwrap();
            let b = objective(&inst.model, &inst.omega, &rep.selected[..k - 1]).unwrap();
            assert!((rep.gains[k - 1] - (a - b)).abs() <= 1e-8 * a.max(1.0));
        }
    }
}

#[test]
fn selection_is_deterministic() {
    let inst = survey_instance(40, 120.0, 12, 9);
    let a = centroid_greedy(&inst).unwrap();
    let b = centroid_greedy(&inst).unwrap();
    assert_eq!(a.selected, b.selected);
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    let a = grid_greedy(&inst, 9).unwrap();
    let b = grid_greedy(&inst, 9).unwrap();
    assert_eq!(a.gains, b.gains);
}

#[test]
fn centroid_ground_set_is_bounded() {
    let inst = survey_instance(50, 40.0, 5, 1);
    let rep = centroid_greedy(&inst).unwrap();
    assert!(rep.ground_set_size <= 2 * inst.omega.len());
    assert_eq!(rep.rho, None);
}

#[test]
fn endpoint_beats_bound_on_far_pairs() {
    for (sep, l) in [(1.5, 1.0), (2.0, 0.5), (30.0, 8.33), (12.0, 8.33)] {
        let case = OneDTwoPointCase::new(0.0, sep, CovarianceModel::new(3.0, l, 0.2).unwrap()).unwrap();
        let ratio = check_endpoint_ratio(&case, DEFAULT_RESOLUTION).unwrap();
        assert!(ratio >= endpoint_ratio_bound(), "sep {sep}, L {l}: {ratio}");
        assert!(ratio <= 1.0 + 1e-12);

        // The same check through the 2-point, k = 1 greedy over a dense grid.
        let inst = ProblemInstance::new(
            Region::interval(0.0, sep).unwrap(),
            vec![Point::scalar(0.0), Point::scalar(sep)],
            1,
            *case.model(),
        )
        .unwrap();
        let best = grid_greedy(&inst, 20_001).unwrap().objective;
        let at_endpoint = objective(&inst.model, &inst.omega, &[Point::scalar(0.0)]).unwrap();
        assert!(at_endpoint / best >= endpoint_ratio_bound());
    }
}

#[test]
fn sweep_gains_match_state_on_survey_scale() {
    let inst = survey_instance(60, 120.0, 1, 4);
    let ground: Vec<Point> = (0..80).map(|i| Point::xy((i % 10) as f64 * 13.0, (i / 10) as f64 * 15.0)).collect();
    let mut sweep = GroundSetSweep::new(&inst.model, &inst.omega, &ground).unwrap();
    let mut state = SelectionState::empty(inst.model, inst.omega.clone()).unwrap();
    for step in 0..15 {
        let g = sweep.gains();
        let best = (0..g.len()).fold(0, |b, j| if g[j] > g[b] { j } else { b });
        let direct = state.marginal_gain(&ground[best]).unwrap();
        assert!((g[best] - direct).abs() <= 1e-8 * direct.max(1.0), "step {step}");
        sweep.select(best).unwrap();
        state.push(ground[best].clone()).unwrap();
    }
}
