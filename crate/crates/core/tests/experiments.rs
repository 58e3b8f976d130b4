//! Degenerate settings of the three studies, where the answer is known
//! without running them at scale.

use approx::assert_relative_eq;
use vorg_core::experiments::{
    dynamic_trial, elastic_trial, experiment_dynamic_vs_static, experiment_reconfig_ratio,
    ratio_trial, trial_seeds, ExperimentParams,
};

fn small() -> ExperimentParams {
    ExperimentParams {
        node_range: (8, 10),
        ticks: 30,
        mc_samples: 3,
        ..ExperimentParams::default()
    }
}

#[test]
fn unscrambled_tree_keeps_its_optimum() {
    let p = ExperimentParams {
        randomize_moves: 0,
        ..small()
    };
    for seed in trial_seeds(5, 5) {
        let t = ratio_trial(seed, &p);
        assert_eq!(t.steps, 0);
        assert_relative_eq!(t.ratio, 1.0);
    }
}

#[test]
fn ratio_trials_are_well_formed() {
    let r = experiment_reconfig_ratio(8, 3, &small());
    assert_eq!(r.trials.len(), 8);
    for t in &r.trials {
        assert!(t.flow >= 0.0 && t.reference_flow > 0.0);
        assert!((8..=10).contains(&t.nodes));
    }
}

#[test]
fn zero_rent_limit_is_no_improvement() {
    let p = ExperimentParams {
        rent_limit_range: (0, 0),
        ..small()
    };
    for seed in trial_seeds(2, 4) {
        let t = elastic_trial(seed, &p).unwrap();
        assert_eq!(t.rented_at_end, 0);
        assert_relative_eq!(t.benefit_on, t.benefit_off);
        assert_relative_eq!(t.improvement, 0.0);
    }
}

#[test]
fn unscrambled_dynamic_tree_matches_static_without_events() {
    // Same tree, constant sources, no moves to make: both runs see identical flows.
    let p = ExperimentParams {
        randomize_moves: 0,
        source_event_prob: 0.0,
        ..small()
    };
    let t = dynamic_trial(11, &p).unwrap();
    for f in &t.dynamic_flow {
        assert_relative_eq!(*f, t.static_flow, max_relative = 1e-12);
    }
    assert!(t.reconfigs.iter().all(|&n| n == 0));
}

#[test]
fn studies_are_seeded() {
    let p = small();
    let a = experiment_dynamic_vs_static(4, 9, &p).unwrap();
    let b = experiment_dynamic_vs_static(4, 9, &p).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), p.cost_percents.len());
}
