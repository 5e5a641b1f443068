use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use hproj::ability_model::linspace;
use hproj::adoption_path::knapsack_fill;
use hproj::belief_engine::fosd_compare;
use hproj::kl_equilibrium::{
    best_response, enumerate_equilibria, kl_objective, kl_objective_slope, minimize_kl,
    BeliefStructure, KlTerm,
};
use hproj::{
    AbilityPrior, AdoptionClass, Outcome, ProjectionConfig, SuccessModel, TaskDomain, TruthModel,
};

fn logistic() -> impl Strategy<Value = SuccessModel> {
    (0.3..2.5f64).prop_map(|a| SuccessModel::logistic(a).unwrap())
}

fn ogive() -> impl Strategy<Value = SuccessModel> {
    (0.3..2.5f64).prop_map(|a| SuccessModel::normal_ogive(a).unwrap())
}

fn any_model() -> impl Strategy<Value = SuccessModel> {
    prop_oneof![logistic(), ogive()]
}

fn observations(max: usize) -> impl Strategy<Value = Vec<(f64, Outcome)>> {
    prop::collection::vec(
        (-2.5..2.5f64, any::<bool>().prop_map(Outcome::from_bool)),
        1..max,
    )
}

fn prior() -> AbilityPrior {
    AbilityPrior::discretized_normal(linspace(-4.0, 4.0, 81), 0.0, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sequential_updates_match_batch(model in any_model(), obs in observations(12), split in 0usize..12) {
        let split = split.min(obs.len());
        let batch = prior().update(&model, &obs).unwrap();
        let seq = prior().update(&model, &obs[..split]).unwrap().update(&model, &obs[split..]).unwrap();
        for (a, b) in batch.weights().iter().zip(seq.weights()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_weights_are_a_distribution(model in any_model(), obs in observations(40)) {
        let post = prior().update(&model, &obs).unwrap();
        prop_assert!(post.weights().iter().all(|&w| (0.0..=1.0).contains(&w)));
        prop_assert!((post.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extra_success_shifts_posterior_up(model in any_model(), obs in observations(10), delta in -2.0..2.0f64) {
        let base = prior().update(&model, &obs).unwrap();
        let up = base.update(&model, &[(delta, Outcome::Success)]).unwrap();
        let down = base.update(&model, &[(delta, Outcome::Failure)]).unwrap();
        prop_assert!(fosd_compare(&up, &base).unwrap().passed());
        prop_assert!(fosd_compare(&base, &down).unwrap().passed());
    }

    #[test]
    fn kl_objective_is_convex(
        model in any_model(),
        terms in prop::collection::vec((-2.0..2.0f64, 0.0..=1.0f64, 0.1..3.0f64), 1..6),
    ) {
        let terms: Vec<KlTerm> = terms.into_iter().map(|(delta, target, weight)| KlTerm { delta, target, weight }).collect();
        let grid = linspace(-6.0, 6.0, 241);
        let slopes: Vec<f64> = grid.iter().map(|&t| kl_objective_slope(&model, &terms, t).unwrap()).collect();
        for w in slopes.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9, "slope decreased: {} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn kl_minimum_beats_grid(
        model in any_model(),
        terms in prop::collection::vec((-2.0..2.0f64, 0.02..0.98f64, 0.1..3.0f64), 1..6),
    ) {
        let terms: Vec<KlTerm> = terms.into_iter().map(|(delta, target, weight)| KlTerm { delta, target, weight }).collect();
        let min = minimize_kl(&model, &terms, (-12.0, 12.0)).unwrap();
        for t in linspace(-12.0, 12.0, 481) {
            prop_assert!(min.kl_value <= kl_objective(&model, &terms, t).unwrap() + 1e-12);
        }
        if !min.boundary {
            prop_assert!(kl_objective_slope(&model, &terms, min.theta).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn reward_scaling_keeps_best_response(
        model in logistic(),
        deltas in prop::collection::vec(-2.0..2.0f64, 2..6),
        ai_deltas in prop::collection::vec(-2.0..2.0f64, 6),
        rewards in prop::collection::vec(0.2..5.0f64, 6),
        scale in 0.01..100.0f64,
        theta in -2.0..2.0f64,
        projection in 0.0..=1.0f64,
    ) {
        let n = deltas.len();
        let domain = TaskDomain::from_difficulties(&deltas).unwrap().with_ai_difficulties(&ai_deltas[..n]).unwrap();
        let truth = TruthModel::new(model, domain, 0.0, vec![0.5; n]).unwrap();
        let r = &rewards[..n];
        let scaled: Vec<f64> = r.iter().map(|x| x * scale).collect();
        for structure in [BeliefStructure::SingleIndex, BeliefStructure::PerTask(ProjectionConfig::partial(projection).unwrap())] {
            let a = best_response(&truth.with_rewards(r).unwrap(), theta, structure).unwrap();
            let b = best_response(&truth.with_rewards(&scaled).unwrap(), theta, structure).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn single_index_equilibria_are_never_partial(
        model in any_model(),
        deltas in prop::collection::vec(-2.0..2.0f64, 2..7),
        q_ai in prop::collection::vec(0.05..0.95f64, 7),
        human_theta in -1.0..1.0f64,
    ) {
        let n = deltas.len();
        let truth = TruthModel::new(model, TaskDomain::from_difficulties(&deltas).unwrap(), human_theta, q_ai[..n].to_vec()).unwrap();
        let eq = enumerate_equilibria(&truth).unwrap();
        prop_assert!(!eq.is_empty());
        prop_assert!(eq.iter().all(|r| r.adoption_class != AdoptionClass::Partial));
    }

    #[test]
    fn knapsack_beats_dense_sampling(
        values in prop::collection::vec(0.05..5.0f64, 2),
        a in prop::collection::vec(0.2..3.0f64, 2),
        frac in 0.0..=1.0f64,
    ) {
        let budget = frac * (a[0] + a[1]);
        let q = knapsack_fill(&values, &a, budget);
        let used = a[0] * q[0] + a[1] * q[1];
        prop_assert!(used <= budget + 1e-12);
        prop_assert!(q.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let best = values[0] * q[0] + values[1] * q[1];
        let grid = linspace(0.0, 1.0, 201);
        for &x in &grid {
            for &y in &grid {
                if a[0] * x + a[1] * y <= budget {
                    prop_assert!(values[0] * x + values[1] * y <= best + 1e-9);
                }
            }
        }
    }
}

#[test]
fn point_mass_prior_ignores_data() {
    let p = AbilityPrior::point_mass(linspace(-1.0, 1.0, 5), 0.5).unwrap();
    let m = SuccessModel::logistic(1.0).unwrap();
    let post = p
        .update(&m, &[(0.0, Outcome::Failure), (1.0, Outcome::Success)])
        .unwrap();
    assert_abs_diff_eq!(post.mean(), 0.5, epsilon = 1e-15);
}
