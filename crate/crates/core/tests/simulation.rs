use hproj::delegation_sim::{adoption_shares, run_batch, run_episode};
use hproj::{AgentSpec, DecisionRule, FinalAdoption, PoolEnvironment};

#[test]
fn batches_are_reproducible() {
    let env = PoolEnvironment::canonical();
    for agent in [AgentSpec::single_index(), AgentSpec::pool_specific()] {
        let a = run_batch(&env, &agent, 50, 11).unwrap();
        let b = run_batch(&env, &agent, 50, 11).unwrap();
        assert_eq!(a, b);
        let c = run_batch(&env, &agent, 50, 12).unwrap();
        assert_ne!(a, c);
    }
}

#[test]
fn single_index_adoption_is_all_or_nothing() {
    let env = PoolEnvironment::canonical();
    for rule in [DecisionRule::KlPointBelief, DecisionRule::Map] {
        let agent = AgentSpec::single_index().with_rule(rule);
        let shares = adoption_shares(&run_batch(&env, &agent, 200, 3).unwrap());
        assert_eq!(shares.all_or_nothing, 1.0, "{rule:?}");
    }
}

#[test]
fn pool_specific_agent_adopts_on_the_hard_pool() {
    let env = PoolEnvironment::canonical();
    let shares = adoption_shares(&run_batch(&env, &AgentSpec::pool_specific(), 200, 3).unwrap());
    assert!(shares.only_hard > 0.3);
    assert!(shares.all_or_nothing < 1.0);
}

#[test]
fn deterministic_environment_is_learned() {
    let env = PoolEnvironment::from_rates([0.78, 0.23], [0.0, 1.0], 60).unwrap();
    let agent = AgentSpec::pool_specific().with_exploration(0.5);
    let ep = run_episode(&env, &agent, 5).unwrap();
    assert_eq!(ep.final_adoption, FinalAdoption::OnlyHard);
    assert_eq!(ep.delegation_log.len(), 120);
}
