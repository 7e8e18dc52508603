mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use soundlab::equilibrium::{best_response, exploitability, game_value, value_of};
use soundlab::games::{by_name, cmp_strategy, kuhn_alpha_equilibrium, KuhnPoker};
use soundlab::{BehavioralStrategy, GameTree, Player};

fn tree(name: &str) -> GameTree {
    GameTree::build(by_name(name).unwrap().as_ref()).unwrap()
}

fn random_strategy(tree: &GameTree, player: Player, weights: &[f64]) -> BehavioralStrategy {
    let mut s = BehavioralStrategy::new(player);
    let mut w = weights.iter().cycle();
    for (_, set) in tree.acting_infosets(player) {
        let raw: Vec<f64> = (0..set.num_actions()).map(|_| *w.next().unwrap() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        s.insert(set.key.clone(), raw.iter().map(|x| x / total).collect()).unwrap();
    }
    s
}

#[test]
fn sequence_form_values() {
    assert_abs_diff_eq!(common::sequence_form_value(&tree("kuhn")), -1.0 / 18.0, epsilon = 1e-7);
    assert_abs_diff_eq!(common::sequence_form_value(&tree("cmp")), 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(common::sequence_form_value(&tree("mp")), 0.0, epsilon = 1e-9);
    let kuhn = tree("kuhn");
    assert_abs_diff_eq!(value_of(&kuhn).unwrap().0, -1.0 / 18.0, epsilon = 1e-12);
}

#[test]
fn kuhn_certificate_agrees_with_the_linear_program() {
    let kuhn = GameTree::build(&KuhnPoker).unwrap();
    let cert = game_value(&kuhn, 1e-3).unwrap();
    assert!(cert.residual <= 1e-3);
    assert!((cert.value - common::sequence_form_value(&kuhn)).abs() <= 1e-3);
}

#[test]
fn kuhn_equilibrium_family_is_unexploitable() {
    let kuhn = tree("kuhn");
    for alpha in [0.0, 0.25, 0.5, 1.0] {
        let s = kuhn_alpha_equilibrium(alpha).unwrap();
        let brv = common::brute_force_brv(&kuhn, &s, Player::Two);
        assert_abs_diff_eq!(brv, 1.0 / 18.0, epsilon = 1e-12);
        assert_abs_diff_eq!(exploitability(&kuhn, &s).unwrap(), 0.0, epsilon = 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn best_response_matches_enumeration(
        game in prop::sample::select(vec!["cmp", "kuhn", "mp", "lx", "nfg3x3"]),
        weights in prop::collection::vec(0.0f64..1.0, 13),
        fixed_player in prop::sample::select(vec![Player::One, Player::Two]),
    ) {
        let t = tree(game);
        let fixed = random_strategy(&t, fixed_player, &weights);
        let br = best_response(&t, &fixed, fixed_player.opponent()).unwrap();
        let brute = common::brute_force_brv(&t, &fixed, fixed_player.opponent());
        prop_assert!((br.value - brute).abs() < 1e-9, "{} vs {}", br.value, brute);
        // The returned pure strategy attains the value.
        let mut profile = common::to_map(&t, &fixed);
        profile.extend(common::to_map(&t, &br.strategy));
        let attained = fixed_player.opponent().sign() * common::expected_utility(&t, &profile);
        prop_assert!((attained - br.value).abs() < 1e-9);
        let e = exploitability(&t, &fixed).unwrap();
        prop_assert!(e >= 0.0 && e <= t.utility_range() + 1e-12);
    }

    #[test]
    fn cmp_exploitability_is_analytic(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        let t = tree("cmp");
        let e = exploitability(&t, &cmp_strategy(p, q).unwrap()).unwrap();
        prop_assert!((e - (p + q - 1.0).abs()).abs() < 1e-9);
    }

    #[test]
    fn strategy_text_round_trips(weights in prop::collection::vec(0.0f64..1.0, 13)) {
        let t = tree("kuhn");
        let s = random_strategy(&t, Player::One, &weights);
        let back = BehavioralStrategy::parse(&s.to_text(None), None, &t.aliases()).unwrap();
        prop_assert_eq!(back, s);
    }
}
