use std::collections::HashMap;

use num::Zero;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::rat::rat;
use crate::seeding::substream;

fn bs(s: &str) -> BitString {
    s.parse().unwrap()
}

fn uniform_bit_strategy() -> MixedStrategy {
    MixedStrategy::uniform(&[BitString::empty()], &[bs("0"), bs("1")]).unwrap()
}

/// Independent straight-line evaluation of expected utility from raw tables:
/// a direct sum over every (joint type, joint action) pair, written without
/// any of the library's game machinery.
fn oracle_expected_utility(
    players: usize,
    dist: &[(Vec<BitString>, Rat)],
    util: &HashMap<(Vec<BitString>, Vec<BitString>), Vec<Rat>>,
    strategies: &[Vec<(BitString, Vec<(BitString, Rat)>)>],
) -> Vec<Rat> {
    let mut totals = vec![Rat::zero(); players];
    for (joint_t, p_t) in dist {
        // Full joint action space: every combination of per-player actions.
        let mut action_lists: Vec<Vec<(BitString, Rat)>> = Vec::new();
        for (p, strat) in strategies.iter().enumerate() {
            let row = strat
                .iter()
                .find(|(t, _)| *t == joint_t[p])
                .expect("strategy covers type");
            action_lists.push(row.1.clone());
        }
        let mut stack: Vec<(usize, Vec<(BitString, Rat)>)> = vec![(0, Vec::new())];
        while let Some((depth, chosen)) = stack.pop() {
            if depth == players {
                let mut weight = p_t.clone();
                let mut actions = Vec::new();
                for (a, w) in &chosen {
                    weight *= w.clone();
                    actions.push(a.clone());
                }
                let values = util
                    .get(&(joint_t.clone(), actions))
                    .expect("utility table complete");
                for i in 0..players {
                    totals[i] += weight.clone() * values[i].clone();
                }
                continue;
            }
            for (a, w) in &action_lists[depth] {
                let mut next = chosen.clone();
                next.push((a.clone(), w.clone()));
                stack.push((depth + 1, next));
            }
        }
    }
    totals
}

/// Random fully explicit 2-player game plus a random mixed profile.
struct RandomGameSpec {
    actions: Vec<Vec<BitString>>,
    types: Vec<Vec<BitString>>,
    dist: Vec<(Vec<BitString>, Rat)>,
    util: Vec<(Vec<BitString>, Vec<BitString>, Vec<Rat>)>,
    profile: Vec<Vec<(BitString, Vec<(BitString, Rat)>)>>,
}

fn random_game_spec(rng: &mut ChaCha20Rng, max_actions: usize, max_types: usize) -> RandomGameSpec {
    let sizes = |rng: &mut ChaCha20Rng, max: usize| rng.gen_range(1..=max);
    let space = |count: usize, width: usize| -> Vec<BitString> {
        (0..count)
            .map(|i| BitString::from_u64_msb(i as u64, width).unwrap())
            .collect()
    };
    let actions: Vec<Vec<BitString>> = (0..2)
        .map(|_| space(sizes(rng, max_actions), 3))
        .collect();
    let types: Vec<Vec<BitString>> = (0..2).map(|_| space(sizes(rng, max_types), 4)).collect();

    let joint_types: Vec<Vec<BitString>> = types[0]
        .iter()
        .flat_map(|a| types[1].iter().map(move |b| vec![a.clone(), b.clone()]))
        .collect();
    let weights: Vec<i64> = (0..joint_types.len())
        .map(|_| i64::from(rng.gen_range(0..9u8)))
        .collect();
    let total: i64 = weights.iter().sum::<i64>().max(1);
    let mut dist: Vec<(Vec<BitString>, Rat)> = joint_types
        .iter()
        .cloned()
        .zip(weights.iter().map(|&w| rat(w, total)))
        .collect();
    if weights.iter().all(|&w| w == 0) {
        dist[0].1 = rat(1, 1);
    }

    let mut util = Vec::new();
    for t in &joint_types {
        for a0 in &actions[0] {
            for a1 in &actions[1] {
                let v: Vec<Rat> = (0..2)
                    .map(|_| rat(rng.gen_range(-8..=8), i64::from(rng.gen_range(1..=4u8))))
                    .collect();
                util.push((t.clone(), vec![a0.clone(), a1.clone()], v));
            }
        }
    }

    let profile = (0..2)
        .map(|p| {
            types[p]
                .iter()
                .map(|t| {
                    let weights: Vec<i64> =
                        (0..actions[p].len()).map(|_| i64::from(rng.gen_range(0..9u8))).collect();
                    let total = weights.iter().sum::<i64>().max(1);
                    let mut row: Vec<(BitString, Rat)> = actions[p]
                        .iter()
                        .cloned()
                        .zip(weights.iter().map(|&w| rat(w, total)))
                        .collect();
                    if weights.iter().all(|&w| w == 0) {
                        row[0].1 = rat(1, 1);
                    }
                    (t.clone(), row)
                })
                .collect()
        })
        .collect();

    RandomGameSpec {
        actions,
        types,
        dist,
        util,
        profile,
    }
}

fn build(spec: &RandomGameSpec) -> (BayesianGame, Vec<MixedStrategy>) {
    let game = BayesianGame::from_tables(
        "random",
        spec.actions.clone(),
        spec.types.clone(),
        spec.dist.clone(),
        spec.util.clone(),
    )
    .unwrap();
    let profile = spec
        .profile
        .iter()
        .map(|rows| MixedStrategy::from_table(rows.clone()).unwrap())
        .collect();
    (game, profile)
}

#[test]
fn pennies_uniform_profile_is_worth_zero() {
    let game = matching_pennies();
    let s = uniform_bit_strategy();
    let values = game.expected_utility(&[s.clone(), s]).unwrap();
    assert_eq!(values, vec![Rat::zero(), Rat::zero()]);
}

#[test]
fn expected_utility_matches_brute_force_oracle() {
    for trial in 0..40 {
        let mut rng = substream(2024, trial, 0);
        let spec = random_game_spec(&mut rng, 3, 2);
        let (game, profile) = build(&spec);
        let got = game.expected_utility(&profile).unwrap();
        let util_map: HashMap<_, _> = spec
            .util
            .iter()
            .map(|(t, b, v)| ((t.clone(), b.clone()), v.clone()))
            .collect();
        let expected = oracle_expected_utility(2, &spec.dist, &util_map, &spec.profile);
        assert_eq!(got, expected, "trial {trial}");
    }
}

#[test]
fn expected_utility_rejects_incomplete_strategy() {
    let game = matching_pennies();
    let missing = MixedStrategy::pure(vec![(bs("0"), bs("0"))]).unwrap();
    match game.expected_utility(&[missing, uniform_bit_strategy()]) {
        Err(Error::Domain(_)) => {}
        other => panic!("expected domain error, got {other:?}"),
    }
}

#[test]
fn expected_utility_rejects_sampler_mode() {
    struct Fixed;
    impl TypeSampler for Fixed {
        fn sample(&self, _rng: &mut ChaCha20Rng) -> Result<Vec<BitString>> {
            Ok(vec![BitString::empty(), BitString::empty()])
        }
    }
    let game = BayesianGame::from_parts(
        "sampler",
        vec![
            Space::Explicit(vec![bs("0"), bs("1")]),
            Space::Explicit(vec![bs("0"), bs("1")]),
        ],
        vec![Space::ExactLen(0), Space::ExactLen(0)],
        TypeDist::Sampler(std::sync::Arc::new(Fixed)),
        UtilityFn::Builtin {
            name: "zero".into(),
            f: std::sync::Arc::new(|_t, _b| Ok(vec![Rat::zero(), Rat::zero()])),
        },
        (rat_int(0), rat_int(0)),
        None,
    )
    .unwrap();
    let s = uniform_bit_strategy();
    assert!(matches!(
        game.expected_utility(&[s.clone(), s]),
        Err(Error::UnsupportedMode(_))
    ));
}

#[test]
fn linearity_in_mixing_weights() {
    for trial in 0..20 {
        let mut rng = substream(515, trial, 0);
        let spec = random_game_spec(&mut rng, 3, 2);
        let (game, profile) = build(&spec);
        let mut rng2 = substream(515, trial, 1);
        let alt_spec = random_game_spec(&mut rng2, 3, 2);
        // Reuse only the strategy part, regenerated on the same spaces.
        let alt0 = {
            let rows = spec.types[0]
                .iter()
                .map(|t| {
                    let weights: Vec<i64> = (0..spec.actions[0].len())
                        .map(|_| i64::from(rng2.gen_range(1..9u8)))
                        .collect();
                    let total = weights.iter().sum::<i64>();
                    (
                        t.clone(),
                        spec.actions[0]
                            .iter()
                            .cloned()
                            .zip(weights.iter().map(|&w| rat(w, total)))
                            .collect(),
                    )
                })
                .collect();
            MixedStrategy::from_table(rows).unwrap()
        };
        drop(alt_spec);
        let lambda = rat(i64::from(rng2.gen_range(0..=4u8)), 4);
        let mixed = profile[0].mix(&alt0, &lambda).unwrap();

        let v_mixed = game
            .expected_utility(&[mixed, profile[1].clone()])
            .unwrap();
        let v_a = game.expected_utility(&profile).unwrap();
        let v_b = game
            .expected_utility(&[alt0, profile[1].clone()])
            .unwrap();
        for p in 0..2 {
            let expect = lambda.clone() * v_a[p].clone()
                + (Rat::one() - lambda.clone()) * v_b[p].clone();
            assert_eq!(v_mixed[p], expect, "trial {trial} player {p}");
        }
    }
}

#[test]
fn pennies_uniform_is_a_nash_equilibrium() {
    let game = matching_pennies();
    let s = uniform_bit_strategy();
    let deviations = vec![
        all_pure_strategies(&game, 0).unwrap(),
        all_pure_strategies(&game, 1).unwrap(),
    ];
    let (ok, witness) = game
        .is_epsilon_ne(&[s.clone(), s], &Rat::zero(), &deviations)
        .unwrap();
    assert!(ok);
    assert!(witness.is_none());
}

#[test]
fn pennies_pure_zero_profile_has_player_two_witness() {
    let game = matching_pennies();
    let p0 = MixedStrategy::constant(bs("0"));
    let deviations = vec![
        all_pure_strategies(&game, 0).unwrap(),
        all_pure_strategies(&game, 1).unwrap(),
    ];
    let (ok, witness) = game
        .is_epsilon_ne(&[p0.clone(), p0], &rat(1, 2), &deviations)
        .unwrap();
    assert!(!ok);
    let w = witness.unwrap();
    assert_eq!(w.player, 1);
    assert_eq!(w.gain, rat_int(2));
    let dev = &deviations[1][w.deviation];
    assert_eq!(dev.action_dist(&BitString::empty()).unwrap()[0].0, bs("1"));
}

#[test]
fn empty_deviation_sets_are_vacuously_stable() {
    let game = matching_pennies();
    let p0 = MixedStrategy::constant(bs("0"));
    let (ok, witness) = game
        .is_epsilon_ne(&[p0.clone(), p0], &Rat::zero(), &[vec![], vec![]])
        .unwrap();
    assert!(ok);
    assert!(witness.is_none());
}

#[test]
fn scale_covariance_of_ne_verdicts() {
    for trial in 0..10 {
        let mut rng = substream(99, trial, 0);
        let spec = random_game_spec(&mut rng, 2, 2);
        let (game, profile) = build(&spec);
        let scale = rat(i64::from(rng.gen_range(1..=5u8)), 2);
        let scaled_util: Vec<_> = spec
            .util
            .iter()
            .map(|(t, b, v)| {
                (
                    t.clone(),
                    b.clone(),
                    v.iter().map(|x| x.clone() * scale.clone()).collect(),
                )
            })
            .collect();
        let scaled_game = BayesianGame::from_tables(
            "scaled",
            spec.actions.clone(),
            spec.types.clone(),
            spec.dist.clone(),
            scaled_util,
        )
        .unwrap();
        let deviations: Vec<Vec<MixedStrategy>> = (0..2)
            .map(|p| all_pure_strategies(&game, p).unwrap())
            .collect();
        let epsilon = rat(1, 3);
        let scaled_eps = epsilon.clone() * scale.clone();
        let (v1, _) = game.is_epsilon_ne(&profile, &epsilon, &deviations).unwrap();
        let (v2, _) = scaled_game
            .is_epsilon_ne(&profile, &scaled_eps, &deviations)
            .unwrap();
        assert_eq!(v1, v2, "trial {trial}");
    }
}

#[test]
fn check_bounded_flags_out_of_window_values() {
    let game = matching_pennies();
    assert!(game.check_bounded(&rat_int(1), &rat_int(1)).unwrap());
    assert!(game.check_bounded(&rat(1, 2), &rat_int(2)).unwrap());

    let e = BitString::empty();
    let half_game = BayesianGame::from_tables(
        "half",
        vec![vec![bs("0")], vec![bs("0")]],
        vec![vec![e.clone()], vec![e.clone()]],
        vec![(vec![e.clone(), e.clone()], rat_int(1))],
        vec![(
            vec![e.clone(), e.clone()],
            vec![bs("0"), bs("0")],
            vec![rat(1, 2), rat(-1, 2)],
        )],
    )
    .unwrap();
    assert!(!half_game.check_bounded(&rat_int(1), &rat_int(2)).unwrap());
    assert!(matches!(
        half_game.check_bounded(&rat_int(2), &rat_int(1)),
        Err(Error::Argument(_))
    ));
    assert!(matches!(
        half_game.check_bounded(&rat_int(0), &rat_int(1)),
        Err(Error::Argument(_))
    ));
}

#[test]
fn estimate_with_one_sample_equals_the_sampled_payoff() {
    let game = matching_pennies();
    let s = uniform_bit_strategy();
    let est = game
        .estimate_utility(&[&s, &s], 1, 31337)
        .unwrap();
    // One sample of matching pennies pays +-1 to each player.
    assert_eq!(est[0].value.abs(), 1.0);
    assert_eq!(est[0].value, -est[1].value);
}

#[test]
fn estimate_converges_to_exact_value_for_pennies() {
    let game = matching_pennies();
    let s = uniform_bit_strategy();
    let est = game.estimate_utility(&[&s, &s], 100_000, 7).unwrap();
    assert!(est[0].value.abs() < 0.02, "estimate {}", est[0].value);
    assert!(est[1].value.abs() < 0.02);
}

#[test]
fn estimate_is_deterministic_for_a_seed() {
    let game = matching_pennies();
    let s = uniform_bit_strategy();
    let a = game.estimate_utility(&[&s, &s], 1000, 5).unwrap();
    let b = game.estimate_utility(&[&s, &s], 1000, 5).unwrap();
    assert_eq!(a, b);
    let c = game.estimate_utility(&[&s, &s], 1000, 6).unwrap();
    assert!(a[0].value != c[0].value || a[1].value != c[1].value);
}

#[test]
fn estimate_rejects_zero_samples() {
    let game = matching_pennies();
    let s = uniform_bit_strategy();
    assert!(matches!(
        game.estimate_utility(&[&s, &s], 0, 1),
        Err(Error::Argument(_))
    ));
}

#[test]
fn compiled_and_generic_estimation_paths_agree_bitwise() {
    /// Hides the mixed form so the generic path is exercised.
    struct Opaque<'a>(&'a MixedStrategy);
    impl Strategy for Opaque<'_> {
        fn respond(&self, t: &BitString, rng: &mut ChaCha20Rng) -> Result<BitString> {
            self.0.respond(t, rng)
        }
    }
    for trial in 0..10 {
        let mut rng = substream(808, trial, 0);
        let spec = random_game_spec(&mut rng, 4, 3);
        let (game, profile) = build(&spec);
        let fast = game
            .estimate_utility(&[&profile[0], &profile[1]], 500, trial)
            .unwrap();
        let o0 = Opaque(&profile[0]);
        let o1 = Opaque(&profile[1]);
        let generic = game.estimate_utility(&[&o0, &o1], 500, trial).unwrap();
        assert_eq!(fast, generic, "trial {trial}");
    }
}

#[test]
fn game_json_round_trip_preserves_exact_values() {
    let game = matching_pennies();
    let json = game_to_json(&game).unwrap();
    let back = game_from_json(&json).unwrap();
    let s = uniform_bit_strategy();
    assert_eq!(
        game.expected_utility(&[s.clone(), s.clone()]).unwrap(),
        back.expected_utility(&[s.clone(), s]).unwrap()
    );
    assert_eq!(game_to_json(&back).unwrap(), json);
}

#[test]
fn meta_poly_evaluation() {
    assert_eq!(eval_poly(&[0, 5], 7), 35);
    assert_eq!(eval_poly(&[1, 2, 3], 10), 321);
    assert_eq!(eval_poly(&[], 10), 0);
    let meta = GameSequenceMeta {
        action_len_poly: vec![0, 5],
        type_len_poly: vec![0, 5],
        utility_time_poly: vec![0, 0, 1],
        bounded_range: Some(BoundedRange {
            lower: rat_int(1),
            upper: rat_int(1),
        }),
    };
    meta.validate().unwrap();
    let bad = GameSequenceMeta {
        bounded_range: Some(BoundedRange {
            lower: rat_int(2),
            upper: rat_int(1),
        }),
        ..meta
    };
    assert!(bad.validate().is_err());
}
