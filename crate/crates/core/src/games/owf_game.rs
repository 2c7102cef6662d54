//! Builders for the one-way-function games.
//!
//! Both constructions share a type: every player sees the same puzzle images
//! (types are perfectly correlated), secrets are drawn independently per
//! entry, and payoffs compare inversion hit counts through the sign rule.

use std::sync::Arc;

use rand_chacha::ChaCha20Rng;

use crate::bits::{all_of_width, BitString};
use crate::error::{Error, Result};
use crate::game::{
    BayesianGame, BoundedRange, GameSequenceMeta, Space, TypeDist, TypeSampler, UtilityFn,
};
use crate::owf::OwfInstance;
use crate::rat::{rat_int, Rat};

use super::puzzle::{
    count_hits, owf_payoff, sample_tuple_with_secrets, OwfGameAction, PuzzleLayout, PuzzleTuple,
};

/// Joint-type sampler: one tuple of images, dealt identically to both players.
pub struct PuzzleSampler {
    inst: Arc<OwfInstance>,
    layout: Arc<PuzzleLayout>,
}

impl PuzzleSampler {
    pub fn new(inst: Arc<OwfInstance>, layout: Arc<PuzzleLayout>) -> Self {
        PuzzleSampler { inst, layout }
    }

    /// Draws a tuple together with its secrets, for harnesses and oracles.
    pub fn sample_with_secrets(
        &self,
        rng: &mut ChaCha20Rng,
    ) -> Result<(PuzzleTuple, Vec<BitString>)> {
        sample_tuple_with_secrets(&self.inst, &self.layout, rng)
    }
}

impl TypeSampler for PuzzleSampler {
    fn sample(&self, rng: &mut ChaCha20Rng) -> Result<Vec<BitString>> {
        let (tuple, _secrets) = self.sample_with_secrets(rng)?;
        let encoded = tuple.encode();
        Ok(vec![encoded.clone(), encoded])
    }
}

fn puzzle_utility(
    inst: Arc<OwfInstance>,
    layout: Arc<PuzzleLayout>,
) -> Arc<dyn Fn(&[BitString], &[BitString]) -> Result<Vec<Rat>> + Send + Sync> {
    Arc::new(move |types: &[BitString], actions: &[BitString]| {
        if types.len() != 2 || actions.len() != 2 {
            return Err(Error::Argument("puzzle games are 2-player".into()));
        }
        if types[0] != types[1] {
            return Err(Error::Domain(
                "puzzle-game types must be perfectly correlated".into(),
            ));
        }
        let tuple = PuzzleTuple::decode(&layout, &types[0])?;
        let a1 = count_hits(&tuple, &OwfGameAction::decode(&layout, &actions[0])?, &inst)?;
        let a2 = count_hits(&tuple, &OwfGameAction::decode(&layout, &actions[1])?, &inst)?;
        let (v1, v2) = owf_payoff(u64::from(a1), u64::from(a2));
        Ok(vec![v1, v2])
    })
}

/// Certificate for the inversion-race sequence with unit output exponent:
/// total action/type lengths are `L^2 (L+1) / 2 <= 5 n` bits for
/// `L = ceil(log2 n)`, utilities evaluate in polynomial time, and nonzero
/// payoffs are exactly 1 in magnitude.
pub fn owf_game_meta() -> GameSequenceMeta {
    GameSequenceMeta {
        action_len_poly: vec![0, 5],
        type_len_poly: vec![0, 5],
        utility_time_poly: vec![0, 0, 1],
        bounded_range: Some(BoundedRange {
            lower: rat_int(1),
            upper: rat_int(1),
        }),
    }
}

fn puzzle_game(
    name: String,
    inst: Arc<OwfInstance>,
    layout: Arc<PuzzleLayout>,
    meta: Option<GameSequenceMeta>,
) -> Result<BayesianGame> {
    let action_len = layout.action_len();
    let type_len = layout.type_len();
    let sampler = Arc::new(PuzzleSampler::new(inst.clone(), layout.clone()));
    BayesianGame::from_parts(
        name,
        vec![Space::ExactLen(action_len), Space::ExactLen(action_len)],
        vec![Space::ExactLen(type_len), Space::ExactLen(type_len)],
        TypeDist::Sampler(sampler),
        UtilityFn::Builtin {
            name: "owf-hit-race".into(),
            f: puzzle_utility(inst, layout),
        },
        (rat_int(-1), rat_int(1)),
        meta,
    )
}

/// The inversion-race game at index `n`, in sampler mode.
///
/// `max_key_len` caps the retained entries for desk-scale runs; `None` keeps
/// the full tuple. Errors if a retained key length is outside the instance's
/// supported range.
pub fn build_owf_game(
    n: u64,
    inst: Arc<OwfInstance>,
    max_key_len: Option<usize>,
) -> Result<BayesianGame> {
    let layout = Arc::new(PuzzleLayout::tuple_game_capped(n, &inst, max_key_len)?);
    // Surface unsupported key lengths at build time rather than mid-sample.
    for spec in layout.entries() {
        inst.output_len(spec.key_len)?;
        let probe = BitString::zeros(spec.key_len);
        inst.eval(&probe)?;
    }
    let unit_exponent = *inst.exponent() == rat_int(1);
    puzzle_game(
        format!("owf-game(n={n})"),
        inst,
        layout,
        unit_exponent.then(owf_game_meta),
    )
}

/// The single-puzzle variant at index `n`: one shared image of an `n`-bit
/// secret; whoever alone inverts it wins.
pub fn build_single_puzzle_game(n: usize, inst: Arc<OwfInstance>) -> Result<BayesianGame> {
    let layout = Arc::new(PuzzleLayout::single(n, &inst)?);
    inst.eval(&BitString::zeros(n))?;
    puzzle_game(format!("single-puzzle(n={n})"), inst, layout, None)
}

/// Desk-scale explicit variant: the type is frozen to one sampled tuple and
/// the action space is enumerated, so exact operations (expected utility,
/// boundedness, equilibrium checks) apply directly.
pub fn build_owf_game_fixed_type(
    n: u64,
    inst: Arc<OwfInstance>,
    seed: u64,
) -> Result<BayesianGame> {
    let layout = Arc::new(PuzzleLayout::tuple_game(n, &inst)?);
    let action_len = layout.action_len();
    if action_len > 12 {
        return Err(Error::Argument(format!(
            "action space 2^{action_len} too large for the explicit variant"
        )));
    }
    let mut rng = crate::seeding::substream(seed, 0, 0);
    let (tuple, _secrets) = sample_tuple_with_secrets(&inst, &layout, &mut rng)?;
    let encoded_type = tuple.encode();
    let actions = all_of_width(action_len)?;
    let dist = TypeDist::explicit(vec![(
        vec![encoded_type.clone(), encoded_type.clone()],
        rat_int(1),
    )])?;
    BayesianGame::from_parts(
        format!("owf-game-fixed(n={n})"),
        vec![
            Space::Explicit(actions.clone()),
            Space::Explicit(actions),
        ],
        vec![
            Space::Explicit(vec![encoded_type.clone()]),
            Space::Explicit(vec![encoded_type]),
        ],
        dist,
        UtilityFn::Builtin {
            name: "owf-hit-race".into(),
            f: puzzle_utility(inst, layout),
        },
        (rat_int(-1), rat_int(1)),
        None,
    )
}
