//! Monte Carlo estimation of expected utility.
//!
//! Sampling is laned: sample `s` draws its joint type from stream `(s, 0)` and
//! player `p`'s action from stream `(s, p + 1)`. Lanes make the estimate
//! independent of how much randomness each strategy consumes and give family
//! evaluations common random numbers under a shared seed.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rat::rat_to_f64;
use crate::seeding::substream;

use super::{BayesianGame, Strategy, TypeDist};

/// Hoeffding confidence level for half-widths: 99%.
const HOEFFDING_DELTA: f64 = 0.01;

/// A sample mean with its Hoeffding half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
}

impl Estimate {
    /// True iff `exact` lies within the half-width of the estimate.
    pub fn covers(&self, exact: f64) -> bool {
        (self.value - exact).abs() <= self.half_width
    }
}

pub(super) fn estimate_utility(
    game: &BayesianGame,
    profile: &[&dyn Strategy],
    samples: u32,
    seed: u64,
) -> Result<Vec<Estimate>> {
    if samples == 0 {
        return Err(Error::Argument("samples must be >= 1".into()));
    }
    if profile.len() != game.num_players() {
        return Err(Error::Argument(format!(
            "profile has {} strategies for {} players",
            profile.len(),
            game.num_players()
        )));
    }
    let sums: Vec<f64> = match Compiled::try_new(game, profile)? {
        Some(compiled) => compiled.run(samples, seed),
        None => run_generic(game, profile, samples, seed)?,
    };
    let (lo, hi) = game.utility_range();
    let range_width = rat_to_f64(hi) - rat_to_f64(lo);
    let half_width = range_width * ((2.0 / HOEFFDING_DELTA).ln() / (2.0 * f64::from(samples))).sqrt();
    Ok(sums
        .into_iter()
        .map(|s| Estimate {
            value: s / f64::from(samples),
            half_width,
        })
        .collect())
}

fn run_generic(
    game: &BayesianGame,
    profile: &[&dyn Strategy],
    samples: u32,
    seed: u64,
) -> Result<Vec<f64>> {
    let players = game.num_players();
    let mut sums = vec![0.0f64; players];
    let mut actions: Vec<BitString> = Vec::with_capacity(players);
    for s in 0..u64::from(samples) {
        let mut type_rng = substream(seed, s, 0);
        let joint_t = game.sample_types(&mut type_rng)?;
        actions.clear();
        for (p, strat) in profile.iter().enumerate() {
            let mut rng = substream(seed, s, 1 + p as u64);
            actions.push(strat.respond(&joint_t[p], &mut rng)?);
        }
        let values = game.utility(&joint_t, &actions)?;
        for (acc, v) in sums.iter_mut().zip(&values) {
            *acc += rat_to_f64(v);
        }
    }
    Ok(sums)
}

/// Pre-resolved sampling tables for fully explicit inputs. Produces the exact
/// same draws as the generic path, just without per-sample allocation.
struct Compiled {
    players: usize,
    /// Cumulative distribution over joint-type entries.
    type_cum: Vec<f64>,
    /// Per player, per joint-type entry: cumulative action weights.
    strategy_cum: Vec<Vec<Vec<f64>>>,
    /// Per joint-type entry: utilities for each support combination, laid out
    /// in mixed-radix order with player 0 fastest, `players` values each.
    utilities: Vec<Vec<f64>>,
    /// Per entry: per-player stride for the layout above.
    strides: Vec<Vec<usize>>,
}

impl Compiled {
    fn try_new(game: &BayesianGame, profile: &[&dyn Strategy]) -> Result<Option<Self>> {
        let dist = match game.type_dist() {
            TypeDist::Explicit(d) => d,
            TypeDist::Sampler(_) => return Ok(None),
        };
        let mixed: Option<Vec<&super::MixedStrategy>> =
            profile.iter().map(|s| s.as_mixed()).collect();
        let Some(mixed) = mixed else {
            return Ok(None);
        };
        let players = game.num_players();
        let mut type_cum = Vec::with_capacity(dist.entries().len());
        let mut acc = 0.0;
        for (_, p) in dist.entries() {
            acc += rat_to_f64(p);
            type_cum.push(acc);
        }
        let mut strategy_cum = vec![Vec::new(); players];
        let mut utilities = Vec::new();
        let mut strides = Vec::new();
        for (joint_t, _) in dist.entries() {
            let supports: Vec<&[(BitString, crate::rat::Rat)]> = (0..players)
                .map(|p| {
                    mixed[p].action_dist(&joint_t[p]).ok_or_else(|| {
                        Error::Domain(format!(
                            "strategy for player {p} missing type \"{}\"",
                            joint_t[p]
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            for (p, support) in supports.iter().enumerate() {
                for (action, _) in *support {
                    if !game.action_space(p).contains(action) {
                        return Err(Error::Domain(format!(
                            "strategy for player {p} mixes over \"{action}\" outside the action space"
                        )));
                    }
                }
                let mut acc = 0.0;
                strategy_cum[p].push(
                    support
                        .iter()
                        .map(|(_, w)| {
                            acc += rat_to_f64(w);
                            acc
                        })
                        .collect(),
                );
            }
            let mut stride = Vec::with_capacity(players);
            let mut total = 1usize;
            for support in &supports {
                stride.push(total);
                total *= support.len();
            }
            let mut table = Vec::with_capacity(total * players);
            let mut choice = vec![0usize; players];
            for _ in 0..total {
                let actions: Vec<BitString> = supports
                    .iter()
                    .enumerate()
                    .map(|(p, s)| s[choice[p]].0.clone())
                    .collect();
                for v in game.utility(joint_t, &actions)? {
                    table.push(rat_to_f64(&v));
                }
                let mut p = 0;
                while p < players {
                    choice[p] += 1;
                    if choice[p] < supports[p].len() {
                        break;
                    }
                    choice[p] = 0;
                    p += 1;
                }
            }
            utilities.push(table);
            strides.push(stride);
        }
        Ok(Some(Compiled {
            players,
            type_cum,
            strategy_cum,
            utilities,
            strides,
        }))
    }

    fn run(&self, samples: u32, seed: u64) -> Vec<f64> {
        use rand::Rng;
        let mut sums = vec![0.0f64; self.players];
        for s in 0..u64::from(samples) {
            let mut type_rng = substream(seed, s, 0);
            let u: f64 = type_rng.gen();
            let entry = self
                .type_cum
                .partition_point(|&c| c <= u)
                .min(self.type_cum.len() - 1);
            let mut offset = 0usize;
            for p in 0..self.players {
                let mut rng = substream(seed, s, 1 + p as u64);
                let v: f64 = rng.gen();
                let cum = &self.strategy_cum[p][entry];
                let idx = cum.partition_point(|&c| c <= v).min(cum.len() - 1);
                offset += idx * self.strides[entry][p];
            }
            let row = &self.utilities[entry][offset * self.players..(offset + 1) * self.players];
            for (acc, v) in sums.iter_mut().zip(row) {
                *acc += v;
            }
        }
        sums
    }
}
