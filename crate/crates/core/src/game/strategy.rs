//! Mixed strategies and the sampling interface shared by strategy families.

use std::collections::HashMap;
use std::sync::OnceLock;

use num::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::machine::{run_machine, StepCostTable, StrategyMachine};
use crate::rat::{self, rat_to_f64, Rat};

use super::BayesianGame;

/// Anything that can pick an action given the player's own type.
///
/// Implementations draw randomness only from the supplied stream, or from
/// state fixed at construction, so results are reproducible.
pub trait Strategy: Send + Sync {
    fn respond(&self, own_type: &BitString, rng: &mut ChaCha20Rng) -> Result<BitString>;

    /// Exposes the exact mixed form when one exists, enabling compiled
    /// estimation paths that stay bit-identical with the generic path.
    fn as_mixed(&self) -> Option<&MixedStrategy> {
        None
    }
}

/// A per-type distribution over own actions.
#[derive(Clone)]
pub struct MixedStrategy {
    /// Sorted by type; each row's probabilities are nonnegative and sum to 1.
    rows: Vec<(BitString, Vec<(BitString, Rat)>)>,
    cum_cache: OnceLock<HashMap<BitString, Vec<f64>>>,
}

impl std::fmt::Debug for MixedStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MixedStrategy({} types)", self.rows.len())
    }
}

impl PartialEq for MixedStrategy {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
    }
}

impl MixedStrategy {
    /// Builds from `(type, [(action, probability)])` rows; per-type
    /// probabilities must be nonnegative and sum to exactly 1.
    pub fn from_table(rows: Vec<(BitString, Vec<(BitString, Rat)>)>) -> Result<Self> {
        let mut rows = rows;
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Argument(format!(
                    "duplicate type \"{}\" in strategy",
                    w[0].0
                )));
            }
        }
        for (ty, actions) in &rows {
            if actions.is_empty() {
                return Err(Error::Argument(format!(
                    "empty action distribution for type \"{ty}\""
                )));
            }
            let mut total = Rat::zero();
            for (i, (action, p)) in actions.iter().enumerate() {
                if p < &Rat::zero() {
                    return Err(Error::Argument(format!(
                        "negative probability {p} for action \"{action}\""
                    )));
                }
                if actions[..i].iter().any(|(a, _)| a == action) {
                    return Err(Error::Argument(format!(
                        "duplicate action \"{action}\" for type \"{ty}\""
                    )));
                }
                total += p;
            }
            if !total.is_one() {
                return Err(Error::Argument(format!(
                    "probabilities for type \"{ty}\" sum to {total}, expected 1"
                )));
            }
        }
        Ok(MixedStrategy {
            rows,
            cum_cache: OnceLock::new(),
        })
    }

    /// Point mass per type.
    pub fn pure(assignments: Vec<(BitString, BitString)>) -> Result<Self> {
        MixedStrategy::from_table(
            assignments
                .into_iter()
                .map(|(t, a)| (t, vec![(a, Rat::one())]))
                .collect(),
        )
    }

    /// Point mass on one action for the singleton (empty) type.
    pub fn constant(action: BitString) -> Self {
        MixedStrategy::pure(vec![(BitString::empty(), action)])
            .expect("single point mass is well formed")
    }

    /// Uniform over `actions` for every listed type.
    pub fn uniform(types: &[BitString], actions: &[BitString]) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::Argument("uniform strategy needs actions".into()));
        }
        let p = Rat::one() / rat::rat_int(actions.len() as i64);
        MixedStrategy::from_table(
            types
                .iter()
                .map(|t| {
                    (
                        t.clone(),
                        actions.iter().map(|a| (a.clone(), p.clone())).collect(),
                    )
                })
                .collect(),
        )
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`, defined on
    /// the common type set (which must match).
    pub fn mix(&self, other: &MixedStrategy, lambda: &Rat) -> Result<MixedStrategy> {
        if lambda < &Rat::zero() || lambda > &Rat::one() {
            return Err(Error::Argument(format!("lambda {lambda} outside [0, 1]")));
        }
        if self.types().ne(other.types()) {
            return Err(Error::Argument(
                "mixing strategies with different type sets".into(),
            ));
        }
        let one_minus = Rat::one() - lambda.clone();
        let mut rows = Vec::with_capacity(self.rows.len());
        for ((ty, mine), (_, theirs)) in self.rows.iter().zip(&other.rows) {
            let mut merged: Vec<(BitString, Rat)> = Vec::new();
            for (a, p) in mine {
                merged.push((a.clone(), lambda.clone() * p.clone()));
            }
            for (a, p) in theirs {
                match merged.iter_mut().find(|(b, _)| b == a) {
                    Some((_, q)) => *q += one_minus.clone() * p.clone(),
                    None => merged.push((a.clone(), one_minus.clone() * p.clone())),
                }
            }
            rows.push((ty.clone(), merged));
        }
        MixedStrategy::from_table(rows)
    }

    pub fn rows(&self) -> &[(BitString, Vec<(BitString, Rat)>)] {
        &self.rows
    }

    pub fn types(&self) -> impl Iterator<Item = &BitString> + '_ {
        self.rows.iter().map(|(t, _)| t)
    }

    /// The action distribution for a type, if defined.
    pub fn action_dist(&self, ty: &BitString) -> Option<&[(BitString, Rat)]> {
        self.rows
            .binary_search_by(|(t, _)| t.cmp(ty))
            .ok()
            .map(|i| self.rows[i].1.as_slice())
    }

    fn cum(&self) -> &HashMap<BitString, Vec<f64>> {
        self.cum_cache.get_or_init(|| {
            self.rows
                .iter()
                .map(|(t, actions)| {
                    let mut acc = 0.0;
                    let cum = actions
                        .iter()
                        .map(|(_, p)| {
                            acc += rat_to_f64(p);
                            acc
                        })
                        .collect();
                    (t.clone(), cum)
                })
                .collect()
        })
    }

    /// Draws an action index for `ty` using one uniform draw from `rng`.
    pub(super) fn sample_index(&self, ty: &BitString, rng: &mut ChaCha20Rng) -> Result<usize> {
        let cum = self
            .cum()
            .get(ty)
            .ok_or_else(|| Error::Domain(format!("strategy missing type \"{ty}\"")))?;
        let u: f64 = rng.gen();
        Ok(cum.partition_point(|&c| c <= u).min(cum.len() - 1))
    }
}

impl Strategy for MixedStrategy {
    fn respond(&self, own_type: &BitString, rng: &mut ChaCha20Rng) -> Result<BitString> {
        let idx = self.sample_index(own_type, rng)?;
        let row = self.action_dist(own_type).expect("sample_index checked");
        Ok(row[idx].0.clone())
    }

    fn as_mixed(&self) -> Option<&MixedStrategy> {
        Some(self)
    }
}

#[derive(Serialize, Deserialize)]
struct ActionProb {
    action: BitString,
    #[serde(with = "rat::pq")]
    p: Rat,
}

#[derive(Serialize, Deserialize)]
struct StrategyRow {
    #[serde(rename = "type")]
    ty: BitString,
    actions: Vec<ActionProb>,
}

impl Serialize for MixedStrategy {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<StrategyRow> = self
            .rows
            .iter()
            .map(|(ty, actions)| StrategyRow {
                ty: ty.clone(),
                actions: actions
                    .iter()
                    .map(|(action, p)| ActionProb {
                        action: action.clone(),
                        p: p.clone(),
                    })
                    .collect(),
            })
            .collect();
        rows.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for MixedStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<StrategyRow>::deserialize(de)?;
        MixedStrategy::from_table(
            rows.into_iter()
                .map(|r| {
                    (
                        r.ty,
                        r.actions.into_iter().map(|a| (a.action, a.p)).collect(),
                    )
                })
                .collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Every pure strategy (type-to-action function) for one player of a fully
/// explicit game. Guarded against combinatorial blowup.
pub fn all_pure_strategies(game: &BayesianGame, player: usize) -> Result<Vec<MixedStrategy>> {
    let actions = game
        .action_space(player)
        .explicit()
        .ok_or_else(|| Error::UnsupportedMode("need an explicit action space".into()))?;
    let types = game
        .type_space(player)
        .explicit()
        .ok_or_else(|| Error::UnsupportedMode("need an explicit type space".into()))?;
    let count = (actions.len() as u64).checked_pow(types.len() as u32);
    match count {
        Some(c) if c <= 4096 => {}
        _ => {
            return Err(Error::Argument(
                "too many pure strategies to enumerate".into(),
            ))
        }
    }
    let mut out = Vec::new();
    let mut choice = vec![0usize; types.len()];
    loop {
        out.push(MixedStrategy::pure(
            types
                .iter()
                .enumerate()
                .map(|(i, t)| (t.clone(), actions[choice[i]].clone()))
                .collect(),
        )?);
        let mut i = 0;
        loop {
            if i == types.len() {
                return Ok(out);
            }
            choice[i] += 1;
            if choice[i] < actions.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// A step-budgeted machine used directly as a strategy: the machine ignores
/// the type and turns tape randomness into an output action.
pub struct MachineStrategy {
    machine: StrategyMachine,
    costs: StepCostTable,
}

impl MachineStrategy {
    pub fn new(machine: StrategyMachine, costs: StepCostTable) -> Self {
        MachineStrategy { machine, costs }
    }

    pub fn machine(&self) -> &StrategyMachine {
        &self.machine
    }
}

impl Strategy for MachineStrategy {
    fn respond(&self, _own_type: &BitString, rng: &mut ChaCha20Rng) -> Result<BitString> {
        let tape = BitString::from_bits(
            (0..self.machine.required_tape_bits()).map(|_| rng.gen::<bool>()),
        );
        let (output, _steps) = run_machine(&self.machine, &self.costs, &tape)?;
        Ok(output)
    }
}
