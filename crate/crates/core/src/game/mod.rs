//! Finite Bayesian games with exact rational expected utility and
//! epsilon-Nash-equilibrium checking over explicit deviation sets.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num::{One, Signed, Zero};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rat::{self, rat_int, Rat};

mod estimate;
mod schema;
mod strategy;

pub use estimate::Estimate;
pub use schema::{game_from_json, game_to_json, GameDoc, GAME_SCHEMA};
pub use strategy::{all_pure_strategies, MachineStrategy, MixedStrategy, Strategy};

/// An action or type space: an explicit list, or all bit strings of a fixed
/// length when enumeration is infeasible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Space {
    Explicit(Vec<BitString>),
    /// All bit strings of exactly this length (fixed-width framing).
    ExactLen(usize),
}

impl Space {
    pub fn contains(&self, bs: &BitString) -> bool {
        match self {
            Space::Explicit(items) => items.contains(bs),
            Space::ExactLen(len) => bs.len() == *len,
        }
    }

    pub fn explicit(&self) -> Option<&[BitString]> {
        match self {
            Space::Explicit(items) => Some(items),
            Space::ExactLen(_) => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Space::Explicit(items) = self {
            if items.is_empty() {
                return Err(Error::Argument("explicit space must be nonempty".into()));
            }
            for (i, a) in items.iter().enumerate() {
                if items[..i].contains(a) {
                    return Err(Error::Argument(format!("duplicate space element {a}")));
                }
            }
        }
        Ok(())
    }
}

/// Samples a joint type; used for games whose type space is too large for an
/// explicit table.
pub trait TypeSampler: Send + Sync {
    fn sample(&self, rng: &mut ChaCha20Rng) -> Result<Vec<BitString>>;
}

/// Explicit table over joint types, with a lazily built cumulative
/// distribution for Monte Carlo draws.
pub struct ExplicitDist {
    entries: Vec<(Vec<BitString>, Rat)>,
    cum: std::sync::OnceLock<Vec<f64>>,
}

impl ExplicitDist {
    fn new(entries: Vec<(Vec<BitString>, Rat)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Argument("type distribution must be nonempty".into()));
        }
        let mut total = Rat::zero();
        for (i, (joint, p)) in entries.iter().enumerate() {
            if p < &Rat::zero() {
                return Err(Error::Argument(format!("negative probability {p}")));
            }
            if entries[..i].iter().any(|(j, _)| j == joint) {
                return Err(Error::Argument("duplicate joint type in distribution".into()));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(Error::Argument(format!(
                "type distribution sums to {total}, expected exactly 1"
            )));
        }
        Ok(ExplicitDist {
            entries,
            cum: std::sync::OnceLock::new(),
        })
    }

    pub fn entries(&self) -> &[(Vec<BitString>, Rat)] {
        &self.entries
    }

    fn cum(&self) -> &[f64] {
        self.cum.get_or_init(|| {
            let mut acc = 0.0;
            self.entries
                .iter()
                .map(|(_, p)| {
                    acc += rat::rat_to_f64(p);
                    acc
                })
                .collect()
        })
    }

    fn sample(&self, rng: &mut ChaCha20Rng) -> &[BitString] {
        use rand::Rng;
        let u: f64 = rng.gen();
        let cum = self.cum();
        let idx = cum.partition_point(|&c| c <= u).min(self.entries.len() - 1);
        &self.entries[idx].0
    }
}

/// The type distribution in one of its two representations.
pub enum TypeDist {
    Explicit(ExplicitDist),
    Sampler(Arc<dyn TypeSampler>),
}

impl TypeDist {
    pub fn explicit(entries: Vec<(Vec<BitString>, Rat)>) -> Result<Self> {
        Ok(TypeDist::Explicit(ExplicitDist::new(entries)?))
    }

    pub fn as_explicit(&self) -> Option<&ExplicitDist> {
        match self {
            TypeDist::Explicit(d) => Some(d),
            TypeDist::Sampler(_) => None,
        }
    }
}

/// Per-player utility values for every `(joint type, joint action)` pair.
pub struct UtilityTable {
    entries: Vec<(Vec<BitString>, Vec<BitString>, Vec<Rat>)>,
    index: HashMap<(Vec<BitString>, Vec<BitString>), usize>,
}

impl UtilityTable {
    fn new(entries: Vec<(Vec<BitString>, Vec<BitString>, Vec<Rat>)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (t, b, _)) in entries.iter().enumerate() {
            if index.insert((t.clone(), b.clone()), i).is_some() {
                return Err(Error::Argument("duplicate utility table entry".into()));
            }
        }
        Ok(UtilityTable { entries, index })
    }

    pub fn entries(&self) -> &[(Vec<BitString>, Vec<BitString>, Vec<Rat>)] {
        &self.entries
    }

    fn get(&self, types: &[BitString], actions: &[BitString]) -> Result<&[Rat]> {
        // Key construction is cheap relative to desk-scale table sizes.
        let key = (types.to_vec(), actions.to_vec());
        match self.index.get(&key) {
            Some(&i) => Ok(&self.entries[i].2),
            None => Err(Error::Domain(format!(
                "utility table has no entry for types [{}] and actions [{}]",
                join_bits(types),
                join_bits(actions)
            ))),
        }
    }
}

fn join_bits(items: &[BitString]) -> String {
    items
        .iter()
        .map(|b| format!("\"{b}\""))
        .collect::<Vec<_>>()
        .join(", ")
}

type UtilityClosure = dyn Fn(&[BitString], &[BitString]) -> Result<Vec<Rat>> + Send + Sync;

/// The utility function: an explicit table or a named built-in rule.
pub enum UtilityFn {
    Table(UtilityTable),
    Builtin {
        name: String,
        f: Arc<UtilityClosure>,
    },
}

/// Certificate metadata for a member of a game sequence: polynomial bounds
/// on action/type lengths and utility computation time (coefficient lists,
/// constant term first), plus the payoff magnitude window when bounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSequenceMeta {
    pub action_len_poly: Vec<u64>,
    pub type_len_poly: Vec<u64>,
    pub utility_time_poly: Vec<u64>,
    pub bounded_range: Option<BoundedRange>,
}

/// Magnitude window `[lower, upper]` for nonzero payoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedRange {
    #[serde(with = "rat::pq")]
    pub lower: Rat,
    #[serde(with = "rat::pq")]
    pub upper: Rat,
}

impl GameSequenceMeta {
    pub fn validate(&self) -> Result<()> {
        if let Some(b) = &self.bounded_range {
            if !b.lower.is_positive() || b.lower > b.upper {
                return Err(Error::Argument(format!(
                    "bounded range needs 0 < lower <= upper, got [{}, {}]",
                    b.lower, b.upper
                )));
            }
        }
        Ok(())
    }
}

/// Evaluates a coefficient list `[c0, c1, ...]` at `n`: `c0 + c1*n + ...`.
pub fn eval_poly(coeffs: &[u64], n: u64) -> u128 {
    let mut acc: u128 = 0;
    let mut pow: u128 = 1;
    for &c in coeffs {
        acc += u128::from(c) * pow;
        pow = pow.saturating_mul(u128::from(n));
    }
    acc
}

/// Verdict witness: which player gains how much by which listed deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeWitness {
    /// Zero-based player index.
    pub player: usize,
    /// Index into that player's deviation list.
    pub deviation: usize,
    #[serde(with = "rat::pq")]
    pub gain: Rat,
}

/// A finite Bayesian game: players, action/type spaces, a distribution over
/// joint types, and per-player utilities.
pub struct BayesianGame {
    name: String,
    players: usize,
    actions: Vec<Space>,
    types: Vec<Space>,
    dist: TypeDist,
    utility: UtilityFn,
    /// Bounds on utility values, used for Hoeffding half-widths.
    range: (Rat, Rat),
    meta: Option<GameSequenceMeta>,
}

impl fmt::Debug for BayesianGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BayesianGame")
            .field("name", &self.name)
            .field("players", &self.players)
            .finish()
    }
}

impl BayesianGame {
    /// Builds a fully explicit game from tables.
    ///
    /// The utility table must cover the whole product of explicit type and
    /// action spaces so that every evaluation is total.
    pub fn from_tables(
        name: impl Into<String>,
        actions: Vec<Vec<BitString>>,
        types: Vec<Vec<BitString>>,
        dist: Vec<(Vec<BitString>, Rat)>,
        utilities: Vec<(Vec<BitString>, Vec<BitString>, Vec<Rat>)>,
    ) -> Result<Self> {
        let players = actions.len();
        if players == 0 || types.len() != players {
            return Err(Error::Argument(
                "need matching, nonempty action and type space lists".into(),
            ));
        }
        let actions: Vec<Space> = actions.into_iter().map(Space::Explicit).collect();
        let types: Vec<Space> = types.into_iter().map(Space::Explicit).collect();
        for s in actions.iter().chain(types.iter()) {
            s.validate()?;
        }
        for (joint, _) in &dist {
            check_joint(joint, &types, "type")?;
        }
        for (t, b, values) in &utilities {
            check_joint(t, &types, "type")?;
            check_joint(b, &actions, "action")?;
            if values.len() != players {
                return Err(Error::Argument(
                    "utility entry must list one value per player".into(),
                ));
            }
        }
        let table = UtilityTable::new(utilities)?;
        // Totality: every (t, b) combination must be present.
        let mut range: Option<(Rat, Rat)> = None;
        for t in joint_product(&types)? {
            for b in joint_product(&actions)? {
                let values = table.get(&t, &b)?;
                for v in values {
                    range = Some(match range.take() {
                        None => (v.clone(), v.clone()),
                        Some((lo, hi)) => {
                            (if *v < lo { v.clone() } else { lo }, if *v > hi { v.clone() } else { hi })
                        }
                    });
                }
            }
        }
        let range = range.expect("nonempty spaces imply at least one value");
        Ok(BayesianGame {
            name: name.into(),
            players,
            actions,
            types,
            dist: TypeDist::explicit(dist)?,
            utility: UtilityFn::Table(table),
            range,
            meta: None,
        })
    }

    /// Builds a game from parts; used for sampler-mode games with built-in
    /// utility rules whose spaces are too large to enumerate.
    pub fn from_parts(
        name: impl Into<String>,
        actions: Vec<Space>,
        types: Vec<Space>,
        dist: TypeDist,
        utility: UtilityFn,
        range: (Rat, Rat),
        meta: Option<GameSequenceMeta>,
    ) -> Result<Self> {
        let players = actions.len();
        if players == 0 || types.len() != players {
            return Err(Error::Argument(
                "need matching, nonempty action and type space lists".into(),
            ));
        }
        for s in actions.iter().chain(types.iter()) {
            s.validate()?;
        }
        if range.0 > range.1 {
            return Err(Error::Argument("utility range lower bound above upper".into()));
        }
        if let Some(m) = &meta {
            m.validate()?;
        }
        Ok(BayesianGame {
            name: name.into(),
            players,
            actions,
            types,
            dist,
            utility,
            range,
            meta,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_players(&self) -> usize {
        self.players
    }

    pub fn action_space(&self, player: usize) -> &Space {
        &self.actions[player]
    }

    pub fn type_space(&self, player: usize) -> &Space {
        &self.types[player]
    }

    pub fn type_dist(&self) -> &TypeDist {
        &self.dist
    }

    pub fn utility_fn(&self) -> &UtilityFn {
        &self.utility
    }

    pub fn meta(&self) -> Option<&GameSequenceMeta> {
        self.meta.as_ref()
    }

    /// `(min, max)` bounds on utility values across all outcomes.
    pub fn utility_range(&self) -> (&Rat, &Rat) {
        (&self.range.0, &self.range.1)
    }

    /// Evaluates the per-player utilities at a joint type and joint action.
    pub fn utility(&self, types: &[BitString], actions: &[BitString]) -> Result<Vec<Rat>> {
        if types.len() != self.players || actions.len() != self.players {
            return Err(Error::Argument(
                "joint type/action length must equal the player count".into(),
            ));
        }
        match &self.utility {
            UtilityFn::Table(t) => Ok(t.get(types, actions)?.to_vec()),
            UtilityFn::Builtin { f, .. } => {
                let values = f(types, actions)?;
                if values.len() != self.players {
                    return Err(Error::Domain(
                        "builtin utility returned wrong player count".into(),
                    ));
                }
                Ok(values)
            }
        }
    }

    /// Draws a joint type from the distribution.
    pub fn sample_types(&self, rng: &mut ChaCha20Rng) -> Result<Vec<BitString>> {
        match &self.dist {
            TypeDist::Explicit(d) => Ok(d.sample(rng).to_vec()),
            TypeDist::Sampler(s) => {
                let joint = s.sample(rng)?;
                if joint.len() != self.players {
                    return Err(Error::Domain("sampler returned wrong player count".into()));
                }
                Ok(joint)
            }
        }
    }

    /// Exact expected utility of every player under a mixed-strategy profile.
    ///
    /// Requires an explicit type distribution; every strategy must cover each
    /// type its player can be dealt, with support inside the action space.
    pub fn expected_utility(&self, profile: &[MixedStrategy]) -> Result<Vec<Rat>> {
        let dist = self.explicit_dist_or_err()?;
        if profile.len() != self.players {
            return Err(Error::Argument(format!(
                "profile has {} strategies for {} players",
                profile.len(),
                self.players
            )));
        }
        for (p, strat) in profile.iter().enumerate() {
            self.validate_strategy(p, strat)?;
        }
        let mut totals = vec![Rat::zero(); self.players];
        for (joint_t, p_t) in dist.entries() {
            if p_t.is_zero() {
                continue;
            }
            let supports: Vec<&[(BitString, Rat)]> = profile
                .iter()
                .enumerate()
                .map(|(p, s)| {
                    s.action_dist(&joint_t[p])
                        .expect("validated: strategy covers every dealt type")
                })
                .collect();
            let mut choice = vec![0usize; self.players];
            loop {
                let mut weight = p_t.clone();
                for (p, &support) in supports.iter().enumerate() {
                    weight *= support[choice[p]].1.clone();
                }
                if !weight.is_zero() {
                    let actions: Vec<BitString> = supports
                        .iter()
                        .enumerate()
                        .map(|(p, s)| s[choice[p]].0.clone())
                        .collect();
                    let values = self.utility(joint_t, &actions)?;
                    for (acc, v) in totals.iter_mut().zip(values) {
                        *acc += weight.clone() * v;
                    }
                }
                // Advance the mixed-radix counter over supports.
                let mut p = 0;
                loop {
                    if p == self.players {
                        break;
                    }
                    choice[p] += 1;
                    if choice[p] < supports[p].len() {
                        break;
                    }
                    choice[p] = 0;
                    p += 1;
                }
                if p == self.players {
                    break;
                }
            }
        }
        Ok(totals)
    }

    /// Monte Carlo estimate of expected utility for strategies that may not
    /// admit exact evaluation. Returns a per-player sample mean and a 99%
    /// Hoeffding half-width scaled by the game's utility range.
    pub fn estimate_utility(
        &self,
        profile: &[&dyn Strategy],
        samples: u32,
        seed: u64,
    ) -> Result<Vec<Estimate>> {
        estimate::estimate_utility(self, profile, samples, seed)
    }

    /// Checks whether no listed deviation improves any player's exact
    /// expected utility by more than `epsilon`; otherwise returns a
    /// maximal-gain witness (ties: lowest player index, then list order).
    pub fn is_epsilon_ne(
        &self,
        profile: &[MixedStrategy],
        epsilon: &Rat,
        deviations: &[Vec<MixedStrategy>],
    ) -> Result<(bool, Option<NeWitness>)> {
        if epsilon < &Rat::zero() {
            return Err(Error::Argument("epsilon must be nonnegative".into()));
        }
        if deviations.len() != self.players {
            return Err(Error::Argument(
                "need one deviation list per player".into(),
            ));
        }
        let base = self.expected_utility(profile)?;
        let mut witness: Option<NeWitness> = None;
        for (player, devs) in deviations.iter().enumerate() {
            for (d_idx, dev) in devs.iter().enumerate() {
                let mut alt: Vec<MixedStrategy> = profile.to_vec();
                alt[player] = dev.clone();
                let values = self.expected_utility(&alt)?;
                let gain = values[player].clone() - base[player].clone();
                let better = match &witness {
                    None => true,
                    Some(w) => gain > w.gain,
                };
                if better {
                    witness = Some(NeWitness {
                        player,
                        deviation: d_idx,
                        gain,
                    });
                }
            }
        }
        match witness {
            Some(w) if w.gain > *epsilon => Ok((false, Some(w))),
            _ => Ok((true, None)),
        }
    }

    /// True iff every nonzero utility value has absolute value in
    /// `[lower, upper]`, enumerating the full explicit outcome space.
    pub fn check_bounded(&self, lower: &Rat, upper: &Rat) -> Result<bool> {
        if !lower.is_positive() || lower > upper {
            return Err(Error::Argument(format!(
                "need 0 < lower <= upper, got [{lower}, {upper}]"
            )));
        }
        let joint_types = joint_product(&self.types)
            .map_err(|_| Error::UnsupportedMode("check_bounded needs explicit type spaces".into()))?;
        let joint_actions = joint_product(&self.actions)
            .map_err(|_| Error::UnsupportedMode("check_bounded needs explicit action spaces".into()))?;
        for t in &joint_types {
            for b in &joint_actions {
                for v in self.utility(t, b)? {
                    if !v.is_zero() {
                        let mag = v.abs();
                        if mag < *lower || mag > *upper {
                            return Ok(false);
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    fn explicit_dist_or_err(&self) -> Result<&ExplicitDist> {
        self.dist.as_explicit().ok_or_else(|| {
            Error::UnsupportedMode(
                "exact computation needs an explicit type distribution; use estimate_utility"
                    .into(),
            )
        })
    }

    /// Strategy must cover every type the distribution can deal this player
    /// and must mix only over actions in the player's space.
    fn validate_strategy(&self, player: usize, strategy: &MixedStrategy) -> Result<()> {
        if let Some(dist) = self.dist.as_explicit() {
            for (joint_t, _) in dist.entries() {
                if strategy.action_dist(&joint_t[player]).is_none() {
                    return Err(Error::Domain(format!(
                        "strategy for player {player} missing type \"{}\"",
                        joint_t[player]
                    )));
                }
            }
        }
        for (_ty, row) in strategy.rows() {
            for (action, _) in row {
                if !self.actions[player].contains(action) {
                    return Err(Error::Domain(format!(
                        "strategy for player {player} mixes over \"{action}\" outside the action space"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_joint(joint: &[BitString], spaces: &[Space], what: &str) -> Result<()> {
    if joint.len() != spaces.len() {
        return Err(Error::Argument(format!(
            "joint {what} has {} entries for {} players",
            joint.len(),
            spaces.len()
        )));
    }
    for (i, item) in joint.iter().enumerate() {
        if !spaces[i].contains(item) {
            return Err(Error::Argument(format!(
                "{what} \"{item}\" outside player {i}'s space"
            )));
        }
    }
    Ok(())
}

/// Cartesian product of explicit spaces; errors if any space is implicit.
fn joint_product(spaces: &[Space]) -> Result<Vec<Vec<BitString>>> {
    let lists: Vec<&[BitString]> = spaces
        .iter()
        .map(|s| {
            s.explicit()
                .ok_or_else(|| Error::UnsupportedMode("space is not explicit".into()))
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<Vec<BitString>> = vec![Vec::new()];
    for list in lists {
        let mut next = Vec::with_capacity(out.len() * list.len());
        for prefix in &out {
            for item in list {
                let mut row = prefix.clone();
                row.push(item.clone());
                next.push(row);
            }
        }
        out = next;
    }
    Ok(out)
}

/// The 2-player matching-pennies game in normal form (singleton types):
/// player 1 wins on equal bits, player 2 on unequal.
pub fn matching_pennies() -> BayesianGame {
    let zero: BitString = "0".parse().unwrap();
    let one: BitString = "1".parse().unwrap();
    let e = BitString::empty();
    let mut utilities = Vec::new();
    for a in [&zero, &one] {
        for b in [&zero, &one] {
            let (va, vb) = if a == b {
                (rat_int(1), rat_int(-1))
            } else {
                (rat_int(-1), rat_int(1))
            };
            utilities.push((
                vec![e.clone(), e.clone()],
                vec![a.clone(), b.clone()],
                vec![va, vb],
            ));
        }
    }
    BayesianGame::from_tables(
        "matching_pennies",
        vec![vec![zero.clone(), one.clone()], vec![zero, one]],
        vec![vec![e.clone()], vec![e.clone()]],
        vec![(vec![e.clone(), e], rat_int(1))],
        utilities,
    )
    .expect("matching pennies is well formed")
}

#[cfg(test)]
mod tests;
