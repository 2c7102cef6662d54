//! Exhaustive equilibrium verification over finite machine families.
//!
//! For every profile of machines drawn from a family, the verifier computes
//! exact expected payoffs and asks whether some unilateral in-family
//! replacement gains strictly more than epsilon. Everything is exact rational
//! arithmetic; reports are deterministic and serializable.

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::PenniesGame;
use crate::machine::StrategyMachine;
use crate::rat::{self, Rat};

/// A two-player game whose pure strategies are machines.
pub trait MachineGame: Send + Sync {
    /// Exact expected payoffs of the profile `(a, b)`.
    fn payoffs(&self, a: &StrategyMachine, b: &StrategyMachine) -> Result<(Rat, Rat)>;
}

impl MachineGame for PenniesGame {
    fn payoffs(&self, a: &StrategyMachine, b: &StrategyMachine) -> Result<(Rat, Rat)> {
        self.machine_payoff(a, b)
    }
}

/// Player labels for 2-player machine games.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlayerRole {
    A,
    B,
}

/// A profitable unilateral replacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationWitness {
    pub player: PlayerRole,
    /// Index of the replacement machine in the family.
    pub deviation: usize,
    pub deviation_label: String,
    #[serde(with = "rat::pq")]
    pub gain: Rat,
}

/// A profile by family indices `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileRef {
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDeviation {
    pub profile: ProfileRef,
    pub witness: DeviationWitness,
}

/// Outcome of exhaustively classifying every profile of a machine family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeVerificationReport {
    pub schema: String,
    #[serde(with = "rat::pq")]
    pub epsilon: Rat,
    pub family_size: usize,
    pub profiles_checked: usize,
    pub family_labels: Vec<String>,
    /// Profiles with no deviation gaining more than epsilon, in scan order.
    pub equilibria: Vec<ProfileRef>,
    /// A maximal-gain witness for every other profile, in scan order.
    pub deviations: Vec<ProfileDeviation>,
}

pub const REPORT_SCHEMA: &str = "gamelab.ne-report.v1";

/// Maximal-gain deviation for one profile given precomputed payoffs.
/// Ties break toward player A, then the lower family index.
fn best_deviation(
    family: &[StrategyMachine],
    base: (&Rat, &Rat),
    row_a: impl Fn(usize) -> Rat,
    col_b: impl Fn(usize) -> Rat,
) -> Option<DeviationWitness> {
    let mut best: Option<DeviationWitness> = None;
    for (idx, machine) in family.iter().enumerate() {
        let gain = row_a(idx) - base.0.clone();
        if best.as_ref().map_or(true, |w| gain > w.gain) {
            best = Some(DeviationWitness {
                player: PlayerRole::A,
                deviation: idx,
                deviation_label: machine.label().to_string(),
                gain,
            });
        }
    }
    for (idx, machine) in family.iter().enumerate() {
        let gain = col_b(idx) - base.1.clone();
        if best.as_ref().map_or(true, |w| gain > w.gain) {
            best = Some(DeviationWitness {
                player: PlayerRole::B,
                deviation: idx,
                deviation_label: machine.label().to_string(),
                gain,
            });
        }
    }
    best
}

/// Classifies every profile of `family x family` under the exact payoffs of
/// `game`: equilibria (no in-family deviation gains more than `epsilon`) and
/// maximal-gain witnesses for the rest.
pub fn verify_ne_exhaustive(
    game: &dyn MachineGame,
    family: &[StrategyMachine],
    epsilon: &Rat,
) -> Result<NeVerificationReport> {
    if family.is_empty() {
        return Err(Error::Argument("machine family must be nonempty".into()));
    }
    if epsilon < &Rat::zero() {
        return Err(Error::Argument("epsilon must be nonnegative".into()));
    }
    let n = family.len();
    let mut payoff = vec![vec![(Rat::zero(), Rat::zero()); n]; n];
    for i in 0..n {
        for j in 0..n {
            payoff[i][j] = game.payoffs(&family[i], &family[j])?;
        }
    }
    let mut equilibria = Vec::new();
    let mut deviations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let base = (&payoff[i][j].0, &payoff[i][j].1);
            let witness = best_deviation(
                family,
                base,
                |i2| payoff[i2][j].0.clone(),
                |j2| payoff[i][j2].1.clone(),
            )
            .expect("family is nonempty");
            let profile = ProfileRef { a: i, b: j };
            if witness.gain > *epsilon {
                deviations.push(ProfileDeviation { profile, witness });
            } else {
                equilibria.push(profile);
            }
        }
    }
    Ok(NeVerificationReport {
        schema: REPORT_SCHEMA.to_string(),
        epsilon: epsilon.clone(),
        family_size: n,
        profiles_checked: n * n,
        family_labels: family.iter().map(|m| m.label().to_string()).collect(),
        equilibria,
        deviations,
    })
}

/// Single-profile view: is `(a, b)` an epsilon equilibrium against in-family
/// replacements, and if not, what is the maximal-gain witness?
pub fn classify_profile(
    game: &dyn MachineGame,
    profile: (&StrategyMachine, &StrategyMachine),
    family: &[StrategyMachine],
    epsilon: &Rat,
) -> Result<(bool, Option<DeviationWitness>)> {
    if family.is_empty() {
        return Err(Error::Argument("machine family must be nonempty".into()));
    }
    if epsilon < &Rat::zero() {
        return Err(Error::Argument("epsilon must be nonnegative".into()));
    }
    let (a, b) = profile;
    let base = game.payoffs(a, b)?;
    let mut row = Vec::with_capacity(family.len());
    let mut col = Vec::with_capacity(family.len());
    for m in family {
        row.push(game.payoffs(m, b)?.0);
        col.push(game.payoffs(a, m)?.1);
    }
    let witness = best_deviation(
        family,
        (&base.0, &base.1),
        |i| row[i].clone(),
        |j| col[j].clone(),
    )
    .expect("family is nonempty");
    if witness.gain > *epsilon {
        Ok((false, Some(witness)))
    } else {
        Ok((true, None))
    }
}

/// Adapter exchanging the two player roles of a machine game.
pub struct SwappedGame<'a, G: MachineGame + ?Sized>(pub &'a G);

impl<G: MachineGame + ?Sized> MachineGame for SwappedGame<'_, G> {
    fn payoffs(&self, a: &StrategyMachine, b: &StrategyMachine) -> Result<(Rat, Rat)> {
        let (vb, va) = self.0.payoffs(b, a)?;
        Ok((va, vb))
    }
}

use num::Zero;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::build_pennies_game;
    use crate::machine::{Instr, StepCostTable};
    use crate::rat::{rat, rat_int};

    fn default_game(t: u64) -> PenniesGame {
        build_pennies_game(
            t,
            StepCostTable::default(),
            vec![rat_int(0), rat(1, 4), rat(1, 2), rat(3, 4), rat_int(1)],
        )
        .unwrap()
    }

    fn machine(program: Vec<Instr>, budget: u64, label: &str) -> StrategyMachine {
        StrategyMachine::new(program, budget, label).unwrap()
    }

    #[test]
    fn single_machine_family_is_trivially_stable() {
        let game = default_game(3);
        let lone = machine(vec![Instr::Emit(false), Instr::Print, Instr::Print], 3, "m");
        let report = verify_ne_exhaustive(&game, &[lone], &Rat::zero()).unwrap();
        assert_eq!(report.family_size, 1);
        assert_eq!(report.profiles_checked, 1);
        assert_eq!(report.equilibria.len(), 1);
        assert!(report.deviations.is_empty());
    }

    #[test]
    fn opposed_emitters_have_a_gain_two_witness() {
        let game = default_game(3);
        let family = game.family().unwrap();
        let a = machine(vec![Instr::Emit(false), Instr::Print, Instr::Print], 3, "a");
        let b = machine(vec![Instr::Emit(true), Instr::Print, Instr::Print], 3, "b");
        let (ok, witness) = classify_profile(&game, (&a, &b), &family, &rat(9, 10)).unwrap();
        assert!(!ok);
        let w = witness.unwrap();
        assert_eq!(w.player, PlayerRole::A);
        assert_eq!(w.gain, rat_int(2));
        assert_eq!(w.deviation_label, "emit1+2p");
    }

    #[test]
    fn symmetric_fair_coins_lose_to_a_hardwired_printer() {
        let game = default_game(3);
        let family = game.family().unwrap();
        let coin = machine(vec![Instr::Sample(rat(1, 2)), Instr::Print], 3, "coin");
        let (ok, witness) =
            classify_profile(&game, (&coin, &coin), &family, &rat(9, 10)).unwrap();
        assert!(!ok);
        let w = witness.unwrap();
        assert_eq!(w.player, PlayerRole::A);
        assert_eq!(w.gain, rat_int(1));
        assert!(w.deviation_label.starts_with("emit"));
        assert!(w.deviation_label.ends_with("+2p"));
    }

    #[test]
    fn huge_epsilon_stabilizes_everything() {
        let game = default_game(3);
        let family = game.family().unwrap();
        let a = &family[0];
        let (ok, witness) = classify_profile(&game, (a, a), &family, &rat_int(10)).unwrap();
        assert!(ok);
        assert!(witness.is_none());
    }

    #[test]
    fn equilibria_grow_with_epsilon() {
        let game = default_game(3);
        let family = game.family().unwrap();
        let grid = [rat_int(0), rat(1, 2), rat(9, 10), rat_int(1), rat_int(2), rat_int(4)];
        let mut prev: Option<Vec<ProfileRef>> = None;
        for eps in grid {
            let report = verify_ne_exhaustive(&game, &family, &eps).unwrap();
            assert_eq!(report.profiles_checked, family.len() * family.len());
            if let Some(prev) = &prev {
                for p in prev {
                    assert!(report.equilibria.contains(p), "lost equilibrium at {eps}");
                }
            }
            prev = Some(report.equilibria);
        }
        // Gains in this game never exceed 4.
        assert_eq!(prev.unwrap().len(), family.len() * family.len());
    }

    #[test]
    fn witnesses_replay_to_their_reported_gain() {
        let game = default_game(3);
        let family = game.family().unwrap();
        let report = verify_ne_exhaustive(&game, &family, &rat(9, 10)).unwrap();
        for dev in &report.deviations {
            let (i, j) = (dev.profile.a, dev.profile.b);
            let base = game.machine_payoff(&family[i], &family[j]).unwrap();
            let replayed = match dev.witness.player {
                PlayerRole::A => {
                    game.machine_payoff(&family[dev.witness.deviation], &family[j])
                        .unwrap()
                        .0
                        - base.0
                }
                PlayerRole::B => {
                    game.machine_payoff(&family[i], &family[dev.witness.deviation])
                        .unwrap()
                        .1
                        - base.1
                }
            };
            assert_eq!(replayed, dev.witness.gain);
        }
    }

    #[test]
    fn swapped_report_is_the_mirror_image() {
        let game = default_game(3);
        let family = game.family().unwrap();
        let eps = rat(9, 10);
        let report = verify_ne_exhaustive(&game, &family, &eps).unwrap();
        let swapped = verify_ne_exhaustive(&SwappedGame(&game), &family, &eps).unwrap();
        let mirrored: Vec<ProfileRef> = swapped
            .equilibria
            .iter()
            .map(|p| ProfileRef { a: p.b, b: p.a })
            .collect();
        for p in &report.equilibria {
            assert!(mirrored.contains(p));
        }
        assert_eq!(report.equilibria.len(), swapped.equilibria.len());
        // Witness gains at mirrored profiles agree.
        for dev in &report.deviations {
            let mirror = swapped
                .deviations
                .iter()
                .find(|d| d.profile.a == dev.profile.b && d.profile.b == dev.profile.a)
                .expect("mirrored profile is also unstable");
            assert_eq!(mirror.witness.gain, dev.witness.gain);
        }
    }

    #[test]
    fn report_json_round_trip() {
        let game = default_game(3);
        let family = game.family().unwrap();
        let report = verify_ne_exhaustive(&game, &family, &rat(9, 10)).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: NeVerificationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, back);
    }
}
