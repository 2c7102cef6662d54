//! The matching-pennies-with-printing machine game.
//!
//! Two step-budgeted machines each output an opening bit and then print as
//! many characters as their remaining budget allows. Phase 1 is matching
//! pennies on the opening bits (+1 to A on a match, +1 to B otherwise);
//! phase 2 pays a +-1 bonus to the player that printed strictly more
//! characters. Outputs encode as the opening bit followed by one 1-bit per
//! printed character, so an outcome is recoverable as (first bit, remaining
//! length).

use num::Zero;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::game::{BayesianGame, MixedStrategy};
use crate::machine::{
    enumerate_machines, machine_distribution, StepCostTable, StrategyMachine,
};
use crate::rat::{rat_int, Rat};

/// A fully resolved outcome of one play of the game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PenniesOutcome {
    pub a_bit: bool,
    pub b_bit: bool,
    pub chars_a: u64,
    pub chars_b: u64,
}

/// The machine game: budget, step costs, and the bias grid that defines the
/// enumerated machine family.
#[derive(Debug, Clone)]
pub struct PenniesGame {
    t_budget: u64,
    costs: StepCostTable,
    biases: Vec<Rat>,
}

/// Builds the game; the printing contest needs `T > 2` to leave room for a
/// phase-2 move after either kind of opening.
pub fn build_pennies_game(
    t_budget: u64,
    costs: StepCostTable,
    biases: Vec<Rat>,
) -> Result<PenniesGame> {
    if t_budget <= 2 {
        return Err(Error::Argument(format!(
            "step budget must exceed 2, got {t_budget}"
        )));
    }
    if costs.emit_hardwired_bit == 0 || costs.print_char == 0 {
        return Err(Error::Argument(
            "emit and print must cost at least one step".into(),
        ));
    }
    Ok(PenniesGame {
        t_budget,
        costs,
        biases,
    })
}

impl PenniesGame {
    pub fn t_budget(&self) -> u64 {
        self.t_budget
    }

    pub fn costs(&self) -> &StepCostTable {
        &self.costs
    }

    pub fn biases(&self) -> &[Rat] {
        &self.biases
    }

    /// The canonical machine family for this budget and bias grid.
    pub fn family(&self) -> Result<Vec<StrategyMachine>> {
        enumerate_machines(self.t_budget, &self.biases, &self.costs)
    }

    /// Decodes a machine output into `(opening bit, printed characters)`.
    pub fn decode_output(&self, output: &BitString) -> Result<(bool, u64)> {
        if output.is_empty() {
            return Err(Error::Domain(
                "machine printed nothing: no opening bit to play".into(),
            ));
        }
        let chars = (output.len() - 1) as u64;
        let max_chars = (self.t_budget - self.costs.emit_hardwired_bit) / self.costs.print_char;
        if chars > max_chars {
            return Err(Error::Domain(format!(
                "output claims {chars} printed characters, budget allows {max_chars}"
            )));
        }
        Ok((output.bit(0), chars))
    }

    /// The two payoff rules summed: pennies on the bits, bonus on the counts.
    pub fn outcome_payoff(&self, outcome: &PenniesOutcome) -> (Rat, Rat) {
        let pennies = if outcome.a_bit == outcome.b_bit {
            rat_int(1)
        } else {
            rat_int(-1)
        };
        let bonus = match outcome.chars_a.cmp(&outcome.chars_b) {
            std::cmp::Ordering::Greater => rat_int(1),
            std::cmp::Ordering::Equal => rat_int(0),
            std::cmp::Ordering::Less => rat_int(-1),
        };
        let v1 = pennies + bonus;
        (v1.clone(), -v1)
    }

    /// Exact expected payoffs of a machine profile, from the machines' exact
    /// output distributions.
    pub fn machine_payoff(
        &self,
        machine_a: &StrategyMachine,
        machine_b: &StrategyMachine,
    ) -> Result<(Rat, Rat)> {
        let dist_a = machine_distribution(machine_a, &self.costs)?;
        let dist_b = machine_distribution(machine_b, &self.costs)?;
        let mut v1 = Rat::zero();
        for (out_a, p_a) in dist_a.entries() {
            let (a_bit, chars_a) = self.decode_output(out_a)?;
            for (out_b, p_b) in dist_b.entries() {
                let (b_bit, chars_b) = self.decode_output(out_b)?;
                let (pay, _) = self.outcome_payoff(&PenniesOutcome {
                    a_bit,
                    b_bit,
                    chars_a,
                    chars_b,
                });
                v1 += p_a.clone() * p_b.clone() * pay;
            }
        }
        Ok((v1.clone(), -v1))
    }

    /// Every encodable output: each opening bit followed by `0..=max` ones.
    pub fn action_space(&self) -> Vec<BitString> {
        let max_chars = (self.t_budget - self.costs.emit_hardwired_bit) / self.costs.print_char;
        let mut actions = Vec::new();
        for chars in 0..=max_chars {
            for bit in [false, true] {
                let mut bs = BitString::new(1 + chars as usize);
                bs.push(bit).expect("capacity");
                for _ in 0..chars {
                    bs.push(true).expect("capacity");
                }
                actions.push(bs);
            }
        }
        actions
    }

    /// A machine's induced mixed strategy over the encoded output space.
    pub fn machine_strategy(&self, machine: &StrategyMachine) -> Result<MixedStrategy> {
        let dist = machine_distribution(machine, &self.costs)?;
        MixedStrategy::from_table(vec![(
            BitString::empty(),
            dist.entries().to_vec(),
        )])
    }

    /// Flattens the game into an explicit normal-form table over encoded
    /// outputs (singleton types), for exact cross-checks against the
    /// machine-level computation.
    pub fn as_bayesian(&self) -> Result<BayesianGame> {
        let actions = self.action_space();
        let e = BitString::empty();
        let mut utilities = Vec::with_capacity(actions.len() * actions.len());
        for a in &actions {
            let (a_bit, chars_a) = self.decode_output(a)?;
            for b in &actions {
                let (b_bit, chars_b) = self.decode_output(b)?;
                let (v1, v2) = self.outcome_payoff(&PenniesOutcome {
                    a_bit,
                    b_bit,
                    chars_a,
                    chars_b,
                });
                utilities.push((
                    vec![e.clone(), e.clone()],
                    vec![a.clone(), b.clone()],
                    vec![v1, v2],
                ));
            }
        }
        BayesianGame::from_tables(
            format!("pennies-normal-form(T={})", self.t_budget),
            vec![actions.clone(), actions],
            vec![vec![e.clone()], vec![e.clone()]],
            vec![(vec![e.clone(), e], rat_int(1))],
            utilities,
        )
    }
}
