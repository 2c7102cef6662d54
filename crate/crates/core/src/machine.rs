//! Step-counted strategy machines.
//!
//! Machines here have a deliberately small instruction set: hardwire a bit,
//! sample a (possibly biased) random bit, print a character, halt. Every
//! instruction carries a step cost from a [`StepCostTable`], and execution
//! fails if the machine's step budget would be exceeded. The asymmetry that
//! matters for the pennies game is that a hardwired output bit costs one step
//! while a sampled output bit costs a sampling step plus an output step.

use std::collections::BTreeMap;

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rat::{self, Rat};

/// Default cap on the number of sampling instructions when computing an exact
/// output distribution (2^cap branches).
pub const DEFAULT_SAMPLE_CAP: usize = 20;

/// Step costs per instruction kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCostTable {
    pub emit_hardwired_bit: u64,
    pub sample_random_bit: u64,
    pub print_char: u64,
    pub halt: u64,
}

impl Default for StepCostTable {
    fn default() -> Self {
        StepCostTable {
            emit_hardwired_bit: 1,
            sample_random_bit: 1,
            print_char: 1,
            halt: 0,
        }
    }
}

impl StepCostTable {
    /// Default table with the sampling cost replaced (`0` gives the
    /// free-randomness counterfactual).
    pub fn with_sample_cost(sample_cost: u64) -> Self {
        StepCostTable {
            sample_random_bit: sample_cost,
            ..StepCostTable::default()
        }
    }
}

/// A single machine instruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Instr {
    /// Output a hardwired bit (one output symbol).
    Emit(bool),
    /// Draw a random bit with the given bias toward 1, then output it.
    Sample(#[serde(with = "rat::pq")] Rat),
    /// Print one character (encoded as a 1 bit in the output).
    Print,
    /// Stop; later instructions are unreachable.
    Halt,
}

/// Dyadic bias `a / 2^d` in lowest terms with `d <= 32`.
///
/// Dyadic biases let biased draws consume a fixed number of uniform tape bits,
/// so replaying a machine over all tapes reproduces its exact distribution.
fn dyadic_chunk(bias: &Rat) -> Result<(u64, u32)> {
    if bias < &Rat::zero() || bias > &Rat::one() {
        return Err(Error::Argument(format!("bias {bias} outside [0, 1]")));
    }
    let denom = bias.denom();
    let mut d = 0u32;
    let mut q = denom.clone();
    let two = num::BigInt::from(2);
    while q > num::BigInt::one() {
        if &q % &two != num::BigInt::zero() || d >= 32 {
            return Err(Error::Argument(format!(
                "bias {bias} is not dyadic with denominator <= 2^32"
            )));
        }
        q /= &two;
        d += 1;
    }
    let numer: u64 = bias
        .numer()
        .try_into()
        .map_err(|_| Error::Argument(format!("bias {bias} numerator out of range")))?;
    Ok((numer, d))
}

/// A step-budgeted program mapping randomness to an output bit string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyMachine {
    program: Vec<Instr>,
    budget: u64,
    label: String,
}

impl StrategyMachine {
    /// Validates biases (in `[0,1]`, dyadic) and wraps the program.
    pub fn new(program: Vec<Instr>, budget: u64, label: impl Into<String>) -> Result<Self> {
        for instr in &program {
            if let Instr::Sample(bias) = instr {
                dyadic_chunk(bias)?;
            }
        }
        Ok(StrategyMachine {
            program,
            budget,
            label: label.into(),
        })
    }

    pub fn program(&self) -> &[Instr] {
        &self.program
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Program length; the closest thing to a "machine size" in this model.
    pub fn size(&self) -> usize {
        self.program.len()
    }

    /// Instructions actually reachable (up to and excluding the first halt).
    fn reachable(&self) -> &[Instr] {
        let cut = self
            .program
            .iter()
            .position(|i| matches!(i, Instr::Halt))
            .unwrap_or(self.program.len());
        &self.program[..cut]
    }

    /// Number of sampling instructions that can execute.
    pub fn sample_count(&self) -> usize {
        self.reachable()
            .iter()
            .filter(|i| matches!(i, Instr::Sample(_)))
            .count()
    }

    /// Tape bits required to replay every reachable sampling instruction.
    pub fn required_tape_bits(&self) -> usize {
        self.reachable()
            .iter()
            .map(|i| match i {
                Instr::Sample(b) => dyadic_chunk(b).expect("validated at construction").1 as usize,
                _ => 0,
            })
            .sum()
    }
}

/// Exact output law of a machine: bit string to positive rational probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDistribution {
    entries: Vec<(BitString, #[serde(with = "rat::pq")] Rat)>,
}

impl OutputDistribution {
    /// Aggregates weighted outputs, dropping zero-probability branches; the
    /// total weight must be exactly 1.
    pub fn from_weighted<I: IntoIterator<Item = (BitString, Rat)>>(items: I) -> Result<Self> {
        let mut map: BTreeMap<BitString, Rat> = BTreeMap::new();
        for (bs, w) in items {
            if w < Rat::zero() {
                return Err(Error::Domain(format!("negative branch weight {w}")));
            }
            if w.is_zero() {
                continue;
            }
            *map.entry(bs).or_insert_with(Rat::zero) += w;
        }
        let total: Rat = map.values().cloned().sum();
        if !total.is_one() {
            return Err(Error::Domain(format!(
                "output distribution sums to {total}, expected 1"
            )));
        }
        Ok(OutputDistribution {
            entries: map.into_iter().collect(),
        })
    }

    pub fn entries(&self) -> &[(BitString, Rat)] {
        &self.entries
    }

    pub fn probability(&self, output: &BitString) -> Rat {
        self.entries
            .iter()
            .find(|(bs, _)| bs == output)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rat::zero)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Replays `machine` on an explicit random tape.
///
/// Each sampling instruction with bias `a/2^d` consumes `d` tape bits
/// MSB-first and yields 1 exactly when the consumed value is `>= 2^d - a`, so
/// a uniform tape realizes the bias and, for `d = 1`, the sampled bit equals
/// the tape bit. Returns the output and the exact steps consumed.
pub fn run_machine(
    machine: &StrategyMachine,
    costs: &StepCostTable,
    tape: &BitString,
) -> Result<(BitString, u64)> {
    let mut output = BitString::new(machine.program.len());
    let mut steps = 0u64;
    let mut tape_pos = 0usize;
    for (index, instr) in machine.program.iter().enumerate() {
        let cost = match instr {
            Instr::Emit(_) => costs.emit_hardwired_bit,
            Instr::Sample(_) => costs.sample_random_bit + costs.emit_hardwired_bit,
            Instr::Print => costs.print_char,
            Instr::Halt => costs.halt,
        };
        if steps + cost > machine.budget {
            return Err(Error::BudgetExhausted {
                instruction: index,
                steps_used: steps,
                cost,
                budget: machine.budget,
            });
        }
        steps += cost;
        match instr {
            Instr::Emit(b) => output.push(*b)?,
            Instr::Sample(bias) => {
                let (a, d) = dyadic_chunk(bias).expect("validated at construction");
                if tape_pos + d as usize > tape.len() {
                    return Err(Error::Argument(format!(
                        "random tape underrun: need {} bits, have {}",
                        tape_pos + d as usize,
                        tape.len()
                    )));
                }
                let mut v = 0u64;
                for _ in 0..d {
                    v = (v << 1) | u64::from(tape.bit(tape_pos));
                    tape_pos += 1;
                }
                let threshold = (1u64 << d) - a;
                output.push(v >= threshold)?;
            }
            Instr::Print => output.push(true)?,
            Instr::Halt => return Ok((output, steps)),
        }
    }
    Ok((output, steps))
}

/// Exact output law by enumerating every sampling branch.
///
/// Branches are weighted by the product of their bias terms; identical outputs
/// are aggregated and zero-probability branches dropped.
pub fn machine_distribution(
    machine: &StrategyMachine,
    costs: &StepCostTable,
) -> Result<OutputDistribution> {
    machine_distribution_with_cap(machine, costs, DEFAULT_SAMPLE_CAP)
}

/// As [`machine_distribution`], with an explicit cap on sampling instructions.
pub fn machine_distribution_with_cap(
    machine: &StrategyMachine,
    costs: &StepCostTable,
    sample_cap: usize,
) -> Result<OutputDistribution> {
    let samples = machine.sample_count();
    if samples > sample_cap {
        return Err(Error::UnsupportedMode(format!(
            "machine has {samples} sampling instructions, cap is {sample_cap}"
        )));
    }
    let mut outcomes = Vec::new();
    for branch in 0u64..(1u64 << samples) {
        let mut weight = Rat::one();
        let mut output = BitString::new(machine.program.len());
        let mut steps = 0u64;
        let mut sample_idx = 0u32;
        let mut halted = false;
        for (index, instr) in machine.program.iter().enumerate() {
            let cost = match instr {
                Instr::Emit(_) => costs.emit_hardwired_bit,
                Instr::Sample(_) => costs.sample_random_bit + costs.emit_hardwired_bit,
                Instr::Print => costs.print_char,
                Instr::Halt => costs.halt,
            };
            if steps + cost > machine.budget {
                return Err(Error::BudgetExhausted {
                    instruction: index,
                    steps_used: steps,
                    cost,
                    budget: machine.budget,
                });
            }
            steps += cost;
            match instr {
                Instr::Emit(b) => output.push(*b)?,
                Instr::Sample(bias) => {
                    let bit = (branch >> sample_idx) & 1 == 1;
                    sample_idx += 1;
                    weight *= if bit {
                        bias.clone()
                    } else {
                        Rat::one() - bias.clone()
                    };
                    output.push(bit)?;
                }
                Instr::Print => output.push(true)?,
                Instr::Halt => {
                    halted = true;
                    break;
                }
            }
        }
        let _ = halted;
        outcomes.push((output, weight));
    }
    OutputDistribution::from_weighted(outcomes)
}

/// Enumerates the canonical machine family for the pennies game: one opening
/// move (hardwired or sampled bit) followed by as many prints as the budget
/// allows, for every affordable print count.
///
/// The list is duplicate-free and deterministic: hardwired bits first, then
/// the given biases in order, each with print counts `0..=max`.
pub fn enumerate_machines(
    budget: u64,
    biases: &[Rat],
    costs: &StepCostTable,
) -> Result<Vec<StrategyMachine>> {
    if budget < 1 {
        return Err(Error::Argument("machine budget must be >= 1".to_string()));
    }
    if costs.print_char == 0 {
        return Err(Error::Argument(
            "zero print cost makes the machine family infinite".to_string(),
        ));
    }
    let mut openings: Vec<(Instr, String)> = vec![
        (Instr::Emit(false), "emit0".to_string()),
        (Instr::Emit(true), "emit1".to_string()),
    ];
    let mut seen = Vec::new();
    for bias in biases {
        dyadic_chunk(bias)?;
        if seen.contains(bias) {
            continue;
        }
        seen.push(bias.clone());
        openings.push((Instr::Sample(bias.clone()), format!("sample({bias})")));
    }
    let mut machines = Vec::new();
    for (opening, name) in openings {
        let open_cost = match &opening {
            Instr::Emit(_) => costs.emit_hardwired_bit,
            Instr::Sample(_) => costs.sample_random_bit + costs.emit_hardwired_bit,
            _ => unreachable!(),
        };
        if open_cost > budget {
            continue;
        }
        let max_prints = (budget - open_cost) / costs.print_char;
        for prints in 0..=max_prints {
            let mut program = vec![opening.clone()];
            program.extend(std::iter::repeat(Instr::Print).take(prints as usize));
            machines.push(StrategyMachine::new(
                program,
                budget,
                format!("{name}+{prints}p"),
            )?);
        }
    }
    Ok(machines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn emit_print_print_costs_three_steps() {
        let m = StrategyMachine::new(
            vec![Instr::Emit(false), Instr::Print, Instr::Print],
            3,
            "emit0+2p",
        )
        .unwrap();
        let (out, steps) = run_machine(&m, &StepCostTable::default(), &BitString::empty()).unwrap();
        assert_eq!(out, bs("011"));
        assert_eq!(steps, 3);
    }

    #[test]
    fn sample_then_print_consumes_tape_and_two_plus_one_steps() {
        let m = StrategyMachine::new(vec![Instr::Sample(rat(1, 2)), Instr::Print], 3, "s+1p")
            .unwrap();
        let (out, steps) = run_machine(&m, &StepCostTable::default(), &bs("1")).unwrap();
        assert!(out.bit(0));
        assert_eq!(out, bs("11"));
        assert_eq!(steps, 3);
        let (out0, _) = run_machine(&m, &StepCostTable::default(), &bs("0")).unwrap();
        assert_eq!(out0, bs("01"));
    }

    #[test]
    fn zero_budget_exhausts_immediately() {
        let m = StrategyMachine::new(vec![Instr::Emit(false)], 0, "broke").unwrap();
        match run_machine(&m, &StepCostTable::default(), &BitString::empty()) {
            Err(Error::BudgetExhausted { instruction: 0, .. }) => {}
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn tape_underrun_is_an_argument_error() {
        let m = StrategyMachine::new(vec![Instr::Sample(rat(1, 4))], 4, "s").unwrap();
        // Bias 1/4 consumes two tape bits.
        assert!(matches!(
            run_machine(&m, &StepCostTable::default(), &bs("1")),
            Err(Error::Argument(_))
        ));
        let (out, _) = run_machine(&m, &StepCostTable::default(), &bs("11")).unwrap();
        assert_eq!(out, bs("1"));
        let (out, _) = run_machine(&m, &StepCostTable::default(), &bs("10")).unwrap();
        assert_eq!(out, bs("0"));
    }

    #[test]
    fn halt_stops_execution() {
        let m = StrategyMachine::new(vec![Instr::Emit(true), Instr::Halt, Instr::Print], 5, "h")
            .unwrap();
        let (out, steps) = run_machine(&m, &StepCostTable::default(), &BitString::empty()).unwrap();
        assert_eq!(out, bs("1"));
        assert_eq!(steps, 1);
    }

    #[test]
    fn deterministic_machine_has_point_mass_distribution() {
        let m = StrategyMachine::new(vec![Instr::Emit(true), Instr::Print], 2, "d").unwrap();
        let dist = machine_distribution(&m, &StepCostTable::default()).unwrap();
        assert_eq!(dist.entries(), &[(bs("11"), rat_int(1))]);
    }

    #[test]
    fn fair_coin_distribution() {
        let m = StrategyMachine::new(vec![Instr::Sample(rat(1, 2))], 2, "coin").unwrap();
        let dist = machine_distribution(&m, &StepCostTable::default()).unwrap();
        assert_eq!(
            dist.entries(),
            &[(bs("0"), rat(1, 2)), (bs("1"), rat(1, 2))]
        );
    }

    #[test]
    fn quarter_bias_distribution_and_replay_agree() {
        let m = StrategyMachine::new(vec![Instr::Sample(rat(1, 4)), Instr::Print], 3, "q")
            .unwrap();
        let dist = machine_distribution(&m, &StepCostTable::default()).unwrap();
        assert_eq!(dist.probability(&bs("11")), rat(1, 4));
        assert_eq!(dist.probability(&bs("01")), rat(3, 4));

        // Monte Carlo cross-check with uniform tapes.
        let mut ones = 0u32;
        let trials = 10_000u32;
        let mut rng = crate::seeding::substream(11, 0, 0);
        use rand::Rng;
        for _ in 0..trials {
            let tape = BitString::from_bits([rng.gen::<bool>(), rng.gen::<bool>()]);
            let (out, _) = run_machine(&m, &StepCostTable::default(), &tape).unwrap();
            if out.bit(0) {
                ones += 1;
            }
        }
        let freq = f64::from(ones) / f64::from(trials);
        assert!((freq - 0.25).abs() < 0.02, "empirical frequency {freq}");
    }

    #[test]
    fn degenerate_bias_matches_emit_but_costs_more() {
        let costs = StepCostTable::default();
        for (bias, bit) in [(rat_int(0), false), (rat_int(1), true)] {
            let sampler =
                StrategyMachine::new(vec![Instr::Sample(bias), Instr::Print], 3, "s").unwrap();
            let emitter =
                StrategyMachine::new(vec![Instr::Emit(bit), Instr::Print], 3, "e").unwrap();
            assert_eq!(
                machine_distribution(&sampler, &costs).unwrap(),
                machine_distribution(&emitter, &costs).unwrap()
            );
            let (_, s_steps) = run_machine(&sampler, &costs, &BitString::empty()).unwrap();
            let (_, e_steps) = run_machine(&emitter, &costs, &BitString::empty()).unwrap();
            assert!(s_steps > e_steps);
        }
    }

    #[test]
    fn non_dyadic_bias_rejected() {
        assert!(StrategyMachine::new(vec![Instr::Sample(rat(1, 3))], 2, "bad").is_err());
    }

    #[test]
    fn enumeration_counts_match_cost_arithmetic() {
        let costs = StepCostTable::default();
        let fam = enumerate_machines(3, &[rat(1, 2)], &costs).unwrap();
        assert_eq!(fam.len(), 8);

        let fam = enumerate_machines(1, &[], &costs).unwrap();
        let labels: Vec<&str> = fam.iter().map(|m| m.label()).collect();
        assert_eq!(labels, ["emit0+0p", "emit1+0p"]);

        let fam = enumerate_machines(3, &[rat_int(0), rat(1, 2), rat_int(1)], &costs).unwrap();
        assert_eq!(fam.len(), 12);
    }

    #[test]
    fn enumerated_machines_are_distinct() {
        let fam =
            enumerate_machines(4, &[rat(1, 2), rat(1, 2), rat(1, 4)], &StepCostTable::default())
                .unwrap();
        for (i, a) in fam.iter().enumerate() {
            for b in fam.iter().skip(i + 1) {
                assert!(a.program() != b.program(), "duplicate machine {}", a.label());
            }
        }
    }

    #[test]
    fn machine_json_round_trip() {
        let m = StrategyMachine::new(
            vec![Instr::Sample(rat(3, 4)), Instr::Print, Instr::Halt],
            5,
            "demo",
        )
        .unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: StrategyMachine = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
    }
}
