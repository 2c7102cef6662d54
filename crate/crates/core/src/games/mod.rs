//! The lab's concrete games: the one-way-function inversion-race game, its
//! single-puzzle variant, and the matching-pennies-with-printing machine game.

mod owf_game;
mod pennies;
mod puzzle;

pub use owf_game::{
    build_owf_game, build_owf_game_fixed_type, build_single_puzzle_game, owf_game_meta,
    PuzzleSampler,
};
pub use pennies::{build_pennies_game, PenniesGame, PenniesOutcome};
pub use puzzle::{
    ceil_log2, count_hits, owf_payoff, OwfGameAction, PuzzleEntrySpec, PuzzleLayout, PuzzleTuple,
};
