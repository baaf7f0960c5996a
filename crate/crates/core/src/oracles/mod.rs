//! Exact references: average Bellman errors and their matrices, matrix rank,
//! and the multi-index query game.

mod bellman;
mod indq;

pub use bellman::{
    bellman_error_matrix, exact_avg_bellman_error, matrix_rank, rank_bellman_matrix, BellmanErrorMatrix,
    DEFAULT_RANK_TOL,
};
pub use indq::{
    indq_play, indq_success_by_enumeration, indq_success_probability, rl_to_indq_reduction, FixedSequence,
    IndqGame, IndqOutcome, QueryStrategy, RandomGuess, MAX_ENUMERATION,
};
