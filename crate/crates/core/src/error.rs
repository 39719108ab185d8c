use thiserror::Error;

use crate::model::StateId;

/// Errors raised by the game model and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("state {0} is terminal; a nonterminal state is required")]
    TerminalState(StateId),

    #[error("invalid game: {}", format_violations(.0))]
    InvalidGame(Vec<crate::model::Violation>),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("fictitious play step must be >= 1, got {0}")]
    InvalidStep(usize),

    #[error("non-absorbing chain: (I - P) is singular on states {states:?}")]
    NonAbsorbing { states: Vec<StateId> },

    #[error("policy iteration did not terminate after {0} rounds")]
    PolicyIterationLimit(usize),

    #[error("best-response gain {gain} for player {player} is below the profile's own value")]
    InconsistentGain { player: usize, gain: f64 },

    #[error("brute-force enumeration needs {needed} policies for player {player}; limit is {limit}")]
    EnumerationLimit {
        player: usize,
        needed: f64,
        limit: usize,
    },

    #[error("stage game at state {state} failed: {source}")]
    Stage {
        state: StateId,
        #[source]
        source: Box<Error>,
    },

    #[error("outer iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Spec(#[from] crate::hostility::SpecError),
}

fn format_violations(v: &[crate::model::Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
