use crate::error::{Error, Result};
use crate::model::{StateId, StochasticGame};
use crate::scalar::Scalar;

/// A value for every (state, player) pair. Terminal entries always equal
/// the game's terminal payoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable<T> {
    num_players: usize,
    values: Vec<T>,
}

impl<T: Scalar> ValueTable<T> {
    /// Nonterminal entries from `f(state, player)`; terminal entries from the game.
    pub fn from_fn(game: &StochasticGame<T>, mut f: impl FnMut(StateId, usize) -> T) -> Self {
        let n = game.num_players();
        let mut values = Vec::with_capacity(game.num_states() * n);
        for si in 0..game.num_states() {
            let s = StateId(si);
            match game.terminal_payoff(s) {
                Some(payoff) => values.extend_from_slice(payoff),
                None => values.extend((0..n).map(|i| f(s, i))),
            }
        }
        ValueTable {
            num_players: n,
            values,
        }
    }

    pub fn zeros(game: &StochasticGame<T>) -> Self {
        Self::constant(game, T::zero())
    }

    pub fn constant(game: &StochasticGame<T>, value: T) -> Self {
        Self::from_fn(game, |_, _| value)
    }

    /// Builds a table from explicit rows, rejecting rows that disagree with
    /// terminal payoffs.
    pub fn from_rows(game: &StochasticGame<T>, rows: Vec<Vec<T>>) -> Result<Self> {
        if rows.len() != game.num_states() {
            return Err(Error::DimensionMismatch(format!(
                "{} value rows for {} states",
                rows.len(),
                game.num_states()
            )));
        }
        for (si, row) in rows.iter().enumerate() {
            if row.len() != game.num_players() {
                return Err(Error::DimensionMismatch(format!(
                    "state {si}: {} values for {} players",
                    row.len(),
                    game.num_players()
                )));
            }
            if let Some(payoff) = game.terminal_payoff(StateId(si)) {
                if payoff != row.as_slice() {
                    return Err(Error::DimensionMismatch(format!(
                        "terminal state {si} values differ from its payoff"
                    )));
                }
            }
        }
        Ok(ValueTable {
            num_players: game.num_players(),
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn num_states(&self) -> usize {
        self.values.len().checked_div(self.num_players).unwrap_or(0)
    }

    pub fn get(&self, state: StateId, player: usize) -> T {
        self.values[state.0 * self.num_players + player]
    }

    /// All players' values at `state`.
    pub fn state(&self, state: StateId) -> &[T] {
        let n = self.num_players;
        &self.values[state.0 * n..(state.0 + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks(self.num_players.max(1))
    }
}
