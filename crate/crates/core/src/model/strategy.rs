use crate::error::{Error, Result};
use crate::model::{StateId, StochasticGame, PROBABILITY_TOLERANCE};
use crate::scalar::Scalar;

/// A probability distribution over one player's actions at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy<T> {
    weights: Vec<T>,
}

impl<T: Scalar> MixedStrategy<T> {
    /// Checks that `weights` is a nonempty point of the simplex.
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidStrategy("empty strategy".into()));
        }
        let mut total = T::zero();
        for (a, &w) in weights.iter().enumerate() {
            if !(w >= T::zero()) || !w.is_finite() {
                return Err(Error::InvalidStrategy(format!(
                    "weight {w} on action {a} is not a probability"
                )));
            }
            total = total + w;
        }
        if !((total - T::one()).abs() <= T::tolerance(PROBABILITY_TOLERANCE)) {
            return Err(Error::InvalidStrategy(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(MixedStrategy { weights })
    }

    /// Skips validation; the caller guarantees the simplex invariant.
    pub(crate) fn from_weights_unchecked(weights: Vec<T>) -> Self {
        MixedStrategy { weights }
    }

    pub fn uniform(actions: usize) -> Self {
        assert!(actions > 0, "uniform strategy over no actions");
        let w = T::one() / T::lit(actions as f64);
        MixedStrategy {
            weights: vec![w; actions],
        }
    }

    pub fn pure(actions: usize, action: usize) -> Self {
        assert!(action < actions, "action {action} out of range {actions}");
        let mut weights = vec![T::zero(); actions];
        weights[action] = T::one();
        MixedStrategy { weights }
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn num_actions(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, action: usize) -> T {
        self.weights[action]
    }

    /// The action played with certainty, if any.
    pub fn as_pure(&self) -> Option<usize> {
        self.weights.iter().position(|&w| w == T::one())
    }
}

/// Stationary strategies: one mixed strategy per player at every nonterminal state.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile<T> {
    /// `None` at terminal states.
    per_state: Vec<Option<Vec<MixedStrategy<T>>>>,
}

impl<T: Scalar> StrategyProfile<T> {
    /// Builds a profile, checking it covers every nonterminal state with
    /// strategies of matching dimension.
    pub fn new(game: &StochasticGame<T>, per_state: Vec<Option<Vec<MixedStrategy<T>>>>) -> Result<Self> {
        if per_state.len() != game.num_states() {
            return Err(Error::DimensionMismatch(format!(
                "profile covers {} states, game has {}",
                per_state.len(),
                game.num_states()
            )));
        }
        for (si, entry) in per_state.iter().enumerate() {
            let sid = StateId(si);
            let state = game.state(sid);
            match (entry, state.is_terminal()) {
                (None, true) => {}
                (Some(_), true) => {
                    return Err(Error::DimensionMismatch(format!(
                        "strategies given for terminal state {}",
                        state.name
                    )))
                }
                (None, false) => {
                    return Err(Error::DimensionMismatch(format!(
                        "no strategies for state {}",
                        state.name
                    )))
                }
                (Some(strats), false) => check_stage(game, sid, strats)?,
            }
        }
        Ok(StrategyProfile { per_state })
    }

    /// Every player uniform over its actions everywhere.
    pub fn uniform(game: &StochasticGame<T>) -> Self {
        Self::from_fn(game, |_, _, k| MixedStrategy::uniform(k))
    }

    /// Builds a profile from a generator `(state, player, action_count) -> strategy`.
    pub fn from_fn(
        game: &StochasticGame<T>,
        mut f: impl FnMut(StateId, usize, usize) -> MixedStrategy<T>,
    ) -> Self {
        let per_state = (0..game.num_states())
            .map(StateId)
            .map(|s| {
                if game.is_terminal(s) {
                    None
                } else {
                    let dims = game.shape(s).dims().to_vec();
                    Some(dims.iter().enumerate().map(|(i, &k)| f(s, i, k)).collect())
                }
            })
            .collect();
        StrategyProfile { per_state }
    }

    pub(crate) fn from_stages_unchecked(per_state: Vec<Option<Vec<MixedStrategy<T>>>>) -> Self {
        StrategyProfile { per_state }
    }

    /// All players' strategies at a nonterminal state.
    pub fn at(&self, state: StateId) -> &[MixedStrategy<T>] {
        self.per_state[state.0]
            .as_deref()
            .expect("profile queried at a terminal state")
    }

    pub fn get(&self, state: StateId) -> Option<&[MixedStrategy<T>]> {
        self.per_state.get(state.0)?.as_deref()
    }

    pub fn strategy(&self, state: StateId, player: usize) -> &MixedStrategy<T> {
        &self.at(state)[player]
    }

    pub fn num_states(&self) -> usize {
        self.per_state.len()
    }

    /// The same profile with `player`'s strategy replaced at every nonterminal state.
    pub fn with_player(
        &self,
        player: usize,
        mut strategy: impl FnMut(StateId) -> MixedStrategy<T>,
    ) -> Self {
        let per_state = self
            .per_state
            .iter()
            .enumerate()
            .map(|(si, entry)| {
                entry.as_ref().map(|strats| {
                    let mut strats = strats.clone();
                    strats[player] = strategy(StateId(si));
                    strats
                })
            })
            .collect();
        StrategyProfile { per_state }
    }
}

fn check_stage<T: Scalar>(game: &StochasticGame<T>, state: StateId, strats: &[MixedStrategy<T>]) -> Result<()> {
    let dims = game.shape(state).dims();
    let name = &game.state(state).name;
    if strats.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "state {name}: {} strategies for {} players",
            strats.len(),
            dims.len()
        )));
    }
    for (player, (s, &k)) in strats.iter().zip(dims).enumerate() {
        if s.num_actions() != k {
            return Err(Error::DimensionMismatch(format!(
                "state {name}, player {player}: {} weights for {k} actions",
                s.num_actions()
            )));
        }
    }
    Ok(())
}
