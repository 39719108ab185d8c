//! Finite n-player stochastic games: states, joint-action outcomes, and
//! the tables (strategies, values, payoff tensors) solvers pass around.

mod shape;
mod strategy;
mod tensor;
mod values;

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use shape::ActionShape;
pub use strategy::{MixedStrategy, StrategyProfile};
pub use tensor::{build_payoff_tensor, expected_profile_payoff, PayoffTensor};
pub use values::ValueTable;

/// Index of a state within its game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Index of a player within its game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayerId(pub usize);

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "player {}", self.0)
    }
}

/// Probability tolerance for outcome distributions and mixed strategies.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Inputs whose probabilities sum to within this of 1 are rescaled instead of rejected.
pub const NORMALIZE_TOLERANCE: f64 = 1e-9;

/// What happens after one joint action profile at a nonterminal state.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<T> {
    /// Sparse successor distribution; zero-probability successors are omitted.
    pub transitions: Vec<(StateId, T)>,
    /// Immediate reward for each player.
    pub rewards: Vec<T>,
}

impl<T: Scalar> Outcome<T> {
    /// Builds an outcome, dropping zero entries and rescaling a distribution
    /// whose mass is within [`NORMALIZE_TOLERANCE`] of one.
    pub fn new(transitions: Vec<(StateId, T)>, rewards: Vec<T>) -> Result<Self> {
        let mut total = T::zero();
        for &(s, p) in &transitions {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::InvalidStrategy(format!(
                    "transition probability {p} to {s} outside [0, 1]"
                )));
            }
            total = total + p;
        }
        if (total - T::one()).abs() > T::tolerance(NORMALIZE_TOLERANCE) {
            return Err(Error::InvalidStrategy(format!(
                "transition probabilities sum to {total}, expected 1"
            )));
        }
        let transitions = transitions
            .into_iter()
            .filter(|&(_, p)| p > T::zero())
            .map(|(s, p)| (s, p / total))
            .collect();
        Ok(Outcome {
            transitions,
            rewards,
        })
    }

    /// Deterministic transition with the given rewards.
    pub fn to(successor: StateId, rewards: Vec<T>) -> Self {
        Outcome {
            transitions: vec![(successor, T::one())],
            rewards,
        }
    }
}

/// One state of a stochastic game.
///
/// A state is terminal exactly when `terminal_payoff` is set; a well-formed
/// terminal state has no actions and no outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    pub name: String,
    /// Action labels per player.
    pub actions: Vec<Vec<String>>,
    /// One outcome per joint profile, indexed by [`ActionShape::index`].
    pub outcomes: Vec<Outcome<T>>,
    pub terminal_payoff: Option<Vec<T>>,
}

impl<T: Scalar> State<T> {
    pub fn terminal(name: impl Into<String>, payoff: Vec<T>) -> Self {
        State {
            name: name.into(),
            actions: Vec::new(),
            outcomes: Vec::new(),
            terminal_payoff: Some(payoff),
        }
    }

    /// Nonterminal state; `outcome` is called once per joint profile in index order.
    pub fn nonterminal(
        name: impl Into<String>,
        actions: Vec<Vec<String>>,
        mut outcome: impl FnMut(&[usize]) -> Outcome<T>,
    ) -> Self {
        let shape = ActionShape::new(actions.iter().map(Vec::len).collect());
        let outcomes = shape.profiles().map(|p| outcome(&p)).collect();
        State {
            name: name.into(),
            actions,
            outcomes,
            terminal_payoff: None,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal_payoff.is_some()
    }
}

/// Generates labels `a0, a1, ...` for `count` actions.
pub fn numbered_actions(count: usize) -> Vec<String> {
    (0..count).map(|a| format!("a{a}")).collect()
}

/// A finite stochastic game with total expected reward.
///
/// Games built with [`StochasticGame::from_parts`] are unchecked; every
/// solver assumes [`validate_game`] reports no violations.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticGame<T> {
    player_names: Vec<String>,
    states: Vec<State<T>>,
    shapes: Vec<ActionShape>,
    initial: StateId,
}

impl<T: Scalar> StochasticGame<T> {
    /// Builds and validates a game.
    pub fn new(player_names: Vec<String>, states: Vec<State<T>>, initial: StateId) -> Result<Self> {
        let game = Self::from_parts(player_names, states, initial);
        let violations = validate_game(&game);
        if violations.is_empty() {
            Ok(game)
        } else {
            Err(Error::InvalidGame(violations))
        }
    }

    pub fn from_parts(player_names: Vec<String>, states: Vec<State<T>>, initial: StateId) -> Self {
        let shapes = states
            .iter()
            .map(|s| ActionShape::new(s.actions.iter().map(Vec::len).collect()))
            .collect();
        StochasticGame {
            player_names,
            states,
            shapes,
            initial,
        }
    }

    pub fn num_players(&self) -> usize {
        self.player_names.len()
    }

    pub fn player_names(&self) -> &[String] {
        &self.player_names
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[State<T>] {
        &self.states
    }

    pub fn state(&self, id: StateId) -> &State<T> {
        &self.states[id.0]
    }

    pub fn initial_state(&self) -> StateId {
        self.initial
    }

    pub fn is_terminal(&self, id: StateId) -> bool {
        self.states[id.0].is_terminal()
    }

    pub fn terminal_payoff(&self, id: StateId) -> Option<&[T]> {
        self.states[id.0].terminal_payoff.as_deref()
    }

    /// Nonterminal states in index order.
    pub fn nonterminal_states(&self) -> Vec<StateId> {
        (0..self.states.len())
            .map(StateId)
            .filter(|&s| !self.is_terminal(s))
            .collect()
    }

    pub fn shape(&self, id: StateId) -> &ActionShape {
        &self.shapes[id.0]
    }

    pub fn outcome(&self, id: StateId, profile_index: usize) -> &Outcome<T> {
        &self.states[id.0].outcomes[profile_index]
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s.name == name).map(StateId)
    }

    /// Smallest terminal payoff over all terminal states and players.
    pub fn min_terminal_payoff(&self) -> Option<T> {
        self.states
            .iter()
            .filter_map(|s| s.terminal_payoff.as_ref())
            .flat_map(|p| p.iter().copied())
            .fold(None, |acc, x| Some(acc.map_or(x, |a: T| a.min(x))))
    }

    pub(crate) fn require_nonterminal(&self, id: StateId) -> Result<()> {
        if id.0 >= self.states.len() {
            return Err(Error::DimensionMismatch(format!("unknown state {id}")));
        }
        if self.is_terminal(id) {
            return Err(Error::TerminalState(id));
        }
        Ok(())
    }
}

/// The invariant a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    NoPlayers,
    NoNonterminalState,
    InitialState,
    ActionSets,
    ProfileCoverage,
    RewardLength,
    ProbabilityRange,
    ProbabilitySum,
    UnknownSuccessor,
    DuplicateSuccessor,
    TerminalPayoffLength,
    TerminalHasActions,
    TerminalHasTransitions,
}

/// One broken invariant found by [`validate_game`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub rule: Rule,
    pub state: Option<StateId>,
    pub profile: Option<Vec<usize>>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.rule)?;
        if let Some(s) = self.state {
            write!(f, " at state {s}")?;
        }
        if let Some(p) = &self.profile {
            write!(f, " profile {p:?}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Checks every structural invariant of `game`; an empty list means well-formed.
pub fn validate_game<T: Scalar>(game: &StochasticGame<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = game.num_players();
    let mut push = |rule, state: Option<StateId>, profile: Option<Vec<usize>>, detail: String| {
        out.push(Violation {
            rule,
            state,
            profile,
            detail,
        })
    };
    if n == 0 {
        push(Rule::NoPlayers, None, None, "game has no players".into());
    }
    if game.states.iter().all(State::is_terminal) {
        push(
            Rule::NoNonterminalState,
            None,
            None,
            "game has no nonterminal state".into(),
        );
    }
    let init = game.initial;
    if init.0 >= game.states.len() {
        push(
            Rule::InitialState,
            Some(init),
            None,
            "initial state does not exist".into(),
        );
    } else if game.is_terminal(init) {
        push(
            Rule::InitialState,
            Some(init),
            None,
            "initial state is terminal".into(),
        );
    }

    let prob_tol = T::tolerance(PROBABILITY_TOLERANCE);
    for (si, state) in game.states.iter().enumerate() {
        let sid = Some(StateId(si));
        if let Some(payoff) = &state.terminal_payoff {
            if payoff.len() != n {
                push(
                    Rule::TerminalPayoffLength,
                    sid,
                    None,
                    format!("{} payoffs for {n} players", payoff.len()),
                );
            }
            if !state.actions.is_empty() {
                push(
                    Rule::TerminalHasActions,
                    sid,
                    None,
                    "terminal state lists actions".into(),
                );
            }
            if !state.outcomes.is_empty() {
                push(
                    Rule::TerminalHasTransitions,
                    sid,
                    None,
                    format!("terminal state has {} outgoing outcomes", state.outcomes.len()),
                );
            }
            continue;
        }

        if state.actions.len() != n || state.actions.iter().any(Vec::is_empty) {
            push(
                Rule::ActionSets,
                sid,
                None,
                "every player needs at least one action".into(),
            );
            continue;
        }
        let shape = &game.shapes[si];
        if state.outcomes.len() != shape.num_profiles() {
            push(
                Rule::ProfileCoverage,
                sid,
                None,
                format!(
                    "{} outcomes for {} joint profiles",
                    state.outcomes.len(),
                    shape.num_profiles()
                ),
            );
            continue;
        }
        for (pi, outcome) in state.outcomes.iter().enumerate() {
            let profile = || Some(shape.decode(pi));
            if outcome.rewards.len() != n {
                push(
                    Rule::RewardLength,
                    sid,
                    profile(),
                    format!("{} rewards for {n} players", outcome.rewards.len()),
                );
            }
            let mut total = T::zero();
            let mut seen = Vec::with_capacity(outcome.transitions.len());
            for &(succ, p) in &outcome.transitions {
                if succ.0 >= game.states.len() {
                    push(
                        Rule::UnknownSuccessor,
                        sid,
                        profile(),
                        format!("successor {succ} does not exist"),
                    );
                }
                if seen.contains(&succ) {
                    push(
                        Rule::DuplicateSuccessor,
                        sid,
                        profile(),
                        format!("successor {succ} listed twice"),
                    );
                }
                seen.push(succ);
                if !(p >= T::zero() && p <= T::one()) {
                    push(
                        Rule::ProbabilityRange,
                        sid,
                        profile(),
                        format!("probability {p} to {succ} outside [0, 1]"),
                    );
                }
                total = total + p;
            }
            if !((total - T::one()).abs() <= prob_tol) {
                push(
                    Rule::ProbabilitySum,
                    sid,
                    profile(),
                    format!("transition probabilities sum to {total}"),
                );
            }
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Two players, one nonterminal state `S` with 2x2 actions, terminal `W`
    /// (payoff 100 to player 0, -100 to player 1) and terminal `L` (reverse).
    ///
    /// Profile (0,0): W w.p. 1; (0,1): W 0.5 / S 0.5; (1,0): L 0.25 / W 0.75;
    /// (1,1): S 0.5 / L 0.5 with reward (1, 2).
    pub fn two_state_game() -> StochasticGame<f64> {
        let s = StateId(0);
        let w = StateId(1);
        let l = StateId(2);
        let states = vec![
            State::nonterminal("S", vec![numbered_actions(2), numbered_actions(2)], |p| {
                match (p[0], p[1]) {
                    (0, 0) => Outcome::to(w, vec![0.0, 0.0]),
                    (0, 1) => Outcome {
                        transitions: vec![(w, 0.5), (s, 0.5)],
                        rewards: vec![0.0, 0.0],
                    },
                    (1, 0) => Outcome {
                        transitions: vec![(l, 0.25), (w, 0.75)],
                        rewards: vec![0.0, 0.0],
                    },
                    _ => Outcome {
                        transitions: vec![(s, 0.5), (l, 0.5)],
                        rewards: vec![1.0, 2.0],
                    },
                }
            }),
            State::terminal("W", vec![100.0, -100.0]),
            State::terminal("L", vec![-100.0, 100.0]),
        ];
        StochasticGame::new(vec!["p0".into(), "p1".into()], states, s).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed_game_has_no_violations() {
        assert!(validate_game(&fixtures::two_state_game()).is_empty());
    }

    #[test]
    fn short_transition_row_is_reported_with_profile() {
        let game = fixtures::two_state_game();
        let mut states = game.states().to_vec();
        states[0].outcomes[1].transitions = vec![(StateId(1), 0.4), (StateId(0), 0.5)];
        let bad = StochasticGame::from_parts(game.player_names().to_vec(), states, StateId(0));
        let v = validate_game(&bad);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::ProbabilitySum);
        assert_eq!(v[0].state, Some(StateId(0)));
        assert_eq!(v[0].profile, Some(vec![0, 1]));
    }

    #[test]
    fn terminal_self_loop_is_reported() {
        let game = fixtures::two_state_game();
        let mut states = game.states().to_vec();
        states[1].outcomes = vec![Outcome::to(StateId(1), vec![0.0, 0.0])];
        let bad = StochasticGame::from_parts(game.player_names().to_vec(), states, StateId(0));
        let v = validate_game(&bad);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::TerminalHasTransitions);
        assert_eq!(v[0].state, Some(StateId(1)));
    }

    #[test]
    fn missing_profiles_and_unknown_successors() {
        let game = fixtures::two_state_game();
        let mut states = game.states().to_vec();
        states[0].outcomes.pop();
        let bad = StochasticGame::from_parts(game.player_names().to_vec(), states, StateId(0));
        assert_eq!(validate_game(&bad)[0].rule, Rule::ProfileCoverage);

        let mut states = game.states().to_vec();
        states[0].outcomes[0].transitions = vec![(StateId(9), 1.0)];
        let bad = StochasticGame::from_parts(game.player_names().to_vec(), states, StateId(0));
        assert_eq!(validate_game(&bad)[0].rule, Rule::UnknownSuccessor);
    }

    #[test]
    fn empty_action_set_and_terminal_initial() {
        let game = fixtures::two_state_game();
        let mut states = game.states().to_vec();
        states[0].actions[1].clear();
        let bad = StochasticGame::from_parts(game.player_names().to_vec(), states, StateId(2));
        let rules: Vec<_> = validate_game(&bad).into_iter().map(|v| v.rule).collect();
        assert!(rules.contains(&Rule::ActionSets));
        assert!(rules.contains(&Rule::InitialState));
    }

    #[test]
    fn outcome_normalizes_only_near_one() {
        let o = Outcome::new(vec![(StateId(0), 0.5 + 4e-10), (StateId(1), 0.5), (StateId(2), 0.0)], vec![])
            .unwrap();
        assert_eq!(o.transitions.len(), 2);
        let sum: f64 = o.transitions.iter().map(|t| t.1).sum();
        assert!((sum - 1.0).abs() < 1e-15);
        assert!(Outcome::new(vec![(StateId(0), 0.9)], Vec::<f64>::new()).is_err());
    }

    #[test]
    fn new_rejects_invalid_game() {
        let game = fixtures::two_state_game();
        let mut states = game.states().to_vec();
        states[0].outcomes[0].transitions[0].1 = 0.9;
        let err = StochasticGame::new(game.player_names().to_vec(), states, StateId(0)).unwrap_err();
        assert!(matches!(err, Error::InvalidGame(ref v) if v.len() == 1));
    }
}
