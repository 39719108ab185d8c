//! Value updates for the outer loop: one local Bellman step under a fixed
//! profile, or exact evaluation of the profile's induced absorbing chain.

use crate::error::{Error, Result};
use crate::linalg::LuFactors;
use crate::model::{
    build_payoff_tensor, expected_profile_payoff, ActionShape, MixedStrategy, StateId,
    StochasticGame, StrategyProfile, ValueTable,
};
use crate::scalar::Scalar;

/// The Markov chain a stationary profile induces on the nonterminal states.
///
/// Row `s` of the transition matrix is substochastic; the missing mass is
/// the probability of absorbing into a terminal state, whose payoff is
/// folded into `rewards`.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedChain<T> {
    states: Vec<StateId>,
    transition: Vec<T>,
    /// `rewards[player][row]`: expected immediate reward plus expected
    /// terminal payoff collected in one step.
    rewards: Vec<Vec<T>>,
}

impl<T: Scalar> InducedChain<T> {
    /// A chain over `states` with row-major `transition` (`m * m`) and
    /// `rewards[player][row]`.
    pub fn new(states: Vec<StateId>, transition: Vec<T>, rewards: Vec<Vec<T>>) -> Result<Self> {
        let m = states.len();
        if transition.len() != m * m {
            return Err(Error::DimensionMismatch(format!(
                "{} transition entries for {m} states",
                transition.len()
            )));
        }
        if let Some(r) = rewards.iter().find(|r| r.len() != m) {
            return Err(Error::DimensionMismatch(format!("{} rewards for {m} states", r.len())));
        }
        Ok(InducedChain {
            states,
            transition,
            rewards,
        })
    }

    /// Nonterminal states in row order.
    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Transition probability between the `row`-th and `col`-th nonterminal states.
    pub fn probability(&self, row: usize, col: usize) -> T {
        self.transition[row * self.len() + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        let m = self.len();
        &self.transition[row * m..(row + 1) * m]
    }

    pub fn rewards(&self, player: usize) -> &[T] {
        &self.rewards[player]
    }

    /// Solves `(I - P) v = r` for every player with one shared factorization.
    ///
    /// Returns `values[player][row]`.
    pub fn solve(&self) -> Result<Vec<Vec<T>>> {
        let m = self.len();
        let mut a = vec![T::zero(); m * m];
        for r in 0..m {
            for c in 0..m {
                let id = if r == c { T::one() } else { T::zero() };
                a[r * m + c] = id - self.transition[r * m + c];
            }
        }
        let lu = LuFactors::factor(m, a).map_err(|s| Error::NonAbsorbing {
            states: self.non_absorbing_states(s.column),
        })?;
        Ok(self.rewards.iter().map(|r| lu.solve(r)).collect())
    }

    /// States that cannot reach absorption; falls back to the state at the
    /// failing pivot when every state leaks (numerical near-singularity).
    fn non_absorbing_states(&self, column: usize) -> Vec<StateId> {
        let m = self.len();
        let tol = T::tolerance(1e-12);
        let mut reaches = vec![false; m];
        let mut stack = Vec::new();
        for (r, flag) in reaches.iter_mut().enumerate() {
            let mass = self.row(r).iter().fold(T::zero(), |a, &p| a + p);
            if T::one() - mass > tol {
                *flag = true;
                stack.push(r);
            }
        }
        while let Some(target) = stack.pop() {
            for src in 0..m {
                if !reaches[src] && self.transition[src * m + target] > T::zero() {
                    reaches[src] = true;
                    stack.push(src);
                }
            }
        }
        let trapped: Vec<StateId> = (0..m)
            .filter(|&r| !reaches[r])
            .map(|r| self.states[r])
            .collect();
        if trapped.is_empty() {
            vec![self.states[column.min(m.saturating_sub(1))]]
        } else {
            trapped
        }
    }

    /// `max |v - (P v + r)|` over states and players, for nonterminal values `values[player][row]`.
    pub fn bellman_residual(&self, values: &[Vec<T>]) -> T {
        let m = self.len();
        let mut worst = T::zero();
        for (v, r) in values.iter().zip(&self.rewards) {
            for row in 0..m {
                let pv = (0..m).fold(T::zero(), |acc, c| acc + self.transition[row * m + c] * v[c]);
                worst = worst.max((v[row] - (pv + r[row])).abs());
            }
        }
        worst
    }

    /// Residual of a full value table against this chain.
    pub fn table_residual(&self, values: &ValueTable<T>) -> T {
        let per_player: Vec<Vec<T>> = (0..self.rewards.len())
            .map(|i| self.states.iter().map(|&s| values.get(s, i)).collect())
            .collect();
        self.bellman_residual(&per_player)
    }
}

/// Joint distribution over profile indices when players mix independently.
pub(crate) fn joint_distribution<T: Scalar>(shape: &ActionShape, strategies: &[MixedStrategy<T>]) -> Vec<T> {
    shape
        .profiles()
        .map(|p| {
            p.iter()
                .zip(strategies)
                .fold(T::one(), |acc, (&a, s)| acc * s.weight(a))
        })
        .collect()
}

/// One local update: each nonterminal state's new value is the profile's
/// expected stage payoff under the previous values.
pub fn value_iteration_update<T: Scalar>(
    game: &StochasticGame<T>,
    profile: &StrategyProfile<T>,
    values: &ValueTable<T>,
) -> Result<ValueTable<T>> {
    let mut next: Vec<Option<Vec<T>>> = vec![None; game.num_states()];
    for s in game.nonterminal_states() {
        let tensor = build_payoff_tensor(game, s, values)?;
        next[s.0] = Some(expected_profile_payoff(&tensor, profile.at(s))?);
    }
    Ok(ValueTable::from_fn(game, |s, i| {
        next[s.0].as_ref().expect("nonterminal value")[i]
    }))
}

/// Builds the chain induced by `profile` over the nonterminal states.
pub fn create_transition_matrix<T: Scalar>(
    game: &StochasticGame<T>,
    profile: &StrategyProfile<T>,
) -> InducedChain<T> {
    let states = game.nonterminal_states();
    let m = states.len();
    let n = game.num_players();
    let mut row_of = vec![usize::MAX; game.num_states()];
    for (r, s) in states.iter().enumerate() {
        row_of[s.0] = r;
    }
    let mut transition = vec![T::zero(); m * m];
    let mut rewards = vec![vec![T::zero(); m]; n];
    for (r, &s) in states.iter().enumerate() {
        let weights = joint_distribution(game.shape(s), profile.at(s));
        for (pi, &w) in weights.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            let outcome = game.outcome(s, pi);
            for (i, &rew) in outcome.rewards.iter().enumerate() {
                rewards[i][r] = rewards[i][r] + w * rew;
            }
            for &(succ, p) in &outcome.transitions {
                match game.terminal_payoff(succ) {
                    Some(payoff) => {
                        for (i, &u) in payoff.iter().enumerate() {
                            rewards[i][r] = rewards[i][r] + w * p * u;
                        }
                    }
                    None => {
                        let c = row_of[succ.0];
                        transition[r * m + c] = transition[r * m + c] + w * p;
                    }
                }
            }
        }
    }
    InducedChain {
        states,
        transition,
        rewards,
    }
}

/// Exact values of the profile that induced `chain`.
pub fn evaluate_policy<T: Scalar>(
    game: &StochasticGame<T>,
    chain: &InducedChain<T>,
) -> Result<ValueTable<T>> {
    let solved = chain.solve()?;
    let mut row_of = vec![usize::MAX; game.num_states()];
    for (r, s) in chain.states().iter().enumerate() {
        row_of[s.0] = r;
    }
    Ok(ValueTable::from_fn(game, |s, i| solved[i][row_of[s.0]]))
}

/// Largest absolute difference between two value tables.
pub fn max_dev<T: Scalar>(a: &ValueTable<T>, b: &ValueTable<T>) -> Result<T> {
    if a.num_states() != b.num_states() || a.num_players() != b.num_players() {
        return Err(Error::DimensionMismatch(format!(
            "value tables {}x{} and {}x{}",
            a.num_states(),
            a.num_players(),
            b.num_states(),
            b.num_players()
        )));
    }
    Ok(a
        .rows()
        .zip(b.rows())
        .flat_map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| (p - q).abs()))
        .fold(T::zero(), T::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::two_state_game;
    use crate::model::{numbered_actions, Outcome, State};
    use approx::assert_abs_diff_eq;

    /// One player; `A` (two actions) and `B` (one action) over terminals
    /// `W` (payoff 100) and `Z` (payoff 0).
    /// A: a0 -> B; a1 -> W 0.5, A 0.5.  B: -> W 0.3, A 0.2, Z 0.5.
    fn chain_game() -> StochasticGame<f64> {
        let (a, b, w, z) = (StateId(0), StateId(1), StateId(2), StateId(3));
        let states = vec![
            State::nonterminal("A", vec![numbered_actions(2)], |p| match p[0] {
                0 => Outcome::to(b, vec![0.0]),
                _ => Outcome {
                    transitions: vec![(w, 0.5), (a, 0.5)],
                    rewards: vec![0.0],
                },
            }),
            State::nonterminal("B", vec![numbered_actions(1)], |_| Outcome {
                transitions: vec![(w, 0.3), (a, 0.2), (z, 0.5)],
                rewards: vec![0.0],
            }),
            State::terminal("W", vec![100.0]),
            State::terminal("Z", vec![0.0]),
        ];
        StochasticGame::new(vec!["solo".into()], states, a).unwrap()
    }

    fn pure_profile(game: &StochasticGame<f64>, action_a: usize) -> StrategyProfile<f64> {
        StrategyProfile::from_fn(game, |s, _, k| {
            MixedStrategy::pure(k, if s == StateId(0) { action_a } else { 0 })
        })
    }

    #[test]
    fn forced_terminal_transition_sets_value() {
        let game = two_state_game();
        let profile = StrategyProfile::from_fn(&game, |_, _, k| MixedStrategy::pure(k, 0));
        let v = value_iteration_update(&game, &profile, &ValueTable::zeros(&game)).unwrap();
        assert_eq!(v.state(StateId(0)), &[100.0, -100.0]);
        assert_eq!(v.state(StateId(1)), &[100.0, -100.0]);
    }

    #[test]
    fn zero_values_without_reachable_terminal_stay_zero() {
        let states = vec![
            State::nonterminal("A", vec![numbered_actions(1)], |_| Outcome::to(StateId(1), vec![0.0])),
            State::nonterminal("B", vec![numbered_actions(1)], |_| Outcome::to(StateId(2), vec![0.0])),
            State::terminal("T", vec![50.0]),
        ];
        let game = StochasticGame::new(vec!["solo".into()], states, StateId(0)).unwrap();
        let v = value_iteration_update(&game, &StrategyProfile::uniform(&game), &ValueTable::zeros(&game)).unwrap();
        assert_eq!(v.get(StateId(0), 0), 0.0);
        assert_eq!(v.get(StateId(1), 0), 50.0);
    }

    #[test]
    fn one_step_update_on_two_state_chain() {
        // A mixes (0.25, 0.75); V(A) = 10, V(B) = 40:
        // 0.25 * 40 + 0.75 * (0.5 * 100 + 0.5 * 10) = 10 + 41.25
        let game = chain_game();
        let profile = StrategyProfile::from_fn(&game, |s, _, k| {
            if s == StateId(0) {
                MixedStrategy::new(vec![0.25, 0.75]).unwrap()
            } else {
                MixedStrategy::pure(k, 0)
            }
        });
        let v = ValueTable::from_fn(&game, |s, _| if s == StateId(0) { 10.0 } else { 40.0 });
        let next = value_iteration_update(&game, &profile, &v).unwrap();
        assert_abs_diff_eq!(next.get(StateId(0), 0), 51.25, epsilon = 1e-12);
        // B: 0.3 * 100 + 0.2 * 10
        assert_abs_diff_eq!(next.get(StateId(1), 0), 32.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_profile_gives_zero_one_rows() {
        let game = chain_game();
        let chain = create_transition_matrix(&game, &pure_profile(&game, 0));
        assert_eq!(chain.row(0), &[0.0, 1.0]);
        assert_eq!(chain.rewards(0), &[0.0, 30.0]);
    }

    #[test]
    fn mixed_row_blends_pure_rows() {
        let game = chain_game();
        let r0 = create_transition_matrix(&game, &pure_profile(&game, 0));
        let r1 = create_transition_matrix(&game, &pure_profile(&game, 1));
        let mixed = StrategyProfile::from_fn(&game, |s, _, k| {
            if s == StateId(0) {
                MixedStrategy::new(vec![0.4, 0.6]).unwrap()
            } else {
                MixedStrategy::pure(k, 0)
            }
        });
        let chain = create_transition_matrix(&game, &mixed);
        for c in 0..2 {
            assert_abs_diff_eq!(
                chain.probability(0, c),
                0.4 * r0.probability(0, c) + 0.6 * r1.probability(0, c),
                epsilon = 1e-15
            );
        }
        // hand blend: 0.4 * (0, 1) + 0.6 * (0.5, 0)
        assert_abs_diff_eq!(chain.probability(0, 0), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(chain.probability(0, 1), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(chain.rewards(0)[0], 30.0, epsilon = 1e-12);
    }

    #[test]
    fn immediate_absorption_returns_rewards() {
        let chain = InducedChain {
            states: vec![StateId(0), StateId(1), StateId(2)],
            transition: vec![0.0; 9],
            rewards: vec![vec![7.0; 3], vec![-2.0; 3]],
        };
        let v = chain.solve().unwrap();
        assert_eq!(v[0], vec![7.0; 3]);
        assert_eq!(v[1], vec![-2.0; 3]);
    }

    #[test]
    fn geometric_self_loop() {
        let chain: InducedChain<f64> = InducedChain {
            states: vec![StateId(0)],
            transition: vec![0.5],
            rewards: vec![vec![50.0]],
        };
        let v = chain.solve().unwrap();
        assert!((v[0][0] - 100.0).abs() <= 1e-10);
    }

    #[test]
    fn upper_triangular_back_substitution() {
        // v2 = 6; v1 = 3 + 0.5 v2 = 6; v0 = 1 + 0.25 v1 + 0.5 v2 = 5.5
        let chain = InducedChain {
            states: vec![StateId(0), StateId(1), StateId(2)],
            transition: vec![0.0, 0.25, 0.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0],
            rewards: vec![vec![1.0, 3.0, 6.0]],
        };
        let v = chain.solve().unwrap();
        assert_abs_diff_eq!(v[0][2], 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[0][1], 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[0][0], 5.5, epsilon = 1e-12);
        assert!(chain.bellman_residual(&v) <= 1e-12);
    }

    #[test]
    fn closed_class_is_reported() {
        // states 1 and 2 swap forever; state 0 leaks
        let chain = InducedChain {
            states: vec![StateId(3), StateId(4), StateId(5)],
            transition: vec![0.5, 0.25, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            rewards: vec![vec![1.0, 0.0, 0.0]],
        };
        match chain.solve() {
            Err(Error::NonAbsorbing { states }) => assert_eq!(states, vec![StateId(4), StateId(5)]),
            other => panic!("expected non-absorbing error, got {other:?}"),
        }
    }

    #[test]
    fn evaluation_is_a_value_iteration_fixed_point() {
        let game = two_state_game();
        let profile = StrategyProfile::from_fn(&game, |_, i, _| {
            MixedStrategy::new(if i == 0 { vec![0.3, 0.7] } else { vec![0.6, 0.4] }).unwrap()
        });
        let chain = create_transition_matrix(&game, &profile);
        let v = evaluate_policy(&game, &chain).unwrap();
        assert!(chain.table_residual(&v) <= 1e-8);
        let again = value_iteration_update(&game, &profile, &v).unwrap();
        assert!(max_dev(&v, &again).unwrap() <= 1e-8);
    }

    #[test]
    fn max_dev_cases() {
        let game = chain_game();
        let a = ValueTable::zeros(&game);
        assert_eq!(max_dev(&a, &a).unwrap(), 0.0);
        let b = ValueTable::from_fn(&game, |s, _| if s == StateId(1) { -3.5 } else { 0.0 });
        assert_eq!(max_dev(&a, &b).unwrap(), 3.5);

        let other = two_state_game();
        assert!(max_dev(&a, &ValueTable::zeros(&other)).is_err());
    }

    #[test]
    fn max_dev_finds_planted_maximum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let game = two_state_game();
        for _ in 0..20 {
            let a = ValueTable::from_fn(&game, |_, _| rng.gen_range(-50.0..50.0));
            let planted_player = rng.gen_range(0..2);
            let delta = rng.gen_range(10.0..20.0);
            // every other entry moves by < 1
            let b = ValueTable::from_fn(&game, |s, i| {
                a.get(s, i) + if i == planted_player { delta } else { 0.5 }
            });
            assert_abs_diff_eq!(max_dev(&a, &b).unwrap(), delta, epsilon = 1e-12);
        }
    }
}
