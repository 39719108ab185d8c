//! Exact solution-quality measurement.
//!
//! Fixing every opponent's stationary strategy turns the game into a
//! Markov decision process for the remaining player. Policy iteration on
//! that process gives the player's best-response value, and the largest
//! improvement over the profile's own value is the profile's epsilon.

use std::thread;

use crate::error::{Error, Result};
use crate::linalg::LuFactors;
use crate::model::{MixedStrategy, StateId, StochasticGame, StrategyProfile};
use crate::scalar::Scalar;
use crate::value_update::create_transition_matrix;

/// Gains above this negative margin are numerical noise and clamp to zero.
pub const NEGATIVE_GAIN_TOLERANCE: f64 = 1e-6;

/// Largest number of pure stationary policies [`brute_force_epsilon`] enumerates per player.
pub const BRUTE_FORCE_LIMIT: usize = 1_000_000;

/// Relative tolerance for treating two action values as tied during policy improvement.
const TIE_TOLERANCE: f64 = 1e-12;

const POLICY_ITERATION_LIMIT: usize = 10_000;

/// One action of the best-response MDP: marginal successor distribution
/// (terminal states included) and expected immediate reward.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpAction<T> {
    pub transitions: Vec<(StateId, T)>,
    pub reward: T,
}

/// The decision problem one player faces when all opponents are fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseMdp<T> {
    player: usize,
    states: Vec<StateId>,
    row_of: Vec<Option<usize>>,
    /// Terminal payoff of `player` per game state (`None` if nonterminal).
    terminal: Vec<Option<T>>,
    actions: Vec<Vec<MdpAction<T>>>,
    initial: StateId,
}

impl<T: Scalar> BestResponseMdp<T> {
    pub fn player(&self) -> usize {
        self.player
    }

    /// Nonterminal states in row order.
    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn row_of(&self, state: StateId) -> Option<usize> {
        self.row_of.get(state.0).copied().flatten()
    }

    /// Actions available in row `row`.
    pub fn actions(&self, row: usize) -> &[MdpAction<T>] {
        &self.actions[row]
    }

    /// Immediate reward plus expected continuation, with `values` indexed by row.
    fn q_value(&self, action: &MdpAction<T>, values: &[T]) -> T {
        action.transitions.iter().fold(action.reward, |acc, &(s, p)| {
            let v = match self.terminal[s.0] {
                Some(u) => u,
                None => values[self.row_of[s.0].expect("nonterminal row")],
            };
            acc + p * v
        })
    }

    /// Exact values of a stationary (possibly mixed) policy, indexed by row.
    pub fn evaluate(&self, policy: &[MixedStrategy<T>]) -> Result<Vec<T>> {
        let m = self.states.len();
        if policy.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "policy covers {} states, MDP has {m}",
                policy.len()
            )));
        }
        let mut a = vec![T::zero(); m * m];
        let mut b = vec![T::zero(); m];
        for r in 0..m {
            a[r * m + r] = T::one();
            if policy[r].num_actions() != self.actions[r].len() {
                return Err(Error::DimensionMismatch(format!(
                    "state {}: {} weights for {} actions",
                    self.states[r],
                    policy[r].num_actions(),
                    self.actions[r].len()
                )));
            }
            for (act, &w) in self.actions[r].iter().zip(policy[r].weights()) {
                if w == T::zero() {
                    continue;
                }
                b[r] = b[r] + w * act.reward;
                for &(s, p) in &act.transitions {
                    match self.terminal[s.0] {
                        Some(u) => b[r] = b[r] + w * p * u,
                        None => {
                            let c = self.row_of[s.0].expect("nonterminal row");
                            a[r * m + c] = a[r * m + c] - w * p;
                        }
                    }
                }
            }
        }
        let lu = LuFactors::factor(m, a).map_err(|_| Error::NonAbsorbing {
            states: self.states.clone(),
        })?;
        Ok(lu.solve(&b))
    }
}

/// Result of [`policy_iteration`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyIterationResult<T> {
    /// Optimal pure action per nonterminal state (row order).
    pub policy: Vec<usize>,
    /// Optimal value per nonterminal state (row order).
    pub values: Vec<T>,
    /// Values of the initial policy, before any improvement.
    pub initial_values: Vec<T>,
    /// Evaluation/improvement rounds performed.
    pub iterations: usize,
}

/// Marginalizes every opponent of `player` under `profile`.
pub fn build_best_response_mdp<T: Scalar>(
    game: &StochasticGame<T>,
    profile: &StrategyProfile<T>,
    player: usize,
) -> Result<BestResponseMdp<T>> {
    if player >= game.num_players() {
        return Err(Error::DimensionMismatch(format!("no player {player}")));
    }
    let states = game.nonterminal_states();
    let mut row_of = vec![None; game.num_states()];
    for (r, s) in states.iter().enumerate() {
        row_of[s.0] = Some(r);
    }
    let terminal = (0..game.num_states())
        .map(|s| game.terminal_payoff(StateId(s)).map(|p| p[player]))
        .collect();

    let mut actions = Vec::with_capacity(states.len());
    let mut dense = vec![T::zero(); game.num_states()];
    for &s in &states {
        let shape = game.shape(s);
        let strategies = profile.get(s).ok_or_else(|| {
            Error::DimensionMismatch(format!("profile has no strategies at state {s}"))
        })?;
        let own = shape.num_actions(player);
        let mut per_action: Vec<(Vec<T>, T)> = vec![(dense.clone(), T::zero()); own];
        for (pi, joint) in shape.profiles().enumerate() {
            let w = joint
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != player)
                .fold(T::one(), |acc, (j, &a)| acc * strategies[j].weight(a));
            if w == T::zero() {
                continue;
            }
            let outcome = game.outcome(s, pi);
            let slot = &mut per_action[joint[player]];
            slot.1 = slot.1 + w * outcome.rewards[player];
            for &(succ, p) in &outcome.transitions {
                slot.0[succ.0] = slot.0[succ.0] + w * p;
            }
        }
        actions.push(
            per_action
                .into_iter()
                .map(|(row, reward)| MdpAction {
                    transitions: row
                        .into_iter()
                        .enumerate()
                        .filter(|&(_, p)| p > T::zero())
                        .map(|(i, p)| (StateId(i), p))
                        .collect(),
                    reward,
                })
                .collect(),
        );
        dense.iter_mut().for_each(|x| *x = T::zero());
    }
    Ok(BestResponseMdp {
        player,
        states,
        row_of,
        terminal,
        actions,
        initial: game.initial_state(),
    })
}

/// Policy iteration for the expected total reward of an absorbing MDP.
///
/// Evaluation solves `v = r + P v` exactly; improvement is greedy and keeps
/// the previous action whenever it is still (within rounding) optimal. A
/// mixed initial policy is evaluated as is and counts as changed after the
/// first improvement.
pub fn policy_iteration<T: Scalar>(
    mdp: &BestResponseMdp<T>,
    initial_policy: &[MixedStrategy<T>],
) -> Result<PolicyIterationResult<T>> {
    let m = mdp.states.len();
    let mut previous: Vec<Option<usize>> = initial_policy.iter().map(MixedStrategy::as_pure).collect();
    let mut current: Vec<MixedStrategy<T>> = initial_policy.to_vec();
    let mut initial_values = None;
    let tie = T::lit(TIE_TOLERANCE);

    for iterations in 1..=POLICY_ITERATION_LIMIT {
        let values = mdp.evaluate(&current)?;
        if initial_values.is_none() {
            initial_values = Some(values.clone());
        }
        let mut next = Vec::with_capacity(m);
        for r in 0..m {
            let q: Vec<T> = mdp.actions[r].iter().map(|a| mdp.q_value(a, &values)).collect();
            let best = q.iter().copied().fold(T::neg_infinity(), T::max);
            let slack = tie * best.abs().max(T::one());
            let choice = match previous[r] {
                Some(p) if q[p] >= best - slack => p,
                _ => q
                    .iter()
                    .position(|&x| x >= best - slack)
                    .expect("nonempty action set"),
            };
            next.push(choice);
        }
        if next.iter().zip(&previous).all(|(&a, &p)| Some(a) == p) {
            return Ok(PolicyIterationResult {
                policy: next,
                values,
                initial_values: initial_values.expect("set on first round"),
                iterations,
            });
        }
        current = next
            .iter()
            .enumerate()
            .map(|(r, &a)| MixedStrategy::pure(mdp.actions[r].len(), a))
            .collect();
        previous = next.into_iter().map(Some).collect();
    }
    Err(Error::PolicyIterationLimit(POLICY_ITERATION_LIMIT))
}

/// Ex-post check outcome: each player's best-response gain at the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct ExPostReport<T> {
    pub epsilon: T,
    pub gains: Vec<T>,
}

fn clamp_gain<T: Scalar>(player: usize, gain: T, scale: T) -> Result<T> {
    let tol = T::tolerance(NEGATIVE_GAIN_TOLERANCE).max(T::epsilon() * T::lit(1024.0) * scale);
    if gain >= T::zero() {
        Ok(gain)
    } else if gain >= -tol {
        Ok(T::zero())
    } else {
        Err(Error::InconsistentGain {
            player,
            gain: gain.to_f64_lossy(),
        })
    }
}

fn player_gain<T: Scalar>(game: &StochasticGame<T>, profile: &StrategyProfile<T>, player: usize) -> Result<T> {
    let mdp = build_best_response_mdp(game, profile, player)?;
    let initial: Vec<MixedStrategy<T>> = mdp
        .states
        .iter()
        .map(|&s| profile.strategy(s, player).clone())
        .collect();
    let result = policy_iteration(&mdp, &initial)?;
    let row = mdp.row_of(mdp.initial).ok_or(Error::TerminalState(mdp.initial))?;
    let best = result.values[row];
    let own = result.initial_values[row];
    clamp_gain(player, best - own, own.abs().max(best.abs()).max(T::one()))
}

/// How much the best-deviating player gains at the initial state, with
/// every player's best-response MDP solved on its own thread.
pub fn ex_post_epsilon<T: Scalar>(
    game: &StochasticGame<T>,
    profile: &StrategyProfile<T>,
) -> Result<ExPostReport<T>> {
    let n = game.num_players();
    let gains: Vec<Result<T>> = if n == 1 {
        vec![player_gain(game, profile, 0)]
    } else {
        thread::scope(|scope| {
            let handles: Vec<_> = (0..n)
                .map(|i| scope.spawn(move || player_gain(game, profile, i)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("best-response worker panicked"))
                .collect()
        })
    };
    let gains = gains.into_iter().collect::<Result<Vec<T>>>()?;
    let epsilon = gains.iter().copied().fold(T::zero(), T::max);
    Ok(ExPostReport { epsilon, gains })
}

/// Each player's gain found by evaluating every pure stationary deviation
/// through the induced chain of the modified profile.
pub fn brute_force_gains<T: Scalar>(
    game: &StochasticGame<T>,
    profile: &StrategyProfile<T>,
) -> Result<Vec<T>> {
    let states = game.nonterminal_states();
    let init = game.initial_state();
    let base_chain = create_transition_matrix(game, profile);
    let init_row = base_chain
        .states()
        .iter()
        .position(|&s| s == init)
        .ok_or(Error::TerminalState(init))?;
    let base = base_chain.solve()?;

    let mut gains = Vec::with_capacity(game.num_players());
    for player in 0..game.num_players() {
        let dims: Vec<usize> = states.iter().map(|&s| game.shape(s).num_actions(player)).collect();
        let needed: f64 = dims.iter().map(|&k| k as f64).product();
        if needed > BRUTE_FORCE_LIMIT as f64 {
            return Err(Error::EnumerationLimit {
                player,
                needed,
                limit: BRUTE_FORCE_LIMIT,
            });
        }
        let mut choice = vec![0usize; states.len()];
        let mut best = T::neg_infinity();
        loop {
            let deviation = profile.with_player(player, |s| {
                let r = states.iter().position(|&x| x == s).expect("nonterminal");
                MixedStrategy::pure(dims[r], choice[r])
            });
            let values = create_transition_matrix(game, &deviation).solve()?;
            best = best.max(values[player][init_row]);

            let mut k = 0;
            while k < choice.len() {
                choice[k] += 1;
                if choice[k] < dims[k] {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
        }
        let own = base[player][init_row];
        gains.push(clamp_gain(player, best - own, own.abs().max(best.abs()).max(T::one()))?);
    }
    Ok(gains)
}

/// Independent oracle for [`ex_post_epsilon`] on tiny games.
pub fn brute_force_epsilon<T: Scalar>(game: &StochasticGame<T>, profile: &StrategyProfile<T>) -> Result<T> {
    Ok(brute_force_gains(game, profile)?
        .into_iter()
        .fold(T::zero(), T::max))
}
