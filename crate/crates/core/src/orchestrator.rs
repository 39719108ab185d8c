//! Outer loops alternating parallel stage solving with a value update.
//!
//! Each outer iteration freezes the current value table, solves every
//! nonterminal stage game against that snapshot on a fixed pool of
//! workers, and only then updates values: locally (VI-FP) or by exact
//! evaluation of the induced chain (PI-FP).

use std::thread;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expost::ex_post_epsilon;
use crate::model::{build_payoff_tensor, StateId, StochasticGame, StrategyProfile, ValueTable};
use crate::scalar::Scalar;
use crate::stage::{initial_strategies, solve_stage_game, StageInit, StageSolution, StoppingCondition};
use crate::value_update::{create_transition_matrix, evaluate_policy, max_dev, value_iteration_update};

pub const DEFAULT_OUTER_ITERATIONS: usize = 25;
pub const DEFAULT_VALUE_DELTA: f64 = 1e-4;
pub const DEFAULT_FP_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Local one-step value updates.
    ViFp,
    /// Exact policy evaluation of the induced chain.
    PiFp,
}

/// Outer-loop halting: whichever of the two triggers first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterStop {
    pub max_iterations: usize,
    /// Halt once no value moves by more than this.
    pub value_delta: Option<f64>,
}

impl Default for OuterStop {
    fn default() -> Self {
        OuterStop {
            max_iterations: DEFAULT_OUTER_ITERATIONS,
            value_delta: Some(DEFAULT_VALUE_DELTA),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialValues<T> {
    Zero,
    /// Same value for every player at every nonterminal state.
    Constant(T),
    Custom(ValueTable<T>),
}

impl<T: Scalar> InitialValues<T> {
    /// The smallest terminal payoff of the game, everywhere.
    pub fn pessimistic(game: &StochasticGame<T>) -> Self {
        InitialValues::Constant(game.min_terminal_payoff().unwrap_or_else(T::zero))
    }

    fn table(&self, game: &StochasticGame<T>) -> Result<ValueTable<T>> {
        match self {
            InitialValues::Zero => Ok(ValueTable::zeros(game)),
            InitialValues::Constant(c) => Ok(ValueTable::constant(game, *c)),
            InitialValues::Custom(t) => {
                if t.num_states() != game.num_states() || t.num_players() != game.num_players() {
                    Err(Error::Config("custom value table does not match the game".into()))
                } else {
                    Ok(t.clone())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    pub algorithm: Algorithm,
    pub stage_stop: StoppingCondition,
    pub outer_stop: OuterStop,
    /// Worker threads for stage solving.
    pub workers: usize,
    /// Seeds the random stage initializer; unused with [`StageInit::Uniform`].
    pub seed: u64,
    pub stage_init: StageInit,
    pub initial_values: InitialValues<T>,
    /// Run the ex-post check after every outer iteration.
    pub record_epsilon: bool,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::PiFp,
            stage_stop: StoppingCondition::FixedIterations(DEFAULT_FP_ITERATIONS),
            outer_stop: OuterStop::default(),
            workers: 1,
            seed: 0,
            stage_init: StageInit::Uniform,
            initial_values: InitialValues::Zero,
            record_epsilon: true,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.stage_stop.validate()?;
        if self.outer_stop.max_iterations == 0 {
            return Err(Error::Config("outer iteration count must be >= 1".into()));
        }
        if let Some(d) = self.outer_stop.value_delta {
            if !(d >= 0.0) {
                return Err(Error::Config(format!("value delta {d} must be >= 0")));
            }
        }
        if self.workers == 0 {
            return Err(Error::Config("worker count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Statistics of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T> {
    pub iteration: usize,
    /// Ex-post epsilon of this iteration's profile, when recorded.
    pub epsilon: Option<T>,
    pub max_value_dev: T,
    /// Largest final stage regret over all states.
    pub max_stage_regret: T,
    /// Bellman residual of the policy evaluation (PI-FP only).
    pub bellman_residual: Option<T>,
    pub duration: Duration,
    pub stage_duration: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<T> {
    pub algorithm: Algorithm,
    pub records: Vec<IterationRecord<T>>,
    pub profile: StrategyProfile<T>,
    pub values: ValueTable<T>,
    /// The value-delta criterion was met before the iteration cap.
    pub converged: bool,
}

impl<T: Scalar> ConvergenceReport<T> {
    pub fn final_epsilon(&self) -> Option<T> {
        self.records.last().and_then(|r| r.epsilon)
    }
}

/// Splits `states` into `d` contiguous chunks whose sizes differ by at most one.
pub fn partition_states(states: &[StateId], d: usize) -> Vec<&[StateId]> {
    let d = d.max(1);
    let base = states.len() / d;
    let extra = states.len() % d;
    let mut out = Vec::with_capacity(d);
    let mut start = 0;
    for k in 0..d {
        let len = base + usize::from(k < extra);
        out.push(&states[start..start + len]);
        start += len;
    }
    out
}

/// Stage solutions for every nonterminal state under one value snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSweep<T> {
    pub profile: StrategyProfile<T>,
    /// Final regret per state (`None` at terminal states).
    pub regrets: Vec<Option<T>>,
}

impl<T: Scalar> StageSweep<T> {
    pub fn max_regret(&self) -> T {
        self.regrets.iter().flatten().copied().fold(T::zero(), T::max)
    }
}

fn solve_one<T: Scalar>(
    game: &StochasticGame<T>,
    values: &ValueTable<T>,
    state: StateId,
    stop: StoppingCondition,
    init: StageInit,
    seed: u64,
) -> Result<StageSolution<T>> {
    let tensor = build_payoff_tensor(game, state, values)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (state.0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let start = initial_strategies(game.shape(state).dims(), init, &mut rng);
    solve_stage_game(&tensor, stop, &start)
}

/// Solves every nonterminal stage game against the frozen `values`.
///
/// States are split with [`partition_states`] over `workers` threads; each
/// result lands in its state's slot, so the output does not depend on the
/// worker count.
pub fn solve_all_stages<T: Scalar>(
    game: &StochasticGame<T>,
    values: &ValueTable<T>,
    stop: StoppingCondition,
    init: StageInit,
    seed: u64,
    workers: usize,
) -> Result<StageSweep<T>> {
    let states = game.nonterminal_states();
    let chunks = partition_states(&states, workers);
    let run_chunk = |chunk: &[StateId]| -> Vec<(StateId, Result<StageSolution<T>>)> {
        chunk
            .iter()
            .map(|&s| (s, solve_one(game, values, s, stop, init, seed)))
            .collect()
    };
    let results: Vec<(StateId, Result<StageSolution<T>>)> = if workers <= 1 {
        run_chunk(&states)
    } else {
        thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|&chunk| scope.spawn(move || run_chunk(chunk)))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("stage worker panicked"))
                .collect()
        })
    };

    let mut per_state = vec![None; game.num_states()];
    let mut regrets = vec![None; game.num_states()];
    for (s, res) in results {
        let sol = res.map_err(|e| Error::Stage {
            state: s,
            source: Box::new(e),
        })?;
        regrets[s.0] = Some(sol.regret);
        per_state[s.0] = Some(sol.profile);
    }
    Ok(StageSweep {
        profile: StrategyProfile::from_stages_unchecked(per_state),
        regrets,
    })
}

/// Runs the algorithm named in `config`.
pub fn run<T: Scalar>(game: &StochasticGame<T>, config: &SolverConfig<T>) -> Result<ConvergenceReport<T>> {
    config.validate()?;
    let mut values = config.initial_values.table(game)?;
    let mut records = Vec::new();
    let mut profile = None;
    let mut converged = false;

    for iteration in 1..=config.outer_stop.max_iterations {
        let wrap = |e: Error| Error::Iteration {
            iteration,
            source: Box::new(e),
        };
        let started = Instant::now();
        let sweep = solve_all_stages(
            game,
            &values,
            config.stage_stop,
            config.stage_init,
            config.seed,
            config.workers,
        )
        .map_err(wrap)?;
        let stage_duration = started.elapsed();

        let (next, residual) = match config.algorithm {
            Algorithm::ViFp => (
                value_iteration_update(game, &sweep.profile, &values).map_err(wrap)?,
                None,
            ),
            Algorithm::PiFp => {
                let chain = create_transition_matrix(game, &sweep.profile);
                let next = evaluate_policy(game, &chain).map_err(wrap)?;
                let residual = chain.table_residual(&next);
                (next, Some(residual))
            }
        };
        let diff = max_dev(&next, &values)?;
        let epsilon = if config.record_epsilon {
            Some(ex_post_epsilon(game, &sweep.profile).map_err(wrap)?.epsilon)
        } else {
            None
        };
        records.push(IterationRecord {
            iteration,
            epsilon,
            max_value_dev: diff,
            max_stage_regret: sweep.max_regret(),
            bellman_residual: residual,
            duration: started.elapsed(),
            stage_duration,
        });
        values = next;
        profile = Some(sweep.profile);
        if config
            .outer_stop
            .value_delta
            .is_some_and(|d| diff <= T::lit(d))
        {
            converged = true;
            break;
        }
    }

    Ok(ConvergenceReport {
        algorithm: config.algorithm,
        records,
        profile: profile.expect("at least one outer iteration"),
        values,
        converged,
    })
}

/// VI-FP: stage solving followed by one local value-iteration step.
pub fn run_vi_fp<T: Scalar>(game: &StochasticGame<T>, config: &SolverConfig<T>) -> Result<ConvergenceReport<T>> {
    if config.algorithm != Algorithm::ViFp {
        return Err(Error::Config("run_vi_fp needs algorithm = ViFp".into()));
    }
    run(game, config)
}

/// PI-FP: stage solving followed by exact evaluation of the induced chain.
pub fn run_pi_fp<T: Scalar>(game: &StochasticGame<T>, config: &SolverConfig<T>) -> Result<ConvergenceReport<T>> {
    if config.algorithm != Algorithm::PiFp {
        return Err(Error::Config("run_pi_fp needs algorithm = PiFp".into()));
    }
    run(game, config)
}
