//! Fictitious play on a single stage game.
//!
//! Play is simultaneous: at step `t` every player best-responds to the
//! opponents' averages from step `t - 1`, then all averages move by the
//! `1/t` rule.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{MixedStrategy, PayoffTensor};
use crate::scalar::Scalar;

/// Hard cap on iterations when halting on a regret threshold, which
/// multiplayer fictitious play may never reach.
pub const REGRET_ITERATION_CEILING: usize = 1_000_000;

/// When a stage solve halts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingCondition {
    /// Run exactly this many iterations and return the final averages.
    FixedIterations(usize),
    /// Stop at the first average profile with regret at most `gamma`, or
    /// after `max_iterations`.
    RegretThreshold { gamma: f64, max_iterations: usize },
    /// Run this many iterations and return the average profile with the
    /// lowest regret seen (earliest on ties).
    FixedIterationsMinRegret(usize),
}

impl StoppingCondition {
    pub fn regret_threshold(gamma: f64) -> Self {
        StoppingCondition::RegretThreshold {
            gamma,
            max_iterations: REGRET_ITERATION_CEILING,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StoppingCondition::FixedIterations(0) | StoppingCondition::FixedIterationsMinRegret(0) => {
                Err(Error::Config("stage iteration count must be >= 1".into()))
            }
            StoppingCondition::RegretThreshold { gamma, max_iterations } => {
                if !(gamma >= 0.0) {
                    Err(Error::Config(format!("regret threshold {gamma} must be >= 0")))
                } else if max_iterations == 0 || max_iterations > REGRET_ITERATION_CEILING {
                    Err(Error::Config(format!(
                        "regret-threshold iteration cap must be in 1..={REGRET_ITERATION_CEILING}"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Starting strategies for a stage solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StageInit {
    /// Uniform mixture over every player's actions.
    #[default]
    Uniform,
    /// A random point of each simplex, drawn from a seeded generator.
    RandomSimplex,
}

/// Initial strategies for a stage with the given action counts.
pub fn initial_strategies<T: Scalar, R: Rng>(
    dims: &[usize],
    init: StageInit,
    rng: &mut R,
) -> Vec<MixedStrategy<T>> {
    match init {
        StageInit::Uniform => dims.iter().map(|&k| MixedStrategy::uniform(k)).collect(),
        StageInit::RandomSimplex => dims.iter().map(|&k| random_simplex(k, rng)).collect(),
    }
}

/// Uniform sample from the simplex (normalized exponentials).
pub fn random_simplex<T: Scalar, R: Rng>(k: usize, rng: &mut R) -> MixedStrategy<T> {
    let draws: Vec<f64> = (0..k)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
        .collect();
    let total: f64 = draws.iter().sum();
    MixedStrategy::from_weights_unchecked(draws.into_iter().map(|x| T::lit(x / total)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageSolution<T> {
    pub profile: Vec<MixedStrategy<T>>,
    /// Largest gain any player gets from a unilateral deviation.
    pub regret: T,
    pub iterations_run: usize,
}

/// Best pure response of `player` to the other entries of `profile`
/// (the player's own entry is ignored). Ties go to the lowest action index.
pub fn best_response<T: Scalar>(
    tensor: &PayoffTensor<T>,
    profile: &[MixedStrategy<T>],
    player: usize,
) -> Result<(usize, T)> {
    if player >= tensor.num_players() {
        return Err(Error::DimensionMismatch(format!("no player {player}")));
    }
    let values = tensor.action_values(profile)?;
    Ok(argmax(&values[player]))
}

fn argmax<T: Scalar>(values: &[T]) -> (usize, T) {
    let mut best = (0, values[0]);
    for (a, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (a, v);
        }
    }
    best
}

/// `(1 - 1/t) * average + (1/t) * pure(br_action)`.
pub fn fp_update<T: Scalar>(
    average: &MixedStrategy<T>,
    br_action: usize,
    t: usize,
) -> Result<MixedStrategy<T>> {
    if t < 1 {
        return Err(Error::InvalidStep(t));
    }
    if br_action >= average.num_actions() {
        return Err(Error::DimensionMismatch(format!(
            "action {br_action} out of range {}",
            average.num_actions()
        )));
    }
    let step = T::one() / T::lit(t as f64);
    let keep = T::one() - step;
    let weights = average
        .weights()
        .iter()
        .enumerate()
        .map(|(a, &w)| {
            let w = keep * w;
            if a == br_action {
                w + step
            } else {
                w
            }
        })
        .collect();
    Ok(MixedStrategy::from_weights_unchecked(weights))
}

/// Largest deviation gain over players, clamped at zero.
pub fn max_regret<T: Scalar>(tensor: &PayoffTensor<T>, profile: &[MixedStrategy<T>]) -> Result<T> {
    let values = tensor.action_values(profile)?;
    Ok(regret_from_values(&values, profile))
}

fn regret_from_values<T: Scalar>(values: &[Vec<T>], profile: &[MixedStrategy<T>]) -> T {
    values
        .iter()
        .zip(profile)
        .map(|(v, s)| {
            let best = argmax(v).1;
            let own = v
                .iter()
                .zip(s.weights())
                .fold(T::zero(), |acc, (&u, &w)| acc + u * w);
            best - own
        })
        .fold(T::zero(), T::max)
}

/// Runs simultaneous fictitious play from `init` until `stop` triggers.
///
/// Averages are kept as best-response counts divided by `t`, the closed form
/// of repeated [`fp_update`] steps; this keeps them on the simplex exactly
/// and makes the result independent of floating-point update order.
pub fn solve_stage_game<T: Scalar>(
    tensor: &PayoffTensor<T>,
    stop: StoppingCondition,
    init: &[MixedStrategy<T>],
) -> Result<StageSolution<T>> {
    stop.validate()?;
    tensor.check_profile(init)?;
    let n = tensor.num_players();
    let dims = tensor.shape().dims().to_vec();

    let mut average: Vec<MixedStrategy<T>> = init.to_vec();
    let mut counts: Vec<Vec<u64>> = dims.iter().map(|&k| vec![0; k]).collect();
    let mut values: Vec<Vec<T>> = vec![Vec::new(); n];
    let mut best: Option<(T, Vec<MixedStrategy<T>>, usize)> = None;
    let mut t = 0usize;

    loop {
        tensor.action_values_into(&average, &mut values);
        let regret = regret_from_values(&values, &average);

        let done = match stop {
            StoppingCondition::FixedIterations(n_iter) => t >= n_iter,
            StoppingCondition::FixedIterationsMinRegret(n_iter) => {
                if t >= 1 && best.as_ref().is_none_or(|(r, _, _)| regret < *r) {
                    best = Some((regret, average.clone(), t));
                }
                t >= n_iter
            }
            StoppingCondition::RegretThreshold {
                gamma,
                max_iterations,
            } => (t >= 1 && regret <= T::lit(gamma)) || t >= max_iterations,
        };
        if done {
            if let Some((regret, profile, _)) = best {
                return Ok(StageSolution {
                    profile,
                    regret,
                    iterations_run: t,
                });
            }
            return Ok(StageSolution {
                profile: average,
                regret,
                iterations_run: t,
            });
        }

        t += 1;
        for (i, v) in values.iter().enumerate() {
            counts[i][argmax(v).0] += 1;
        }
        let inv_t = T::one() / T::lit(t as f64);
        for (avg, c) in average.iter_mut().zip(&counts) {
            *avg = MixedStrategy::from_weights_unchecked(
                c.iter().map(|&k| T::lit(k as f64) * inv_t).collect(),
            );
        }
    }
}
