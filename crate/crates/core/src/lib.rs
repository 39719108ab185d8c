//! Approximate Nash equilibria of finite multiplayer stochastic games.
//!
//! Each state is a normal-form stage game whose payoffs are one-step
//! rewards plus continuation values. Stage games are solved with
//! fictitious play; continuation values are refreshed either by one
//! Bellman backup (VI-FP) or by exact evaluation of the induced chain
//! (PI-FP). Stage solves within an outer iteration run on worker threads.
//! Solutions are scored by the ex-post epsilon: the largest gain any player
//! can get by switching to a best-response policy while others hold still.
//!
//! The core is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix it to `f64`, with `F32` variants for single precision.

pub mod error;
pub mod expost;
pub mod hostility;
pub mod linalg;
pub mod model;
pub mod orchestrator;
pub mod scalar;
pub mod stage;
pub mod value_update;

pub use error::{Error, Result};
pub use expost::{
    brute_force_epsilon, brute_force_gains, build_best_response_mdp, ex_post_epsilon, policy_iteration,
    BestResponseMdp, ExPostReport, PolicyIterationResult,
};
pub use hostility::{
    build_hostility_game, generate_default_spec, parse_spec, resolve_outcome, serialize_spec, HostilityGameSpec,
    OutcomeTriple, SizeProfile, SpecError,
};
pub use model::{
    validate_game, ActionShape, MixedStrategy, Outcome, PayoffTensor, PlayerId, State, StateId, StochasticGame,
    StrategyProfile, ValueTable, Violation,
};
pub use orchestrator::{
    run, run_pi_fp, run_vi_fp, solve_all_stages, Algorithm, ConvergenceReport, InitialValues, IterationRecord,
    OuterStop, SolverConfig,
};
pub use scalar::Scalar;
pub use stage::{solve_stage_game, StageInit, StageSolution, StoppingCondition};
pub use value_update::{create_transition_matrix, evaluate_policy, value_iteration_update, InducedChain};

pub type Game = StochasticGame<f64>;
pub type Profile = StrategyProfile<f64>;
pub type Values = ValueTable<f64>;
pub type Config = SolverConfig<f64>;
pub type Report = ConvergenceReport<f64>;

pub type GameF32 = StochasticGame<f32>;
pub type ProfileF32 = StrategyProfile<f32>;
pub type ValuesF32 = ValueTable<f32>;
pub type ConfigF32 = SolverConfig<f32>;
pub type ReportF32 = ConvergenceReport<f32>;
