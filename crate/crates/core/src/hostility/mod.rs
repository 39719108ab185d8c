//! The hostility game: one blue player against several red players whose
//! joint moves either end the confrontation (blue or red wins) or repeat
//! it at a higher cumulative hostility, until a kinetic threshold is hit.

mod format;
mod generate;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::error::Result;
use crate::model::{Outcome, State, StateId, StochasticGame};
use crate::scalar::Scalar;

pub use format::{parse_spec, serialize_spec};
pub use generate::{generate_default_spec, SizeProfile};

/// Largest move count accepted for one player.
pub const MAX_MOVES: usize = 64;

/// A problem with a hostility spec, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{message}", if path.is_empty() { String::new() } else { format!("{path}: ") })]
pub struct SpecError {
    pub path: String,
    pub message: String,
}

impl SpecError {
    pub(crate) fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        SpecError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Move {
    pub name: String,
    pub hostility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerSpec {
    /// Also the player's type label (e.g. `Warship`).
    pub name: String,
    pub moves: Vec<Move>,
}

/// Per-player payoff vectors of the three absorbing outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Payoffs {
    pub blue_win: Vec<f64>,
    pub red_win: Vec<f64>,
    pub kinetic: Vec<f64>,
}

impl Payoffs {
    /// +100 to the winners, -100 to the losers, -200 to everyone on kinetic.
    pub fn standard(num_players: usize) -> Self {
        let side = |blue: f64| {
            std::iter::once(blue)
                .chain(std::iter::repeat_n(-blue, num_players - 1))
                .collect()
        };
        Payoffs {
            blue_win: side(100.0),
            red_win: side(-100.0),
            kinetic: vec![-200.0; num_players],
        }
    }
}

/// Parameters of a hostility game. Player 0 is blue; player `j + 1` is red
/// player `j` in every red-indexed table.
#[derive(Debug, Clone, PartialEq)]
pub struct HostilityGameSpec {
    pub players: Vec<PlayerSpec>,
    /// `counters[j][m]`: blue move indices that counter red player `j`'s move `m` (sorted).
    pub counters: Vec<Vec<Vec<usize>>>,
    /// `b_def[blue_move][j]`: blue success chance against red `j` when countered.
    pub b_def: Vec<Vec<f64>>,
    pub b_undef: Vec<Vec<f64>>,
    /// `r_def[j][m]`: red `j`'s success chance with move `m` when countered.
    pub r_def: Vec<Vec<f64>>,
    pub r_undef: Vec<Vec<f64>>,
    pub payoffs: Payoffs,
    pub kinetic_threshold: f64,
}

/// Probabilities of the three results of one confrontation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeTriple {
    pub p_blue_win: f64,
    pub p_red_win: f64,
    pub p_repeat: f64,
}

fn check_prob(path: String, p: f64) -> Result<(), SpecError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SpecError::new(path, format!("probability {p} outside [0, 1]")))
    }
}

impl HostilityGameSpec {
    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn num_red(&self) -> usize {
        self.players.len().saturating_sub(1)
    }

    pub fn blue(&self) -> &PlayerSpec {
        &self.players[0]
    }

    /// Whether blue move `blue_move` counters red player `red`'s move `red_move`.
    pub fn is_countered(&self, red: usize, red_move: usize, blue_move: usize) -> bool {
        self.counters[red][red_move].binary_search(&blue_move).is_ok()
    }

    /// Checks shapes, ranges and references; paths use move and player names.
    pub fn validate(&self) -> Result<(), SpecError> {
        let n = self.players.len();
        if n < 2 {
            return Err(SpecError::new("players", "need one blue and at least one red player"));
        }
        let mut names = BTreeSet::new();
        for p in &self.players {
            if !names.insert(p.name.as_str()) {
                return Err(SpecError::new("players", format!("duplicate player {}", p.name)));
            }
            let path = format!("moves.{}", p.name);
            if p.moves.is_empty() || p.moves.len() > MAX_MOVES {
                return Err(SpecError::new(
                    path,
                    format!("{} moves; expected 1 to {MAX_MOVES}", p.moves.len()),
                ));
            }
            let mut seen = BTreeSet::new();
            for m in &p.moves {
                if !seen.insert(m.name.as_str()) {
                    return Err(SpecError::new(path, format!("duplicate move {}", m.name)));
                }
                if !m.hostility.is_finite() {
                    return Err(SpecError::new(
                        format!("hostility.{}.{}", p.name, m.name),
                        "hostility must be finite",
                    ));
                }
            }
        }
        if !(self.kinetic_threshold > 0.0 && self.kinetic_threshold.is_finite()) {
            return Err(SpecError::new("K", format!("threshold {} must be positive", self.kinetic_threshold)));
        }
        let reds = &self.players[1..];
        let blue = &self.players[0];
        if self.counters.len() != reds.len() {
            return Err(SpecError::new("counters", "one entry per red player required"));
        }
        for (j, red) in reds.iter().enumerate() {
            if self.counters[j].len() != red.moves.len() {
                return Err(SpecError::new(format!("counters.{}", red.name), "one entry per move required"));
            }
            for (m, set) in self.counters[j].iter().enumerate() {
                if let Some(&b) = set.iter().find(|&&b| b >= blue.moves.len()) {
                    return Err(SpecError::new(
                        format!("counters.{}.{}", red.name, red.moves[m].name),
                        format!("unknown blue move index {b}"),
                    ));
                }
            }
        }
        for (label, table) in [("b_def", &self.b_def), ("b_undef", &self.b_undef)] {
            if table.len() != blue.moves.len() || table.iter().any(|r| r.len() != reds.len()) {
                return Err(SpecError::new(
                    format!("probabilities.{label}"),
                    "need one entry per (blue move, red player)",
                ));
            }
            for (b, row) in table.iter().enumerate() {
                for (j, &p) in row.iter().enumerate() {
                    check_prob(
                        format!("probabilities.{label}.{}.{}", blue.moves[b].name, reds[j].name),
                        p,
                    )?;
                }
            }
        }
        for (label, table) in [("r_def", &self.r_def), ("r_undef", &self.r_undef)] {
            if table.len() != reds.len() || table.iter().zip(reds).any(|(r, p)| r.len() != p.moves.len()) {
                return Err(SpecError::new(
                    format!("probabilities.{label}"),
                    "need one entry per red move",
                ));
            }
            for (j, row) in table.iter().enumerate() {
                for (m, &p) in row.iter().enumerate() {
                    check_prob(
                        format!("probabilities.{label}.{}.{}", reds[j].name, reds[j].moves[m].name),
                        p,
                    )?;
                }
            }
        }
        for (label, v) in [
            ("blue_win", &self.payoffs.blue_win),
            ("red_win", &self.payoffs.red_win),
            ("kinetic", &self.payoffs.kinetic),
        ] {
            if v.len() != n || v.iter().any(|x| !x.is_finite()) {
                return Err(SpecError::new(
                    format!("payoffs.{label}"),
                    "need one finite payoff per player",
                ));
            }
        }
        Ok(())
    }

    fn check_joint(&self, joint: &[usize]) -> Result<(), SpecError> {
        if joint.len() != self.players.len() {
            return Err(SpecError::new(
                "joint_move",
                format!("{} moves for {} players", joint.len(), self.players.len()),
            ));
        }
        for (p, &m) in self.players.iter().zip(joint) {
            if m >= p.moves.len() {
                return Err(SpecError::new(
                    format!("joint_move.{}", p.name),
                    format!("unknown move index {m}"),
                ));
            }
        }
        Ok(())
    }

    /// Total hostility of a joint move.
    pub fn hostility_sum(&self, joint: &[usize]) -> f64 {
        self.players
            .iter()
            .zip(joint)
            .map(|(p, &m)| p.moves[m].hostility)
            .sum()
    }
}

/// Win/lose/repeat probabilities of one joint move (blue's move first).
///
/// Blue's success chance is the mean over red players of the applicable
/// `b` entry; red succeeds if any red player does, each independently with
/// the applicable `r` entry. A confrontation resolves only when exactly one
/// side succeeds; otherwise it repeats.
pub fn resolve_outcome(spec: &HostilityGameSpec, joint: &[usize]) -> Result<OutcomeTriple, SpecError> {
    spec.check_joint(joint)?;
    let blue_move = joint[0];
    let reds = spec.num_red();
    let mut blue_success = 0.0;
    let mut all_red_fail = 1.0;
    for (j, &red_move) in joint[1..].iter().enumerate() {
        let countered = spec.is_countered(j, red_move, blue_move);
        let (b, r) = if countered {
            (spec.b_def[blue_move][j], spec.r_def[j][red_move])
        } else {
            (spec.b_undef[blue_move][j], spec.r_undef[j][red_move])
        };
        blue_success += b;
        all_red_fail *= 1.0 - r;
    }
    let q_blue = blue_success / reds as f64;
    let q_red = 1.0 - all_red_fail;
    let p_blue_win = q_blue * (1.0 - q_red);
    let p_red_win = q_red * (1.0 - q_blue);
    Ok(OutcomeTriple {
        p_blue_win,
        p_red_win,
        p_repeat: 1.0 - p_blue_win - p_red_win,
    })
}

/// Cumulative-hostility levels that become nonterminal states, ascending from 0.
///
/// With integral move hostilities every integer level below the threshold
/// is a state; otherwise only levels reachable from zero are.
fn nonterminal_levels(spec: &HostilityGameSpec, joint_sums: &[f64]) -> Vec<f64> {
    let k = spec.kinetic_threshold;
    let integral = spec
        .players
        .iter()
        .flat_map(|p| &p.moves)
        .all(|m| m.hostility.fract() == 0.0);
    if integral {
        let top = k.ceil() as usize;
        return (0..top).map(|x| x as f64).collect();
    }
    let mut sums: Vec<f64> = joint_sums.to_vec();
    sums.sort_by(f64::total_cmp);
    sums.dedup();
    let mut levels = vec![0.0];
    let mut frontier = vec![0.0];
    while let Some(x) = frontier.pop() {
        for &h in &sums {
            let y = x + h;
            if y < k && !levels.contains(&y) {
                levels.push(y);
                frontier.push(y);
            }
        }
    }
    levels.sort_by(f64::total_cmp);
    levels
}

/// Builds the stochastic game: nonterminal states `G<level>` in ascending
/// hostility, then the kinetic state `G<K>`, then `B` (blue win) and `R`
/// (red win). All payoffs are terminal.
pub fn build_hostility_game<T: Scalar>(spec: &HostilityGameSpec) -> Result<StochasticGame<T>> {
    spec.validate()?;
    for p in &spec.players {
        for m in &p.moves {
            if !(m.hostility > 0.0) {
                return Err(SpecError::new(
                    format!("hostility.{}.{}", p.name, m.name),
                    format!("hostility {} must be positive", m.hostility),
                )
                .into());
            }
        }
    }
    let n = spec.num_players();
    let dims: Vec<usize> = spec.players.iter().map(|p| p.moves.len()).collect();
    let shape = crate::model::ActionShape::new(dims);
    let joints: Vec<(OutcomeTriple, f64)> = shape
        .profiles()
        .map(|j| Ok((resolve_outcome(spec, &j)?, spec.hostility_sum(&j))))
        .collect::<Result<_, SpecError>>()?;
    let sums: Vec<f64> = joints.iter().map(|j| j.1).collect();
    let levels = nonterminal_levels(spec, &sums);

    let kinetic = StateId(levels.len());
    let blue_win = StateId(levels.len() + 1);
    let red_win = StateId(levels.len() + 2);
    let k = spec.kinetic_threshold;
    let level_state = |x: f64| -> StateId {
        if x >= k {
            kinetic
        } else {
            let idx = levels
                .binary_search_by(|l| l.total_cmp(&x))
                .expect("reachable hostility level");
            StateId(idx)
        }
    };
    let action_names: Vec<Vec<String>> = spec
        .players
        .iter()
        .map(|p| p.moves.iter().map(|m| m.name.clone()).collect())
        .collect();
    let lit = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();

    let mut states = Vec::with_capacity(levels.len() + 3);
    for &x in &levels {
        let mut outcomes = Vec::with_capacity(joints.len());
        for &(triple, h) in &joints {
            let transitions = vec![
                (blue_win, T::lit(triple.p_blue_win)),
                (red_win, T::lit(triple.p_red_win)),
                (level_state(x + h), T::lit(triple.p_repeat)),
            ];
            outcomes.push(Outcome::new(transitions, vec![T::zero(); n])?);
        }
        states.push(State {
            name: format!("G{x}"),
            actions: action_names.clone(),
            outcomes,
            terminal_payoff: None,
        });
    }
    states.push(State::terminal(format!("G{k}"), lit(&spec.payoffs.kinetic)));
    states.push(State::terminal("B", lit(&spec.payoffs.blue_win)));
    states.push(State::terminal("R", lit(&spec.payoffs.red_win)));
    let names = spec.players.iter().map(|p| p.name.clone()).collect();
    StochasticGame::new(names, states, StateId(0))
}
