//! Files written by `solve` and read back by `check`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stocheq::{Game, MixedStrategy, Profile, Report, StateId, Values};

pub const TRACE_HEADER: &str = "outer_iter,epsilon,max_value_dev,millis";

/// `state -> player -> action -> probability`.
pub type StrategyFile = BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>;

/// `state -> player -> value`.
pub type ValueFile = BTreeMap<String, BTreeMap<String, f64>>;

/// Plain decimal with nine significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn trace_csv(report: &Report) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &report.records {
        let eps = r.epsilon.map(sig9).unwrap_or_default();
        let millis = r.duration.as_secs_f64() * 1e3;
        writeln!(out, "{},{eps},{},{millis:.3}", r.iteration, sig9(r.max_value_dev)).unwrap();
    }
    out
}

pub fn strategy_file(game: &Game, profile: &Profile) -> StrategyFile {
    game.nonterminal_states()
        .into_iter()
        .map(|s| {
            let state = game.state(s);
            let players = game
                .player_names()
                .iter()
                .zip(profile.at(s))
                .zip(&state.actions)
                .map(|((player, strategy), actions)| {
                    let weights = actions.iter().cloned().zip(strategy.weights().iter().copied()).collect();
                    (player.clone(), weights)
                })
                .collect();
            (state.name.clone(), players)
        })
        .collect()
}

pub fn value_file(game: &Game, values: &Values) -> ValueFile {
    game.states()
        .iter()
        .enumerate()
        .map(|(i, state)| {
            let row = game
                .player_names()
                .iter()
                .zip(values.state(StateId(i)))
                .map(|(p, &v)| (p.clone(), v))
                .collect();
            (state.name.clone(), row)
        })
        .collect()
}

/// Rebuilds a profile, requiring exactly the game's states, players and actions.
pub fn profile_from_file(game: &Game, file: &StrategyFile) -> Result<Profile> {
    let nonterminal: Vec<&str> = game
        .nonterminal_states()
        .into_iter()
        .map(|s| game.state(s).name.as_str())
        .collect();
    if let Some(extra) = file.keys().find(|k| !nonterminal.contains(&k.as_str())) {
        bail!("state {extra}: not a nonterminal state of the game");
    }
    let mut per_state = Vec::with_capacity(game.num_states());
    for (i, state) in game.states().iter().enumerate() {
        if game.is_terminal(StateId(i)) {
            per_state.push(None);
            continue;
        }
        let entry = file
            .get(&state.name)
            .ok_or_else(|| anyhow!("state {}: missing from strategies", state.name))?;
        let names = game.player_names();
        if let Some(extra) = entry.keys().find(|k| !names.contains(k)) {
            bail!("state {}, player {extra}: unknown player", state.name);
        }
        let mut stage = Vec::with_capacity(names.len());
        for (player, actions) in names.iter().zip(&state.actions) {
            let map = entry
                .get(player)
                .ok_or_else(|| anyhow!("state {}, player {player}: missing", state.name))?;
            if let Some(extra) = map.keys().find(|k| !actions.contains(k)) {
                bail!("state {}, player {player}: unknown action {extra}", state.name);
            }
            let weights = actions
                .iter()
                .map(|a| {
                    map.get(a)
                        .copied()
                        .ok_or_else(|| anyhow!("state {}, player {player}: no probability for {a}", state.name))
                })
                .collect::<Result<Vec<f64>>>()?;
            let strategy = MixedStrategy::new(weights).with_context(|| format!("state {}, player {player}", state.name))?;
            stage.push(strategy);
        }
        per_state.push(Some(stage));
    }
    Ok(Profile::new(game, per_state)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub algorithm: String,
    pub fp_iters: usize,
    pub fp_min_regret: bool,
    pub outer_iters: usize,
    pub delta: f64,
    pub workers: usize,
    pub seed: u64,
    pub epsilon_trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub started_at: String,
    pub spec_path: String,
    /// SHA-256 of the canonical serialization, so reformatting a spec keeps its hash.
    pub spec_sha256: String,
    pub config: ResolvedConfig,
    pub outer_iterations_run: usize,
    pub converged: bool,
    pub final_epsilon: Option<f64>,
}

pub fn spec_hash(canonical: &str) -> String {
    Sha256::digest(canonical.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
}
