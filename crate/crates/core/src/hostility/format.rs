//! JSON form of a hostility spec. Tables are keyed by player and move
//! names; move order is the order of the `moves` lists.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{HostilityGameSpec, Move, Payoffs, PlayerSpec, SpecError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Side {
    Blue,
    Red,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlayerEntry {
    name: String,
    side: Side,
}

type Table = BTreeMap<String, BTreeMap<String, f64>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Probabilities {
    b_def: Table,
    b_undef: Table,
    r_def: Table,
    r_undef: Table,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PayoffEntry {
    blue_win: f64,
    red_win: f64,
    kinetic: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    players: Vec<PlayerEntry>,
    moves: BTreeMap<String, Vec<String>>,
    counters: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    probabilities: Probabilities,
    payoffs: BTreeMap<String, PayoffEntry>,
    hostility: Table,
    #[serde(rename = "K")]
    kinetic_threshold: f64,
}

fn lookup<'a, V>(map: &'a BTreeMap<String, V>, key: &str, path: &str) -> Result<&'a V, SpecError> {
    map.get(key)
        .ok_or_else(|| SpecError::new(path, format!("missing entry for {key}")))
}

fn no_extra_keys<V>(map: &BTreeMap<String, V>, allowed: &[&str], path: &str) -> Result<(), SpecError> {
    match map.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(SpecError::new(format!("{path}.{k}"), "unknown name")),
        None => Ok(()),
    }
}

fn index_of(names: &[&str], name: &str, path: &str) -> Result<usize, SpecError> {
    names
        .iter()
        .position(|n| *n == name)
        .ok_or_else(|| SpecError::new(path, format!("unknown move {name}")))
}

/// Parses and validates a JSON spec. Errors carry the offending field path.
pub fn parse_spec(json: &str) -> Result<HostilityGameSpec, SpecError> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let file: SpecFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        SpecError::new(path, e.into_inner().to_string())
    })?;
    from_file(file)
}

fn from_file(file: SpecFile) -> Result<HostilityGameSpec, SpecError> {
    match file.players.first() {
        Some(p) if p.side == Side::Blue => {}
        _ => return Err(SpecError::new("players", "the first player must be on the blue side")),
    }
    if let Some(p) = file.players[1..].iter().find(|p| p.side != Side::Red) {
        return Err(SpecError::new("players", format!("{} must be on the red side", p.name)));
    }
    let player_names: Vec<&str> = file.players.iter().map(|p| p.name.as_str()).collect();
    let red_names = &player_names[1..];
    no_extra_keys(&file.moves, &player_names, "moves")?;
    no_extra_keys(&file.hostility, &player_names, "hostility")?;
    no_extra_keys(&file.payoffs, &player_names, "payoffs")?;
    no_extra_keys(&file.counters, red_names, "counters")?;

    let mut players = Vec::with_capacity(player_names.len());
    let mut move_names: Vec<Vec<&str>> = Vec::new();
    for &name in &player_names {
        let moves = lookup(&file.moves, name, "moves")?;
        let path = format!("hostility.{name}");
        let levels = lookup(&file.hostility, name, "hostility")?;
        let names: Vec<&str> = moves.iter().map(String::as_str).collect();
        no_extra_keys(levels, &names, &path)?;
        players.push(PlayerSpec {
            name: name.to_string(),
            moves: moves
                .iter()
                .map(|m| {
                    Ok(Move {
                        name: m.clone(),
                        hostility: *lookup(levels, m, &path)?,
                    })
                })
                .collect::<Result<_, SpecError>>()?,
        });
        move_names.push(names);
    }
    let blue_moves = &move_names[0];

    let mut counters = Vec::with_capacity(red_names.len());
    for (j, &red) in red_names.iter().enumerate() {
        let empty = BTreeMap::new();
        let table = file.counters.get(red).unwrap_or(&empty);
        let path = format!("counters.{red}");
        no_extra_keys(table, &move_names[j + 1], &path)?;
        let mut per_move = Vec::new();
        for &m in &move_names[j + 1] {
            let path = format!("{path}.{m}");
            let mut set = table
                .get(m)
                .map(|names| {
                    names
                        .iter()
                        .map(|b| index_of(blue_moves, b, &path))
                        .collect::<Result<Vec<_>, _>>()
                })
                .transpose()?
                .unwrap_or_default();
            set.sort_unstable();
            set.dedup();
            per_move.push(set);
        }
        counters.push(per_move);
    }

    let blue_table = |table: &Table, label: &str| -> Result<Vec<Vec<f64>>, SpecError> {
        let path = format!("probabilities.{label}");
        no_extra_keys(table, blue_moves, &path)?;
        blue_moves
            .iter()
            .map(|&b| {
                let row = lookup(table, b, &path)?;
                let path = format!("{path}.{b}");
                no_extra_keys(row, red_names, &path)?;
                red_names.iter().map(|&r| lookup(row, r, &path).copied()).collect()
            })
            .collect()
    };
    let red_table = |table: &Table, label: &str| -> Result<Vec<Vec<f64>>, SpecError> {
        let path = format!("probabilities.{label}");
        no_extra_keys(table, red_names, &path)?;
        red_names
            .iter()
            .enumerate()
            .map(|(j, &r)| {
                let row = lookup(table, r, &path)?;
                let path = format!("{path}.{r}");
                no_extra_keys(row, &move_names[j + 1], &path)?;
                move_names[j + 1].iter().map(|&m| lookup(row, m, &path).copied()).collect()
            })
            .collect()
    };

    let mut payoffs = Payoffs {
        blue_win: Vec::new(),
        red_win: Vec::new(),
        kinetic: Vec::new(),
    };
    for &name in &player_names {
        let p = lookup(&file.payoffs, name, "payoffs")?;
        payoffs.blue_win.push(p.blue_win);
        payoffs.red_win.push(p.red_win);
        payoffs.kinetic.push(p.kinetic);
    }

    let spec = HostilityGameSpec {
        b_def: blue_table(&file.probabilities.b_def, "b_def")?,
        b_undef: blue_table(&file.probabilities.b_undef, "b_undef")?,
        r_def: red_table(&file.probabilities.r_def, "r_def")?,
        r_undef: red_table(&file.probabilities.r_undef, "r_undef")?,
        players,
        counters,
        payoffs,
        kinetic_threshold: file.kinetic_threshold,
    };
    spec.validate()?;
    Ok(spec)
}

/// Pretty-printed JSON that [`parse_spec`] reads back to an equal spec.
pub fn serialize_spec(spec: &HostilityGameSpec) -> String {
    let players = &spec.players;
    let name_map = |f: &dyn Fn(usize, &PlayerSpec) -> BTreeMap<String, f64>| {
        players
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), f(i, p)))
            .collect::<Table>()
    };
    let reds = &players[1..];
    let blue = &players[0];
    let blue_table = |t: &[Vec<f64>]| -> Table {
        blue.moves
            .iter()
            .zip(t)
            .map(|(m, row)| {
                let row = reds.iter().zip(row).map(|(r, &p)| (r.name.clone(), p)).collect();
                (m.name.clone(), row)
            })
            .collect()
    };
    let red_table = |t: &[Vec<f64>]| -> Table {
        reds.iter()
            .zip(t)
            .map(|(r, row)| {
                let row = r.moves.iter().zip(row).map(|(m, &p)| (m.name.clone(), p)).collect();
                (r.name.clone(), row)
            })
            .collect()
    };
    let file = SpecFile {
        players: players
            .iter()
            .enumerate()
            .map(|(i, p)| PlayerEntry {
                name: p.name.clone(),
                side: if i == 0 { Side::Blue } else { Side::Red },
            })
            .collect(),
        moves: players
            .iter()
            .map(|p| (p.name.clone(), p.moves.iter().map(|m| m.name.clone()).collect()))
            .collect(),
        counters: reds
            .iter()
            .zip(&spec.counters)
            .map(|(r, sets)| {
                let per_move = r
                    .moves
                    .iter()
                    .zip(sets)
                    .filter(|(_, set)| !set.is_empty())
                    .map(|(m, set)| {
                        (m.name.clone(), set.iter().map(|&b| blue.moves[b].name.clone()).collect())
                    })
                    .collect();
                (r.name.clone(), per_move)
            })
            .collect(),
        probabilities: Probabilities {
            b_def: blue_table(&spec.b_def),
            b_undef: blue_table(&spec.b_undef),
            r_def: red_table(&spec.r_def),
            r_undef: red_table(&spec.r_undef),
        },
        payoffs: players
            .iter()
            .enumerate()
            .map(|(i, p)| {
                (
                    p.name.clone(),
                    PayoffEntry {
                        blue_win: spec.payoffs.blue_win[i],
                        red_win: spec.payoffs.red_win[i],
                        kinetic: spec.payoffs.kinetic[i],
                    },
                )
            })
            .collect(),
        hostility: name_map(&|_, p| p.moves.iter().map(|m| (m.name.clone(), m.hostility)).collect()),
        kinetic_threshold: spec.kinetic_threshold,
    };
    let mut out = serde_json::to_string_pretty(&file).expect("spec serializes");
    out.push('\n');
    out
}
