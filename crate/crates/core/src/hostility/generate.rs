use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HostilityGameSpec, Move, Payoffs, PlayerSpec};

/// Size preset for generated specs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeProfile {
    /// 2 to 4 moves per player, threshold between 20 and 30.
    Small,
    /// 7 to 10 moves per player, threshold 300.
    PaperScale,
}

impl SizeProfile {
    fn move_range(self) -> std::ops::RangeInclusive<usize> {
        match self {
            SizeProfile::Small => 2..=4,
            SizeProfile::PaperScale => 7..=10,
        }
    }

    fn hostility_range(self) -> std::ops::RangeInclusive<u32> {
        match self {
            SizeProfile::Small => 1..=8,
            SizeProfile::PaperScale => 1..=40,
        }
    }
}

const PLAYER_NAMES: [&str; 4] = ["Blue", "Warship", "Security", "Auxiliary"];

/// A `(def, undef)` pair in thousandths within `[0.05, 0.95]`, `def < undef`.
fn success_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let a = rng.gen_range(50..=950u32);
    let mut b = rng.gen_range(50..=949u32);
    if b >= a {
        b += 1;
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    (lo as f64 / 1000.0, hi as f64 / 1000.0)
}

/// Deterministic four-player spec for `seed`: blue plus three red types.
pub fn generate_default_spec(seed: u64, size: SizeProfile) -> HostilityGameSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let players: Vec<PlayerSpec> = PLAYER_NAMES
        .iter()
        .map(|&name| {
            let count = rng.gen_range(size.move_range());
            let prefix = name.to_lowercase();
            PlayerSpec {
                name: name.to_string(),
                moves: (1..=count)
                    .map(|k| Move {
                        name: format!("{prefix}-{k}"),
                        hostility: rng.gen_range(size.hostility_range()) as f64,
                    })
                    .collect(),
            }
        })
        .collect();
    let blue_moves = players[0].moves.len();
    let reds = &players[1..];

    // every red move is countered by at least one blue move
    let counters = reds
        .iter()
        .map(|red| {
            red.moves
                .iter()
                .map(|_| {
                    let mut set: Vec<usize> = (0..blue_moves).filter(|_| rng.gen_bool(0.3)).collect();
                    if set.is_empty() {
                        set.push(*(0..blue_moves).collect::<Vec<_>>().choose(&mut rng).unwrap());
                    }
                    set
                })
                .collect()
        })
        .collect();

    let mut b_def = vec![vec![0.0; reds.len()]; blue_moves];
    let mut b_undef = b_def.clone();
    for b in 0..blue_moves {
        for j in 0..reds.len() {
            (b_def[b][j], b_undef[b][j]) = success_pair(&mut rng);
        }
    }
    let mut r_def: Vec<Vec<f64>> = reds.iter().map(|r| vec![0.0; r.moves.len()]).collect();
    let mut r_undef = r_def.clone();
    for (j, red) in reds.iter().enumerate() {
        for m in 0..red.moves.len() {
            (r_def[j][m], r_undef[j][m]) = success_pair(&mut rng);
        }
    }
    let kinetic_threshold = match size {
        SizeProfile::Small => rng.gen_range(20..=30u32) as f64,
        SizeProfile::PaperScale => 300.0,
    };
    HostilityGameSpec {
        payoffs: Payoffs::standard(players.len()),
        players,
        counters,
        b_def,
        b_undef,
        r_def,
        r_undef,
        kinetic_threshold,
    }
}
