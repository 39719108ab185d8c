#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stocheq::stage::random_simplex;
use stocheq::{Game, MixedStrategy, Outcome, Profile, State, StateId, StochasticGame};

/// Random successor row over `targets`, with at least `absorb` mass on `terminals`.
fn random_row(rng: &mut ChaCha8Rng, nonterminal: usize, terminals: &[StateId], absorb: f64) -> Vec<(StateId, f64)> {
    let mut row = Vec::new();
    let exit = absorb + (1.0 - absorb) * rng.gen_range(0.0..0.5);
    let split: f64 = rng.gen_range(0.0..=1.0);
    if terminals.len() == 1 {
        row.push((terminals[0], exit));
    } else {
        row.push((terminals[0], exit * split));
        row.push((terminals[1], exit * (1.0 - split)));
    }
    let stay = 1.0 - exit;
    let picks: Vec<usize> = (0..nonterminal).filter(|_| rng.gen_bool(0.6)).collect();
    if picks.is_empty() {
        row.push((StateId(rng.gen_range(0..nonterminal)), stay));
    } else {
        let w: Vec<f64> = picks.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = w.iter().sum();
        for (&s, wi) in picks.iter().zip(w) {
            row.push((StateId(s), stay * wi / total));
        }
    }
    row.retain(|&(_, p)| p > 0.0);
    row
}

/// A random game with cycles whose every step absorbs with probability >= 0.05.
/// Nonterminal states come first; the initial state is 0.
pub fn tiny_game(seed: u64, players: usize, states: usize, max_actions: usize) -> Game {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_terminals = rng.gen_range(1..=2);
    let terminals: Vec<StateId> = (states..states + num_terminals).map(StateId).collect();
    let mut all = Vec::new();
    for s in 0..states {
        let actions: Vec<usize> = (0..players).map(|_| rng.gen_range(2..=max_actions)).collect();
        let names = actions.iter().map(|&k| stocheq::model::numbered_actions(k)).collect();
        let mut outcome = |_: &[usize]| {
            let transitions = random_row(&mut rng, states, &terminals, 0.05);
            let rewards = (0..players).map(|_| rng.gen_range(-5.0..5.0)).collect();
            Outcome::new(transitions, rewards).expect("valid row")
        };
        all.push(State::nonterminal(format!("S{s}"), names, &mut outcome));
    }
    for (t, _) in terminals.iter().enumerate() {
        let payoff = (0..players).map(|_| rng.gen_range(-100.0..100.0)).collect();
        all.push(State::terminal(format!("T{t}"), payoff));
    }
    let names = (0..players).map(|i| format!("p{i}")).collect();
    StochasticGame::new(names, all, StateId(0)).expect("valid random game")
}

/// Random profile mixing pure and interior strategies.
pub fn random_profile(game: &Game, seed: u64) -> Profile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Profile::from_fn(game, |_, _, k| {
        if rng.gen_bool(0.3) {
            MixedStrategy::pure(k, rng.gen_range(0..k))
        } else {
            random_simplex(k, &mut rng)
        }
    })
}

/// Single-agent absorbing chain with nonnegative rewards and terminal payoffs.
pub fn single_agent_chain(seed: u64) -> Game {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = rng.gen_range(3..=8);
    let terminals = [StateId(states), StateId(states + 1)];
    let mut all = Vec::new();
    for s in 0..states {
        let k = rng.gen_range(2..=3);
        let mut outcome = |_: &[usize]| {
            let transitions = random_row(&mut rng, states, &terminals, 0.05);
            Outcome::new(transitions, vec![rng.gen_range(0.0..10.0)]).expect("valid row")
        };
        all.push(State::nonterminal(
            format!("S{s}"),
            vec![stocheq::model::numbered_actions(k)],
            &mut outcome,
        ));
    }
    all.push(State::terminal("T0", vec![rng.gen_range(0.0..100.0)]));
    all.push(State::terminal("T1", vec![0.0]));
    StochasticGame::new(vec!["agent".into()], all, StateId(0)).expect("valid chain")
}
