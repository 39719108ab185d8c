use crate::error::{Error, Result};
use crate::model::{ActionShape, MixedStrategy, StateId, StochasticGame, ValueTable};
use crate::scalar::Scalar;

/// Payoffs of every player at every joint profile of one stage game.
///
/// Stored profile-major: the `n` payoffs of a profile are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTensor<T> {
    shape: ActionShape,
    data: Vec<T>,
}

impl<T: Scalar> PayoffTensor<T> {
    /// `payoff(profile)` returns all players' payoffs at that profile.
    pub fn from_fn(dims: Vec<usize>, mut payoff: impl FnMut(&[usize]) -> Vec<T>) -> Self {
        let shape = ActionShape::new(dims);
        let n = shape.num_players();
        let mut data = Vec::with_capacity(shape.num_profiles() * n);
        for p in shape.profiles() {
            let row = payoff(&p);
            assert_eq!(row.len(), n, "payoff row length");
            data.extend(row);
        }
        PayoffTensor { shape, data }
    }

    /// Two-player tensor from row and column payoff matrices.
    pub fn bimatrix(row: &[Vec<T>], col: &[Vec<T>]) -> Self {
        let m = row.len();
        let k = row.first().map_or(0, Vec::len);
        Self::from_fn(vec![m, k], |p| vec![row[p[0]][p[1]], col[p[0]][p[1]]])
    }

    pub fn shape(&self) -> &ActionShape {
        &self.shape
    }

    pub fn num_players(&self) -> usize {
        self.shape.num_players()
    }

    pub fn get(&self, profile: &[usize], player: usize) -> T {
        self.data[self.shape.index(profile) * self.num_players() + player]
    }

    /// All players' payoffs at a profile index.
    pub fn row(&self, profile_index: usize) -> &[T] {
        let n = self.num_players();
        &self.data[profile_index * n..(profile_index + 1) * n]
    }

    /// Adds `c` to every payoff of `player`.
    pub fn shifted(&self, player: usize, c: T) -> Self {
        let n = self.num_players();
        let mut data = self.data.clone();
        for row in data.chunks_mut(n) {
            row[player] = row[player] + c;
        }
        PayoffTensor {
            shape: self.shape.clone(),
            data,
        }
    }

    /// Smallest and largest entry over all players.
    pub fn payoff_range(&self) -> (T, T) {
        self.data.iter().fold(
            (T::infinity(), T::neg_infinity()),
            |(lo, hi), &x| (lo.min(x), hi.max(x)),
        )
    }

    pub(crate) fn check_profile(&self, profile: &[MixedStrategy<T>]) -> Result<()> {
        if profile.len() != self.num_players() {
            return Err(Error::DimensionMismatch(format!(
                "{} strategies for a {}-player tensor",
                profile.len(),
                self.num_players()
            )));
        }
        for (i, s) in profile.iter().enumerate() {
            if s.num_actions() != self.shape.num_actions(i) {
                return Err(Error::DimensionMismatch(format!(
                    "player {i}: {} weights for {} actions",
                    s.num_actions(),
                    self.shape.num_actions(i)
                )));
            }
        }
        Ok(())
    }

    /// Fills `out[i][a]` with player `i`'s expected payoff for action `a`
    /// against the product of the other players' strategies.
    ///
    /// One pass over the joint profiles; the opponents' weight of each
    /// profile comes from prefix and suffix products.
    pub(crate) fn action_values_into(&self, profile: &[MixedStrategy<T>], out: &mut [Vec<T>]) {
        let n = self.num_players();
        let dims = self.shape.dims();
        for (i, row) in out.iter_mut().enumerate() {
            row.clear();
            row.resize(dims[i], T::zero());
        }
        if self.shape.num_profiles() == 0 {
            return;
        }
        let mut actions = vec![0usize; n];
        let mut prefix = vec![T::one(); n + 1];
        let mut suffix = vec![T::one(); n + 1];
        for (pi, payoffs) in self.data.chunks_exact(n).enumerate() {
            if pi > 0 {
                // odometer step, last player fastest
                let mut i = n;
                while i > 0 {
                    i -= 1;
                    actions[i] += 1;
                    if actions[i] < dims[i] {
                        break;
                    }
                    actions[i] = 0;
                }
            }
            for j in 0..n {
                prefix[j + 1] = prefix[j] * profile[j].weight(actions[j]);
            }
            for j in (0..n).rev() {
                suffix[j] = suffix[j + 1] * profile[j].weight(actions[j]);
            }
            for i in 0..n {
                let w = prefix[i] * suffix[i + 1];
                if w != T::zero() {
                    out[i][actions[i]] = out[i][actions[i]] + w * payoffs[i];
                }
            }
        }
    }

    /// Per-player action values against the others; see [`Self::action_values_into`].
    pub fn action_values(&self, profile: &[MixedStrategy<T>]) -> Result<Vec<Vec<T>>> {
        self.check_profile(profile)?;
        let mut out = vec![Vec::new(); self.num_players()];
        self.action_values_into(profile, &mut out);
        Ok(out)
    }
}

/// The stage game at `state`: each player's reward plus expected continuation
/// value under `values`, for every joint profile.
pub fn build_payoff_tensor<T: Scalar>(
    game: &StochasticGame<T>,
    state: StateId,
    values: &ValueTable<T>,
) -> Result<PayoffTensor<T>> {
    game.require_nonterminal(state)?;
    if values.num_states() != game.num_states() || values.num_players() != game.num_players() {
        return Err(Error::DimensionMismatch(
            "value table does not match the game".into(),
        ));
    }
    let shape = game.shape(state).clone();
    let n = game.num_players();
    let mut data = Vec::with_capacity(shape.num_profiles() * n);
    for outcome in &game.state(state).outcomes {
        for i in 0..n {
            let cont = outcome
                .transitions
                .iter()
                .fold(T::zero(), |acc, &(s, p)| acc + p * values.get(s, i));
            data.push(outcome.rewards[i] + cont);
        }
    }
    Ok(PayoffTensor { shape, data })
}

/// Expected payoff of every player when each plays its mixed strategy independently.
pub fn expected_profile_payoff<T: Scalar>(
    tensor: &PayoffTensor<T>,
    profile: &[MixedStrategy<T>],
) -> Result<Vec<T>> {
    tensor.check_profile(profile)?;
    let n = tensor.num_players();
    let mut total = vec![T::zero(); n];
    for (pi, actions) in tensor.shape().profiles().enumerate() {
        let w = actions
            .iter()
            .zip(profile)
            .fold(T::one(), |acc, (&a, s)| acc * s.weight(a));
        if w == T::zero() {
            continue;
        }
        for (t, &u) in total.iter_mut().zip(tensor.row(pi)) {
            *t = *t + w * u;
        }
    }
    Ok(total)
}
