/// Per-player action counts at one state, with a mixed-radix indexing of
/// joint profiles (player 0 most significant, last player varies fastest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionShape {
    dims: Vec<usize>,
    strides: Vec<usize>,
    profiles: usize,
}

impl ActionShape {
    pub fn new(dims: Vec<usize>) -> Self {
        let mut strides = vec![0; dims.len()];
        let mut acc = 1usize;
        for (i, &d) in dims.iter().enumerate().rev() {
            strides[i] = acc;
            acc = acc.saturating_mul(d);
        }
        let profiles = if dims.is_empty() { 0 } else { acc };
        ActionShape {
            dims,
            strides,
            profiles,
        }
    }

    pub fn num_players(&self) -> usize {
        self.dims.len()
    }

    /// Action count of each player.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.dims[player]
    }

    pub fn num_profiles(&self) -> usize {
        self.profiles
    }

    pub fn stride(&self, player: usize) -> usize {
        self.strides[player]
    }

    pub fn index(&self, profile: &[usize]) -> usize {
        debug_assert_eq!(profile.len(), self.dims.len());
        profile
            .iter()
            .zip(&self.strides)
            .map(|(a, s)| a * s)
            .sum()
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &s) in out.iter_mut().zip(&self.strides) {
            *slot = index / s;
            index %= s;
        }
        out
    }

    /// Joint profiles in index order.
    pub fn profiles(&self) -> Profiles<'_> {
        Profiles {
            shape: self,
            next: if self.profiles == 0 {
                None
            } else {
                Some(vec![0; self.dims.len()])
            },
        }
    }
}

pub struct Profiles<'a> {
    shape: &'a ActionShape,
    next: Option<Vec<usize>>,
}

impl Iterator for Profiles<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for i in (0..succ.len()).rev() {
            succ[i] += 1;
            if succ[i] < self.shape.dims[i] {
                self.next = Some(succ);
                return Some(current);
            }
            succ[i] = 0;
        }
        Some(current)
    }
}
