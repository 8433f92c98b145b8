//! Potential tables over mixed-radix configuration spaces.
//!
//! A table over variables with cardinalities `(c_0, ..., c_m)` is indexed by
//! the packed configuration index `sum_j state_j * stride_j` where the last
//! variable varies fastest. Tables are dense below a size cutoff and switch
//! to a sorted sparse representation after compression.

/// Strides for a mixed-radix space, last variable fastest.
pub(crate) fn strides(cards: &[usize]) -> Vec<u64> {
    let mut s = vec![1u64; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * cards[i + 1] as u64;
    }
    s
}

pub(crate) fn space_size(cards: &[usize]) -> u64 {
    cards.iter().map(|&c| c as u64).product()
}

/// Advance `config` as an odometer over `cards`; returns false after the last
/// configuration.
pub(crate) fn advance(config: &mut [usize], cards: &[usize]) -> bool {
    for i in (0..cards.len()).rev() {
        config[i] += 1;
        if config[i] < cards[i] {
            return true;
        }
        config[i] = 0;
    }
    false
}

/// Extract the state of one variable from a packed index.
#[inline]
pub(crate) fn state_of(idx: u64, stride: u64, card: u64) -> u64 {
    (idx / stride) % card
}

#[derive(Clone, Debug)]
pub(crate) enum Potential {
    Dense(Vec<f64>),
    /// Entries sorted by packed index; `len` is the logical size.
    Sparse { len: u64, entries: Vec<(u64, f64)> },
}

impl Potential {
    pub fn constant_dense(len: u64, value: f64) -> Self {
        Potential::Dense(vec![value; len as usize])
    }

    pub fn len(&self) -> u64 {
        match self {
            Potential::Dense(v) => v.len() as u64,
            Potential::Sparse { len, .. } => *len,
        }
    }

    /// Number of stored cells.
    pub fn stored(&self) -> usize {
        match self {
            Potential::Dense(v) => v.len(),
            Potential::Sparse { entries, .. } => entries.len(),
        }
    }

    /// Number of strictly positive cells.
    pub fn support(&self) -> usize {
        match self {
            Potential::Dense(v) => v.iter().filter(|&&x| x > 0.0).count(),
            Potential::Sparse { entries, .. } => {
                entries.iter().filter(|&&(_, x)| x > 0.0).count()
            }
        }
    }

    pub fn get(&self, idx: u64) -> f64 {
        match self {
            Potential::Dense(v) => v[idx as usize],
            Potential::Sparse { entries, .. } => entries
                .binary_search_by_key(&idx, |e| e.0)
                .map(|i| entries[i].1)
                .unwrap_or(0.0),
        }
    }

    pub fn sum(&self) -> f64 {
        match self {
            Potential::Dense(v) => v.iter().sum(),
            Potential::Sparse { entries, .. } => entries.iter().map(|e| e.1).sum(),
        }
    }

    pub fn scale(&mut self, c: f64) {
        match self {
            Potential::Dense(v) => v.iter_mut().for_each(|x| *x *= c),
            Potential::Sparse { entries, .. } => entries.iter_mut().for_each(|e| e.1 *= c),
        }
    }

    pub fn fill(&mut self, value: f64) {
        match self {
            Potential::Dense(v) => v.iter_mut().for_each(|x| *x = value),
            Potential::Sparse { entries, .. } => entries.iter_mut().for_each(|e| e.1 = value),
        }
    }

    pub fn for_each(&self, mut f: impl FnMut(u64, f64)) {
        match self {
            Potential::Dense(v) => {
                for (i, &x) in v.iter().enumerate() {
                    f(i as u64, x);
                }
            }
            Potential::Sparse { entries, .. } => {
                for &(i, x) in entries {
                    f(i, x);
                }
            }
        }
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(u64, &mut f64)) {
        match self {
            Potential::Dense(v) => {
                for (i, x) in v.iter_mut().enumerate() {
                    f(i as u64, x);
                }
            }
            Potential::Sparse { entries, .. } => {
                for (i, x) in entries.iter_mut() {
                    f(*i, x);
                }
            }
        }
    }

    /// Drop zero cells and switch to the sparse representation. Returns the
    /// number of stored cells afterwards.
    pub fn compress(&mut self) -> usize {
        let len = self.len();
        let mut entries = Vec::new();
        self.for_each(|i, x| {
            if x > 0.0 {
                entries.push((i, x));
            }
        });
        let n = entries.len();
        *self = Potential::Sparse { len, entries };
        n
    }
}
