use crate::error::{Error, Result};

/// Hard ceiling on the Hilbert-space dimension of a register.
pub const MAX_DIM: usize = 1 << 22;

/// Ordered set of named bosonic modes sharing one photon-number cutoff.
///
/// Basis states are occupation tuples `(n_0, .., n_{M-1})` with every
/// `n_i <= cutoff`, indexed row-major with the first mode most significant:
/// `index = sum_i n_i * (cutoff + 1)^(M - 1 - i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModeRegister {
    labels: Vec<String>,
    cutoff: usize,
    dim: usize,
}

impl ModeRegister {
    pub fn new<I, S>(labels: I, cutoff: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidRegister("no modes".into()));
        }
        if cutoff == 0 {
            return Err(Error::InvalidRegister("cutoff must be at least 1".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidRegister(format!("duplicate mode `{l}`")));
            }
        }
        let mut dim = 1usize;
        for _ in 0..labels.len() {
            dim = dim
                .checked_mul(cutoff + 1)
                .filter(|d| *d <= MAX_DIM)
                .ok_or_else(|| {
                    Error::InvalidRegister(format!(
                        "{} modes at cutoff {cutoff} exceed {MAX_DIM} basis states",
                        labels.len()
                    ))
                })?;
        }
        Ok(Self { labels, cutoff, dim })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn num_modes(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn stride(&self, mode: usize) -> usize {
        (self.cutoff + 1).pow((self.num_modes() - 1 - mode) as u32)
    }

    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % (self.cutoff + 1)
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        (0..self.num_modes())
            .map(|m| self.occupation(index, m))
            .collect()
    }

    pub fn total_photons(&self, index: usize) -> usize {
        let base = self.cutoff + 1;
        let mut rest = index;
        let mut total = 0;
        while rest > 0 {
            total += rest % base;
            rest /= base;
        }
        total
    }

    pub fn index_of(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.num_modes() {
            return Err(Error::Dimension(format!(
                "{} occupations for {} modes",
                occupations.len(),
                self.num_modes()
            )));
        }
        let mut idx = 0;
        for (m, &n) in occupations.iter().enumerate() {
            if n > self.cutoff {
                return Err(Error::CutoffOverflow {
                    mode: self.labels[m].clone(),
                    cutoff: self.cutoff,
                });
            }
            idx = idx * (self.cutoff + 1) + n;
        }
        Ok(idx)
    }

    /// Register over the listed modes, in the listed order.
    pub fn subset(&self, modes: &[usize]) -> Result<Self> {
        Self::new(modes.iter().map(|&m| self.labels[m].clone()), self.cutoff)
    }

    pub fn relabel<I, S>(&self, labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let out = Self::new(labels, self.cutoff)?;
        if out.num_modes() != self.num_modes() {
            return Err(Error::Dimension("relabel changes the mode count".into()));
        }
        Ok(out)
    }

    /// Concatenation `self ⊗ other`; both must share the cutoff.
    pub fn join(&self, other: &Self) -> Result<Self> {
        if self.cutoff != other.cutoff {
            return Err(Error::InvalidRegister(format!(
                "cannot join cutoffs {} and {}",
                self.cutoff, other.cutoff
            )));
        }
        Self::new(
            self.labels.iter().chain(other.labels.iter()).cloned(),
            self.cutoff,
        )
    }

    /// Indices whose occupation is zero in every listed mode.
    pub(crate) fn base_indices(&self, modes: &[usize]) -> Vec<usize> {
        (0..self.dim)
            .filter(|&i| modes.iter().all(|&m| self.occupation(i, m) == 0))
            .collect()
    }
}
