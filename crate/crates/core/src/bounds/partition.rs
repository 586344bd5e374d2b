use crate::error::{Error, Result};

/// Set partition of the modes `0..n` into disjoint blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Canonicalizes block order; fails unless the blocks cover `0..n` exactly once.
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        for b in &mut blocks {
            if b.is_empty() {
                return Err(Error::InvalidRegister("empty block".into()));
            }
            b.sort_unstable();
        }
        blocks.sort();
        let mut all: Vec<usize> = blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        if all.iter().enumerate().any(|(i, &m)| i != m) {
            return Err(Error::InvalidRegister(format!(
                "blocks {blocks:?} do not partition 0..{}",
                all.len()
            )));
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_modes(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn max_block(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Block index holding each mode.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.num_modes()];
        for (b, block) in self.blocks.iter().enumerate() {
            for &m in block {
                out[m] = b;
            }
        }
        out
    }

    /// True if every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Self) -> bool {
        let owner = other.block_of();
        self.blocks
            .iter()
            .all(|b| b.iter().all(|&m| owner[m] == owner[b[0]]))
    }

    pub fn label(&self, names: &[&str]) -> String {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&m| names.get(m).copied().unwrap_or("?")).collect::<String>())
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// All set partitions of `n` modes whose blocks have at most `k` modes.
pub fn enumerate_partitions(n: usize, k: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    grow(0, n, k, &mut blocks, &mut out);
    out
}

fn grow(m: usize, n: usize, k: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Partition>) {
    if m == n {
        out.push(Partition::new(blocks.clone()).expect("complete by construction"));
        return;
    }
    for b in 0..blocks.len() {
        if blocks[b].len() < k {
            blocks[b].push(m);
            grow(m + 1, n, k, blocks, out);
            blocks[b].pop();
        }
    }
    blocks.push(vec![m]);
    grow(m + 1, n, k, blocks, out);
    blocks.pop();
}

/// Partitions with blocks of at most `k` modes that are not a strict
/// refinement of another such partition. Every product state over a
/// refinement is also a product over the coarser partition, so these
/// generate the whole k-producible class.
pub fn maximal_partitions(n: usize, k: usize) -> Vec<Partition> {
    let all = enumerate_partitions(n, k);
    all.iter()
        .filter(|p| !all.iter().any(|q| q != *p && p.refines(q)))
        .cloned()
        .collect()
}
