//! Recursive trees in parent-array form.
//!
//! Node `1` is the root; every other node `i` stores `parent(i) < i`, which is
//! exactly the increasing-label condition. The canonical text form is the
//! comma separated list `p2,p3,...,pn` (empty for a single node).

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{invalid, Error, Result};

/// Largest size accepted by [`enumerate_all`]; `9!` trees.
pub const ENUMERATION_CAP: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecursiveTree {
    // parents[i - 2] = parent(i)
    parents: Vec<u32>,
}

impl RecursiveTree {
    pub fn single() -> Self {
        RecursiveTree { parents: Vec::new() }
    }

    /// Builds a tree from `[parent(2), ..., parent(n)]`, rejecting anything
    /// that is not increasingly labelled.
    pub fn from_parents(parents: Vec<u32>) -> Result<Self> {
        validate(&parents).map_err(Error::InvalidArgument)?;
        Ok(RecursiveTree { parents })
    }

    pub fn size(&self) -> usize {
        self.parents.len() + 1
    }

    pub fn edge_count(&self) -> usize {
        self.parents.len()
    }

    /// Parent of node `i`, `None` for the root.
    pub fn parent(&self, i: usize) -> Option<usize> {
        if i < 2 {
            None
        } else {
            self.parents.get(i - 2).map(|&p| p as usize)
        }
    }

    /// `[parent(2), ..., parent(n)]`.
    pub fn parents(&self) -> &[u32] {
        &self.parents
    }

    /// Children lists in compressed form: the children of `v` are
    /// `targets[offsets[v]..offsets[v + 1]]`, in increasing label order.
    pub fn children(&self) -> Children {
        Children::build(&self.parents)
    }

    /// Subtree sizes indexed by label (index 0 unused).
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let n = self.size();
        let mut size = vec![1usize; n + 1];
        size[0] = 0;
        for i in (2..=n).rev() {
            let p = self.parents[i - 2] as usize;
            size[p] += size[i];
        }
        size
    }
}

impl fmt::Display for RecursiveTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, p) in self.parents.iter().enumerate() {
            if idx > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for RecursiveTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(RecursiveTree::single());
        }
        let parents = s
            .split(',')
            .map(|tok| tok.trim().parse::<u32>().map_err(|_| invalid!("bad parent entry {tok:?}")))
            .collect::<Result<Vec<_>>>()?;
        RecursiveTree::from_parents(parents)
    }
}

/// Compressed adjacency (children only).
#[derive(Clone, Debug)]
pub struct Children {
    pub offsets: Vec<u32>,
    pub targets: Vec<u32>,
}

impl Children {
    fn build(parents: &[u32]) -> Self {
        let n = parents.len() + 1;
        let mut offsets = vec![0u32; n + 2];
        for &p in parents {
            offsets[p as usize + 1] += 1;
        }
        for v in 1..offsets.len() {
            offsets[v] += offsets[v - 1];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; parents.len()];
        for (idx, &p) in parents.iter().enumerate() {
            let slot = &mut fill[p as usize];
            targets[*slot as usize] = (idx + 2) as u32;
            *slot += 1;
        }
        Children { offsets, targets }
    }

    pub fn of(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }
}

/// Checks the increasing-label condition on `[parent(2), ..., parent(n)]`.
pub fn validate(parents: &[u32]) -> std::result::Result<(), String> {
    for (idx, &p) in parents.iter().enumerate() {
        let i = idx + 2;
        if p == 0 || p as usize >= i {
            return Err(format!("parent({i}) = {p} violates 1 <= parent({i}) < {i}"));
        }
    }
    Ok(())
}

/// Uniform random recursive tree of size `n`, grown by attaching node `i` to
/// a uniformly chosen node among `1..i`.
pub fn grow_random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<RecursiveTree> {
    if n == 0 {
        return Err(invalid!("tree size must be at least 1"));
    }
    if n > u32::MAX as usize {
        return Err(invalid!("tree size {n} exceeds the u32 label range"));
    }
    let parents = (2..=n as u32).map(|i| rng.random_range(1..i)).collect();
    Ok(RecursiveTree { parents })
}

/// All `(n-1)!` recursive trees of size `n`, lexicographic in the parent
/// vector.
pub fn enumerate_all(n: usize) -> Result<Vec<RecursiveTree>> {
    if n == 0 {
        return Err(invalid!("tree size must be at least 1"));
    }
    if n > ENUMERATION_CAP {
        return Err(Error::BudgetExceeded(format!(
            "enumeration of size-{n} trees exceeds the cap n <= {ENUMERATION_CAP}"
        )));
    }
    let total: usize = (1..n).product();
    let mut out = Vec::with_capacity(total);
    let mut parents = vec![1u32; n - 1];
    loop {
        out.push(RecursiveTree { parents: parents.clone() });
        // odometer: the last position varies fastest
        let mut pos = parents.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            let max = (pos + 1) as u32; // node pos + 2 may attach to 1..=pos+1
            if parents[pos] < max {
                parents[pos] += 1;
                break;
            }
            parents[pos] = 1;
        }
    }
}
