//! The edge-removal procedure on a fixed tree.
//!
//! At every step one edge is drawn uniformly from the edges of *all* current
//! components (not per component). The cut component splits into its root
//! side and the hanging subtree; a side without target labels is discarded.
//! The run ends when every target is an isolated vertex.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exactdist::{ExactPmf, Law};
use crate::numeric::Rational;
use crate::tree::{Children, RecursiveTree};

/// Largest tree accepted by [`exact_pmf_for_tree`].
pub const ORACLE_CAP: usize = 9;

/// Label selection rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    /// labels `1..=l`
    First,
    /// labels `n+1-l..=n`
    Last,
    /// uniform `l`-subset of `1..=n`
    Random,
}

impl Rule {
    pub const ALL: [Rule; 3] = [Rule::First, Rule::Last, Rule::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Rule::First => "first",
            Rule::Last => "last",
            Rule::Random => "random",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Rule::First),
            "last" => Ok(Rule::Last),
            "random" => Ok(Rule::Random),
            other => Err(invalid!("unknown rule {other:?}")),
        }
    }
}

/// Strictly increasing, non-empty set of target labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelSet {
    labels: Vec<u32>,
}

impl LabelSet {
    pub fn new(mut labels: Vec<u32>, n: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(invalid!("label set must be non-empty"));
        }
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid!("duplicate target label"));
        }
        if labels[0] == 0 || labels[labels.len() - 1] as usize > n {
            return Err(invalid!("target labels must lie in 1..={n}"));
        }
        Ok(LabelSet { labels })
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn max_label(&self) -> u32 {
        self.labels[self.labels.len() - 1]
    }

    fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n + 1];
        for &l in &self.labels {
            m[l as usize] = true;
        }
        m
    }
}

pub fn select_labels<R: Rng + ?Sized>(rule: Rule, n: usize, ell: usize, rng: &mut R) -> Result<LabelSet> {
    if ell == 0 || ell > n {
        return Err(invalid!("need 1 <= l <= n, got l = {ell}, n = {n}"));
    }
    let labels = match rule {
        Rule::First => (1..=ell as u32).collect(),
        Rule::Last => ((n + 1 - ell) as u32..=n as u32).collect(),
        Rule::Random => rand::seq::index::sample(rng, n, ell).into_iter().map(|i| i as u32 + 1).collect(),
    };
    LabelSet::new(labels, n)
}

/// One removed edge and the components kept from the split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    /// `[parent, child]`
    pub edge: [u32; 2],
    /// Each kept part as `[root, other labels ascending...]`.
    pub kept: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutRecord {
    pub cuts: u64,
    pub trace: Option<Vec<TraceStep>>,
}

/// A forest state of the procedure on a fixed tree.
///
/// Edges are named by their child endpoint: edge `c` joins `c` and
/// `parent(c)`. Discarded nodes carry no alive edges and are not retained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Forest {
    parents: Vec<u32>,
    alive: Vec<bool>,
    retained: Vec<bool>,
    target: Vec<bool>,
}

impl Forest {
    pub fn new(t: &RecursiveTree, s: &LabelSet) -> Result<Self> {
        let n = t.size();
        if s.max_label() as usize > n {
            return Err(invalid!("target label exceeds the tree size {n}"));
        }
        let mut alive = vec![true; n + 1];
        alive[0] = false;
        alive[1] = false;
        let mut retained = vec![true; n + 1];
        retained[0] = false;
        Ok(Forest { parents: t.parents().to_vec(), alive, retained, target: s.mask(n) })
    }

    fn n(&self) -> usize {
        self.parents.len() + 1
    }

    fn parent_of(&self, c: usize) -> usize {
        self.parents[c - 2] as usize
    }

    /// Alive edges as `(parent, child)` pairs, by increasing child.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        (2..=self.n()).filter(|&c| self.alive[c]).map(|c| (self.parent_of(c) as u32, c as u32)).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn is_isolated(&self) -> bool {
        self.edge_count() == 0
    }

    fn root_of(&self, mut v: usize) -> usize {
        while v != 1 && self.alive[v] {
            v = self.parent_of(v);
        }
        v
    }

    /// Nodes reachable from `root` through alive edges, ascending.
    fn component_from(&self, root: usize) -> Vec<usize> {
        let n = self.n();
        let mut inside = vec![false; n + 1];
        inside[root] = true;
        let mut out = vec![root];
        for c in root + 1..=n {
            if self.alive[c] && inside[self.parent_of(c)] {
                inside[c] = true;
                out.push(c);
            }
        }
        out
    }

    /// Components as `(root, labels ascending)` ordered by root.
    pub fn components(&self) -> Vec<(u32, Vec<u32>)> {
        (1..=self.n())
            .filter(|&v| self.retained[v] && (v == 1 || !self.alive[v]))
            .map(|r| (r as u32, self.component_from(r).into_iter().map(|v| v as u32).collect()))
            .collect()
    }

    pub fn target_labels(&self) -> Vec<u32> {
        (1..=self.n()).filter(|&v| self.target[v]).map(|v| v as u32).collect()
    }

    /// Removes edge `(u, v)` and discards whichever side holds no target.
    pub fn cut_step(&self, u: u32, v: u32) -> Result<Forest> {
        let (u, v) = (u as usize, v as usize);
        let (p, c) = if u < v { (u, v) } else { (v, u) };
        if c < 2 || c > self.n() || !self.alive[c] || self.parent_of(c) != p {
            return Err(invalid!("({u}, {v}) is not an edge of the forest"));
        }
        let root = self.root_of(p);
        let mut next = self.clone();
        next.alive[c] = false;
        let lower = next.component_from(c);
        let upper = next.component_from(root);
        for part in [&lower, &upper] {
            if !part.iter().any(|&x| self.target[x]) {
                for &x in part.iter() {
                    next.alive[x] = false;
                    next.retained[x] = false;
                }
            }
        }
        Ok(next)
    }
}

/// Runs the procedure once on `t` with targets `s`.
pub fn isolate<R: Rng + ?Sized>(t: &RecursiveTree, s: &LabelSet, rng: &mut R, want_trace: bool) -> Result<CutRecord> {
    let mut iso = Isolator::default();
    iso.run(t, s, rng, want_trace)
}

/// Reusable buffers for repeated runs of [`isolate`].
///
/// Alive edges live in a dense array (swap-remove), so a uniform edge is one
/// random index. `below[v]` counts targets in the current subtree of `v`; a
/// cut that keeps both sides walks up to the component root to update it,
/// which is `O(depth)`. Discarded parts are swept once each.
#[derive(Debug, Default)]
pub struct Isolator {
    parents: Vec<u32>,
    children: Option<Children>,
    below: Vec<u32>,
    alive: Vec<u32>,
    pos: Vec<u32>,
    stack: Vec<u32>,
}

const DEAD: u32 = u32::MAX;

impl Isolator {
    pub fn run<R: Rng + ?Sized>(
        &mut self,
        t: &RecursiveTree,
        s: &LabelSet,
        rng: &mut R,
        want_trace: bool,
    ) -> Result<CutRecord> {
        let n = t.size();
        if s.max_label() as usize > n {
            return Err(invalid!("target label exceeds the tree size {n}"));
        }
        self.parents.clear();
        self.parents.extend_from_slice(t.parents());
        self.children = Some(t.children());
        self.below.clear();
        self.below.resize(n + 1, 0);
        for &l in s.labels() {
            self.below[l as usize] = 1;
        }
        for c in (2..=n).rev() {
            let p = self.parents[c - 2] as usize;
            self.below[p] += self.below[c];
        }
        self.alive.clear();
        self.alive.extend(2..=n as u32);
        self.pos.clear();
        self.pos.resize(n + 1, DEAD);
        for c in 2..=n {
            self.pos[c] = (c - 2) as u32;
        }

        let mut trace = want_trace.then(Vec::new);
        let mut cuts = 0u64;
        while !self.alive.is_empty() {
            let c = self.alive[rng.random_range(0..self.alive.len())] as usize;
            let p = self.parent(c);
            self.kill(c);
            cuts += 1;
            let mut root = p;
            while root != 1 && self.is_alive(root) {
                root = self.parent(root);
            }
            let lower = self.below[c];
            let total = self.below[root];
            let mut kept_roots: Vec<usize> = Vec::with_capacity(2);
            if lower == 0 {
                self.sweep(c);
                kept_roots.push(root);
            } else if lower == total {
                self.sweep(root);
                kept_roots.push(c);
            } else {
                let mut v = p;
                loop {
                    self.below[v] -= lower;
                    if v == root {
                        break;
                    }
                    v = self.parent(v);
                }
                kept_roots.push(root);
                kept_roots.push(c);
            }
            if let Some(tr) = trace.as_mut() {
                let kept = kept_roots.iter().map(|&r| self.component_labels(r)).collect();
                tr.push(TraceStep { edge: [p as u32, c as u32], kept });
            }
        }
        assert!(cuts >= s.len() as u64 - 1 && cuts < n as u64);
        Ok(CutRecord { cuts, trace })
    }

    fn parent(&self, c: usize) -> usize {
        self.parents[c - 2] as usize
    }

    fn is_alive(&self, c: usize) -> bool {
        self.pos[c] != DEAD
    }

    fn kill(&mut self, c: usize) {
        let at = self.pos[c] as usize;
        let last = self.alive.pop().expect("alive edge");
        if at < self.alive.len() {
            self.alive[at] = last;
            self.pos[last as usize] = at as u32;
        }
        self.pos[c] = DEAD;
    }

    /// Discards the component hanging below `top` (`top`'s own edge, if any,
    /// is already dead or stays untouched).
    fn sweep(&mut self, top: usize) {
        let children = self.children.take().expect("children built");
        self.stack.clear();
        self.stack.push(top as u32);
        while let Some(v) = self.stack.pop() {
            for &w in children.of(v as usize) {
                if self.is_alive(w as usize) {
                    self.kill(w as usize);
                    self.stack.push(w);
                }
            }
        }
        self.children = Some(children);
    }

    fn component_labels(&self, root: usize) -> Vec<u32> {
        let children = self.children.as_ref().expect("children built");
        let mut rest = Vec::new();
        let mut stack = vec![root as u32];
        while let Some(v) = stack.pop() {
            for &w in children.of(v as usize) {
                if self.is_alive(w as usize) {
                    rest.push(w);
                    stack.push(w);
                }
            }
        }
        rest.sort_unstable();
        let mut out = vec![root as u32];
        out.extend(rest);
        out
    }
}

/// Exact law of the cut count for this tree and this label set, by
/// recursion over uniform edge choices memoised on the alive-edge set.
pub fn exact_pmf_for_tree(t: &RecursiveTree, s: &LabelSet) -> Result<ExactPmf<Rational>> {
    let n = t.size();
    if n > ORACLE_CAP {
        return Err(Error::BudgetExceeded(format!("exact per-tree recursion is capped at n <= {ORACLE_CAP}, got {n}")));
    }
    if s.max_label() as usize > n {
        return Err(invalid!("target label exceeds the tree size {n}"));
    }
    let oracle = MaskOracle::new(t, s);
    let full: u32 = (2..=n).fold(0, |m, c| m | (1 << c));
    let mut memo = HashMap::new();
    let probs = oracle.pmf(full, &mut memo);
    ExactPmf::new(Law::PerTree, n, s.len(), probs)
}

/// Per-tree exact laws averaged over all `(n-1)!` trees and, for the random
/// rule, over all `binom(n, l)` label sets.
pub fn averaged_oracle_pmf(rule: Rule, n: usize, ell: usize) -> Result<ExactPmf<Rational>> {
    if ell == 0 || ell > n {
        return Err(invalid!("need 1 <= l <= n, got l = {ell}, n = {n}"));
    }
    let trees = crate::tree::enumerate_all(n)?;
    let label_sets: Vec<LabelSet> = match rule {
        Rule::First => vec![LabelSet::new((1..=ell as u32).collect(), n)?],
        Rule::Last => vec![LabelSet::new(((n + 1 - ell) as u32..=n as u32).collect(), n)?],
        Rule::Random => subsets(n as u32, ell).into_iter().map(|l| LabelSet::new(l, n)).collect::<Result<_>>()?,
    };
    let mut acc = vec![Rational::zero(); n];
    for t in &trees {
        for s in &label_sets {
            for (m, p) in exact_pmf_for_tree(t, s)?.support() {
                acc[m] += p;
            }
        }
    }
    let count = Rational::from_integer((trees.len() * label_sets.len()).into());
    let probs = acc.into_iter().map(|x| x / &count).collect();
    ExactPmf::new(Law::from(rule), n, ell, probs)
}

/// All `k`-subsets of `1..=n`, ascending, in lexicographic order.
fn subsets(n: u32, k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur: Vec<u32> = (1..=k as u32).collect();
    if k as u32 > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - (k - 1 - i) as u32 {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

struct MaskOracle {
    n: usize,
    parents: Vec<usize>,
    target: u32,
}

impl MaskOracle {
    fn new(t: &RecursiveTree, s: &LabelSet) -> Self {
        MaskOracle {
            n: t.size(),
            parents: std::iter::once(0)
                .chain(std::iter::once(0))
                .chain(t.parents().iter().map(|&p| p as usize))
                .collect(),
            target: s.labels().iter().fold(0, |m, &l| m | (1 << l)),
        }
    }

    /// Node set hanging from `top` through edges in `alive`.
    fn hang(&self, alive: u32, top: usize) -> u32 {
        let mut set = 1u32 << top;
        for c in top + 1..=self.n {
            if alive & (1 << c) != 0 && set & (1 << self.parents[c]) != 0 {
                set |= 1 << c;
            }
        }
        set
    }

    fn step(&self, alive: u32, c: usize) -> u32 {
        let mut root = self.parents[c];
        while root != 1 && alive & (1 << root) != 0 {
            root = self.parents[root];
        }
        let mut next = alive & !(1 << c);
        let lower = self.hang(next, c);
        let upper = self.hang(next, root);
        // a discarded side loses every edge it still holds
        if lower & self.target == 0 {
            next &= !lower;
        }
        if upper & self.target == 0 {
            next &= !(upper & !(1 << root));
        }
        next
    }

    fn pmf(&self, alive: u32, memo: &mut HashMap<u32, Vec<Rational>>) -> Vec<Rational> {
        if alive == 0 {
            return vec![Rational::one()];
        }
        if let Some(hit) = memo.get(&alive) {
            return hit.clone();
        }
        let edges: Vec<usize> = (2..=self.n).filter(|&c| alive & (1 << c) != 0).collect();
        let weight = Rational::new(1.into(), (edges.len() as i64).into());
        let mut acc: Vec<Rational> = Vec::new();
        for &c in &edges {
            let sub = self.pmf(self.step(alive, c), memo);
            if acc.len() < sub.len() + 1 {
                acc.resize(sub.len() + 1, Rational::zero());
            }
            for (m, p) in sub.iter().enumerate() {
                acc[m + 1] += p * &weight;
            }
        }
        memo.insert(alive, acc.clone());
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;
    use crate::tree::enumerate_all;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tree(s: &str) -> RecursiveTree {
        s.parse().unwrap()
    }

    fn labels(ls: &[u32], n: usize) -> LabelSet {
        LabelSet::new(ls.to_vec(), n).unwrap()
    }

    fn comps(f: &Forest) -> Vec<Vec<u32>> {
        f.components().into_iter().map(|(_, c)| c).collect()
    }

    #[test]
    fn cut_step_examples() {
        let path = tree("1,2");
        let f = Forest::new(&path, &labels(&[1], 3)).unwrap();
        assert_eq!(comps(&f.cut_step(1, 2).unwrap()), vec![vec![1]]);

        let f = Forest::new(&path, &labels(&[1, 3], 3)).unwrap();
        assert_eq!(comps(&f.cut_step(2, 3).unwrap()), vec![vec![1, 2], vec![3]]);

        let star = tree("1,1");
        let f = Forest::new(&star, &labels(&[1], 3)).unwrap();
        let g = f.cut_step(1, 2).unwrap();
        assert_eq!(comps(&g), vec![vec![1, 3]]);
        assert_eq!(g.edges(), vec![(1, 3)]);

        assert!(f.cut_step(2, 3).is_err());
        assert!(g.cut_step(1, 2).is_err());
    }

    #[test]
    fn cut_step_discards_root_side() {
        // path 1-2-3, target {3}: cutting (1,2) drops node 1
        let f = Forest::new(&tree("1,2"), &labels(&[3], 3)).unwrap();
        let g = f.cut_step(2, 1).unwrap();
        assert_eq!(g.components(), vec![(2, vec![2, 3])]);
        let h = g.cut_step(2, 3).unwrap();
        assert_eq!(h.components(), vec![(3, vec![3])]);
        assert!(h.is_isolated());
    }

    #[test]
    fn label_selection() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(select_labels(Rule::First, 5, 2, &mut rng).unwrap().labels(), &[1, 2]);
        assert_eq!(select_labels(Rule::Last, 5, 2, &mut rng).unwrap().labels(), &[4, 5]);
        assert!(select_labels(Rule::Random, 5, 0, &mut rng).is_err());
        assert!(select_labels(Rule::First, 5, 6, &mut rng).is_err());
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            let s = select_labels(Rule::Random, 3, 1, &mut rng).unwrap();
            counts[s.labels()[0] as usize] += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts[1..] {
            assert!((c as f64 - draws as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn label_set_validation() {
        assert!(LabelSet::new(vec![], 3).is_err());
        assert!(LabelSet::new(vec![2, 2], 3).is_err());
        assert!(LabelSet::new(vec![4], 3).is_err());
        assert!(LabelSet::new(vec![0], 3).is_err());
        assert_eq!(LabelSet::new(vec![3, 1], 3).unwrap().labels(), &[1, 3]);
    }

    #[test]
    fn isolate_simple_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let two = tree("1");
        for _ in 0..20 {
            assert_eq!(isolate(&two, &labels(&[1], 2), &mut rng, false).unwrap().cuts, 1);
        }
        for t in enumerate_all(5).unwrap() {
            let all = labels(&[1, 2, 3, 4, 5], 5);
            assert_eq!(isolate(&t, &all, &mut rng, false).unwrap().cuts, 4);
        }
    }

    #[test]
    fn cut_count_bounds_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut iso = Isolator::default();
        for _ in 0..200 {
            let n = rng.random_range(1..60);
            let t = crate::tree::grow_random(n, &mut rng).unwrap();
            let ell = rng.random_range(1..=n);
            let s = select_labels(Rule::Random, n, ell, &mut rng).unwrap();
            let rec = iso.run(&t, &s, &mut rng, false).unwrap();
            assert!(rec.cuts + 1 >= ell as u64 && rec.cuts < n as u64 || n == 1);
        }
    }

    #[test]
    fn trace_replays_through_cut_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let t = crate::tree::grow_random(12, &mut rng).unwrap();
            let s = select_labels(Rule::Random, 12, 3, &mut rng).unwrap();
            let rec = isolate(&t, &s, &mut rng, true).unwrap();
            let trace = rec.trace.unwrap();
            assert_eq!(trace.len() as u64, rec.cuts);
            let mut f = Forest::new(&t, &s).unwrap();
            for step in &trace {
                f = f.cut_step(step.edge[0], step.edge[1]).unwrap();
                let all = f.components();
                for kept in &step.kept {
                    assert!(all.iter().any(|(r, c)| *r == kept[0] && {
                        let mut sorted = kept.clone();
                        sorted.sort_unstable();
                        *c == sorted
                    }));
                }
            }
            assert!(f.is_isolated());
            let mut singles: Vec<u32> = f.components().into_iter().map(|(r, _)| r).collect();
            singles.sort_unstable();
            assert_eq!(singles, s.labels());
        }
    }

    #[test]
    fn label_subsets() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(4, 2)[0], vec![1, 2]);
        assert_eq!(subsets(4, 2)[5], vec![3, 4]);
        assert_eq!(subsets(3, 3), vec![vec![1, 2, 3]]);
    }

    #[test]
    fn averaged_oracle_small() {
        // n = 3, first label: the path needs one or two cuts, the star two
        let p = averaged_oracle_pmf(Rule::First, 3, 1).unwrap();
        assert_eq!(
            p.probs(),
            &[Rational::zero(), Rational::new(1.into(), 4.into()), Rational::new(3.into(), 4.into())]
        );
        assert!(averaged_oracle_pmf(Rule::Random, 3, 4).is_err());
    }

    #[test]
    fn oracle_examples() {
        let path = exact_pmf_for_tree(&tree("1,2"), &labels(&[1], 3)).unwrap();
        assert_eq!(path.prob(1), rat(1, 2));
        assert_eq!(path.prob(2), rat(1, 2));
        let star = exact_pmf_for_tree(&tree("1,1"), &labels(&[1], 3)).unwrap();
        assert_eq!(star.prob(2), rat(1, 1));
        assert_eq!(star.prob(1), rat(0, 1));
        for t in enumerate_all(5).unwrap() {
            let all = exact_pmf_for_tree(&t, &labels(&[1, 2, 3, 4, 5], 5)).unwrap();
            assert_eq!(all.prob(4), rat(1, 1));
        }
        assert!(matches!(
            exact_pmf_for_tree(
                &crate::tree::grow_random(10, &mut ChaCha8Rng::seed_from_u64(0)).unwrap(),
                &labels(&[1], 10)
            ),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn six_node_tree_with_three_targets_admits_four_cuts() {
        let s = labels(&[1, 4, 6], 6);
        let witness =
            enumerate_all(6).unwrap().into_iter().any(|t| !exact_pmf_for_tree(&t, &s).unwrap().prob(4).is_zero());
        assert!(witness);
    }

    /// Brute force over every edge order through `Forest::cut_step`.
    fn brute_force(f: &Forest) -> Vec<Rational> {
        let edges = f.edges();
        if edges.is_empty() {
            return vec![Rational::one()];
        }
        let w = rat(1, edges.len() as i64);
        let mut acc = Vec::new();
        for (u, v) in edges {
            let sub = brute_force(&f.cut_step(u, v).unwrap());
            if acc.len() < sub.len() + 1 {
                acc.resize(sub.len() + 1, Rational::zero());
            }
            for (m, p) in sub.into_iter().enumerate() {
                acc[m + 1] += p * &w;
            }
        }
        acc
    }

    #[test]
    fn oracle_matches_forest_brute_force() {
        for t in enumerate_all(5).unwrap() {
            for mask in 1u32..32 {
                let ls: Vec<u32> = (1..=5).filter(|l| mask & (1 << (l - 1)) != 0).collect();
                let s = labels(&ls, 5);
                let exact = exact_pmf_for_tree(&t, &s).unwrap();
                let brute = brute_force(&Forest::new(&t, &s).unwrap());
                for m in 0..5 {
                    let b = brute.get(m).cloned().unwrap_or_else(Rational::zero);
                    assert_eq!(exact.prob(m), b, "tree {t} labels {ls:?} m {m}");
                }
            }
        }
    }

    #[test]
    fn simulation_matches_oracle_on_a_fixed_tree() {
        let t = tree("1,1,2,3,2");
        let s = labels(&[2, 5], 6);
        let exact = exact_pmf_for_tree(&t, &s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let draws = 200_000;
        let mut counts = [0usize; 6];
        let mut iso = Isolator::default();
        for _ in 0..draws {
            counts[iso.run(&t, &s, &mut rng, false).unwrap().cuts as usize] += 1;
        }
        for m in 0..6 {
            let p = crate::numeric::Weight::to_f64(&exact.prob(m));
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!((counts[m] as f64 - draws as f64 * p).abs() <= 4.0 * sigma + 1e-9, "m={m}");
        }
    }
}
