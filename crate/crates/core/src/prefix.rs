//! The common prefix problem on trees of attribute sets.
//!
//! Each vertex carries an attribute set; a solution picks one permutation
//! per vertex and earns `f(|p_i ∧ p_j|)` on every edge. Paths are solved
//! exactly by interval DP, binary trees approximately by splitting the edge
//! set into two families of short paths.

use std::collections::VecDeque;
use std::fmt::Debug;

use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};

use crate::error::PrefixError;
use crate::order::{Attribute, AttributeSet, PermutationRule, SortOrder};

/// Numeric type for benefit values. Implemented for every exact or
/// floating type with the usual arithmetic.
pub trait BenefitScalar: Num + Copy + PartialOrd + FromPrimitive + Debug {}

impl<T> BenefitScalar for T where T: Num + Copy + PartialOrd + FromPrimitive + Debug {}

/// Per-edge benefit as a function of the shared prefix length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenefitFn<T> {
    /// `f(ℓ) = ℓ`.
    Identity,
    /// `f(ℓ) = table[ℓ]`, saturating at the last entry.
    Table(Vec<T>),
}

impl<T: BenefitScalar> BenefitFn<T> {
    pub fn eval(&self, len: usize) -> T {
        match self {
            BenefitFn::Identity => T::from_usize(len).expect("prefix length representable"),
            BenefitFn::Table(t) => match t.get(len) {
                Some(v) => *v,
                None => t.last().copied().unwrap_or_else(T::zero),
            },
        }
    }

    fn validate(&self) -> Result<(), PrefixError> {
        if let BenefitFn::Table(t) = self {
            if t.first().is_some_and(|v| *v != T::zero()) || t.windows(2).any(|w| !(w[0] <= w[1])) {
                return Err(PrefixError::InvalidBenefitFn);
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrefixInstance<T> {
    vertices: Vec<AttributeSet>,
    edges: Vec<(usize, usize)>,
    f: BenefitFn<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assignment<T> {
    pub perms: Vec<SortOrder>,
    pub benefit: T,
}

impl<T: BenefitScalar> PrefixInstance<T> {
    /// Builds an instance; the edges must form a tree over all vertices.
    pub fn new(
        vertices: Vec<AttributeSet>,
        edges: Vec<(usize, usize)>,
        f: BenefitFn<T>,
    ) -> Result<Self, PrefixError> {
        f.validate()?;
        let n = vertices.len();
        if n == 0 {
            return Err(PrefixError::NotATree("no vertices".into()));
        }
        if edges.len() != n - 1 {
            return Err(PrefixError::NotATree(format!(
                "{} vertices need {} edges, got {}",
                n,
                n - 1,
                edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edges {
            if a >= n || b >= n || a == b {
                return Err(PrefixError::NotATree(format!("bad edge ({a}, {b})")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(PrefixError::NotATree("not connected".into()));
        }
        Ok(Self { vertices, edges, f })
    }

    /// A path `0 − 1 − … − n−1`.
    pub fn path(vertices: Vec<AttributeSet>, f: BenefitFn<T>) -> Result<Self, PrefixError> {
        let edges = (1..vertices.len()).map(|i| (i - 1, i)).collect();
        Self::new(vertices, edges, f)
    }

    pub fn vertices(&self) -> &[AttributeSet] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn benefit_fn(&self) -> &BenefitFn<T> {
        &self.f
    }

    fn is_index_path(&self) -> bool {
        self.edges
            .iter()
            .all(|&(a, b)| a.abs_diff(b) == 1)
    }

    /// `Σ f(|p_i ∧ p_j|)` over all edges.
    pub fn benefit(&self, perms: &[SortOrder]) -> Result<T, PrefixError> {
        if perms.len() != self.vertices.len() {
            return Err(PrefixError::InvalidAssignment {
                vertex: perms.len().min(self.vertices.len()),
                perm: format!("{} permutations", perms.len()),
                set: format!("{} vertices", self.vertices.len()),
            });
        }
        for (v, (p, s)) in perms.iter().zip(&self.vertices).enumerate() {
            if p.len() != s.len() || p.attr_set() != *s {
                return Err(PrefixError::InvalidAssignment {
                    vertex: v,
                    perm: p.to_string(),
                    set: s.to_string(),
                });
            }
        }
        Ok(self.benefit_unchecked(perms))
    }

    fn benefit_unchecked(&self, perms: &[SortOrder]) -> T {
        self.edges
            .iter()
            .fold(T::zero(), |acc, &(a, b)| acc + self.f.eval(perms[a].lcp_len(&perms[b])))
    }

    fn assignment(&self, perms: Vec<SortOrder>) -> Assignment<T> {
        let benefit = self.benefit_unchecked(&perms);
        Assignment { perms, benefit }
    }
}

/// Exact solution for a path whose edges join consecutive indices.
pub fn solve_path<T: BenefitScalar>(inst: &PrefixInstance<T>) -> Result<Assignment<T>, PrefixError> {
    solve_path_with(inst, &PermutationRule::lexicographic())
}

/// [`solve_path`] with a custom rule for the otherwise arbitrary orderings.
pub fn solve_path_with<T: BenefitScalar>(
    inst: &PrefixInstance<T>,
    rule: &PermutationRule,
) -> Result<Assignment<T>, PrefixError> {
    if !inst.is_index_path() {
        return Err(PrefixError::NotAPath);
    }
    let perms = path_permutations(&inst.vertices, &inst.f, rule);
    Ok(inst.assignment(perms))
}

struct PathDp<T> {
    n: usize,
    commons: Vec<AttributeSet>,
    split: Vec<usize>,
    opt: Vec<T>,
}

impl<T: BenefitScalar> PathDp<T> {
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    fn run(sets: &[AttributeSet], f: &BenefitFn<T>) -> Self {
        let n = sets.len();
        let mut dp = PathDp {
            n,
            commons: vec![AttributeSet::new(); n * n],
            split: vec![0; n * n],
            opt: vec![T::zero(); n * n],
        };
        for i in 0..n {
            let mut c = sets[i].clone();
            for j in i..n {
                c = c.intersection(&sets[j]);
                let at = dp.at(i, j);
                dp.commons[at] = c.clone();
            }
        }
        for len in 2..=n {
            for i in 0..=n - len {
                let j = i + len - 1;
                let gain = f.eval(dp.commons[dp.at(i, j)].len());
                let mut best: Option<(T, usize)> = None;
                for k in i..j {
                    let v = dp.opt[dp.at(i, k)] + dp.opt[dp.at(k + 1, j)] + gain;
                    if best.is_none_or(|(b, _)| v > b) {
                        best = Some((v, k));
                    }
                }
                let (v, k) = best.expect("segment of length >= 2 has a split");
                let at = dp.at(i, j);
                dp.opt[at] = v;
                dp.split[at] = k;
            }
        }
        dp
    }

    fn make(
        &self,
        i: usize,
        j: usize,
        prefix: &SortOrder,
        removed: &AttributeSet,
        sets: &[AttributeSet],
        rule: &PermutationRule,
        out: &mut [SortOrder],
    ) {
        if i == j {
            out[i] = rule.extend(prefix, &sets[i]);
            return;
        }
        let fresh = self.commons[self.at(i, j)].difference(removed);
        let prefix = prefix
            .concat(&rule.permute(&fresh))
            .expect("fresh commons are disjoint from the prefix");
        let removed = removed.union(&fresh);
        let k = self.split[self.at(i, j)];
        self.make(i, k, &prefix, &removed, sets, rule, out);
        self.make(k + 1, j, &prefix, &removed, sets, rule, out);
    }
}

fn path_permutations<T: BenefitScalar>(
    sets: &[AttributeSet],
    f: &BenefitFn<T>,
    rule: &PermutationRule,
) -> Vec<SortOrder> {
    if sets.is_empty() {
        return Vec::new();
    }
    let dp = PathDp::run(sets, f);
    let mut out = vec![SortOrder::empty(); sets.len()];
    dp.make(0, sets.len() - 1, &SortOrder::empty(), &AttributeSet::new(), sets, rule, &mut out);
    out
}

/// Rooted view of a binary tree: depth and children per vertex.
struct Rooted {
    depth: Vec<usize>,
    children: Vec<Vec<usize>>,
}

fn root_binary_tree<T>(inst: &PrefixInstance<T>) -> Result<Rooted, PrefixError> {
    let n = inst.vertices.len();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &inst.edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    let mut depth = vec![usize::MAX; n];
    let mut children = vec![Vec::new(); n];
    depth[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if depth[w] == usize::MAX {
                depth[w] = depth[v] + 1;
                children[v].push(w);
                queue.push_back(w);
            }
        }
        if children[v].len() > 2 {
            return Err(PrefixError::NotABinaryTree);
        }
    }
    Ok(Rooted { depth, children })
}

/// Approximation for binary trees rooted at vertex 0 with benefit at least
/// half the optimum.
///
/// Edges are split by the depth parity of their parent (the root has depth
/// 0). Each class is a disjoint union of paths of one or two edges, each
/// solved exactly; vertices a class leaves uncovered get the default
/// permutation. The better of the two resulting assignments is returned,
/// the even class on ties.
pub fn solve_tree_half_approx<T: BenefitScalar>(
    inst: &PrefixInstance<T>,
) -> Result<Assignment<T>, PrefixError> {
    solve_tree_half_approx_with(inst, &PermutationRule::lexicographic())
}

pub fn solve_tree_half_approx_with<T: BenefitScalar>(
    inst: &PrefixInstance<T>,
    rule: &PermutationRule,
) -> Result<Assignment<T>, PrefixError> {
    let rooted = root_binary_tree(inst)?;
    let even = parity_class_assignment(inst, &rooted, 0, rule);
    let odd = parity_class_assignment(inst, &rooted, 1, rule);
    Ok(if odd.benefit > even.benefit { odd } else { even })
}

fn parity_class_assignment<T: BenefitScalar>(
    inst: &PrefixInstance<T>,
    rooted: &Rooted,
    parity: usize,
    rule: &PermutationRule,
) -> Assignment<T> {
    let mut perms: Vec<SortOrder> = inst.vertices.iter().map(|s| rule.permute(s)).collect();
    for (v, kids) in rooted.children.iter().enumerate() {
        if rooted.depth[v] % 2 != parity || kids.is_empty() {
            continue;
        }
        let order: Vec<usize> = match kids.as_slice() {
            [c] => vec![v, *c],
            [a, b] => vec![*a, v, *b],
            _ => unreachable!("binary tree checked"),
        };
        let sets: Vec<AttributeSet> = order.iter().map(|&u| inst.vertices[u].clone()).collect();
        for (u, p) in order.iter().zip(path_permutations(&sets, &inst.f, rule)) {
            perms[*u] = p;
        }
    }
    inst.assignment(perms)
}

/// Largest search space [`brute_force`] accepts.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

/// Exhaustive optimum; ties go to the lexicographically least tuple of
/// permutations (vertex 0 compared first).
pub fn brute_force<T: BenefitScalar>(inst: &PrefixInstance<T>) -> Result<Assignment<T>, PrefixError> {
    let mut space: u128 = 1;
    for s in &inst.vertices {
        space = (1..=s.len() as u128).fold(space, |acc, k| acc.saturating_mul(k));
        if space > BRUTE_FORCE_LIMIT {
            return Err(PrefixError::TooLarge(space));
        }
    }
    let choices: Vec<Vec<SortOrder>> = inst.vertices.iter().map(|s| s.permutations()).collect();
    let n = choices.len();
    let mut idx = vec![0usize; n];
    let mut cur: Vec<SortOrder> = choices.iter().map(|c| c[0].clone()).collect();
    let mut best = inst.assignment(cur.clone());
    loop {
        let mut v = n;
        loop {
            if v == 0 {
                return Ok(best);
            }
            v -= 1;
            idx[v] += 1;
            if idx[v] < choices[v].len() {
                cur[v] = choices[v][idx[v]].clone();
                break;
            }
            idx[v] = 0;
            cur[v] = choices[v][0].clone();
        }
        let b = inst.benefit_unchecked(&cur);
        if b > best.benefit {
            best = Assignment {
                perms: cur.clone(),
                benefit: b,
            };
        }
    }
}

/// On-disk instance: `{"vertices": [["a","b"],...], "edges": [[0,1],...], "f": "identity"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub vertices: Vec<Vec<Attribute>>,
    #[serde(default)]
    pub edges: Vec<(usize, usize)>,
    #[serde(default = "identity_f")]
    pub f: BenefitFn<f64>,
}

fn identity_f() -> BenefitFn<f64> {
    BenefitFn::Identity
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<PrefixInstance<f64>, PrefixError> {
        let mut sets = Vec::with_capacity(self.vertices.len());
        for (v, attrs) in self.vertices.into_iter().enumerate() {
            let set: AttributeSet = attrs.iter().cloned().collect();
            if set.len() != attrs.len() {
                return Err(PrefixError::InvalidAssignment {
                    vertex: v,
                    perm: "duplicate attribute".into(),
                    set: set.to_string(),
                });
            }
            sets.push(set);
        }
        PrefixInstance::new(sets, self.edges, self.f)
    }

    /// True when every edge joins consecutive indices.
    pub fn is_index_path(&self) -> bool {
        self.edges.iter().all(|&(a, b)| a.abs_diff(b) == 1)
    }
}
