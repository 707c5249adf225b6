//! The transition graph on `Omega(U)` for `(p,q) = (2,3)`.
//!
//! Parts are exponent pairs `(a,b)` for `2^a 3^b`. Two move families act on
//! the part with the largest `a` at some level `b`:
//!
//! * **A** (`2 + 1 = 3`): if `(a-1,b)` is present, replace `(a,b)` and
//!   `(a-1,b)` by `(a-1,b+1)`.
//! * **B** (`2(2^n - 1 + 2^(n+1)) = 3(2^(n+1) - 1) + 1`): if `(a-1,b)` is
//!   absent, let `C` be the run `(a-2,b), (a-3,b), ...` of present parts,
//!   `c = a-2` when `C` is empty and one below the run otherwise. When
//!   `c >= 0` and no part `(c+1,d)` with `d < b` exists, lift `C` to level
//!   `b+1`, drop `(a,b)` and add `(c,b)` and `(c,b+1)`.
//!
//! Both families preserve the sum. Results that are not chains are
//! discarded: the stated side conditions of B do not rule out every
//! collision (e.g. `4 + 12` would become `4 + 3 + 9`).
//!
//! Neighbours are the forward moves together with their inverses. Inverse
//! candidates are generated from the shape a forward move leaves behind and
//! kept only if a forward move maps them back, so the relation is symmetric.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::lattice_encode;
use crate::enumerate::Enumerator;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::system::PQSystem;

fn require_23(sys: &PQSystem) -> Result<()> {
    if sys.p() == 2 && sys.q() == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedSystem("(p,q) = (2,3) for the transition graph"))
    }
}

type Parts = BTreeSet<(u32, u32)>;

fn to_set(pt: &Partition) -> Parts {
    pt.parts().iter().map(|e| (e.a, e.b)).collect()
}

/// The partition with these parts, if they form a chain.
fn from_set(set: &Parts) -> Option<Partition> {
    // A chain is totally ordered, so sorting lexicographically sorts by value.
    let mut v: Vec<(u32, u32)> = set.iter().copied().collect();
    v.sort_unstable_by(|x, y| y.cmp(x));
    Partition::from_exponents(v).ok()
}

/// Largest `a` at each level `b`.
fn level_tops(set: &Parts) -> HashMap<u32, u32> {
    let mut tops = HashMap::new();
    for &(a, b) in set {
        let t = tops.entry(b).or_insert(a);
        if a > *t {
            *t = a;
        }
    }
    tops
}

fn move_a(set: &Parts, a: u32, b: u32) -> Option<Partition> {
    if a == 0 || !set.contains(&(a - 1, b)) {
        return None;
    }
    let mut s = set.clone();
    s.remove(&(a, b));
    s.remove(&(a - 1, b));
    if !s.insert((a - 1, b + 1)) {
        return None;
    }
    from_set(&s)
}

fn move_b(set: &Parts, a: u32, b: u32) -> Option<Partition> {
    if a < 2 || set.contains(&(a - 1, b)) {
        return None;
    }
    let mut run = Vec::new();
    let mut i = 2;
    while i <= a && set.contains(&(a - i, b)) {
        run.push(a - i);
        i += 1;
    }
    // c = a - 2 for an empty run, else one below the run's lowest element.
    let c = a.checked_sub(run.len() as u32 + 2)?;
    if set.iter().any(|&(x, d)| x == c + 1 && d < b) {
        return None;
    }
    let mut s = set.clone();
    s.remove(&(a, b));
    for &x in &run {
        s.remove(&(x, b));
    }
    for &x in &run {
        if !s.insert((x, b + 1)) {
            return None;
        }
    }
    if !s.insert((c, b)) || !s.insert((c, b + 1)) {
        return None;
    }
    from_set(&s)
}

/// Forward moves of both families.
pub fn forward_moves(pt: &Partition) -> Vec<Partition> {
    let set = to_set(pt);
    let mut out = Vec::new();
    for (b, a) in level_tops(&set) {
        out.extend(move_a(&set, a, b));
        out.extend(move_b(&set, a, b));
    }
    out
}

fn inverse_a(set: &Parts, s: u32, t: u32) -> Option<Partition> {
    if t == 0 {
        return None;
    }
    let mut n = set.clone();
    n.remove(&(s, t));
    if !n.insert((s + 1, t - 1)) || !n.insert((s, t - 1)) {
        return None;
    }
    from_set(&n)
}

/// Undoes a B move that left `(c,b)`, `(c,b+1)` and the lifted run
/// `(c+1..=e, b+1)`.
fn inverse_b(set: &Parts, c: u32, b: u32, e: u32) -> Option<Partition> {
    let mut n = set.clone();
    n.remove(&(c, b));
    n.remove(&(c, b + 1));
    for x in c + 1..=e {
        n.remove(&(x, b + 1));
    }
    for x in c + 1..=e {
        if !n.insert((x, b)) {
            return None;
        }
    }
    if !n.insert((e + 2, b)) {
        return None;
    }
    from_set(&n)
}

fn inverse_b_candidates(set: &Parts) -> Vec<Partition> {
    let mut out = Vec::new();
    for &(c, b) in set {
        if !set.contains(&(c, b + 1)) {
            continue;
        }
        let mut e = c;
        loop {
            out.extend(inverse_b(set, c, b, e));
            if set.contains(&(e + 1, b + 1)) {
                e += 1;
            } else {
                break;
            }
        }
    }
    out
}

/// Partitions that reach `pt` by one forward move.
pub fn backward_moves(pt: &Partition) -> Vec<Partition> {
    let set = to_set(pt);
    let mut cands: Vec<Partition> = set.iter().filter_map(|&(s, t)| inverse_a(&set, s, t)).collect();
    cands.extend(inverse_b_candidates(&set));
    cands.retain(|x| forward_moves(x).contains(pt));
    cands
}

/// All neighbours of `pt` in the transition graph, sorted and deduplicated.
pub fn neighbors(pt: &Partition, sys: &PQSystem) -> Result<Vec<Partition>> {
    require_23(sys)?;
    let mut all = forward_moves(pt);
    all.extend(backward_moves(pt));
    all.sort();
    all.dedup();
    Ok(all)
}

/// `log^2 U / (log 2 log 3)`.
pub fn diameter_bound(u: u128) -> f64 {
    let l = (u as f64).ln();
    l * l / (2f64.ln() * 3f64.ln())
}

/// A path of single moves from `pt` to the binary partition, following the
/// connectivity argument: at the top level `b`, take the smallest `a`; split
/// `(a,b)` into `(a+1,b-1) + (a,b-1)` if `(a,b-1)` is absent, otherwise merge
/// `(a,b-1) + (a,b)` into `(a+2,b-1)` together with the run above it.
pub fn reduce_to_binary(pt: &Partition, sys: &PQSystem) -> Result<Vec<Partition>> {
    require_23(sys)?;
    let mut path = Vec::new();
    let mut cur = pt.clone();
    loop {
        let set = to_set(&cur);
        let Some(b) = set.iter().map(|&(_, b)| b).max().filter(|&b| b > 0) else {
            break;
        };
        let a = set.iter().filter(|&&(_, t)| t == b).map(|&(a, _)| a).min().expect("level nonempty");
        let next = if !set.contains(&(a, b - 1)) {
            inverse_a(&set, a, b)
        } else {
            let mut e = a;
            while set.contains(&(e + 1, b)) {
                e += 1;
            }
            inverse_b(&set, a, b - 1, e)
        };
        let next = next
            .filter(|n| forward_moves(n).contains(&cur))
            .ok_or_else(|| Error::Invariant(format!("no reduction step from {}", cur.display(sys))))?;
        path.push(next.clone());
        cur = next;
    }
    Ok(path)
}

/// `G(U)` with vertices in sorted order and adjacency lists by index.
#[derive(Debug, Clone)]
pub struct TransitionGraph {
    pub u: u128,
    pub vertices: Vec<Partition>,
    pub adjacency: Vec<Vec<usize>>,
}

impl TransitionGraph {
    pub fn build(u: u128, sys: &PQSystem) -> Result<Self> {
        Self::build_with(u, sys, &mut Enumerator::new(*sys))
    }

    /// Builds `G(U)` reusing an enumerator's memo.
    pub fn build_with(u: u128, sys: &PQSystem, e: &mut Enumerator) -> Result<Self> {
        require_23(sys)?;
        let mut vertices = e.general(u)?.as_ref().clone();
        vertices.sort();
        let index: HashMap<&Partition, usize> = vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let mut adjacency = Vec::with_capacity(vertices.len());
        for v in &vertices {
            let mut adj = Vec::new();
            for n in neighbors(v, sys)? {
                let j = *index.get(&n).ok_or_else(|| {
                    Error::Invariant(format!("move from {} left Omega({u}): {}", v.display(sys), n.display(sys)))
                })?;
                adj.push(j);
            }
            adjacency.push(adj);
        }
        Ok(TransitionGraph { u, vertices, adjacency })
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_symmetric(&self) -> bool {
        self.adjacency
            .iter()
            .enumerate()
            .all(|(i, adj)| adj.iter().all(|&j| self.adjacency[j].contains(&i)))
    }

    fn bfs(&self, start: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertices.len()];
        dist[start] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let d = dist[i].expect("queued vertices have a distance");
            for &j in &self.adjacency[i] {
                if dist[j].is_none() {
                    dist[j] = Some(d + 1);
                    queue.push_back(j);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.vertices.is_empty() || self.bfs(0).iter().all(Option::is_some)
    }

    /// Exact diameter, `None` if disconnected.
    pub fn diameter(&self) -> Option<usize> {
        let mut best = 0;
        for i in 0..self.vertices.len() {
            for d in self.bfs(i) {
                best = best.max(d?);
            }
        }
        Some(best)
    }

    /// DOT text with vertices labelled by their lattice words.
    pub fn to_dot(&self) -> String {
        let mut out = format!("graph G{} {{\n", self.u);
        for (i, v) in self.vertices.iter().enumerate() {
            let label = lattice_encode(v).map(|w| w.to_string()).unwrap_or_default();
            out.push_str(&format!("  v{i} [label=\"{label}\"];\n"));
        }
        for (i, adj) in self.adjacency.iter().enumerate() {
            for &j in adj.iter().filter(|&&j| j > i) {
                out.push_str(&format!("  v{i} -- v{j};\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Connectivity {
    pub vertices: usize,
    pub edges: usize,
    pub connected: bool,
    pub diameter: Option<usize>,
}

pub fn connectivity_check(u: u128, sys: &PQSystem) -> Result<Connectivity> {
    let g = TransitionGraph::build(u, sys)?;
    Ok(Connectivity {
        vertices: g.vertices.len(),
        edges: g.edge_count(),
        connected: g.is_connected(),
        diameter: g.diameter(),
    })
}

/// Lazy walk from the binary partition: each step stays put with
/// probability 1/2, otherwise moves to a uniformly chosen neighbour. Its
/// stationary law is proportional to degree, not uniform.
pub fn random_walk(u: u128, steps: u64, seed: u64, sys: &PQSystem) -> Result<Partition> {
    require_23(sys)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = Partition::binary(u, sys)?;
    for _ in 0..steps {
        if rng.gen_bool(0.5) {
            continue;
        }
        let n = neighbors(&cur, sys)?;
        if !n.is_empty() {
            cur = n[rng.gen_range(0..n.len())].clone();
        }
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_force_enumerate;
    use crate::partition::{validate, RawMultiset};

    fn s() -> PQSystem {
        PQSystem::new(2, 3).unwrap()
    }

    fn pt(values: &[u128]) -> Partition {
        validate(&RawMultiset::from_u128s(values.iter().copied()), &s()).unwrap()
    }

    #[test]
    fn three_and_two_plus_one() {
        assert_eq!(neighbors(&pt(&[2, 1]), &s()).unwrap(), vec![pt(&[3])]);
        assert_eq!(neighbors(&pt(&[3]), &s()).unwrap(), vec![pt(&[2, 1])]);
    }

    #[test]
    fn move_b_identity() {
        // 8 + 2: run {2}, c = 0, giving 6 + 3 + 1.
        assert!(forward_moves(&pt(&[8, 2])).contains(&pt(&[6, 3, 1])));
        // 4: empty run, c = 0, giving 3 + 1.
        assert_eq!(forward_moves(&pt(&[4])), vec![pt(&[3, 1])]);
    }

    #[test]
    fn invalid_b_results_are_dropped() {
        // At level 1 of 12 + 4 the side conditions hold, but the result
        // 4 + 3 + 9 is not a chain. Level 0 still gives 12 + 3 + 1.
        let set = to_set(&pt(&[12, 4]));
        assert!(move_b(&set, 2, 1).is_none());
        assert_eq!(move_b(&set, 2, 0), Some(pt(&[12, 3, 1])));
    }

    #[test]
    fn graph_27() {
        let g = TransitionGraph::build(27, &s()).unwrap();
        assert_eq!(g.vertices.len(), 7);
        assert!(g.is_connected());
        assert!(g.is_symmetric());
        assert!(g.diameter().unwrap() as f64 <= diameter_bound(27));
        let bin = Partition::binary(27, &s()).unwrap();
        assert_eq!(bin, pt(&[16, 8, 2, 1]));
        assert!(!neighbors(&bin, &s()).unwrap().is_empty());
        assert!(g.to_dot().contains("2223"));
    }

    #[test]
    fn small_graphs() {
        let c = connectivity_check(3, &s()).unwrap();
        assert_eq!((c.vertices, c.edges, c.connected), (2, 1, true));
        let c = connectivity_check(5, &s()).unwrap();
        assert_eq!((c.vertices, c.edges, c.connected, c.diameter), (1, 0, true, Some(0)));
    }

    #[test]
    fn reductions() {
        let p = reduce_to_binary(&pt(&[27]), &s()).unwrap();
        assert_eq!(p.last(), Some(&pt(&[16, 8, 2, 1])));
        assert!(p.len() as f64 <= diameter_bound(27));
        let p = reduce_to_binary(&pt(&[18, 1]), &s()).unwrap();
        assert!(p.len() as f64 <= diameter_bound(19));
        assert!(reduce_to_binary(&pt(&[16, 2, 1]), &s()).unwrap().is_empty());
    }

    #[test]
    fn symmetric_closed_connected_small() {
        let sys = s();
        let mut e = Enumerator::new(sys);
        for u in 1..400u128 {
            let g = TransitionGraph::build_with(u, &sys, &mut e).unwrap();
            assert!(g.is_symmetric(), "{u}");
            assert!(g.is_connected(), "{u}");
            assert!(g.diameter().unwrap() as f64 <= diameter_bound(u.max(2)) + 1e-9 || u < 3, "{u}");
            for v in &g.vertices {
                let path = reduce_to_binary(v, &sys).unwrap();
                for w in path.windows(2) {
                    assert!(neighbors(&w[0], &sys).unwrap().contains(&w[1]));
                }
            }
            assert_eq!(g.vertices, brute_force_enumerate(u, &sys).unwrap());
        }
    }

    #[test]
    fn walks() {
        let sys = s();
        assert_eq!(random_walk(27, 0, 1, &sys).unwrap(), Partition::binary(27, &sys).unwrap());
        assert_eq!(random_walk(5, 100, 1, &sys).unwrap(), pt(&[4, 1]));
        let mut seen = BTreeSet::new();
        for seed in 0..200 {
            seen.insert(random_walk(27, 40, seed, &sys).unwrap());
        }
        assert_eq!(seen.len(), 7);
        assert!(neighbors(&pt(&[3]), &PQSystem::new(2, 5).unwrap()).is_err());
    }
}
