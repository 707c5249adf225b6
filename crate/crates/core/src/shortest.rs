//! Shortest partitions: `sigma(U)`, the fewest parts of any member of
//! `Omega(U)`, with a witness, range statistics and a double-base
//! exponentiation driven by the witness.
//!
//! The recursion follows the residue decomposition modulo `pq`:
//! `sigma(pqU) = min(sigma(qU), sigma(pU))`, `sigma(pqU+1) = 1 + sigma(pqU)`
//! and one or two candidates for the other residues, with a `+1` for every
//! branch that adds a part 1. Ties go to the earlier branch of the case table.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use crate::decompose::{decompose, Branch, Letter, Node, Scheme};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::system::PQSystem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaResult {
    pub u: u128,
    pub sigma: u32,
    pub witness: Partition,
}

/// Operation counts of a chain-driven exponentiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChainCost {
    /// `p`-th powers (squarings when `p = 2`).
    pub p_ops: u32,
    /// `q`-th powers (cubings when `q = 3`).
    pub q_ops: u32,
    /// General multiplications.
    pub adds: u32,
}

impl ChainCost {
    pub fn of(pt: &Partition) -> ChainCost {
        match pt.largest() {
            None => ChainCost { p_ops: 0, q_ops: 0, adds: 0 },
            Some(top) => ChainCost {
                p_ops: top.a,
                q_ops: top.b,
                adds: pt.len() as u32 - 1,
            },
        }
    }
}

const EMPTY: u32 = u32::MAX;

fn extra_parts(b: &Branch) -> u32 {
    b.letters.iter().filter(|l| **l == Letter::One).count() as u32
}

/// Memoized `sigma`. Like [`crate::count::CountTable`], a dense prefix plus a
/// sparse map filled with an explicit stack.
#[derive(Debug, Clone)]
pub struct SigmaTable {
    sys: PQSystem,
    dense: Vec<u32>,
    sparse: HashMap<u128, u32>,
}

impl SigmaTable {
    pub fn new(sys: PQSystem) -> Self {
        SigmaTable {
            sys,
            dense: Vec::new(),
            sparse: HashMap::new(),
        }
    }

    fn cached(&self, v: u128) -> Option<u32> {
        match v {
            0 => Some(0),
            1 => Some(1),
            _ if v < self.dense.len() as u128 => Some(self.dense[v as usize]),
            _ => self.sparse.get(&v).copied(),
        }
    }

    fn branches(&self, v: u128) -> Vec<Branch> {
        match decompose(v, &self.sys, Scheme::Residue) {
            Node::Leaf(_) => Vec::new(),
            Node::Inner(b) => b,
        }
    }

    /// Best branch given that every child is known: `(index, sigma)`.
    fn best(&self, branches: &[Branch]) -> Option<(usize, u32)> {
        let mut best: Option<(usize, u32)> = None;
        for (i, b) in branches.iter().enumerate() {
            let s = self.cached(b.child).expect("child resolved");
            if s == EMPTY {
                continue;
            }
            let cand = s + extra_parts(b);
            if best.is_none_or(|(_, x)| cand < x) {
                best = Some((i, cand));
            }
        }
        best
    }

    /// Fills `sigma(0..=limit)` densely.
    pub fn fill_to(&mut self, limit: u128) -> Result<()> {
        let limit = usize::try_from(limit).map_err(|_| Error::Overflow("dense table index"))?;
        while self.dense.len() <= limit {
            let v = self.dense.len() as u128;
            let s = match v {
                0 => 0,
                1 => 1,
                _ => {
                    let bs = self.branches(v);
                    self.best(&bs).map_or(EMPTY, |(_, s)| s)
                }
            };
            self.dense.push(s);
        }
        Ok(())
    }

    /// `sigma(v)`, or `None` when `Omega(v)` is empty.
    pub fn get(&mut self, v: u128) -> Option<u32> {
        if let Some(s) = self.cached(v) {
            return (s != EMPTY).then_some(s);
        }
        let mut stack = vec![v];
        while let Some(&top) = stack.last() {
            if self.cached(top).is_some() {
                stack.pop();
                continue;
            }
            let bs = self.branches(top);
            let before = stack.len();
            for b in &bs {
                if self.cached(b.child).is_none() {
                    stack.push(b.child);
                }
            }
            if stack.len() == before {
                let s = self.best(&bs).map_or(EMPTY, |(_, s)| s);
                self.sparse.insert(top, s);
                stack.pop();
            }
        }
        let s = self.cached(v).expect("just computed");
        (s != EMPTY).then_some(s)
    }

    /// `sigma(u)` with a witness rebuilt from the chosen branches.
    pub fn solve(&mut self, u: u128) -> Result<SigmaResult> {
        let sigma = self.get(u).ok_or(Error::Unreachable(u))?;
        let mut path = Vec::new();
        let mut v = u;
        let leaf = loop {
            match decompose(v, &self.sys, Scheme::Residue) {
                Node::Leaf(pt) => break pt,
                Node::Inner(bs) => {
                    for b in &bs {
                        self.get(b.child);
                    }
                    let (i, _) = self
                        .best(&bs)
                        .ok_or_else(|| Error::Invariant(format!("no branch realizes sigma({v})")))?;
                    path.push(bs[i]);
                    v = bs[i].child;
                }
            }
        };
        let mut witness = leaf;
        for b in path.iter().rev() {
            // A difference branch reaches the same set as its full image here,
            // so the letters are applied without the admission filter.
            for l in b.letters.iter().rev() {
                witness = l
                    .apply(&witness, &self.sys)
                    .ok_or_else(|| Error::Invariant("witness replay broke the chain".into()))?;
            }
        }
        if witness.len() as u32 != sigma {
            return Err(Error::Invariant(format!(
                "witness for sigma({u}) has {} parts, expected {sigma}",
                witness.len()
            )));
        }
        Ok(SigmaResult { u, sigma, witness })
    }
}

pub fn sigma(u: u128, sys: &PQSystem) -> Result<SigmaResult> {
    SigmaTable::new(*sys).solve(u)
}

/// Summary of `sigma` over `2..=limit`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaStats {
    pub limit: u128,
    /// Arguments with a nonempty `Omega`.
    pub count: u64,
    pub unreachable: u64,
    /// Mean of `sigma(U) / log2(U)`.
    pub mean_ratio: f64,
    /// `histogram[s]` = number of `U` with `sigma(U) = s`.
    pub histogram: Vec<u64>,
}

pub fn sigma_stats(limit: u128, sys: &PQSystem) -> Result<SigmaStats> {
    if limit < 2 {
        return Err(Error::InvalidArgument("sigma statistics need limit >= 2".into()));
    }
    let mut t = SigmaTable::new(*sys);
    t.fill_to(limit)?;
    let mut stats = SigmaStats {
        limit,
        count: 0,
        unreachable: 0,
        mean_ratio: 0.0,
        histogram: Vec::new(),
    };
    let mut sum = 0.0;
    for v in 2..=limit as usize {
        let s = t.dense[v];
        if s == EMPTY {
            stats.unreachable += 1;
            continue;
        }
        stats.count += 1;
        sum += s as f64 / (v as f64).log2();
        if stats.histogram.len() <= s as usize {
            stats.histogram.resize(s as usize + 1, 0);
        }
        stats.histogram[s as usize] += 1;
    }
    stats.mean_ratio = if stats.count == 0 { 0.0 } else { sum / stats.count as f64 };
    Ok(stats)
}

/// `x^e mod m` for a small exponent by repeated squaring.
fn small_pow(x: &BigUint, e: u64, m: &BigUint) -> BigUint {
    let mut result = BigUint::one() % m;
    let mut base = x.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result = result * &base % m;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base % m;
        }
    }
    result
}

/// Computes `g^U mod m` along the chain `pt` of `U`. With parts
/// `v_1 > ... > v_k`, Horner's rule on
/// `U = v_k (1 + r_{k-1}(1 + ... (1 + r_1)))`, `r_i = v_i / v_{i+1}`, needs
/// only `p`-th and `q`-th powers plus `k - 1` multiplications by `g`.
pub fn chain_pow_with(g: &BigUint, pt: &Partition, modulus: &BigUint, sys: &PQSystem) -> Result<(BigUint, ChainCost)> {
    if *modulus < BigUint::from(2u32) {
        return Err(Error::InvalidArgument("modulus must be at least 2".into()));
    }
    let parts = pt.parts();
    let cost = ChainCost::of(pt);
    if parts.is_empty() {
        return Ok((BigUint::one() % modulus, cost));
    }
    let g = g % modulus;
    let (p, q) = (sys.p(), sys.q());
    let ladder = |x: BigUint, da: u32, db: u32| {
        let mut x = x;
        for _ in 0..da {
            x = small_pow(&x, p, modulus);
        }
        for _ in 0..db {
            x = small_pow(&x, q, modulus);
        }
        x
    };
    let mut x = g.clone();
    let mut done = ChainCost { p_ops: 0, q_ops: 0, adds: 0 };
    for w in parts.windows(2) {
        let (da, db) = (w[0].a - w[1].a, w[0].b - w[1].b);
        x = ladder(x, da, db) * &g % modulus;
        done.p_ops += da;
        done.q_ops += db;
        done.adds += 1;
    }
    let last = parts[parts.len() - 1];
    x = ladder(x, last.a, last.b);
    done.p_ops += last.a;
    done.q_ops += last.b;
    debug_assert_eq!(done, cost);
    Ok((x, cost))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainPow {
    pub value: BigUint,
    pub cost: ChainCost,
    pub witness: Partition,
}

/// `g^U mod m` along a shortest chain of `U`.
pub fn chain_pow(g: &BigUint, u: u128, modulus: &BigUint, sys: &PQSystem) -> Result<ChainPow> {
    let witness = if u == 0 {
        Partition::empty()
    } else {
        sigma(u, sys)?.witness
    };
    let (value, cost) = chain_pow_with(g, &witness, modulus, sys)?;
    Ok(ChainPow { value, cost, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_force_enumerate;
    use crate::partition::{validate, RawMultiset};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s23() -> PQSystem {
        PQSystem::new(2, 3).unwrap()
    }

    fn reference_pow(g: u64, mut e: u128, m: u64) -> u64 {
        let m = m as u128;
        let mut base = g as u128 % m;
        let mut acc = 1 % m;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % m;
            }
            base = base * base % m;
            e >>= 1;
        }
        acc as u64
    }

    #[test]
    fn sigma_19() {
        let s = s23();
        let r = sigma(19, &s).unwrap();
        assert_eq!(r.sigma, 2);
        assert_eq!(r.witness, validate(&RawMultiset::from_u128s([18, 1]), &s).unwrap());
    }

    #[test]
    fn sigma_on_special_families() {
        let s = s23();
        let mut t = SigmaTable::new(s);
        for a in 0..=20u32 {
            let base = 3u128 << a;
            assert_eq!(t.get(base - 1), Some(a + 1), "a={a}");
            assert_eq!(t.get(base), Some(1), "a={a}");
        }
        assert_eq!(t.get(23), Some(4));
    }

    #[test]
    fn sigma_matches_oracle() {
        for (p, q) in [(2u64, 3u64), (2, 5), (3, 4), (3, 5)] {
            let s = PQSystem::new(p, q).unwrap();
            let mut t = SigmaTable::new(s);
            for u in 0..1500u128 {
                let all = brute_force_enumerate(u, &s).unwrap();
                let want = all.iter().map(|x| x.len() as u32).min();
                assert_eq!(t.get(u), want, "({p},{q}) {u}");
                if want.is_some() {
                    let r = t.solve(u).unwrap();
                    assert!(all.contains(&r.witness));
                } else {
                    assert!(matches!(t.solve(u), Err(Error::Unreachable(_))));
                }
            }
        }
    }

    #[test]
    fn dense_and_sparse_sigma_agree() {
        let s = s23();
        let mut d = SigmaTable::new(s);
        d.fill_to(20000).unwrap();
        let mut sp = SigmaTable::new(s);
        for u in (2..20000u128).step_by(97) {
            assert_eq!(sp.get(u), Some(d.dense[u as usize]));
        }
    }

    #[test]
    fn sigma_bounded_by_binary_length() {
        let s = s23();
        let mut t = SigmaTable::new(s);
        for u in 1..5000u128 {
            let sg = t.get(u).unwrap();
            assert!(sg >= 1 && sg <= u.count_ones());
        }
    }

    #[test]
    fn stats_small() {
        let st = sigma_stats(10, &s23()).unwrap();
        assert_eq!(st.count, 9);
        // sigma(2..=10) = 1,1,1,2,1,2,1,1,2
        assert_eq!(st.histogram, vec![0, 6, 3]);
    }

    #[test]
    fn chain_pow_examples() {
        let s = s23();
        let r = chain_pow(&BigUint::from(5u32), 19, &BigUint::from(101u32), &s).unwrap();
        assert_eq!(r.value, BigUint::from(reference_pow(5, 19, 101)));
        assert_eq!(r.cost, ChainCost { p_ops: 1, q_ops: 2, adds: 1 });
        let one = chain_pow(&BigUint::from(7u32), 1, &BigUint::from(11u32), &s).unwrap();
        assert_eq!(one.value, BigUint::from(7u32));
        assert!(chain_pow(&BigUint::from(7u32), 1, &BigUint::one(), &s).is_err());
    }

    #[test]
    fn chain_pow_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (p, q) in [(2u64, 3u64), (3, 4), (2, 5)] {
            let s = PQSystem::new(p, q).unwrap();
            let mut t = SigmaTable::new(s);
            for _ in 0..300 {
                let u: u128 = rng.gen_range(1..1_000_000);
                let Ok(r) = t.solve(u) else { continue };
                let g: u64 = rng.gen_range(0..1_000_000);
                let m: u64 = rng.gen_range(2..1_000_000_007);
                let (v, _) = chain_pow_with(&BigUint::from(g), &r.witness, &BigUint::from(m), &s).unwrap();
                assert_eq!(v, BigUint::from(reference_pow(g, u, m)));
                assert_eq!(v, BigUint::from(g).modpow(&BigUint::from(u), &BigUint::from(m)));
            }
        }
    }
}
