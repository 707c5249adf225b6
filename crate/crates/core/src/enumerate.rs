//! Exact generation of `Omega(U)` and exact uniform sampling.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::count::{CountTable, Method};
use crate::decompose::{decompose, Branch, Node, Scheme};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::system::PQSystem;

/// Default cap on the number of partitions held in an enumeration memo.
pub const DEFAULT_BUDGET: u64 = 20_000_000;

/// `Omega(U)` with members sorted by exponent order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaSet {
    pub u: u128,
    pub members: Vec<Partition>,
}

impl OmegaSet {
    fn new(u: u128, mut members: Vec<Partition>) -> Self {
        members.sort();
        OmegaSet { u, members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Partition> {
        self.members.iter()
    }
}

impl<'a> IntoIterator for &'a OmegaSet {
    type Item = &'a Partition;
    type IntoIter = std::slice::Iter<'a, Partition>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

type Memo = HashMap<u128, Arc<Vec<Partition>>>;

/// Memoized enumerator. Keeps every intermediate set, so repeated calls for
/// nearby arguments share work.
#[derive(Debug, Clone)]
pub struct Enumerator {
    sys: PQSystem,
    budget: u64,
    stored: u64,
    star: Memo,
    full: Memo,
}

impl Enumerator {
    pub fn new(sys: PQSystem) -> Self {
        Self::with_budget(sys, DEFAULT_BUDGET)
    }

    pub fn with_budget(sys: PQSystem, budget: u64) -> Self {
        Enumerator {
            sys,
            budget,
            stored: 0,
            star: Memo::new(),
            full: Memo::new(),
        }
    }

    pub fn system(&self) -> &PQSystem {
        &self.sys
    }

    fn charge(&mut self, n: usize) -> Result<()> {
        self.stored += n as u64;
        if self.stored > self.budget {
            Err(Error::BudgetExceeded(self.budget))
        } else {
            Ok(())
        }
    }

    /// `Omega(U) = Omega*(U) + (Omega*(U-1) with a part 1 added)`,
    /// `Omega*(U) = p Omega(U/p) + q Omega(U/q)`.
    pub fn general(&mut self, u: u128) -> Result<Arc<Vec<Partition>>> {
        if let Some(s) = self.full.get(&u) {
            return Ok(s.clone());
        }
        let set = match u {
            0 => vec![Partition::empty()],
            1 => vec![Partition::unit()],
            _ => {
                let mut out: Vec<Partition> = self.star_set(u)?.as_ref().clone();
                for pt in self.star_set(u - 1)?.iter() {
                    out.push(pt.push_unit().expect("no part 1 in Omega*"));
                }
                out
            }
        };
        self.charge(set.len())?;
        let set = Arc::new(set);
        self.full.insert(u, set.clone());
        Ok(set)
    }

    fn star_set(&mut self, u: u128) -> Result<Arc<Vec<Partition>>> {
        if let Some(s) = self.star.get(&u) {
            return Ok(s.clone());
        }
        let (p, q) = (self.sys.p() as u128, self.sys.q() as u128);
        let mut out = Vec::new();
        if u == 0 {
            out.push(Partition::empty());
        } else {
            if u % p == 0 {
                out.extend(self.general(u / p)?.iter().map(Partition::map_p));
            }
            if u % q == 0 {
                // Members made of multiples of p were produced above.
                let from_q = self.general(u / q)?;
                out.extend(
                    from_q
                        .iter()
                        .filter(|pt| pt.smallest().is_some_and(|e| e.a == 0))
                        .map(Partition::map_q),
                );
            }
        }
        self.charge(out.len())?;
        let set = Arc::new(out);
        self.star.insert(u, set.clone());
        Ok(set)
    }

    /// Follows the disjoint decomposition ([`Scheme::preferred`]).
    pub fn decomposed(&mut self, u: u128, scheme: Scheme) -> Result<Arc<Vec<Partition>>> {
        if scheme == Scheme::Binary {
            self.sys.require_p2("p = 2 for the binary decomposition")?;
        }
        let key = u;
        if let Some(s) = self.full.get(&key) {
            return Ok(s.clone());
        }
        let set = match decompose(u, &self.sys, scheme) {
            Node::Leaf(pt) => vec![pt],
            Node::Inner(branches) => {
                let mut out = Vec::new();
                for b in branches {
                    let child = self.decomposed(b.child, scheme)?;
                    for c in child.iter().filter(|c| b.admits(c)) {
                        out.push(b.build(c, &self.sys).ok_or_else(|| {
                            Error::Invariant(format!("branch {:?} rejected a member of Omega({})", b.letters, b.child))
                        })?);
                    }
                }
                out
            }
        };
        self.charge(set.len())?;
        let set = Arc::new(set);
        self.full.insert(key, set.clone());
        Ok(set)
    }
}

/// `Omega(U)` by the set recurrence through `Omega*`.
pub fn enumerate_general(u: u128, sys: &PQSystem) -> Result<OmegaSet> {
    let set = Enumerator::new(*sys).general(u)?;
    Ok(OmegaSet::new(u, set.as_ref().clone()))
}

/// `Omega(U)` by the disjoint decomposition: the binary generation tree when
/// `p = 2`, the residue decomposition modulo `pq` otherwise.
pub fn enumerate_decomposed(u: u128, sys: &PQSystem) -> Result<OmegaSet> {
    let set = Enumerator::new(*sys).decomposed(u, Scheme::preferred(sys))?;
    Ok(OmegaSet::new(u, set.as_ref().clone()))
}

/// Draws members of `Omega(U)` uniformly by descending the decomposition and
/// picking each branch with probability proportional to its size.
#[derive(Debug, Clone)]
pub struct Sampler {
    sys: PQSystem,
    scheme: Scheme,
    counts: CountTable,
}

impl Sampler {
    pub fn new(sys: PQSystem) -> Self {
        Self::with_scheme(sys, Scheme::preferred(&sys)).expect("preferred scheme fits the system")
    }

    pub fn with_scheme(sys: PQSystem, scheme: Scheme) -> Result<Self> {
        let method = match scheme {
            Scheme::Binary => {
                sys.require_p2("p = 2 for the binary decomposition")?;
                Method::P2
            }
            Scheme::Residue => Method::General,
        };
        Ok(Sampler {
            sys,
            scheme,
            counts: CountTable::new(sys, method)?,
        })
    }

    pub fn counts(&mut self) -> &mut CountTable {
        &mut self.counts
    }

    fn weight(&mut self, b: &Branch) -> Result<BigUint> {
        let all = self.counts.get(b.child)?;
        if !b.difference {
            return Ok(all);
        }
        let excluded = self.counts.get(b.child / self.sys.p() as u128)?;
        if excluded > all {
            return Err(Error::Invariant(format!("negative branch weight below {}", b.child)));
        }
        Ok(all - excluded)
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, u: u128, rng: &mut R) -> Result<Partition> {
        if self.counts.get(u)?.is_zero() {
            return Err(Error::Unreachable(u));
        }
        self.draw(u, rng)
    }

    fn draw<R: Rng + ?Sized>(&mut self, v: u128, rng: &mut R) -> Result<Partition> {
        let branches = match decompose(v, &self.sys, self.scheme) {
            Node::Leaf(pt) => return Ok(pt),
            Node::Inner(bs) => bs,
        };
        let mut weights = Vec::with_capacity(branches.len());
        let mut total = BigUint::zero();
        for b in &branches {
            let w = self.weight(b)?;
            total += &w;
            weights.push(w);
        }
        if total != self.counts.get(v)? {
            return Err(Error::Invariant(format!("branch weights at {v} do not sum to W({v})")));
        }
        let mut pick = rng.gen_biguint_below(&total);
        let mut chosen = branches.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if pick < *w {
                chosen = i;
                break;
            }
            pick -= w;
        }
        let b = branches[chosen];
        let child = loop {
            // Rejection only happens on difference branches; the acceptance
            // rate is (W(pU) - W(U)) / W(pU) > 0.
            let c = self.draw(b.child, rng)?;
            if b.admits(&c) {
                break c;
            }
        };
        b.build(&child, &self.sys)
            .ok_or_else(|| Error::Invariant(format!("sampled child of {v} left its branch")))
    }
}

/// One uniform draw from `Omega(U)` with a ChaCha8 stream seeded by `seed`.
pub fn sample_uniform(u: u128, sys: &PQSystem, seed: u64) -> Result<Partition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Sampler::new(*sys).sample(u, &mut rng)
}

/// Upper tail of the chi-square distribution for an even number of degrees
/// of freedom: `exp(-x/2) * sum_{i < df/2} (x/2)^i / i!`.
pub fn chi_square_sf_even(x: f64, df: u32) -> f64 {
    assert!(df > 0 && df % 2 == 0, "closed form needs even df");
    let h = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..df / 2 {
        term *= h / i as f64;
        sum += term;
    }
    (-h).exp() * sum
}

/// Pearson statistic of observed counts against a uniform expectation.
pub fn chi_square_uniform(observed: &[u64]) -> f64 {
    let n: u64 = observed.iter().sum();
    let e = n as f64 / observed.len() as f64;
    observed.iter().map(|&o| (o as f64 - e).powi(2) / e).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_force_enumerate;
    use crate::partition::{validate, RawMultiset};

    fn sys(p: u64, q: u64) -> PQSystem {
        PQSystem::new(p, q).unwrap()
    }

    fn pt(values: &[u128], s: &PQSystem) -> Partition {
        validate(&RawMultiset::from_u128s(values.iter().copied()), s).unwrap()
    }

    #[test]
    fn omega_19_both_ways() {
        let s = sys(2, 3);
        let want = brute_force_enumerate(19, &s).unwrap();
        assert_eq!(enumerate_general(19, &s).unwrap().members, want);
        assert_eq!(enumerate_decomposed(19, &s).unwrap().members, want);
        assert_eq!(want.len(), 4);
    }

    #[test]
    fn small_cases() {
        let s = sys(3, 5);
        assert!(enumerate_general(7, &s).unwrap().is_empty());
        assert!(enumerate_decomposed(7, &s).unwrap().is_empty());
        let s = sys(2, 3);
        assert_eq!(enumerate_general(1, &s).unwrap().members, vec![Partition::unit()]);
        assert_eq!(enumerate_general(0, &s).unwrap().members, vec![Partition::empty()]);
        assert_eq!(enumerate_decomposed(27, &s).unwrap().len(), 7);
        let ten = enumerate_decomposed(10, &s).unwrap();
        let mut want = vec![pt(&[8, 2], &s), pt(&[9, 1], &s), pt(&[6, 3, 1], &s)];
        want.sort();
        assert_eq!(ten.members, want);
    }

    #[test]
    fn agreement_with_oracle() {
        for (p, q) in [(2u64, 3u64), (2, 5), (3, 4), (3, 5), (5, 2)] {
            let s = sys(p, q);
            let mut e = Enumerator::new(s);
            let mut r = Enumerator::new(s);
            let mut b = Enumerator::new(s);
            for u in 0..1200u128 {
                let mut want = brute_force_enumerate(u, &s).unwrap();
                want.sort();
                let mut g = e.general(u).unwrap().as_ref().clone();
                g.sort();
                assert_eq!(g, want, "general ({p},{q}) {u}");
                let mut d = r.decomposed(u, Scheme::Residue).unwrap().as_ref().clone();
                d.sort();
                assert_eq!(d, want, "residue ({p},{q}) {u}");
                if p == 2 {
                    let mut t = b.decomposed(u, Scheme::Binary).unwrap().as_ref().clone();
                    t.sort();
                    assert_eq!(t, want, "binary ({p},{q}) {u}");
                }
            }
        }
    }

    #[test]
    fn pq_multiples_and_successors_have_equal_size() {
        let s = sys(2, 3);
        let mut e = Enumerator::new(s);
        for k in 0..300u128 {
            assert_eq!(e.general(6 * k).unwrap().len(), e.general(6 * k + 1).unwrap().len());
        }
    }

    #[test]
    fn binary_partition_always_present() {
        let s = sys(2, 5);
        let mut e = Enumerator::new(s);
        for u in 1..800u128 {
            assert!(e.general(u).unwrap().contains(&Partition::binary(u, &s).unwrap()));
        }
    }

    #[test]
    fn budget_guard() {
        let s = sys(2, 3);
        let mut e = Enumerator::with_budget(s, 50);
        assert!(matches!(e.general(5000), Err(Error::BudgetExceeded(50))));
    }

    #[test]
    fn sampler_determinism_and_forced_cases() {
        let s = sys(2, 3);
        assert_eq!(sample_uniform(5, &s, 7).unwrap(), pt(&[4, 1], &s));
        assert_eq!(sample_uniform(200, &s, 3).unwrap(), sample_uniform(200, &s, 3).unwrap());
        assert!(matches!(sample_uniform(7, &sys(3, 5), 0), Err(Error::Unreachable(7))));
    }

    #[test]
    fn sampler_u3_is_fair() {
        let s = sys(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sm = Sampler::new(s);
        let three = pt(&[3], &s);
        let hits = (0..4000).filter(|_| sm.sample(3, &mut rng).unwrap() == three).count();
        assert!((1800..2200).contains(&hits), "{hits}");
    }

    #[test]
    fn residue_sampler_with_difference_branches() {
        // (3,4) uses difference branches on multiples of 12.
        let s = sys(3, 4);
        let members = brute_force_enumerate(144, &s).unwrap();
        let mut sm = Sampler::new(s);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = vec![0u64; members.len()];
        for _ in 0..members.len() * 800 {
            let x = sm.sample(144, &mut rng).unwrap();
            counts[members.binary_search(&x).unwrap()] += 1;
        }
        let stat = chi_square_uniform(&counts);
        let df = (members.len() - 1) as u32;
        if df % 2 == 0 {
            assert!(chi_square_sf_even(stat, df) > 0.001, "{counts:?}");
        }
        assert!(counts.iter().all(|&c| c > 0));
    }

    #[test]
    fn chi_square_closed_form() {
        // Critical value of chi^2 with 6 degrees of freedom at 0.01.
        assert!((chi_square_sf_even(16.8119, 6) - 0.01).abs() < 1e-5);
        assert!((chi_square_sf_even(2.0, 2) - (-1.0f64).exp()).abs() < 1e-15);
    }
}
