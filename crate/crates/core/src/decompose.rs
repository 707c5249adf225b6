//! Disjoint decompositions of `Omega(V)` into images of smaller sets.
//!
//! Two decompositions are provided:
//!
//! * [`Scheme::Residue`] works for every system. Writing `V = pqU + r`, each
//!   residue `r` selects at most two branches, each the image of some
//!   `Omega(child)` under `x p`, `x q`, optionally followed by adding a part 1.
//!   The only non-trivial branch is `x q` applied to `Omega(pU)` minus the
//!   partitions whose parts are all multiples of `p` (a *difference* branch).
//! * [`Scheme::Binary`] needs `p = 2` and never uses differences. It is the
//!   generation tree whose edge labels are the tree-word letters: when
//!   `q | V` the second branch is the binary-amount increment of all of
//!   `Omega(V - 1)`.
//!
//! Branch letters are listed root-first; building a member of `Omega(V)` from
//! a member of `Omega(child)` applies them last-to-first.

use crate::count::{classify_residue, Residue};
use crate::partition::Partition;
use crate::system::PQSystem;

/// Edge label of a decomposition step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    /// Add one to the binary amount (or add a part 1 when no base is 2).
    One,
    /// Multiply every part by `p`.
    P,
    /// Multiply every part by `q`.
    Q,
}

impl Letter {
    /// Applies the step to a member of the child set.
    pub fn apply(self, pt: &Partition, sys: &PQSystem) -> Option<Partition> {
        match self {
            Letter::One => match sys.binary_slot() {
                Some(_) => pt.increment_binary(sys),
                None => pt.push_unit(),
            },
            Letter::P => Some(pt.map_p()),
            Letter::Q => Some(pt.map_q()),
        }
    }

    /// Undoes [`Letter::apply`], or `None` if `pt` is not in the image.
    pub fn invert(self, pt: &Partition, sys: &PQSystem) -> Option<Partition> {
        match self {
            Letter::One => match sys.binary_slot() {
                Some(_) => pt.decrement_binary(sys),
                None => pt.pop_unit(),
            },
            Letter::P => pt.unmap_p(),
            Letter::Q => pt.unmap_q(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Residue,
    Binary,
}

impl Scheme {
    /// `Binary` when `p = 2`, `Residue` otherwise.
    pub fn preferred(sys: &PQSystem) -> Scheme {
        if sys.p() == 2 {
            Scheme::Binary
        } else {
            Scheme::Residue
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Branch {
    /// Root-first.
    pub letters: &'static [Letter],
    pub child: u128,
    /// Keep only child members whose smallest part is not a multiple of `p`.
    pub difference: bool,
}

impl Branch {
    fn new(letters: &'static [Letter], child: u128) -> Self {
        Branch {
            letters,
            child,
            difference: false,
        }
    }

    fn diff(letters: &'static [Letter], child: u128) -> Self {
        Branch {
            letters,
            child,
            difference: true,
        }
    }

    /// Whether a child member takes part in this branch.
    pub fn admits(&self, child: &Partition) -> bool {
        !self.difference || child.smallest().is_some_and(|e| e.a == 0)
    }

    pub fn build(&self, child: &Partition, sys: &PQSystem) -> Option<Partition> {
        if !self.admits(child) {
            return None;
        }
        let mut cur = child.clone();
        for l in self.letters.iter().rev() {
            cur = l.apply(&cur, sys)?;
        }
        Some(cur)
    }

    /// The child member `pt` comes from, if `pt` lies in this branch.
    pub fn pull_back(&self, pt: &Partition, sys: &PQSystem) -> Option<Partition> {
        let mut cur = pt.clone();
        for l in self.letters {
            cur = l.invert(&cur, sys)?;
        }
        self.admits(&cur).then_some(cur)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    /// `V` in {0, 1}: the set is a single known partition.
    Leaf(Partition),
    /// Disjoint branches, possibly none (then `Omega(V)` is empty).
    Inner(Vec<Branch>),
}

use Letter::{One, P, Q};

/// Decomposes `Omega(v)`.
pub fn decompose(v: u128, sys: &PQSystem, scheme: Scheme) -> Node {
    match v {
        0 => return Node::Leaf(Partition::empty()),
        1 => return Node::Leaf(Partition::unit()),
        _ => {}
    }
    Node::Inner(match scheme {
        Scheme::Residue => residue_branches(v, sys),
        Scheme::Binary => binary_branches(v, sys),
    })
}

fn residue_branches(v: u128, sys: &PQSystem) -> Vec<Branch> {
    let (p, q) = (sys.p() as u128, sys.q() as u128);
    let (k0, l0) = (sys.k0() as u128, sys.l0() as u128);
    let pq = p * q;
    let (u, r) = (v / pq, (v % pq) as u64);
    match r {
        0 => vec![Branch::new(&[P], q * u), Branch::diff(&[Q], p * u)],
        1 => vec![Branch::new(&[One, P], q * u), Branch::diff(&[One, Q], p * u)],
        _ => match classify_residue(r, sys) {
            Residue::KP0 => vec![Branch::new(&[P], q * u + k0), Branch::new(&[One, Q], p * u + p - l0)],
            Residue::LQ0 => vec![Branch::new(&[Q], p * u + l0), Branch::new(&[One, P], q * u + q - k0)],
            Residue::KP(k) => vec![Branch::new(&[P], q * u + k as u128)],
            Residue::KP1(k) => vec![Branch::new(&[One, P], q * u + k as u128)],
            Residue::LQ(l) => vec![Branch::new(&[Q], p * u + l as u128)],
            Residue::LQ1(l) => vec![Branch::new(&[One, Q], p * u + l as u128)],
            Residue::Empty => vec![],
        },
    }
}

fn binary_branches(v: u128, sys: &PQSystem) -> Vec<Branch> {
    assert_eq!(sys.p(), 2, "binary scheme needs p = 2");
    let q = sys.q() as u128;
    let r = v % (2 * q);
    if v % q == 0 {
        vec![Branch::new(&[Q], v / q), Branch::new(&[One], v - 1)]
    } else if r == 1 {
        vec![Branch::new(&[One], v - 1)]
    } else if r == q + 1 {
        vec![Branch::new(&[P], v / 2), Branch::new(&[One, Q], (v - 1) / q)]
    } else if r % 2 == 0 {
        vec![Branch::new(&[P], v / 2)]
    } else {
        vec![Branch::new(&[One, P], (v - 1) / 2)]
    }
}

/// Locates `pt` (a member of `Omega(v)`) in the decomposition: the index of
/// its branch and the corresponding child member. `None` for leaves.
pub fn locate(
    pt: &Partition,
    v: u128,
    sys: &PQSystem,
    scheme: Scheme,
) -> Option<(usize, Branch, Partition)> {
    match decompose(v, sys, scheme) {
        Node::Leaf(_) => None,
        Node::Inner(branches) => branches
            .into_iter()
            .enumerate()
            .find_map(|(i, b)| b.pull_back(pt, sys).map(|c| (i, b, c))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_force_enumerate;
    use std::collections::BTreeSet;

    fn expand(v: u128, sys: &PQSystem, scheme: Scheme) -> Vec<Partition> {
        match decompose(v, sys, scheme) {
            Node::Leaf(pt) => vec![pt],
            Node::Inner(bs) => {
                let mut out = Vec::new();
                for b in bs {
                    for c in brute_force_enumerate(b.child, sys).unwrap() {
                        if let Some(x) = b.build(&c, sys) {
                            out.push(x);
                        } else {
                            assert!(!b.admits(&c), "branch {b:?} failed on admitted child");
                        }
                    }
                }
                out
            }
        }
    }

    #[test]
    fn decompositions_are_exact_and_disjoint() {
        for (p, q) in [(2u64, 3u64), (2, 5), (2, 9), (3, 4), (3, 5), (4, 3), (5, 2), (5, 7)] {
            let s = PQSystem::new(p, q).unwrap();
            let mut schemes = vec![Scheme::Residue];
            if p == 2 {
                schemes.push(Scheme::Binary);
            }
            for scheme in schemes {
                for v in 0..700u128 {
                    let got = expand(v, &s, scheme);
                    let set: BTreeSet<_> = got.iter().cloned().collect();
                    assert_eq!(set.len(), got.len(), "overlap ({p},{q}) {scheme:?} v={v}");
                    let want: BTreeSet<_> = brute_force_enumerate(v, &s).unwrap().into_iter().collect();
                    assert_eq!(set, want, "({p},{q}) {scheme:?} v={v}");
                }
            }
        }
    }

    #[test]
    fn locate_inverts_build() {
        let s = PQSystem::new(2, 3).unwrap();
        for scheme in [Scheme::Residue, Scheme::Binary] {
            for v in 2..500u128 {
                for pt in brute_force_enumerate(v, &s).unwrap() {
                    let (_, b, child) = locate(&pt, v, &s, scheme).expect("member located");
                    assert_eq!(b.build(&child, &s), Some(pt.clone()));
                    assert_eq!(child.value_u128(&s), Some(b.child));
                }
            }
        }
    }
}
