//! Validated base pairs.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A pair of coprime bases `p, q >= 2` together with the inverses
/// `k0 = p^-1 mod q` and `l0 = q^-1 mod p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PQSystem {
    p: u64,
    q: u64,
    k0: u64,
    l0: u64,
}

/// Builds a [`PQSystem`], rejecting bases below 2 and non-coprime pairs.
pub fn make_system(p: u64, q: u64) -> Result<PQSystem> {
    PQSystem::new(p, q)
}

impl PQSystem {
    pub fn new(p: u64, q: u64) -> Result<Self> {
        for base in [p, q] {
            if base < 2 {
                return Err(Error::BaseTooSmall(base));
            }
        }
        // Bases are capped so that every product used by the recurrences
        // (at most p*q times a 128-bit argument) is checked, not silently wrapped.
        if p > u32::MAX as u64 || q > u32::MAX as u64 {
            return Err(Error::InvalidArgument(format!(
                "bases must fit in 32 bits (got {p}, {q})"
            )));
        }
        let g = p.gcd(&q);
        if g != 1 {
            return Err(Error::NotCoprime { p, q, gcd: g });
        }
        let k0 = mod_inverse(p, q);
        let l0 = mod_inverse(q, p);
        Ok(PQSystem { p, q, k0, l0 })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// `p^-1 mod q`, in `[1, q)`.
    pub fn k0(&self) -> u64 {
        self.k0
    }

    /// `q^-1 mod p`, in `[1, p)`.
    pub fn l0(&self) -> u64 {
        self.l0
    }

    pub fn pq(&self) -> u64 {
        self.p * self.q
    }

    pub fn min_base(&self) -> u64 {
        self.p.min(self.q)
    }

    /// Which exponent slot carries the base 2, if any: `Some(0)` for `p = 2`,
    /// `Some(1)` for `q = 2`.
    pub fn binary_slot(&self) -> Option<usize> {
        if self.p == 2 {
            Some(0)
        } else if self.q == 2 {
            Some(1)
        } else {
            None
        }
    }

    pub(crate) fn require_p2(&self, what: &'static str) -> Result<()> {
        if self.p == 2 {
            Ok(())
        } else {
            Err(Error::UnsupportedSystem(what))
        }
    }
}

impl Default for PQSystem {
    fn default() -> Self {
        PQSystem::new(2, 3).expect("(2,3) is a valid system")
    }
}

impl std::fmt::Display for PQSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

fn mod_inverse(x: u64, m: u64) -> u64 {
    let e = (x as i128).extended_gcd(&(m as i128));
    debug_assert_eq!(e.gcd, 1);
    e.x.rem_euclid(m as i128) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverses_for_2_3() {
        let s = make_system(2, 3).unwrap();
        assert_eq!((s.k0(), s.l0()), (2, 1));
        assert_eq!(2 * 2 % 3, 1);
    }

    #[test]
    fn inverses_for_3_5() {
        let s = make_system(3, 5).unwrap();
        assert_eq!((s.k0(), s.l0()), (2, 2));
    }

    #[test]
    fn rejects_bad_pairs() {
        assert!(matches!(make_system(2, 4), Err(Error::NotCoprime { gcd: 2, .. })));
        assert!(matches!(make_system(1, 3), Err(Error::BaseTooSmall(1))));
        assert!(matches!(make_system(5, 5), Err(Error::NotCoprime { .. })));
    }

    #[test]
    fn unique_bezout_solution() {
        // (k0, p - l0) is the only positive solution of k*p - l*q = 1 with k < q, l < p.
        for (p, q) in [(2u64, 3u64), (2, 5), (3, 4), (3, 5), (5, 7), (4, 9), (7, 2)] {
            let s = make_system(p, q).unwrap();
            let sols: Vec<(u64, u64)> = (1..q)
                .flat_map(|k| (1..p).map(move |l| (k, l)))
                .filter(|&(k, l)| k * p == l * q + 1)
                .collect();
            assert_eq!(sols, vec![(s.k0(), p - s.l0())], "({p},{q})");
            assert_eq!(s.k0() * p % q, 1);
            assert_eq!(s.l0() * q % p, 1);
        }
    }
}
