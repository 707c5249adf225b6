//! Brute-force enumeration by depth-first search over divisor chains.
//!
//! This module does not use any of the recurrences; it is the reference the
//! recursive enumerators and counting engines are checked against.

use crate::error::{Error, Result};
use crate::partition::{Exp, Partition};
use crate::system::PQSystem;

/// Largest `U` the brute-force search accepts by default.
pub const DEFAULT_CEILING: u128 = 10_000_000;

/// Enumerates `Omega(u)` under the default ceiling.
pub fn brute_force_enumerate(u: u128, sys: &PQSystem) -> Result<Vec<Partition>> {
    brute_force_enumerate_with_ceiling(u, sys, DEFAULT_CEILING)
}

/// Enumerates every strictly chained partition of `u`, sorted.
pub fn brute_force_enumerate_with_ceiling(
    u: u128,
    sys: &PQSystem,
    ceiling: u128,
) -> Result<Vec<Partition>> {
    if u > ceiling {
        return Err(Error::CeilingExceeded {
            what: "brute-force argument",
            value: u,
            ceiling,
        });
    }
    let search = Search::new(u, sys);
    let mut out = Vec::new();
    if u == 0 {
        out.push(Partition::empty());
        return Ok(out);
    }
    let mut stack = Vec::new();
    for &(e, v) in &search.smooth {
        search.extend(e, v, u - v, &mut stack, &mut out);
    }
    out.sort();
    Ok(out)
}

struct Search {
    /// All `(exponents, value)` with value <= u.
    smooth: Vec<(Exp, u128)>,
    p_pow: Vec<u128>,
    q_pow: Vec<u128>,
    min_base: u128,
}

impl Search {
    fn new(u: u128, sys: &PQSystem) -> Self {
        let powers = |base: u64| {
            let mut v = vec![1u128];
            while let Some(next) = v.last().unwrap().checked_mul(base as u128) {
                if next > u {
                    break;
                }
                v.push(next);
            }
            v
        };
        let p_pow = powers(sys.p());
        let q_pow = powers(sys.q());
        let mut smooth = Vec::new();
        for (a, &pa) in p_pow.iter().enumerate() {
            for (b, &qb) in q_pow.iter().enumerate() {
                if let Some(v) = pa.checked_mul(qb).filter(|&v| v <= u) {
                    smooth.push((Exp::new(a as u32, b as u32), v));
                }
            }
        }
        Search {
            smooth,
            p_pow,
            q_pow,
            min_base: sys.min_base() as u128,
        }
    }

    /// A strict chain below `v` sums to less than `v / (m - 1)`.
    fn can_fill(&self, v: u128, rest: u128) -> bool {
        rest == 0 || rest.saturating_mul(self.min_base - 1) < v
    }

    fn extend(
        &self,
        top: Exp,
        top_value: u128,
        rest: u128,
        stack: &mut Vec<Exp>,
        out: &mut Vec<Partition>,
    ) {
        if !self.can_fill(top_value, rest) {
            return;
        }
        stack.push(top);
        if rest == 0 {
            out.push(Partition::from_parts_unchecked(stack.clone()));
        } else {
            for a in 0..=top.a {
                for b in 0..=top.b {
                    if a == top.a && b == top.b {
                        continue;
                    }
                    let v = self.p_pow[a as usize] * self.q_pow[b as usize];
                    if v <= rest {
                        self.extend(Exp::new(a, b), v, rest - v, stack, out);
                    }
                }
            }
        }
        stack.pop();
    }
}
