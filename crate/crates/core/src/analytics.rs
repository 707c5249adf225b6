//! Sequence-level analysis of `W`: partial sums and their functional
//! identity, growth exponents, monotonicity scans, record values, the
//! arguments with one or two partitions, and growth witnesses.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::count::{Count, CountTable, Method};
use crate::error::{Error, Result};
use crate::partition::big_to_f64;
use crate::system::PQSystem;

/// Prefix sums `S(n) = sum_{1 <= U <= n} W(U)` over a dense count table.
#[derive(Debug, Clone)]
pub struct SumTable {
    table: CountTable,
    prefix: Vec<BigUint>,
}

impl SumTable {
    /// Prefix sums up to `limit` using the general engine.
    pub fn new(limit: u128, sys: &PQSystem) -> Result<Self> {
        let mut table = CountTable::general(*sys);
        table.fill_to(limit)?;
        let mut prefix = Vec::with_capacity(table.dense().len());
        let mut acc = BigUint::zero();
        prefix.push(acc.clone());
        for w in &table.dense()[1..] {
            acc += w;
            prefix.push(acc.clone());
        }
        Ok(SumTable { table, prefix })
    }

    pub fn limit(&self) -> u128 {
        self.prefix.len() as u128 - 1
    }

    pub fn counts(&self) -> &[Count] {
        self.table.dense()
    }

    /// `S(n)` for an integer argument.
    pub fn s_int(&self, n: u128) -> Result<&BigUint> {
        self.prefix.get(n as usize).ok_or(Error::CeilingExceeded {
            what: "partial-sum argument",
            value: n,
            ceiling: self.limit(),
        })
    }

    /// `S(x) = S(floor(x))`; zero for `x < 1`.
    pub fn s(&self, x: f64) -> Result<&BigUint> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidArgument(format!("S(x) needs finite x >= 0, got {x}")));
        }
        self.s_int(x.floor() as u128)
    }

    /// `W*(n)` from the dense counts.
    pub fn w_star(&self, n: u128) -> Result<BigUint> {
        let sys = *self.table.system();
        let (p, q) = (sys.p() as u128, sys.q() as u128);
        let w = |m: u128| self.counts().get(m as usize).cloned().ok_or(Error::Overflow("W* argument"));
        let mut pos = BigUint::zero();
        if n % p == 0 {
            pos += w(n / p)?;
        }
        if n % q == 0 {
            pos += w(n / q)?;
        }
        if n % (p * q) == 0 {
            pos -= w(n / (p * q))?;
        }
        Ok(pos)
    }

    /// Checks `S(x) = 2(S(x/p) + S(x/q) - S(x/pq)) + 1 - W*(floor x)` exactly.
    pub fn identity_holds(&self, x: f64) -> Result<bool> {
        let sys = self.table.system();
        let (p, q) = (sys.p() as f64, sys.q() as f64);
        let lhs = self.s(x)? + BigUint::from(2u32) * self.s(x / (p * q))? + self.w_star(x.floor() as u128)?;
        let rhs = BigUint::from(2u32) * (self.s(x / p)? + self.s(x / q)?) + BigUint::one();
        Ok(lhs == rhs)
    }
}

/// `S(x)` for a single argument.
pub fn sum_s(x: f64, sys: &PQSystem) -> Result<BigUint> {
    let t = SumTable::new(x.max(0.0).floor() as u128, sys)?;
    t.s(x).cloned()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPairRoots {
    pub alpha: f64,
    pub beta: f64,
    /// `p^-alpha + q^-alpha - (pq)^-alpha - 1/2` at the root.
    pub alpha_residual: f64,
    /// `p^-beta + q^-beta - 1` at the root.
    pub beta_residual: f64,
}

fn alpha_residual(x: f64, p: f64, q: f64) -> f64 {
    p.powf(-x) + q.powf(-x) - (p * q).powf(-x) - 0.5
}

fn beta_residual(x: f64, p: f64, q: f64) -> f64 {
    p.powf(-x) + q.powf(-x) - 1.0
}

/// Root of a strictly decreasing function on `[1e-6, 8]` by bisection.
fn bisect(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (1e-6, 8.0);
    debug_assert!(f(lo) > 0.0 && f(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() < f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// `alpha` with `1/p^a + 1/q^a - 1/(pq)^a = 1/2`.
pub fn solve_alpha(sys: &PQSystem) -> f64 {
    let (p, q) = (sys.p() as f64, sys.q() as f64);
    bisect(|x| alpha_residual(x, p, q))
}

/// `beta` with `1/p^b + 1/q^b = 1`.
pub fn solve_beta(sys: &PQSystem) -> f64 {
    let (p, q) = (sys.p() as f64, sys.q() as f64);
    bisect(|x| beta_residual(x, p, q))
}

/// Both exponents; fails if `alpha <= beta`.
pub fn solve_roots(sys: &PQSystem) -> Result<ExponentPairRoots> {
    let (p, q) = (sys.p() as f64, sys.q() as f64);
    let alpha = solve_alpha(sys);
    let beta = solve_beta(sys);
    let roots = ExponentPairRoots {
        alpha,
        beta,
        alpha_residual: alpha_residual(alpha, p, q),
        beta_residual: beta_residual(beta, p, q),
    };
    if alpha <= beta {
        return Err(Error::Invariant(format!("alpha {alpha} not above beta {beta} for {sys}")));
    }
    Ok(roots)
}

/// `2 / (ln p^a / (p^a - 1) + ln q^a / (q^a - 1))`, an upper bound for the
/// constant in `S(x) ~ C x^alpha`.
pub fn c_upper_bound(sys: &PQSystem, alpha: f64) -> f64 {
    let term = |b: f64| {
        let x = b.powf(alpha);
        x.ln() / (x - 1.0)
    };
    2.0 / (term(sys.p() as f64) + term(sys.q() as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicSample {
    pub k: u32,
    pub x: u128,
    pub s: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CEstimate {
    pub alpha: f64,
    pub upper_bound: f64,
    pub samples: Vec<DyadicSample>,
    /// `(max - min) / max` over the last five ratios.
    pub tail_spread: f64,
    /// Samples whose ratio exceeds the upper bound.
    pub violations: Vec<u32>,
}

/// Ratios `S(2^k) / 2^(k alpha)` for `2^k <= xmax`.
pub fn estimate_c(sys: &PQSystem, xmax: u128) -> Result<CEstimate> {
    if xmax < 10 {
        return Err(Error::InvalidArgument("estimate_c needs xmax >= 10".into()));
    }
    let alpha = solve_alpha(sys);
    let upper_bound = c_upper_bound(sys, alpha);
    let sums = SumTable::new(xmax, sys)?;
    let mut samples = Vec::new();
    let mut k = 0u32;
    while let Some(x) = 1u128.checked_shl(k).filter(|&x| x <= xmax) {
        let s = sums.s_int(x)?;
        let ratio = big_to_f64(s) / (x as f64).powf(alpha);
        samples.push(DyadicSample {
            k,
            x,
            s: s.to_string(),
            ratio,
        });
        k += 1;
    }
    let tail: Vec<f64> = samples.iter().rev().take(5).map(|s| s.ratio).collect();
    let max = tail.iter().cloned().fold(f64::MIN, f64::max);
    let min = tail.iter().cloned().fold(f64::MAX, f64::min);
    let violations = samples.iter().filter(|s| s.ratio > upper_bound).map(|s| s.k).collect();
    Ok(CEstimate {
        alpha,
        upper_bound,
        samples,
        tail_spread: (max - min) / max,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// The smaller argument of the failing comparison.
    pub n: u128,
    pub relation: String,
}

/// Scans `W(qU) >= W(qU+1) >= W(qU-1)` and `W(qU+r) >= W(qU+r+1)` for
/// `0 <= r < q-1`, over every argument `<= limit`. Needs `p = 2`.
pub fn monotonicity_check(limit: u128, sys: &PQSystem) -> Result<Vec<Violation>> {
    let mut t = CountTable::new(*sys, Method::P2)?;
    t.fill_to(limit)?;
    Ok(monotonicity_in(t.dense(), sys))
}

pub(crate) fn monotonicity_in(w: &[Count], sys: &PQSystem) -> Vec<Violation> {
    let q = sys.q() as usize;
    let mut out = Vec::new();
    let n = w.len();
    let mut base = 0usize;
    while base < n {
        if base >= 1 && base + 1 < n && w[base + 1] < w[base - 1] {
            out.push(Violation {
                n: base as u128 - 1,
                relation: format!("W({}) >= W({})", base + 1, base - 1),
            });
        }
        for r in 0..q - 1 {
            let i = base + r;
            if i + 1 < n && w[i] < w[i + 1] {
                out.push(Violation {
                    n: i as u128,
                    relation: format!("W({i}) >= W({})", i + 1),
                });
            }
        }
        base += q;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JumpRecord {
    pub x: u128,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaxWReport {
    pub jumps: Vec<JumpRecord>,
    /// Jumps at even multiples `2 q^2 k` rather than odd multiples of `q`.
    pub conjecture_exceptions: Vec<u128>,
}

/// Records of `x -> max_{U <= x} W(U)` for `1 <= x <= limit`. Needs `p = 2`.
/// A jump off `q N`, or an even jump off `2 q^2 N`, is an error.
pub fn maxw_scan(limit: u128, sys: &PQSystem) -> Result<MaxWReport> {
    let mut t = CountTable::new(*sys, Method::P2)?;
    t.fill_to(limit)?;
    maxw_in(t.dense(), sys)
}

pub(crate) fn maxw_in(w: &[Count], sys: &PQSystem) -> Result<MaxWReport> {
    let q = sys.q() as u128;
    let mut best = w.first().cloned().unwrap_or_default();
    let mut report = MaxWReport {
        jumps: Vec::new(),
        conjecture_exceptions: Vec::new(),
    };
    for (x, v) in w.iter().enumerate().skip(1) {
        if *v <= best {
            continue;
        }
        best = v.clone();
        let x = x as u128;
        if x % q != 0 {
            return Err(Error::Invariant(format!("max-W jump at {x} is not a multiple of {q}")));
        }
        if (x / q) % 2 == 0 {
            if x % (2 * q * q) != 0 {
                return Err(Error::Invariant(format!("even max-W jump at {x} is not a multiple of 2q^2")));
            }
            report.conjecture_exceptions.push(x);
        }
        report.jumps.push(JumpRecord { x, value: v.to_string() });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmallW {
    pub ones: Vec<u128>,
    pub twos: Vec<u128>,
}

fn family(bases: &[u128], limit: u128) -> Vec<u128> {
    let mut out = Vec::new();
    for &b in bases {
        let mut m = b;
        while m - 1 <= limit {
            out.push(m - 1);
            m *= 2;
        }
    }
    out
}

/// Arguments `<= limit` with `W = 1` and `W = 2` for `(2,3)`, checked against
/// `{0,1} + {2^a 3 - 1}` and `{3,4,6,7} + {2^a 9 - 1} + {2^a 15 - 1}`.
pub fn characterize_small_w(limit: u128) -> Result<SmallW> {
    let sys = PQSystem::new(2, 3)?;
    let mut t = CountTable::new(sys, Method::P2)?;
    t.fill_to(limit)?;
    small_w_in(t.dense(), limit)
}

pub(crate) fn small_w_in(w: &[Count], limit: u128) -> Result<SmallW> {
    let (one, two) = (BigUint::one(), BigUint::from(2u32));
    let mut got = SmallW {
        ones: Vec::new(),
        twos: Vec::new(),
    };
    for (u, v) in w.iter().enumerate().take(limit as usize + 1) {
        if *v == one {
            got.ones.push(u as u128);
        } else if *v == two {
            got.twos.push(u as u128);
        }
    }
    let mut ones: Vec<u128> = [0, 1].into_iter().filter(|&x| x <= limit).collect();
    ones.extend(family(&[3], limit));
    ones.sort();
    let mut twos: Vec<u128> = [3, 4, 6, 7].into_iter().filter(|&x| x <= limit).collect();
    twos.extend(family(&[9, 15], limit));
    twos.sort();
    if got.ones != ones {
        return Err(Error::Invariant("arguments with W = 1 differ from {0,1} and 2^a 3 - 1".into()));
    }
    if got.twos != twos {
        return Err(Error::Invariant("arguments with W = 2 differ from the predicted families".into()));
    }
    Ok(got)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerBound {
    pub beta: f64,
    pub checked: u128,
    /// Arguments with `W(U) > U^beta`.
    pub violations: Vec<u128>,
    /// `max ln W(U) / ln U` over `U >= 2`.
    pub max_exponent: f64,
}

/// Checks `W(U) <= U^beta` for `1 <= U <= limit`.
pub fn power_bound_check(limit: u128, sys: &PQSystem) -> Result<PowerBound> {
    let mut t = CountTable::general(*sys);
    t.fill_to(limit)?;
    Ok(power_bound_in(t.dense(), sys))
}

pub(crate) fn power_bound_in(w: &[Count], sys: &PQSystem) -> PowerBound {
    let beta = solve_beta(sys);
    let mut out = PowerBound {
        beta,
        checked: 0,
        violations: Vec::new(),
        max_exponent: 0.0,
    };
    for (u, v) in w.iter().enumerate().skip(1) {
        out.checked += 1;
        let lw = big_to_f64(v).ln();
        let lu = (u as f64).ln();
        if v.is_zero() {
            continue;
        }
        if lw > beta * lu + 1e-12 {
            out.violations.push(u as u128);
        }
        if u >= 2 {
            out.max_exponent = out.max_exponent.max(lw / lu);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessStep {
    pub k: u32,
    pub u: u128,
    pub w: String,
    /// `W(U_k) >= 2^k`.
    pub meets_bound: bool,
}

/// Builds `U_{k+1} = (1 + p^{(k+1)c} q^{(k+1)d}) U_k` from `U_0 = u0`, where
/// `c` and `d` bound the exponents of the largest parts of two members of
/// `Omega(u0)`, and reports `W(U_k)` against `2^k` for `k <= n`.
pub fn unboundedness_witness(u0: u128, n: u32, sys: &PQSystem) -> Result<Vec<WitnessStep>> {
    let mut t = CountTable::general(*sys);
    let w0 = t.get(u0)?;
    if w0 < BigUint::from(2u32) {
        return Err(Error::InvalidArgument(format!("W({u0}) = {w0} is below 2")));
    }
    let members = crate::enumerate::Enumerator::new(*sys).general(u0)?;
    let tops: Vec<_> = members.iter().take(2).filter_map(|m| m.largest()).collect();
    let c = tops.iter().map(|e| e.a).max().unwrap_or(0);
    let d = tops.iter().map(|e| e.b).max().unwrap_or(0);
    let (p, q) = (sys.p() as u128, sys.q() as u128);
    let mut steps = Vec::new();
    let mut u = u0;
    for k in 0..=n {
        let w = t.get(u)?;
        let need = BigUint::one() << k;
        steps.push(WitnessStep {
            k,
            u,
            w: w.to_string(),
            meets_bound: w >= need,
        });
        if k == n {
            break;
        }
        let e = k + 1;
        let factor = p
            .checked_pow(e * c)
            .and_then(|x| x.checked_mul(q.checked_pow(e * d)?))
            .and_then(|x| x.checked_add(1))
            .ok_or(Error::Overflow("witness sequence exceeds 128 bits"))?;
        u = u.checked_mul(factor).ok_or(Error::Overflow("witness sequence exceeds 128 bits"))?;
    }
    Ok(steps)
}
