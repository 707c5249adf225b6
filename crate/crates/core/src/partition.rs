//! The chained partition type, its invariant, and the three injective maps
//! used by the generation recurrences.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::PQSystem;

/// Exponent pair of a part `p^a * q^b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Exp {
    pub a: u32,
    pub b: u32,
}

impl Exp {
    pub const UNIT: Exp = Exp { a: 0, b: 0 };

    pub fn new(a: u32, b: u32) -> Self {
        Exp { a, b }
    }

    /// Product order on N^2.
    pub fn le(self, other: Exp) -> bool {
        self.a <= other.a && self.b <= other.b
    }

    /// Strictly below in the product order.
    pub fn lt(self, other: Exp) -> bool {
        self != other && self.le(other)
    }

    fn slot(self, slot: usize) -> u32 {
        if slot == 0 {
            self.a
        } else {
            self.b
        }
    }

    fn other(self, slot: usize) -> u32 {
        if slot == 0 {
            self.b
        } else {
            self.a
        }
    }

    fn on_slot(slot: usize, e: u32) -> Exp {
        if slot == 0 {
            Exp::new(e, 0)
        } else {
            Exp::new(0, e)
        }
    }

    pub fn value(self, sys: &PQSystem) -> BigUint {
        BigUint::from(sys.p()).pow(self.a) * BigUint::from(sys.q()).pow(self.b)
    }

    pub fn value_u128(self, sys: &PQSystem) -> Option<u128> {
        let pa = (sys.p() as u128).checked_pow(self.a)?;
        let qb = (sys.q() as u128).checked_pow(self.b)?;
        pa.checked_mul(qb)
    }
}

/// A strictly chained partition, stored as exponent pairs in strictly
/// decreasing order. Consecutive pairs are comparable in the product order,
/// which for coprime bases is the same as divisibility of the part values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Partition {
    parts: Vec<Exp>,
}

/// An unordered multiset of positive part values with no chain guarantee.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawMultiset {
    values: Vec<BigUint>,
}

impl RawMultiset {
    pub fn new<I: IntoIterator<Item = BigUint>>(values: I) -> Self {
        let mut values: Vec<BigUint> = values.into_iter().collect();
        values.sort_unstable_by(|x, y| y.cmp(x));
        RawMultiset { values }
    }

    pub fn from_u128s<I: IntoIterator<Item = u128>>(values: I) -> Self {
        Self::new(values.into_iter().map(BigUint::from))
    }

    /// Values in non-increasing order.
    pub fn values(&self) -> &[BigUint] {
        &self.values
    }

    pub fn sum(&self) -> BigUint {
        self.values.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Partition {
    pub fn empty() -> Self {
        Partition { parts: Vec::new() }
    }

    /// The partition `(1)`.
    pub fn unit() -> Self {
        Partition {
            parts: vec![Exp::UNIT],
        }
    }

    /// Builds a partition from exponent pairs listed largest first.
    pub fn from_exponents<I: IntoIterator<Item = (u32, u32)>>(pairs: I) -> Result<Self> {
        let parts: Vec<Exp> = pairs.into_iter().map(|(a, b)| Exp::new(a, b)).collect();
        for w in parts.windows(2) {
            if !w[1].lt(w[0]) {
                return Err(Error::ChainBreak {
                    larger: format!("({},{})", w[0].a, w[0].b),
                    smaller: format!("({},{})", w[1].a, w[1].b),
                });
            }
        }
        Ok(Partition { parts })
    }

    pub(crate) fn from_parts_unchecked(parts: Vec<Exp>) -> Self {
        debug_assert!(parts.windows(2).all(|w| w[1].lt(w[0])));
        Partition { parts }
    }

    pub fn parts(&self) -> &[Exp] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn largest(&self) -> Option<Exp> {
        self.parts.first().copied()
    }

    pub fn smallest(&self) -> Option<Exp> {
        self.parts.last().copied()
    }

    pub fn contains(&self, e: Exp) -> bool {
        self.parts.contains(&e)
    }

    pub fn has_unit_part(&self) -> bool {
        self.smallest() == Some(Exp::UNIT)
    }

    /// Sum of the parts.
    pub fn value(&self, sys: &PQSystem) -> BigUint {
        self.parts.iter().map(|e| e.value(sys)).sum()
    }

    pub fn value_u128(&self, sys: &PQSystem) -> Option<u128> {
        self.parts
            .iter()
            .try_fold(0u128, |acc, e| acc.checked_add(e.value_u128(sys)?))
    }

    /// Part values, largest first.
    pub fn values(&self, sys: &PQSystem) -> Vec<BigUint> {
        self.parts.iter().map(|e| e.value(sys)).collect()
    }

    pub fn to_multiset(&self, sys: &PQSystem) -> RawMultiset {
        RawMultiset {
            values: self.values(sys),
        }
    }

    /// Multiplies every part by `p`.
    pub fn map_p(&self) -> Partition {
        Partition {
            parts: self
                .parts
                .iter()
                .map(|e| Exp::new(e.a.checked_add(1).expect("exponent overflow"), e.b))
                .collect(),
        }
    }

    /// Multiplies every part by `q`.
    pub fn map_q(&self) -> Partition {
        Partition {
            parts: self
                .parts
                .iter()
                .map(|e| Exp::new(e.a, e.b.checked_add(1).expect("exponent overflow")))
                .collect(),
        }
    }

    /// Inverse of [`map_p`](Self::map_p); `None` unless every part is divisible by `p`.
    pub fn unmap_p(&self) -> Option<Partition> {
        if self.parts.iter().any(|e| e.a == 0) {
            return None;
        }
        Some(Partition {
            parts: self.parts.iter().map(|e| Exp::new(e.a - 1, e.b)).collect(),
        })
    }

    /// Inverse of [`map_q`](Self::map_q).
    pub fn unmap_q(&self) -> Option<Partition> {
        if self.parts.iter().any(|e| e.b == 0) {
            return None;
        }
        Some(Partition {
            parts: self.parts.iter().map(|e| Exp::new(e.a, e.b - 1)).collect(),
        })
    }

    /// Appends the part 1. Always a valid chain when 1 is not already a part.
    pub fn push_unit(&self) -> Option<Partition> {
        if self.has_unit_part() {
            return None;
        }
        let mut parts = self.parts.clone();
        parts.push(Exp::UNIT);
        Some(Partition { parts })
    }

    pub fn pop_unit(&self) -> Option<Partition> {
        if !self.has_unit_part() {
            return None;
        }
        let mut parts = self.parts.clone();
        parts.pop();
        Some(Partition { parts })
    }

    /// Number of trailing parts that are pure powers of the base 2.
    fn binary_suffix_len(&self, slot: usize) -> usize {
        self.parts
            .iter()
            .rev()
            .take_while(|e| e.other(slot) == 0)
            .count()
    }

    /// Sum of the parts that are powers of 2. Requires `min(p,q) = 2`.
    pub fn binary_amount(&self, sys: &PQSystem) -> Result<BigUint> {
        let slot = sys
            .binary_slot()
            .ok_or(Error::UnsupportedSystem("min(p,q) = 2"))?;
        let n = self.binary_suffix_len(slot);
        Ok(self.parts[self.parts.len() - n..]
            .iter()
            .map(|e| BigUint::one() << e.slot(slot))
            .sum())
    }

    /// The third generation map. With `min(p,q) = 2` the binary amount is
    /// increased by one (parts rewritten as the binary expansion of the new
    /// amount); otherwise a part 1 is added. The result need not be a chain.
    pub fn map_one(&self, sys: &PQSystem) -> RawMultiset {
        match sys.binary_slot() {
            Some(slot) => {
                let n = self.binary_suffix_len(slot);
                let keep = &self.parts[..self.parts.len() - n];
                let amount: BigUint = self.parts[self.parts.len() - n..]
                    .iter()
                    .map(|e| BigUint::one() << e.slot(slot))
                    .sum::<BigUint>()
                    + 1u32;
                let mut values: Vec<BigUint> = keep.iter().map(|e| e.value(sys)).collect();
                let bits = amount.bits();
                for i in (0..bits).rev() {
                    if amount.bit(i) {
                        values.push(BigUint::one() << i);
                    }
                }
                RawMultiset::new(values)
            }
            None => {
                let mut values = self.values(sys);
                values.push(BigUint::one());
                RawMultiset::new(values)
            }
        }
    }

    /// `map_one` restricted to the cases where it yields a chain.
    pub fn increment_binary(&self, sys: &PQSystem) -> Option<Partition> {
        let slot = sys.binary_slot()?;
        let n = self.binary_suffix_len(slot);
        let split = self.parts.len() - n;
        let mut bits: Vec<u32> = self.parts[split..].iter().map(|e| e.slot(slot)).collect();
        // bits is strictly decreasing; add one with carry from the low end.
        let mut carry_to = 0u32;
        while bits.last() == Some(&carry_to) {
            bits.pop();
            carry_to += 1;
        }
        bits.push(carry_to);
        let top = bits[0];
        if split > 0 {
            let floor = self.parts[split - 1];
            if top > floor.slot(slot) {
                return None;
            }
        }
        let mut parts = self.parts[..split].to_vec();
        parts.extend(bits.into_iter().map(|e| Exp::on_slot(slot, e)));
        Some(Partition { parts })
    }

    /// Decreases the binary amount by one; `None` when it is zero.
    pub fn decrement_binary(&self, sys: &PQSystem) -> Option<Partition> {
        let slot = sys.binary_slot()?;
        let n = self.binary_suffix_len(slot);
        if n == 0 {
            return None;
        }
        let split = self.parts.len() - n;
        let mut bits: Vec<u32> = self.parts[split..].iter().map(|e| e.slot(slot)).collect();
        let low = bits.pop().expect("nonempty suffix");
        bits.extend((0..low).rev());
        let mut parts = self.parts[..split].to_vec();
        parts.extend(bits.into_iter().map(|e| Exp::on_slot(slot, e)));
        Some(Partition { parts })
    }

    /// The partition of `u` into distinct powers of 2. Requires `min(p,q) = 2`.
    pub fn binary(u: u128, sys: &PQSystem) -> Result<Partition> {
        let slot = sys
            .binary_slot()
            .ok_or(Error::UnsupportedSystem("min(p,q) = 2"))?;
        let parts = (0..128u32)
            .rev()
            .filter(|&i| (u >> i) & 1 == 1)
            .map(|i| Exp::on_slot(slot, i))
            .collect();
        Ok(Partition { parts })
    }

    /// Parts joined with `+`, largest first; `()` for the empty partition.
    pub fn display(&self, sys: &PQSystem) -> String {
        if self.parts.is_empty() {
            return "()".to_string();
        }
        let mut out = String::new();
        for (i, v) in self.values(sys).iter().enumerate() {
            if i > 0 {
                out.push('+');
            }
            let _ = write!(out, "{v}");
        }
        out
    }

    /// Compares two partitions by their value sequences (largest part first).
    pub fn cmp_values(&self, other: &Partition, sys: &PQSystem) -> Ordering {
        self.values(sys).cmp(&other.values(sys))
    }

    pub fn to_record(&self, sys: &PQSystem, with_values: bool) -> PartitionRecord {
        PartitionRecord {
            p: sys.p(),
            q: sys.q(),
            parts: self.parts.iter().map(|e| [e.a, e.b]).collect(),
            sum: self.value(sys).to_string(),
            values: with_values.then(|| self.values(sys).iter().map(|v| v.to_string()).collect()),
        }
    }

    pub fn to_json(&self, sys: &PQSystem) -> String {
        serde_json::to_string(&self.to_record(sys, false)).expect("record serializes")
    }
}

/// Accepts a multiset iff every element is `p^a q^b`, elements are distinct,
/// and the exponent pairs form a chain. Returns the sorted partition.
pub fn validate(parts: &RawMultiset, sys: &PQSystem) -> Result<Partition> {
    let mut exps = Vec::with_capacity(parts.len());
    for v in parts.values() {
        exps.push(factor(v, sys)?);
    }
    // values() is non-increasing, so equal neighbours are duplicates.
    for (w, e) in parts.values().windows(2).zip(exps.windows(2)) {
        if w[0] == w[1] {
            return Err(Error::DuplicatePart(w[0].to_string()));
        }
        if !e[1].lt(e[0]) {
            return Err(Error::ChainBreak {
                larger: w[0].to_string(),
                smaller: w[1].to_string(),
            });
        }
    }
    Ok(Partition { parts: exps })
}

/// Splits `v` as `p^a q^b` by repeated division; anything left over rejects.
fn factor(v: &BigUint, sys: &PQSystem) -> Result<Exp> {
    if v.is_zero() {
        return Err(Error::ZeroPart);
    }
    let mut rest = v.clone();
    let mut exps = [0u32; 2];
    for (slot, base) in [sys.p(), sys.q()].into_iter().enumerate() {
        let base = BigUint::from(base);
        loop {
            let (d, r) = (&rest / &base, &rest % &base);
            if !r.is_zero() {
                break;
            }
            rest = d;
            exps[slot] += 1;
        }
    }
    if !rest.is_one() {
        return Err(Error::NotSmooth(v.to_string()));
    }
    Ok(Exp::new(exps[0], exps[1]))
}

/// Serialized form: `{"p":2,"q":3,"parts":[[1,2],[0,0]],"sum":"19"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionRecord {
    pub p: u64,
    pub q: u64,
    pub parts: Vec<[u32; 2]>,
    pub sum: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
}

impl PartitionRecord {
    /// Rebuilds the partition, checking the chain and the stated sum.
    pub fn to_partition(&self) -> Result<(PQSystem, Partition)> {
        let sys = PQSystem::new(self.p, self.q)?;
        let pt = Partition::from_exponents(self.parts.iter().map(|&[a, b]| (a, b)))?;
        let sum = pt.value(&sys).to_string();
        if sum != self.sum {
            return Err(Error::InvalidArgument(format!(
                "record sum {} does not match parts (sum {sum})",
                self.sum
            )));
        }
        Ok((sys, pt))
    }
}

/// Exact conversion of a count to `f64` for ratio reporting.
pub(crate) fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}
