//! Word encodings of partitions.
//!
//! **Tree words** (`p = 2` only) over the letters `1`, `2`, `q` record the
//! path from `U` down to the leaf `1` in the binary generation tree (see
//! [`crate::decompose::Scheme::Binary`]). Reading the word right to left and
//! applying `+1` (binary-amount increment), `x2`, `xq` to the partition `(1)`
//! rebuilds the partition. The partition `(1)` itself has the empty word.
//!
//! **Lattice words** over `{0,1,2,3}` trace the chain of exponent pairs in
//! `N^2`. The path starts at `(0,0)`, ends at the largest part and goes North
//! before East whenever both are needed. Each lattice point on the path
//! emits one letter:
//!
//! | letter | point in chain | next step |
//! |--------|----------------|-----------|
//! | `0`    | no             | East      |
//! | `1`    | yes            | East      |
//! | `2`    | no             | North     |
//! | `3`    | yes            | North, or end of path |
//!
//! Canonical words are exactly the words ending in `3` with no factor `02`
//! or `12`.

use std::fmt;
use std::str::FromStr;

use crate::decompose::{locate, Letter, Scheme};
use crate::error::{Error, Result};
use crate::partition::{Exp, Partition};
use crate::system::PQSystem;

/// A generation-tree word, letters listed root first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeWord {
    letters: Vec<Letter>,
    q: u64,
}

impl TreeWord {
    pub fn new(letters: Vec<Letter>, q: u64) -> Self {
        TreeWord { letters, q }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Parses the text form for a given `q`. Letters may be separated by `.`
    /// (required when `q > 9`).
    pub fn parse(s: &str, q: u64) -> Result<Self> {
        let bad = |reason: String| Error::MalformedWord {
            word: s.to_string(),
            reason,
        };
        let tokens: Vec<&str> = if s.contains('.') {
            s.split('.').collect()
        } else {
            s.char_indices().map(|(i, c)| &s[i..i + c.len_utf8()]).collect()
        };
        let mut letters = Vec::with_capacity(tokens.len());
        for t in tokens {
            letters.push(match t {
                "1" => Letter::One,
                "2" => Letter::P,
                _ if t.parse::<u64>().ok() == Some(q) => Letter::Q,
                _ => return Err(bad(format!("unexpected letter {t:?}"))),
            });
        }
        Ok(TreeWord { letters, q })
    }

    fn letter_text(&self, l: Letter) -> String {
        match l {
            Letter::One => "1".into(),
            Letter::P => "2".into(),
            Letter::Q => self.q.to_string(),
        }
    }

    /// Symbolic letters `"1"`, `"2"`, `"q"` for structured output.
    pub fn symbols(&self) -> Vec<&'static str> {
        self.letters
            .iter()
            .map(|l| match l {
                Letter::One => "1",
                Letter::P => "2",
                Letter::Q => "q",
            })
            .collect()
    }
}

impl fmt::Display for TreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.q > 9 { "." } else { "" };
        let parts: Vec<String> = self.letters.iter().map(|&l| self.letter_text(l)).collect();
        f.write_str(&parts.join(sep))
    }
}

/// Tree word of a partition of `U >= 1`.
pub fn tree_encode(pt: &Partition, sys: &PQSystem) -> Result<TreeWord> {
    sys.require_p2("p = 2 for tree words")?;
    let mut v = pt
        .value_u128(sys)
        .ok_or(Error::Overflow("partition value exceeds 128 bits"))?;
    if v == 0 {
        return Err(Error::InvalidArgument("the empty partition has no tree word".into()));
    }
    let mut cur = pt.clone();
    let mut letters = Vec::new();
    while v > 1 {
        let (_, branch, child) = locate(&cur, v, sys, Scheme::Binary).ok_or_else(|| {
            Error::Invariant(format!("{} is in no branch of the tree at {v}", cur.display(sys)))
        })?;
        letters.extend_from_slice(branch.letters);
        cur = child;
        v = branch.child;
    }
    debug_assert_eq!(cur, Partition::unit());
    Ok(TreeWord::new(letters, sys.q()))
}

/// Replays a tree word from `(1)`; returns the value and the partition.
pub fn tree_decode(w: &TreeWord, sys: &PQSystem) -> Result<(u128, Partition)> {
    sys.require_p2("p = 2 for tree words")?;
    if w.q != sys.q() {
        return Err(Error::InvalidArgument(format!("word built for q = {}, system has q = {}", w.q, sys.q())));
    }
    let mut cur = Partition::unit();
    for (i, l) in w.letters.iter().enumerate().rev() {
        cur = l.apply(&cur, sys).ok_or_else(|| Error::MalformedWord {
            word: w.to_string(),
            reason: format!("increment at position {i} breaks the chain"),
        })?;
    }
    let v = cur
        .value_u128(sys)
        .ok_or(Error::Overflow("decoded value exceeds 128 bits"))?;
    Ok((v, cur))
}

/// A lattice word over `{0,1,2,3}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeWord(String);

impl LatticeWord {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for LatticeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for LatticeWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if is_valid_lattice_word(s) {
            Ok(LatticeWord(s.to_string()))
        } else {
            Err(Error::MalformedWord {
                word: s.to_string(),
                reason: lattice_grammar_error(s).unwrap_or_default(),
            })
        }
    }
}

fn lattice_grammar_error(w: &str) -> Option<String> {
    if w.is_empty() {
        return Some("empty word".into());
    }
    if let Some(c) = w.chars().find(|c| !matches!(c, '0'..='3')) {
        return Some(format!("letter {c:?} outside 0-3"));
    }
    if !w.ends_with('3') {
        return Some("does not end with 3".into());
    }
    for f in ["02", "12"] {
        if w.contains(f) {
            return Some(format!("contains factor {f}"));
        }
    }
    None
}

/// Syntactic check: ends with `3`, no factor `02` or `12`.
pub fn is_valid_lattice_word(w: &str) -> bool {
    lattice_grammar_error(w).is_none()
}

/// Canonical lattice word of a nonempty partition.
pub fn lattice_encode(pt: &Partition) -> Result<LatticeWord> {
    if pt.is_empty() {
        return Err(Error::InvalidArgument("the empty partition has no lattice word".into()));
    }
    // Stored order is decreasing; walk from the smallest part.
    let chain: Vec<Exp> = pt.parts().iter().rev().copied().collect();
    let mut out = String::new();
    let (mut a, mut b) = (0u32, 0u32);
    let mut next = 0usize;
    loop {
        let target = chain[next];
        let member = a == target.a && b == target.b;
        if member {
            next += 1;
            if next == chain.len() {
                out.push('3');
                break;
            }
        }
        let goal = chain[next];
        let north = b < goal.b;
        out.push(match (member, north) {
            (false, false) => '0',
            (true, false) => '1',
            (false, true) => '2',
            (true, true) => '3',
        });
        if north {
            b += 1;
        } else {
            a += 1;
        }
    }
    Ok(LatticeWord(out))
}

/// Reads any word over `{0,1,2,3}` ending in `3` as a lattice path, whether
/// or not the path is canonical: `1`, `3` mark membership, `0`, `1` step
/// East, `2`, `3` step North, and the final `3` ends the path.
pub fn lattice_decode_path(w: &str) -> Result<Partition> {
    let bad = |reason: &str| Error::MalformedWord {
        word: w.to_string(),
        reason: reason.to_string(),
    };
    if !w.ends_with('3') {
        return Err(bad("does not end with 3"));
    }
    let bytes = w.as_bytes();
    let (mut a, mut b) = (0u32, 0u32);
    let mut parts = Vec::new();
    for (i, &c) in bytes.iter().enumerate() {
        if !(b'0'..=b'3').contains(&c) {
            return Err(bad("letter outside 0-3"));
        }
        if c == b'1' || c == b'3' {
            parts.push(Exp::new(a, b));
        }
        if i + 1 == bytes.len() {
            break;
        }
        match c {
            b'0' | b'1' => a = a.checked_add(1).ok_or_else(|| bad("exponent overflow"))?,
            _ => b = b.checked_add(1).ok_or_else(|| bad("exponent overflow"))?,
        }
    }
    parts.reverse();
    Ok(Partition::from_parts_unchecked(parts))
}

/// Decodes a canonical lattice word.
pub fn lattice_decode(w: &str) -> Result<Partition> {
    if let Some(reason) = lattice_grammar_error(w) {
        return Err(Error::MalformedWord {
            word: w.to_string(),
            reason,
        });
    }
    lattice_decode_path(w)
}

fn is_subsequence<T: PartialEq>(short: &[T], long: &[T]) -> bool {
    let mut it = long.iter();
    short.iter().all(|x| it.any(|y| y == x))
}

/// No word is a (scattered) subsequence of another word in the set.
pub fn is_hypercode(words: &[TreeWord]) -> bool {
    for (i, u) in words.iter().enumerate() {
        for (j, v) in words.iter().enumerate() {
            if i != j && u.len() <= v.len() && is_subsequence(u.letters(), v.letters()) {
                return false;
            }
        }
    }
    true
}

/// No word is a factor (contiguous subword) of another word in the set.
pub fn is_infix_code(words: &[LatticeWord]) -> bool {
    let set: std::collections::HashSet<&str> = words.iter().map(|w| w.as_str()).collect();
    if set.len() != words.len() {
        return false;
    }
    for w in words {
        let s = w.as_str();
        for i in 0..s.len() {
            for j in i + 1..=s.len() {
                if (j - i) < s.len() && set.contains(&s[i..j]) {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_force_enumerate;
    use crate::partition::{validate, RawMultiset};
    use std::collections::BTreeSet;

    fn s23() -> PQSystem {
        PQSystem::new(2, 3).unwrap()
    }

    fn pt(values: &[u128], s: &PQSystem) -> Partition {
        validate(&RawMultiset::from_u128s(values.iter().copied()), s).unwrap()
    }

    #[test]
    fn tree_words_of_19() {
        let s = s23();
        let words: BTreeSet<String> = brute_force_enumerate(19, &s)
            .unwrap()
            .iter()
            .map(|p| tree_encode(p, &s).unwrap().to_string())
            .collect();
        let want: BTreeSet<String> = ["1112222", "1112213", "1332", "131122"].iter().map(|x| x.to_string()).collect();
        assert_eq!(words, want);
        assert_eq!(tree_encode(&pt(&[16, 2, 1], &s), &s).unwrap().to_string(), "1112222");
        assert_eq!(tree_encode(&pt(&[12, 4, 2, 1], &s), &s).unwrap().to_string(), "1112213");
    }

    #[test]
    fn tree_decode_examples() {
        let s = s23();
        let dec = |w: &str| tree_decode(&TreeWord::parse(w, 3).unwrap(), &s).unwrap();
        assert_eq!(dec("1332"), (19, pt(&[18, 1], &s)));
        assert_eq!(dec("1112222"), (19, pt(&[16, 2, 1], &s)));
        assert_eq!(dec("131122"), (19, pt(&[12, 6, 1], &s)));
        assert_eq!(dec(""), (1, Partition::unit()));
        assert_eq!(tree_encode(&Partition::unit(), &s).unwrap().to_string(), "");
    }

    #[test]
    fn tree_decode_rejects_broken_increment() {
        let s = s23();
        // (1) -> x2 -> (2) -> x3 -> (6) -> +1 -> (6,1) -> +1 -> (6,2) valid,
        // (6,2) -> +1 -> (6,2,1) -> +1 -> (6,4) breaks the chain.
        let w = TreeWord::parse("111132", 3).unwrap();
        assert!(matches!(tree_decode(&w, &s), Err(Error::MalformedWord { .. })));
    }

    #[test]
    fn tree_words_need_p2() {
        let s = PQSystem::new(3, 5).unwrap();
        assert!(tree_encode(&Partition::unit(), &s).is_err());
    }

    #[test]
    fn wide_q_uses_separators() {
        let s = PQSystem::new(2, 11).unwrap();
        let p = pt(&[22, 1], &s);
        let w = tree_encode(&p, &s).unwrap();
        let text = w.to_string();
        assert!(text.contains('.'));
        assert_eq!(tree_decode(&TreeWord::parse(&text, 11).unwrap(), &s).unwrap().1, p);
    }

    #[test]
    fn lattice_examples() {
        let s = s23();
        let enc = |v: &[u128]| lattice_encode(&pt(v, &s)).unwrap().to_string();
        assert_eq!(enc(&[18, 1]), "3203");
        assert_eq!(enc(&[12, 6, 1]), "3013");
        assert_eq!(enc(&[12, 4, 2, 1]), "1133");
        assert_eq!(enc(&[16, 2, 1]), "11003");
        let two_points = Partition::from_exponents([(1, 1), (0, 0)]).unwrap();
        assert_eq!(lattice_encode(&two_points).unwrap().as_str(), "303");
        assert_eq!(lattice_decode("11003").unwrap(), pt(&[16, 2, 1], &s));
        assert_eq!(lattice_decode("2223").unwrap(), pt(&[27], &s));
        assert_eq!(lattice_decode("3013").unwrap(), pt(&[12, 6, 1], &s));
    }

    #[test]
    fn non_canonical_path() {
        assert!(!is_valid_lattice_word("123"));
        assert!(lattice_decode("123").is_err());
        let chain = lattice_decode_path("123").unwrap();
        assert_eq!(lattice_encode(&chain).unwrap().as_str(), "303");
    }

    #[test]
    fn grammar_examples() {
        assert!(is_valid_lattice_word("1333"));
        assert!(!is_valid_lattice_word("023"));
        assert!(!is_valid_lattice_word(""));
        assert!(!is_valid_lattice_word("30"));
        assert!(!is_valid_lattice_word("343"));
    }

    #[test]
    fn omega_27_lattice_words() {
        let s = s23();
        let words: BTreeSet<String> = brute_force_enumerate(27, &s)
            .unwrap()
            .iter()
            .map(|p| lattice_encode(p).unwrap().to_string())
            .collect();
        let want: BTreeSet<String> = ["11013", "13003", "1333", "21003", "2133", "2213", "2223"]
            .iter()
            .map(|x| x.to_string())
            .collect();
        assert_eq!(words, want);
    }

    #[test]
    fn grammar_matches_canonical_words_to_length_8() {
        let mut stack = vec![String::new()];
        while let Some(w) = stack.pop() {
            if w.len() < 8 {
                for c in ['0', '1', '2', '3'] {
                    let mut x = w.clone();
                    x.push(c);
                    stack.push(x);
                }
            }
            if w.ends_with('3') {
                let canonical = lattice_encode(&lattice_decode_path(&w).unwrap()).unwrap();
                assert_eq!(is_valid_lattice_word(&w), canonical.as_str() == w, "{w}");
            }
        }
    }

    #[test]
    fn round_trips_and_codes() {
        for (p, q) in [(2u64, 3u64), (2, 5), (3, 4)] {
            let s = PQSystem::new(p, q).unwrap();
            for u in 1..400u128 {
                let members = brute_force_enumerate(u, &s).unwrap();
                let mut lw = Vec::new();
                let mut tw = Vec::new();
                for m in &members {
                    let l = lattice_encode(m).unwrap();
                    assert_eq!(&lattice_decode(l.as_str()).unwrap(), m);
                    lw.push(l);
                    if p == 2 {
                        let t = tree_encode(m, &s).unwrap();
                        assert_eq!(tree_decode(&t, &s).unwrap(), (u, m.clone()));
                        tw.push(t);
                    }
                }
                assert!(is_infix_code(&lw), "({p},{q}) {u}");
                assert!(is_hypercode(&tw), "({p},{q}) {u}");
            }
        }
    }

    #[test]
    fn code_checkers_detect_violations() {
        let w = |s: &str| LatticeWord(s.to_string());
        assert!(!is_infix_code(&[w("13"), w("2133")]));
        let t = |s: &str| TreeWord::parse(s, 3).unwrap();
        assert!(!is_hypercode(&[t("132"), t("11322")]));
        assert!(is_hypercode(&[t("1332"), t("131122")]));
    }
}
