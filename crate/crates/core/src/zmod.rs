//! Alphabets, words, families and the covering verifiers.
//!
//! Everything else in the crate produces [`Family`] values and checks them
//! with [`family_is_covering`]. Residues of `Z_s` are always stored in
//! `[0, s)`; integer bands hold exact integers.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = i64;

/// The symbol set words are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Alphabet {
    /// `Z_s`, residues `0..s`.
    #[serde(rename = "mod")]
    ModRing(u32),
    /// The integers `lo..=hi`, with exact subtraction.
    #[serde(rename = "band")]
    IntegerBand(Symbol, Symbol),
}

impl Alphabet {
    pub fn modring(s: u32) -> Result<Self> {
        let a = Alphabet::ModRing(s);
        a.validate()?;
        Ok(a)
    }

    pub fn band(lo: Symbol, hi: Symbol) -> Result<Self> {
        let a = Alphabet::IntegerBand(lo, hi);
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Alphabet::ModRing(s) if s < 2 => {
                Err(Error::input(format!("modulus must be at least 2, got {s}")))
            }
            Alphabet::IntegerBand(lo, hi) if lo > hi => {
                Err(Error::input(format!("empty integer band [{lo}, {hi}]")))
            }
            _ => Ok(()),
        }
    }

    pub fn modulus(&self) -> Option<u32> {
        match *self {
            Alphabet::ModRing(s) => Some(s),
            Alphabet::IntegerBand(..) => None,
        }
    }

    pub fn contains(&self, x: Symbol) -> bool {
        match *self {
            Alphabet::ModRing(s) => (0..s as Symbol).contains(&x),
            Alphabet::IntegerBand(lo, hi) => (lo..=hi).contains(&x),
        }
    }

    /// Maps an arbitrary integer to its stored representative. Bands are
    /// left unchanged.
    pub fn canonical(&self, x: Symbol) -> Symbol {
        match *self {
            Alphabet::ModRing(s) => x.rem_euclid(s as Symbol),
            Alphabet::IntegerBand(..) => x,
        }
    }

    pub fn sub(&self, a: Symbol, b: Symbol) -> Symbol {
        match *self {
            Alphabet::ModRing(s) => (a - b).rem_euclid(s as Symbol),
            Alphabet::IntegerBand(..) => a - b,
        }
    }

    /// Alphabet that differences of two words over `self` live in.
    pub fn difference_alphabet(&self) -> Alphabet {
        match *self {
            Alphabet::ModRing(s) => Alphabet::ModRing(s),
            Alphabet::IntegerBand(lo, hi) => Alphabet::IntegerBand(lo - hi, hi - lo),
        }
    }

    /// Whether words over `self` may be checked against targets over `other`.
    pub fn compatible_with(&self, other: &Alphabet) -> bool {
        match (self, other) {
            (Alphabet::ModRing(a), Alphabet::ModRing(b)) => a == b,
            (Alphabet::IntegerBand(..), Alphabet::IntegerBand(..)) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alphabet::ModRing(s) => write!(f, "Z_{s}"),
            Alphabet::IntegerBand(lo, hi) => write!(f, "[{lo}, {hi}]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    alphabet: Alphabet,
    entries: Vec<Symbol>,
}

impl Word {
    pub fn new(alphabet: Alphabet, entries: Vec<Symbol>) -> Result<Self> {
        alphabet.validate()?;
        if let Some(bad) = entries.iter().find(|&&e| !alphabet.contains(e)) {
            return Err(Error::input(format!("symbol {bad} is not in {alphabet}")));
        }
        Ok(Word { alphabet, entries })
    }

    pub fn zeros(alphabet: Alphabet, q: usize) -> Result<Self> {
        Word::new(alphabet, vec![0; q])
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn entries(&self) -> &[Symbol] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_entries(self) -> Vec<Symbol> {
        self.entries
    }
}

/// Coordinatewise `u - v`.
pub fn diff(u: &Word, v: &Word) -> Result<Word> {
    if u.alphabet != v.alphabet {
        return Err(Error::input(format!(
            "alphabet mismatch: {} vs {}",
            u.alphabet, v.alphabet
        )));
    }
    if u.len() != v.len() {
        return Err(Error::input(format!(
            "length mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let a = u.alphabet;
    let entries = u
        .entries
        .iter()
        .zip(&v.entries)
        .map(|(&x, &y)| a.sub(x, y))
        .collect();
    Ok(Word {
        alphabet: a.difference_alphabet(),
        entries,
    })
}

/// The set `A` that differences must cover.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoverTarget {
    alphabet: Alphabet,
    symbols: Vec<Symbol>,
}

impl CoverTarget {
    /// Builds a target from arbitrary integers; residues are canonicalized
    /// into `[0, s)` so `-1` is stored as `s - 1`.
    pub fn from_symbols(alphabet: Alphabet, symbols: impl IntoIterator<Item = Symbol>) -> Result<Self> {
        alphabet.validate()?;
        let mut symbols: Vec<Symbol> = symbols.into_iter().map(|x| alphabet.canonical(x)).collect();
        if !symbols.windows(2).all(|w| w[0] < w[1]) {
            symbols.sort_unstable();
            symbols.dedup();
        }
        if symbols.is_empty() {
            return Err(Error::input("cover target must be non-empty"));
        }
        if let Alphabet::ModRing(_) = alphabet {
            debug_assert!(symbols.iter().all(|&x| alphabet.contains(x)));
        }
        Ok(CoverTarget { alphabet, symbols })
    }

    /// All of `Z_s`.
    pub fn full(s: u32) -> Result<Self> {
        Ok(CoverTarget {
            alphabet: Alphabet::modring(s)?,
            symbols: (0..s as Symbol).collect(),
        })
    }

    pub fn zero_one(s: u32) -> Result<Self> {
        Self::from_symbols(Alphabet::modring(s)?, [0, 1])
    }

    /// `Z_s \ {0}`.
    pub fn units(s: u32) -> Result<Self> {
        Self::from_symbols(Alphabet::modring(s)?, 1..s as Symbol)
    }

    /// `{±alpha^b mod s : 0 <= b < 2^t}`.
    pub fn signed_powers(s: u32, alpha: u32, t: u32) -> Result<Self> {
        let a = Alphabet::modring(s)?;
        if t >= 63 {
            return Err(Error::input("iteration count too large"));
        }
        let m = s as u64;
        // alpha^b cycles with period dividing s - 1 when alpha is a unit,
        // and after at most s steps otherwise.
        let count = (1u64 << t).min(2 * m);
        let mut x = 1 % m;
        let mut out = Vec::new();
        for _ in 0..count {
            out.push(x as Symbol);
            out.push(-(x as Symbol));
            x = x * (alpha as u64 % m) % m;
        }
        Self::from_symbols(a, out)
    }

    /// Every integer in `[-s, s]`, over an integer band.
    pub fn integer_band(s: u32) -> Result<Self> {
        let s = s as Symbol;
        Self::from_symbols(Alphabet::band(-s, s)?, -s..=s)
    }

    /// `[-m, -1] ∪ [1, m]` over an integer band.
    pub fn punctured_band(m: u32) -> Result<Self> {
        let m = m as Symbol;
        Self::from_symbols(Alphabet::band(-m, m)?, (-m..=m).filter(|&x| x != 0))
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains(&self, x: Symbol) -> bool {
        self.symbols.binary_search(&x).is_ok()
    }

    /// `A = -A` under the alphabet's negation.
    pub fn is_symmetric(&self) -> bool {
        self.symbols
            .iter()
            .all(|&x| self.contains(self.alphabet.canonical(-x)))
    }

    pub fn is_subset_of(&self, other: &CoverTarget) -> bool {
        self.alphabet == other.alphabet && self.symbols.iter().all(|&x| other.contains(x))
    }
}

/// Dense symbol -> bit-index table over the span of a target.
#[derive(Clone, Debug)]
pub(crate) struct TargetIndex {
    offset: Symbol,
    slots: Vec<u32>,
}

const NO_SLOT: u32 = u32::MAX;

impl TargetIndex {
    pub(crate) fn new(target: &CoverTarget) -> Self {
        let lo = target.symbols[0];
        let hi = *target.symbols.last().unwrap();
        let mut slots = vec![NO_SLOT; (hi - lo + 1) as usize];
        for (i, &x) in target.symbols.iter().enumerate() {
            slots[(x - lo) as usize] = i as u32;
        }
        TargetIndex {
            offset: lo,
            slots,
        }
    }

    #[inline]
    pub(crate) fn slot(&self, x: Symbol) -> Option<usize> {
        let k = x - self.offset;
        if k < 0 || k as usize >= self.slots.len() {
            return None;
        }
        match self.slots[k as usize] {
            NO_SLOT => None,
            i => Some(i as usize),
        }
    }
}

/// Incremental record of which target symbols have been seen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverMask {
    bits: Vec<u64>,
    hits: usize,
    need: usize,
}

impl CoverMask {
    pub fn new(target_len: usize) -> Self {
        CoverMask {
            bits: vec![0; target_len.div_ceil(64).max(1)],
            hits: 0,
            need: target_len,
        }
    }

    pub fn clear(&mut self) {
        self.bits.iter_mut().for_each(|w| *w = 0);
        self.hits = 0;
    }

    #[inline]
    pub fn hit(&mut self, slot: usize) {
        let (w, b) = (slot / 64, slot % 64);
        let bit = 1u64 << b;
        if self.bits[w] & bit == 0 {
            self.bits[w] |= bit;
            self.hits += 1;
        }
    }

    pub fn is_set(&self, slot: usize) -> bool {
        self.bits[slot / 64] >> (slot % 64) & 1 == 1
    }

    #[inline]
    pub fn is_complete(&self) -> bool {
        self.hits == self.need
    }

    pub fn count(&self) -> usize {
        self.hits
    }
}

/// True iff every symbol of `target` occurs in `v`.
pub fn word_covers(v: &Word, target: &CoverTarget) -> Result<bool> {
    if !v.alphabet.compatible_with(&target.alphabet) {
        return Err(Error::input(format!(
            "word over {} cannot be checked against a target over {}",
            v.alphabet, target.alphabet
        )));
    }
    let index = TargetIndex::new(target);
    let mut mask = CoverMask::new(target.len());
    for &e in &v.entries {
        if let Some(slot) = index.slot(e) {
            mask.hit(slot);
            if mask.is_complete() {
                return Ok(true);
            }
        }
    }
    Ok(mask.is_complete())
}

/// First ordered pair whose difference `rows[i] - rows[j]` misses the target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFailure {
    pub i: usize,
    pub j: usize,
    pub missing: Vec<Symbol>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub pairs_checked: u64,
    pub failure: Option<PairFailure>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions {
    /// Check only `i < j` when the target is closed under negation.
    pub symmetric_shortcut: bool,
}

pub(crate) fn check_rows(
    alphabet: Alphabet,
    rows: &[Vec<Symbol>],
    target: &CoverTarget,
    opts: VerifyOptions,
) -> VerifyReport {
    let index = TargetIndex::new(target);
    let mut mask = CoverMask::new(target.len());
    let unordered = opts.symmetric_shortcut && target.is_symmetric();
    let mut pairs = 0u64;
    for i in 0..rows.len() {
        let start = if unordered { i + 1 } else { 0 };
        for j in start..rows.len() {
            if i == j {
                continue;
            }
            pairs += 1;
            mask.clear();
            for (&x, &y) in rows[i].iter().zip(&rows[j]) {
                if let Some(slot) = index.slot(alphabet.sub(x, y)) {
                    mask.hit(slot);
                    if mask.is_complete() {
                        break;
                    }
                }
            }
            if !mask.is_complete() {
                let missing = target
                    .symbols
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| !mask.is_set(k))
                    .map(|(_, &x)| x)
                    .collect();
                return VerifyReport {
                    passed: false,
                    pairs_checked: pairs,
                    failure: Some(PairFailure { i, j, missing }),
                };
            }
        }
    }
    VerifyReport {
        passed: true,
        pairs_checked: pairs,
        failure: None,
    }
}

/// Checks every ordered pair of distinct rows.
pub fn family_is_covering(f: &Family, target: &CoverTarget) -> Result<VerifyReport> {
    family_is_covering_with(f, target, VerifyOptions::default())
}

pub fn family_is_covering_with(
    f: &Family,
    target: &CoverTarget,
    opts: VerifyOptions,
) -> Result<VerifyReport> {
    if !f.alphabet.compatible_with(&target.alphabet) {
        return Err(Error::input(format!(
            "family over {} cannot be checked against a target over {}",
            f.alphabet, target.alphabet
        )));
    }
    Ok(check_rows(f.alphabet, &f.rows, target, opts))
}

/// An ordered set of pairwise distinct words of common length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFamily")]
pub struct Family {
    alphabet: Alphabet,
    q: usize,
    rows: Vec<Vec<Symbol>>,
}

#[derive(Deserialize)]
struct RawFamily {
    alphabet: Alphabet,
    q: usize,
    rows: Vec<Vec<Symbol>>,
}

impl TryFrom<RawFamily> for Family {
    type Error = Error;

    fn try_from(raw: RawFamily) -> Result<Self> {
        Family::new(raw.alphabet, raw.q, raw.rows)
    }
}

impl Family {
    pub fn new(alphabet: Alphabet, q: usize, rows: Vec<Vec<Symbol>>) -> Result<Self> {
        alphabet.validate()?;
        let mut seen = HashSet::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != q {
                return Err(Error::input(format!(
                    "row {i} has length {}, expected {q}",
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|&&e| !alphabet.contains(e)) {
                return Err(Error::input(format!("row {i}: symbol {bad} is not in {alphabet}")));
            }
            if !seen.insert(row.as_slice()) {
                return Err(Error::input(format!("row {i} duplicates an earlier row")));
            }
        }
        Ok(Family { alphabet, q, rows })
    }

    pub fn from_words(words: Vec<Word>) -> Result<Self> {
        let first = words
            .first()
            .ok_or_else(|| Error::input("cannot infer alphabet of an empty word list"))?;
        let (alphabet, q) = (first.alphabet, first.len());
        if words.iter().any(|w| w.alphabet != alphabet) {
            return Err(Error::input("words have different alphabets"));
        }
        Family::new(alphabet, q, words.into_iter().map(Word::into_entries).collect())
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn modulus(&self) -> Option<u32> {
        self.alphabet.modulus()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<Symbol>] {
        &self.rows
    }

    pub fn word(&self, i: usize) -> Word {
        Word {
            alphabet: self.alphabet,
            entries: self.rows[i].clone(),
        }
    }

    pub fn into_rows(self) -> Vec<Vec<Symbol>> {
        self.rows
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("family serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A matrix over `Z_m` that may contain repeated rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueMatrix {
    pub modulus: u32,
    pub q: usize,
    pub rows: Vec<Vec<Symbol>>,
}

impl ResidueMatrix {
    pub fn alphabet(&self) -> Alphabet {
        Alphabet::ModRing(self.modulus)
    }

    /// Ordered-pair covering check over distinct row indices.
    pub fn is_covering(&self, target: &CoverTarget) -> Result<VerifyReport> {
        if target.alphabet != self.alphabet() {
            return Err(Error::input("target does not match the matrix modulus"));
        }
        Ok(check_rows(self.alphabet(), &self.rows, target, VerifyOptions::default()))
    }

    /// Collapses into a [`Family`] if the rows happen to be distinct.
    pub fn into_family(self) -> Result<Family> {
        Family::new(self.alphabet(), self.q, self.rows)
    }
}

/// Entrywise reduction modulo `m`.
pub fn reduce_mod(f: &Family, m: u32) -> Result<ResidueMatrix> {
    if m < 2 {
        return Err(Error::input(format!("modulus must be at least 2, got {m}")));
    }
    if let Alphabet::ModRing(s) = f.alphabet {
        if s % m != 0 {
            return Err(Error::input(format!("{m} does not divide {s}")));
        }
    }
    let rows = f
        .rows
        .iter()
        .map(|r| r.iter().map(|&x| x.rem_euclid(m as Symbol)).collect())
        .collect();
    Ok(ResidueMatrix {
        modulus: m,
        q: f.q,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(s: u32, rows: &[&[Symbol]]) -> Family {
        let q = rows.first().map_or(0, |r| r.len());
        Family::new(Alphabet::ModRing(s), q, rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn w(s: u32, e: &[Symbol]) -> Word {
        Word::new(Alphabet::ModRing(s), e.to_vec()).unwrap()
    }

    #[test]
    fn diff_mod_two() {
        let d = diff(&w(2, &[1, 0]), &w(2, &[1, 1])).unwrap();
        assert_eq!(d.entries(), &[0, 1]);
        let z = diff(&w(7, &[3, 5, 6]), &w(7, &[3, 5, 6])).unwrap();
        assert_eq!(z.entries(), &[0, 0, 0]);
    }

    #[test]
    fn diff_rejects_mismatch() {
        assert!(diff(&w(3, &[1, 2]), &w(3, &[1])).is_err());
        assert!(diff(&w(3, &[1, 2]), &w(4, &[1, 2])).is_err());
    }

    #[test]
    fn band_diff_is_exact() {
        let a = Alphabet::band(1, 4).unwrap();
        let d = diff(&Word::new(a, vec![1, 4]).unwrap(), &Word::new(a, vec![4, 1]).unwrap()).unwrap();
        assert_eq!(d.entries(), &[-3, 3]);
        assert_eq!(d.alphabet(), Alphabet::IntegerBand(-3, 3));
    }

    #[test]
    fn word_cover_examples() {
        let full3 = CoverTarget::full(3).unwrap();
        assert!(word_covers(&w(3, &[0, 1, 2]), &full3).unwrap());
        assert!(!word_covers(&w(3, &[0, 0, 1]), &full3).unwrap());
        let units5 = CoverTarget::units(5).unwrap();
        assert!(word_covers(&w(5, &[1, 4, 2, 3, 0]), &units5).unwrap());
        assert!(word_covers(&w(3, &[0, 1]), &full3.clone()).is_ok());
        assert!(word_covers(&w(4, &[0, 1]), &full3).is_err());
    }

    #[test]
    fn two_by_two_cases() {
        let full = CoverTarget::full(2).unwrap();
        assert!(family_is_covering(&fam(2, &[&[0, 0], &[0, 1]]), &full).unwrap().passed);
        let r = family_is_covering(&fam(2, &[&[0, 0], &[1, 1]]), &full).unwrap();
        assert!(!r.passed);
        let fail = r.failure.unwrap();
        assert_eq!((fail.i, fail.j), (0, 1));
        assert_eq!(fail.missing, vec![0]);
    }

    #[test]
    fn empty_and_singleton_pass() {
        let full = CoverTarget::full(3).unwrap();
        let empty = Family::new(Alphabet::ModRing(3), 2, vec![]).unwrap();
        assert!(family_is_covering(&empty, &full).unwrap().passed);
        assert!(family_is_covering(&fam(3, &[&[1, 2]]), &full).unwrap().passed);
    }

    #[test]
    fn ordered_pairs_matter_for_zero_one() {
        // (1,0) - (0,0) = (1,0) covers {0,1}; (0,0) - (1,0) = (2,0) does not.
        let f = fam(3, &[&[0, 0], &[1, 0]]);
        let r = family_is_covering(&f, &CoverTarget::zero_one(3).unwrap()).unwrap();
        assert!(!r.passed);
        let fail = r.failure.unwrap();
        assert_eq!((fail.i, fail.j, fail.missing), (0, 1, vec![1]));
    }

    #[test]
    fn symmetric_shortcut_agrees() {
        let f = fam(5, &[&[0, 0, 0, 0, 0], &[0, 1, 2, 3, 4], &[0, 2, 4, 1, 3]]);
        let t = CoverTarget::full(5).unwrap();
        let slow = family_is_covering(&f, &t).unwrap();
        let fast = family_is_covering_with(&f, &t, VerifyOptions { symmetric_shortcut: true }).unwrap();
        assert!(slow.passed && fast.passed);
        assert_eq!(slow.pairs_checked, 6);
        assert_eq!(fast.pairs_checked, 3);
    }

    #[test]
    fn targets_canonicalize() {
        let t = CoverTarget::from_symbols(Alphabet::ModRing(5), [-1, 1]).unwrap();
        assert_eq!(t.symbols(), &[1, 4]);
        assert!(t.is_symmetric());
        assert!(!CoverTarget::zero_one(5).unwrap().is_symmetric());
        assert!(CoverTarget::from_symbols(Alphabet::ModRing(5), []).is_err());
        let p = CoverTarget::signed_powers(7, 3, 3).unwrap();
        assert_eq!(p.symbols(), &[1, 2, 3, 4, 5, 6]);
        let p1 = CoverTarget::signed_powers(7, 3, 0).unwrap();
        assert_eq!(p1.symbols(), &[1, 6]);
        assert_eq!(CoverTarget::integer_band(2).unwrap().symbols(), &[-2, -1, 0, 1, 2]);
        assert_eq!(CoverTarget::punctured_band(2).unwrap().symbols(), &[-2, -1, 1, 2]);
    }

    #[test]
    fn family_rejects_bad_rows() {
        let a = Alphabet::ModRing(3);
        assert!(Family::new(a, 2, vec![vec![0, 3]]).is_err());
        assert!(Family::new(a, 2, vec![vec![0, 1], vec![0, 1]]).is_err());
        assert!(Family::new(a, 2, vec![vec![0]]).is_err());
        assert!(Alphabet::modring(1).is_err());
        assert!(Alphabet::band(3, 2).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let f = fam(4, &[&[0, 1, 2, 3], &[0, 0, 0, 0]]);
        let text = f.to_json();
        assert_eq!(text, r#"{"alphabet":{"mod":4},"q":4,"rows":[[0,1,2,3],[0,0,0,0]]}"#);
        assert_eq!(Family::from_json(&text).unwrap(), f);
        let band = Family::from_json(r#"{"alphabet":{"band":[1,4]},"q":1,"rows":[[1],[4]]}"#).unwrap();
        assert_eq!(band.alphabet(), Alphabet::IntegerBand(1, 4));
        assert!(Family::from_json(r#"{"alphabet":{"mod":4},"q":1,"rows":[[4]]}"#).is_err());
        assert!(Family::from_json(r#"{"alphabet":{"mod":4},"q":1,"rows":[[1],[1]]}"#).is_err());
    }

    #[test]
    fn reduce_mod_cases() {
        let f = fam(4, &[&[0, 1, 2, 3], &[3, 2, 1, 0]]);
        assert_eq!(reduce_mod(&f, 2).unwrap().rows, vec![vec![0, 1, 0, 1], vec![1, 0, 1, 0]]);
        assert_eq!(reduce_mod(&f, 4).unwrap().rows, f.rows().to_vec());
        assert!(reduce_mod(&f, 3).is_err());
        let band = Family::new(Alphabet::IntegerBand(-3, 3), 2, vec![vec![-3, 2], vec![1, 1]]).unwrap();
        assert_eq!(reduce_mod(&band, 3).unwrap().rows, vec![vec![0, 2], vec![1, 1]]);
    }

    #[test]
    fn cover_mask_beyond_one_word() {
        let mut m = CoverMask::new(130);
        for k in 0..130 {
            assert!(!m.is_complete());
            m.hit(k);
            m.hit(k);
        }
        assert!(m.is_complete());
        assert_eq!(m.count(), 130);
        m.clear();
        assert_eq!(m.count(), 0);
    }
}
