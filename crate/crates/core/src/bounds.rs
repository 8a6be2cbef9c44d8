//! Closed-form bounds on `R(s, q)`, the lower-bound calculus over known
//! certificates, and the linear-independence certificate behind the
//! `2^(q-1)` upper bound.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constructions::{binomial, is_prime, smallest_prime_factor, Z15_MATRIX};
use crate::error::{Error, Result};
use crate::zmod::{family_is_covering, reduce_mod, Alphabet, CoverTarget, Family, ResidueMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Provenance {
    /// A single word is always covering.
    Singleton,
    TrivialQLtS,
    Binary,
    Cyclic,
    Ternary,
    Concat,
    Search,
    PaperZ15,
    Amplify,
    Pow2,
    PropRss,
    EvenRss,
    Quadratic,
    HammingEven,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bound {
    pub value: u64,
    pub provenance: Provenance,
}

impl Bound {
    fn new(value: u64, provenance: Provenance) -> Self {
        Bound { value, provenance }
    }
}

fn pow2(q: usize) -> u64 {
    if q >= 64 {
        u64::MAX
    } else {
        1u64 << q
    }
}

/// Number of binary words within Hamming distance `t` of a fixed word.
pub fn hamming_ball_volume(q: usize, t: usize) -> u64 {
    (0..=t.min(q))
        .map(|i| binomial(q as u64, i as u64))
        .fold(0u64, |a, b| a.saturating_add(b))
}

/// Every closed-form upper bound that applies at `(s, q)`.
pub fn upper_bounds(s: u32, q: usize) -> Vec<Bound> {
    let mut out = Vec::new();
    if (q as u64) < s as u64 {
        out.push(Bound::new(1, Provenance::TrivialQLtS));
    }
    if q >= 1 {
        out.push(Bound::new(pow2(q - 1), Provenance::Pow2));
    }
    if q == s as usize {
        out.push(Bound::new(s as u64, Provenance::PropRss));
        if s % 2 == 0 {
            out.push(Bound::new(2, Provenance::EvenRss));
        }
    }
    if q >= s as usize {
        let d = (q - s as usize) as u64;
        // Strict inequality, as in the double-counting argument.
        if 2 * d * d < s as u64 - 1 {
            out.push(Bound::new(s as u64 + 2 * d + 2 * d * d, Provenance::Quadratic));
        }
    }
    if s % 2 == 0 && q < 128 {
        let radius = ((s - 1) / 4) as usize;
        let vol = hamming_ball_volume(q, radius) as u128;
        let v = (1u128 << q) / vol;
        out.push(Bound::new(u64::try_from(v).unwrap_or(u64::MAX), Provenance::HammingEven));
    }
    out
}

/// Best known lower bound per `(s, q)`, each backed by a verified family.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateTable {
    entries: BTreeMap<(u32, usize), Bound>,
}

impl CertificateTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `|family|` as a lower bound after checking that the family
    /// is fully covering. Returns whether the table improved.
    pub fn insert_verified(&mut self, family: &Family, provenance: Provenance) -> Result<bool> {
        let s = family
            .modulus()
            .ok_or_else(|| Error::input("certificates must be over Z_s"))?;
        let report = family_is_covering(family, &CoverTarget::full(s)?)?;
        if !report.passed {
            return Err(Error::Verification(format!(
                "certificate family is not covering: {:?}",
                report.failure
            )));
        }
        Ok(self.insert_trusted(s, family.q(), Bound::new(family.len() as u64, provenance)))
    }

    /// For values whose witness was verified elsewhere (e.g. the store).
    pub(crate) fn insert_trusted(&mut self, s: u32, q: usize, bound: Bound) -> bool {
        match self.entries.get(&(s, q)) {
            Some(old) if old.value >= bound.value => false,
            _ => {
                self.entries.insert((s, q), bound);
                true
            }
        }
    }

    pub fn get(&self, s: u32, q: usize) -> Option<Bound> {
        self.entries.get(&(s, q)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u32, usize), Bound)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }
}

/// Sizes of the explicit constructions of length exactly `q`.
fn construction_sizes(s: u32, q: usize) -> Vec<Bound> {
    let mut out = Vec::new();
    if s == 2 && q >= 1 {
        out.push(Bound::new(pow2(q - 1), Provenance::Binary));
    }
    if q == s as usize {
        out.push(Bound::new(smallest_prime_factor(s as u64), Provenance::Cyclic));
    }
    if s == 3 && q >= 2 {
        out.push(Bound::new(binomial(q as u64 - 1, q as u64 / 2), Provenance::Ternary));
    }
    if s == 15 && q == Z15_MATRIX[0].len() {
        out.push(Bound::new(Z15_MATRIX.len() as u64, Provenance::PaperZ15));
    }
    out
}

fn direct_bounds(s: u32, q: usize, table: &CertificateTable) -> Vec<Option<Bound>> {
    let mut direct: Vec<Option<Bound>> = vec![None; q + 1];
    let better = |a: Option<Bound>, b: Bound| match a {
        Some(x) if x.value >= b.value => Some(x),
        _ => Some(b),
    };
    for (len, slot) in direct.iter_mut().enumerate().skip(1) {
        for b in construction_sizes(s, len) {
            *slot = better(*slot, b);
        }
        if let Some(b) = table.get(s, len) {
            *slot = better(*slot, b);
        }
    }
    direct
}

/// `best[k]` for `k <= q`: best bound at length `k` from padding and
/// concatenation of certified or constructed families.
fn best_profile(q: usize, direct: &[Option<Bound>]) -> Vec<Bound> {
    let mut best: Vec<Bound> = vec![Bound::new(1, Provenance::Singleton); q + 1];
    for k in 1..=q {
        let mut cur = best[k - 1];
        if let Some(b) = direct[k] {
            if b.value > cur.value {
                cur = b;
            }
        }
        for a in 1..k {
            let v = best[a].value.saturating_mul(best[k - a].value);
            if v > cur.value {
                cur = Bound::new(v, Provenance::Concat);
            }
        }
        best[k] = cur;
    }
    best
}

/// Best lower bound on `R(s, k)` for every `k <= qmax`.
pub fn lower_bound_profile(s: u32, qmax: usize, table: &CertificateTable) -> Vec<Bound> {
    best_profile(qmax, &direct_bounds(s, qmax, table))
}

/// Lower bounds at `(s, q)`: the singleton floor, each construction and
/// table entry padded up from any length `<= q`, and supermultiplicative
/// combinations over splits `q = q1 + q2`.
pub fn lower_bounds(s: u32, q: usize, table: &CertificateTable) -> Vec<Bound> {
    let direct = direct_bounds(s, q, table);
    let best = best_profile(q, &direct);
    let mut out = vec![Bound::new(1, Provenance::Singleton)];
    if (q as u64) < s as u64 {
        out.push(Bound::new(1, Provenance::TrivialQLtS));
    }
    let mut padded: BTreeMap<Provenance, u64> = BTreeMap::new();
    for b in direct.iter().flatten() {
        let e = padded.entry(b.provenance).or_insert(0);
        *e = (*e).max(b.value);
    }
    out.extend(padded.into_iter().map(|(p, v)| Bound::new(v, p)));
    if best[q].provenance == Provenance::Concat {
        out.push(best[q]);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub s: u32,
    pub q: usize,
    pub lower: Bound,
    pub upper: Bound,
}

impl BoundReport {
    pub fn is_exact(&self) -> bool {
        self.lower.value == self.upper.value
    }

    pub fn gap_ratio(&self) -> f64 {
        self.upper.value as f64 / self.lower.value as f64
    }

    pub const CSV_HEADER: &'static str = "s,q,lower,lower_prov,upper,upper_prov,exact";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.s,
            self.q,
            self.lower.value,
            self.lower.provenance,
            self.upper.value,
            self.upper.provenance,
            self.is_exact()
        )
    }
}

/// Best lower bound against best upper bound, cross-checked.
pub fn bound_report(s: u32, q: usize, table: &CertificateTable) -> Result<BoundReport> {
    if s < 2 || q < 1 {
        return Err(Error::input("bounds need s >= 2 and q >= 1"));
    }
    let lower = lower_bounds(s, q, table)
        .into_iter()
        .fold(Bound::new(1, Provenance::Singleton), |a, b| if b.value > a.value { b } else { a });
    let upper = upper_bounds(s, q)
        .into_iter()
        .fold(Bound::new(u64::MAX, Provenance::Pow2), |a, b| if b.value < a.value { b } else { a });
    if lower.value > upper.value {
        return Err(Error::InconsistentBounds {
            s,
            q,
            lower: lower.value,
            lower_provenance: lower.provenance.to_string(),
            upper: upper.value,
            upper_provenance: upper.provenance.to_string(),
        });
    }
    Ok(BoundReport { s, q, lower, upper })
}

/// Smallest Hamming distance between the mod-2 reductions of two rows, or
/// `None` for fewer than two rows.
pub fn min_parity_distance(f: &Family) -> Option<usize> {
    let rows = f.rows();
    let mut best: Option<usize> = None;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let d = rows[i]
                .iter()
                .zip(&rows[j])
                .filter(|(a, b)| (*a - *b).rem_euclid(2) == 1)
                .count();
            best = Some(best.map_or(d, |b| b.min(d)));
        }
    }
    best
}

/// For covering families over even `s`, every pair of mod-2 reductions
/// differs in at least `s/2` places.
pub fn parity_distance_check(f: &Family) -> Result<bool> {
    let s = match f.alphabet() {
        Alphabet::ModRing(s) if s % 2 == 0 => s as usize,
        a => return Err(Error::input(format!("parity check needs an even modulus, got {a}"))),
    };
    Ok(min_parity_distance(f).map_or(true, |d| d >= s / 2))
}

/// Evaluation matrix of the `2m` polynomials `P_i = ∏(x_j - v_ij)` and
/// `Q_i = ∏(x_j - v_ij - 1)` at the `2m` points `v_i` and `v_i + J`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyCertificate {
    pub prime: u32,
    pub family: ResidueMatrix,
    /// Row `i < m` is `P_i`, row `m + i` is `Q_i`; column `i < m` is `v_i`,
    /// column `m + i` is `v_i + J`.
    pub matrix: Vec<Vec<u32>>,
    pub rank: usize,
    /// Dimension of the space of multilinear polynomials in `q` variables.
    pub dimension: u128,
}

impl PolyCertificate {
    pub fn is_nonsingular(&self) -> bool {
        self.rank == self.matrix.len()
    }
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

/// Rank over `Z_p` by exact elimination.
pub fn rank_mod_p(matrix: &[Vec<u32>], p: u32) -> usize {
    let p = p as u64;
    let mut m: Vec<Vec<u64>> = matrix.iter().map(|r| r.iter().map(|&x| x as u64 % p).collect()).collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = pow_mod(m[rank][c], p - 2, p);
        for x in m[rank].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let factor = m[r][c];
                for k in c..cols {
                    let sub = factor * m[rank][k] % p;
                    m[r][k] = (m[r][k] + p - sub) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Builds and checks the evaluation matrix for a `{0,1}`-covering family.
/// Any structural violation means the reduction mod `p` is not
/// `{0,1}`-covering.
pub fn polynomial_certificate(f: &Family, p: u32) -> Result<PolyCertificate> {
    let s = f
        .modulus()
        .ok_or_else(|| Error::input("polynomial certificate needs a family over Z_s"))?;
    if !is_prime(p as u64) || s % p != 0 {
        return Err(Error::input(format!("{p} is not a prime divisor of {s}")));
    }
    let q = f.q();
    let m = f.len();
    let dimension: u128 = if q < 127 { 1u128 << q } else { u128::MAX };
    if (2 * m) as u128 > dimension {
        return Err(Error::input(format!(
            "{} polynomials cannot fit in a space of dimension 2^{q}",
            2 * m
        )));
    }
    let reduced = reduce_mod(f, p)?;
    let v = &reduced.rows;
    let pp = p as i64;
    let eval = |row: &[i64], shift: i64, point: &[i64], point_shift: i64| -> u32 {
        row.iter()
            .zip(point)
            .fold(1i64, |acc, (&c, &x)| acc * (x + point_shift - c - shift).rem_euclid(pp) % pp) as u32
    };
    let mut matrix = vec![vec![0u32; 2 * m]; 2 * m];
    for i in 0..m {
        for k in 0..m {
            matrix[i][k] = eval(&v[i], 0, &v[k], 0);
            matrix[i][m + k] = eval(&v[i], 0, &v[k], 1);
            matrix[m + i][k] = eval(&v[i], 1, &v[k], 0);
            matrix[m + i][m + k] = eval(&v[i], 1, &v[k], 1);
        }
    }
    for i in 0..m {
        let diag_ok = matrix[m + i][i] != 0
            && matrix[i][i] == 0
            && matrix[i][m + i] != 0
            && matrix[m + i][m + i] == 0;
        if !diag_ok {
            return Err(Error::Verification(format!("structural assertion failed on the diagonal at row {i}")));
        }
        for k in (0..m).filter(|&k| k != i) {
            let cross = [matrix[i][k], matrix[m + i][k], matrix[i][m + k], matrix[m + i][m + k]];
            if cross.iter().any(|&x| x != 0) {
                return Err(Error::Verification(format!(
                    "structural assertion failed: polynomials of row {i} do not vanish at the points of row {k}; \
                     the family is not {{0,1}}-covering over Z_{p}"
                )));
            }
        }
    }
    let rank = rank_mod_p(&matrix, p);
    let cert = PolyCertificate {
        prime: p,
        family: reduced,
        matrix,
        rank,
        dimension,
    };
    if !cert.is_nonsingular() {
        return Err(Error::Verification(format!("evaluation matrix has rank {rank} < {}", 2 * m)));
    }
    Ok(cert)
}

/// Reports over a rectangular grid of `(s, q)`.
pub fn bound_grid(
    s_range: std::ops::RangeInclusive<u32>,
    q_range: std::ops::RangeInclusive<usize>,
    table: &CertificateTable,
) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    for s in s_range {
        for q in q_range.clone() {
            out.push(bound_report(s, q, table)?);
        }
    }
    Ok(out)
}
