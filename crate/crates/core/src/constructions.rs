//! Explicit covering-family constructions and the two combinators
//! (concatenation and zero padding).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zmod::{Alphabet, Family, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RecipeName {
    Binary,
    Cyclic,
    Ternary,
    Concatenate,
    PadZeros,
    PaperZ15,
}

impl RecipeName {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "binary" => RecipeName::Binary,
            "cyclic" => RecipeName::Cyclic,
            "ternary" => RecipeName::Ternary,
            "concatenate" | "concat" => RecipeName::Concatenate,
            "pad-zeros" | "padzeros" | "pad_zeros" => RecipeName::PadZeros,
            "z15" | "paper-z15" | "paperz15" => RecipeName::PaperZ15,
            other => return Err(Error::input(format!("unknown recipe {other:?}"))),
        })
    }
}

/// Which construction produced a family, and with what parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionRecipe {
    pub name: RecipeName,
    pub params: BTreeMap<String, i64>,
}

impl ConstructionRecipe {
    fn new(name: RecipeName, params: &[(&str, i64)]) -> Self {
        ConstructionRecipe {
            name,
            params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn param(&self, key: &str) -> Result<i64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::input(format!("recipe {:?} needs parameter {key}", self.name)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constructed {
    pub recipe: ConstructionRecipe,
    pub family: Family,
}

/// Caps the number of emitted cells (rows times entries).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeCap {
    pub max_cells: u64,
}

impl Default for SizeCap {
    fn default() -> Self {
        SizeCap { max_cells: 1 << 24 }
    }
}

impl SizeCap {
    fn check(&self, rows: u64, q: usize) -> Result<()> {
        let cells = rows.saturating_mul(q.max(1) as u64);
        if cells > self.max_cells {
            return Err(Error::Resource(format!(
                "{rows} rows of length {q} exceed the cap of {} cells",
                self.max_cells
            )));
        }
        Ok(())
    }
}

pub fn smallest_prime_factor(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return d;
        }
        d += 1;
    }
    n
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && smallest_prime_factor(n) == n
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// All binary words of length `q` whose first coordinate is 1.
pub fn binary_family(q: usize) -> Result<Constructed> {
    binary_family_capped(q, SizeCap::default())
}

pub fn binary_family_capped(q: usize, cap: SizeCap) -> Result<Constructed> {
    if q == 0 {
        return Err(Error::input("binary family needs q >= 1"));
    }
    if q > 62 {
        return Err(Error::Resource(format!("q = {q} is far beyond any size cap")));
    }
    let count = 1u64 << (q - 1);
    cap.check(count, q)?;
    let rows = (0..count)
        .map(|tail| {
            let mut row = Vec::with_capacity(q);
            row.push(1);
            row.extend((1..q).map(|c| ((tail >> (q - 1 - c)) & 1) as Symbol));
            row
        })
        .collect();
    Ok(Constructed {
        recipe: ConstructionRecipe::new(RecipeName::Binary, &[("q", q as i64)]),
        family: Family::new(Alphabet::ModRing(2), q, rows)?,
    })
}

/// Rows `(0, a, 2a, ..., (s-1)a)` for `0 <= a < p`, `p` the least prime
/// factor of `s`.
pub fn cyclic_family(s: u32) -> Result<Constructed> {
    let alphabet = Alphabet::modring(s)?;
    let p = smallest_prime_factor(s as u64) as Symbol;
    let s = s as Symbol;
    let rows = (0..p)
        .map(|a| (0..s).map(|k| (a * k) % s).collect())
        .collect();
    Ok(Constructed {
        recipe: ConstructionRecipe::new(RecipeName::Cyclic, &[("s", s)]),
        family: Family::new(alphabet, s as usize, rows)?,
    })
}

/// Words over `{0,1} ⊂ Z_3` with first coordinate 0 and exactly `⌊q/2⌋` ones.
pub fn ternary_family(q: usize) -> Result<Constructed> {
    ternary_family_capped(q, SizeCap::default())
}

pub fn ternary_family_capped(q: usize, cap: SizeCap) -> Result<Constructed> {
    if q < 2 {
        return Err(Error::input("ternary family needs q >= 2"));
    }
    let ones = q / 2;
    let count = binomial(q as u64 - 1, ones as u64);
    cap.check(count, q)?;
    let mut rows = Vec::with_capacity(count as usize);
    let mut row = vec![0; q];
    place_ones(&mut row, 1, ones, &mut rows);
    debug_assert_eq!(rows.len() as u64, count);
    Ok(Constructed {
        recipe: ConstructionRecipe::new(RecipeName::Ternary, &[("q", q as i64)]),
        family: Family::new(Alphabet::ModRing(3), q, rows)?,
    })
}

fn place_ones(row: &mut [Symbol], from: usize, left: usize, out: &mut Vec<Vec<Symbol>>) {
    if left == 0 {
        out.push(row.to_vec());
        return;
    }
    for pos in from..=row.len() - left {
        row[pos] = 1;
        place_ones(row, pos + 1, left - 1, out);
        row[pos] = 0;
    }
}

/// All `|f1| * |f2|` concatenations `v_i ‖ w_j`, `i` major.
pub fn concatenate(f1: &Family, f2: &Family) -> Result<Constructed> {
    concatenate_capped(f1, f2, SizeCap::default())
}

pub fn concatenate_capped(f1: &Family, f2: &Family, cap: SizeCap) -> Result<Constructed> {
    if f1.alphabet() != f2.alphabet() || f1.modulus().is_none() {
        return Err(Error::input(format!(
            "concatenation needs one shared modular alphabet, got {} and {}",
            f1.alphabet(),
            f2.alphabet()
        )));
    }
    let q = f1.q() + f2.q();
    cap.check(f1.len() as u64 * f2.len() as u64, q)?;
    let mut rows = Vec::with_capacity(f1.len() * f2.len());
    for v in f1.rows() {
        for w in f2.rows() {
            let mut row = Vec::with_capacity(q);
            row.extend_from_slice(v);
            row.extend_from_slice(w);
            rows.push(row);
        }
    }
    Ok(Constructed {
        recipe: ConstructionRecipe::new(
            RecipeName::Concatenate,
            &[
                ("q1", f1.q() as i64),
                ("q2", f2.q() as i64),
                ("r1", f1.len() as i64),
                ("r2", f2.len() as i64),
            ],
        ),
        family: Family::new(f1.alphabet(), q, rows)?,
    })
}

/// Appends `extra` zero columns.
pub fn pad_zeros(f: &Family, extra: usize) -> Result<Constructed> {
    let q = f.q() + extra;
    let rows = f
        .rows()
        .iter()
        .map(|r| {
            let mut row = r.clone();
            row.resize(q, 0);
            row
        })
        .collect();
    let alphabet = match f.alphabet() {
        // 0 must be a legal symbol for the padding column.
        Alphabet::IntegerBand(lo, hi) => Alphabet::IntegerBand(lo.min(0), hi.max(0)),
        a => a,
    };
    Ok(Constructed {
        recipe: ConstructionRecipe::new(
            RecipeName::PadZeros,
            &[("q", f.q() as i64), ("extra", extra as i64)],
        ),
        family: Family::new(alphabet, q, rows)?,
    })
}

pub const Z15_MATRIX: [[Symbol; 15]; 4] = [
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14],
    [0, 2, 1, 5, 7, 9, 12, 14, 13, 3, 6, 4, 10, 8, 11],
    [0, 3, 9, 1, 10, 14, 7, 11, 4, 12, 5, 8, 2, 6, 13],
];

/// The published four-row covering family over `Z_15^15`.
pub fn paper_z15_matrix() -> Constructed {
    let rows = Z15_MATRIX.iter().map(|r| r.to_vec()).collect();
    Constructed {
        recipe: ConstructionRecipe::new(RecipeName::PaperZ15, &[]),
        family: Family::new(Alphabet::ModRing(15), 15, rows).expect("fixture is well formed"),
    }
}

/// Runs a recipe whose parameters are all integers. Combinators read
/// their operand families from elsewhere and are rejected here.
pub fn build(recipe: &ConstructionRecipe) -> Result<Constructed> {
    let usize_param = |k: &str| -> Result<usize> {
        let v = recipe.param(k)?;
        usize::try_from(v).map_err(|_| Error::input(format!("parameter {k} must be non-negative")))
    };
    match recipe.name {
        RecipeName::Binary => binary_family(usize_param("q")?),
        RecipeName::Ternary => ternary_family(usize_param("q")?),
        RecipeName::Cyclic => {
            let s = u32::try_from(recipe.param("s")?).map_err(|_| Error::input("s out of range"))?;
            cyclic_family(s)
        }
        RecipeName::PaperZ15 => Ok(paper_z15_matrix()),
        RecipeName::Concatenate | RecipeName::PadZeros => Err(Error::input(
            "combinator recipes need operand families, not only integer parameters",
        )),
    }
}
