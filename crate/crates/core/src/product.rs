//! Product representations of clique factors `K_s(r)` and the bounds on
//! their product dimension `Q(s, r)`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::bounds::{lower_bound_profile, Bound, CertificateTable};
use crate::error::{Error, Result};
use crate::zmod::{family_is_covering, CoverTarget, Family};

/// `r` vertex-disjoint copies of `K_s`; vertex `(i, j)` has label `j` in
/// part `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueFactor {
    pub s: u32,
    pub r: usize,
}

impl CliqueFactor {
    pub fn new(s: u32, r: usize) -> Result<Self> {
        if s < 2 || r < 1 {
            return Err(Error::input(format!("K_s(r) needs s >= 2 and r >= 1, got s={s}, r={r}")));
        }
        Ok(CliqueFactor { s, r })
    }

    pub fn vertex_count(&self) -> usize {
        self.s as usize * self.r
    }

    pub fn adjacent(&self, a: (usize, u32), b: (usize, u32)) -> bool {
        a.0 == b.0 && a.1 != b.1
    }
}

/// One color tuple per vertex; coordinate `c` is the `c`-th coloring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductRepresentation {
    pub graph: CliqueFactor,
    pub q: usize,
    /// Indexed by `i * s + j`.
    pub colors: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct RepresentationJson {
    s: u32,
    r: usize,
    q: usize,
    colors: BTreeMap<String, Vec<u32>>,
}

impl ProductRepresentation {
    pub fn color(&self, part: usize, label: u32) -> &[u32] {
        &self.colors[part * self.graph.s as usize + label as usize]
    }

    pub fn to_json(&self) -> String {
        let s = self.graph.s as usize;
        let colors = self
            .colors
            .iter()
            .enumerate()
            .map(|(v, c)| (format!("{},{}", v / s, v % s), c.clone()))
            .collect();
        let json = RepresentationJson {
            s: self.graph.s,
            r: self.graph.r,
            q: self.q,
            colors,
        };
        serde_json::to_string(&json).expect("representation serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: RepresentationJson = serde_json::from_str(text)?;
        let graph = CliqueFactor::new(json.s, json.r)?;
        let mut colors = vec![None; graph.vertex_count()];
        for (key, tuple) in json.colors {
            let (i, j) = key
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<u32>().ok()?)))
                .ok_or_else(|| Error::input(format!("bad vertex key {key:?}")))?;
            if i >= graph.r || j >= graph.s {
                return Err(Error::input(format!("vertex ({i},{j}) is outside K_{}({})", graph.s, graph.r)));
            }
            colors[i * graph.s as usize + j as usize] = Some(tuple);
        }
        let colors = colors
            .into_iter()
            .enumerate()
            .map(|(v, c)| c.ok_or_else(|| Error::input(format!("vertex {v} has no color tuple"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductRepresentation {
            graph,
            q: json.q,
            colors,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// Adjacent vertices share a color in this coordinate.
    AdjacentShareColor { coordinate: usize },
    /// Non-adjacent vertices never share a color.
    NonAdjacentNeverAgree,
    /// A tuple has the wrong length.
    WrongLength,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub passed: bool,
    pub violation: Option<((usize, u32), (usize, u32), ViolationKind)>,
}

/// Checks both directions over all vertex pairs.
pub fn verify_representation(rep: &ProductRepresentation) -> RepresentationReport {
    let g = rep.graph;
    let s = g.s as usize;
    let vertex = |v: usize| (v / s, (v % s) as u32);
    for (v, c) in rep.colors.iter().enumerate() {
        if c.len() != rep.q {
            return RepresentationReport {
                passed: false,
                violation: Some((vertex(v), vertex(v), ViolationKind::WrongLength)),
            };
        }
    }
    for a in 0..rep.colors.len() {
        for b in a + 1..rep.colors.len() {
            let (va, vb) = (vertex(a), vertex(b));
            let shared = rep.colors[a]
                .iter()
                .zip(&rep.colors[b])
                .position(|(x, y)| x == y);
            let kind = match (g.adjacent(va, vb), shared) {
                (true, Some(coordinate)) => ViolationKind::AdjacentShareColor { coordinate },
                (false, None) => ViolationKind::NonAdjacentNeverAgree,
                _ => continue,
            };
            return RepresentationReport {
                passed: false,
                violation: Some((va, vb, kind)),
            };
        }
    }
    RepresentationReport {
        passed: true,
        violation: None,
    }
}

/// Turns the first `r` rows of a covering family into `q` colorings of
/// `K_s(r)`: coloring `c` gives vertex `(i, j)` the color `j - F[i][c]`.
pub fn family_to_representation(f: &Family, r: usize) -> Result<ProductRepresentation> {
    let s = f
        .modulus()
        .ok_or_else(|| Error::input("product representations need a family over Z_s"))?;
    let report = family_is_covering(f, &CoverTarget::full(s)?)?;
    if let Some(fail) = report.failure {
        return Err(Error::Verification(format!(
            "family is not covering: rows {} - {} miss {:?}",
            fail.i, fail.j, fail.missing
        )));
    }
    if r > f.len() {
        return Err(Error::input(format!("r = {r} exceeds the family size {}", f.len())));
    }
    let graph = CliqueFactor::new(s, r)?;
    let mut colors = Vec::with_capacity(graph.vertex_count());
    for row in &f.rows()[..r] {
        for j in 0..s as i64 {
            colors.push(row.iter().map(|&a| (j - a).rem_euclid(s as i64) as u32).collect());
        }
    }
    let rep = ProductRepresentation { graph, q: f.q(), colors };
    let check = verify_representation(&rep);
    if !check.passed {
        return Err(Error::Verification(format!(
            "transform produced an invalid representation: {:?}",
            check.violation
        )));
    }
    Ok(rep)
}

fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

/// `max(s, ⌈log2(2r)⌉)` for `r >= 2`; a single clique needs one coloring.
pub fn q_lower_bound(s: u32, r: u64) -> u64 {
    if r <= 1 {
        return 1;
    }
    (s as u64).max(ceil_log2(2 * r))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QStep {
    /// A certified `R(s, q) >= r` gives `Q(s, r) <= q`.
    Direct { r: u64, q: usize, lower: Bound },
    /// `Q(s, r1 r2) <= Q(s, r1) + Q(s, r2)`.
    Split { r: u64, r1: u64, r2: u64, q: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QUpperBound {
    pub value: usize,
    pub trace: Vec<QStep>,
}

const MAX_SPLIT_DEPTH: usize = 20;

struct QUpperSolver {
    profile: Vec<Bound>,
    memo: HashMap<u64, Option<(usize, QStep)>>,
}

impl QUpperSolver {
    fn direct(&self, r: u64) -> Option<(usize, Bound)> {
        self.profile
            .iter()
            .enumerate()
            .skip(1)
            .find(|(_, b)| b.value >= r)
            .map(|(q, b)| (q, *b))
    }

    fn solve(&mut self, r: u64, depth: usize) -> Option<usize> {
        if let Some(hit) = self.memo.get(&r) {
            return hit.as_ref().map(|(q, _)| *q);
        }
        let mut best = self
            .direct(r)
            .map(|(q, lower)| (q, QStep::Direct { r, q, lower }));
        if depth < MAX_SPLIT_DEPTH {
            let mut r1 = 2;
            while r1 * r1 <= r {
                let r2 = r.div_ceil(r1);
                if let (Some(a), Some(b)) = (self.solve(r1, depth + 1), self.solve(r2, depth + 1)) {
                    if best.as_ref().map_or(true, |(q, _)| a + b < *q) {
                        best = Some((a + b, QStep::Split { r, r1, r2, q: a + b }));
                    }
                }
                r1 += 1;
            }
        }
        let value = best.as_ref().map(|(q, _)| *q);
        self.memo.insert(r, best);
        value
    }

    fn trace(&self, r: u64, out: &mut Vec<QStep>) {
        if let Some(Some((_, step))) = self.memo.get(&r) {
            out.push(step.clone());
            if let QStep::Split { r1, r2, .. } = *step {
                self.trace(r1, out);
                self.trace(r2, out);
            }
        }
    }
}

/// Least `q` obtainable from certified lower bounds on `R(s, ·)` directly or
/// through products `r <= r1 * r2`.
pub fn q_upper_bound(s: u32, r: u64, table: &CertificateTable) -> Result<QUpperBound> {
    if s < 2 || r < 1 {
        return Err(Error::input("q_upper_bound needs s >= 2 and r >= 1"));
    }
    // Concatenating cyclic families reaches p^k rows at length k*s, so this
    // length always suffices.
    let qmax = (s as usize) * (ceil_log2(r).max(1) as usize + 1);
    let mut solver = QUpperSolver {
        profile: lower_bound_profile(s, qmax, table),
        memo: HashMap::new(),
    };
    let value = solver
        .solve(r, 0)
        .ok_or_else(|| Error::Resource(format!("no certified length up to {qmax} reaches r = {r}")))?;
    let mut trace = Vec::new();
    solver.trace(r, &mut trace);
    Ok(QUpperBound { value, trace })
}
