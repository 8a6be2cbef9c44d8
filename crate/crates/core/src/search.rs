//! Exact and randomized search for covering families.
//!
//! The exact search fixes row 0 to the zero word (covering depends only on
//! differences), so every further row must itself be a covering word. The
//! remaining problem is a maximum clique in the graph on covering words
//! where `u ~ v` iff both `u - v` and `v - u` cover the target. Cliques are
//! found by bitset branch and bound with greedy-coloring bounds. The
//! branching on the second row is split across workers; the incumbent is
//! shared but ties always resolve to the earliest second row, so the result
//! does not depend on scheduling.
//!
//! With [`Symmetry::Full`] the second row ranges over canonical forms only,
//! and each one gets its own graph keeping just the pairs whose difference
//! has a form no smaller than that row's. A wall-clock limit can be set on
//! top of the node budget; hitting either makes the result incomplete.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::zmod::{family_is_covering, Alphabet, CoverTarget, Family, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    ExactMax,
    DecideAtLeast(u64),
    RandomGreedy,
}

/// Symmetries quotiented when choosing the second row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    /// Only translation (row 0 is the zero word).
    #[default]
    Translation,
    /// Translation, plus column permutations and unit scalings that fix the
    /// target, applied to the second row.
    Full,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub s: u32,
    pub q: usize,
    pub target: CoverTarget,
    pub mode: SearchMode,
    pub seed: u64,
    pub node_budget: u64,
    pub worker_count: usize,
    /// Largest `s^q` the exact modes will enumerate.
    pub enumeration_cap: u64,
    pub symmetry: Symmetry,
    /// A family to try first; if it already meets the goal it is returned
    /// as the witness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint: Option<Family>,
    /// Stop as soon as a closed-form upper bound is met (full target only).
    pub stop_at_upper_bound: bool,
    /// Wall-clock limit in milliseconds, on top of the node budget. Results
    /// that hit it depend on machine speed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit_ms: Option<u64>,
}

impl SearchConfig {
    pub fn new(s: u32, q: usize, mode: SearchMode) -> Result<Self> {
        Ok(SearchConfig {
            s,
            q,
            target: CoverTarget::full(s)?,
            mode,
            seed: 0,
            node_budget: u64::MAX,
            worker_count: 1,
            enumeration_cap: 10_000_000,
            symmetry: Symmetry::default(),
            hint: None,
            stop_at_upper_bound: true,
            time_limit_ms: None,
        })
    }

    pub fn with_target(mut self, target: CoverTarget) -> Self {
        self.target = target;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_budget(mut self, nodes: u64) -> Self {
        self.node_budget = nodes;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.worker_count = workers.max(1);
        self
    }

    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Self {
        self.symmetry = symmetry;
        self
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit_ms = Some(limit.as_millis().try_into().unwrap_or(u64::MAX));
        self
    }

    pub fn with_hint(mut self, hint: Family) -> Self {
        self.hint = Some(hint);
        self
    }

    fn validate(&self) -> Result<()> {
        let alphabet = Alphabet::modring(self.s)?;
        if self.target.alphabet() != alphabet {
            return Err(Error::input("search target must live in Z_s"));
        }
        Ok(())
    }

    fn space_size(&self) -> Option<u64> {
        (self.s as u64).checked_pow(u32::try_from(self.q).ok()?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Claim {
    Maximum(u64),
    AtLeast(u64),
}

impl Claim {
    pub fn value(&self) -> u64 {
        match *self {
            Claim::Maximum(r) | Claim::AtLeast(r) => r,
        }
    }
}

impl std::fmt::Display for Claim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Claim::Maximum(r) => write!(f, "Maximum({r})"),
            Claim::AtLeast(r) => write!(f, "AtLeast({r})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchStatus {
    /// The search space was exhausted, or a proven upper bound was met.
    Complete,
    /// The node budget ran out first.
    Incomplete,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchCertificate {
    pub family: Family,
    pub claim: Claim,
    pub nodes_explored: u64,
    pub status: SearchStatus,
    /// Set when the search stopped because it met this closed-form bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub met_upper_bound: Option<String>,
    pub provenance: SearchConfig,
}

impl SearchCertificate {
    /// Re-verifies the witness. A certificate that fails is a bug in the
    /// search, so construction panics rather than returning it.
    fn sealed(
        family: Family,
        claim: Claim,
        nodes_explored: u64,
        status: SearchStatus,
        met_upper_bound: Option<String>,
        cfg: &SearchConfig,
    ) -> Self {
        let report = family_is_covering(&family, &cfg.target).expect("witness alphabet matches target");
        assert!(report.passed, "search produced a non-covering witness: {:?}", report.failure);
        assert_eq!(family.len() as u64, claim.value(), "claim does not match witness size");
        SearchCertificate {
            family,
            claim,
            nodes_explored,
            status,
            met_upper_bound,
            provenance: cfg.clone(),
        }
    }

    pub fn verify(&self) -> Result<bool> {
        let report = family_is_covering(&self.family, &self.provenance.target)?;
        Ok(report.passed && self.family.len() as u64 == self.claim.value())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision {
    Witness(SearchCertificate),
    Refuted { nodes_explored: u64 },
    Incomplete(SearchCertificate),
}

/// Words of `Z_s^q` as integers, coordinate 0 most significant, so integer
/// order is lexicographic order.
pub(crate) struct WordSpace {
    s: u32,
    q: usize,
    size: u64,
    chunk_digits: usize,
    chunk_size: u64,
    sub_table: Vec<u32>,
}

impl WordSpace {
    pub(crate) fn new(s: u32, q: usize, size: u64) -> Self {
        let mut chunk_digits = 1;
        while chunk_digits < q && (s as u64).pow(2 * (chunk_digits as u32 + 1)) <= 1 << 22 {
            chunk_digits += 1;
        }
        let chunk_digits = chunk_digits.min(q.max(1));
        let chunk_size = (s as u64).pow(chunk_digits as u32);
        let mut sub_table = vec![0u32; (chunk_size * chunk_size) as usize];
        let cd = |mut x: u64| {
            let mut d = vec![0u64; chunk_digits];
            for slot in d.iter_mut().rev() {
                *slot = x % s as u64;
                x /= s as u64;
            }
            d
        };
        for a in 0..chunk_size {
            let da = cd(a);
            for b in 0..chunk_size {
                let db = cd(b);
                let mut c = 0u64;
                for k in 0..chunk_digits {
                    c = c * s as u64 + (da[k] + s as u64 - db[k]) % s as u64;
                }
                sub_table[(a * chunk_size + b) as usize] = c as u32;
            }
        }
        WordSpace {
            s,
            q,
            size,
            chunk_digits,
            chunk_size,
            sub_table,
        }
    }

    pub(crate) fn digits(&self, mut code: u64) -> Vec<Symbol> {
        let mut d = vec![0; self.q];
        for slot in d.iter_mut().rev() {
            *slot = (code % self.s as u64) as Symbol;
            code /= self.s as u64;
        }
        d
    }

    pub(crate) fn encode(&self, digits: &[Symbol]) -> u64 {
        digits.iter().fold(0, |acc, &x| acc * self.s as u64 + x as u64)
    }

    /// Code of the coordinatewise difference `a - b`.
    pub(crate) fn sub(&self, mut a: u64, mut b: u64) -> u64 {
        let mut out = 0u64;
        let mut weight = 1u64;
        let mut left = self.q;
        while left > 0 {
            let (ca, cb) = (a % self.chunk_size, b % self.chunk_size);
            a /= self.chunk_size;
            b /= self.chunk_size;
            let take = left.min(self.chunk_digits);
            let mut d = self.sub_table[(ca * self.chunk_size + cb) as usize] as u64;
            if take < self.chunk_digits {
                d %= (self.s as u64).pow(take as u32);
            }
            out += d * weight;
            weight *= self.chunk_size;
            left -= take;
        }
        out
    }
}

/// `good[x]`: both `x` and `-x` cover the target.
fn good_table(space: &WordSpace, target: &CoverTarget) -> Vec<bool> {
    let s = space.s as usize;
    let mut in_target = vec![false; s];
    for &x in target.symbols() {
        in_target[x as usize] = true;
    }
    let need = target.len();
    let mut seen = vec![0u32; s];
    let mut seen_neg = vec![0u32; s];
    let mut out = vec![false; space.size as usize];
    for (code, slot) in out.iter_mut().enumerate() {
        let stamp = code as u32 + 1;
        let (mut hits, mut hits_neg) = (0, 0);
        let mut x = code as u64;
        for _ in 0..space.q {
            let d = (x % s as u64) as usize;
            x /= s as u64;
            let nd = (s - d) % s;
            if in_target[d] && seen[d] != stamp {
                seen[d] = stamp;
                hits += 1;
            }
            if in_target[nd] && seen_neg[nd] != stamp {
                seen_neg[nd] = stamp;
                hits_neg += 1;
            }
        }
        *slot = hits == need && hits_neg == need;
    }
    out
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    #[inline]
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    #[inline]
    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }
    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }
    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + b)
            })
        })
    }
}

/// Candidate rows (covering words) and their compatibility graph.
struct CandidateGraph {
    adj: Vec<Bits>,
}

const ADJACENCY_BYTES_CAP: u64 = 1 << 30;

fn check_matrix_size(n: usize) -> Result<()> {
    if (n as u64).pow(2) / 8 > ADJACENCY_BYTES_CAP {
        return Err(Error::Resource(format!(
            "{n} candidate rows need a compatibility matrix above {ADJACENCY_BYTES_CAP} bytes"
        )));
    }
    Ok(())
}

impl CandidateGraph {
    /// `u ~ v` iff `u - v` is good. Rows are filled from whichever of the
    /// good and non-good word lists is shorter.
    fn build(space: &WordSpace, good: &[bool], codes: &[u64]) -> Self {
        let n = codes.len();
        let bad: Vec<u64> = (0..space.size).filter(|&c| !good[c as usize]).collect();
        let mut adj = Vec::with_capacity(n);
        if bad.len() < n {
            let mut index = vec![u32::MAX; space.size as usize];
            for (i, &c) in codes.iter().enumerate() {
                index[c as usize] = i as u32;
            }
            let mut full = Bits::new(n);
            for i in 0..n {
                full.set(i);
            }
            for &c in codes {
                let mut row = full.clone();
                for &b in &bad {
                    // x with c - x = b, i.e. x = c - b.
                    let x = index[space.sub(c, b) as usize];
                    if x != u32::MAX {
                        row.clear(x as usize);
                    }
                }
                adj.push(row);
            }
        } else {
            for &c in codes {
                let mut row = Bits::new(n);
                for (j, &x) in codes.iter().enumerate() {
                    if good[space.sub(c, x) as usize] {
                        row.set(j);
                    }
                }
                adj.push(row);
            }
        }
        CandidateGraph { adj }
    }
}

/// Lexicographic greedy clique through the zero word, computed without the
/// adjacency matrix.
fn greedy_clique(space: &WordSpace, good: &[bool]) -> Vec<u64> {
    let bad: Vec<u64> = (0..space.size).filter(|&c| !good[c as usize]).collect();
    let mut alive: Vec<bool> = good.to_vec();
    alive[0] = false;
    let mut chosen = vec![0u64];
    for c in 1..space.size {
        if !alive[c as usize] {
            continue;
        }
        chosen.push(c);
        for &b in &bad {
            alive[space.sub(c, b) as usize] = false;
        }
    }
    chosen
}

/// Lexicographically least image of a word under column permutations and
/// the given unit scalings.
fn canonical_code(space: &WordSpace, code: u64, units: &[u32]) -> u64 {
    let digits = space.digits(code);
    units
        .iter()
        .map(|&u| {
            let mut d: Vec<Symbol> = digits
                .iter()
                .map(|&x| (x * u as Symbol) % space.s as Symbol)
                .collect();
            d.sort_unstable();
            space.encode(&d)
        })
        .min()
        .expect("unit list contains 1")
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Units `u` of `Z_s` with `u * A = A`.
fn target_stabilizing_units(s: u32, target: &CoverTarget) -> Vec<u32> {
    (1..s.max(2))
        .filter(|&u| gcd(u, s) == 1)
        .filter(|&u| {
            target
                .symbols()
                .iter()
                .all(|&x| target.contains((x * u as Symbol).rem_euclid(s as Symbol)))
        })
        .collect()
}

#[derive(Clone)]
struct Incumbent {
    size: usize,
    root: usize,
    clique: Vec<usize>,
}

struct Shared {
    incumbent: Mutex<Incumbent>,
    nodes: AtomicU64,
    budget: u64,
    deadline: Option<Instant>,
    exhausted: AtomicBool,
    /// Stop once the incumbent reaches this size (a proven upper bound or
    /// the decision threshold).
    goal: usize,
}

impl Shared {
    fn snapshot(&self) -> (usize, usize) {
        let inc = self.incumbent.lock().unwrap();
        (inc.size, inc.root)
    }

    /// Prune when the bound cannot beat the incumbent, or can only tie an
    /// incumbent from an earlier (or the same) root.
    fn prunes(&self, bound: usize, root: usize) -> bool {
        let (size, best_root) = self.snapshot();
        if size >= self.goal && best_root <= root {
            return true;
        }
        bound < size || (bound == size && best_root <= root)
    }

    fn offer(&self, root: usize, clique: &[usize]) {
        let mut inc = self.incumbent.lock().unwrap();
        if clique.len() > inc.size || (clique.len() == inc.size && root < inc.root) {
            inc.size = clique.len();
            inc.root = root;
            inc.clique = clique.to_vec();
        }
    }

    fn tick(&self) -> bool {
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if n > self.budget || (n % 256 == 0 && self.out_of_time()) {
            self.exhausted.store(true, Ordering::Relaxed);
            return false;
        }
        !self.exhausted.load(Ordering::Relaxed)
    }

    fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// Greedy sequential coloring; returns vertices in color order together
/// with their color numbers.
fn color_order(adj: &[Bits], p: &Bits) -> (Vec<usize>, Vec<usize>) {
    let mut order = Vec::with_capacity(p.count());
    let mut colors = Vec::with_capacity(order.capacity());
    let mut uncolored = p.clone();
    let mut color = 0;
    while !uncolored.is_empty() {
        color += 1;
        let mut avail = uncolored.clone();
        let mut w = 0;
        while w < avail.0.len() {
            if avail.0[w] == 0 {
                w += 1;
                continue;
            }
            let v = w * 64 + avail.0[w].trailing_zeros() as usize;
            avail.clear(v);
            uncolored.clear(v);
            for (a, b) in avail.0.iter_mut().zip(&adj[v].0).skip(w) {
                *a &= !b;
            }
            order.push(v);
            colors.push(color);
        }
    }
    (order, colors)
}

/// Adjacency over a subset of candidates; `ids` maps local indices back.
struct View<'a> {
    adj: &'a [Bits],
    ids: &'a [usize],
}

/// Extends `clique` (which holds row 0 implicitly) inside `p`. Returns
/// false when the budget ran out.
fn expand(shared: &Shared, view: &View<'_>, root: usize, clique: &mut Vec<usize>, mut p: Bits) -> bool {
    let (order, colors) = color_order(&view.adj, &p);
    for k in (0..order.len()).rev() {
        // +1 accounts for the zero row.
        if shared.prunes(clique.len() + 1 + colors[k], root) {
            return true;
        }
        if !shared.tick() {
            return false;
        }
        let v = order[k];
        clique.push(view.ids[v]);
        let next = p.and(&view.adj[v]);
        if next.is_empty() {
            shared.offer(root, &with_zero(clique));
        } else if !expand(shared, view, root, clique, next) {
            clique.pop();
            return false;
        }
        clique.pop();
        p.clear(v);
    }
    true
}

// Incumbent cliques store candidate indices plus a usize::MAX marker for
// the zero row so that sizes count every row.
fn with_zero(clique: &[usize]) -> Vec<usize> {
    let mut v = Vec::with_capacity(clique.len() + 1);
    v.push(usize::MAX);
    v.extend_from_slice(clique);
    v
}

struct CliqueOutcome {
    rows: Vec<Vec<Symbol>>,
    nodes: u64,
    complete: bool,
    met_goal: bool,
}

fn run_clique_search(cfg: &SearchConfig, goal: usize) -> Result<CliqueOutcome> {
    cfg.validate()?;
    if goal <= 1 {
        return Ok(CliqueOutcome {
            rows: vec![vec![0; cfg.q]],
            nodes: 1,
            complete: true,
            met_goal: true,
        });
    }
    let size = cfg
        .space_size()
        .filter(|&n| n <= cfg.enumeration_cap)
        .ok_or_else(|| {
            Error::Resource(format!(
                "{}^{} words exceed the enumeration cap of {}",
                cfg.s, cfg.q, cfg.enumeration_cap
            ))
        })?;
    let space = WordSpace::new(cfg.s, cfg.q, size);
    let good = good_table(&space, &cfg.target);
    let greedy = greedy_clique(&space, &good);
    if greedy.len() >= goal {
        let mut rows: Vec<Vec<Symbol>> = greedy.iter().map(|&c| space.digits(c)).collect();
        rows.sort();
        return Ok(CliqueOutcome {
            rows,
            nodes: greedy.len() as u64,
            complete: true,
            met_goal: true,
        });
    }
    let codes: Vec<u64> = (1..space.size).filter(|&c| good[c as usize]).collect();
    let n = codes.len();
    check_matrix_size(n)?;
    let units = match cfg.symmetry {
        Symmetry::Translation => vec![],
        Symmetry::Full => target_stabilizing_units(cfg.s, &cfg.target),
    };
    // The translation search shares one compatibility graph; the full
    // symmetry search builds a smaller one per second row instead.
    let graph = if units.is_empty() {
        Some(CandidateGraph::build(&space, &good, &codes))
    } else {
        None
    };

    // `key` orders the second rows. Under the full symmetry it ranks
    // canonical forms, largest first (those rows have the most repeated
    // symbols and the fewest neighbors), and the pair whose difference has
    // the least key can be moved to (zero row, root); every other pair then
    // differs by a word whose key is at least the root's.
    let key: Vec<u64> = if units.is_empty() {
        codes.clone()
    } else {
        codes.iter().map(|&c| !canonical_code(&space, c, &units)).collect()
    };
    let mut roots: Vec<usize> = if units.is_empty() {
        (0..n).collect()
    } else {
        (0..n).filter(|&i| !key[i] == codes[i]).collect()
    };
    roots.sort_by_key(|&i| key[i]);
    // Key of every word by code; 0 (below every key) for non-covering words.
    let kind: Vec<u64> = if units.is_empty() {
        Vec::new()
    } else {
        let mut kind = vec![0; space.size as usize];
        for (i, &c) in codes.iter().enumerate() {
            kind[c as usize] = key[i];
        }
        kind
    };
    let identity: Vec<usize> = if units.is_empty() { (0..n).collect() } else { Vec::new() };

    // The greedy clique is the starting incumbent; any root that ties it
    // replaces it.
    let greedy_ids: Vec<usize> = std::iter::once(usize::MAX)
        .chain(greedy[1..].iter().map(|c| codes.binary_search(c).expect("greedy rows are candidates")))
        .collect();
    let shared = Shared {
        incumbent: Mutex::new(Incumbent {
            size: greedy_ids.len(),
            root: usize::MAX,
            clique: greedy_ids,
        }),
        nodes: AtomicU64::new(0),
        budget: cfg.node_budget,
        deadline: cfg.time_limit_ms.map(|ms| Instant::now() + Duration::from_millis(ms)),
        exhausted: AtomicBool::new(false),
        goal,
    };

    // Roots are identified by their position in `roots` for tie-breaks.
    let search_root = |(rank, &root): (usize, &usize)| {
        if shared.exhausted.load(Ordering::Relaxed) {
            return;
        }
        let floor = key[root];
        let pair_ok = |a: u64, b: u64| kind[space.sub(a, b) as usize] >= floor && kind[space.sub(b, a) as usize] >= floor;
        let members: Vec<usize> = match &graph {
            Some(g) => g.adj[root].ones().filter(|&j| j > root).collect(),
            None => (0..n)
                .filter(|&j| j != root && (key[j] > floor || (key[j] == floor && j > root)))
                .filter(|&j| pair_ok(codes[j], 0) && pair_ok(codes[j], codes[root]))
                .collect(),
        };
        if shared.prunes(2 + members.len(), rank) {
            return;
        }
        if !shared.tick() {
            return;
        }
        let mut clique = vec![root];
        if members.is_empty() {
            shared.offer(rank, &with_zero(&clique));
            return;
        }
        if let Some(g) = &graph {
            let mut p = Bits::new(n);
            for &j in &members {
                p.set(j);
            }
            let view = View {
                adj: &g.adj,
                ids: &identity,
            };
            expand(&shared, &view, rank, &mut clique, p);
            return;
        }
        let m = members.len();
        let mut local = vec![Bits::new(m); m];
        for a in 0..m {
            if shared.out_of_time() {
                shared.exhausted.store(true, Ordering::Relaxed);
                return;
            }
            let ca = codes[members[a]];
            for b in a + 1..m {
                if pair_ok(ca, codes[members[b]]) {
                    local[a].set(b);
                    local[b].set(a);
                }
            }
        }
        let mut p = Bits::new(m);
        for a in 0..m {
            p.set(a);
        }
        let view = View {
            adj: &local,
            ids: &members,
        };
        expand(&shared, &view, rank, &mut clique, p);
    };

    if cfg.worker_count <= 1 {
        roots.iter().enumerate().for_each(search_root);
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.worker_count)
            .build()
            .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
        pool.install(|| roots.par_iter().enumerate().for_each(search_root));
    }

    let inc = shared.incumbent.into_inner().unwrap();
    let nodes = shared.nodes.load(Ordering::Relaxed).min(cfg.node_budget);
    let exhausted = shared.exhausted.load(Ordering::Relaxed);
    let mut rows: Vec<Vec<Symbol>> = inc
        .clique
        .iter()
        .map(|&i| {
            if i == usize::MAX {
                vec![0; cfg.q]
            } else {
                space.digits(codes[i])
            }
        })
        .collect();
    rows.sort();
    let met_goal = inc.size >= goal;
    Ok(CliqueOutcome {
        rows,
        nodes,
        complete: !exhausted || met_goal,
        met_goal,
    })
}

/// The least closed-form upper bound on `R(s, q)` that applies to `target`.
fn ceiling(cfg: &SearchConfig) -> Option<(u64, String)> {
    // Targets are canonical subsets of Z_s, so full length means all of it.
    if !cfg.stop_at_upper_bound || cfg.target.len() != cfg.s as usize {
        return None;
    }
    bounds::upper_bounds(cfg.s, cfg.q)
        .into_iter()
        .min_by_key(|b| b.value)
        .map(|b| (b.value, format!("{:?}", b.provenance)))
}

/// Computes `R(s, q)` for the configured target, with a witness.
pub fn exact_max(cfg: &SearchConfig) -> Result<SearchCertificate> {
    if cfg.mode != SearchMode::ExactMax {
        return Err(Error::input("exact_max needs ExactMax mode"));
    }
    let ceil = ceiling(cfg);
    let goal = ceil
        .as_ref()
        .map_or(usize::MAX, |(v, _)| usize::try_from(*v).unwrap_or(usize::MAX));
    let out = run_clique_search(cfg, goal)?;
    let family = Family::new(Alphabet::ModRing(cfg.s), cfg.q, out.rows)?;
    let r = family.len() as u64;
    let (claim, status) = if out.complete {
        (Claim::Maximum(r), SearchStatus::Complete)
    } else {
        (Claim::AtLeast(r), SearchStatus::Incomplete)
    };
    let met = if out.met_goal { ceil.map(|(_, p)| p) } else { None };
    Ok(SearchCertificate::sealed(family, claim, out.nodes, status, met, cfg))
}

/// Decides whether a covering family of size at least `r` exists.
pub fn decide_at_least(cfg: &SearchConfig, r: u64) -> Result<Decision> {
    if let Some(hint) = &cfg.hint {
        if hint.len() as u64 >= r
            && hint.alphabet() == Alphabet::ModRing(cfg.s)
            && hint.q() == cfg.q
            && family_is_covering(hint, &cfg.target)?.passed
        {
            return Ok(Decision::Witness(SearchCertificate::sealed(
                hint.clone(),
                Claim::AtLeast(hint.len() as u64),
                0,
                SearchStatus::Complete,
                None,
                cfg,
            )));
        }
    }
    if r <= 1 {
        let family = Family::new(Alphabet::ModRing(cfg.s), cfg.q, vec![vec![0; cfg.q]])?;
        return Ok(Decision::Witness(SearchCertificate::sealed(
            family,
            Claim::AtLeast(1),
            0,
            SearchStatus::Complete,
            None,
            cfg,
        )));
    }
    if let Some((ceil, _)) = ceiling(cfg) {
        if ceil < r {
            return Ok(Decision::Refuted { nodes_explored: 0 });
        }
    }
    let goal = usize::try_from(r).unwrap_or(usize::MAX);
    let out = run_clique_search(cfg, goal)?;
    let family = Family::new(Alphabet::ModRing(cfg.s), cfg.q, out.rows)?;
    let size = family.len() as u64;
    if size >= r {
        return Ok(Decision::Witness(SearchCertificate::sealed(
            family,
            Claim::AtLeast(size),
            out.nodes,
            SearchStatus::Complete,
            None,
            cfg,
        )));
    }
    if out.complete {
        Ok(Decision::Refuted {
            nodes_explored: out.nodes,
        })
    } else {
        Ok(Decision::Incomplete(SearchCertificate::sealed(
            family,
            Claim::AtLeast(size),
            out.nodes,
            SearchStatus::Incomplete,
            None,
            cfg,
        )))
    }
}

/// Samples words uniformly and keeps each one that is compatible with all
/// rows kept so far. The number of samples is the node budget (capped at
/// 200 000 when unbounded).
pub fn random_greedy(cfg: &SearchConfig) -> Result<SearchCertificate> {
    cfg.validate()?;
    let samples = if cfg.node_budget == u64::MAX {
        200_000
    } else {
        cfg.node_budget
    };
    let s = cfg.s as Symbol;
    let need = cfg.target.len();
    let mut in_target = vec![usize::MAX; cfg.s as usize];
    for (k, &x) in cfg.target.symbols().iter().enumerate() {
        in_target[x as usize] = k;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows: Vec<Vec<Symbol>> = Vec::new();
    let mut seen = vec![0u64; cfg.s as usize];
    let mut stamp = 0u64;
    let mut covers = |a: &[Symbol], b: &[Symbol]| {
        stamp += 1;
        let mut hits = 0;
        for (&x, &y) in a.iter().zip(b) {
            let d = (x - y).rem_euclid(s) as usize;
            if in_target[d] != usize::MAX && seen[d] != stamp {
                seen[d] = stamp;
                hits += 1;
                if hits == need {
                    return true;
                }
            }
        }
        false
    };
    let mut word = vec![0; cfg.q];
    for _ in 0..samples {
        for x in word.iter_mut() {
            *x = rng.gen_range(0..s);
        }
        let ok = rows
            .iter()
            .all(|r| covers(&word, r) && covers(r, &word));
        if ok && !rows.contains(&word) {
            rows.push(word.clone());
        }
    }
    if rows.is_empty() {
        rows.push(vec![0; cfg.q]);
    }
    let family = Family::new(Alphabet::ModRing(cfg.s), cfg.q, rows)?;
    let r = family.len() as u64;
    Ok(SearchCertificate::sealed(
        family,
        Claim::AtLeast(r),
        samples,
        SearchStatus::Complete,
        None,
        cfg,
    ))
}

/// Dispatches on the configured mode.
pub fn run(cfg: &SearchConfig) -> Result<Decision> {
    match cfg.mode {
        SearchMode::ExactMax => {
            let cert = exact_max(cfg)?;
            Ok(match cert.status {
                SearchStatus::Complete => Decision::Witness(cert),
                SearchStatus::Incomplete => Decision::Incomplete(cert),
            })
        }
        SearchMode::DecideAtLeast(r) => decide_at_least(cfg, r),
        SearchMode::RandomGreedy => random_greedy(cfg).map(Decision::Witness),
    }
}
