//! Star forests in biregular bipartite graphs.
//!
//! [`decompose`] samples a center set from side `A1`, checks that every
//! vertex of `A2` sees between 1 and `4 ln(2 n2)` centers, routes a minimum
//! number of leaves to each center with a max flow, and hangs the leftover
//! `A2` vertices on any adjacent center.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bipartite graph given by the sorted `A2`-neighborhoods of the `A1` side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    n2: usize,
    d1: usize,
    d2: usize,
    adjacency: Vec<Vec<u32>>,
}

impl BipartiteGraph {
    /// Rejects graphs that are not biregular or have an isolated vertex.
    pub fn new(n2: usize, mut adjacency: Vec<Vec<u32>>) -> Result<Self> {
        if adjacency.is_empty() || n2 == 0 {
            return Err(Error::input("both sides of the graph must be non-empty"));
        }
        if n2 > u32::MAX as usize {
            return Err(Error::input("A2 is too large"));
        }
        let mut deg2 = vec![0usize; n2];
        for (a, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::input(format!("A1 vertex {a} lists a neighbor twice")));
            }
            for &b in list.iter() {
                let slot = deg2
                    .get_mut(b as usize)
                    .ok_or_else(|| Error::input(format!("A1 vertex {a} has neighbor {b} >= n2 = {n2}")))?;
                *slot += 1;
            }
        }
        let d1 = adjacency[0].len();
        if let Some(a) = adjacency.iter().position(|l| l.len() != d1) {
            return Err(Error::input(format!(
                "not biregular: A1 vertex {a} has degree {} but vertex 0 has {d1}",
                adjacency[a].len()
            )));
        }
        let d2 = deg2[0];
        if let Some(b) = deg2.iter().position(|&d| d != d2) {
            return Err(Error::input(format!(
                "not biregular: A2 vertex {b} has degree {} but vertex 0 has {d2}",
                deg2[b]
            )));
        }
        if d2 == 0 {
            return Err(Error::input("A2 vertices are isolated"));
        }
        Ok(BipartiteGraph {
            n2,
            d1,
            d2,
            adjacency,
        })
    }

    pub fn n1(&self) -> usize {
        self.adjacency.len()
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn neighbors(&self, a: usize) -> &[u32] {
        &self.adjacency[a]
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency
            .get(a)
            .is_some_and(|l| l.binary_search(&(b as u32)).is_ok())
    }

    /// `ln(2 n2)`.
    pub fn log_term(&self) -> f64 {
        (2.0 * self.n2 as f64).ln()
    }

    /// `max(1, ⌊d1 / (4 ln(2 n2))⌋)`.
    pub fn guaranteed_min_size(&self) -> usize {
        raw_min_size(self.d1, self.log_term()).max(1)
    }

    /// Parses `n1 n2 d1 d2` followed by one neighbor list per `A1` vertex.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| Error::input("empty graph file"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::input(format!("bad header token {t:?}"))))
            .collect::<Result<_>>()?;
        let [n1, n2, d1, d2] = header[..] else {
            return Err(Error::input("header must be `n1 n2 d1 d2`"));
        };
        let adjacency = lines
            .map(|l| {
                l.split_whitespace()
                    .map(|t| t.parse::<u32>().map_err(|_| Error::input(format!("bad neighbor {t:?}"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if adjacency.len() != n1 {
            return Err(Error::input(format!("header says n1 = {n1}, found {} lists", adjacency.len())));
        }
        let g = BipartiteGraph::new(n2, adjacency)?;
        if (g.d1, g.d2) != (d1, d2) {
            return Err(Error::input(format!(
                "header degrees ({d1}, {d2}) disagree with the lists ({}, {})",
                g.d1, g.d2
            )));
        }
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {} {}\n", self.n1(), self.n2, self.d1, self.d2);
        for list in &self.adjacency {
            let mut first = true;
            for b in list {
                if !first {
                    out.push(' ');
                }
                first = false;
                write!(out, "{b}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn raw_min_size(d1: usize, log_term: f64) -> usize {
    (d1 as f64 / (4.0 * log_term)).floor() as usize
}

/// Every `A2` vertex mapped to the `A1` center of its star.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarForest {
    pub assignment: Vec<u32>,
    pub min_size: usize,
    pub attempts: u32,
}

impl StarForest {
    /// Centers in increasing order with their leaves.
    pub fn stars(&self) -> Vec<(u32, Vec<u32>)> {
        let mut by_center: std::collections::BTreeMap<u32, Vec<u32>> = Default::default();
        for (leaf, &c) in self.assignment.iter().enumerate() {
            by_center.entry(c).or_default().push(leaf as u32);
        }
        by_center.into_iter().collect()
    }
}

/// Dinic max flow on unit and small-capacity edges.
struct Flow {
    head: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<u32>,
    next: Vec<usize>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl Flow {
    fn new(n: usize) -> Self {
        Flow {
            head: vec![NONE; n],
            to: Vec::new(),
            cap: Vec::new(),
            next: Vec::new(),
            level: vec![0; n],
            iter: vec![0; n],
        }
    }

    fn add(&mut self, u: usize, v: usize, c: u32) -> usize {
        let id = self.to.len();
        for (a, b, cap) in [(u, v, c), (v, u, 0)] {
            self.to.push(b);
            self.cap.push(cap);
            self.next.push(self.head[a]);
            self.head[a] = self.to.len() - 1;
        }
        id
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let mut e = self.head[u];
            while e != NONE {
                let v = self.to[e];
                if self.cap[e] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
                e = self.next[e];
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, s: usize, t: usize, limit: u32) -> u32 {
        // Iterative augmenting-path search along the level graph.
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let push = path.iter().map(|&e| self.cap[e]).min().unwrap_or(limit).min(limit);
                for &e in &path {
                    self.cap[e] -= push;
                    self.cap[e ^ 1] += push;
                }
                return push;
            }
            let mut advanced = false;
            while self.iter[u] != NONE {
                let e = self.iter[u];
                let v = self.to[e];
                if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                    path.push(e);
                    u = v;
                    advanced = true;
                    break;
                }
                self.iter[u] = self.next[e];
            }
            if !advanced {
                if u == s {
                    return 0;
                }
                self.level[u] = -1;
                let e = path.pop().expect("non-source vertex has an entering edge");
                u = self.to[e ^ 1];
                self.iter[u] = self.next[self.iter[u]];
            }
        }
    }

    fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        let mut total = 0u64;
        while self.bfs(s, t) {
            self.iter.clone_from(&self.head);
            loop {
                let f = self.dfs(s, t, u32::MAX);
                if f == 0 {
                    break;
                }
                total += f as u64;
            }
        }
        total
    }
}

/// Randomized star decomposition; deterministic for a fixed seed.
pub fn decompose(g: &BipartiteGraph, seed: u64, max_retries: u32) -> Result<StarForest> {
    let log_term = g.log_term();
    if (g.d2 as f64) < log_term {
        return Err(Error::input(format!(
            "hypothesis d2 >= ln(2 n2) fails: d2 = {}, ln(2 n2) = {log_term:.3}",
            g.d2
        )));
    }
    let p = (log_term / g.d2 as f64).clamp(f64::MIN_POSITIVE, 1.0);
    let window = 4.0 * log_term;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_violations = 0;
    let attempts = max_retries.max(1);
    for attempt in 1..=attempts {
        let centers: Vec<usize> = (0..g.n1()).filter(|_| rng.gen_bool(p)).collect();
        let mut seen = vec![0u32; g.n2];
        for &a in &centers {
            for &b in g.neighbors(a) {
                seen[b as usize] += 1;
            }
        }
        last_violations = seen
            .iter()
            .filter(|&&c| c == 0 || c as f64 > window)
            .count();
        if last_violations == 0 {
            return assign(g, &centers, attempt);
        }
    }
    Err(Error::RandomnessExhausted {
        attempts,
        violations: last_violations,
    })
}

fn assign(g: &BipartiteGraph, centers: &[usize], attempts: u32) -> Result<StarForest> {
    let k = raw_min_size(g.d1, g.log_term());
    let mut assignment = vec![u32::MAX; g.n2];
    if k >= 1 {
        // source -> center (cap k) -> leaf (cap 1) -> sink (cap 1)
        let (src, sink) = (0, 1);
        let cbase = 2;
        let lbase = cbase + centers.len();
        let mut flow = Flow::new(lbase + g.n2);
        let mut edges = Vec::new();
        for (ci, &a) in centers.iter().enumerate() {
            flow.add(src, cbase + ci, k as u32);
            for &b in g.neighbors(a) {
                edges.push((a as u32, b, flow.add(cbase + ci, lbase + b as usize, 1)));
            }
        }
        for b in 0..g.n2 {
            flow.add(lbase + b, sink, 1);
        }
        let required = centers.len() * k;
        let routed = flow.max_flow(src, sink) as usize;
        if routed < required {
            return Err(Error::HallViolation { routed, required });
        }
        for (a, b, e) in edges {
            if flow.cap[e] == 0 {
                assignment[b as usize] = a;
            }
        }
    }
    let in_centers = {
        let mut mark = vec![false; g.n1()];
        for &a in centers {
            mark[a] = true;
        }
        mark
    };
    // Leftover leaves join the first adjacent center.
    let mut first_center = vec![u32::MAX; g.n2];
    for &a in centers {
        for &b in g.neighbors(a) {
            let slot = &mut first_center[b as usize];
            if *slot == u32::MAX {
                *slot = a as u32;
            }
        }
    }
    for (b, slot) in assignment.iter_mut().enumerate() {
        if *slot == u32::MAX {
            *slot = first_center[b];
        }
        debug_assert!(in_centers[*slot as usize]);
    }
    Ok(StarForest {
        assignment,
        min_size: k.max(1),
        attempts,
    })
}

/// Checks adjacency, full coverage, and that every star has `min_size`
/// leaves. Disjointness holds by construction of the leaf map.
pub fn verify_forest(g: &BipartiteGraph, f: &StarForest, min_size: usize) -> bool {
    if f.assignment.len() != g.n2 {
        return false;
    }
    let mut sizes = vec![0usize; g.n1()];
    for (b, &a) in f.assignment.iter().enumerate() {
        if a as usize >= g.n1() || !g.is_edge(a as usize, b) {
            return false;
        }
        sizes[a as usize] += 1;
    }
    sizes.iter().all(|&s| s == 0 || s >= min_size)
}

/// Random biregular graph: a round-robin biregular graph scrambled by
/// seeded degree-preserving edge swaps.
pub fn random_biregular(n1: usize, d1: usize, n2: usize, seed: u64) -> Result<BipartiteGraph> {
    if n1 == 0 || n2 == 0 || d1 == 0 || (n1 * d1) % n2 != 0 || d1 > n2 {
        return Err(Error::input("need n1*d1 divisible by n2 and d1 <= n2"));
    }
    let mut rows: Vec<Vec<u32>> = (0..n1)
        .map(|a| (0..d1).map(|i| ((a * d1 + i) % n2) as u32).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10 * n1 * d1 {
        let (a, c) = (rng.gen_range(0..n1), rng.gen_range(0..n1));
        let (i, j) = (rng.gen_range(0..d1), rng.gen_range(0..d1));
        let (b, e) = (rows[a][i], rows[c][j]);
        if a != c && !rows[a].contains(&e) && !rows[c].contains(&b) {
            rows[a][i] = e;
            rows[c][j] = b;
        }
    }
    BipartiteGraph::new(n2, rows)
}
