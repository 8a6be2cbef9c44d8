//! Chain amplification: concatenating balanced words along a class-driven
//! Markov chain so that a family covering `G` becomes one covering
//! `G ∪ φ(G)`, where `φ` is a letter map.
//!
//! Two engines share the chain logic.
//!
//! * The *enumerated* engine partitions every balanced word of length `q`
//!   with [`crate::stars::decompose`] on the permutation/word graph. It is
//!   exact but only fits small `q` (all `q!` permutations are listed).
//! * The *lazy* engine works on atomic words, concatenations of atoms that
//!   each use every letter once. A coordinate permutation inside atoms is
//!   then pinned down by a word and its image, and classes are opened only
//!   for words a chain actually visits: each is the unclaimed part of one
//!   translate of the reference family, chosen greedily so that many
//!   successors share a class.

use std::collections::{BTreeMap, HashMap, HashSet};

use rustc_hash::{FxHashMap, FxHashSet};

use serde::{Deserialize, Serialize};

use crate::constructions::is_prime;
use crate::error::{Error, Result};
use crate::stars::{decompose, BipartiteGraph};
use crate::zmod::{family_is_covering, reduce_mod, Alphabet, CoverTarget, Family, Symbol};

pub type Letter = u16;

const DEFAULT_RETRIES: u32 = 10;
/// Upper limit on edges of an explicitly built permutation/word graph.
pub const GRAPH_EDGE_BUDGET: usize = 20_000_000;
/// Upper limit on the word length the atomic engine will build.
pub const MAX_ATOMIC_LENGTH: usize = 200_000;

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// Whether `alpha` generates the units mod the prime `s`.
pub fn is_primitive_root(alpha: u32, s: u32) -> bool {
    if !is_prime(s as u64) || alpha % s == 0 {
        return false;
    }
    let order = s as u64 - 1;
    let mut n = order;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            if pow_mod(alpha as u64, order / p, s as u64) == 1 {
                return false;
            }
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    n <= 1 || pow_mod(alpha as u64, order / n, s as u64) != 1
}

pub fn smallest_primitive_root(s: u32) -> Option<u32> {
    (1..s).find(|&a| is_primitive_root(a, s))
}

pub fn lcm_upto(s: u32) -> u64 {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    (1..=s as u64).fold(1, |acc, k| acc / gcd(acc, k) * k)
}

fn binom(n: u64, k: u64) -> u128 {
    let mut r: u128 = 1;
    for i in 0..k.min(n - k) {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Shape of the balanced words of length `q` over the letters `1..s-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancedWordSpec {
    pub s: u32,
    pub q: usize,
}

impl BalancedWordSpec {
    pub fn new(s: u32, q: usize) -> Result<Self> {
        if s < 3 || !is_prime(s as u64) {
            return Err(Error::input(format!("balanced words need an odd prime s, got {s}")));
        }
        if q == 0 || q % (s as usize - 1) != 0 {
            return Err(Error::input(format!("q = {q} must be a positive multiple of s - 1 = {}", s - 1)));
        }
        Ok(BalancedWordSpec { s, q })
    }

    /// Occurrences of each letter.
    pub fn copies(&self) -> usize {
        self.q / (self.s as usize - 1)
    }

    /// Length of each block of a special word.
    pub fn block_len(&self) -> usize {
        2 * self.copies()
    }

    pub fn balanced_count(&self) -> u128 {
        let c = self.copies();
        factorial(self.q) / factorial(c).pow(self.s - 1)
    }

    pub fn special_count(&self) -> u128 {
        let c = self.copies() as u64;
        binom(2 * c, c).pow((self.s - 1) / 2)
    }
}

/// All arrangements of a letter multiset, in lexicographic order.
fn arrangements(counts: &mut BTreeMap<Letter, usize>, len: usize, prefix: &mut Vec<Letter>, out: &mut Vec<Vec<Letter>>) {
    if prefix.len() == len {
        out.push(prefix.clone());
        return;
    }
    let letters: Vec<Letter> = counts.iter().filter(|(_, &c)| c > 0).map(|(&l, _)| l).collect();
    for l in letters {
        *counts.get_mut(&l).unwrap() -= 1;
        prefix.push(l);
        arrangements(counts, len, prefix, out);
        prefix.pop();
        *counts.get_mut(&l).unwrap() += 1;
    }
}

fn arrangements_of(word: &[Letter]) -> Vec<Vec<Letter>> {
    let mut counts = BTreeMap::new();
    for &l in word {
        *counts.entry(l).or_insert(0) += 1;
    }
    let mut out = Vec::new();
    arrangements(&mut counts, word.len(), &mut Vec::with_capacity(word.len()), &mut out);
    out
}

fn special_words(spec: BalancedWordSpec) -> Vec<Vec<Letter>> {
    let c = spec.copies();
    let blocks: Vec<Vec<Vec<Letter>>> = (0..(spec.s as Letter - 1) / 2)
        .map(|k| {
            let mut block = vec![2 * k + 1; c];
            block.extend(std::iter::repeat(2 * k + 2).take(c));
            arrangements_of(&block)
        })
        .collect();
    let mut words = vec![Vec::new()];
    for block in &blocks {
        words = words
            .iter()
            .flat_map(|w| {
                block.iter().map(move |b| {
                    let mut x = w.clone();
                    x.extend_from_slice(b);
                    x
                })
            })
            .collect();
    }
    words
}

fn to_family(alphabet: Alphabet, rows: &[Vec<Letter>]) -> Result<Family> {
    let q = rows.first().map_or(0, Vec::len);
    Family::new(
        alphabet,
        q,
        rows.iter().map(|r| r.iter().map(|&l| l as Symbol).collect()).collect(),
    )
}

fn from_family(f: &Family) -> Vec<Vec<Letter>> {
    f.rows()
        .iter()
        .map(|r| r.iter().map(|&x| x as Letter).collect())
        .collect()
}

/// Every special balanced word: block `k` holds the letters `2k+1` and
/// `2k+2`, each `q/(s-1)` times.
pub fn special_balanced_words(spec: BalancedWordSpec) -> Result<Family> {
    if spec.special_count() > GRAPH_EDGE_BUDGET as u128 {
        return Err(Error::Resource(format!("{} special words", spec.special_count())));
    }
    to_family(Alphabet::ModRing(spec.s), &special_words(spec))
}

/// `(π w)_i = w_{π(i)}`.
pub fn apply_permutation(pi: &[usize], w: &[Letter]) -> Vec<Letter> {
    pi.iter().map(|&j| w[j]).collect()
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordClass {
    /// Maps every member into the reference family.
    pub permutation: Vec<usize>,
    pub members: Vec<u32>,
}

/// Balanced words split into classes, each carried into the reference
/// family by one coordinate permutation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub words: Vec<Vec<Letter>>,
    pub class_of: Vec<u32>,
    pub classes: Vec<WordClass>,
    pub attempts: u32,
}

impl Partition {
    pub fn min_class_size(&self) -> usize {
        self.classes.iter().map(|c| c.members.len()).min().unwrap_or(0)
    }

    /// Re-applies each class permutation and checks the image lands in
    /// `reference`.
    pub fn replay(&self, reference: &Family) -> bool {
        let targets: HashSet<Vec<Letter>> = from_family(reference).into_iter().collect();
        let mut seen = vec![false; self.words.len()];
        for (ci, class) in self.classes.iter().enumerate() {
            for &m in &class.members {
                let m = m as usize;
                if seen[m] || self.class_of[m] as usize != ci {
                    return false;
                }
                seen[m] = true;
                if !targets.contains(&apply_permutation(&class.permutation, &self.words[m])) {
                    return false;
                }
            }
        }
        seen.iter().all(|&x| x)
    }
}

/// Partition of the balanced words against the special words.
pub fn partition_balanced_words(spec: BalancedWordSpec, seed: u64) -> Result<Partition> {
    partition_against(&special_words(spec), seed, DEFAULT_RETRIES)
}

/// Partition of all rearrangements of `reference[0]` into classes that
/// coordinate permutations carry into `reference`.
fn partition_against(reference: &[Vec<Letter>], seed: u64, retries: u32) -> Result<Partition> {
    let q = reference[0].len();
    let n1 = factorial(q);
    if n1.saturating_mul(reference.len() as u128) > GRAPH_EDGE_BUDGET as u128 {
        return Err(Error::Resource(format!(
            "permutation graph on {q}! permutations with degree {} is beyond the edge budget",
            reference.len()
        )));
    }
    let words = arrangements_of(&reference[0]);
    let index: HashMap<&[Letter], u32> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_slice(), i as u32))
        .collect();
    let mut perms = Vec::with_capacity(n1 as usize);
    let mut adjacency = Vec::with_capacity(n1 as usize);
    let mut pi: Vec<usize> = (0..q).collect();
    let mut w = vec![0; q];
    loop {
        let mut list = Vec::with_capacity(reference.len());
        for y in reference {
            for (i, &j) in pi.iter().enumerate() {
                w[j] = y[i];
            }
            let b = *index
                .get(w.as_slice())
                .ok_or_else(|| Error::input("reference words are not rearrangements of one another"))?;
            list.push(b);
        }
        adjacency.push(list);
        perms.push(pi.clone());
        if !next_permutation(&mut pi) {
            break;
        }
    }
    let graph = BipartiteGraph::new(words.len(), adjacency)?;
    let forest = decompose(&graph, seed, retries)?;
    let mut by_center: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (leaf, &c) in forest.assignment.iter().enumerate() {
        by_center.entry(c).or_default().push(leaf as u32);
    }
    let mut class_of = vec![0u32; words.len()];
    let classes = by_center
        .into_iter()
        .enumerate()
        .map(|(ci, (center, members))| {
            for &m in &members {
                class_of[m as usize] = ci as u32;
            }
            WordClass {
                permutation: perms[center as usize].clone(),
                members,
            }
        })
        .collect();
    Ok(Partition {
        words,
        class_of,
        classes,
        attempts: forest.attempts,
    })
}

fn scale(w: &[Letter], beta: u32, s: u32) -> Vec<Letter> {
    w.iter()
        .map(|&x| ((x as u32 * beta) % s) as Letter)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: u32,
    /// Word length after this iteration.
    pub length: usize,
    /// Number of chains available; saturates at `u128::MAX`.
    pub available: u128,
    pub emitted: usize,
}

/// One round of the enumerated engine. Blocks `x_1 .. x_n` satisfy
/// `x_1 ∈ β S_j` and `x_{i+1} ∈ β S_k` whenever `x_i ∈ S_k`, and `x_n` stays
/// in one class. This is the chain with fixed end blocks `x_0 ∈ S_j` and
/// `x_{n+1} ∈ β S_{k_n}` after those two constant blocks are dropped.
fn enumerated_step(
    s: u32,
    reference: &[Vec<Letter>],
    beta: u32,
    n: usize,
    seed: u64,
    max_words: usize,
) -> Result<(Vec<Vec<Letter>>, u128)> {
    let part = partition_against(reference, seed, DEFAULT_RETRIES)?;
    let index: HashMap<&[Letter], u32> = part
        .words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_slice(), i as u32))
        .collect();
    let nc = part.classes.len();
    // successor[j]: images β·w for w in S_j, sorted, with their classes.
    let successors: Vec<Vec<(Vec<Letter>, u32)>> = part
        .classes
        .iter()
        .map(|c| {
            let mut v: Vec<(Vec<Letter>, u32)> = c
                .members
                .iter()
                .map(|&m| {
                    let x = scale(&part.words[m as usize], beta, s);
                    let k = part.class_of[index[x.as_slice()] as usize];
                    (x, k)
                })
                .collect();
            v.sort();
            v
        })
        .collect();
    let transfer: Vec<Vec<(u32, u128)>> = successors
        .iter()
        .map(|succ| {
            let mut counts: BTreeMap<u32, u128> = BTreeMap::new();
            for (_, k) in succ {
                *counts.entry(*k).or_insert(0) += 1;
            }
            counts.into_iter().collect()
        })
        .collect();
    let step = |v: &[u128]| {
        let mut out = vec![0u128; nc];
        for (c, &x) in v.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for &(k, t) in &transfer[c] {
                out[k as usize] = out[k as usize].saturating_add(x.saturating_mul(t));
            }
        }
        out
    };
    // The chain count depends on the start class j and the class k of x_n.
    let mut best = (0u128, 0usize, 0usize);
    for j in 0..nc {
        let mut v = vec![0u128; nc];
        v[j] = 1;
        for _ in 0..n {
            v = step(&v);
        }
        for (k, &x) in v.iter().enumerate() {
            if x > best.0 {
                best = (x, j, k);
            }
        }
    }
    let (available, j, kn) = best;
    if available == 0 {
        return Err(Error::AnchorTooSparse);
    }
    // reach[r][c]: whether the block in class c can be followed by r more
    // blocks, the last one in class kn.
    let mut reach = vec![vec![false; nc]];
    reach[0][kn] = true;
    for r in 0..n {
        let next: Vec<bool> = (0..nc)
            .map(|c| transfer[c].iter().any(|&(k, _)| reach[r][k as usize]))
            .collect();
        reach.push(next);
    }
    let mut out = Vec::new();
    let mut path: Vec<Vec<Letter>> = Vec::with_capacity(n);
    fn dfs(
        class: u32,
        left: usize,
        successors: &[Vec<(Vec<Letter>, u32)>],
        reach: &[Vec<bool>],
        path: &mut Vec<Vec<Letter>>,
        out: &mut Vec<Vec<Letter>>,
        max_words: usize,
    ) {
        if out.len() >= max_words {
            return;
        }
        if left == 0 {
            out.push(path.concat());
            return;
        }
        for (x, k) in &successors[class as usize] {
            if !reach[left - 1][*k as usize] {
                continue;
            }
            path.push(x.clone());
            dfs(*k, left - 1, successors, reach, path, out, max_words);
            path.pop();
        }
    }
    dfs(j as u32, n, &successors, &reach, &mut path, &mut out, max_words.max(1));
    Ok((out, available))
}

/// Default cap on the successor words examined per chain layer.
pub const DEFAULT_LAYER_WIDTH: usize = 1024;

/// Position map `π` with `π w = y`; both words are atomic over `atom`.
fn transition(w: &[Letter], y: &[Letter], atom: usize) -> Vec<u32> {
    let mut pos = vec![0u32; atom + 1];
    let mut out = vec![0u32; w.len()];
    for (a, (wa, ya)) in w.chunks(atom).zip(y.chunks(atom)).enumerate() {
        for (p, &x) in wa.iter().enumerate() {
            pos[x as usize] = p as u32;
        }
        for (p, &x) in ya.iter().enumerate() {
            out[a * atom + p] = (a * atom) as u32 + pos[x as usize];
        }
    }
    out
}

/// The word `w` with `π w = y`.
fn pull_back(pi: &[u32], y: &[Letter]) -> Vec<Letter> {
    let mut w = vec![0; y.len()];
    for (p, &j) in pi.iter().enumerate() {
        w[j as usize] = y[p];
    }
    w
}

fn is_atomic(w: &[Letter], atom: usize) -> bool {
    w.len() % atom == 0
        && w.chunks(atom).all(|a| {
            let mut seen = vec![false; atom + 1];
            a.iter()
                .all(|&x| x >= 1 && (x as usize) <= atom && !std::mem::replace(&mut seen[x as usize], true))
        })
}

/// Classes of atomic words, built on demand. Each class is a subset of one
/// translate `π⁻¹ Y` of the reference, and classes never overlap.
struct LazyPartition<'a> {
    reference: &'a [Vec<Letter>],
    atom: usize,
    class_of: FxHashMap<Vec<Letter>, u32>,
    members: Vec<Vec<Vec<Letter>>>,
}

impl<'a> LazyPartition<'a> {
    fn new(reference: &'a [Vec<Letter>], atom: usize) -> Self {
        LazyPartition {
            reference,
            atom,
            class_of: FxHashMap::default(),
            members: Vec::new(),
        }
    }

    fn open_class(&mut self, pi: &[u32]) -> u32 {
        let id = self.members.len() as u32;
        let mut members = Vec::new();
        for y in self.reference {
            let w = pull_back(pi, y);
            if !self.class_of.contains_key(&w) {
                self.class_of.insert(w.clone(), id);
                members.push(w);
            }
        }
        members.sort();
        self.members.push(members);
        id
    }

    /// Assigns every unassigned word of `words`, greedily opening the
    /// translates that absorb the most of them.
    fn assign(&mut self, words: &[Vec<Letter>]) {
        let pending: Vec<&Vec<Letter>> = words.iter().filter(|w| !self.class_of.contains_key(*w)).collect();
        if pending.is_empty() {
            return;
        }
        let mut tally: FxHashMap<Vec<u32>, usize> = FxHashMap::default();
        for w in &pending {
            for y in self.reference {
                *tally.entry(transition(w, y, self.atom)).or_insert(0) += 1;
            }
        }
        let mut order: Vec<(usize, Vec<u32>)> = tally.into_iter().map(|(pi, c)| (c, pi)).collect();
        order.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let rank: FxHashMap<&[u32], usize> = order
            .iter()
            .enumerate()
            .map(|(i, (_, pi))| (pi.as_slice(), i))
            .collect();
        for w in pending {
            if self.class_of.contains_key(w) {
                continue;
            }
            let best = self
                .reference
                .iter()
                .map(|y| transition(w, y, self.atom))
                .min_by_key(|pi| rank[pi.as_slice()])
                .expect("reference is non-empty");
            self.open_class(&best);
        }
    }
}

/// One chain round over atomic words. The reference words form the start
/// class; `x_1` is an image of a reference word, `x_{i+1} ∈ φ(S_j)` whenever
/// `x_i ∈ S_j`, and `x_n` stays in the class reached by the most paths.
/// When the width cap truncates the first layer, `rotation` picks which
/// reference images come first.
fn lazy_step(
    reference: &[Vec<Letter>],
    atom: usize,
    phi: &[Letter],
    n: usize,
    width: usize,
    max_words: usize,
    rotation: u64,
) -> Result<(Vec<Vec<Letter>>, u128)> {
    if reference.iter().any(|y| !is_atomic(y, atom)) {
        return Err(Error::input("reference words must be concatenations of letter permutations"));
    }
    let map = |w: &[Letter]| -> Vec<Letter> { w.iter().map(|&x| phi[x as usize]).collect() };
    let mut part = LazyPartition::new(reference, atom);
    let identity: Vec<u32> = (0..reference[0].len() as u32).collect();
    let first = part.open_class(&identity);
    let offset = (rotation % part.members[first as usize].len() as u64) as usize;
    part.members[first as usize].rotate_left(offset);
    // layers[i]: class -> number of block sequences whose last block is in it;
    // layer 0 is the start class itself.
    let mut layers: Vec<BTreeMap<u32, u128>> = vec![BTreeMap::from([(first, 1)])];
    let mut edges: Vec<BTreeMap<u32, Vec<(Vec<Letter>, u32)>>> = Vec::new();
    for _ in 0..n {
        let prev = layers.last().unwrap();
        let mut successors: BTreeMap<u32, Vec<Vec<Letter>>> = BTreeMap::new();
        let mut budget = width.max(1);
        for &k in prev.keys() {
            let images: Vec<Vec<Letter>> = part.members[k as usize]
                .iter()
                .take(budget)
                .map(|w| map(w))
                .collect();
            budget -= images.len();
            successors.insert(k, images);
            if budget == 0 {
                break;
            }
        }
        let all: Vec<Vec<Letter>> = successors.values().flatten().cloned().collect();
        part.assign(&all);
        let mut next: BTreeMap<u32, u128> = BTreeMap::new();
        let mut layer_edges = BTreeMap::new();
        for (k, images) in successors {
            let count = prev[&k];
            let labelled: Vec<(Vec<Letter>, u32)> = images
                .into_iter()
                .map(|x| {
                    let c = part.class_of[&x];
                    let slot = next.entry(c).or_insert(0);
                    *slot = slot.saturating_add(count);
                    (x, c)
                })
                .collect();
            layer_edges.insert(k, labelled);
        }
        layers.push(next);
        edges.push(layer_edges);
    }
    let last = layers.last().unwrap();
    let (&target, &available) = last
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .ok_or(Error::AnchorTooSparse)?;
    // useful[i]: classes in layer i from which the target is reachable.
    let mut useful: Vec<FxHashSet<u32>> = vec![FxHashSet::default(); layers.len()];
    useful[layers.len() - 1].insert(target);
    for i in (0..edges.len()).rev() {
        let ok: FxHashSet<u32> = edges[i]
            .iter()
            .filter(|(_, succ)| succ.iter().any(|(_, c)| useful[i + 1].contains(c)))
            .map(|(&k, _)| k)
            .collect();
        useful[i] = ok;
    }
    let mut out = Vec::new();
    let mut path = Vec::with_capacity(n);
    fn walk(
        depth: usize,
        class: u32,
        edges: &[BTreeMap<u32, Vec<(Vec<Letter>, u32)>>],
        useful: &[FxHashSet<u32>],
        path: &mut Vec<Vec<Letter>>,
        out: &mut Vec<Vec<Letter>>,
        max_words: usize,
    ) {
        if out.len() >= max_words {
            return;
        }
        if depth == edges.len() {
            out.push(path.concat());
            return;
        }
        for (x, c) in &edges[depth][&class] {
            if useful[depth + 1].contains(c) {
                path.push(x.clone());
                walk(depth + 1, *c, edges, useful, path, out, max_words);
                path.pop();
            }
        }
    }
    walk(0, first, &edges, &useful, &mut path, &mut out, max_words.max(1));
    out.sort();
    Ok((out, available))
}

/// Words whose atoms are the letters `1..=atom` with adjacent pairs
/// `(2k-1, 2k)` in either order; at most `cap` of them, in a fixed order.
fn paired_words(atom: usize, cap: usize) -> Vec<Vec<Letter>> {
    let pairs = atom / 2;
    let count = if pairs >= usize::BITS as usize - 1 {
        cap
    } else {
        (1usize << pairs).min(cap)
    };
    (0..count)
        .map(|e| {
            let mut w: Vec<Letter> = (1..=atom as Letter).collect();
            for k in 0..pairs {
                if e >> k & 1 == 1 {
                    w.swap(2 * k, 2 * k + 1);
                }
            }
            w
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainParams {
    pub s: u32,
    /// Primitive root; the smallest one when absent.
    pub alpha: Option<u32>,
    pub q: usize,
    pub n: usize,
    pub iterations: u32,
    /// Seeds the star decomposition when letters repeat within a word, and
    /// otherwise rotates the start class.
    pub seed: u64,
    /// Cap on emitted words, which also caps the next reference family.
    pub max_words: usize,
    /// Cap on successor words examined per chain layer.
    pub layer_width: usize,
}

impl ChainParams {
    pub fn new(s: u32, q: usize, n: usize, iterations: u32) -> Self {
        ChainParams {
            s,
            alpha: None,
            q,
            n,
            iterations,
            seed: 0,
            max_words: 256,
            layer_width: DEFAULT_LAYER_WIDTH,
        }
    }

    /// Desk-scale presets for `s ∈ {3, 5, 7}`.
    pub fn preset(s: u32) -> Option<Self> {
        match s {
            3 => Some(Self::new(3, 4, 3, 1)),
            5 => Some(Self::new(5, 8, 3, 1)),
            7 => Some(ChainParams {
                max_words: 64,
                layer_width: 256,
                ..Self::new(7, 6, 6, 3)
            }),
            _ => None,
        }
    }

    fn alpha(&self) -> Result<u32> {
        match self.alpha {
            Some(a) if is_primitive_root(a, self.s) => Ok(a),
            Some(a) => Err(Error::input(format!("{a} is not a primitive root mod {}", self.s))),
            None => smallest_primitive_root(self.s)
                .ok_or_else(|| Error::input(format!("{} has no primitive root", self.s))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ChainOutcome {
    pub family: Family,
    pub alpha: u32,
    pub target: CoverTarget,
    pub stats: Vec<IterationStats>,
}

/// Runs `iterations` rounds starting from the special balanced words; round
/// `t` uses the multiplier `α^(2^(t-1))`. The result is checked against
/// `{±α^b : b < 2^t}` before it is returned.
pub fn iterate_chain(params: &ChainParams) -> Result<ChainOutcome> {
    let spec = BalancedWordSpec::new(params.s, params.q)?;
    let alpha = params.alpha()?;
    if params.n == 0 || params.iterations == 0 {
        return Err(Error::input("need n >= 1 and at least one iteration"));
    }
    let s = params.s;
    let multiplier = |t: u32| pow_mod(alpha as u64, 1u64 << (t - 1).min(62), s as u64) as u32;
    let mut stats = Vec::new();
    let rows = if spec.copies() == 1 {
        let atom = params.q;
        let mut rows = paired_words(atom, params.max_words);
        for t in 1..=params.iterations {
            if rows[0].len() * params.n > MAX_ATOMIC_LENGTH {
                return Err(Error::Resource(format!("word length would exceed {MAX_ATOMIC_LENGTH}")));
            }
            let beta = multiplier(t);
            let phi: Vec<Letter> = (0..s).map(|x| ((x * beta) % s) as Letter).collect();
            let (next, available) = lazy_step(
                &rows,
                atom,
                &phi,
                params.n,
                params.layer_width,
                params.max_words,
                params.seed,
            )?;
            rows = next;
            stats.push(IterationStats {
                iteration: t,
                length: rows[0].len(),
                available,
                emitted: rows.len(),
            });
        }
        rows
    } else {
        let mut rows = special_words(spec);
        for t in 1..=params.iterations {
            let (next, available) = enumerated_step(
                s,
                &rows,
                multiplier(t),
                params.n,
                params.seed,
                params.max_words,
            )?;
            rows = next;
            stats.push(IterationStats {
                iteration: t,
                length: rows[0].len(),
                available,
                emitted: rows.len(),
            });
        }
        rows
    };
    if let Some(last) = stats.last_mut() {
        last.emitted = rows.len();
    }
    let family = to_family(Alphabet::ModRing(s), &rows)?;
    let target = CoverTarget::signed_powers(s, alpha, params.iterations)?;
    let report = family_is_covering(&family, &target)?;
    if let Some(f) = report.failure {
        return Err(Error::Verification(format!(
            "chain family misses {:?} on rows {} - {}",
            f.missing, f.i, f.j
        )));
    }
    Ok(ChainOutcome {
        family,
        alpha,
        target,
        stats,
    })
}

/// `f_m` on `[1, 2S]` as a table indexed by `x` (entry 0 unused):
/// `f(2j-1) = j`, `f(2j) = m + j` for `j <= m`, then period `2m`.
pub fn composite_bijection(m: u32, two_s: usize) -> Result<Vec<Letter>> {
    let m = m as usize;
    if m < 1 || two_s % (2 * m) != 0 {
        return Err(Error::input(format!("2m = {} must divide 2S = {two_s}", 2 * m)));
    }
    let mut f = vec![0; two_s + 1];
    for x in 1..=two_s {
        let (block, r) = ((x - 1) / (2 * m), (x - 1) % (2 * m) + 1);
        let local = if r % 2 == 1 { (r + 1) / 2 } else { m + r / 2 };
        f[x] = (local + 2 * m * block) as Letter;
    }
    Ok(f)
}

/// Whether `f` permutes `[1, 2S]` and satisfies `f(2k) = f(2k-1) + m`.
pub fn is_pairing_bijection(f: &[Letter], m: u32) -> bool {
    let two_s = f.len() - 1;
    let mut seen = vec![false; two_s + 1];
    for &y in &f[1..] {
        if y == 0 || y as usize > two_s || std::mem::replace(&mut seen[y as usize], true) {
            return false;
        }
    }
    (1..=two_s / 2).all(|k| f[2 * k] as u32 == f[2 * k - 1] as u32 + m)
}

/// First ordered pair `(i, j)` with no coordinate where row `i` holds an
/// even `2k` and row `j` holds `2k - 1`.
pub fn parity_pair_violation(f: &Family) -> Option<(usize, usize)> {
    let rows = f.rows();
    for i in 0..rows.len() {
        for j in 0..rows.len() {
            if i != j
                && !rows[i]
                    .iter()
                    .zip(&rows[j])
                    .any(|(&a, &b)| a % 2 == 0 && b == a - 1)
            {
                return Some((i, j));
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeChainParams {
    pub s: u32,
    pub q: usize,
    pub n: usize,
    /// Rotates the start class, which picks the first word of each round.
    pub seed: u64,
    pub max_words: usize,
    pub layer_width: usize,
}

impl CompositeChainParams {
    /// Shortest legal length `q = 2 lcm(1..s)`, with the longest chain up
    /// to 7 that keeps words within [`MAX_ATOMIC_LENGTH`].
    pub fn preset(s: u32) -> Self {
        let q = 2 * lcm_upto(s.max(1)) as usize;
        let n = (2..=7)
            .rev()
            .find(|&n: &usize| q.saturating_mul(n.saturating_pow(s.saturating_sub(1))) <= MAX_ATOMIC_LENGTH)
            .unwrap_or(2);
        CompositeChainParams {
            s,
            q,
            n,
            seed: 0,
            max_words: 64,
            layer_width: 512,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompositeOutcome {
    /// Over the band `[1, 2S]`.
    pub family: Family,
    /// Reduced mod `s` with one zero column appended.
    pub reduced: Family,
    pub stats: Vec<IterationStats>,
}

/// Integer-alphabet chain: start from words whose blocks pair `2k-1, 2k`,
/// then for `m = 2..=s` chain through `f_m`. The band family is checked
/// against `[-s, s] \ {0}` and the parity-pair property, and the reduction
/// against all of `Z_s`.
pub fn composite_chain(params: &CompositeChainParams) -> Result<CompositeOutcome> {
    let s = params.s;
    if s < 2 {
        return Err(Error::input("composite chain needs s >= 2"));
    }
    let two_s = 2 * lcm_upto(s) as usize;
    if params.q != two_s {
        return Err(Error::input(format!(
            "this engine needs q = 2 lcm(1..s) = {two_s}, got {}",
            params.q
        )));
    }
    if params.n == 0 {
        return Err(Error::input("need n >= 1"));
    }
    if two_s * params.n.pow(s - 1) > MAX_ATOMIC_LENGTH {
        return Err(Error::Resource(format!("word length would exceed {MAX_ATOMIC_LENGTH}")));
    }
    let mut rows = paired_words(two_s, params.max_words);
    let mut stats = Vec::new();
    for m in 2..=s {
        let phi = composite_bijection(m, two_s)?;
        let (next, available) = lazy_step(
            &rows,
            two_s,
            &phi,
            params.n,
            params.layer_width,
            params.max_words,
            params.seed,
        )?;
        rows = next;
        stats.push(IterationStats {
            iteration: m - 1,
            length: rows[0].len(),
            available,
            emitted: rows.len(),
        });
    }
    let family = to_family(Alphabet::IntegerBand(1, two_s as Symbol), &rows)?;
    let report = family_is_covering(&family, &CoverTarget::punctured_band(s)?)?;
    if let Some(f) = report.failure {
        return Err(Error::Verification(format!(
            "band family misses {:?} on rows {} - {}",
            f.missing, f.i, f.j
        )));
    }
    if let Some((i, j)) = parity_pair_violation(&family) {
        return Err(Error::Verification(format!("parity-pair property fails on rows {i} - {j}")));
    }
    let residues = reduce_mod(&family, s)?;
    let q = family.q() + 1;
    let padded: Vec<Vec<Symbol>> = residues
        .rows
        .into_iter()
        .map(|mut r| {
            r.push(0);
            r
        })
        .collect();
    let reduced = Family::new(Alphabet::ModRing(s), q, padded)?;
    let report = family_is_covering(&reduced, &CoverTarget::full(s)?)?;
    if !report.passed {
        return Err(Error::Verification("reduced family is not Z_s-covering".into()));
    }
    Ok(CompositeOutcome {
        family,
        reduced,
        stats,
    })
}
