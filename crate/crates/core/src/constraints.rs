//! Must-link / cannot-link constraints.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::corpus::IndexedLabels;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintKind {
    #[serde(rename = "ML")]
    MustLink,
    #[serde(rename = "CL")]
    CannotLink,
}

impl ConstraintKind {
    pub fn tag(self) -> &'static str {
        match self {
            ConstraintKind::MustLink => "ML",
            ConstraintKind::CannotLink => "CL",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ML" | "ml" | "must" | "must_link" => Ok(ConstraintKind::MustLink),
            "CL" | "cl" | "cannot" | "cannot_link" => Ok(ConstraintKind::CannotLink),
            other => Err(Error::InvalidParameter(format!("unknown constraint kind `{other}`"))),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ConstraintKind::MustLink => ConstraintKind::CannotLink,
            ConstraintKind::CannotLink => ConstraintKind::MustLink,
        }
    }
}

/// A pairwise constraint stored in canonical order `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub a: usize,
    pub b: usize,
}

impl Constraint {
    pub fn new(kind: ConstraintKind, a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::SelfConstraint(a));
        }
        Ok(Self { kind, a: a.min(b), b: a.max(b) })
    }

    pub fn must(a: usize, b: usize) -> Result<Self> {
        Self::new(ConstraintKind::MustLink, a, b)
    }

    pub fn cannot(a: usize, b: usize) -> Result<Self> {
        Self::new(ConstraintKind::CannotLink, a, b)
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    /// Whether `assignment` violates this constraint.
    pub fn violated_by(&self, assignment: &[usize]) -> bool {
        let same = assignment[self.a] == assignment[self.b];
        match self.kind {
            ConstraintKind::MustLink => !same,
            ConstraintKind::CannotLink => same,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.kind.tag(), self.a, self.b)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    must: BTreeSet<(usize, usize)>,
    cannot: BTreeSet<(usize, usize)>,
    closed: bool,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_constraints(items: impl IntoIterator<Item = Constraint>) -> Self {
        let mut s = Self::new();
        for c in items {
            s.insert(c);
        }
        s
    }

    /// Adds a constraint; returns `false` if it was already present.
    pub fn insert(&mut self, c: Constraint) -> bool {
        let fresh = match c.kind {
            ConstraintKind::MustLink => self.must.insert(c.pair()),
            ConstraintKind::CannotLink => self.cannot.insert(c.pair()),
        };
        if fresh {
            self.closed = false;
        }
        fresh
    }

    pub fn remove(&mut self, c: &Constraint) -> bool {
        let removed = match c.kind {
            ConstraintKind::MustLink => self.must.remove(&c.pair()),
            ConstraintKind::CannotLink => self.cannot.remove(&c.pair()),
        };
        if removed {
            self.closed = false;
        }
        removed
    }

    pub fn contains(&self, c: &Constraint) -> bool {
        match c.kind {
            ConstraintKind::MustLink => self.must.contains(&c.pair()),
            ConstraintKind::CannotLink => self.cannot.contains(&c.pair()),
        }
    }

    /// Whether the unordered pair carries a constraint of either kind.
    pub fn has_pair(&self, a: usize, b: usize) -> bool {
        let p = (a.min(b), a.max(b));
        self.must.contains(&p) || self.cannot.contains(&p)
    }

    pub fn len(&self) -> usize {
        self.must.len() + self.cannot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn must(&self) -> impl Iterator<Item = Constraint> + '_ {
        self.must.iter().map(|&(a, b)| Constraint { kind: ConstraintKind::MustLink, a, b })
    }

    pub fn cannot(&self) -> impl Iterator<Item = Constraint> + '_ {
        self.cannot.iter().map(|&(a, b)| Constraint { kind: ConstraintKind::CannotLink, a, b })
    }

    pub fn n_must(&self) -> usize {
        self.must.len()
    }

    pub fn n_cannot(&self) -> usize {
        self.cannot.len()
    }

    /// All constraints: must-links first, each group in pair order.
    pub fn iter(&self) -> impl Iterator<Item = Constraint> + '_ {
        self.must().chain(self.cannot())
    }

    /// Largest document index referenced, if any.
    pub fn max_doc(&self) -> Option<usize> {
        self.must.iter().chain(&self.cannot).map(|p| p.1).max()
    }

    /// Every relation flipped: must-links become cannot-links and back.
    pub fn inverted(&self) -> Self {
        Self { must: self.cannot.clone(), cannot: self.must.clone(), closed: false }
    }

    /// Per-document must-link and cannot-link neighbor lists.
    pub fn adjacency(&self, n: usize) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let mut ml = vec![Vec::new(); n];
        let mut cl = vec![Vec::new(); n];
        for &(a, b) in &self.must {
            ml[a].push(b);
            ml[b].push(a);
        }
        for &(a, b) in &self.cannot {
            cl[a].push(b);
            cl[b].push(a);
        }
        (ml, cl)
    }

    /// Line-delimited `ML|CL<TAB>doc_id_a<TAB>doc_id_b` records.
    pub fn write<W: Write>(&self, mut out: W, doc_ids: &[String]) -> Result<()> {
        let mut buf = String::new();
        for c in self.iter() {
            let id = |i: usize| doc_ids.get(i).cloned().ok_or_else(|| Error::UnknownDocument(i.to_string()));
            buf.push_str(&format!("{}\t{}\t{}\n", c.kind.tag(), id(c.a)?, id(c.b)?));
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn read<R: BufRead>(input: R, doc_index: impl Fn(&str) -> Option<usize>) -> Result<Self> {
        let mut set = Self::new();
        for (ln, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse { line: ln + 1, message: "expected `ML|CL doc_a doc_b`".into() });
            }
            let kind = ConstraintKind::parse(f[0]).map_err(|e| Error::Parse { line: ln + 1, message: e.to_string() })?;
            let a = doc_index(f[1]).ok_or_else(|| Error::UnknownDocument(f[1].to_string()))?;
            let b = doc_index(f[2]).ok_or_else(|| Error::UnknownDocument(f[2].to_string()))?;
            set.insert(Constraint::new(kind, a, b)?);
        }
        Ok(set)
    }
}

/// How successive constraint counts relate when sweeping a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSampling {
    /// Independent draw for every count.
    #[default]
    #[serde(alias = "fresh_per_trial")]
    Fresh,
    /// One random ordering of all pairs; a count takes its prefix, so
    /// smaller sets are nested in larger ones.
    Nested,
}

/// Draws `n_pairs` distinct unordered pairs of `docs` uniformly without
/// replacement.
pub fn sample_pairs(docs: &[usize], n_pairs: usize, rng_seed: u64, mode: PairSampling) -> Result<Vec<(usize, usize)>> {
    let l = docs.len();
    let available = l * l.saturating_sub(1) / 2;
    if n_pairs > available {
        return Err(Error::TooManyPairs { requested: n_pairs, available });
    }
    let mut rng = seed::rng(rng_seed);
    let picks: Vec<usize> = match mode {
        PairSampling::Fresh => index::sample(&mut rng, available, n_pairs).into_vec(),
        PairSampling::Nested => {
            let mut all: Vec<usize> = (0..available).collect();
            all.shuffle(&mut rng);
            all.truncate(n_pairs);
            all
        }
    };
    Ok(picks
        .into_iter()
        .map(|p| {
            let (i, j) = decode_pair(p, l);
            let (a, b) = (docs[i], docs[j]);
            (a.min(b), a.max(b))
        })
        .collect())
}

/// Position `p` in the row-major enumeration (0,1), (0,2), …, (1,2), …
fn decode_pair(mut p: usize, l: usize) -> (usize, usize) {
    let mut i = 0;
    while p >= l - 1 - i {
        p -= l - 1 - i;
        i += 1;
    }
    (i, i + 1 + p)
}

/// Same label → must-link, different labels → cannot-link.
pub fn constraints_for_pairs(labels: &IndexedLabels, pairs: &[(usize, usize)]) -> Result<ConstraintSet> {
    let mut set = ConstraintSet::new();
    for &(a, b) in pairs {
        let ca = labels.class_of(a).ok_or_else(|| Error::UnknownDocument(a.to_string()))?;
        let cb = labels.class_of(b).ok_or_else(|| Error::UnknownDocument(b.to_string()))?;
        let kind = if ca == cb { ConstraintKind::MustLink } else { ConstraintKind::CannotLink };
        set.insert(Constraint::new(kind, a, b)?);
    }
    Ok(set)
}

pub fn constraints_from_labels(labels: &IndexedLabels, n_pairs: usize, rng_seed: u64) -> Result<ConstraintSet> {
    let pairs = sample_pairs(&labels.labeled_docs(), n_pairs, rng_seed, PairSampling::Fresh)?;
    constraints_for_pairs(labels, &pairs)
}

struct UnionFind {
    parent: BTreeMap<usize, usize>,
}

impl UnionFind {
    fn new() -> Self {
        Self { parent: BTreeMap::new() }
    }

    fn find(&mut self, x: usize) -> usize {
        let p = *self.parent.entry(x).or_insert(x);
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.parent.insert(x, r);
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller index becomes root, keeping roots deterministic.
            self.parent.insert(ra.max(rb), ra.min(rb));
        }
    }

    fn classes(&mut self) -> Vec<Vec<usize>> {
        let keys: Vec<usize> = self.parent.keys().copied().collect();
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for k in keys {
            let r = self.find(k);
            groups.entry(r).or_default().push(k);
        }
        groups.into_values().collect()
    }
}

/// Must-link equivalence classes (components of the must-link graph) with at
/// least two members, each sorted ascending.
fn must_classes(set: &ConstraintSet) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new();
    for &(a, b) in &set.must {
        uf.union(a, b);
    }
    uf.classes()
}

/// Shortest must-link path from `from` to `to`.
fn must_chain(set: &ConstraintSet, from: usize, to: usize) -> Vec<usize> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in &set.must {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    prev.insert(from, from);
    while let Some(x) = queue.pop_front() {
        if x == to {
            break;
        }
        for &y in adj.get(&x).map(Vec::as_slice).unwrap_or(&[]) {
            if let std::collections::btree_map::Entry::Vacant(e) = prev.entry(y) {
                e.insert(x);
                queue.push_back(y);
            }
        }
    }
    let mut chain = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[&cur];
        chain.push(cur);
    }
    chain.reverse();
    chain
}

fn close(set: &ConstraintSet, lenient: bool) -> Result<(ConstraintSet, Vec<Constraint>)> {
    let classes = must_classes(set);
    let mut class_of: BTreeMap<usize, usize> = BTreeMap::new();
    for (ci, members) in classes.iter().enumerate() {
        for &m in members {
            class_of.insert(m, ci);
        }
    }
    let members_of = |x: usize| -> Vec<usize> {
        class_of.get(&x).map(|&c| classes[c].clone()).unwrap_or_else(|| vec![x])
    };

    let mut out = ConstraintSet::new();
    for members in &classes {
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                out.must.insert((a, b));
            }
        }
    }
    let mut dropped = Vec::new();
    for c in set.cannot() {
        let same = match (class_of.get(&c.a), class_of.get(&c.b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        };
        if same {
            if lenient {
                dropped.push(c);
                continue;
            }
            return Err(Error::Inconsistent { a: c.a, b: c.b, chain: must_chain(set, c.a, c.b) });
        }
        for x in members_of(c.a) {
            for y in members_of(c.b) {
                out.cannot.insert((x.min(y), x.max(y)));
            }
        }
    }
    out.closed = true;
    Ok((out, dropped))
}

/// Closes must-links under transitivity and propagates cannot-links across
/// the resulting classes. A cannot-link inside one class is an error naming
/// the must-link chain that joins its endpoints.
pub fn transitive_closure(set: &ConstraintSet) -> Result<ConstraintSet> {
    close(set, false).map(|r| r.0)
}

/// Like [`transitive_closure`], but cannot-links that contradict the
/// must-link classes are dropped and returned instead of failing.
pub fn transitive_closure_lenient(set: &ConstraintSet) -> (ConstraintSet, Vec<Constraint>) {
    close(set, true).expect("lenient closure never fails")
}

/// Must-link neighborhoods, largest first (ties: smallest member first).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodSet {
    pub neighborhoods: Vec<Vec<usize>>,
}

impl NeighborhoodSet {
    pub fn lambda(&self) -> usize {
        self.neighborhoods.len()
    }
}

pub fn build_neighborhoods(set: &ConstraintSet) -> NeighborhoodSet {
    let mut neighborhoods = must_classes(set);
    neighborhoods.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    NeighborhoodSet { neighborhoods }
}

/// Constraints of `set` that `assignment` violates, in set order.
pub fn violations(assignment: &[usize], set: &ConstraintSet) -> Result<Vec<Constraint>> {
    if let Some(m) = set.max_doc() {
        if m >= assignment.len() {
            return Err(Error::UnknownDocument(m.to_string()));
        }
    }
    Ok(set.iter().filter(|c| c.violated_by(assignment)).collect())
}
