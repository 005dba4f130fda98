//! Finite pointed simplicial sets stored by their nondegenerate simplices.
//!
//! A simplex is a nondegenerate cell together with a monotone surjection
//! `sigma: [n] -> [k]` (Eilenberg–Zilber normal form). Faces are computed by
//! factoring `sigma ∘ delta_j` and looking up the stored faces of the cell.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grouphom::FiniteGroup;
use crate::homology::{normalize_col, ChainComplex, ChainMap, SparseCol};

/// (degree, index) of a nondegenerate simplex; (0, 0) is the basepoint.
pub type Nd = (usize, usize);
pub const BASE: Nd = (0, 0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimpError {
    #[error("simplicial identity fails at {0}")]
    Identity(String),
    #[error("map is not simplicial at {0}")]
    NotSimplicial(String),
    #[error("not a subcomplex: face of {0:?} escapes")]
    NotSubcomplex(Nd),
    #[error("group action invalid: {0}")]
    BadAction(String),
    #[error("conditions for restricting the action fail at {0}")]
    ConditionsFail(String),
    #[error("construction references unknown simplex {0}")]
    Missing(String),
    #[error("malformed simplicial set: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simp {
    pub nd: Nd,
    pub sigma: Vec<u8>,
}

impl Simp {
    pub fn nondeg(nd: Nd) -> Self {
        Simp { nd, sigma: (0..=nd.0 as u8).collect() }
    }

    pub fn base(n: usize) -> Self {
        Simp { nd: BASE, sigma: vec![0; n + 1] }
    }

    pub fn degree(&self) -> usize {
        self.sigma.len() - 1
    }

    pub fn is_base(&self) -> bool {
        self.nd == BASE
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.nd.0 == self.degree()
    }

    /// Precompose with a monotone surjection rho.
    pub fn degenerate_by(&self, rho: &[u8]) -> Simp {
        Simp { nd: self.nd, sigma: rho.iter().map(|&i| self.sigma[i as usize]).collect() }
    }

    /// s_j
    pub fn degen(&self, j: usize) -> Simp {
        let mut s = self.sigma.clone();
        s.insert(j, self.sigma[j]);
        Simp { nd: self.nd, sigma: s }
    }
}

pub fn is_surjection(s: &[u8], k: usize) -> bool {
    !s.is_empty() && s[0] == 0 && *s.last().unwrap() as usize == k && s.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1)
}

/// Collapse runs of equal consecutive items: returns (surjection, distinct items).
pub fn collapse_runs<T: PartialEq + Clone>(items: &[T]) -> (Vec<u8>, Vec<T>) {
    let mut sigma = Vec::with_capacity(items.len());
    let mut distinct: Vec<T> = Vec::new();
    for it in items {
        if distinct.last() != Some(it) {
            distinct.push(it.clone());
        }
        sigma.push((distinct.len() - 1) as u8);
    }
    (sigma, distinct)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub label: String,
    pub faces: Vec<Simp>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpSet {
    pub cells: Vec<Vec<Cell>>,
}

impl Default for SimpSet {
    fn default() -> Self {
        Self::point()
    }
}

impl SimpSet {
    pub fn point() -> Self {
        SimpSet { cells: vec![vec![Cell { label: "*".into(), faces: vec![] }]] }
    }

    pub fn add_cell(&mut self, degree: usize, label: impl Into<String>, faces: Vec<Simp>) -> Nd {
        if self.cells.len() <= degree {
            self.cells.resize(degree + 1, vec![]);
        }
        self.cells[degree].push(Cell { label: label.into(), faces });
        (degree, self.cells[degree].len() - 1)
    }

    pub fn top(&self) -> usize {
        self.cells.iter().rposition(|c| !c.is_empty()).unwrap_or(0)
    }

    pub fn count(&self, k: usize) -> usize {
        self.cells.get(k).map_or(0, |c| c.len())
    }

    pub fn nondegenerate_total(&self) -> usize {
        self.cells.iter().map(|c| c.len()).sum()
    }

    pub fn nds(&self) -> impl Iterator<Item = Nd> + '_ {
        self.cells.iter().enumerate().flat_map(|(k, cs)| (0..cs.len()).map(move |i| (k, i)))
    }

    pub fn label(&self, nd: Nd) -> &str {
        &self.cells[nd.0][nd.1].label
    }

    pub fn nd_face(&self, nd: Nd, j: usize) -> &Simp {
        &self.cells[nd.0][nd.1].faces[j]
    }

    /// d_j of an arbitrary simplex.
    pub fn face(&self, s: &Simp, j: usize) -> Simp {
        let n = s.degree();
        assert!(n > 0 && j <= n, "face index out of range");
        let v = s.sigma[j];
        let unique = (j == 0 || s.sigma[j - 1] != v) && (j == n || s.sigma[j + 1] != v);
        let mut f: Vec<u8> = s.sigma.clone();
        f.remove(j);
        if !unique {
            return Simp { nd: s.nd, sigma: f };
        }
        for x in f.iter_mut() {
            if *x > v {
                *x -= 1;
            }
        }
        let inner = self.nd_face(s.nd, v as usize);
        Simp { nd: inner.nd, sigma: f.iter().map(|&i| inner.sigma[i as usize]).collect() }
    }

    /// Iterated faces removing the given (distinct) vertices.
    pub fn remove_vertices(&self, s: &Simp, vertices: &[usize]) -> Simp {
        let mut vs = vertices.to_vec();
        vs.sort_unstable();
        let mut out = s.clone();
        for &v in vs.iter().rev() {
            out = self.face(&out, v);
        }
        out
    }

    /// Restriction to the vertices lo..=hi.
    pub fn restrict(&self, s: &Simp, lo: usize, hi: usize) -> Simp {
        let n = s.degree();
        let drop: Vec<usize> = (0..lo).chain(hi + 1..=n).collect();
        self.remove_vertices(s, &drop)
    }

    /// All simplices of degree n, including degenerate ones.
    pub fn all_simplices(&self, n: usize) -> Vec<Simp> {
        let mut out = Vec::new();
        for k in 0..=n.min(self.top()) {
            let surj = surjections(n, k);
            for i in 0..self.count(k) {
                for s in &surj {
                    out.push(Simp { nd: (k, i), sigma: s.clone() });
                }
            }
        }
        out
    }

    /// Checks stored faces and d_i d_j = d_{j-1} d_i on nondegenerate cells.
    pub fn check_identities(&self) -> Result<(), SimpError> {
        if self.cells.is_empty() || self.count(0) == 0 || !self.cells[0][0].faces.is_empty() {
            return Err(SimpError::Malformed("missing basepoint".into()));
        }
        for (k, cs) in self.cells.iter().enumerate() {
            for (i, c) in cs.iter().enumerate() {
                let expected = if k == 0 { 0 } else { k + 1 };
                if c.faces.len() != expected {
                    return Err(SimpError::Malformed(format!("cell ({k},{i}) has {} faces", c.faces.len())));
                }
                for f in &c.faces {
                    if f.degree() + 1 != k || f.nd.0 >= self.cells.len() || f.nd.1 >= self.count(f.nd.0)
                        || !is_surjection(&f.sigma, f.nd.0)
                    {
                        return Err(SimpError::Malformed(format!("bad face of ({k},{i}): {f:?}")));
                    }
                }
                if k >= 2 {
                    let x = Simp::nondeg((k, i));
                    for b in 1..=k {
                        for a in 0..b {
                            let l = self.face(&self.face(&x, b), a);
                            let r = self.face(&self.face(&x, a), b - 1);
                            if l != r {
                                return Err(SimpError::Identity(format!(
                                    "d{a} d{b} on {} ({:?} vs {:?})",
                                    c.label, l, r
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Exhaustive check of all simplicial identities on all simplices up to degree `max`.
    pub fn check_identities_full(&self, max: usize) -> Result<(), SimpError> {
        self.check_identities()?;
        for n in 0..=max {
            for x in self.all_simplices(n) {
                if x.is_base() && !self.face_or_self_base(&x) {
                    return Err(SimpError::Identity("basepoint face".into()));
                }
                for j in 0..=n {
                    let sj = x.degen(j);
                    for i in 0..=n + 1 {
                        let l = self.face(&sj, i);
                        let r = if i < j {
                            self.face(&x, i).degen(j - 1)
                        } else if i == j || i == j + 1 {
                            x.clone()
                        } else {
                            self.face(&x, i - 1).degen(j)
                        };
                        if l != r {
                            return Err(SimpError::Identity(format!("d{i} s{j} on {x:?}")));
                        }
                    }
                    for i in 0..=j {
                        if x.degen(j).degen(i) != x.degen(i).degen(j + 1) {
                            return Err(SimpError::Identity(format!("s{i} s{j} on {x:?}")));
                        }
                    }
                }
                if n >= 2 {
                    for b in 1..=n {
                        for a in 0..b {
                            if self.face(&self.face(&x, b), a) != self.face(&self.face(&x, a), b - 1) {
                                return Err(SimpError::Identity(format!("d{a} d{b} on {x:?}")));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn face_or_self_base(&self, x: &Simp) -> bool {
        x.degree() == 0 || (0..=x.degree()).all(|j| self.face(x, j).is_base())
    }

    /// Generator index of a nondegenerate non-basepoint cell in normalized chains.
    pub fn gen_index(nd: Nd) -> usize {
        if nd.0 == 0 {
            nd.1 - 1
        } else {
            nd.1
        }
    }

    pub fn gen_nd(k: usize, g: usize) -> Nd {
        if k == 0 {
            (0, g + 1)
        } else {
            (k, g)
        }
    }

    /// Signed generator of a simplex in normalized chains (None if degenerate or base).
    pub fn as_gen(s: &Simp) -> Option<usize> {
        if s.is_base() || !s.is_nondegenerate() {
            None
        } else {
            Some(Self::gen_index(s.nd))
        }
    }

    pub fn boundary_col(&self, nd: Nd) -> SparseCol {
        let k = nd.0;
        if k == 0 {
            return vec![];
        }
        let mut col = Vec::with_capacity(k + 1);
        for (j, f) in self.cells[k][nd.1].faces.iter().enumerate() {
            if let Some(g) = Self::as_gen(f) {
                col.push((g, if j % 2 == 0 { 1 } else { -1 }));
            }
        }
        normalize_col(col)
    }

    /// Reduced normalized chains.
    pub fn normalized_chains(&self) -> ChainComplex {
        let top = self.top();
        let mut ranks = vec![0; top + 1];
        let mut bd = vec![vec![]; top + 1];
        for k in 0..=top {
            let start = if k == 0 { 1 } else { 0 };
            ranks[k] = self.count(k) - start;
            bd[k] = (start..self.count(k)).map(|i| self.boundary_col((k, i))).collect();
        }
        let mut c = ChainComplex::new(ranks, bd);
        c.labels = Some(
            (0..=top)
                .map(|k| {
                    let start = if k == 0 { 1 } else { 0 };
                    (start..self.count(k)).map(|i| self.cells[k][i].label.clone()).collect()
                })
                .collect(),
        );
        c
    }
}

/// Monotone surjections [n] -> [k].
pub fn surjections(n: usize, k: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    fn rec(pos: usize, n: usize, k: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if pos > n {
            if *cur.last().unwrap() as usize == k {
                out.push(cur.clone());
            }
            return;
        }
        let last = *cur.last().unwrap();
        let remaining = n - pos + 1;
        if (k - last as usize) < remaining {
            cur.push(last);
            rec(pos + 1, n, k, cur, out);
            cur.pop();
        }
        if (last as usize) < k {
            cur.push(last + 1);
            rec(pos + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut cur = vec![0u8];
    rec(1, n, k, &mut cur, &mut out);
    out
}

/// A simplicial map given on nondegenerate cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpMap {
    pub images: Vec<Vec<Simp>>,
}

impl SimpMap {
    pub fn from_fn(src: &SimpSet, mut f: impl FnMut(Nd) -> Simp) -> Self {
        SimpMap {
            images: src.cells.iter().enumerate().map(|(k, cs)| (0..cs.len()).map(|i| f((k, i))).collect()).collect(),
        }
    }

    pub fn identity(x: &SimpSet) -> Self {
        Self::from_fn(x, Simp::nondeg)
    }

    pub fn apply(&self, s: &Simp) -> Simp {
        let img = &self.images[s.nd.0][s.nd.1];
        Simp { nd: img.nd, sigma: s.sigma.iter().map(|&i| img.sigma[i as usize]).collect() }
    }

    pub fn compose(&self, first: &SimpMap) -> SimpMap {
        SimpMap { images: first.images.iter().map(|l| l.iter().map(|s| self.apply(s)).collect()).collect() }
    }

    pub fn check(&self, src: &SimpSet, tgt: &SimpSet) -> Result<(), SimpError> {
        if self.images.len() < src.cells.len() {
            return Err(SimpError::NotSimplicial("missing degrees".into()));
        }
        if !self.images[0][0].is_base() {
            return Err(SimpError::NotSimplicial("basepoint not preserved".into()));
        }
        for nd in src.nds() {
            let img = &self.images[nd.0][nd.1];
            if img.degree() != nd.0 || img.nd.0 >= tgt.cells.len() || img.nd.1 >= tgt.count(img.nd.0)
                || !is_surjection(&img.sigma, img.nd.0)
            {
                return Err(SimpError::NotSimplicial(format!("bad image of {}", src.label(nd))));
            }
            if nd.0 > 0 {
                for j in 0..=nd.0 {
                    if self.apply(src.nd_face(nd, j)) != tgt.face(img, j) {
                        return Err(SimpError::NotSimplicial(format!("face {j} of {}", src.label(nd))));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn chain_map(&self, src: &SimpSet) -> ChainMap {
        let images = (0..=src.top())
            .map(|k| {
                let start = if k == 0 { 1 } else { 0 };
                (start..src.count(k))
                    .map(|i| match SimpSet::as_gen(&self.images[k][i]) {
                        Some(g) => vec![(g, 1)],
                        None => vec![],
                    })
                    .collect()
            })
            .collect();
        ChainMap { images }
    }
}

#[derive(Debug, Clone)]
pub struct GroupAction {
    pub group: Arc<FiniteGroup>,
    pub maps: Vec<SimpMap>,
}

impl GroupAction {
    pub fn trivial(group: Arc<FiniteGroup>, x: &SimpSet) -> Self {
        let maps = vec![SimpMap::identity(x); group.order()];
        GroupAction { group, maps }
    }

    pub fn act(&self, g: usize, s: &Simp) -> Simp {
        self.maps[g].apply(s)
    }

    pub fn check(&self, x: &SimpSet) -> Result<(), SimpError> {
        let g = &self.group;
        if self.maps.len() != g.order() {
            return Err(SimpError::BadAction("one map per element required".into()));
        }
        if self.maps[g.identity] != SimpMap::identity(x) {
            return Err(SimpError::BadAction("identity does not act trivially".into()));
        }
        for m in &self.maps {
            m.check(x, x)?;
        }
        for a in 0..g.order() {
            for b in 0..g.order() {
                if self.maps[g.mul(a, b)] != self.maps[a].compose(&self.maps[b]) {
                    return Err(SimpError::BadAction(format!("not a homomorphism at ({a},{b})")));
                }
            }
        }
        Ok(())
    }
}

/// A simplicial set whose nondegenerate cells are indexed by structural keys.
#[derive(Debug, Clone)]
pub struct Keyed<K: Clone + Eq + Hash> {
    pub set: SimpSet,
    pub keys: Vec<Vec<Option<K>>>,
    pub index: HashMap<K, Nd>,
}

/// A face in normalized form: None for the basepoint, else (surjection, key).
pub type KeyedFace<K> = Option<(Vec<u8>, K)>;

impl<K: Clone + Eq + Hash + std::fmt::Debug> Keyed<K> {
    /// `levels[k]` lists the non-basepoint keys of degree k; `face(key, k, j)` returns d_j.
    pub fn build(
        levels: Vec<Vec<K>>,
        label: impl Fn(&K) -> String,
        mut face: impl FnMut(&K, usize, usize) -> KeyedFace<K>,
    ) -> Result<Self, SimpError> {
        let mut index = HashMap::new();
        let mut keys: Vec<Vec<Option<K>>> = vec![vec![None]];
        for (k, lv) in levels.iter().enumerate() {
            if keys.len() <= k {
                keys.push(vec![]);
            }
            for key in lv {
                if index.insert(key.clone(), (k, keys[k].len())).is_some() {
                    return Err(SimpError::Malformed(format!("duplicate key {key:?}")));
                }
                keys[k].push(Some(key.clone()));
            }
        }
        while keys.len() > 1 && keys.last().map_or(false, |v| v.is_empty()) {
            keys.pop();
        }
        let mut set = SimpSet { cells: vec![vec![Cell { label: "*".into(), faces: vec![] }]] };
        for (k, lv) in keys.iter().enumerate() {
            if k > 0 {
                set.cells.push(Vec::with_capacity(lv.len()));
            }
            for key in lv.iter().skip(if k == 0 { 1 } else { 0 }) {
                let key = key.as_ref().unwrap();
                let mut faces = Vec::new();
                if k > 0 {
                    for j in 0..=k {
                        faces.push(match face(key, k, j) {
                            None => Simp::base(k - 1),
                            Some((sigma, fk)) => {
                                let nd = *index
                                    .get(&fk)
                                    .ok_or_else(|| SimpError::Missing(format!("{fk:?} (face {j} of {key:?})")))?;
                                Simp { nd, sigma }
                            }
                        });
                    }
                }
                set.cells[k].push(Cell { label: label(key), faces });
            }
        }
        Ok(Keyed { set, keys, index })
    }

    pub fn locate(&self, f: KeyedFace<K>, n: usize) -> Simp {
        match f {
            None => Simp::base(n),
            Some((sigma, key)) => Simp {
                nd: *self.index.get(&key).unwrap_or_else(|| panic!("unknown key {key:?}")),
                sigma,
            },
        }
    }

    pub fn try_locate(&self, f: KeyedFace<K>, n: usize) -> Result<Simp, SimpError> {
        match f {
            None => Ok(Simp::base(n)),
            Some((sigma, key)) => Ok(Simp {
                nd: *self.index.get(&key).ok_or_else(|| SimpError::Missing(format!("{key:?}")))?,
                sigma,
            }),
        }
    }

    pub fn key(&self, nd: Nd) -> Option<&K> {
        self.keys[nd.0][nd.1].as_ref()
    }
}

pub fn s0() -> SimpSet {
    let mut x = SimpSet::point();
    x.add_cell(0, "v", vec![]);
    x
}

/// Δ^n/∂Δ^n
pub fn sphere(n: usize) -> SimpSet {
    let mut x = SimpSet::point();
    if n == 0 {
        x.add_cell(0, "v", vec![]);
    } else {
        x.add_cell(n, format!("e{n}"), vec![Simp::base(n - 1); n + 1]);
    }
    x
}

pub fn circle_s1() -> SimpSet {
    sphere(1)
}

pub const SS_STAR: Nd = (0, 1);
pub const SS_PLUS: Nd = (1, 0);
pub const SS_MINUS: Nd = (1, 1);

/// The twisted circle with cells *, ⊛, +1, -1.
pub fn circle_ssigma() -> SimpSet {
    let mut x = SimpSet::point();
    x.add_cell(0, "⊛", vec![]);
    let f = vec![Simp::nondeg(SS_STAR), Simp::base(0)];
    x.add_cell(1, "+1", f.clone());
    x.add_cell(1, "-1", f);
    x
}

/// Z/2 (sign character) acting on S^σ by ε i ↦ -ε i.
pub fn ssigma_action() -> GroupAction {
    let x = circle_ssigma();
    let g = Arc::new(FiniteGroup::z2_sign());
    let swap = SimpMap::from_fn(&x, |nd| match nd {
        SS_PLUS => Simp::nondeg(SS_MINUS),
        SS_MINUS => Simp::nondeg(SS_PLUS),
        other => Simp::nondeg(other),
    });
    GroupAction { group: g, maps: vec![SimpMap::identity(&x), swap] }
}

/// The circle simplex ε i in degree n (1 ≤ i ≤ n), as a pullback of the 1-cell.
pub fn circle_simplex(cell: Nd, i: usize, n: usize) -> Simp {
    assert!(1 <= i && i <= n);
    Simp { nd: cell, sigma: (0..=n).map(|v| if v < i { 0 } else { 1 }).collect() }
}

/// Decode a circle simplex: Some(i) for a simplex ε i, None for * or ⊛.
pub fn circle_index(s: &Simp) -> Option<usize> {
    if s.nd.0 == 1 {
        Some(s.sigma.iter().filter(|&&v| v == 0).count())
    } else {
        None
    }
}

pub type SmashKey = (Nd, Vec<u8>, Nd, Vec<u8>);

/// Jointly injective pairs of surjections [n] -> [p], [n] -> [q].
pub fn shuffle_paths(n: usize, p: usize, q: usize) -> Vec<(Vec<u8>, Vec<u8>)> {
    let mut out = Vec::new();
    fn rec(n: usize, p: usize, q: usize, a: &mut Vec<u8>, b: &mut Vec<u8>, out: &mut Vec<(Vec<u8>, Vec<u8>)>) {
        let (x, y) = (*a.last().unwrap() as usize, *b.last().unwrap() as usize);
        if a.len() == n + 1 {
            if x == p && y == q {
                out.push((a.clone(), b.clone()));
            }
            return;
        }
        let left = n + 1 - a.len();
        for (dx, dy) in [(1, 0), (0, 1), (1, 1)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx <= p && ny <= q && (p - nx) <= left - 1 && (q - ny) <= left - 1 {
                a.push(nx as u8);
                b.push(ny as u8);
                rec(n, p, q, a, b, out);
                a.pop();
                b.pop();
            }
        }
    }
    if n >= p.max(q) && n <= p + q {
        rec(n, p, q, &mut vec![0], &mut vec![0], &mut out);
    }
    out
}

#[derive(Debug, Clone)]
pub struct Smash {
    pub keyed: Keyed<SmashKey>,
    pub left: SimpSet,
    pub right: SimpSet,
}

/// Normal form of a pair of n-simplices of X and Y in X ∧ Y.
pub fn smash_normal(a: &Simp, b: &Simp) -> KeyedFace<SmashKey> {
    if a.is_base() || b.is_base() {
        return None;
    }
    let pairs: Vec<(u8, u8)> = a.sigma.iter().copied().zip(b.sigma.iter().copied()).collect();
    let (rho, distinct) = collapse_runs(&pairs);
    let sa = distinct.iter().map(|p| p.0).collect();
    let sb = distinct.iter().map(|p| p.1).collect();
    Some((rho, (a.nd, sa, b.nd, sb)))
}

impl Smash {
    pub fn new(x: &SimpSet, y: &SimpSet) -> Result<Self, SimpError> {
        let top = x.top() + y.top();
        let mut levels: Vec<Vec<SmashKey>> = vec![vec![]; top + 1];
        for xa in x.nds().filter(|&n| n != BASE) {
            for yb in y.nds().filter(|&n| n != BASE) {
                for n in xa.0.max(yb.0)..=xa.0 + yb.0 {
                    for (sa, sb) in shuffle_paths(n, xa.0, yb.0) {
                        levels[n].push((xa, sa, yb, sb));
                    }
                }
            }
        }
        let keyed = Keyed::build(
            levels,
            |(a, sa, b, sb)| format!("({}{},{}{})", x.label(*a), deg_word(sa), y.label(*b), deg_word(sb)),
            |(a, sa, b, sb), _k, j| {
                let fa = x.face(&Simp { nd: *a, sigma: sa.clone() }, j);
                let fb = y.face(&Simp { nd: *b, sigma: sb.clone() }, j);
                smash_normal(&fa, &fb)
            },
        )?;
        Ok(Smash { keyed, left: x.clone(), right: y.clone() })
    }

    pub fn set(&self) -> &SimpSet {
        &self.keyed.set
    }

    pub fn pair(&self, a: &Simp, b: &Simp) -> Simp {
        self.keyed.locate(smash_normal(a, b), a.degree())
    }

    /// Components of a simplex (both of the same degree).
    pub fn split(&self, s: &Simp) -> Option<(Simp, Simp)> {
        let (a, sa, b, sb) = self.keyed.key(s.nd)?;
        Some((
            Simp { nd: *a, sigma: s.sigma.iter().map(|&i| sa[i as usize]).collect() },
            Simp { nd: *b, sigma: s.sigma.iter().map(|&i| sb[i as usize]).collect() },
        ))
    }

    /// f ∧ g
    pub fn map(&self, other: &Smash, f: &SimpMap, g: &SimpMap) -> SimpMap {
        SimpMap::from_fn(self.set(), |nd| match self.split(&Simp::nondeg(nd)) {
            None => Simp::base(nd.0),
            Some((a, b)) => other.pair(&f.apply(&a), &g.apply(&b)),
        })
    }

    /// Diagonal action of G on X ∧ Y.
    pub fn action(&self, ax: &GroupAction, ay: &GroupAction) -> GroupAction {
        let maps = (0..ax.group.order()).map(|g| self.map(self, &ax.maps[g], &ay.maps[g])).collect();
        GroupAction { group: ax.group.clone(), maps }
    }
}

fn deg_word(s: &[u8]) -> String {
    let k = *s.last().unwrap() as usize;
    if k + 1 == s.len() {
        String::new()
    } else {
        format!("~{}", s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(""))
    }
}

#[derive(Debug, Clone)]
pub struct Join {
    pub keyed: Keyed<(Nd, Nd)>,
    pub left: SimpSet,
    pub right: SimpSet,
}

/// Normal form of x ∈ X_i, y ∈ Y_j as a simplex of the reduced join in degree i+j+1.
pub fn join_normal(a: &Simp, b: &Simp) -> KeyedFace<(Nd, Nd)> {
    if a.is_base() || b.is_base() {
        return None;
    }
    let off = a.nd.0 as u8 + 1;
    let mut sigma = a.sigma.clone();
    sigma.extend(b.sigma.iter().map(|&v| v + off));
    Some((sigma, (a.nd, b.nd)))
}

impl Join {
    pub fn new(x: &SimpSet, y: &SimpSet) -> Result<Self, SimpError> {
        let top = x.top() + y.top() + 1;
        let mut levels: Vec<Vec<(Nd, Nd)>> = vec![vec![]; top + 1];
        for xa in x.nds().filter(|&n| n != BASE) {
            for yb in y.nds().filter(|&n| n != BASE) {
                levels[xa.0 + yb.0 + 1].push((xa, yb));
            }
        }
        let keyed = Keyed::build(
            levels,
            |(a, b)| format!("[{}|{}]", x.label(*a), y.label(*b)),
            |&(a, b), _k, l| {
                let (i, j) = (a.0, b.0);
                if l <= i {
                    if i == 0 {
                        return None;
                    }
                    join_normal(&x.face(&Simp::nondeg(a), l), &Simp::nondeg(b))
                } else {
                    if j == 0 {
                        return None;
                    }
                    join_normal(&Simp::nondeg(a), &y.face(&Simp::nondeg(b), l - i - 1))
                }
            },
        )?;
        Ok(Join { keyed, left: x.clone(), right: y.clone() })
    }

    pub fn set(&self) -> &SimpSet {
        &self.keyed.set
    }

    pub fn pair(&self, a: &Simp, b: &Simp) -> Simp {
        self.keyed.locate(join_normal(a, b), a.degree() + b.degree() + 1)
    }

    /// f ⋆̄ g
    pub fn map(&self, other: &Join, f: &SimpMap, g: &SimpMap) -> SimpMap {
        SimpMap::from_fn(self.set(), |nd| match self.keyed.key(nd) {
            None => Simp::base(nd.0),
            Some(&(a, b)) => other.pair(&f.apply(&Simp::nondeg(a)), &g.apply(&Simp::nondeg(b))),
        })
    }

    pub fn action(&self, ax: &GroupAction, ay: &GroupAction) -> GroupAction {
        let maps = (0..ax.group.order()).map(|g| self.map(self, &ax.maps[g], &ay.maps[g])).collect();
        GroupAction { group: ax.group.clone(), maps }
    }
}

#[derive(Debug, Clone)]
pub struct Wedge {
    pub keyed: Keyed<(usize, Nd)>,
    pub parts: Vec<SimpSet>,
}

impl Wedge {
    pub fn new(parts: &[SimpSet]) -> Result<Self, SimpError> {
        let top = parts.iter().map(|p| p.top()).max().unwrap_or(0);
        let mut levels: Vec<Vec<(usize, Nd)>> = vec![vec![]; top + 1];
        for (s, p) in parts.iter().enumerate() {
            for nd in p.nds().filter(|&n| n != BASE) {
                levels[nd.0].push((s, nd));
            }
        }
        let keyed = Keyed::build(
            levels,
            |&(s, nd)| format!("{}:{}", s, parts[s].label(nd)),
            |&(s, nd), _k, j| {
                let f = parts[s].nd_face(nd, j);
                if f.is_base() {
                    None
                } else {
                    Some((f.sigma.clone(), (s, f.nd)))
                }
            },
        )?;
        Ok(Wedge { keyed, parts: parts.to_vec() })
    }

    pub fn set(&self) -> &SimpSet {
        &self.keyed.set
    }

    pub fn inject(&self, s: usize, x: &Simp) -> Simp {
        if x.is_base() {
            Simp::base(x.degree())
        } else {
            self.keyed.locate(Some((x.sigma.clone(), (s, x.nd))), x.degree())
        }
    }

    pub fn inclusion(&self, s: usize) -> SimpMap {
        SimpMap::from_fn(&self.parts[s], |nd| self.inject(s, &Simp::nondeg(nd)))
    }

    /// Summand containing a nondegenerate cell.
    pub fn summand(&self, nd: Nd) -> Option<(usize, Nd)> {
        self.keyed.key(nd).copied()
    }
}

#[derive(Debug, Clone)]
pub struct Quotient {
    pub keyed: Keyed<Nd>,
    pub projection: SimpMap,
}

/// X / A for a set A of nondegenerate cells closed under faces.
pub fn quotient(x: &SimpSet, sub: &HashSet<Nd>) -> Result<Quotient, SimpError> {
    for &nd in sub {
        if nd.0 > 0 {
            for f in &x.cells[nd.0][nd.1].faces {
                if !f.is_base() && !sub.contains(&f.nd) {
                    return Err(SimpError::NotSubcomplex(nd));
                }
            }
        }
    }
    let inside = |nd: &Nd| *nd == BASE || sub.contains(nd);
    let mut levels: Vec<Vec<Nd>> = vec![vec![]; x.top() + 1];
    for nd in x.nds().filter(|n| !inside(n)) {
        levels[nd.0].push(nd);
    }
    let keyed = Keyed::build(
        levels,
        |&nd| x.label(nd).to_string(),
        |&nd, _k, j| {
            let f = x.nd_face(nd, j);
            if inside(&f.nd) {
                None
            } else {
                Some((f.sigma.clone(), f.nd))
            }
        },
    )?;
    let projection = SimpMap::from_fn(x, |nd| {
        if inside(&nd) {
            Simp::base(nd.0)
        } else {
            Simp::nondeg(keyed.index[&nd])
        }
    });
    Ok(Quotient { keyed, projection })
}

/// Smallest subcomplex containing the given cells.
pub fn face_closure(x: &SimpSet, cells: impl IntoIterator<Item = Nd>) -> HashSet<Nd> {
    let mut out = HashSet::new();
    let mut stack: Vec<Nd> = cells.into_iter().collect();
    while let Some(nd) = stack.pop() {
        if nd == BASE || !out.insert(nd) {
            continue;
        }
        if nd.0 > 0 {
            for f in &x.cells[nd.0][nd.1].faces {
                stack.push(f.nd);
            }
        }
    }
    out
}

/// Subdivision: n-simplices are (x, S_0 ⊊ … ⊊ S_n = [k]) with x nondegenerate of degree k.
#[derive(Debug, Clone)]
pub struct Subdivision {
    pub keyed: Keyed<(Nd, Vec<u32>)>,
}

fn chains_ending_full(k: usize) -> Vec<Vec<u32>> {
    // descending chains [k] = T_0 ⊋ T_1 ⊋ … ⊋ T_n ≠ ∅, reversed
    fn down(cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let mut c = cur.clone();
        c.reverse();
        out.push(c);
        let last = *cur.last().unwrap();
        let mut sub = (last - 1) & last;
        while sub > 0 {
            cur.push(sub);
            down(cur, out);
            cur.pop();
            sub = (sub - 1) & last;
        }
    }
    let mut out = Vec::new();
    down(&mut vec![(1u32 << (k + 1)) - 1], &mut out);
    out
}

impl Subdivision {
    pub fn new(x: &SimpSet) -> Result<Self, SimpError> {
        let top = x.top();
        let mut levels: Vec<Vec<(Nd, Vec<u32>)>> = vec![vec![]; top + 1];
        let per_k: Vec<Vec<Vec<u32>>> = (0..=top).map(chains_ending_full).collect();
        for nd in x.nds().filter(|&n| n != BASE) {
            for ch in &per_k[nd.0] {
                levels[ch.len() - 1].push((nd, ch.clone()));
            }
        }
        let keyed = Keyed::build(
            levels,
            |(nd, ch)| {
                format!("{}{{{}}}", x.label(*nd), ch.iter().map(|s| format!("{s:b}")).collect::<Vec<_>>().join("<"))
            },
            |(nd, ch), n, j| {
                if j < n {
                    let mut c = ch.clone();
                    c.remove(j);
                    return Some(((0..n as u8).collect(), (*nd, c)));
                }
                let t = ch[n - 1];
                let k = nd.0;
                let drop: Vec<usize> = (0..=k).filter(|v| t & (1 << v) == 0).collect();
                let r = x.remove_vertices(&Simp::nondeg(*nd), &drop);
                if r.is_base() {
                    return None;
                }
                let kept: Vec<usize> = (0..=k).filter(|v| t & (1 << v) != 0).collect();
                let images: Vec<u32> = ch[..n]
                    .iter()
                    .map(|&s| {
                        let mut m = 0u32;
                        for (pos, &v) in kept.iter().enumerate() {
                            if s & (1 << v) != 0 {
                                m |= 1 << r.sigma[pos];
                            }
                        }
                        m
                    })
                    .collect();
                let (rho, distinct) = collapse_runs(&images);
                Some((rho, (r.nd, distinct)))
            },
        )?;
        Ok(Subdivision { keyed })
    }

    pub fn set(&self) -> &SimpSet {
        &self.keyed.set
    }
}

/// (i, x, y) ↦ (d_i^{n-i+1} x, d_0^i y) from S¹ ∧ (X ∧ Y) to X ⋆̄ Y, where i is
/// the number of vertices of the circle coordinate sent to the basepoint.
pub struct SmashToJoin {
    pub xy: Smash,
    pub source: Smash,
    pub join: Join,
    pub map: SimpMap,
}

pub fn smash_to_join_simplex(x: &SimpSet, y: &SimpSet, i: usize, a: &Simp, b: &Simp) -> (Simp, Simp) {
    let n = a.degree();
    let xa = x.restrict(a, 0, i - 1);
    let yb = y.restrict(b, i, n);
    (xa, yb)
}

pub fn smash_to_join(x: &SimpSet, y: &SimpSet) -> Result<SmashToJoin, SimpError> {
    let xy = Smash::new(x, y)?;
    let source = Smash::new(&circle_s1(), xy.set())?;
    let join = Join::new(x, y)?;
    let map = SimpMap::from_fn(source.set(), |nd| {
        let Some((c, p)) = source.split(&Simp::nondeg(nd)) else { return Simp::base(nd.0) };
        let (Some(i), Some((a, b))) = (circle_index(&c), xy.split(&p)) else { return Simp::base(nd.0) };
        let (xa, yb) = smash_to_join_simplex(x, y, i, &a, &b);
        join.pair(&xa, &yb)
    });
    Ok(SmashToJoin { xy, source, join, map })
}

/// S^σ → S¹, ε i ↦ i.
pub fn ssigma_abs(s: &Simp) -> Simp {
    match circle_index(s) {
        Some(i) => circle_simplex((1, 0), i, s.degree()),
        None => Simp::base(s.degree()),
    }
}

pub fn ssigma_swap(s: &Simp) -> Simp {
    let nd = match s.nd {
        SS_PLUS => SS_MINUS,
        SS_MINUS => SS_PLUS,
        other => other,
    };
    Simp { nd, sigma: s.sigma.clone() }
}

/// (a, b) ↦ ((sgn b) a, |b|)
pub fn gamma_simplex(a: &Simp, b: &Simp) -> Option<(Simp, Simp)> {
    circle_index(b)?;
    let sa = if b.nd == SS_MINUS { ssigma_swap(a) } else { a.clone() };
    Some((sa, ssigma_abs(b)))
}

pub struct Gamma {
    pub source: Smash,
    pub target: Smash,
    pub map: SimpMap,
}

pub fn gamma() -> Result<Gamma, SimpError> {
    let ss = circle_ssigma();
    let source = Smash::new(&ss, &ss)?;
    let target = Smash::new(&ss, &circle_s1())?;
    let map = SimpMap::from_fn(source.set(), |nd| {
        let Some((a, b)) = source.split(&Simp::nondeg(nd)) else { return Simp::base(nd.0) };
        match gamma_simplex(&a, &b) {
            Some((u, v)) => target.pair(&u, &v),
            None => Simp::base(nd.0),
        }
    });
    Ok(Gamma { source, target, map })
}

pub type OrbitKey = (Vec<u32>, Simp);

/// Truncated diagonal of the action bisimplicial set: n-simplices (g_1..g_n, x ∈ X_n).
#[derive(Debug, Clone)]
pub struct HomotopyOrbits {
    pub keyed: Keyed<OrbitKey>,
    pub bound: usize,
}

fn orbit_normal(g: &FiniteGroup, gs: Vec<u32>, x: Simp) -> KeyedFace<OrbitKey> {
    if x.is_base() {
        return None;
    }
    let n = gs.len();
    let e = g.identity as u32;
    let collapsible: Vec<bool> = (0..n).map(|i| gs[i] == e && x.sigma[i] == x.sigma[i + 1]).collect();
    if !collapsible.iter().any(|&c| c) {
        return Some(((0..=n as u8).collect(), (gs, x)));
    }
    let mut rho = Vec::with_capacity(n + 1);
    let mut cur = 0u8;
    rho.push(0);
    for i in 0..n {
        if !collapsible[i] {
            cur += 1;
        }
        rho.push(cur);
    }
    let ngs: Vec<u32> = gs.iter().enumerate().filter(|(i, _)| !collapsible[*i]).map(|(_, &h)| h).collect();
    let sigma: Vec<u8> = x.sigma.iter().enumerate().filter(|(i, _)| *i == 0 || !collapsible[i - 1]).map(|(_, &v)| v).collect();
    Some((rho, (ngs, Simp { nd: x.nd, sigma })))
}

pub fn orbit_face(x: &SimpSet, a: &GroupAction, gs: &[u32], s: &Simp, j: usize) -> KeyedFace<OrbitKey> {
    let g = &a.group;
    let n = gs.len();
    let (ngs, nx) = if j == 0 {
        (gs[1..].to_vec(), x.face(&a.act(gs[0] as usize, s), 0))
    } else if j < n {
        let mut v = gs[..j - 1].to_vec();
        v.push(g.mul(gs[j] as usize, gs[j - 1] as usize) as u32);
        v.extend_from_slice(&gs[j + 1..]);
        (v, x.face(s, j))
    } else {
        (gs[..n - 1].to_vec(), x.face(s, n))
    };
    orbit_normal(g, ngs, nx)
}

impl HomotopyOrbits {
    pub fn new(x: &SimpSet, a: &GroupAction, bound: usize) -> Result<Self, SimpError> {
        let g = &a.group;
        let order = g.order() as u32;
        let e = g.identity as u32;
        let mut levels: Vec<Vec<OrbitKey>> = vec![vec![]; bound + 1];
        let mut tuples: Vec<Vec<u32>> = vec![vec![]];
        for n in 0..=bound {
            if n > 0 {
                tuples = tuples
                    .iter()
                    .flat_map(|t| {
                        (0..order).map(move |h| {
                            let mut u = t.clone();
                            u.push(h);
                            u
                        })
                    })
                    .collect();
            }
            let simps: Vec<Simp> = x.all_simplices(n).into_iter().filter(|s| !s.is_base()).collect();
            for t in &tuples {
                for s in &simps {
                    let degenerate = (0..n).any(|i| t[i] == e && s.sigma[i] == s.sigma[i + 1]);
                    if !degenerate {
                        levels[n].push((t.clone(), s.clone()));
                    }
                }
            }
        }
        let keyed = Keyed::build(
            levels,
            |(t, s)| format!("{:?}{}", t, x.label(s.nd)),
            |(t, s), _n, j| orbit_face(x, a, t, s, j),
        )?;
        Ok(HomotopyOrbits { keyed, bound })
    }

    pub fn set(&self) -> &SimpSet {
        &self.keyed.set
    }
}

/// Bar-construction model of the homotopy orbits: generators g⃗ ⊗ x with g⃗ a
/// p-tuple of non-identity elements and x a nondegenerate non-basepoint
/// q-simplex, p + q ≤ bound. Quasi-isomorphic to the chains of the diagonal.
#[derive(Debug, Clone)]
pub struct OrbitChains {
    pub complex: ChainComplex,
    /// gens[n][i] = (tuple, generator of X in degree q)
    pub gens: Vec<Vec<(Vec<u32>, usize, usize)>>,
    pub index: HashMap<(Vec<u32>, usize, usize), usize>,
}

pub fn orbit_chains(x: &SimpSet, a: &GroupAction, bound: usize) -> OrbitChains {
    let g = &a.group;
    let nonid: Vec<u32> = (0..g.order() as u32).filter(|&h| h as usize != g.identity).collect();
    let xc = x.normalized_chains();
    let mut tuples: Vec<Vec<Vec<u32>>> = vec![vec![vec![]]];
    for p in 1..=bound {
        let prev = &tuples[p - 1];
        let next: Vec<Vec<u32>> = prev
            .iter()
            .flat_map(|t| {
                nonid.iter().map(move |&h| {
                    let mut u = t.clone();
                    u.push(h);
                    u
                })
            })
            .collect();
        tuples.push(next);
    }
    let mut gens: Vec<Vec<(Vec<u32>, usize, usize)>> = vec![vec![]; bound + 1];
    let mut index = HashMap::new();
    for n in 0..=bound {
        for p in 0..=n {
            let q = n - p;
            for t in &tuples[p] {
                for xg in 0..xc.rank(q) {
                    index.insert((t.clone(), q, xg), gens[n].len());
                    gens[n].push((t.clone(), q, xg));
                }
            }
        }
    }
    // action on generators: g·x as a signed generator
    let act_gen = |h: u32, q: usize, xg: usize| -> Option<usize> {
        let s = a.act(h as usize, &Simp::nondeg(SimpSet::gen_nd(q, xg)));
        SimpSet::as_gen(&s)
    };
    let mut bd: Vec<Vec<SparseCol>> = vec![vec![]; bound + 1];
    for n in 1..=bound {
        bd[n] = gens[n]
            .iter()
            .map(|(t, q, xg)| {
                let (p, q, xg) = (t.len(), *q, *xg);
                let mut col = Vec::new();
                for i in 0..=p {
                    if p == 0 {
                        break;
                    }
                    let sign = if i % 2 == 0 { 1 } else { -1 };
                    let (face, target) = if i == 0 {
                        (t[1..].to_vec(), act_gen(t[0], q, xg))
                    } else if i < p {
                        let m = g.mul(t[i] as usize, t[i - 1] as usize) as u32;
                        if m as usize == g.identity {
                            continue;
                        }
                        let mut f = t[..i - 1].to_vec();
                        f.push(m);
                        f.extend_from_slice(&t[i + 1..]);
                        (f, Some(xg))
                    } else {
                        (t[..p - 1].to_vec(), Some(xg))
                    };
                    if let Some(y) = target {
                        col.push((index[&(face, q, y)], sign));
                    }
                }
                if q > 0 {
                    let sign = if p % 2 == 0 { 1 } else { -1 };
                    for &(y, c) in &xc.bd[q][xg] {
                        col.push((index[&(t.clone(), q - 1, y)], sign * c));
                    }
                }
                normalize_col(col)
            })
            .collect();
    }
    let ranks = gens.iter().map(|v| v.len()).collect();
    OrbitChains { complex: ChainComplex::new(ranks, bd), gens, index }
}

impl OrbitChains {
    /// Chain map induced by an equivariant simplicial map.
    pub fn induced(&self, f: &SimpMap, target: &OrbitChains) -> ChainMap {
        let images = self
            .gens
            .iter()
            .map(|gs| {
                gs.iter()
                    .map(|(t, q, xg)| {
                        let s = f.apply(&Simp::nondeg(SimpSet::gen_nd(*q, *xg)));
                        match SimpSet::as_gen(&s) {
                            Some(y) => vec![(target.index[&(t.clone(), *q, y)], 1)],
                            None => vec![],
                        }
                    })
                    .collect()
            })
            .collect();
        ChainMap { images }
    }
}

/// (Y)_{hH} after checking that Y is H-stable, that every simplex of X is a
/// G-translate of one in Y, and that g·y ∈ Y for a non-basepoint simplex y of Y forces g ∈ H.
pub fn reduce_orbits(
    x: &SimpSet,
    a: &GroupAction,
    y: &HashSet<Nd>,
    h: &[usize],
    bound: usize,
) -> Result<(HomotopyOrbits, Quotient, GroupAction), SimpError> {
    let g = &a.group;
    let hset: HashSet<usize> = h.iter().copied().collect();
    let closure = face_closure(x, y.iter().copied());
    if closure.len() != y.iter().filter(|&&n| n != BASE).count() {
        return Err(SimpError::NotSubcomplex(*y.iter().find(|n| !closure.contains(n)).unwrap_or(&BASE)));
    }
    for nd in x.nds().filter(|&n| n != BASE) {
        let s = Simp::nondeg(nd);
        if !(0..g.order()).any(|e| y.contains(&a.act(e, &s).nd)) {
            return Err(SimpError::ConditionsFail(format!("{} has no translate in the subcomplex", x.label(nd))));
        }
    }
    for &nd in y {
        if nd == BASE {
            continue;
        }
        let s = Simp::nondeg(nd);
        for e in 0..g.order() {
            let inside = y.contains(&a.act(e, &s).nd);
            if inside != hset.contains(&e) {
                return Err(SimpError::ConditionsFail(format!("{} under {}", x.label(nd), g.labels[e])));
            }
        }
    }
    let (sub, elems) = g.subgroup(h).map_err(|e| SimpError::BadAction(e.to_string()))?;
    let complement: HashSet<Nd> = x.nds().filter(|n| *n != BASE && !y.contains(n)).collect();
    let comp_closed = face_closure(x, complement.iter().copied());
    // Y as its own simplicial set: collapse everything outside it that is not a face of Y
    let outside: HashSet<Nd> = comp_closed.into_iter().filter(|n| !y.contains(n)).collect();
    let q = quotient(x, &outside)?;
    let maps = elems
        .iter()
        .map(|&e| {
            SimpMap::from_fn(q.keyed.set(), |nd| match q.keyed.key(nd) {
                None => Simp::base(nd.0),
                Some(&orig) => q.projection.apply(&a.act(e, &Simp::nondeg(orig))),
            })
        })
        .collect();
    let act = GroupAction { group: Arc::new(sub), maps };
    act.check(q.keyed.set())?;
    let orbits = HomotopyOrbits::new(q.keyed.set(), &act, bound)?;
    Ok((orbits, q, act))
}

impl<K: Clone + Eq + Hash> Keyed<K> {
    pub fn set(&self) -> &SimpSet {
        &self.set
    }
}

/// Ordered simplicial complex on vertices 0..v as a simplicial set with a disjoint basepoint.
pub fn simplicial_complex(faces: &[Vec<u8>]) -> Result<Keyed<Vec<u8>>, SimpError> {
    let mut all: HashSet<Vec<u8>> = HashSet::new();
    for f in faces {
        let mut f = f.clone();
        f.sort_unstable();
        f.dedup();
        let k = f.len();
        for mask in 1u32..(1 << k) {
            all.insert((0..k).filter(|i| mask & (1 << i) != 0).map(|i| f[i]).collect());
        }
    }
    let top = all.iter().map(|f| f.len()).max().unwrap_or(1) - 1;
    let mut levels: Vec<Vec<Vec<u8>>> = vec![vec![]; top + 1];
    let mut sorted: Vec<Vec<u8>> = all.into_iter().collect();
    sorted.sort();
    for f in sorted {
        levels[f.len() - 1].push(f);
    }
    Keyed::build(
        levels,
        |f| format!("{f:?}"),
        |f, k, j| {
            let mut g = f.clone();
            g.remove(j);
            Some(((0..k as u8).collect(), g))
        },
    )
}

/// Random finite pointed simplicial set: a random ordered complex on at most
/// five vertices with a random subcomplex collapsed, optionally wedged with S^σ.
pub fn random_simpset<R: Rng>(rng: &mut R, max_cells: usize) -> SimpSet {
    loop {
        let nv = rng.gen_range(1..=5u8);
        let nfaces = rng.gen_range(1..=4);
        let mut faces = Vec::new();
        for _ in 0..nfaces {
            let dim = rng.gen_range(0..=2.min(nv as usize - 1));
            let mut f: Vec<u8> = (0..nv).collect();
            while f.len() > dim + 1 {
                let i = rng.gen_range(0..f.len());
                f.remove(i);
            }
            faces.push(f);
        }
        let Ok(k) = simplicial_complex(&faces) else { continue };
        let cells: Vec<Nd> = k.set.nds().filter(|&n| n != BASE).collect();
        let mut chosen = vec![cells[rng.gen_range(0..cells.len())]];
        for &c in &cells {
            if rng.gen_bool(0.2) {
                chosen.push(c);
            }
        }
        let sub = if rng.gen_bool(0.2) { HashSet::new() } else { face_closure(&k.set, chosen) };
        let Ok(q) = quotient(&k.set, &sub) else { continue };
        let mut x = q.keyed.set;
        if rng.gen_bool(0.25) {
            match Wedge::new(&[x.clone(), circle_ssigma()]) {
                Ok(w) => x = w.keyed.set,
                Err(_) => continue,
            }
        }
        if x.nondegenerate_total() <= max_cells {
            return x;
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellJson {
    pub label: String,
    /// faces as (degree, index, surjection)
    pub faces: Vec<(usize, usize, Vec<u8>)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimpSetJson {
    pub degrees: Vec<Vec<CellJson>>,
}

impl SimpSetJson {
    pub fn from_set(x: &SimpSet) -> Self {
        SimpSetJson {
            degrees: x
                .cells
                .iter()
                .map(|cs| {
                    cs.iter()
                        .map(|c| CellJson {
                            label: c.label.clone(),
                            faces: c.faces.iter().map(|f| (f.nd.0, f.nd.1, f.sigma.clone())).collect(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_set(&self) -> Result<SimpSet, SimpError> {
        let x = SimpSet {
            cells: self
                .degrees
                .iter()
                .map(|cs| {
                    cs.iter()
                        .map(|c| Cell {
                            label: c.label.clone(),
                            faces: c.faces.iter().map(|(d, i, s)| Simp { nd: (*d, *i), sigma: s.clone() }).collect(),
                        })
                        .collect()
                })
                .collect(),
        };
        x.check_identities()?;
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::{homology, Coeff, HomologyGroup};
    use num_bigint::BigInt;

    fn reduced(x: &SimpSet) -> Vec<HomologyGroup> {
        homology(&x.normalized_chains(), Coeff::Z)
    }

    fn concentrated(hs: &[HomologyGroup], deg: usize) -> bool {
        hs.iter().all(|h| if h.degree == deg { h.rank == 1 && h.torsion.is_empty() } else { h.is_zero() })
    }

    #[test]
    fn surjection_counts() {
        assert_eq!(surjections(3, 1).len(), 3);
        assert_eq!(surjections(4, 2).len(), 6);
        assert_eq!(surjections(2, 2).len(), 1);
    }

    #[test]
    fn circles_match_table() {
        let s1 = circle_s1();
        s1.check_identities_full(4).unwrap();
        assert_eq!((s1.count(0), s1.count(1)), (1, 1));
        let ss = circle_ssigma();
        ss.check_identities_full(4).unwrap();
        assert_eq!((ss.count(0), ss.count(1)), (2, 2));
        for cell in [SS_PLUS, SS_MINUS] {
            for n in 1..6 {
                for i in 1..=n {
                    let s = circle_simplex(cell, i, n);
                    for j in 0..=n {
                        let f = ss.face(&s, j);
                        if j == 0 && i == 1 {
                            assert_eq!(f.nd, SS_STAR);
                        } else if j == i && i == n {
                            assert!(f.is_base());
                        } else if j < i {
                            assert_eq!((f.nd, circle_index(&f)), (cell, Some(i - 1)));
                        } else {
                            assert_eq!((f.nd, circle_index(&f)), (cell, Some(i)));
                        }
                    }
                    for j in 0..=n {
                        let d = s.degen(j);
                        let want = if j < i { i + 1 } else { i };
                        assert_eq!(circle_index(&d), Some(want));
                    }
                }
            }
        }
        ssigma_action().check(&ss).unwrap();
        let h = reduced(&ss);
        assert!(concentrated(&h, 1));
    }

    #[test]
    fn smash_examples() {
        let s1 = circle_s1();
        let p = Smash::new(&s1, &SimpSet::point()).unwrap();
        assert_eq!(p.set().nondegenerate_total(), 1);
        let s = Smash::new(&s1, &s1).unwrap();
        s.set().check_identities_full(3).unwrap();
        assert!(concentrated(&reduced(s.set()), 2));
        let t = Smash::new(&circle_ssigma(), &s1).unwrap();
        t.set().check_identities().unwrap();
        assert!(concentrated(&reduced(t.set()), 2));
    }

    #[test]
    fn join_examples() {
        let j = Join::new(&s0(), &s0()).unwrap();
        assert_eq!(j.set().count(1), 1);
        assert!(concentrated(&reduced(j.set()), 1));
        let p = Join::new(&SimpSet::point(), &circle_s1()).unwrap();
        assert_eq!(p.set().nondegenerate_total(), 1);
        let s = Join::new(&circle_s1(), &circle_s1()).unwrap();
        s.set().check_identities_full(4).unwrap();
        assert!(concentrated(&reduced(s.set()), 3));
    }

    #[test]
    fn subdivision_examples() {
        let p = Subdivision::new(&SimpSet::point()).unwrap();
        assert_eq!(p.set().nondegenerate_total(), 1);
        let s = Subdivision::new(&circle_s1()).unwrap();
        s.set().check_identities_full(2).unwrap();
        assert!(concentrated(&reduced(s.set()), 1));
        let s2 = Subdivision::new(&sphere(2)).unwrap();
        s2.set().check_identities().unwrap();
        assert!(concentrated(&reduced(s2.set()), 2));
        let ss = Subdivision::new(&circle_ssigma()).unwrap();
        assert!(concentrated(&reduced(ss.set()), 1));
    }

    #[test]
    fn quotient_examples() {
        let x = Smash::new(&circle_s1(), &circle_s1()).unwrap().keyed.set;
        let all: HashSet<Nd> = x.nds().filter(|&n| n != BASE).collect();
        assert_eq!(quotient(&x, &all).unwrap().keyed.set.nondegenerate_total(), 1);
        let same = quotient(&x, &HashSet::new()).unwrap();
        assert_eq!(same.keyed.set, x);
        let bad: HashSet<Nd> = [(2, 0)].into_iter().collect();
        let sphere2 = sphere(2);
        assert!(quotient(&sphere2, &bad).is_ok());
        let k = simplicial_complex(&[vec![0, 1]]).unwrap();
        let edge: HashSet<Nd> = [k.index[&vec![0, 1]]].into_iter().collect();
        assert!(matches!(quotient(&k.set, &edge), Err(SimpError::NotSubcomplex(_))));
    }

    #[test]
    fn smash_to_join_low_degree() {
        let x = s0();
        let st = smash_to_join(&x, &x).unwrap();
        st.map.check(st.source.set(), st.join.set()).unwrap();
        // (1, s0 x0, s0 y0) ↦ (x0, y0)
        let xy = st.xy.pair(&Simp::nondeg((0, 1)), &Simp::nondeg((0, 1)));
        let src = st.source.pair(&circle_simplex((1, 0), 1, 1), &xy.degen(0));
        let img = st.map.apply(&src);
        assert!(img.is_nondegenerate() && st.join.keyed.key(img.nd) == Some(&((0, 1), (0, 1))));
    }

    #[test]
    fn smash_to_join_circles() {
        let s1 = circle_s1();
        let st = smash_to_join(&s1, &s1).unwrap();
        st.map.check(st.source.set(), st.join.set()).unwrap();
        let cs = st.source.set().normalized_chains();
        let ct = st.join.set().normalized_chains();
        let f = st.map.chain_map(st.source.set());
        f.check(&cs, &ct).unwrap();
        let hs = crate::homology::HomologyData::new(&cs, Coeff::Z);
        let ht = crate::homology::HomologyData::new(&ct, Coeff::Z);
        let m = crate::homology::induced_homology(&f, &hs, &ht, 3, ct.rank(3));
        assert_eq!(m.len(), 1);
        assert_eq!(m[0][0].magnitude(), BigInt::from(1).magnitude());
    }

    #[test]
    fn gamma_has_degree_two() {
        let g = gamma().unwrap();
        g.map.check(g.source.set(), g.target.set()).unwrap();
        let a = circle_simplex(SS_PLUS, 1, 2);
        let b = circle_simplex(SS_MINUS, 2, 2);
        let (u, v) = gamma_simplex(&a, &b).unwrap();
        assert_eq!((u.nd, circle_index(&u)), (SS_MINUS, Some(1)));
        assert_eq!(circle_index(&v), Some(2));
        let star = Simp::nondeg(SS_STAR);
        assert!(g.map.apply(&g.source.pair(&star, &star)).is_base());
        let cs = g.source.set().normalized_chains();
        let ct = g.target.set().normalized_chains();
        let f = g.map.chain_map(g.source.set());
        let hs = crate::homology::HomologyData::new(&cs, Coeff::Z);
        let ht = crate::homology::HomologyData::new(&ct, Coeff::Z);
        let m = crate::homology::induced_homology(&f, &hs, &ht, 2, ct.rank(2));
        assert_eq!(m[0][0].magnitude(), BigInt::from(2).magnitude());
    }

    #[test]
    fn homotopy_orbits_of_spheres() {
        let z2 = Arc::new(FiniteGroup::z2_sign());
        let x = s0();
        let a = GroupAction::trivial(z2.clone(), &x);
        let o = HomotopyOrbits::new(&x, &a, 5).unwrap();
        o.set().check_identities().unwrap();
        let h = reduced(o.set());
        assert_eq!(h[0].rank, 1);
        assert_eq!(h[1].torsion, vec![BigInt::from(2)]);
        assert!(h[2].is_zero());
        assert_eq!(h[3].torsion, vec![BigInt::from(2)]);
        assert!(h[4].is_zero());
        let ss = circle_ssigma();
        let o = HomotopyOrbits::new(&ss, &ssigma_action(), 5).unwrap();
        let h = reduced(o.set());
        assert!(h[0].is_zero());
        assert_eq!(h[1].torsion, vec![BigInt::from(2)]);
        assert!(h[2].is_zero());
        assert_eq!(h[3].torsion, vec![BigInt::from(2)]);
        let hz = homology(&o.set().normalized_chains(), Coeff::Zhalf);
        assert!(hz[..5].iter().all(|g| g.is_zero()));
        let p = HomotopyOrbits::new(&SimpSet::point(), &GroupAction::trivial(z2, &SimpSet::point()), 4).unwrap();
        assert_eq!(p.set().nondegenerate_total(), 1);
    }

    #[test]
    fn orbit_chain_model_agrees_with_diagonal() {
        let ss = circle_ssigma();
        let a = ssigma_action();
        let oc = orbit_chains(&ss, &a, 6);
        oc.complex.check_d2().unwrap();
        let h1 = homology(&oc.complex, Coeff::Z);
        let h2 = reduced(HomotopyOrbits::new(&ss, &a, 6).unwrap().set());
        assert_eq!(h1[..6], h2[..6]);
    }

    #[test]
    fn json_roundtrip() {
        let x = Join::new(&circle_ssigma(), &s0()).unwrap().keyed.set;
        let j = serde_json::to_string(&SimpSetJson::from_set(&x)).unwrap();
        let y: SimpSetJson = serde_json::from_str(&j).unwrap();
        assert_eq!(y.to_set().unwrap(), x);
    }
}
