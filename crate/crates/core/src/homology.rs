//! Integer chain complexes, Smith normal form, homology with generators and
//! coordinates, induced maps, cube total complexes and their filtration
//! spectral sequence.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

/// Sparse column: (row, coefficient), sorted by row, no zeros.
pub type SparseCol = Vec<(usize, i64)>;
pub type IntMatrix = Vec<Vec<BigInt>>;

#[derive(Debug, Error, PartialEq)]
pub enum HomError {
    #[error("boundary squared is nonzero in degree {0}")]
    NonZeroSquare(usize),
    #[error("chain map does not commute with boundaries in degree {0}")]
    NotChainMap(usize),
    #[error("square in directions ({i}, {j}) at vertex {vertex} does not commute")]
    NonCommutingSquare { vertex: usize, i: usize, j: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coeff {
    Z,
    Zhalf,
    Q,
}

impl FromStr for Coeff {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "z" => Ok(Coeff::Z),
            "zhalf" => Ok(Coeff::Zhalf),
            "q" => Ok(Coeff::Q),
            other => Err(format!("unknown coefficient ring {other:?} (expected z, zhalf or q)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainComplex {
    pub ranks: Vec<usize>,
    /// bd[k][x] is the boundary of generator x in degree k.
    pub bd: Vec<Vec<SparseCol>>,
    pub labels: Option<Vec<Vec<String>>>,
}

pub fn normalize_col(mut entries: Vec<(usize, i64)>) -> SparseCol {
    entries.sort_unstable_by_key(|e| e.0);
    let mut out: SparseCol = Vec::with_capacity(entries.len());
    for (r, v) in entries {
        match out.last_mut() {
            Some(last) if last.0 == r => last.1 += v,
            _ => out.push((r, v)),
        }
    }
    out.retain(|e| e.1 != 0);
    out
}

impl ChainComplex {
    pub fn new(ranks: Vec<usize>, mut bd: Vec<Vec<SparseCol>>) -> Self {
        bd.resize(ranks.len(), vec![]);
        for k in 0..ranks.len() {
            if bd[k].is_empty() {
                bd[k] = vec![vec![]; ranks[k]];
            }
            assert_eq!(bd[k].len(), ranks[k], "boundary column count in degree {k}");
        }
        ChainComplex { ranks, bd, labels: None }
    }

    pub fn zero() -> Self {
        ChainComplex::new(vec![], vec![])
    }

    pub fn top(&self) -> usize {
        self.ranks.len().saturating_sub(1)
    }

    pub fn rank(&self, k: usize) -> usize {
        self.ranks.get(k).copied().unwrap_or(0)
    }

    pub fn check_d2(&self) -> Result<(), HomError> {
        for k in 2..self.ranks.len() {
            for col in &self.bd[k] {
                let mut acc: HashMap<usize, i64> = HashMap::new();
                for &(y, c) in col {
                    for &(z, e) in &self.bd[k - 1][y] {
                        *acc.entry(z).or_insert(0) += c * e;
                    }
                }
                if acc.values().any(|&v| v != 0) {
                    return Err(HomError::NonZeroSquare(k));
                }
            }
        }
        Ok(())
    }

    pub fn boundary(&self, k: usize, chain: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); if k == 0 { 0 } else { self.rank(k - 1) }];
        if k == 0 {
            return out;
        }
        for (x, c) in chain.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for &(y, e) in &self.bd[k][x] {
                out[y] += c * e;
            }
        }
        out
    }

    pub fn dense_boundary(&self, k: usize) -> IntMatrix {
        let rows = if k == 0 { 0 } else { self.rank(k - 1) };
        let mut m = vec![vec![BigInt::zero(); self.rank(k)]; rows];
        if k > 0 {
            for (x, col) in self.bd[k].iter().enumerate() {
                for &(y, e) in col {
                    m[y][x] += e;
                }
            }
        }
        m
    }
}

/// A chain map given by the image of each generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMap {
    pub images: Vec<Vec<SparseCol>>,
}

impl ChainMap {
    pub fn identity(c: &ChainComplex) -> Self {
        ChainMap { images: c.ranks.iter().map(|&n| (0..n).map(|i| vec![(i, 1)]).collect()).collect() }
    }

    pub fn zero(c: &ChainComplex) -> Self {
        ChainMap { images: c.ranks.iter().map(|&n| vec![vec![]; n]).collect() }
    }

    pub fn image(&self, k: usize, x: usize) -> &[(usize, i64)] {
        self.images.get(k).map(|v| v[x].as_slice()).unwrap_or(&[])
    }

    pub fn apply(&self, k: usize, chain: &[BigInt], target_rank: usize) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); target_rank];
        for (x, c) in chain.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for &(y, e) in self.image(k, x) {
                out[y] += c * e;
            }
        }
        out
    }

    pub fn compose(&self, first: &ChainMap) -> ChainMap {
        let images = first
            .images
            .iter()
            .enumerate()
            .map(|(k, cols)| {
                cols.iter()
                    .map(|col| {
                        let mut e = Vec::new();
                        for &(y, c) in col {
                            for &(z, d) in self.image(k, y) {
                                e.push((z, c * d));
                            }
                        }
                        normalize_col(e)
                    })
                    .collect()
            })
            .collect();
        ChainMap { images }
    }

    pub fn check(&self, src: &ChainComplex, tgt: &ChainComplex) -> Result<(), HomError> {
        for k in 1..src.ranks.len() {
            for x in 0..src.rank(k) {
                let mut a = Vec::new();
                for &(y, c) in &src.bd[k][x] {
                    for &(z, d) in self.image(k - 1, y) {
                        a.push((z, c * d));
                    }
                }
                let mut b = Vec::new();
                for &(y, c) in self.image(k, x) {
                    if k < tgt.ranks.len() {
                        for &(z, d) in &tgt.bd[k][y] {
                            b.push((z, c * d));
                        }
                    }
                }
                if normalize_col(a) != normalize_col(b) {
                    return Err(HomError::NotChainMap(k));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomologyGroup {
    pub degree: usize,
    pub rank: usize,
    /// Elementary divisors > 1, each dividing the next.
    pub torsion: Vec<BigInt>,
}

impl serde::Serialize for HomologyGroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl HomologyGroup {
    pub fn zero(degree: usize) -> Self {
        HomologyGroup { degree, rank: 0, torsion: vec![] }
    }

    pub fn free(degree: usize, rank: usize) -> Self {
        HomologyGroup { degree, rank, torsion: vec![] }
    }

    pub fn is_zero(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }

    /// Power of the prime p dividing the order of the torsion subgroup.
    pub fn primary_order(&self, p: u64) -> u32 {
        let p = BigInt::from(p);
        let mut e = 0;
        for d in &self.torsion {
            let mut d = d.clone();
            while (&d % &p).is_zero() {
                d /= &p;
                e += 1;
            }
        }
        e
    }

    pub fn torsion_order(&self) -> BigInt {
        self.torsion.iter().fold(BigInt::one(), |a, b| a * b)
    }

    pub fn direct_sum(&self, other: &HomologyGroup) -> HomologyGroup {
        let mut all = self.torsion.clone();
        all.extend(other.torsion.iter().cloned());
        HomologyGroup { degree: self.degree, rank: self.rank + other.rank, torsion: invariant_factors(&all) }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let tors: Vec<serde_json::Value> = self
            .torsion
            .iter()
            .map(|d| match d.to_u64() {
                Some(v) => json!(v),
                None => json!(d.to_string()),
            })
            .collect();
        json!({"degree": self.degree, "rank": self.rank, "torsion": tors})
    }

    pub fn from_json(v: &serde_json::Value) -> Option<Self> {
        let degree = v.get("degree")?.as_u64()? as usize;
        let rank = v.get("rank")?.as_u64()? as usize;
        let torsion = v
            .get("torsion")?
            .as_array()?
            .iter()
            .map(|t| match t {
                serde_json::Value::Number(n) => n.as_u64().map(BigInt::from),
                serde_json::Value::String(s) => s.parse().ok(),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(HomologyGroup { degree, rank, torsion })
    }
}

impl fmt::Display for HomologyGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.rank > 0 {
            parts.push(if self.rank == 1 { "Z".to_string() } else { format!("Z^{}", self.rank) });
        }
        for d in &self.torsion {
            parts.push(format!("Z/{d}"));
        }
        if parts.is_empty() {
            write!(f, "H{} = 0", self.degree)
        } else {
            write!(f, "H{} = {}", self.degree, parts.join(" + "))
        }
    }
}

pub fn homology_json(hs: &[HomologyGroup]) -> serde_json::Value {
    serde_json::Value::Array(hs.iter().map(|h| h.to_json()).collect())
}

fn small_primes_of(n: &BigInt) -> Vec<(BigInt, u32)> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut p = BigInt::from(2);
    while &p * &p <= n {
        let mut e = 0;
        while (&n % &p).is_zero() {
            n /= &p;
            e += 1;
        }
        if e > 0 {
            out.push((p.clone(), e));
        }
        p += 1;
    }
    if n > BigInt::one() {
        out.push((n, 1));
    }
    out
}

/// Invariant factors d1 | d2 | ... of a direct sum of cyclic groups.
pub fn invariant_factors(orders: &[BigInt]) -> Vec<BigInt> {
    let mut by_prime: BTreeMap<BigInt, Vec<u32>> = BTreeMap::new();
    for d in orders {
        for (p, e) in small_primes_of(d) {
            by_prime.entry(p).or_default().push(e);
        }
    }
    let len = by_prime.values().map(|v| v.len()).max().unwrap_or(0);
    let mut out = vec![BigInt::one(); len];
    for (p, mut es) in by_prime {
        es.sort_unstable();
        let off = len - es.len();
        for (i, e) in es.into_iter().enumerate() {
            out[off + i] *= num_traits::pow(p.clone(), e as usize);
        }
    }
    out.retain(|d| !d.is_one());
    out
}

fn strip_twos(d: &BigInt) -> BigInt {
    let mut d = d.clone();
    while d.is_even() && !d.is_zero() {
        d /= 2;
    }
    d
}

/// Smith normal form with transforms: left * m * right = diag(divisors, 0...).
#[derive(Debug, Clone)]
pub struct Smith {
    pub divisors: Vec<BigInt>,
    pub left: IntMatrix,
    pub left_inv: IntMatrix,
    pub right: IntMatrix,
    pub right_inv: IntMatrix,
}

fn ident(n: usize) -> IntMatrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect()
}

pub fn smith(m: &IntMatrix, ncols: usize) -> Smith {
    smith_impl(m, ncols, true, true)
}

/// Smith form with only the row transforms (right and right_inv left empty).
pub fn smith_left(m: &IntMatrix, ncols: usize) -> Smith {
    smith_impl(m, ncols, true, false)
}

/// Smith form with only the column transforms (left and left_inv left empty).
pub fn smith_right(m: &IntMatrix, ncols: usize) -> Smith {
    smith_impl(m, ncols, false, true)
}

pub fn smith_divisors(m: &IntMatrix, ncols: usize) -> Vec<BigInt> {
    smith_impl(m, ncols, false, false).divisors
}

fn smith_impl(m: &IntMatrix, ncols: usize, lt: bool, rt: bool) -> Smith {
    let rows = m.len();
    let cols = ncols;
    let mut a = m.clone();
    let (mut l, mut li) = if lt { (ident(rows), ident(rows)) } else { (vec![], vec![]) };
    let (mut r, mut ri) = if rt { (ident(cols), ident(cols)) } else { (vec![], vec![]) };
    let mut divisors = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // minimal nonzero |entry| in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !a[i][j].is_zero() {
                    let better = match best {
                        None => true,
                        Some((bi, bj)) => a[i][j].abs() < a[bi][bj].abs(),
                    };
                    if better {
                        best = Some((i, j));
                        if a[i][j].abs().is_one() {
                            break;
                        }
                    }
                }
            }
            if let Some((bi, bj)) = best {
                if a[bi][bj].abs().is_one() {
                    break;
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        if pi != t {
            a.swap(pi, t);
            if lt {
                l.swap(pi, t);
                for row in li.iter_mut() {
                    row.swap(pi, t);
                }
            }
        }
        if pj != t {
            for row in a.iter_mut() {
                row.swap(pj, t);
            }
            if rt {
                for row in r.iter_mut() {
                    row.swap(pj, t);
                }
                ri.swap(pj, t);
            }
        }
        loop {
            let mut clean = true;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let qt = a[i][t].div_floor(&a[t][t]);
                if !qt.is_zero() {
                    row_sub(&mut a, i, t, &qt, t);
                    if lt {
                        row_sub(&mut l, i, t, &qt, 0);
                        for row in li.iter_mut() {
                            let v = &row[i] * &qt;
                            row[t] += v;
                        }
                    }
                }
                if !a[i][t].is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let qt = a[t][j].div_floor(&a[t][t]);
                if !qt.is_zero() {
                    for row in a.iter_mut() {
                        let v = &row[t] * &qt;
                        row[j] -= v;
                    }
                    if rt {
                        for row in r.iter_mut() {
                            let v = &row[t] * &qt;
                            row[j] -= v;
                        }
                        row_add_scaled(&mut ri, t, j, &qt);
                    }
                }
                if !a[t][j].is_zero() {
                    clean = false;
                }
            }
            if clean && a[t][t].abs().is_one() {
                break;
            }
            if clean {
                // divisibility of the remaining block
                let mut bad = None;
                'outer: for i in t + 1..rows {
                    for j in t + 1..cols {
                        if !(&a[i][j] % &a[t][t]).is_zero() {
                            bad = Some(i);
                            break 'outer;
                        }
                    }
                }
                match bad {
                    None => break,
                    Some(i) => {
                        row_add_scaled(&mut a, t, i, &BigInt::one());
                        if lt {
                            row_add_scaled(&mut l, t, i, &BigInt::one());
                            for row in li.iter_mut() {
                                let v = row[t].clone();
                                row[i] -= v;
                            }
                        }
                    }
                }
            }
            // move the smallest entry of row/column t into the pivot
            let mut best = (t, t);
            for i in t..rows {
                if !a[i][t].is_zero() && a[i][t].abs() < a[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t..cols {
                if !a[t][j].is_zero() && a[t][j].abs() < a[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            if best.0 != t {
                a.swap(best.0, t);
                if lt {
                    l.swap(best.0, t);
                    for row in li.iter_mut() {
                        row.swap(best.0, t);
                    }
                }
            } else if best.1 != t {
                for row in a.iter_mut() {
                    row.swap(best.1, t);
                }
                if rt {
                    for row in r.iter_mut() {
                        row.swap(best.1, t);
                    }
                    ri.swap(best.1, t);
                }
            }
        }
        if a[t][t].is_negative() {
            for v in a[t].iter_mut() {
                *v = -v.clone();
            }
            if lt {
                for v in l[t].iter_mut() {
                    *v = -v.clone();
                }
                for row in li.iter_mut() {
                    row[t] = -row[t].clone();
                }
            }
        }
        divisors.push(a[t][t].clone());
        t += 1;
    }
    Smith { divisors, left: l, left_inv: li, right: r, right_inv: ri }
}

fn row_sub(a: &mut IntMatrix, i: usize, t: usize, q: &BigInt, from: usize) {
    let (ri, rt) = if i < t {
        let (lo, hi) = a.split_at_mut(t);
        (&mut lo[i], &hi[0])
    } else {
        let (lo, hi) = a.split_at_mut(i);
        (&mut hi[0], &lo[t])
    };
    for j in from..ri.len() {
        if !rt[j].is_zero() {
            ri[j] -= &rt[j] * q;
        }
    }
}

/// row i += q * row j
fn row_add_scaled(a: &mut IntMatrix, i: usize, j: usize, q: &BigInt) {
    if i == j {
        return;
    }
    let src = a[j].clone();
    for (x, s) in a[i].iter_mut().zip(src.iter()) {
        if !s.is_zero() {
            *x += s * q;
        }
    }
}

pub fn mat_mul_int(a: &IntMatrix, b: &IntMatrix, bcols: usize) -> IntMatrix {
    a.iter()
        .map(|row| {
            let mut out = vec![BigInt::zero(); bcols];
            for (k, x) in row.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                for (j, y) in b[k].iter().enumerate() {
                    if !y.is_zero() {
                        out[j] += x * y;
                    }
                }
            }
            out
        })
        .collect()
}

pub fn mat_vec_int(a: &IntMatrix, v: &[BigInt]) -> Vec<BigInt> {
    a.iter()
        .map(|row| row.iter().zip(v).filter(|(x, _)| !x.is_zero()).map(|(x, y)| x * y).sum())
        .collect()
}

#[derive(Debug, Clone)]
struct Elim {
    /// degree of a
    k: usize,
    a: usize,
    b: usize,
    u: i64,
    rest: SparseCol,
    /// (x, coefficient of b in the boundary of x) for the other cofaces of b
    row: Vec<(usize, i64)>,
}

/// Sparse reduction by unit pivots with the projection/inclusion logs needed to
/// transport cycles between the original and the reduced complex.
#[derive(Debug, Clone)]
pub struct Reduction {
    log: Vec<Elim>,
    /// alive[k] = surviving original generators in degree k
    pub alive: Vec<Vec<usize>>,
    pos: Vec<HashMap<usize, usize>>,
    pub reduced: ChainComplex,
    orig_ranks: Vec<usize>,
}

fn axpy_col(x: &SparseCol, f: i64, a: &SparseCol) -> Option<SparseCol> {
    let mut out = Vec::with_capacity(x.len() + a.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < a.len() {
        if j >= a.len() || (i < x.len() && x[i].0 < a[j].0) {
            out.push(x[i]);
            i += 1;
        } else if i >= x.len() || a[j].0 < x[i].0 {
            out.push((a[j].0, f.checked_mul(a[j].1)?));
            j += 1;
        } else {
            let v = x[i].1.checked_add(f.checked_mul(a[j].1)?)?;
            if v != 0 {
                out.push((x[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    Some(out)
}

fn coeff_of(col: &SparseCol, r: usize) -> i64 {
    match col.binary_search_by_key(&r, |e| e.0) {
        Ok(i) => col[i].1,
        Err(_) => 0,
    }
}

pub fn reduce(c: &ChainComplex) -> Reduction {
    let n = c.ranks.len();
    let mut cols = c.bd.clone();
    let mut alive: Vec<Vec<bool>> = c.ranks.iter().map(|&r| vec![true; r]).collect();
    // rows[k][b]: generators of degree k+1 whose boundary may contain b
    let mut rows: Vec<Vec<Vec<usize>>> = c.ranks.iter().map(|&r| vec![vec![]; r]).collect();
    for k in 1..n {
        for (x, col) in cols[k].iter().enumerate() {
            for &(b, _) in col {
                rows[k - 1][b].push(x);
            }
        }
    }
    let mut log = Vec::new();
    let mut overflow = false;
    for k in 1..n {
        for a in 0..c.ranks[k] {
            if !alive[k][a] || overflow {
                continue;
            }
            // unit pivot with the shortest coface list
            let mut best: Option<(usize, i64, usize)> = None;
            for &(b, v) in &cols[k][a] {
                if v.abs() == 1 && alive[k - 1][b] {
                    let cost = rows[k - 1][b].len();
                    if best.map_or(true, |(_, _, c0)| cost < c0) {
                        best = Some((b, v, cost));
                    }
                }
            }
            let Some((b, u, _)) = best else { continue };
            let pivot_col = cols[k][a].clone();
            let rest: SparseCol = pivot_col.iter().copied().filter(|e| e.0 != b).collect();
            let mut cands = std::mem::take(&mut rows[k - 1][b]);
            cands.sort_unstable();
            cands.dedup();
            let mut row = Vec::new();
            let mut updates = Vec::new();
            for &x in &cands {
                if x == a || !alive[k][x] {
                    continue;
                }
                let cx = coeff_of(&cols[k][x], b);
                if cx == 0 {
                    continue;
                }
                let f = match cx.checked_mul(u) {
                    Some(f) => -f,
                    None => {
                        overflow = true;
                        break;
                    }
                };
                match axpy_col(&cols[k][x], f, &pivot_col) {
                    Some(nc) => updates.push((x, nc)),
                    None => {
                        overflow = true;
                        break;
                    }
                }
                row.push((x, cx));
            }
            if overflow {
                rows[k - 1][b] = cands;
                break;
            }
            for (x, nc) in updates {
                for &(r, _) in &nc {
                    if coeff_of(&cols[k][x], r) == 0 {
                        rows[k - 1][r].push(x);
                    }
                }
                cols[k][x] = nc;
            }
            if k + 1 < n {
                let mut ys = std::mem::take(&mut rows[k][a]);
                ys.sort_unstable();
                ys.dedup();
                for y in ys {
                    if alive[k + 1][y] {
                        cols[k + 1][y].retain(|e| e.0 != a);
                    }
                }
            }
            alive[k][a] = false;
            alive[k - 1][b] = false;
            cols[k][a].clear();
            cols[k - 1][b].clear();
            log.push(Elim { k, a, b, u, rest, row });
        }
    }
    let alive_idx: Vec<Vec<usize>> =
        alive.iter().map(|al| al.iter().enumerate().filter(|e| *e.1).map(|e| e.0).collect()).collect();
    let pos: Vec<HashMap<usize, usize>> =
        alive_idx.iter().map(|v| v.iter().enumerate().map(|(i, &x)| (x, i)).collect()).collect();
    let mut bd = vec![vec![]; n];
    for k in 0..n {
        bd[k] = alive_idx[k]
            .iter()
            .map(|&x| {
                if k == 0 {
                    vec![]
                } else {
                    normalize_col(cols[k][x].iter().map(|&(r, v)| (pos[k - 1][&r], v)).collect())
                }
            })
            .collect();
    }
    let reduced = ChainComplex::new(alive_idx.iter().map(|v| v.len()).collect(), bd);
    Reduction { log, alive: alive_idx, pos, reduced, orig_ranks: c.ranks.clone() }
}

impl Reduction {
    /// Projection of an original degree-k chain to reduced coordinates.
    pub fn project(&self, k: usize, chain: &[BigInt]) -> Vec<BigInt> {
        let mut v = chain.to_vec();
        for e in &self.log {
            if e.k == k + 1 {
                if !v[e.b].is_zero() {
                    let coef = std::mem::take(&mut v[e.b]);
                    for &(t, rt) in &e.rest {
                        v[t] -= &coef * (e.u * rt);
                    }
                }
            } else if e.k == k {
                v[e.a] = BigInt::zero();
            }
        }
        self.alive[k].iter().map(|&x| v[x].clone()).collect()
    }

    /// Inclusion of a reduced degree-k chain into original coordinates.
    pub fn include(&self, k: usize, chain: &[BigInt]) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); self.orig_ranks[k]];
        for (i, c) in chain.iter().enumerate() {
            v[self.alive[k][i]] = c.clone();
        }
        for e in self.log.iter().rev() {
            if e.k == k {
                let s: BigInt = e.row.iter().filter(|(x, _)| !v[*x].is_zero()).map(|&(x, cx)| &v[x] * cx).sum();
                if !s.is_zero() {
                    v[e.a] -= s * e.u;
                }
            }
        }
        v
    }

    pub fn reduced_index(&self, k: usize, x: usize) -> Option<usize> {
        self.pos[k].get(&x).copied()
    }
}

/// A complex cut above degree `top`: degree top+1 is replaced by a basis of the
/// boundary lattice in degree top and higher degrees are dropped. Homology is
/// unchanged through degree top and vanishes above it.
#[derive(Debug, Clone)]
pub struct TopCut {
    pub top: usize,
    pub complex: ChainComplex,
    left: IntMatrix,
    divisors: Vec<BigInt>,
}

pub fn cut_above(c: &ChainComplex, top: usize) -> Result<TopCut, HomError> {
    let mut ranks: Vec<usize> = (0..=top).map(|k| c.rank(k)).collect();
    let mut bd: Vec<Vec<SparseCol>> = (0..=top).map(|k| c.bd.get(k).cloned().unwrap_or_default()).collect();
    let nt = c.rank(top);
    let m = if top + 1 < c.ranks.len() { c.dense_boundary(top + 1) } else { vec![vec![]; nt] };
    let s = smith_left(&m, c.rank(top + 1));
    let cols = (0..s.divisors.len())
        .map(|i| {
            (0..nt)
                .filter_map(|row| {
                    let v = &s.left_inv[row][i] * &s.divisors[i];
                    if v.is_zero() {
                        None
                    } else {
                        Some(v.to_i64().map(|x| (row, x)).ok_or(HomError::Shape("boundary lattice exceeds 64 bits".into())))
                    }
                })
                .collect::<Result<SparseCol, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    ranks.push(cols.len());
    bd.push(cols);
    Ok(TopCut { top, complex: ChainComplex::new(ranks, bd), left: s.left, divisors: s.divisors })
}

impl TopCut {
    /// The unique degree top+1 chain with the given boundary, if the boundary lies in the lattice.
    pub fn solve(&self, boundary: &[BigInt]) -> Option<Vec<BigInt>> {
        let w = mat_vec_int(&self.left, boundary);
        let r = self.divisors.len();
        if w[r..].iter().any(|x| !x.is_zero()) {
            return None;
        }
        (0..r)
            .map(|i| {
                let (q, rem) = w[i].div_rem(&self.divisors[i]);
                rem.is_zero().then_some(q)
            })
            .collect()
    }
}

/// Homology of one degree together with generators and a coordinate map.
#[derive(Debug, Clone)]
pub struct DegreeBasis {
    pub group: HomologyGroup,
    /// rows r.. of the inverse right transform of the outgoing boundary
    kernel_coords: IntMatrix,
    left2: IntMatrix,
    /// positions (in the SNF of the incoming boundary) kept as generators, with order (None = free)
    kept: Vec<(usize, Option<BigInt>)>,
    gens: Vec<Vec<BigInt>>,
}

#[derive(Debug, Clone)]
pub struct HomologyData {
    pub coeff: Coeff,
    pub reduction: Reduction,
    /// None for degrees that were not requested
    pub degrees: Vec<Option<DegreeBasis>>,
}

fn degree_basis(c: &ChainComplex, k: usize, coeff: Coeff) -> DegreeBasis {
    let nk = c.rank(k);
    let dk = c.dense_boundary(k);
    let s1 = smith_right(&dk, nk);
    let r = s1.divisors.len();
    let kernel_coords: IntMatrix = s1.right_inv[r..].to_vec();
    let z = nk - r;
    let next = if k + 1 < c.ranks.len() { c.dense_boundary(k + 1) } else { vec![vec![]; nk] };
    let nnext = c.rank(k + 1);
    let b = mat_mul_int(&kernel_coords, &next, nnext);
    let s2 = smith_left(&b, nnext);
    let rb = s2.divisors.len();
    let mut kept = Vec::new();
    let mut torsion = Vec::new();
    for (i, d) in s2.divisors.iter().enumerate() {
        let d = match coeff {
            Coeff::Z => d.clone(),
            Coeff::Zhalf => strip_twos(d),
            Coeff::Q => BigInt::one(),
        };
        if !d.is_one() {
            kept.push((i, Some(d.clone())));
            torsion.push(d);
        }
    }
    for i in rb..z {
        kept.push((i, None));
    }
    // generator i is Z * left2^{-1} e_i, with Z the kernel columns of right
    let gens = kept
        .iter()
        .map(|&(i, _)| {
            let col: Vec<BigInt> = (0..z).map(|t| s2.left_inv[t][i].clone()).collect();
            (0..nk)
                .map(|row| (0..z).map(|t| &s1.right[row][r + t] * &col[t]).sum())
                .collect()
        })
        .collect();
    let mut torsion = invariant_factors(&torsion);
    torsion.sort();
    DegreeBasis {
        group: HomologyGroup { degree: k, rank: z - rb, torsion },
        kernel_coords,
        left2: s2.left,
        kept,
        gens,
    }
}

impl HomologyData {
    pub fn new(c: &ChainComplex, coeff: Coeff) -> Self {
        let all: Vec<usize> = (0..c.ranks.len()).collect();
        Self::in_degrees(c, coeff, &all)
    }

    /// Generators and coordinates only in the listed degrees.
    pub fn in_degrees(c: &ChainComplex, coeff: Coeff, ks: &[usize]) -> Self {
        let reduction = reduce(c);
        let degrees = (0..c.ranks.len())
            .map(|k| ks.contains(&k).then(|| degree_basis(&reduction.reduced, k, coeff)))
            .collect();
        HomologyData { coeff, reduction, degrees }
    }

    fn basis(&self, k: usize) -> Option<&DegreeBasis> {
        self.degrees.get(k).and_then(|d| d.as_ref())
    }

    pub fn group(&self, k: usize) -> Option<&HomologyGroup> {
        self.basis(k).map(|d| &d.group)
    }

    /// Groups of all computed degrees; panics if some degree was skipped.
    pub fn groups(&self) -> Vec<HomologyGroup> {
        self.degrees.iter().map(|d| d.as_ref().expect("degree not computed").group.clone()).collect()
    }

    pub fn ngens(&self, k: usize) -> usize {
        self.basis(k).map_or(0, |d| d.kept.len())
    }

    /// Orders of the generators in degree k (None for free generators).
    pub fn gen_orders(&self, k: usize) -> Vec<Option<BigInt>> {
        self.basis(k).map_or(vec![], |d| d.kept.iter().map(|e| e.1.clone()).collect())
    }

    /// Representative cycle of generator i in original coordinates.
    pub fn representative(&self, k: usize, i: usize) -> Vec<BigInt> {
        self.reduction.include(k, &self.basis(k).expect("degree not computed").gens[i])
    }

    /// Coordinates of an original-coordinate cycle in the generator basis
    /// (torsion coordinates reduced modulo their order).
    pub fn coordinates(&self, k: usize, cycle: &[BigInt]) -> Vec<BigInt> {
        let Some(db) = self.basis(k) else { return vec![] };
        let v = self.reduction.project(k, cycle);
        let y = mat_vec_int(&db.kernel_coords, &v);
        let w = mat_vec_int(&db.left2, &y);
        db.kept
            .iter()
            .map(|(i, ord)| match ord {
                Some(d) => w[*i].mod_floor(d),
                None => w[*i].clone(),
            })
            .collect()
    }

    pub fn is_boundary(&self, k: usize, cycle: &[BigInt]) -> bool {
        self.coordinates(k, cycle).iter().all(|x| x.is_zero())
    }
}

pub fn homology(c: &ChainComplex, coeff: Coeff) -> Vec<HomologyGroup> {
    let red = reduce(c);
    let rc = &red.reduced;
    let mut divs: Vec<Vec<BigInt>> = Vec::with_capacity(rc.ranks.len() + 1);
    for k in 0..rc.ranks.len() {
        divs.push(smith_divisors(&rc.dense_boundary(k), rc.rank(k)));
    }
    divs.push(vec![]);
    (0..rc.ranks.len())
        .map(|k| {
            let z = rc.rank(k) - divs[k].len();
            let incoming = &divs[k + 1];
            let rank = z - incoming.len();
            let torsion: Vec<BigInt> = match coeff {
                Coeff::Z => incoming.iter().filter(|d| !d.is_one()).cloned().collect(),
                Coeff::Zhalf => incoming.iter().map(strip_twos).filter(|d| !d.is_one()).collect(),
                Coeff::Q => vec![],
            };
            HomologyGroup { degree: k, rank, torsion }
        })
        .collect()
}

/// Matrix of the induced map H_k(src) -> H_k(tgt) in the generator bases.
pub fn induced_homology(f: &ChainMap, src: &HomologyData, tgt: &HomologyData, k: usize, tgt_rank: usize) -> IntMatrix {
    let ns = src.ngens(k);
    let nt = tgt.ngens(k);
    let mut m = vec![vec![BigInt::zero(); ns]; nt];
    for i in 0..ns {
        let rep = src.representative(k, i);
        let img = f.apply(k, &rep, tgt_rank);
        for (j, c) in tgt.coordinates(k, &img).into_iter().enumerate() {
            m[j][i] = c;
        }
    }
    m
}

/// A commuting cube of chain complexes. Vertex v is a bitmask; bit j set means
/// coordinate j equals 1. edges[v][j] is the map v -> v | (1 << j) for bit j unset.
#[derive(Debug, Clone)]
pub struct CubeDiagram {
    pub dim: usize,
    pub vertices: Vec<ChainComplex>,
    pub edges: Vec<Vec<Option<ChainMap>>>,
}

impl CubeDiagram {
    pub fn new(dim: usize, vertices: Vec<ChainComplex>) -> Self {
        assert_eq!(vertices.len(), 1 << dim);
        CubeDiagram { dim, edges: vec![vec![None; dim]; 1 << dim], vertices }
    }

    pub fn set_edge(&mut self, v: usize, j: usize, f: ChainMap) {
        assert_eq!(v & (1 << j), 0);
        self.edges[v][j] = Some(f);
    }

    pub fn edge(&self, v: usize, j: usize) -> &ChainMap {
        self.edges[v][j].as_ref().expect("missing cube edge")
    }

    pub fn zeros(&self, v: usize) -> usize {
        self.dim - (v.count_ones() as usize)
    }

    pub fn check(&self) -> Result<(), HomError> {
        for v in 0..1usize << self.dim {
            for j in 0..self.dim {
                if v & (1 << j) == 0 {
                    let f = self.edges[v][j].as_ref().ok_or_else(|| HomError::Shape(format!("missing edge {v},{j}")))?;
                    f.check(&self.vertices[v], &self.vertices[v | (1 << j)])?;
                }
            }
            for i in 0..self.dim {
                for j in i + 1..self.dim {
                    if v & (1 << i) != 0 || v & (1 << j) != 0 {
                        continue;
                    }
                    let a = self.edge(v | (1 << i), j).compose(self.edge(v, i));
                    let b = self.edge(v | (1 << j), i).compose(self.edge(v, j));
                    if a != b {
                        return Err(HomError::NonCommutingSquare { vertex: v, i, j });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn top_degree(&self) -> usize {
        self.vertices.iter().map(|c| c.ranks.len()).max().unwrap_or(0) + self.dim
    }
}

/// Index of total-complex generators: (vertex, internal degree, generator) per total degree.
#[derive(Debug, Clone)]
pub struct TotalComplex {
    pub complex: ChainComplex,
    /// gens[n][i] = (vertex, internal degree q, generator index)
    pub gens: Vec<Vec<(usize, usize, usize)>>,
    /// filtration degree (number of zero coordinates) per generator
    pub filtration: Vec<Vec<usize>>,
}

pub fn total_complex(d: &CubeDiagram) -> Result<TotalComplex, HomError> {
    d.check()?;
    let top = d.top_degree();
    let mut gens: Vec<Vec<(usize, usize, usize)>> = vec![vec![]; top];
    let mut index: HashMap<(usize, usize, usize), usize> = HashMap::new();
    for v in 0..1usize << d.dim {
        let shift = d.zeros(v);
        for (q, &r) in d.vertices[v].ranks.iter().enumerate() {
            for x in 0..r {
                let n = q + shift;
                index.insert((v, q, x), gens[n].len());
                gens[n].push((v, q, x));
            }
        }
    }
    while gens.len() > 1 && gens.last().map_or(false, |g| g.is_empty()) {
        gens.pop();
    }
    let mut bd: Vec<Vec<SparseCol>> = vec![vec![]; gens.len()];
    for n in 1..gens.len() {
        bd[n] = gens[n]
            .iter()
            .map(|&(v, q, x)| {
                let mut col = Vec::new();
                let s = if d.zeros(v) % 2 == 0 { 1 } else { -1 };
                if q > 0 {
                    for &(y, c) in &d.vertices[v].bd[q][x] {
                        col.push((index[&(v, q - 1, y)], s * c));
                    }
                }
                for j in 0..d.dim {
                    if v & (1 << j) != 0 {
                        continue;
                    }
                    let w = v | (1 << j);
                    let kappa = if (v & ((1 << j) - 1)).count_ones() % 2 == 0 { 1 } else { -1 };
                    for &(y, c) in d.edge(v, j).image(q, x) {
                        col.push((index[&(w, q, y)], kappa * c));
                    }
                }
                normalize_col(col)
            })
            .collect();
    }
    let ranks = gens.iter().map(|g| g.len()).collect();
    let complex = ChainComplex::new(ranks, bd);
    let filtration = gens.iter().map(|g| g.iter().map(|&(v, _, _)| d.zeros(v)).collect()).collect();
    Ok(TotalComplex { complex, gens, filtration })
}

/// One page of the filtration spectral sequence, computed integrally.
#[derive(Debug, Clone)]
pub struct SSPage {
    pub r: usize,
    /// entries[(p, q)]
    pub entries: BTreeMap<(usize, usize), HomologyGroup>,
}

impl SSPage {
    pub fn total(&self, n: usize) -> Vec<&HomologyGroup> {
        self.entries.iter().filter(|((p, q), _)| p + q == n).map(|(_, h)| h).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.values().all(|h| h.is_zero())
    }
}

/// Integer kernel basis (as columns) of the map given by the dense matrix m (rows x ncols).
fn kernel_basis(m: &IntMatrix, ncols: usize) -> IntMatrix {
    let s = smith(m, ncols);
    let r = s.divisors.len();
    (r..ncols).map(|j| (0..ncols).map(|i| s.right[i][j].clone()).collect()).collect()
}

/// Quotient of the lattice spanned by `basis` (independent vectors) by the
/// sublattice spanned by `sub` (vectors lying in it), as an abstract group.
fn lattice_quotient(basis: &IntMatrix, sub: &IntMatrix, degree: usize) -> HomologyGroup {
    let z = basis.len();
    if z == 0 {
        return HomologyGroup::zero(degree);
    }
    let n = basis[0].len();
    // coordinates via the Smith form of the basis matrix (n x z)
    let bm: IntMatrix = (0..n).map(|i| (0..z).map(|j| basis[j][i].clone()).collect()).collect();
    let s = smith(&bm, z);
    // L bm R = D, so bm^{-1} v = R D^{-1} (L v)
    let coords: IntMatrix = sub
        .iter()
        .map(|v| {
            let lv = mat_vec_int(&s.left, v);
            let dv: Vec<BigInt> = (0..z).map(|i| &lv[i] / &s.divisors[i]).collect();
            mat_vec_int(&s.right, &dv)
        })
        .collect();
    let cm: IntMatrix = (0..z).map(|i| coords.iter().map(|c| c[i].clone()).collect()).collect();
    let d = smith_divisors(&cm, coords.len());
    HomologyGroup {
        degree,
        rank: z - d.len(),
        torsion: d.into_iter().filter(|x| !x.is_one()).collect(),
    }
}

/// Pages E^1 .. E^{dim+1} of the spectral sequence of the filtration by the
/// number of zero coordinates, via E^r_p = Z^r_p / (Z^{r-1}_{p-1} + D Z^{r-1}_{p+r-1}).
pub fn cube_ss(d: &CubeDiagram) -> Result<Vec<SSPage>, HomError> {
    cube_ss_limited(d, usize::MAX, d.dim + 1)
}

/// Pages E^1 .. E^{max_page} in total degrees up to max_total.
pub fn cube_ss_limited(d: &CubeDiagram, max_total: usize, max_page: usize) -> Result<Vec<SSPage>, HomError> {
    let tot = total_complex(d)?;
    let c = &tot.complex;
    let maxp = d.dim;
    let nt = c.ranks.len();
    // z(r, p, n): basis of {x in F_p Tot_n : Dx in F_{p-r}}; F_{-1} = 0
    let zbasis = |r: usize, p: isize, n: usize| -> IntMatrix {
        if p < 0 || n >= nt {
            return vec![];
        }
        let p = p as usize;
        let fil = &tot.filtration[n];
        let cols: Vec<usize> = (0..c.rank(n)).filter(|&x| fil[x] <= p).collect();
        let lower = p as isize - r as isize;
        let rows: Vec<usize> = if n == 0 {
            vec![]
        } else {
            (0..c.rank(n - 1)).filter(|&y| (tot.filtration[n - 1][y] as isize) > lower).collect()
        };
        let rpos: HashMap<usize, usize> = rows.iter().enumerate().map(|(i, &y)| (y, i)).collect();
        let mut m = vec![vec![BigInt::zero(); cols.len()]; rows.len()];
        for (j, &x) in cols.iter().enumerate() {
            if n > 0 {
                for &(y, v) in &c.bd[n][x] {
                    if let Some(&i) = rpos.get(&y) {
                        m[i][j] += v;
                    }
                }
            }
        }
        kernel_basis(&m, cols.len())
            .into_iter()
            .map(|kv| {
                let mut full = vec![BigInt::zero(); c.rank(n)];
                for (j, &x) in cols.iter().enumerate() {
                    full[x] = kv[j].clone();
                }
                full
            })
            .collect()
    };
    let mut pages = Vec::new();
    for r in 1..=max_page.min(maxp + 1) {
        let mut entries = BTreeMap::new();
        for n in 0..nt.min(max_total.saturating_add(1)) {
            for p in 0..=maxp.min(n) {
                let zr = zbasis(r, p as isize, n);
                let mut sub = zbasis(r - 1, p as isize - 1, n);
                for v in zbasis(r - 1, (p + r - 1) as isize, n + 1) {
                    sub.push(c.boundary(n + 1, &v));
                }
                entries.insert((p, n - p), lattice_quotient(&zr, &sub, n - p));
            }
        }
        pages.push(SSPage { r, entries });
    }
    Ok(pages)
}

/// E^1 entries computed directly from vertex homology.
pub fn cube_e1(d: &CubeDiagram, coeff: Coeff) -> BTreeMap<(usize, usize), HomologyGroup> {
    let mut out: BTreeMap<(usize, usize), HomologyGroup> = BTreeMap::new();
    for v in 0..1usize << d.dim {
        let p = d.zeros(v);
        for h in homology(&d.vertices[v], coeff) {
            let q = h.degree;
            let e = out.entry((p, q)).or_insert_with(|| HomologyGroup::zero(q));
            *e = e.direct_sum(&h);
        }
    }
    out
}

/// A basis of the lattice spanned by the given vectors of length n.
fn span_basis(vs: &IntMatrix, n: usize) -> IntMatrix {
    if vs.is_empty() {
        return vec![];
    }
    let m: IntMatrix = (0..n).map(|i| vs.iter().map(|v| v[i].clone()).collect()).collect();
    let s = smith_left(&m, vs.len());
    (0..s.divisors.len()).map(|j| (0..n).map(|i| &s.left_inv[i][j] * &s.divisors[j]).collect()).collect()
}

/// Graded pieces F_p H_n / F_{p-1} H_n of the filtration of H_n(Tot) by the
/// number of zero coordinates, computed directly from cycles and boundaries.
pub fn filtered_homology(t: &TotalComplex, n: usize) -> Vec<HomologyGroup> {
    let c = &t.complex;
    let nn = c.rank(n);
    let maxp = t.filtration.iter().flatten().copied().max().unwrap_or(0);
    let bds: IntMatrix = if n + 1 < c.ranks.len() {
        (0..c.rank(n + 1))
            .map(|x| {
                let mut e = vec![BigInt::zero(); c.rank(n + 1)];
                e[x] = BigInt::one();
                c.boundary(n + 1, &e)
            })
            .collect()
    } else {
        vec![]
    };
    let level = |p: isize| -> IntMatrix {
        let mut vs = bds.clone();
        if p >= 0 {
            let cols: Vec<usize> = (0..nn).filter(|&x| t.filtration[n][x] as isize <= p).collect();
            let mut m = vec![vec![BigInt::zero(); cols.len()]; if n == 0 { 0 } else { c.rank(n - 1) }];
            if n > 0 {
                for (j, &x) in cols.iter().enumerate() {
                    for &(y, v) in &c.bd[n][x] {
                        m[y][j] += v;
                    }
                }
            }
            for kv in kernel_basis(&m, cols.len()) {
                let mut full = vec![BigInt::zero(); nn];
                for (j, &x) in cols.iter().enumerate() {
                    full[x] = kv[j].clone();
                }
                vs.push(full);
            }
        }
        span_basis(&vs, nn)
    };
    (0..=maxp)
        .map(|p| {
            let hi = level(p as isize);
            let lo = level(p as isize - 1);
            lattice_quotient(&hi, &lo, n - p.min(n))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SsConsistency {
    pub degrees: usize,
    /// E^∞_{p,n-p} equals F_p H_n / F_{p-1} H_n for all p and n
    pub graded_match: bool,
    /// rank H_n equals the sum of the E^∞ ranks in total degree n
    pub rank_match: bool,
    /// the p-part of |tors H_n| divides the product of the E^∞ p-parts, for p < 100
    pub orders_bounded: bool,
}

/// Compares the last page of cube_ss with the homology of the total complex.
pub fn ss_consistency(d: &CubeDiagram) -> Result<SsConsistency, HomError> {
    let pages = cube_ss(d)?;
    let einf = pages.last().expect("at least one page");
    let tot = total_complex(d)?;
    let h = homology(&tot.complex, Coeff::Z);
    let mut graded_match = true;
    let mut rank_match = true;
    let mut orders_bounded = true;
    let primes: Vec<u64> = (2..100u64).filter(|&p| (2..p).all(|q| p % q != 0)).collect();
    for (n, hn) in h.iter().enumerate() {
        let gr = filtered_homology(&tot, n);
        let mut rank = 0;
        for (p, g) in gr.iter().enumerate() {
            if p > n {
                continue;
            }
            let e = einf.entries.get(&(p, n - p)).cloned().unwrap_or_else(|| HomologyGroup::zero(n - p));
            rank += e.rank;
            if e.rank != g.rank || invariant_factors(&e.torsion) != invariant_factors(&g.torsion) {
                graded_match = false;
            }
        }
        if rank != hn.rank {
            rank_match = false;
        }
        for &p in &primes {
            let sum: u32 = (0..=n.min(d.dim))
                .map(|k| einf.entries.get(&(k, n - k)).map_or(0, |e| e.primary_order(p)))
                .sum();
            if hn.primary_order(p) > sum {
                orders_bounded = false;
            }
        }
    }
    Ok(SsConsistency { degrees: h.len(), graded_match, rank_match, orders_bounded })
}

/// Random cube of simplicial subcomplexes on `nverts` vertices: a facet with
/// mask m is present at every vertex v ⊇ m, and coordinate j acts by inclusion
/// scaled by a random integer.
pub fn random_cube<R: rand::Rng>(rng: &mut R, dim: usize, nverts: usize, nfacets: usize) -> CubeDiagram {
    let mut facets: Vec<(Vec<usize>, usize)> = Vec::new();
    for _ in 0..nfacets {
        let size = rng.gen_range(1..=3.min(nverts));
        let mut f: Vec<usize> = (0..nverts).collect();
        for i in 0..size {
            let j = rng.gen_range(i..nverts);
            f.swap(i, j);
        }
        let mut f = f[..size].to_vec();
        f.sort_unstable();
        facets.push((f, rng.gen_range(0..1usize << dim)));
    }
    // all faces with the smallest mask of a facet containing them
    let mut faces: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (f, m) in &facets {
        for sub in 1..1usize << f.len() {
            let face: Vec<usize> = (0..f.len()).filter(|i| sub & (1 << i) != 0).map(|i| f[i]).collect();
            faces.entry(face).or_default().push(*m);
        }
    }
    let present = |masks: &[usize], v: usize| masks.iter().any(|&m| m & v == m);
    let scales: Vec<i64> = (0..dim).map(|_| [1, -1, 2, 3, -2][rng.gen_range(0..5)]).collect();
    let lists: Vec<Vec<Vec<Vec<usize>>>> = (0..1usize << dim)
        .map(|v| {
            let mut by_dim: Vec<Vec<Vec<usize>>> = vec![vec![]; 3];
            for (face, masks) in &faces {
                if present(masks, v) {
                    by_dim[face.len() - 1].push(face.clone());
                }
            }
            by_dim
        })
        .collect();
    let index: Vec<HashMap<Vec<usize>, usize>> = lists
        .iter()
        .map(|l| l.iter().flat_map(|fs| fs.iter().enumerate().map(|(i, f)| (f.clone(), i))).collect())
        .collect();
    let vertices = lists
        .iter()
        .zip(&index)
        .map(|(l, idx)| {
            let bd = l
                .iter()
                .enumerate()
                .map(|(k, fs)| {
                    fs.iter()
                        .map(|f| {
                            if k == 0 {
                                return vec![];
                            }
                            normalize_col(
                                (0..f.len())
                                    .map(|i| {
                                        let mut g = f.clone();
                                        g.remove(i);
                                        (idx[&g], if i % 2 == 0 { 1 } else { -1 })
                                    })
                                    .collect(),
                            )
                        })
                        .collect()
                })
                .collect();
            ChainComplex::new(l.iter().map(|fs| fs.len()).collect(), bd)
        })
        .collect();
    let mut cube = CubeDiagram::new(dim, vertices);
    for v in 0..1usize << dim {
        for j in 0..dim {
            if v & (1 << j) != 0 {
                continue;
            }
            let w = v | (1 << j);
            let images = (0..3)
                .map(|k| lists[v][k].iter().map(|f| vec![(index[w][f], scales[j])]).collect())
                .collect();
            cube.set_edge(v, j, ChainMap { images });
        }
    }
    cube
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn mat(rows: &[&[i64]]) -> IntMatrix {
        rows.iter().map(|r| r.iter().map(|&x| bi(x)).collect()).collect()
    }

    #[test]
    fn smith_examples() {
        assert_eq!(smith_divisors(&mat(&[&[1, 0], &[0, 1]]), 2), vec![bi(1), bi(1)]);
        assert_eq!(smith_divisors(&mat(&[&[2, 0], &[0, 3]]), 2), vec![bi(1), bi(6)]);
        assert!(smith_divisors(&mat(&[&[0, 0], &[0, 0]]), 2).is_empty());
        let m = mat(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]);
        let s = smith(&m, 3);
        assert_eq!(s.divisors, vec![bi(2), bi(6), bi(12)]);
        let d = mat_mul_int(&mat_mul_int(&s.left, &m, 3), &s.right, 3);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { s.divisors[i].clone() } else { bi(0) };
                assert_eq!(d[i][j], want);
            }
        }
        assert_eq!(mat_mul_int(&s.left, &s.left_inv, 3), ident(3));
        assert_eq!(mat_mul_int(&s.right, &s.right_inv, 3), ident(3));
    }

    fn one_cube(mult: i64) -> CubeDiagram {
        let z = ChainComplex::new(vec![1], vec![]);
        let mut d = CubeDiagram::new(1, vec![z.clone(), z]);
        d.set_edge(0, 0, ChainMap { images: vec![vec![vec![(0, mult)]]] });
        d
    }

    #[test]
    fn total_complex_one_cube() {
        let t = total_complex(&one_cube(2)).unwrap();
        assert_eq!(t.complex.ranks, vec![1, 1]);
        let h = homology(&t.complex, Coeff::Z);
        assert_eq!(h[0].torsion, vec![bi(2)]);
        assert!(h[1].is_zero());
    }

    #[test]
    fn identity_square_is_acyclic() {
        let z = ChainComplex::new(vec![1], vec![]);
        let mut d = CubeDiagram::new(2, vec![z.clone(), z.clone(), z.clone(), z]);
        for (v, j) in [(0, 0), (0, 1), (1, 1), (2, 0)] {
            d.set_edge(v, j, ChainMap { images: vec![vec![vec![(0, 1)]]] });
        }
        let t = total_complex(&d).unwrap();
        t.complex.check_d2().unwrap();
        assert!(homology(&t.complex, Coeff::Z).iter().all(|h| h.is_zero()));
    }

    #[test]
    fn ss_of_one_cube() {
        let pages = cube_ss(&one_cube(2)).unwrap();
        let e1 = &pages[0];
        assert_eq!(e1.entries[&(0, 0)].rank, 1);
        assert_eq!(e1.entries[&(1, 0)].rank, 1);
        let einf = pages.last().unwrap();
        assert_eq!(einf.entries[&(0, 0)].torsion, vec![bi(2)]);
        assert!(einf.entries[&(1, 0)].is_zero());
    }

    #[test]
    fn coefficient_variants() {
        // Z --2--> Z --0--> Z --6--> Z in degrees 3..0
        let c = ChainComplex::new(
            vec![1, 1, 1, 1],
            vec![vec![], vec![vec![(0, 6)]], vec![vec![]], vec![vec![(0, 2)]]],
        );
        let z = homology(&c, Coeff::Z);
        assert_eq!(z[0].torsion, vec![bi(6)]);
        assert_eq!(z[2].torsion, vec![bi(2)]);
        let h = homology(&c, Coeff::Zhalf);
        assert_eq!(h[0].torsion, vec![bi(3)]);
        assert!(h[2].is_zero());
        assert!(homology(&c, Coeff::Q).iter().all(|g| g.is_zero()));
    }

    #[test]
    fn reduction_transports_cycles() {
        // boundary of a triangle plus a filled second triangle sharing an edge
        // vertices 0..3, edges 01 02 12 13 23, face 012
        let c = ChainComplex::new(
            vec![4, 5, 1],
            vec![
                vec![],
                vec![
                    vec![(0, -1), (1, 1)],
                    vec![(0, -1), (2, 1)],
                    vec![(1, -1), (2, 1)],
                    vec![(1, -1), (3, 1)],
                    vec![(2, -1), (3, 1)],
                ],
                vec![vec![(0, 1), (1, -1), (2, 1)]],
            ],
        );
        c.check_d2().unwrap();
        let hd = HomologyData::new(&c, Coeff::Z);
        assert_eq!(hd.groups()[1].rank, 1);
        assert_eq!(hd.groups()[0].rank, 1);
        let rep = hd.representative(1, 0);
        assert!(c.boundary(1, &rep).iter().all(|x| x.is_zero()));
        let coords = hd.coordinates(1, &rep);
        assert_eq!(coords, vec![bi(1)]);
        // the cycle 12 + 23 - 13 is a generator up to sign
        let cyc = vec![bi(0), bi(0), bi(1), bi(-1), bi(1)];
        assert_eq!(hd.coordinates(1, &cyc)[0].abs(), bi(1));
        // the filled triangle boundary is zero in homology
        let b = c.boundary(2, &[bi(1)]);
        assert!(hd.is_boundary(1, &b));
    }

    #[test]
    fn invariant_factor_merge() {
        assert_eq!(invariant_factors(&[bi(2), bi(3)]), vec![bi(6)]);
        assert_eq!(invariant_factors(&[bi(2), bi(4)]), vec![bi(2), bi(4)]);
    }

    #[test]
    fn random_cubes_converge_to_total_homology() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for t in 0..6 {
            let cube = random_cube(&mut rng, 1 + t % 3, 5, 6);
            cube.check().unwrap();
            let r = ss_consistency(&cube).unwrap();
            assert!(r.graded_match && r.rank_match && r.orders_bounded, "{r:?}");
        }
    }
}
