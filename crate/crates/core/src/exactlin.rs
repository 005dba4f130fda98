//! Exact linear algebra over the rationals: quadratic spaces, subspaces in
//! canonical echelon form, orthogonal complements and projections.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Q = BigRational;
pub type Vector = Vec<Q>;
pub type Matrix = Vec<Vec<Q>>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinError {
    #[error("quadratic form is degenerate")]
    DegenerateForm,
    #[error("span is degenerate for the quadratic form")]
    DegenerateSpan,
    #[error("signature {found:?} does not match the requested kind (expected n_minus = {expected})")]
    SignatureMismatch { found: (usize, usize), expected: usize },
    #[error("subspace is not contained in the target")]
    NotNested,
    #[error("gram matrix is not symmetric")]
    NotSymmetric,
    #[error("flavor {0:?} requires signature {1:?}")]
    FlavorMismatch(Flavor, (usize, usize)),
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("cannot parse rational {0:?}")]
    Parse(String),
}

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn parse_q(s: &str) -> Result<Q, LinError> {
    let t = s.trim();
    let bad = || LinError::Parse(s.to_string());
    match t.split_once('/') {
        Some((a, b)) => {
            let a: BigInt = a.trim().parse().map_err(|_| bad())?;
            let b: BigInt = b.trim().parse().map_err(|_| bad())?;
            if b.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(a, b))
        }
        None => Ok(Q::from_integer(t.parse().map_err(|_| bad())?)),
    }
}

pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
        .collect()
}

pub fn diag(d: &[i64]) -> Matrix {
    let n = d.len();
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { q(d[i]) } else { Q::zero() }).collect())
        .collect()
}

pub fn transpose(m: &Matrix) -> Matrix {
    if m.is_empty() {
        return vec![];
    }
    (0..m[0].len()).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    let mut s = Q::zero();
                    for k in 0..inner {
                        if !row[k].is_zero() && !b[k][j].is_zero() {
                            s += &row[k] * &b[k][j];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &Matrix, v: &[Q]) -> Vector {
    a.iter()
        .map(|row| row.iter().zip(v).fold(Q::zero(), |s, (x, y)| s + x * y))
        .collect()
}

pub fn dot(u: &[Q], v: &[Q]) -> Q {
    u.iter().zip(v).fold(Q::zero(), |s, (x, y)| s + x * y)
}

/// The bilinear pairing u^T G v.
pub fn pairing(g: &Matrix, u: &[Q], v: &[Q]) -> Q {
    dot(u, &mat_vec(g, v))
}

/// Reduced row echelon form, zero rows removed.
pub fn rref(rows: &[Vector]) -> Matrix {
    let mut m: Matrix = rows.to_vec();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut lead = 0;
    let mut r = 0;
    while r < m.len() && lead < ncols {
        let piv = (r..m.len()).find(|&i| !m[i][lead].is_zero());
        let Some(p) = piv else {
            lead += 1;
            continue;
        };
        m.swap(r, p);
        let inv = m[r][lead].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][lead].is_zero() {
                let f = m[i][lead].clone();
                for j in 0..ncols {
                    let t = &f * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        r += 1;
        lead += 1;
    }
    m.truncate(r);
    m
}

pub fn rank(rows: &[Vector]) -> usize {
    rref(rows).len()
}

/// Basis of {v : M v = 0} for an m x ncols matrix.
pub fn null_space(m: &[Vector], ncols: usize) -> Matrix {
    let r = rref(m);
    let mut pivots = Vec::new();
    for row in &r {
        pivots.push(row.iter().position(|x| !x.is_zero()).unwrap());
    }
    let mut out = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Q::zero(); ncols];
        v[free] = Q::one();
        for (row, &p) in r.iter().zip(&pivots) {
            v[p] = -row[free].clone();
        }
        out.push(v);
    }
    out
}

pub fn det(m: &Matrix) -> Q {
    let n = m.len();
    let mut a = m.clone();
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= &a[c][c];
        let inv = a[c][c].recip();
        for i in c + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] * &inv;
            for j in c..n {
                let t = &f * &a[c][j];
                a[i][j] -= t;
            }
        }
    }
    d
}

pub fn inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.len();
    let mut aug: Matrix = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            row
        })
        .collect();
    aug = rref(&aug);
    if aug.len() < n {
        return None;
    }
    for (i, row) in aug.iter().enumerate() {
        if row[i] != Q::one() {
            return None;
        }
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn is_symmetric(g: &Matrix) -> bool {
    let n = g.len();
    g.iter().all(|r| r.len() == n) && (0..n).all(|i| (0..i).all(|j| g[i][j] == g[j][i]))
}

/// Signature (n_minus, n_plus) by symmetric Gaussian elimination.
pub fn signature(gram: &Matrix) -> Result<(usize, usize), LinError> {
    if !is_symmetric(gram) {
        return Err(LinError::NotSymmetric);
    }
    let n = gram.len();
    let mut a = gram.clone();
    let (mut neg, mut pos) = (0, 0);
    let mut k = 0;
    while k < n {
        if a[k][k].is_zero() {
            if let Some(p) = (k + 1..n).find(|&i| !a[i][i].is_zero()) {
                a.swap(k, p);
                for row in a.iter_mut() {
                    row.swap(k, p);
                }
            } else if let Some(p) = (k + 1..n).find(|&j| !a[k][j].is_zero()) {
                // hyperbolic pair: replace e_k by e_k + e_p, which has q = 2 a_kp != 0
                for j in 0..n {
                    let t = a[p][j].clone();
                    a[k][j] += t;
                }
                for i in 0..n {
                    let t = a[i][p].clone();
                    a[i][k] += t;
                }
            } else {
                return Err(LinError::DegenerateForm);
            }
        }
        let piv = a[k][k].clone();
        if piv.is_negative() {
            neg += 1;
        } else {
            pos += 1;
        }
        let inv = piv.recip();
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] * &inv;
            for j in 0..n {
                let t = &f * &a[k][j];
                a[i][j] -= t;
            }
            for j in 0..n {
                let t = &f * &a[j][k];
                a[j][i] -= t;
            }
        }
        k += 1;
    }
    Ok((neg, pos))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Spherical,
    Hyperbolic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadSpace {
    /// Geometric dimension n; the underlying vector space is k^{n+1}.
    pub dim: usize,
    pub gram: Matrix,
    pub flavor: Flavor,
    pub signature: (usize, usize),
}

impl QuadSpace {
    pub fn new(flavor: Flavor, gram: Matrix) -> Result<Self, LinError> {
        let n = gram.len();
        if n == 0 {
            return Err(LinError::Shape("empty gram matrix".into()));
        }
        let sig = signature(&gram)?;
        let want = match flavor {
            Flavor::Spherical => (0, n),
            Flavor::Hyperbolic => (1, n - 1),
        };
        if sig != want {
            return Err(LinError::FlavorMismatch(flavor, want));
        }
        Ok(QuadSpace { dim: n - 1, gram, flavor, signature: sig })
    }

    pub fn spherical(n: usize) -> Self {
        Self::new(Flavor::Spherical, identity(n + 1)).unwrap()
    }

    pub fn hyperbolic(n: usize) -> Self {
        let mut d = vec![1i64; n + 1];
        d[0] = -1;
        Self::new(Flavor::Hyperbolic, diag(&d)).unwrap()
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim + 1
    }

    pub fn n_minus(&self) -> usize {
        self.signature.0
    }

    pub fn whole(self: &Arc<Self>) -> Subspace {
        Subspace { ambient: self.clone(), basis: identity(self.ambient_dim()), kind: Kind::Subspace }
    }

    pub fn pair(&self, u: &[Q], v: &[Q]) -> Q {
        pairing(&self.gram, u, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Subspace,
    Angular,
}

/// A nondegenerate linear subspace, stored as the RREF of a basis.
#[derive(Clone)]
pub struct Subspace {
    pub ambient: Arc<QuadSpace>,
    pub basis: Matrix,
    pub kind: Kind,
}

impl PartialEq for Subspace {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis
    }
}
impl Eq for Subspace {}

impl Hash for Subspace {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.basis.hash(h);
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .basis
            .iter()
            .map(|r| format!("({})", r.iter().map(fmt_q).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "span[{}]", rows.join(","))
    }
}

impl Subspace {
    pub fn lin_dim(&self) -> usize {
        self.basis.len()
    }

    /// Projective dimension; -1 for the zero space.
    pub fn dim(&self) -> isize {
        self.basis.len() as isize - 1
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn restricted_gram(&self) -> Matrix {
        let b = &self.basis;
        b.iter().map(|u| b.iter().map(|v| self.ambient.pair(u, v)).collect()).collect()
    }

    pub fn signature(&self) -> Result<(usize, usize), LinError> {
        if self.is_zero() {
            return Ok((0, 0));
        }
        signature(&self.restricted_gram()).map_err(|_| LinError::DegenerateSpan)
    }

    pub fn contains_vector(&self, v: &[Q]) -> bool {
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        rank(&rows) == self.basis.len()
    }

    pub fn is_subset_of(&self, other: &Subspace) -> bool {
        self.basis.iter().all(|v| other.contains_vector(v))
    }

    pub fn is_orthogonal_to(&self, other: &Subspace) -> bool {
        self.basis.iter().all(|u| other.basis.iter().all(|v| self.ambient.pair(u, v).is_zero()))
    }

    pub fn label(&self) -> String {
        format!("{:?}", self)
    }
}

fn classify(ambient: &Arc<QuadSpace>, basis: Matrix) -> Result<Subspace, LinError> {
    let s = Subspace { ambient: ambient.clone(), basis, kind: Kind::Angular };
    let sig = s.signature()?;
    let kind = if sig.0 == 0 {
        Kind::Angular
    } else if sig.0 == ambient.n_minus() {
        Kind::Subspace
    } else {
        return Err(LinError::SignatureMismatch { found: sig, expected: ambient.n_minus() });
    };
    Ok(Subspace { kind, ..s })
}

/// Canonical span of the given vectors, validated against the requested kind.
pub fn span(vectors: &[Vector], ambient: &Arc<QuadSpace>, kind: Kind) -> Result<Subspace, LinError> {
    let n = ambient.ambient_dim();
    if vectors.iter().any(|v| v.len() != n) {
        return Err(LinError::Shape(format!("vectors must have length {n}")));
    }
    let basis = rref(vectors);
    let s = Subspace { ambient: ambient.clone(), basis, kind };
    let sig = s.signature()?;
    let expected = match kind {
        Kind::Subspace => ambient.n_minus(),
        Kind::Angular => 0,
    };
    if sig.0 != expected {
        return Err(LinError::SignatureMismatch { found: sig, expected });
    }
    Ok(s)
}

/// Span validated only for nondegeneracy; kind inferred from the signature.
pub fn span_any(vectors: &[Vector], ambient: &Arc<QuadSpace>) -> Result<Subspace, LinError> {
    classify(ambient, rref(vectors))
}

pub fn orth_complement(u: &Subspace) -> Subspace {
    let g = &u.ambient.gram;
    let rows: Matrix = u.basis.iter().map(|b| mat_vec(&transpose(g), b)).collect();
    let n = u.ambient.ambient_dim();
    let basis = if rows.is_empty() { identity(n) } else { rref(&null_space(&rows, n)) };
    classify(&u.ambient, basis).expect("complement of a nondegenerate subspace is nondegenerate")
}

pub fn intersect(u: &Subspace, v: &Subspace) -> Matrix {
    // x = a.U = b.V  <=>  [U; -V]^T (a, b) = 0
    let n = u.ambient.ambient_dim();
    let ku = u.basis.len();
    let kv = v.basis.len();
    if ku == 0 || kv == 0 {
        return vec![];
    }
    let sys: Matrix = (0..n)
        .map(|c| {
            let mut row: Vector = u.basis.iter().map(|r| r[c].clone()).collect();
            row.extend(v.basis.iter().map(|r| -r[c].clone()));
            row
        })
        .collect();
    let sols = null_space(&sys, ku + kv);
    let vecs: Matrix = sols
        .iter()
        .map(|s| (0..n).fold(vec![Q::zero(); n], |mut acc, c| {
            for i in 0..ku {
                acc[c] += &s[i] * &u.basis[i][c];
            }
            acc
        }))
        .collect();
    rref(&vecs)
}

/// V ∩ U⊥ for U ⊆ V.
pub fn project(u: &Subspace, v: &Subspace) -> Result<Subspace, LinError> {
    if !u.is_subset_of(v) {
        return Err(LinError::NotNested);
    }
    let perp = orth_complement(u);
    let basis = intersect(v, &perp);
    if basis.is_empty() {
        return Ok(Subspace { ambient: u.ambient.clone(), basis, kind: Kind::Angular });
    }
    classify(&u.ambient, basis)
}

/// Sum of two subspaces (used for orthogonal sums).
pub fn sum(u: &Subspace, v: &Subspace) -> Result<Subspace, LinError> {
    let mut rows = u.basis.clone();
    rows.extend(v.basis.iter().cloned());
    classify(&u.ambient, rref(&rows))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Isometry {
    pub matrix: Matrix,
    pub det_sign: i8,
}

impl Isometry {
    pub fn apply(&self, v: &[Q]) -> Vector {
        mat_vec(&self.matrix, v)
    }

    pub fn apply_subspace(&self, u: &Subspace) -> Subspace {
        let rows: Matrix = u.basis.iter().map(|b| self.apply(b)).collect();
        Subspace { ambient: u.ambient.clone(), basis: rref(&rows), kind: u.kind }
    }

    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry { matrix: mat_mul(&self.matrix, &other.matrix), det_sign: self.det_sign * other.det_sign }
    }

    pub fn identity(n: usize) -> Isometry {
        Isometry { matrix: identity(n), det_sign: 1 }
    }
}

/// Checks M^T G M = G exactly.
pub fn is_isometry(m: &Matrix, x: &QuadSpace) -> Option<Isometry> {
    let n = x.ambient_dim();
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return None;
    }
    let lhs = mat_mul(&transpose(m), &mat_mul(&x.gram, m));
    if lhs != x.gram {
        return None;
    }
    let d = det(m);
    Some(Isometry { matrix: m.clone(), det_sign: if d.is_negative() { -1 } else { 1 } })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryJson {
    pub flavor: Flavor,
    pub dim: usize,
    pub gram: Vec<Vec<String>>,
}

impl GeometryJson {
    pub fn from_space(x: &QuadSpace) -> Self {
        GeometryJson {
            flavor: x.flavor,
            dim: x.dim,
            gram: x.gram.iter().map(|r| r.iter().map(fmt_q).collect()).collect(),
        }
    }

    pub fn to_space(&self) -> Result<QuadSpace, LinError> {
        let gram: Matrix = self
            .gram
            .iter()
            .map(|r| r.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?;
        if gram.len() != self.dim + 1 {
            return Err(LinError::Shape(format!("gram must be {}x{}", self.dim + 1, self.dim + 1)));
        }
        QuadSpace::new(self.flavor, gram)
    }
}

pub fn parse_vector(v: &[String]) -> Result<Vector, LinError> {
    v.iter().map(|s| parse_q(s)).collect()
}

pub fn vec_q(v: &[i64]) -> Vector {
    v.iter().map(|&x| q(x)).collect()
}
