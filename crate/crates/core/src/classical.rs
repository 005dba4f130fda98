//! Classical scissors-congruence invariants of geodesic simplices in euclidean,
//! spherical and hyperbolic space: dihedral angles, Dehn invariants and their
//! reduction in R ⊗ R/πZ, volumes, suspensions and group-chain simplices.
//!
//! Reals are `BigFloat`s at the requested precision plus guard bits. Vanishing
//! and non-vanishing of tensors rests on integer-relation search and is
//! therefore heuristic; every result records the evidence.

use std::cell::RefCell;

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

const RM: RoundingMode = RoundingMode::ToEven;
const GUARD: usize = 64;

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("degenerate face {0:?}")]
    DegenerateFace(Vec<usize>),
    #[error("degenerate span {0:?}")]
    DegenerateSpan(Vec<usize>),
    #[error("invalid simplex: {0}")]
    InvalidSimplex(String),
    #[error("vertex {0} is not in the hyperplane")]
    NotInHyperplane(usize),
    #[error("tuple is not generic: {0}")]
    NotGeneric(String),
    #[error("matrix {0} is not an isometry")]
    NotIsometry(usize),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("tolerance {tol:e} not met (error estimate {err:e})")]
    ToleranceNotMet { tol: f64, err: f64 },
    #[error("dimension {0} is not supported")]
    Dimension(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Arithmetic at a fixed binary precision.
pub struct Real {
    pub bits: usize,
    p: usize,
    cc: RefCell<Consts>,
}

impl Real {
    pub fn new(bits: usize) -> Self {
        Real { bits, p: bits + GUARD, cc: RefCell::new(Consts::new().expect("constant cache")) }
    }

    pub fn int(&self, i: i64) -> BigFloat {
        BigFloat::from_i64(i, self.p)
    }

    pub fn ratio(&self, a: i64, b: i64) -> BigFloat {
        self.div(&self.int(a), &self.int(b))
    }

    pub fn from_f64(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.p)
    }

    pub fn parse(&self, s: &str) -> Result<BigFloat, ClassicalError> {
        let x = BigFloat::parse(s.trim(), Radix::Dec, self.p, RM, &mut self.cc.borrow_mut());
        if x.is_nan() || x.is_inf() {
            return Err(ClassicalError::Parse(format!("not a number: {s:?}")));
        }
        Ok(x)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, RM)
    }

    pub fn sqrt(&self, a: &BigFloat) -> BigFloat {
        if a.is_negative() {
            return self.int(0);
        }
        a.sqrt(self.p, RM)
    }

    /// arccos, clamped to [-1, 1]
    pub fn acos(&self, a: &BigFloat) -> BigFloat {
        let one = self.int(1);
        let x = if self.gt(a, &one) {
            one
        } else if self.lt(a, &-&one) {
            -&one
        } else {
            a.clone()
        };
        x.acos(self.p, RM, &mut self.cc.borrow_mut())
    }

    /// arccosh, clamped to [1, ∞)
    pub fn acosh(&self, a: &BigFloat) -> BigFloat {
        let one = self.int(1);
        let x = if self.lt(a, &one) { one } else { a.clone() };
        x.acosh(self.p, RM, &mut self.cc.borrow_mut())
    }

    pub fn cos(&self, a: &BigFloat) -> BigFloat {
        a.cos(self.p, RM, &mut self.cc.borrow_mut())
    }

    pub fn sin(&self, a: &BigFloat) -> BigFloat {
        a.sin(self.p, RM, &mut self.cc.borrow_mut())
    }

    pub fn pi(&self) -> BigFloat {
        self.cc.borrow_mut().pi(self.p, RM)
    }

    pub fn lt(&self, a: &BigFloat, b: &BigFloat) -> bool {
        a.cmp(b).is_some_and(|c| c < 0)
    }

    pub fn gt(&self, a: &BigFloat, b: &BigFloat) -> bool {
        a.cmp(b).is_some_and(|c| c > 0)
    }

    /// 2^-k
    pub fn tiny(&self, k: usize) -> BigFloat {
        let two = self.int(2);
        two.powi(k, self.p, RM).reciprocal(self.p, RM)
    }

    /// Zero threshold 2^{-bits/2}.
    pub fn eps(&self) -> BigFloat {
        self.tiny(self.bits / 2)
    }

    pub fn is_small(&self, a: &BigFloat) -> bool {
        self.lt(&a.abs(), &self.eps())
    }

    pub fn to_f64(&self, a: &BigFloat) -> f64 {
        if a.is_zero() {
            return 0.0;
        }
        a.format(Radix::Dec, RM, &mut self.cc.borrow_mut()).ok().and_then(|s| s.parse().ok()).unwrap_or(f64::NAN)
    }

    pub fn to_decimal(&self, a: &BigFloat) -> String {
        if a.is_zero() {
            return "0".into();
        }
        let mut x = a.clone();
        let _ = x.set_precision(self.bits, RM);
        x.format(Radix::Dec, RM, &mut self.cc.borrow_mut()).unwrap_or_else(|_| "NaN".into())
    }

    /// Integer part of an integer-valued number.
    fn to_bigint(&self, a: &BigFloat) -> Option<BigInt> {
        if a.is_zero() {
            return Some(BigInt::from(0));
        }
        let (words, n, sign, e, _) = a.as_raw_parts()?;
        if e <= 0 {
            return Some(BigInt::from(0));
        }
        let e = e as usize;
        if e > n {
            return None;
        }
        let digits: Vec<u32> = words.iter().flat_map(|w| [(*w & 0xffff_ffff) as u32, (*w >> 32) as u32]).collect();
        let m = BigUint::new(digits) >> (n - e);
        let v = BigInt::from(m);
        Some(if sign == Sign::Neg { -v } else { v })
    }

    /// Nearest integer.
    pub fn nint(&self, a: &BigFloat) -> Option<BigInt> {
        let half = self.ratio(1, 2);
        self.to_bigint(&self.add(a, &half).floor())
    }

    pub fn from_bigint(&self, v: &BigInt) -> BigFloat {
        match v.to_i64() {
            Some(i) => self.int(i),
            None => self.parse(&v.to_string()).expect("integer literal"),
        }
    }

    pub fn dot(&self, a: &[BigFloat], b: &[BigFloat]) -> BigFloat {
        let mut s = self.int(0);
        for (x, y) in a.iter().zip(b) {
            s = self.add(&s, &self.mul(x, y));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Euclidean,
    Spherical,
    Hyperbolic,
}

impl Geometry {
    pub fn parse(s: &str) -> Result<Self, ClassicalError> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "euclidean3" => Ok(Geometry::Euclidean),
            "spherical" => Ok(Geometry::Spherical),
            "hyperbolic" => Ok(Geometry::Hyperbolic),
            _ => Err(ClassicalError::Parse(format!("unknown geometry {s:?}"))),
        }
    }
}

/// Ambient bilinear form: dot product, or -x0 y0 + Σ xi yi for the hyperboloid model.
pub fn form(r: &Real, g: Geometry, a: &[BigFloat], b: &[BigFloat]) -> BigFloat {
    let s = r.dot(a, b);
    if g == Geometry::Hyperbolic {
        let c = r.mul(&a[0], &b[0]);
        r.sub(&s, &r.add(&c, &c))
    } else {
        s
    }
}

fn vsub(r: &Real, a: &[BigFloat], b: &[BigFloat]) -> Vec<BigFloat> {
    a.iter().zip(b).map(|(x, y)| r.sub(x, y)).collect()
}

fn vscale(r: &Real, a: &[BigFloat], t: &BigFloat) -> Vec<BigFloat> {
    a.iter().map(|x| r.mul(x, t)).collect()
}

/// Determinant by elimination with partial pivoting.
pub fn det(r: &Real, m: &[Vec<BigFloat>]) -> BigFloat {
    let n = m.len();
    let mut a = m.to_vec();
    let mut d = r.int(1);
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().cmp(&a[j][c].abs()).unwrap_or(0).cmp(&0)).unwrap_or(c);
        if a[piv][c].is_zero() {
            return r.int(0);
        }
        if piv != c {
            a.swap(piv, c);
            d = -&d;
        }
        d = r.mul(&d, &a[c][c]);
        for i in c + 1..n {
            let f = r.div(&a[i][c], &a[c][c]);
            for k in c..n {
                let v = r.mul(&f, &a[c][k]);
                a[i][k] = r.sub(&a[i][k], &v);
            }
        }
    }
    d
}

fn solve(r: &Real, m: &[Vec<BigFloat>], b: &[BigFloat]) -> Option<Vec<BigFloat>> {
    let n = m.len();
    let mut a: Vec<Vec<BigFloat>> = m.iter().zip(b).map(|(row, x)| row.iter().cloned().chain([x.clone()]).collect()).collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().cmp(&a[j][c].abs()).unwrap_or(0).cmp(&0))?;
        if r.is_small(&a[piv][c]) {
            return None;
        }
        a.swap(piv, c);
        for i in 0..n {
            if i != c {
                let f = r.div(&a[i][c], &a[c][c]);
                for k in c..=n {
                    let v = r.mul(&f, &a[c][k]);
                    a[i][k] = r.sub(&a[i][k], &v);
                }
            }
        }
    }
    Some((0..n).map(|i| r.div(&a[i][n], &a[i][i])).collect())
}

fn gram(r: &Real, g: Geometry, vs: &[Vec<BigFloat>]) -> Vec<Vec<BigFloat>> {
    vs.iter().map(|a| vs.iter().map(|b| form(r, g, a, b)).collect()).collect()
}

/// v minus its orthogonal projection onto span(basis).
fn project_out(r: &Real, g: Geometry, basis: &[Vec<BigFloat>], v: &[BigFloat]) -> Option<Vec<BigFloat>> {
    if basis.is_empty() {
        return Some(v.to_vec());
    }
    let rhs: Vec<BigFloat> = basis.iter().map(|u| form(r, g, u, v)).collect();
    let c = solve(r, &gram(r, g, basis), &rhs)?;
    let mut out = v.to_vec();
    for (ci, u) in c.iter().zip(basis) {
        out = vsub(r, &out, &vscale(r, u, ci));
    }
    Some(out)
}

fn normalize(r: &Real, g: Geometry, v: &[BigFloat]) -> Option<Vec<BigFloat>> {
    let n2 = form(r, g, v, v);
    if r.is_small(&n2) || n2.is_negative() {
        return None;
    }
    Some(vscale(r, v, &r.sqrt(&n2).reciprocal(r.p, RM)))
}

/// Geodesic simplex given by its vertices: points of R^n, unit vectors of R^{d+1},
/// or points of the upper sheet of -x0² + Σ xi² = -1.
#[derive(Debug, Clone)]
pub struct GeodesicSimplex {
    pub geometry: Geometry,
    pub vertices: Vec<Vec<BigFloat>>,
}

impl GeodesicSimplex {
    pub fn new(r: &Real, geometry: Geometry, vertices: Vec<Vec<BigFloat>>) -> Result<Self, ClassicalError> {
        let s = GeodesicSimplex { geometry, vertices };
        s.validate(r)?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn validate(&self, r: &Real) -> Result<(), ClassicalError> {
        let g = self.geometry;
        if self.vertices.is_empty() {
            return Err(ClassicalError::InvalidSimplex("no vertices".into()));
        }
        let n = self.vertices[0].len();
        if self.vertices.iter().any(|v| v.len() != n) {
            return Err(ClassicalError::InvalidSimplex("ragged coordinates".into()));
        }
        for (i, v) in self.vertices.iter().enumerate() {
            let q = form(r, g, v, v);
            let bad = match g {
                Geometry::Euclidean => false,
                Geometry::Spherical => !r.is_small(&r.sub(&q, &r.int(1))),
                Geometry::Hyperbolic => !r.is_small(&r.add(&q, &r.int(1))) || !v[0].is_positive(),
            };
            if bad {
                return Err(ClassicalError::InvalidSimplex(format!("vertex {i} is off the model")));
            }
        }
        let span = self.span_vectors(r, &(0..self.vertices.len()).collect::<Vec<_>>());
        let gd = det(r, &gram(r, g, &span));
        if r.is_small(&gd) {
            return Err(ClassicalError::InvalidSimplex("vertices are dependent".into()));
        }
        Ok(())
    }

    /// Vectors spanning the (affine or linear) hull of a vertex subset.
    fn span_vectors(&self, r: &Real, j: &[usize]) -> Vec<Vec<BigFloat>> {
        match self.geometry {
            Geometry::Euclidean => j[1..].iter().map(|&k| self.offset(r, j[0], k)).collect(),
            _ => j.iter().map(|&k| self.vertices[k].clone()).collect(),
        }
    }

    fn offset(&self, r: &Real, base: usize, k: usize) -> Vec<BigFloat> {
        match self.geometry {
            Geometry::Euclidean => vsub(r, &self.vertices[k], &self.vertices[base]),
            _ => self.vertices[k].clone(),
        }
    }

    /// Unit normals of the remaining vertices projected to the orthogonal complement of the face J.
    pub fn link_vectors(&self, r: &Real, j: &[usize]) -> Result<Vec<Vec<BigFloat>>, ClassicalError> {
        let g = self.geometry;
        if j.is_empty() || j.iter().any(|&k| k > self.dim()) {
            return Err(ClassicalError::DegenerateFace(j.to_vec()));
        }
        let basis: Vec<Vec<BigFloat>> = match g {
            Geometry::Euclidean => j[1..].iter().map(|&k| self.offset(r, j[0], k)).collect(),
            _ => j.iter().map(|&k| self.vertices[k].clone()).collect(),
        };
        (0..=self.dim())
            .filter(|k| !j.contains(k))
            .map(|k| {
                let v = self.offset(r, j[0], k);
                project_out(r, g, &basis, &v)
                    .and_then(|p| normalize(r, g, &p))
                    .ok_or_else(|| ClassicalError::DegenerateFace(j.to_vec()))
            })
            .collect()
    }

    /// Geodesic length between two vertices.
    pub fn edge_length(&self, r: &Real, a: usize, b: usize) -> BigFloat {
        let (x, y) = (&self.vertices[a], &self.vertices[b]);
        match self.geometry {
            Geometry::Euclidean => {
                let d = vsub(r, x, y);
                r.sqrt(&r.dot(&d, &d))
            }
            Geometry::Spherical => r.acos(&r.dot(x, y)),
            Geometry::Hyperbolic => r.acosh(&-&form(r, Geometry::Hyperbolic, x, y)),
        }
    }

    pub fn to_f64(&self, r: &Real) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| v.iter().map(|x| r.to_f64(x)).collect()).collect()
    }
}

/// Dihedral angle of a simplex at a codimension-2 face, in (0, π).
pub fn dihedral_angle(r: &Real, s: &GeodesicSimplex, face: &[usize]) -> Result<BigFloat, ClassicalError> {
    if face.len() + 1 != s.dim() {
        return Err(ClassicalError::DegenerateFace(face.to_vec()));
    }
    let l = s.link_vectors(r, face)?;
    Ok(r.acos(&form(r, s.geometry, &l[0], &l[1])))
}

/// One term of the i-th classical Dehn invariant: the face [x_J] and the spherical
/// simplex of normalized projections of the other vertices to the complement of its span.
#[derive(Debug, Clone)]
pub struct DehnTerm {
    pub face: Vec<usize>,
    pub face_simplex: GeodesicSimplex,
    pub link: GeodesicSimplex,
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0..1usize << n).filter(|m| m.count_ones() as usize == k).map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect()).collect()
}

pub fn classical_dehn_i(r: &Real, s: &GeodesicSimplex, i: usize) -> Result<Vec<DehnTerm>, ClassicalError> {
    let d = s.dim();
    if i == 0 || i >= d {
        return Err(ClassicalError::Dimension(i));
    }
    let mut out = Vec::new();
    for j in subsets(d + 1, i + 1) {
        let links = s.link_vectors(r, &j).map_err(|_| ClassicalError::DegenerateSpan(j.clone()))?;
        // orthonormal coordinates on the span of the links
        let mut basis: Vec<Vec<BigFloat>> = Vec::new();
        for l in &links {
            let p = project_out(r, s.geometry, &basis, l)
                .and_then(|p| normalize(r, s.geometry, &p))
                .ok_or_else(|| ClassicalError::DegenerateSpan(j.clone()))?;
            basis.push(p);
        }
        let coords: Vec<Vec<BigFloat>> =
            links.iter().map(|l| basis.iter().map(|e| form(r, s.geometry, l, e)).collect()).collect();
        out.push(DehnTerm {
            face: j.clone(),
            face_simplex: GeodesicSimplex { geometry: s.geometry, vertices: j.iter().map(|&k| s.vertices[k].clone()).collect() },
            link: GeodesicSimplex { geometry: Geometry::Spherical, vertices: coords },
        });
    }
    Ok(out)
}

/// Formal combination of geodesic simplices with integer coefficients. Interior
/// disjointness of the pieces is the caller's responsibility.
#[derive(Debug, Clone)]
pub struct Polytope {
    pub geometry: Geometry,
    pub vertices: Vec<Vec<BigFloat>>,
    pub simplices: Vec<(Vec<usize>, i64)>,
}

fn json_real(r: &Real, v: &Value) -> Result<BigFloat, ClassicalError> {
    match v {
        Value::String(s) => r.parse(s),
        Value::Number(n) => r.parse(&n.to_string()),
        _ => Err(ClassicalError::Parse(format!("expected a number, got {v}"))),
    }
}

pub fn json_vector(r: &Real, v: &Value) -> Result<Vec<BigFloat>, ClassicalError> {
    v.as_array().ok_or_else(|| ClassicalError::Parse("expected an array".into()))?.iter().map(|x| json_real(r, x)).collect()
}

pub fn json_matrix(r: &Real, v: &Value) -> Result<Vec<Vec<BigFloat>>, ClassicalError> {
    v.as_array().ok_or_else(|| ClassicalError::Parse("expected a matrix".into()))?.iter().map(|x| json_vector(r, x)).collect()
}

impl Polytope {
    pub fn simplex(&self, k: usize) -> GeodesicSimplex {
        GeodesicSimplex { geometry: self.geometry, vertices: self.simplices[k].0.iter().map(|&i| self.vertices[i].clone()).collect() }
    }

    pub fn from_json(r: &Real, v: &Value) -> Result<Self, ClassicalError> {
        let geometry = Geometry::parse(v["flavor"].as_str().ok_or_else(|| ClassicalError::Parse("missing flavor".into()))?)?;
        let vertices = json_matrix(r, &v["vertices"])?;
        let simplices = v["simplices"]
            .as_array()
            .ok_or_else(|| ClassicalError::Parse("missing simplices".into()))?
            .iter()
            .map(|s| {
                let a = s.as_array().ok_or_else(|| ClassicalError::Parse("simplex is not an array".into()))?;
                let ints: Vec<i64> =
                    a.iter().map(|x| x.as_i64().ok_or_else(|| ClassicalError::Parse(format!("bad index {x}")))).collect::<Result<_, _>>()?;
                let (sign, idx) = ints.split_last().ok_or_else(|| ClassicalError::Parse("empty simplex".into()))?;
                if idx.iter().any(|&i| i < 0 || i as usize >= vertices.len()) {
                    return Err(ClassicalError::Parse(format!("vertex index out of range in {s}")));
                }
                Ok((idx.iter().map(|&i| i as usize).collect(), *sign))
            })
            .collect::<Result<Vec<_>, ClassicalError>>()?;
        let p = Polytope { geometry, vertices, simplices };
        for k in 0..p.simplices.len() {
            p.simplex(k).validate(r)?;
        }
        Ok(p)
    }

    pub fn to_json(&self, r: &Real) -> Value {
        json!({
            "flavor": self.geometry,
            "vertices": self.vertices.iter().map(|v| v.iter().map(|x| r.to_decimal(x)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "simplices": self.simplices.iter().map(|(idx, s)| {
                let mut row: Vec<i64> = idx.iter().map(|&i| i as i64).collect();
                row.push(*s);
                row
            }).collect::<Vec<_>>(),
        })
    }

    /// a × b × c box as the six simplices along monotone lattice paths.
    pub fn euclidean_box(r: &Real, a: &BigFloat, b: &BigFloat, c: &BigFloat) -> Self {
        let scale = [a, b, c];
        let vertices: Vec<Vec<BigFloat>> = (0..8usize)
            .map(|m| (0..3).map(|i| if m & (1 << i) != 0 { scale[i].clone() } else { r.int(0) }).collect())
            .collect();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let simplices = perms
            .iter()
            .map(|p| {
                let mut m = 0;
                let mut idx = vec![0];
                for &i in p {
                    m |= 1 << i;
                    idx.push(m);
                }
                (idx, 1)
            })
            .collect();
        Polytope { geometry: Geometry::Euclidean, vertices, simplices }
    }

    pub fn unit_cube(r: &Real) -> Self {
        let one = r.int(1);
        Self::euclidean_box(r, &one, &one, &one)
    }

    /// Regular tetrahedron with unit edges.
    pub fn regular_tetrahedron(r: &Real) -> Self {
        let z = r.int(0);
        let half = r.ratio(1, 2);
        let s3 = r.sqrt(&r.int(3));
        let vertices = vec![
            vec![z.clone(), z.clone(), z.clone()],
            vec![r.int(1), z.clone(), z.clone()],
            vec![half.clone(), r.div(&s3, &r.int(2)), z.clone()],
            vec![half, r.div(&s3, &r.int(6)), r.sqrt(&r.ratio(2, 3))],
        ];
        Polytope { geometry: Geometry::Euclidean, vertices, simplices: vec![(vec![0, 1, 2, 3], 1)] }
    }

    pub fn map_vertices(&self, r: &Real, m: &[Vec<BigFloat>]) -> Self {
        let vertices = self.vertices.iter().map(|v| m.iter().map(|row| r.dot(row, v)).collect()).collect();
        Polytope { geometry: self.geometry, vertices, simplices: self.simplices.clone() }
    }
}

/// Σ ℓ_i ⊗ θ_i, unreduced.
#[derive(Debug, Clone)]
pub struct DehnTensor {
    pub terms: Vec<(BigFloat, BigFloat)>,
    pub bits: usize,
}

impl DehnTensor {
    pub fn minus(&self, other: &DehnTensor) -> DehnTensor {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|(l, a)| (-l, a.clone())));
        DehnTensor { terms, bits: self.bits }
    }
}

/// Σ len(e) ⊗ θ(e) over the edges of the simplices of a 3-dimensional polytope.
pub fn dehn_classical(r: &Real, p: &Polytope) -> Result<DehnTensor, ClassicalError> {
    let mut terms = Vec::new();
    for k in 0..p.simplices.len() {
        let s = p.simplex(k);
        if s.dim() != 3 {
            return Err(ClassicalError::Dimension(s.dim()));
        }
        let sign = r.int(p.simplices[k].1);
        for (a, b) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
            let theta = dihedral_angle(r, &s, &[a, b])?;
            let len = s.edge_length(r, a, b);
            terms.push((r.mul(&sign, &len), theta));
        }
    }
    Ok(DehnTensor { terms, bits: r.bits })
}

#[derive(Debug, Clone)]
pub enum PslqOutcome {
    Relation(Vec<BigInt>),
    /// every integer relation has euclidean norm above this bound
    NoRelation(f64),
}

/// Integer relation search (PSLQ) with coefficient bound on the max norm.
pub fn pslq(r: &Real, x: &[BigFloat], coeff_bound: i64, max_iter: usize) -> Result<PslqOutcome, ClassicalError> {
    let n = x.len();
    if n < 2 {
        return Err(ClassicalError::Dimension(n));
    }
    if let Some(k) = x.iter().position(|v| r.is_small(v)) {
        let mut m = vec![BigInt::from(0); n];
        m[k] = BigInt::from(1);
        return Ok(PslqOutcome::Relation(m));
    }
    let zero = r.int(0);
    let gamma = r.div(&r.int(2), &r.sqrt(&r.int(3)));
    let mut s = vec![zero.clone(); n];
    let mut acc = zero.clone();
    for k in (0..n).rev() {
        acc = r.add(&acc, &r.mul(&x[k], &x[k]));
        s[k] = r.sqrt(&acc);
    }
    let t = s[0].clone();
    let mut y: Vec<BigFloat> = x.iter().map(|v| r.div(v, &t)).collect();
    let s: Vec<BigFloat> = s.iter().map(|v| r.div(v, &t)).collect();
    let mut h = vec![vec![zero.clone(); n - 1]; n];
    for i in 0..n {
        for j in 0..(n - 1).min(i + 1) {
            h[i][j] = if i == j {
                r.div(&s[j + 1], &s[j])
            } else {
                -&r.div(&r.mul(&y[i], &y[j]), &r.mul(&s[j], &s[j + 1]))
            };
        }
    }
    let izero = BigInt::from(0);
    let mut a: Vec<Vec<BigInt>> = (0..n).map(|i| (0..n).map(|j| BigInt::from((i == j) as i64)).collect()).collect();
    let mut b = a.clone();
    let detect = r.tiny(r.bits * 3 / 4);
    let limit = (coeff_bound as f64) * (n as f64).sqrt();

    // Hermite reduction of H, mirrored on y, A and B
    let reduce = |h: &mut Vec<Vec<BigFloat>>, y: &mut Vec<BigFloat>, a: &mut Vec<Vec<BigInt>>, b: &mut Vec<Vec<BigInt>>| -> Result<(), ClassicalError> {
        for i in 1..n {
            for j in (0..i.min(n - 1)).rev() {
                if h[j][j].is_zero() {
                    continue;
                }
                let q = r.nint(&r.div(&h[i][j], &h[j][j])).ok_or_else(|| ClassicalError::PrecisionExhausted("reduction overflow".into()))?;
                if q == izero {
                    continue;
                }
                let qf = r.from_bigint(&q);
                y[j] = r.add(&y[j], &r.mul(&qf, &y[i]));
                for k in 0..=j {
                    let v = r.mul(&qf, &h[j][k]);
                    h[i][k] = r.sub(&h[i][k], &v);
                }
                for k in 0..n {
                    let v = &q * &a[j][k];
                    a[i][k] -= v;
                    let w = &q * &b[k][i];
                    b[k][j] += w;
                }
            }
        }
        Ok(())
    };

    // exchange the rows with the largest weighted diagonal entry, then restore the corner
    let exchange = |h: &mut Vec<Vec<BigFloat>>, y: &mut Vec<BigFloat>, a: &mut Vec<Vec<BigInt>>, b: &mut Vec<Vec<BigInt>>| -> Result<(), ClassicalError> {
        let mut m = 0;
        let mut best = zero.clone();
        let mut g = gamma.clone();
        for i in 0..n - 1 {
            let v = r.mul(&g, &h[i][i].abs());
            if r.gt(&v, &best) {
                best = v;
                m = i;
            }
            g = r.mul(&g, &gamma);
        }
        y.swap(m, m + 1);
        a.swap(m, m + 1);
        h.swap(m, m + 1);
        for row in b.iter_mut() {
            row.swap(m, m + 1);
        }
        if m + 2 < n {
            let t0 = r.sqrt(&r.add(&r.mul(&h[m][m], &h[m][m]), &r.mul(&h[m][m + 1], &h[m][m + 1])));
            if t0.is_zero() {
                return Err(ClassicalError::PrecisionExhausted("vanishing corner".into()));
            }
            let t1 = r.div(&h[m][m], &t0);
            let t2 = r.div(&h[m][m + 1], &t0);
            for row in h.iter_mut().skip(m) {
                let (t3, t4) = (row[m].clone(), row[m + 1].clone());
                row[m] = r.add(&r.mul(&t1, &t3), &r.mul(&t2, &t4));
                row[m + 1] = r.sub(&r.mul(&t1, &t4), &r.mul(&t2, &t3));
            }
        }
        Ok(())
    };

    reduce(&mut h, &mut y, &mut a, &mut b)?;
    for iter in 0..=max_iter {
        if iter > 0 {
            exchange(&mut h, &mut y, &mut a, &mut b)?;
            reduce(&mut h, &mut y, &mut a, &mut b)?;
        }
        let hmax = (0..n - 1).map(|i| h[i][i].abs()).fold(zero.clone(), |m, v| if r.gt(&v, &m) { v } else { m });
        let bound = if hmax.is_zero() { f64::INFINITY } else { 1.0 / r.to_f64(&hmax) };
        if let Some(j) = (0..n).find(|&j| r.lt(&y[j].abs(), &detect)) {
            let rel: Vec<BigInt> = (0..n).map(|i| b[i][j].clone()).collect();
            let maxc = rel.iter().map(|c| c.magnitude().clone()).max().unwrap_or_default();
            if maxc > BigUint::from(coeff_bound as u64) {
                return Ok(PslqOutcome::NoRelation(bound));
            }
            let resid = x.iter().zip(&rel).fold(zero.clone(), |s, (xi, mi)| r.add(&s, &r.mul(xi, &r.from_bigint(mi))));
            if !r.is_small(&resid) {
                return Err(ClassicalError::PrecisionExhausted("candidate relation fails the residual test".into()));
            }
            return Ok(PslqOutcome::Relation(rel));
        }
        if bound > limit {
            return Ok(PslqOutcome::NoRelation(bound));
        }
    }
    Err(ClassicalError::PrecisionExhausted(format!("no decision after {max_iter} iterations")))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReducePolicy {
    /// bound on the max norm of integer relations
    pub coeff_bound: i64,
    /// also reduce the length factors modulo rational multiples of π
    pub lengths_mod_pi: bool,
}

impl Default for ReducePolicy {
    fn default() -> Self {
        ReducePolicy { coeff_bound: 1_000_000, lengths_mod_pi: false }
    }
}

/// Integer relation among basis angles and a new angle, coefficients in that order.
#[derive(Debug, Clone, Serialize)]
pub struct Relation {
    pub angle: String,
    pub coefficients: Vec<String>,
    /// log2 |Σ m_i x_i|
    pub residual_log2: f64,
}

/// Evidence that an angle is not a rational combination of the earlier basis.
#[derive(Debug, Clone, Serialize)]
pub struct NonRelation {
    pub angle: String,
    /// every relation has euclidean norm above this
    pub norm_bound: f64,
}

/// Detected Q-basis of the angles modulo π, with π first.
#[derive(Debug, Clone, Serialize)]
pub struct AngleBasis {
    pub angles: Vec<String>,
    pub relations: Vec<Relation>,
    pub certificates: Vec<NonRelation>,
    pub bits: usize,
    pub coeff_bound: i64,
    pub heuristic: bool,
}

/// Σ_k L_k ⊗ b_k over basis angles b_k independent modulo πQ.
#[derive(Debug, Clone)]
pub struct ReducedTensor {
    pub basis: AngleBasis,
    pub terms: Vec<(BigFloat, BigFloat)>,
    pub zero: bool,
    pub nonzero_heuristic: bool,
    pub policy: ReducePolicy,
}

impl ReducedTensor {
    pub fn to_json(&self, r: &Real) -> Value {
        json!({
            "zero": self.zero,
            "nonzero_heuristic": self.nonzero_heuristic,
            "terms": self.terms.iter().map(|(l, a)| json!({"length": r.to_decimal(l), "angle": r.to_decimal(a)})).collect::<Vec<_>>(),
            "basis": self.basis,
            "policy": self.policy,
        })
    }
}

fn log2_abs(r: &Real, x: &BigFloat) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    match x.exponent() {
        Some(e) => e as f64 + r.to_f64(&x.abs()).log2().fract().min(0.0),
        None => f64::NAN,
    }
}

/// Canonical form of a Dehn tensor: angles reduced modulo π, merged, and expressed
/// over a detected Q-basis that contains π; multiples of π drop out by divisibility.
pub fn tensor_reduce(r: &Real, t: &DehnTensor, policy: ReducePolicy) -> Result<ReducedTensor, ClassicalError> {
    let pi = r.pi();
    let mut merged: Vec<(BigFloat, BigFloat)> = Vec::new();
    for (l, a) in &t.terms {
        let k = r.div(a, &pi).floor();
        let a = r.sub(a, &r.mul(&k, &pi));
        match merged.iter_mut().find(|(_, b)| r.is_small(&r.sub(b, &a))) {
            Some(e) => e.0 = r.add(&e.0, l),
            None => merged.push((l.clone(), a)),
        }
    }
    merged.retain(|(l, a)| !r.is_small(l) && !r.is_small(a));
    let mut basis = vec![pi.clone()];
    let mut coeffs: Vec<BigFloat> = Vec::new();
    let mut relations = Vec::new();
    let mut certificates = Vec::new();
    for (l, a) in &merged {
        let mut xs = basis.clone();
        xs.push(a.clone());
        match pslq(r, &xs, policy.coeff_bound, 4000)? {
            PslqOutcome::Relation(m) => {
                let c = m.last().cloned().unwrap_or_default();
                if c == BigInt::from(0) {
                    return Err(ClassicalError::PrecisionExhausted("basis angles became dependent".into()));
                }
                let resid = xs.iter().zip(&m).fold(r.int(0), |s, (x, mi)| r.add(&s, &r.mul(x, &r.from_bigint(mi))));
                relations.push(Relation {
                    angle: r.to_decimal(a),
                    coefficients: m.iter().map(|v| v.to_string()).collect(),
                    residual_log2: log2_abs(r, &resid),
                });
                // a = -(1/c) Σ m_k b_k
                let cf = r.from_bigint(&c);
                for (k, mk) in m[..basis.len()].iter().enumerate().skip(1) {
                    let q = r.div(&r.from_bigint(mk), &cf);
                    coeffs[k - 1] = r.sub(&coeffs[k - 1], &r.mul(l, &q));
                }
            }
            PslqOutcome::NoRelation(bound) => {
                certificates.push(NonRelation { angle: r.to_decimal(a), norm_bound: bound });
                basis.push(a.clone());
                coeffs.push(l.clone());
            }
        }
    }
    let mut terms = Vec::new();
    for (k, l) in coeffs.iter().enumerate() {
        if r.is_small(l) {
            continue;
        }
        if policy.lengths_mod_pi {
            if let PslqOutcome::Relation(m) = pslq(r, &[pi.clone(), l.clone()], policy.coeff_bound, 4000)? {
                if m[1] != BigInt::from(0) {
                    continue;
                }
            }
        }
        terms.push((l.clone(), basis[k + 1].clone()));
    }
    let zero = terms.is_empty();
    Ok(ReducedTensor {
        basis: AngleBasis {
            angles: basis.iter().map(|b| r.to_decimal(b)).collect(),
            relations,
            certificates,
            bits: r.bits,
            coeff_bound: policy.coeff_bound,
            heuristic: true,
        },
        terms,
        zero,
        nonzero_heuristic: !zero,
        policy,
    })
}

/// Σ(Q): the two cones over a polytope in V ∩ S^n to the unit normals ±N of V.
pub fn suspension_sigma(r: &Real, q: &Polytope, normal: Option<Vec<BigFloat>>) -> Result<Polytope, ClassicalError> {
    if q.geometry != Geometry::Spherical {
        return Err(ClassicalError::InvalidSimplex("suspension needs a spherical polytope".into()));
    }
    if q.simplices.is_empty() {
        return Ok(Polytope { geometry: Geometry::Spherical, vertices: vec![], simplices: vec![] });
    }
    let n = q.vertices[0].len();
    let nv = match normal {
        Some(v) => normalize(r, Geometry::Spherical, &v).ok_or_else(|| ClassicalError::InvalidSimplex("zero normal".into()))?,
        None => (0..n).map(|i| r.int(if i + 1 == n { 1 } else { 0 })).collect(),
    };
    for (i, v) in q.vertices.iter().enumerate() {
        if !r.is_small(&r.dot(v, &nv)) {
            return Err(ClassicalError::NotInHyperplane(i));
        }
    }
    let mut vertices = q.vertices.clone();
    let north = vertices.len();
    vertices.push(nv.clone());
    vertices.push(nv.iter().map(|x| -x).collect());
    let mut simplices = Vec::new();
    for (idx, s) in &q.simplices {
        for pole in [north, north + 1] {
            let mut t = idx.clone();
            t.push(pole);
            simplices.push((t, *s));
        }
    }
    Ok(Polytope { geometry: Geometry::Spherical, vertices, simplices })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VolumeResult {
    pub value: f64,
    pub error: f64,
    pub method: &'static str,
}

/// Volume of a simplex of dimension ≤ 3 (any dimension for euclidean).
pub fn volume(r: &Real, s: &GeodesicSimplex, tol: f64) -> Result<VolumeResult, ClassicalError> {
    let d = s.dim();
    match (s.geometry, d) {
        (Geometry::Euclidean, _) => {
            let rows = s.span_vectors(r, &(0..=d).collect::<Vec<_>>());
            let g = gram(r, Geometry::Euclidean, &rows);
            let v = r.sqrt(&det(r, &g).abs());
            let fact: i64 = (1..=d as i64).product();
            Ok(VolumeResult { value: r.to_f64(&r.div(&v, &r.int(fact))), error: 0.0, method: "determinant" })
        }
        (_, 1) => Ok(VolumeResult { value: r.to_f64(&s.edge_length(r, 0, 1)), error: 0.0, method: "length" }),
        (g, 2) => {
            let mut sum = r.int(0);
            for v in 0..3 {
                sum = r.add(&sum, &dihedral_angle(r, s, &[v])?);
            }
            let pi = r.pi();
            let value = if g == Geometry::Spherical { r.sub(&sum, &pi) } else { r.sub(&pi, &sum) };
            Ok(VolumeResult { value: r.to_f64(&value), error: 0.0, method: "angle sum" })
        }
        (_, 3) => volume_by_quadrature(r, s, tol),
        _ => Err(ClassicalError::Dimension(d)),
    }
}

/// Spherical or hyperbolic volume as an integral over barycentric coordinates of the
/// radial projection factor, by Romberg extrapolation of midpoint sums on the cube
/// mapped onto the simplex.
pub fn volume_by_quadrature(r: &Real, s: &GeodesicSimplex, tol: f64) -> Result<VolumeResult, ClassicalError> {
    let d = s.dim();
    if s.geometry == Geometry::Euclidean || !(2..=3).contains(&d) {
        return Err(ClassicalError::Dimension(d));
    }
    let x = s.to_f64(r);
    let hyp = s.geometry == Geometry::Hyperbolic;
    let dx = r.to_f64(&det(r, &s.vertices)).abs();
    let weight = move |t: &[f64]| -> f64 {
        let mut y = vec![0.0; d + 1];
        let t0 = 1.0 - t.iter().sum::<f64>();
        for (k, xi) in x.iter().enumerate() {
            let w = if k == 0 { t0 } else { t[k - 1] };
            for (yi, v) in y.iter_mut().zip(xi) {
                *yi += w * v;
            }
        }
        let q: f64 = if hyp { y[1..].iter().map(|v| v * v).sum::<f64>() - y[0] * y[0] } else { y.iter().map(|v| v * v).sum() };
        let m = if hyp { -q } else { q };
        m.powf(-((d + 1) as f64) / 2.0)
    };
    let integrand = |u: &[f64]| -> f64 {
        if d == 2 {
            let t = [u[0], (1.0 - u[0]) * u[1]];
            weight(&t) * (1.0 - u[0])
        } else {
            let t = [u[0], (1.0 - u[0]) * u[1], (1.0 - u[0]) * (1.0 - u[1]) * u[2]];
            weight(&t) * (1.0 - u[0]).powi(2) * (1.0 - u[1])
        }
    };
    let midpoint = |n: usize| -> f64 {
        let h = 1.0 / n as f64;
        let mut sum = 0.0;
        let mut u = vec![0.0; d];
        let total = n.pow(d as u32);
        for idx in 0..total {
            let mut k = idx;
            for c in u.iter_mut() {
                *c = ((k % n) as f64 + 0.5) * h;
                k /= n;
            }
            sum += integrand(&u);
        }
        sum * h.powi(d as i32)
    };
    let max_level = if d == 2 { 10 } else { 7 };
    let mut table: Vec<Vec<f64>> = Vec::new();
    let mut err = f64::INFINITY;
    for level in 0..=max_level {
        let n = 2usize << level;
        let mut row = vec![midpoint(n)];
        for j in 1..=level {
            let f = 4f64.powi(j as i32);
            let v = row[j - 1] + (row[j - 1] - table[level - 1][j - 1]) / (f - 1.0);
            row.push(v);
        }
        if level >= 2 {
            err = (row[level] - table[level - 1][level - 1]).abs();
            if err < tol {
                return Ok(VolumeResult { value: dx * row[level], error: dx * err, method: "romberg" });
            }
        }
        table.push(row);
    }
    Err(ClassicalError::ToleranceNotMet { tol, err: dx * err })
}

/// The simplex (x0, g_d x0, g_d g_{d-1} x0, …, g_d ⋯ g_1 x0) with sign ∏ det g_i.
pub fn ccs_simplex(
    r: &Real,
    geometry: Geometry,
    tuple: &[Vec<Vec<BigFloat>>],
    x0: &[BigFloat],
) -> Result<(GeodesicSimplex, i64), ClassicalError> {
    let n = x0.len();
    let j: Vec<BigFloat> = (0..n).map(|i| r.int(if geometry == Geometry::Hyperbolic && i == 0 { -1 } else { 1 })).collect();
    let mut sign = 1;
    for (k, g) in tuple.iter().enumerate() {
        if g.len() != n || g.iter().any(|row| row.len() != n) {
            return Err(ClassicalError::NotIsometry(k));
        }
        for a in 0..n {
            for b in 0..n {
                let mut s = r.int(0);
                for i in 0..n {
                    s = r.add(&s, &r.mul(&r.mul(&g[i][a], &g[i][b]), &j[i]));
                }
                let want = if a == b { j[a].clone() } else { r.int(0) };
                if !r.is_small(&r.sub(&s, &want)) {
                    return Err(ClassicalError::NotIsometry(k));
                }
            }
        }
        if det(r, g).is_negative() {
            sign = -sign;
        }
    }
    let mut pts = vec![x0.to_vec()];
    let mut cur: Vec<Vec<BigFloat>> = (0..n).map(|i| (0..n).map(|k| r.int((i == k) as i64)).collect()).collect();
    for g in tuple.iter().rev() {
        cur = cur.iter().map(|row| (0..n).map(|c| (0..n).fold(r.int(0), |s, k| r.add(&s, &r.mul(&row[k], &g[k][c])))).collect()).collect();
        pts.push(cur.iter().map(|row| r.dot(row, x0)).collect());
    }
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            if vsub(r, &pts[a], &pts[b]).iter().all(|v| r.is_small(v)) {
                return Err(ClassicalError::NotGeneric(format!("points {a} and {b} coincide")));
            }
        }
    }
    let s = GeodesicSimplex { geometry, vertices: pts };
    s.validate(r).map_err(|e| ClassicalError::NotGeneric(e.to_string()))?;
    Ok((s, sign))
}

pub fn rotation(r: &Real, n: usize, i: usize, j: usize, angle: &BigFloat) -> Vec<Vec<BigFloat>> {
    let (c, s) = (r.cos(angle), r.sin(angle));
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| match (a, b) {
                    _ if a == i && b == i => c.clone(),
                    _ if a == j && b == j => c.clone(),
                    _ if a == i && b == j => -&s,
                    _ if a == j && b == i => s.clone(),
                    _ => r.int((a == b) as i64),
                })
                .collect()
        })
        .collect()
}

pub fn simplex_json(r: &Real, s: &GeodesicSimplex) -> Value {
    json!({
        "flavor": s.geometry,
        "vertices": s.vertices.iter().map(|v| v.iter().map(|x| r.to_decimal(x)).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    fn unit(r: &Real, v: &[f64]) -> Vec<BigFloat> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| r.from_f64(x / n)).collect()
    }

    #[test]
    fn dihedral_examples() {
        let r = Real::new(128);
        let cube = Polytope::unit_cube(&r);
        let s = cube.simplex(0);
        let angles: Vec<f64> =
            [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)].iter().map(|&(a, b)| r.to_f64(&dihedral_angle(&r, &s, &[a, b]).unwrap())).collect();
        assert!(angles.iter().any(|&a| close(a, std::f64::consts::FRAC_PI_2, 1e-15)));
        let t = Polytope::regular_tetrahedron(&r).simplex(0);
        let a = dihedral_angle(&r, &t, &[0, 1]).unwrap();
        assert!(r.is_small(&r.sub(&a, &r.acos(&r.ratio(1, 3)))));
        let oct = GeodesicSimplex::new(&r, Geometry::Spherical, vec![unit(&r, &[1., 0., 0.]), unit(&r, &[0., 1., 0.]), unit(&r, &[0., 0., 1.])]).unwrap();
        for v in 0..3 {
            assert!(close(r.to_f64(&dihedral_angle(&r, &oct, &[v]).unwrap()), std::f64::consts::FRAC_PI_2, 1e-15));
        }
        assert!(matches!(dihedral_angle(&r, &t, &[0]), Err(ClassicalError::DegenerateFace(_))));
    }

    #[test]
    fn pslq_finds_and_rejects() {
        let r = Real::new(200);
        let pi = r.pi();
        let x = [pi.clone(), r.div(&pi, &r.int(2))];
        match pslq(&r, &x, 1_000_000, 1000).unwrap() {
            PslqOutcome::Relation(m) => {
                let m: Vec<i64> = m.iter().map(|v| v.to_i64().unwrap()).collect();
                assert!(m == vec![1, -2] || m == vec![-1, 2], "{m:?}");
            }
            o => panic!("{o:?}"),
        }
        let x = [pi.clone(), r.acos(&r.ratio(1, 3))];
        match pslq(&r, &x, 1_000_000, 1000).unwrap() {
            PslqOutcome::NoRelation(b) => assert!(b > 1e6),
            o => panic!("{o:?}"),
        }
        // 3 ln2 - ln 8 style relation among three numbers
        let s2 = r.sqrt(&r.int(2));
        let s3 = r.sqrt(&r.int(3));
        let comb = r.sub(&r.mul(&r.int(5), &s2), &r.mul(&r.int(7), &s3));
        match pslq(&r, &[s2, s3, comb], 1_000_000, 1000).unwrap() {
            PslqOutcome::Relation(m) => {
                let m: Vec<i64> = m.iter().map(|v| v.to_i64().unwrap()).collect();
                assert!(m == vec![5, -7, -1] || m == vec![-5, 7, 1], "{m:?}");
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn cube_and_tetrahedron() {
        let r = Real::new(200);
        let cube = tensor_reduce(&r, &dehn_classical(&r, &Polytope::unit_cube(&r)).unwrap(), ReducePolicy::default()).unwrap();
        assert!(cube.zero);
        let bx = Polytope::euclidean_box(&r, &r.ratio(3, 2), &r.sqrt(&r.int(2)), &r.int(5));
        assert!(tensor_reduce(&r, &dehn_classical(&r, &bx).unwrap(), ReducePolicy::default()).unwrap().zero);
        let tet = tensor_reduce(&r, &dehn_classical(&r, &Polytope::regular_tetrahedron(&r)).unwrap(), ReducePolicy::default()).unwrap();
        assert!(!tet.zero && tet.nonzero_heuristic);
        assert_eq!(tet.terms.len(), 1);
        assert!(r.is_small(&r.sub(&tet.terms[0].0, &r.int(6))));
        assert!(r.is_small(&r.sub(&tet.terms[0].1, &r.acos(&r.ratio(1, 3)))));
        assert!(tet.basis.certificates.iter().all(|c| c.norm_bound > 1e6));
    }

    #[test]
    fn tensor_reduce_examples() {
        let r = Real::new(200);
        let pi = r.pi();
        let half = DehnTensor { terms: vec![(r.int(1), r.div(&pi, &r.int(2)))], bits: 200 };
        assert!(tensor_reduce(&r, &half, ReducePolicy::default()).unwrap().zero);
        let th = r.acos(&r.ratio(1, 5));
        let cancel = DehnTensor { terms: vec![(r.int(2), th.clone()), (r.int(-2), th.clone())], bits: 200 };
        assert!(tensor_reduce(&r, &cancel, ReducePolicy::default()).unwrap().zero);
        // 1 ⊗ θ + 1 ⊗ (π - θ) = 1 ⊗ π = 0
        let supp = DehnTensor { terms: vec![(r.int(1), th.clone()), (r.int(1), r.sub(&pi, &th))], bits: 200 };
        assert!(tensor_reduce(&r, &supp, ReducePolicy::default()).unwrap().zero);
        let single = DehnTensor { terms: vec![(r.int(1), r.acos(&r.ratio(1, 3)))], bits: 200 };
        let red = tensor_reduce(&r, &single, ReducePolicy::default()).unwrap();
        assert!(!red.zero && red.nonzero_heuristic);
    }

    #[test]
    fn isometry_invariance_and_additivity() {
        let r = Real::new(200);
        let p = Polytope::regular_tetrahedron(&r);
        let rot = rotation(&r, 3, 0, 2, &r.ratio(2, 7));
        let q = p.map_vertices(&r, &rot);
        let diff = dehn_classical(&r, &p).unwrap().minus(&dehn_classical(&r, &q).unwrap());
        assert!(tensor_reduce(&r, &diff, ReducePolicy::default()).unwrap().zero);
        // cut the tetrahedron through the midpoint of edge 01
        let mut vs = p.vertices.clone();
        vs.push(vs[0].iter().zip(&vs[1]).map(|(a, b)| r.div(&r.add(a, b), &r.int(2))).collect());
        let halves = Polytope { geometry: Geometry::Euclidean, vertices: vs, simplices: vec![(vec![0, 4, 2, 3], 1), (vec![4, 1, 2, 3], 1)] };
        let diff = dehn_classical(&r, &p).unwrap().minus(&dehn_classical(&r, &halves).unwrap());
        assert!(tensor_reduce(&r, &diff, ReducePolicy::default()).unwrap().zero);
    }

    #[test]
    fn dehn_i_matches_dihedral() {
        let r = Real::new(128);
        let t = Polytope::regular_tetrahedron(&r).simplex(0);
        let terms = classical_dehn_i(&r, &t, 1).unwrap();
        assert_eq!(terms.len(), 6);
        for term in &terms {
            let arc = term.link.edge_length(&r, 0, 1);
            let ang = dihedral_angle(&r, &t, &term.face).unwrap();
            assert!(r.is_small(&r.sub(&arc, &ang)));
        }
        let oct = GeodesicSimplex::new(
            &r,
            Geometry::Spherical,
            (0..4).map(|i| (0..4).map(|k| r.int((i == k) as i64)).collect()).collect(),
        )
        .unwrap();
        for term in classical_dehn_i(&r, &oct, 1).unwrap() {
            assert!(r.is_small(&form(&r, Geometry::Spherical, &term.link.vertices[0], &term.link.vertices[1])));
        }
        assert!(matches!(classical_dehn_i(&r, &t, 3), Err(ClassicalError::Dimension(3))));
    }

    #[test]
    fn volumes() {
        let r = Real::new(128);
        let cube = Polytope::unit_cube(&r);
        let total: f64 = (0..6).map(|k| volume(&r, &cube.simplex(k), 1e-9).unwrap().value).sum();
        assert!(close(total, 1.0, 1e-14));
        let t = volume(&r, &Polytope::regular_tetrahedron(&r).simplex(0), 1e-9).unwrap().value;
        assert!(close(t, 2f64.sqrt() / 12.0, 1e-14));
        let oct = GeodesicSimplex::new(&r, Geometry::Spherical, vec![unit(&r, &[1., 0., 0.]), unit(&r, &[0., 1., 0.]), unit(&r, &[0., 0., 1.])]).unwrap();
        assert!(close(volume(&r, &oct, 1e-9).unwrap().value, std::f64::consts::FRAC_PI_2, 1e-14));
        let q = volume_by_quadrature(&r, &oct, 1e-10).unwrap();
        assert!(close(q.value, std::f64::consts::FRAC_PI_2, 1e-8), "{q:?}");
        let s3 = GeodesicSimplex::new(&r, Geometry::Spherical, (0..4).map(|i| (0..4).map(|k| r.int((i == k) as i64)).collect()).collect()).unwrap();
        let v = volume(&r, &s3, 1e-9).unwrap();
        assert!(close(v.value, std::f64::consts::PI.powi(2) / 8.0, 1e-8), "{v:?}");
    }

    fn hyp_point(r: &Real, v: &[f64]) -> Vec<BigFloat> {
        let xs: Vec<BigFloat> = v.iter().map(|x| r.from_f64(*x)).collect();
        let mut out = vec![r.sqrt(&r.add(&r.int(1), &r.dot(&xs, &xs)))];
        out.extend(xs);
        out
    }

    #[test]
    fn hyperbolic_volumes() {
        let r = Real::new(128);
        let tri = GeodesicSimplex::new(&r, Geometry::Hyperbolic, vec![hyp_point(&r, &[0., 0.]), hyp_point(&r, &[1., 0.]), hyp_point(&r, &[0.3, 0.8])]).unwrap();
        let a = volume(&r, &tri, 1e-10).unwrap().value;
        let b = volume_by_quadrature(&r, &tri, 1e-11).unwrap().value;
        assert!(close(a, b, 1e-8), "{a} {b}");
        // splitting a tetrahedron at an edge point adds up
        let p = [[0., 0., 0.], [0.9, 0., 0.], [0.1, 0.7, 0.], [0.2, 0.3, 0.8]];
        let vs: Vec<Vec<BigFloat>> = p.iter().map(|v| hyp_point(&r, v)).collect();
        let whole = GeodesicSimplex::new(&r, Geometry::Hyperbolic, vs.clone()).unwrap();
        let mid = normalize_hyp(&r, &vs[0], &vs[1]);
        let h1 = GeodesicSimplex::new(&r, Geometry::Hyperbolic, vec![vs[0].clone(), mid.clone(), vs[2].clone(), vs[3].clone()]).unwrap();
        let h2 = GeodesicSimplex::new(&r, Geometry::Hyperbolic, vec![mid, vs[1].clone(), vs[2].clone(), vs[3].clone()]).unwrap();
        let (w, x, y) = (volume(&r, &whole, 1e-10).unwrap(), volume(&r, &h1, 1e-10).unwrap(), volume(&r, &h2, 1e-10).unwrap());
        assert!(close(w.value, x.value + y.value, 1e-8), "{w:?} {x:?} {y:?}");
    }

    fn normalize_hyp(r: &Real, a: &[BigFloat], b: &[BigFloat]) -> Vec<BigFloat> {
        let s: Vec<BigFloat> = a.iter().zip(b).map(|(x, y)| r.add(x, y)).collect();
        let q = -&form(r, Geometry::Hyperbolic, &s, &s);
        vscale(r, &s, &r.sqrt(&q).reciprocal(r.p, RM))
    }

    #[test]
    fn suspensions() {
        let r = Real::new(128);
        let th = 0.7f64;
        let arc = Polytope {
            geometry: Geometry::Spherical,
            vertices: vec![unit(&r, &[1., 0., 0.]), unit(&r, &[th.cos(), th.sin(), 0.])],
            simplices: vec![(vec![0, 1], 1)],
        };
        let lune = suspension_sigma(&r, &arc, None).unwrap();
        assert_eq!(lune.simplices.len(), 2);
        let area: f64 = (0..2).map(|k| volume(&r, &lune.simplex(k), 1e-9).unwrap().value).sum();
        assert!(close(area, 2.0 * th, 1e-12));
        let eq: Vec<Vec<BigFloat>> = (0..3).map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            unit(&r, &[a.cos(), a.sin(), 0.])
        }).collect();
        let equator = Polytope { geometry: Geometry::Spherical, vertices: eq, simplices: vec![(vec![0, 1], 1), (vec![1, 2], 1), (vec![2, 0], 1)] };
        let sphere = suspension_sigma(&r, &equator, None).unwrap();
        let total: f64 = (0..6).map(|k| volume(&r, &sphere.simplex(k), 1e-9).unwrap().value).sum();
        assert!(close(total, 4.0 * std::f64::consts::PI, 1e-9));
        let empty = Polytope { geometry: Geometry::Spherical, vertices: vec![], simplices: vec![] };
        assert!(suspension_sigma(&r, &empty, None).unwrap().simplices.is_empty());
        let off = Polytope { geometry: Geometry::Spherical, vertices: vec![unit(&r, &[1., 0., 1.]), unit(&r, &[0., 1., 0.])], simplices: vec![(vec![0, 1], 1)] };
        assert!(matches!(suspension_sigma(&r, &off, None), Err(ClassicalError::NotInHyperplane(0))));
    }

    #[test]
    fn suspended_triangle_vanishes_in_reduced_tensor() {
        let r = Real::new(200);
        let tri = Polytope {
            geometry: Geometry::Spherical,
            vertices: vec![unit(&r, &[1., 0., 0., 0.]), unit(&r, &[0.2, 1., 0., 0.]), unit(&r, &[0.3, 0.1, 1., 0.])],
            simplices: vec![(vec![0, 1, 2], 1)],
        };
        let s = suspension_sigma(&r, &tri, None).unwrap();
        let t = dehn_classical(&r, &s).unwrap();
        let reduced = tensor_reduce(&r, &t, ReducePolicy { lengths_mod_pi: true, ..Default::default() }).unwrap();
        assert!(reduced.zero);
        let plain = tensor_reduce(&r, &t, ReducePolicy::default()).unwrap();
        assert!(!plain.zero);
    }

    #[test]
    fn ccs_examples() {
        let r = Real::new(128);
        let x0 = vec![r.int(1), r.int(0)];
        let rot = rotation(&r, 2, 0, 1, &r.ratio(3, 10));
        let (s, sign) = ccs_simplex(&r, Geometry::Spherical, &[rot.clone()], &x0).unwrap();
        assert_eq!(sign, 1);
        assert!(r.is_small(&r.sub(&s.edge_length(&r, 0, 1), &r.ratio(3, 10))));
        let flip = rotation(&r, 2, 0, 1, &r.pi());
        assert!(matches!(ccs_simplex(&r, Geometry::Spherical, &[flip], &x0), Err(ClassicalError::NotGeneric(_))));
        let refl = vec![vec![r.int(0), r.int(1)], vec![r.int(1), r.int(0)]];
        let (_, sign) = ccs_simplex(&r, Geometry::Spherical, &[refl], &x0).unwrap();
        assert_eq!(sign, -1);
        // vertex order x0, g2 x0, g2 g1 x0
        let x3 = vec![r.int(1), r.int(0), r.int(0)];
        let g1 = rotation(&r, 3, 0, 1, &r.ratio(1, 2));
        let g2 = rotation(&r, 3, 0, 2, &r.ratio(1, 3));
        let (s, _) = ccs_simplex(&r, Geometry::Spherical, &[g1.clone(), g2.clone()], &x3).unwrap();
        let g2x: Vec<BigFloat> = g2.iter().map(|row| r.dot(row, &x3)).collect();
        assert!(vsub(&r, &s.vertices[1], &g2x).iter().all(|v| r.is_small(v)));
        let g1x: Vec<BigFloat> = g1.iter().map(|row| r.dot(row, &x3)).collect();
        let g2g1x: Vec<BigFloat> = g2.iter().map(|row| r.dot(row, &g1x)).collect();
        assert!(vsub(&r, &s.vertices[2], &g2g1x).iter().all(|v| r.is_small(v)));
    }

    #[test]
    fn polytope_json_round_trip() {
        let r = Real::new(128);
        let p = Polytope::regular_tetrahedron(&r);
        let q = Polytope::from_json(&r, &p.to_json(&r)).unwrap();
        assert_eq!(q.simplices, p.simplices);
        let bad = json!({"flavor": "euclidean", "vertices": [["0","0","0"]], "simplices": [[0, 1, 2, 3, 1]]});
        assert!(Polytope::from_json(&r, &bad).is_err());
    }
}
