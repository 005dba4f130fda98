//! Finite groups given by multiplication tables, optional rational isometry
//! embeddings, sign characters, and bar-complex group homology.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactlin::{
    fmt_q, is_isometry, mat_mul, null_space, parse_q, Isometry, LinError, Matrix, QuadSpace, Q,
};
use crate::homology::{homology, induced_homology, ChainComplex, Coeff, HomologyData, HomologyGroup, SparseCol};
use crate::simpset::{GroupAction, HomotopyOrbits, SimpError, SimpSet};

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("table is not a group: {0}")]
    NotAGroup(String),
    #[error("character is not multiplicative at ({0}, {1})")]
    BadCharacter(usize, usize),
    #[error("matrix {0} is not an isometry")]
    NotIsometry(usize),
    #[error("group generated by the matrices exceeds {0} elements")]
    TooLarge(usize),
    #[error(transparent)]
    Lin(#[from] LinError),
    #[error("reduced homology is not concentrated in one free degree: {0}")]
    NotConcentrated(String),
    #[error(transparent)]
    Simp(#[from] SimpError),
}

#[derive(Debug, Clone)]
pub struct FiniteGroup {
    pub labels: Vec<String>,
    /// table[a][b] = a*b
    pub table: Vec<Vec<usize>>,
    pub identity: usize,
    pub inverse: Vec<usize>,
    pub matrices: Option<Vec<Isometry>>,
    /// det character, +1 or -1
    pub det: Vec<i8>,
}

impl FiniteGroup {
    pub fn from_table(labels: Vec<String>, table: Vec<Vec<usize>>, det: Vec<i8>) -> Result<Self, GroupError> {
        let n = table.len();
        if n == 0 || table.iter().any(|r| r.len() != n || r.iter().any(|&x| x >= n)) {
            return Err(GroupError::NotAGroup("table shape".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|a| table[e][a] == a && table[a][e] == a))
            .ok_or_else(|| GroupError::NotAGroup("no identity".into()))?;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(GroupError::NotAGroup(format!("associativity at ({a},{b},{c})")));
                    }
                }
            }
        }
        let mut inverse = vec![0; n];
        for a in 0..n {
            inverse[a] = (0..n)
                .find(|&b| table[a][b] == identity)
                .ok_or_else(|| GroupError::NotAGroup(format!("{a} has no inverse")))?;
        }
        if det.len() != n {
            return Err(GroupError::NotAGroup("character length".into()));
        }
        for a in 0..n {
            for b in 0..n {
                if det[table[a][b]] != det[a] * det[b] {
                    return Err(GroupError::BadCharacter(a, b));
                }
            }
        }
        Ok(FiniteGroup { labels, table, identity, inverse, matrices: None, det })
    }

    /// Closure of the given isometries under multiplication.
    pub fn generated_by(gens: &[Matrix], x: &QuadSpace, cap: usize) -> Result<Self, GroupError> {
        let n = x.ambient_dim();
        let mut elems: Vec<Isometry> = vec![Isometry::identity(n)];
        let mut index: HashMap<Matrix, usize> = HashMap::new();
        index.insert(elems[0].matrix.clone(), 0);
        let gens: Vec<Isometry> = gens
            .iter()
            .enumerate()
            .map(|(i, g)| is_isometry(g, x).ok_or(GroupError::NotIsometry(i)))
            .collect::<Result<_, _>>()?;
        let mut frontier = vec![0usize];
        while let Some(a) = frontier.pop() {
            for g in &gens {
                let m = mat_mul(&elems[a].matrix, &g.matrix);
                if !index.contains_key(&m) {
                    if elems.len() >= cap {
                        return Err(GroupError::TooLarge(cap));
                    }
                    index.insert(m.clone(), elems.len());
                    elems.push(Isometry { matrix: m, det_sign: elems[a].det_sign * g.det_sign });
                    frontier.push(elems.len() - 1);
                }
            }
        }
        let table: Vec<Vec<usize>> = elems
            .iter()
            .map(|a| elems.iter().map(|b| index[&mat_mul(&a.matrix, &b.matrix)]).collect())
            .collect();
        let det = elems.iter().map(|e| e.det_sign).collect();
        let labels = (0..elems.len()).map(|i| format!("g{i}")).collect();
        let mut g = Self::from_table(labels, table, det)?;
        g.matrices = Some(elems);
        Ok(g)
    }

    pub fn cyclic(n: usize) -> Self {
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let labels = (0..n).map(|i| format!("r{i}")).collect();
        Self::from_table(labels, table, vec![1; n]).unwrap()
    }

    /// Z/2 whose generator has determinant -1.
    pub fn z2_sign() -> Self {
        let mut g = Self::cyclic(2);
        g.det = vec![1, -1];
        g
    }

    /// Dihedral group of order 2n acting on the plane: rotations r^k and reflections r^k s,
    /// with the determinant character.
    pub fn dihedral(n: usize) -> Self {
        let elt = |rot: usize, refl: bool| if refl { n + rot } else { rot };
        let mut table = vec![vec![0; 2 * n]; 2 * n];
        for a in 0..2 * n {
            for b in 0..2 * n {
                let (ra, fa) = (a % n, a >= n);
                let (rb, fb) = (b % n, b >= n);
                // r^ra s^fa r^rb s^fb = r^(ra ± rb) s^(fa xor fb)
                let rot = if fa { (ra + n - rb) % n } else { (ra + rb) % n };
                table[a][b] = elt(rot, fa ^ fb);
            }
        }
        let det = (0..2 * n).map(|a| if a >= n { -1 } else { 1 }).collect();
        let labels = (0..2 * n)
            .map(|a| if a >= n { format!("r{}s", a % n) } else { format!("r{a}") })
            .collect();
        Self::from_table(labels, table, det).unwrap()
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn with_trivial_character(&self) -> Self {
        let mut g = self.clone();
        g.det = vec![1; self.order()];
        g
    }

    /// Subgroup given by a membership predicate, relabelled 0..k with identity first.
    pub fn subgroup(&self, members: &[usize]) -> Result<(Self, Vec<usize>), GroupError> {
        let mut elems: Vec<usize> = vec![self.identity];
        elems.extend(members.iter().copied().filter(|&m| m != self.identity));
        elems.sort_unstable();
        elems.dedup();
        let pos: HashMap<usize, usize> = elems.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut table = Vec::new();
        for &a in &elems {
            let mut row = Vec::new();
            for &b in &elems {
                let c = self.mul(a, b);
                row.push(*pos.get(&c).ok_or_else(|| GroupError::NotAGroup("subset not closed".into()))?);
            }
            table.push(row);
        }
        let labels = elems.iter().map(|&e| self.labels[e].clone()).collect();
        let det = elems.iter().map(|&e| self.det[e]).collect();
        let mut h = Self::from_table(labels, table, det)?;
        h.matrices = self.matrices.as_ref().map(|ms| elems.iter().map(|&e| ms[e].clone()).collect());
        Ok((h, elems))
    }

    /// Tuples of non-identity elements of length j, in lexicographic order.
    pub fn bar_tuples(&self, j: usize) -> Vec<Vec<usize>> {
        let nonid: Vec<usize> = (0..self.order()).filter(|&g| g != self.identity).collect();
        let mut out = vec![vec![]];
        for _ in 0..j {
            let mut next = Vec::with_capacity(out.len() * nonid.len());
            for t in &out {
                for &g in &nonid {
                    let mut u = t.clone();
                    u.push(g);
                    next.push(u);
                }
            }
            out = next;
        }
        out
    }
}

/// Normalized bar complex of G with coefficients Z twisted by a sign character.
/// Degree-j generators are j-tuples of non-identity elements; d_0 carries the twist
/// of g_1, middle faces multiply g_{l+1} g_l, the last face drops g_j.
pub fn bar_complex(g: &FiniteGroup, twist: &[i8], n: usize) -> (ChainComplex, Vec<Vec<Vec<usize>>>) {
    let tuples: Vec<Vec<Vec<usize>>> = (0..=n).map(|j| g.bar_tuples(j)).collect();
    let index: Vec<HashMap<Vec<usize>, usize>> = tuples
        .iter()
        .map(|ts| ts.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect())
        .collect();
    let mut bd: Vec<Vec<SparseCol>> = vec![vec![]];
    for j in 1..=n {
        let mut cols = Vec::with_capacity(tuples[j].len());
        for t in &tuples[j] {
            let mut col: HashMap<usize, i64> = HashMap::new();
            for l in 0..=j {
                let (face, coeff): (Vec<usize>, i64) = if l == 0 {
                    (t[1..].to_vec(), twist[t[0]] as i64)
                } else if l < j {
                    let mut f = t[..l - 1].to_vec();
                    f.push(g.mul(t[l], t[l - 1]));
                    f.extend_from_slice(&t[l + 1..]);
                    (f, 1)
                } else {
                    (t[..j - 1].to_vec(), 1)
                };
                if face.contains(&g.identity) {
                    continue;
                }
                let sign = if l % 2 == 0 { 1 } else { -1 };
                *col.entry(index[j - 1][&face]).or_insert(0) += sign * coeff;
            }
            let mut c: SparseCol = col.into_iter().filter(|&(_, v)| v != 0).collect();
            c.sort_unstable();
            cols.push(c);
        }
        bd.push(cols);
    }
    let ranks = tuples.iter().map(|t| t.len()).collect();
    (ChainComplex::new(ranks, bd), tuples)
}

/// Homology of the bar complex; degrees 0..n-1 are exact (degree n needs n+1 chains).
pub fn group_homology(g: &FiniteGroup, twist: &[i8], coeff: Coeff, n: usize) -> Vec<HomologyGroup> {
    let (c, _) = bar_complex(g, twist, n + 1);
    let mut h = homology(&c, coeff);
    h.truncate(n + 1);
    h
}

/// Normalized bar complex with coefficients in Z^r, g acting by the matrix rho[g].
/// Generator (tuple t, basis vector k) has index t * r + k.
pub fn bar_complex_module(g: &FiniteGroup, rho: &[Vec<Vec<i64>>], n: usize) -> ChainComplex {
    let r = rho[g.identity].len();
    let tuples: Vec<Vec<Vec<usize>>> = (0..=n).map(|j| g.bar_tuples(j)).collect();
    let index: Vec<HashMap<Vec<usize>, usize>> = tuples
        .iter()
        .map(|ts| ts.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect())
        .collect();
    let mut bd: Vec<Vec<SparseCol>> = vec![vec![]];
    for j in 1..=n {
        let mut cols = Vec::with_capacity(tuples[j].len() * r);
        for t in &tuples[j] {
            for k in 0..r {
                let mut col: HashMap<usize, i64> = HashMap::new();
                for l in 0..=j {
                    let sign = if l % 2 == 0 { 1 } else { -1 };
                    if l == 0 {
                        let face = &t[1..];
                        let base = index[j - 1][face] * r;
                        for i in 0..r {
                            let c = rho[t[0]][i][k];
                            if c != 0 {
                                *col.entry(base + i).or_insert(0) += sign * c;
                            }
                        }
                        continue;
                    }
                    let face: Vec<usize> = if l < j {
                        let mut f = t[..l - 1].to_vec();
                        f.push(g.mul(t[l], t[l - 1]));
                        f.extend_from_slice(&t[l + 1..]);
                        f
                    } else {
                        t[..j - 1].to_vec()
                    };
                    if face.contains(&g.identity) {
                        continue;
                    }
                    *col.entry(index[j - 1][&face] * r + k).or_insert(0) += sign;
                }
                let mut c: SparseCol = col.into_iter().filter(|&(_, v)| v != 0).collect();
                c.sort_unstable();
                cols.push(c);
            }
        }
        bd.push(cols);
    }
    let ranks = tuples.iter().map(|t| t.len() * r).collect();
    ChainComplex::new(ranks, bd)
}

#[derive(Debug, Clone)]
pub struct HossReport {
    /// degree in which the reduced homology of X is concentrated
    pub degree: usize,
    /// action matrices on that homology group
    pub module: Vec<Vec<Vec<i64>>>,
    pub orbits: Vec<HomologyGroup>,
    pub predicted: Vec<HomologyGroup>,
    pub matches: bool,
}

/// Compares the reduced homology of the truncated homotopy orbits with group
/// homology in the top homology module of X, shifted by its degree.
pub fn hoss_check(x: &SimpSet, a: &GroupAction, bound: usize, coeff: Coeff) -> Result<HossReport, GroupError> {
    let c = x.normalized_chains();
    let hx = HomologyData::new(&c, Coeff::Z);
    let groups = hx.groups();
    let nonzero: Vec<&HomologyGroup> = groups.iter().filter(|h| !h.is_zero()).collect();
    if nonzero.len() != 1 || !nonzero[0].torsion.is_empty() {
        return Err(GroupError::NotConcentrated(format!("{groups:?}")));
    }
    let t = nonzero[0].degree;
    let module: Vec<Vec<Vec<i64>>> = a
        .maps
        .iter()
        .map(|m| {
            induced_homology(&m.chain_map(x), &hx, &hx, t, c.rank(t))
                .into_iter()
                .map(|row| row.into_iter().map(|v| i64::try_from(v).expect("small action matrix")).collect())
                .collect()
        })
        .collect();
    let orbits_set = HomotopyOrbits::new(x, a, bound)?;
    let mut orbits = homology(&orbits_set.set().normalized_chains(), coeff);
    orbits.truncate(bound);
    let bar = bar_complex_module(&a.group, &module, bound.saturating_sub(t) + 1);
    let gh = homology(&bar, coeff);
    let predicted: Vec<HomologyGroup> = (0..bound)
        .map(|i| {
            if i < t {
                HomologyGroup::zero(i)
            } else {
                let h = &gh[i - t];
                HomologyGroup { degree: i, rank: h.rank, torsion: h.torsion.clone() }
            }
        })
        .collect();
    let matches = orbits == predicted;
    Ok(HossReport { degree: t, module, orbits, predicted, matches })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupJson {
    pub elements: Vec<String>,
    pub table: Vec<Vec<usize>>,
    #[serde(default)]
    pub matrices: Option<Vec<Vec<Vec<String>>>>,
    #[serde(default)]
    pub character: Option<Vec<i8>>,
}

impl GroupJson {
    pub fn from_group(g: &FiniteGroup) -> Self {
        GroupJson {
            elements: g.labels.clone(),
            table: g.table.clone(),
            matrices: g.matrices.as_ref().map(|ms| {
                ms.iter().map(|m| m.matrix.iter().map(|r| r.iter().map(fmt_q).collect()).collect()).collect()
            }),
            character: Some(g.det.clone()),
        }
    }

    pub fn to_group(&self, x: Option<&QuadSpace>) -> Result<FiniteGroup, GroupError> {
        let n = self.table.len();
        let mut matrices = None;
        let mut det = self.character.clone();
        if let Some(ms) = &self.matrices {
            let mut isos = Vec::new();
            for (i, m) in ms.iter().enumerate() {
                let mat: Matrix = m
                    .iter()
                    .map(|r| r.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<_, _>>()?;
                let iso = match x {
                    Some(x) => is_isometry(&mat, x).ok_or(GroupError::NotIsometry(i))?,
                    None => {
                        let d = crate::exactlin::det(&mat);
                        Isometry { matrix: mat, det_sign: if num_traits::Signed::is_negative(&d) { -1 } else { 1 } }
                    }
                };
                isos.push(iso);
            }
            if det.is_none() {
                det = Some(isos.iter().map(|i| i.det_sign).collect());
            }
            for a in 0..n {
                for b in 0..n {
                    if mat_mul(&isos[a].matrix, &isos[b].matrix) != isos[self.table[a][b]].matrix {
                        return Err(GroupError::NotAGroup(format!("matrices disagree with table at ({a},{b})")));
                    }
                }
            }
            matrices = Some(isos);
        }
        let mut g = FiniteGroup::from_table(self.elements.clone(), self.table.clone(), det.unwrap_or(vec![1; n]))?;
        g.matrices = matrices;
        Ok(g)
    }
}

/// Finitely supported integer combination of tuples (g_1, …, g_j); identities allowed.
pub type BarChain = BTreeMap<Vec<usize>, i64>;

/// Face d_l of an unnormalized bar tuple with its twist coefficient.
pub fn bar_face(g: &FiniteGroup, twist: &[i8], t: &[usize], l: usize) -> (Vec<usize>, i64) {
    let j = t.len();
    if l == 0 {
        (t[1..].to_vec(), twist[t[0]] as i64)
    } else if l < j {
        let mut f = t[..l - 1].to_vec();
        f.push(g.mul(t[l], t[l - 1]));
        f.extend_from_slice(&t[l + 1..]);
        (f, 1)
    } else {
        (t[..j - 1].to_vec(), 1)
    }
}

pub fn add_to(c: &mut BarChain, t: Vec<usize>, v: i64) {
    if v == 0 {
        return;
    }
    let e = c.entry(t.clone()).or_insert(0);
    *e += v;
    if *e == 0 {
        c.remove(&t);
    }
}

/// Unnormalized twisted bar boundary Σ_l (-1)^l d_l.
pub fn bar_boundary(g: &FiniteGroup, twist: &[i8], c: &BarChain) -> BarChain {
    let mut out = BarChain::new();
    for (t, &v) in c {
        if t.is_empty() {
            continue;
        }
        for l in 0..=t.len() {
            let (f, k) = bar_face(g, twist, t, l);
            let sign = if l % 2 == 0 { 1 } else { -1 };
            add_to(&mut out, f, sign * k * v);
        }
    }
    out
}

fn all_tuples(n: usize, j: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..j {
        out = out.into_iter().flat_map(|t| (0..n).map(move |h| {
            let mut u = t.clone();
            u.push(h);
            u
        })).collect();
    }
    out
}

/// Integral basis of the cycles of the unnormalized twisted bar complex in degree j.
pub fn bar_cycle_basis(g: &FiniteGroup, twist: &[i8], j: usize) -> Vec<BarChain> {
    let cols = all_tuples(g.order(), j);
    let rows = all_tuples(g.order(), j.saturating_sub(1));
    let rindex: HashMap<&Vec<usize>, usize> = rows.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut m: Matrix = vec![vec![Q::zero(); cols.len()]; if j == 0 { 0 } else { rows.len() }];
    if j > 0 {
        for (c, t) in cols.iter().enumerate() {
            let b = bar_boundary(g, twist, &BarChain::from([(t.clone(), 1)]));
            for (f, v) in b {
                m[rindex[&f]][c] += Q::from_integer(v.into());
            }
        }
    }
    null_space(&m, cols.len())
        .into_iter()
        .map(|v| {
            let den = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            let mut c = BarChain::new();
            for (i, x) in v.iter().enumerate() {
                let n = (x * Q::from_integer(den.clone())).to_integer();
                add_to(&mut c, cols[i].clone(), n.to_i64().expect("bar cycle coefficient overflow"));
            }
            c
        })
        .collect()
}

/// Random small integer combinations of a cycle basis.
pub fn random_bar_cycles<R: Rng>(basis: &[BarChain], count: usize, rng: &mut R) -> Vec<BarChain> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count && !basis.is_empty() {
        let mut c = BarChain::new();
        for _ in 0..rng.gen_range(1..=3) {
            let b = &basis[rng.gen_range(0..basis.len())];
            let k = rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 };
            for (t, &v) in b {
                add_to(&mut c, t.clone(), k * v);
            }
        }
        if !c.is_empty() {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use num_bigint::BigInt;

    use super::*;
    use crate::building::{build_f, SubspaceFamily};
    use crate::exactlin::{diag, span, vec_q, Kind};
    use crate::simpset::{circle_ssigma, s0, ssigma_action};

    fn z2() -> HomologyGroup {
        HomologyGroup { degree: 0, rank: 0, torsion: vec![BigInt::from(2)] }
    }

    #[test]
    fn cyclic_two_homology() {
        let g = FiniteGroup::cyclic(2);
        let h = group_homology(&g, &[1, 1], Coeff::Z, 6);
        assert_eq!(h[0], HomologyGroup::free(0, 1));
        for i in 1..=6 {
            assert_eq!(h[i].torsion.len(), i % 2, "degree {i}");
            assert_eq!(h[i].rank, 0);
        }
        let t = group_homology(&g, &[1, -1], Coeff::Z, 6);
        for (i, hi) in t.iter().enumerate() {
            assert_eq!(hi.torsion.len(), 1 - i % 2, "degree {i}");
            assert_eq!(hi.rank, 0);
        }
        assert!(group_homology(&g, &[1, -1], Coeff::Zhalf, 6).iter().all(|h| h.is_zero()));
        let trivial = FiniteGroup::cyclic(1);
        let ht = group_homology(&trivial, &[1], Coeff::Zhalf, 3);
        assert_eq!(ht[0], HomologyGroup::free(0, 1));
        assert!(ht[1..].iter().all(|h| h.is_zero()));
    }

    #[test]
    fn dihedral_abelianization() {
        let g = FiniteGroup::dihedral(4);
        let h = group_homology(&g, &vec![1; 8], Coeff::Z, 1);
        assert_eq!(h[1].torsion, vec![BigInt::from(2), BigInt::from(2)]);
        let tw = group_homology(&g, &g.det, Coeff::Z, 1);
        assert_eq!(tw[0].rank, 0);
        assert_eq!(tw[0].torsion, vec![BigInt::from(2)]);
        let (c, _) = bar_complex(&g, &g.det, 3);
        c.check_d2().unwrap();
    }

    #[test]
    fn module_bar_matches_twisted_bar() {
        let g = FiniteGroup::dihedral(3);
        let rho: Vec<Vec<Vec<i64>>> = g.det.iter().map(|&s| vec![vec![s as i64]]).collect();
        let m = bar_complex_module(&g, &rho, 4);
        m.check_d2().unwrap();
        assert_eq!(homology(&m, Coeff::Z)[..4], group_homology(&g, &g.det, Coeff::Z, 3)[..]);
    }

    #[test]
    fn hoss_on_spheres() {
        let g = Arc::new(FiniteGroup::cyclic(2));
        let x = s0();
        let a = GroupAction::trivial(g.clone(), &x);
        let r = hoss_check(&x, &a, 5, Coeff::Z).unwrap();
        assert!(r.matches, "{:?} vs {:?}", r.orbits, r.predicted);
        let ss = ssigma_action();
        let r = hoss_check(&circle_ssigma(), &ss, 6, Coeff::Z).unwrap();
        assert!(r.matches, "{:?} vs {:?}", r.orbits, r.predicted);
        assert_eq!(r.degree, 1);
        assert_eq!(r.orbits[1].torsion, z2().torsion);
        assert!(r.orbits[2].is_zero());
    }

    #[test]
    fn hoss_on_point_building() {
        let x = Arc::new(QuadSpace::spherical(1));
        let pts = [vec_q(&[1, 0]), vec_q(&[0, 1]), vec_q(&[1, 1])];
        let lines = pts.iter().map(|p| span(&[p.clone()], &x, Kind::Subspace).unwrap()).collect();
        let fam = SubspaceFamily::new(x.clone(), lines, &[]).unwrap();
        let swap = vec![vec![crate::exactlin::q(0), crate::exactlin::q(1)], vec![crate::exactlin::q(1), crate::exactlin::q(0)]];
        let g = Arc::new(FiniteGroup::generated_by(&[swap, diag(&[-1, -1])], &x, 16).unwrap());
        assert_eq!(g.order(), 4);
        let f = build_f(&fam).unwrap();
        let perms = fam.group_permutations(&g).unwrap();
        let a = f.action(g.clone(), &perms).unwrap();
        a.check(f.set()).unwrap();
        let r = hoss_check(f.set(), &a, 4, Coeff::Z).unwrap();
        assert_eq!(r.degree, 1);
        assert!(r.matches, "{:?} vs {:?}", r.orbits, r.predicted);
    }

    #[test]
    fn bar_cycles_are_cycles() {
        use rand::SeedableRng;
        let g = FiniteGroup::dihedral(4);
        let twist: Vec<i8> = (0..8).map(|i| if i < 4 { 1 } else { -1 }).collect();
        let basis = bar_cycle_basis(&g, &twist, 2);
        // unnormalized complex of Z/2^tw-twisted D4: rank of Z_2 = 64 - rank d_2, rank d_2 = 8 - rank d_1
        let d1_rank = 1;
        assert_eq!(basis.len(), 64 - (8 - d1_rank));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for c in random_bar_cycles(&basis, 10, &mut rng) {
            assert!(bar_boundary(&g, &twist, &c).is_empty());
            let bb = bar_boundary(&g, &twist, &c);
            assert!(bar_boundary(&g, &twist, &bb).is_empty());
        }
        let t = vec![1, 5, 2];
        let b = bar_boundary(&g, &twist, &BarChain::from([(t, 1)]));
        assert!(bar_boundary(&g, &twist, &b).is_empty());
        assert!(random_bar_cycles(&[], 3, &mut rng).is_empty());
    }
}
