//! RT-buildings over finite families of subspaces, flag spaces of orthogonal
//! decompositions, the rigid Dehn maps between them, and tuple spaces.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactlin::{
    fmt_q, orth_complement, parse_vector, project, rank, span_any, sum, GeometryJson, Isometry, LinError,
    QuadSpace, Subspace, Vector,
};
use crate::grouphom::FiniteGroup;
use crate::simpset::{
    circle_simplex, circle_ssigma, collapse_runs, GroupAction, Keyed, Nd, Quotient, Simp, SimpError, SimpMap, SimpSet,
    Smash, Subdivision, BASE, SS_MINUS, SS_PLUS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildingError {
    #[error("family is not closed: {0}")]
    ClosureMissing(String),
    #[error("closure did not stabilize within {0} rounds")]
    NotClosed(usize),
    #[error(transparent)]
    Lin(#[from] LinError),
    #[error(transparent)]
    Simp(#[from] SimpError),
    #[error("flag reassembly is not bijective: {0}")]
    BijectionFailure(String),
    #[error("Dehn square fails at {0}")]
    SquareFailure(String),
    #[error("points do not span a simplex: {0}")]
    DegenerateSimplex(String),
    #[error("group does not preserve the family: {0}")]
    NotPreserved(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosureOp {
    Perp,
    Project,
    PerpSum,
}

/// A finite set of nondegenerate subspaces containing the whole space.
#[derive(Debug, Clone)]
pub struct SubspaceFamily {
    pub geometry: Arc<QuadSpace>,
    pub members: Vec<Subspace>,
    pub closure_ops: Vec<ClosureOp>,
    pub whole: usize,
    index: HashMap<Subspace, usize>,
    le: Vec<Vec<bool>>,
    orth: Vec<Vec<bool>>,
    n_minus: Vec<usize>,
    perp: Vec<Option<usize>>,
    proj: HashMap<(usize, usize), Option<usize>>,
    sums: HashMap<(usize, usize), Option<usize>>,
}

fn closure_candidates(members: &[Subspace], ops: &[ClosureOp]) -> Result<Vec<Subspace>, BuildingError> {
    let have: HashSet<&Subspace> = members.iter().collect();
    let mut seen: HashSet<Subspace> = HashSet::new();
    let mut new = Vec::new();
    let mut push = |s: Subspace, new: &mut Vec<Subspace>| {
        if !s.is_zero() && !have.contains(&s) && seen.insert(s.clone()) {
            new.push(s);
        }
    };
    for a in members {
        if ops.contains(&ClosureOp::Perp) {
            push(orth_complement(a), &mut new);
        }
        for b in members {
            if a == b {
                continue;
            }
            if ops.contains(&ClosureOp::Project) && a.is_subset_of(b) {
                push(project(a, b)?, &mut new);
            }
            if ops.contains(&ClosureOp::PerpSum) && a.is_orthogonal_to(b) {
                push(sum(a, b)?, &mut new);
            }
        }
    }
    Ok(new)
}

impl SubspaceFamily {
    /// A family from explicit members; the declared closure operations are verified.
    pub fn new(geometry: Arc<QuadSpace>, members: Vec<Subspace>, ops: &[ClosureOp]) -> Result<Self, BuildingError> {
        let fam = Self::assemble(geometry, members, ops)?;
        if let Some(s) = closure_candidates(&fam.members, ops)?.first() {
            return Err(BuildingError::ClosureMissing(format!("{s:?}")));
        }
        Ok(fam)
    }

    /// Closure of the seeds under the given operations, by at most `rounds` rounds.
    pub fn close(
        geometry: Arc<QuadSpace>,
        seeds: Vec<Subspace>,
        ops: &[ClosureOp],
        rounds: usize,
    ) -> Result<Self, BuildingError> {
        let mut current = seeds;
        current.push(geometry.whole());
        let mut seen = HashSet::new();
        current.retain(|s| !s.is_zero() && seen.insert(s.clone()));
        for _ in 0..=rounds {
            let new = closure_candidates(&current, ops)?;
            if new.is_empty() {
                return Self::assemble(geometry, current, ops);
            }
            current.extend(new);
        }
        Err(BuildingError::NotClosed(rounds))
    }

    /// All spans of nonempty subsets of the given vectors.
    pub fn of_partial_spans(geometry: Arc<QuadSpace>, points: &[Vector]) -> Result<Self, BuildingError> {
        let k = points.len();
        let mut members = Vec::new();
        for mask in 1u32..(1 << k) {
            let vs: Vec<Vector> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| points[i].clone()).collect();
            members.push(span_any(&vs, &geometry)?);
        }
        Self::assemble(geometry, members, &[])
    }

    fn assemble(geometry: Arc<QuadSpace>, members: Vec<Subspace>, ops: &[ClosureOp]) -> Result<Self, BuildingError> {
        let mut members = members;
        members.push(geometry.whole());
        let mut seen = HashSet::new();
        members.retain(|s| !s.is_zero() && seen.insert(s.clone()));
        for s in &members {
            s.signature()?;
        }
        members.sort_by(|a, b| (a.lin_dim(), &a.basis).cmp(&(b.lin_dim(), &b.basis)));
        let index: HashMap<Subspace, usize> = members.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let n = members.len();
        let le: Vec<Vec<bool>> = members.iter().map(|a| members.iter().map(|b| a.is_subset_of(b)).collect()).collect();
        let orth: Vec<Vec<bool>> =
            members.iter().map(|a| members.iter().map(|b| a.is_orthogonal_to(b)).collect()).collect();
        let n_minus = members.iter().map(|s| s.signature().map(|x| x.0)).collect::<Result<Vec<_>, _>>()?;
        let perp = members.iter().map(|a| index.get(&orth_complement(a)).copied()).collect();
        let mut proj = HashMap::new();
        let mut sums = HashMap::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && le[a][b] {
                    proj.insert((a, b), index.get(&project(&members[a], &members[b])?).copied());
                }
                if a != b && orth[a][b] {
                    sums.insert((a, b), index.get(&sum(&members[a], &members[b])?).copied());
                }
            }
        }
        let whole = index[&geometry.whole()];
        Ok(SubspaceFamily {
            geometry,
            members,
            closure_ops: ops.to_vec(),
            whole,
            index,
            le,
            orth,
            n_minus,
            perp,
            proj,
            sums,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Geometric dimension d of the ambient space.
    pub fn d(&self) -> usize {
        self.geometry.dim
    }

    pub fn find(&self, s: &Subspace) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn lin_dim(&self, i: usize) -> usize {
        self.members[i].lin_dim()
    }

    pub fn le(&self, a: usize, b: usize) -> bool {
        self.le[a][b]
    }

    pub fn orth(&self, a: usize, b: usize) -> bool {
        self.orth[a][b]
    }

    pub fn n_minus(&self, a: usize) -> usize {
        self.n_minus[a]
    }

    pub fn perp(&self, a: usize) -> Result<usize, BuildingError> {
        self.perp[a].ok_or_else(|| BuildingError::ClosureMissing(format!("perp of {:?}", self.members[a])))
    }

    /// V ∩ U⊥ for U ⊊ V.
    pub fn proj(&self, u: usize, v: usize) -> Result<usize, BuildingError> {
        match self.proj.get(&(u, v)) {
            Some(Some(i)) => Ok(*i),
            Some(None) => Err(BuildingError::ClosureMissing(format!(
                "projection of {:?} away from {:?}",
                self.members[v], self.members[u]
            ))),
            None => Err(BuildingError::ClosureMissing(format!("{:?} is not inside {:?}", self.members[u], self.members[v]))),
        }
    }

    /// U ⊕ V for orthogonal members.
    pub fn perp_sum(&self, u: usize, v: usize) -> Result<usize, BuildingError> {
        match self.sums.get(&(u, v)) {
            Some(Some(i)) => Ok(*i),
            _ => Err(BuildingError::ClosureMissing(format!("sum of {:?} and {:?}", self.members[u], self.members[v]))),
        }
    }

    /// Members that can appear in flags of F^Y.
    pub fn flag_members(&self, y: usize) -> Vec<usize> {
        (0..self.len()).filter(|&w| self.le[w][y] && self.n_minus[w] == self.n_minus[y]).collect()
    }

    /// Strictly increasing chains of flag members of Y ending at Y.
    pub fn chains_ending(&self, y: usize) -> Vec<Vec<usize>> {
        let below = self.flag_members(y);
        let mut out = Vec::new();
        let mut cur = vec![y];
        fn rec(f: &SubspaceFamily, below: &[usize], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            out.push(cur.iter().rev().copied().collect());
            let top = *cur.last().unwrap();
            for &w in below {
                if w != top && f.le[w][top] {
                    cur.push(w);
                    rec(f, below, cur, out);
                    cur.pop();
                }
            }
        }
        rec(self, &below, &mut cur, &mut out);
        out
    }

    /// Permutation of members induced by an isometry.
    pub fn permutation(&self, g: &Isometry) -> Result<Vec<usize>, BuildingError> {
        self.members
            .iter()
            .map(|s| {
                self.find(&g.apply_subspace(s))
                    .ok_or_else(|| BuildingError::NotPreserved(format!("image of {s:?}")))
            })
            .collect()
    }

    pub fn group_permutations(&self, g: &FiniteGroup) -> Result<Vec<Vec<usize>>, BuildingError> {
        let ms = g
            .matrices
            .as_ref()
            .ok_or_else(|| BuildingError::NotPreserved("group has no matrices".into()))?;
        ms.iter().map(|m| self.permutation(m)).collect()
    }

    pub fn label(&self, i: usize) -> String {
        if i == self.whole {
            "X".into()
        } else {
            format!("u{i}")
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyJson {
    pub geometry: GeometryJson,
    pub subspaces: Vec<Vec<Vec<String>>>,
    #[serde(default)]
    pub closure: Vec<ClosureOp>,
}

impl FamilyJson {
    pub fn from_family(f: &SubspaceFamily) -> Self {
        FamilyJson {
            geometry: GeometryJson::from_space(&f.geometry),
            subspaces: f.members.iter().map(|s| s.basis.iter().map(|r| r.iter().map(fmt_q).collect()).collect()).collect(),
            closure: f.closure_ops.clone(),
        }
    }

    /// Members are closed under the listed operations by at most `rounds` rounds.
    pub fn to_family(&self, rounds: usize) -> Result<SubspaceFamily, BuildingError> {
        let geometry = Arc::new(self.geometry.to_space()?);
        let seeds = self
            .subspaces
            .iter()
            .map(|rows| {
                let vs = rows.iter().map(|r| parse_vector(r)).collect::<Result<Vec<_>, _>>()?;
                span_any(&vs, &geometry)
            })
            .collect::<Result<Vec<_>, _>>()?;
        SubspaceFamily::close(geometry, seeds, &self.closure, rounds)
    }
}

/// Factor flags of a joined flag simplex, left to right.
pub type FlagKey = Vec<Vec<usize>>;

/// Wedge over orthogonal decompositions of the reduced joins of the factor buildings.
#[derive(Debug, Clone)]
pub struct FlagSpace {
    /// (b, a_1, …, a_i): W has dimension b, V_j has linear dimension a_j.
    pub shape: Vec<usize>,
    pub decompositions: Vec<Vec<usize>>,
    pub keyed: Keyed<FlagKey>,
}

/// Decompositions W ⊕ V_1 ⊕ … ⊕ V_i of X matching the shape.
pub fn decompositions(fam: &SubspaceFamily, shape: &[usize]) -> Vec<Vec<usize>> {
    let nm = fam.n_minus(fam.whole);
    let mut out = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    fn rec(fam: &SubspaceFamily, lins: &[usize], nm: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let k = cur.len();
        if k == lins.len() {
            out.push(cur.clone());
            return;
        }
        for m in 0..fam.len() {
            let want_nm = if k == 0 { nm } else { 0 };
            if fam.lin_dim(m) == lins[k] && fam.n_minus(m) == want_nm && cur.iter().all(|&c| fam.orth(c, m)) {
                cur.push(m);
                rec(fam, lins, nm, cur, out);
                cur.pop();
            }
        }
    }
    let mut lins = vec![shape[0] + 1];
    lins.extend_from_slice(&shape[1..]);
    if lins.iter().sum::<usize>() == fam.d() + 1 && lins[1..].iter().all(|&a| a > 0) {
        rec(fam, &lins, nm, &mut cur, &mut out);
    }
    out
}

fn flag_label(fam: &SubspaceFamily, key: &FlagKey) -> String {
    key.iter()
        .map(|f| f.iter().map(|&m| fam.label(m)).collect::<Vec<_>>().join("<"))
        .collect::<Vec<_>>()
        .join("|")
}

impl FlagSpace {
    pub fn from_decompositions(
        fam: &SubspaceFamily,
        shape: Vec<usize>,
        decompositions: Vec<Vec<usize>>,
    ) -> Result<Self, BuildingError> {
        let mut levels: Vec<Vec<FlagKey>> = vec![vec![]];
        for dec in &decompositions {
            let per: Vec<Vec<Vec<usize>>> = dec.iter().map(|&y| fam.chains_ending(y)).collect();
            let mut acc: Vec<FlagKey> = vec![vec![]];
            for choices in &per {
                acc = acc
                    .into_iter()
                    .flat_map(|k| {
                        choices.iter().map(move |c| {
                            let mut k2 = k.clone();
                            k2.push(c.clone());
                            k2
                        })
                    })
                    .collect();
            }
            for key in acc {
                let deg = key.iter().map(|f| f.len()).sum::<usize>() - 1;
                if levels.len() <= deg {
                    levels.resize(deg + 1, vec![]);
                }
                levels[deg].push(key);
            }
        }
        let keyed = Keyed::build(levels, |k| flag_label(fam, k), |k, n, l| flag_face(k, n, l))?;
        Ok(FlagSpace { shape, decompositions, keyed })
    }

    /// F^Ā for Ā = shape.
    pub fn new(fam: &SubspaceFamily, shape: &[usize]) -> Result<Self, BuildingError> {
        let decs = decompositions(fam, shape);
        Self::from_decompositions(fam, shape.to_vec(), decs)
    }

    /// The building F^Y of a single member.
    pub fn building(fam: &SubspaceFamily, y: usize) -> Result<Self, BuildingError> {
        let shape = vec![fam.lin_dim(y) - 1];
        Self::from_decompositions(fam, shape, vec![vec![y]])
    }

    pub fn set(&self) -> &SimpSet {
        &self.keyed.set
    }

    pub fn flag(&self, nd: Nd) -> Option<&FlagKey> {
        self.keyed.key(nd)
    }

    /// Simplex of a possibly degenerate flag of a single-factor space.
    pub fn locate_flag(&self, flag: &[usize]) -> Result<Simp, BuildingError> {
        let (sigma, distinct) = collapse_runs(flag);
        Ok(self.keyed.try_locate(Some((sigma, vec![distinct])), flag.len() - 1)?)
    }

    /// Flag of a simplex of a single-factor space, degeneracies expanded.
    pub fn flag_of(&self, s: &Simp) -> Option<Vec<usize>> {
        let key = self.keyed.key(s.nd)?;
        Some(s.sigma.iter().map(|&i| key[0][i as usize]).collect())
    }

    /// Action of a family-preserving group through member permutations.
    pub fn action(&self, group: Arc<FiniteGroup>, perms: &[Vec<usize>]) -> Result<GroupAction, BuildingError> {
        let mut maps = Vec::with_capacity(perms.len());
        for p in perms {
            let mut images = Vec::new();
            for (k, level) in self.keyed.keys.iter().enumerate() {
                let mut row = Vec::with_capacity(level.len());
                for key in level {
                    row.push(match key {
                        None => Simp::base(k),
                        Some(key) => {
                            let moved: FlagKey = key.iter().map(|f| f.iter().map(|&m| p[m]).collect()).collect();
                            self.keyed.try_locate(Some(((0..=k as u8).collect(), moved)), k)?
                        }
                    });
                }
                images.push(row);
            }
            maps.push(SimpMap { images });
        }
        Ok(GroupAction { group, maps })
    }
}

fn flag_face(key: &FlagKey, n: usize, l: usize) -> Option<(Vec<u8>, FlagKey)> {
    let mut off = 0;
    for (f, flag) in key.iter().enumerate() {
        if l < off + flag.len() {
            let p = l - off;
            if p + 1 == flag.len() {
                return None;
            }
            let mut k2 = key.clone();
            k2[f].remove(p);
            return Some(((0..n as u8).collect(), k2));
        }
        off += flag.len();
    }
    unreachable!("face index out of range")
}

/// Splitting at dimension l: (factor, linear dimension of the split-off member, new shape).
pub fn split_shape(shape: &[usize], l: usize) -> Option<(usize, usize, Vec<usize>)> {
    let mut s = shape[0];
    if l < s {
        let mut out = vec![l, s - l];
        out.extend_from_slice(&shape[1..]);
        return Some((0, l + 1, out));
    }
    if l == s {
        return None;
    }
    for j in 1..shape.len() {
        let prev = s;
        s += shape[j];
        if l < s {
            let mut out = shape[..j].to_vec();
            out.push(l - prev);
            out.push(s - l);
            out.extend_from_slice(&shape[j + 1..]);
            return Some((j, l - prev, out));
        }
        if l == s {
            return None;
        }
    }
    None
}

/// Dimensions at which a shape has already been split.
pub fn split_points(shape: &[usize]) -> Vec<usize> {
    if shape.len() == 1 {
        return vec![];
    }
    let mut out = vec![shape[0]];
    for &a in &shape[1..shape.len().saturating_sub(1)] {
        out.push(out.last().unwrap() + a);
    }
    out
}

/// Shape obtained from (d) by splitting at the given dimensions.
pub fn shape_for_splits(d: usize, splits: &[usize]) -> Vec<usize> {
    let mut s: Vec<usize> = splits.to_vec();
    s.sort_unstable();
    if s.is_empty() {
        return vec![d];
    }
    let mut out = vec![s[0]];
    for w in s.windows(2) {
        out.push(w[1] - w[0]);
    }
    out.push(d - s[s.len() - 1]);
    out
}

/// Key of the image of a joined flag under the generalized Dehn map at dimension l.
pub fn dehn_key(fam: &SubspaceFamily, key: &FlagKey, factor: usize, lin: usize) -> Result<Option<FlagKey>, BuildingError> {
    let flag = &key[factor];
    let Some(p) = flag.iter().position(|&m| fam.lin_dim(m) == lin) else { return Ok(None) };
    let u = flag[p];
    let right = flag[p + 1..].iter().map(|&v| fam.proj(u, v)).collect::<Result<Vec<_>, _>>()?;
    let mut out = key[..factor].to_vec();
    out.push(flag[..=p].to_vec());
    out.push(right);
    out.extend_from_slice(&key[factor + 1..]);
    Ok(Some(out))
}

/// The generalized Dehn map D_l from F^Ā to F^Ā' where Ā' splits Ā at dimension l.
pub fn dehn_between(fam: &SubspaceFamily, src: &FlagSpace, l: usize, tgt: &FlagSpace) -> Result<SimpMap, BuildingError> {
    let (factor, lin, shape) =
        split_shape(&src.shape, l).ok_or_else(|| BuildingError::ClosureMissing(format!("no split at {l}")))?;
    if shape != tgt.shape {
        return Err(BuildingError::Simp(SimpError::Malformed(format!(
            "target shape {:?} does not match {:?}",
            tgt.shape, shape
        ))));
    }
    let mut images = Vec::new();
    for (k, level) in src.keyed.keys.iter().enumerate() {
        let mut row = Vec::with_capacity(level.len());
        for key in level {
            let img = match key {
                None => None,
                Some(key) => dehn_key(fam, key, factor, lin)?,
            };
            row.push(match img {
                None => Simp::base(k),
                Some(t) => tgt
                    .keyed
                    .try_locate(Some(((0..=k as u8).collect(), t)), k)
                    .map_err(|e| BuildingError::ClosureMissing(e.to_string()))?,
            });
        }
        images.push(row);
    }
    Ok(SimpMap { images })
}

/// D_l together with its freshly built target.
pub fn dehn_split(fam: &SubspaceFamily, src: &FlagSpace, l: usize) -> Result<(FlagSpace, SimpMap), BuildingError> {
    let (_, _, shape) = split_shape(&src.shape, l).ok_or_else(|| BuildingError::ClosureMissing(format!("no split at {l}")))?;
    let tgt = FlagSpace::new(fam, &shape)?;
    let map = dehn_between(fam, src, l, &tgt)?;
    Ok((tgt, map))
}

pub fn build_f(fam: &SubspaceFamily) -> Result<FlagSpace, BuildingError> {
    FlagSpace::building(fam, fam.whole)
}

/// T^m with a disjoint basepoint: strictly increasing chains of members of dimension at most m.
pub fn build_t(fam: &SubspaceFamily, m: isize) -> Result<Keyed<Vec<usize>>, BuildingError> {
    let nm = fam.n_minus(fam.whole);
    let usable: Vec<usize> =
        (0..fam.len()).filter(|&i| fam.n_minus(i) == nm && (fam.lin_dim(i) as isize - 1) <= m).collect();
    let mut levels: Vec<Vec<Vec<usize>>> = vec![vec![]];
    let mut cur: Vec<Vec<usize>> = usable.iter().map(|&u| vec![u]).collect();
    while !cur.is_empty() {
        let deg = cur[0].len() - 1;
        if levels.len() <= deg {
            levels.push(vec![]);
        }
        levels[deg].extend(cur.iter().cloned());
        cur = cur
            .iter()
            .flat_map(|c| {
                let top = *c.last().unwrap();
                usable.iter().filter(move |&&u| u != top && fam.le(top, u)).map(move |&u| {
                    let mut c2 = c.clone();
                    c2.push(u);
                    c2
                })
            })
            .collect();
    }
    Ok(Keyed::build(
        levels,
        |c| c.iter().map(|&m| fam.label(m)).collect::<Vec<_>>().join("<"),
        |c, n, j| {
            let mut c2 = c.clone();
            c2.remove(j);
            Some(((0..n as u8).collect(), c2))
        },
    )?)
}

/// N_I F: flags ending at X containing no member of geometric dimension in I.
pub fn build_n(fam: &SubspaceFamily, dims: &[usize]) -> Result<Keyed<Vec<usize>>, BuildingError> {
    let f = build_f(fam)?;
    let cells = n_cells(fam, &f, dims);
    let mut levels: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for nd in f.set().nds().filter(|n| cells.contains(n)) {
        if levels.len() <= nd.0 {
            levels.resize(nd.0 + 1, vec![]);
        }
        levels[nd.0].push(f.flag(nd).unwrap()[0].clone());
    }
    Ok(Keyed::build(
        levels,
        |c| c.iter().map(|&m| fam.label(m)).collect::<Vec<_>>().join("<"),
        |c, n, j| {
            if j == n {
                return None;
            }
            let mut c2 = c.clone();
            c2.remove(j);
            Some(((0..n as u8).collect(), c2))
        },
    )?)
}

/// Cells of F^X lying in N_I.
pub fn n_cells(fam: &SubspaceFamily, f: &FlagSpace, dims: &[usize]) -> HashSet<Nd> {
    f.set()
        .nds()
        .filter(|&nd| nd != BASE)
        .filter(|&nd| {
            f.flag(nd).unwrap()[0].iter().all(|&m| !dims.contains(&(fam.lin_dim(m) - 1)))
        })
        .collect()
}

/// D_U: F^X → F^U ⋆̄ F^{U⊥}.
pub struct DehnU {
    pub left: FlagSpace,
    pub right: FlagSpace,
    pub join: crate::simpset::Join,
    pub map: SimpMap,
}

/// Pivot rule on a possibly degenerate flag: j = max{i | U_i = U}; the part after
/// the pivot is projected to U⊥.
pub fn pivot_split(fam: &SubspaceFamily, flag: &[usize], u: usize) -> Result<Option<(Vec<usize>, Vec<usize>)>, BuildingError> {
    let Some(j) = flag.iter().rposition(|&m| m == u) else { return Ok(None) };
    let right = flag[j + 1..].iter().map(|&v| fam.proj(u, v)).collect::<Result<Vec<_>, _>>()?;
    Ok(Some((flag[..=j].to_vec(), right)))
}

pub fn dehn_u(fam: &SubspaceFamily, f: &FlagSpace, u: usize) -> Result<DehnU, BuildingError> {
    if u == fam.whole {
        return Err(BuildingError::ClosureMissing("U must be proper".into()));
    }
    let up = fam.perp(u)?;
    let left = FlagSpace::building(fam, u)?;
    let right = FlagSpace::building(fam, up)?;
    let join = crate::simpset::Join::new(left.set(), right.set())?;
    let mut images = Vec::new();
    for (k, level) in f.keyed.keys.iter().enumerate() {
        let mut row = Vec::new();
        for key in level {
            row.push(match key {
                None => Simp::base(k),
                Some(key) => dehn_u_simplex(fam, &left, &right, &join, &key[0], u)?,
            });
        }
        images.push(row);
    }
    Ok(DehnU { left, right, join, map: SimpMap { images } })
}

/// Image of a (possibly degenerate) flag under D_U by the direct pivot rule.
pub fn dehn_u_simplex(
    fam: &SubspaceFamily,
    left: &FlagSpace,
    right: &FlagSpace,
    join: &crate::simpset::Join,
    flag: &[usize],
    u: usize,
) -> Result<Simp, BuildingError> {
    match pivot_split(fam, flag, u)? {
        None => Ok(Simp::base(flag.len() - 1)),
        Some((a, b)) => Ok(join.pair(&left.locate_flag(&a)?, &right.locate_flag(&b)?)),
    }
}

/// D_i: F^X → ⋁_{dim U = i} F^U ⋆̄ F^{U⊥}, with target built as a flag space.
pub fn dehn_i(fam: &SubspaceFamily, f: &FlagSpace, i: usize) -> Result<(FlagSpace, SimpMap), BuildingError> {
    if i >= fam.d() {
        return Err(BuildingError::ClosureMissing(format!("no Dehn map in dimension {i}")));
    }
    dehn_split(fam, f, i)
}

/// Checks (1 ⋆̄ D) ∘ D_i = (D ⋆̄ 1) ∘ D_j on every nondegenerate simplex.
pub fn check_dehn_square(fam: &SubspaceFamily, i: usize, j: usize) -> Result<(), BuildingError> {
    let f = build_f(fam)?;
    let (fi, di) = dehn_split(fam, &f, i)?;
    let (fj, dj) = dehn_split(fam, &f, j)?;
    let (fij, dij) = dehn_split(fam, &fi, j)?;
    let dji = dehn_between(fam, &fj, i, &fij)?;
    let a = dij.compose(&di);
    let b = dji.compose(&dj);
    for nd in f.set().nds() {
        if a.images[nd.0][nd.1] != b.images[nd.0][nd.1] {
            return Err(BuildingError::SquareFailure(f.set().label(nd).to_string()));
        }
    }
    Ok(())
}

/// D_I compared with the quotient F → F/∪ N_{i} through the flag reassembly bijection.
pub struct CompositeIso {
    pub target: FlagSpace,
    pub dehn: SimpMap,
    pub quotient: Quotient,
    pub reassembly: SimpMap,
}

/// Flag U_0 ⊂ … ⊂ U_a ⊂ U_a ⊕ U'_0 ⊂ … assembled from joined factor flags.
pub fn reassemble(fam: &SubspaceFamily, key: &FlagKey) -> Result<Vec<usize>, BuildingError> {
    let mut out = key[0].clone();
    let mut acc = *key[0].last().unwrap();
    for f in &key[1..] {
        for &m in f {
            out.push(fam.perp_sum(acc, m)?);
        }
        acc = *out.last().unwrap();
    }
    Ok(out)
}

pub fn dehn_composite_iso(fam: &SubspaceFamily, dims: &[usize]) -> Result<CompositeIso, BuildingError> {
    let mut dims = dims.to_vec();
    dims.sort_unstable();
    dims.dedup();
    let f = build_f(fam)?;
    let mut cur = f.clone();
    let mut dehn = SimpMap::identity(f.set());
    for &i in &dims {
        let (next, m) = dehn_split(fam, &cur, i)?;
        dehn = m.compose(&dehn);
        cur = next;
    }
    let mut sub: HashSet<Nd> = HashSet::new();
    for &i in &dims {
        sub.extend(n_cells(fam, &f, &[i]));
    }
    let quotient = crate::simpset::quotient(f.set(), &sub)?;
    let mut images = Vec::new();
    let mut hit: HashSet<Nd> = HashSet::new();
    for (k, level) in cur.keyed.keys.iter().enumerate() {
        let mut row = Vec::new();
        for key in level {
            row.push(match key {
                None => Simp::base(k),
                Some(key) => {
                    let flag = reassemble(fam, key)?;
                    let orig = f.locate_flag(&flag)?;
                    let img = quotient.projection.apply(&orig);
                    if !img.is_nondegenerate() || img.is_base() || !hit.insert(img.nd) {
                        return Err(BuildingError::BijectionFailure(flag_label(fam, key)));
                    }
                    img
                }
            });
        }
        images.push(row);
    }
    let total = quotient.keyed.set().nondegenerate_total() - 1;
    if hit.len() != total {
        return Err(BuildingError::BijectionFailure(format!("{} of {} simplices reached", hit.len(), total)));
    }
    let reassembly = SimpMap { images };
    reassembly.check(cur.set(), quotient.keyed.set())?;
    if reassembly.compose(&dehn) != quotient.projection {
        return Err(BuildingError::BijectionFailure("composite differs from the quotient map".into()));
    }
    Ok(CompositeIso { target: cur, dehn, quotient, reassembly })
}

/// Tuple space with a disjoint basepoint, truncated at degree `cap`.
#[derive(Debug, Clone)]
pub struct TupleSpace {
    pub points: Vec<Vector>,
    pub m: usize,
    /// span dimension (geometric) of each admissible point subset, by bitmask
    pub span_dim: HashMap<u32, usize>,
    pub spans: HashMap<u32, Subspace>,
    pub keyed: Keyed<Vec<usize>>,
}

fn mask_of(t: &[usize]) -> u32 {
    t.iter().fold(0, |m, &i| m | (1 << i))
}

pub fn tpl(points: &[Vector], m: usize, geometry: &Arc<QuadSpace>, cap: usize) -> Result<TupleSpace, BuildingError> {
    let k = points.len();
    let nm = geometry.n_minus();
    let mut spans: HashMap<u32, Subspace> = HashMap::new();
    let mut span_dim = HashMap::new();
    for mask in 1u32..(1 << k) {
        let subsets_ok = (0..k).filter(|i| mask & (1 << i) != 0).all(|i| {
            let rest = mask & !(1 << i);
            rest == 0 || span_dim.contains_key(&rest)
        });
        if !subsets_ok {
            continue;
        }
        let vs: Vec<Vector> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| points[i].clone()).collect();
        if let Ok(s) = span_any(&vs, geometry) {
            if s.signature()?.0 == nm && s.lin_dim() <= m + 1 {
                span_dim.insert(mask, s.lin_dim() - 1);
                spans.insert(mask, s);
            }
        }
    }
    let mut levels: Vec<Vec<Vec<usize>>> = vec![vec![]];
    let mut cur: Vec<Vec<usize>> = (0..k).filter(|&i| span_dim.contains_key(&(1 << i))).map(|i| vec![i]).collect();
    for deg in 0..=cap {
        if cur.is_empty() {
            break;
        }
        if levels.len() <= deg {
            levels.push(vec![]);
        }
        levels[deg] = cur.clone();
        cur = cur
            .iter()
            .flat_map(|t| {
                let last = *t.last().unwrap();
                let sd = &span_dim;
                (0..k).filter(move |&i| i != last && sd.contains_key(&(mask_of(t) | (1 << i)))).map(move |i| {
                    let mut t2 = t.clone();
                    t2.push(i);
                    t2
                })
            })
            .collect();
    }
    let keyed = Keyed::build(
        levels,
        |t| format!("{t:?}"),
        |t, _n, j| {
            let mut t2 = t.clone();
            t2.remove(j);
            let (sigma, distinct) = collapse_runs(&t2);
            Some((sigma, distinct))
        },
    )?;
    Ok(TupleSpace { points: points.to_vec(), m, span_dim, spans, keyed })
}

impl TupleSpace {
    pub fn set(&self) -> &SimpSet {
        &self.keyed.set
    }

    /// Cells whose points span dimension at most m'.
    pub fn sub(&self, m: usize) -> HashSet<Nd> {
        self.set()
            .nds()
            .filter(|&nd| nd != BASE && self.span_dim[&mask_of(self.keyed.key(nd).unwrap())] <= m)
            .collect()
    }
}

/// h: sd Tpl^m → T^m, a chain of subtuples to the flag of their spans.
pub fn span_map_h(
    fam: &SubspaceFamily,
    tup: &TupleSpace,
    sd: &Subdivision,
    t: &Keyed<Vec<usize>>,
) -> Result<SimpMap, BuildingError> {
    let mut images = Vec::new();
    for (k, level) in sd.keyed.keys.iter().enumerate() {
        let mut row = Vec::new();
        for key in level {
            row.push(match key {
                None => Simp::base(k),
                Some((nd, chain)) => {
                    let tuple = tup.keyed.key(*nd).unwrap();
                    let mut flag = Vec::with_capacity(chain.len());
                    for &s in chain {
                        let sub: Vec<usize> =
                            (0..tuple.len()).filter(|v| s & (1 << v) != 0).map(|v| tuple[v]).collect();
                        let span = &tup.spans[&mask_of(&sub)];
                        flag.push(
                            fam.find(span).ok_or_else(|| BuildingError::ClosureMissing(format!("span {span:?}")))?,
                        );
                    }
                    let (sigma, distinct) = collapse_runs(&flag);
                    t.try_locate(Some((sigma, distinct)), k)?
                }
            });
        }
        images.push(row);
    }
    Ok(SimpMap { images })
}

/// The chain Σ_σ sgn σ [span x_σ0 ⊂ … ⊂ span(x_σ0..x_σd)] × ((+1) − (−1)) in S^σ ∧ F^X.
pub struct SimplexClass {
    pub building: FlagSpace,
    pub smash: Smash,
    /// coefficients on the normalized generators of degree d+1
    pub chain: Vec<BigInt>,
}

fn permutations(n: usize) -> Vec<(Vec<usize>, i64)> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn rec(p: &mut Vec<usize>, k: usize, sign: i64, out: &mut Vec<(Vec<usize>, i64)>) {
        if k == p.len() {
            out.push((p.clone(), sign));
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            rec(p, k + 1, if i == k { sign } else { -sign }, out);
            p.swap(k, i);
        }
    }
    rec(&mut p, 0, 1, &mut out);
    out
}

/// Signed flags of the alternating sum over orderings of the points.
pub fn simplex_flags(fam: &SubspaceFamily, points: &[Vector]) -> Result<Vec<(Vec<usize>, i64)>, BuildingError> {
    let d = fam.d();
    if points.len() != d + 1 || rank(points) != d + 1 {
        return Err(BuildingError::DegenerateSimplex(format!("{} points in dimension {}", points.len(), d)));
    }
    let mut out = Vec::new();
    for (perm, sign) in permutations(d + 1) {
        let mut flag = Vec::with_capacity(d + 1);
        for k in 0..=d {
            let vs: Vec<Vector> = perm[..=k].iter().map(|&i| points[i].clone()).collect();
            let s = span_any(&vs, &fam.geometry)
                .map_err(|e| BuildingError::DegenerateSimplex(format!("partial span: {e}")))?;
            flag.push(fam.find(&s).ok_or_else(|| BuildingError::ClosureMissing(format!("span {s:?}")))?);
        }
        out.push((flag, sign));
    }
    Ok(out)
}

/// Eilenberg–Zilber product of the S^σ cycle with a flag chain.
pub fn sigma_cross(building: &FlagSpace, smash: &Smash, flags: &[(Vec<usize>, i64)]) -> Result<Vec<BigInt>, BuildingError> {
    let Some(d) = flags.first().map(|f| f.0.len() - 1) else {
        return Ok(vec![BigInt::zero(); smash.set().count(1)]);
    };
    let n = d + 1;
    let mut chain = vec![BigInt::zero(); smash.set().count(n)];
    for (flag, sign) in flags {
        let b = building.locate_flag(flag)?;
        for t in 0..=d {
            let bt = b.degen(t);
            for (cell, c) in [(SS_PLUS, 1i64), (SS_MINUS, -1)] {
                let a = circle_simplex(cell, t + 1, n);
                let s = smash.pair(&a, &bt);
                if let Some(g) = SimpSet::as_gen(&s) {
                    let coef = sign * c * if t % 2 == 0 { 1 } else { -1 };
                    chain[g] += coef;
                }
            }
        }
    }
    Ok(chain)
}

pub fn simplex_class(fam: &SubspaceFamily, points: &[Vector]) -> Result<SimplexClass, BuildingError> {
    let flags = simplex_flags(fam, points)?;
    let building = build_f(fam)?;
    let smash = Smash::new(&circle_ssigma(), building.set())?;
    let chain = sigma_cross(&building, &smash, &flags)?;
    Ok(SimplexClass { building, smash, chain })
}

/// Spans of nonempty sets of coordinate vectors in spherical d-space.
pub fn coordinate_family(d: usize) -> Result<SubspaceFamily, BuildingError> {
    let x = Arc::new(QuadSpace::spherical(d));
    let seeds = (0..=d)
        .map(|i| {
            let mut v = vec![0; d + 1];
            v[i] = 1;
            span_any(&[crate::exactlin::vec_q(&v)], &x)
        })
        .collect::<Result<Vec<_>, _>>()?;
    SubspaceFamily::close(x, seeds, &[ClosureOp::PerpSum], d + 1)
}

/// Action of a group on S^σ through its determinant character.
pub fn ssigma_det_action(group: Arc<FiniteGroup>) -> GroupAction {
    let x = circle_ssigma();
    let swap = SimpMap::from_fn(&x, |nd| match nd {
        SS_PLUS => Simp::nondeg(SS_MINUS),
        SS_MINUS => Simp::nondeg(SS_PLUS),
        other => Simp::nondeg(other),
    });
    let maps = group.det.iter().map(|&s| if s < 0 { swap.clone() } else { SimpMap::identity(&x) }).collect();
    GroupAction { group, maps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::{span, vec_q, Kind};
    use crate::homology::{homology, Coeff, HomologyGroup};

    fn sph(n: usize) -> Arc<QuadSpace> {
        Arc::new(QuadSpace::spherical(n))
    }

    fn line(x: &Arc<QuadSpace>, v: &[i64]) -> Subspace {
        span(&[vec_q(v)], x, Kind::Subspace).unwrap()
    }

    fn red(x: &SimpSet) -> Vec<HomologyGroup> {
        homology(&x.normalized_chains(), Coeff::Z)
    }

    fn coordinate_family(d: usize) -> SubspaceFamily {
        super::coordinate_family(d).unwrap()
    }

    #[test]
    fn closure_of_points_in_plane() {
        let x = sph(1);
        let fam = SubspaceFamily::close(x.clone(), vec![line(&x, &[1, 0]), line(&x, &[1, 1])], &[ClosureOp::Perp], 3)
            .unwrap();
        assert_eq!(fam.len(), 5);
        assert!(SubspaceFamily::new(x.clone(), vec![line(&x, &[1, 0])], &[ClosureOp::Perp]).is_err());
        assert_eq!(coordinate_family(3).len(), 15);
    }

    #[test]
    fn point_family_buildings() {
        let x = sph(1);
        for k in [2usize, 3, 4] {
            let pts: Vec<Subspace> = (0..k as i64).map(|i| line(&x, &[1, i])).collect();
            let fam = SubspaceFamily::new(x.clone(), pts, &[]).unwrap();
            let f = build_f(&fam).unwrap();
            let h = red(f.set());
            assert_eq!(h[0], HomologyGroup::zero(0));
            assert_eq!(h[1], HomologyGroup::free(1, k - 1));
            let t = build_t(&fam, 1).unwrap();
            assert_eq!(t.set.count(0), k + 2);
            assert_eq!(t.set.count(1), k);
        }
    }

    #[test]
    fn t_quotient_is_f() {
        let fam = coordinate_family(2);
        let t2 = build_t(&fam, 2).unwrap();
        let t1 = build_t(&fam, 1).unwrap();
        let sub: HashSet<Nd> =
            t1.index.keys().map(|c| t2.index[c]).collect();
        let q = crate::simpset::quotient(t2.set(), &sub).unwrap();
        let f = build_f(&fam).unwrap();
        assert_eq!(q.keyed.set().nondegenerate_total(), f.set().nondegenerate_total());
        assert_eq!(red(q.keyed.set()), red(f.set()));
        assert!(build_t(&fam, -1).unwrap().set.nondegenerate_total() == 1);
    }

    #[test]
    fn dehn_u_examples() {
        let fam = coordinate_family(2);
        let x = &fam.geometry;
        let p = fam.find(&line(x, &[1, 0, 0])).unwrap();
        let l = fam.find(&span(&[vec_q(&[1, 0, 0]), vec_q(&[0, 1, 0])], x, Kind::Subspace).unwrap()).unwrap();
        let q = fam.find(&line(x, &[0, 0, 1])).unwrap();
        let f = build_f(&fam).unwrap();
        let du = dehn_u(&fam, &f, l).unwrap();
        du.map.check(f.set(), du.join.set()).unwrap();
        let s = f.locate_flag(&[p, l, fam.whole]).unwrap();
        let img = du.map.apply(&s);
        let want = du.join.pair(&du.left.locate_flag(&[p, l]).unwrap(), &du.right.locate_flag(&[q]).unwrap());
        assert_eq!(img, want);
        let s2 = f.locate_flag(&[q, fam.whole]).unwrap();
        assert!(du.map.apply(&s2).is_base());
        // pivot is the last occurrence of U on degenerate flags
        for n in 0..=3 {
            for s in f.set().all_simplices(n) {
                if s.is_base() {
                    continue;
                }
                let flag = f.flag_of(&s).unwrap();
                let direct = dehn_u_simplex(&fam, &du.left, &du.right, &du.join, &flag, l).unwrap();
                assert_eq!(du.map.apply(&s), direct);
            }
        }
        assert_eq!(pivot_split(&fam, &[l, l, fam.whole], l).unwrap().unwrap().0, vec![l, l]);
    }

    #[test]
    fn dehn_i_is_wedge_of_dehn_u() {
        let fam = coordinate_family(2);
        let f = build_f(&fam).unwrap();
        let (tgt, d1) = dehn_i(&fam, &f, 1).unwrap();
        d1.check(f.set(), tgt.set()).unwrap();
        assert_eq!(tgt.decompositions.len(), 3);
        let mut parts = Vec::new();
        for dec in &tgt.decompositions {
            let du = dehn_u(&fam, &f, dec[0]).unwrap();
            parts.push(du.join.set().clone());
        }
        let w = crate::simpset::Wedge::new(&parts).unwrap();
        assert_eq!(red(w.set()), red(tgt.set()));
        assert_eq!(w.set().nondegenerate_total(), tgt.set().nondegenerate_total());
    }

    #[test]
    fn dehn_squares_commute() {
        let fam = coordinate_family(3);
        check_dehn_square(&fam, 1, 2).unwrap();
        check_dehn_square(&fam, 0, 2).unwrap();
        check_dehn_square(&fam, 0, 1).unwrap();
        let x = sph(2);
        let only = SubspaceFamily::new(x, vec![], &[]).unwrap();
        assert_eq!(build_f(&only).unwrap().set().nondegenerate_total(), 2);
    }

    #[test]
    fn n_subcomplexes() {
        let x = sph(1);
        let pts: Vec<Subspace> = (0..3).map(|i| line(&x, &[1, i])).collect();
        let fam = SubspaceFamily::new(x, pts, &[]).unwrap();
        let n = build_n(&fam, &[0]).unwrap();
        assert_eq!(n.set.nondegenerate_total(), 2);
        let fam3 = coordinate_family(3);
        let n_all = build_n(&fam3, &[0, 1, 2]).unwrap();
        assert_eq!(n_all.set.nondegenerate_total(), 2);
        assert_eq!(build_n(&fam3, &[]).unwrap().set.nondegenerate_total(), build_f(&fam3).unwrap().set().nondegenerate_total());
    }

    #[test]
    fn composite_iso_bijective() {
        let x = sph(1);
        let fam = SubspaceFamily::close(x.clone(), vec![line(&x, &[1, 0]), line(&x, &[1, 1])], &[ClosureOp::Perp], 3)
            .unwrap();
        dehn_composite_iso(&fam, &[0]).unwrap();
        let id = dehn_composite_iso(&fam, &[]).unwrap();
        assert_eq!(id.dehn, SimpMap::identity(build_f(&fam).unwrap().set()));
        let fam2 = coordinate_family(2);
        for dims in [vec![0], vec![1], vec![0, 1]] {
            dehn_composite_iso(&fam2, &dims).unwrap();
        }
    }

    #[test]
    fn tuple_spaces() {
        let x = sph(1);
        let a = vec_q(&[1, 0]);
        let b = vec_q(&[0, 1]);
        let t = tpl(&[a.clone()], 0, &x, 3).unwrap();
        assert_eq!(t.set().nondegenerate_total(), 2);
        let t2 = tpl(&[a.clone(), b.clone()], 1, &x, 3).unwrap();
        assert!(t2.keyed.index.contains_key(&vec![0, 1, 0]));
        assert_eq!(t2.set().count(2), 2);
        let h = Arc::new(QuadSpace::hyperbolic(1));
        let t3 = tpl(&[vec_q(&[1, 0]), vec_q(&[1, 1])], 1, &h, 2).unwrap();
        assert_eq!(t3.set().nondegenerate_total(), 2);
    }

    #[test]
    fn span_map_iso_on_points() {
        let x = sph(1);
        let pts = vec![vec_q(&[1, 0]), vec_q(&[1, 1]), vec_q(&[1, 2])];
        let lines: Vec<Subspace> = pts.iter().map(|p| span(&[p.clone()], &x, Kind::Subspace).unwrap()).collect();
        let fam = SubspaceFamily::new(x.clone(), lines, &[]).unwrap();
        let tup = tpl(&pts, 1, &x, 3).unwrap();
        let sd = Subdivision::new(tup.set()).unwrap();
        let t1 = build_t(&fam, 1).unwrap();
        let h = span_map_h(&fam, &tup, &sd, &t1).unwrap();
        h.check(sd.set(), t1.set()).unwrap();
        // quotients by the dimension-0 parts
        let sub0 = tup.sub(0);
        let sd0: HashSet<Nd> = sd
            .keyed
            .index
            .iter()
            .filter(|((nd, _), _)| sub0.contains(nd))
            .map(|(_, &v)| v)
            .collect();
        let qs = crate::simpset::quotient(sd.set(), &sd0).unwrap();
        let t0: HashSet<Nd> = t1.index.iter().filter(|(c, _)| c.iter().all(|&m| fam.lin_dim(m) == 1)).map(|(_, &v)| v).collect();
        let qt = crate::simpset::quotient(t1.set(), &t0).unwrap();
        let hq = SimpMap::from_fn(qs.keyed.set(), |nd| match qs.keyed.key(nd) {
            None => Simp::base(nd.0),
            Some(&orig) => qt.projection.apply(&h.apply(&Simp::nondeg(orig))),
        });
        hq.check(qs.keyed.set(), qt.keyed.set()).unwrap();
        let cs = qs.keyed.set().normalized_chains();
        let ct = qt.keyed.set().normalized_chains();
        let hs = crate::homology::HomologyData::new(&cs, Coeff::Z);
        let ht = crate::homology::HomologyData::new(&ct, Coeff::Z);
        assert_eq!(ht.groups()[1], HomologyGroup::free(1, 2));
        let m = crate::homology::induced_homology(&hq.chain_map(qs.keyed.set()), &hs, &ht, 1, ct.rank(1));
        let dense: Vec<Vec<BigInt>> = m;
        assert_eq!(dense.len(), 2);
        let det = &dense[0][0] * &dense[1][1] - &dense[0][1] * &dense[1][0];
        assert_eq!(det.magnitude(), &num_bigint::BigUint::from(1u32));
    }

    #[test]
    fn simplex_class_cycles() {
        let x = sph(1);
        let pts = vec![vec_q(&[1, 0]), vec_q(&[0, 1])];
        let fam = SubspaceFamily::of_partial_spans(x.clone(), &pts).unwrap();
        let sc = simplex_class(&fam, &pts).unwrap();
        let c = sc.smash.set().normalized_chains();
        assert!(c.boundary(2, &sc.chain).iter().all(|v| v.is_zero()));
        assert_eq!(sc.chain.iter().filter(|v| !v.is_zero()).count(), 8);
        let swapped = simplex_class(&fam, &[pts[1].clone(), pts[0].clone()]).unwrap();
        let neg: Vec<BigInt> = sc.chain.iter().map(|v| -v).collect();
        assert_eq!(swapped.chain, neg);
        let x2 = sph(2);
        let p2 = vec![vec_q(&[1, 0, 0]), vec_q(&[1, 1, 0]), vec_q(&[1, 2, 3])];
        let fam2 = SubspaceFamily::of_partial_spans(x2, &p2).unwrap();
        let sc2 = simplex_class(&fam2, &p2).unwrap();
        let c2 = sc2.smash.set().normalized_chains();
        assert!(c2.boundary(3, &sc2.chain).iter().all(|v| v.is_zero()));
        assert!(sc2.chain.iter().any(|v| !v.is_zero()));
        let h = Arc::new(QuadSpace::hyperbolic(1));
        let hp = vec![vec_q(&[2, 1]), vec_q(&[3, -1])];
        let famh = SubspaceFamily::of_partial_spans(h, &hp).unwrap();
        let sch = simplex_class(&famh, &hp).unwrap();
        assert!(sch.smash.set().normalized_chains().boundary(2, &sch.chain).iter().all(|v| v.is_zero()));
        assert!(matches!(
            simplex_class(&fam, &[pts[0].clone(), pts[0].clone()]),
            Err(BuildingError::DegenerateSimplex(_))
        ));
    }

    #[test]
    fn family_json_roundtrip() {
        let fam = coordinate_family(2);
        let j = serde_json::to_string(&FamilyJson::from_family(&fam)).unwrap();
        let back: FamilyJson = serde_json::from_str(&j).unwrap();
        let f2 = back.to_family(3).unwrap();
        assert_eq!(f2.members, fam.members);
    }

    #[test]
    fn shapes() {
        assert_eq!(split_shape(&[3], 1), Some((0, 2, vec![1, 2])));
        assert_eq!(split_shape(&[1, 2], 2), Some((1, 1, vec![1, 1, 1])));
        assert_eq!(split_shape(&[1, 2], 1), None);
        assert_eq!(split_shape(&[2], 0), Some((0, 1, vec![0, 2])));
        assert_eq!(shape_for_splits(5, &[3, 1]), vec![1, 2, 2]);
        assert_eq!(split_points(&[1, 2, 2]), vec![1, 3]);
        assert_eq!(split_points(&[3]), Vec::<usize>::new());
    }
}
