//! Index cubes of orthogonal decompositions, Dehn cubes of flag spaces, the
//! comparison from smashed to joined flag spaces, the Dehn complex of a finite
//! symmetric family, its edge map, and the double-complex identity behind it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::building::{
    dehn_between, dehn_composite_iso, shape_for_splits, sigma_cross, simplex_flags, split_points, split_shape,
    ssigma_det_action, BuildingError, FlagKey, FlagSpace, SubspaceFamily,
};
use crate::exactlin::{det, Isometry, Vector, Q};
use crate::grouphom::{
    add_to, bar_boundary, bar_complex_module, bar_face, BarChain, FiniteGroup, GroupError,
};
use crate::homology::{
    cube_ss_limited, cut_above, homology, homology_json, induced_homology, reduce, total_complex, ChainComplex, ChainMap, Coeff,
    CubeDiagram, HomError, HomologyData, HomologyGroup, IntMatrix, SparseCol,
};
use crate::simpset::{
    circle_index, circle_ssigma, collapse_runs, gamma_simplex, orbit_chains, OrbitChains, Simp, SimpError, SimpMap,
    SimpSet, Smash, Wedge,
};

#[derive(Debug, Error)]
pub enum DehnError {
    #[error(transparent)]
    Building(#[from] BuildingError),
    #[error(transparent)]
    Simp(#[from] SimpError),
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("points do not span a nondegenerate simplex: {0}")]
    DegenerateConfiguration(String),
    #[error("group has no matrix embedding")]
    NoMatrices,
    #[error("vertex {0} has odd torsion in the top homology")]
    TorsionVertex(usize),
    #[error("{0}")]
    Mismatch(String),
}

/// I_d (all parts even, b ≥ 1) or Î_d (all parts positive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexMode {
    Even,
    Full,
}

/// Ā = (b, a_1, …, a_i): W of dimension b and V_j of linear dimension a_j.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct IndexObject {
    pub b: usize,
    pub parts: Vec<usize>,
}

impl IndexObject {
    pub fn from_shape(shape: &[usize]) -> Self {
        IndexObject { b: shape[0], parts: shape[1..].to_vec() }
    }

    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.b];
        s.extend_from_slice(&self.parts);
        s
    }

    /// |Ā|
    pub fn len(&self) -> usize {
        1 + self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn d(&self) -> usize {
        self.b + self.parts.iter().sum::<usize>()
    }

    pub fn admissible(&self, mode: IndexMode) -> bool {
        self.parts.iter().all(|&a| a > 0)
            && match mode {
                IndexMode::Even => self.b >= 1 && self.parts.iter().all(|a| a % 2 == 0),
                IndexMode::Full => true,
            }
    }
}

impl fmt::Display for IndexObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.shape().iter().map(|v| v.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexMorphism {
    pub source: usize,
    pub target: usize,
    pub coordinate: usize,
    /// geometric dimension of the split
    pub split: usize,
    /// r = sum of the target parts after the split point
    pub direction: usize,
}

/// The index category as a cube: vertex v carries the object obtained by
/// splitting (d) at splits[j] for every bit j of v.
#[derive(Debug, Clone, Serialize)]
pub struct CubeIndex {
    pub mode: IndexMode,
    pub d: usize,
    pub splits: Vec<usize>,
    pub objects: Vec<IndexObject>,
    pub morphisms: Vec<IndexMorphism>,
}

impl CubeIndex {
    pub fn dim(&self) -> usize {
        self.splits.len()
    }
}

/// Split dimensions of the cube coordinates: d-2, d-4, … for I_d and 0..d-1 for Î_d.
pub fn cube_splits(d: usize, mode: IndexMode) -> Vec<usize> {
    match mode {
        IndexMode::Even => (0..d.saturating_sub(1) / 2).map(|j| d - 2 * (j + 1)).collect(),
        IndexMode::Full => (0..d).collect(),
    }
}

fn subset(splits: &[usize], v: usize) -> Vec<usize> {
    (0..splits.len()).filter(|j| v & (1 << j) != 0).map(|j| splits[j]).collect()
}

pub fn index_from_splits(d: usize, mode: IndexMode, splits: Vec<usize>) -> Result<CubeIndex, DehnError> {
    let m = splits.len();
    let objects: Vec<IndexObject> =
        (0..1usize << m).map(|v| IndexObject::from_shape(&shape_for_splits(d, &subset(&splits, v)))).collect();
    let mut morphisms = Vec::new();
    for v in 0..1usize << m {
        for (j, &l) in splits.iter().enumerate() {
            if v & (1 << j) != 0 {
                continue;
            }
            let (factor, _, shape) = split_shape(&objects[v].shape(), l)
                .ok_or_else(|| DehnError::Mismatch(format!("{} cannot be split at {l}", objects[v])))?;
            let direction: usize = shape[factor + 1..].iter().sum();
            if direction != d - l {
                return Err(DehnError::Mismatch(format!("direction {direction} at split {l} of {}", objects[v])));
            }
            morphisms.push(IndexMorphism { source: v, target: v | (1 << j), coordinate: j, split: l, direction });
        }
    }
    Ok(CubeIndex { mode, d, splits, objects, morphisms })
}

pub fn enumerate_index(d: usize, mode: IndexMode) -> Result<CubeIndex, DehnError> {
    index_from_splits(d, mode, cube_splits(d, mode))
}

/// All compositions (b, a_1, …) of d admissible for the mode, by brute force.
pub fn index_objects_by_compositions(d: usize, mode: IndexMode) -> Vec<IndexObject> {
    fn parts(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first in 1..=n {
            for mut rest in parts(n - first) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }
    let mut out: Vec<IndexObject> = (0..=d)
        .flat_map(|b| parts(d - b).into_iter().map(move |p| IndexObject { b, parts: p }))
        .filter(|o| o.admissible(mode))
        .collect();
    out.sort();
    out
}

/// Pairs of objects where the second refines the first by exactly one split.
pub fn refinement_pairs(objects: &[IndexObject]) -> usize {
    let sets: Vec<BTreeSet<usize>> = objects.iter().map(|o| split_points(&o.shape()).into_iter().collect()).collect();
    let mut n = 0;
    for a in &sets {
        for b in &sets {
            if b.len() == a.len() + 1 && a.is_subset(b) {
                n += 1;
            }
        }
    }
    n
}

/// Flag spaces F^Ā at the vertices of a sub-cube of the Dehn cube and the Dehn maps on its edges.
#[derive(Debug, Clone)]
pub struct FlagCube {
    pub d: usize,
    pub splits: Vec<usize>,
    pub spaces: Vec<FlagSpace>,
    pub maps: Vec<Vec<Option<SimpMap>>>,
}

fn check_squares(dim: usize, maps: &[Vec<Option<SimpMap>>]) -> Result<(), DehnError> {
    for v in 0..1usize << dim {
        for i in 0..dim {
            for j in i + 1..dim {
                if v & (1 << i) != 0 || v & (1 << j) != 0 {
                    continue;
                }
                let get = |u: usize, k: usize| maps[u][k].as_ref().expect("cube edge");
                let a = get(v | (1 << i), j).compose(get(v, i));
                let b = get(v | (1 << j), i).compose(get(v, j));
                if a != b {
                    return Err(HomError::NonCommutingSquare { vertex: v, i, j }.into());
                }
            }
        }
    }
    Ok(())
}

pub fn build_flag_cube(fam: &SubspaceFamily, splits: &[usize]) -> Result<FlagCube, DehnError> {
    let d = fam.d();
    let m = splits.len();
    let spaces = (0..1usize << m)
        .map(|v| FlagSpace::new(fam, &shape_for_splits(d, &subset(splits, v))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut maps = vec![vec![None; m]; 1 << m];
    for v in 0..1usize << m {
        for (j, &l) in splits.iter().enumerate() {
            if v & (1 << j) == 0 {
                maps[v][j] = Some(dehn_between(fam, &spaces[v], l, &spaces[v | (1 << j)])?);
            }
        }
    }
    check_squares(m, &maps)?;
    Ok(FlagCube { d, splits: splits.to_vec(), spaces, maps })
}

/// The cube S^σ ∧ F^Ā with edges 1 ∧ D.
#[derive(Debug, Clone)]
pub struct SigmaCube {
    pub smashes: Vec<Smash>,
    pub maps: Vec<Vec<Option<SimpMap>>>,
}

impl FlagCube {
    pub fn dim(&self) -> usize {
        self.splits.len()
    }

    pub fn chain_cube(&self) -> CubeDiagram {
        let mut c = CubeDiagram::new(self.dim(), self.spaces.iter().map(|s| s.set().normalized_chains()).collect());
        for v in 0..1usize << self.dim() {
            for j in 0..self.dim() {
                if let Some(f) = &self.maps[v][j] {
                    c.set_edge(v, j, f.chain_map(self.spaces[v].set()));
                }
            }
        }
        c
    }

    pub fn with_sigma(&self) -> Result<SigmaCube, DehnError> {
        let ss = circle_ssigma();
        let id = SimpMap::identity(&ss);
        let smashes = self.spaces.iter().map(|s| Smash::new(&ss, s.set())).collect::<Result<Vec<_>, _>>()?;
        let mut maps = vec![vec![None; self.dim()]; 1 << self.dim()];
        for v in 0..1usize << self.dim() {
            for j in 0..self.dim() {
                if let Some(f) = &self.maps[v][j] {
                    maps[v][j] = Some(smashes[v].map(&smashes[v | (1 << j)], &id, f));
                }
            }
        }
        check_squares(self.dim(), &maps)?;
        Ok(SigmaCube { smashes, maps })
    }
}

impl SigmaCube {
    pub fn dim(&self) -> usize {
        self.maps.first().map_or(0, |m| m.len())
    }

    pub fn chain_cube(&self) -> CubeDiagram {
        let mut c = CubeDiagram::new(self.dim(), self.smashes.iter().map(|s| s.set().normalized_chains()).collect());
        for v in 0..1usize << self.dim() {
            for j in 0..self.dim() {
                if let Some(f) = &self.maps[v][j] {
                    c.set_edge(v, j, f.chain_map(self.smashes[v].set()));
                }
            }
        }
        c
    }
}

/// The Dehn cube S^σ ∧ F^Ā over I_d or Î_d.
pub fn build_dehn_cube(fam: &SubspaceFamily, mode: IndexMode) -> Result<(CubeIndex, FlagCube, SigmaCube), DehnError> {
    let index = enumerate_index(fam.d(), mode)?;
    let flags = build_flag_cube(fam, &index.splits)?;
    let sigma = flags.with_sigma()?;
    Ok((index, flags, sigma))
}

fn degree_or_zero(h: &[HomologyGroup], n: usize) -> HomologyGroup {
    h.get(n).cloned().unwrap_or_else(|| HomologyGroup::zero(n))
}

fn same_groups(a: &[HomologyGroup], b: &[HomologyGroup]) -> bool {
    let n = a.len().max(b.len());
    (0..n).all(|k| {
        let (x, y) = (degree_or_zero(a, k), degree_or_zero(b, k));
        x.rank == y.rank && x.torsion == y.torsion
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ZidReport {
    pub d: usize,
    pub homology: Vec<HomologyGroup>,
    pub ok: bool,
}

/// Total homology of the Î_d Dehn cube; expected Z in degree d+1 only.
pub fn verify_zid(fam: &SubspaceFamily) -> Result<ZidReport, DehnError> {
    let d = fam.d();
    let (_, _, sigma) = build_dehn_cube(fam, IndexMode::Full)?;
    let tot = total_complex(&sigma.chain_cube())?;
    let h = homology(&tot.complex, Coeff::Z);
    let ok = h.iter().all(|g| if g.degree == d + 1 { g.rank == 1 && g.torsion.is_empty() } else { g.is_zero() })
        && h.len() > d + 1;
    Ok(ZidReport { d, homology: h, ok })
}

#[derive(Debug, Clone, Serialize)]
pub struct TotcofibReport {
    pub dims: Vec<usize>,
    pub total: Vec<HomologyGroup>,
    /// H̃_{n-|I|}(N_I F) placed in degree n
    pub expected: Vec<HomologyGroup>,
    pub bijective: bool,
    pub ok: bool,
}

/// Sub-cube of the Dehn maps D_i, i ∈ I, against the |I|-fold shift of N_I F.
pub fn totcofib_check(fam: &SubspaceFamily, dims: &[usize]) -> Result<TotcofibReport, DehnError> {
    let mut dims = dims.to_vec();
    dims.sort_unstable();
    dims.dedup();
    let cube = build_flag_cube(fam, &dims)?;
    let tot = total_complex(&cube.chain_cube())?;
    let total = homology(&tot.complex, Coeff::Z);
    let n = crate::building::build_n(fam, &dims)?;
    let hn = homology(&n.set.normalized_chains(), Coeff::Z);
    let k = dims.len();
    let expected: Vec<HomologyGroup> = (0..hn.len() + k)
        .map(|deg| {
            if deg < k {
                HomologyGroup::zero(deg)
            } else {
                HomologyGroup { degree: deg, ..hn[deg - k].clone() }
            }
        })
        .collect();
    let bijective = match dehn_composite_iso(fam, &dims) {
        Ok(_) => true,
        Err(BuildingError::BijectionFailure(_)) => false,
        Err(e) => return Err(e.into()),
    };
    let ok = bijective && same_groups(&total, &expected);
    Ok(TotcofibReport { dims, total, expected, bijective, ok })
}

/// Left-associated smash product of several pointed simplicial sets.
#[derive(Debug, Clone)]
pub struct SmashChain {
    pub factors: Vec<SimpSet>,
    pub smashes: Vec<Smash>,
}

impl SmashChain {
    pub fn new(factors: Vec<SimpSet>) -> Result<Self, SimpError> {
        let mut smashes: Vec<Smash> = Vec::new();
        for f in &factors[1..] {
            let left = smashes.last().map_or(&factors[0], |s| s.set());
            let s = Smash::new(left, f)?;
            smashes.push(s);
        }
        Ok(SmashChain { factors, smashes })
    }

    pub fn set(&self) -> &SimpSet {
        self.smashes.last().map_or(&self.factors[0], |s| s.set())
    }

    /// Components of a non-basepoint simplex, left to right.
    pub fn components(&self, s: &Simp) -> Option<Vec<Simp>> {
        if s.is_base() {
            return None;
        }
        let mut out = Vec::with_capacity(self.factors.len());
        let mut cur = s.clone();
        for sm in self.smashes.iter().rev() {
            let (a, b) = sm.split(&cur)?;
            out.push(b);
            cur = a;
        }
        out.push(cur);
        out.reverse();
        Some(out)
    }
}

/// J^Ā: wedge over decompositions of F^W ∧ (S^σ ∧ F^{V_1}) ∧ … ∧ (S^σ ∧ F^{V_i}).
pub struct JSpace {
    pub decompositions: Vec<Vec<usize>>,
    pub chains: Vec<SmashChain>,
    pub wedge: Wedge,
}

pub fn build_j(fam: &SubspaceFamily, shape: &[usize]) -> Result<JSpace, DehnError> {
    let decompositions = crate::building::decompositions(fam, shape);
    let ss = circle_ssigma();
    let mut chains = Vec::new();
    for dec in &decompositions {
        let mut factors = Vec::new();
        for (k, &y) in dec.iter().enumerate() {
            if k > 0 {
                factors.push(ss.clone());
            }
            factors.push(FlagSpace::building(fam, y)?.set().clone());
        }
        chains.push(SmashChain::new(factors)?);
    }
    let parts: Vec<SimpSet> = chains.iter().map(|c| c.set().clone()).collect();
    let wedge = Wedge::new(&parts)?;
    Ok(JSpace { decompositions, chains, wedge })
}

/// The composite of τ, γ and the smash-to-join maps for one decomposition.
pub struct FMap {
    pub decomposition: Vec<usize>,
    pub source: SmashChain,
    pub target_flags: FlagSpace,
    pub target: Smash,
    pub map: SimpMap,
}

pub fn f_map(fam: &SubspaceFamily, shape: &[usize], dec: &[usize]) -> Result<FMap, DehnError> {
    let ss = circle_ssigma();
    let buildings = dec.iter().map(|&y| FlagSpace::building(fam, y)).collect::<Result<Vec<_>, _>>()?;
    let mut factors = Vec::new();
    for b in &buildings {
        factors.push(ss.clone());
        factors.push(b.set().clone());
    }
    let source = SmashChain::new(factors)?;
    let target_flags = FlagSpace::from_decompositions(fam, shape.to_vec(), vec![dec.to_vec()])?;
    let target = Smash::new(&ss, target_flags.set())?;
    let mut failure: Option<SimpError> = None;
    let map = SimpMap::from_fn(source.set(), |nd| {
        let n = nd.0;
        let base = Simp::base(n);
        let Some(comps) = source.components(&Simp::nondeg(nd)) else { return base };
        let mut c = comps[0].clone();
        let Some(first) = buildings[0].flag_of(&comps[1]) else { return base };
        let mut acc: Vec<(usize, usize)> = first.into_iter().map(|m| (0, m)).collect();
        for k in 1..dec.len() {
            let Some((a, b)) = gamma_simplex(&c, &comps[2 * k]) else { return base };
            let t = circle_index(&b).expect("circle coordinate");
            let Some(y) = buildings[k].flag_of(&comps[2 * k + 1]) else { return base };
            acc.truncate(t);
            for f in 0..k {
                match acc.iter().rev().find(|v| v.0 == f) {
                    Some(v) if v.1 == dec[f] => {}
                    _ => return base,
                }
            }
            acc.extend(y[t..].iter().map(|&m| (k, m)));
            c = a;
        }
        let (sigma, distinct) = collapse_runs(&acc);
        let mut key: FlagKey = vec![vec![]; dec.len()];
        for (f, m) in distinct {
            key[f].push(m);
        }
        match target_flags.keyed.try_locate(Some((sigma, key)), n) {
            Ok(s) => target.pair(&c, &s),
            Err(e) => {
                failure.get_or_insert(e);
                base
            }
        }
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    map.check(source.set(), target.set())?;
    Ok(FMap { decomposition: dec.to_vec(), source, target_flags, target, map })
}

#[derive(Debug, Clone, Serialize)]
pub struct FCompareReport {
    pub shape: Vec<usize>,
    /// number of γ factors, |Ā| - 1
    pub gamma_count: usize,
    /// 2^{1-|Ā|}, applied to the induced maps only
    pub multiplier: String,
    /// induced maps on H_{d+1}, one per decomposition
    pub matrices: Vec<Vec<Vec<String>>>,
    /// |det| of each induced matrix
    pub determinants: Vec<String>,
    pub ok: bool,
}

/// H_{d+1} of f_Ā on every decomposition: divisible by 2^{|Ā|-1} and invertible after scaling.
pub fn compare_f_a(fam: &SubspaceFamily, shape: &[usize]) -> Result<FCompareReport, DehnError> {
    let d = fam.d();
    let gamma_count = shape.len() - 1;
    let scale = BigInt::one() << gamma_count;
    let mut matrices = Vec::new();
    let mut determinants = Vec::new();
    let mut ok = true;
    let decs = crate::building::decompositions(fam, shape);
    if decs.is_empty() {
        ok = false;
    }
    for dec in decs {
        let fm = f_map(fam, shape, &dec)?;
        let cs = fm.source.set().normalized_chains();
        let ct = fm.target.set().normalized_chains();
        let hs = HomologyData::in_degrees(&cs, Coeff::Z, &[d + 1]);
        let ht = HomologyData::in_degrees(&ct, Coeff::Z, &[d + 1]);
        let m = induced_homology(&fm.map.chain_map(fm.source.set()), &hs, &ht, d + 1, ct.rank(d + 1));
        let square = m.len() == hs.ngens(d + 1) && m.iter().all(|r| r.len() == m.len());
        let divisible = m.iter().flatten().all(|x| x.is_multiple_of(&scale));
        let qm: Vec<Vec<Q>> = m.iter().map(|r| r.iter().map(|x| Q::new(x.clone(), scale.clone())).collect()).collect();
        let dt = if square { det(&qm) } else { Q::zero() };
        ok &= square && divisible && dt.abs().is_one() && !m.is_empty();
        let full_det = if square { det(&m.iter().map(|r| r.iter().map(|x| Q::from_integer(x.clone())).collect()).collect()) } else { Q::zero() };
        determinants.push(full_det.abs().to_string());
        matrices.push(m.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect());
    }
    Ok(FCompareReport {
        shape: shape.to_vec(),
        gamma_count,
        multiplier: format!("1/{}", scale),
        matrices,
        determinants,
        ok,
    })
}

/// Homotopy orbits of the Dehn cube, as bar-construction chain models.
pub struct OrbitCube {
    pub index: CubeIndex,
    pub flags: FlagCube,
    pub sigma: SigmaCube,
    pub group: Arc<FiniteGroup>,
    pub actions: Vec<crate::simpset::GroupAction>,
    pub orbits: Vec<OrbitChains>,
    /// homology over Z[1/2]
    pub homology: Vec<HomologyData>,
    pub edges: Vec<Vec<Option<ChainMap>>>,
    pub bound: usize,
}

pub fn orbit_cube(fam: &SubspaceFamily, group: Arc<FiniteGroup>, bound: usize) -> Result<OrbitCube, DehnError> {
    let d = fam.d();
    if bound < d + 2 {
        return Err(DehnError::Mismatch(format!("truncation {bound} is below {}", d + 2)));
    }
    let (index, flags, sigma) = build_dehn_cube(fam, IndexMode::Even)?;
    let perms = fam.group_permutations(&group)?;
    let ssa = ssigma_det_action(group.clone());
    let mut actions = Vec::new();
    let mut orbits = Vec::new();
    let mut hom = Vec::new();
    for (v, sp) in flags.spaces.iter().enumerate() {
        let fa = sp.action(group.clone(), &perms)?;
        let a = sigma.smashes[v].action(&ssa, &fa);
        let oc = orbit_chains(sigma.smashes[v].set(), &a, bound);
        hom.push(HomologyData::in_degrees(&oc.complex, Coeff::Zhalf, &[d + 1]));
        orbits.push(oc);
        actions.push(a);
    }
    let m = index.dim();
    let mut edges = vec![vec![None; m]; 1 << m];
    for v in 0..1usize << m {
        for j in 0..m {
            if let Some(f) = &sigma.maps[v][j] {
                edges[v][j] = Some(orbits[v].induced(f, &orbits[v | (1 << j)]));
            }
        }
    }
    Ok(OrbitCube { index, flags, sigma, group, actions, orbits, homology: hom, edges, bound })
}

fn kappa(v: usize, j: usize) -> i64 {
    if (v & ((1 << j) - 1)).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

fn to_i64(x: &BigInt) -> Result<i64, DehnError> {
    x.to_i64().ok_or_else(|| DehnError::Mismatch(format!("coefficient {x} exceeds 64 bits")))
}

/// The Dehn complex: H_{d+1} of the homotopy orbits at each vertex of the I_d cube,
/// in degree #zeros, with the induced Dehn maps signed as in the total complex.
#[derive(Debug, Clone)]
pub struct DehnComplexData {
    pub d: usize,
    pub objects: Vec<IndexObject>,
    pub vertex_groups: Vec<HomologyGroup>,
    /// (source vertex, coordinate, induced matrix)
    pub blocks: Vec<(usize, usize, IntMatrix)>,
    pub complex: ChainComplex,
    /// gens[p][i] = (vertex, generator of its top group)
    pub gens: Vec<Vec<(usize, usize)>>,
    pub homology: Vec<HomologyGroup>,
}

pub fn dehn_complex_from(oc: &OrbitCube) -> Result<DehnComplexData, DehnError> {
    let d = oc.index.d;
    let m = oc.index.dim();
    let top = d + 1;
    let mut vertex_groups = Vec::new();
    for (v, h) in oc.homology.iter().enumerate() {
        if h.gen_orders(top).iter().any(|o| o.is_some()) {
            return Err(DehnError::TorsionVertex(v));
        }
        vertex_groups.push(h.group(top).cloned().unwrap_or_else(|| HomologyGroup::zero(top)));
    }
    let mut gens: Vec<Vec<(usize, usize)>> = vec![vec![]; m + 1];
    let mut pos: HashMap<(usize, usize), usize> = HashMap::new();
    for v in 0..1usize << m {
        let p = m - v.count_ones() as usize;
        for k in 0..oc.homology[v].ngens(top) {
            pos.insert((v, k), gens[p].len());
            gens[p].push((v, k));
        }
    }
    let mut blocks = Vec::new();
    let mut bd: Vec<Vec<SparseCol>> = gens.iter().map(|g| vec![vec![]; g.len()]).collect();
    for v in 0..1usize << m {
        let p = m - v.count_ones() as usize;
        for j in 0..m {
            let Some(f) = &oc.edges[v][j] else { continue };
            let w = v | (1 << j);
            let mat = induced_homology(f, &oc.homology[v], &oc.homology[w], top, oc.orbits[w].complex.rank(top));
            for k in 0..oc.homology[v].ngens(top) {
                let x = pos[&(v, k)];
                for (i, row) in mat.iter().enumerate() {
                    if !row[k].is_zero() {
                        bd[p][x].push((pos[&(w, i)], kappa(v, j) * to_i64(&row[k])?));
                    }
                }
            }
            blocks.push((v, j, mat));
        }
    }
    let complex = ChainComplex::new(gens.iter().map(|g| g.len()).collect(), bd);
    complex.check_d2()?;
    let homology = homology(&complex, Coeff::Zhalf);
    Ok(DehnComplexData { d, objects: oc.index.objects.clone(), vertex_groups, blocks, complex, gens, homology })
}

/// Route A: construct, then report.
pub fn dehn_complex(fam: &SubspaceFamily, group: Arc<FiniteGroup>, bound: usize) -> Result<(OrbitCube, DehnComplexData), DehnError> {
    let oc = orbit_cube(fam, group, bound)?;
    let dc = dehn_complex_from(&oc)?;
    Ok((oc, dc))
}

fn odd_part_equal(a: &HomologyGroup, b: &HomologyGroup) -> bool {
    let strip = |h: &HomologyGroup| -> Vec<BigInt> {
        let mut t: Vec<BigInt> = h
            .torsion
            .iter()
            .map(|x| {
                let mut y = x.clone();
                while y.is_even() {
                    y /= 2;
                }
                y
            })
            .filter(|y| !y.is_one())
            .collect();
        t.sort();
        t
    };
    a.rank == b.rank && strip(a) == strip(b)
}

#[derive(Debug, Clone, Serialize)]
pub struct SsComparison {
    /// E^1_{p,d+1} and E^2_{p,d+1} for p = 0..dim
    pub e1_bottom: Vec<HomologyGroup>,
    pub e2_bottom: Vec<HomologyGroup>,
    /// E^1_{p,q} vanishes for q < d+1
    pub below_vanishes: bool,
    pub e1_matches: bool,
    pub e2_matches: bool,
}

/// Route B: the cube spectral sequence of the homotopy-orbit cube, on reduced vertex complexes.
pub fn ss_bottom_row(oc: &OrbitCube, dc: &DehnComplexData) -> Result<SsComparison, DehnError> {
    let d = oc.index.d;
    let m = oc.index.dim();
    let top = d + 1;
    let reds: Vec<_> = oc.orbits.iter().map(|o| reduce(&o.complex)).collect();
    let cuts = reds.iter().map(|r| cut_above(&r.reduced, top)).collect::<Result<Vec<_>, _>>()?;
    let mut cube = CubeDiagram::new(m, cuts.iter().map(|c| c.complex.clone()).collect());
    for v in 0..1usize << m {
        for j in 0..m {
            let Some(f) = &oc.edges[v][j] else { continue };
            let w = v | (1 << j);
            let reduced_map = |k: usize, chain: &[BigInt]| -> Vec<BigInt> {
                let img = f.apply(k, &reds[v].include(k, chain), oc.orbits[w].complex.rank(k));
                reds[w].project(k, &img)
            };
            let sparse = |col: Vec<BigInt>| -> Result<SparseCol, DehnError> {
                col.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| Ok((i, to_i64(c)?))).collect()
            };
            let mut images = Vec::new();
            for k in 0..=top {
                let n = cuts[v].complex.rank(k);
                let cols = (0..n)
                    .map(|x| {
                        let mut e = vec![BigInt::zero(); n];
                        e[x] = BigInt::one();
                        sparse(reduced_map(k, &e))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                images.push(cols);
            }
            let cols = (0..cuts[v].complex.rank(top + 1))
                .map(|x| {
                    let mut e = vec![BigInt::zero(); cuts[v].complex.rank(top + 1)];
                    e[x] = BigInt::one();
                    let b = cuts[v].complex.boundary(top + 1, &e);
                    let y = cuts[w]
                        .solve(&reduced_map(top, &b))
                        .ok_or_else(|| DehnError::Mismatch("edge map leaves the boundary lattice".into()))?;
                    sparse(y)
                })
                .collect::<Result<Vec<_>, _>>()?;
            images.push(cols);
            cube.set_edge(v, j, ChainMap { images });
        }
    }
    cube.check()?;
    let pages = cube_ss_limited(&cube, m + d + 1, 2)?;
    let row = |page: usize| -> Vec<HomologyGroup> {
        (0..=m)
            .map(|p| pages[page].entries.get(&(p, d + 1)).cloned().unwrap_or_else(|| HomologyGroup::zero(d + 1)))
            .collect()
    };
    let e1_bottom = row(0);
    let e2_bottom = if pages.len() > 1 { row(1) } else { e1_bottom.clone() };
    let below_vanishes = pages[0].entries.iter().filter(|((_, q), _)| *q < d + 1).all(|(_, h)| h.is_zero());
    let per_degree: Vec<HomologyGroup> = (0..=m)
        .map(|p| {
            let mut g = HomologyGroup::zero(d + 1);
            for v in 0..1usize << m {
                if m - v.count_ones() as usize == p {
                    g = g.direct_sum(&dc.vertex_groups[v]);
                }
            }
            g
        })
        .collect();
    let e1_matches = (0..=m).all(|p| odd_part_equal(&e1_bottom[p], &per_degree[p]));
    let e2_matches = (0..=m).all(|p| odd_part_equal(&e2_bottom[p], &degree_or_zero(&dc.homology, p)));
    Ok(SsComparison { e1_bottom, e2_bottom, below_vanishes, e1_matches, e2_matches })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoinvariantComparison {
    /// rank of H_{d+1}(S^σ ∧ F^Ā; Z) per vertex
    pub module_ranks: Vec<usize>,
    /// coinvariants over Z[1/2] per vertex
    pub coinvariants: Vec<HomologyGroup>,
    pub homology: Vec<HomologyGroup>,
    pub matches: bool,
}

fn to_small(m: &IntMatrix) -> Result<Vec<Vec<i64>>, DehnError> {
    m.iter().map(|r| r.iter().map(to_i64).collect()).collect()
}

/// Route C: coinvariants of the action on non-equivariant homology, assembled through
/// module bar complexes. Valid for groups of 2-power order, where higher group
/// homology vanishes after inverting 2.
pub fn coinvariant_route(oc: &OrbitCube, dc: &DehnComplexData) -> Result<Option<CoinvariantComparison>, DehnError> {
    let g = &oc.group;
    if !g.order().is_power_of_two() {
        return Ok(None);
    }
    let d = oc.index.d;
    let m = oc.index.dim();
    let top = d + 1;
    let mut hds = Vec::new();
    let mut rhos = Vec::new();
    let mut ranks = Vec::new();
    for (v, sm) in oc.sigma.smashes.iter().enumerate() {
        let c = sm.set().normalized_chains();
        let hd = HomologyData::in_degrees(&c, Coeff::Z, &[top]);
        if hd.gen_orders(top).iter().any(|o| o.is_some()) {
            return Err(DehnError::TorsionVertex(v));
        }
        let r = hd.ngens(top);
        let rho = oc.actions[v]
            .maps
            .iter()
            .map(|a| to_small(&induced_homology(&a.chain_map(sm.set()), &hd, &hd, top, c.rank(top))))
            .collect::<Result<Vec<_>, _>>()?;
        rhos.push(rho);
        ranks.push(r);
        hds.push((c, hd));
    }
    let nbar = m + 2;
    let verts: Vec<ChainComplex> = rhos.iter().map(|rho| bar_complex_module(g, rho, nbar)).collect();
    let coinvariants: Vec<HomologyGroup> =
        verts.iter().map(|c| homology(c, Coeff::Zhalf)[0].clone()).collect();
    let mut cube = CubeDiagram::new(m, verts);
    for v in 0..1usize << m {
        for j in 0..m {
            let Some(f) = &oc.sigma.maps[v][j] else { continue };
            let w = v | (1 << j);
            let dm = to_small(&induced_homology(
                &f.chain_map(oc.sigma.smashes[v].set()),
                &hds[v].1,
                &hds[w].1,
                top,
                hds[w].0.rank(top),
            ))?;
            let (rv, rw) = (ranks[v], ranks[w]);
            let images = (0..=nbar)
                .map(|t| {
                    let ntup = cube.vertices[v].rank(t) / rv.max(1);
                    let mut cols = Vec::new();
                    for tup in 0..ntup {
                        for k in 0..rv {
                            let col: SparseCol =
                                (0..rw).filter(|&i| dm[i][k] != 0).map(|i| (tup * rw + i, dm[i][k])).collect();
                            cols.push(col);
                        }
                    }
                    if rv == 0 {
                        cols = vec![];
                    }
                    cols
                })
                .collect();
            cube.set_edge(v, j, ChainMap { images });
        }
    }
    let tot = total_complex(&cube)?;
    let h = homology(&tot.complex, Coeff::Zhalf);
    let homology: Vec<HomologyGroup> = (0..=m).map(|p| degree_or_zero(&h, p)).collect();
    let matches = (0..=m).all(|p| odd_part_equal(&homology[p], &degree_or_zero(&dc.homology, p)))
        && (0..1usize << m).all(|v| odd_part_equal(&coinvariants[v], &dc.vertex_groups[v]));
    Ok(Some(CoinvariantComparison { module_ranks: ranks, coinvariants, homology, matches }))
}

pub fn dehn_report(dc: &DehnComplexData, ss: Option<&SsComparison>, co: Option<&CoinvariantComparison>) -> Value {
    let objects: Vec<Value> = (0..dc.objects.len())
        .map(|v| {
            json!({
                "object": dc.objects[v].shape(),
                "degree": dc.objects.len().trailing_zeros() as usize - v.count_ones() as usize,
                "group": dc.vertex_groups[v].to_json(),
            })
        })
        .collect();
    let blocks: Vec<Value> = dc
        .blocks
        .iter()
        .map(|(v, j, m)| {
            json!({
                "source": dc.objects[*v].shape(),
                "target": dc.objects[*v | (1 << j)].shape(),
                "matrix": m.iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "d": dc.d,
        "objects": objects,
        "differentials": blocks,
        "homology": homology_json(&dc.homology),
        "spectral_sequence": ss.map(|s| serde_json::to_value(s).unwrap_or(Value::Null)),
        "coinvariants": co.map(|c| serde_json::to_value(c).unwrap_or(Value::Null)),
    })
}

/// Points h_0 x_0, …, h_{d-1} x_0, x_0 with h_i = g_d ⋯ g_{d-i}.
pub fn edge_points(group: &FiniteGroup, tuple: &[usize], x0: &Vector) -> Result<Vec<Vector>, DehnError> {
    let mats = group.matrices.as_ref().ok_or(DehnError::NoMatrices)?;
    let d = tuple.len();
    let mut pts = Vec::with_capacity(d + 1);
    let mut h = group.identity;
    for i in 0..d {
        h = group.mul(h, tuple[d - 1 - i]);
        pts.push(mats[h].apply(x0));
    }
    pts.push(x0.clone());
    Ok(pts)
}

/// Signed flags (∏ det g_i) Σ_σ sgn σ [V_σ0 ⊂ … ⊂ V_σd] of a group tuple.
pub fn edge_map(
    fam: &SubspaceFamily,
    group: &FiniteGroup,
    tuple: &[usize],
    x0: &Vector,
) -> Result<Vec<(Vec<usize>, i64)>, DehnError> {
    if tuple.len() != fam.d() {
        return Err(DehnError::Mismatch(format!("tuple of length {} in dimension {}", tuple.len(), fam.d())));
    }
    let pts = edge_points(group, tuple, x0)?;
    let sign: i64 = tuple.iter().map(|&g| group.det[g] as i64).product();
    let flags = simplex_flags(fam, &pts).map_err(|e| match e {
        BuildingError::DegenerateSimplex(s) => DehnError::DegenerateConfiguration(s),
        other => DehnError::Building(other),
    })?;
    Ok(flags.into_iter().map(|(f, s)| (f, s * sign)).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeMapReport {
    pub cycles: usize,
    /// images that are cycles of S^σ ∧ F^X and are killed by every Dehn differential
    pub cycles_ok: usize,
    /// images with nonzero class in the top Dehn-complex group
    pub nonzero_classes: usize,
    pub boundaries: usize,
    /// bar boundaries whose image class vanishes
    pub boundaries_zero: usize,
    pub ok: bool,
}

/// Class in H_{d+1} of the homotopy orbits at the vertex (d) of a bar chain, plus whether
/// the chain-level image is a cycle. Degenerate configurations contribute zero.
pub fn edge_class(oc: &OrbitCube, fam: &SubspaceFamily, x0: &Vector, chain: &BarChain) -> Result<(bool, Vec<BigInt>), DehnError> {
    let d = fam.d();
    let building = &oc.flags.spaces[0];
    let smash = &oc.sigma.smashes[0];
    let mut acc = vec![BigInt::zero(); smash.set().count(d + 1)];
    for (t, &m) in chain {
        match edge_map(fam, &oc.group, t, x0) {
            Ok(flags) => {
                for (i, c) in sigma_cross(building, smash, &flags)?.into_iter().enumerate() {
                    acc[i] += c * m;
                }
            }
            Err(DehnError::DegenerateConfiguration(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let cycle = smash.set().normalized_chains().boundary(d + 1, &acc).iter().all(|x| x.is_zero());
    let o = &oc.orbits[0];
    let mut lift = vec![BigInt::zero(); o.complex.rank(d + 1)];
    for (xg, c) in acc.iter().enumerate() {
        if !c.is_zero() {
            lift[o.index[&(vec![], d + 1, xg)]] = c.clone();
        }
    }
    Ok((cycle, oc.homology[0].coordinates(d + 1, &lift)))
}

pub fn edge_map_check(
    oc: &OrbitCube,
    dc: &DehnComplexData,
    fam: &SubspaceFamily,
    x0: &Vector,
    cycles: &[BarChain],
    boundaries: &[BarChain],
) -> Result<EdgeMapReport, DehnError> {
    let mut cycles_ok = 0;
    let mut nonzero = 0;
    for c in cycles {
        let (is_cycle, coords) = edge_class(oc, fam, x0, c)?;
        let killed = dc.blocks.iter().filter(|(v, _, _)| *v == 0).all(|(_, _, m)| {
            m.iter().all(|row| row.iter().zip(&coords).map(|(a, b)| a * b).sum::<BigInt>().is_zero())
        });
        if is_cycle && killed {
            cycles_ok += 1;
        }
        if coords.iter().any(|x| !x.is_zero()) {
            nonzero += 1;
        }
    }
    let mut boundaries_zero = 0;
    for b in boundaries {
        let (is_cycle, coords) = edge_class(oc, fam, x0, b)?;
        if is_cycle && coords.iter().all(|x| x.is_zero()) {
            boundaries_zero += 1;
        }
    }
    Ok(EdgeMapReport {
        cycles: cycles.len(),
        cycles_ok,
        nonzero_classes: nonzero,
        boundaries: boundaries.len(),
        boundaries_zero,
        ok: cycles_ok == cycles.len() && boundaries_zero == boundaries.len(),
    })
}

/// Bar boundaries of random (d+1)-tuples under the determinant twist.
pub fn random_bar_boundaries<R: Rng>(g: &FiniteGroup, d: usize, count: usize, rng: &mut R) -> Vec<BarChain> {
    let mut out = Vec::new();
    while out.len() < count {
        let mut c = BarChain::new();
        for _ in 0..rng.gen_range(1..=2) {
            let t: Vec<usize> = (0..=d).map(|_| rng.gen_range(0..g.order())).collect();
            add_to(&mut c, t, if rng.gen_bool(0.5) { 1 } else { -1 });
        }
        let b = bar_boundary(g, &g.det, &c);
        if !b.is_empty() {
            out.push(b);
        }
    }
    out
}

/// A symbol (g_1, …, g_j){x_1 | … | x_i} of the double complex.
pub type Symbol = (Vec<usize>, Vec<Vector>);
pub type DoubleChain = BTreeMap<Symbol, i64>;

/// Evaluation of the double complex of group tuples and point tuples.
pub struct DoubleComplex<'a> {
    pub group: &'a FiniteGroup,
    mats: &'a [Isometry],
    /// symbols alternating in the points
    pub alternating: bool,
}

fn perm_sign(idx: &[usize]) -> i64 {
    let mut inv = 0;
    for i in 0..idx.len() {
        for j in i + 1..idx.len() {
            if idx[i] > idx[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

impl<'a> DoubleComplex<'a> {
    pub fn new(group: &'a FiniteGroup, alternating: bool) -> Result<Self, DehnError> {
        let mats = group.matrices.as_deref().ok_or(DehnError::NoMatrices)?;
        Ok(DoubleComplex { group, mats, alternating })
    }

    pub fn add(&self, c: &mut DoubleChain, tuple: Vec<usize>, pts: Vec<Vector>, v: i64) {
        if v == 0 {
            return;
        }
        let (pts, s) = if self.alternating {
            let mut idx: Vec<usize> = (0..pts.len()).collect();
            idx.sort_by(|&a, &b| pts[a].cmp(&pts[b]));
            if idx.windows(2).any(|w| pts[w[0]] == pts[w[1]]) {
                return;
            }
            let s = perm_sign(&idx);
            (idx.iter().map(|&i| pts[i].clone()).collect(), s)
        } else {
            (pts, 1)
        };
        let key = (tuple, pts);
        let e = c.entry(key.clone()).or_insert(0);
        *e += s * v;
        if *e == 0 {
            c.remove(&key);
        }
    }

    pub fn act(&self, h: usize, x: &Vector) -> Vector {
        self.mats[h].apply(x)
    }

    /// g_b ⋯ g_a for 1 ≤ a ≤ b (identity when a > b).
    pub fn pi(&self, gs: &[usize], a: usize, b: usize) -> usize {
        let mut r = self.group.identity;
        for k in a..=b {
            r = self.group.mul(gs[k - 1], r);
        }
        r
    }

    pub fn amalg(&self, gs: &[usize], a: usize, b: usize) -> usize {
        self.group.inverse[self.pi(gs, a, b)]
    }

    pub fn lin(&self, a: &DoubleChain, b: &DoubleChain, s: i64) -> DoubleChain {
        let mut out = a.clone();
        for ((t, p), &v) in b {
            self.add(&mut out, t.clone(), p.clone(), s * v);
        }
        out
    }

    pub fn dh(&self, c: &DoubleChain) -> DoubleChain {
        let mut out = DoubleChain::new();
        for ((t, p), &v) in c {
            for l in 0..p.len() {
                let mut q = p.clone();
                q.remove(l);
                self.add(&mut out, t.clone(), q, if l % 2 == 0 { v } else { -v });
            }
        }
        out
    }

    /// Twisted bar differential over all faces d_0 … d_j; d_0 moves the points by g_1.
    pub fn dv(&self, c: &DoubleChain) -> DoubleChain {
        let mut out = DoubleChain::new();
        for ((t, p), &v) in c {
            for l in 0..=t.len() {
                if t.is_empty() {
                    break;
                }
                let (f, k) = bar_face(self.group, &self.group.det, t, l);
                let q = if l == 0 { p.iter().map(|x| self.act(t[0], x)).collect() } else { p.clone() };
                let s = if l % 2 == 0 { 1 } else { -1 };
                self.add(&mut out, f, q, s * k * v);
            }
        }
        out
    }

    /// D = ∂^h + ε (-1)^i ∂^v with i the number of points.
    pub fn total_d(&self, c: &DoubleChain, eps: i64) -> DoubleChain {
        let mut out = self.dh(c);
        for (sym, &v) in c {
            let single = DoubleChain::from([(sym.clone(), v)]);
            let s = eps * if sym.1.len() % 2 == 0 { 1 } else { -1 };
            out = self.lin(&out, &self.dv(&single), s);
        }
        out
    }

    /// Δ^λ(m g⃗, y) = m (g_1..g_λ){y | ∐_1^j x | ∐_1^{j-1} x | … | ∐_1^λ x}
    pub fn delta(&self, gs: &[usize], lam: usize, y: &Vector, x: &Vector, m: i64, out: &mut DoubleChain) {
        let j = gs.len();
        let mut pts = vec![y.clone()];
        for k in (lam..=j).rev() {
            pts.push(self.act(self.amalg(gs, 1, k), x));
        }
        self.add(out, gs[..lam].to_vec(), pts, m);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TechReport {
    pub d: usize,
    pub group_order: usize,
    pub cycles: usize,
    /// ∂(Σ(-1)^λ α^λ) = ∂^v α^1 + (-1)^d ∂^h α^d with alternating symbols
    pub identity_holds: usize,
    /// the same identity without the alternating relation
    pub identity_free: usize,
    /// ∂^h α^d equals σ{} times this sign
    pub top_sign: i64,
    /// sign ε' with ∂^v α^1 = ε' Σ T_i per cycle (0 when both vanish)
    pub vertical_signs: Vec<i64>,
    /// sign μ with det(h) h·T_i = μ closed_i term by term
    pub translate_sign: Option<i64>,
    /// σ{} is homologous to κ times the closed formula, κ = ε'μ
    pub kappa: i64,
    /// cycles for which the witness W satisfies D(W) = -σ{} + κ closed exactly
    pub witnessed: usize,
    pub ok: bool,
}

/// Symbolic check of the double-complex identity and of the closed formula for
/// random twisted bar cycles.
///
/// Conventions: ∂^v uses all faces, α^d = ε σ{x} and D = ∂^h + ε(-1)^i ∂^v with ε = (-1)^{d+1}.
pub fn tech_identity_check(
    group: &FiniteGroup,
    d: usize,
    x: &Vector,
    cycles: &[BarChain],
) -> Result<TechReport, DehnError> {
    let alt = DoubleComplex::new(group, true)?;
    let free = DoubleComplex::new(group, false)?;
    let eps: i64 = if d % 2 == 0 { -1 } else { 1 };
    let sgn_d: i64 = if d % 2 == 0 { 1 } else { -1 };
    let mut identity_holds = 0;
    let mut identity_free = 0;
    let mut vertical_signs = Vec::new();
    let mut translate_sign: Option<i64> = None;
    let mut translate_consistent = true;
    let mut pending = Vec::new();
    let mut witnessed = 0;
    let mut top_ok = true;
    for sig in cycles {
        if sig.keys().any(|t| t.len() != d) {
            return Err(DehnError::Mismatch("cycle of the wrong degree".into()));
        }
        let alphas = |dc: &DoubleComplex| -> Vec<DoubleChain> {
            let mut al = vec![DoubleChain::new(); d + 1];
            for (gs, &m) in sig {
                dc.add(&mut al[d], gs.clone(), vec![x.clone()], eps * m);
            }
            for (lam, a) in al.iter_mut().enumerate().take(d).skip(1) {
                for (gs, &m) in sig {
                    for l in 0..=d {
                        let (h, k) = bar_face(group, &group.det, gs, l);
                        let y = if l == 0 { dc.act(gs[0], x) } else { x.clone() };
                        let s = if l % 2 == 0 { 1 } else { -1 };
                        dc.delta(&h, lam, &y, x, s * k * m, a);
                    }
                }
            }
            al
        };
        let check_identity = |dc: &DoubleComplex, al: &[DoubleChain]| -> bool {
            let mut s = DoubleChain::new();
            for lam in 1..=d {
                s = dc.lin(&s, &al[lam], if lam % 2 == 0 { 1 } else { -1 });
            }
            let lhs = dc.total_d(&s, eps);
            let rhs = dc.lin(&dc.dv(&al[1]), &dc.dh(&al[d]), sgn_d);
            lhs == rhs
        };
        let al = alphas(&alt);
        if check_identity(&alt, &al) {
            identity_holds += 1;
        }
        if check_identity(&free, &alphas(&free)) {
            identity_free += 1;
        }
        let mut sig_empty = DoubleChain::new();
        for (gs, &m) in sig {
            alt.add(&mut sig_empty, gs.clone(), vec![], m);
        }
        let top = alt.dh(&al[d]);
        if top != alt.lin(&DoubleChain::new(), &sig_empty, eps) {
            top_ok = false;
        }
        // T_i, closed_i, and the translated T_i
        let mut t_sum = DoubleChain::new();
        let mut closed = DoubleChain::new();
        let mut wt = DoubleChain::new();
        for (gs, &m) in sig {
            let mut ti = DoubleChain::new();
            let mut pts = vec![alt.act(gs[0], x)];
            for k in (2..=d).rev() {
                pts.push(alt.act(alt.amalg(gs, 2, k), x));
            }
            pts.push(x.clone());
            let dg1 = group.det[gs[0]] as i64;
            for l in 0..=d {
                let mut q = pts.clone();
                q.remove(l);
                alt.add(&mut ti, vec![], q, if l % 2 == 0 { m * dg1 } else { -m * dg1 });
            }
            let mut ci = DoubleChain::new();
            let mut cpts = vec![x.clone()];
            for k in (1..=d).rev() {
                cpts.push(alt.act(alt.pi(gs, k, d), x));
            }
            let dpi = group.det[alt.pi(gs, 1, d)] as i64;
            for l in 0..=d {
                let mut q = cpts.clone();
                q.remove(l);
                alt.add(&mut ci, vec![], q, -sgn_d * dpi * m * if l % 2 == 0 { 1 } else { -1 });
            }
            let h = alt.pi(gs, 2, d);
            let mut moved = DoubleChain::new();
            for ((_, p), &v) in &ti {
                alt.add(&mut moved, vec![], p.iter().map(|y| alt.act(h, y)).collect(), group.det[h] as i64 * v);
                alt.add(&mut wt, vec![h], p.clone(), v);
            }
            for mu in [1i64, -1] {
                if !ci.is_empty() && moved == alt.lin(&DoubleChain::new(), &ci, mu) {
                    match translate_sign {
                        None => translate_sign = Some(mu),
                        Some(s) if s != mu => translate_consistent = false,
                        _ => {}
                    }
                }
            }
            if ci.is_empty() != moved.is_empty() {
                translate_consistent = false;
            }
            t_sum = alt.lin(&t_sum, &ti, 1);
            closed = alt.lin(&closed, &ci, 1);
        }
        let dva1 = alt.dv(&al[1]);
        let ep = if dva1.is_empty() && t_sum.is_empty() {
            0
        } else if dva1 == t_sum {
            1
        } else if dva1 == alt.lin(&DoubleChain::new(), &t_sum, -1) {
            -1
        } else {
            translate_consistent = false;
            0
        };
        vertical_signs.push(ep);
        let mut s = DoubleChain::new();
        for lam in 1..=d {
            s = alt.lin(&s, &al[lam], if lam % 2 == 0 { 1 } else { -1 });
        }
        pending.push((s, wt, sig_empty, closed));
    }
    let nonzero: Vec<i64> = vertical_signs.iter().copied().filter(|&e| e != 0).collect();
    if nonzero.windows(2).any(|w| w[0] != w[1]) {
        translate_consistent = false;
    }
    let ep = nonzero.first().copied().unwrap_or(1);
    let kappa = ep * translate_sign.unwrap_or(1);
    for (s, wt, sig_empty, closed) in pending {
        let w = alt.lin(&s, &wt, -ep);
        let lhs = alt.total_d(&w, eps);
        let rhs = alt.lin(&alt.lin(&DoubleChain::new(), &sig_empty, -1), &closed, kappa);
        if lhs == rhs {
            witnessed += 1;
        }
    }
    let n = cycles.len();
    let ok = identity_holds == n
        && top_ok
        && translate_consistent
        && witnessed == n
        && kappa == 1;
    Ok(TechReport {
        d,
        group_order: group.order(),
        cycles: n,
        identity_holds,
        identity_free,
        top_sign: if top_ok { eps } else { 0 },
        vertical_signs,
        translate_sign,
        kappa,
        witnessed,
        ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::building::{coordinate_family, ClosureOp};
    use crate::exactlin::{q, span, vec_q, Kind, QuadSpace};
    use crate::grouphom::{bar_cycle_basis, random_bar_cycles};
    use rand::SeedableRng;

    fn lines(d: usize, vs: &[&[i64]]) -> SubspaceFamily {
        let x = Arc::new(QuadSpace::spherical(d));
        let ls = vs.iter().map(|v| span(&[vec_q(v)], &x, Kind::Subspace).unwrap()).collect();
        SubspaceFamily::close(x, ls, &[ClosureOp::Perp, ClosureOp::PerpSum], 3).unwrap()
    }

    fn d4() -> FiniteGroup {
        let r = vec![vec![q(0), q(-1)], vec![q(1), q(0)]];
        let s = vec![vec![q(1), q(0)], vec![q(0), q(-1)]];
        FiniteGroup::generated_by(&[r, s], &QuadSpace::spherical(1), 64).unwrap()
    }

    #[test]
    fn index_objects() {
        let i3 = enumerate_index(3, IndexMode::Even).unwrap();
        let shapes: Vec<Vec<usize>> = i3.objects.iter().map(|o| o.shape()).collect();
        assert_eq!(shapes, vec![vec![3], vec![1, 2]]);
        let i5 = enumerate_index(5, IndexMode::Even).unwrap();
        assert_eq!(i5.dim(), 2);
        let mut got = i5.objects.clone();
        got.sort();
        assert_eq!(got, index_objects_by_compositions(5, IndexMode::Even));
        let h2 = enumerate_index(2, IndexMode::Full).unwrap();
        let mut got = h2.objects.clone();
        got.sort();
        let want: Vec<IndexObject> =
            [vec![0, 1, 1], vec![0, 2], vec![1, 1], vec![2]].iter().map(|s| IndexObject::from_shape(s)).collect();
        assert_eq!(got, want);
        assert_eq!(enumerate_index(1, IndexMode::Even).unwrap().objects.len(), 1);
        for d in 1..=7 {
            for mode in [IndexMode::Even, IndexMode::Full] {
                let ix = enumerate_index(d, mode).unwrap();
                let mut got = ix.objects.clone();
                got.sort();
                let oracle = index_objects_by_compositions(d, mode);
                assert_eq!(got, oracle, "d={d} {mode:?}");
                let m = ix.dim();
                assert_eq!(ix.morphisms.len(), if m == 0 { 0 } else { m << (m - 1) });
                assert_eq!(refinement_pairs(&oracle), ix.morphisms.len());
                if mode == IndexMode::Even {
                    assert!(ix.morphisms.iter().all(|mo| mo.direction % 2 == 0));
                    assert_eq!(m, (d - 1) / 2);
                }
            }
        }
    }

    #[test]
    fn zid_small() {
        let fam = lines(1, &[&[1, 0], &[1, 1]]);
        let r = verify_zid(&fam).unwrap();
        assert!(r.ok, "{:?}", r.homology);
        let r2 = verify_zid(&coordinate_family(2).unwrap()).unwrap();
        assert!(r2.ok, "{:?}", r2.homology);
    }

    #[test]
    fn totcofib_small() {
        let fam = lines(1, &[&[1, 0], &[1, 1]]);
        for dims in [vec![], vec![0]] {
            let r = totcofib_check(&fam, &dims).unwrap();
            assert!(r.ok, "{dims:?}: {:?} vs {:?}", r.total, r.expected);
        }
        let fam2 = coordinate_family(2).unwrap();
        for dims in [vec![0], vec![1], vec![0, 1]] {
            let r = totcofib_check(&fam2, &dims).unwrap();
            assert!(r.ok, "{dims:?}: {:?} vs {:?}", r.total, r.expected);
        }
    }

    #[test]
    fn j_space_d1() {
        let fam = lines(1, &[&[1, 0], &[1, 1]]);
        let j = build_j(&fam, &[0, 1]).unwrap();
        assert_eq!(j.decompositions.len(), 4);
        let h = homology(&j.wedge.set().normalized_chains(), Coeff::Z);
        assert_eq!(h[1], HomologyGroup::free(1, 4));
        let jx = build_j(&fam, &[1]).unwrap();
        assert_eq!(jx.wedge.set().nondegenerate_total(), crate::building::build_f(&fam).unwrap().set().nondegenerate_total());
    }

    #[test]
    fn f_scaling_d1() {
        let fam = lines(1, &[&[1, 0], &[1, 1]]);
        let r = compare_f_a(&fam, &[0, 1]).unwrap();
        assert!(r.ok, "{r:?}");
        assert!(r.determinants.iter().all(|d| d == "2"));
        let r1 = compare_f_a(&fam, &[1]).unwrap();
        assert!(r1.ok && r1.determinants.iter().all(|d| d == "1"), "{r1:?}");
    }

    #[test]
    fn tech_identity_d1() {
        let g = d4();
        let basis = bar_cycle_basis(&g, &g.det, 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let cycles = random_bar_cycles(&basis, 5, &mut rng);
        let r = tech_identity_check(&g, 1, &vec_q(&[3, 1]), &cycles).unwrap();
        assert!(r.ok, "{r:?}");
        assert!(tech_identity_check(&g, 1, &vec_q(&[3, 1]), &[]).unwrap().ok);
    }

    #[test]
    fn edge_map_examples() {
        let fam = lines(1, &[&[1, 2], &[2, 1]]);
        let g = d4();
        let x0 = vec_q(&[1, 2]);
        assert!(matches!(edge_map(&fam, &g, &[g.identity], &x0), Err(DehnError::DegenerateConfiguration(_))));
        let rot = (0..g.order()).find(|&h| g.det[h] == 1 && h != g.identity && g.mul(h, h) != g.identity).unwrap();
        let refl = (0..g.order()).find(|&h| g.det[h] == -1).unwrap();
        let a = edge_map(&fam, &g, &[rot], &x0).unwrap();
        assert_eq!(a.len(), 2);
        let b = edge_map(&fam, &g, &[refl], &x0).unwrap();
        assert!(b.iter().all(|(_, s)| s.abs() == 1));
        assert_eq!(a.iter().map(|e| e.1).sum::<i64>(), 0);
    }

    fn klein_four() -> FiniteGroup {
        let perm = |a: usize, b: usize| -> Vec<Vec<Q>> {
            (0..4)
                .map(|i| {
                    let pi = if i == a { b } else if i == b { a } else { i };
                    (0..4).map(|j| if pi == j { q(1) } else { q(0) }).collect()
                })
                .collect()
        };
        FiniteGroup::generated_by(&[perm(0, 1), perm(2, 3)], &QuadSpace::spherical(3), 16).unwrap()
    }

    #[test]
    fn dehn_complex_d3_three_routes() {
        let fam = coordinate_family(3).unwrap();
        let (oc, dc) = dehn_complex(&fam, Arc::new(klein_four()), 5).unwrap();
        assert_eq!(dc.vertex_groups.iter().map(|g| g.rank).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(dc.homology[0].rank, 2);
        assert!(dc.homology[1].is_zero());
        let ss = ss_bottom_row(&oc, &dc).unwrap();
        assert!(ss.below_vanishes && ss.e1_matches && ss.e2_matches, "{ss:?}");
        let co = coinvariant_route(&oc, &dc).unwrap().unwrap();
        assert!(co.matches, "{co:?}");
        let report = dehn_report(&dc, Some(&ss), Some(&co));
        assert_eq!(report["objects"][1]["object"], json!([1, 2]));
    }

    #[test]
    fn edge_map_d1_lands_in_kernel() {
        let fam = lines(1, &[&[1, 2], &[2, 1]]);
        let g = Arc::new(d4());
        let (oc, dc) = dehn_complex(&fam, g.clone(), 3).unwrap();
        assert_eq!(dc.vertex_groups[0].rank, 1);
        let basis = bar_cycle_basis(&g, &g.det, 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let cycles = random_bar_cycles(&basis, 10, &mut rng);
        let bds = random_bar_boundaries(&g, 1, 5, &mut rng);
        let r = edge_map_check(&oc, &dc, &fam, &vec_q(&[1, 2]), &cycles, &bds).unwrap();
        assert!(r.ok, "{r:?}");
    }

    #[test]
    fn f_scaling_d3() {
        let fam = coordinate_family(3).unwrap();
        let r = compare_f_a(&fam, &[1, 2]).unwrap();
        assert_eq!(r.matrices.len(), 6);
        assert!(r.ok, "{r:?}");
    }

    #[test]
    fn totcofib_d3_full_cube() {
        let fam = coordinate_family(3).unwrap();
        let r = totcofib_check(&fam, &[0, 1, 2]).unwrap();
        assert!(r.ok);
        assert_eq!(r.total[3].rank, 1);
    }
}
