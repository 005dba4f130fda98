//! The acceptance suite: ten end-to-end checks with time limits, shared by the
//! `acceptance` test target and `scissors selftest`.

use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::building::{coordinate_family, simplex_class, ClosureOp, SubspaceFamily};
use crate::classical::{dehn_classical, tensor_reduce, Polytope, Real, ReducePolicy};
use crate::dehncube::{
    compare_f_a, dehn_complex, edge_map_check, random_bar_boundaries, ss_bottom_row, tech_identity_check, totcofib_check,
    verify_zid,
};
use crate::exactlin::{q, span, vec_q, Flavor, Kind, Matrix, QuadSpace, Vector};
use crate::grouphom::{bar_cycle_basis, group_homology, random_bar_cycles, FiniteGroup};
use crate::homology::{
    homology, induced_homology, random_cube, smith_divisors, ss_consistency, total_complex, ChainComplex, ChainMap, Coeff,
    CubeDiagram, HomologyData, HomologyGroup,
};
use crate::simpset::{circle_ssigma, gamma, random_simpset, smash_to_join, ssigma_action, HomotopyOrbits};

#[derive(Debug, Clone, Copy)]
pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    /// seconds
    pub limit: f64,
}

pub const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "cube/tetrahedron separation", limit: 5.0 },
    Criterion { id: 2, name: "smash-to-join equivalence", limit: 60.0 },
    Criterion { id: 3, name: "gamma has degree 2", limit: 1.0 },
    Criterion { id: 4, name: "total cofiber of Dehn sub-cubes", limit: 120.0 },
    Criterion { id: 5, name: "full Dehn cube is Z in degree d+1", limit: 60.0 },
    Criterion { id: 6, name: "twisted Z/2 homology and homotopy orbits", limit: 10.0 },
    Criterion { id: 7, name: "double complex identity", limit: 120.0 },
    Criterion { id: 8, name: "simplex classes are cycles", limit: 30.0 },
    Criterion { id: 9, name: "cube spectral sequence consistency", limit: 180.0 },
    Criterion { id: 10, name: "edge map and f scaling", limit: 60.0 },
];

pub const FAST: [usize; 4] = [1, 2, 3, 6];

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub bits: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { bits: 200, seed: 2024 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    /// checks passed, ignoring time
    pub checks: bool,
    pub within_time: bool,
    pub passed: bool,
    pub seconds: f64,
    pub limit: f64,
    pub detail: Value,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<44} {} ({:.2}s / {:.0}s)",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.seconds,
            self.limit
        )
    }
}

type Check = Result<(bool, Value), String>;

pub fn run(id: usize, cfg: &SuiteConfig) -> Option<CriterionResult> {
    let c = CRITERIA.iter().find(|c| c.id == id)?;
    let t = Instant::now();
    let out: Check = match id {
        1 => separation(cfg),
        2 => smash_join(cfg),
        3 => gamma_degree(),
        4 => totcofib(),
        5 => zid(),
        6 => twisted_z2(),
        7 => tech_identity(cfg),
        8 => simplex_classes(cfg),
        9 => spectral_sequence(cfg),
        _ => edge_and_scaling(cfg),
    };
    let seconds = t.elapsed().as_secs_f64();
    let (checks, detail) = out.unwrap_or_else(|e| (false, json!({ "error": e })));
    let within_time = seconds <= c.limit;
    Some(CriterionResult { id, name: c.name, checks, within_time, passed: checks && within_time, seconds, limit: c.limit, detail })
}

pub fn run_all(ids: &[usize], cfg: &SuiteConfig) -> Vec<CriterionResult> {
    ids.iter().filter_map(|&i| run(i, cfg)).collect()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn group_json(h: &[HomologyGroup]) -> Value {
    json!(h.iter().map(|g| g.to_json()).collect::<Vec<_>>())
}

fn separation(cfg: &SuiteConfig) -> Check {
    let r = Real::new(cfg.bits);
    let policy = ReducePolicy::default();
    let cube = tensor_reduce(&r, &dehn_classical(&r, &Polytope::unit_cube(&r)).map_err(err)?, policy).map_err(err)?;
    let tet = tensor_reduce(&r, &dehn_classical(&r, &Polytope::regular_tetrahedron(&r)).map_err(err)?, policy).map_err(err)?;
    let residuals_ok = cube.basis.relations.iter().chain(&tet.basis.relations).all(|rel| rel.residual_log2 < -100.0);
    let six = tet.terms.len() == 1
        && r.is_small(&r.sub(&tet.terms[0].0, &r.int(6)))
        && r.is_small(&r.sub(&tet.terms[0].1, &r.acos(&r.ratio(1, 3))));
    let certified = !tet.basis.certificates.is_empty()
        && tet.basis.certificates.iter().all(|c| c.norm_bound >= policy.coeff_bound as f64);
    let ok = cube.zero && !tet.zero && six && certified && residuals_ok;
    Ok((ok, json!({ "cube": cube.to_json(&r), "tetrahedron": tet.to_json(&r), "six_arccos_third": six, "residuals_below_2^-100": residuals_ok })))
}

/// Iso on homology in every degree: equal groups and surjective induced maps, and
/// independently an acyclic mapping cone.
pub fn quasi_isomorphism(f: &ChainMap, src: &ChainComplex, tgt: &ChainComplex) -> Result<(bool, bool), String> {
    let top = src.top().max(tgt.top());
    let mut s = src.clone();
    let mut t = tgt.clone();
    s.ranks.resize(top + 1, 0);
    s.bd.resize(top + 1, vec![]);
    t.ranks.resize(top + 1, 0);
    t.bd.resize(top + 1, vec![]);
    let mut fm = f.clone();
    fm.images.resize(top + 1, vec![]);
    let hs = HomologyData::new(&s, Coeff::Z);
    let ht = HomologyData::new(&t, Coeff::Z);
    let mut by_matrix = true;
    for k in 0..=top {
        if hs.group(k) != ht.group(k) {
            by_matrix = false;
            break;
        }
        let m = induced_homology(&fm, &hs, &ht, k, t.rank(k));
        let nt = ht.ngens(k);
        let mut aug = m.clone();
        for (j, ord) in ht.gen_orders(k).into_iter().enumerate() {
            for (i, row) in aug.iter_mut().enumerate() {
                row.push(if i == j { ord.clone().unwrap_or_default() } else { BigInt::default() });
            }
        }
        let cols = aug.first().map_or(0, |r| r.len());
        let divs = smith_divisors(&aug, cols);
        if divs.len() != nt || !divs.iter().all(|d| d.abs().is_one()) {
            by_matrix = false;
        }
    }
    let mut cube = CubeDiagram::new(1, vec![s, t]);
    cube.set_edge(0, 0, fm);
    cube.check().map_err(err)?;
    let cone = total_complex(&cube).map_err(err)?;
    let acyclic = homology(&cone.complex, Coeff::Z).iter().all(|g| g.is_zero());
    Ok((by_matrix, acyclic))
}

fn smash_join(cfg: &SuiteConfig) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let mut ok = true;
    for _ in 0..25 {
        let x = random_simpset(&mut rng, 30);
        let y = random_simpset(&mut rng, 30);
        let st = smash_to_join(&x, &y).map_err(err)?;
        let simplicial = st.map.check(st.source.set(), st.join.set()).is_ok();
        let cs = st.source.set().normalized_chains();
        let ct = st.join.set().normalized_chains();
        let f = st.map.chain_map(st.source.set());
        let (by_matrix, acyclic) = quasi_isomorphism(&f, &cs, &ct)?;
        ok &= simplicial && by_matrix && acyclic;
        rows.push(json!({
            "cells": [x.nondegenerate_total(), y.nondegenerate_total()],
            "simplicial": simplicial,
            "iso_on_homology": by_matrix,
            "cone_acyclic": acyclic,
            "homology": group_json(&homology(&ct, Coeff::Z)),
        }));
    }
    Ok((ok, json!({ "pairs": rows })))
}

fn gamma_degree() -> Check {
    let g = gamma().map_err(err)?;
    g.map.check(g.source.set(), g.target.set()).map_err(err)?;
    let cs = g.source.set().normalized_chains();
    let ct = g.target.set().normalized_chains();
    let f = g.map.chain_map(g.source.set());
    let hs = HomologyData::new(&cs, Coeff::Z);
    let ht = HomologyData::new(&ct, Coeff::Z);
    let m = induced_homology(&f, &hs, &ht, 2, ct.rank(2));
    let z = HomologyGroup::free(2, 1);
    let ok = hs.group(2) == Some(&z) && ht.group(2) == Some(&z) && m.len() == 1 && m[0].len() == 1 && m[0][0].abs() == BigInt::from(2);
    Ok((ok, json!({ "h2_map": m.iter().map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>() })))
}

/// Lines in spherical d-space closed under orthogonal complements and orthogonal sums.
pub fn line_family(d: usize, vs: &[&[i64]]) -> Result<SubspaceFamily, String> {
    let x = Arc::new(QuadSpace::spherical(d));
    let ls = vs.iter().map(|v| span(&[vec_q(v)], &x, Kind::Subspace)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    SubspaceFamily::close(x, ls, &[ClosureOp::Perp, ClosureOp::PerpSum], d + 2).map_err(err)
}

fn subsets(d: usize) -> Vec<Vec<usize>> {
    (0..1usize << d).map(|m| (0..d).filter(|i| m & (1 << i) != 0).collect()).collect()
}

fn totcofib() -> Check {
    let fams = vec![
        ("d=1 lines (1,0),(1,1)", line_family(1, &[&[1, 0], &[1, 1]])?),
        ("d=1 lines (1,2),(2,1)", line_family(1, &[&[1, 2], &[2, 1]])?),
        ("d=2 coordinate", coordinate_family(2).map_err(err)?),
        ("d=3 coordinate", coordinate_family(3).map_err(err)?),
    ];
    let mut rows = Vec::new();
    let mut ok = true;
    for (name, fam) in &fams {
        for dims in subsets(fam.d()) {
            let r = totcofib_check(fam, &dims).map_err(err)?;
            ok &= r.ok && r.bijective;
            rows.push(json!({ "family": name, "dims": dims, "bijective": r.bijective, "ok": r.ok, "total": group_json(&r.total) }));
        }
    }
    Ok((ok, json!({ "cases": rows })))
}

fn zid() -> Check {
    let fams = vec![
        ("d=1 lines (1,0),(1,1)", line_family(1, &[&[1, 0], &[1, 1]])?),
        ("d=1 coordinate", coordinate_family(1).map_err(err)?),
        ("d=2 coordinate", coordinate_family(2).map_err(err)?),
        ("d=2 lines (1,0,0),(1,1,0),(0,0,1)", line_family(2, &[&[1, 0, 0], &[1, 1, 0], &[0, 0, 1]])?),
    ];
    let mut rows = Vec::new();
    let mut ok = true;
    for (name, fam) in &fams {
        let r = verify_zid(fam).map_err(err)?;
        ok &= r.ok;
        rows.push(json!({ "family": name, "ok": r.ok, "homology": group_json(&r.homology) }));
    }
    Ok((ok, json!({ "cases": rows })))
}

fn twisted_z2() -> Check {
    let g = FiniteGroup::cyclic(2);
    let twist = [1i8, -1];
    let hz = group_homology(&g, &twist, Coeff::Z, 6);
    let expected_ok = (0..=6).all(|i| {
        let h = &hz[i];
        h.rank == 0 && if i % 2 == 0 { h.torsion == vec![BigInt::from(2)] } else { h.torsion.is_empty() }
    });
    let hh = group_homology(&g, &twist, Coeff::Zhalf, 6);
    let half_ok = hh.iter().take(7).all(|h| h.is_zero());
    let orbits = HomotopyOrbits::new(&circle_ssigma(), &ssigma_action(), 9).map_err(err)?;
    let c = orbits.set().normalized_chains();
    let ho = homology(&c, Coeff::Z);
    let ho_half = homology(&c, Coeff::Zhalf);
    let shifted_ok = (0..=6).all(|i| ho.get(i + 1).map(|h| (h.rank, &h.torsion)) == Some((hz[i].rank, &hz[i].torsion)))
        && ho[0].is_zero()
        && (0..=6).all(|i| ho_half.get(i + 1).is_some_and(|h| h.is_zero()));
    Ok((
        expected_ok && half_ok && shifted_ok,
        json!({
            "group_homology": group_json(&hz),
            "group_homology_zhalf_vanishes": half_ok,
            "orbit_homology": group_json(&ho[..8.min(ho.len())]),
            "shift_matches": shifted_ok,
        }),
    ))
}

/// Dihedral group of order 8 or 12 acting on the first two coordinates of spherical
/// d-space (with a hexagonal form for order 12).
pub fn dihedral_fixture(d: usize, order: usize) -> Result<(FiniteGroup, Vector), String> {
    let n = d + 1;
    let embed = |m: &[&[i64]]| -> Matrix {
        (0..n).map(|i| (0..n).map(|j| if i < 2 && j < 2 { q(m[i][j]) } else { q((i == j) as i64) }).collect()).collect()
    };
    let (gens, gram) = match order {
        8 => (vec![embed(&[&[0, -1], &[1, 0]]), embed(&[&[1, 0], &[0, -1]])], embed(&[&[1, 0], &[0, 1]])),
        12 => (vec![embed(&[&[0, -1], &[1, 1]]), embed(&[&[0, 1], &[1, 0]])], embed(&[&[2, 1], &[1, 2]])),
        _ => return Err(format!("no dihedral fixture of order {order}")),
    };
    let x = QuadSpace::new(Flavor::Spherical, gram).map_err(err)?;
    let g = FiniteGroup::generated_by(&gens, &x, 64).map_err(err)?;
    if g.order() != order {
        return Err(format!("generated group has order {}", g.order()));
    }
    let x0: Vec<i64> = [3, 1, 2, 5].iter().take(n).copied().collect();
    Ok((g, vec_q(&x0)))
}

fn tech_identity(cfg: &SuiteConfig) -> Check {
    let mut rows = Vec::new();
    let mut ok = true;
    for d in [1usize, 2] {
        for order in [8usize, 12] {
            let (g, x0) = dihedral_fixture(d, order)?;
            let basis = bar_cycle_basis(&g, &g.det, d);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed + (10 * d + order) as u64);
            let cycles = random_bar_cycles(&basis, 20, &mut rng);
            let r = tech_identity_check(&g, d, &x0, &cycles).map_err(err)?;
            ok &= r.ok && r.cycles == 20 && r.identity_holds == 20;
            rows.push(serde_json::to_value(&r).map_err(err)?);
        }
    }
    Ok((ok, json!({ "cases": rows })))
}

fn random_tuple<R: Rng>(rng: &mut R, d: usize, hyperbolic: bool) -> Vector {
    loop {
        let mut v: Vec<i64> = (0..=d).map(|_| rng.gen_range(-3..=3)).collect();
        if hyperbolic {
            v[0] = rng.gen_range(4..=9);
        }
        if v.iter().any(|&c| c != 0) {
            return vec_q(&v);
        }
    }
}

fn simplex_classes(cfg: &SuiteConfig) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed + 8);
    let mut done = 0;
    let mut rejected = 0;
    let mut ok = true;
    let mut per_d = [0usize; 4];
    while done < 50 {
        let d = 1 + done % 3;
        let hyperbolic = done % 5 == 4;
        let x = Arc::new(if hyperbolic { QuadSpace::hyperbolic(d) } else { QuadSpace::spherical(d) });
        let pts: Vec<Vector> = (0..=d).map(|_| random_tuple(&mut rng, d, hyperbolic)).collect();
        let Ok(fam) = SubspaceFamily::of_partial_spans(x, &pts) else {
            rejected += 1;
            continue;
        };
        let Ok(sc) = simplex_class(&fam, &pts) else {
            rejected += 1;
            continue;
        };
        let c = sc.smash.set().normalized_chains();
        let cycle = c.boundary(d + 1, &sc.chain).iter().all(|v| v == &BigInt::default());
        let nonzero = sc.chain.iter().any(|v| v != &BigInt::default());
        ok &= cycle && nonzero;
        per_d[d] += 1;
        done += 1;
    }
    Ok((ok, json!({ "tuples": done, "by_dimension": &per_d[1..], "rejected_degenerate": rejected })))
}

/// Klein four-group of coordinate transpositions (01) and (23) on spherical 3-space.
pub fn klein_four() -> Result<FiniteGroup, String> {
    let perm = |a: usize, b: usize| -> Matrix {
        (0..4)
            .map(|i| {
                let pi = if i == a { b } else if i == b { a } else { i };
                (0..4).map(|j| q((pi == j) as i64)).collect()
            })
            .collect()
    };
    FiniteGroup::generated_by(&[perm(0, 1), perm(2, 3)], &QuadSpace::spherical(3), 16).map_err(err)
}

fn spectral_sequence(cfg: &SuiteConfig) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed + 9);
    let mut rows = Vec::new();
    let mut ok = true;
    for t in 0..20 {
        let cube = random_cube(&mut rng, 1 + t % 3, 6, 8);
        cube.check().map_err(err)?;
        let r = ss_consistency(&cube).map_err(err)?;
        ok &= r.graded_match && r.rank_match && r.orders_bounded;
        rows.push(json!({ "dim": cube.dim, "graded_match": r.graded_match, "rank_match": r.rank_match, "orders_bounded": r.orders_bounded }));
    }
    let fam = coordinate_family(3).map_err(err)?;
    let (oc, dc) = dehn_complex(&fam, Arc::new(klein_four()?), 5).map_err(err)?;
    let ss = ss_bottom_row(&oc, &dc).map_err(err)?;
    let dehn_ok = ss.below_vanishes && ss.e1_matches;
    Ok((
        ok && dehn_ok,
        json!({
            "random_cubes": rows,
            "dehn_complex": group_json(&dc.homology),
            "vertex_groups": group_json(&dc.vertex_groups),
            "e1_bottom": group_json(&ss.e1_bottom),
            "e1_matches": ss.e1_matches,
            "e2_matches": ss.e2_matches,
            "below_vanishes": ss.below_vanishes,
        }),
    ))
}

fn edge_and_scaling(cfg: &SuiteConfig) -> Check {
    let fam = line_family(1, &[&[1, 2], &[2, 1]])?;
    let (g, _) = dihedral_fixture(1, 8)?;
    let g = Arc::new(g);
    let (oc, dc) = dehn_complex(&fam, g.clone(), 3).map_err(err)?;
    let basis = bar_cycle_basis(&g, &g.det, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed + 10);
    let cycles = random_bar_cycles(&basis, 10, &mut rng);
    let bds = random_bar_boundaries(&g, 1, 5, &mut rng);
    let em = edge_map_check(&oc, &dc, &fam, &vec_q(&[1, 2]), &cycles, &bds).map_err(err)?;
    let edge_ok = em.ok && em.cycles == 10 && em.cycles_ok == 10;
    let f = compare_f_a(&fam, &[0, 1]).map_err(err)?;
    let scale_ok = f.ok && f.gamma_count == 1 && !f.determinants.is_empty() && f.determinants.iter().all(|d| d == "2");
    Ok((
        edge_ok && scale_ok,
        json!({
            "edge_map": { "cycles": em.cycles, "cycles_ok": em.cycles_ok, "nonzero_classes": em.nonzero_classes, "boundaries_zero": em.boundaries_zero },
            "f_scaling": { "determinants": f.determinants, "multiplier": f.multiplier, "ok": f.ok },
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simpset::{circle_s1, SimpMap};

    #[test]
    fn quasi_isomorphism_detects_failures() {
        let s1 = circle_s1();
        let c = s1.normalized_chains();
        assert_eq!(quasi_isomorphism(&ChainMap::identity(&c), &c, &c).unwrap(), (true, true));
        assert_eq!(quasi_isomorphism(&ChainMap::zero(&c), &c, &c).unwrap(), (false, false));
        let doubled = ChainMap { images: c.ranks.iter().map(|&n| (0..n).map(|i| vec![(i, 2)]).collect()).collect() };
        assert_eq!(quasi_isomorphism(&doubled, &c, &c).unwrap(), (false, false));
        let collapse = SimpMap::from_fn(&s1, |nd| crate::simpset::Simp::base(nd.0));
        let f = collapse.chain_map(&s1);
        assert!(!quasi_isomorphism(&f, &c, &c).unwrap().1);
    }

    #[test]
    fn fixtures_have_expected_orders() {
        for d in 1..=3 {
            assert_eq!(dihedral_fixture(d, 8).unwrap().0.order(), 8);
            assert_eq!(dihedral_fixture(d, 12).unwrap().0.order(), 12);
        }
        assert!(dihedral_fixture(1, 6).is_err());
        assert_eq!(klein_four().unwrap().order(), 4);
    }

    #[test]
    fn unknown_criterion() {
        assert!(run(11, &SuiteConfig::default()).is_none());
    }
}
