use std::collections::HashSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scissors::acceptance::quasi_isomorphism;
use scissors::building::{simplex_class, SubspaceFamily};
use scissors::classical::{
    ccs_simplex, dehn_classical, rotation, tensor_reduce, volume, volume_by_quadrature, GeodesicSimplex, Geometry, Polytope,
    Real, ReducePolicy,
};
use scissors::exactlin::{
    det, mat_mul, orth_complement, project, q, rank, signature, span_any, transpose, vec_q, Matrix, QuadSpace, Vector,
};
use scissors::grouphom::{bar_complex, FiniteGroup};
use scissors::homology::{homology, random_cube, ss_consistency, total_complex, ChainComplex, ChainMap, Coeff, CubeDiagram};
use scissors::simpset::{
    face_closure, quotient, random_simpset, smash_to_join, Join, Nd, Simp, SimpMap, SimpSet, Smash, Subdivision, Wedge, BASE,
};

fn small_vec(d: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-3i64..=3, d + 1)
}

fn small_matrix(n: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-3i64..=3, n), n)
}

fn to_matrix(m: &[Vec<i64>]) -> Matrix {
    m.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn complement_dimensions_and_involution(vs in prop::collection::vec(small_vec(3), 1..4), hyp in any::<bool>()) {
        let x = Arc::new(if hyp { QuadSpace::hyperbolic(3) } else { QuadSpace::spherical(3) });
        let vs: Vec<Vector> = vs.iter().map(|v| vec_q(v)).collect();
        prop_assume!(vs.iter().any(|v| v.iter().any(|c| !c.is_zero())));
        let Ok(u) = span_any(&vs, &x) else { return Ok(()) };
        let p = orth_complement(&u);
        prop_assert_eq!(u.lin_dim() + p.lin_dim(), x.ambient_dim());
        prop_assert_eq!(orth_complement(&p), u);
    }

    #[test]
    fn projection_complements_inside(vs in prop::collection::vec(small_vec(3), 2..4), k in 1usize..3) {
        let x = Arc::new(QuadSpace::spherical(3));
        let vs: Vec<Vector> = vs.iter().map(|v| vec_q(v)).collect();
        prop_assume!(rank(&vs) == vs.len());
        let k = k.min(vs.len() - 1);
        let v = span_any(&vs, &x).unwrap();
        let u = span_any(&vs[..k], &x).unwrap();
        let p = project(&u, &v).unwrap();
        let mut rows = u.basis.clone();
        rows.extend(p.basis.iter().cloned());
        prop_assert_eq!(rank(&rows), v.lin_dim());
        prop_assert!(rows.iter().all(|r| v.contains_vector(r)));
        prop_assert!(u.is_orthogonal_to(&p));
    }

    #[test]
    fn signature_is_congruence_invariant(g in small_matrix(4), p in small_matrix(4)) {
        let g = to_matrix(&g);
        let sym: Matrix = (0..4).map(|i| (0..4).map(|j| &g[i][j] + &g[j][i]).collect()).collect();
        let p = to_matrix(&p);
        prop_assume!(!det(&p).is_zero() && !det(&sym).is_zero());
        let moved = mat_mul(&transpose(&p), &mat_mul(&sym, &p));
        prop_assert_eq!(signature(&moved).unwrap(), signature(&sym).unwrap());
    }
}

fn random_pair(seed: u64) -> (SimpSet, SimpSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_simpset(&mut rng, 20), random_simpset(&mut rng, 20))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constructions_satisfy_simplicial_identities(seed in any::<u64>()) {
        let (x, y) = random_pair(seed);
        x.check_identities_full(3).unwrap();
        Smash::new(&x, &y).unwrap().set().check_identities_full(3).unwrap();
        Join::new(&x, &y).unwrap().set().check_identities_full(3).unwrap();
        Wedge::new(&[x.clone(), y.clone()]).unwrap().set().check_identities_full(3).unwrap();
        Subdivision::new(&x).unwrap().set().check_identities().unwrap();
    }

    #[test]
    fn smash_to_join_is_a_quasi_isomorphism(seed in any::<u64>()) {
        let (x, y) = random_pair(seed);
        let st = smash_to_join(&x, &y).unwrap();
        st.map.check(st.source.set(), st.join.set()).unwrap();
        let f = st.map.chain_map(st.source.set());
        let (by_matrix, acyclic) = quasi_isomorphism(&f, &st.source.set().normalized_chains(), &st.join.set().normalized_chains()).unwrap();
        prop_assert!(by_matrix && acyclic);
    }

    #[test]
    fn join_distributes_over_wedge(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parts = [random_simpset(&mut rng, 12), random_simpset(&mut rng, 12)];
        let y = random_simpset(&mut rng, 12);
        let w = Wedge::new(&parts).unwrap();
        let lhs = Join::new(w.set(), &y).unwrap();
        let joins: Vec<Join> = parts.iter().map(|p| Join::new(p, &y).unwrap()).collect();
        let rhs = Wedge::new(&joins.iter().map(|j| j.set().clone()).collect::<Vec<_>>()).unwrap();
        let iso = SimpMap::from_fn(lhs.set(), |nd| match lhs.keyed.key(nd) {
            None => Simp::base(nd.0),
            Some(&(a, b)) => {
                let (s, a0) = w.summand(a).unwrap();
                rhs.inject(s, &joins[s].pair(&Simp::nondeg(a0), &Simp::nondeg(b)))
            }
        });
        iso.check(lhs.set(), rhs.set()).unwrap();
        let images: HashSet<Simp> = lhs.set().nds().map(|nd| iso.apply(&Simp::nondeg(nd))).collect();
        prop_assert_eq!(images.len(), lhs.set().nondegenerate_total());
        prop_assert_eq!(lhs.set().nondegenerate_total(), rhs.set().nondegenerate_total());
        prop_assert!(images.iter().all(|s| s.is_nondegenerate()));
    }
}

/// Normalized chains restricted to a subcomplex (plus the basepoint).
fn sub_chains(x: &SimpSet, sub: &HashSet<Nd>) -> ChainComplex {
    let c = x.normalized_chains();
    let keep: Vec<Vec<usize>> = (0..c.ranks.len())
        .map(|k| (0..c.rank(k)).filter(|&g| sub.contains(&SimpSet::gen_nd(k, g))).collect())
        .collect();
    let pos: Vec<std::collections::HashMap<usize, usize>> =
        keep.iter().map(|ks| ks.iter().enumerate().map(|(i, &g)| (g, i)).collect()).collect();
    let bd = (0..c.ranks.len())
        .map(|k| {
            keep[k]
                .iter()
                .map(|&g| if k == 0 { vec![] } else { c.bd[k][g].iter().map(|&(r, v)| (pos[k - 1][&r], v)).collect() })
                .collect()
        })
        .collect();
    ChainComplex::new(keep.iter().map(|k| k.len()).collect(), bd)
}

fn random_subcomplex<R: Rng>(rng: &mut R, x: &SimpSet) -> HashSet<Nd> {
    let cells: Vec<Nd> = x.nds().filter(|&n| n != BASE).collect();
    face_closure(x, cells.into_iter().filter(|_| rng.gen_bool(0.4)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_cubes_are_consistent(seed in any::<u64>(), dim in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cube = random_cube(&mut rng, dim, 5, 6);
        cube.check().unwrap();
        total_complex(&cube).unwrap().complex.check_d2().unwrap();
        let r = ss_consistency(&cube).unwrap();
        prop_assert!(r.graded_match && r.rank_match && r.orders_bounded, "{:?}", r);
    }

    #[test]
    fn quotient_cube_has_total_cofiber_of_intersection(seed in any::<u64>(), m in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_simpset(&mut rng, 16);
        let ys: Vec<HashSet<Nd>> = (0..m).map(|_| random_subcomplex(&mut rng, &x)).collect();
        let union = |v: usize| -> HashSet<Nd> {
            (0..m).filter(|i| v & (1 << i) != 0).flat_map(|i| ys[i].iter().copied()).collect()
        };
        let quots: Vec<_> = (0..1usize << m).map(|v| quotient(&x, &union(v)).unwrap()).collect();
        let mut cube = CubeDiagram::new(m, quots.iter().map(|qt| qt.keyed.set.normalized_chains()).collect());
        for v in 0..1usize << m {
            for j in 0..m {
                if v & (1 << j) != 0 {
                    continue;
                }
                let (src, tgt) = (&quots[v], &quots[v | (1 << j)]);
                let f = SimpMap::from_fn(&src.keyed.set, |nd| match src.keyed.key(nd) {
                    Some(&orig) => tgt.projection.apply(&Simp::nondeg(orig)),
                    None => Simp::base(nd.0),
                });
                cube.set_edge(v, j, f.chain_map(&src.keyed.set));
            }
        }
        cube.check().unwrap();
        let tot = homology(&total_complex(&cube).unwrap().complex, Coeff::Z);
        let meet: HashSet<Nd> = ys.iter().skip(1).fold(ys[0].clone(), |a, b| a.intersection(b).copied().collect());
        let h = homology(&sub_chains(&x, &meet), Coeff::Z);
        for (k, g) in tot.iter().enumerate() {
            let want = if k >= m { h.get(k - m).map(|g| (g.rank, g.torsion.clone())) } else { None };
            prop_assert_eq!((g.rank, g.torsion.clone()), want.unwrap_or((0, vec![])), "degree {}", k);
        }
        for (k, g) in h.iter().enumerate() {
            if !g.is_zero() {
                prop_assert!(tot.len() > k + m, "missing degree {}", k + m);
            }
        }
    }

    #[test]
    fn twisted_bar_complexes_square_to_zero(n in 2usize..=6, det in any::<bool>(), parity in any::<bool>(), top in 2usize..=4) {
        let g = FiniteGroup::dihedral(n);
        let twist: Vec<i8> = (0..2 * n)
            .map(|a| {
                let s = if det && a >= n { -1 } else { 1 };
                if parity && n % 2 == 0 && (a % n) % 2 == 1 { -s } else { s }
            })
            .collect();
        let (c, _) = bar_complex(&g, &twist, top);
        prop_assert!(c.check_d2().is_ok());
        let id = ChainMap::identity(&c);
        prop_assert!(id.check(&c, &c).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simplex_class_is_an_alternating_cycle(pts in prop::collection::vec(small_vec(2), 3), i in 0usize..3) {
        let x = Arc::new(QuadSpace::spherical(2));
        let pts: Vec<Vector> = pts.iter().map(|v| vec_q(v)).collect();
        let Ok(fam) = SubspaceFamily::of_partial_spans(x, &pts) else { return Ok(()) };
        let Ok(sc) = simplex_class(&fam, &pts) else { return Ok(()) };
        let c = sc.smash.set().normalized_chains();
        prop_assert!(c.boundary(3, &sc.chain).iter().all(|v| v.is_zero()));
        let mut swapped = pts.clone();
        swapped.swap(i, (i + 1) % 3);
        let sw = simplex_class(&fam, &swapped).unwrap();
        let neg: Vec<BigInt> = sc.chain.iter().map(|v| -v).collect();
        prop_assert_eq!(sw.chain, neg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn dehn_invariant_is_isometry_invariant(a in 0.1f64..3.0, b in 0.1f64..3.0) {
        let r = Real::new(200);
        let p = Polytope::regular_tetrahedron(&r);
        let m = mat_mul_real(&r, &rotation(&r, 3, 0, 1, &r.from_f64(a)), &rotation(&r, 3, 1, 2, &r.from_f64(b)));
        let moved = p.map_vertices(&r, &m);
        let diff = dehn_classical(&r, &p).unwrap().minus(&dehn_classical(&r, &moved).unwrap());
        prop_assert!(tensor_reduce(&r, &diff, ReducePolicy::default()).unwrap().zero);
    }

    #[test]
    fn dehn_invariant_is_additive(num in 1i64..9, edge in 0usize..6) {
        let r = Real::new(200);
        let p = Polytope::regular_tetrahedron(&r);
        let (a, b) = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)][edge];
        let t = r.ratio(num, 10);
        let mut vs = p.vertices.clone();
        vs.push(vs[a].iter().zip(&vs[b]).map(|(x, y)| r.add(x, &r.mul(&t, &r.sub(y, x)))).collect());
        let others: Vec<usize> = (0..4).filter(|&k| k != a && k != b).collect();
        let halves = Polytope {
            geometry: Geometry::Euclidean,
            vertices: vs,
            simplices: vec![(vec![a, 4, others[0], others[1]], 1), (vec![4, b, others[0], others[1]], 1)],
        };
        let diff = dehn_classical(&r, &p).unwrap().minus(&dehn_classical(&r, &halves).unwrap());
        prop_assert!(tensor_reduce(&r, &diff, ReducePolicy::default()).unwrap().zero);
        let v: f64 = (0..2).map(|k| volume(&r, &halves.simplex(k), 1e-9).unwrap().value).sum();
        prop_assert!((v - 2f64.sqrt() / 12.0).abs() < 1e-14);
    }

    #[test]
    fn triangle_area_two_ways(p in prop::collection::vec(prop::collection::vec(0.05f64..1.0, 3), 3)) {
        let r = Real::new(128);
        let vs: Vec<Vec<_>> = p.iter().map(|v| {
            let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            v.iter().map(|c| r.from_f64(c / n)).collect()
        }).collect();
        let vs: Vec<Vec<_>> = vs.iter().map(|v| {
            let n2 = r.dot(v, v);
            let s = r.sqrt(&n2);
            v.iter().map(|c| r.div(c, &s)).collect()
        }).collect();
        let Ok(s) = GeodesicSimplex::new(&r, Geometry::Spherical, vs) else { return Ok(()) };
        let excess = volume(&r, &s, 1e-10).unwrap().value;
        prop_assume!(excess > 1e-3);
        let quad = volume_by_quadrature(&r, &s, 1e-10).unwrap().value;
        prop_assert!((excess - quad).abs() < 1e-7, "{} vs {}", excess, quad);
    }

    #[test]
    fn ccs_vertices_follow_prefix_products(a in 0.1f64..1.4, b in 0.1f64..1.4, c in 0.1f64..1.4) {
        let r = Real::new(128);
        let g = [rotation(&r, 4, 0, 1, &r.from_f64(a)), rotation(&r, 4, 0, 2, &r.from_f64(b)), rotation(&r, 4, 0, 3, &r.from_f64(c))];
        let x0: Vec<_> = (0..4).map(|i| r.int((i == 0) as i64)).collect();
        let (s, sign) = ccs_simplex(&r, Geometry::Spherical, &g, &x0).unwrap();
        prop_assert_eq!(sign, 1);
        let mut cur = x0.clone();
        prop_assert!(close_vec(&r, &s.vertices[0], &cur));
        for k in 0..3 {
            let gk = &g[2 - k];
            cur = gk.iter().map(|row| r.dot(row, &cur)).collect();
            let expect: Vec<_> = prefix(&r, &g, k + 1, &x0);
            prop_assert!(close_vec(&r, &s.vertices[k + 1], &expect));
        }
    }
}

/// g_d g_{d-1} ⋯ g_{d-k+1} x0
fn prefix(r: &Real, g: &[Vec<Vec<astro_float::BigFloat>>], k: usize, x0: &[astro_float::BigFloat]) -> Vec<astro_float::BigFloat> {
    let d = g.len();
    let mut v = x0.to_vec();
    for i in d - k..d {
        v = g[i].iter().map(|row| r.dot(row, &v)).collect();
    }
    v
}

fn close_vec(r: &Real, a: &[astro_float::BigFloat], b: &[astro_float::BigFloat]) -> bool {
    a.iter().zip(b).all(|(x, y)| r.is_small(&r.sub(x, y)))
}

fn mat_mul_real(r: &Real, a: &[Vec<astro_float::BigFloat>], b: &[Vec<astro_float::BigFloat>]) -> Vec<Vec<astro_float::BigFloat>> {
    let n = b.len();
    a.iter().map(|row| (0..n).map(|j| (0..n).fold(r.int(0), |s, k| r.add(&s, &r.mul(&row[k], &b[k][j])))).collect()).collect()
}
