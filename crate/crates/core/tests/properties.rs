//! Property tests for the structural invariants of every module.

mod common;

use common::*;
use num_rational::Ratio;
use proptest::prelude::*;
use std::collections::BTreeMap;
use std::sync::Arc;
use treetrace::approx::{
    approx_norm, besov_norm_to, detail_qn, gagliardo_seminorm, modulus_of_smoothness, project_pn,
    PiecewiseConstantFn, SampledFn,
};
use treetrace::harmonic::{analyze, synth, theta};
use treetrace::metric_tree::{children, coordinate_map, edges, inverse_coordinate_map, parent, TreePoint};
use treetrace::trace::{gamma, identify, tau};
use treetrace::{
    basis_function, geometric_tree, hypercube_decomposition, interval_decomposition, perturbed_tree,
    sigma, symmetry_indices, Complex64, Dec, EdgeId, MonteCarlo, Params, RadialProfile, SymmetryIndex,
    TraceCoefficients, TreeFn,
};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn gated_params() -> impl Strategy<Value = Params> {
    (2usize..5, 0.2f64..0.8).prop_flat_map(|(p, ell)| {
        let lo = ell / p as f64;
        let hi = 1.0 / (ell * p as f64);
        (Just(p), Just(ell), (lo * 1.05)..(hi * 0.95))
            .prop_map(|(p, ell, alpha)| Params::new(p, ell, alpha).unwrap())
    })
}

fn random_pc<'a>(dec: &'a Dec, level: usize, seed: u64) -> PiecewiseConstantFn<'a, f64> {
    let mut r = rng(seed);
    let values = (0..dec.cell_count(level)).map(|_| complex(&mut r)).collect();
    PiecewiseConstantFn::new(dec, level, values).unwrap()
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn parent_inverts_children(p in 2usize..6, n in 0usize..6, seed in any::<u64>()) {
        let k = (seed as usize) % p.pow(n as u32);
        let e = EdgeId::new(n, k);
        for ch in children(e, p) {
            prop_assert_eq!(parent(ch, p), Some(e));
        }
    }

    #[test]
    fn generations_have_p_to_the_n_edges(p in 2usize..5, depth in 0usize..6) {
        let mut counts = vec![0usize; depth + 1];
        for e in edges(p, depth) {
            counts[e.n] += 1;
        }
        for (n, cnt) in counts.iter().enumerate() {
            prop_assert_eq!(*cnt, p.pow(n as u32));
        }
    }

    #[test]
    fn generation_measure(p in 2usize..5, ell in 0.1f64..0.9, alpha in 0.1f64..2.0, n in 0usize..6) {
        let pr = Params::new(p, ell, alpha).unwrap();
        let tree = geometric_tree(pr, n).unwrap();
        let total: f64 = (0..p.pow(n as u32))
            .map(|k| tree.weight(EdgeId::new(n, k)) * tree.length(EdgeId::new(n, k)))
            .sum();
        let want = (p as f64 * alpha * ell).powi(n as i32);
        prop_assert!((total - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn coordinate_maps_invert(seed in any::<u64>(), s in 0.0f64..1.0) {
        let mut r = rng(seed);
        let pr = Params::new(2, 0.5, 0.5).unwrap();
        let pert = random_perturbation(&pr, 4, 1.3, &mut r);
        let tree = perturbed_tree(pr, 4, &pert).unwrap();
        let e = EdgeId::new((seed % 5) as usize, 0);
        let x = TreePoint { edge: e, t: pr.t(e.n as i64 - 1) + s * pr.edge_length(e.n) };
        let y = coordinate_map(&tree, x).unwrap();
        let back = inverse_coordinate_map(&tree, y).unwrap();
        prop_assert!((back.t - x.t).abs() < 1e-12);
    }

    #[test]
    fn continuity_is_enforced(seed in any::<u64>(), jump in 1e-10f64..1.0) {
        let tree = Arc::new(geometric_tree(Params::new(2, 0.5, 0.5).unwrap(), 3).unwrap());
        let f = random_tree_fn(tree.clone(), 3, &mut rng(seed));
        let mut values = f.values().to_vec();
        let e = EdgeId::new(1 + (seed % 3) as usize, 0);
        values[tree.index(e) * 3] += c(jump);
        prop_assert!(TreeFn::new(tree, 3, values).is_err());
    }

    #[test]
    fn norms_are_homogeneous(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let tree = Arc::new(geometric_tree(Params::new(3, 0.5, 0.4).unwrap(), 3).unwrap());
        let f = random_tree_fn(tree, 4, &mut rng(seed));
        let a = Complex64::new(re, im);
        let (n1, n2) = (f.norms(), f.scaled(a).norms());
        prop_assert!((n2.l2 - a.norm() * n1.l2).abs() <= 1e-12 * n2.l2.max(1e-300));
        prop_assert!((n2.h1_semi - a.norm() * n1.h1_semi).abs() <= 1e-12 * n2.h1_semi.max(1e-300));
    }

    #[test]
    fn transport_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let pr = Params::new(2, 0.5, 0.5).unwrap();
        let pert = random_perturbation(&pr, 4, 1.2, &mut r);
        let pt = Arc::new(perturbed_tree(pr, 4, &pert).unwrap());
        let f = random_tree_fn(pt.clone(), 3, &mut r);
        let back = f.transport_to_geometric().transport_onto(pt).unwrap();
        let err = back.add_scaled(c(-1.0), &f).unwrap().norms().l2;
        prop_assert!(err <= 1e-10 * f.norms().l2);
    }

    #[test]
    fn characters_sum_to_zero(p in 2usize..13) {
        for s in 1..p {
            let sum = (0..p).fold(Complex64::new(0.0, 0.0), |a, j| a + theta::<f64>(p, s, j));
            prop_assert!(sum.norm() < 1e-14);
        }
    }

    #[test]
    fn sigma_vanishes_on_the_lower_gate(p in 2usize..8, ell in 0.05f64..0.95) {
        let pr = Params::new(p, ell, ell / p as f64).unwrap();
        prop_assert!(sigma(&pr).abs() < 1e-15);
    }

    #[test]
    fn child_volumes_sum_exactly(d in 1usize..4, p in 2usize..4) {
        let dec = hypercube_decomposition::<Ratio<i64>>(d, p, 4).unwrap();
        for n in 0..4 {
            for k in 0..dec.cell_count(n) {
                let sum = (0..p).fold(Ratio::from_integer(0), |a, j| a + dec.volume(n + 1, p * k + j));
                prop_assert_eq!(sum, dec.volume(n, k));
                for j in 0..p {
                    prop_assert!(dec.cell(n, k).contains_cell(dec.cell(n + 1, p * k + j)));
                }
            }
        }
    }

    #[test]
    fn cell_lookup_respects_nesting(x in 0.001f64..0.999, y in 0.001f64..0.999, n in 0usize..7) {
        let dec = hypercube_decomposition::<f64>(2, 3, 8).unwrap();
        if let (Ok(k1), Ok(k0)) = (dec.cell_of_point(&[x, y], n + 1), dec.cell_of_point(&[x, y], n)) {
            prop_assert_eq!(k1 / 3, k0);
        }
    }
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn synth_is_adjoint_to_analyze(pr in gated_params(), seed in any::<u64>(), a in 0.5f64..3.0) {
        let depth = 3;
        let tree = Arc::new(geometric_tree(pr, depth).unwrap());
        let g = random_tree_fn(tree.clone(), 3, &mut rng(seed));
        let zs = symmetry_indices(pr.p, depth);
        let z = zs[(seed as usize) % zs.len()];
        let t0 = pr.t(z.nu());
        let prof = RadialProfile::from_fn(pr, z.nu(), depth, 3, c(0.0), |t| {
            Complex64::new((a * (t - t0)).sin(), t - t0)
        })
        .unwrap();
        let lhs = synth(z, &prof, tree).unwrap().inner(&g).unwrap();
        let rhs = prof.inner(&analyze(&g, z).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn symmetry_components_reconstruct(pr in gated_params(), seed in any::<u64>()) {
        let tree = Arc::new(geometric_tree(pr, 3).unwrap());
        let f = random_tree_fn(tree.clone(), 3, &mut rng(seed));
        let mut sum = TreeFn::zeros(tree.clone(), 3);
        for z in symmetry_indices(pr.p, 3) {
            let part = synth(z, &analyze(&f, z).unwrap(), tree.clone()).unwrap();
            sum = sum.add_scaled(c(1.0), &part).unwrap();
        }
        prop_assert!(sum.add_scaled(c(-1.0), &f).unwrap().norms().l2 < 1e-10);
    }

    #[test]
    fn tau_kills_compact_support(pr in gated_params(), seed in any::<u64>(), support in 0usize..4) {
        let tree = Arc::new(geometric_tree(pr, 5).unwrap());
        let f = random_compact_fn(tree, 3, support, &mut rng(seed));
        prop_assert!(tau(&f).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn trace_maps_are_linear(pr in gated_params(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let tree = Arc::new(geometric_tree(pr, 4).unwrap());
        let f = random_tree_fn(tree.clone(), 3, &mut r);
        let g = random_tree_fn(tree, 3, &mut r);
        let a = complex(&mut r);
        let combo = f.add_scaled(a, &g).unwrap();
        let lhs = tau(&combo).unwrap();
        let rhs = tau(&f).unwrap().add_scaled(a, &tau(&g).unwrap());
        prop_assert!(lhs.distance_l2r(&rhs, 0.0) < 1e-10 * (1.0 + rhs.norm_l2r(0.0)));

        let dec = interval_decomposition::<f64>(pr.p, 5).unwrap();
        let il = identify(&lhs, &dec).unwrap();
        let ir = identify(&tau(&f).unwrap(), &dec).unwrap()
            .add_scaled(a, &identify(&tau(&g).unwrap(), &dec).unwrap()).unwrap();
        prop_assert!(il.l2_distance(&ir).unwrap() < 1e-10 * (1.0 + ir.l2()));

        let gl = gamma(&combo, &dec, 3).unwrap();
        let (gf, gg) = (gamma(&f, &dec, 3).unwrap(), gamma(&g, &dec, 3).unwrap());
        let b = gf.method_b.add_scaled(a, &gg.method_b).unwrap();
        prop_assert!(gl.method_b.l2_distance(&b).unwrap() < 1e-10 * (1.0 + b.l2()));
        let m = gf.method_a.add_scaled(a, &gg.method_a).unwrap();
        prop_assert!(gl.method_a.l2_distance(&m).unwrap() < 1e-10 * (1.0 + m.l2()));
    }

    #[test]
    fn identification_is_an_isometry(seed in any::<u64>(), r in 0.05f64..0.45, d in 1usize..3) {
        let mut g = rng(seed);
        let pr = Params::new(2, 0.5, 0.4).unwrap();
        let mut entries = BTreeMap::new();
        for z in symmetry_indices(2, 4) {
            if rand::Rng::gen_bool(&mut g, 0.5) {
                entries.insert(z, complex(&mut g));
            }
        }
        entries.insert(SymmetryIndex::Rad, complex(&mut g));
        let coeffs = TraceCoefficients::new(pr, entries).unwrap();
        let dec = hypercube_decomposition::<f64>(d, 2, 5).unwrap();
        let f = identify(&coeffs, &dec).unwrap();
        let lhs = approx_norm(&f, r * d as f64).unwrap().a_r_via_q.powi(2);
        let rhs = 2f64.powf(2.0 * r) * coeffs.norm_l2r(r).powi(2);
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-10);
    }

    #[test]
    fn projections_nest_and_details_are_orthogonal(seed in any::<u64>(), d in 1usize..3) {
        let dec = hypercube_decomposition::<f64>(d, 2, 6).unwrap();
        let f = random_pc(&dec, 6, seed);
        let mut pieces = Vec::new();
        let mut energy = 0.0;
        for n in 0..=6 {
            pieces.push(detail_qn(&f, n).unwrap());
            energy += pieces[n].l2().powi(2);
            for m in 0..=6 {
                let pm = project_pn(&f, m).unwrap();
                let pnm = project_pn(&pm, n).unwrap();
                let direct = project_pn(&f, n.min(m)).unwrap();
                prop_assert!(pnm.l2_distance(&direct).unwrap() < 1e-12);
            }
        }
        prop_assert!((energy - f.l2().powi(2)).abs() < 1e-12 * energy.max(1.0));
        for i in 0..pieces.len() {
            for j in i + 1..pieces.len() {
                prop_assert!(pieces[i].inner(&pieces[j]).unwrap().norm() < 1e-12);
            }
        }
        let mut sum = PiecewiseConstantFn::constant(&dec, c(0.0));
        for q in &pieces {
            sum = sum.add_scaled(c(1.0), q).unwrap();
        }
        prop_assert!(sum.l2_distance(&f).unwrap() < 1e-12);
    }

    #[test]
    fn approx_forms_are_equivalent(seed in any::<u64>(), r in 0.05f64..0.45) {
        let dec = interval_decomposition::<f64>(2, 8).unwrap();
        let f = random_pc(&dec, 8, seed);
        let a = approx_norm(&f, r).unwrap();
        prop_assert!(a.a_r_via_q <= 2f64.powf(r) * a.a_r * (1.0 + 1e-12));
        let k = 1f64.max((2f64.powf(2.0 * r) - 1.0).powf(-0.5));
        prop_assert!(a.a_r <= k * a.a_r_via_q * (1.0 + 1e-12));
        prop_assert!(a.a_r >= f.l2() * (1.0 - 1e-12));
    }

    #[test]
    fn modulus_bounds(seed in any::<u64>(), t in 0.001f64..0.9, n in 0usize..7) {
        let dec = interval_decomposition::<f64>(2, 6).unwrap();
        let f = random_pc(&dec, n.min(6), seed);
        let w = modulus_of_smoothness(&f, t).unwrap();
        prop_assert!(w <= 2.0 * f.l2() * (1.0 + 1e-12));
        // Bound with the constant from the neighbour-counting argument; the
        // neighbour count there includes the cell itself.
        let diag = dec.diagnostics();
        let big_k = diag.k_observed as f64 + 1.0;
        let cc = ((big_k + 1.0) * diag.c2_observed.sqrt()).max(2.0);
        let level = n.min(6) as f64;
        prop_assert!(w <= cc * 2f64.powf(level / 2.0) * t.sqrt() * f.l2() * (1.0 + 1e-12));
    }

    #[test]
    fn gagliardo_is_homogeneous(seed in any::<u64>(), s in 0.05f64..0.45, re in -2.0f64..2.0) {
        let dec = interval_decomposition::<f64>(2, 5).unwrap();
        let f = random_pc(&dec, 5, seed);
        let mut scaled = PiecewiseConstantFn::constant(&dec, c(0.0));
        scaled = scaled.add_scaled(c(re), &f).unwrap();
        let a = gagliardo_seminorm(&f, s, MonteCarlo::default()).unwrap();
        let b = gagliardo_seminorm(&scaled, s, MonteCarlo::default()).unwrap();
        prop_assert!((b.value - re.abs() * a.value).abs() <= 1e-12 * a.value.max(1.0));
    }
}

#[test]
fn projection_error_decreases() {
    let dec = hypercube_decomposition::<f64>(2, 2, 8).unwrap();
    let f = SampledFn::from_fn(&dec, &[64, 64], |x| {
        Complex64::new((3.0 * x[0]).sin() * x[1], (x[0] - x[1]).exp())
    })
    .unwrap();
    let mut prev = f64::INFINITY;
    for n in 0..=8 {
        let err = project_pn(&f, n).unwrap().l2_distance(&project_pn(&f, 8).unwrap()).unwrap();
        assert!(err <= prev + 1e-14);
        prev = err;
    }
    assert!(prev < 1e-14);
}

#[test]
fn projection_error_bound_on_haar_family() {
    let dec = interval_decomposition::<f64>(2, 9).unwrap();
    let diag = dec.diagnostics();
    for s in [0.1, 0.25, 0.4] {
        let b = diag.c1_observed.powf(1.0 + 2.0 * s);
        for level in 1..=8usize {
            let amp = 2f64.powf((level as f64 - 1.0) / 2.0);
            let mut v = vec![c(0.0); 1 << level];
            v[0] = c(amp);
            v[1] = c(-amp);
            let f = PiecewiseConstantFn::new(&dec, level, v).unwrap();
            // The bound is stated for the full double integral over
            // Omega x Omega, twice the seminorm computed here.
            let full = 2.0 * gagliardo_seminorm(&f, s, MonteCarlo::default()).unwrap().squared;
            for n in 0..=9 {
                let err = f.l2_distance(&project_pn(&f, n).unwrap().refine_to(9).unwrap()).unwrap();
                let bound = b * 2f64.powf(-2.0 * s * n as f64) * full;
                assert!(err * err <= bound * (1.0 + 1e-12), "s = {s}, level {level}, n = {n}");
            }
        }
    }
}

#[test]
fn besov_and_gagliardo_diverge_together() {
    let dec = interval_decomposition::<f64>(2, 3).unwrap();
    let f = PiecewiseConstantFn::new(&dec, 2, vec![c(1.0), c(1.0), c(0.0), c(1.0)]).unwrap();
    for s in [0.1, 0.3, 0.45, 0.5, 0.6, 0.9] {
        let b = besov_norm_to(&f, s, 40).unwrap();
        let g = gagliardo_seminorm(&f, s, MonteCarlo::default()).unwrap();
        assert_eq!(b.divergent, g.divergent, "s = {s}");
        assert_eq!(b.divergent, s >= 0.5, "s = {s}");
    }
}

#[test]
fn refinement_order_of_norms() {
    let pr = Params::new(2, 0.5, 0.5).unwrap();
    let tree = Arc::new(geometric_tree(pr, 3).unwrap());
    let radial = |m: usize| {
        let f = TreeFn::from_fn(tree.clone(), m, |_, t| Complex64::new((2.0 * t).sin(), t * t)).unwrap();
        let n = f.norms();
        (n.l2, n.h1_semi)
    };
    let reference = radial(1025);
    let errs: Vec<(f64, f64)> = [5usize, 9, 17, 33, 65]
        .iter()
        .map(|&m| {
            let (a, b) = radial(m);
            ((m - 1) as f64, ((a - reference.0).abs() + (b - reference.1).abs()))
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0].1 / w[1].1).ln() / (w[1].0 / w[0].0).ln();
        assert!(order >= 1.9, "observed order {order}");
    }
}

#[test]
fn trace_bound_is_stable_across_depths() {
    let pr = Params::new(2, 0.5, 0.4).unwrap();
    let s = sigma(&pr);
    let mut ratios = Vec::new();
    for depth in [4usize, 6, 8] {
        let tree = Arc::new(geometric_tree(pr, depth).unwrap());
        let f = TreeFn::from_fn(tree, 3, |_, t| Complex64::new((1.5 * t).cos(), 0.0)).unwrap();
        let ratio = tau(&f).unwrap().norm_l2r(s) / f.norms().h1;
        assert!(ratio.is_finite());
        ratios.push(ratio);
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    assert!(hi / lo < 1.5, "ratios {ratios:?}");
}

#[test]
fn method_agreement_rate_for_a_deep_index() {
    let pr = Params::new(3, 0.5, 0.3).unwrap();
    let rate = pr.ell / (pr.alpha * 3.0);
    let tree = Arc::new(geometric_tree(pr, 9).unwrap());
    let f = basis_function(tree, 3, SymmetryIndex::triple(1, 2, 1)).unwrap();
    let dec = interval_decomposition::<f64>(3, 9).unwrap();
    let errs: Vec<f64> = (4..=9).map(|n| gamma(&f, &dec, n).unwrap().discrepancy).collect();
    for w in errs.windows(2) {
        let observed = (w[1] / w[0]).ln();
        assert!((observed / rate.ln() - 1.0).abs() < 0.1, "{observed} vs {}", rate.ln());
    }
}
