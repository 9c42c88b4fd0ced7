//! Shared generators and quadrature oracles for the integration tests.
#![allow(dead_code)]

use gauss_quad::GaussLegendre;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use treetrace::metric_tree::{parent, EdgePerturbation};
use treetrace::{Complex64, EdgeId, Params, Tree, TreeFn};

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Continuous function with independent random samples; the first sample on
/// every edge copies the parent's last one.
pub fn random_tree_fn(tree: Arc<Tree>, m: usize, rng: &mut ChaCha8Rng) -> TreeFn {
    random_supported(tree, m, rng, None)
}

/// Random continuous function vanishing at the root and on every generation
/// beyond `support`, including the vertices that close generation `support`.
pub fn random_compact_fn(tree: Arc<Tree>, m: usize, support: usize, rng: &mut ChaCha8Rng) -> TreeFn {
    random_supported(tree, m, rng, Some(support))
}

fn random_supported(tree: Arc<Tree>, m: usize, rng: &mut ChaCha8Rng, support: Option<usize>) -> TreeFn {
    let p = tree.p();
    let mut values = vec![Complex64::new(0.0, 0.0); tree.edge_count() * m];
    for e in tree.edges() {
        let base = tree.index(e) * m;
        let first = match parent(e, p) {
            Some(par) => values[tree.index(par) * m + m - 1],
            None if support.is_some() => Complex64::new(0.0, 0.0),
            None => complex(rng),
        };
        values[base] = first;
        for i in 1..m {
            let zero = match support {
                Some(s) => e.n > s || (e.n == s && i == m - 1),
                None => false,
            };
            values[base + i] = if zero { Complex64::new(0.0, 0.0) } else { complex(rng) };
        }
    }
    TreeFn::new(tree, m, values).expect("continuous by construction")
}

/// Random edge data with every ratio in `[1/c, c]` and at least one at `c`.
pub fn random_perturbation(params: &Params, depth: usize, c: f64, rng: &mut ChaCha8Rng) -> Vec<EdgePerturbation<f64>> {
    let p = params.p;
    let mut out = Vec::new();
    for e in treetrace::metric_tree::edges(p, depth) {
        let lr: f64 = c.powf(rng.gen_range(-1.0..1.0));
        let wr: f64 = c.powf(rng.gen_range(-1.0..1.0));
        out.push(EdgePerturbation {
            n: e.n,
            k: e.k,
            length: Some(params.edge_length(e.n) * lr),
            weight: Some(params.edge_weight(e.n) * wr),
        });
    }
    let pick = rng.gen_range(0..out.len());
    let EdgeId { n, .. } = EdgeId::new(out[pick].n, out[pick].k);
    out[pick].length = Some(params.edge_length(n) * c);
    out
}

/// Composite Gauss-Legendre rule on `[a, b]` split at `breaks`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, breaks: &[f64], order: usize) -> f64 {
    let rule = GaussLegendre::new(order).expect("valid order");
    breaks.windows(2).map(|w| rule.integrate(w[0], w[1], &f)).sum()
}

fn graded(a: f64, b: f64, levels: usize) -> Vec<f64> {
    // Geometric grading toward `a`.
    let mut pts: Vec<f64> = (0..=levels).map(|i| a + (b - a) * 0.5f64.powi((levels - i) as i32)).collect();
    pts[0] = a;
    pts.dedup();
    pts
}

/// `int_A int_B |x - y|^{-2-2s} dx dy` for the two halves
/// `A = (0, 1/2) x (0, 1)` and `B = (1/2, 1) x (0, 1)` at `s = 1/4`,
/// reduced to difference coordinates and integrated by graded quadrature.
pub fn half_square_pair_integral() -> f64 {
    // Inner integral over v in (-1, 1) of (1 - |v|) (u^2 + v^2)^{-5/4}.
    let inner = |u: f64| -> f64 {
        // int_0^1 (u^2 + v^2)^{-5/4} dv with v = u sinh t.
        let top = (1.0 / u).asinh();
        let mut cuts = vec![0.0];
        let mut x = 1.0;
        while x < top {
            cuts.push(x);
            x *= 2.0;
        }
        cuts.push(top);
        let plain = integrate(|t: f64| u.powf(-1.5) * t.cosh().powf(-1.5), &cuts, 30);
        let weighted = 2.0 * (u.powf(-0.5) - (u * u + 1.0).powf(-0.25));
        2.0 * (plain - weighted)
    };
    // u = w^2 removes the u^{-1/2} endpoint behaviour.
    let outer = |w: f64| {
        let u = w * w;
        u.min(1.0 - u) * inner(u) * 2.0 * w
    };
    let kink = 0.5f64.sqrt();
    let mut breaks = graded(0.0, kink, 30);
    breaks.extend(graded(kink, 1.0, 1).into_iter().skip(1));
    integrate(outer, &breaks, 40)
}

/// `int_0^{1/2} int_{1/2}^1 |x - y|^{-3/2} dy dx` by Duffy-type splitting
/// around the shared corner, with `x = 1/2 - a^2`, `y = 1/2 + b^2`.
pub fn half_interval_pair_integral() -> f64 {
    let h = 0.5f64.sqrt();
    let inner = |a: f64| {
        integrate(
            |b: f64| 4.0 * a * b * (a * a + b * b).powf(-1.5),
            &graded(0.0, h, 40),
            30,
        )
    };
    integrate(inner, &graded(0.0, h, 40), 30)
}
