//! Seeded random inputs: tree functions, coefficient sets and tree
//! perturbations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;
use treetrace::metric_tree::{edges, parent, EdgePerturbation};
use treetrace::{symmetry_indices, Complex64, Params, SymmetryIndex, Tree, TreeFn};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Continuous function with independent samples; each edge starts at its
/// parent's last sample.
pub fn random_tree_fn(tree: Arc<Tree>, m: usize, rng: &mut ChaCha8Rng) -> TreeFn {
    supported(tree, m, rng, None)
}

/// Random continuous function vanishing at the root and beyond generation
/// `support` (including the vertices closing that generation).
pub fn random_compact_fn(tree: Arc<Tree>, m: usize, support: usize, rng: &mut ChaCha8Rng) -> TreeFn {
    supported(tree, m, rng, Some(support))
}

fn supported(tree: Arc<Tree>, m: usize, rng: &mut ChaCha8Rng, support: Option<usize>) -> TreeFn {
    let zero = Complex64::new(0.0, 0.0);
    let mut values = vec![zero; tree.edge_count() * m];
    for e in tree.edges() {
        let base = tree.index(e) * m;
        values[base] = match parent(e, tree.p()) {
            Some(par) => values[tree.index(par) * m + m - 1],
            None if support.is_some() => zero,
            None => complex(rng),
        };
        for i in 1..m {
            let vanish = support.is_some_and(|s| e.n > s || (e.n == s && i == m - 1));
            values[base + i] = if vanish { zero } else { complex(rng) };
        }
    }
    TreeFn::new(tree, m, values).expect("continuous by construction")
}

/// Random coefficients on indices with `nu < depth`; never empty.
pub fn random_coefficients(p: usize, depth: usize, density: f64, rng: &mut ChaCha8Rng) -> BTreeMap<SymmetryIndex, Complex64> {
    let mut entries = BTreeMap::new();
    for z in symmetry_indices(p, depth) {
        if rng.gen_bool(density) {
            entries.insert(z, complex(rng));
        }
    }
    if entries.is_empty() {
        entries.insert(SymmetryIndex::Rad, Complex64::new(1.0, 0.0));
    }
    entries
}

/// Edge data with every length and weight ratio in `[1/c, c]`; one edge
/// length sits exactly at `c`.
pub fn random_perturbation(params: &Params, depth: usize, c: f64, rng: &mut ChaCha8Rng) -> Vec<EdgePerturbation<f64>> {
    let mut out: Vec<EdgePerturbation<f64>> = edges(params.p, depth)
        .map(|e| {
            let lr = c.powf(rng.gen_range(-1.0..=1.0));
            let wr = c.powf(rng.gen_range(-1.0..=1.0));
            EdgePerturbation {
                n: e.n,
                k: e.k,
                length: Some(params.edge_length(e.n) * lr),
                weight: Some(params.edge_weight(e.n) * wr),
            }
        })
        .collect();
    let pick = rng.gen_range(0..out.len());
    out[pick].length = Some(params.edge_length(out[pick].n) * c);
    out
}
