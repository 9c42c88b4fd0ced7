//! One function per experiment kind; each returns a table with the kind's
//! fixed schema plus its summary statistics.

use crate::config::{
    BasisGramCorpus, Corpus, DecompositionConfig, ExperimentConfig, Family, GagliardoCorpus, GateSweepCorpus,
    IsometryCorpus, KernelCorpus, Kind, LiftCorpus, NormEquivalenceCorpus, RandomFunctionCorpus, TraceConvergenceCorpus,
    TransportCorpus,
};
use crate::corpus::{complex, random_coefficients, random_compact_fn, random_perturbation, random_tree_fn, rng};
use crate::table::{ResultTable, TableError};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;
use treetrace::approx::{approx_norm, equivalence_report, DomainFnDyn};
use treetrace::harmonic::{analyze, synth};
use treetrace::metric_tree::{coordinate_map, TreePoint};
use treetrace::trace::{gamma, identify, lift};
use treetrace::{
    basis_gram, gagliardo_seminorm, gate, geometric_tree, harmonic_combination, hypercube_decomposition,
    perturbed_tree, sigma, symmetry_indices, tau, tau_perturbed, Complex64, Dec, MonteCarlo, NormOptions, Params,
    PcFn, TraceCoefficients, TreeFn,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] treetrace::Error),

    #[error(transparent)]
    Table(#[from] TableError),

    #[error("{0}")]
    Setup(String),
}

type Run = Result<ResultTable, RunError>;

/// Column schema of each kind.
pub fn columns(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::GateSweep => &["alpha", "gate", "sigma", "sigma_closed_form"],
        Kind::TraceConvergence => &["N", "error", "ratio"],
        Kind::KernelCheck => &["trial", "p", "support", "max_abs"],
        Kind::Diagnostics => &["n", "c1", "c2", "neighbors", "volume_error"],
        Kind::NormEquivalence => &[
            "level",
            "l2",
            "a_r",
            "besov",
            "besov_tail",
            "gagliardo_norm",
            "gagliardo_stderr",
            "ratio_a_besov",
            "ratio_a_gagliardo",
            "ratio_besov_gagliardo",
        ],
        Kind::BasisGram => &["i", "j", "row", "col", "re", "im", "deviation"],
        Kind::Parseval => &["trial", "p", "reconstruction", "max_cross", "energy_gap"],
        Kind::IdentificationIsometry => &["trial", "d", "entries", "ratio", "deviation"],
        Kind::LiftRoundtrip => &["trial", "error"],
        Kind::GagliardoAnchor => &["case", "level", "value", "reference", "stderr", "gap", "z_score"],
        Kind::PerturbedTransport => &["trial", "distortion", "l2_ratio", "h1_ratio", "trace_gap"],
    }
}

fn keys(kind: Kind) -> usize {
    match kind {
        Kind::BasisGram | Kind::GagliardoAnchor => 2,
        _ => 1,
    }
}

fn max(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn min(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::INFINITY, f64::min)
}

fn decomposition(cfg: &DecompositionConfig) -> Result<Dec, RunError> {
    Ok(hypercube_decomposition::<f64>(cfg.d, cfg.p, cfg.depth)?)
}

/// Runs the experiment; rows come back sorted by their key columns.
pub fn run(config: &ExperimentConfig) -> Run {
    let mut table = ResultTable::new(columns(config.kind), keys(config.kind));
    match &config.corpus {
        Corpus::GateSweep(c) => gate_sweep(config, c, &mut table)?,
        Corpus::TraceConvergence(c) => trace_convergence(config, c, &mut table)?,
        Corpus::KernelCheck(c) => kernel_check(config, c, &mut table)?,
        Corpus::Diagnostics => diagnostics(config, &mut table)?,
        Corpus::NormEquivalence(c) => norm_equivalence(config, c, &mut table)?,
        Corpus::BasisGram(c) => basis(config, c, &mut table)?,
        Corpus::Parseval(c) => parseval(config, c, &mut table)?,
        Corpus::IdentificationIsometry(c) => isometry(config, c, &mut table)?,
        Corpus::LiftRoundtrip(c) => lift_roundtrip(config, c, &mut table)?,
        Corpus::GagliardoAnchor(c) => gagliardo_anchor(config, c, &mut table)?,
        Corpus::PerturbedTransport(c) => perturbed_transport(config, c, &mut table)?,
    }
    table.sort();
    Ok(table)
}

fn gate_sweep(config: &ExperimentConfig, c: &GateSweepCorpus, t: &mut ResultTable) -> Result<(), RunError> {
    let tree = config.tree();
    let (p, ell) = (tree.p, tree.ell);
    let sigma_at = |alpha: f64| -> Result<(bool, f64), RunError> {
        let pr = Params::new(p, ell, alpha)?;
        Ok((gate(&pr), sigma(&pr)))
    };
    let mut gates = Vec::new();
    let mut gap: f64 = 0.0;
    for i in 0..=c.steps {
        // Convex combination keeps both endpoints exact.
        let alpha = (c.alpha_min * (c.steps - i) as f64 + c.alpha_max * i as f64) / c.steps as f64;
        let (g, s) = sigma_at(alpha)?;
        let closed = (alpha * p as f64 / ell).ln() / (2.0 * (p as f64).ln());
        gap = gap.max((s - closed).abs());
        gates.push((alpha, g));
        t.push(vec![alpha.into(), g.into(), s.into(), closed.into()])?;
    }
    // A flip is reported at the closed-gate sample next to the change.
    let (mut lower, mut upper) = (f64::NAN, f64::NAN);
    for w in gates.windows(2) {
        match (w[0].1, w[1].1) {
            (false, true) => lower = w[0].0,
            (true, false) => upper = w[1].0,
            _ => {}
        }
    }
    t.stat("lower_flip", lower);
    t.stat("upper_flip", upper);
    t.stat("max_sigma_gap", gap);
    if let Some(a) = c.reference_alpha {
        t.stat("sigma_at_reference", sigma_at(a)?.1);
    }
    Ok(())
}

fn trace_convergence(config: &ExperimentConfig, c: &TraceConvergenceCorpus, t: &mut ResultTable) -> Result<(), RunError> {
    let pr = config.tree().params();
    let dec = decomposition(config.decomposition())?;
    let tree = Arc::new(geometric_tree(pr, dec.depth)?);
    let coeffs: BTreeMap<_, _> = c.coefficients.iter().map(|e| (e.z, Complex64::new(e.re, e.im))).collect();
    let f = harmonic_combination(tree, c.samples_per_edge, &coeffs)?;
    let levels: Vec<usize> = (c.levels.0..=c.levels.1).collect();
    let errors: Vec<f64> = levels
        .par_iter()
        .map(|&n| gamma(&f, &dec, n).map(|g| g.discrepancy))
        .collect::<Result<_, _>>()?;
    let mut prev = f64::NAN;
    for (n, e) in levels.iter().zip(&errors) {
        t.push(vec![(*n).into(), (*e).into(), (e / prev).into()])?;
        prev = *e;
    }
    // Least-squares slope of ln(error) against N.
    let pts: Vec<(f64, f64)> = levels.iter().zip(&errors).map(|(n, e)| (*n as f64, e.ln())).collect();
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let fitted = if sxx > 0.0 { (pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx).exp() } else { f64::NAN };
    t.stat("fitted_ratio", fitted);
    t.stat("target_ratio", pr.rate());
    t.stat("ratio_rel_gap", (fitted / pr.rate() - 1.0).abs());
    Ok(())
}

fn trial_params(config: &ExperimentConfig, alternate: Option<&crate::config::TreeConfig>, trial: usize) -> Params {
    match alternate {
        Some(alt) if trial % 2 == 1 => alt.params(),
        _ => config.tree().params(),
    }
}

fn kernel_check(config: &ExperimentConfig, c: &KernelCorpus, t: &mut ResultTable) -> Result<(), RunError> {
    let mut rng = rng(config.seed());
    let mut worst: f64 = 0.0;
    for trial in 0..c.count {
        let pr = trial_params(config, c.alternate_tree.as_ref(), trial);
        let tree = Arc::new(geometric_tree(pr, c.tree_depth)?);
        let support = 1 + trial % c.max_support;
        let f = random_compact_fn(tree, c.samples_per_edge, support, &mut rng);
        let m = tau(&f)?.max_abs();
        worst = worst.max(m);
        t.push(vec![trial.into(), pr.p.into(), support.into(), m.into()])?;
    }
    t.stat("max_abs", worst);
    Ok(())
}

fn diagnostics(config: &ExperimentConfig, t: &mut ResultTable) -> Result<(), RunError> {
    let dec = decomposition(config.decomposition())?;
    let diag = dec.diagnostics();
    for g in &diag.per_generation {
        t.push(vec![g.n.into(), g.c1.into(), g.c2.into(), g.neighbors.into(), g.volume_error.into()])?;
    }
    // Splits cycle through the axes, so c2 is compared one full cycle apart.
    let c2: Vec<f64> = diag.per_generation.iter().map(|g| g.c2).collect();
    let period = dec.d;
    let drift = max((2..c2.len().saturating_sub(period)).map(|n| (c2[n + period] - c2[n]).abs() / c2[n]));
    t.stat("c1_observed", diag.c1_observed);
    t.stat("c2_observed", diag.c2_observed);
    t.stat("k_observed", diag.k_observed as f64);
    t.stat("max_volume_error", max(diag.per_generation.iter().map(|g| g.volume_error)));
    t.stat("c2_drift", drift);
    Ok(())
}

fn family_member<'a>(dec: &'a Dec, family: Family, level: usize) -> Result<PcFn<'a>, RunError> {
    let count = dec.cell_count(level);
    let zero = Complex64::new(0.0, 0.0);
    let Family::Haar = family;
    // Two cells of volume |Omega| / count carry +-amp.
    let amp = (count as f64 / (2.0 * dec.domain_volume_f64())).sqrt();
    let mut values = vec![zero; count];
    values[0] = Complex64::new(amp, 0.0);
    values[1] = Complex64::new(-amp, 0.0);
    Ok(PcFn::new(dec, level, values)?)
}

fn norm_equivalence(config: &ExperimentConfig, c: &NormEquivalenceCorpus, t: &mut ResultTable) -> Result<(), RunError> {
    let dec = decomposition(config.decomposition())?;
    let levels: Vec<usize> = (c.levels.0..=c.levels.1).collect();
    let fns: Vec<PcFn> = levels.iter().map(|&l| family_member(&dec, c.family, l)).collect::<Result<_, _>>()?;
    let family: Vec<(String, &dyn DomainFnDyn<f64>)> =
        levels.iter().zip(&fns).map(|(l, f)| (l.to_string(), f as &dyn DomainFnDyn<f64>)).collect();
    let opts = NormOptions {
        besov_levels: c.besov_levels,
        monte_carlo: MonteCarlo { samples: c.mc_samples.unwrap_or(0), seed: config.seed() },
    };
    let report = equivalence_report(&family, c.r, opts)?;
    for (level, row) in levels.iter().zip(&report.rows) {
        t.push(vec![
            (*level).into(),
            row.l2.into(),
            row.a_r.into(),
            row.besov.into(),
            row.besov_tail.into(),
            row.gagliardo_norm.into(),
            row.gagliardo_stderr.into(),
            row.ratio_a_besov.into(),
            row.ratio_a_gagliardo.into(),
            row.ratio_besov_gagliardo.into(),
        ])?;
    }
    for s in &report.summary {
        let name = match s.ratio.as_str() {
            "a_r/besov" => "spread_a_besov",
            "a_r/gagliardo" => "spread_a_gagliardo",
            "besov/gagliardo" => "spread_besov_gagliardo",
            other => return Err(RunError::Setup(format!("unexpected ratio {other}"))),
        };
        t.stat(name, s.spread);
    }
    t.stat("max_spread", max(report.summary.iter().map(|s| s.spread)));
    t.stat("max_besov_tail_fraction", max(report.rows.iter().map(|r| r.besov_tail / r.besov)));
    Ok(())
}

fn basis(config: &ExperimentConfig, c: &BasisGramCorpus, t: &mut ResultTable) -> Result<(), RunError> {
    let pr = config.tree().params();
    let zs = symmetry_indices(pr.p, c.depth);
    let gram = basis_gram(&pr, &zs, c.depth)?;
    let mut worst: f64 = 0.0;
    for (i, row) in gram.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            let dev = (v - Complex64::new(target, 0.0)).norm();
            worst = worst.max(dev);
            t.push(vec![
                i.into(),
                j.into(),
                zs[i].to_string().into(),
                zs[j].to_string().into(),
                v.re.into(),
                v.im.into(),
                dev.into(),
            ])?;
        }
    }
    t.stat("max_deviation", worst);
    Ok(())
}

fn parseval(config: &ExperimentConfig, c: &RandomFunctionCorpus, t: &mut ResultTable) -> Result<(), RunError> {
    let mut rng = rng(config.seed());
    let one = Complex64::new(1.0, 0.0);
    let (mut rec_max, mut cross_max, mut energy_max) = (0f64, 0f64, 0f64);
    for trial in 0..c.count {
        let pr = trial_params(config, c.alternate_tree.as_ref(), trial);
        let tree = Arc::new(geometric_tree(pr, c.tree_depth)?);
        let m = c.samples_per_edge;
        let f = random_tree_fn(tree.clone(), m, &mut rng);
        let parts: Vec<TreeFn> = symmetry_indices(pr.p, c.tree_depth)
            .into_iter()
            .map(|z| synth(z, &analyze(&f, z)?, tree.clone()))
            .collect::<Result<_, _>>()?;
        let mut sum = TreeFn::zeros(tree.clone(), m);
        let mut energy = 0.0;
        for part in &parts {
            sum = sum.add_scaled(one, part)?;
            energy += part.inner(part)?.re;
        }
        let rec = sum.add_scaled(-one, &f)?.norms().l2;
        let energy_gap = (energy - f.inner(&f)?.re).abs();
        // Parts with disjoint edge supports are orthogonal without integration.
        let supports: Vec<Vec<bool>> = parts
            .iter()
            .map(|g| g.values().chunks(m).map(|e| e.iter().any(|v| v.norm() > 0.0)).collect())
            .collect();
        let cross = (0..parts.len())
            .into_par_iter()
            .map(|i| {
                (i + 1..parts.len())
                    .filter(|&j| supports[i].iter().zip(&supports[j]).any(|(a, b)| *a && *b))
                    .map(|j| parts[i].inner(&parts[j]).map(|v| v.norm()))
                    .try_fold(0.0, |acc: f64, v| v.map(|v| acc.max(v)))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let cross = max(cross);
        rec_max = rec_max.max(rec);
        cross_max = cross_max.max(cross);
        energy_max = energy_max.max(energy_gap);
        t.push(vec![trial.into(), pr.p.into(), rec.into(), cross.into(), energy_gap.into()])?;
    }
    t.stat("max_reconstruction", rec_max);
    t.stat("max_cross", cross_max);
    t.stat("max_energy_gap", energy_max);
    Ok(())
}

fn isometry(config: &ExperimentConfig, c: &IsometryCorpus, t: &mut ResultTable) -> Result<(), RunError> {
    let pr = config.tree().params();
    let s = sigma(&pr);
    let mut decs = vec![decomposition(config.decomposition())?];
    if let Some(alt) = &c.alternate_decomposition {
        decs.push(decomposition(alt)?);
    }
    let mut rng = rng(config.seed());
    let mut worst: f64 = 0.0;
    for trial in 0..c.count {
        let coeffs = TraceCoefficients::new(pr, random_coefficients(pr.p, c.depth, c.density, &mut rng))?;
        let dec = &decs[trial % decs.len()];
        let f = identify(&coeffs, dec)?;
        let lhs = approx_norm(&f, s * dec.d as f64)?.a_r_via_q.powi(2);
        let rhs = (pr.p as f64).powf(2.0 * s) * dec.domain_volume_f64() * coeffs.norm_l2r(s).powi(2);
        let ratio = lhs / rhs;
        worst = worst.max((ratio - 1.0).abs());
        t.push(vec![trial.into(), dec.d.into(), coeffs.entries.len().into(), ratio.into(), (ratio - 1.0).abs().into()])?;
    }
    t.stat("max_deviation", worst);
    Ok(())
}

fn lift_roundtrip(config: &ExperimentConfig, c: &LiftCorpus, t: &mut ResultTable) -> Result<(), RunError> {
    let pr = config.tree().params();
    let dec = decomposition(config.decomposition())?;
    let tree = Arc::new(geometric_tree(pr, dec.depth)?);
    let mut rng = rng(config.seed());
    let mut worst: f64 = 0.0;
    for trial in 0..c.count {
        let values = (0..dec.cell_count(c.level)).map(|_| complex(&mut rng)).collect();
        let g = PcFn::new(&dec, c.level, values)?;
        let f = lift(&g, tree.clone(), 3)?;
        let back = gamma(&f, &dec, c.level)?;
        let err = back.method_a.l2_distance(&g)?;
        worst = worst.max(err);
        t.push(vec![trial.into(), err.into()])?;
    }
    t.stat("max_error", worst);
    Ok(())
}

/// `int_0^{1/2} int_{1/2}^1 |x - y|^{-1-2s} dy dx` in closed form.
fn half_interval_reference(s: f64) -> f64 {
    (2.0 * 0.5f64.powf(1.0 - 2.0 * s) - 1.0) / (2.0 * s * (1.0 - 2.0 * s))
}

fn gagliardo_anchor(config: &ExperimentConfig, c: &GagliardoCorpus, t: &mut ResultTable) -> Result<(), RunError> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let reference = half_interval_reference(c.s);
    let deepest = c.levels.iter().copied().max().unwrap_or(1);
    let line = hypercube_decomposition::<f64>(1, 2, deepest)?;
    let mut exact_gap: f64 = 0.0;
    for &level in &c.levels {
        let half = 1usize << (level - 1);
        let f = PcFn::new(&line, level, (0..1usize << level).map(|k| if k < half { one } else { zero }).collect())?;
        let g = gagliardo_seminorm(&f, c.s, MonteCarlo::default())?;
        let gap = (g.squared - reference).abs();
        exact_gap = exact_gap.max(gap);
        t.push(vec!["interval".into(), level.into(), g.squared.into(), reference.into(), g.stderr.into(), gap.into(), f64::NAN.into()])?;
    }
    let square = hypercube_decomposition::<f64>(2, 2, 1)?;
    let f = PcFn::new(&square, 1, vec![one, zero])?;
    let mc = gagliardo_seminorm(&f, c.s, MonteCarlo { samples: c.mc_samples, seed: config.seed() })?;
    let reference_2d = c.reference_2d.unwrap_or(f64::NAN);
    let gap = (mc.squared - reference_2d).abs();
    let z = gap / mc.stderr;
    t.push(vec!["square".into(), 1usize.into(), mc.squared.into(), reference_2d.into(), mc.stderr.into(), gap.into(), z.into()])?;
    t.stat("max_exact_gap", exact_gap);
    t.stat("max_z_score", z);
    Ok(())
}

fn perturbed_transport(config: &ExperimentConfig, c: &TransportCorpus, t: &mut ResultTable) -> Result<(), RunError> {
    let pr = config.tree().params();
    let geo = Arc::new(geometric_tree(pr, c.tree_depth)?);
    let mut rng = rng(config.seed());
    let (mut l2, mut h1, mut gaps, mut dist) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for trial in 0..c.count {
        let pert = random_perturbation(&pr, c.tree_depth, c.distortion, &mut rng);
        let pt = Arc::new(perturbed_tree(pr, c.tree_depth, &pert)?);
        let f = random_tree_fn(pt.clone(), c.samples_per_edge, &mut rng);
        // Pullback through the coordinate map, independent of the transport
        // used inside the perturbed trace.
        let pull = TreeFn::from_fn(geo.clone(), c.samples_per_edge, |e, s| {
            let y = coordinate_map(&pt, TreePoint { edge: e, t: s }).expect("point on the edge");
            f.eval(e, y.t).expect("point on the edge")
        })?;
        let (a, b) = (f.norms(), pull.norms());
        let rl = (a.l2 / b.l2).powi(2);
        let rh = (a.h1_semi / b.h1_semi).powi(2);
        let t1 = tau_perturbed(&f)?;
        let t2 = tau(&pull)?;
        let gap = max(t1.entries.keys().chain(t2.entries.keys()).map(|z| (t1.get(*z) - t2.get(*z)).norm()));
        t.push(vec![trial.into(), pt.distortion().into(), rl.into(), rh.into(), gap.into()])?;
        l2.push(rl);
        h1.push(rh);
        gaps.push(gap);
        dist.push(pt.distortion());
    }
    t.stat("min_l2_ratio", min(l2.iter().copied()));
    t.stat("max_l2_ratio", max(l2.iter().copied()));
    t.stat("min_h1_ratio", min(h1.iter().copied()));
    t.stat("max_h1_ratio", max(h1.iter().copied()));
    t.stat("max_trace_gap", max(gaps));
    t.stat("distortion", max(dist));
    Ok(())
}
