//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hsc::clustering::{adjusted_rand_index, bphsc, nbhsc, BphscInit, BphscOptions, Clustering, NbhscOptions};
use hsc::eigen::{dense_eigenpairs, is_real, leading_eigenpairs_best_effort, leading_eigenpairs_with, EigenOptions};
use hsc::hsbm::{build_g, estimate_parameters_with, sample_hypergraph, sample_labels, theory_report, BlockmodelParams, EdgeCount, SizeParams, TheoryReport};
use hsc::spectral_ops::{build_b, build_bprime, build_jprime};
use hsc::{Hypergraph, LabelVector, SparseOp, Spectrum};
use rayon::prelude::*;

use crate::args::{Algo, Axis, ClusterArgs, Common, EstimateArgs, GraphArgs, ModelArgs, Operator, SampleArgs, SolverArgs, SpectrumArgs, SweepAlgo, SweepArgs};
use crate::output::{csv_writer, sink};
use crate::{CliError, CliResult};

/// Blockmodel parameters from flags; `p_override` supplies gridded sizes.
fn model_params(n: usize, groups: usize, model: &ModelArgs, seed: u64, p_override: &BTreeMap<usize, f64>) -> CliResult<BlockmodelParams> {
    let c = model.c.as_ref().ok_or_else(|| CliError::Usage("--c is required".into()))?;
    let p = model.p.clone().unwrap_or_default();
    let mut sizes = BTreeMap::new();
    for (&k, &ck) in &c.0 {
        let pk = match p_override.get(&k).or_else(|| p.0.get(&k)) {
            Some(&v) => v,
            None if ck == 0.0 => 0.0,
            None => return Err(CliError::Usage(format!("size {k} has --c but no --p"))),
        };
        sizes.insert(k, SizeParams { c: ck, p: pk });
    }
    if let Some(k) = p.0.keys().find(|k| !c.0.contains_key(k)) {
        return Err(CliError::Usage(format!("size {k} has --p but no --c")));
    }
    let q = match &model.q {
        Some(q) if q.len() != groups => return Err(CliError::Usage(format!("--q has {} entries for {groups} groups", q.len()))),
        Some(q) => q.clone(),
        None => vec![1.0 / groups as f64; groups],
    };
    let params = BlockmodelParams {
        n,
        groups,
        q,
        sizes,
        seed,
        edge_count: if model.fixed_count { EdgeCount::Fixed } else { EdgeCount::Poisson },
    };
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(params)
}

fn load_graph(g: &GraphArgs) -> CliResult<Hypergraph> {
    let h = Hypergraph::load(&g.hypergraph, g.nodes)?;
    Ok(if g.dedup { h.dedup() } else { h })
}

fn load_labels(path: &Path, groups: Option<usize>, one_based: bool) -> CliResult<LabelVector> {
    let raw = LabelVector::load(path, None)?;
    let labels: Vec<usize> = if one_based {
        raw.labels().iter().map(|&l| l.checked_sub(1).ok_or_else(|| CliError::Data("label 0 in a 1-based label file".into()))).collect::<CliResult<_>>()?
    } else {
        raw.labels().to_vec()
    };
    let g = groups.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
    Ok(LabelVector::new(labels, g)?)
}

fn write_theory(out: Option<&Path>, reproducible: bool, t: &TheoryReport) -> CliResult<()> {
    let mut w = csv_writer(out, reproducible)?;
    w.write_record([
        "k", "c", "p", "r", "c_in", "c_out", "alpha", "beta", "gamma", "lambda", "nu", "ellipse_center", "ellipse_radius", "collision_center",
        "collision_radius", "detect_vanilla", "detect_bp", "sqrt_beta",
    ])?;
    for s in &t.per_size {
        let row = [s.k as f64, s.c, s.p, s.r, s.c_in, s.c_out, s.alpha, s.beta, s.gamma].map(|x| x.to_string());
        let tail = [s.ellipse_center, s.ellipse_radius, s.collision_center, s.collision_radius].map(|x| x.to_string());
        w.write_record(row.iter().cloned().chain(["".into(), "".into()]).chain(tail).chain(["".into(), "".into(), "".into()]))?;
    }
    let mut agg = vec!["all".to_string()];
    agg.extend(std::iter::repeat_n(String::new(), 5));
    agg.extend([t.alpha, t.beta].map(|x| x.to_string()));
    agg.push(String::new());
    agg.extend([t.lambda, t.nu].map(|x| x.to_string()));
    agg.extend(std::iter::repeat_n(String::new(), 4));
    agg.extend([t.detect_vanilla.to_string(), t.detect_bp.to_string(), t.sqrt_beta.to_string()]);
    w.write_record(&agg)?;
    w.flush()?;
    Ok(())
}

pub fn sample(common: &Common, a: &SampleArgs) -> CliResult<()> {
    if a.groups == 0 || a.n == 0 {
        return Err(CliError::Usage("--n and --groups must be positive".into()));
    }
    let params = model_params(a.n, a.groups, &a.model, common.seed, &BTreeMap::new())?;
    let z = if a.blocks { LabelVector::blocks(a.n, a.groups) } else { sample_labels(a.n, &params.q, common.seed)? };
    let h = sample_hypergraph(&params, &z)?;
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    h.write_edge_list(sink(Some(&dir.join("hyperedges.txt")))?)?;
    z.write(sink(Some(&dir.join("labels.txt")))?)?;
    eprintln!("wrote {} edges on {} nodes to {}", h.m(), h.n(), dir.display());
    match theory_report(&params) {
        Ok(t) => write_theory(None, common.reproducible, &t),
        Err(e) => {
            eprintln!("no theory report: {e}");
            Ok(())
        }
    }
}

fn solve(op: &SparseOp, h: usize, dense: bool, s: &SolverArgs) -> CliResult<Spectrum> {
    let dim = op.nrows();
    if dense || dim < 3 {
        return Ok(dense_eigenpairs(op)?);
    }
    let opts = EigenOptions::new(h.clamp(1, dim - 1)).tol(s.tol).max_iter(s.max_iter);
    if s.best_effort {
        let (spectrum, converged) = leading_eigenpairs_best_effort(op, &opts)?;
        if !converged {
            eprintln!("warning: not every eigenpair converged; max residual {:e}", spectrum.max_residual());
        }
        Ok(spectrum)
    } else {
        Ok(leading_eigenpairs_with(op, &opts)?)
    }
}

pub fn spectrum(common: &Common, a: &SpectrumArgs) -> CliResult<()> {
    let h = load_graph(&a.graph)?;
    let mut sqrt_beta = None;
    let op = match a.operator {
        Operator::B => build_b::<f64>(&h),
        Operator::Bprime => build_bprime::<f64>(&h),
        Operator::Jprime => {
            let g = if let Some(path) = &a.labels {
                let z = load_labels(path, a.groups, a.graph.one_based_labels)?;
                estimate_parameters_with(&h, &z, 1.0)?.g
            } else if a.model.c.is_some() {
                let params = model_params(h.n(), 2, &a.model, common.seed, &BTreeMap::new())?;
                sqrt_beta = Some(theory_report(&params)?.sqrt_beta);
                build_g(&params)?
            } else {
                return Err(CliError::Usage("--operator jprime needs --labels or --c/--p".into()));
            };
            build_jprime(&h, &g)
        }
    };
    if a.operator != Operator::Jprime && a.model.c.is_some() {
        let params = model_params(h.n(), 2, &a.model, common.seed, &BTreeMap::new())?;
        sqrt_beta = Some(theory_report(&params)?.sqrt_beta);
    }
    let spectrum = solve(&op, a.h, a.dense, &a.solver)?;
    let mut w = csv_writer(common.out.as_deref(), common.reproducible)?;
    w.write_record(["index", "re", "im", "abs", "residual"])?;
    for (i, p) in spectrum.pairs.iter().enumerate() {
        w.write_record([i.to_string(), p.value.re.to_string(), p.value.im.to_string(), p.value.norm().to_string(), format!("{:e}", p.residual)])?;
    }
    w.flush()?;
    if let Some(path) = &a.scree {
        let mut mags: Vec<f64> = spectrum.pairs.iter().map(|p| p.value.norm()).collect();
        mags.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
        let mut s = csv_writer(Some(path), common.reproducible)?;
        s.write_record(["rank", "abs"])?;
        for (i, m) in mags.iter().enumerate() {
            s.write_record([(i + 1).to_string(), m.to_string()])?;
        }
        s.flush()?;
    }
    let above = spectrum.pairs.iter().filter(|p| is_real(p.value, 1e-6) && p.value.norm() > 1.0).count();
    eprintln!("bulk_radius,{}", spectrum.bulk_radius);
    if let Some(sb) = sqrt_beta {
        eprintln!("sqrt_beta,{sb}");
    }
    eprintln!("real_above_one,{above}");
    Ok(())
}

/// Runs one clustering algorithm; `known` carries the generating parameters.
fn run_algo(h: &Hypergraph, algo: Algo, groups: usize, hh: usize, rounds: usize, seed: u64, real_only: bool, solver: &SolverArgs, known: Option<&BlockmodelParams>) -> CliResult<Clustering> {
    Ok(match algo {
        Algo::Nbhsc => {
            let mut o = NbhscOptions::new(groups, hh, seed);
            o.real_only = real_only;
            o.eigen_tol = solver.tol;
            o.max_iter = solver.max_iter;
            o.best_effort = solver.best_effort;
            nbhsc(h, &o)?
        }
        Algo::Bphsc | Algo::BphscKnown => {
            let mut o = BphscOptions::new(groups, hh, seed).rounds(rounds);
            o.eigen_tol = solver.tol;
            o.max_iter = solver.max_iter;
            o.best_effort = solver.best_effort;
            let init = match (algo, known) {
                (Algo::BphscKnown, Some(p)) => BphscInit::KnownParams(build_g(p)?),
                (Algo::BphscKnown, None) => return Err(CliError::Usage("bphsc-known needs --c/--p".into())),
                _ => BphscInit::Random,
            };
            bphsc(h, init, &o)?.clustering
        }
    })
}

fn default_h(algo: Algo, groups: usize) -> usize {
    match algo {
        Algo::Nbhsc => groups.max(2),
        _ => 30,
    }
}

pub fn cluster(common: &Common, a: &ClusterArgs) -> CliResult<()> {
    if a.groups == 0 || a.rounds == 0 || a.h == Some(0) {
        return Err(CliError::Usage("--groups, --rounds and --h must be positive".into()));
    }
    let mut h = load_graph(&a.graph)?;
    if a.project {
        h = h.clique_projection();
    }
    let truth = a.truth.as_deref().map(|p| load_labels(p, None, a.graph.one_based_labels)).transpose()?;
    if let Some(t) = &truth {
        if t.len() != h.n() {
            return Err(CliError::Data(format!("truth has {} labels for {} nodes", t.len(), h.n())));
        }
    }
    let known = if a.algo == Algo::BphscKnown { Some(model_params(h.n(), 2, &a.model, common.seed, &BTreeMap::new())?) } else { None };
    if a.algo == Algo::BphscKnown && a.groups != 2 {
        return Err(CliError::Usage("bphsc-known supports two groups".into()));
    }
    let hh = a.h.unwrap_or_else(|| default_h(a.algo, a.groups));
    let mut c = run_algo(&h, a.algo, a.groups, hh, a.rounds, common.seed, a.real_only, &a.solver, known.as_ref())?;
    if let Some(t) = &truth {
        c = c.with_reference(t)?;
    }
    if let Some(path) = &common.out {
        c.labels.write(sink(Some(path))?)?;
    }
    let algo = match a.algo {
        Algo::Nbhsc => "nbhsc",
        Algo::Bphsc => "bphsc",
        Algo::BphscKnown => "bphsc-known",
    };
    let mut w = csv_writer(a.metrics.as_deref(), common.reproducible)?;
    w.write_record(["seed", "algo", "groups", "h", "rounds", "n", "m", "objective", "variance_explained", "embedding_dim", "converged", "ari"])?;
    w.write_record([
        common.seed.to_string(),
        format!("{algo}{}", if a.project { "-projection" } else { "" }),
        a.groups.to_string(),
        hh.to_string(),
        a.rounds.to_string(),
        h.n().to_string(),
        h.m().to_string(),
        c.objective.to_string(),
        c.variance_explained.to_string(),
        c.embedding_dim.to_string(),
        c.converged.to_string(),
        c.ari.map_or(String::new(), |x| x.to_string()),
    ])?;
    w.flush()?;
    Ok(())
}

/// Seed of one sweep trial, independent of scheduling.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    master ^ ((cell as u64) << 32) ^ trial as u64
}

fn grid_cells(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut cells = vec![Vec::new()];
    for axis in axes {
        cells = cells.into_iter().flat_map(|c| axis.values().into_iter().map(move |v| [c.clone(), vec![v]].concat())).collect();
    }
    cells
}

pub fn sweep(common: &Common, a: &SweepArgs) -> CliResult<()> {
    if a.trials == 0 || a.rounds == 0 || a.groups == 0 || a.h == Some(0) {
        return Err(CliError::Usage("--trials, --rounds, --groups and --h must be positive".into()));
    }
    let axes: Vec<Axis> = a.grid.as_ref().ok_or_else(|| CliError::Usage("--grid is required".into()))?.0.clone();
    let c = a.model.c.as_ref().ok_or_else(|| CliError::Usage("--c is required".into()))?;
    if let Some(ax) = axes.iter().find(|ax| !c.0.contains_key(&ax.k)) {
        return Err(CliError::Usage(format!("gridded size {} has no --c", ax.k)));
    }
    let algo = match a.algo {
        SweepAlgo::Nbhsc => Algo::Nbhsc,
        SweepAlgo::BphscKnown => Algo::BphscKnown,
        SweepAlgo::Bphsc | SweepAlgo::BphscProjection => Algo::Bphsc,
    };
    if algo == Algo::BphscKnown && a.groups != 2 {
        return Err(CliError::Usage("bphsc-known supports two groups".into()));
    }
    let hh = a.h.unwrap_or_else(|| default_h(algo, a.groups));
    let cells = grid_cells(&axes);
    // validate every cell before spending compute
    for cell in &cells {
        let over: BTreeMap<usize, f64> = axes.iter().map(|ax| ax.k).zip(cell.iter().copied()).collect();
        model_params(a.n, a.groups, &a.model, 0, &over)?;
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..a.trials).map(move |t| (c, t))).collect();
    let aris: Vec<f64> = jobs
        .par_iter()
        .map(|&(ci, t)| -> CliResult<f64> {
            let seed = trial_seed(common.seed, ci, t);
            let over: BTreeMap<usize, f64> = axes.iter().map(|ax| ax.k).zip(cells[ci].iter().copied()).collect();
            let params = model_params(a.n, a.groups, &a.model, seed, &over)?;
            let z = sample_labels(a.n, &params.q, seed)?;
            let mut h = sample_hypergraph(&params, &z)?;
            if a.algo == SweepAlgo::BphscProjection {
                h = h.clique_projection();
            }
            let c = run_algo(&h, algo, a.groups, hh, a.rounds, seed, false, &a.solver, Some(&params))?;
            Ok(adjusted_rand_index(c.labels.labels(), z.labels())?)
        })
        .collect::<CliResult<_>>()?;
    let mut w = csv_writer(common.out.as_deref(), common.reproducible)?;
    let mut header: Vec<String> = axes.iter().map(|ax| format!("p_{}", ax.k)).collect();
    header.extend(["mean_ari", "std_ari", "trials"].map(String::from));
    w.write_record(&header)?;
    for (ci, cell) in cells.iter().enumerate() {
        let xs = &aris[ci * a.trials..(ci + 1) * a.trials];
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let std = if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt() } else { 0.0 };
        let mut row: Vec<String> = cell.iter().map(|v| v.to_string()).collect();
        row.extend([mean.to_string(), std.to_string(), a.trials.to_string()]);
        w.write_record(&row)?;
    }
    w.flush()?;
    if let Some(path) = &a.boundary {
        write_boundary(path, common.reproducible, a, &axes)?;
    }
    Ok(())
}

/// Per-size `(w, s, x)` with `w = (k−1)c_k`, `s = 2 − 2r_k` and `x` the ellipse centre.
fn ellipse_terms(report: &TheoryReport) -> BTreeMap<usize, (f64, f64, f64)> {
    report.per_size.iter().map(|t| (t.k, (t.alpha, 2.0 - 2.0 * t.r, t.ellipse_center))).collect()
}

/// Boundary curves in the plane of two gridded sizes: the `β = ±√α` lines,
/// the `λ = 1` ellipse and the `λ = ν` collision ellipse. Other sizes are held
/// at their `--p` values.
fn write_boundary(path: &Path, reproducible: bool, a: &SweepArgs, axes: &[Axis]) -> CliResult<()> {
    if axes.len() != 2 {
        return Err(CliError::Usage("--boundary needs exactly two gridded sizes".into()));
    }
    let (ka, kb) = (axes[0].k, axes[1].k);
    let over: BTreeMap<usize, f64> = [(ka, 0.5), (kb, 0.5)].into_iter().collect();
    let params = model_params(a.n, a.groups, &a.model, 0, &over)?;
    let report = theory_report(&params).map_err(|e| CliError::Usage(format!("--boundary: {e}")))?;
    let terms = ellipse_terms(&report);
    let (Some(&(wa, sa, xa)), Some(&(wb, sb, xb))) = (terms.get(&ka), terms.get(&kb)) else {
        return Err(CliError::Usage("--boundary: gridded sizes need c > 0".into()));
    };
    let alpha = report.alpha;
    let (mut beta_rest, mut lambda_rest, mut coll_rest) = (0.0, 0.0, 0.0);
    for (k, &(w, s, x)) in &terms {
        if *k != ka && *k != kb {
            let d = params.sizes[k].p - x;
            beta_rest += w * s * d;
            lambda_rest += w * s * s * d * d;
            coll_rest += w * (s * d - 0.5).powi(2);
        }
    }
    let mut wtr = csv_writer(Some(path), reproducible)?;
    wtr.write_record(["curve".to_string(), format!("p_{ka}"), format!("p_{kb}")])?;
    for (name, target) in [("beta_plus", alpha.sqrt()), ("beta_minus", -alpha.sqrt())] {
        for i in 0..=400 {
            let pa = i as f64 / 400.0;
            let pb = xb + (target - beta_rest - wa * sa * (pa - xa)) / (wb * sb);
            if (0.0..=1.0).contains(&pb) {
                wtr.write_record([name.to_string(), pa.to_string(), pb.to_string()])?;
            }
        }
    }
    let mut ellipse = |name: &str, ca: f64, cb: f64, rhs: f64| -> CliResult<()> {
        if rhs <= 0.0 {
            return Ok(());
        }
        let (ra, rb) = ((rhs / wa).sqrt() / sa, (rhs / wb).sqrt() / sb);
        for i in 0..=360 {
            let th = (i as f64).to_radians();
            wtr.write_record([name.to_string(), (ca + ra * th.cos()).to_string(), (cb + rb * th.sin()).to_string()])?;
        }
        Ok(())
    };
    ellipse("ellipse", xa, xb, 1.0 - lambda_rest)?;
    ellipse("collision", xa + 0.5 / sa, xb + 0.5 / sb, alpha / 4.0 - coll_rest)?;
    wtr.flush()?;
    Ok(())
}

pub fn estimate(common: &Common, a: &EstimateArgs) -> CliResult<()> {
    let h = load_graph(&a.graph)?;
    let z = load_labels(&a.labels, a.groups, a.graph.one_based_labels)?;
    if z.len() != h.n() {
        return Err(CliError::Data(format!("{} labels for {} nodes", z.len(), h.n())));
    }
    let est = estimate_parameters_with(&h, &z, a.eps)?;
    let mut w = csv_writer(common.out.as_deref(), common.reproducible)?;
    w.write_record(["quantity", "k", "s", "t", "value"])?;
    for (s, q) in est.q.iter().enumerate() {
        w.write_record(["q".to_string(), String::new(), s.to_string(), String::new(), q.to_string()])?;
    }
    let l = z.groups();
    for k in h.sizes() {
        let g = est.g.get(k);
        for (name, mat) in [("m", &est.m[&k]), ("c", &est.c_st[&k]), ("g", &g)] {
            for s in 0..l {
                for t in 0..l {
                    w.write_record([name.to_string(), k.to_string(), s.to_string(), t.to_string(), mat[s][t].to_string()])?;
                }
            }
        }
        for s in 0..l {
            w.write_record(["c_degree".to_string(), k.to_string(), s.to_string(), String::new(), est.c_s[&k][s].to_string()])?;
        }
        for s in 0..l {
            w.write_record(["c_diag".to_string(), k.to_string(), s.to_string(), s.to_string(), est.c_st[&k][s][s].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_cells_are_row_major() {
        let axes = [Axis { k: 2, min: 0.0, max: 1.0, steps: 2 }, Axis { k: 3, min: 0.0, max: 1.0, steps: 3 }];
        let cells = grid_cells(&axes);
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[0], vec![0.0, 0.0]);
        assert_eq!(cells[1], vec![0.0, 0.5]);
        assert_eq!(cells[5], vec![1.0, 1.0]);
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let seeds: std::collections::BTreeSet<u64> = (0..50).flat_map(|c| (0..20).map(move |t| trial_seed(7, c, t))).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn missing_p_is_a_usage_error() {
        let model = ModelArgs { c: Some(crate::args::parse_size_map("2=5").unwrap()), ..Default::default() };
        assert!(matches!(model_params(10, 2, &model, 0, &BTreeMap::new()), Err(CliError::Usage(_))));
    }
}
