//! Command-line grammar.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "hsc", version, about = "Spectral clustering experiments on nonuniform hypergraphs")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Master seed; every command is deterministic given it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output path (a directory for `sample`, a file otherwise).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Omit the generated-at comment line from CSV output.
    #[arg(long, global = true)]
    pub reproducible: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a hypergraph from the blockmodel and print its theory report.
    Sample(SampleArgs),
    /// Leading eigenvalues of B, B′ or J′.
    Spectrum(SpectrumArgs),
    /// Cluster a hypergraph with NBHSC or BPHSC.
    Cluster(ClusterArgs),
    /// Mean-ARI phase diagram over a grid of within-cluster fractions.
    Sweep(SweepArgs),
    /// Estimate q̂, ĉ_k(s,t) and G_k from a labelled hypergraph.
    Estimate(EstimateArgs),
}

/// Per-size values written as `k=v,k=v`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SizeMap(pub BTreeMap<usize, f64>);

pub fn parse_size_map(s: &str) -> Result<SizeMap, String> {
    let mut map = BTreeMap::new();
    for item in s.split(',').filter(|t| !t.trim().is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| format!("expected k=value, got `{item}`"))?;
        let k: usize = k.trim().parse().map_err(|_| format!("bad edge size `{k}`"))?;
        let v: f64 = v.trim().parse().map_err(|_| format!("bad value `{v}`"))?;
        if k < 2 {
            return Err(format!("edge size {k} < 2"));
        }
        if map.insert(k, v).is_some() {
            return Err(format!("edge size {k} given twice"));
        }
    }
    Ok(SizeMap(map))
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number `{t}`"))).collect()
}

/// Grid axis `k=min:max:steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub k: usize,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        (0..self.steps).map(|i| self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64).collect()
    }
}

/// Grid axes in flag order.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<Axis>);

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let mut axes: Vec<Axis> = Vec::new();
    for item in s.split(',').filter(|t| !t.trim().is_empty()) {
        let (k, range) = item.split_once('=').ok_or_else(|| format!("expected k=min:max:steps, got `{item}`"))?;
        let k: usize = k.trim().parse().map_err(|_| format!("bad edge size `{k}`"))?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected min:max:steps, got `{range}`"));
        }
        let min: f64 = parts[0].parse().map_err(|_| format!("bad minimum `{}`", parts[0]))?;
        let max: f64 = parts[1].parse().map_err(|_| format!("bad maximum `{}`", parts[1]))?;
        let steps: usize = parts[2].parse().map_err(|_| format!("bad step count `{}`", parts[2]))?;
        if steps == 0 {
            return Err("steps must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&min) || !(0.0..=1.0).contains(&max) || min > max {
            return Err(format!("range {min}:{max} must lie in [0, 1] with min <= max"));
        }
        if axes.iter().any(|a| a.k == k) {
            return Err(format!("edge size {k} gridded twice"));
        }
        axes.push(Axis { k, min, max, steps });
    }
    if axes.is_empty() {
        return Err("empty grid".into());
    }
    Ok(Grid(axes))
}

/// Blockmodel flags shared by `sample`, `sweep` and the known-parameter modes.
#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// Mean k-degree per size, e.g. `2=5,3=5`; unlisted sizes are absent.
    #[arg(long, value_parser = parse_size_map)]
    pub c: Option<SizeMap>,
    /// Within-cluster fraction per size, e.g. `2=0.9,3=0.1`.
    #[arg(long, value_parser = parse_size_map)]
    pub p: Option<SizeMap>,
    /// Group proportions, e.g. `0.5,0.5` (default balanced).
    #[arg(long, value_parser = parse_list)]
    pub q: Option<Vec<f64>>,
    /// Use round(n·c_k/k) edges per size instead of a Poisson count.
    #[arg(long)]
    pub fixed_count: bool,
}

/// Input hypergraph flags.
#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// Hyperedge list: one edge per line, 1-based node ids.
    #[arg(long)]
    pub hypergraph: PathBuf,
    /// Number of nodes (default: largest id).
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Drop repeated edges before building operators.
    #[arg(long)]
    pub dedup: bool,
    /// Label files use 1-based labels.
    #[arg(long)]
    pub one_based_labels: bool,
}

/// Eigensolver flags.
#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Restart budget.
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    /// Accept unconverged Ritz pairs instead of failing.
    #[arg(long)]
    pub best_effort: bool,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub groups: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Fixed contiguous equal-size groups instead of sampled labels.
    #[arg(long)]
    pub blocks: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operator {
    B,
    Bprime,
    Jprime,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum)]
    pub operator: Operator,
    /// Number of leading eigenpairs.
    #[arg(long, default_value_t = 10)]
    pub h: usize,
    /// Full dense spectrum (small inputs only).
    #[arg(long)]
    pub dense: bool,
    /// Labels used to estimate G_k for J′.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub groups: Option<usize>,
    /// Theory G_k from two balanced groups with these `--c`/`--p`.
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also write the scree table (sorted |λ|) to this file.
    #[arg(long)]
    pub scree: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    Nbhsc,
    Bphsc,
    BphscKnown,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum, default_value = "nbhsc")]
    pub algo: Algo,
    #[arg(long)]
    pub groups: usize,
    /// Leading eigenpairs (default: the group count for NBHSC, 30 for BPHSC).
    #[arg(long)]
    pub h: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub rounds: usize,
    /// Ground-truth labels for the ARI column.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// NBHSC: keep only real eigenpairs.
    #[arg(long)]
    pub real_only: bool,
    /// Run on the clique projection instead (pairwise baseline).
    #[arg(long)]
    pub project: bool,
    /// Known-parameter mode: generating `--c`/`--p` of two balanced groups.
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the metrics row here instead of stdout.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAlgo {
    Nbhsc,
    Bphsc,
    BphscKnown,
    /// BPHSC on the clique projection.
    BphscProjection,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub groups: usize,
    /// Fixed parameters; gridded sizes ignore their `--p` entry.
    #[command(flatten)]
    pub model: ModelArgs,
    /// Axes `k=min:max:steps`, e.g. `2=0:1:11,3=0:1:11`.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, value_enum, default_value = "nbhsc")]
    pub algo: SweepAlgo,
    #[arg(long)]
    pub h: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub rounds: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Detectability boundary curves (two gridded sizes, two balanced groups).
    #[arg(long)]
    pub boundary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub groups: Option<usize>,
    /// Pseudocount in q̂.
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_map_grammar() {
        let m = parse_size_map("2=5,3=2.5").unwrap();
        assert_eq!(m.0.get(&2), Some(&5.0));
        assert_eq!(m.0.get(&3), Some(&2.5));
        assert!(parse_size_map("1=5").is_err());
        assert!(parse_size_map("2=5,2=3").is_err());
        assert!(parse_size_map("2:5").is_err());
    }

    #[test]
    fn grid_grammar() {
        let g = parse_grid("2=0:1:11,3=0.2:0.4:3").unwrap();
        assert_eq!(g.0[0].values().len(), 11);
        assert_eq!(g.0[0].values()[10], 1.0);
        assert_eq!(g.0[1].values(), vec![0.2, 0.30000000000000004, 0.4]);
        assert!(parse_grid("2=0:1:0").is_err());
        assert!(parse_grid("2=0:2:3").is_err());
    }

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
