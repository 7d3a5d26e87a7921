use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Subcommand};
use serde_json::{json, Map, Value};

use expgraph::bounds::{
    bernstein_bound, concentration_bound, concentration_bound_graph, BernsteinInput, ConcentrationInput,
    MixingEnvelope, DEFAULT_ETA, DEFAULT_SCHEDULE,
};
use expgraph::embed::{distortion_constant, pigeonhole_applies, refutation_witness_with, LatticeMap};
use expgraph::fields::{sample_field_with, FieldKind, FieldSpec};
use expgraph::paircount::{count_pairs_closed, diameter};
use expgraph::par::{with_workers, Exec};
use expgraph::rng::CounterRng;
use expgraph::tree::{GraphSpec, NodeId, Region, Tree};
use expgraph::verify::{mc_tail, FiniteSpace, TailOptions};

use crate::config::{read_file, Settings};
use crate::error::{Blame, CliError};
use crate::output::{Format, Sink};

/// Flags shared by every subcommand. Each may also be set in the config file.
#[derive(Debug, Args)]
pub struct Common {
    /// File of `key = value` lines; flags override its entries.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for every random draw.
    #[arg(long)]
    seed: Option<u64>,
    /// Threads for Monte Carlo work; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

/// Declares a subcommand whose keys are settable from the config file or as
/// `--key value` flags.
macro_rules! keyed_args {
    ($(#[$m:meta])* $name:ident { $($(#[$km:meta])* $key:ident),* $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Args)]
        pub struct $name {
            #[command(flatten)]
            common: Common,
            $($(#[$km])* #[arg(long, value_name = "VALUE")] $key: Option<String>,)*
        }

        impl $name {
            const KEYS: &'static [&'static str] = &[$(stringify!($key)),*];

            fn settings(&self) -> Result<Settings, CliError> {
                let mut s = match &self.common.config {
                    Some(path) => Settings::load(path, Self::KEYS)?,
                    None => Settings::default(),
                };
                $(if let Some(v) = &self.$key { s.set(stringify!($key), v.clone()); })*
                let c = &self.common;
                if let Some(v) = c.seed { s.set("seed", v.to_string()); }
                if let Some(v) = c.workers { s.set("workers", v.to_string()); }
                if let Some(v) = &c.out { s.set("out", v.display().to_string()); }
                if let Some(v) = c.format { s.set("format", format!("{v:?}").to_lowercase()); }
                Ok(s)
            }
        }
    };
}

keyed_args!(
    /// Count ordered node pairs at each tree distance inside a P-generation subtree (CSV rate,gens,dist,count).
    CountPairs {
        /// Offspring per node (≥ 2).
        rate,
        /// Number of generations P (≥ 1).
        gens,
        /// Single distance L; every L in 1..=2(P−1) when absent.
        dist,
    }
);

keyed_args!(
    /// Evaluate the strip tail bound at fixed block parameters.
    BernsteinBound {
        rate,
        /// Generation where the strip starts.
        level,
        /// Generations per strip subtree.
        depth,
        /// Big-block length.
        p2,
        /// Small-block length.
        q2,
        beta,
        /// Threshold; a comma-separated list gives one record per value.
        epsilon,
        /// Almost-sure bound C on |Z|.
        amplitude,
        /// Variance bound.
        sigma2,
        /// zero | m_dependent:M | super_exponential:S[:P] | table:v1,v2,...
        envelope,
    }
);

keyed_args!(
    /// Evaluate the tail bound for the normalized sum over the first generations.
    ConcentrationBound {
        rate,
        /// Generation count; a comma-separated list sweeps it.
        levels,
        /// Threshold; a comma-separated list sweeps it.
        epsilon,
        amplitude,
        sigma2,
        envelope,
        /// Wedge exponent (default 0.5).
        eta,
        /// Block-length constant (default 1).
        schedule,
        /// Extra edges, one `j k j' k'` per line; the envelope is then read in graph distance.
        edges,
    }
);

keyed_args!(
    /// Monte Carlo tail frequencies against the matching bound (JSON per threshold).
    McTail {
        rate,
        /// independent | m_dependent:M | branching_ar:A
        field,
        amplitude,
        /// strip:LEVEL:GENS | generations:COUNT
        region,
        /// Comma-separated thresholds.
        epsilon,
        replicates,
        eta,
        schedule,
    }
);

keyed_args!(
    /// Check the covariance inequality on random finite spaces (JSON per space).
    VerifyDavydov {
        /// Number of spaces (default 1000).
        spaces,
        /// Maximum outcomes per space (default 64).
        outcomes,
        /// Maximum atoms per partition (default 8).
        atoms,
        /// Exponents with 1/p + 1/q + 1/r = 1 (defaults 4, 4, 2).
        p,
        q,
        r,
    }
);

keyed_args!(
    /// Test a lattice map of the tree for bounded distortion.
    EmbeddingCheck {
        rate,
        /// Lattice dimension N.
        dim,
        /// Distortion constant C to refute.
        constant,
        /// Deepest generation searched.
        kmax,
        /// Map file with lines `j k x1 … xN`; the row layout when absent.
        map,
        /// Extra edges, one `j k j' k'` per line, for the distortion report.
        edges,
    }
);

keyed_args!(
    /// Sample one replicate of a field over a region (CSV j,k,value).
    Simulate {
        rate,
        field,
        amplitude,
        /// strip:LEVEL:GENS | generations:COUNT | subtree:J:K:GENS
        region,
        /// Replicate index (default 0).
        replicate,
    }
);

#[derive(Debug, Subcommand)]
pub enum Command {
    CountPairs(CountPairs),
    BernsteinBound(BernsteinBound),
    ConcentrationBound(ConcentrationBound),
    McTail(McTail),
    VerifyDavydov(VerifyDavydov),
    EmbeddingCheck(EmbeddingCheck),
    Simulate(Simulate),
}

/// How a successful run ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    /// A certified bound or inequality was contradicted by the data.
    Violation(String),
}

pub fn dispatch(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::CountPairs(a) => count_pairs(&a.settings()?),
        Command::BernsteinBound(a) => bernstein(&a.settings()?),
        Command::ConcentrationBound(a) => concentration(&a.settings()?),
        Command::McTail(a) => tail(&a.settings()?),
        Command::VerifyDavydov(a) => davydov(&a.settings()?),
        Command::EmbeddingCheck(a) => embedding(&a.settings()?),
        Command::Simulate(a) => simulate(&a.settings()?),
    }
}

fn sink(s: &Settings, default: Format) -> Result<Sink, CliError> {
    let out: Option<PathBuf> = s.get("out")?;
    Sink::open(out.as_deref(), s.or("format", default)?)
}

fn record(value: impl serde::Serialize) -> Map<String, Value> {
    match serde_json::to_value(value).expect("output types serialize") {
        Value::Object(m) => m,
        other => panic!("record is not an object: {other}"),
    }
}

fn tree(s: &Settings) -> Result<Tree, CliError> {
    Tree::new(s.require("rate")?).blame("rate")
}

fn graph(s: &Settings, tree: Tree) -> Result<GraphSpec, CliError> {
    match s.get::<PathBuf>("edges")? {
        Some(path) => GraphSpec::parse_edge_list(tree, &read_file(&path)?).blame("edges"),
        None => Ok(GraphSpec::tree_only(tree)),
    }
}

fn envelope(s: &Settings) -> Result<MixingEnvelope, CliError> {
    s.require("envelope")
}

fn field(s: &Settings) -> Result<FieldSpec, CliError> {
    let kind: FieldKind = s.require("field")?;
    FieldSpec::new(kind, s.require("amplitude")?, s.or("seed", 0)?).blame("field")
}

/// `strip:LEVEL:GENS`, `generations:COUNT` or `subtree:J:K:GENS`.
struct RegionArg(Region);

impl FromStr for RegionArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or("");
        let nums = parts.map(|x| x.parse::<u64>().map_err(|e| format!("{x:?}: {e}"))).collect::<Result<Vec<_>, _>>()?;
        let region = match (kind, nums.as_slice()) {
            ("strip", &[level, gens]) => Region::Strip { level, gens },
            ("generations", &[count]) => Region::Generations { count },
            ("subtree", &[j, k, gens]) => Region::Subtree { root: NodeId::new(j, k).map_err(|e| e.to_string())?, gens },
            _ => return Err("expected strip:LEVEL:GENS, generations:COUNT or subtree:J:K:GENS".into()),
        };
        Ok(RegionArg(region))
    }
}

fn count_pairs(s: &Settings) -> Result<Outcome, CliError> {
    let rate: u64 = s.require("rate")?;
    let gens: u64 = s.require("gens")?;
    let dists = match s.get::<u64>("dist")? {
        Some(d) => vec![d],
        None => (1..=diameter(gens)).collect(),
    };
    let mut out = sink(s, Format::Csv)?;
    for dist in dists {
        let n = count_pairs_closed(rate, gens, dist)?;
        out.emit(&record(json!({ "rate": rate, "gens": gens, "dist": dist, "count": n.value().to_string() })))?;
    }
    out.finish()?;
    Ok(Outcome::Clean)
}

fn bernstein(s: &Settings) -> Result<Outcome, CliError> {
    let template = BernsteinInput {
        rate: s.require("rate")?,
        level: s.require("level")?,
        depth: s.require("depth")?,
        p2: s.require("p2")?,
        q2: s.require("q2")?,
        beta: s.require("beta")?,
        epsilon: 0.0,
        amplitude: s.require("amplitude")?,
        sigma2: s.require("sigma2")?,
        envelope: envelope(s)?,
    };
    let eps: Vec<f64> = s.require_list("epsilon")?;
    let mut out = sink(s, Format::Json)?;
    for epsilon in eps {
        let b = bernstein_bound(&BernsteinInput { epsilon, ..template.clone() })?;
        out.emit(&record(&b))?;
    }
    out.finish()?;
    Ok(Outcome::Clean)
}

fn concentration(s: &Settings) -> Result<Outcome, CliError> {
    let g = graph(s, tree(s)?)?;
    let levels: Vec<u64> = s.require_list("levels")?;
    let eps: Vec<f64> = s.require_list("epsilon")?;
    let (amplitude, sigma2, env) = (s.require("amplitude")?, s.require("sigma2")?, envelope(s)?);
    let (eta, schedule) = (s.or("eta", DEFAULT_ETA)?, s.or("schedule", DEFAULT_SCHEDULE)?);
    let mut out = sink(s, Format::Json)?;
    for &l in &levels {
        for &epsilon in &eps {
            let input = ConcentrationInput {
                eta,
                schedule,
                ..ConcentrationInput::new(g.tree().rate(), l, epsilon, amplitude, sigma2, env.clone())
            };
            let b = if g.extra_edges().is_empty() {
                concentration_bound(&input)?
            } else {
                concentration_bound_graph(&g, &input)?
            };
            out.emit(&record(&b))?;
        }
    }
    out.finish()?;
    Ok(Outcome::Clean)
}

fn tail(s: &Settings) -> Result<Outcome, CliError> {
    let tree = tree(s)?;
    let spec = field(s)?;
    let RegionArg(region) = s.require("region")?;
    let eps: Vec<f64> = s.require_list("epsilon")?;
    let replicates: u64 = s.require("replicates")?;
    let options = TailOptions {
        eta: s.or("eta", DEFAULT_ETA)?,
        schedule: s.or("schedule", DEFAULT_SCHEDULE)?,
        exec: Exec::Parallel,
        ..TailOptions::default()
    };
    let workers: usize = s.or("workers", 0)?;
    let estimates = with_workers(workers, || mc_tail(&spec, &region, &tree, &eps, replicates, &options))?;
    let mut out = sink(s, Format::Json)?;
    let mut violated = Vec::new();
    for e in &estimates {
        if e.violated == Some(true) {
            violated.push(format!("epsilon = {}: ci_upper_99 {} > bound {}", e.epsilon, e.ci_upper_99, e.log_bound.exp()));
        }
        out.emit(&record(e))?;
    }
    out.finish()?;
    Ok(if violated.is_empty() { Outcome::Clean } else { Outcome::Violation(violated.join("; ")) })
}

fn davydov(s: &Settings) -> Result<Outcome, CliError> {
    let spaces: u64 = s.or("spaces", 1000)?;
    let outcomes: usize = s.or("outcomes", 64)?;
    let atoms: usize = s.or("atoms", 8)?;
    if outcomes < 2 {
        return Err(CliError::key("outcomes", "must be ≥ 2"));
    }
    if atoms < 1 {
        return Err(CliError::key("atoms", "must be ≥ 1"));
    }
    let (p, q, r): (f64, f64, f64) = (s.or("p", 4.0)?, s.or("q", 4.0)?, s.or("r", 2.0)?);
    let seed: u64 = s.or("seed", 0)?;
    let mut out = sink(s, Format::Json)?;
    let mut failed = Vec::new();
    for i in 0..spaces {
        let space = FiniteSpace::random(&mut CounterRng::new(seed, i), outcomes, atoms);
        let check = space.davydov_check(p, q, r)?;
        if !check.holds {
            failed.push(i.to_string());
        }
        let mut rec = Map::new();
        rec.insert("space".into(), json!(i));
        rec.insert("outcomes".into(), json!(space.outcomes()));
        rec.extend(record(check));
        out.emit(&rec)?;
    }
    out.finish()?;
    Ok(if failed.is_empty() { Outcome::Clean } else { Outcome::Violation(format!("inequality fails on spaces {}", failed.join(", "))) })
}

fn embedding(s: &Settings) -> Result<Outcome, CliError> {
    let tree = tree(s)?;
    let rate = tree.rate();
    let dim: usize = s.require("dim")?;
    let constant: f64 = s.require("constant")?;
    let kmax: u64 = s.require("kmax")?;
    let map = match s.get::<PathBuf>("map")? {
        Some(path) => LatticeMap::parse(dim, &read_file(&path)?).blame("map")?,
        None => LatticeMap::row_layout(rate, dim, kmax).blame("kmax")?,
    };
    let witness = refutation_witness_with(Exec::Sequential, &tree, &map, constant, kmax).blame("kmax")?;
    let distortion = distortion_constant(&graph(s, tree)?, &map);
    let pigeonhole_from = (1..=kmax).find(|&k| pigeonhole_applies(rate, dim, constant, k));
    let mut out = sink(s, Format::Json)?;
    out.emit(&record(json!({
        "rate": rate,
        "dim": dim,
        "constant": constant,
        "kmax": kmax,
        "points": map.len(),
        "distortion": distortion,
        "pigeonhole_from": pigeonhole_from,
        "witness": witness,
    })))?;
    out.finish()?;
    Ok(Outcome::Clean)
}

fn simulate(s: &Settings) -> Result<Outcome, CliError> {
    let tree = tree(s)?;
    let spec = field(s)?;
    let RegionArg(region) = s.require("region")?;
    let replicate: u64 = s.or("replicate", 0)?;
    let workers: usize = s.or("workers", 0)?;
    let sample = with_workers(workers, || sample_field_with(Exec::Parallel, &spec, &region, &tree, replicate))
        .blame("region")?;
    let mut out = sink(s, Format::Csv)?;
    for (v, value) in sample.iter() {
        out.emit(&record(json!({ "j": v.generation(), "k": v.index(), "value": value })))?;
    }
    out.finish()?;
    Ok(Outcome::Clean)
}
