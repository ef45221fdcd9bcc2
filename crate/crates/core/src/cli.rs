//! Command-line front end: argument and config handling, dispatch, and JSON
//! output.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::bernoulli::Kernel;
use crate::error::{Error, Result};
use crate::model::{load_database, Point, UncertainDatabase, UncertainQuery};
use crate::query::{
    object_probabilities, range_count_distribution_with, rank_distribution_with, select,
    ProbabilisticPredicate, RangeQuery,
};
use crate::representatives::{
    cluster_representatives, estimate_result_probabilities, max_cover_representatives,
    sample_worlds_with_query, ClusterMode, PossibleResult, Representative,
};
use crate::trajectory::{
    load_trajectories, maximal_sets, pc_tau_nn_with, pcnn_query_with, Backend as PcnnBackend,
    PcnnOptions, PfannEvaluator, Timestamp, TimestampSet,
};
use crate::worlds::{
    enumerate_worlds, result_based_uncertain, ObjectProbabilities, ResultDistribution,
    SpatialPredicate,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Worlds,
    Range,
    Knn,
    Topk,
    Rank,
    Reps,
    Pcnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    Object,
    Result,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Exact,
    Pbr,
    Gf,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepMode {
    Cover,
    Complete,
    TauMax,
}

/// Everything a run needs. Every field may come from the command line or
/// from a JSON config file of the same shape; command-line values win.
#[derive(Debug, Clone, Default, PartialEq, Parser, Serialize, Deserialize)]
#[command(
    name = "uspq",
    version,
    about = "Probabilistic spatial queries on uncertain databases"
)]
#[serde(default, deny_unknown_fields, rename_all = "snake_case")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Option<Command>,

    /// JSON file with default values for any of these options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub dataset: Option<PathBuf>,

    #[arg(long, allow_negative_numbers = true)]
    pub qx: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    pub qy: Option<f64>,

    /// Use this object of the dataset as an uncertain query.
    #[arg(long)]
    pub query_object: Option<String>,

    /// Restrict `rank` or `pcnn` to one object.
    #[arg(long)]
    pub object: Option<String>,

    #[arg(long)]
    pub epsilon: Option<f64>,

    /// k of a kNN query; for `topk`, the number of results.
    #[arg(long)]
    pub k: Option<usize>,

    /// k of the kNN predicate ranked by `topk`.
    #[arg(long)]
    pub nn: Option<usize>,

    #[arg(long)]
    pub tau: Option<f64>,

    #[arg(long)]
    pub alpha: Option<f64>,

    #[arg(long)]
    pub tau_max: Option<f64>,

    #[arg(long)]
    pub n_reps: Option<usize>,

    /// Fixed cluster count for clustering representatives.
    #[arg(long)]
    pub clusters: Option<usize>,

    #[arg(long)]
    pub samples: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, value_enum)]
    pub semantics: Option<Semantics>,

    #[arg(long, value_enum)]
    pub backend: Option<BackendChoice>,

    #[arg(long, value_enum)]
    pub mode: Option<RepMode>,

    /// PCNN query interval; defaults to every timestamp.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub interval: Option<Vec<Timestamp>>,

    /// Report only maximal timestamp sets.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub maximal: bool,

    #[arg(long)]
    pub output: Option<PathBuf>,
}

macro_rules! prefer {
    ($self:ident, $base:ident, $($field:ident),*) => {
        RunConfig {
            $($field: $self.$field.or($base.$field),)*
            config: $self.config,
            maximal: $self.maximal || $base.maximal,
        }
    };
}

impl RunConfig {
    /// Fills unset fields from `base`.
    pub fn merged_with(self, base: RunConfig) -> RunConfig {
        prefer!(
            self,
            base,
            command,
            dataset,
            qx,
            qy,
            query_object,
            object,
            epsilon,
            k,
            nn,
            tau,
            alpha,
            tau_max,
            n_reps,
            clusters,
            samples,
            seed,
            semantics,
            backend,
            mode,
            interval,
            output
        )
    }

    /// Merges in the file named by `--config`, if any.
    pub fn resolve(self) -> Result<RunConfig> {
        match &self.config {
            None => Ok(self),
            Some(path) => {
                let base: RunConfig = serde_json::from_reader(open(path)?)
                    .map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))?;
                Ok(self.merged_with(base))
            }
        }
    }

    fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(0.95)
    }

    fn samples(&self) -> usize {
        self.samples.unwrap_or(10_000)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(42)
    }

    fn kernel(&self) -> Kernel {
        match self.backend {
            Some(BackendChoice::Gf) => Kernel::GeneratingFunction,
            _ => Kernel::Recurrence,
        }
    }

    fn sampled(&self) -> bool {
        self.backend == Some(BackendChoice::Sampled)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn missing(flag: &str) -> Error {
    Error::InvalidArgument(format!("--{flag} is required"))
}

/// Rounds to 12 significant digits so output is stable across platforms.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn num(x: f64) -> Value {
    json!(round_sig12(x))
}

fn probabilities_json(probs: &ObjectProbabilities<f64>) -> Value {
    Value::Object(
        probs
            .iter()
            .map(|(id, p)| (id.to_string(), num(p)))
            .collect(),
    )
}

fn distribution_json(rd: &ResultDistribution<f64>) -> Value {
    let mut entries: Vec<_> = rd.iter().collect();
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(b.0)));
    Value::Array(
        entries
            .into_iter()
            .map(|(r, p)| json!({"result": r, "p": num(p)}))
            .collect(),
    )
}

fn load(path: &Path) -> Result<UncertainDatabase<f64>> {
    load_database(open(path)?)
}

/// Loads the dataset and the query: either the point `--qx/--qy` or an
/// object split off the dataset by `--query-object`.
fn database_and_query(cfg: &RunConfig) -> Result<(UncertainDatabase<f64>, UncertainQuery<f64>)> {
    let db = load(cfg.dataset.as_deref().ok_or_else(|| missing("dataset"))?)?;
    if let Some(id) = &cfg.query_object {
        let (q, rest) = db.split_off(id)?;
        return Ok((rest, UncertainQuery::from_object(&q)?));
    }
    match (cfg.qx, cfg.qy) {
        (Some(x), Some(y)) => Ok((db, UncertainQuery::certain(Point::new(x, y)))),
        _ => Err(Error::InvalidArgument(
            "a query is required: --qx and --qy, or --query-object".into(),
        )),
    }
}

/// Range predicate from `--epsilon`, otherwise kNN with the given `k`.
fn spatial_predicate(cfg: &RunConfig, k: Option<usize>) -> Result<SpatialPredicate<f64>> {
    match (cfg.epsilon, k) {
        (Some(e), _) => SpatialPredicate::range(e),
        (None, Some(k)) => SpatialPredicate::knn(k),
        (None, None) => Err(Error::InvalidArgument(
            "--epsilon or a kNN k is required".into(),
        )),
    }
}

/// Object-based probabilities. Exact kernels mix the per-position results of
/// an uncertain query by its probabilities; `sampled` estimates them.
fn object_probs(
    cfg: &RunConfig,
    db: &UncertainDatabase<f64>,
    query: &UncertainQuery<f64>,
    predicate: &SpatialPredicate<f64>,
) -> Result<ObjectProbabilities<f64>> {
    if cfg.sampled() {
        let n = cfg.samples();
        let x = sample_worlds_with_query(db, query, n, cfg.seed())?;
        let pr = estimate_result_probabilities(db, &x, query, predicate)?;
        return Ok(db
            .objects()
            .iter()
            .map(|o| {
                let support: usize = pr
                    .iter()
                    .filter(|r| r.result.contains(o.id()))
                    .map(|r| r.support)
                    .sum();
                (o.id().to_string(), support as f64 / n as f64)
            })
            .collect());
    }
    let mut sums: BTreeMap<String, f64> = db
        .objects()
        .iter()
        .map(|o| (o.id().to_string(), 0.0))
        .collect();
    for (q, qp) in query.alternatives() {
        for (id, p) in object_probabilities(db, q, predicate, cfg.kernel())?.iter() {
            *sums.get_mut(id).expect("same objects") += qp * p;
        }
    }
    Ok(sums.into_iter().collect())
}

fn worlds_command(cfg: &RunConfig) -> Result<Value> {
    let db = load(cfg.dataset.as_deref().ok_or_else(|| missing("dataset"))?)?;
    let mut worlds = Vec::new();
    let mut total = 0.0;
    for w in enumerate_worlds(&db)? {
        total += w.prob();
        let choices: Map<String, Value> = w
            .choice_map(&db)
            .into_iter()
            .map(|(id, c)| (id.to_string(), json!(c)))
            .collect();
        worlds.push(json!({"choices": choices, "p": num(w.prob())}));
    }
    Ok(json!({"count": worlds.len(), "total": num(total), "worlds": worlds}))
}

fn range_command(cfg: &RunConfig) -> Result<Value> {
    let (db, query) = database_and_query(cfg)?;
    let epsilon = cfg.epsilon.ok_or_else(|| missing("epsilon"))?;
    let predicate = SpatialPredicate::range(epsilon)?;
    if cfg.semantics == Some(Semantics::Result) {
        return Ok(
            json!({"results": distribution_json(&result_based_uncertain(&db, &query, &predicate)?)}),
        );
    }
    let mut counts = vec![0.0; db.len() + 1];
    for (q, qp) in query.alternatives() {
        let dist = range_count_distribution_with(&db, &RangeQuery::new(*q, epsilon)?, cfg.kernel());
        for (slot, m) in counts.iter_mut().zip(dist.mass()) {
            *slot += qp * m;
        }
    }
    let probs = object_probs(cfg, &db, &query, &predicate)?;
    let mut out = json!({
        "count_distribution": counts.into_iter().map(num).collect::<Vec<_>>(),
        "probabilities": probabilities_json(&probs),
    });
    if let Some(tau) = cfg.tau {
        out["result"] = json!(select(&probs, &ProbabilisticPredicate::threshold(tau)?));
    }
    Ok(out)
}

fn knn_command(cfg: &RunConfig) -> Result<Value> {
    let (db, query) = database_and_query(cfg)?;
    let predicate = SpatialPredicate::knn(cfg.k.ok_or_else(|| missing("k"))?)?;
    if cfg.semantics == Some(Semantics::Result) {
        return Ok(
            json!({"results": distribution_json(&result_based_uncertain(&db, &query, &predicate)?)}),
        );
    }
    let probs = object_probs(cfg, &db, &query, &predicate)?;
    let mut out = json!({"probabilities": probabilities_json(&probs)});
    if let Some(tau) = cfg.tau {
        out["result"] = json!(select(&probs, &ProbabilisticPredicate::threshold(tau)?));
    }
    Ok(out)
}

fn topk_command(cfg: &RunConfig) -> Result<Value> {
    let (db, query) = database_and_query(cfg)?;
    let k = cfg.k.ok_or_else(|| missing("k"))?;
    if k > db.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds {} objects",
            db.len()
        )));
    }
    let predicate = spatial_predicate(cfg, cfg.nn)?;
    let probs = object_probs(cfg, &db, &query, &predicate)?;
    Ok(json!({
        "probabilities": probabilities_json(&probs),
        "result": select(&probs, &ProbabilisticPredicate::top_k(k)?),
    }))
}

fn rank_command(cfg: &RunConfig) -> Result<Value> {
    let (db, query) = database_and_query(cfg)?;
    let ids: Vec<String> = match &cfg.object {
        Some(id) => vec![id.clone()],
        None => db.objects().iter().map(|o| o.id().to_string()).collect(),
    };
    let mut ranks = Map::new();
    for id in ids {
        let mut mass = vec![0.0; db.len()];
        for (q, qp) in query.alternatives() {
            let dist = rank_distribution_with(&db, q, &id, cfg.kernel())?;
            for (slot, m) in mass.iter_mut().zip(dist.mass()) {
                *slot += qp * m;
            }
        }
        ranks.insert(id, Value::Array(mass.into_iter().map(num).collect()));
    }
    Ok(json!({"ranks": ranks}))
}

fn representative_json(r: &Representative<f64>) -> Value {
    json!({
        "result": r.result,
        "tau": num(r.tau),
        "phi": num(r.phi),
        "alpha": num(r.alpha),
        "support": r.support,
    })
}

fn reps_command(cfg: &RunConfig) -> Result<Value> {
    let (db, query) = database_and_query(cfg)?;
    let predicate = spatial_predicate(cfg, cfg.k)?;
    let n = cfg.samples();
    let seed = cfg.seed();
    let x = sample_worlds_with_query(&db, &query, n, seed)?;
    let pr: Vec<PossibleResult> = estimate_result_probabilities(&db, &x, &query, &predicate)?;
    let alpha = cfg.alpha();
    let reps = match cfg.mode.unwrap_or(RepMode::Cover) {
        RepMode::Cover => max_cover_representatives(
            &pr,
            cfg.tau.ok_or_else(|| missing("tau"))?,
            cfg.n_reps.unwrap_or(3),
            alpha,
        )?,
        RepMode::Complete => {
            cluster_representatives(&pr, alpha, ClusterMode::Complete, cfg.clusters)?
        }
        RepMode::TauMax => cluster_representatives(
            &pr,
            alpha,
            ClusterMode::TauMax(cfg.tau_max.ok_or_else(|| missing("tau-max"))?),
            cfg.clusters,
        )?,
    };
    Ok(json!({
        "representatives": reps.iter().map(representative_json).collect::<Vec<_>>(),
        "samples": n,
        "seed": seed,
    }))
}

fn sets_json(sets: Vec<TimestampSet<f64>>, maximal: bool) -> Value {
    let sets = if maximal { maximal_sets(&sets) } else { sets };
    Value::Array(
        sets.into_iter()
            .map(|s| json!({"timestamps": s.timestamps, "p": num(s.probability)}))
            .collect(),
    )
}

fn pcnn_command(cfg: &RunConfig) -> Result<Value> {
    let path = cfg.dataset.as_deref().ok_or_else(|| missing("dataset"))?;
    let db = load_trajectories(open(path)?)?;
    let tau = cfg.tau.ok_or_else(|| missing("tau"))?;
    let interval = cfg
        .interval
        .clone()
        .unwrap_or_else(|| db.timestamps().to_vec());
    let backend = if cfg.sampled() {
        PcnnBackend::Sampled {
            samples: cfg.samples(),
            seed: cfg.seed(),
        }
    } else {
        PcnnBackend::Exact
    };
    let evaluator = PfannEvaluator::new(&db, backend)?;
    let options = PcnnOptions::default();
    let mut out = Map::new();
    match &cfg.object {
        Some(id) => {
            let sets = pc_tau_nn_with(&db, &evaluator, id, &interval, tau, options)?;
            if !sets.is_empty() {
                out.insert(id.clone(), sets_json(sets, cfg.maximal));
            }
        }
        None => {
            for (id, sets) in pcnn_query_with(&db, &evaluator, &interval, tau, options)? {
                out.insert(id, sets_json(sets, cfg.maximal));
            }
        }
    }
    Ok(Value::Object(out))
}

/// Runs the configured command and returns its JSON document.
pub fn run(cfg: &RunConfig) -> Result<String> {
    let value = match cfg
        .command
        .ok_or_else(|| Error::InvalidArgument("no command given".into()))?
    {
        Command::Worlds => worlds_command(cfg)?,
        Command::Range => range_command(cfg)?,
        Command::Knn => knn_command(cfg)?,
        Command::Topk => topk_command(cfg)?,
        Command::Rank => rank_command(cfg)?,
        Command::Reps => reps_command(cfg)?,
        Command::Pcnn => pcnn_command(cfg)?,
    };
    Ok(value.to_string())
}

/// Exit status for an error: 2 for size caps, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_cap_exceeded() {
        2
    } else {
        1
    }
}

/// Single-line JSON error document.
pub fn error_json(message: &str) -> String {
    json!({"error": message}).to_string()
}

/// Resolves the config, runs it and writes the document to `--output` or
/// standard output.
pub fn execute(cfg: RunConfig) -> Result<()> {
    let cfg = cfg.resolve()?;
    let doc = run(&cfg)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, doc + "\n")?,
        None => println!("{doc}"),
    }
    Ok(())
}
