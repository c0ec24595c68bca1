//! Run configuration: defaults, TOML config files with one flat section per
//! command, command-line overrides (flags win), and the embedded-config
//! provenance mechanism — every artifact carries its fully resolved
//! `RunConfig` as a `#config:` header line, and `--config <artifact>`
//! reproduces the run from it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Fully resolved parameters of one command invocation. Serialized as a
/// single JSON line into every output artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub matrix: Option<String>,
    pub labels: Option<String>,
    pub corpus: Option<String>,
    pub text_field: String,
    pub label_field: String,
    pub min_count: usize,
    /// Positive class name; defaults to the first label in the vocabulary.
    pub positive: Option<String>,
    pub subsample: usize,
    pub seeds: usize,
    pub seed_base: u64,
    pub k_stride: usize,
    pub ns: Vec<usize>,
    pub folds: usize,
    pub lambda_grid: Vec<f64>,
    pub metric: String,
    pub test_matrix: Option<String>,
    pub test_labels: Option<String>,
    pub test_fraction: Option<f64>,
    pub dendrogram: Option<String>,
    pub pairs: Option<String>,
    pub cells: Option<String>,
    pub out_dir: String,
    /// 0 = use available parallelism.
    pub workers: usize,
    pub log_x: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            matrix: None,
            labels: None,
            corpus: None,
            text_field: "text".into(),
            label_field: "label".into(),
            min_count: 2,
            positive: None,
            subsample: 10_000,
            seeds: 5,
            seed_base: 0,
            k_stride: 1,
            ns: (1..=10).map(|i| i * 100).collect(),
            folds: 5,
            lambda_grid: (-4..=2).map(|e| 10f64.powi(e)).collect(),
            metric: "accuracy".into(),
            test_matrix: None,
            test_labels: None,
            test_fraction: None,
            dendrogram: None,
            pairs: None,
            cells: None,
            out_dir: ".".into(),
            workers: 0,
            log_x: false,
        }
    }
}

impl RunConfig {
    /// Single-line JSON for artifact headers.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Command-line flags shared by every subcommand; `None` means "not given".
#[derive(Debug, Default, clap::Args)]
pub struct CliArgs {
    /// TOML config file, or a previous artifact with an embedded config
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dense matrix input (.npy or CSV)
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Label file (one label per line, or id,label CSV)
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// JSONL corpus input
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// JSON field holding the document text
    #[arg(long)]
    pub text_field: Option<String>,
    /// JSON field holding the label
    #[arg(long)]
    pub label_field: Option<String>,
    /// Minimum total term count for the bag-of-words vocabulary
    #[arg(long)]
    pub min_count: Option<usize>,
    /// Positive class name (default: first label in the vocabulary)
    #[arg(long)]
    pub positive: Option<String>,
    /// Subsample size per seed
    #[arg(long)]
    pub subsample: Option<usize>,
    /// Number of subsample seeds
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Base value all seeds are derived from
    #[arg(long)]
    pub seed_base: Option<u64>,
    /// Evaluate DBI every k-th level
    #[arg(long)]
    pub k_stride: Option<usize>,
    /// Training sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// Cross-validation folds
    #[arg(long)]
    pub folds: Option<usize>,
    /// Regularization grid, comma separated
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// accuracy or f1
    #[arg(long)]
    pub metric: Option<String>,
    /// Held-out test matrix
    #[arg(long)]
    pub test_matrix: Option<PathBuf>,
    /// Held-out test labels
    #[arg(long)]
    pub test_labels: Option<PathBuf>,
    /// Split off this fraction as the test set (seeded)
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Reuse a cached dendrogram artifact
    #[arg(long)]
    pub dendrogram: Option<PathBuf>,
    /// x,y,tag CSV for correlate
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// rep,dataset,metric,value CSV for report
    #[arg(long)]
    pub cells: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (0 = all cores); REPRALIGN_WORKERS also honored
    #[arg(long)]
    pub workers: Option<usize>,
    /// Logarithmic x axis in SVG output
    #[arg(long)]
    pub log_x: bool,
}

/// Resolution order: defaults < config file (or embedded artifact config)
/// < command-line flags.
pub fn resolve(command: &str, args: &CliArgs) -> Result<RunConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => load_config_file(path, command)?,
        None => RunConfig::default(),
    };
    cfg.command = command.to_string();

    let path_str = |p: &PathBuf| p.display().to_string();
    if let Some(v) = &args.matrix {
        cfg.matrix = Some(path_str(v));
    }
    if let Some(v) = &args.labels {
        cfg.labels = Some(path_str(v));
    }
    if let Some(v) = &args.corpus {
        cfg.corpus = Some(path_str(v));
    }
    if let Some(v) = &args.text_field {
        cfg.text_field = v.clone();
    }
    if let Some(v) = &args.label_field {
        cfg.label_field = v.clone();
    }
    if let Some(v) = args.min_count {
        cfg.min_count = v;
    }
    if let Some(v) = &args.positive {
        cfg.positive = Some(v.clone());
    }
    if let Some(v) = args.subsample {
        cfg.subsample = v;
    }
    if let Some(v) = args.seeds {
        cfg.seeds = v;
    }
    if let Some(v) = args.seed_base {
        cfg.seed_base = v;
    }
    if let Some(v) = args.k_stride {
        cfg.k_stride = v;
    }
    if let Some(v) = &args.ns {
        cfg.ns = v.clone();
    }
    if let Some(v) = args.folds {
        cfg.folds = v;
    }
    if let Some(v) = &args.lambda_grid {
        cfg.lambda_grid = v.clone();
    }
    if let Some(v) = &args.metric {
        cfg.metric = v.clone();
    }
    if let Some(v) = &args.test_matrix {
        cfg.test_matrix = Some(path_str(v));
    }
    if let Some(v) = &args.test_labels {
        cfg.test_labels = Some(path_str(v));
    }
    if let Some(v) = args.test_fraction {
        cfg.test_fraction = Some(v);
    }
    if let Some(v) = &args.dendrogram {
        cfg.dendrogram = Some(path_str(v));
    }
    if let Some(v) = &args.pairs {
        cfg.pairs = Some(path_str(v));
    }
    if let Some(v) = &args.cells {
        cfg.cells = Some(path_str(v));
    }
    if let Some(v) = &args.out_dir {
        cfg.out_dir = path_str(v);
    }
    if let Some(v) = args.workers {
        cfg.workers = v;
    } else if cfg.workers == 0 {
        if let Ok(env) = std::env::var("REPRALIGN_WORKERS") {
            cfg.workers = env
                .parse()
                .map_err(|_| format!("REPRALIGN_WORKERS is not a number: '{env}'"))?;
        }
    }
    if args.log_x {
        cfg.log_x = true;
    }

    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), String> {
    if cfg.seeds == 0 {
        return Err("--seeds must be at least 1".into());
    }
    if cfg.k_stride == 0 {
        return Err("--k-stride must be at least 1".into());
    }
    if cfg.subsample < 2 {
        return Err("--subsample must be at least 2".into());
    }
    if cfg.folds < 2 {
        return Err("--folds must be at least 2".into());
    }
    if cfg.ns.is_empty() || cfg.ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err("--ns must be a strictly increasing, nonempty list".into());
    }
    if cfg.lambda_grid.is_empty() || cfg.lambda_grid.iter().any(|&l| !(l > 0.0)) {
        return Err("--lambda-grid entries must be positive".into());
    }
    if cfg.metric.parse::<repralign::fewshot::MetricKind>().is_err() {
        return Err(format!("--metric must be accuracy or f1, got '{}'", cfg.metric));
    }
    if let Some(f) = cfg.test_fraction {
        if !(0.0 < f && f < 1.0) {
            return Err(format!("--test-fraction must be in (0,1), got {f}"));
        }
    }
    Ok(())
}

/// Loads either a TOML config file (section named after the command) or a
/// previously produced artifact with an embedded `#config:` line.
fn load_config_file(path: &Path, command: &str) -> Result<RunConfig, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    // artifact mode: any '#'-headed file with an embedded `#config:` line
    if text.starts_with('#') {
        if let Some(json) = text.lines().find_map(|l| l.strip_prefix("#config: ")) {
            return serde_json::from_str(json)
                .map_err(|e| format!("embedded config in {} is invalid: {e}", path.display()));
        }
        if text.starts_with("#repralign-format: ") {
            return Err(format!(
                "artifact {} carries no embedded config",
                path.display()
            ));
        }
    }
    let table: toml::Table = text
        .parse()
        .map_err(|e| format!("invalid TOML in {}: {e}", path.display()))?;
    match table.get(command) {
        None => Ok(RunConfig::default()),
        Some(section) => section
            .clone()
            .try_into()
            .map_err(|e| format!("bad [{command}] section in {}: {e}", path.display())),
    }
}
