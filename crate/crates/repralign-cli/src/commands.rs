//! One function per subcommand. Every command reads its inputs, runs the
//! corresponding library pipeline, writes artifacts into `out_dir` (each
//! carrying the resolved config in a `#config:` header line), and prints a
//! one-line machine-readable summary to stdout.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use repralign::alignment::{thas, thas_averaged, AlignmentResult};
use repralign::core::{subsample, validate_dataset};
use repralign::fewshot::{learning_curve, FewshotConfig, MetricKind};
use repralign::hierclust::{ward_cluster, Dendrogram};
use repralign::ingest::{
    bow_featurize, check_row_count, load_dendrogram, load_dense_matrix, load_jsonl_corpus,
    load_labels, load_pairs, save_curve, save_dendrogram, save_npy, save_pairs, MatrixFormat,
    Metadata,
};
use repralign::quality::{dbi_curve, QualityResult};
use repralign::stats::{build_report, correlate, ReportCell};
use repralign::{CurveSeries, EmbeddedDataset, Error, Seed};

use crate::config::RunConfig;
use crate::svg;

/// Usage errors are the caller's fault (exit 2); library errors are
/// classified by variant in `main`.
pub enum CmdError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        CmdError::Lib(e)
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Lib(Error::Io(e))
    }
}

type CmdResult<T> = Result<T, CmdError>;

fn usage(msg: impl Into<String>) -> CmdError {
    CmdError::Usage(msg.into())
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    Path::new(&cfg.out_dir).join(name)
}

fn base_metadata(cfg: &RunConfig) -> Metadata {
    vec![("config".to_string(), cfg.to_json())]
}

/// Loads the labeled embedding a command works on: `--matrix` + `--labels`,
/// with `--positive` resolved against the label vocabulary.
fn load_dataset(cfg: &RunConfig) -> CmdResult<EmbeddedDataset> {
    let matrix_path = cfg
        .matrix
        .as_deref()
        .ok_or_else(|| usage("--matrix is required"))?;
    let labels_path = cfg
        .labels
        .as_deref()
        .ok_or_else(|| usage("--labels is required"))?;
    let matrix_path = Path::new(matrix_path);
    let matrix = load_dense_matrix(matrix_path, MatrixFormat::from_path(matrix_path))?;
    let (labels, vocab) = load_labels(Path::new(labels_path))?;
    check_row_count(matrix.nrows(), labels.len())?;
    let positive = resolve_positive(cfg, &vocab)?;
    Ok(validate_dataset(matrix, labels, vocab, positive)?)
}

fn resolve_positive(cfg: &RunConfig, vocab: &[String]) -> CmdResult<usize> {
    match &cfg.positive {
        None => Ok(0),
        Some(name) => vocab
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| usage(format!("--positive '{name}' not in label vocabulary"))),
    }
}

/// Seeded subsample-and-cluster runs shared by `thas` and `adbi`. With
/// `--dendrogram` the cached tree is reused for a single run on the full
/// dataset; otherwise each seed draws its own subsample and clusters it.
fn seeded_runs(
    cfg: &RunConfig,
    ds: &EmbeddedDataset,
) -> CmdResult<Vec<(EmbeddedDataset, Dendrogram)>> {
    if let Some(path) = &cfg.dendrogram {
        let (dn, _) = load_dendrogram(Path::new(path))?;
        if dn.num_leaves() != ds.len() {
            return Err(Error::MismatchedDendrogram(format!(
                "cached dendrogram has {} leaves, dataset has {} points",
                dn.num_leaves(),
                ds.len()
            ))
            .into());
        }
        return Ok(vec![(ds.clone(), dn)]);
    }
    let size = cfg.subsample.min(ds.len());
    let base = Seed::new(cfg.seed_base);
    let runs: Vec<repralign::Result<(EmbeddedDataset, Dendrogram)>> = (0..cfg.seeds)
        .into_par_iter()
        .map(|i| {
            let sub = subsample(ds, size, base.derive(i as u64))?;
            let dn = ward_cluster(&sub)?;
            Ok((sub, dn))
        })
        .collect();
    let mut out = Vec::with_capacity(cfg.seeds);
    for run in runs {
        out.push(run?);
    }
    Ok(out)
}

/// Per-index mean across curves that share the same index.
fn mean_curve(curves: &[&CurveSeries], area: f64) -> repralign::Result<CurveSeries> {
    let index = curves[0].index().to_vec();
    let values: Vec<f64> = (0..index.len())
        .map(|i| curves.iter().map(|c| c.values()[i]).sum::<f64>() / curves.len() as f64)
        .collect();
    CurveSeries::new(index, values, area)
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

fn curve_series_for_svg(curves: &[&CurveSeries], mean: &CurveSeries) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut series: Vec<(String, Vec<(f64, f64)>)> = curves
        .iter()
        .enumerate()
        .map(|(i, c)| {
            (
                format!("seed {i}"),
                c.points().map(|(k, v)| (k as f64, v)).collect(),
            )
        })
        .collect();
    if curves.len() > 1 {
        series.push((
            "mean".to_string(),
            mean.points().map(|(k, v)| (k as f64, v)).collect(),
        ));
    }
    series
}

pub fn cmd_thas(cfg: &RunConfig) -> CmdResult<()> {
    let ds = load_dataset(cfg)?;
    let runs = seeded_runs(cfg, &ds)?;
    let results: Vec<AlignmentResult> = runs
        .par_iter()
        .map(|(sub, dn)| thas(sub, dn))
        .collect::<repralign::Result<_>>()?;
    let summary = thas_averaged(&results)?;

    for (i, res) in results.iter().enumerate() {
        let mut meta = base_metadata(cfg);
        meta.push(("seed".to_string(), format!("{i}")));
        save_curve(
            &out_path(cfg, &format!("thas_seed{i}.csv")),
            &res.curve,
            ("k", "alignment"),
            &meta,
        )?;
    }
    let curves: Vec<&CurveSeries> = results.iter().map(|r| &r.curve).collect();
    let mean = mean_curve(&curves, summary.mean)?;
    save_curve(
        &out_path(cfg, "thas_mean.csv"),
        &mean,
        ("k", "alignment"),
        &base_metadata(cfg),
    )?;
    svg::line_chart(
        &out_path(cfg, "thas.svg"),
        "Alignment curve",
        "k (clusters)",
        "partition alignment",
        &curve_series_for_svg(&curves, &mean),
        cfg.log_x,
    )?;

    println!(
        "thas: mean={} std={} seeds={}",
        summary.mean,
        summary.std_dev,
        results.len()
    );
    Ok(())
}

pub fn cmd_adbi(cfg: &RunConfig) -> CmdResult<()> {
    let ds = load_dataset(cfg)?;
    let runs = seeded_runs(cfg, &ds)?;
    let results: Vec<QualityResult> = runs
        .par_iter()
        .map(|(sub, dn)| dbi_curve(sub, dn, cfg.k_stride))
        .collect::<repralign::Result<_>>()?;
    let adbis: Vec<f64> = results.iter().map(|r| r.adbi).collect();
    let mean_adbi = adbis.iter().sum::<f64>() / adbis.len() as f64;
    let excluded: usize = results.iter().map(|r| r.excluded_levels).sum();

    for (i, res) in results.iter().enumerate() {
        let mut meta = base_metadata(cfg);
        meta.push(("seed".to_string(), format!("{i}")));
        meta.push(("excluded_levels".to_string(), format!("{}", res.excluded_levels)));
        save_curve(
            &out_path(cfg, &format!("adbi_seed{i}.csv")),
            &res.curve,
            ("k", "dbi"),
            &meta,
        )?;
    }
    let curves: Vec<&CurveSeries> = results.iter().map(|r| &r.curve).collect();
    let mean = mean_curve(&curves, mean_adbi)?;
    save_curve(
        &out_path(cfg, "adbi_mean.csv"),
        &mean,
        ("k", "dbi"),
        &base_metadata(cfg),
    )?;
    svg::line_chart(
        &out_path(cfg, "adbi.svg"),
        "Davies-Bouldin curve",
        "k (clusters)",
        "DBI",
        &curve_series_for_svg(&curves, &mean),
        cfg.log_x,
    )?;

    println!(
        "adbi: mean={} std={} seeds={} excluded_levels={}",
        mean_adbi,
        sample_std(&adbis),
        results.len(),
        excluded
    );
    Ok(())
}

pub fn cmd_cluster(cfg: &RunConfig) -> CmdResult<()> {
    let matrix_path = cfg
        .matrix
        .as_deref()
        .ok_or_else(|| usage("--matrix is required"))?;
    let matrix_path = Path::new(matrix_path);
    let matrix = load_dense_matrix(matrix_path, MatrixFormat::from_path(matrix_path))?;
    let ds = match &cfg.labels {
        Some(labels_path) => {
            let (labels, vocab) = load_labels(Path::new(labels_path))?;
            check_row_count(matrix.nrows(), labels.len())?;
            let positive = resolve_positive(cfg, &vocab)?;
            validate_dataset(matrix, labels, vocab, positive)?
        }
        None => {
            // clustering ignores labels; synthesize a valid binary column
            let n = matrix.nrows();
            let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
            validate_dataset(matrix, labels, vec!["_a".into(), "_b".into()], 0)?
        }
    };
    let dn = ward_cluster(&ds)?;
    save_dendrogram(&out_path(cfg, "dendrogram.csv"), &dn, &base_metadata(cfg))?;
    println!(
        "cluster: points={} dims={} merges={}",
        ds.len(),
        ds.dim(),
        dn.merges().len()
    );
    Ok(())
}

/// Builds (pool, test) for the few-shot evaluation: explicit test files win,
/// otherwise `--test-fraction` splits the pool with a seeded draw.
fn split_pool_test(
    cfg: &RunConfig,
    ds: EmbeddedDataset,
) -> CmdResult<(EmbeddedDataset, EmbeddedDataset)> {
    if let (Some(tm), Some(tl)) = (&cfg.test_matrix, &cfg.test_labels) {
        let tm = Path::new(tm);
        let matrix = load_dense_matrix(tm, MatrixFormat::from_path(tm))?;
        let (raw_labels, tvocab) = load_labels(Path::new(tl))?;
        check_row_count(matrix.nrows(), raw_labels.len())?;
        // map test label names onto the pool vocabulary
        let pool_vocab = ds.label_vocab().to_vec();
        let mapping: Vec<usize> = tvocab
            .iter()
            .map(|name| {
                pool_vocab
                    .iter()
                    .position(|v| v == name)
                    .ok_or_else(|| usage(format!("test label '{name}' not in pool vocabulary")))
            })
            .collect::<CmdResult<_>>()?;
        let labels: Vec<usize> = raw_labels.iter().map(|&l| mapping[l]).collect();
        let test = validate_dataset(matrix, labels, pool_vocab, ds.positive_class())?;
        return Ok((ds, test));
    }
    if cfg.test_matrix.is_some() || cfg.test_labels.is_some() {
        return Err(usage("--test-matrix and --test-labels must be given together"));
    }
    let fraction = cfg
        .test_fraction
        .ok_or_else(|| usage("alc needs --test-matrix/--test-labels or --test-fraction"))?;
    let n = ds.len();
    let test_n = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let mut rng = repralign::core::rng::Rng::from_seed(Seed::new(cfg.seed_base).derive(u64::MAX));
    let test_idx = rng.sample_indices(n, test_n);
    let in_test: Vec<bool> = {
        let mut mask = vec![false; n];
        for &i in &test_idx {
            mask[i] = true;
        }
        mask
    };
    let pool_idx: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
    let test = ds.select_rows(&test_idx)?;
    let pool = ds.select_rows(&pool_idx)?;
    Ok((pool, test))
}

pub fn cmd_alc(cfg: &RunConfig) -> CmdResult<()> {
    let ds = load_dataset(cfg)?;
    let (pool, test) = split_pool_test(cfg, ds)?;
    let metric_kind: MetricKind = cfg
        .metric
        .parse()
        .map_err(|e: String| usage(e))?;
    let seeds: Vec<Seed> = (0..cfg.seeds)
        .map(|i| Seed::new(cfg.seed_base).derive(i as u64))
        .collect();
    let fewshot_cfg = FewshotConfig {
        folds: cfg.folds,
        lambda_grid: cfg.lambda_grid.clone(),
        ..FewshotConfig::default()
    };
    let result = learning_curve(&pool, &test, &cfg.ns, &seeds, metric_kind, &fewshot_cfg)?;

    let mut meta = base_metadata(cfg);
    meta.push(("metric".to_string(), metric_kind.name().to_string()));
    save_curve(
        &out_path(cfg, "alc.csv"),
        &result.curve,
        ("n", metric_kind.name()),
        &meta,
    )?;
    let mut series: Vec<(String, Vec<(f64, f64)>)> = result
        .per_seed
        .iter()
        .enumerate()
        .map(|(s, row)| {
            (
                format!("seed {s}"),
                cfg.ns
                    .iter()
                    .zip(row)
                    .map(|(&n, &v)| (n as f64, v))
                    .collect(),
            )
        })
        .collect();
    if result.per_seed.len() > 1 {
        series.push((
            "mean".to_string(),
            result.curve.points().map(|(n, v)| (n as f64, v)).collect(),
        ));
    }
    svg::line_chart(
        &out_path(cfg, "alc.svg"),
        "Few-shot learning curve",
        "training size",
        metric_kind.name(),
        &series,
        cfg.log_x,
    )?;

    println!(
        "alc: {} metric={} seeds={}",
        result.alc,
        metric_kind.name(),
        result.per_seed.len()
    );
    Ok(())
}

pub fn cmd_correlate(cfg: &RunConfig) -> CmdResult<()> {
    let pairs_path = cfg
        .pairs
        .as_deref()
        .ok_or_else(|| usage("--pairs is required"))?;
    let pairs = load_pairs(Path::new(pairs_path))?;
    let report = correlate(pairs)?;
    save_pairs(
        &out_path(cfg, "correlation.csv"),
        &report,
        &base_metadata(cfg),
    )?;
    let points: Vec<(f64, f64, String)> = report.pairs.clone();
    svg::scatter(
        &out_path(cfg, "correlation.svg"),
        "Correlation",
        "x",
        "y",
        &points,
    )?;
    println!(
        "correlate: pearson_r={} pearson_p={} spearman_r={} spearman_p={} n={}",
        report.pearson_r,
        report.pearson_p,
        report.spearman_r,
        report.spearman_p,
        report.pairs.len()
    );
    Ok(())
}

pub fn cmd_featurize(cfg: &RunConfig) -> CmdResult<()> {
    let corpus_path = cfg
        .corpus
        .as_deref()
        .ok_or_else(|| usage("--corpus is required"))?;
    let mut corpus = load_jsonl_corpus(Path::new(corpus_path), &cfg.text_field, &cfg.label_field)?;
    if let Some(name) = &cfg.positive {
        corpus.set_positive_class(name)?;
    }
    let (features, vocab) = bow_featurize(&corpus, cfg.min_count, None)?;
    save_npy(&out_path(cfg, "features.npy"), &features)?;

    let mut labels_out = format!("#config: {}\n", cfg.to_json());
    for (_, label) in &corpus.documents {
        labels_out.push_str(&corpus.label_vocab[*label]);
        labels_out.push('\n');
    }
    fs::write(out_path(cfg, "labels.csv"), labels_out)?;

    let mut vocab_out = String::new();
    for term in vocab.terms() {
        vocab_out.push_str(term);
        vocab_out.push('\n');
    }
    fs::write(out_path(cfg, "vocab.txt"), vocab_out)?;

    println!(
        "featurize: documents={} terms={} min_count={}",
        corpus.len(),
        vocab.len(),
        cfg.min_count
    );
    Ok(())
}

pub fn cmd_report(cfg: &RunConfig) -> CmdResult<()> {
    let cells_path = cfg
        .cells
        .as_deref()
        .ok_or_else(|| usage("--cells is required"))?;
    let cells = load_cells(Path::new(cells_path))?;
    let matrices = build_report(&cells)?;
    for matrix in &matrices {
        let path = out_path(cfg, &format!("report_{}.csv", matrix.metric));
        let mut out = format!("#config: {}\n", cfg.to_json());
        out.push_str("rep");
        for col in &matrix.cols {
            out.push(',');
            out.push_str(col);
        }
        out.push_str(",mean\n");
        for (r, rep) in matrix.rows.iter().enumerate() {
            out.push_str(rep);
            for cell in &matrix.cells[r] {
                out.push(',');
                if let Some(v) = cell {
                    let _ = write!(out, "{v}");
                }
            }
            let _ = writeln!(out, ",{}", matrix.row_means[r]);
        }
        fs::write(&path, out)?;
        print_matrix(matrix);
    }
    Ok(())
}

/// Reads `rep,dataset,metric,value` rows; a header line and `#` comments
/// are skipped.
fn load_cells(path: &Path) -> CmdResult<Vec<ReportCell>> {
    let text = fs::read_to_string(path)?;
    let mut cells = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed == "rep,dataset,metric,value"
        {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::FormatError {
                offset: lineno,
                reason: format!("expected 4 fields (rep,dataset,metric,value), got {}", fields.len()),
            }
            .into());
        }
        let value: f64 = fields[3].trim().parse().map_err(|_| Error::FormatError {
            offset: lineno,
            reason: format!("unparsable value: '{}'", fields[3]),
        })?;
        cells.push(ReportCell {
            rep: fields[0].trim().to_string(),
            dataset: fields[1].trim().to_string(),
            metric: fields[2].trim().to_string(),
            value,
        });
    }
    Ok(cells)
}

fn print_matrix(matrix: &repralign::stats::ReportMatrix) {
    let mut widths: Vec<usize> = Vec::new();
    let mut table: Vec<Vec<String>> = Vec::new();
    let mut header = vec![format!("[{}]", matrix.metric)];
    header.extend(matrix.cols.iter().cloned());
    header.push("mean".to_string());
    table.push(header);
    for (r, rep) in matrix.rows.iter().enumerate() {
        let mut row = vec![rep.clone()];
        for cell in &matrix.cells[r] {
            row.push(match cell {
                Some(v) => format!("{v:.4}"),
                None => "-".to_string(),
            });
        }
        row.push(format!("{:.4}", matrix.row_means[r]));
        table.push(row);
    }
    for row in &table {
        for (c, cell) in row.iter().enumerate() {
            if c >= widths.len() {
                widths.push(0);
            }
            widths[c] = widths[c].max(cell.len());
        }
    }
    for row in &table {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{:>width$}", cell, width = widths[c]))
            .collect();
        println!("{}", line.join("  "));
    }
}
