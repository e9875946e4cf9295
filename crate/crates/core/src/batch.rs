//! Batch orchestration over many languages, summary tables, and plot data.
//!
//! For every language the batch runs each distribution kind twice — once
//! with xmin pinned at the smallest observed frequency and once with the
//! KS-minimizing scan — bootstraps a plausibility p-value for each fit, and
//! records everything as rows. Failures (tiny inventory, constant tails,
//! bootstrap non-convergence) become row statuses rather than aborting the
//! batch, mirroring how real cross-language runs must keep going when one
//! language's data misbehaves.
//!
//! Per-language seeds are derived from the master seed and the language id,
//! so adding or removing a language never perturbs the others' results.

use std::collections::HashSet;
use std::io::Write;

use serde::Serialize;

use crate::corpus::FrequencyTable;
use crate::dist::{Dist, ModelKind, ModelParams, Support};
use crate::error::{Error, Result};
use crate::fit::{fit_fixed_xmin, fit_with_xmin_scan, FitConfig, FittedModel};
use crate::gof::{bootstrap_p, BootstrapResult};
use crate::seed::{derive, derive_label};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub iterations: u64,
    pub seed: u64,
    pub threshold: f64,
    pub fit: FitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            iterations: 10_000,
            seed: 0,
            threshold: 0.1,
            fit: FitConfig::default(),
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::domain("iterations must be at least 1"));
        }
        if !(self.threshold.is_finite() && (0.0..1.0).contains(&self.threshold)) {
            return Err(Error::domain(format!(
                "threshold = {} must lie in [0, 1)",
                self.threshold
            )));
        }
        self.fit.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    InsufficientData,
    Degenerate,
    NonConverged,
}

impl RowStatus {
    pub fn label(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::InsufficientData => "insufficient-data",
            RowStatus::Degenerate => "degenerate",
            RowStatus::NonConverged => "non-converged",
        }
    }
}

impl std::fmt::Display for RowStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One (language, kind, variant) analysis. `p_value` is present exactly
/// when `status` is ok; a non-converged bootstrap keeps its fit fields but
/// withholds the p-value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisRow {
    pub language_id: String,
    pub kind: ModelKind,
    pub used_xmin_scan: bool,
    pub params: Option<ModelParams>,
    pub xmin: Option<u64>,
    pub n_tail: Option<usize>,
    pub prop_fitted: Option<f64>,
    pub ks: Option<f64>,
    pub p_value: Option<f64>,
    pub iterations: u64,
    pub seed: u64,
    pub failed_replicates: Option<u64>,
    pub status: RowStatus,
}

fn kind_index(kind: ModelKind) -> usize {
    ModelKind::ALL.iter().position(|&k| k == kind).expect("kind is in ALL")
}

/// A bootstrap where more than 1% of replicates exhausted the refit retry
/// budget has too much conservative padding in its p-value to trust.
fn converged(boot: &BootstrapResult, iterations: u64) -> bool {
    boot.failed_replicates * 100 <= iterations
}

fn row_for(
    table: &FrequencyTable,
    kind: ModelKind,
    scan: bool,
    task_seed: u64,
    config: &RunConfig,
) -> AnalysisRow {
    let data = table.counts();
    let mut row = AnalysisRow {
        language_id: table.language_id().to_string(),
        kind,
        used_xmin_scan: scan,
        params: None,
        xmin: None,
        n_tail: None,
        prop_fitted: None,
        ks: None,
        p_value: None,
        iterations: config.iterations,
        seed: task_seed,
        failed_replicates: None,
        status: RowStatus::Ok,
    };

    let fitted = if scan {
        fit_with_xmin_scan(kind, &data, &config.fit)
    } else {
        let floor = *data.iter().min().expect("table is nonempty");
        fit_fixed_xmin(kind, &data, floor, &config.fit)
    };
    let fitted = match fitted {
        Ok(f) => f,
        Err(e) => {
            // any failure to even evaluate the model on this data is
            // recorded as degenerate unless it is a sample-size problem
            row.status = match e {
                Error::InsufficientData(_) => RowStatus::InsufficientData,
                _ => RowStatus::Degenerate,
            };
            return row;
        }
    };
    row.params = Some(fitted.params);
    row.xmin = Some(fitted.xmin);
    row.n_tail = Some(fitted.n_tail);
    row.prop_fitted = Some(fitted.n_tail as f64 / table.n_types() as f64);
    row.ks = Some(fitted.ks);

    match bootstrap_p(&data, &fitted, config.iterations, task_seed, &config.fit) {
        Ok(boot) => {
            row.failed_replicates = Some(boot.failed_replicates);
            if converged(&boot, config.iterations) {
                row.p_value = Some(boot.p_value);
            } else {
                row.status = RowStatus::NonConverged;
            }
        }
        Err(_) => row.status = RowStatus::Degenerate,
    }
    row
}

/// Fits and bootstraps every kind × {fixed-xmin, scanned-xmin} combination
/// for every language: 8 rows per language, sorted by (language, kind,
/// variant). The per-task seed is derived from the master seed, the
/// language id, and the task index.
pub fn run_batch(tables: &[FrequencyTable], config: &RunConfig) -> Result<Vec<AnalysisRow>> {
    config.validate()?;
    if tables.is_empty() {
        return Err(Error::domain("run_batch: no languages given"));
    }
    let mut seen = HashSet::new();
    for table in tables {
        if !seen.insert(table.language_id()) {
            return Err(Error::protocol(format!(
                "duplicate language id {:?}",
                table.language_id()
            )));
        }
    }

    let mut rows = Vec::with_capacity(tables.len() * ModelKind::ALL.len() * 2);
    for table in tables {
        let lang_seed = derive_label(config.seed, table.language_id());
        for (ki, &kind) in ModelKind::ALL.iter().enumerate() {
            for (vi, scan) in [false, true].into_iter().enumerate() {
                let task_seed = derive(lang_seed, (ki * 2 + vi) as u64);
                rows.push(row_for(table, kind, scan, task_seed, config));
            }
        }
    }
    rows.sort_by(|a, b| {
        a.language_id
            .cmp(&b.language_id)
            .then_with(|| kind_index(a.kind).cmp(&kind_index(b.kind)))
            .then_with(|| a.used_xmin_scan.cmp(&b.used_xmin_scan))
    });
    Ok(rows)
}

/// Aggregate over one (kind, variant) group of a batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub kind: ModelKind,
    pub used_xmin_scan: bool,
    pub languages: usize,
    pub ok_rows: usize,
    pub plausible_count: usize,
    /// Percentage of all languages in the group, not just the ok ones.
    pub plausible_pct: f64,
    pub param_name: &'static str,
    pub param_mean: Option<f64>,
    /// Sample SD; 0 with `sd_defined = false` when only one value exists.
    pub param_sd: Option<f64>,
    pub sd_defined: bool,
    pub param_min: Option<f64>,
    pub param_max: Option<f64>,
    pub mean_prop_fitted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryTable {
    pub threshold: f64,
    pub rows: Vec<SummaryRow>,
}

/// Collapses batch rows into one summary row per (kind, variant) group,
/// counting a language as plausible when its p-value strictly exceeds
/// `threshold`. Parameter statistics cover ok rows only.
pub fn summarize(rows: &[AnalysisRow], threshold: f64) -> Result<SummaryTable> {
    if !(threshold.is_finite() && (0.0..1.0).contains(&threshold)) {
        return Err(Error::domain(format!(
            "threshold = {threshold} must lie in [0, 1)"
        )));
    }
    let mut out = Vec::new();
    for &kind in &ModelKind::ALL {
        for scan in [false, true] {
            let group: Vec<&AnalysisRow> = rows
                .iter()
                .filter(|r| r.kind == kind && r.used_xmin_scan == scan)
                .collect();
            if group.is_empty() {
                continue;
            }
            let mut langs = HashSet::new();
            for row in &group {
                if !langs.insert(row.language_id.as_str()) {
                    return Err(Error::protocol(format!(
                        "duplicate row for language {:?}, kind {kind}, scan {scan}",
                        row.language_id
                    )));
                }
            }

            let languages = group.len();
            let plausible_count = group
                .iter()
                .filter(|r| r.p_value.is_some_and(|p| p > threshold))
                .count();
            let ok: Vec<&&AnalysisRow> =
                group.iter().filter(|r| r.status == RowStatus::Ok).collect();
            let values: Vec<f64> = ok
                .iter()
                .map(|r| r.params.expect("ok rows carry params").primary().1)
                .collect();
            let (param_mean, param_sd, sd_defined, param_min, param_max) = if values.is_empty() {
                (None, None, false, None, None)
            } else {
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let (sd, defined) = if values.len() < 2 {
                    (0.0, false)
                } else {
                    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
                    ((ss / (n - 1.0)).sqrt(), true)
                };
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (Some(mean), Some(sd), defined, Some(min), Some(max))
            };
            let mean_prop_fitted = if ok.is_empty() {
                None
            } else {
                Some(
                    ok.iter().map(|r| r.prop_fitted.expect("ok rows carry prop")).sum::<f64>()
                        / ok.len() as f64,
                )
            };

            out.push(SummaryRow {
                kind,
                used_xmin_scan: scan,
                languages,
                ok_rows: ok.len(),
                plausible_count,
                plausible_pct: 100.0 * plausible_count as f64 / languages as f64,
                param_name: kind.primary_param(),
                param_mean,
                param_sd,
                sd_defined,
                param_min,
                param_max,
                mean_prop_fitted,
            });
        }
    }
    Ok(SummaryTable { threshold, rows: out })
}

/// One expected-frequency column of a plot dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotColumn {
    pub name: String,
    /// Per rank; None outside the fit's support (observed frequency below
    /// its xmin).
    pub expected: Vec<Option<f64>>,
}

/// Rank-frequency data for external plotting, one row per type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotDataset {
    pub ranks: Vec<u64>,
    pub frequencies: Vec<u64>,
    pub expected: Vec<PlotColumn>,
}

/// Tabulates the observed rank-frequency curve plus, for each fit, the
/// model's expected frequency at every rank inside the fitted tail: the
/// quantile at the rank's upper-tail plotting position (r - 1/2)/n_tail.
pub fn emit_plot_data(table: &FrequencyTable, fits: &[FittedModel]) -> Result<PlotDataset> {
    let frequencies = table.counts();
    let n = frequencies.len();
    let mut expected = Vec::with_capacity(fits.len());
    for fit in fits {
        let dist = Dist::new(fit.params, Support::new(fit.xmin)?)?;
        let sampler = dist.sampler();
        // counts are sorted descending, so the tail is a prefix of ranks
        let n_tail = frequencies.iter().take_while(|&&f| f >= fit.xmin).count();
        let column: Vec<Option<f64>> = (1..=n)
            .map(|r| {
                if r <= n_tail {
                    let q = 1.0 - (r as f64 - 0.5) / n_tail as f64;
                    Some(sampler.value_at(q) as f64)
                } else {
                    None
                }
            })
            .collect();
        let name = format!(
            "expected_{}{}",
            fit.kind().label(),
            if fit.xmin_scanned { "_scan" } else { "" }
        );
        expected.push(PlotColumn { name, expected: column });
    }
    Ok(PlotDataset {
        ranks: (1..=n as u64).collect(),
        frequencies,
        expected,
    })
}

impl PlotDataset {
    pub fn to_tsv(&self, mut out: impl Write) -> Result<()> {
        let werr = |e: std::io::Error| Error::domain(format!("write failed: {e}"));
        let mut header = "rank\tfrequency\tlog10_rank\tlog10_frequency".to_string();
        for col in &self.expected {
            header.push('\t');
            header.push_str(&col.name);
        }
        writeln!(out, "{header}").map_err(werr)?;
        for (i, (&rank, &freq)) in self.ranks.iter().zip(&self.frequencies).enumerate() {
            let mut line = format!(
                "{rank}\t{freq}\t{}\t{}",
                (rank as f64).log10(),
                (freq as f64).log10()
            );
            for col in &self.expected {
                line.push('\t');
                if let Some(v) = col.expected[i] {
                    line.push_str(&v.to_string());
                }
            }
            writeln!(out, "{line}").map_err(werr)?;
        }
        Ok(())
    }
}

fn opt_str<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

/// The four parameter columns of the row CSV, exploded so every kind's
/// parameters land in fixed columns.
fn param_fields(params: Option<&ModelParams>) -> [Option<f64>; 5] {
    match params {
        None => [None; 5],
        Some(ModelParams::PowerLaw { alpha }) => [Some(*alpha), None, None, None, None],
        Some(ModelParams::Lognormal { mu_log, sigma_log }) => {
            [None, Some(*mu_log), Some(*sigma_log), None, None]
        }
        Some(ModelParams::Exponential { lambda }) => [None, None, None, Some(*lambda), None],
        Some(ModelParams::Poisson { rate }) => [None, None, None, None, Some(*rate)],
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::domain(format!("csv write failed: {e}"))
}

pub fn write_rows_csv(rows: &[AnalysisRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "language_id",
        "kind",
        "used_xmin_scan",
        "alpha",
        "mu_log",
        "sigma_log",
        "lambda",
        "rate",
        "xmin",
        "n_tail",
        "prop_fitted",
        "ks",
        "p_value",
        "iterations",
        "seed",
        "failed_replicates",
        "status",
    ])
    .map_err(csv_err)?;
    for row in rows {
        let [alpha, mu, sigma, lambda, rate] = param_fields(row.params.as_ref());
        w.write_record([
            row.language_id.clone(),
            row.kind.label().to_string(),
            row.used_xmin_scan.to_string(),
            opt_str(&alpha),
            opt_str(&mu),
            opt_str(&sigma),
            opt_str(&lambda),
            opt_str(&rate),
            opt_str(&row.xmin),
            opt_str(&row.n_tail),
            opt_str(&row.prop_fitted),
            opt_str(&row.ks),
            opt_str(&row.p_value),
            row.iterations.to_string(),
            row.seed.to_string(),
            opt_str(&row.failed_replicates),
            row.status.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::domain(format!("csv flush failed: {e}")))
}

pub fn write_rows_json(rows: &[AnalysisRow], out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(out, rows)
        .map_err(|e| Error::domain(format!("json write failed: {e}")))
}

pub fn write_summary_csv(summary: &SummaryTable, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "kind",
        "used_xmin_scan",
        "languages",
        "ok_rows",
        "plausible_count",
        "plausible_pct",
        "param",
        "mean",
        "sd",
        "sd_defined",
        "min",
        "max",
        "mean_prop_fitted",
    ])
    .map_err(csv_err)?;
    for row in &summary.rows {
        w.write_record([
            row.kind.label().to_string(),
            row.used_xmin_scan.to_string(),
            row.languages.to_string(),
            row.ok_rows.to_string(),
            row.plausible_count.to_string(),
            row.plausible_pct.to_string(),
            row.param_name.to_string(),
            opt_str(&row.param_mean),
            opt_str(&row.param_sd),
            row.sd_defined.to_string(),
            opt_str(&row.param_min),
            opt_str(&row.param_max),
            opt_str(&row.mean_prop_fitted),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::domain(format!("csv flush failed: {e}")))
}

pub fn write_summary_json(summary: &SummaryTable, out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(out, summary)
        .map_err(|e| Error::domain(format!("json write failed: {e}")))
}
