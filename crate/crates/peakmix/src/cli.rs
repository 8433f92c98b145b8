//! Command-line driver.
//!
//! Every subcommand reads the shared input files (frequency table, case
//! configuration, optional peaks and profiles), writes a JSON report plus CSV
//! side tables into the output directory, and prints a one-line summary.
//! Exit codes: 0 on success, 2 on validation errors, 3 on numerical failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::diag::{self, ConditioningMode};
use crate::error::{Error, Result};
use crate::infer::{
    deconvolve, deconvolve_joint, likelihood_ratio, maximize_likelihood, simulate_case, CaseModel,
    FitResult, GenotypeRanking, JointRanking, LrResult, OptimizerConfig, SimCondition, SlotLayout,
};
use crate::io::report::{fmt_sig, Provenance, ReportWriter};
use crate::io::CaseBundle;
use crate::marker::{
    compressed_slice_size, measured_compressed_size, total_size, TreeMethod, TreeSizeReport,
};
use crate::peak::ModelParams;

#[derive(Parser)]
#[command(
    name = "peakmix",
    version,
    about = "Exact peak-height analysis of mixed DNA traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CaseArgs {
    /// Allele frequency table (marker,allele,frequency).
    #[arg(long)]
    freq: PathBuf,
    /// Case configuration file (traces, hypotheses, parameters, optimizer).
    #[arg(long)]
    case: PathBuf,
    /// Peak table (trace,marker,allele,height); omitted rows mean no peak.
    #[arg(long)]
    peaks: Option<PathBuf>,
    /// Known genotype profiles (individual,marker,allele,count).
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Output directory for report.json and CSV side tables.
    #[arg(long, default_value = "peakmix_out")]
    out: PathBuf,
    /// Worker threads for per-marker evaluation (default: marker count
    /// capped at the hardware parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Junction-tree construction (slice | triangle | optimal).
    #[arg(long)]
    tree: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Case log-likelihood at the fixed parameters from the case file.
    Loglik {
        #[command(flatten)]
        common: CaseArgs,
        /// Hypothesis name from the case file.
        #[arg(long)]
        hyp: String,
    },
    /// Maximum likelihood fit of the peak-height model.
    Mle {
        #[command(flatten)]
        common: CaseArgs,
        #[arg(long)]
        hyp: String,
        /// Override the optimizer seed from the case file.
        #[arg(long)]
        seed: Option<u64>,
        /// Compute standard errors from the numerical Hessian.
        #[arg(long)]
        se: bool,
    },
    /// Likelihood ratio between two fitted hypotheses.
    Lr {
        #[command(flatten)]
        common: CaseArgs,
        /// Numerator hypothesis (prosecution).
        #[arg(long)]
        hp: String,
        /// Denominator hypothesis (defence).
        #[arg(long)]
        hd: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        se: bool,
    },
    /// Rank unknown-contributor genotypes by posterior probability.
    Deconvolve {
        #[command(flatten)]
        common: CaseArgs,
        #[arg(long)]
        hyp: String,
        /// Stop once this much posterior mass is covered.
        #[arg(long, default_value_t = 0.99)]
        mass: f64,
        /// Report counts over observed alleles only, with a dropout column.
        #[arg(long)]
        seen_only: bool,
        /// Rank whole profiles jointly across markers.
        #[arg(long)]
        joint: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sampling budget before giving up on the mass target.
        #[arg(long, default_value_t = 100_000)]
        max_samples: usize,
    },
    /// Simulate genotypes and peak heights from the model.
    Simulate {
        #[command(flatten)]
        common: CaseArgs,
        #[arg(long)]
        hyp: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Conditioning: none | observed (the case's seen/unseen pattern).
        #[arg(long, default_value = "none")]
        condition: String,
    },
    /// Model-adequacy diagnostics at fixed parameters.
    Diagnose {
        #[command(subcommand)]
        what: DiagnoseCommand,
    },
    /// Junction-tree total sizes for the genotype representations.
    Treesize {
        /// slice | triangle | optimal | allele-pair | all.
        #[arg(long, default_value = "all")]
        method: String,
        /// Allele count, a single value or an inclusive range like 2..10.
        #[arg(long = "A", visible_alias = "alleles")]
        alleles: String,
        /// Unknown contributors, value or range.
        #[arg(long = "k", visible_alias = "unknowns")]
        unknowns: String,
        /// Auxiliary variables per allele, value or range.
        #[arg(long = "N", visible_alias = "slots", default_value = "1")]
        slots: String,
        /// Also report compressed sizes.
        #[arg(long)]
        compressed: bool,
        /// Optional output directory; the table always prints to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Likelihood ratio from peak presence only, at heights-fitted
    /// parameters.
    PresenceLr {
        #[command(flatten)]
        common: CaseArgs,
        #[arg(long)]
        hp: String,
        #[arg(long)]
        hd: String,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum DiagnoseCommand {
    /// Probability transforms of observed peaks (QQ data).
    Qq {
        #[command(flatten)]
        common: CaseArgs,
        #[arg(long)]
        hyp: String,
        /// Trace to diagnose (default: the first).
        #[arg(long)]
        trace: Option<String>,
        /// marginal | all-others | preceding.
        #[arg(long, default_value = "all-others")]
        mode: String,
    },
    /// Predictive quantiles and presence probabilities per allele.
    Intervals {
        #[command(flatten)]
        common: CaseArgs,
        #[arg(long)]
        hyp: String,
        #[arg(long)]
        trace: Option<String>,
        /// Comma-separated quantile levels.
        #[arg(long, default_value = "0.005,0.25,0.5,0.75,0.995")]
        levels: String,
    },
    /// Prequential monitor of peak presence.
    Preq {
        #[command(flatten)]
        common: CaseArgs,
        #[arg(long)]
        hyp: String,
        #[arg(long)]
        trace: Option<String>,
    },
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Parse and dispatch; suitable for tests driving the CLI in-process.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse { .. } | Error::Domain(_) | Error::Io(_) => 2,
                Error::Numeric(_) | Error::Engine(_) => 3,
            }
        }
    }
}

fn load(common: &CaseArgs) -> Result<CaseBundle> {
    let bundle = CaseBundle::load(
        &common.freq,
        &common.case,
        common.peaks.as_deref(),
        common.profiles.as_deref(),
    )?;
    let markers = bundle.data.ladders.len();
    let hardware = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let threads = common.threads.unwrap_or_else(|| markers.min(hardware).max(1));
    // The global pool can only be built once per process; later calls are
    // harmless no-ops.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(bundle)
}

fn tree_method(common: &CaseArgs, bundle: &CaseBundle) -> Result<TreeMethod> {
    match &common.tree {
        Some(name) => TreeMethod::parse(name),
        None => Ok(bundle.config.tree),
    }
}

fn optimizer_config(bundle: &CaseBundle, seed: Option<u64>, se: bool) -> OptimizerConfig {
    let mut config = bundle.config.optimizer;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config.compute_se = config.compute_se || se;
    config
}

#[derive(Serialize)]
struct LoglikReport {
    hypothesis: String,
    tree: String,
    impossible: bool,
    total_log10_likelihood: f64,
    per_marker: Vec<MarkerLoglik>,
    params: BTreeMap<String, ModelParams>,
}

#[derive(Serialize)]
struct MarkerLoglik {
    marker: String,
    log10_likelihood: f64,
}

fn cmd_loglik(common: &CaseArgs, hyp: &str) -> Result<()> {
    let bundle = load(common)?;
    let hypothesis = bundle.config.hypothesis(hyp)?;
    let params = bundle.config.params_for(hyp)?;
    let tree = tree_method(common, &bundle)?;
    let mut model = CaseModel::build(&bundle.data, hypothesis, tree, SlotLayout::Likelihood)?;
    let per_marker = model.marker_log_likelihoods(&params)?;
    let ln10 = std::f64::consts::LN_10;
    let total: f64 = per_marker.iter().map(|(_, v)| v).sum();
    let report = LoglikReport {
        hypothesis: hyp.to_string(),
        tree: tree.name().to_string(),
        impossible: total == f64::NEG_INFINITY,
        total_log10_likelihood: total / ln10,
        per_marker: per_marker
            .iter()
            .map(|(marker, v)| MarkerLoglik {
                marker: marker.clone(),
                log10_likelihood: v / ln10,
            })
            .collect(),
        params,
    };
    let writer = ReportWriter::new(&common.out)?;
    let provenance = Provenance::new("loglik", None, &bundle.digests);
    writer.write_json(&provenance, &report)?;
    writer.write_csv(
        "markers.csv",
        &["marker", "log10_likelihood"],
        &report
            .per_marker
            .iter()
            .map(|m| vec![m.marker.clone(), fmt_sig(m.log10_likelihood)])
            .collect::<Vec<_>>(),
    )?;
    println!(
        "log10 L({hyp}) = {}",
        if report.impossible {
            "-inf".to_string()
        } else {
            format!("{:.4}", report.total_log10_likelihood)
        }
    );
    Ok(())
}

fn params_csv(fit: &FitResult) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (trace, p) in &fit.params {
        let mut push = |name: String, value: f64| {
            rows.push(vec![
                fit.hypothesis.clone(),
                trace.clone(),
                name,
                fmt_sig(value),
            ]);
        };
        push("rho".into(), p.rho);
        push("xi".into(), p.xi);
        push("eta".into(), p.eta);
        for (id, f) in &p.phi {
            push(format!("phi[{id}]"), *f);
        }
    }
    rows
}

fn cmd_mle(common: &CaseArgs, hyp: &str, seed: Option<u64>, se: bool) -> Result<()> {
    let bundle = load(common)?;
    let hypothesis = bundle.config.hypothesis(hyp)?;
    let tree = tree_method(common, &bundle)?;
    let config = optimizer_config(&bundle, seed, se);
    let mut model = CaseModel::build(&bundle.data, hypothesis, tree, SlotLayout::Likelihood)?;
    let fit = maximize_likelihood(&mut model, &config)?;
    let writer = ReportWriter::new(&common.out)?;
    let provenance = Provenance::new("mle", Some(config.seed), &bundle.digests);
    writer.write_json(&provenance, &fit)?;
    writer.write_csv(
        "params.csv",
        &["hypothesis", "trace", "parameter", "estimate"],
        &params_csv(&fit),
    )?;
    println!(
        "log10 L({hyp}) = {:.4}{}",
        fit.log10_likelihood,
        if fit.boundary { "  [boundary]" } else { "" }
    );
    Ok(())
}

fn cmd_lr(common: &CaseArgs, hp: &str, hd: &str, seed: Option<u64>, se: bool) -> Result<()> {
    let bundle = load(common)?;
    let tree = tree_method(common, &bundle)?;
    let config = optimizer_config(&bundle, seed, se);
    let hyp_p = bundle.config.hypothesis(hp)?.clone();
    let hyp_d = bundle.config.hypothesis(hd)?.clone();
    let lr = likelihood_ratio(&bundle.data, &hyp_p, &hyp_d, tree, &config)?;
    let writer = ReportWriter::new(&common.out)?;
    let provenance = Provenance::new("lr", Some(config.seed), &bundle.digests);
    writer.write_json(&provenance, &lr)?;
    let mut rows = params_csv(&lr.numerator);
    rows.extend(params_csv(&lr.denominator));
    writer.write_csv(
        "params.csv",
        &["hypothesis", "trace", "parameter", "estimate"],
        &rows,
    )?;
    println!(
        "log10 LR = {:.4}  (log10 L: {hp} {:.4}, {hd} {:.4})",
        lr.log10_lr, lr.numerator.log10_likelihood, lr.denominator.log10_likelihood
    );
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn ranking_csv(ranking: &GenotypeRanking) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = Vec::new();
    for tag in &ranking.contributors {
        for label in &ranking.allele_labels {
            header.push(format!("{tag}:{label}"));
        }
        header.push(format!("{tag}:D"));
    }
    header.push("probability".to_string());
    let mut rows = Vec::new();
    for row in &ranking.rows {
        let mut cells = Vec::new();
        for (counts, dropout) in row.counts.iter().zip(&row.dropouts) {
            for &c in counts {
                cells.push(c.to_string());
            }
            cells.push(dropout.to_string());
        }
        cells.push(fmt_sig(row.probability));
        rows.push(cells);
    }
    // Trailing total row mirrors the covered posterior mass.
    let width = header.len();
    let mut total = vec![String::new(); width];
    total[0] = "total".to_string();
    total[width - 1] = fmt_sig(ranking.covered_mass);
    rows.push(total);
    (header, rows)
}

#[derive(Serialize)]
struct DeconvolveReport {
    hypothesis: String,
    mass_target: f64,
    seen_only: bool,
    joint: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    rankings: Option<Vec<GenotypeRanking>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    joint_ranking: Option<JointRanking>,
    params: BTreeMap<String, ModelParams>,
}

fn cmd_deconvolve(
    common: &CaseArgs,
    hyp: &str,
    mass: f64,
    seen_only: bool,
    joint: bool,
    seed: u64,
    max_samples: usize,
) -> Result<()> {
    let bundle = load(common)?;
    let hypothesis = bundle.config.hypothesis(hyp)?;
    let params = bundle.config.params_for(hyp)?;
    let tree = tree_method(common, &bundle)?;
    let mut model = CaseModel::build(&bundle.data, hypothesis, tree, SlotLayout::Likelihood)?;
    model.bind(&params)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let writer = ReportWriter::new(&common.out)?;
    let mut report = DeconvolveReport {
        hypothesis: hyp.to_string(),
        mass_target: mass,
        seen_only,
        joint,
        rankings: None,
        joint_ranking: None,
        params,
    };
    if joint {
        let ranking = deconvolve_joint(&mut model, mass, seen_only, max_samples, &mut rng)?;
        println!(
            "joint ranking: {} rows cover {:.4} of the posterior mass{}",
            ranking.rows.len(),
            ranking.covered_mass,
            if ranking.stalled { "  [stalled]" } else { "" }
        );
        report.joint_ranking = Some(ranking);
    } else {
        let mut rankings = Vec::new();
        for marker in &mut model.markers {
            let ranking = deconvolve(marker, mass, seen_only, max_samples, &mut rng)?;
            let (header, rows) = ranking_csv(&ranking);
            let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
            writer.write_csv(
                &format!("deconvolve_{}.csv", sanitize(&ranking.marker)),
                &header_refs,
                &rows,
            )?;
            println!(
                "{}: {} rows cover {:.4} of the posterior mass{}",
                ranking.marker,
                ranking.rows.len(),
                ranking.covered_mass,
                if ranking.stalled { "  [stalled]" } else { "" }
            );
            rankings.push(ranking);
        }
        report.rankings = Some(rankings);
    }
    let provenance = Provenance::new("deconvolve", Some(seed), &bundle.digests);
    writer.write_json(&provenance, &report)?;
    Ok(())
}

fn cmd_simulate(common: &CaseArgs, hyp: &str, seed: u64, condition: &str) -> Result<()> {
    let bundle = load(common)?;
    let hypothesis = bundle.config.hypothesis(hyp)?;
    let params = bundle.config.params_for(hyp)?;
    let tree = tree_method(common, &bundle)?;
    let condition = match condition {
        "none" => SimCondition::None,
        "observed" => SimCondition::ObservedPattern,
        other => {
            return Err(Error::domain(format!(
                "unknown simulation condition '{other}' (use none | observed)"
            )))
        }
    };
    let mut model = CaseModel::build(&bundle.data, hypothesis, tree, SlotLayout::Likelihood)?;
    let simulated = simulate_case(&mut model, &params, condition, seed)?;
    let writer = ReportWriter::new(&common.out)?;
    let provenance = Provenance::new("simulate", Some(seed), &bundle.digests);
    writer.write_json(&provenance, &simulated)?;
    writer.write_text(
        "simulated_peaks.csv",
        &crate::io::write_peaks(&simulated.traces, &bundle.data.ladders),
    )?;
    let peaks: usize = simulated
        .traces
        .iter()
        .flat_map(|t| t.heights.values())
        .map(|h| h.iter().filter(|&&z| z > 0.0).count())
        .sum();
    println!(
        "simulated {} trace(s), {peaks} peaks",
        simulated.traces.len()
    );
    Ok(())
}

fn diagnosed_trace(bundle: &CaseBundle, requested: &Option<String>) -> Result<String> {
    match requested {
        Some(id) => {
            if bundle.data.traces.iter().any(|t| &t.id == id) {
                Ok(id.clone())
            } else {
                Err(Error::domain(format!("unknown trace '{id}'")))
            }
        }
        None => Ok(bundle.data.traces[0].id.clone()),
    }
}

fn cmd_diagnose(what: DiagnoseCommand) -> Result<()> {
    match what {
        DiagnoseCommand::Qq {
            common,
            hyp,
            trace,
            mode,
        } => {
            let bundle = load(&common)?;
            let hypothesis = bundle.config.hypothesis(&hyp)?;
            let params = bundle.config.params_for(&hyp)?;
            let tree = tree_method(&common, &bundle)?;
            let trace = diagnosed_trace(&bundle, &trace)?;
            let mode = ConditioningMode::parse(&mode)?;
            let mut model =
                CaseModel::build(&bundle.data, hypothesis, tree, SlotLayout::Diagnostics)?;
            let points = diag::qq_points(&mut model, &params, &trace, mode)?;
            let writer = ReportWriter::new(&common.out)?;
            let provenance = Provenance::new("diagnose qq", None, &bundle.digests);
            writer.write_json(&provenance, &points)?;
            writer.write_csv(
                "qq.csv",
                &[
                    "marker",
                    "trace",
                    "allele",
                    "height",
                    "transform",
                    "position",
                ],
                &points
                    .iter()
                    .map(|p| {
                        vec![
                            p.marker.clone(),
                            p.trace.clone(),
                            format!("{}", p.allele_label),
                            fmt_sig(p.height),
                            fmt_sig(p.transform),
                            fmt_sig(p.position),
                        ]
                    })
                    .collect::<Vec<_>>(),
            )?;
            println!("{} transforms written", points.len());
        }
        DiagnoseCommand::Intervals {
            common,
            hyp,
            trace,
            levels,
        } => {
            let bundle = load(&common)?;
            let hypothesis = bundle.config.hypothesis(&hyp)?;
            let params = bundle.config.params_for(&hyp)?;
            let tree = tree_method(&common, &bundle)?;
            let trace = diagnosed_trace(&bundle, &trace)?;
            let levels: Vec<f64> = levels
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::domain(format!("invalid quantile level '{t}'")))
                })
                .collect::<Result<_>>()?;
            let mut model =
                CaseModel::build(&bundle.data, hypothesis, tree, SlotLayout::Diagnostics)?;
            let rows = diag::prediction_intervals(&mut model, &params, &trace, &levels)?;
            let writer = ReportWriter::new(&common.out)?;
            let provenance = Provenance::new("diagnose intervals", None, &bundle.digests);
            writer.write_json(&provenance, &rows)?;
            let mut header = vec![
                "marker".to_string(),
                "trace".to_string(),
                "allele".to_string(),
                "observed".to_string(),
                "presence_probability".to_string(),
            ];
            header.extend(levels.iter().map(|l| format!("q{l}")));
            let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
            writer.write_csv(
                "intervals.csv",
                &header_refs,
                &rows
                    .iter()
                    .map(|r| {
                        let mut cells = vec![
                            r.marker.clone(),
                            r.trace.clone(),
                            format!("{}", r.allele_label),
                            fmt_sig(r.observed),
                            fmt_sig(r.presence_probability),
                        ];
                        match &r.quantiles {
                            Some(qs) => cells.extend(qs.iter().map(|(_, h)| fmt_sig(*h))),
                            None => cells.extend(levels.iter().map(|_| String::new())),
                        }
                        cells
                    })
                    .collect::<Vec<_>>(),
            )?;
            println!("{} allele rows written", rows.len());
        }
        DiagnoseCommand::Preq { common, hyp, trace } => {
            let bundle = load(&common)?;
            let hypothesis = bundle.config.hypothesis(&hyp)?;
            let params = bundle.config.params_for(&hyp)?;
            let tree = tree_method(&common, &bundle)?;
            let trace = diagnosed_trace(&bundle, &trace)?;
            let mut model =
                CaseModel::build(&bundle.data, hypothesis, tree, SlotLayout::Diagnostics)?;
            let rows = diag::prequential_monitor(&mut model, &params, &trace)?;
            let writer = ReportWriter::new(&common.out)?;
            let provenance = Provenance::new("diagnose preq", None, &bundle.digests);
            writer.write_json(&provenance, &rows)?;
            writer.write_csv(
                "preq.csv",
                &[
                    "step",
                    "marker",
                    "allele",
                    "observed",
                    "presence_probability",
                    "score",
                    "expected",
                    "variance",
                    "cumulative",
                    "normalized",
                    "limit_95",
                    "limit_99",
                ],
                &rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.step.to_string(),
                            r.marker.clone(),
                            format!("{}", r.allele_label),
                            (r.observed as u8).to_string(),
                            fmt_sig(r.presence_probability),
                            fmt_sig(r.score),
                            fmt_sig(r.expected),
                            fmt_sig(r.variance),
                            fmt_sig(r.cumulative),
                            fmt_sig(r.normalized),
                            fmt_sig(r.limit_95),
                            fmt_sig(r.limit_99),
                        ]
                    })
                    .collect::<Vec<_>>(),
            )?;
            let last = rows.last();
            println!(
                "{} steps; final cumulative score {}",
                rows.len(),
                last.map(|r| format!("{:.4}", r.cumulative))
                    .unwrap_or_default()
            );
        }
    }
    Ok(())
}

fn parse_range(text: &str, what: &str) -> Result<(u64, u64)> {
    let parse_one = |t: &str| {
        t.parse::<u64>()
            .map_err(|_| Error::domain(format!("invalid {what} '{t}'")))
    };
    match text.split_once("..") {
        Some((lo, hi)) => Ok((parse_one(lo.trim())?, parse_one(hi.trim())?)),
        None => {
            let v = parse_one(text.trim())?;
            Ok((v, v))
        }
    }
}

/// Measured-compression budget: skip the measurement when the uncompressed
/// tree would be larger than this.
const MEASURE_CAP: u64 = 20_000_000;

fn cmd_treesize(
    method: &str,
    alleles: &str,
    unknowns: &str,
    slots: &str,
    compressed: bool,
    out: Option<PathBuf>,
) -> Result<()> {
    let methods: Vec<TreeMethod> = match method {
        "all" => vec![
            TreeMethod::Slice,
            TreeMethod::Triangle,
            TreeMethod::Optimal,
            TreeMethod::AllelePair,
        ],
        name => vec![TreeMethod::parse(name)?],
    };
    let (a_lo, a_hi) = parse_range(alleles, "allele count")?;
    let (k_lo, k_hi) = parse_range(unknowns, "unknown count")?;
    let (n_lo, n_hi) = parse_range(slots, "slot count")?;
    let mut reports = Vec::new();
    for method in &methods {
        for a in a_lo..=a_hi {
            for k in k_lo..=k_hi {
                for n in n_lo..=n_hi {
                    let total = total_size(*method, a, k, n)?;
                    let compressed_size = if !compressed {
                        None
                    } else {
                        match method {
                            TreeMethod::Slice if a >= 3 => Some(compressed_slice_size(a, k, n)?),
                            // The allele-pair representation is compressed by
                            // construction.
                            TreeMethod::AllelePair => Some(total),
                            _ if total <= MEASURE_CAP => Some(measured_compressed_size(
                                *method, a as usize, k as usize, n as usize,
                            )?),
                            _ => None,
                        }
                    };
                    reports.push(TreeSizeReport {
                        method: method.name().to_string(),
                        allele_count: a,
                        unknowns: k,
                        slots: n,
                        total_size: total,
                        compressed_size,
                    });
                }
            }
        }
    }
    let mut header = vec!["method", "alleles", "unknowns", "slots", "total_size"];
    if compressed {
        header.push("compressed_size");
    }
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let mut cells = vec![
                r.method.clone(),
                r.allele_count.to_string(),
                r.unknowns.to_string(),
                r.slots.to_string(),
                r.total_size.to_string(),
            ];
            if compressed {
                cells.push(
                    r.compressed_size
                        .map(|c| c.to_string())
                        .unwrap_or_default(),
                );
            }
            cells
        })
        .collect();
    println!("{}", header.join(","));
    for row in &rows {
        println!("{}", row.join(","));
    }
    if let Some(dir) = out {
        let writer = ReportWriter::new(&dir)?;
        let provenance = Provenance::new("treesize", None, &[]);
        writer.write_json(&provenance, &reports)?;
        writer.write_csv("treesize.csv", &header, &rows)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PresenceLrReport {
    log10_presence_lr: f64,
    presence_log10_numerator: f64,
    presence_log10_denominator: f64,
    heights_fit: LrResult,
}

fn cmd_presence_lr(common: &CaseArgs, hp: &str, hd: &str, seed: Option<u64>) -> Result<()> {
    let bundle = load(common)?;
    let tree = tree_method(common, &bundle)?;
    let config = optimizer_config(&bundle, seed, false);
    let hyp_p = bundle.config.hypothesis(hp)?.clone();
    let hyp_d = bundle.config.hypothesis(hd)?.clone();
    // Parameters are estimated from the full peak heights; the presence-only
    // likelihood is then evaluated at those estimates without refitting.
    let lr = likelihood_ratio(&bundle.data, &hyp_p, &hyp_d, tree, &config)?;
    let ln10 = std::f64::consts::LN_10;
    let mut model_p = CaseModel::build(&bundle.data, &hyp_p, tree, SlotLayout::Likelihood)?;
    let num = model_p.presence_total_log_likelihood(&lr.numerator.params)? / ln10;
    let mut model_d = CaseModel::build(&bundle.data, &hyp_d, tree, SlotLayout::Likelihood)?;
    let den = model_d.presence_total_log_likelihood(&lr.denominator.params)? / ln10;
    let report = PresenceLrReport {
        log10_presence_lr: num - den,
        presence_log10_numerator: num,
        presence_log10_denominator: den,
        heights_fit: lr,
    };
    let writer = ReportWriter::new(&common.out)?;
    let provenance = Provenance::new("presence-lr", Some(config.seed), &bundle.digests);
    writer.write_json(&provenance, &report)?;
    println!("log10 LR (presence only) = {:.4}", report.log10_presence_lr);
    Ok(())
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Loglik { common, hyp } => cmd_loglik(&common, &hyp),
        Command::Mle {
            common,
            hyp,
            seed,
            se,
        } => cmd_mle(&common, &hyp, seed, se),
        Command::Lr {
            common,
            hp,
            hd,
            seed,
            se,
        } => cmd_lr(&common, &hp, &hd, seed, se),
        Command::Deconvolve {
            common,
            hyp,
            mass,
            seen_only,
            joint,
            seed,
            max_samples,
        } => cmd_deconvolve(&common, &hyp, mass, seen_only, joint, seed, max_samples),
        Command::Simulate {
            common,
            hyp,
            seed,
            condition,
        } => cmd_simulate(&common, &hyp, seed, &condition),
        Command::Diagnose { what } => cmd_diagnose(what),
        Command::Treesize {
            method,
            alleles,
            unknowns,
            slots,
            compressed,
            out,
        } => cmd_treesize(&method, &alleles, &unknowns, &slots, compressed, out),
        Command::PresenceLr {
            common,
            hp,
            hd,
            seed,
        } => cmd_presence_lr(&common, &hp, &hd, seed),
    }
}
