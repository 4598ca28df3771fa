use std::io::Write;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use muss_core::bench::{self, BenchConfig, BenchGrid, Method, SyntheticSpec};
use muss_core::clustering::{self, ClusterModel, KMeansConfig};
use muss_core::greedy::greedy_select_sigma_sweep;
use muss_core::oracle::{self, BoundKinds, BoundSuite, LemmaSuite, VerifyReport};
use muss_core::seed::derive_seed;
use muss_core::selectors::{self, BaselineKind, DgdsParams, MussParams};
use muss_core::{Criterion, Dataset, SelectionParams, SelectionResult};

use crate::args::{BenchArgs, ClusterArgs, GenArgs, SelectArgs, Suite, VerifyArgs};
use crate::error::{CliError, Result};
use crate::files::{self, ModelFile, ResultFile, MODEL_SCHEMA, RESULT_SCHEMA};
use crate::formats::{self, Format};

fn load(path: &Path, l2_normalize: bool) -> Result<Dataset> {
    let t = Instant::now();
    let ds = formats::load_dataset(path)?;
    info!("loaded {} items of dimension {} in {:.1} ms", ds.len(), ds.dim(), t.elapsed().as_secs_f64() * 1e3);
    Ok(if l2_normalize { ds.l2_normalized() } else { ds })
}

fn emit_json<T: serde::Serialize>(value: &T, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => files::write_json(value, p),
        None => {
            serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::runtime(e.to_string()))?;
            writeln!(out).map_err(|e| CliError::runtime(e.to_string()))
        }
    }
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| CliError::runtime(e.to_string()))
}

pub fn gen(args: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let spec = SyntheticSpec {
        n: args.n,
        dim: args.dim,
        blobs: args.blobs,
        blob_spread: args.spread,
        blob_separation: args.separation,
        quality_model: args.quality_model,
        relevant_fraction: args.relevant_frac,
        seed: args.seed,
    };
    let ds = bench::generate(&spec)?;
    let format = args.format.unwrap_or_else(|| Format::from_extension(&args.out));
    formats::save_dataset(&ds, &args.out, format)?;
    say(out, format_args!("generated n={} d={} blobs={} -> {}", ds.len(), ds.dim(), args.blobs, args.out.display()))
}

pub fn cluster(args: &ClusterArgs, out: &mut dyn Write) -> Result<()> {
    let ds = load(&args.input, args.l2_normalize)?;
    let mut config = KMeansConfig::new(args.l, args.seed)
        .with_quality_weight(args.quality_weight)
        .with_max_iters(args.max_iters);
    config.tol = args.tol;
    let t = Instant::now();
    let model = clustering::kmeans_fit(&ds, &config)?;
    info!("k-means: {} iterations in {:.1} ms", model.iterations_run, t.elapsed().as_secs_f64() * 1e3);
    let summaries = clustering::summarize_clusters(&ds, &model)?;
    let (wcss, iters) = (model.wcss, model.iterations_run);
    let file = ModelFile { schema: MODEL_SCHEMA.into(), n: ds.len(), config, model, summaries };
    emit_json(&file, args.model_out.as_deref(), out)?;
    if args.model_out.is_some() {
        say(out, format_args!("clusters={} wcss={wcss} iterations={iters}", args.l))?;
    }
    Ok(())
}

const QUALITY_AWARE: [Method; 6] =
    [Method::Mmr, Method::Muss, Method::MussPrime, Method::Dgds, Method::RandA, Method::RandB];

fn require_flags(method: Method, args: &SelectArgs, has_model: bool) -> Result<()> {
    let mut missing = Vec::new();
    let partitions = matches!(method, Method::Muss | Method::MussPrime | Method::RandA | Method::RandB | Method::Dgds);
    let multilevel = matches!(method, Method::Muss | Method::MussPrime | Method::RandA | Method::RandB);
    let model_ok = has_model && matches!(method, Method::Muss | Method::MussPrime | Method::RandA);
    if QUALITY_AWARE.contains(&method) && args.lambda.is_none() {
        missing.push("--lambda");
    }
    if partitions && args.kw.is_none() {
        missing.push("--kw");
    }
    if partitions && args.l.is_none() && !model_ok {
        missing.push("--l");
    }
    if multilevel && args.m.is_none() {
        missing.push("--m");
    }
    if !missing.is_empty() {
        return Err(CliError::usage(format!("--method {} requires {}", method.name(), missing.join(", "))));
    }
    if args.sigma_sweep && !matches!(method, Method::Mmr) && !multilevel {
        return Err(CliError::usage("--sigma-sweep applies to mmr and the multilevel methods only"));
    }
    if args.model.is_some() && !model_ok {
        warn!("--model is ignored by --method {}", method.name());
    }
    Ok(())
}

/// Fits a model with the same seed `muss_fit_select` uses.
fn fit_model(ds: &Dataset, args: &SelectArgs, params: &MussParams) -> Result<(ClusterModel, f64)> {
    let cfg = KMeansConfig::new(params.l, derive_seed(params.seed, "kmeans", 0))
        .with_quality_weight(args.quality_weight)
        .with_max_iters(args.max_iters);
    let t = Instant::now();
    let model = clustering::kmeans_fit(ds, &cfg)?;
    let ms = t.elapsed().as_secs_f64() * 1e3;
    info!("k-means: {} clusters, {} iterations in {ms:.1} ms", params.l, model.iterations_run);
    Ok((model, ms))
}

pub fn run_select(ds: &Dataset, args: &SelectArgs) -> Result<SelectionResult> {
    let method = args.method;
    require_flags(method, args, args.model.is_some())?;
    let mut warnings = Vec::new();
    let k = if args.k > ds.len() {
        let msg = format!("k = {} exceeds the {} available items; clamped", args.k, ds.len());
        warn!("{msg}");
        warnings.push(msg);
        ds.len()
    } else {
        args.k
    };
    let lambda = args.lambda.unwrap_or(0.5);
    let criterion: Criterion = args.criterion.into();
    let normalize = !args.no_normalize;
    let kw = args.kw.unwrap_or(0);

    let mut result = match method {
        Method::Mmr => {
            let params = SelectionParams::new(k, lambda).with_criterion(criterion).with_normalize(normalize);
            if args.sigma_sweep {
                let pool: Vec<usize> = (0..ds.len()).collect();
                greedy_select_sigma_sweep(ds, &pool, &params)?
            } else {
                selectors::mmr_select(ds, &params)?
            }
        }
        Method::Muss | Method::MussPrime | Method::RandA | Method::RandB => {
            let mut params = MussParams::new(k, kw, args.l.unwrap_or(0), args.m.unwrap_or(0), lambda)
                .with_lambda_c(args.lambda_c.unwrap_or(lambda))
                .with_workers(args.workers)
                .with_seed(args.seed)
                .with_normalize(normalize);
            params.criterion = criterion;
            params.sigma_sweep = args.sigma_sweep;
            if method == Method::MussPrime {
                params.sigma_final = 0.5;
            }
            if method == Method::RandB {
                selectors::ablation_rand_b(ds, &params)?
            } else {
                let (model, clustering_ms) = match &args.model {
                    Some(path) => {
                        let file = files::read_model(path)?;
                        if let Some(l) = args.l.filter(|&l| l != file.model.l) {
                            return Err(CliError::usage(format!(
                                "--l {l} disagrees with the model's {} clusters",
                                file.model.l
                            )));
                        }
                        file.model.validate_for(ds)?;
                        params.l = file.model.l;
                        (file.model, None)
                    }
                    None => fit_model(ds, args, &params).map(|(m, ms)| (m, Some(ms)))?,
                };
                let mut r = if method == Method::RandA {
                    selectors::ablation_rand_a(ds, &model, &params)?
                } else {
                    selectors::muss_select(ds, &model, &params)?
                };
                if let Some(st) = r.stage_times.as_mut() {
                    st.clustering_ms = clustering_ms;
                }
                r
            }
        }
        Method::Dgds => {
            let mut params = DgdsParams::new(k, kw, args.l.unwrap_or(0), lambda)
                .with_workers(args.workers)
                .with_seed(args.seed)
                .with_normalize(normalize);
            params.criterion = criterion;
            selectors::dgds_select(ds, &params)?
        }
        Method::Random | Method::Topk | Method::ClusterReps => {
            let kind = match method {
                Method::Random => BaselineKind::Random,
                Method::Topk => BaselineKind::TopkQuality,
                _ => BaselineKind::ClusterReps,
            };
            selectors::baseline_select(ds, kind, k, lambda, args.seed)?
        }
    };
    if let Some(st) = &result.stage_times {
        info!(
            "stages (ms): partition {:.1}, cluster selection {:.1}, within {:.1}, top quality {:.1}, final {:.1}",
            st.partition_ms, st.cluster_selection_ms, st.within_ms, st.top_quality_ms, st.final_ms
        );
    }
    warnings.append(&mut result.warnings);
    result.warnings = warnings;
    Ok(result)
}

pub fn select(args: &SelectArgs, out: &mut dyn Write) -> Result<()> {
    if args.workers == 0 {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    let ds = load(&args.input, args.l2_normalize)?;
    let result = run_select(&ds, args)?;
    let precision = if ds.has_labels() { Some(bench::precision_at_k(&ds, &result)?) } else { None };
    let file = ResultFile {
        schema: RESULT_SCHEMA.into(),
        method: args.method.name().into(),
        n: ds.len(),
        dim: ds.dim(),
        precision,
        result,
    };
    emit_json(&file, args.out.as_deref(), out)?;
    if args.out.is_some() {
        let r = &file.result;
        say(
            out,
            format_args!(
                "{}: selected {} items, objective {:.6} (mean-scaled {:.6}) in {:.1} ms",
                file.method,
                r.selected.len(),
                r.objective,
                r.objective_mean_scaled,
                r.wall_time_ms
            ),
        )?;
    }
    Ok(())
}

fn load_gen_spec(path: &Path) -> Result<SyntheticSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn bench(args: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let ds = match (&args.input, &args.gen_spec) {
        (Some(p), _) => load(p, args.l2_normalize)?,
        (None, Some(spec)) => {
            let ds = bench::generate(&load_gen_spec(spec)?)?;
            if args.l2_normalize { ds.l2_normalized() } else { ds }
        }
        (None, None) => return Err(CliError::usage("one of --input or --gen-spec is required")),
    };
    let partitions = args.methods.iter().any(|m| {
        matches!(m, Method::Muss | Method::MussPrime | Method::RandA | Method::RandB | Method::Dgds)
    });
    let multilevel = args.methods.iter().any(|m| matches!(m, Method::Muss | Method::MussPrime | Method::RandA | Method::RandB));
    let mut missing = Vec::new();
    if partitions && args.kw.is_empty() {
        missing.push("--kw");
    }
    if partitions && args.l.is_empty() {
        missing.push("--l");
    }
    if multilevel && args.m.is_empty() {
        missing.push("--m");
    }
    if !missing.is_empty() {
        return Err(CliError::usage(format!("the selected methods require {}", missing.join(", "))));
    }
    let grid = BenchGrid {
        k: args.k,
        k_within: args.kw.clone(),
        lambda: args.lambda_grid.clone(),
        lambda_c: args.lambda_c_grid.clone(),
        l: args.l.clone(),
        m: args.m.clone(),
    };
    let mut config = BenchConfig::new(args.methods.clone(), grid, args.repeats, args.seed);
    config.workers = args.workers;
    config.warmup = !args.no_warmup;
    config.criterion = args.criterion.into();
    config.normalize_by_size = !args.no_normalize;
    config.quality_weight = args.quality_weight;
    config.kmeans_max_iters = args.max_iters;
    let report = bench::run_benchmark(&ds, &config)?;

    for row in &report.rows {
        let obj = row.objective_mean_scaled.map_or("-".to_string(), |s| format!("{:.4}", s.mean));
        let prec = row.precision.map_or("-".to_string(), |s| format!("{:.3}", s.mean));
        let time = row.wall_time_median_ms.map_or("-".to_string(), |t| format!("{t:.1}"));
        say(
            out,
            format_args!(
                "{:<13} lambda={:<5} objective={obj} precision={prec} median_ms={time} failures={}",
                row.method.name(),
                row.cell.lambda,
                row.failures
            ),
        )?;
    }
    if let Some(p) = &args.out_csv {
        files::save_bench_csv(&report, p)?;
    }
    if let Some(p) = &args.out_json {
        files::write_json(&report, p)?;
    }
    if report.rows.iter().all(|r| r.runs == 0) {
        let first = report.rows.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        return Err(CliError::runtime(format!("every benchmark row failed: {first}")));
    }
    Ok(())
}

pub fn run_verify(args: &VerifyArgs) -> Result<VerifyReport> {
    let lambda = args.lambda.unwrap_or(0.5);
    let report = match args.suite {
        Suite::Lemma1 | Suite::Lemma8 => {
            let (n, k) = match args.suite {
                Suite::Lemma1 => (args.n.unwrap_or(20), args.k.unwrap_or(3)),
                _ => (args.n.unwrap_or(10), args.k.unwrap_or(3)),
            };
            let mut suite = LemmaSuite::new(n, k, lambda, args.trials, args.seed);
            suite.n_min = args.n_min;
            suite.dim = args.dim;
            if args.suite == Suite::Lemma1 {
                oracle::verify_lemma1_suite(&suite)?
            } else {
                oracle::verify_lemma8_suite(&suite)?
            }
        }
        Suite::Theorem4 | Suite::Theorem5 => {
            let k = args.k.unwrap_or(3);
            let mut suite = BoundSuite::new(
                args.n.unwrap_or(12),
                k,
                args.m.unwrap_or(2),
                args.l.unwrap_or(3),
                args.kw.unwrap_or(k),
                lambda,
                args.trials,
                args.seed,
            );
            suite.lambda_c = args.lambda_c.unwrap_or(lambda);
            suite.n_min = args.n_min;
            suite.dim = args.dim;
            let kinds = if args.suite == Suite::Theorem4 { BoundKinds::THEOREM4 } else { BoundKinds::THEOREM5 };
            oracle::verify_bounds(&suite, kinds)?
        }
    };
    Ok(report)
}

pub fn verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<()> {
    let report = run_verify(args)?;
    for s in &report.summaries {
        let slack = s.min_slack.map_or("-".to_string(), |v| format!("{v:.6}"));
        say(
            out,
            format_args!(
                "{}{}: {} passed, {} failed, {} skipped, min slack {slack}",
                s.name,
                if s.binding { "" } else { " (informational)" },
                s.passed,
                s.failed,
                s.skipped
            ),
        )?;
    }
    say(out, format_args!("{} trials, {} violations", report.trials, report.violations.len()))?;
    if let Some(p) = &args.out {
        files::write_json(&report, p)?;
    }
    if report.passed() {
        Ok(())
    } else {
        let v = &report.violations[0];
        Err(CliError::Violation(format!(
            "{} violation(s); first: {} at trial {} (value {}, bound {})",
            report.violations.len(),
            v.check,
            v.trial,
            v.value,
            v.bound
        )))
    }
}
