//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail. Pass a substring to run only matching criteria.

use std::panic;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use muss_cli::formats::{self, binary_size, round_to_f32};
use muss_core::bench::{self, QualityModel, SyntheticSpec};
use muss_core::clustering::{combined_objective, kmeans_fit, KMeansConfig};
use muss_core::oracle::{self, BoundKinds, BoundSuite, CheckStatus, LemmaSuite, VerifyReport};
use muss_core::selectors::{self, BaselineKind, DgdsParams, MussParams, Theorem5Bound};
use muss_core::{Dataset, SelectionParams};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn no_violations(report: &VerifyReport, what: &str) -> Result<(), String> {
    ensure(report.passed(), || {
        let v = &report.violations[0];
        format!("{what}: {} violations, first {} at trial {} ({} vs {})", report.violations.len(), v.check, v.trial, v.value, v.bound)
    })
}

fn min_binding_slack(reports: &[VerifyReport]) -> f64 {
    reports
        .iter()
        .flat_map(|r| r.records.iter())
        .flat_map(|t| t.checks.iter())
        .filter(|c| c.binding && c.status != CheckStatus::Skipped)
        .map(|c| c.slack)
        .fold(f64::INFINITY, f64::min)
}

fn lemma1() -> Outcome {
    let start = Instant::now();
    let mut reports = Vec::new();
    let mut combo = 0;
    for k in 2..=6 {
        for lambda in [0.3, 0.5, 0.7, 0.9] {
            let mut suite = LemmaSuite::new(40, k, lambda, 25, 1000 + combo);
            suite.n_min = Some(10);
            combo += 1;
            let report = oracle::verify_lemma1_suite(&suite).map_err(|e| e.to_string())?;
            no_violations(&report, &format!("k={k} lambda={lambda}"))?;
            reports.push(report);
        }
    }
    let trials: usize = reports.iter().map(|r| r.trials).sum();
    let secs = start.elapsed().as_secs_f64();
    ensure(trials == 500, || format!("ran {trials} trials"))?;
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{trials} trials, 0 violations, min slack {:.4}, {secs:.2} s", min_binding_slack(&reports)))
}

fn lemma8() -> Outcome {
    let start = Instant::now();
    let mut reports = Vec::new();
    let mut combo = 0;
    for k in [3, 4] {
        for lambda in [0.1, 0.4, 0.6, 0.9] {
            let mut suite = LemmaSuite::new(14, k, lambda, 25, 2000 + combo);
            suite.n_min = Some(6);
            combo += 1;
            let report = oracle::verify_lemma8_suite(&suite).map_err(|e| e.to_string())?;
            no_violations(&report, &format!("k={k} lambda={lambda}"))?;
            for name in ["lemma8.sweep", "lemma8.sigma_half"] {
                let s = report.summary(name).ok_or(format!("missing {name}"))?;
                ensure(s.passed == 25 && s.failed == 0, || format!("{name}: {s:?}"))?;
            }
            reports.push(report);
        }
    }
    let trials: usize = reports.iter().map(|r| r.trials).sum();
    let secs = start.elapsed().as_secs_f64();
    ensure(trials == 200, || format!("ran {trials} trials"))?;
    ensure(secs < 120.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{trials} trials, sweep and sigma=0.5 both >= OPT/2, min slack {:.4}, {secs:.2} s", min_binding_slack(&reports)))
}

fn theorem4() -> Outcome {
    let mut suite = BoundSuite::new(14, 3, 2, 3, 3, 0.5, 200, 3000);
    suite.n_min = Some(6);
    let report = oracle::verify_bounds(&suite, BoundKinds::THEOREM4).map_err(|e| e.to_string())?;
    no_violations(&report, "theorem4")?;
    let s = report.summary("theorem4").ok_or("missing summary")?;
    ensure(s.passed == 200, || format!("{s:?}"))?;
    Ok(format!("200 trials, F(DGDS) >= F(OPT)/16 everywhere, min slack {:.4}", s.min_slack.unwrap()))
}

fn theorem5() -> Outcome {
    let alpha = Theorem5Bound::new(3, 3, 0.5, 0.5).map_err(|e| e.to_string())?.alpha;
    ensure(alpha == 14.0, || format!("alpha at k = m, lambda = lambda_c is {alpha}"))?;
    let mut suite = BoundSuite::new(14, 3, 2, 3, 3, 0.5, 200, 4000);
    suite.n_min = Some(6);
    let report = oracle::verify_bounds(&suite, BoundKinds::THEOREM5).map_err(|e| e.to_string())?;
    no_violations(&report, "theorem5")?;
    let s = report.summary("theorem5").ok_or("missing summary")?;
    ensure(s.passed == 200, || format!("{s:?}"))?;
    let b = Theorem5Bound::new(3, 2, 0.5, 0.5).unwrap();
    Ok(format!(
        "200 trials, alpha = {:.0}, beta = {:.0}, min slack {:.4}; alpha = 14 at k = m",
        b.alpha,
        b.beta,
        s.min_slack.unwrap()
    ))
}

fn instance(seed: u64) -> Dataset {
    let n = 20 + (seed % 21) as usize;
    oracle::random_instance(n, 3, seed)
}

fn collapse() -> Outcome {
    for seed in 0..50u64 {
        let ds = instance(5000 + seed);
        let n = ds.len();
        let k = 2 + (seed % 6) as usize;
        let lambda = [0.2, 0.5, 0.8][(seed % 3) as usize];
        let greedy = selectors::mmr_select(&ds, &SelectionParams::new(k, lambda)).unwrap().selected;

        let muss = MussParams::new(k, n, 1, 1, lambda).with_seed(seed);
        let (_, r) = selectors::muss_fit_select(&ds, &muss, 0.0).unwrap();
        ensure(r.selected == greedy, || format!("seed {seed}: MUSS(l = m = 1) {:?} vs greedy {greedy:?}", r.selected))?;

        let dgds = DgdsParams::new(k, k, 1, lambda).with_seed(seed);
        let r = selectors::dgds_select(&ds, &dgds).unwrap();
        ensure(r.selected == greedy, || format!("seed {seed}: DGDS(l = 1) {:?} vs greedy {greedy:?}", r.selected))?;

        let top = selectors::top_k_quality(&ds, k);
        let l = 4;
        let m = 2;
        let base = MussParams::new(k, k, l, m, 1.0).with_seed(seed);
        let model = kmeans_fit(&ds, &KMeansConfig::new(l, seed)).unwrap();
        let runs = [
            ("mmr", selectors::mmr_select(&ds, &SelectionParams::new(k, 1.0)).unwrap().selected),
            ("muss", selectors::muss_select(&ds, &model, &base).unwrap().selected),
            ("muss-prime", selectors::muss_select(&ds, &model, &MussParams { sigma_final: 0.5, ..base }).unwrap().selected),
            ("rand-a", selectors::ablation_rand_a(&ds, &model, &base).unwrap().selected),
            ("rand-b", selectors::ablation_rand_b(&ds, &base).unwrap().selected),
            ("dgds", selectors::dgds_select(&ds, &DgdsParams::new(k, k, l, 1.0).with_seed(seed)).unwrap().selected),
        ];
        for (name, sel) in runs {
            ensure(sel == top, || format!("seed {seed}: {name} at lambda = 1 gave {sel:?}, top-k {top:?}"))?;
        }
    }
    Ok("50 instances each: MUSS(l=m=1, k'>=n), DGDS(l=1) match greedy; 6 methods match top-k at lambda=1".into())
}

fn determinism() -> Outcome {
    let spec = SyntheticSpec { n: 10_000, dim: 8, blobs: 8, blob_spread: 0.3, ..Default::default() };
    let ds = bench::generate(&spec).unwrap();
    let (k, kw, l, m, lambda, seed) = (50, 10, 50, 10, 0.5, 77);
    let run = |method: &str, workers: usize| -> Vec<usize> {
        let muss = MussParams::new(k, kw, l, m, lambda).with_workers(workers).with_seed(seed);
        match method {
            "mmr" => selectors::mmr_select(&ds, &SelectionParams::new(k, lambda)).unwrap().selected,
            "muss" => selectors::muss_fit_select(&ds, &muss, 0.0).unwrap().1.selected,
            "muss-prime" => selectors::muss_fit_select(&ds, &MussParams { sigma_final: 0.5, ..muss }, 0.0).unwrap().1.selected,
            "rand-a" => {
                let model = kmeans_fit(&ds, &KMeansConfig::new(l, seed)).unwrap();
                selectors::ablation_rand_a(&ds, &model, &muss).unwrap().selected
            }
            "rand-b" => selectors::ablation_rand_b(&ds, &muss).unwrap().selected,
            "dgds" => {
                let p = DgdsParams::new(k, kw, l, lambda).with_workers(workers).with_seed(seed);
                selectors::dgds_select(&ds, &p).unwrap().selected
            }
            "random" => selectors::baseline_select(&ds, BaselineKind::Random, k, lambda, seed).unwrap().selected,
            "topk" => selectors::baseline_select(&ds, BaselineKind::TopkQuality, k, lambda, seed).unwrap().selected,
            "cluster-reps" => selectors::baseline_select(&ds, BaselineKind::ClusterReps, k, lambda, seed).unwrap().selected,
            _ => unreachable!(),
        }
    };
    let methods = ["mmr", "muss", "muss-prime", "dgds", "rand-a", "rand-b", "random", "topk", "cluster-reps"];
    for method in methods {
        let reference = run(method, 1);
        ensure(reference.len() == k, || format!("{method}: selected {} items", reference.len()))?;
        for workers in [1, 2, 8] {
            for pass in 0..2 {
                let again = run(method, workers);
                ensure(again == reference, || format!("{method}: workers = {workers}, pass {pass} differs"))?;
            }
        }
    }
    Ok(format!("{} selectors identical across workers {{1, 2, 8}} x 2 runs on n = 10000", methods.len()))
}

fn cost_of_cluster(ds: &Dataset, members: &[usize], mu: &[f64], phi: f64, w: f64) -> f64 {
    members
        .iter()
        .map(|&i| {
            let d2: f64 = ds.embedding(i).iter().zip(mu).map(|(x, c)| (x - c) * (x - c)).sum();
            d2 + w * (ds.quality(i) - phi).powi(2)
        })
        .sum()
}

fn kmeans() -> Outcome {
    let h = 1e-4;
    let mut worst_grad: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for seed in 0..50u64 {
        let spec = SyntheticSpec {
            n: 200 + 20 * seed as usize,
            dim: 2 + (seed % 5) as usize,
            blobs: 2 + (seed % 4) as usize,
            blob_spread: 0.2,
            quality_model: QualityModel::BlobBiased,
            seed,
            ..Default::default()
        };
        let ds = bench::generate(&spec).unwrap();
        let w = [0.0, 0.5, 2.0][(seed % 3) as usize];
        let l = 2 + (seed % 7) as usize;
        // The fit asserts in-loop that WCSS never increases.
        let model = kmeans_fit(&ds, &KMeansConfig::new(l, seed).with_quality_weight(w)).unwrap();
        for pair in model.wcss_history.windows(2) {
            ensure(pair[1] <= pair[0] * (1.0 + 1e-9), || format!("seed {seed}: WCSS rose {} -> {}", pair[0], pair[1]))?;
        }
        let recomputed = combined_objective(&ds, &model.centroids, &model.quality_centers, &model.assignments, w);
        let rel = (recomputed - model.wcss).abs() / model.wcss.max(f64::MIN_POSITIVE);
        worst_rel = worst_rel.max(rel);
        ensure(rel <= 1e-6, || format!("seed {seed}: stored {} vs recomputed {recomputed}", model.wcss))?;

        for (j, members) in model.members().iter().enumerate() {
            let mu = &model.centroids[j];
            let phi = model.quality_centers[j];
            for c in 0..=ds.dim() {
                let shifted = |delta: f64| {
                    let mut mu = mu.clone();
                    let mut phi = phi;
                    if c < ds.dim() {
                        mu[c] += delta;
                    } else {
                        phi += delta;
                    }
                    cost_of_cluster(&ds, members, &mu, phi, w)
                };
                let g = (shifted(h) - shifted(-h)) / (2.0 * h);
                worst_grad = worst_grad.max(g.abs());
                ensure(g.abs() < 1e-5, || format!("seed {seed}: cluster {j} coordinate {c} gradient {g:e}"))?;
            }
        }
    }
    Ok(format!("50 fits, WCSS monotone, recompute rel err <= {worst_rel:.1e}, max |gradient| {worst_grad:.1e}"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn figure1() -> Outcome {
    let spec = SyntheticSpec { n: 100_000, dim: 32, blobs: 20, blob_spread: 0.5, seed: 1, ..Default::default() };
    let ds = bench::generate(&spec).unwrap();
    let (k, kw, l, m, lambda) = (500, 50, 500, 100, 0.5);
    // Clustering is a preprocessing step; a capped iteration count keeps it short.
    let t = Instant::now();
    let model = kmeans_fit(&ds, &KMeansConfig::new(l, 7).with_max_iters(10)).unwrap();
    let clustering_s = t.elapsed().as_secs_f64();

    let mut mmr_times = Vec::new();
    let mut muss_times = Vec::new();
    let mut mmr_obj = 0.0;
    let mut muss_obj = 0.0;
    for _ in 0..3 {
        let r = selectors::mmr_select(&ds, &SelectionParams::new(k, lambda)).unwrap();
        mmr_times.push(r.wall_time_ms);
        mmr_obj = r.objective_mean_scaled;
        let r = selectors::muss_select(&ds, &model, &MussParams::new(k, kw, l, m, lambda)).unwrap();
        muss_times.push(r.wall_time_ms);
        muss_obj = r.objective_mean_scaled;
    }
    let (t_mmr, t_muss) = (median(mmr_times), median(muss_times));
    let ratio = t_muss / t_mmr;
    let gap = (mmr_obj - muss_obj) / mmr_obj;
    let detail = format!(
        "MUSS {t_muss:.0} ms vs MMR {t_mmr:.0} ms (ratio {ratio:.3}), objective {muss_obj:.4} vs {mmr_obj:.4} (gap {:.2}%), clustering {clustering_s:.1} s",
        100.0 * gap
    );
    ensure(ratio <= 0.25, || detail.clone())?;
    ensure(gap <= 0.02, || detail.clone())?;
    Ok(detail)
}

fn ablation() -> Outcome {
    let (k, kw, l, m, lambda) = (20, 10, 20, 5, 0.5);
    let (mut muss, mut rand_a, mut rand_b) = (0.0, 0.0, 0.0);
    for seed in 0..20u64 {
        let spec = SyntheticSpec {
            n: 2000,
            dim: 8,
            blobs: 4,
            blob_spread: 0.3,
            quality_model: QualityModel::BlobBiased,
            seed,
            ..Default::default()
        };
        let ds = bench::generate(&spec).unwrap();
        let p = MussParams::new(k, kw, l, m, lambda).with_seed(seed);
        let (model, r) = selectors::muss_fit_select(&ds, &p, 0.0).unwrap();
        muss += r.objective_mean_scaled / 20.0;
        rand_a += selectors::ablation_rand_a(&ds, &model, &p).unwrap().objective_mean_scaled / 20.0;
        rand_b += selectors::ablation_rand_b(&ds, &p).unwrap().objective_mean_scaled / 20.0;
    }
    let detail = format!("mean objective MUSS {muss:.4}, rand.A {rand_a:.4}, rand.B {rand_b:.4} over 20 seeds");
    ensure(muss >= rand_a && muss >= rand_b, || detail.clone())?;
    Ok(detail)
}

fn formats() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for labels in [0.0, 0.3] {
        let spec = SyntheticSpec { n: 500, dim: 7, relevant_fraction: labels, seed: 3, ..Default::default() };
        let ds = bench::generate(&spec).unwrap();
        let rounded = round_to_f32(&ds);
        let bin = dir.path().join("d.bin");
        let jsonl = dir.path().join("d.jsonl");
        let bin2 = dir.path().join("d2.bin");

        formats::save_dataset(&ds, &bin, formats::Format::Bin).unwrap();
        let size = std::fs::metadata(&bin).unwrap().len();
        ensure(size == binary_size(500, 7, labels > 0.0), || format!("binary size {size}"))?;
        let from_bin = formats::load_dataset(&bin).unwrap();
        ensure(from_bin == rounded, || "memory -> binary -> memory differs at f32".into())?;

        formats::save_dataset(&from_bin, &jsonl, formats::Format::Jsonl).unwrap();
        let from_jsonl = formats::load_dataset(&jsonl).unwrap();
        ensure(from_jsonl == from_bin, || "binary -> JSONL -> memory differs".into())?;

        formats::save_dataset(&from_jsonl, &bin2, formats::Format::Bin).unwrap();
        ensure(std::fs::read(&bin).unwrap() == std::fs::read(&bin2).unwrap(), || "binary -> JSONL -> binary bytes differ".into())?;

        formats::save_dataset(&ds, &jsonl, formats::Format::Jsonl).unwrap();
        ensure(formats::load_dataset(&jsonl).unwrap() == ds, || "memory -> JSONL -> memory differs".into())?;
    }
    for (flags, expected) in [(vec![], 2024u64), (vec!["--relevant-frac", "0.2"], 24 + 100 * 21)] {
        let out = dir.path().join("g.bin");
        let status = Command::new(env!("CARGO_BIN_EXE_muss"))
            .args(["gen", "--n", "100", "--dim", "4", "--blobs", "2", "--format", "bin", "--out"])
            .arg(&out)
            .args(&flags)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        let size = std::fs::metadata(Path::new(&out)).unwrap().len();
        ensure(size == expected, || format!("muss gen wrote {size} bytes, expected {expected}"))?;
    }
    Ok("binary <-> JSONL <-> memory equal at f32, binary sizes match 24 + n(4d + 4 + labels)".into())
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 10] = [
        ("lemma1 suite", lemma1),
        ("lemma8 half-approximation", lemma8),
        ("theorem4 DGDS bound", theorem4),
        ("theorem5 MUSS' bound", theorem5),
        ("degenerate-collapse equivalences", collapse),
        ("determinism across workers", determinism),
        ("k-means properties", kmeans),
        ("figure-1 analogue", figure1),
        ("ablation ordering", ablation),
        ("format round-trips", formats),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} [{secs:.1} s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} [{secs:.1} s]: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
