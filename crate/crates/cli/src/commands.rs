//! Subcommand implementations. Each returns after writing its files; the
//! binary only maps errors to exit codes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use hrk_core::active::{run, AlConfig, Problem};
use hrk_core::functions::registry;
use hrk_core::metrics::{normal_quantile, ALPHA};
use hrk_core::{fit, AlTrace, Dataset, FitOptions, FitRecord, FitStatus, HrkFit, ModelKind, Scaling};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Source};
use crate::summary::{summarize, write_summary};
use crate::table::read_table_file;

/// Key facts about a fit, printed by `hrk fit`.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub lines: Vec<(String, String)>,
    pub record: FitRecord,
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// `hrk fit`: fits `model` to a `x1..xp,y` table and writes the model as JSON.
pub fn cmd_fit(data: &Path, model: ModelKind, seed: u64, output: &Path) -> Result<FitReport> {
    let table = read_table_file(data, true)?;
    let y = table.y.expect("response column");
    if table.x.len() < 2 {
        bail!("{}: need at least 2 data rows, found {}", data.display(), table.x.len());
    }
    let dataset = Dataset::from_native(&table.x, y).with_context(|| format!("invalid data in {}", data.display()))?;
    let started = Instant::now();
    let f = fit(model, &dataset, &FitOptions::with_seed(seed))?;
    let elapsed = started.elapsed().as_secs_f64() * 1e3;

    let info = f.info();
    let n = dataset.n();
    let c = f.ctilde().rows(1, n);
    let mut lines = vec![
        ("model".to_string(), model.to_string()),
        ("n".to_string(), n.to_string()),
        ("p".to_string(), dataset.dim().to_string()),
        ("theta".to_string(), fmt_vec(f.kernel().lengthscales())),
        ("mu".to_string(), f.mu().to_string()),
        ("nu2".to_string(), f.nu2().to_string()),
        ("c0".to_string(), f.c0().to_string()),
        ("c_norm".to_string(), c.norm().to_string()),
        ("jitter".to_string(), format!("{:e}", f.system().jitter())),
        ("log_likelihood".to_string(), info.log_likelihood.to_string()),
        ("status".to_string(), info.status.to_string()),
    ];
    if let (Some(a), Some(b)) = (info.g_start, info.g_final) {
        lines.push(("g_rk".to_string(), a.to_string()));
        lines.push(("g_final".to_string(), b.to_string()));
    }
    if let Some(s) = info.optimizer {
        lines.push(("optimizer".to_string(), s.to_string()));
    }
    if let Some(k) = info.optimizer_iterations {
        lines.push(("optimizer_iterations".to_string(), k.to_string()));
    }
    if let Some(w) = &info.warning {
        lines.push(("warning".to_string(), w.clone()));
    }
    if info.status == FitStatus::Degenerate {
        lines.push(("warning".to_string(), "response is constant; degenerate constant predictor".to_string()));
    }
    lines.push(("fit_ms".to_string(), format!("{elapsed:.3}")));
    lines.push(("model_file".to_string(), output.display().to_string()));

    let record = f.to_record();
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let file = File::create(output).with_context(|| format!("cannot write {}", output.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &record)?;
    Ok(FitReport { lines, record })
}

pub fn load_model(path: &Path) -> Result<HrkFit> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read model file {}", path.display()))?;
    let rec: FitRecord = serde_json::from_str(&text).with_context(|| format!("{} is not a model file", path.display()))?;
    Ok(HrkFit::from_record(rec)?)
}

/// `hrk predict`: writes `x1..xp,mean,sd,tau` for native-unit points.
pub fn cmd_predict<W: Write>(model: &Path, points: &Path, out: W) -> Result<()> {
    let f = load_model(model)?;
    let table = read_table_file(points, false)?;
    let p = f.data().dim();
    if table.x.dim() != p {
        bail!("dimension mismatch: model has {p} inputs, {} has {}", points.display(), table.x.dim());
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    header.extend(["mean", "sd", "tau"].map(String::from));
    w.write_record(&header)?;
    let scaling: &Scaling = f.data().scaling();
    for x in table.x.rows() {
        let u = scaling.to_unit(x);
        let pr = f.predict(&u)?;
        let tau = f.tau(&u)?;
        let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        rec.extend([pr.mean, pr.sd(), tau].map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Result of `hrk al`.
#[derive(Debug)]
pub struct AlOutcome {
    pub out_dir: PathBuf,
    pub trace_files: Vec<PathBuf>,
    pub summary_file: PathBuf,
    /// Failed replicates as `(model, replicate, message)`.
    pub failures: Vec<(ModelKind, usize, String)>,
    /// Models whose replicates all failed.
    pub failed_models: Vec<ModelKind>,
}

pub fn trace_file_name(model: ModelKind, rep: usize) -> String {
    format!("trace_{model}_rep{rep:03}.csv")
}

/// `hrk al`: replicated active learning with one trace file per
/// (model, replicate) and a summary file.
pub fn cmd_al(cfg: &ExperimentConfig, seed: Option<u64>, out_dir: Option<&Path>, threads: usize) -> Result<AlOutcome> {
    let source = cfg.source()?;
    let seed = seed.unwrap_or(cfg.seed);
    let out_dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;

    let pool_data = match &source {
        Source::Dataset(path) => {
            let t = read_table_file(path, true)?;
            let y = t.y.expect("response column");
            let ds = Dataset::from_native(&t.x, y).with_context(|| format!("invalid data in {}", path.display()))?;
            Some(ds)
        }
        Source::Function(_) => None,
    };
    let (p, label) = match (&source, &pool_data) {
        (Source::Function(f), _) => (f.dim(), format!("function {}", f.id)),
        (Source::Dataset(path), Some(ds)) => (ds.dim(), format!("dataset {}", path.display())),
        _ => unreachable!(),
    };
    let n_ini = cfg.n_ini_for(p);
    if cfg.budget < n_ini {
        bail!("invalid config: budget {} below n_ini {n_ini}", cfg.budget);
    }
    if n_ini < 2 {
        bail!("invalid config: n_ini must be at least 2");
    }

    let header = vec![
        ("source".to_string(), label.clone()),
        ("models".to_string(), cfg.models.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")),
        ("n_ini".to_string(), n_ini.to_string()),
        ("budget".to_string(), cfg.budget.to_string()),
        ("replicates".to_string(), cfg.replicates.to_string()),
        ("base_seed".to_string(), seed.to_string()),
        (
            "seed_derivation".to_string(),
            "base xor splitmix64(splitmix64(splitmix64(rep) xor step) xor stream)".to_string(),
        ),
    ];

    let jobs: Vec<(ModelKind, usize)> = cfg
        .models
        .iter()
        .flat_map(|&m| (0..cfg.replicates).map(move |r| (m, r)))
        .collect();
    let run_one = |&(model, rep): &(ModelKind, usize)| -> (ModelKind, usize, Result<AlTrace, String>, PathBuf) {
        let al = AlConfig {
            model,
            budget: cfg.budget,
            n_ini,
            seed,
            replicate: rep as u64,
            warm_start: cfg.warm_start,
            test_size: cfg.test_size,
            initial: cfg.initial(),
            search: Default::default(),
        };
        let result = match (&source, &pool_data) {
            (Source::Function(f), _) => run(&al, Problem::Function(f)),
            (Source::Dataset(_), Some(ds)) => run(
                &al,
                Problem::Pool {
                    x: ds.x(),
                    y: ds.y(),
                    scaling: ds.scaling(),
                },
            ),
            _ => unreachable!(),
        };
        let path = out_dir.join(trace_file_name(model, rep));
        let written = write_trace(&path, &header, model, rep, &result, p);
        let result = match (result, written) {
            (Ok(t), Ok(())) => Ok(t),
            (Err(e), _) => Err(e.to_string()),
            (Ok(_), Err(e)) => Err(format!("cannot write {}: {e}", path.display())),
        };
        (model, rep, result, path)
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?;
    let results: Vec<_> = pool.install(|| jobs.par_iter().map(run_one).collect());

    let mut failures = Vec::new();
    let mut failed_models = Vec::new();
    let mut rows = Vec::new();
    for &model in &cfg.models {
        let mine: Vec<_> = results.iter().filter(|r| r.0 == model).collect();
        let mut ok = Vec::new();
        for (m, rep, res, _) in &mine {
            match res {
                Ok(t) if t.complete => ok.push(t),
                Ok(t) => failures.push((*m, *rep, t.error.clone().unwrap_or_default())),
                Err(e) => failures.push((*m, *rep, e.clone())),
            }
        }
        if ok.is_empty() {
            failed_models.push(model);
        }
        rows.extend(summarize(model, &ok));
    }

    let mut sheader = header.clone();
    sheader.push(("statistics".to_string(), "per-step median and 5th/95th percentiles (type 7) over complete replicates".to_string()));
    sheader.push((
        "interval".to_string(),
        format!("mean +/- {:.6} sd (alpha = {ALPHA})", normal_quantile(ALPHA)),
    ));
    for (m, rep, e) in &failures {
        sheader.push(("failed".to_string(), format!("{m} replicate {rep}: {e}")));
    }
    let summary_file = out_dir.join("summary.csv");
    let f = File::create(&summary_file).with_context(|| format!("cannot write {}", summary_file.display()))?;
    let mut w = BufWriter::new(f);
    write_summary(&mut w, &sheader, &rows)?;
    w.flush()?;

    Ok(AlOutcome {
        out_dir,
        trace_files: results.iter().map(|r| r.3.clone()).collect(),
        summary_file,
        failures,
        failed_models,
    })
}

fn write_trace(
    path: &Path,
    header: &[(String, String)],
    model: ModelKind,
    rep: usize,
    result: &hrk_core::Result<AlTrace>,
    p: usize,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in header {
        writeln!(w, "# {k}: {v}")?;
    }
    match result {
        Ok(t) => t.write_csv(&mut w).map_err(std::io::Error::other)?,
        Err(e) => {
            writeln!(w, "# model: {model}")?;
            writeln!(w, "# replicate: {rep}")?;
            writeln!(w, "# complete: false")?;
            writeln!(w, "# error: {e}")?;
            let xs: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
            writeln!(w, "rep,step,n,{},y,rmse,is,fit_ms,status", xs.join(","))?;
        }
    }
    w.flush()
}

/// `hrk bench-list`: one line per built-in function.
pub fn cmd_bench_list<W: Write>(mut out: W) -> Result<()> {
    writeln!(out, "id,p,lower,upper")?;
    for f in registry() {
        writeln!(out, "{},{},{},{}", f.id, f.dim(), fmt_vec(f.lower), fmt_vec(f.upper))?;
    }
    Ok(())
}
