//! ALM active learning: repeatedly fit, generate candidates, add the
//! candidate with the largest posterior variance.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Scaling};
use crate::design::{candidate_set, maximin_initial, random_lhd};
use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::metrics::{gaussian_interval_score, normal_quantile, rmse, ALPHA};
use crate::models::{fit, FitOptions, HrkFit, ModelKind};
use crate::points::{sq_dist, Points};
use crate::seed::{derive_seed, Stream};
use crate::theta::ThetaSearch;

/// Candidates closer than this to an existing design point are skipped.
pub const EXCLUSION_RADIUS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum InitialDesign {
    /// Random Latin hypercube.
    Lhd,
    /// Farthest-point subset of a random LHD with `pool` points.
    Maximin { pool: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlConfig {
    pub model: ModelKind,
    /// Final number of design points.
    pub budget: usize,
    pub n_ini: usize,
    pub seed: u64,
    /// Replicate index; enters every derived seed.
    pub replicate: u64,
    /// Start each lengthscale search at the previous step's θ.
    pub warm_start: bool,
    /// Test-set size; defaults to 2000 for p ≤ 2 and 1000·p otherwise.
    pub test_size: Option<usize>,
    pub initial: InitialDesign,
    pub search: ThetaSearch,
}

impl AlConfig {
    pub fn new(model: ModelKind, n_ini: usize, budget: usize, seed: u64) -> Self {
        Self {
            model,
            budget,
            n_ini,
            seed,
            replicate: 0,
            warm_start: true,
            test_size: None,
            initial: InitialDesign::Lhd,
            search: ThetaSearch::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ini < 2 {
            return Err(Error::InvalidArgument(format!("n_ini = {} < 2", self.n_ini)));
        }
        if self.budget < self.n_ini {
            return Err(Error::InvalidArgument(format!(
                "budget {} below n_ini {}",
                self.budget, self.n_ini
            )));
        }
        Ok(())
    }
}

pub fn default_test_size(p: usize) -> usize {
    if p <= 2 {
        2000
    } else {
        1000 * p
    }
}

/// Winner of an ALM selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub point: Vec<f64>,
    /// Posterior variance at the selected point.
    pub score: f64,
}

/// Candidate with maximal posterior variance; ties go to the lowest index.
pub fn alm_select(fit: &HrkFit, candidates: &Points) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("empty candidate set".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in candidates.rows().enumerate() {
        let v = fit.predict(x)?.variance;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let (index, score) = best.expect("nonempty");
    Ok(Selection {
        index,
        point: candidates.row(index).to_vec(),
        score,
    })
}

/// One row of an active-learning trace.
#[derive(Debug, Clone, PartialEq)]
pub struct AlStep {
    pub step: usize,
    /// Design size after this step.
    pub n: usize,
    /// Point added at this step (unit cube); `None` for step 0.
    pub point: Option<Vec<f64>>,
    pub y: Option<f64>,
    /// Posterior variance of the point when it was selected.
    pub score: Option<f64>,
    /// Metrics of the model fitted on the `n` points.
    pub rmse: f64,
    pub interval_score: f64,
    pub fit_ms: f64,
    pub jitter: f64,
    pub lengthscales: Vec<f64>,
    pub status: String,
}

#[derive(Debug, Clone)]
pub struct AlTrace {
    pub model: ModelKind,
    pub replicate: u64,
    pub steps: Vec<AlStep>,
    pub data: Dataset,
    pub complete: bool,
    pub error: Option<String>,
    pub test_size: usize,
    pub metadata: Vec<(String, String)>,
}

/// Where responses, candidates and test points come from.
pub enum Problem<'a> {
    /// A function evaluated on demand; fresh candidates every step.
    Function(&'a TestFunction),
    /// A finite pool of unit-cube inputs with known responses. Candidates and
    /// test points are the pool rows not yet in the design.
    Pool {
        x: &'a Points,
        y: &'a [f64],
        scaling: &'a Scaling,
    },
}

impl Problem<'_> {
    fn dim(&self) -> usize {
        match self {
            Problem::Function(f) => f.dim(),
            Problem::Pool { x, .. } => x.dim(),
        }
    }
}

/// Runs ALM on a built-in function.
pub fn run_active_learning(cfg: &AlConfig, f: &TestFunction) -> Result<AlTrace> {
    run(cfg, Problem::Function(f))
}

pub fn run(cfg: &AlConfig, problem: Problem<'_>) -> Result<AlTrace> {
    cfg.validate()?;
    let p = problem.dim();
    let rep = cfg.replicate;
    let init_seed = derive_seed(cfg.seed, rep, 0, Stream::InitialDesign);
    let test_seed = derive_seed(cfg.seed, rep, 0, Stream::TestSet);
    let mut metadata = vec![
        ("model".to_string(), cfg.model.to_string()),
        ("replicate".to_string(), rep.to_string()),
        ("base_seed".to_string(), cfg.seed.to_string()),
        (
            "seed_derivation".to_string(),
            "base xor splitmix64(splitmix64(splitmix64(rep) xor step) xor stream)".to_string(),
        ),
        ("initial_design".to_string(), format!("{:?}", cfg.initial).to_lowercase()),
        ("warm_start".to_string(), cfg.warm_start.to_string()),
        ("interval".to_string(), format!("mean +/- {:.6} sd (alpha = {ALPHA})", normal_quantile(ALPHA))),
        ("coordinates".to_string(), "unit cube".to_string()),
    ];

    // Initial design, responses and test set.
    let (mut data, test, pool_taken) = match &problem {
        Problem::Function(func) => {
            let design = match cfg.initial {
                InitialDesign::Lhd => random_lhd(cfg.n_ini, p, init_seed)?,
                InitialDesign::Maximin { pool } => maximin_initial(cfg.n_ini, p, pool, init_seed)?,
            };
            let y = design
                .points
                .rows()
                .map(|u| func.evaluate_unit(u))
                .collect::<Result<Vec<_>>>()?;
            let data = Dataset::new(design.points, y, func.scaling())?;
            let m = cfg.test_size.unwrap_or_else(|| default_test_size(p));
            let tx = random_lhd(m, p, test_seed)?.points;
            let ty = tx.rows().map(|u| func.evaluate_unit(u)).collect::<Result<Vec<_>>>()?;
            metadata.push(("function".to_string(), func.id.to_string()));
            metadata.push(("candidates".to_string(), "regenerated per step".to_string()));
            metadata.push(("test_set".to_string(), format!("random lhd, {m} points")));
            (data, Some((tx, ty)), Vec::new())
        }
        Problem::Pool { x, y, scaling } => {
            if x.len() < cfg.budget + 1 {
                return Err(Error::InvalidArgument(format!(
                    "pool of {} rows cannot supply a budget of {}",
                    x.len(),
                    cfg.budget
                )));
            }
            let mut idx: Vec<usize> = (0..x.len()).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(init_seed));
            idx.truncate(cfg.n_ini);
            let data = Dataset::new(
                x.select(&idx),
                idx.iter().map(|&i| y[i]).collect(),
                (*scaling).clone(),
            )?;
            metadata.push(("candidates".to_string(), "unselected pool rows".to_string()));
            metadata.push(("test_set".to_string(), "unselected pool rows".to_string()));
            (data, None, idx)
        }
    };
    let mut taken = pool_taken;
    let test_size = test.as_ref().map_or(0, |t| t.0.len());

    let mut steps = Vec::with_capacity(cfg.budget - cfg.n_ini + 1);
    let mut pending: Option<(Vec<f64>, f64, f64)> = None;
    let mut warm: Option<Vec<f64>> = None;
    let total = cfg.budget - cfg.n_ini;
    let mut error = None;

    for t in 0..=total {
        let opts = FitOptions {
            seed: derive_seed(cfg.seed, rep, t as u64, Stream::Theta),
            search: cfg.search.clone(),
            warm_start: if cfg.warm_start { warm.clone() } else { None },
            ..FitOptions::default()
        };
        let started = Instant::now();
        let (model, refit) = match fit(cfg.model, &data, &opts) {
            Ok(m) => (m, false),
            Err(first) => {
                // Retry at the heuristic lengthscale before giving up.
                let fixed = FitOptions {
                    fixed_theta: Some(vec![0.5 * (p as f64).sqrt(); p]),
                    ..opts.clone()
                };
                match fit(cfg.model, &data, &fixed) {
                    Ok(m) => (m, true),
                    Err(_) => {
                        error = Some(format!("fit failed at step {t}: {first}"));
                        break;
                    }
                }
            }
        };
        let fit_ms = started.elapsed().as_secs_f64() * 1e3;
        warm = Some(model.kernel().lengthscales().to_vec());

        let (tx, ty) = match &test {
            Some((tx, ty)) => (tx.clone(), ty.clone()),
            None => {
                let Problem::Pool { x, y, .. } = &problem else { unreachable!() };
                let rest: Vec<usize> = (0..x.len()).filter(|i| !taken.contains(i)).collect();
                (x.select(&rest), rest.iter().map(|&i| y[i]).collect())
            }
        };
        let preds = model.predict_many(&tx)?;
        let mean: Vec<f64> = preds.iter().map(|p| p.mean).collect();
        let sd: Vec<f64> = preds.iter().map(|p| p.sd()).collect();
        let step_rmse = rmse(&mean, &ty)?;
        let step_is = gaussian_interval_score(&mean, &sd, &ty, ALPHA)?;

        let mut status = model.info().status.to_string();
        if let Some(s) = model.info().optimizer {
            status = format!("{status}/{s}");
        }
        if refit {
            status.push_str("/heuristic_theta");
        }
        let (point, y, score) = match pending.take() {
            Some((x, y, s)) => (Some(x), Some(y), Some(s)),
            None => (None, None, None),
        };
        steps.push(AlStep {
            step: t,
            n: data.n(),
            point,
            y,
            score,
            rmse: step_rmse,
            interval_score: step_is,
            fit_ms,
            jitter: model.system().jitter(),
            lengthscales: model.kernel().lengthscales().to_vec(),
            status,
        });
        if t == total {
            break;
        }

        // Candidates, with points already in the design removed.
        let (cands, pool_index): (Points, Vec<usize>) = match &problem {
            Problem::Function(_) => {
                let c = candidate_set(p, derive_seed(cfg.seed, rep, t as u64 + 1, Stream::Candidates))?;
                (c.points, Vec::new())
            }
            Problem::Pool { x, .. } => {
                let rest: Vec<usize> = (0..x.len()).filter(|i| !taken.contains(i)).collect();
                (x.select(&rest), rest)
            }
        };
        let keep: Vec<usize> = (0..cands.len())
            .filter(|&i| {
                let c = cands.row(i);
                data.x()
                    .rows()
                    .all(|row| sq_dist(row, c) > EXCLUSION_RADIUS * EXCLUSION_RADIUS)
            })
            .collect();
        let filtered = cands.select(&keep);
        let sel = alm_select(&model, &filtered)?;

        let y_new = match &problem {
            Problem::Function(func) => match func.evaluate_unit(&sel.point) {
                Ok(v) => v,
                Err(e) => {
                    error = Some(format!("objective evaluation failed at step {}: {e}", t + 1));
                    break;
                }
            },
            Problem::Pool { y, .. } => {
                let row = pool_index[keep[sel.index]];
                taken.push(row);
                y[row]
            }
        };
        data.push(&sel.point, y_new)?;
        pending = Some((sel.point, y_new, sel.score));
    }

    Ok(AlTrace {
        model: cfg.model,
        replicate: rep,
        complete: error.is_none(),
        error,
        steps,
        data,
        test_size,
        metadata,
    })
}

impl AlTrace {
    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    /// Writes the trace as CSV: `rep,step,n,x1..xp,y,rmse,is,fit_ms,status`,
    /// preceded by `#` metadata lines. Step 0 leaves the point and `y` empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        writeln!(out, "# complete: {}", self.complete)?;
        if let Some(e) = &self.error {
            writeln!(out, "# error: {e}")?;
        }
        let p = self.dim();
        let xs: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
        writeln!(out, "rep,step,n,{},y,rmse,is,fit_ms,status", xs.join(","))?;
        for s in &self.steps {
            let point = match &s.point {
                Some(x) => x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
                None => vec![""; p].join(","),
            };
            let y = s.y.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{:.3},{}",
                self.replicate, s.step, s.n, point, y, s.rmse, s.interval_score, s.fit_ms, s.status
            )?;
        }
        Ok(())
    }
}
