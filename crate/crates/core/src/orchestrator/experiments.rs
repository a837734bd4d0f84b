use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::audit::RawViews;
use super::pipeline::{
    add_data_hospital, fit_pipeline, run_local_baseline, standardize_split, PhaseTimings, PipelineState,
};
use super::{ExperimentConfig, OrchestratorError, Result, Scenario, SweepAxis, TimingConfig};
use crate::dataset::{inductive_split, partition_scenario, Dataset, InductiveMode, ScenarioSplit};
use crate::downstream::{accuracy, predict, FittedModel};
use crate::frl::Transcript;
use crate::lrd::{enrich, PartyEncoder};

pub const VFEDTRANS: &str = "vfedtrans";
pub const LOCAL: &str = "local";

/// Post-partition column cuts used by the feature sweeps: keep the first
/// `task` task columns and the first `data` columns of every data party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Truncation {
    pub task: Option<usize>,
    pub data: Option<usize>,
}

impl Truncation {
    fn apply(&self, mut split: ScenarioSplit) -> ScenarioSplit {
        if let Some(k) = self.task {
            split.task = split.task.truncate_features(k);
        }
        if let Some(k) = self.data {
            for p in &mut split.data_parties {
                *p = p.truncate_features(k);
            }
        }
        split
    }
}

/// Outcome of one seed.
#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    /// Method name and test accuracy, e.g. `vfedtrans`, `local`.
    pub accuracies: Vec<(String, f64)>,
    pub timings: PhaseTimings,
    pub transcript: Transcript,
    pub encoders: Vec<PartyEncoder>,
    pub model: FittedModel,
    /// Protocol inputs of every party, for auditing the transcript.
    pub frl_inputs: RawViews,
    pub enriched_width: usize,
    pub warnings: Vec<String>,
}

impl SeedResult {
    pub fn accuracy(&self, method: &str) -> Option<f64> {
        self.accuracies.iter().find(|(m, _)| m == method).map(|(_, a)| *a)
    }

    fn from_state(state: &PipelineState, mut accuracies: Vec<(String, f64)>) -> Self {
        accuracies.insert(0, (VFEDTRANS.to_owned(), state.accuracy));
        Self {
            seed: state.seed,
            accuracies,
            timings: state.timings,
            transcript: state.transcript.clone(),
            encoders: state.encoders.clone(),
            model: state.model.clone(),
            frl_inputs: frl_inputs(&state.split),
            enriched_width: state.enriched.matrix.cols(),
            warnings: state.fed.iter().flat_map(|f| f.warnings.iter().cloned()).collect(),
        }
    }
}

/// The shared slices each protocol session consumed.
pub fn frl_inputs(split: &ScenarioSplit) -> RawViews {
    let mut v = RawViews::default();
    for i in 0..split.data_parties.len() {
        if let Ok((s_t, s_d)) = split.shared_slices(i) {
            v.push(&split.task.party_id, s_t);
            v.push(&split.data_parties[i].party_id, s_d);
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: usize,
}

pub fn mean_std(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary {
            mean: f64::NAN,
            std: f64::NAN,
            n,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    Summary {
        mean,
        std: var.sqrt(),
        n,
    }
}

/// Results of one configuration over its seeds.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub scenario: Scenario,
    pub seeds: Vec<SeedResult>,
}

impl RunResult {
    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.seeds {
            for (m, _) in &s.accuracies {
                if !out.contains(m) {
                    out.push(m.clone());
                }
            }
        }
        out
    }

    pub fn accuracies(&self, method: &str) -> Vec<f64> {
        self.seeds.iter().filter_map(|s| s.accuracy(method)).collect()
    }

    pub fn summary(&self, method: &str) -> Summary {
        mean_std(&self.accuracies(method))
    }
}

/// Runs `f` for every seed, on up to `parallel` threads; output keeps seed order.
pub fn map_seeds<T: Send>(seeds: &[u64], parallel: usize, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    if parallel <= 1 || seeds.len() <= 1 {
        return seeds.iter().map(|&s| f(s)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<T>>>> = seeds.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..parallel.min(seeds.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= seeds.len() {
                    break;
                }
                let out = f(seeds[i]);
                *slots[i].lock().expect("slot lock") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every seed ran"))
        .collect()
}

fn prepare_with(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    seed: u64,
    cut: Truncation,
) -> Result<(ScenarioSplit, super::pipeline::Standardizer)> {
    let split = partition_scenario(ds, &cfg.split, seed).map_err(|e| OrchestratorError::runtime("partition", e))?;
    Ok(standardize_split(cut.apply(split), cfg.standardize))
}

/// One seed of the configured scenario.
pub fn run_seed(ds: &Dataset, cfg: &ExperimentConfig, seed: u64, cut: Truncation) -> Result<SeedResult> {
    if let Some(mode) = cfg.scenario.inductive_mode() {
        return inductive_seed(ds, cfg, seed, mode);
    }
    let (split, _) = prepare_with(ds, cfg, seed, cut)?;
    let (_, local) = run_local_baseline(&split, cfg, seed)?;
    let local = (LOCAL.to_owned(), local);
    match cfg.scenario {
        Scenario::NewDataHospital => {
            let mut before = split;
            let party = before
                .data_parties
                .pop()
                .ok_or_else(|| OrchestratorError::runtime("add data hospital", "no data party to add"))?;
            before.shared_ids.pop();
            let state = fit_pipeline(before, cfg, seed)?;
            let acc_before = state.accuracy;
            let state = add_data_hospital(state, party, cfg)?;
            Ok(SeedResult::from_state(
                &state,
                vec![("vfedtrans_before".to_owned(), acc_before), local],
            ))
        }
        Scenario::DistillAblation => {
            let state = fit_pipeline(split.clone(), cfg, seed)?;
            let mut plain = cfg.clone();
            plain.lrd.theta = 0.0;
            let ablated = fit_pipeline(split, &plain, seed)?;
            Ok(SeedResult::from_state(
                &state,
                vec![("vfedtrans_theta0".to_owned(), ablated.accuracy), local],
            ))
        }
        _ => {
            let state = fit_pipeline(split, cfg, seed)?;
            Ok(SeedResult::from_state(&state, vec![local]))
        }
    }
}

/// Trains on the scenario split and scores the frozen encoders and
/// classifiers on held-out new samples. In-distribution test accuracies are
/// reported as `vfedtrans_test` and `local_test`.
fn inductive_seed(ds: &Dataset, cfg: &ExperimentConfig, seed: u64, mode: InductiveMode) -> Result<SeedResult> {
    let ind = inductive_split(ds, &cfg.split, seed, mode).map_err(|e| OrchestratorError::runtime("partition", e))?;
    let (split, scaler) = standardize_split(ind.split, cfg.standardize);
    let new_x = scaler.apply(&ind.new_samples.features);
    let new_y = ind.new_samples.labels.clone().unwrap_or_default();
    let (local_model, local_test) = run_local_baseline(&split, cfg, seed)?;
    let state = fit_pipeline(split, cfg, seed)?;

    let step = |e: crate::downstream::DownstreamError| OrchestratorError::runtime("inductive evaluation", e);
    let enriched = enrich(&state.encoders, &ind.new_samples.ids, &new_x)
        .map_err(|e| OrchestratorError::runtime("inductive evaluation", e))?;
    let vf = accuracy(&predict(&state.model, &enriched.matrix).map_err(step)?, &new_y).map_err(step)?;
    let lo = accuracy(&predict(&local_model, &new_x).map_err(step)?, &new_y).map_err(step)?;
    let mut out = SeedResult::from_state(
        &state,
        vec![
            (LOCAL.to_owned(), lo),
            ("vfedtrans_test".to_owned(), state.accuracy),
            ("local_test".to_owned(), local_test),
        ],
    );
    out.accuracies[0].1 = vf;
    Ok(out)
}

pub fn run_experiment(ds: &Dataset, cfg: &ExperimentConfig, parallel: usize) -> Result<RunResult> {
    run_experiment_cut(ds, cfg, parallel, Truncation::default())
}

fn run_experiment_cut(ds: &Dataset, cfg: &ExperimentConfig, parallel: usize, cut: Truncation) -> Result<RunResult> {
    let seeds = map_seeds(&cfg.seeds, parallel, |s| run_seed(ds, cfg, s, cut))?;
    Ok(RunResult {
        scenario: cfg.scenario,
        seeds,
    })
}

/// IID or non-IID inductive evaluation over the configured seeds.
pub fn inductive_eval(ds: &Dataset, cfg: &ExperimentConfig, mode: InductiveMode, parallel: usize) -> Result<RunResult> {
    let mut cfg = cfg.clone();
    cfg.scenario = match mode {
        InductiveMode::Iid => Scenario::InductiveIid,
        InductiveMode::Noniid => Scenario::InductiveNoniid,
    };
    run_experiment(ds, &cfg, parallel)
}

/// Config and column cut for one sweep point. Feature axes partition with the
/// configured widths and then keep the leading `value` columns, so smaller
/// values drop trailing columns of the (optionally shuffled) order.
pub fn sweep_point(cfg: &ExperimentConfig, axis: SweepAxis, value: usize) -> (ExperimentConfig, Truncation) {
    let mut c = cfg.clone();
    let mut cut = Truncation::default();
    match axis {
        SweepAxis::TaskFeatures => cut.task = Some(value),
        SweepAxis::DataFeatures => cut.data = Some(value),
        SweepAxis::SharedSamples => {
            for p in &mut c.split.parties {
                p.shared = value;
            }
            if let Some(m) = &mut c.split.multi_party {
                m.shared = crate::dataset::SizeRange(value, value);
            }
        }
        SweepAxis::NParties => {
            if let Some(template) = c.split.parties.first().copied() {
                c.split.parties = vec![template; value];
                c.split.multi_party = None;
            } else if let Some(m) = &mut c.split.multi_party {
                m.n = value;
            }
        }
    }
    (c, cut)
}

fn point_feasible(ds: &Dataset, cfg: &ExperimentConfig, axis: SweepAxis, value: usize) -> std::result::Result<(), String> {
    let limit = match axis {
        SweepAxis::TaskFeatures => Some(("X_t", cfg.split.task_features)),
        SweepAxis::DataFeatures => cfg
            .split
            .resolve_parties(cfg.seeds[0])
            .iter()
            .map(|p| p.features)
            .min()
            .map(|m| ("X_d", m)),
        _ => None,
    };
    if let Some((name, max)) = limit {
        if value == 0 || value > max {
            return Err(format!("{} = {value} outside 1..={max} (configured {name})", axis.name()));
        }
    }
    for &seed in &cfg.seeds {
        cfg.split.validate(ds.rows(), ds.cols(), seed).map_err(|e| e.to_string())?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: usize,
    pub result: std::result::Result<RunResult, String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// `(value, mean accuracy)` of `method` over feasible points.
    pub fn trend(&self, method: &str) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.result.as_ref().ok().map(|r| (p.value as f64, r.summary(method).mean)))
            .collect()
    }
}

/// One run per value and seed. Infeasible values are skipped and reported.
pub fn sweep(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[usize],
    parallel: usize,
) -> Result<SweepResult> {
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let (c, cut) = sweep_point(cfg, axis, value);
        let result = match point_feasible(ds, &c, axis, value) {
            Ok(()) => Ok(run_experiment_cut(ds, &c, parallel, cut)?),
            Err(reason) => Err(reason),
        };
        points.push(SweepPoint { value, result });
    }
    Ok(SweepResult { axis, points })
}

/// Average ranks (ties share the mean rank).
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation; 0 when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through `(x, y)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    LinearFit { slope, intercept, r2 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub axis: String,
    pub value: usize,
    pub seed: u64,
    pub repeat: usize,
    pub frl: f64,
    pub lrd: f64,
    pub downstream: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisTiming {
    pub axis: String,
    /// `(value, median total seconds)`.
    pub points: Vec<(usize, f64)>,
    pub fit: LinearFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
    pub axes: Vec<AxisTiming>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Wall-clock per phase along the configured axes, sequentially. Each point
/// runs the first configured seed `repeats` times; the median total is fitted
/// against the axis value.
pub fn timing_report(ds: &Dataset, cfg: &ExperimentConfig, timing: &TimingConfig) -> Result<TimingReport> {
    let seed = cfg.seeds[0];
    let mut rows = Vec::new();
    let mut axes = Vec::new();
    for (axis, values) in [
        (SweepAxis::NParties, &timing.n_parties),
        (SweepAxis::SharedSamples, &timing.shared_samples),
    ] {
        if values.is_empty() {
            continue;
        }
        let mut runs = Vec::new();
        for &value in values {
            let (mut c, cut) = sweep_point(cfg, axis, value);
            c.scenario = Scenario::Main;
            if point_feasible(ds, &c, axis, value).is_ok() {
                runs.push((value, c, cut, Vec::new()));
            }
        }
        // Repeats go round-robin over the points so slow stretches of the
        // host hit every point alike.
        for repeat in 0..timing.repeats {
            for (value, c, cut, totals) in &mut runs {
                let t = Instant::now();
                let r = run_seed(ds, c, seed, *cut)?;
                let wall = t.elapsed().as_secs_f64();
                totals.push(r.timings.total());
                rows.push(TimingRow {
                    axis: axis.name().to_owned(),
                    value: *value,
                    seed,
                    repeat,
                    frl: r.timings.frl,
                    lrd: r.timings.lrd,
                    downstream: r.timings.downstream,
                    total: wall,
                });
            }
        }
        let points: Vec<(usize, f64)> = runs.into_iter().map(|(v, _, _, t)| (v, median(t))).collect();
        let x: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = points.iter().map(|p| p.1).collect();
        axes.push(AxisTiming {
            axis: axis.name().to_owned(),
            fit: linear_fit(&x, &y),
            points,
        });
    }
    Ok(TimingReport { rows, axes })
}
