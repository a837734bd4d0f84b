//! The three-step pipeline for one seed, plus the updating scenarios that
//! reuse a trained state.

use std::time::Instant;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, OrchestratorError, Result, Scenario};
use crate::dataset::{partition_scenario, psi_intersect, Dataset, PartyView, ScenarioSplit};
use crate::downstream::{accuracy, column_stats, fit, predict, FittedModel};
use crate::frl::{run_frl, FedRepresentation, FrlInput, PartyBlock, Transcript};
use crate::linalg::Matrix;
use crate::lrd::{enrich, train_distilled_encoder, EnrichedRepresentation, EpochLoss, PartyEncoder};
use crate::seed::{derive_seed, tagged_rng};

/// Per-column affine map `x -> (x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let (mean, scale) = column_stats(x);
        Self { mean, scale }
    }

    pub fn identity(width: usize) -> Self {
        Self {
            mean: vec![0.0; width],
            scale: vec![1.0; width],
        }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        Matrix::from_fn(x.rows(), x.cols(), |r, c| (x[(r, c)] - self.mean[c]) / self.scale[c])
    }
}

/// z-scores a data party on its own rows.
pub fn standardize_party(view: &PartyView) -> PartyView {
    PartyView {
        features: Standardizer::fit(&view.features).apply(&view.features),
        ..view.clone()
    }
}

/// Partitions the dataset and, when configured, z-scores every party: the
/// task party with statistics of its downstream training rows, each data
/// party with its own rows. Returns the task-party map for later new rows.
pub fn prepare(ds: &Dataset, cfg: &ExperimentConfig, seed: u64) -> Result<(ScenarioSplit, Standardizer)> {
    let split = partition_scenario(ds, &cfg.split, seed).map_err(|e| OrchestratorError::runtime("partition", e))?;
    Ok(standardize_split(split, cfg.standardize))
}

pub fn standardize_split(mut split: ScenarioSplit, enabled: bool) -> (ScenarioSplit, Standardizer) {
    if !enabled {
        let w = split.task.width();
        return (split, Standardizer::identity(w));
    }
    let scaler = Standardizer::fit(&split.task.features.select_rows(&split.train_rows));
    split.task.features = scaler.apply(&split.task.features);
    for p in &mut split.data_parties {
        *p = standardize_party(p);
    }
    (split, scaler)
}

/// Wall-clock seconds spent in each step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub frl: f64,
    pub lrd: f64,
    pub downstream: f64,
}

impl PhaseTimings {
    pub fn total(&self) -> f64 {
        self.frl + self.lrd + self.downstream
    }
}

/// Everything a trained pipeline holds for one seed.
#[derive(Debug, Clone)]
pub struct PipelineState {
    pub seed: u64,
    pub split: ScenarioSplit,
    pub fed: Vec<FedRepresentation>,
    pub encoders: Vec<PartyEncoder>,
    pub curves: Vec<Vec<EpochLoss>>,
    pub transcript: Transcript,
    pub enriched: EnrichedRepresentation,
    /// Task rows the classifier was trained on.
    pub fit_rows: Vec<usize>,
    pub model: FittedModel,
    pub accuracy: f64,
    pub timings: PhaseTimings,
}

impl PipelineState {
    pub fn encoder_digests(&self) -> Vec<String> {
        self.encoders.iter().map(|e| e.params.digest()).collect()
    }
}

/// Steps 1 and 2 for data party `i`: the protocol over the shared slices,
/// then distillation into an encoder trained on every task row.
pub fn distill_party(
    split: &ScenarioSplit,
    i: usize,
    cfg: &ExperimentConfig,
    seed: u64,
    transcript: &mut Transcript,
    timings: &mut PhaseTimings,
) -> Result<(FedRepresentation, PartyEncoder, Vec<EpochLoss>)> {
    let party = &split.data_parties[i];
    let t0 = Instant::now();
    let (s_t, s_d) = split
        .shared_slices(i)
        .map_err(|e| OrchestratorError::runtime("frl", e))?;
    let fed = FrlInput::new(
        split.shared_ids[i].clone(),
        PartyBlock {
            party_id: split.task.party_id.clone(),
            shared: s_t,
        },
        vec![PartyBlock {
            party_id: party.party_id.clone(),
            shared: s_d,
        }],
    )
    .and_then(|input| run_frl(&input, &cfg.frl, seed, transcript))
    .map_err(|e| OrchestratorError::runtime(&format!("frl with {}", party.party_id), e))?;
    timings.frl += t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let trained = train_distilled_encoder(
        &split.task.features,
        &split.task.ids,
        &fed,
        &cfg.lrd,
        derive_seed(seed, &format!("lrd:{}", party.party_id)),
    )
    .map_err(|e| OrchestratorError::runtime(&format!("lrd with {}", party.party_id), e))?;
    timings.lrd += t1.elapsed().as_secs_f64();
    Ok((
        fed,
        PartyEncoder {
            party_id: party.party_id.clone(),
            params: trained.params,
        },
        trained.curve,
    ))
}

/// Downstream training rows: all training rows, or a seeded subsample of
/// them in the few-shot scenario. Test rows are never touched.
pub fn downstream_rows(split: &ScenarioSplit, cfg: &ExperimentConfig, seed: u64) -> Vec<usize> {
    if cfg.scenario != Scenario::FewShot {
        return split.train_rows.clone();
    }
    let n = split.train_rows.len();
    let k = ((cfg.few_shot_fraction * n as f64).round() as usize).clamp(1, n);
    let mut picked: Vec<usize> = index::sample(&mut tagged_rng(seed, "few-shot"), n, k)
        .into_iter()
        .map(|i| split.train_rows[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Step 3 on features `x` (one row per task row).
pub fn fit_and_score(
    x: &Matrix,
    labels: &[usize],
    fit_rows: &[usize],
    test_rows: &[usize],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(FittedModel, f64)> {
    let step = |e: crate::downstream::DownstreamError| OrchestratorError::runtime("downstream", e);
    let ytr: Vec<usize> = fit_rows.iter().map(|&r| labels[r]).collect();
    let yte: Vec<usize> = test_rows.iter().map(|&r| labels[r]).collect();
    let model = fit(&x.select_rows(fit_rows), &ytr, &cfg.downstream, derive_seed(seed, "downstream")).map_err(step)?;
    let pred = predict(&model, &x.select_rows(test_rows)).map_err(step)?;
    let acc = accuracy(&pred, &yte).map_err(step)?;
    Ok((model, acc))
}

fn task_labels(split: &ScenarioSplit) -> Result<&[usize]> {
    split
        .task
        .labels
        .as_deref()
        .ok_or_else(|| OrchestratorError::runtime("downstream", "task party holds no labels"))
}

/// Runs Steps 1-3 with every data party in `split`, in order.
pub fn fit_pipeline(split: ScenarioSplit, cfg: &ExperimentConfig, seed: u64) -> Result<PipelineState> {
    let mut timings = PhaseTimings::default();
    let mut transcript = Transcript::new();
    let mut fed = Vec::new();
    let mut encoders = Vec::new();
    let mut curves = Vec::new();
    for i in 0..split.data_parties.len() {
        let (f, e, c) = distill_party(&split, i, cfg, seed, &mut transcript, &mut timings)?;
        fed.push(f);
        encoders.push(e);
        curves.push(c);
    }
    let fit_rows = downstream_rows(&split, cfg, seed);
    let scored = score(&encoders, &split, &fit_rows, cfg, seed)?;
    timings.downstream += scored.seconds;
    Ok(PipelineState {
        seed,
        split,
        fed,
        encoders,
        curves,
        transcript,
        enriched: scored.enriched,
        fit_rows,
        model: scored.model,
        accuracy: scored.accuracy,
        timings,
    })
}

struct Scored {
    enriched: EnrichedRepresentation,
    model: FittedModel,
    accuracy: f64,
    seconds: f64,
}

/// Enriches every task row and runs Step 3.
fn score(
    encoders: &[PartyEncoder],
    split: &ScenarioSplit,
    fit_rows: &[usize],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Scored> {
    let t = Instant::now();
    let enriched =
        enrich(encoders, &split.task.ids, &split.task.features).map_err(|e| OrchestratorError::runtime("enrich", e))?;
    let (model, accuracy) = fit_and_score(
        &enriched.matrix,
        task_labels(split)?,
        fit_rows,
        &split.test_rows,
        cfg,
        seed,
    )?;
    Ok(Scored {
        enriched,
        model,
        accuracy,
        seconds: t.elapsed().as_secs_f64(),
    })
}

fn refit_downstream(state: &mut PipelineState, cfg: &ExperimentConfig) -> Result<()> {
    let scored = score(&state.encoders, &state.split, &state.fit_rows, cfg, state.seed)?;
    state.enriched = scored.enriched;
    state.model = scored.model;
    state.accuracy = scored.accuracy;
    state.timings.downstream += scored.seconds;
    Ok(())
}

/// LOCAL: Step 3 on the task party's own features.
pub fn run_local_baseline(split: &ScenarioSplit, cfg: &ExperimentConfig, seed: u64) -> Result<(FittedModel, f64)> {
    fit_and_score(
        &split.task.features,
        task_labels(split)?,
        &downstream_rows(split, cfg, seed),
        &split.test_rows,
        cfg,
        seed,
    )
}

/// Accuracy of the full pipeline for one seed: partition, then Steps 1-3.
pub fn run_pipeline(ds: &Dataset, cfg: &ExperimentConfig, seed: u64) -> Result<PipelineState> {
    let (split, _) = prepare(ds, cfg, seed)?;
    fit_pipeline(split, cfg, seed)
}

/// Brings a new data hospital in: Steps 1 and 2 with that party only, its
/// encoder appended after the existing ones, then Step 3 again. `party` must
/// be preprocessed like the existing parties (see [`standardize_party`]).
pub fn add_data_hospital(
    mut state: PipelineState,
    party: PartyView,
    cfg: &ExperimentConfig,
) -> Result<PipelineState> {
    let shared = psi_intersect(&state.split.task.ids, &party.ids);
    if shared.is_empty() {
        return Err(OrchestratorError::runtime(
            "add data hospital",
            format!("{} shares no samples with the task party", party.party_id),
        ));
    }
    if state.split.data_parties.iter().any(|p| p.party_id == party.party_id) {
        return Err(OrchestratorError::runtime(
            "add data hospital",
            format!("party id `{}` already joined", party.party_id),
        ));
    }
    state.split.data_parties.push(party);
    state.split.shared_ids.push(shared);
    let i = state.split.data_parties.len() - 1;
    let (f, e, c) = distill_party(
        &state.split,
        i,
        cfg,
        state.seed,
        &mut state.transcript,
        &mut state.timings,
    )?;
    state.fed.push(f);
    state.encoders.push(e);
    state.curves.push(c);
    refit_downstream(&mut state, cfg)?;
    Ok(state)
}

/// A new task on the same rows: Step 3 only, encoders untouched.
pub fn retask(state: &PipelineState, labels: &[usize], cfg: &ExperimentConfig) -> Result<(FittedModel, f64)> {
    if labels.len() != state.split.task.rows() {
        return Err(OrchestratorError::runtime(
            "retask",
            format!("{} labels for {} task rows", labels.len(), state.split.task.rows()),
        ));
    }
    fit_and_score(
        &state.enriched.matrix,
        labels,
        &state.fit_rows,
        &state.split.test_rows,
        cfg,
        state.seed,
    )
}

/// New private task rows: every encoder is retrained on the grown task table
/// against the federated representations already held, so no data party is
/// contacted. The rows join the downstream training set.
pub fn add_local_rows(mut state: PipelineState, rows: &PartyView, cfg: &ExperimentConfig) -> Result<PipelineState> {
    let task = &mut state.split.task;
    if rows.width() != task.width() || rows.labels.is_none() {
        return Err(OrchestratorError::runtime(
            "local update",
            "new rows must carry labels and the task party's features",
        ));
    }
    let start = task.rows();
    task.features = Matrix::vstack(&[&task.features, &rows.features]).map_err(|e| OrchestratorError::runtime("local update", e))?;
    task.ids.extend(rows.ids.iter().cloned());
    if let (Some(y), Some(new)) = (task.labels.as_mut(), rows.labels.as_ref()) {
        y.extend(new);
    }
    state.split.train_rows.extend(start..start + rows.rows());
    state.fit_rows.extend(start..start + rows.rows());

    let t = Instant::now();
    for (k, fed) in state.fed.iter().enumerate() {
        let party_id = state.encoders[k].party_id.clone();
        let trained = train_distilled_encoder(
            &state.split.task.features,
            &state.split.task.ids,
            fed,
            &cfg.lrd,
            derive_seed(state.seed, &format!("lrd:{party_id}")),
        )
        .map_err(|e| OrchestratorError::runtime(&format!("lrd with {party_id}"), e))?;
        state.encoders[k].params = trained.params;
        state.curves[k] = trained.curve;
    }
    state.timings.lrd += t.elapsed().as_secs_f64();
    refit_downstream(&mut state, cfg)?;
    Ok(state)
}
