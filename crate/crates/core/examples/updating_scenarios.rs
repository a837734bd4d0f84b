//! The three ways a trained pipeline is updated: a new task on the same rows,
//! new private rows at the task party, and a data hospital joining late.

use vfedtrans::dataset::{load_breast, PartySizes, SplitConfig};
use vfedtrans::orchestrator::{
    add_data_hospital, add_local_rows, fit_pipeline, prepare, retask, DatasetSource, ExperimentConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::with(
        DatasetSource::Breast,
        SplitConfig {
            parties: vec![
                PartySizes { samples: 150, features: 8, shared: 100 },
                PartySizes { samples: 150, features: 7, shared: 100 },
            ],
            ..SplitConfig::breast()
        },
    );
    cfg.lrd.epochs = 100;
    let (mut split, _) = prepare(&load_breast()?, &cfg, 0)?;
    let late = split.data_parties.pop().expect("two parties");
    split.shared_ids.pop();

    let state = fit_pipeline(split, &cfg, 0)?;
    println!("one hospital: {:.2}%, {} messages", 100.0 * state.accuracy, state.transcript.len());

    let flipped: Vec<usize> = state.split.task.labels.as_ref().expect("task labels").iter().map(|y| 1 - y).collect();
    let (_, acc) = retask(&state, &flipped, &cfg)?;
    println!("new task: {:.2}%, encoders unchanged", 100.0 * acc);

    let task = &state.split.task;
    let extra = task.features.select_rows(&[0, 1, 2, 3, 4]);
    let mut rows = task.clone();
    rows.ids = (0..5).map(|i| vfedtrans::dataset::SampleId(format!("late{i}"))).collect();
    rows.labels = Some(task.labels.as_ref().expect("task labels")[..5].to_vec());
    rows.features = extra;
    let before = state.transcript.data_party_messages();
    let grown = add_local_rows(state, &rows, &cfg)?;
    println!(
        "local rows: {:.2}%, {} new cross-party messages",
        100.0 * grown.accuracy,
        grown.transcript.data_party_messages() - before
    );

    let joined = add_data_hospital(grown, late, &cfg)?;
    println!("second hospital: {:.2}%, {} encoders", 100.0 * joined.accuracy, joined.encoders.len());
    Ok(())
}
