//! Trained encoders and classifiers applied to held-out new samples, drawn
//! either uniformly or from a subset of classes.

use vfedtrans::dataset::{InductiveMode, LatentSpec, PartySizes, SplitConfig};
use vfedtrans::orchestrator::{inductive_eval, DatasetSource, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::with(
        DatasetSource::SyntheticLatent {
            spec: LatentSpec { n_classes: 4, n_samples: 1500, ..LatentSpec::default() },
            seed: 7,
        },
        SplitConfig::single(600, 8, PartySizes { samples: 600, features: 8, shared: 300 }),
    );
    cfg.seeds = vec![0, 1, 2];
    let ds = cfg.dataset.load(None)?;
    for mode in [InductiveMode::Iid, InductiveMode::Noniid] {
        let run = inductive_eval(&ds, &cfg, mode, 1)?;
        let line: Vec<String> = run
            .methods()
            .iter()
            .map(|m| format!("{m} {:.2}", 100.0 * run.summary(m).mean))
            .collect();
        println!("{mode:?}: {}", line.join(", "));
    }
    Ok(())
}
