//! Wall-clock per phase as data hospitals are added.

use vfedtrans::dataset::{LatentSpec, PartySizes, SplitConfig};
use vfedtrans::orchestrator::output::timing_table;
use vfedtrans::orchestrator::{timing_report, DatasetSource, ExperimentConfig, TimingConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::with(
        DatasetSource::SyntheticLatent {
            spec: LatentSpec { data_features: 32, ..LatentSpec::default() },
            seed: 3,
        },
        SplitConfig::single(600, 8, PartySizes { samples: 600, features: 8, shared: 300 }),
    );
    let timing = TimingConfig {
        n_parties: vec![1, 2, 3, 4],
        shared_samples: vec![],
        repeats: 3,
    };
    let report = timing_report(&cfg.dataset.load(None)?, &cfg, &timing)?;
    for r in &report.rows {
        println!("{} = {}: frl {:.3}s  lrd {:.3}s  downstream {:.3}s", r.axis, r.value, r.frl, r.lrd, r.downstream);
    }
    print!("{}", timing_table(&report));
    Ok(())
}
