//! VFedTrans against LOCAL on the breast table with default settings.
//! Pass a seed count as the first argument (default 3).

use vfedtrans::dataset::load_breast;
use vfedtrans::orchestrator::{run_experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u64 = std::env::args().nth(1).map_or(Ok(3), |s| s.parse())?;
    let mut cfg = ExperimentConfig::breast();
    cfg.seeds = (0..n).collect();
    let run = run_experiment(&load_breast()?, &cfg, 1)?;
    for s in &run.seeds {
        println!("seed {}: {:?}", s.seed, s.accuracies);
    }
    for m in run.methods() {
        let s = run.summary(&m);
        println!("{m:>10}: {:.2} ± {:.2}", 100.0 * s.mean, 100.0 * s.std);
    }
    Ok(())
}
