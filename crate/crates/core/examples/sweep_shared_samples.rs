//! Accuracy as the number of shared samples grows.

use vfedtrans::dataset::load_breast;
use vfedtrans::orchestrator::{spearman, sweep, ExperimentConfig, SweepAxis};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::breast();
    cfg.split.parties[0].samples = 300;
    cfg.seeds = vec![0, 1, 2];
    let res = sweep(&load_breast()?, &cfg, SweepAxis::SharedSamples, &[50, 100, 150, 200], 1)?;
    for p in &res.points {
        match &p.result {
            Ok(run) => println!(
                "I_s {:>4}: vfedtrans {:.2}  local {:.2}",
                p.value,
                100.0 * run.summary("vfedtrans").mean,
                100.0 * run.summary("local").mean
            ),
            Err(why) => println!("I_s {:>4}: skipped ({why})", p.value),
        }
    }
    let (x, y): (Vec<f64>, Vec<f64>) = res.trend("vfedtrans").into_iter().unzip();
    println!("spearman {:+.2}", spearman(&x, &y));
    Ok(())
}
