//! Distills a FedSVD representation into an encoder over the task party's
//! features, then compares against a plain autoencoder.

use vfedtrans::dataset::{partition_scenario, synth_latent, LatentSpec, SplitConfig, PartySizes};
use vfedtrans::frl::{run_frl, FrlConfig, FrlInput, PartyBlock, Transcript};
use vfedtrans::lrd::{train_autoencoder, train_distilled_encoder, DistillConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = synth_latent(&LatentSpec::default(), 7)?;
    let split = partition_scenario(
        &ds,
        &SplitConfig::single(600, 8, PartySizes { samples: 600, features: 8, shared: 300 }),
        0,
    )?;
    let (s_t, s_d) = split.shared_slices(0)?;
    let input = FrlInput::new(
        split.shared_ids[0].clone(),
        PartyBlock { party_id: "task".into(), shared: s_t },
        vec![PartyBlock { party_id: "h1".into(), shared: s_d }],
    )?;
    let fed = run_frl(&input, &FrlConfig::default(), 0, &mut Transcript::new())?;

    let cfg = DistillConfig {
        theta: 1.0,
        epochs: 200,
        ..DistillConfig::default()
    };
    let x = &split.task.features;
    let distilled = train_distilled_encoder(x, &split.task.ids, &fed, &cfg, 1)?;
    let plain = train_autoencoder(x, fed.rank, &cfg, 1)?;
    for (name, t) in [("distilled", &distilled), ("plain", &plain)] {
        let first = &t.curve[0];
        let last = t.curve.last().expect("at least one epoch");
        println!(
            "{name:>9}: loss {:.4} -> {:.4} (recon {:.4}, distill {:.4})",
            first.loss, last.loss, last.reconstruction, last.distillation
        );
    }
    println!("encoder digest {}", distilled.params.digest());
    Ok(())
}
