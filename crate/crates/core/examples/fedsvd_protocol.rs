//! Three hospitals run FedSVD over their shared rows. The server only sees
//! masked blocks, yet its spectrum is the spectrum of the joined matrix.

use rand::Rng;
use rand_distr::StandardNormal;
use vfedtrans::dataset::SampleId;
use vfedtrans::frl::{fedsvd_run, FrlConfig, FrlInput, PartyBlock, Transcript};
use vfedtrans::linalg::{svd, Matrix};
use vfedtrans::seed::rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut g = rng(42);
    let mut block = |id: &str, cols| PartyBlock {
        party_id: id.into(),
        shared: Matrix::from_fn(150, cols, |_, _| g.sample(StandardNormal)),
    };
    let task = block("task", 6);
    let data = vec![block("h1", 10), block("h2", 4)];
    let joined = Matrix::hstack(&[&task.shared, &data[0].shared, &data[1].shared])?;
    let input = FrlInput::new((0..150).map(SampleId::from).collect(), task, data)?;

    let mut transcript = Transcript::new();
    let out = fedsvd_run(&input, &FrlConfig::default(), &mut rng(7), &mut transcript)?;
    let direct = svd(&joined, 20)?;

    println!("representation: {:?}", out.representation.matrix.shape());
    for (k, (a, b)) in out.server_singular_values.iter().zip(&direct.sigma).take(6).enumerate() {
        println!("sigma[{k}]  server {a:.10}  direct {b:.10}");
    }
    for r in transcript.records() {
        println!("{:>2} {:>10} -> {:<10} {} {:?}", r.step, r.sender.to_string(), r.receiver.to_string(), r.kind, r.shapes);
    }
    Ok(())
}
