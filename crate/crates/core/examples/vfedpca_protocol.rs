//! VFedPCA between a task party and one data party: local power iterations,
//! eigenvalue-weighted aggregation, and reconstruction at the task party.

use vfedtrans::dataset::load_breast;
use vfedtrans::frl::{vfedpca_run, FrlConfig, FrlInput, FrlMethod, PartyBlock, Transcript};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = load_breast()?;
    let rows: Vec<usize> = (0..200).collect();
    let x = ds.features().select_rows(&rows);
    let task = x.select_cols(&(0..10).collect::<Vec<_>>());
    let data = x.select_cols(&(10..30).collect::<Vec<_>>());
    let input = FrlInput::new(
        ds.ids()[..200].to_vec(),
        PartyBlock { party_id: "task".into(), shared: task },
        vec![PartyBlock { party_id: "h1".into(), shared: data }],
    )?;
    let cfg = FrlConfig {
        method: FrlMethod::Vfedpca,
        ..FrlConfig::default()
    };
    let mut transcript = Transcript::new();
    let out = vfedpca_run(&input, &cfg, &mut transcript)?;
    println!("weights {:?}", out.weights);
    println!("representation {:?}, {} messages", out.representation.matrix.shape(), transcript.len());
    println!("first row {:?}", &out.representation.matrix.row(0)[..4]);
    Ok(())
}
