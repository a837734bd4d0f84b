//! Audits an honest FedSVD transcript, then one where the task party uploads
//! its raw block instead of the masked one.

use vfedtrans::dataset::load_breast;
use vfedtrans::frl::{fedsvd_keygen, fedsvd_run_with, FedSvdParty, FrlConfig, FrlError, FrlInput, HonestParty, PartyBlock, Role, Transcript};
use vfedtrans::linalg::Matrix;
use vfedtrans::orchestrator::{audit_transcript, RawViews};
use vfedtrans::seed::rng;

struct Leaky<'a>(&'a Matrix);

impl FedSvdParty for Leaky<'_> {
    fn role(&self) -> Role {
        Role::Task("task".into())
    }

    fn width(&self) -> usize {
        self.0.cols()
    }

    fn upload(&self, _a: &Matrix, b_k: &Matrix) -> Result<Matrix, FrlError> {
        let mut out = Matrix::zeros(self.0.rows(), b_k.cols());
        out.set_block(0, 0, self.0);
        Ok(out)
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = load_breast()?;
    let x = ds.features().select_rows(&(0..100).collect::<Vec<_>>());
    let s_t = x.select_cols(&(0..10).collect::<Vec<_>>());
    let s_d = x.select_cols(&(10..30).collect::<Vec<_>>());
    let input = FrlInput::new(
        ds.ids()[..100].to_vec(),
        PartyBlock { party_id: "task".into(), shared: s_t.clone() },
        vec![PartyBlock { party_id: "h1".into(), shared: s_d.clone() }],
    )?;
    let keys = fedsvd_keygen(100, &[10, 20], 100, &mut rng(0))?;
    let mut raw = RawViews::default();
    raw.push("task", s_t.clone());
    raw.push("h1", s_d.clone());
    let data = HonestParty { role: Role::Data("h1".into()), shared: &s_d };
    let task = HonestParty { role: Role::Task("task".into()), shared: &s_t };

    let runs: [(&str, &dyn FedSvdParty); 2] = [("honest", &task), ("leaky", &Leaky(&s_t))];
    for (name, party) in runs {
        let mut t = Transcript::new();
        fedsvd_run_with(&input, party, &[&data], &keys, &FrlConfig::default(), &mut t)?;
        let report = audit_transcript(&t, &raw);
        println!("{name}: {} records, {} violations", report.records, report.violations.len());
        for v in &report.violations {
            println!("  step {} {} -> {}: {}", v.step, v.sender, v.receiver, v.reasons.join("; "));
        }
    }
    Ok(())
}
