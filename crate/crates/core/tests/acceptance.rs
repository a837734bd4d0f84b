//! Acceptance checks, one PASS/FAIL line each.
//!
//! Exact-math and contract checks (1-4, 9) fail the run. The statistical
//! trend checks (5-8, 10) are evaluated and reported; a FAIL there is an
//! observed result, not a broken build.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use vfedtrans::dataset::{load_breast, InductiveMode, LatentSpec, PartyRole, PartySizes, PartyView, SampleId, SplitConfig};
use vfedtrans::frl::{
    fedsvd_keygen, fedsvd_run, fedsvd_run_with, vfedpca_aggregate, vfedpca_local, vfedpca_run,
    FedSvdParty, FrlConfig, FrlError, FrlInput, FrlMethod, HonestParty, PartyBlock, Role, Transcript,
};
use vfedtrans::linalg::Matrix;
use vfedtrans::lrd::{lrd_gradient, DistillNorm, EncoderParams};
use vfedtrans::orchestrator::experiments::frl_inputs;
use vfedtrans::orchestrator::{
    add_data_hospital, add_local_rows, audit_transcript, fit_pipeline, inductive_eval, prepare, retask,
    run_experiment, run_pipeline, spearman, sweep, timing_report, DatasetSource, ExperimentConfig, RawViews,
    RunResult, Scenario, SweepAxis, TimingConfig,
};
use vfedtrans::seed::rng;

struct Outcome {
    id: &'static str,
    pass: bool,
    hard: bool,
    detail: String,
}

fn gaussian(rows: usize, cols: usize, g: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| g.sample(StandardNormal))
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)])
}

fn ids(n: usize) -> Vec<SampleId> {
    (0..n).map(SampleId::from).collect()
}

fn block(id: &str, m: Matrix) -> PartyBlock {
    PartyBlock {
        party_id: id.into(),
        shared: m,
    }
}

/// Singular values descending and the matching left vectors.
fn oracle_svd(m: &Matrix) -> (Vec<f64>, DMatrix<f64>) {
    let svd = to_na(m).svd(true, false);
    let u = svd.u.expect("u requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    (sigma, u)
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut g = rng(101);
    let mut worst_sigma = 0.0f64;
    let mut worst_proj = 0.0f64;
    let mut checked_proj = 0;
    let mut failures = Vec::new();
    for case in 0..50 {
        let n = g.random_range(2..=300);
        let n_data = g.random_range(1..=3);
        let xt = g.random_range(1..=12);
        let mut widths = vec![xt];
        for _ in 0..n_data {
            widths.push(g.random_range(1..=(40 - xt) / n_data));
        }
        let total: usize = widths.iter().sum();
        if xt > n.min(total) {
            continue;
        }
        let scale: f64 = 10f64.powf(g.random_range(-2.0..2.0));
        let blocks: Vec<Matrix> = widths.iter().map(|&w| gaussian(n, w, &mut g).scale(scale)).collect();
        let input = FrlInput::new(
            ids(n),
            block("t", blocks[0].clone()),
            blocks[1..].iter().enumerate().map(|(k, b)| block(&format!("d{k}"), b.clone())).collect(),
        )
        .unwrap();
        let out = match fedsvd_run(&input, &FrlConfig::default(), &mut rng(case), &mut Transcript::new()) {
            Ok(o) => o,
            Err(e) => {
                failures.push(format!("case {case}: {e}"));
                continue;
            }
        };
        let refs: Vec<&Matrix> = blocks.iter().collect();
        let (sigma, u0) = oracle_svd(&Matrix::hstack(&refs).unwrap());
        let s0 = sigma[0];
        for (a, b) in out.server_singular_values.iter().zip(&sigma) {
            worst_sigma = worst_sigma.max((a - b).abs() / s0);
        }
        let r = xt;
        let gap = if r < sigma.len() { sigma[r - 1] - sigma[r] } else { sigma[r - 1] };
        if gap > 1e-8 {
            checked_proj += 1;
            let u = to_na(&out.representation.matrix);
            let u0 = u0.columns(0, r);
            let err = (&u * u.transpose() - u0 * u0.transpose()).norm();
            worst_proj = worst_proj.max(err);
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = failures.is_empty() && worst_sigma <= 1e-10 && worst_proj < 1e-6 && secs < 30.0;
    Outcome {
        id: "1",
        pass,
        hard: true,
        detail: format!(
            "max rel sigma err {worst_sigma:.2e}, max projector err {worst_proj:.2e} over {checked_proj} cases, {secs:.1}s{}",
            if failures.is_empty() { String::new() } else { format!(", errors: {failures:?}") }
        ),
    }
}

/// Uploads its raw block, zero-padded to the masked width, instead of
/// `A S B`.
struct LeakyParty<'a> {
    role: Role,
    shared: &'a Matrix,
}

impl FedSvdParty for LeakyParty<'_> {
    fn role(&self) -> Role {
        self.role.clone()
    }

    fn width(&self) -> usize {
        self.shared.cols()
    }

    fn upload(&self, _a: &Matrix, b_k: &Matrix) -> Result<Matrix, FrlError> {
        let mut out = Matrix::zeros(self.shared.rows(), b_k.cols());
        out.set_block(0, 0, self.shared);
        Ok(out)
    }
}

fn criterion_2() -> Outcome {
    let ds = load_breast().unwrap();
    let mut notes = Vec::new();
    let mut pass = true;
    for method in [FrlMethod::Fedsvd, FrlMethod::Vfedpca] {
        for seed in 0..3 {
            let mut cfg = ExperimentConfig::breast();
            cfg.frl.method = method;
            cfg.lrd.epochs = 5;
            let state = run_pipeline(&ds, &cfg, seed).unwrap();
            let rep = audit_transcript(&state.transcript, &frl_inputs(&state.split));
            if !rep.is_clean() || rep.records == 0 {
                pass = false;
                notes.push(format!("{method:?} seed {seed}: {} violations", rep.violations.len()));
            }
        }
    }

    let mut g = rng(7);
    let (st, sd) = (gaussian(30, 4, &mut g), gaussian(30, 5, &mut g));
    let input = FrlInput::new(ids(30), block("t", st.clone()), vec![block("d1", sd.clone())]).unwrap();
    let keys = fedsvd_keygen(30, &[4, 5], 100, &mut rng(8)).unwrap();
    let leaky = LeakyParty {
        role: Role::Task("t".into()),
        shared: &st,
    };
    let honest = HonestParty {
        role: Role::Data("d1".into()),
        shared: &sd,
    };
    let mut t = Transcript::new();
    fedsvd_run_with(&input, &leaky, &[&honest], &keys, &FrlConfig::default(), &mut t).unwrap();
    let mut raw = RawViews::default();
    raw.push("t", st);
    raw.push("d1", sd);
    let rep = audit_transcript(&t, &raw);
    let injected = rep.violations.len() == 1
        && rep.violations[0].sender == Role::Task("t".into())
        && rep.violations[0].receiver == Role::Server;
    if !injected {
        pass = false;
        notes.push(format!("leaky double: {:?}", rep.violations));
    }
    Outcome {
        id: "2",
        pass,
        hard: true,
        detail: if notes.is_empty() {
            "6 honest runs clean; leaky double flagged once on task -> server".into()
        } else {
            notes.join("; ")
        },
    }
}

/// `Q diag(values) Pᵀ` with random orthogonal `Q`, `P`.
fn planted(rows: usize, values: &[f64], g: &mut impl Rng) -> Matrix {
    let q = to_na(&gaussian(rows, values.len(), g)).qr().q();
    let p = to_na(&gaussian(values.len(), values.len(), g)).qr().q();
    let m = q * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(values)) * p.transpose();
    Matrix::from_fn(rows, values.len(), |r, c| m[(r, c)])
}

fn criterion_3() -> Outcome {
    let mut g = rng(31);
    let mut worst_w = 0.0f64;
    let mut w_ok = true;
    for n in 1..=20 {
        let pairs: Vec<(Vec<f64>, f64)> = (0..n)
            .map(|_| ((0..6).map(|_| g.sample(StandardNormal)).collect(), 10f64.powf(g.random_range(-3.0..3.0))))
            .collect();
        let agg = vfedpca_aggregate(&pairs).unwrap();
        let err = (agg.weights.iter().sum::<f64>() - 1.0).abs();
        worst_w = worst_w.max(err);
        w_ok &= err <= 1e-15 * n as f64;
    }

    let mut worst_rec = 0.0f64;
    let mut worst_eig = 0.0f64;
    for _ in 0..10 {
        let s = planted(80, &[10.0, 5.0, 3.0, 2.0, 1.0, 0.5], &mut g);
        let input = FrlInput::new(ids(80), block("t", s.clone()), vec![]).unwrap();
        let cfg = FrlConfig {
            method: FrlMethod::Vfedpca,
            ..FrlConfig::default()
        };
        let out = vfedpca_run(&input, &cfg, &mut Transcript::new()).unwrap();
        let sym = to_na(&s).transpose() * to_na(&s);
        let eig = sym.clone().symmetric_eigen();
        let top = eig.eigenvalues.imax();
        let v = eig.eigenvectors.column(top).into_owned();
        let expected = to_na(&s) * &v * v.transpose();
        worst_rec = worst_rec.max((to_na(&out.representation.matrix) - expected).abs().max());

        let local = vfedpca_local(&s, 100, None).unwrap();
        let lambda = eig.eigenvalues[top] / s.cols() as f64;
        worst_eig = worst_eig.max((local.value - lambda).abs());
    }
    Outcome {
        id: "3",
        pass: w_ok && worst_rec <= 1e-10 && worst_eig <= 1e-6,
        hard: true,
        detail: format!("weight-sum err {worst_w:.1e}, rank-1 recon err {worst_rec:.1e}, eigenvalue err {worst_eig:.1e}"),
    }
}

fn criterion_4() -> Outcome {
    let mut g = rng(41);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for draw in 0..20 {
        let d = g.random_range(3..=12);
        let r = g.random_range(1..=d.min(5));
        let n = g.random_range(1..=8);
        let theta = 10f64.powf(g.random_range(-3.0..1.0));
        let mut params = EncoderParams::init(d, r, 6, draw).unwrap();
        let x = gaussian(n, d, &mut g);
        let fed_rows: Vec<Option<Vec<f64>>> = (0..n)
            .map(|_| g.random_bool(0.5).then(|| (0..r).map(|_| g.sample(StandardNormal)).collect()))
            .collect();
        let fed: Vec<Option<&[f64]>> = fed_rows.iter().map(|f| f.as_deref()).collect();
        let loss = |p: &EncoderParams| lrd_gradient(p, &x, &fed, theta, DistillNorm::L2).unwrap().0.total();
        let grads = lrd_gradient(&params, &x, &fed, theta, DistillNorm::L2).unwrap().1.flat();
        for (i, &gi) in grads.iter().enumerate() {
            let orig = *params.network.param_mut(i);
            *params.network.param_mut(i) = orig + h;
            let up = loss(&params);
            *params.network.param_mut(i) = orig - h;
            let down = loss(&params);
            *params.network.param_mut(i) = orig;
            let fd = (up - down) / (2.0 * h);
            // Central differences on an O(1) loss carry ~eps*L/h = 4e-11 of
            // rounding, so gradients below 1e-6 are compared against that floor.
            worst = worst.max((fd - gi).abs() / gi.abs().max(fd.abs()).max(1e-6));
        }
    }
    Outcome {
        id: "4",
        pass: worst < 1e-4,
        hard: true,
        detail: format!("max relative error {worst:.2e} over 20 draws"),
    }
}

/// Synthetic latent-factor layout shared by the trend checks.
fn synthetic(spec: LatentSpec, seed: u64) -> ExperimentConfig {
    ExperimentConfig::with(
        DatasetSource::SyntheticLatent { spec, seed },
        SplitConfig::single(
            600,
            8,
            PartySizes {
                samples: 600,
                features: 8,
                shared: 300,
            },
        ),
    )
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn criterion_5() -> Outcome {
    let t0 = Instant::now();
    let mut cfg = synthetic(LatentSpec::default(), 7);
    cfg.scenario = Scenario::DistillAblation;
    let ds = cfg.dataset.load(None).unwrap();
    let run = run_experiment(&ds, &cfg, 1).unwrap();
    let with = run.summary("vfedtrans").mean;
    let without = run.summary("vfedtrans_theta0").mean;
    let local = run.summary("local").mean;
    let secs = t0.elapsed().as_secs_f64();
    Outcome {
        id: "5",
        pass: with - without >= 0.03 && secs < 600.0,
        hard: false,
        detail: format!(
            "theta=0.001 {} vs theta=0 {} (gap {:+.2} pts, need >= +3), local {}, {secs:.0}s",
            pct(with),
            pct(without),
            100.0 * (with - without),
            pct(local)
        ),
    }
}

fn criterion_6() -> Vec<Outcome> {
    let t0 = Instant::now();
    let cfg = ExperimentConfig::breast();
    let ds = load_breast().unwrap();
    let run = run_experiment(&ds, &cfg, 1).unwrap();
    let vf = run.summary("vfedtrans");
    let lo = run.summary("local");
    let secs = t0.elapsed().as_secs_f64();
    vec![
        Outcome {
            id: "6a",
            pass: vf.mean - lo.mean > 0.0 && secs < 900.0,
            hard: false,
            detail: format!(
                "VFedTrans(RF) {} ± {} vs LOCAL(RF) {} ± {}, gap {:+.2} pts, {secs:.0}s",
                pct(vf.mean),
                pct(vf.std),
                pct(lo.mean),
                pct(lo.std),
                100.0 * (vf.mean - lo.mean)
            ),
        },
        Outcome {
            id: "6b",
            pass: (vf.mean - 0.9253).abs() <= 0.05 && (lo.mean - 0.9100).abs() <= 0.05,
            hard: false,
            detail: format!("|{} - 92.53%| and |{} - 91.00%| within 5 pts", pct(vf.mean), pct(lo.mean)),
        },
    ]
}

fn criterion_7() -> Outcome {
    let mut cfg = ExperimentConfig::breast();
    // I_d = 300 keeps I_t + I_d - I_s within the 569 rows for every point.
    cfg.split.parties[0].samples = 300;
    let ds = load_breast().unwrap();
    let values = [50, 100, 150, 200];
    let res = sweep(&ds, &cfg, SweepAxis::SharedSamples, &values, 1).unwrap();
    let trend = res.trend("vfedtrans");
    let (x, y): (Vec<f64>, Vec<f64>) = trend.iter().copied().unzip();
    let rho = spearman(&x, &y);
    Outcome {
        id: "7",
        pass: trend.len() == values.len() && rho > 0.0,
        hard: false,
        detail: format!(
            "Breast I_s {:?}: VFedTrans {}, Spearman {rho:+.2}",
            values,
            y.iter().map(|a| pct(*a)).collect::<Vec<_>>().join(" / ")
        ),
    }
}

fn criterion_8() -> Outcome {
    let cfg = synthetic(
        LatentSpec {
            data_features: 32,
            ..LatentSpec::default()
        },
        3,
    );
    let ds = cfg.dataset.load(None).unwrap();
    let timing = TimingConfig {
        n_parties: vec![1, 2, 3, 4],
        shared_samples: vec![],
        repeats: 5,
    };
    let rep = timing_report(&ds, &cfg, &timing).unwrap();
    let axis = &rep.axes[0];
    Outcome {
        id: "8",
        pass: axis.points.len() == 4 && axis.fit.r2 > 0.9,
        hard: false,
        detail: format!(
            "median seconds {}, slope {:.3} s/party, R² {:.3}",
            axis.points.iter().map(|(n, t)| format!("{n}:{t:.2}")).collect::<Vec<_>>().join(" "),
            axis.fit.slope,
            axis.fit.r2
        ),
    }
}

fn criterion_9() -> Outcome {
    let ds = load_breast().unwrap();
    let mut cfg = ExperimentConfig::with(
        DatasetSource::Breast,
        SplitConfig {
            parties: vec![
                PartySizes {
                    samples: 150,
                    features: 8,
                    shared: 100,
                },
                PartySizes {
                    samples: 150,
                    features: 7,
                    shared: 100,
                },
            ],
            ..SplitConfig::breast()
        },
    );
    cfg.lrd.epochs = 40;
    let seed = 3;
    let mut notes = Vec::new();

    let (split, _) = prepare(&ds, &cfg, seed).unwrap();
    let full = fit_pipeline(split.clone(), &cfg, seed).unwrap();

    // New task on the same rows.
    let digests = full.encoder_digests();
    let flipped: Vec<usize> = full.split.task.labels.as_ref().unwrap().iter().map(|y| 1 - y).collect();
    let before = full.transcript.len();
    retask(&full, &flipped, &cfg).unwrap();
    let retask_ok = full.encoder_digests() == digests && full.transcript.len() == before;
    if !retask_ok {
        notes.push("retask changed encoders or transcript".to_owned());
    }

    // New private task rows.
    let task = &full.split.task;
    let pick: Vec<usize> = full.split.train_rows.iter().copied().take(20).collect();
    let rows = PartyView {
        party_id: task.party_id.clone(),
        role: PartyRole::Task,
        ids: (0..pick.len()).map(|i| SampleId(format!("new{i:03}"))).collect(),
        features: task.features.select_rows(&pick),
        labels: Some(pick.iter().map(|&i| task.labels.as_ref().unwrap()[i]).collect()),
        feature_names: task.feature_names.clone(),
        source_columns: task.source_columns.clone(),
    };
    let data_msgs = full.transcript.data_party_messages();
    let records = full.transcript.len();
    let grown = add_local_rows(full.clone(), &rows, &cfg).unwrap();
    let local_ok = grown.transcript.data_party_messages() == data_msgs && grown.transcript.len() == records;
    if !local_ok {
        notes.push(format!(
            "local update added {} cross-party messages",
            grown.transcript.data_party_messages() - data_msgs
        ));
    }

    // A second data hospital joining later.
    let mut first = split;
    let party = first.data_parties.pop().unwrap();
    first.shared_ids.pop();
    let partial = fit_pipeline(first, &cfg, seed).unwrap();
    let joined = add_data_hospital(partial, party, &cfg).unwrap();
    let join_ok = joined.encoder_digests() == full.encoder_digests()
        && joined.accuracy == full.accuracy
        && joined.enriched.matrix == full.enriched.matrix
        && joined.transcript.digest() == full.transcript.digest();
    if !join_ok {
        notes.push("add_data_hospital differs from the from-scratch run".to_owned());
    }
    Outcome {
        id: "9",
        pass: retask_ok && local_ok && join_ok,
        hard: true,
        detail: if notes.is_empty() {
            "retask keeps encoder digests; local rows add 0 cross-party messages; late join == from scratch".into()
        } else {
            notes.join("; ")
        },
    }
}

fn criterion_10() -> Outcome {
    let cfg = synthetic(
        LatentSpec {
            n_classes: 4,
            n_samples: 1500,
            ..LatentSpec::default()
        },
        7,
    );
    let ds = cfg.dataset.load(None).unwrap();
    let iid = inductive_eval(&ds, &cfg, InductiveMode::Iid, 1).unwrap();
    let non = inductive_eval(&ds, &cfg, InductiveMode::Noniid, 1).unwrap();
    let m = |r: &RunResult, k: &str| r.summary(k).mean;
    let (vi, li, vn, ln) = (m(&iid, "vfedtrans"), m(&iid, "local"), m(&non, "vfedtrans"), m(&non, "local"));
    let order_ok = vn <= vi && ln <= li;
    let gap_ok = vi - li >= 0.0 && vn - ln >= 0.0;
    Outcome {
        id: "10",
        pass: order_ok && gap_ok,
        hard: false,
        detail: format!(
            "IID vf {} / local {}; non-IID vf {} / local {}; non-IID <= IID: {order_ok}; gap >= 0: {gap_ok}",
            pct(vi),
            pct(li),
            pct(vn),
            pct(ln)
        ),
    }
}

fn main() {
    // `cargo test -- --list` and filters: nothing to enumerate.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let checks: Vec<fn() -> Vec<Outcome>> = vec![
        || vec![criterion_1()],
        || vec![criterion_2()],
        || vec![criterion_3()],
        || vec![criterion_4()],
        || vec![criterion_5()],
        criterion_6,
        || vec![criterion_7()],
        || vec![criterion_8()],
        || vec![criterion_9()],
        || vec![criterion_10()],
    ];
    let mut hard_failures = Vec::new();
    for check in checks {
        for o in check() {
            println!("criterion {:<3} {}  {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.detail);
            if o.hard && !o.pass {
                hard_failures.push(o.id);
            }
        }
    }
    if !hard_failures.is_empty() {
        eprintln!("exact-math or contract criteria failed: {hard_failures:?}");
        std::process::exit(1);
    }
}
