//! Acceptance checks. Runs as a plain binary so every criterion prints its
//! PASS/FAIL line; exits non-zero if any fails.
//!
//! Training checks run at desk scale: 128 grid points, 100 trajectories,
//! reduced widths and epochs, lr 1e-3.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weldnet::baselines::{train_hdp, BaselineConfig};
use weldnet::eval::{operator_error_vs_time, Predictor};
use weldnet::id::mle_id;
use weldnet::neural::{mse_loss, Matrix, MlpNet, MlpSpec, Params, ResidualNet};
use weldnet::pde::{
    gen_dataset, sample_grf, solve_burgers, solve_kdv, Family, GenConfig, GrfSpec, SolverOptions, SpatialGrid, TimeGrid, TrajectoryDataset,
};
use weldnet::reduction::{pca_fit, Coder, CoderKind};
use weldnet::weldnet::{train_weldnet, Architecture, Parallelism, TrainConfig, Variant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

// ------------------------------------------------------------- gradients

/// Relative error with a 1e-4 magnitude floor, so entries that are zero up to
/// finite-difference rounding compare absolutely.
fn grad_err(analytic: f64, fd: f64) -> f64 {
    (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-4)
}

fn randomize(p: &mut impl Params, rng: &mut ChaCha8Rng) {
    for t in p.tensors_mut() {
        t.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

enum Net {
    Mlp(MlpNet),
    Res(ResidualNet),
}

impl Net {
    fn loss(&self, x: &Matrix, y: &Matrix) -> f64 {
        let out = match self {
            Net::Mlp(n) => n.predict(x).unwrap(),
            Net::Res(n) => n.predict(x).unwrap(),
        };
        mse_loss(&out, y).unwrap().0
    }

    /// Flattened parameter gradient followed by the input gradient.
    fn analytic(&self, x: &Matrix, y: &Matrix) -> (Vec<f64>, Vec<f64>) {
        let (g, dx) = match self {
            Net::Mlp(n) => {
                let (out, cache) = n.forward(x).unwrap();
                n.backward(&cache, &mse_loss(&out, y).unwrap().1).unwrap()
            }
            Net::Res(n) => {
                let (out, cache) = n.forward(x).unwrap();
                n.backward(&cache, &mse_loss(&out, y).unwrap().1).unwrap()
            }
        };
        (g.tensors().concat(), dx.data().to_vec())
    }

    fn shift(&mut self, idx: usize, delta: f64) {
        let mut ts = match self {
            Net::Mlp(n) => n.tensors_mut(),
            Net::Res(n) => n.tensors_mut(),
        };
        let mut i = idx;
        for t in ts.iter_mut() {
            if i < t.len() {
                t[i] += delta;
                return;
            }
            i -= t.len();
        }
        panic!("parameter index out of range");
    }

    fn n_params(&self) -> usize {
        match self {
            Net::Mlp(n) => n.n_params(),
            Net::Res(n) => n.n_params(),
        }
    }
}

fn criterion_gradients() -> Outcome {
    const H: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for case in 0..50 {
        let hidden: Vec<usize> = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(1..=16)).collect();
        let batch = rng.gen_range(1..=6);
        let (mut net, din, dout) = if case % 2 == 0 {
            let (din, dout) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
            let mut n = MlpNet::zeros(MlpSpec::new(din, hidden, dout)).unwrap();
            randomize(&mut n, &mut rng);
            (Net::Mlp(n), din, dout)
        } else {
            let dim = rng.gen_range(1..=8);
            let hidden = if hidden.is_empty() { vec![rng.gen_range(1..=16)] } else { hidden };
            let mut n = ResidualNet::new(MlpNet::zeros(MlpSpec::new(dim, hidden, dim)).unwrap()).unwrap();
            randomize(&mut n, &mut rng);
            (Net::Res(n), dim, dim)
        };
        let x = random_matrix(&mut rng, batch, din);
        let y = random_matrix(&mut rng, batch, dout);
        let (gp, gx) = net.analytic(&x, &y);
        for i in 0..net.n_params() {
            net.shift(i, H);
            let up = net.loss(&x, &y);
            net.shift(i, -2.0 * H);
            let down = net.loss(&x, &y);
            net.shift(i, H);
            worst = worst.max(grad_err(gp[i], (up - down) / (2.0 * H)));
            checked += 1;
        }
        for i in 0..x.data().len() {
            let mut xp = x.clone();
            xp.data_mut()[i] += H;
            let mut xm = x.clone();
            xm.data_mut()[i] -= H;
            worst = worst.max(grad_err(gx[i], (net.loss(&xp, &y) - net.loss(&xm, &y)) / (2.0 * H)));
            checked += 1;
        }
    }
    outcome(
        worst < 1e-5,
        format!("50 configs, {checked} partials, worst rel. error {worst:.2e} (< 1e-5)"),
    )
}

// -------------------------------------------------------------- identity

fn criterion_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0usize;
    let mut total = 0usize;
    for (dim, layers) in [(1, 1), (4, 2), (16, 3), (128, 3)] {
        let net = MlpNet::identity(dim, layers).unwrap();
        let rows = 1000 / 4;
        let data: Vec<f64> = (0..rows * dim)
            .map(|_| rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-6..6)))
            .collect();
        let x = Matrix::new(rows, dim, data).unwrap();
        let y = net.predict(&x).unwrap();
        mismatches += x.data().iter().zip(y.data()).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
        total += rows;
    }
    outcome(mismatches == 0, format!("{total} inputs, {mismatches} non-identical entries"))
}

// ------------------------------------------------------------------ PDEs

fn soliton(c: f64, x0: f64, x: f64, t: f64) -> f64 {
    3.0 * c / (c.sqrt() * (x - c * t - x0) / 2.0).cosh().powi(2)
}

fn soliton_error(len: f64) -> f64 {
    let g = SpatialGrid::new(512, 0.0, len, true).unwrap();
    let x0 = len / 2.0;
    let u0: Vec<f64> = g.points().iter().map(|&x| soliton(4.0, x0, x, 0.0)).collect();
    let t = TimeGrid::new(0.01, 301).unwrap();
    let tr = solve_kdv(&u0, &t, &g, SolverOptions::default()).unwrap();
    let exact: Vec<f64> = g.points().iter().map(|&x| soliton(4.0, x0, x, 0.01)).collect();
    rel_l2(&tr[300], &exact)
}

fn criterion_kdv() -> Outcome {
    let t0 = Instant::now();
    let e = soliton_error(12.0);
    let secs = t0.elapsed().as_secs_f64();
    let narrow = soliton_error(6.0);
    outcome(
        e < 1e-5 && secs < 10.0,
        format!("512 modes on [0,12): rel. L2 {e:.2e} (< 1e-5) in {secs:.2}s; on [0,6) the wave is not periodic: {narrow:.2e}"),
    )
}

fn criterion_burgers() -> Outcome {
    let t0 = Instant::now();
    let t = TimeGrid::new(1.0, 301).unwrap();
    let coarse = SpatialGrid::new(512, 0.0, 1.0, true).unwrap();
    let fine = coarse.refined(2).unwrap();
    let f = sample_grf(&GrfSpec::burgers(coarse.clone()), 0).unwrap();
    let a = solve_burgers(&f.evaluate(&coarse).unwrap(), 1e-3, &t, &coarse, SolverOptions { substeps: 8 }).unwrap();
    let b = solve_burgers(&f.evaluate(&fine).unwrap(), 1e-3, &t, &fine, SolverOptions { substeps: 16 }).unwrap();
    let b: Vec<f64> = b[300].iter().step_by(2).copied().collect();
    let e = rel_l2(&a[300], &b);
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        e < 1e-5 && secs < 60.0,
        format!("512->1024 modes, 8->16 substeps: rel. L2 {e:.2e} (< 1e-5) in {secs:.1}s"),
    )
}

// ------------------------------------------------------------------- PCA

fn centered(x: &Matrix) -> Matrix {
    let mean = x.column_means();
    let mut c = x.clone();
    for r in 0..c.rows() {
        c.row_mut(r).iter_mut().zip(&mean).for_each(|(v, m)| *v -= m);
    }
    c
}

fn frame_error(xc: &Matrix, v: &Matrix) -> f64 {
    let proj = xc.matmul_t(v).unwrap().matmul(v).unwrap();
    xc.sub(&proj).unwrap().frobenius_sq()
}

fn criterion_pca() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_gap = 0.0f64;
    let mut beaten = 0usize;
    for _ in 0..20 {
        let m = rng.gen_range(2..=12);
        let dim = rng.gen_range(2..=12);
        let d = rng.gen_range(1..=m.min(dim));
        let x = random_matrix(&mut rng, m, dim);
        let xc = centered(&x);
        let err = frame_error(&xc, &pca_fit(&x, d).unwrap().components);
        let a = DMatrix::from_row_slice(m, dim, xc.data());
        let mut vals: Vec<f64> = SymmetricEigen::new(a.transpose() * &a).eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        let oracle: f64 = vals[d..].iter().map(|v| v.max(0.0)).sum();
        worst_gap = worst_gap.max((err - oracle).abs());
        for _ in 0..100 {
            let q = DMatrix::from_fn(dim, d, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
            let v = Matrix::new(
                d,
                dim,
                (0..d).flat_map(|i| (0..dim).map(move |k| (i, k))).map(|(i, k)| q[(k, i)]).collect(),
            )
            .unwrap();
            if frame_error(&xc, &v) + 1e-12 < err {
                beaten += 1;
            }
        }
    }
    outcome(
        worst_gap < 1e-10 && beaten == 0,
        format!("20 matrices: worst gap to eigendecomposition {worst_gap:.1e} (< 1e-10), random frames better: {beaten}/2000"),
    )
}

// -------------------------------------------------------------- training

fn desk_data(family: Family, refine: usize) -> TrajectoryDataset {
    gen_dataset(&GenConfig {
        n_samples: 100,
        n_points: 128,
        seed: 1,
        refine,
        ..GenConfig::new(family)
    })
    .unwrap()
}

fn desk_config(coder_width: usize, propagator_width: usize, variant: Variant) -> TrainConfig {
    TrainConfig {
        lr: 1e-3,
        epochs_joint: 60,
        epochs_finetune: 30,
        epochs_transcoder: 300,
        variant,
        arch: Architecture {
            coder_width,
            propagator_width,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn final_error(model: &dyn Predictor, ds: &TrajectoryDataset, test: &[usize]) -> f64 {
    operator_error_vs_time(model, ds, test, "m").unwrap().final_error()
}

fn coder_params(c: &Coder) -> usize {
    match c {
        Coder::Neural { encoder, decoder } => encoder.n_params() + decoder.n_params(),
        Coder::Pca(_) => 0,
    }
}

fn weld_error(ds: &TrajectoryDataset, coder: CoderKind, windows: usize, d: usize, cfg: &TrainConfig) -> (f64, usize) {
    let m = train_weldnet(ds, coder, windows, d, cfg, Parallelism::default()).unwrap();
    let params = m
        .windows
        .iter()
        .map(|w| coder_params(&w.coder) + w.propagator.n_params())
        .sum::<usize>()
        + m.transcoders.iter().map(|t| t.n_params()).sum::<usize>();
    (final_error(&m, ds, &m.split.test), params)
}

fn criterion_windows(tscale: &TrajectoryDataset) -> Outcome {
    let (four, p4) = weld_error(tscale, CoderKind::Neural, 4, 2, &desk_config(64, 32, Variant::default()));
    let (one, p1) = weld_error(tscale, CoderKind::Neural, 1, 2, &desk_config(152, 64, Variant::default()));
    outcome(
        four < one,
        format!("tscale d=2: 4 windows {four:.4} ({p4} params) vs 1 window {one:.4} ({p1} params)"),
    )
}

fn criterion_nonlinear_gap(tscale: &TrajectoryDataset) -> Outcome {
    let cfg = desk_config(128, 64, Variant::default());
    let (ff, _) = weld_error(tscale, CoderKind::Neural, 4, 4, &cfg);
    let (pca, _) = weld_error(tscale, CoderKind::Pca, 4, 4, &cfg);
    let ratio = pca / ff;
    outcome(
        ff < 0.05 && pca > 0.08 && ratio >= 2.0,
        format!("tscale W=4 d=4: FF {ff:.4} (< 0.05), PCA {pca:.4} (> 0.08), ratio {ratio:.1} (>= 2)"),
    )
}

fn criterion_kdv_shift(kshift: &TrajectoryDataset) -> Outcome {
    let (ff, _) = weld_error(kshift, CoderKind::Neural, 2, 4, &desk_config(128, 64, Variant::default()));
    outcome(ff < 0.02, format!("kshift W=2 d=4: FF {ff:.4} (< 0.02)"))
}

fn criterion_ablation(kshift: &TrajectoryDataset) -> Outcome {
    let (i, _) = weld_error(kshift, CoderKind::Neural, 1, 4, &desk_config(128, 64, "i".parse().unwrap()));
    let (iv, _) = weld_error(kshift, CoderKind::Neural, 1, 4, &desk_config(128, 64, "iv".parse().unwrap()));
    outcome(i < iv, format!("kshift 1 window: variant i {i:.4} < variant iv {iv:.4}"))
}

fn criterion_hdp() -> Outcome {
    let bshift = desk_data(Family::Bshift, 4);
    let cfg = desk_config(128, 64, Variant::default());
    let (ff, _) = weld_error(&bshift, CoderKind::Neural, 4, 4, &cfg);
    let hdp = train_hdp(
        &bshift,
        &cfg,
        &BaselineConfig {
            epochs: 10,
            ..Default::default()
        },
    )
    .unwrap();
    let he = final_error(&hdp, &bshift, &hdp.info.split.test);
    outcome(
        he >= 3.0 * ff,
        format!("bshift: HDP {he:.4} vs FF W=4 {ff:.4}, ratio {:.1} (>= 3)", he / ff),
    )
}

// ---------------------------------------------------------- intrinsic dim

fn flat(m: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0.0; 2000 * 10];
    for row in data.chunks_mut(10) {
        row.iter_mut().take(m).for_each(|v| *v = rng.gen());
    }
    Matrix::new(2000, 10, data).unwrap()
}

fn criterion_intrinsic_dim(tscale: &TrajectoryDataset) -> Outcome {
    let all: Vec<usize> = (0..tscale.n_samples()).collect();
    let per_time: Vec<f64> = [0, 150, 300]
        .iter()
        .map(|&k| mle_id(&tscale.slice_at(&all, k), 20).unwrap().value)
        .collect();
    let one = mle_id(&flat(1, 1), 20).unwrap().value;
    let two = mle_id(&flat(2, 2), 20).unwrap().value;
    let pass = per_time.iter().all(|v| (0.7..=1.3).contains(v)) && (one - 1.0).abs() <= 0.3 && (two - 2.0).abs() <= 0.3;
    outcome(
        pass,
        format!("tscale MLE at t0/t150/t300 {per_time:.3?} (in [0.7, 1.3]); 1-flat {one:.3}, 2-flat {two:.3} (±0.3)"),
    )
}

// ----------------------------------------------------------- determinism

fn run(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_weldnet"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn snapshot(dir: &Path, skip: &[&str]) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !skip.contains(&p.file_name().unwrap().to_str().unwrap()))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d.wtrj");
    let model = tmp.path().join("m");
    let parallel = tmp.path().join("p");
    let s = |p: &PathBuf| p.to_str().unwrap().to_string();
    let gen = [
        "gen-data",
        "--family",
        "kshift",
        "--n",
        "10",
        "--steps",
        "21",
        "--points",
        "64",
        "--seed",
        "9",
        "--out",
        &s(&data),
    ];
    let train = |out: &PathBuf, par: bool| {
        let mut a = vec![
            "train".to_string(),
            "--data".into(),
            s(&data),
            "--out".into(),
            s(out),
            "--windows".into(),
            "2".into(),
            "--latent-dim".into(),
            "3".into(),
            "--epochs-joint".into(),
            "4".into(),
            "--epochs-finetune".into(),
            "3".into(),
            "--epochs-transcoder".into(),
            "3".into(),
            "--coder-width".into(),
            "24".into(),
            "--propagator-width".into(),
            "12".into(),
        ];
        if par {
            a.push("--parallel-windows".into());
        }
        run(&a.iter().map(String::as_str).collect::<Vec<_>>());
    };

    run(&gen);
    let d1 = fs::read(&data).unwrap();
    run(&gen);
    let d2 = fs::read(&data).unwrap();
    train(&model, false);
    let m1 = snapshot(&model, &[]);
    train(&model, false);
    let m2 = snapshot(&model, &[]);
    train(&parallel, true);
    let serial = snapshot(&model, &["run_config.json"]);
    let par = snapshot(&parallel, &["run_config.json"]);

    let data_same = d1 == d2;
    let train_same = m1 == m2;
    let par_same = serial == par;
    outcome(
        data_same && train_same && par_same && m1.len() > 4,
        format!(
            "dataset identical: {data_same}; checkpoints+traces identical ({} files): {train_same}; parallel == serial: {par_same}",
            m1.len()
        ),
    )
}

// ------------------------------------------------------------------ main

fn main() {
    // Optional positional arguments select criteria by number, e.g. `-- 1 5`.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let only: Vec<usize> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let started = Instant::now();
    let tscale = OnceLock::new();
    let kshift = OnceLock::new();
    let tscale = || tscale.get_or_init(|| desk_data(Family::Tscale, 1));
    let kshift = || kshift.get_or_init(|| desk_data(Family::Kshift, 4));
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("gradient oracle", Box::new(criterion_gradients)),
        ("identity network", Box::new(criterion_identity)),
        ("KdV traveling wave", Box::new(criterion_kdv)),
        ("Burgers self-convergence", Box::new(criterion_burgers)),
        ("PCA oracle", Box::new(criterion_pca)),
        ("windowed vs single window", Box::new(|| criterion_windows(tscale()))),
        ("nonlinear vs linear gap", Box::new(|| criterion_nonlinear_gap(tscale()))),
        ("KdV shift quality", Box::new(|| criterion_kdv_shift(kshift()))),
        ("ablation ordering", Box::new(|| criterion_ablation(kshift()))),
        ("intrinsic dimension", Box::new(|| criterion_intrinsic_dim(tscale()))),
        ("determinism", Box::new(criterion_determinism)),
        ("HDP degradation", Box::new(criterion_hdp)),
    ];
    let (mut passed, mut failed) = (0, 0);
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let t0 = Instant::now();
        let o = check();
        if o.pass {
            passed += 1;
        } else {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {passed} passed, {failed} failed in {:.0}s",
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
