//! The training stages: joint autoencoder + propagator (or autoencoder
//! alone), propagator finetuning, and transcoders.

use log::{debug, info};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::config::TrainConfig;
use super::model::{with_time, EpochRecord, StageTrace, WeldModel, WindowModel};
use super::window::{split_windows, WindowLayout};
use crate::error::{Result, WeldError};
use crate::neural::{mse_loss, AdamW, Matrix, MlpGrads, MlpNet, MlpSpec, ResidualNet};
use crate::pde::TrajectoryDataset;
use crate::reduction::{pca_fit, Coder, CoderKind};
use crate::rng::{self, derive_seed, stream};

/// Snapshot rows `x(n, k)` for the listed `(n, k)` pairs.
pub fn gather(ds: &TrajectoryDataset, items: &[(usize, usize)]) -> Matrix {
    let d = ds.dim();
    let mut data = Vec::with_capacity(items.len() * d);
    for &(n, k) in items {
        data.extend(ds.snapshot(n, k).iter().map(|&v| v as f64));
    }
    Matrix::new(items.len(), d, data).expect("gathered rows have dataset width")
}

/// Appends a zero column (the time slot of a latent gradient).
pub(crate) fn pad_time(g: &Matrix) -> Matrix {
    g.with_column(&vec![0.0; g.rows()])
}

pub(crate) fn shuffled<T: Clone>(items: &[T], seed: u64, epoch: usize) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(&mut rng::rng_for(seed, stream::EPOCH + epoch as u64));
    v
}

/// Runs `epochs` epochs under the plateau schedule. `step` gets the epoch
/// index and current learning rate and returns `(loss, ae, prop)`.
pub(crate) fn run_stage<F>(name: &str, window: usize, epochs: usize, cfg: &TrainConfig, mut step: F) -> Result<StageTrace>
where
    F: FnMut(usize, f64) -> Result<(f64, Option<f64>, Option<f64>)>,
{
    let mut sched = cfg.schedule.clone();
    sched.reset();
    let mut lr = cfg.lr;
    let mut records = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let (loss, ae, prop) = step(epoch, lr)?;
        if !loss.is_finite() {
            return Err(WeldError::numerical(
                format!("{name} (window {window})"),
                format!("loss became {loss} at epoch {epoch}; last finite trace entry: {:?}", records.last()),
            ));
        }
        debug!("window {window} {name} epoch {epoch}: loss {loss:.6e} lr {lr:.2e}");
        records.push(EpochRecord { loss, ae, prop, lr });
        lr = sched.update(lr, loss)?;
    }
    if let Some(last) = records.last() {
        info!("window {window} {name}: {epochs} epochs, final loss {:.6e}", last.loss);
    }
    Ok(StageTrace {
        stage: name.to_string(),
        window,
        epochs: records,
    })
}

/// Training data of one window: the training trajectories restricted to
/// the closed index range `[k0, k1]`.
pub struct WindowData<'a> {
    pub ds: &'a TrajectoryDataset,
    pub train: &'a [usize],
    pub k0: usize,
    pub k1: usize,
    pub delta_t: f64,
}

impl WindowData<'_> {
    pub fn steps(&self) -> usize {
        self.k1 - self.k0
    }

    fn snapshot_items(&self) -> Vec<(usize, usize)> {
        self.train.iter().flat_map(|&n| (self.k0..=self.k1).map(move |k| (n, k))).collect()
    }

    /// Codes of every training trajectory at every window index: entry `s`
    /// holds the codes at `k0 + s`, one row per trajectory.
    pub fn codes(&self, coder: &Coder) -> Result<Vec<Matrix>> {
        (self.k0..=self.k1)
            .map(|k| {
                let items: Vec<_> = self.train.iter().map(|&n| (n, k)).collect();
                coder.encode(&gather(self.ds, &items))
            })
            .collect()
    }
}

/// Loss terms of the joint objective on one batch, with parameter updates.
struct JointState {
    encoder: MlpNet,
    decoder: MlpNet,
    propagator: ResidualNet,
    opt_e: AdamW,
    opt_d: AdamW,
    opt_p: AdamW,
}

/// One epoch of `L_ae + lambda L_prop`. With `lambda == 0` the propagator is
/// untouched and this is plain autoencoder training.
fn joint_epoch(st: &mut JointState, data: &WindowData<'_>, items: &[(usize, usize)], batch: usize, lambda: f64) -> Result<(f64, f64, f64)> {
    let d = st.encoder.output_dim();
    let (mut ae_sum, mut ae_n, mut p_sum, mut p_n) = (0.0, 0usize, 0.0, 0usize);
    for chunk in items.chunks(batch) {
        let x = gather(data.ds, chunk);
        let (z, ce) = st.encoder.forward(&x)?;
        let (xr, cd) = st.decoder.forward(&z)?;
        let (l_ae, g_xr) = mse_loss(&xr, &x)?;
        let (gd, mut dz) = st.decoder.backward(&cd, &g_xr)?;
        ae_sum += l_ae * chunk.len() as f64;
        ae_n += chunk.len();

        let prop_rows: Vec<usize> = (0..chunk.len()).filter(|&r| chunk[r].1 < data.k1).collect();
        let mut extra_enc: Option<MlpGrads> = None;
        if lambda > 0.0 && !prop_rows.is_empty() {
            let next: Vec<_> = prop_rows.iter().map(|&r| (chunk[r].0, chunk[r].1 + 1)).collect();
            let times: Vec<f64> = prop_rows.iter().map(|&r| chunk[r].1 as f64 * data.delta_t).collect();
            let zp = z.select_rows(&prop_rows);
            let (zn, cen) = st.encoder.forward(&gather(data.ds, &next))?;
            let (out, cp) = st.propagator.forward(&zp.with_column(&times))?;
            let (l_p, mut g) = mse_loss(&out.take_cols(d), &zn)?;
            p_sum += l_p * prop_rows.len() as f64;
            p_n += prop_rows.len();
            g.scale(lambda);
            let (gp, din) = st.propagator.backward(&cp, &pad_time(&g))?;
            for (j, &r) in prop_rows.iter().enumerate() {
                for c in 0..d {
                    let v = dz.get(r, c) + din.get(j, c);
                    dz.set(r, c, v);
                }
            }
            g.scale(-1.0);
            extra_enc = Some(st.encoder.backward_params(&cen, &g)?);
            st.opt_p.step(&mut st.propagator, &gp)?;
        }
        let mut ge = st.encoder.backward_params(&ce, &dz)?;
        if let Some(extra) = extra_enc {
            ge.accumulate(&extra);
        }
        st.opt_e.step(&mut st.encoder, &ge)?;
        st.opt_d.step(&mut st.decoder, &gd)?;
    }
    let ae = ae_sum / ae_n.max(1) as f64;
    let prop = if p_n > 0 { p_sum / p_n as f64 } else { 0.0 };
    Ok((ae + lambda * prop, ae, prop))
}

/// Accumulation loss over a batch of trajectories: mean over rollout
/// lengths `s = 1..=T` of the squared code error after `s` steps from the
/// window start.
pub fn accumulation_loss(
    prop: &ResidualNet,
    codes: &[Matrix],
    rows: &[usize],
    k0: usize,
    delta_t: f64,
    want_grad: bool,
) -> Result<(f64, Option<MlpGrads>)> {
    let steps = codes.len() - 1;
    let d = codes[0].cols();
    let mut z = codes[0].select_rows(rows);
    let mut caches = Vec::with_capacity(if want_grad { steps } else { 0 });
    let mut grads = Vec::with_capacity(if want_grad { steps } else { 0 });
    let mut loss = 0.0;
    for s in 1..=steps {
        let t = (k0 + s - 1) as f64 * delta_t;
        let target = codes[s].select_rows(rows);
        if want_grad {
            let (out, c) = prop.forward(&with_time(&z, t))?;
            z = out.take_cols(d);
            let (l, mut g) = mse_loss(&z, &target)?;
            g.scale(1.0 / steps as f64);
            loss += l;
            caches.push(c);
            grads.push(g);
        } else {
            z = prop.predict(&with_time(&z, t))?.take_cols(d);
            loss += crate::neural::mse_value(&z, &target)?;
        }
    }
    loss /= steps as f64;
    if !want_grad {
        return Ok((loss, None));
    }
    let mut total = MlpGrads::zeros_like(prop.inner());
    let mut g = Matrix::zeros(rows.len(), d);
    for s in (0..steps).rev() {
        g.add_assign(&grads[s])?;
        let (gp, din) = prop.backward(&caches[s], &pad_time(&g))?;
        total.accumulate(&gp);
        g = din.take_cols(d);
    }
    Ok((loss, Some(total)))
}

/// One-step (displacement) loss on code pairs `(row, s) -> (row, s + 1)`.
pub fn displacement_loss(
    prop: &ResidualNet,
    codes: &[Matrix],
    pairs: &[(usize, usize)],
    k0: usize,
    delta_t: f64,
    want_grad: bool,
) -> Result<(f64, Option<MlpGrads>)> {
    let d = codes[0].cols();
    let mut z = Matrix::zeros(pairs.len(), d);
    let mut target = Matrix::zeros(pairs.len(), d);
    let mut times = Vec::with_capacity(pairs.len());
    for (i, &(r, s)) in pairs.iter().enumerate() {
        z.row_mut(i).copy_from_slice(codes[s].row(r));
        target.row_mut(i).copy_from_slice(codes[s + 1].row(r));
        times.push((k0 + s) as f64 * delta_t);
    }
    let inp = z.with_column(&times);
    if !want_grad {
        let out = prop.predict(&inp)?.take_cols(d);
        return Ok((crate::neural::mse_value(&out, &target)?, None));
    }
    let (out, c) = prop.forward(&inp)?;
    let (l, g) = mse_loss(&out.take_cols(d), &target)?;
    let (gp, _) = prop.backward(&c, &pad_time(&g))?;
    Ok((l, Some(gp)))
}

/// Trains a propagator on frozen codes with either loss.
fn propagator_stage(
    name: &str,
    window: usize,
    prop: &mut ResidualNet,
    codes: &[Matrix],
    k0: usize,
    delta_t: f64,
    accumulate: bool,
    epochs: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<StageTrace> {
    let n = codes[0].rows();
    let steps = codes.len() - 1;
    let rows: Vec<usize> = (0..n).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|r| (0..steps).map(move |s| (r, s))).collect();
    let mut opt = AdamW::new(cfg.lr);
    run_stage(name, window, epochs, cfg, |epoch, lr| {
        opt.lr = lr;
        let (mut sum, mut count) = (0.0, 0usize);
        if accumulate {
            for chunk in shuffled(&rows, seed, epoch).chunks(cfg.batch_size) {
                let (l, g) = accumulation_loss(prop, codes, chunk, k0, delta_t, true)?;
                opt.step(prop, &g.unwrap())?;
                sum += l * chunk.len() as f64;
                count += chunk.len();
            }
        } else {
            for chunk in shuffled(&pairs, seed, epoch).chunks(cfg.batch_size) {
                let (l, g) = displacement_loss(prop, codes, chunk, k0, delta_t, true)?;
                opt.step(prop, &g.unwrap())?;
                sum += l * chunk.len() as f64;
                count += chunk.len();
            }
        }
        let loss = sum / count.max(1) as f64;
        Ok((loss, None, Some(loss)))
    })
}

/// Stages 2 and 3 for window `i`. Depends only on the dataset, the window
/// range and seeds derived from `(cfg.seed, i)`, so windows can be trained
/// in any order or concurrently with identical results.
pub fn train_window(
    data: &WindowData<'_>,
    index: usize,
    coder_kind: CoderKind,
    latent_dim: usize,
    cfg: &TrainConfig,
) -> Result<(WindowModel, Vec<StageTrace>)> {
    let wseed = derive_seed(cfg.seed, stream::WINDOW + index as u64);
    let dim = data.ds.dim();
    let a = &cfg.arch;
    let propagator = ResidualNet::init(
        latent_dim + 1,
        a.propagator_width,
        a.propagator_depth,
        derive_seed(wseed, stream::INIT + 2),
    )?;
    let mut traces = Vec::new();

    let (coder, mut propagator, joint_done) = match coder_kind {
        CoderKind::Neural => {
            let encoder = MlpNet::init(
                MlpSpec::uniform(dim, a.coder_width, a.coder_depth, latent_dim),
                derive_seed(wseed, stream::INIT),
            )?;
            let decoder = MlpNet::init(
                MlpSpec::uniform(latent_dim, a.coder_width, a.coder_depth, dim),
                derive_seed(wseed, stream::INIT + 1),
            )?;
            let mut st = JointState {
                encoder,
                decoder,
                propagator,
                opt_e: AdamW::new(cfg.lr),
                opt_d: AdamW::new(cfg.lr),
                opt_p: AdamW::new(cfg.lr),
            };
            let joint = cfg.variant.joint();
            let lambda = if joint { cfg.lambda } else { 0.0 };
            let items = data.snapshot_items();
            let stage_seed = derive_seed(wseed, 1);
            let name = if joint { "joint" } else { "autoencoder" };
            traces.push(run_stage(name, index, cfg.epochs_joint, cfg, |epoch, lr| {
                st.opt_e.lr = lr;
                st.opt_d.lr = lr;
                st.opt_p.lr = lr;
                let order = shuffled(&items, stage_seed, epoch);
                let (loss, ae, prop) = joint_epoch(&mut st, data, &order, cfg.batch_size, lambda)?;
                Ok((loss, Some(ae), if lambda > 0.0 { Some(prop) } else { None }))
            })?);
            (
                Coder::Neural {
                    encoder: st.encoder,
                    decoder: st.decoder,
                },
                st.propagator,
                joint,
            )
        }
        CoderKind::Pca => {
            let x = gather(data.ds, &data.snapshot_items());
            (Coder::Pca(pca_fit(&x, latent_dim)?), propagator, false)
        }
    };

    let codes = data.codes(&coder)?;
    let accumulate = cfg.variant.accumulate();
    let finetune_seed = derive_seed(wseed, 2);
    if joint_done {
        traces.push(propagator_stage(
            "finetune",
            index,
            &mut propagator,
            &codes,
            data.k0,
            data.delta_t,
            accumulate,
            cfg.epochs_finetune,
            cfg,
            finetune_seed,
        )?);
    } else if coder_kind == CoderKind::Pca && cfg.variant.joint() {
        // The linear coder is fixed, so the joint stage reduces to one-step
        // propagator training before the finetune stage.
        traces.push(propagator_stage(
            "propagator",
            index,
            &mut propagator,
            &codes,
            data.k0,
            data.delta_t,
            false,
            cfg.epochs_joint,
            cfg,
            derive_seed(wseed, 1),
        )?);
        traces.push(propagator_stage(
            "finetune",
            index,
            &mut propagator,
            &codes,
            data.k0,
            data.delta_t,
            accumulate,
            cfg.epochs_finetune,
            cfg,
            finetune_seed,
        )?);
    } else {
        traces.push(propagator_stage(
            "propagator",
            index,
            &mut propagator,
            &codes,
            data.k0,
            data.delta_t,
            accumulate,
            cfg.epochs_joint + cfg.epochs_finetune,
            cfg,
            finetune_seed,
        )?);
    }

    Ok((
        WindowModel {
            index,
            k_start: data.k0,
            k_end: data.k1,
            delta_t: data.delta_t,
            coder,
            propagator,
        },
        traces,
    ))
}

/// Rolls window `w`'s propagator from its first index to its last.
pub fn rollout_window(w: &WindowModel, z0: &Matrix) -> Result<Matrix> {
    let mut z = z0.clone();
    for k in w.k_start..w.k_end {
        z = w.propagate_batch(&z, k)?;
    }
    Ok(z)
}

/// Transcoder between windows `i` and `i + 1`: maps the code rolled out to
/// the end of window `i` onto window `i + 1`'s encoding at the boundary.
pub fn train_transcoder(
    ds: &TrajectoryDataset,
    train: &[usize],
    from: &WindowModel,
    to: &WindowModel,
    cfg: &TrainConfig,
) -> Result<(ResidualNet, StageTrace)> {
    let i = from.index;
    let start: Vec<_> = train.iter().map(|&n| (n, from.k_start)).collect();
    let end: Vec<_> = train.iter().map(|&n| (n, from.k_end)).collect();
    let input = rollout_window(from, &from.coder.encode(&gather(ds, &start))?)?;
    let target = to.coder.encode(&gather(ds, &end))?;
    let d = input.cols();
    let t = from.k_end as f64 * from.delta_t;
    let tseed = derive_seed(cfg.seed, stream::TRANSCODER + i as u64);
    let a = &cfg.arch;
    let mut net = ResidualNet::init(d + 1, a.propagator_width, a.propagator_depth, derive_seed(tseed, stream::INIT))?;
    let mut opt = AdamW::new(cfg.lr);
    let rows: Vec<usize> = (0..train.len()).collect();
    let trace = run_stage("transcoder", i, cfg.epochs_transcoder, cfg, |epoch, lr| {
        opt.lr = lr;
        let (mut sum, mut count) = (0.0, 0usize);
        for chunk in shuffled(&rows, tseed, epoch).chunks(cfg.batch_size) {
            let zin = with_time(&input.select_rows(chunk), t);
            let (out, c) = net.forward(&zin)?;
            let (l, g) = mse_loss(&out.take_cols(d), &target.select_rows(chunk))?;
            let (gn, _) = net.backward(&c, &pad_time(&g))?;
            opt.step(&mut net, &gn)?;
            sum += l * chunk.len() as f64;
            count += chunk.len();
        }
        let loss = sum / count.max(1) as f64;
        Ok((loss, None, None))
    })?;
    Ok((net, trace))
}

/// Transcoder loss (mean squared code error) of `net` on the training pairs.
pub fn transcoder_loss(ds: &TrajectoryDataset, train: &[usize], from: &WindowModel, to: &WindowModel, net: &ResidualNet) -> Result<f64> {
    let start: Vec<_> = train.iter().map(|&n| (n, from.k_start)).collect();
    let end: Vec<_> = train.iter().map(|&n| (n, from.k_end)).collect();
    let input = rollout_window(from, &from.coder.encode(&gather(ds, &start))?)?;
    let target = to.coder.encode(&gather(ds, &end))?;
    let d = input.cols();
    let out = net.predict(&with_time(&input, from.k_end as f64 * from.delta_t))?.take_cols(d);
    crate::neural::mse_value(&out, &target)
}

/// Options that affect scheduling but never results.
#[derive(Clone, Copy, Debug, Default)]
pub struct Parallelism {
    pub parallel_windows: bool,
    /// Upper bound on worker threads; 0 means the number of cores.
    pub max_threads: usize,
}

/// Full pipeline: split, per-window stages 2-3, then transcoders.
pub fn train_weldnet(
    ds: &TrajectoryDataset,
    coder_kind: CoderKind,
    n_windows: usize,
    latent_dim: usize,
    cfg: &TrainConfig,
    par: Parallelism,
) -> Result<WeldModel> {
    cfg.validate()?;
    if latent_dim == 0 {
        return Err(WeldError::invalid("latent dimension must be at least 1"));
    }
    let layout: WindowLayout = split_windows(ds.n_steps(), n_windows)?;
    let split = ds.split(cfg.split_seed, cfg.train_fraction);
    if split.train.is_empty() {
        return Err(WeldError::invalid("training split is empty"));
    }
    let delta_t = ds.time.dt();
    let train = &split.train;
    let job = |i: usize| {
        let data = WindowData {
            ds,
            train,
            k0: layout.start(i),
            k1: layout.end(i),
            delta_t,
        };
        train_window(&data, i, coder_kind, latent_dim, cfg)
    };

    let results: Vec<Result<(WindowModel, Vec<StageTrace>)>> = if par.parallel_windows && n_windows > 1 {
        let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        let cap = if par.max_threads == 0 { cores } else { par.max_threads.min(cores) };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n_windows.min(cap).max(1))
            .build()
            .map_err(|e| WeldError::invalid(format!("thread pool: {e}")))?;
        pool.install(|| (0..n_windows).into_par_iter().map(job).collect())
    } else {
        (0..n_windows).map(job).collect()
    };

    let mut windows = Vec::with_capacity(n_windows);
    let mut traces = Vec::new();
    for r in results {
        let (w, t) = r?;
        windows.push(w);
        traces.extend(t);
    }
    let mut transcoders = Vec::with_capacity(n_windows.saturating_sub(1));
    for i in 0..n_windows.saturating_sub(1) {
        let (net, t) = train_transcoder(ds, train, &windows[i], &windows[i + 1], cfg)?;
        transcoders.push(net);
        traces.push(t);
    }

    Ok(WeldModel {
        layout,
        windows,
        transcoders,
        latent_dim,
        ambient_dim: ds.dim(),
        delta_t,
        config: cfg.clone(),
        split,
        traces,
        family: ds.family.clone(),
    })
}
