//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --test acceptance`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use endofuse_core::dataset::FeatureTable;
use endofuse_core::metrics::{auc, roc_points, weighted_metrics, ConfusionMatrix};
use endofuse_core::model::{
    dense_block_forward, model_forward, transition_forward, Forward, ModelConfig, Parameters,
};
use endofuse_core::radiomics::{
    cooccurrence_counts, glcm_features, glrlm_features, glszm_features, make_central_mask,
    make_peripheral_mask, quantize, run_length_matrix, zones, Direction, RoiMask,
};
use endofuse_core::raster::GrayImage;
use endofuse_core::tensor::{BnRunning, Mode, Tape, Tensor, Var};
use endofuse_core::testing::adam::ScalarAdam;
use endofuse_core::testing::data::separable;
use endofuse_core::testing::gradcheck::{max_relative_error, numeric_gradient};
use endofuse_core::testing::ranking::mann_whitney_auc;
use endofuse_core::testing::texture;
use endofuse_core::training::{
    adam_step, fit, normalize_dataset, AdamState, Checkpoint, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

const GRAD_TOL: f64 = 1e-3;
const GRAD_BUDGET: Duration = Duration::from_secs(60);
const TEXTURE_TOL: f64 = 1e-12;
const TEXTURE_BUDGET: Duration = Duration::from_secs(10);
const ADAM_TOL: f64 = 1e-12;
const IDENTITY_TOL: f64 = 1e-12;
const AUC_TOL: f64 = 1e-9;
const MIN_TRAIN_ACC: f64 = 0.90;
const MIN_VAL_ACC: f64 = 0.70;
const SMOKE_BUDGET: Duration = Duration::from_secs(600);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

/// Worst relative error over every input of `dot(build(inputs), w)`.
fn op_gradcheck(inputs: Vec<Tensor>, seed: u64, build: impl Fn(&mut Tape, &[Var]) -> Var) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = build(&mut tape, &vars);
    let weights = rand_tensor(tape.shape(out), &mut rng);
    let loss = tape.dot(out, &weights).unwrap();
    tape.backward(loss).unwrap();
    let mut worst: f64 = 0.0;
    for (i, input) in inputs.iter().enumerate() {
        let numeric = numeric_gradient(
            |x| {
                let mut t = Tape::new();
                let vs: Vec<Var> = inputs
                    .iter()
                    .enumerate()
                    .map(|(j, orig)| match j == i {
                        true => t.constant(Tensor::new(orig.shape().to_vec(), x.to_vec()).unwrap()),
                        false => t.constant(orig.clone()),
                    })
                    .collect();
                let o = build(&mut t, &vs);
                let l = t.dot(o, &weights).unwrap();
                t.value(l).data()[0]
            },
            input.data(),
            1e-4,
        );
        worst = worst.max(max_relative_error(tape.grad(vars[i]).unwrap(), &numeric));
    }
    worst
}

fn tiny_model() -> ModelConfig {
    ModelConfig {
        d_in: 5,
        d_embed: 4,
        mlp_hidden: 8,
        growth_rate: 4,
        blocks: 2,
        layers_per_block: 2,
        stem_channels: 8,
        proj_dim: 4,
        num_classes: 3,
        input_side: 16,
        ..ModelConfig::default()
    }
}

/// Worst relative error over every trainable scalar of the tiny model's loss.
fn model_gradcheck() -> (f64, usize) {
    let params = Parameters::init(&tiny_model(), 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let img = rand_tensor(&[3, 3, 16, 16], &mut rng);
    let feat = rand_tensor(&[3, 5], &mut rng);
    let labels = [0usize, 2, 1];
    let loss_of = |p: &Parameters| {
        let mut tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut f = Forward::new(&mut tape, p, Mode::Train, &mut rng).with_param_grads(false);
        let (i, x) = (f.tape.constant(img.clone()), f.tape.constant(feat.clone()));
        let logits = model_forward(&mut f, i, x).unwrap();
        let l = f.tape.softmax_cross_entropy(logits, &labels).unwrap();
        tape.value(l).data()[0]
    };

    let mut tape = Tape::new();
    let mut drop_rng = ChaCha8Rng::seed_from_u64(77);
    let mut f = Forward::new(&mut tape, &params, Mode::Train, &mut drop_rng);
    let (i, x) = (f.tape.constant(img.clone()), f.tape.constant(feat.clone()));
    let logits = model_forward(&mut f, i, x).unwrap();
    let loss = f.tape.softmax_cross_entropy(logits, &labels).unwrap();
    let state = f.finish();
    tape.backward(loss).unwrap();

    let mut worst: f64 = 0.0;
    let mut scalars = 0;
    for &(idx, var) in &state.bound {
        let entry = &params.entries()[idx];
        if !entry.trainable {
            continue;
        }
        let numeric = numeric_gradient(
            |v| {
                let mut q = params.clone();
                q.entries_mut()[idx].value.data_mut().copy_from_slice(v);
                loss_of(&q)
            },
            entry.value.data(),
            1e-5,
        );
        worst = worst.max(max_relative_error(tape.grad(var).unwrap(), &numeric));
        scalars += entry.value.numel();
    }
    (worst, scalars)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut r = |s: &[usize]| rand_tensor(s, &mut rng);
    let mut errors: Vec<(&str, f64)> = vec![
        (
            "affine",
            op_gradcheck(vec![r(&[4, 3]), r(&[2, 3]), r(&[2])], 1, |t, v| {
                t.affine(v[0], v[1], v[2]).unwrap()
            }),
        ),
        (
            "conv3x3",
            op_gradcheck(
                vec![r(&[2, 3, 5, 4]), r(&[2, 3, 3, 3]), r(&[2])],
                2,
                |t, v| t.conv2d(v[0], v[1], v[2]).unwrap(),
            ),
        ),
        (
            "conv1x1",
            op_gradcheck(vec![r(&[2, 3, 3, 2]), r(&[4, 3]), r(&[4])], 3, |t, v| {
                t.pointwise_conv(v[0], v[1], v[2]).unwrap()
            }),
        ),
        (
            "relu",
            op_gradcheck(vec![r(&[3, 7])], 4, |t, v| t.relu(v[0])),
        ),
        (
            "dropout",
            op_gradcheck(vec![r(&[3, 5])], 5, |t, v| {
                let mut d = ChaCha8Rng::seed_from_u64(99);
                t.dropout(v[0], 0.4, Mode::Train, &mut d).unwrap()
            }),
        ),
        (
            "concat",
            op_gradcheck(vec![r(&[2, 2, 5, 3]), r(&[2, 1, 5, 3])], 6, |t, v| {
                t.concat_channels(&[v[0], v[1]]).unwrap()
            }),
        ),
        (
            "avgpool2x2",
            op_gradcheck(vec![r(&[2, 2, 5, 3])], 7, |t, v| {
                t.avg_pool_2x2(v[0]).unwrap()
            }),
        ),
        (
            "gap",
            op_gradcheck(vec![r(&[2, 3, 4, 3])], 8, |t, v| {
                t.global_avg_pool(v[0]).unwrap()
            }),
        ),
        (
            "softmax_ce",
            op_gradcheck(vec![r(&[4, 3])], 9, |t, v| {
                t.softmax_cross_entropy(v[0], &[2, 0, 1, 2]).unwrap()
            }),
        ),
    ];
    for (name, mode, shape) in [
        ("bn_train_4d", Mode::Train, vec![3, 2, 2, 3]),
        ("bn_train_2d", Mode::Train, vec![4, 3]),
        ("bn_eval", Mode::Eval, vec![3, 2, 2, 2]),
    ] {
        let c = shape[1];
        let running = BnRunning {
            mean: (0..c).map(|i| 0.1 * i as f64).collect(),
            var: (0..c).map(|i| 0.5 + i as f64).collect(),
        };
        let inputs = vec![r(&shape), r(&[c]), r(&[c])];
        errors.push((
            name,
            op_gradcheck(inputs, 10, move |t, v| {
                let mut run = running.clone();
                t.batch_norm(v[0], v[1], v[2], &mut run, mode).unwrap()
            }),
        ));
    }
    let (model_err, scalars) = model_gradcheck();
    errors.push(("tiny model", model_err));
    let elapsed = start.elapsed();
    for (name, e) in &errors {
        ensure!(
            *e < GRAD_TOL,
            "{name}: relative error {e:.3e} >= {GRAD_TOL:e}"
        );
    }
    ensure!(
        elapsed < GRAD_BUDGET,
        "took {elapsed:?}, budget {GRAD_BUDGET:?}"
    );
    let worst = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(format!(
        "{} ops + tiny model ({scalars} parameters), worst relative error {worst:.2e}",
        errors.len() - 1
    ))
}

fn close(got: &[f64], want: &[f64]) -> bool {
    got.len() == want.len()
        && got
            .iter()
            .zip(want)
            .all(|(g, w)| (g - w).abs() <= TEXTURE_TOL * w.abs().max(1.0))
}

fn criterion_2() -> Outcome {
    const OFFSETS: [(isize, isize); 4] = [(0, 1), (-1, 1), (-1, 0), (-1, -1)];
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let regions = 60;
    for case in 0..regions {
        let (w, h) = (rng.gen_range(8..=16), rng.gen_range(8..=16));
        let n_levels = [2, 4, 8, 32][rng.gen_range(0..4)];
        let palette: Vec<u8> = (0..rng.gen_range(2..6)).map(|_| rng.gen()).collect();
        let raw: Vec<u8> = (0..w * h)
            .map(|_| match rng.gen_bool(0.5) {
                true => palette[rng.gen_range(0..palette.len())],
                false => rng.gen(),
            })
            .collect();
        let mut bits: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.75)).collect();
        bits[..16].iter_mut().for_each(|b| *b = true);
        let img = GrayImage::from_u8(w, h, &raw).unwrap();
        let mask = RoiMask::from_bits(w, h, bits).unwrap();
        let q = quantize(&img, &mask, n_levels).unwrap();
        let levels = q.levels();
        let max_len = w.max(h);
        for (dir, off) in Direction::ALL.iter().zip(OFFSETS) {
            ensure!(
                cooccurrence_counts(&q, *dir) == texture::pair_counts(levels, w, n_levels, off),
                "region {case}: GLCM counts differ along {off:?}"
            );
            let mut runs = vec![0u64; n_levels * max_len];
            for (g, l) in texture::scan_runs(levels, w, h, off) {
                runs[(g as usize - 1) * max_len + l - 1] += 1;
            }
            ensure!(
                run_length_matrix(&q, *dir) == runs,
                "region {case}: GLRLM differs along {off:?}"
            );
        }
        let mut z = zones(&q);
        z.sort_unstable();
        ensure!(
            z == texture::union_find_zones(levels, w, h),
            "region {case}: zones differ"
        );
        if let Some(want) = texture::haralick(levels, w, n_levels, &OFFSETS) {
            let got = glcm_features(&q, &Direction::ALL)
                .map_err(|e| e.to_string())?
                .values();
            ensure!(
                close(&got, &want),
                "region {case}: GLCM features {got:?} vs {want:?}"
            );
        }
        let got = glrlm_features(&q, &Direction::ALL).unwrap().values();
        ensure!(
            close(&got, &texture::galloway(levels, w, h, n_levels, &OFFSETS)),
            "region {case}: GLRLM features"
        );
        let got = glszm_features(&q).unwrap().values();
        ensure!(
            close(&got, &texture::thibault(levels, w, h, n_levels)),
            "region {case}: GLSZM features"
        );
    }
    let elapsed = start.elapsed();
    ensure!(
        elapsed < TEXTURE_BUDGET,
        "took {elapsed:?}, budget {TEXTURE_BUDGET:?}"
    );
    Ok(format!(
        "{regions} random masked regions, matrices exact, features within {TEXTURE_TOL:e}"
    ))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let (w, h) = (rng.gen_range(16..=256), rng.gen_range(16..=256));
        let rf = rng.gen_range(0.2..=0.9);
        let c = make_central_mask(w, h, rf).map_err(|e| format!("{w}x{h} r={rf}: {e}"))?;
        let p = make_peripheral_mask(w, h, rf).map_err(|e| format!("{w}x{h} r={rf}: {e}"))?;
        for (i, (a, b)) in c.bits().iter().zip(p.bits()).enumerate() {
            ensure!(
                a ^ b,
                "{w}x{h} r={rf}: pixel {i} is {}",
                if *a { "in both" } else { "in neither" }
            );
        }
        ensure!(
            c.count() + p.count() == w * h,
            "{w}x{h} r={rf}: counts do not cover the frame"
        );
    }
    Ok("100 random (W, H, radius) triples: disjoint and covering".into())
}

fn criterion_4() -> Outcome {
    let cfg = ModelConfig {
        input_side: 8,
        ..ModelConfig::default()
    };
    ensure!(
        (
            cfg.growth_rate,
            cfg.layers_per_block,
            cfg.compression,
            cfg.stem_channels
        ) == (24, 16, 0.5, 48),
        "defaults are not k=24, 16 layers, theta=0.5, stem 48"
    );
    let params = Parameters::init(&cfg, 1).map_err(|e| e.to_string())?;
    let mut tape = Tape::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = rand_tensor(&[1, 48, 8, 8], &mut rng);
    let mut f = Forward::new(&mut tape, &params, Mode::Eval, &mut rng);
    let v = f.tape.constant(x);
    let b = dense_block_forward(&mut f, 0, v).map_err(|e| e.to_string())?;
    let t = transition_forward(&mut f, 0, b).map_err(|e| e.to_string())?;
    let (bs, ts) = (f.tape.shape(b).to_vec(), f.tape.shape(t).to_vec());
    ensure!(bs == [1, 432, 8, 8], "block 1 output shape {bs:?}");
    ensure!(ts == [1, 216, 4, 4], "transition 1 output shape {ts:?}");
    let layout = cfg.layout().map_err(|e| e.to_string())?;
    ensure!(
        layout.block_outputs[0] == 432 && layout.transition_outputs[0] == 216,
        "layout arithmetic {:?} / {:?}",
        layout.block_outputs,
        layout.transition_outputs
    );
    Ok("block 1 -> 432 channels, transition 1 -> 216 channels".into())
}

fn criterion_5() -> Outcome {
    let model = ModelConfig {
        d_in: 3,
        num_classes: 2,
        ..tiny_model()
    };
    let cfg = TrainConfig::default();
    let mut p = Parameters::init(&model, 2).map_err(|e| e.to_string())?;
    let mut st = AdamState::new(&p);
    let mut oracle: Vec<Vec<(f64, ScalarAdam)>> = p
        .entries()
        .iter()
        .map(|e| {
            e.value
                .data()
                .iter()
                .map(|&w| {
                    (
                        w,
                        ScalarAdam::new(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay),
                    )
                })
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for step in 0..100 {
        let g: Vec<Vec<f64>> = p
            .entries()
            .iter()
            .map(|e| {
                (0..e.value.numel())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let grads: Vec<Option<&[f64]>> = g.iter().map(|g| Some(g.as_slice())).collect();
        adam_step(&mut p, &grads, &mut st, &cfg).map_err(|e| e.to_string())?;
        for (i, e) in p.entries().iter().enumerate() {
            for (j, (w, o)) in oracle[i].iter_mut().enumerate() {
                if e.trainable {
                    *w = o.step(*w, g[i][j]);
                }
                let d = (e.value.data()[j] - *w).abs();
                ensure!(d < ADAM_TOL, "step {step}: {}[{j}] off by {d:e}", e.name);
                worst = worst.max(d);
            }
        }
    }

    let mut q = Parameters::init(&model, 3).map_err(|e| e.to_string())?;
    let before = q.clone();
    let mut st = AdamState::new(&q);
    let no_decay = TrainConfig {
        weight_decay: 0.0,
        ..cfg
    };
    let zeros: Vec<Vec<f64>> = q
        .entries()
        .iter()
        .map(|e| vec![0.0; e.value.numel()])
        .collect();
    let grads: Vec<Option<&[f64]>> = zeros.iter().map(|g| Some(g.as_slice())).collect();
    for _ in 0..10 {
        adam_step(&mut q, &grads, &mut st, &no_decay).map_err(|e| e.to_string())?;
    }
    ensure!(q == before, "zero gradient without decay moved parameters");
    Ok(format!(
        "100 steps, max deviation {worst:.1e}; g=0, wd=0 is the identity"
    ))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut matrices = 0;
    while matrices < 1000 {
        let c = rng.gen_range(2..11);
        let counts: Vec<u64> = (0..c * c).map(|_| rng.gen_range(0..40)).collect();
        if counts.iter().all(|&x| x == 0) {
            continue;
        }
        let m = weighted_metrics(&ConfusionMatrix::from_counts(c, counts).unwrap()).unwrap();
        ensure!(
            (m.sensitivity - m.accuracy).abs() < IDENTITY_TOL,
            "matrix {matrices}: sensitivity {} vs accuracy {}",
            m.sensitivity,
            m.accuracy
        );
        matrices += 1;
    }
    let mut worst: f64 = 0.0;
    for set in 0..300 {
        let n = rng.gen_range(2..=200);
        let grid = rng.gen_range(2..30) as f64;
        let scores: Vec<f64> = (0..n)
            .map(|_| (rng.gen::<f64>() * grid).floor() / grid)
            .collect();
        let mut positive: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        positive[0] = true;
        positive[1] = false;
        let a = auc(&roc_points(&scores, &positive).map_err(|e| e.to_string())?);
        let d = (a - mann_whitney_auc(&scores, &positive)).abs();
        ensure!(
            d < AUC_TOL,
            "score set {set} (n={n}): trapezoid vs Mann-Whitney differ by {d:e}"
        );
        worst = worst.max(d);
    }
    Ok(format!(
        "1000 matrices within {IDENTITY_TOL:e}; 300 score sets, max AUC gap {worst:.1e}"
    ))
}

/// Desk-scale pipeline shared by criteria 7 and 9.
struct Pipeline {
    _dir: tempfile::TempDir,
    root: PathBuf,
    manifest: PathBuf,
    features: PathBuf,
    run: PathBuf,
    train_time: Duration,
    train_ok: bool,
    train_stderr: String,
}

fn pipeline() -> &'static Pipeline {
    static P: OnceLock<Pipeline> = OnceLock::new();
    P.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let manifest = synth(&root.join("data"), 4, 50, 64, 0);
        let features = root.join("features.csv");
        let o = extract(&manifest, &features, 64);
        assert!(o.status.success(), "extract: {}", stderr(&o));
        let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.cfg");
        let run = root.join("run");
        let start = Instant::now();
        let o = endofuse(&[
            &"train",
            &"--manifest",
            &manifest,
            &"--features",
            &features,
            &"--config",
            &config,
            &"--out",
            &run,
        ]);
        let train_time = start.elapsed();
        Pipeline {
            _dir: dir,
            root,
            manifest,
            features,
            run,
            train_time,
            train_ok: o.status.success(),
            train_stderr: stderr(&o),
        }
    })
}

fn log_rows(path: &Path) -> Vec<Vec<f64>> {
    String::from_utf8(read(path))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn criterion_7() -> Outcome {
    let p = pipeline();
    ensure!(p.train_ok, "train exited nonzero: {}", p.train_stderr);
    let rows = log_rows(&p.run.join("train_log.csv"));
    ensure!(
        rows.len() == 20,
        "expected 20 epochs, log has {}",
        rows.len()
    );
    let last = rows.last().unwrap();
    let (train_acc, val_acc) = (last[2], last[4]);
    let t = p.train_time;
    ensure!(
        train_acc >= MIN_TRAIN_ACC,
        "train accuracy {train_acc:.3} < {MIN_TRAIN_ACC}"
    );
    ensure!(
        val_acc >= MIN_VAL_ACC,
        "final validation accuracy {val_acc:.3} < {MIN_VAL_ACC}"
    );
    ensure!(
        t < SMOKE_BUDGET,
        "train acc {train_acc:.3}, val acc {val_acc:.3}, but took {:.0} s on {} core(s), budget {} s",
        t.as_secs_f64(),
        cores(),
        SMOKE_BUDGET.as_secs()
    );
    Ok(format!(
        "train acc {train_acc:.3}, final val acc {val_acc:.3}, {:.0} s on {} core(s)",
        t.as_secs_f64(),
        cores()
    ))
}

fn cores() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("data"), 3, 8, 32, 8);
    let features = dir.path().join("features.csv");
    ensure!(
        extract(&manifest, &features, 32).status.success(),
        "extract failed"
    );
    let cfg = dir.path().join("tiny.cfg");
    std::fs::write(&cfg, TINY_CONFIG).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = train(&manifest, &features, &cfg, out, 42);
        ensure!(o.status.success(), "train failed: {}", stderr(&o));
    }
    ensure!(
        read(&a.join("train_log.csv")) == read(&b.join("train_log.csv")),
        "train_log.csv differs between identical runs"
    );

    let data = separable(3, 5, 12, 6, 12);
    let model = ModelConfig {
        d_in: 0,
        input_side: 12,
        ..tiny_model()
    };
    let train_cfg = TrainConfig {
        batch: 6,
        epochs: 2,
        seed: 13,
        ..TrainConfig::default()
    };
    let ckpt = fit(&model, &train_cfg, &data, None, |_| {})
        .map_err(|e| e.to_string())?
        .final_checkpoint;
    let path = dir.path().join("m.ckpt");
    ckpt.save(&path).map_err(|e| e.to_string())?;
    let loaded = Checkpoint::load(&path).map_err(|e| e.to_string())?;
    let norm = normalize_dataset(&data, &ckpt.norm).map_err(|e| e.to_string())?;
    let batch = norm.batch(&(0..norm.len()).collect::<Vec<_>>());
    let bits = |p: &Parameters| -> Vec<u64> {
        endofuse_core::model::predict_logits(p, &batch.images, &batch.features)
            .unwrap()
            .data()
            .iter()
            .map(|v| v.to_bits())
            .collect()
    };
    ensure!(
        bits(&ckpt.params) == bits(&loaded.params),
        "reloaded checkpoint changes eval logits"
    );

    let table = FeatureTable::read_csv(&features).map_err(|e| e.to_string())?;
    let copy = dir.path().join("copy.csv");
    table.write_csv(&copy).map_err(|e| e.to_string())?;
    let reread = FeatureTable::read_csv(&copy).map_err(|e| e.to_string())?;
    ensure!(reread == table, "feature CSV roundtrip changed values");
    ensure!(
        read(&copy) == read(&features),
        "feature CSV roundtrip changed bytes"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let values: Vec<f64> = (0..400)
        .map(|_| f64::from_bits(rng.gen::<u64>() >> 2) * if rng.gen() { -1.0 } else { 1.0 })
        .filter(|v| v.is_finite())
        .take(300)
        .collect();
    let ids: Vec<String> = (0..values.len() / 3).map(|i| format!("r{i}")).collect();
    let extreme = FeatureTable::new(
        ids.clone(),
        vec!["a".into(), "b".into(), "c".into()],
        values[..ids.len() * 3].to_vec(),
        None,
    )
    .map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    extreme.write_to(&mut buf).unwrap();
    ensure!(
        FeatureTable::read_from(&buf[..]).map_err(|e| e.to_string())? == extreme,
        "random-bit values do not roundtrip"
    );
    Ok("train_log bytes, eval logit bits and feature CSV values all reproduce".into())
}

fn criterion_9() -> Outcome {
    let p = pipeline();
    ensure!(p.train_ok, "train exited nonzero: {}", p.train_stderr);
    let ev = p.root.join("eval");
    let o = eval(
        &p.run.join("final.ckpt"),
        &p.manifest,
        &p.features,
        &ev,
        "val",
    );
    ensure!(o.status.success(), "eval exited nonzero: {}", stderr(&o));
    let figs = p.root.join("figures");
    let o = plot(&p.run.join("train_log.csv"), &ev.join("roc.csv"), &figs);
    ensure!(o.status.success(), "plot exited nonzero: {}", stderr(&o));
    let artifacts = [
        p.features.clone(),
        p.run.join("train_log.csv"),
        p.run.join("final.ckpt"),
        p.run.join("best.ckpt"),
        ev.join("metrics.json"),
        ev.join("roc.csv"),
        figs.join("training_curves.svg"),
        figs.join("roc_curves.svg"),
    ];
    for a in &artifacts {
        let len = std::fs::metadata(a).map(|m| m.len()).unwrap_or(0);
        ensure!(len > 0, "{} missing or empty", a.display());
    }
    let doc: serde_json::Value =
        serde_json::from_slice(&read(&ev.join("metrics.json"))).map_err(|e| e.to_string())?;
    Ok(format!(
        "extract -> train -> eval -> plot, {} artifacts; val accuracy {}",
        artifacts.len(),
        doc["accuracy"]
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("gradient correctness", criterion_1),
        ("texture-matrix oracles", criterion_2),
        ("mask partition", criterion_3),
        ("architecture arithmetic", criterion_4),
        ("optimizer fidelity", criterion_5),
        ("metric identities", criterion_6),
        ("end-to-end smoke", criterion_7),
        ("determinism and persistence", criterion_8),
        ("pipeline reproducibility", criterion_9),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| *f == n.to_string() || name.contains(f.as_str()))
        {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {n}. {name}: {detail} [{secs:.1} s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {n}. {name}: {why} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
