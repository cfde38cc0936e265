use std::fs;
use std::path::Path;

use metaweight::bench::{
    measure_latency, measure_with_overhead, pareto_csv, pareto_points, run_ablation, run_synthetic_ablation,
    AblationResult, ParetoPoint,
};
use metaweight::dataio::{
    column_csv, format_float, load_bundle, read_label_file, to_canonical_json, write_bundle, write_text, EvalReport,
    ModelAccuracy, TraceBundle, TrainingRecord, TrajectoryPoint,
};
use metaweight::inference::{ensemble_predict, predict_single, uniform_weights};
use metaweight::metrics::{accuracy, confusion, report};
use metaweight::synth::{build_bundle, stratified_split};
use metaweight::weighting::run_training;
use metaweight::{Error, Result, WeightingConfig};
use serde::Serialize;
use serde_json::json;

use crate::args::{AblateArgs, BenchArgs, EvalArgs, Mode, SimulateArgs, SplitArgs, TrainArgs, WeightingArgs};
use crate::config::RunConfig;

const DEFAULT_FRACTIONS: [f64; 3] = [0.8, 0.1, 0.1];
const DEFAULT_SEED: u64 = 0;
const DEFAULT_NUM_SEEDS: usize = 10;
const DEFAULT_WARMUP: usize = 3;
const DEFAULT_REPS: usize = 20;

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.common)?;
    let experiment = cfg.experiment()?;
    let bundle = build_bundle(&experiment.world, &experiment.models, args.epoch_preds)?;
    write_bundle(&bundle, &args.out)?;
    println!(
        "wrote {} models x {} epochs to {}",
        bundle.models().len(),
        bundle.manifest().epochs,
        args.out.display()
    );
    Ok(())
}

pub fn split(args: &SplitArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.common)?;
    let labels = read_label_file(&args.labels, args.num_classes)?;
    let fractions = match &args.fractions {
        Some(f) => <[f64; 3]>::try_from(f.as_slice())
            .map_err(|_| Error::BadFractions(format!("expected 3 fractions, got {}", f.len())))?,
        None => cfg.fractions.unwrap_or(DEFAULT_FRACTIONS),
    };
    let idx = stratified_split(&labels, fractions, cfg.seed.unwrap_or(DEFAULT_SEED))?;
    for (name, part) in [("train", &idx.train), ("val", &idx.val), ("test", &idx.test)] {
        write_text(&args.out.join(format!("{name}_idx.csv")), &column_csv("index", part))?;
    }
    println!(
        "split {} samples into {}/{}/{}",
        labels.len(),
        idx.train.len(),
        idx.val.len(),
        idx.test.len()
    );
    Ok(())
}

/// The bundle restricted to the configured models, if any.
fn open_bundle(path: &Path, cfg: &RunConfig) -> Result<TraceBundle> {
    let bundle = load_bundle(path)?;
    match cfg.model_names()? {
        Some(names) => bundle.select_models(&names),
        None => Ok(bundle),
    }
}

fn read_record(path: &Path) -> Result<TrainingRecord> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Weights and how they were obtained, aligned with the bundle's models.
struct Resolved {
    bundle: TraceBundle,
    mode: Mode,
    config: WeightingConfig,
    trajectory: Vec<TrajectoryPoint>,
    weights: Vec<f64>,
}

impl Resolved {
    fn effective_config(&self, cfg: &RunConfig) -> serde_json::Value {
        json!({
            "weighting": self.config,
            "mode": self.mode,
            "models": self.bundle.model_names(),
            "seed": cfg.seed,
        })
    }
}

/// Static mode uses 1/n weights. Dynamic mode takes the final weights of a
/// recorded run when `weights` is given, reordering the bundle's models to
/// the record's order, and otherwise runs the weighting on the bundle.
fn resolve(bundle_path: &Path, weights: Option<&Path>, mode: Mode, cfg: &RunConfig) -> Result<Resolved> {
    let config = cfg.weighting()?;
    let bundle = open_bundle(bundle_path, cfg)?;
    if mode == Mode::Static {
        let n = bundle.models().len();
        if n < 2 {
            return Err(Error::TooFewModels(n));
        }
        return Ok(Resolved {
            bundle,
            mode,
            config,
            trajectory: Vec::new(),
            weights: uniform_weights(n),
        });
    }
    match weights {
        Some(path) => {
            let record = read_record(path)?;
            let mut names = bundle.model_names();
            let mut recorded = record.models.clone();
            names.sort();
            recorded.sort();
            if cfg.models.is_some() && names != recorded {
                return Err(Error::InvalidWeights(format!(
                    "{} was trained on models {}, selection is {}",
                    path.display(),
                    record.models.join(","),
                    bundle.model_names().join(",")
                )));
            }
            if record.final_weights.len() != record.models.len() {
                return Err(Error::LengthMismatch(record.final_weights.len(), record.models.len()));
            }
            Ok(Resolved {
                bundle: bundle.select_models(&record.models)?,
                mode,
                config: record.config,
                trajectory: record.trajectory,
                weights: record.final_weights,
            })
        }
        None => {
            let state = run_training(&bundle.traces(), &bundle.profiles(), &config)?;
            Ok(Resolved {
                mode,
                config,
                trajectory: TrajectoryPoint::from_state(&state),
                weights: state.weights,
                bundle,
            })
        }
    }
}

fn load_config(common: &crate::args::CommonArgs, flags: &WeightingArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(common)?;
    cfg.apply(flags);
    Ok(cfg)
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let cfg = load_config(&args.common, &args.weighting)?;
    let config = cfg.weighting()?;
    let bundle = open_bundle(&args.bundle, &cfg)?;
    let state = run_training(&bundle.traces(), &bundle.profiles(), &config)?;
    let record = TrainingRecord::new(config, bundle.model_names(), &state);
    write_text(&args.out, &to_canonical_json(&record)?)?;
    let weights: Vec<String> = state.weights.iter().map(|&w| format_float(w)).collect();
    println!("final weights {}", weights.join(","));
    Ok(())
}

fn mode_of(args: &EvalArgs, cfg: &RunConfig) -> Mode {
    args.mode.or(cfg.mode).unwrap_or(Mode::Dynamic)
}

pub fn infer(args: &EvalArgs) -> Result<()> {
    let cfg = load_config(&args.common, &args.weighting)?;
    let resolved = resolve(&args.bundle, args.weights.as_deref(), mode_of(args, &cfg), &cfg)?;
    let prediction = ensemble_predict(&resolved.bundle.test_preds(), &resolved.weights)?;
    write_text(&args.out, &column_csv("label", prediction.labels.as_slice()))?;
    println!("predicted {} samples", prediction.labels.len());
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let cfg = load_config(&args.common, &args.weighting)?;
    let resolved = resolve(&args.bundle, args.weights.as_deref(), mode_of(args, &cfg), &cfg)?;
    let bundle = &resolved.bundle;
    let truth = bundle.test_labels();
    let prediction = ensemble_predict(&bundle.test_preds(), &resolved.weights)?;
    let cm = confusion(truth, &prediction.labels, bundle.num_classes())?;
    let classification = report(&cm)?;
    let standalone = bundle
        .models()
        .iter()
        .map(|m| {
            Ok(ModelAccuracy {
                name: m.profile.name.clone(),
                accuracy: accuracy(truth, &predict_single(&m.test_preds))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    println!("{} accuracy {}", mode_name(resolved.mode), format_float(classification.accuracy));
    let report = EvalReport {
        config: resolved.effective_config(&cfg),
        mode: mode_name(resolved.mode).into(),
        models: bundle.model_names(),
        trajectory: resolved.trajectory,
        final_weights: resolved.weights,
        classification,
        confusion: cm,
        standalone,
        latency: None,
        ablation: None,
        pareto: None,
    };
    write_text(&args.out, &to_canonical_json(&report)?)
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Dynamic => "dynamic",
        Mode::Static => "static",
    }
}

fn ablation_csv(results: &[AblationResult]) -> String {
    let mut out = String::from("name,kind,models,mean_accuracy,p_value,accuracies\n");
    for r in results {
        let kind = serde_json::to_value(r.kind)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        let accs: Vec<String> = r.accuracies.iter().map(|&a| format_float(a)).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.name,
            kind,
            r.models.join(";"),
            format_float(r.mean_accuracy),
            r.p_value.map(format_float).unwrap_or_default(),
            accs.join(";")
        ));
    }
    out
}

pub fn ablate(args: &AblateArgs) -> Result<()> {
    let cfg = load_config(&args.common, &args.weighting)?;
    let config = cfg.weighting()?;
    let first = cfg.seed.unwrap_or(DEFAULT_SEED);
    let num_seeds = args.num_seeds.or(cfg.num_seeds).unwrap_or(DEFAULT_NUM_SEEDS);
    let seeds: Vec<u64> = (0..num_seeds as u64).map(|s| first + s).collect();
    let (results, models) = match &args.bundle {
        Some(path) => {
            let bundle = open_bundle(path, &cfg)?;
            (run_ablation(&bundle, &config, &seeds)?, bundle.model_names())
        }
        None => {
            let experiment = cfg.experiment()?;
            let names = experiment.models.iter().map(|m| m.name.clone()).collect();
            (run_synthetic_ablation(&experiment, &config, &seeds)?, names)
        }
    };
    write_text(&args.out.join("ablation.csv"), &ablation_csv(&results))?;
    let report = json!({
        "config": {
            "weighting": config,
            "models": models,
            "seeds": seeds,
            "source": if args.bundle.is_some() { "bootstrap" } else { "synthetic" },
        },
        "ablation": results,
    });
    write_text(&args.out.join("report.json"), &to_canonical_json(&report)?)?;
    for r in &results {
        println!("{:<24} {}", r.name, format_float(r.mean_accuracy));
    }
    Ok(())
}

#[derive(Serialize)]
struct ModelLatency {
    name: String,
    latency_ms: f64,
    /// `profile` for a recorded forward time, `measured` for the timed
    /// per-sample cost of the model's argmax pass.
    source: &'static str,
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let mut cfg = load_config(&args.common, &args.weighting)?;
    cfg.mode = Some(Mode::Dynamic);
    let resolved = resolve(&args.bundle, args.weights.as_deref(), Mode::Dynamic, &cfg)?;
    let warmup = args.warmup.or(cfg.warmup).unwrap_or(DEFAULT_WARMUP);
    let reps = args.reps.or(cfg.reps).unwrap_or(DEFAULT_REPS);
    let bundle = &resolved.bundle;
    let preds = bundle.test_preds();
    let samples = bundle.test_labels().len().max(1) as f64;

    let overhead = measure_with_overhead(
        || {
            for p in &preds {
                std::hint::black_box(predict_single(p));
            }
        },
        || {
            std::hint::black_box(ensemble_predict(&preds, &resolved.weights).ok());
        },
        warmup,
        reps,
    )?;

    let mut latencies = Vec::with_capacity(preds.len());
    for m in bundle.models() {
        let entry = match m.profile.latency_ms {
            Some(ms) => ModelLatency {
                name: m.profile.name.clone(),
                latency_ms: ms,
                source: "profile",
            },
            None => {
                let stats = measure_latency(
                    || {
                        std::hint::black_box(predict_single(&m.test_preds));
                    },
                    warmup,
                    reps,
                )?;
                ModelLatency {
                    name: m.profile.name.clone(),
                    latency_ms: stats.p50_ms / samples,
                    source: "measured",
                }
            }
        };
        latencies.push(entry);
    }

    let truth = bundle.test_labels();
    let mut points = Vec::new();
    for (m, lat) in bundle.models().iter().zip(&latencies) {
        points.push(ParetoPoint::new(
            m.profile.name.clone(),
            accuracy(truth, &predict_single(&m.test_preds))?,
            lat.latency_ms,
        ));
    }
    // An ensemble runs every member once per input.
    let ensemble_latency: f64 = latencies.iter().map(|l| l.latency_ms).sum();
    let dynamic = ensemble_predict(&preds, &resolved.weights)?;
    points.push(ParetoPoint::new("ensemble-dynamic", accuracy(truth, &dynamic.labels)?, ensemble_latency));
    let uniform = ensemble_predict(&preds, &uniform_weights(preds.len()))?;
    points.push(ParetoPoint::new("ensemble-static", accuracy(truth, &uniform.labels)?, ensemble_latency));

    write_text(&args.out.join("pareto.csv"), &pareto_csv(&points))?;
    let frontier: Vec<String> = pareto_points(&points).into_iter().map(|p| p.name).collect();
    let doc = json!({
        "config": {
            "weighting": resolved.config,
            "models": bundle.model_names(),
            "warmup": warmup,
            "reps": reps,
            "test_samples": truth.len(),
        },
        "ensemble": overhead,
        "models": latencies,
        "frontier": frontier,
    });
    write_text(&args.out.join("latency.json"), &to_canonical_json(&doc)?)?;
    println!(
        "ensemble p50 {} ms over {} samples, overhead fraction {}",
        format_float(overhead.total.p50_ms),
        truth.len(),
        overhead.total.overhead_fraction.map(format_float).unwrap_or_default()
    );
    Ok(())
}
