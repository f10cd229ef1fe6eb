use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use faae::data::{load_csv, prepare, write_csv, Cohort, Label, PreparedSplit, N_REGIONS};
use faae::eval::{
    bootstrap_eval, param_sweep, point_metrics, region_effect_sizes, resplit_eval, run_experiment,
    sample_size_sweep, score_with, write_deviations_csv, write_effects_csv, write_param_sweep_csv,
    write_regions_csv, write_size_sweep_csv, EvalSummary, ReplicateMetrics,
};
use faae::io::write_atomic;
use faae::model::{train, Checkpoint, EpochLosses, FaaeModel, ModelConfig, Variant};
use faae::nn::{streams, RngStream};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    absolutize, manifest_json, CompareRun, EvalRun, Protocol, SweepMode, SweepRun, SynthRun,
    TrainRun, MANIFEST_FILE,
};

pub struct RunContext {
    pub out: PathBuf,
    pub seed: Option<u64>,
}

impl RunContext {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Creates the output directory and records the resolved config before
    /// any expensive work starts.
    fn begin<T: Serialize>(&self, command: &str, config: &T) -> Result<()> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("cannot create output directory {}", self.out.display()))?;
        self.write(MANIFEST_FILE, &manifest_json(command, config)?)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        write_atomic(&path, bytes).with_context(|| format!("writing {}", path.display()))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }
}

fn load_cohort(path: &Path) -> Result<Cohort> {
    load_csv(path).with_context(|| format!("loading dataset {}", path.display()))
}

fn check_model_fits(model: &ModelConfig) -> Result<()> {
    ensure!(
        model.input_dim == N_REGIONS,
        "model.input_dim is {} but datasets have {N_REGIONS} regions",
        model.input_dim
    );
    ensure!(
        model.covariate_dim == faae::data::COVARIATE_DIM,
        "model.covariate_dim is {} but covariate vectors have {} entries",
        model.covariate_dim,
        faae::data::COVARIATE_DIM
    );
    model.validate()?;
    Ok(())
}

fn prepared(cohort: &Cohort, fraction: f64, seed: u64) -> Result<PreparedSplit> {
    prepare(cohort, fraction, seed).context("splitting dataset")
}

fn loss_trace_csv(trace: &[EpochLosses]) -> String {
    let mut s = String::from("epoch,recon,kl,adv,generator\n");
    for e in trace {
        s.push_str(&format!("{},{},{},{},{}\n", e.epoch, e.recon, e.kl, e.adv, e.generator));
    }
    s
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), faae::eval::EvalError>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

pub fn synth(ctx: &RunContext, mut run: SynthRun) -> Result<()> {
    if let Some(seed) = ctx.seed {
        run.synth.seed = seed;
    }
    run.synth.validate()?;
    ctx.begin("synth", &run)?;
    let synth = faae::data::generate_synthetic(&run.synth)?;
    let mut csv = Vec::new();
    write_csv(&synth.cohort, &mut csv)?;
    ctx.write("cohort.csv", &csv)?;
    ctx.write_json("cohort.meta.json", &synth.metadata)?;
    eprintln!(
        "wrote {} subjects ({} HC, {} AD) to {}",
        synth.cohort.len(),
        run.synth.n_hc,
        run.synth.n_ad,
        ctx.path("cohort.csv").display()
    );
    Ok(())
}

pub fn train_cmd(ctx: &RunContext, mut run: TrainRun) -> Result<()> {
    if let Some(seed) = ctx.seed {
        run.model.seed = seed;
    }
    run.dataset = absolutize(&run.dataset)?;
    check_model_fits(&run.model)?;
    ctx.begin("train", &run)?;
    let cohort = load_cohort(&run.dataset)?;
    let prep = prepared(&cohort, run.split_fraction, run.model.seed)?;
    let model = FaaeModel::new(run.model.clone())?;
    let out = train(
        model,
        prep.train.samples(),
        &mut RngStream::with_stream(run.model.seed, streams::TRAIN),
    )?;
    let ckpt = Checkpoint {
        model: out.model,
        preprocessor: prep.preprocessor,
        split: prep.record,
    };
    ctx.write("model.ckpt", &ckpt.to_bytes()?)?;
    ctx.write("loss_trace.csv", loss_trace_csv(&out.trace).as_bytes())?;
    ctx.write_json("split.json", &ckpt.split)?;
    if let Some(last) = out.trace.last() {
        eprintln!(
            "{}: {} epochs on {} HC, final recon {:.4}",
            run.model.variant,
            out.trace.len(),
            prep.train.len(),
            last.recon
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalMetrics<'a> {
    variant: Variant,
    split_hash: &'a str,
    n_hc: usize,
    n_ad: usize,
    auroc: faae::eval::MetricStat,
    sensitivity: faae::eval::MetricStat,
    specificity: faae::eval::MetricStat,
    threshold: f64,
    replicates: usize,
    /// Metrics on the unresampled test set, as fractions.
    point: ReplicateMetrics,
}

pub fn eval_cmd(ctx: &RunContext, mut run: EvalRun) -> Result<()> {
    run.checkpoint = absolutize(&run.checkpoint)?;
    run.dataset = absolutize(&run.dataset)?;
    let ckpt = Checkpoint::read(&run.checkpoint)
        .with_context(|| format!("reading checkpoint {}", run.checkpoint.display()))?;
    let seed = ctx.seed.or(run.seed).unwrap_or(ckpt.model.config().seed);
    run.seed = Some(seed);
    ctx.begin("eval", &run)?;

    let cohort = load_cohort(&run.dataset)?;
    let (_, test_cohort) = ckpt
        .split
        .apply(&cohort)
        .context("checkpoint and dataset do not match")?;
    let test = ckpt.preprocessor.apply(&test_cohort)?;
    let report = score_with(&ckpt.model, &test, &run.eval)?;
    let summary = bootstrap_eval(
        &report,
        &run.eval.bootstrap,
        &mut RngStream::with_stream(seed, streams::BOOTSTRAP),
    )?;
    let point = point_metrics(&report.d_mse, &report.positives(), run.eval.bootstrap.threshold_rule)?;
    let (hc, ad) = (report.filter(Label::Hc), report.filter(Label::Ad));
    let effects = region_effect_sizes(
        &hc,
        &ad,
        run.eval.effect_resamples,
        &mut RngStream::with_stream(seed, streams::EFFECTS),
    )?;

    ctx.write_json(
        "metrics.json",
        &EvalMetrics {
            variant: ckpt.model.config().variant,
            split_hash: &ckpt.split.hash,
            n_hc: hc.len(),
            n_ad: ad.len(),
            auroc: summary.auroc,
            sensitivity: summary.sensitivity,
            specificity: summary.specificity,
            threshold: summary.threshold,
            replicates: summary.replicates,
            point,
        },
    )?;
    ctx.write("deviations.csv", &csv_bytes(|b| write_deviations_csv(&report, b))?)?;
    ctx.write("effects.csv", &csv_bytes(|b| write_effects_csv(&effects, b))?)?;
    ctx.write("regions.csv", &csv_bytes(|b| write_regions_csv(&hc, &ad, &effects, b))?)?;
    eprintln!(
        "AUROC {}  sensitivity {}  specificity {}  ({} of {} regions significant)",
        summary.auroc,
        summary.sensitivity,
        summary.specificity,
        effects.iter().filter(|e| e.significant).count(),
        effects.len()
    );
    Ok(())
}

pub fn sweep_cmd(ctx: &RunContext, mut run: SweepRun) -> Result<()> {
    if let Some(seed) = ctx.seed {
        run.model.seed = seed;
    }
    run.dataset = absolutize(&run.dataset)?;
    check_model_fits(&run.model)?;
    match run.mode {
        SweepMode::FocalGrid => ensure!(
            !run.alphas.is_empty() && !run.gammas.is_empty(),
            "alphas and gammas must be nonempty"
        ),
        SweepMode::SampleSize => ensure!(!run.sizes.is_empty(), "sizes must be nonempty"),
    }
    ctx.begin("sweep", &run)?;
    let cohort = load_cohort(&run.dataset)?;
    let prep = prepared(&cohort, run.split_fraction, run.model.seed)?;
    let csv = match run.mode {
        SweepMode::FocalGrid => {
            let cells = param_sweep(&prep.train, &prep.test, &run.alphas, &run.gammas, &run.model, &run.eval)?;
            csv_bytes(|b| write_param_sweep_csv(&cells, b))?
        }
        SweepMode::SampleSize => {
            if let Some(&s) = run.sizes.iter().find(|&&s| s > prep.train.len()) {
                bail!("training size {s} exceeds the HC pool of {}", prep.train.len());
            }
            let rows = sample_size_sweep(&prep.train, &prep.test, &run.sizes, &run.model, &run.eval)?;
            csv_bytes(|b| write_size_sweep_csv(&rows, b))?
        }
    };
    ctx.write("sweep.csv", &csv)?;
    eprintln!("wrote {}", ctx.path("sweep.csv").display());
    Ok(())
}

#[derive(Serialize)]
struct CompareRow {
    variant: Variant,
    split_hash: String,
    summary: EvalSummary,
}

pub fn compare_cmd(ctx: &RunContext, mut run: CompareRun) -> Result<()> {
    if let Some(seed) = ctx.seed {
        run.model.seed = seed;
    }
    run.dataset = absolutize(&run.dataset)?;
    check_model_fits(&run.model)?;
    ctx.begin("compare", &run)?;
    let cohort = load_cohort(&run.dataset)?;
    let prep = prepared(&cohort, run.split_fraction, run.model.seed)?;
    let rows: Vec<CompareRow> = Variant::ALL
        .par_iter()
        .map(|&variant| {
            let config = ModelConfig {
                variant,
                ..run.model.clone()
            };
            let summary = match run.protocol {
                Protocol::Bootstrap => run_experiment(&prep.train, &prep.test, &config, &run.eval)?.summary,
                Protocol::Resplit => resplit_eval(&cohort, run.split_fraction, &config, &run.eval)?,
            };
            Ok(CompareRow {
                variant,
                split_hash: prep.record.hash.clone(),
                summary,
            })
        })
        .collect::<Result<_>>()?;

    let mut table = String::from("Model,AUROC,Sensitivity,Specificity\n");
    for r in &rows {
        table.push_str(&format!(
            "{},{},{},{}\n",
            r.variant, r.summary.auroc, r.summary.sensitivity, r.summary.specificity
        ));
    }
    ctx.write("compare.csv", table.as_bytes())?;
    ctx.write_json("compare.json", &rows)?;
    eprint!("{table}");
    Ok(())
}
