use faae::data::{generate_synthetic, prepare, read_csv, write_csv, Label, Preprocessor, SynthConfig};
use faae::eval::{
    nested_subsets, param_sweep, run_experiment, sample_size_sweep, score_deviation, EvalConfig,
};
use faae::model::{train, Checkpoint, FaaeModel, ModelConfig, Variant};
use faae::nn::{streams, RngStream};
use proptest::prelude::*;

fn cohort(seed: u64) -> faae::data::Cohort {
    generate_synthetic(&SynthConfig {
        n_hc: 120,
        n_ad: 30,
        seed,
        ..Default::default()
    })
    .unwrap()
    .cohort
}

fn quick(epochs: usize) -> ModelConfig {
    ModelConfig {
        epochs,
        ..Default::default()
    }
}

fn quick_eval() -> EvalConfig {
    let mut e = EvalConfig::default();
    e.bootstrap.n_replicates = 5;
    e.effect_resamples = 20;
    e
}

#[test]
fn csv_round_trip_preserves_the_split_hash() {
    let c = cohort(1);
    let mut buf = Vec::new();
    write_csv(&c, &mut buf).unwrap();
    let back = read_csv(buf.as_slice()).unwrap();
    let a = prepare(&c, 0.8, 3).unwrap();
    let b = prepare(&back, 0.8, 3).unwrap();
    assert_eq!(a.record, b.record);
    assert!(a.record.apply(&back).is_ok());
}

#[test]
fn preprocessing_is_fit_on_training_controls_only() {
    let c = cohort(2);
    let p = prepare(&c, 0.8, 5).unwrap();
    assert_eq!(p.train.count(Label::Ad), 0);
    let (train_cohort, _) = p.record.apply(&c).unwrap();
    assert_eq!(Preprocessor::fit(&train_cohort).unwrap(), p.preprocessor);
    assert!(Preprocessor::fit(&c).is_err());
}

#[test]
fn checkpoint_reproduces_scores() {
    let c = cohort(3);
    let p = prepare(&c, 0.8, 0).unwrap();
    let out = train(
        FaaeModel::new(quick(4)).unwrap(),
        p.train.samples(),
        &mut RngStream::with_stream(0, streams::TRAIN),
    )
    .unwrap();
    let ckpt = Checkpoint {
        model: out.model,
        preprocessor: p.preprocessor.clone(),
        split: p.record.clone(),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    ckpt.write(&path).unwrap();
    let back = Checkpoint::read(&path).unwrap();
    let (_, test_cohort) = back.split.apply(&c).unwrap();
    let test = back.preprocessor.apply(&test_cohort).unwrap();
    let a = score_deviation(&ckpt.model, &p.test).unwrap();
    let b = score_deviation(&back.model, &test).unwrap();
    assert_eq!(a.d_mse, b.d_mse);
    assert_eq!(a.subject_ids, b.subject_ids);
}

#[test]
fn experiments_are_deterministic_per_seed() {
    let c = cohort(4);
    let p = prepare(&c, 0.8, 0).unwrap();
    let a = run_experiment(&p.train, &p.test, &quick(3), &quick_eval()).unwrap();
    let b = run_experiment(&p.train, &p.test, &quick(3), &quick_eval()).unwrap();
    assert_eq!(a.summary, b.summary);
    assert_eq!(a.trace, b.trace);
    let other = ModelConfig { seed: 1, ..quick(3) };
    let d = run_experiment(&p.train, &p.test, &other, &quick_eval()).unwrap();
    assert_ne!(a.report.d_mse, d.report.d_mse);
}

#[test]
fn focal_grid_is_alpha_major() {
    let c = cohort(5);
    let p = prepare(&c, 0.8, 0).unwrap();
    let cells = param_sweep(&p.train, &p.test, &[0.2, 0.8], &[0.0, 2.0, 15.0], &quick(1), &quick_eval()).unwrap();
    let grid: Vec<(f64, f64)> = cells.iter().map(|c| (c.alpha, c.gamma)).collect();
    assert_eq!(grid, vec![(0.2, 0.0), (0.2, 2.0), (0.2, 15.0), (0.8, 0.0), (0.8, 2.0), (0.8, 15.0)]);
}

#[test]
fn size_sweep_rejects_sizes_beyond_the_pool() {
    let c = cohort(6);
    let p = prepare(&c, 0.8, 0).unwrap();
    let rows = sample_size_sweep(&p.train, &p.test, &[24, 48], &quick(1), &quick_eval()).unwrap();
    assert_eq!(rows.iter().map(|r| r.size).collect::<Vec<_>>(), vec![24, 48]);
    assert!(sample_size_sweep(&p.train, &p.test, &[97], &quick(1), &quick_eval()).is_err());
}

#[test]
fn every_variant_trains_and_scores() {
    let c = cohort(7);
    let p = prepare(&c, 0.8, 0).unwrap();
    for variant in Variant::ALL {
        let cfg = ModelConfig { variant, ..quick(2) };
        let exp = run_experiment(&p.train, &p.test, &cfg, &quick_eval()).unwrap();
        assert_eq!(exp.trace.len(), 2);
        assert!(exp.report.d_mse.iter().all(|d| d.is_finite() && *d >= 0.0), "{variant}");
        if !variant.adversarial() {
            assert!(exp.trace.iter().all(|e| e.adv == 0.0 && e.generator == 0.0), "{variant}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nested_subsets_are_nested(pool in 5usize..200, seed in any::<u64>(), mut sizes in prop::collection::vec(1usize..5, 1..6)) {
        sizes.iter_mut().enumerate().for_each(|(i, s)| *s = (*s + i * pool / 6).clamp(1, pool));
        sizes.sort_unstable();
        let sets = nested_subsets(pool, &sizes, seed).unwrap();
        for (set, &s) in sets.iter().zip(&sizes) {
            prop_assert_eq!(set.len(), s);
            prop_assert!(set.windows(2).all(|w| w[0] < w[1]));
        }
        for w in sets.windows(2) {
            prop_assert!(w[0].iter().all(|i| w[1].binary_search(i).is_ok()));
        }
    }
}
