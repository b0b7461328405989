//! End-to-end runs of the bootstrap pipeline and its competitors on small samples.

use hetvar::bootstrap::{
    assemble, build_interval, fit_replicates, naive_bootstrap_interval, prepare, standard_bootstrap_interval,
    A0Variant, BVariant, CiConfig, CiRecord,
};
use hetvar::scenarios::ScenarioSpec;
use hetvar::{NetworkArch, TrainConfig};

fn small_cfg(seed: u64) -> CiConfig {
    let arch = NetworkArch::new(2, 1, 8).unwrap();
    let train = TrainConfig::default().with_epochs(10);
    CiConfig {
        b: 10,
        b_tilde: 4,
        mean_arch: arch,
        var_arch: arch,
        mean_train: train,
        var_train: train,
        replicate_train: train.with_epochs(3),
        standard_resamples: 5,
        seed,
        ..CiConfig::experiment_default(2).unwrap()
    }
}

#[test]
fn staged_run_equals_one_shot() {
    let data = ScenarioSpec::new(1).unwrap().sample_dataset(240, 1).unwrap().dataset;
    let cfg = small_cfg(3);
    let base = prepare(&cfg, &data).unwrap();
    let reps = fit_replicates(&base, &cfg).unwrap();
    let staged = assemble(&cfg, &data, &base, &reps).unwrap();
    let direct = build_interval(&cfg, &data).unwrap();
    assert_eq!(staged.diagnostics, direct.diagnostics);
    let x = [0.4, 0.1];
    assert_eq!(staged.interval(&x).unwrap(), direct.interval(&x).unwrap());
    assert_eq!(staged.replicates().len(), cfg.b + cfg.b_tilde);
}

#[test]
fn variants_share_a1_and_differ_in_corrections() {
    let data = ScenarioSpec::new(2).unwrap().sample_dataset(240, 2).unwrap().dataset;
    let theo = small_cfg(5);
    let emp = CiConfig {
        a0_variant: A0Variant::Empirical,
        b_variant: BVariant::Empirical,
        ..theo
    };
    let base = prepare(&theo, &data).unwrap();
    let reps = fit_replicates(&base, &theo).unwrap();
    let a = assemble(&theo, &data, &base, &reps).unwrap().diagnostics;
    let b = assemble(&emp, &data, &base, &reps).unwrap().diagnostics;
    assert_eq!(a.a1, b.a1);
    assert_eq!(a.mean_g_b1, b.mean_g_b1);
    let l2 = (240f64).ln().powi(2);
    assert_eq!(a.b_alpha, 1.0 / (100.0 * l2));
    assert_eq!(b.a0, (b.var_y - b.mean_sq_dev_b1 - b.mean_g_b1).abs());
}

#[test]
fn record_round_trips_through_json_and_csv() {
    let data = ScenarioSpec::new(1).unwrap().sample_dataset(200, 4).unwrap().dataset;
    let ci = build_interval(&small_cfg(1), &data).unwrap();
    let points = vec![vec![0.1, 0.2], vec![0.8, 0.5]];
    let rec = ci.record(&points).unwrap();
    assert_eq!(CiRecord::from_json(&rec.to_json().unwrap()).unwrap(), rec);
    let mut buf = Vec::new();
    rec.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + points.len());
    for e in &rec.evaluations {
        assert_eq!(e.upper - e.center, e.center - e.lower);
    }
}

#[test]
fn competitors_produce_ordered_intervals() {
    let data = ScenarioSpec::new(3).unwrap().sample_dataset(200, 6).unwrap().dataset;
    let cfg = small_cfg(2);
    let points = vec![vec![0.3, 0.3], vec![0.9, 0.2], vec![0.5, 0.5]];
    let naive = naive_bootstrap_interval(&cfg, &data, &points).unwrap();
    let standard = standard_bootstrap_interval(&cfg, &data, &points).unwrap();
    assert_eq!(naive.len(), 3);
    assert_eq!(standard.len(), 3);
    for iv in naive.iter().chain(&standard) {
        assert!(iv.lower <= iv.upper);
    }
    assert_eq!(standard, standard_bootstrap_interval(&cfg, &data, &points).unwrap());
}

#[test]
fn too_small_sample_is_rejected() {
    let data = ScenarioSpec::new(1).unwrap().sample_dataset(6, 0).unwrap().dataset;
    assert!(build_interval(&small_cfg(0), &data).is_err());
}
