mod common;

use common::SMALL_TIMELAPSE_JSON;
use localfwi::config::{Algorithm, ExperimentConfig, ExperimentKind, ModelSpec};
use localfwi::experiments::{
    run_inclusion_experiment, run_invert, run_timelapse_experiment, Artifacts,
};

fn small() -> ExperimentConfig {
    ExperimentConfig::from_json(SMALL_TIMELAPSE_JSON, ExperimentKind::Timelapse).unwrap()
}

#[test]
fn timelapse_summaries_are_byte_identical_across_runs() {
    let config = small();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = run_timelapse_experiment(&config, &Artifacts::create(a.path()).unwrap()).unwrap();
    let sb = run_timelapse_experiment(&config, &Artifacts::create(b.path()).unwrap()).unwrap();
    assert_eq!(
        serde_json::to_string(&sa).unwrap(),
        serde_json::to_string(&sb).unwrap()
    );
    for name in ["summary.json", "config.resolved.json"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    assert_eq!(sa.variants.len(), 4);
    let lwi = &sa.variants[0];
    assert_eq!(lwi.iterations, config.schedule.total_iterations());
    assert_eq!(lwi.counts.full, 4 * 2);
    assert_eq!(lwi.counts.target, 4 * 4);
    let irwri = sa
        .variants
        .iter()
        .find(|v| v.algorithm == Algorithm::Irwri)
        .unwrap();
    assert_eq!(irwri.counts.full, 4 * 4);
    assert_eq!(sa.full_solve_ratio, 0.5);
}

#[test]
fn invert_without_change_stays_at_the_truth() {
    let mut config = small();
    config.initial_model = Some(config.model.clone());
    for algorithm in [Algorithm::Irwri, Algorithm::Lwi, Algorithm::Multiblock] {
        config.algorithm = algorithm;
        let dir = tempfile::tempdir().unwrap();
        let s = run_invert(&config, &Artifacts::create(dir.path()).unwrap()).unwrap();
        assert!(
            s.model_rms_error.unwrap() < 1e-6,
            "{algorithm:?}: {:?}",
            s.model_rms_error
        );
        assert_eq!(s.initial_rms_error, Some(0.0));
        assert!(dir.path().join("reports.csv").exists());
        assert!(dir.path().join("model_final.lwim").exists());
    }
}

#[test]
fn inclusion_with_the_true_background_is_exact() {
    let mut config = ExperimentConfig::defaults(ExperimentKind::Inclusion);
    config.grid.nx = 61;
    config.grid.nz = 61;
    config.model = ModelSpec::Homogeneous { velocity: 2000.0 };
    config.acquisition = localfwi::config::AcquisitionSpec::Ring {
        sources: vec![(200.0, 900.0)],
        center: (900.0, 900.0),
        radius: 800.0,
        n_receivers: 40,
    };
    config.partition = vec![localfwi::Rect::new(600.0, 1200.0, 600.0, 1200.0)];
    let dir = tempfile::tempdir().unwrap();
    let s = run_inclusion_experiment(&config, &Artifacts::create(dir.path()).unwrap()).unwrap();
    assert!(s.error_naive <= 1e-9 && s.error_da <= 1e-9, "{s:?}");
    assert_eq!(s.n_receivers, 40);
    for panel in [
        "wavefield_true",
        "u1_naive",
        "u1_da",
        "u2_naive",
        "u2_naive_error",
        "u2_da",
        "u2_da_error",
    ] {
        for part in ["re", "im"] {
            assert!(
                dir.path().join(format!("{panel}_{part}.pgm")).exists(),
                "{panel}_{part}"
            );
        }
    }
}
