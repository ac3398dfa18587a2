use std::fs;
use std::path::{Path, PathBuf};

use degvis_core::harness::{
    assess, fit_eps_scaling, run_campaign, CampaignOptions, CampaignSummary, ExperimentConfig,
    ScalingFit, SUMMARY_FILE,
};
use degvis_core::solver::Termination;
use proptest::prelude::*;

fn smoke() -> ExperimentConfig {
    let path: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "..",
        "..",
        "configs",
        "smoke.json",
    ]
    .iter()
    .collect();
    let mut cfg = ExperimentConfig::load(&path).unwrap();
    cfg.grid.cells = vec![64, 128];
    cfg.end_time = 0.1;
    cfg
}

fn run_dirs(root: &Path) -> Vec<String> {
    let mut dirs: Vec<String> = fs::read_dir(root)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    dirs.sort();
    dirs
}

#[test]
fn campaign_has_one_run_per_eps_and_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let summary = run_campaign(&smoke(), tmp.path(), &CampaignOptions::default()).unwrap();
    assert_eq!(summary.runs.len(), 6);
    assert_eq!(run_dirs(tmp.path()).len(), 6);
    assert!(summary
        .runs
        .iter()
        .all(|r| r.termination == Termination::Completed));
    for r in &summary.runs {
        assert!(tmp.path().join(&r.dir).join("diagnostics.csv").is_file());
    }
    assert_eq!(CampaignSummary::load(tmp.path()).unwrap(), summary);
    assert!(assess(&summary).unwrap().passed());

    let err = run_campaign(&smoke(), tmp.path(), &CampaignOptions::default()).unwrap_err();
    assert!(
        err.to_string().contains("already holds a campaign"),
        "{err}"
    );
}

#[test]
fn reruns_and_thread_counts_give_identical_outputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let serial = CampaignOptions {
        threads: 1,
        force: false,
    };
    let parallel = CampaignOptions {
        threads: 4,
        force: false,
    };
    let s1 = run_campaign(&smoke(), a.path(), &serial).unwrap();
    let s2 = run_campaign(&smoke(), b.path(), &parallel).unwrap();
    assert_eq!(s1, s2);
    assert_eq!(
        fs::read(a.path().join(SUMMARY_FILE)).unwrap(),
        fs::read(b.path().join(SUMMARY_FILE)).unwrap()
    );
    for d in run_dirs(a.path()) {
        let csv = |root: &Path| fs::read(root.join(&d).join("diagnostics.csv")).unwrap();
        assert_eq!(csv(a.path()), csv(b.path()), "{d}");
    }

    let forced = CampaignOptions {
        threads: 2,
        force: true,
    };
    let s3 = run_campaign(&smoke(), a.path(), &forced).unwrap();
    assert_eq!(s1, s3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_fit_recovers_a_noisy_power_law(
        slope in 0.5f64..4.0,
        scale in 0.1f64..10.0,
        noise in prop::collection::vec(-0.01f64..0.01, 4),
    ) {
        let eps: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
        let points: Vec<(f64, f64)> = eps
            .iter()
            .zip(&noise)
            .map(|(e, n)| (*e, scale * e.powf(slope) * (1.0 + n)))
            .collect();
        match fit_eps_scaling(&points, 8.0 / 3.0).unwrap() {
            ScalingFit::Fitted { slope: s, .. } => prop_assert!((s - slope).abs() < 0.1, "{s} vs {slope}"),
            other => prop_assert!(false, "{other:?}"),
        }
    }
}
