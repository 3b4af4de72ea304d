use std::collections::BTreeSet;
use std::sync::Mutex;

use clinpred::data::{generate_synthetic_cohort, write_csv, GeneratorSpec};
use clinpred::pipeline::{cmd_run_observed, PipelineConfig, RunEvent, RunObserver};

#[derive(Default)]
struct Log(Mutex<Vec<RunEvent>>);

impl RunObserver for Log {
    fn event(&self, e: RunEvent) {
        self.0.lock().unwrap().push(e);
    }
}

fn observed_run(config: &str) -> Vec<RunEvent> {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_synthetic_cohort(900, 21, &GeneratorSpec::default()).unwrap();
    let path = dir.path().join("cohort.csv");
    write_csv(&ds, &path).unwrap();
    // Blank every 7th Age and every 11th KPS so imputation has work to do.
    let text = std::fs::read_to_string(&path).unwrap();
    let holed: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let mut cells: Vec<&str> = l.split(',').collect();
            if i > 0 && i % 7 == 0 {
                cells[13] = "";
            }
            if i > 0 && i % 11 == 0 {
                cells[15] = "";
            }
            cells.join(",")
        })
        .collect();
    std::fs::write(&path, holed.join("\n") + "\n").unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, config).unwrap();

    let cfg = PipelineConfig::load(&cfg_path).unwrap();
    let log = Log::default();
    cmd_run_observed(&cfg, &log).unwrap();
    log.0.into_inner().unwrap()
}

const CONFIG: &str = r#"
seed = 2
[data]
input = "cohort.csv"
[endpoint]
name = "TwelveMonths"
mode = "classification"
ignore = ["Survival"]
[train]
plan = { method = "cv", k = 5 }
balance = { type = "smote", k = 5 }
[rfe]
estimator = "nb"
sizes = [4, 8, 20]
plan = { method = "boot", reps = 4 }
[[models]]
key = "glm"
[[models]]
key = "lasso"
[[models]]
key = "rf"
grid = [{ kind = "random_forest", mtry = 4, n_trees = 25 }]
"#;

#[test]
fn recipes_never_see_assessment_or_test_rows() {
    let events = observed_run(CONFIG);
    let RunEvent::Split { train_rows, test_rows } = &events[0] else { panic!("split must come first") };
    let train: BTreeSet<u64> = train_rows.iter().copied().collect();
    let test: BTreeSet<u64> = test_rows.iter().copied().collect();
    assert!(train.is_disjoint(&test));

    let mut per_stage = std::collections::BTreeMap::<String, usize>::new();
    for e in &events {
        if let RunEvent::ResampleFit { stage, recipe_rows, assessment_rows, .. } = e {
            let fit: BTreeSet<u64> = recipe_rows.iter().copied().collect();
            let assess: BTreeSet<u64> = assessment_rows.iter().copied().collect();
            assert!(fit.is_disjoint(&assess), "{stage}");
            assert!(fit.is_subset(&train) && assess.is_subset(&train), "{stage}");
            *per_stage.entry(stage.clone()).or_default() += 1;
        }
        if let RunEvent::FinalFit { recipe_rows } = e {
            let fit: BTreeSet<u64> = recipe_rows.iter().copied().collect();
            assert_eq!(fit, train, "final recipe is fitted on exactly the training rows");
        }
    }
    assert_eq!(per_stage.get("rfe"), Some(&4));
    for stage in ["glm", "lasso", "rf"] {
        assert_eq!(per_stage.get(stage), Some(&5), "{stage}");
    }
}

#[test]
fn test_rows_are_opened_once_after_the_freeze() {
    let events = observed_run(CONFIG);
    let freeze = events.iter().position(|e| *e == RunEvent::FinalModelFrozen).unwrap();
    let opened: Vec<usize> =
        events.iter().enumerate().filter(|(_, e)| **e == RunEvent::TestAccessed).map(|(i, _)| i).collect();
    assert_eq!(opened, [freeze + 1]);
    assert_eq!(opened[0], events.len() - 1);
    assert!(events[..freeze].iter().any(|e| matches!(e, RunEvent::FinalFit { .. })));
}
