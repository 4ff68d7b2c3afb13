use glmb_core::experiment::{run_experiment, write_outputs, Meta, DETERMINISTIC_OUTPUTS};
use glmb_core::{Label, ScenarioConfig, Truth};

fn small() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.montecarlo.trials = 2;
    cfg.montecarlo.horizon = 20;
    cfg.filter.cap = 100;
    cfg.filter.hmax = 200;
    cfg
}

fn header(path: &std::path::Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn outputs_have_expected_shape() {
    let exp = run_experiment(&small()).unwrap();
    assert_eq!(exp.violations().count(), 0);
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &exp, &Meta::new(&exp, None, 1)).unwrap();
    for f in DETERMINISTIC_OUTPUTS.iter().chain(&["meta.json"]) {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    assert_eq!(header(&dir.path().join("cardinality.csv")), "scan,truth,mean,std");
    assert_eq!(header(&dir.path().join("ospa.csv")), "scan,total,loc,card");
    assert_eq!(
        header(&dir.path().join("estimates.csv")),
        "trial,scan,label,x,y,vx,vy,existence"
    );
    assert_eq!(
        header(&dir.path().join("ancestry.csv")),
        "run,region,root,birth_time,death_time,gen1_spawn_time,gen2_spawn_time,origin_error,label_switch,no_spawn,reproduced"
    );
    let card = std::fs::read_to_string(dir.path().join("cardinality.csv")).unwrap();
    assert_eq!(card.lines().count(), 21);
    let diag = std::fs::read_to_string(dir.path().join("diagnostics.jsonl")).unwrap();
    assert_eq!(diag.lines().count(), 40);

    let truth: Truth = serde_json::from_str(&std::fs::read_to_string(dir.path().join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth, exp.truth);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["trials"].as_array().unwrap().len(), 2);
    assert_eq!(meta["config"]["filter"]["cap"], 100);
}

#[test]
fn early_scans_track_the_first_generation() {
    let exp = run_experiment(&small()).unwrap();
    for t in &exp.trials {
        assert_eq!(t.estimates.len(), 20);
        // by scan 9 there is one root per birth region and nothing has spawned;
        // birth times vary with missed detections
        let est = &t.estimates[8];
        assert!(est.iter().all(|e| e.label.generation() == 0), "trial {}", t.trial);
        let mut regions: Vec<u32> = est.iter().map(|e| e.label.path()[0].1).collect();
        regions.sort_unstable();
        assert_eq!(regions, [1, 2, 3], "trial {}", t.trial);
    }
}

#[test]
fn zero_spawn_probability_never_spawns() {
    let mut cfg = small();
    cfg.spawn.p_t = 0.0;
    let exp = run_experiment(&cfg).unwrap();
    assert_eq!(exp.violations().count(), 0);
    let spawned = exp
        .trials
        .iter()
        .flat_map(|t| t.estimates.iter().flatten())
        .filter(|e| e.label.generation() > 0)
        .count();
    assert_eq!(spawned, 0);
}

#[test]
fn trials_differ_but_repeat() {
    let cfg = small();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_ne!(a.trials[0].scans, a.trials[1].scans);
    for (x, y) in a.trials.iter().zip(&b.trials) {
        assert_eq!(x.scans, y.scans);
        let lx: Vec<Vec<&Label>> = x.estimates.iter().map(|s| s.iter().map(|e| &e.label).collect()).collect();
        let ly: Vec<Vec<&Label>> = y.estimates.iter().map(|s| s.iter().map(|e| &e.label).collect()).collect();
        assert_eq!(lx, ly);
    }
}
