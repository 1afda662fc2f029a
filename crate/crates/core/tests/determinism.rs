use forestperm::perm::Permutation;
use forestperm::simulate::{run_blocks_clt, run_forest_clt, run_tree_clt, ExperimentConfig, HostClass};
use forestperm::verify::{verify_exact, Suite};

fn config(class: HostClass, pattern: &str, workers: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(class, Permutation::parse(pattern).unwrap(), 200, 300, 42);
    c.workers = workers;
    c
}

#[test]
fn reports_identical_across_worker_counts() {
    for workers in [2, 4] {
        let a = run_tree_clt(&config(HostClass::Tree, "312", 1)).unwrap();
        let b = run_tree_clt(&config(HostClass::Tree, "312", workers)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_csv(), b.to_csv());
        let a = run_forest_clt(&config(HostClass::Forest, "21", 1)).unwrap();
        let b = run_forest_clt(&config(HostClass::Forest, "21", workers)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let a = run_blocks_clt(&config(HostClass::Forest, "1", 1)).unwrap();
        let b = run_blocks_clt(&config(HostClass::Forest, "1", workers)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
}

#[test]
fn seeds_change_the_samples() {
    let a = run_tree_clt(&config(HostClass::Tree, "312", 1)).unwrap();
    let mut c = config(HostClass::Tree, "312", 1);
    c.seed = 43;
    let b = run_tree_clt(&c).unwrap();
    assert_ne!(a.to_json(), b.to_json());
}

#[test]
fn exact_suites_pass() {
    for suite in [Suite::Table1, Suite::Laga] {
        let report = verify_exact(suite).unwrap();
        assert!(report.passed, "{}", report.to_json());
    }
}
