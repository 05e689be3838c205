use critflow_cli::{list_experiments, registry, ExperimentConfig, MODULES};

#[test]
fn registry_covers_every_module_with_at_least_eighteen_entries() {
    let all = registry();
    assert!(all.len() >= 18, "{} entries", all.len());
    for m in MODULES {
        assert!(all.iter().any(|e| e.module == m), "no entry for {m}");
    }
    let mut ids: Vec<&str> = all.iter().map(|e| e.id).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), all.len(), "duplicate ids");
}

#[test]
fn listing_order_is_stable_by_module_then_id() {
    let keys: Vec<(usize, &str)> = registry()
        .iter()
        .map(|e| (MODULES.iter().position(|m| *m == e.module).unwrap(), e.id))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let again: Vec<&str> = list_experiments(None).iter().map(|e| e.id).collect();
    assert_eq!(again, keys.iter().map(|k| k.1).collect::<Vec<_>>());
}

#[test]
fn module_filter_returns_only_that_module() {
    let ns = list_experiments(Some("lagrangian_ns"));
    assert!(!ns.is_empty());
    assert!(ns.iter().all(|e| e.module == "lagrangian_ns"));
    assert_eq!(ns.len(), registry().iter().filter(|e| e.module == "lagrangian_ns").count());
    assert!(list_experiments(Some("no_such_module")).is_empty());
}

#[test]
fn every_default_config_satisfies_its_preconditions() {
    for e in registry() {
        assert!(!e.summary.is_empty(), "{} has no summary", e.id);
        let cfg = ExperimentConfig::defaults(e);
        if let Err(msg) = e.validate(&cfg.params) {
            panic!("{}: default config rejected: {msg}", e.id);
        }
    }
}
