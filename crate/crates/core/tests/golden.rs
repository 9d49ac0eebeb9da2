use tnt::sim::{catalog, golden};

#[test]
fn every_builtin_scenario_matches_its_golden() {
    let mut failures = Vec::new();
    for name in catalog::names() {
        match golden::check(name) {
            Ok(d) if d.is_empty() => {}
            Ok(d) => failures.push(format!("{name}:\n  {}", d.join("\n  "))),
            Err(e) => failures.push(e),
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn every_golden_names_a_builtin_scenario() {
    for entry in std::fs::read_dir(golden::golden_dir()).unwrap() {
        let path = entry.unwrap().path();
        let g = golden::load(path.file_stem().unwrap().to_str().unwrap()).unwrap();
        assert!(catalog::get(&g.scenario).is_some(), "{}", path.display());
        assert_eq!(
            path.file_stem().unwrap().to_str(),
            Some(g.scenario.as_str())
        );
    }
}
