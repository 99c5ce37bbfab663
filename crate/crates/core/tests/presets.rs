//! The presets against a hand-transcribed table of the published
//! hyperparameters.

use std::collections::BTreeMap;

use dopamine::experiment::{preset, preset_names, preset_source};

const TABLE: &str = include_str!("fixtures/preset_hyperparameters.csv");
const KEYS: [&str; 6] = ["eta", "s0", "beta_s", "beta_eta", "lambda", "sigma_sq"];

/// `key -> literal text` for the `[optimizer]` section of a preset.
fn optimizer_literals(source: &str) -> BTreeMap<String, String> {
    let mut in_section = false;
    let mut out = BTreeMap::new();
    for line in source.lines().map(str::trim) {
        if line.starts_with('[') {
            in_section = line == "[optimizer]";
        } else if in_section {
            if let Some((k, v)) = line.split_once('=') {
                out.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    out
}

#[test]
fn preset_literals_match_the_table_byte_for_byte() {
    let mut rows = 0;
    for line in TABLE.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let (task, optimizer) = (cells[0], cells[1]);
        for name in [format!("{task}-{optimizer}"), format!("{task}-{optimizer}-scaled")] {
            let lits = optimizer_literals(preset_source(&name).unwrap());
            assert_eq!(lits["id"], format!("\"{optimizer}\""), "{name}");
            for (key, want) in KEYS.iter().zip(&cells[2..]) {
                match (lits.get(*key), want.is_empty()) {
                    (None, true) => {}
                    (Some(got), false) => assert_eq!(got.as_bytes(), want.as_bytes(), "{name}.{key}"),
                    (got, _) => panic!("{name}.{key}: preset has {got:?}, table has {want:?}"),
                }
            }
            rows += 1;
        }
    }
    assert_eq!(rows, preset_names().count());
}

#[test]
fn parsed_values_agree_with_the_literals() {
    for name in preset_names() {
        let cfg = preset(name).unwrap();
        let lits = optimizer_literals(preset_source(name).unwrap());
        let o = &cfg.optimizer;
        let parsed = [Some(o.eta), o.s0, o.beta_s, o.beta_eta, o.lambda, o.sigma_sq];
        for (key, value) in KEYS.iter().zip(parsed) {
            let lit = lits.get(*key).map(|s| s.parse::<f64>().unwrap());
            assert_eq!(lit, value, "{name}.{key}");
        }
    }
}

#[test]
fn run_sizes() {
    for name in preset_names() {
        let cfg = preset(name).unwrap();
        let scaled = name.ends_with("-scaled");
        let t = &cfg.training;
        if name.starts_with("xor") {
            assert_eq!(cfg.model.hidden, 4);
            assert_eq!((t.epochs, t.seeds), if scaled { (5000, 5) } else { (50_000, 10) }, "{name}");
        } else {
            assert_eq!(cfg.task.lookback, 32);
            let want = if scaled { (128, 500, Some(512), 5) } else { (512, 2000, Some(5000), 20) };
            assert_eq!((cfg.model.hidden, t.epochs, t.batch_size, t.seeds), want, "{name}");
        }
    }
}
