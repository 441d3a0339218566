use std::path::PathBuf;

use qcoupler::config::{parse_device, RunConfig};
use qcoupler::noise::parse_rate_table;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn run_config_seeds() {
    let outcomes: Vec<bool> = seeds("run_config")
        .iter()
        .map(|(_, t)| {
            RunConfig::from_json_str(t)
                .map(|c| c.validate().is_ok())
                .unwrap_or(false)
        })
        .collect();
    assert!(outcomes.contains(&true) && outcomes.contains(&false));
}

#[test]
fn rate_table_seeds() {
    let ok = seeds("rate_table")
        .iter()
        .filter(|(_, t)| parse_rate_table(t).is_ok())
        .count();
    assert_eq!(ok, 1);
}

#[test]
fn device_seeds() {
    for (path, text) in seeds("device") {
        let valid = parse_device(&text).and_then(|d| d.validate()).is_ok();
        let name = path.file_name().unwrap().to_string_lossy();
        assert_eq!(valid, !name.starts_with("negative"), "{name}");
    }
}
