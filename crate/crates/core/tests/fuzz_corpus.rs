//! Replays the checked-in fuzz seeds through the same checks the fuzz
//! targets make.

use std::fs;
use std::path::PathBuf;

use ctb::cells::CellVector;
use ctb::config::ExperimentConfig;
use ctb::record::{format_instance_record, format_matrix, parse_cell_listing, parse_instance_record, parse_matrix};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .filter(|(name, _)| name.starts_with("seed-"))
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn sized(data: &[u8]) -> (usize, &str) {
    let (&n, rest) = data.split_first().unwrap();
    (2 + n as usize % 19, std::str::from_utf8(rest).unwrap())
}

#[test]
fn config_seeds() {
    for (name, data) in seeds("config") {
        let config = ExperimentConfig::from_toml(std::str::from_utf8(&data).unwrap())
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = ExperimentConfig::from_toml(&config.to_toml().unwrap()).unwrap();
        assert_eq!(config, again, "{name}");
    }
}

#[test]
fn instance_record_seeds() {
    for (name, data) in seeds("instance_record") {
        let spec = parse_instance_record(std::str::from_utf8(&data).unwrap())
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = parse_instance_record(&format_instance_record(&spec).unwrap()).unwrap();
        assert_eq!(spec, again, "{name}");
    }
}

#[test]
fn matrix_seeds() {
    for (name, data) in seeds("matrix") {
        let parsed = parse_matrix(std::str::from_utf8(&data).unwrap());
        match parsed {
            Ok(m) => assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m, "{name}"),
            Err(_) => assert_eq!(name, "seed-overflow"),
        }
    }
}

#[test]
fn cell_listing_seeds() {
    for (name, data) in seeds("cell_listing") {
        let (n, text) = sized(&data);
        let parsed = parse_cell_listing(n, text);
        assert_eq!(parsed.is_ok(), !name.contains("bad"), "{name}: {parsed:?}");
    }
}

#[test]
fn cell_vector_seeds() {
    for (name, data) in seeds("cell_vector") {
        let (n, text) = sized(&data);
        match CellVector::parse(n, text) {
            Ok(v) => assert_eq!(CellVector::parse(n, &v.to_string()).unwrap(), v, "{name}"),
            Err(_) => assert!(name.contains("bad"), "{name}"),
        }
    }
}
