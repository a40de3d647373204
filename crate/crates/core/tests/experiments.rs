use cxpath::experiments::{run, write_outputs, CsvHeader, ExperimentConfig, ExperimentKind};

fn converge_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_kind(ExperimentKind::Converge);
    cfg.problems = vec!["dahlquist".into()];
    cfg.methods = vec!["euler-1".into(), "complex-3-linear".into()];
    cfg.seed = 3;
    cfg
}

#[test]
fn every_csv_carries_the_config_hash() {
    let cfg = converge_config();
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(&cfg, &run(&cfg).unwrap(), dir.path()).unwrap();
    let header = CsvHeader::for_config(&cfg).line();
    let csvs: Vec<_> = written.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")).collect();
    assert!(csvs.len() >= 2);
    for p in csvs {
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text.lines().next(), Some(header.as_str()), "{}", p.display());
    }
}

#[test]
fn hash_tracks_config_changes() {
    let a = converge_config();
    let mut b = a.clone();
    assert_eq!(a.hash(), b.hash());
    b.seed += 1;
    assert_ne!(a.hash(), b.hash());
    let back = ExperimentConfig::from_json(&a.to_json().unwrap()).unwrap();
    assert_eq!(back.hash(), a.hash());
}

#[test]
fn repeated_runs_write_identical_files() {
    let cfg = converge_config();
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let w1 = write_outputs(&cfg, &run(&cfg).unwrap(), d1.path()).unwrap();
    let w2 = write_outputs(&cfg, &run(&cfg).unwrap(), d2.path()).unwrap();
    assert_eq!(w1.len(), w2.len());
    for (a, b) in w1.iter().zip(&w2) {
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), "{}", a.display());
    }
}
