//! Every shipped experiment config parses and validates.

use std::fs;
use std::path::Path;

use xlod::cli::parse_experiment_config;
use xlod::protocols::{DataSource, ExperimentKind};

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let spec = parse_experiment_config(&path, &[])
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let name = path.file_name().unwrap().to_string_lossy();
        match spec.data {
            DataSource::Synthetic(_) => assert!(name.starts_with("desk_"), "{name}"),
            DataSource::Olid { .. } => {
                assert!(name.starts_with("olid_"), "{name}");
                assert_eq!(spec.training.epochs, 10);
                assert_eq!(spec.training.batch_size, 32);
            }
        }
        if spec.kind == ExperimentKind::FewShotCurve && name.starts_with("olid_") {
            assert_eq!(spec.fractions.as_ref().unwrap().len(), 20);
        }
        seen += 1;
    }
    assert_eq!(seen, 6);
}
