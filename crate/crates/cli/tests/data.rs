//! The shipped data/ files are the bundled synthetic dataset written out.

use std::path::PathBuf;

use nashmsy::config::RunConfig;
use nashmsy::dynamics::synthetic::{
    bundled_catalog, bundled_history, bundled_observations, bundled_prices,
};
use nashmsy::io;
use nashmsy::types::OutputKind;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

const MODEL_SEED: u64 = 7;

#[test]
fn data_files_match_the_generators() {
    let years = RunConfig::default().run.historical_years();
    assert_eq!(
        io::load_catalog(&data("catalog.csv")).unwrap(),
        bundled_catalog()
    );
    assert_eq!(
        io::load_history(&data("history.csv"), years).unwrap(),
        bundled_history()
    );
    let (y, s) = bundled_observations(MODEL_SEED).unwrap();
    assert_eq!(
        io::load_observations(&data("yield.csv"), OutputKind::Yield, years).unwrap(),
        y
    );
    assert_eq!(
        io::load_observations(&data("ssb.csv"), OutputKind::Ssb, years).unwrap(),
        s
    );
    assert_eq!(
        io::load_prices(&data("prices.csv")).unwrap(),
        bundled_prices(MODEL_SEED)
    );
}

#[test]
fn shipped_configs_validate() {
    for name in ["pipeline.toml", "pipeline-reduced.toml"] {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("../..")
            .join(name);
        let cfg = RunConfig::from_file(&path).unwrap();
        assert!(
            cfg.run.round_sizes[1..]
                .iter()
                .all(|r| *r <= cfg.run.posterior_draws),
            "{name}"
        );
    }
}
