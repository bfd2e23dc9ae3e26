//! Locations of the data files shipped with the crate.

use std::path::PathBuf;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn library_manifest() -> PathBuf {
    data_dir().join("library/manifest.json")
}

pub fn inventory() -> PathBuf {
    data_dir().join("concepts/inventory.json")
}

pub fn lexicon() -> PathBuf {
    data_dir().join("concepts/lexicon.json")
}

/// Phrase corpus with expected concept labels.
pub fn corpus() -> PathBuf {
    data_dir().join("concepts/corpus.json")
}

pub fn generic_robot() -> PathBuf {
    data_dir().join("robots/generic.json")
}
