//! Structured-text configuration files. `.json` files are read as JSON,
//! everything else as TOML.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{fs, Error, Result};

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    if is_json(path) {
        serde_json::from_str(&text).map_err(|e| Error::format(path, e))
    } else {
        toml::from_str(&text).map_err(|e| Error::format(path, e))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn save<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = if is_json(path) {
        to_json(value)
    } else {
        toml::to_string_pretty(value).map_err(|e| Error::format(path, e))?
    };
    fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use breathscreen_core::evaluation::Experiment;
    use breathscreen_core::hpo::SearchSpace;

    #[test]
    fn experiment_round_trips_through_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let e = Experiment::default();
        for name in ["e.toml", "e.json"] {
            let p = dir.path().join(name);
            save(&e, &p).unwrap();
            assert_eq!(load::<Experiment>(&p).unwrap(), e);
        }
    }

    #[test]
    fn partial_space_fills_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("space.toml");
        std::fs::write(&p, "hidden = [4]\nlayers = [1]\nfamily = [\"BiLSTM\"]\n[learning_rate]\nkind = \"choices\"\nvalues = [0.01]\n").unwrap();
        let s: SearchSpace = load(&p).unwrap();
        assert_eq!(s.hidden, vec![4]);
        assert_eq!(s.head, SearchSpace::default().head);
    }
}
