//! Optional training config file: flat `key = value` TOML whose keys mirror
//! the `train` flags (with underscores). Command-line flags take precedence.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    pub timestamp_column: Option<String>,
    pub label_column: Option<String>,
    pub features: Option<Vec<String>>,
    pub delimiter: Option<char>,
    pub normal_tokens: Option<Vec<String>>,
    pub attack_tokens: Option<Vec<String>>,
    pub lambda: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub mu0: Option<f64>,
    pub rho: Option<f64>,
    pub mu_max: Option<f64>,
    pub median_tol: Option<f64>,
    pub median_max_iter: Option<usize>,
    pub rank_tol: Option<f64>,
    pub threshold_mode: Option<String>,
    pub standardize: Option<bool>,
    pub baseline: Option<bool>,
    pub binary: Option<bool>,
}

impl TrainFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("bad config file {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_keys() {
        let cfg: TrainFile = toml::from_str(
            "tol = 1e-6\nmax_iter = 500\nthreshold_mode = \"projected_rows\"\nfeatures = [\"a\", \"b\"]\nstandardize = true\n",
        )
        .unwrap();
        assert_eq!(cfg.tol, Some(1e-6));
        assert_eq!(cfg.max_iter, Some(500));
        assert_eq!(cfg.features.as_deref(), Some(&["a".to_owned(), "b".to_owned()][..]));
        assert_eq!(cfg.standardize, Some(true));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<TrainFile>("tolerance = 1e-6\n").is_err());
    }
}
