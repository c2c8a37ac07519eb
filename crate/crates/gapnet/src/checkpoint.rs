//! Self-describing model checkpoints. A checkpoint carries everything
//! needed to rebuild the exact evaluation pipeline from the raw dataset
//! file: parameters, dimensions, the split spec, raw-space standardization
//! stats, model-space empirical means, the imputation method, and the seed
//! lineage.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cell::Cell;
use crate::dataset::{EpisodeSet, SplitSpec, VariableStats};
use crate::error::{Error, Result};
use crate::impute::ImputeKind;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeedLineage {
    /// Seed the rest derive from.
    pub master_seed: u64,
    pub restart: usize,
    /// Seed handed to the training loop (init/shuffle/dropout streams).
    pub train_seed: u64,
    /// Seed of the dataset split.
    pub split_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub cell: Cell,
    pub n_vars: usize,
    pub hidden_size: usize,
    pub t_len: usize,
    pub variable_names: Vec<String>,
    /// Raw-space per-variable stats used to standardize incoming data
    /// (ignored when `standardized` is false).
    pub stats: Vec<VariableStats>,
    /// Per-variable means in model input space (post-standardization when
    /// enabled); feeds imputation fallbacks and the decay cell.
    pub empirical_means: Vec<f64>,
    pub split: SplitSpec,
    pub standardized: bool,
    pub imputation: Option<ImputeKind>,
    pub seeds: SeedLineage,
    pub best_val_f1: Option<f64>,
}

impl Checkpoint {
    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        fs::write(path, json)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Checkpoint> {
        let text = fs::read_to_string(path.as_ref())?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: format!("checkpoint {}: {e}", path.as_ref().display()),
        })
    }

    /// Shape compatibility against a dataset.
    pub fn check_compat(&self, set: &EpisodeSet) -> Result<()> {
        if set.n_vars() != self.n_vars || set.t_len() != self.t_len {
            return Err(Error::Validation(format!(
                "checkpoint expects {} variables x {} steps, dataset is {} x {}",
                self.n_vars,
                self.t_len,
                set.n_vars(),
                set.t_len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::CellKind;
    use crate::rng::stream_rng;

    #[test]
    fn save_load_roundtrip() {
        let cell = Cell::init(CellKind::Grud, 3, 4, &mut stream_rng(1, 0));
        let ck = Checkpoint {
            cell: cell.clone(),
            n_vars: 3,
            hidden_size: 4,
            t_len: 5,
            variable_names: vec!["a".into(), "b".into(), "c".into()],
            stats: vec![VariableStats { mean: 1.0, std: 2.0 }; 3],
            empirical_means: vec![0.0; 3],
            split: SplitSpec::default(),
            standardized: true,
            imputation: None,
            seeds: SeedLineage { master_seed: 9, restart: 0, train_seed: 42, split_seed: 7 },
            best_val_f1: Some(0.75),
        };
        let f = tempfile::NamedTempFile::new().unwrap();
        ck.save(f.path()).unwrap();
        let back = Checkpoint::load(f.path()).unwrap();
        assert_eq!(back.cell, cell);
        assert_eq!(back.best_val_f1, Some(0.75));
        assert_eq!(back.seeds.train_seed, 42);
    }
}
