//! Experiment configuration: the JSON schema, validation, and the model and
//! policy objects derived from it.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use mmsbm::error::{Error, Result};
use mmsbm::estimation::ShrinkPolicy;
use mmsbm::model::ModelSpec;

/// Blockmodel parameters as plain JSON data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Symmetric `k x k` connectivity matrix with entries in `[0, 1]`.
    pub b: Vec<Vec<f64>>,
    /// Dirichlet concentration, length `k`, all entries positive.
    pub alpha: Vec<f64>,
}

/// One experiment: a model, a node-count grid, and sweep bookkeeping.
///
/// The on-disk form is JSON:
///
/// ```json
/// {
///   "model": { "b": [[0.9, 0.2], [0.2, 0.9]], "alpha": [1.0, 1.0] },
///   "n_grid": [100, 500],
///   "replicates": 3,
///   "policies": ["none", "fixed:0.9", "rate:3.295051144911304"],
///   "seed": 7,
///   "out": "sweep.csv"
/// }
/// ```
///
/// Replicate `r` of every grid point derives its random stream from
/// `seed + r`; within a grid point every policy sees the same graph,
/// isolating the policy effect.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Model parameters; validated on load.
    pub model: ModelConfig,
    /// Strictly increasing node counts.
    pub n_grid: Vec<usize>,
    /// Replicates per grid point, at least 1.
    pub replicates: usize,
    /// Shrink policies in the textual form `none`, `fixed:<eta>`, or
    /// `rate:<a>`.
    pub policies: Vec<String>,
    /// Base seed for the replicate streams.
    pub seed: u64,
    /// Default output path for commands that write a single file.
    #[serde(default)]
    pub out: Option<String>,
}

impl ExperimentConfig {
    /// Reads and validates a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let file = BufReader::new(File::open(path)?);
        let config: ExperimentConfig = serde_json::from_reader(file)?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every structural invariant the schema promises.
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidParameter(
                "config field 'replicates' must be at least 1".to_string(),
            ));
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidParameter(
                "config field 'n_grid' must not be empty".to_string(),
            ));
        }
        for pair in self.n_grid.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidParameter(format!(
                    "config field 'n_grid' must be strictly increasing, got {} after {}",
                    pair[1], pair[0]
                )));
            }
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidParameter(
                "config field 'policies' must not be empty".to_string(),
            ));
        }
        self.parsed_policies()?;
        self.model_spec()?;
        Ok(())
    }

    /// Builds the validated model specification.
    pub fn model_spec(&self) -> Result<ModelSpec<f64>> {
        let k = self.model.b.len();
        let mut b = Array2::<f64>::zeros((k, k));
        for (i, row) in self.model.b.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "config field 'model.b' row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            for (j, &value) in row.iter().enumerate() {
                b[(i, j)] = value;
            }
        }
        ModelSpec::new(b, Array1::from_vec(self.model.alpha.clone()))
    }

    /// Parses the policy strings in config order.
    pub fn parsed_policies(&self) -> Result<Vec<ShrinkPolicy<f64>>> {
        self.policies.iter().map(|s| s.parse()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn valid() -> ExperimentConfig {
        ExperimentConfig {
            model: ModelConfig {
                b: vec![vec![0.9, 0.2], vec![0.2, 0.9]],
                alpha: vec![1.0, 1.0],
            },
            n_grid: vec![50, 100],
            replicates: 2,
            policies: vec!["none".to_string(), "fixed:0.9".to_string()],
            seed: 7,
            out: None,
        }
    }

    #[test]
    fn valid_config_passes_and_derives_objects() {
        let config = valid();
        config.validate().unwrap();
        let spec = config.model_spec().unwrap();
        assert_eq!(spec.k(), 2);
        let policies = config.parsed_policies().unwrap();
        assert_eq!(policies.len(), 2);
    }

    #[test]
    fn structural_violations_are_rejected() {
        let mut c = valid();
        c.replicates = 0;
        assert!(c.validate().is_err());

        let mut c = valid();
        c.n_grid = vec![100, 100];
        assert!(c.validate().is_err());

        let mut c = valid();
        c.n_grid.clear();
        assert!(c.validate().is_err());

        let mut c = valid();
        c.policies = vec!["shrink-a-lot".to_string()];
        assert!(c.validate().is_err());

        let mut c = valid();
        c.policies.clear();
        assert!(c.validate().is_err());

        let mut c = valid();
        c.model.b[1] = vec![0.2];
        assert!(c.validate().is_err());

        let mut c = valid();
        c.model.b[0][1] = 0.4; // asymmetric
        assert!(c.validate().is_err());

        let mut c = valid();
        c.model.alpha = vec![1.0, -1.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_round_trips() {
        let config = valid();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(back.n_grid, config.n_grid);
        assert_eq!(back.policies, config.policies);
    }
}
