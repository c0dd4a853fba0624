use std::path::Path;

use serde::Deserialize;
use ssnn::benchmark::ExperimentConfig;

use crate::error::{CliError, Result};

/// Optional overrides read from a flat TOML file; every key mirrors a field
/// of [`ExperimentConfig`] (hyperparameters and LM settings are flattened
/// into top-level keys). Unknown keys are rejected to catch typos.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n_train: Option<usize>,
    pub n_reg: Option<usize>,
    pub n_test: Option<usize>,
    pub n_val: Option<usize>,
    pub snr_db: Option<f64>,
    pub n_n: Option<usize>,
    pub gamma: Option<f64>,
    pub gamma_x: Option<f64>,
    pub gamma_y: Option<f64>,
    pub sigma: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed_noise: Option<u64>,
    pub seed_reg: Option<u64>,
    pub seed_init: Option<u64>,
    pub lambda0: Option<f64>,
    pub lambda_up: Option<f64>,
    pub lambda_down: Option<f64>,
    pub max_iters: Option<usize>,
    pub cost_tol: Option<f64>,
    pub step_tol: Option<f64>,
    pub max_lambda: Option<f64>,
    pub x0: Option<f64>,
    pub with_output_completion: Option<bool>,
    /// Monte Carlo run count (CLI-level; the paper uses 10).
    pub n_runs: Option<usize>,
}

pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub n_runs: usize,
}

/// Default configuration with the file's overrides (if any) and the --seed
/// flag applied on top.
pub fn load(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    let fc = match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            toml::from_str::<FileConfig>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => FileConfig::default(),
    };
    let mut cfg = ExperimentConfig::default();
    macro_rules! apply {
        ($($field:ident => $slot:expr),* $(,)?) => {
            $(if let Some(v) = fc.$field { $slot = v; })*
        };
    }
    apply! {
        n_train => cfg.n_train,
        n_reg => cfg.n_reg,
        n_test => cfg.n_test,
        n_val => cfg.n_val,
        snr_db => cfg.snr_db,
        n_n => cfg.n_n,
        gamma => cfg.hyperparams.gamma,
        gamma_x => cfg.hyperparams.gamma_x,
        gamma_y => cfg.hyperparams.gamma_y,
        sigma => cfg.hyperparams.sigma,
        epsilon => cfg.hyperparams.epsilon,
        seed_noise => cfg.seed_noise,
        seed_reg => cfg.seed_reg,
        seed_init => cfg.seed_init,
        lambda0 => cfg.lm.lambda0,
        lambda_up => cfg.lm.lambda_up,
        lambda_down => cfg.lm.lambda_down,
        max_iters => cfg.lm.max_iters,
        cost_tol => cfg.lm.cost_tol,
        step_tol => cfg.lm.step_tol,
        max_lambda => cfg.lm.max_lambda,
        x0 => cfg.x0,
        with_output_completion => cfg.with_output_completion,
    }
    if let Some(s) = seed {
        cfg.seed_init = s;
    }
    cfg.validate()?;
    Ok(RunConfig {
        experiment: cfg,
        n_runs: fc.n_runs.unwrap_or(10),
    })
}
