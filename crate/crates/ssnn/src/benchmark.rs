//! SISO benchmark: true system, signal generation, noise injection,
//! training of the three objectives, RMSE metrics, Monte Carlo runs, and
//! hyperparameter grid search. All quantities are double precision.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::lm::{train, LMConfig, TrainReport};
use crate::model::{simulate_prior, AugmentedModel};
use crate::objectives::{Dataset, Hyperparams, Mode, RegSet};
use crate::prior::LinearPrior;
use crate::signal::Signal;

/// The data-generating system: x(k+1) = a x + b u + Δ(x), y₀ = x, where
/// Δ is a local nonlinearity the linear prior cannot express.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SisoTruth {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub l: f64,
}

impl Default for SisoTruth {
    fn default() -> Self {
        Self { a: 0.8187, b: 0.1813, c: -0.3, l: 0.2 }
    }
}

impl SisoTruth {
    /// Δ(x) = 0.2 (exp(−x²/l²) − exp(−(x−c)²/l²)).
    pub fn delta(&self, x: f64) -> f64 {
        let l2 = self.l * self.l;
        0.2 * ((-x * x / l2).exp() - (-(x - self.c) * (x - self.c) / l2).exp())
    }

    pub fn step(&self, x: f64, u: f64) -> f64 {
        self.a * x + self.b * u + self.delta(x)
    }

    /// Linear part of the truth, used as the prior model.
    pub fn prior(&self) -> LinearPrior<f64> {
        LinearPrior::siso(self.a, self.b)
    }
}

/// Δ(x) of the default benchmark system.
pub fn delta(x: f64) -> f64 {
    SisoTruth::default().delta(x)
}

/// All benchmark constants, hyperparameters, seeds, and optimizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_train: usize,
    pub n_reg: usize,
    pub n_test: usize,
    pub n_val: usize,
    /// Output SNR in dB; `f64::INFINITY` disables the noise.
    pub snr_db: f64,
    pub n_n: usize,
    pub hyperparams: Hyperparams<f64>,
    pub seed_noise: u64,
    pub seed_reg: u64,
    pub seed_init: u64,
    pub lm: LMConfig<f64>,
    pub x0: f64,
    /// The shipped benchmark identifies a state nonlinearity only (g_θ ≡ 0).
    pub with_output_completion: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_train: 200,
            n_reg: 1000,
            n_test: 500,
            n_val: 500,
            snr_db: 40.0,
            n_n: 20,
            hyperparams: Hyperparams {
                gamma: 1e-3,
                gamma_x: 1e-4,
                gamma_y: 1e-4,
                sigma: 0.001f64.sqrt(),
                epsilon: 0.1,
            },
            seed_noise: 1,
            seed_reg: 2,
            seed_init: 100,
            lm: LMConfig::default(),
            x0: 0.0,
            with_output_completion: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_reg == 0 || self.n_test == 0 || self.n_val == 0 {
            return Err(Error::Config("dataset lengths must be positive".into()));
        }
        if self.n_n == 0 {
            return Err(Error::Config("n_n must be positive".into()));
        }
        self.hyperparams.validate()?;
        self.lm.validate()
    }

    pub fn x0_vec(&self) -> DVector<f64> {
        DVector::from_element(1, self.x0)
    }
}

/// Aggregated Monte Carlo metrics for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub method: String,
    pub rmse_train_mean: f64,
    pub rmse_train_std: f64,
    pub rmse_test_mean: f64,
    pub rmse_test_std: f64,
    pub runs: usize,
}

/// Which benchmark signal to generate. Time index starts at k = 1 in every
/// formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    /// sin(0.15k) − 0.2, length n_train.
    Train,
    /// 8 sin(0.2k) for the first half, then (8 + (2/L)k)·N(0,1) with k
    /// restarting at 1 for the second half; total length n_reg.
    Reg,
    /// sin(0.01k+0.5) + sin(0.02k−0.1) − 2 sin(0.03k+0.2), length n_test.
    Test,
    /// 1.08 sin(0.15k) − 0.2, length n_val.
    ValClassical,
    /// The training formula extended to n_val samples.
    ValWpgnn,
}

impl SignalKind {
    pub fn name(self) -> &'static str {
        match self {
            SignalKind::Train => "train",
            SignalKind::Reg => "reg",
            SignalKind::Test => "test",
            SignalKind::ValClassical => "val_classical",
            SignalKind::ValWpgnn => "val_wpgnn",
        }
    }
}

pub fn gen_signal(kind: SignalKind, cfg: &ExperimentConfig) -> Result<Signal<f64>> {
    cfg.validate()?;
    let series: Vec<f64> = match kind {
        SignalKind::Train => (1..=cfg.n_train)
            .map(|k| (0.15 * k as f64).sin() - 0.2)
            .collect(),
        SignalKind::Test => (1..=cfg.n_test)
            .map(|k| {
                let k = k as f64;
                (0.01 * k + 0.5).sin() + (0.02 * k - 0.1).sin() - 2.0 * (0.03 * k + 0.2).sin()
            })
            .collect(),
        SignalKind::ValClassical => (1..=cfg.n_val)
            .map(|k| 1.08 * (0.15 * k as f64).sin() - 0.2)
            .collect(),
        SignalKind::ValWpgnn => (1..=cfg.n_val)
            .map(|k| (0.15 * k as f64).sin() - 0.2)
            .collect(),
        SignalKind::Reg => {
            let first = cfg.n_reg / 2;
            let second = cfg.n_reg - first;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed_reg);
            let mut s: Vec<f64> = (1..=first).map(|k| 8.0 * (0.2 * k as f64).sin()).collect();
            s.extend((1..=second).map(|k| {
                let envelope = 8.0 + (2.0 / second as f64) * k as f64;
                let n: f64 = StandardNormal.sample(&mut rng);
                envelope * n
            }));
            s
        }
    };
    Signal::from_scalars(series)
}

/// Simulate the true system on `u` and return the (noisy) training records.
/// Noise is i.i.d. Gaussian with variance mean(y₀²) / 10^(snr_db/10).
pub fn simulate_truth(
    u: &Signal<f64>,
    x0: f64,
    snr_db: f64,
    rng: &mut impl Rng,
) -> Result<Dataset<f64>> {
    let truth = SisoTruth::default();
    let us = u.scalars()?;
    let mut x = x0;
    let mut y0 = Vec::with_capacity(us.len());
    for &uk in &us {
        y0.push(x);
        x = truth.step(x, uk);
    }
    let y = if snr_db.is_finite() {
        let power = y0.iter().map(|v| v * v).sum::<f64>() / y0.len() as f64;
        let noise_std = (power / 10f64.powf(snr_db / 10.0)).sqrt();
        y0.iter()
            .map(|v| {
                let n: f64 = StandardNormal.sample(rng);
                v + noise_std * n
            })
            .collect()
    } else {
        y0
    };
    Dataset::new(u.clone(), Signal::from_scalars(y)?)
}

/// Root mean squared error between two equal-length scalar signals.
pub fn rmse(y: &Signal<f64>, y_hat: &Signal<f64>) -> Result<f64> {
    if y.len() != y_hat.len() || y.dim() != y_hat.dim() {
        return Err(Error::Dimension("rmse requires equal-shape signals".into()));
    }
    let mut acc = 0.0;
    for k in 0..y.len() {
        acc += (y.get(k) - y_hat.get(k)).norm_squared();
    }
    Ok((acc / y.len() as f64).sqrt())
}

/// Every dataset one full experiment consumes, generated reproducibly from
/// the config seeds. Validation outputs are noise-free.
#[derive(Debug, Clone)]
pub struct BenchmarkData {
    pub train: Dataset<f64>,
    pub reg: RegSet<f64>,
    pub test: Dataset<f64>,
    pub val_classical: Dataset<f64>,
    pub val_wpgnn: Dataset<f64>,
}

pub fn build_datasets(cfg: &ExperimentConfig) -> Result<BenchmarkData> {
    cfg.validate()?;
    let truth = SisoTruth::default();
    let prior = truth.prior();
    let x0 = cfg.x0_vec();

    let u_train = gen_signal(SignalKind::Train, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed_noise);
    let train = simulate_truth(&u_train, cfg.x0, cfg.snr_db, &mut rng)?;

    let u_reg = gen_signal(SignalKind::Reg, cfg)?;
    let (_, y_tilde_bar) = simulate_prior(&prior, &u_reg, &x0)?;
    let reg = RegSet::new(u_reg, Some(y_tilde_bar))?;

    let u_test = gen_signal(SignalKind::Test, cfg)?;
    let mut rng_test = ChaCha8Rng::seed_from_u64(cfg.seed_noise.wrapping_add(1));
    let test = simulate_truth(&u_test, cfg.x0, cfg.snr_db, &mut rng_test)?;

    let u_valc = gen_signal(SignalKind::ValClassical, cfg)?;
    let val_classical = simulate_truth(&u_valc, cfg.x0, f64::INFINITY, &mut rng)?;
    let u_valw = gen_signal(SignalKind::ValWpgnn, cfg)?;
    let val_wpgnn = simulate_truth(&u_valw, cfg.x0, f64::INFINITY, &mut rng)?;

    Ok(BenchmarkData { train, reg, test, val_classical, val_wpgnn })
}

/// One trained model plus its metrics.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: AugmentedModel<f64, LinearPrior<f64>>,
    pub report: TrainReport<f64>,
    pub rmse_train: f64,
    pub rmse_test: f64,
    pub init_seed: u64,
}

fn train_on(
    method: Mode,
    cfg: &ExperimentConfig,
    data: &BenchmarkData,
    hp: &Hyperparams<f64>,
    init_seed: u64,
) -> Result<(AugmentedModel<f64, LinearPrior<f64>>, TrainReport<f64>)> {
    let prior = SisoTruth::default().prior();
    let m0 = AugmentedModel::init(prior, cfg.n_n, init_seed, cfg.with_output_completion)?;
    let reg = match method {
        Mode::Baseline => None,
        _ => Some(&data.reg),
    };
    train(method, &m0, &data.train, reg, hp, &cfg.lm, &cfg.x0_vec())
}

/// Train one method with one init seed and score it on the training and
/// test datasets.
pub fn run_experiment(method: Mode, cfg: &ExperimentConfig, init_seed: u64) -> Result<RunOutcome> {
    let data = build_datasets(cfg)?;
    run_experiment_on(method, cfg, &data, init_seed)
}

/// Same as [`run_experiment`] but reuses prebuilt datasets (Monte Carlo and
/// grid search share them across runs).
pub fn run_experiment_on(
    method: Mode,
    cfg: &ExperimentConfig,
    data: &BenchmarkData,
    init_seed: u64,
) -> Result<RunOutcome> {
    let (model, report) = train_on(method, cfg, data, &cfg.hyperparams, init_seed)?;
    let x0 = cfg.x0_vec();
    let (_, y_hat_train) = model.simulate(&data.train.u, &x0)?;
    let (_, y_hat_test) = model.simulate(&data.test.u, &x0)?;
    Ok(RunOutcome {
        rmse_train: rmse(&data.train.y, &y_hat_train)?,
        rmse_test: rmse(&data.test.y, &y_hat_test)?,
        model,
        report,
        init_seed,
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

/// Monte Carlo outcome: the summary row plus the individual runs.
#[derive(Debug, Clone)]
pub struct MonteCarloOutcome {
    pub row: MetricsRow,
    pub runs: Vec<RunOutcome>,
    /// Init seeds of runs that diverged and were excluded.
    pub diverged_seeds: Vec<u64>,
}

/// Repeat one method over `n_runs` random completion initializations. The
/// training noise realization stays fixed (run variability comes from the
/// initial parameters); the init seed is `cfg.seed_init + run index`.
pub fn monte_carlo(method: Mode, cfg: &ExperimentConfig, n_runs: usize) -> Result<MonteCarloOutcome> {
    if n_runs == 0 {
        return Err(Error::Config("n_runs must be >= 1".into()));
    }
    let data = build_datasets(cfg)?;
    let mut runs = Vec::new();
    let mut diverged = Vec::new();
    for i in 0..n_runs {
        let seed = cfg.seed_init + i as u64;
        let outcome = run_experiment_on(method, cfg, &data, seed)?;
        if outcome.report.termination == crate::lm::TerminationReason::Diverged {
            diverged.push(seed);
        } else {
            runs.push(outcome);
        }
    }
    if runs.is_empty() {
        return Err(Error::Config("all Monte Carlo runs diverged".into()));
    }
    let (train_mean, train_std) = mean_std(&runs.iter().map(|r| r.rmse_train).collect::<Vec<_>>());
    let (test_mean, test_std) = mean_std(&runs.iter().map(|r| r.rmse_test).collect::<Vec<_>>());
    Ok(MonteCarloOutcome {
        row: MetricsRow {
            method: method.name().to_string(),
            rmse_train_mean: train_mean,
            rmse_train_std: train_std,
            rmse_test_mean: test_mean,
            rmse_test_std: test_std,
            runs: runs.len(),
        },
        runs,
        diverged_seeds: diverged,
    })
}

/// Candidate grids for the hyperparameter search.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrids {
    /// Classical trade-off candidates.
    pub gamma: Vec<f64>,
    /// Shared γ_x = γ_y candidates for the weighted objective.
    pub gamma_xy: Vec<f64>,
    /// Kernel width squared candidates.
    pub sigma2: Vec<f64>,
    /// Weight floor candidates.
    pub epsilon: Vec<f64>,
}

impl Default for HyperGrids {
    fn default() -> Self {
        Self {
            gamma: vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
            gamma_xy: vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2],
            sigma2: vec![1e-4, 1e-3, 1e-2],
            epsilon: vec![0.01, 0.1, 1.0],
        }
    }
}

/// Pick the grid point minimizing validation RMSE of the trained model on
/// the method-specific validation signal (noise-free truth outputs).
pub fn grid_search(method: Mode, grids: &HyperGrids, cfg: &ExperimentConfig) -> Result<Hyperparams<f64>> {
    let data = build_datasets(cfg)?;
    let x0 = cfg.x0_vec();
    let val = match method {
        Mode::Wpgnn => &data.val_wpgnn,
        _ => &data.val_classical,
    };

    let candidates: Vec<Hyperparams<f64>> = match method {
        Mode::Baseline => vec![cfg.hyperparams],
        Mode::Classical => {
            if grids.gamma.is_empty() {
                return Err(Error::Config("empty gamma grid".into()));
            }
            grids
                .gamma
                .iter()
                .map(|&g| Hyperparams { gamma: g, ..cfg.hyperparams })
                .collect()
        }
        Mode::Wpgnn => {
            if grids.gamma_xy.is_empty() || grids.sigma2.is_empty() || grids.epsilon.is_empty() {
                return Err(Error::Config("empty wpgnn grid".into()));
            }
            let mut pts = Vec::new();
            for &gxy in &grids.gamma_xy {
                for &s2 in &grids.sigma2 {
                    for &eps in &grids.epsilon {
                        pts.push(Hyperparams {
                            gamma_x: gxy,
                            gamma_y: gxy,
                            sigma: s2.sqrt(),
                            epsilon: eps,
                            ..cfg.hyperparams
                        });
                    }
                }
            }
            pts
        }
    };

    let mut best: Option<(Hyperparams<f64>, f64)> = None;
    for hp in candidates {
        let (model, report) = train_on(method, cfg, &data, &hp, cfg.seed_init)?;
        if report.termination == crate::lm::TerminationReason::Diverged {
            continue;
        }
        let score = match model.simulate(&val.u, &x0) {
            Ok((_, y_hat)) => rmse(&val.y, &y_hat)?,
            Err(Error::Diverged { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if best.as_ref().map_or(true, |(_, s)| score < *s) {
            best = Some((hp, score));
        }
    }
    best.map(|(hp, _)| hp)
        .ok_or_else(|| Error::Config("every grid point diverged".into()))
}
