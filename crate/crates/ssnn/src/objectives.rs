//! The three training objectives, the kernel weight vector, and stacked
//! residual assembly for least-squares optimization.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{simulate_prior, AugmentedModel};
use crate::prior::PriorModel;
use crate::scalar::{real, Scalar};
use crate::signal::Signal;

/// Objective selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Simulation-error cost only.
    Baseline,
    /// Simulation error plus output-level regularization towards the prior.
    Classical,
    /// Simulation error plus kernel-weighted function-level regularization.
    Wpgnn,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Classical => "classical",
            Mode::Wpgnn => "wpgnn",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "classical" => Ok(Mode::Classical),
            "wpgnn" => Ok(Mode::Wpgnn),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Input/output training records.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    pub u: Signal<T>,
    pub y: Signal<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(u: Signal<T>, y: Signal<T>) -> Result<Self> {
        if u.len() != y.len() {
            return Err(Error::Dimension(format!(
                "input length {} != output length {}",
                u.len(),
                y.len()
            )));
        }
        Ok(Self { u, y })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Regularization records: a surrogate input sequence, never applied to the
/// true system, plus (for the classical objective) the prior's outputs on it.
#[derive(Debug, Clone)]
pub struct RegSet<T> {
    pub u_bar: Signal<T>,
    /// Prior-model outputs under `u_bar`; required only by the classical
    /// objective and computed on the fly when absent.
    pub y_tilde_bar: Option<Signal<T>>,
}

impl<T: Scalar> RegSet<T> {
    pub fn new(u_bar: Signal<T>, y_tilde_bar: Option<Signal<T>>) -> Result<Self> {
        if let Some(y) = &y_tilde_bar {
            if y.len() != u_bar.len() {
                return Err(Error::Dimension(
                    "prior outputs must match the regularization input length".into(),
                ));
            }
        }
        Ok(Self { u_bar, y_tilde_bar })
    }

    pub fn len(&self) -> usize {
        self.u_bar.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Objective hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams<T> {
    /// Classical trade-off between data fit and output-level regularization.
    pub gamma: T,
    /// Weighted state-completion penalty.
    pub gamma_x: T,
    /// Weighted output-completion penalty.
    pub gamma_y: T,
    /// Kernel width of the density estimate.
    pub sigma: T,
    /// Weight floor constant; caps the weights at 1/ε.
    pub epsilon: T,
}

impl<T: Scalar> Hyperparams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.gamma < T::zero() {
            return Err(Error::Config("gamma must be >= 0".into()));
        }
        if self.gamma_x < T::zero() || self.gamma_y < T::zero() {
            return Err(Error::Config("gamma_x, gamma_y must be >= 0".into()));
        }
        if !(self.sigma > T::zero()) {
            return Err(Error::Config("sigma must be > 0".into()));
        }
        if !(self.epsilon > T::zero()) {
            return Err(Error::Config("epsilon must be > 0".into()));
        }
        Ok(())
    }
}

/// Per-sample regularization weights, one for each reg-set step.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    w: Vec<T>,
}

impl<T: Scalar> WeightVector<T> {
    /// Wrap externally supplied weights (used by the reduction tests and
    /// the classical-equivalence checks).
    pub fn from_values(w: Vec<T>) -> Self {
        Self { w }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn get(&self, j: usize) -> T {
        self.w[j]
    }

    pub fn values(&self) -> &[T] {
        &self.w
    }
}

/// Concatenated state-input pairs z = (x, u) along a trajectory.
pub fn state_input_pairs<T: Scalar>(x_seq: &Signal<T>, u_seq: &Signal<T>) -> Vec<DVector<T>> {
    x_seq
        .iter()
        .zip(u_seq.iter())
        .map(|(x, u)| {
            let mut z = DVector::zeros(x.len() + u.len());
            z.rows_mut(0, x.len()).copy_from(x);
            z.rows_mut(x.len(), u.len()).copy_from(u);
            z
        })
        .collect()
}

/// Inverse kernel-density weights over the regularization pairs:
/// w_j = 1 / (Σ_k exp(−‖ẑ_k − z̄_j‖² / (2σ²)) + ε).
pub fn kernel_weights<T: Scalar>(
    train_pairs: &[DVector<T>],
    reg_pairs: &[DVector<T>],
    sigma: T,
    epsilon: T,
) -> Result<WeightVector<T>> {
    if !(sigma > T::zero()) || !(epsilon > T::zero()) {
        return Err(Error::Config("sigma and epsilon must be > 0".into()));
    }
    let dim = match train_pairs.first().or(reg_pairs.first()) {
        Some(p) => p.len(),
        None => return Ok(WeightVector { w: Vec::new() }),
    };
    if train_pairs
        .iter()
        .chain(reg_pairs.iter())
        .any(|p| p.len() != dim)
    {
        return Err(Error::Dimension(
            "all state-input pairs must share one dimension".into(),
        ));
    }
    let two_sigma2 = real::<T>(2.0) * sigma * sigma;
    let w = reg_pairs
        .iter()
        .map(|zj| {
            let mut density = T::zero();
            for zk in train_pairs {
                let d2 = (zk - zj).norm_squared();
                density += (-d2 / two_sigma2).exp();
            }
            T::one() / (density + epsilon)
        })
        .collect();
    Ok(WeightVector { w })
}

/// Weights for the current model: both trajectories are re-simulated from
/// the model at its present parameters.
pub fn compute_weights<T: Scalar, P: PriorModel<T>>(
    m: &AugmentedModel<T, P>,
    d: &Dataset<T>,
    reg: &RegSet<T>,
    hp: &Hyperparams<T>,
    x0: &DVector<T>,
) -> Result<WeightVector<T>> {
    let (x_train, _) = m.simulate(&d.u, x0)?;
    let (x_reg, _) = m.simulate(&reg.u_bar, x0)?;
    let train_pairs = state_input_pairs(&x_train, &d.u);
    let reg_pairs = state_input_pairs(&x_reg, &reg.u_bar);
    kernel_weights(&train_pairs, &reg_pairs, hp.sigma, hp.epsilon)
}

/// Mean squared simulation error over the training data. Divergence maps to
/// an infinite sentinel so a damping loop can reject the step.
pub fn v_data<T: Scalar, P: PriorModel<T>>(
    m: &AugmentedModel<T, P>,
    d: &Dataset<T>,
    x0: &DVector<T>,
) -> T {
    let (_, y_hat) = match m.simulate(&d.u, x0) {
        Ok(sim) => sim,
        Err(_) => return T::infinite(),
    };
    let n = real::<T>(d.len() as f64);
    let mut acc = T::zero();
    for k in 0..d.len() {
        acc += (d.y.get(k) - y_hat.get(k)).norm_squared();
    }
    acc / n
}

/// Output-level physics penalty of the classical objective: mean squared
/// deviation between prior and augmented outputs on the regularization input.
pub fn v_phy_classical<T: Scalar, P: PriorModel<T>>(
    m: &AugmentedModel<T, P>,
    reg: &RegSet<T>,
    x0: &DVector<T>,
) -> T {
    let y_tilde = match &reg.y_tilde_bar {
        Some(y) => y.clone(),
        None => match simulate_prior(m.prior(), &reg.u_bar, x0) {
            Ok((_, y)) => y,
            Err(_) => return T::infinite(),
        },
    };
    let (_, y_hat) = match m.simulate(&reg.u_bar, x0) {
        Ok(sim) => sim,
        Err(_) => return T::infinite(),
    };
    let n_bar = real::<T>(reg.len() as f64);
    let mut acc = T::zero();
    for k in 0..reg.len() {
        acc += (y_tilde.get(k) - y_hat.get(k)).norm_squared();
    }
    acc / n_bar
}

/// Weighted function-level penalty: (1/N̄) Σ_j w_j (γ_x ‖f_θ‖² + γ_y ‖g_θ‖²)
/// evaluated along the model's own trajectory under the regularization input.
pub fn v_reg_weighted<T: Scalar, P: PriorModel<T>>(
    m: &AugmentedModel<T, P>,
    reg: &RegSet<T>,
    w: &WeightVector<T>,
    hp: &Hyperparams<T>,
    x0: &DVector<T>,
) -> Result<T> {
    if w.len() != reg.len() {
        return Err(Error::Dimension(format!(
            "weight vector length {} != regularization length {}",
            w.len(),
            reg.len()
        )));
    }
    let (x_reg, _) = match m.simulate(&reg.u_bar, x0) {
        Ok(sim) => sim,
        Err(_) => return Ok(T::infinite()),
    };
    let n_bar = real::<T>(reg.len() as f64);
    let mut acc = T::zero();
    for j in 0..reg.len() {
        let x = x_reg.get(j);
        let u = reg.u_bar.get(j);
        let ex = m.f_net().forward(x, u)?.norm_squared();
        let ey = match m.g_net() {
            Some(g) => g.forward(x, u)?.norm_squared(),
            None => T::zero(),
        };
        acc += w.get(j) * (hp.gamma_x * ex + hp.gamma_y * ey);
    }
    Ok(acc / n_bar)
}

fn require_reg<'a, T>(mode: Mode, reg: Option<&'a RegSet<T>>) -> Result<&'a RegSet<T>> {
    reg.ok_or_else(|| {
        Error::Config(format!(
            "objective '{}' requires a regularization set",
            mode.name()
        ))
    })
}

/// Total cost of the selected objective. For `Wpgnn`, `weights` overrides
/// the kernel weights; when `None` they are recomputed from the CURRENT
/// model's trajectories.
pub fn total_cost<T: Scalar, P: PriorModel<T>>(
    mode: Mode,
    m: &AugmentedModel<T, P>,
    d: &Dataset<T>,
    reg: Option<&RegSet<T>>,
    hp: &Hyperparams<T>,
    weights: Option<&WeightVector<T>>,
    x0: &DVector<T>,
) -> Result<T> {
    hp.validate()?;
    match mode {
        Mode::Baseline => Ok(v_data(m, d, x0)),
        Mode::Classical => {
            let reg = require_reg(mode, reg)?;
            Ok(v_data(m, d, x0) + hp.gamma * v_phy_classical(m, reg, x0))
        }
        Mode::Wpgnn => {
            let reg = require_reg(mode, reg)?;
            let computed;
            let w = match weights {
                Some(w) => w,
                None => {
                    computed = match compute_weights(m, d, reg, hp, x0) {
                        Ok(w) => w,
                        Err(Error::Diverged { .. }) => return Ok(T::infinite()),
                        Err(e) => return Err(e),
                    };
                    &computed
                }
            };
            Ok(v_data(m, d, x0) + v_reg_weighted(m, reg, w, hp, x0)?)
        }
    }
}

/// Stacked residual vector R with ‖R‖² = total_cost.
///
/// Order: data residuals (y(k) − ŷ(k))/√N for k = 1..N; then, depending on
/// the mode, the regularization block — classical: (ỹ̄(k) − ŷ̄(k))·√(γ/N̄);
/// wpgnn: √(w_j γ_x/N̄)·f_θ entries for j = 1..N̄ followed by
/// √(w_j γ_y/N̄)·g_θ entries when the output completion is enabled.
pub fn residuals<T: Scalar, P: PriorModel<T>>(
    mode: Mode,
    m: &AugmentedModel<T, P>,
    d: &Dataset<T>,
    reg: Option<&RegSet<T>>,
    hp: &Hyperparams<T>,
    weights: Option<&WeightVector<T>>,
    x0: &DVector<T>,
) -> Result<DVector<T>> {
    hp.validate()?;
    let mut out: Vec<T> = Vec::new();

    let (_, y_hat) = m.simulate(&d.u, x0)?;
    let inv_sqrt_n = T::one() / real::<T>(d.len() as f64).sqrt();
    for k in 0..d.len() {
        let r = d.y.get(k) - y_hat.get(k);
        out.extend(r.iter().map(|&e| e * inv_sqrt_n));
    }

    match mode {
        Mode::Baseline => {}
        Mode::Classical => {
            let reg = require_reg(mode, reg)?;
            let y_tilde = match &reg.y_tilde_bar {
                Some(y) => y.clone(),
                None => simulate_prior(m.prior(), &reg.u_bar, x0)?.1,
            };
            let (_, y_bar_hat) = m.simulate(&reg.u_bar, x0)?;
            let scale = (hp.gamma / real::<T>(reg.len() as f64)).sqrt();
            for k in 0..reg.len() {
                let r = y_tilde.get(k) - y_bar_hat.get(k);
                out.extend(r.iter().map(|&e| e * scale));
            }
        }
        Mode::Wpgnn => {
            let reg = require_reg(mode, reg)?;
            let computed;
            let w = match weights {
                Some(w) => w,
                None => {
                    computed = compute_weights(m, d, reg, hp, x0)?;
                    &computed
                }
            };
            if w.len() != reg.len() {
                return Err(Error::Dimension(
                    "weight vector length != regularization length".into(),
                ));
            }
            let (x_reg, _) = m.simulate(&reg.u_bar, x0)?;
            let n_bar = real::<T>(reg.len() as f64);
            for j in 0..reg.len() {
                let scale = (w.get(j) * hp.gamma_x / n_bar).sqrt();
                let f = m.f_net().forward(x_reg.get(j), reg.u_bar.get(j))?;
                out.extend(f.iter().map(|&e| e * scale));
            }
            if let Some(g) = m.g_net() {
                for j in 0..reg.len() {
                    let scale = (w.get(j) * hp.gamma_y / n_bar).sqrt();
                    let gv = g.forward(x_reg.get(j), reg.u_bar.get(j))?;
                    out.extend(gv.iter().map(|&e| e * scale));
                }
            }
        }
    }
    Ok(DVector::from_vec(out))
}
