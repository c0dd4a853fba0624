//! Levenberg-Marquardt training of the augmented model on the stacked
//! residual vector, with sensitivity-propagation Jacobians.

use std::ops::AddAssign;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::AugmentedModel;
use crate::objectives::{compute_weights, residuals, Dataset, Hyperparams, Mode, RegSet, WeightVector};
use crate::prior::PriorModel;
use crate::scalar::{real, Scalar};

/// Damping schedule and stopping rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LMConfig<T> {
    pub lambda0: T,
    /// Damping growth factor on the first rejection; doubles on each
    /// consecutive one.
    pub lambda_up: T,
    /// Smallest damping shrink factor after an accepted step.
    pub lambda_down: T,
    pub max_iters: usize,
    /// Relative cost-decrease tolerance over a trailing window of ten
    /// accepted steps.
    pub cost_tol: T,
    /// Infinity-norm tolerance on the parameter step.
    pub step_tol: T,
    /// Damping cap; exceeding it while rejecting ends the run.
    pub max_lambda: T,
}

impl<T: Scalar> Default for LMConfig<T> {
    fn default() -> Self {
        Self {
            lambda0: real(1e-4),
            lambda_up: real(2.0),
            lambda_down: real(1.0 / 3.0),
            max_iters: 900,
            cost_tol: real(1e-3),
            step_tol: real(1e-10),
            max_lambda: real(1e12),
        }
    }
}

impl<T: Scalar> LMConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > T::zero())
            || !(self.lambda_up > T::one())
            || !(self.lambda_down > T::zero() && self.lambda_down < T::one())
            || !(self.cost_tol > T::zero())
            || !(self.step_tol > T::zero())
            || !(self.max_lambda > T::zero())
            || self.max_iters < 1
        {
            return Err(Error::Config("invalid LM configuration".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    ConvergedCost,
    ConvergedStep,
    MaxIters,
    Diverged,
}

impl TerminationReason {
    pub fn name(self) -> &'static str {
        match self {
            TerminationReason::ConvergedCost => "converged_cost",
            TerminationReason::ConvergedStep => "converged_step",
            TerminationReason::MaxIters => "max_iters",
            TerminationReason::Diverged => "diverged",
        }
    }
}

/// Outcome of a training run. `cost_history` holds the initial cost followed
/// by the cost of each accepted step (evaluated under that iteration's
/// frozen weights) and is non-increasing.
#[derive(Debug, Clone)]
pub struct TrainReport<T> {
    pub theta_final: DVector<T>,
    pub cost_history: Vec<T>,
    pub iterations: usize,
    pub termination: TerminationReason,
}

/// Central-difference Jacobian of an arbitrary residual function; the
/// independent oracle the analytic Jacobian is checked against.
pub fn jacobian_fd<T, F>(residual_fn: F, theta: &DVector<T>, h: T) -> Result<DMatrix<T>>
where
    T: Scalar,
    F: Fn(&DVector<T>) -> Result<DVector<T>>,
{
    if !(h > T::zero()) {
        return Err(Error::Config("finite-difference step must be > 0".into()));
    }
    let r0 = residual_fn(theta)?;
    let n_res = r0.len();
    let n_par = theta.len();
    let mut jac = DMatrix::zeros(n_res, n_par);
    let two_h = real::<T>(2.0) * h;
    for p in 0..n_par {
        let mut tp = theta.clone();
        tp[p] += h;
        let rp = residual_fn(&tp)?;
        let mut tm = theta.clone();
        tm[p] -= h;
        let rm = residual_fn(&tm)?;
        if rp.iter().chain(rm.iter()).any(|e| !e.is_finite_val()) {
            return Err(Error::NonFinite("finite-difference probe residual"));
        }
        for i in 0..n_res {
            jac[(i, p)] = (rp[i] - rm[i]) / two_h;
        }
    }
    Ok(jac)
}

/// Row-block bookkeeping shared by the trajectory sweeps.
struct Sensitivity<T> {
    s: DMatrix<T>, // (n_x, n_p), dx(k)/dθ
}

/// Analytic Jacobian of the stacked residuals, with parameter sensitivities
/// propagated through the free-run state recursion of both the training and
/// (for the weighted objective) the regularization trajectory. The kernel
/// weights are treated as constants.
pub fn jacobian_bptt<T: Scalar, P: PriorModel<T>>(
    mode: Mode,
    m: &AugmentedModel<T, P>,
    d: &Dataset<T>,
    reg: Option<&RegSet<T>>,
    hp: &Hyperparams<T>,
    weights: Option<&WeightVector<T>>,
    x0: &DVector<T>,
) -> Result<DMatrix<T>> {
    hp.validate()?;
    let n_p = m.param_count();
    let nf = m.f_net().param_count();
    let n_y = m.n_y();
    let n_x = m.n_x();
    let n = d.len();

    let reg = match mode {
        Mode::Baseline => None,
        _ => Some(reg.ok_or_else(|| {
            Error::Config(format!("objective '{}' requires a regularization set", mode.name()))
        })?),
    };

    let n_res = match mode {
        Mode::Baseline => n * n_y,
        Mode::Classical => n * n_y + reg.unwrap().len() * n_y,
        Mode::Wpgnn => {
            let n_bar = reg.unwrap().len();
            n * n_y + n_bar * n_x + if m.g_net().is_some() { n_bar * n_y } else { 0 }
        }
    };
    let mut jac = DMatrix::zeros(n_res, n_p);

    // training trajectory: data residual rows −dŷ(k)/dθ / √N
    let (x_traj, _) = m.simulate(&d.u, x0)?;
    let inv_sqrt_n = T::one() / real::<T>(n as f64).sqrt();
    sweep_output_rows(m, &x_traj, &d.u, -inv_sqrt_n, 0, &mut jac, nf)?;

    match mode {
        Mode::Baseline => {}
        Mode::Classical => {
            // reg trajectory: rows −√(γ/N̄)·dŷ̄(k)/dθ
            let reg = reg.unwrap();
            let (x_reg, _) = m.simulate(&reg.u_bar, x0)?;
            let scale = -(hp.gamma / real::<T>(reg.len() as f64)).sqrt();
            sweep_output_rows(m, &x_reg, &reg.u_bar, scale, n * n_y, &mut jac, nf)?;
        }
        Mode::Wpgnn => {
            let reg = reg.unwrap();
            let n_bar = reg.len();
            let w = weights.ok_or_else(|| {
                Error::Config("weighted objective Jacobian needs frozen weights".into())
            })?;
            if w.len() != n_bar {
                return Err(Error::Dimension(
                    "weight vector length != regularization length".into(),
                ));
            }
            let (x_reg, _) = m.simulate(&reg.u_bar, x0)?;
            let n_bar_t = real::<T>(n_bar as f64);
            let f_base = n * n_y;
            let g_base = f_base + n_bar * n_x;

            let mut sens = Sensitivity { s: DMatrix::zeros(n_x, n_p) };
            for j in 0..n_bar {
                let x = x_reg.get(j);
                let u = reg.u_bar.get(j);

                // f rows: √(w_j γ_x/N̄)·(∂f_θ/∂x · S + ∂f_θ/∂θ)
                let f_scale = (w.get(j) * hp.gamma_x / n_bar_t).sqrt();
                let f_jx = m.f_net().jacobian_x(x, u)?;
                let f_direct = m.f_net().param_gradient(x, u)?;
                let mut rows = &f_jx * &sens.s;
                rows.columns_mut(0, nf).add_assign(&f_direct);
                for i in 0..n_x {
                    for p in 0..n_p {
                        jac[(f_base + j * n_x + i, p)] = f_scale * rows[(i, p)];
                    }
                }

                if let Some(g) = m.g_net() {
                    let g_scale = (w.get(j) * hp.gamma_y / n_bar_t).sqrt();
                    let g_jx = g.jacobian_x(x, u)?;
                    let g_direct = g.param_gradient(x, u)?;
                    let mut grows = &g_jx * &sens.s;
                    grows.columns_mut(nf, n_p - nf).add_assign(&g_direct);
                    for i in 0..n_y {
                        for p in 0..n_p {
                            jac[(g_base + j * n_y + i, p)] = g_scale * grows[(i, p)];
                        }
                    }
                }

                advance_sensitivity(m, &mut sens, x, u, nf)?;
            }
        }
    }
    Ok(jac)
}

/// Fill consecutive row blocks `scale · dŷ(k)/dθ` for every step of a
/// trajectory, propagating the state sensitivity alongside.
fn sweep_output_rows<T: Scalar, P: PriorModel<T>>(
    m: &AugmentedModel<T, P>,
    x_traj: &crate::signal::Signal<T>,
    u_seq: &crate::signal::Signal<T>,
    scale: T,
    row_base: usize,
    jac: &mut DMatrix<T>,
    nf: usize,
) -> Result<()> {
    let n_p = m.param_count();
    let n_x = m.n_x();
    let n_y = m.n_y();
    let mut sens = Sensitivity { s: DMatrix::zeros(n_x, n_p) };
    for k in 0..u_seq.len() {
        let x = x_traj.get(k);
        let u = u_seq.get(k);

        let mut out_jx = m.prior().output_jacobian_x(x, u);
        if let Some(g) = m.g_net() {
            out_jx += g.jacobian_x(x, u)?;
        }
        let mut dy = &out_jx * &sens.s; // (n_y, n_p)
        if let Some(g) = m.g_net() {
            let g_direct = g.param_gradient(x, u)?;
            dy.columns_mut(nf, n_p - nf).add_assign(&g_direct);
        }
        for i in 0..n_y {
            for p in 0..n_p {
                jac[(row_base + k * n_y + i, p)] = scale * dy[(i, p)];
            }
        }

        advance_sensitivity(m, &mut sens, x, u, nf)?;
    }
    Ok(())
}

/// S(k+1) = (∂f̃/∂x + ∂f_θ/∂x)·S(k) + ∂f_θ/∂θ.
fn advance_sensitivity<T: Scalar, P: PriorModel<T>>(
    m: &AugmentedModel<T, P>,
    sens: &mut Sensitivity<T>,
    x: &DVector<T>,
    u: &DVector<T>,
    nf: usize,
) -> Result<()> {
    let mut a_eff = m.prior().state_jacobian_x(x, u);
    a_eff += m.f_net().jacobian_x(x, u)?;
    let f_direct = m.f_net().param_gradient(x, u)?;
    let mut s_next = &a_eff * &sens.s;
    s_next.columns_mut(0, nf).add_assign(&f_direct);
    sens.s = s_next;
    Ok(())
}

/// One damped Gauss-Newton step: solve (JᵀJ + λ·D)·δ = −JᵀR with Marquardt
/// scaling D = diag(JᵀJ) floored at 1e−2 of its largest entry. The floor keeps
/// near-dead parameter directions damped; without it the anisotropic scaling
/// lets those directions blow up and the iteration stalls in stiff valleys.
/// An all-zero Jacobian degrades to plain λ·I damping.
pub struct LmStep<T> {
    pub theta: DVector<T>,
    pub delta: DVector<T>,
    pub predicted_cost: T,
}

pub fn lm_step<T: Scalar>(
    theta: &DVector<T>,
    r: &DVector<T>,
    jac: &DMatrix<T>,
    lambda: T,
) -> Result<LmStep<T>> {
    if !(lambda > T::zero()) {
        return Err(Error::Config("lambda must be > 0".into()));
    }
    if jac.iter().any(|e| !e.is_finite_val()) {
        return Err(Error::NonFinite("Jacobian entry"));
    }
    let jtj = jac.tr_mul(jac);
    let jtr = jac.tr_mul(r);
    let mut a = jtj.clone();
    let n = a.nrows();
    let max_diag = (0..n).map(|i| a[(i, i)]).fold(T::zero(), |m, d| if d > m { d } else { m });
    let floor = if max_diag > T::zero() {
        max_diag * real(1e-2)
    } else {
        T::one()
    };
    for i in 0..n {
        let d = if a[(i, i)] > floor { a[(i, i)] } else { floor };
        a[(i, i)] += lambda * d;
    }
    let delta = match a.clone().cholesky() {
        Some(chol) => chol.solve(&(-&jtr)),
        None => a
            .lu()
            .solve(&(-&jtr))
            .ok_or_else(|| Error::Config("singular damped normal matrix".into()))?,
    };
    let predicted = (r + jac * &delta).norm_squared();
    Ok(LmStep {
        theta: theta + &delta,
        delta,
        predicted_cost: predicted,
    })
}

fn diverged_report<T: Scalar>(theta: DVector<T>) -> TrainReport<T> {
    TrainReport {
        theta_final: theta,
        cost_history: Vec::new(),
        iterations: 0,
        termination: TerminationReason::Diverged,
    }
}

/// Minimize the selected objective with Levenberg-Marquardt.
///
/// Damping follows a gain-ratio schedule: an accepted step multiplies λ by
/// max(`lambda_down`, 1 − (2ρ−1)³), where ρ compares the actual to the
/// model-predicted decrease; a rejected step multiplies λ by a factor that
/// starts at `lambda_up` and doubles with each consecutive rejection.
///
/// For the weighted objective the kernel weights are recomputed from the
/// model's trajectories after each accepted step and held constant within an
/// iteration (they are excluded from the Jacobian). A refresh that would push
/// the cost above the just-recorded value is skipped — the previous weights
/// are kept — so the reported history is non-increasing even as the weights
/// drift between iterations.
pub fn train<T: Scalar, P: PriorModel<T>>(
    mode: Mode,
    m0: &AugmentedModel<T, P>,
    d: &Dataset<T>,
    reg: Option<&RegSet<T>>,
    hp: &Hyperparams<T>,
    cfg: &LMConfig<T>,
    x0: &DVector<T>,
) -> Result<(AugmentedModel<T, P>, TrainReport<T>)> {
    cfg.validate()?;
    hp.validate()?;
    let mut m = m0.clone();
    let mut theta = m.flatten_params();

    let mut weights = match mode {
        Mode::Wpgnn => {
            let reg = reg.ok_or_else(|| {
                Error::Config("objective 'wpgnn' requires a regularization set".into())
            })?;
            match compute_weights(&m, d, reg, hp, x0) {
                Ok(w) => Some(w),
                Err(Error::Diverged { .. }) => return Ok((m, diverged_report(theta))),
                Err(e) => return Err(e),
            }
        }
        _ => None,
    };

    let mut r = match residuals(mode, &m, d, reg, hp, weights.as_ref(), x0) {
        Ok(r) => r,
        Err(Error::Diverged { .. }) => return Ok((m, diverged_report(theta))),
        Err(e) => return Err(e),
    };
    let mut cost = r.norm_squared();
    let mut history = vec![cost];
    let mut lambda = cfg.lambda0;
    let mut nu = cfg.lambda_up;
    let mut termination = TerminationReason::MaxIters;
    // progress is spiky near a minimum, so convergence is judged on the
    // total relative decrease over a trailing window of accepted steps
    const STALL_WINDOW: usize = 10;

    'outer: for _ in 0..cfg.max_iters {
        let jac = jacobian_bptt(mode, &m, d, reg, hp, weights.as_ref(), x0)?;
        let threshold = cost;

        // damping loop: inflate lambda until a step improves the cost
        let accepted = loop {
            let step = lm_step(&theta, &r, &jac, lambda)?;
            if step.delta.amax() < cfg.step_tol {
                termination = TerminationReason::ConvergedStep;
                break 'outer;
            }
            let cand_m = m.with_params(&step.theta)?;
            let cand = match residuals(mode, &cand_m, d, reg, hp, weights.as_ref(), x0) {
                Ok(cr) => {
                    let c = cr.norm_squared();
                    Some((cr, c))
                }
                Err(Error::Diverged { .. }) => None,
                Err(e) => return Err(e),
            };
            if let Some((cand_r, cand_cost)) = cand {
                if cand_cost.is_finite_val() && cand_cost < threshold {
                    break (cand_m, step, cand_r, cand_cost);
                }
            }
            lambda *= nu;
            nu *= real(2.0);
            if lambda > cfg.max_lambda {
                termination = TerminationReason::ConvergedStep;
                break 'outer;
            }
        };

        let (cand_m, step, cand_r, cand_cost) = accepted;
        // gain ratio between the actual and the model-predicted decrease
        let predicted_decrease = (threshold - step.predicted_cost).max(real(1e-300));
        let rho = (threshold - cand_cost) / predicted_decrease;
        let two_rho_m1 = real::<T>(2.0) * rho - T::one();
        let shrink = (T::one() - two_rho_m1 * two_rho_m1 * two_rho_m1).max(cfg.lambda_down);
        m = cand_m;
        theta = step.theta;
        history.push(cand_cost);
        lambda *= shrink;
        nu = cfg.lambda_up;

        if history.len() > STALL_WINDOW {
            let before = history[history.len() - 1 - STALL_WINDOW];
            if before - cand_cost < cfg.cost_tol * cand_cost.max(real(1e-30)) {
                termination = TerminationReason::ConvergedCost;
                break;
            }
        }

        // refresh weights and the base residuals for the next iteration
        r = cand_r;
        cost = cand_cost;
        if mode == Mode::Wpgnn {
            let reg = reg.expect("checked above");
            let new_w = match compute_weights(&m, d, reg, hp, x0) {
                Ok(w) => w,
                Err(Error::Diverged { .. }) => {
                    termination = TerminationReason::ConvergedStep;
                    break;
                }
                Err(e) => return Err(e),
            };
            let new_r = match residuals(mode, &m, d, Some(reg), hp, Some(&new_w), x0) {
                Ok(r) => r,
                Err(Error::Diverged { .. }) => {
                    termination = TerminationReason::ConvergedStep;
                    break;
                }
                Err(e) => return Err(e),
            };
            // skip the refresh when the drift would raise the cost above the
            // entry just recorded; keeping the old weights preserves the
            // non-increasing history
            let new_cost = new_r.norm_squared();
            if new_cost <= cand_cost {
                weights = Some(new_w);
                r = new_r;
                cost = new_cost;
            }
        }
    }

    let iterations = history.len() - 1;
    let report = TrainReport {
        theta_final: theta,
        cost_history: history,
        iterations,
        termination,
    };
    Ok((m, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::LinearPrior;
    use crate::signal::Signal;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type Model = AugmentedModel<f64, LinearPrior<f64>>;

    fn hp() -> Hyperparams<f64> {
        Hyperparams {
            gamma: 1e-3,
            gamma_x: 1e-4,
            gamma_y: 1e-4,
            sigma: 0.001f64.sqrt(),
            epsilon: 0.1,
        }
    }

    fn x0() -> DVector<f64> {
        DVector::zeros(1)
    }

    fn small_instance(seed: u64, with_g: bool) -> (Model, Dataset<f64>, RegSet<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = AugmentedModel::init(LinearPrior::siso(0.8187, 0.1813), 2, seed, with_g).unwrap();
        let theta = DVector::from_fn(m.param_count(), |_, _| rng.random_range(-0.3..0.3));
        let m = m.with_params(&theta).unwrap();
        let u = Signal::from_scalars((0..10).map(|_| rng.random_range(-1.0..1.0))).unwrap();
        let y = Signal::from_scalars((0..10).map(|_| rng.random_range(-1.0..1.0))).unwrap();
        let d = Dataset::new(u, y).unwrap();
        let ur = Signal::from_scalars((0..6).map(|_| rng.random_range(-2.0..2.0))).unwrap();
        (m, d, RegSet::new(ur, None).unwrap())
    }

    #[test]
    fn fd_identity_residual() {
        let theta = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let jac = jacobian_fd(|t| Ok(t.clone()), &theta, 1e-6).unwrap();
        let err = (&jac - DMatrix::identity(3, 3)).amax();
        assert!(err < 1e-9, "identity Jacobian error {err}");
    }

    #[test]
    fn fd_square_residual() {
        let theta = DVector::from_vec(vec![3.0]);
        let jac = jacobian_fd(
            |t| Ok(DVector::from_vec(vec![t[0] * t[0]])),
            &theta,
            1e-4,
        )
        .unwrap();
        assert_abs_diff_eq!(jac[(0, 0)], 6.0, epsilon = 1e-7);
    }

    #[test]
    fn fd_constant_residual() {
        let theta = DVector::from_vec(vec![1.0, 2.0]);
        let jac = jacobian_fd(|_| Ok(DVector::from_vec(vec![7.0])), &theta, 1e-6).unwrap();
        assert!(jac.iter().all(|&e| e == 0.0));
    }

    /// Max relative deviation between two Jacobians, ignoring entries that
    /// agree within 1e-8 absolutely (finite-difference roundoff floor).
    fn jacobian_mismatch(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let mut worst = 0.0f64;
        for (ea, eb) in a.iter().zip(b.iter()) {
            let abs = (ea - eb).abs();
            if abs <= 1e-8 {
                continue;
            }
            worst = worst.max(abs / ea.abs().max(eb.abs()));
        }
        worst
    }

    #[test]
    fn bptt_matches_fd_all_modes() {
        for seed in 0..6u64 {
            for with_g in [false, true] {
                let (m, d, reg) = small_instance(40 + seed, with_g);
                let theta = m.flatten_params();
                for mode in [Mode::Baseline, Mode::Classical, Mode::Wpgnn] {
                    let w = if mode == Mode::Wpgnn {
                        Some(compute_weights(&m, &d, &reg, &hp(), &x0()).unwrap())
                    } else {
                        None
                    };
                    let analytic =
                        jacobian_bptt(mode, &m, &d, Some(&reg), &hp(), w.as_ref(), &x0()).unwrap();
                    let fd = jacobian_fd(
                        |t| {
                            let mt = m.with_params(t)?;
                            residuals(mode, &mt, &d, Some(&reg), &hp(), w.as_ref(), &x0())
                        },
                        &theta,
                        1e-6,
                    )
                    .unwrap();
                    let worst = jacobian_mismatch(&analytic, &fd);
                    assert!(
                        worst <= 1e-5,
                        "mode {:?} with_g {} seed {}: mismatch {worst}",
                        mode,
                        with_g,
                        seed
                    );
                }
            }
        }
    }

    #[test]
    fn bptt_excludes_disabled_output_completion() {
        let (m, d, reg) = small_instance(99, false);
        let jac = jacobian_bptt(Mode::Baseline, &m, &d, Some(&reg), &hp(), None, &x0()).unwrap();
        assert_eq!(jac.ncols(), m.f_net().param_count());
        assert_eq!(jac.nrows(), d.len());
    }

    #[test]
    fn lm_step_zero_residual_gives_zero_step() {
        let theta = DVector::from_vec(vec![1.0, 2.0]);
        let r = DVector::zeros(3);
        let jac = DMatrix::from_fn(3, 2, |i, j| (i + j) as f64 + 1.0);
        let step = lm_step(&theta, &r, &jac, 1e-2).unwrap();
        assert!(step.delta.amax() < 1e-14);
    }

    #[test]
    fn lm_step_gauss_newton_limit() {
        // residual R(θ) = θ − 2 at θ = 0: Gauss-Newton step is exactly 2
        let theta = DVector::from_vec(vec![0.0]);
        let r = DVector::from_vec(vec![-2.0]);
        let jac = DMatrix::from_element(1, 1, 1.0);
        let step = lm_step(&theta, &r, &jac, 1e-14).unwrap();
        assert_abs_diff_eq!(step.theta[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(step.predicted_cost, 0.0, epsilon = 1e-20);
    }

    #[test]
    fn lm_step_heavy_damping_limit() {
        let theta = DVector::from_vec(vec![0.0]);
        let r = DVector::from_vec(vec![-2.0]);
        let jac = DMatrix::from_element(1, 1, 1.0);
        let step = lm_step(&theta, &r, &jac, 1e12).unwrap();
        assert!(step.delta.norm() <= 1e-9 * 2.0);
    }

    #[test]
    fn lm_step_shrinks_with_growing_lambda() {
        let (m, d, reg) = small_instance(7, true);
        let theta = m.flatten_params();
        let r = residuals(Mode::Classical, &m, &d, Some(&reg), &hp(), None, &x0()).unwrap();
        let jac = jacobian_bptt(Mode::Classical, &m, &d, Some(&reg), &hp(), None, &x0()).unwrap();
        let mut lambda = 1e-3;
        let mut prev = f64::INFINITY;
        for _ in 0..10 {
            let step = lm_step(&theta, &r, &jac, lambda).unwrap();
            let norm = step.delta.norm();
            assert!(norm <= prev * (1.0 + 1e-12));
            prev = norm;
            lambda *= 10.0;
        }
    }

    #[test]
    fn lm_step_zero_column_falls_back_to_identity_damping() {
        // second column of J identically zero -> JtJ diagonal entry zero
        let theta = DVector::from_vec(vec![0.0, 0.0]);
        let r = DVector::from_vec(vec![-1.0]);
        let jac = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let step = lm_step(&theta, &r, &jac, 1e-2).unwrap();
        assert!(step.delta.iter().all(|e: &f64| e.is_finite()));
        assert_eq!(step.delta[1], 0.0);
    }

    #[test]
    fn scalar_least_squares_converges_fast() {
        // y = 2 u fit by a pure-bypass model: data generated by the prior
        // with gain mismatch; LM should hit the least-squares solution in a
        // few iterations.
        let prior = LinearPrior::siso(0.0, 1.0);
        let m0 = AugmentedModel::init(prior, 2, 3, false).unwrap();
        let u = Signal::from_scalars(vec![0.1, -0.4, 0.8, 0.3, -0.9]).unwrap();
        let truth = LinearPrior::siso(0.0, 2.0);
        let (_, y) = crate::model::simulate_prior(&truth, &u, &x0()).unwrap();
        let d = Dataset::new(u, y).unwrap();
        let (mt, report) = train(
            Mode::Baseline,
            &m0,
            &d,
            None,
            &hp(),
            &LMConfig { max_iters: 25, ..LMConfig::default() },
            &x0(),
        )
        .unwrap();
        let final_cost = *report.cost_history.last().unwrap();
        assert!(final_cost < 1e-16, "final cost {final_cost}");
        let _ = mt;
    }

    #[test]
    fn already_optimal_terminates_immediately() {
        let prior = LinearPrior::siso(0.5, 0.5);
        let m0 = AugmentedModel::init(prior, 2, 1, false).unwrap();
        let u = Signal::from_scalars(vec![0.2, -0.1, 0.4]).unwrap();
        let (_, y) = m0.simulate(&u, &x0()).unwrap();
        let d = Dataset::new(u, y).unwrap();
        let (_, report) = train(
            Mode::Baseline,
            &m0,
            &d,
            None,
            &hp(),
            &LMConfig::default(),
            &x0(),
        )
        .unwrap();
        assert!(report.iterations <= 1);
        assert_eq!(*report.cost_history.first().unwrap(), 0.0);
        assert_ne!(report.termination, TerminationReason::MaxIters);
    }

    #[test]
    fn cost_history_non_increasing() {
        let (m0, d, reg) = small_instance(55, true);
        for mode in [Mode::Baseline, Mode::Classical, Mode::Wpgnn] {
            let (_, report) = train(
                mode,
                &m0,
                &d,
                Some(&reg),
                &hp(),
                &LMConfig { max_iters: 40, ..LMConfig::default() },
                &x0(),
            )
            .unwrap();
            for pair in report.cost_history.windows(2) {
                assert!(pair[1] <= pair[0], "history increased in {mode:?}");
            }
        }
    }

    #[test]
    fn diverging_initial_model_reports_divergence() {
        let prior = LinearPrior::siso(1e300, 1e300);
        let m0 = AugmentedModel::init(prior, 2, 0, false).unwrap();
        let u = Signal::from_scalars(vec![1.0; 5]).unwrap();
        let y = Signal::from_scalars(vec![0.0; 5]).unwrap();
        let d = Dataset::new(u, y).unwrap();
        let (_, report) = train(
            Mode::Baseline,
            &m0,
            &d,
            None,
            &hp(),
            &LMConfig::default(),
            &DVector::from_vec(vec![1.0]),
        )
        .unwrap();
        assert_eq!(report.termination, TerminationReason::Diverged);
    }

    #[test]
    fn training_is_deterministic() {
        let (m0, d, reg) = small_instance(77, false);
        let run = || {
            train(
                Mode::Wpgnn,
                &m0,
                &d,
                Some(&reg),
                &hp(),
                &LMConfig { max_iters: 15, ..LMConfig::default() },
                &x0(),
            )
            .unwrap()
            .1
        };
        let a = run();
        let b = run();
        assert_eq!(a.theta_final, b.theta_final);
        assert_eq!(a.cost_history, b.cost_history);
    }
}
