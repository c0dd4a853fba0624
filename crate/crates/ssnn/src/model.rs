use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::network::CompletionNetwork;
use crate::prior::PriorModel;
use crate::scalar::Scalar;
use crate::signal::Signal;

/// Prior physics model plus neural completion functions:
///
/// x(k+1) = f̃(x, u) + f_θ(x, u)
/// y(k)   = g̃(x, u) + g_θ(x, u)
///
/// A disabled output completion is represented as absence; its parameters
/// then never enter the flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedModel<T, P> {
    prior: P,
    f_net: CompletionNetwork<T>,
    g_net: Option<CompletionNetwork<T>>,
}

impl<T: Scalar, P: PriorModel<T>> AugmentedModel<T, P> {
    pub fn new(prior: P, f_net: CompletionNetwork<T>, g_net: Option<CompletionNetwork<T>>) -> Result<Self> {
        if f_net.n_x() != prior.n_x() || f_net.n_u() != prior.n_u() || f_net.d_out() != prior.n_x() {
            return Err(Error::Dimension(
                "state completion dimensions must match the prior".into(),
            ));
        }
        if let Some(g) = &g_net {
            if g.n_x() != prior.n_x() || g.n_u() != prior.n_u() || g.d_out() != prior.n_y() {
                return Err(Error::Dimension(
                    "output completion dimensions must match the prior".into(),
                ));
            }
        }
        Ok(Self { prior, f_net, g_net })
    }

    /// Augmented model with physics-preserving initialization of both
    /// completions. With `with_output_completion = false` the output map is
    /// the bare prior's (g_θ ≡ 0). Seeds for the two networks are derived
    /// from `rng_seed` so they draw independent hidden layers.
    pub fn init(prior: P, n_n: usize, rng_seed: u64, with_output_completion: bool) -> Result<Self> {
        let f_net = CompletionNetwork::init(prior.n_x(), prior.n_u(), prior.n_x(), n_n, rng_seed)?;
        let g_net = if with_output_completion {
            Some(CompletionNetwork::init(
                prior.n_x(),
                prior.n_u(),
                prior.n_y(),
                n_n,
                rng_seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
            )?)
        } else {
            None
        };
        Self::new(prior, f_net, g_net)
    }

    pub fn prior(&self) -> &P {
        &self.prior
    }
    pub fn f_net(&self) -> &CompletionNetwork<T> {
        &self.f_net
    }
    pub fn g_net(&self) -> Option<&CompletionNetwork<T>> {
        self.g_net.as_ref()
    }
    pub fn n_x(&self) -> usize {
        self.prior.n_x()
    }
    pub fn n_u(&self) -> usize {
        self.prior.n_u()
    }
    pub fn n_y(&self) -> usize {
        self.prior.n_y()
    }

    /// One step of the augmented dynamics.
    pub fn step(&self, x: &DVector<T>, u: &DVector<T>) -> Result<(DVector<T>, DVector<T>)> {
        let mut x_next = self.prior.state_map(x, u);
        x_next += self.f_net.forward(x, u)?;
        let mut y = self.prior.output_map(x, u);
        if let Some(g) = &self.g_net {
            y += g.forward(x, u)?;
        }
        Ok((x_next, y))
    }

    /// Free-run simulation (no output feedback). Returns the state and
    /// output trajectories, both of length N = u_seq.len(); the state entry
    /// at index k is the state AT step k+1 (0-based), with x_seq[0] = x0.
    pub fn simulate(&self, u_seq: &Signal<T>, x0: &DVector<T>) -> Result<(Signal<T>, Signal<T>)> {
        if u_seq.dim() != self.n_u() {
            return Err(Error::Dimension("input signal dimension != n_u".into()));
        }
        if x0.len() != self.n_x() {
            return Err(Error::Dimension("initial state dimension != n_x".into()));
        }
        let n = u_seq.len();
        let mut states = Vec::with_capacity(n);
        let mut outputs = Vec::with_capacity(n);
        let mut x = x0.clone();
        for k in 0..n {
            let (x_next, y) = self.step(&x, u_seq.get(k))?;
            if x_next.iter().any(|e| !e.is_finite_val()) || y.iter().any(|e| !e.is_finite_val()) {
                return Err(Error::Diverged { step: k + 1 });
            }
            states.push(x);
            outputs.push(y);
            x = x_next;
        }
        Ok((Signal::new(states)?, Signal::new(outputs)?))
    }

    /// Total trainable parameter count (f_net, then g_net when present).
    pub fn param_count(&self) -> usize {
        self.f_net.param_count() + self.g_net.as_ref().map_or(0, |g| g.param_count())
    }

    /// Flatten every trainable parameter into one vector. Layout: f_net
    /// (W_in row-major, b_hidden, W_out row-major, b_out, A_lin, B_lin),
    /// then g_net in the same order. The prior is not trainable.
    pub fn flatten_params(&self) -> DVector<T> {
        let mut out = Vec::with_capacity(self.param_count());
        self.f_net.write_params(&mut out);
        if let Some(g) = &self.g_net {
            g.write_params(&mut out);
        }
        DVector::from_vec(out)
    }

    /// Rebuild the model with the given flat parameter vector; the prior is
    /// left untouched.
    pub fn with_params(&self, theta: &DVector<T>) -> Result<Self> {
        if theta.len() != self.param_count() {
            return Err(Error::Dimension(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                theta.len()
            )));
        }
        let mut m = self.clone();
        let nf = m.f_net.param_count();
        m.f_net.read_params(&theta.as_slice()[..nf])?;
        if let Some(g) = &mut m.g_net {
            g.read_params(&theta.as_slice()[nf..])?;
        }
        Ok(m)
    }
}

/// Free-run simulation of a bare prior model, same conventions as
/// [`AugmentedModel::simulate`].
pub fn simulate_prior<T: Scalar, P: PriorModel<T>>(
    prior: &P,
    u_seq: &Signal<T>,
    x0: &DVector<T>,
) -> Result<(Signal<T>, Signal<T>)> {
    if u_seq.dim() != prior.n_u() {
        return Err(Error::Dimension("input signal dimension != n_u".into()));
    }
    if x0.len() != prior.n_x() {
        return Err(Error::Dimension("initial state dimension != n_x".into()));
    }
    let n = u_seq.len();
    let mut states = Vec::with_capacity(n);
    let mut outputs = Vec::with_capacity(n);
    let mut x = x0.clone();
    for k in 0..n {
        let u = u_seq.get(k);
        let x_next = prior.state_map(&x, u);
        let y = prior.output_map(&x, u);
        if x_next.iter().any(|e| !e.is_finite_val()) || y.iter().any(|e| !e.is_finite_val()) {
            return Err(Error::Diverged { step: k + 1 });
        }
        states.push(x);
        outputs.push(y);
        x = x_next;
    }
    Ok((Signal::new(states)?, Signal::new(outputs)?))
}
