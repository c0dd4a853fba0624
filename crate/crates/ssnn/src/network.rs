use nalgebra::{DMatrix, DVector};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};

/// Elementwise Gaussian radial basis activation, φ_i(z) = exp(−z_i²).
pub fn rbf_activation<T: Scalar>(z: &DVector<T>) -> Result<DVector<T>> {
    if z.iter().any(|e| !e.is_finite_val()) {
        return Err(Error::NonFinite("activation input"));
    }
    Ok(z.map(|zi| (-zi * zi).exp()))
}

/// Derivative of the Gaussian basis, φ'(z) = −2z exp(−z²).
fn rbf_derivative<T: Scalar>(z: &DVector<T>) -> DVector<T> {
    z.map(|zi| -real::<T>(2.0) * zi * (-zi * zi).exp())
}

/// One-hidden-layer completion network with an explicit linear bypass:
///
/// out = A_lin x + B_lin u + W_out φ(W_in [x; u] + b_hidden) + b_out
///
/// Used both as a state completion (d_out = n_x) and an output completion
/// (d_out = n_y).
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionNetwork<T> {
    w_in: DMatrix<T>,    // (n_n, n_x + n_u)
    b_hidden: DVector<T>, // n_n
    w_out: DMatrix<T>,   // (d_out, n_n)
    b_out: DVector<T>,   // d_out
    a_lin: DMatrix<T>,   // (d_out, n_x)
    b_lin: DMatrix<T>,   // (d_out, n_u)
    n_x: usize,
    n_u: usize,
}

impl<T: Scalar> CompletionNetwork<T> {
    /// Physics-preserving initialization: the output-side parameters
    /// (W_out, b_out, A_lin, B_lin) start at zero so the network is
    /// identically zero; hidden-layer parameters are i.i.d. U(−1, 1) from
    /// the seeded generator.
    pub fn init(n_x: usize, n_u: usize, d_out: usize, n_n: usize, rng_seed: u64) -> Result<Self> {
        if n_x == 0 || n_u == 0 || d_out == 0 || n_n == 0 {
            return Err(Error::Config("network dimensions must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let dist = Uniform::new(real::<T>(-1.0), real::<T>(1.0))
            .map_err(|e| Error::Config(e.to_string()))?;
        let w_in = DMatrix::from_fn(n_n, n_x + n_u, |_, _| dist.sample(&mut rng));
        let b_hidden = DVector::from_fn(n_n, |_, _| dist.sample(&mut rng));
        Ok(Self {
            w_in,
            b_hidden,
            w_out: DMatrix::zeros(d_out, n_n),
            b_out: DVector::zeros(d_out),
            a_lin: DMatrix::zeros(d_out, n_x),
            b_lin: DMatrix::zeros(d_out, n_u),
            n_x,
            n_u,
        })
    }

    pub fn from_parts(
        w_in: DMatrix<T>,
        b_hidden: DVector<T>,
        w_out: DMatrix<T>,
        b_out: DVector<T>,
        a_lin: DMatrix<T>,
        b_lin: DMatrix<T>,
    ) -> Result<Self> {
        let n_n = w_in.nrows();
        let d_out = w_out.nrows();
        let n_x = a_lin.ncols();
        let n_u = b_lin.ncols();
        if n_n == 0 || d_out == 0 || n_x == 0 || n_u == 0 {
            return Err(Error::Config("network dimensions must be positive".into()));
        }
        if w_in.ncols() != n_x + n_u
            || b_hidden.len() != n_n
            || w_out.ncols() != n_n
            || b_out.len() != d_out
            || a_lin.nrows() != d_out
            || b_lin.nrows() != d_out
        {
            return Err(Error::Dimension("inconsistent network part shapes".into()));
        }
        Ok(Self { w_in, b_hidden, w_out, b_out, a_lin, b_lin, n_x, n_u })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }
    pub fn n_u(&self) -> usize {
        self.n_u
    }
    pub fn n_hidden(&self) -> usize {
        self.w_in.nrows()
    }
    pub fn d_out(&self) -> usize {
        self.w_out.nrows()
    }

    pub fn w_in(&self) -> &DMatrix<T> {
        &self.w_in
    }
    pub fn b_hidden(&self) -> &DVector<T> {
        &self.b_hidden
    }
    pub fn w_out(&self) -> &DMatrix<T> {
        &self.w_out
    }
    pub fn b_out(&self) -> &DVector<T> {
        &self.b_out
    }
    pub fn a_lin(&self) -> &DMatrix<T> {
        &self.a_lin
    }
    pub fn b_lin(&self) -> &DMatrix<T> {
        &self.b_lin
    }

    fn check_io(&self, x: &DVector<T>, u: &DVector<T>) -> Result<()> {
        if x.len() != self.n_x || u.len() != self.n_u {
            return Err(Error::Dimension(format!(
                "network expects (n_x={}, n_u={}), got ({}, {})",
                self.n_x,
                self.n_u,
                x.len(),
                u.len()
            )));
        }
        Ok(())
    }

    /// Pre-activation vector W_in [x; u] + b_hidden.
    fn hidden_input(&self, x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        let mut z = self.b_hidden.clone();
        z += self.w_in.columns(0, self.n_x) * x;
        z += self.w_in.columns(self.n_x, self.n_u) * u;
        z
    }

    pub fn forward(&self, x: &DVector<T>, u: &DVector<T>) -> Result<DVector<T>> {
        self.check_io(x, u)?;
        let phi = rbf_activation(&self.hidden_input(x, u))?;
        Ok(&self.a_lin * x + &self.b_lin * u + &self.w_out * phi + &self.b_out)
    }

    /// Jacobian of the network output w.r.t. the state, shape (d_out, n_x).
    pub fn jacobian_x(&self, x: &DVector<T>, u: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_io(x, u)?;
        let z = self.hidden_input(x, u);
        let dphi = rbf_derivative(&z);
        // A_lin + W_out diag(φ') W_in[:, :n_x]
        let mut jac = self.a_lin.clone();
        let w_in_x = self.w_in.columns(0, self.n_x);
        for i in 0..self.d_out() {
            for j in 0..self.n_x {
                let mut acc = T::zero();
                for r in 0..self.n_hidden() {
                    acc += self.w_out[(i, r)] * dphi[r] * w_in_x[(r, j)];
                }
                jac[(i, j)] += acc;
            }
        }
        Ok(jac)
    }

    /// Number of trainable parameters.
    pub fn param_count(&self) -> usize {
        let n_n = self.n_hidden();
        let d = self.d_out();
        n_n * (self.n_x + self.n_u) + n_n + d * n_n + d + d * self.n_x + d * self.n_u
    }

    /// Gradient of each output entry w.r.t. the network's own parameters,
    /// shape (d_out, param_count), columns following the flattening layout.
    pub fn param_gradient(&self, x: &DVector<T>, u: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_io(x, u)?;
        let n_n = self.n_hidden();
        let d = self.d_out();
        let z = self.hidden_input(x, u);
        let phi = rbf_activation(&z)?;
        let dphi = rbf_derivative(&z);
        let mut grad = DMatrix::zeros(d, self.param_count());
        let mut col = 0;
        // W_in, row-major: d out_i / d W_in[r,c] = W_out[i,r] φ'(z_r) zc
        for r in 0..n_n {
            for c in 0..self.n_x + self.n_u {
                let zc = if c < self.n_x { x[c] } else { u[c - self.n_x] };
                for i in 0..d {
                    grad[(i, col)] = self.w_out[(i, r)] * dphi[r] * zc;
                }
                col += 1;
            }
        }
        // b_hidden: d out_i / d b[r] = W_out[i,r] φ'(z_r)
        for r in 0..n_n {
            for i in 0..d {
                grad[(i, col)] = self.w_out[(i, r)] * dphi[r];
            }
            col += 1;
        }
        // W_out, row-major: d out_i / d W_out[i,r] = φ(z_r)
        for i in 0..d {
            for r in 0..n_n {
                grad[(i, col)] = phi[r];
                col += 1;
            }
        }
        // b_out
        for i in 0..d {
            grad[(i, col)] = T::one();
            col += 1;
        }
        // A_lin, row-major: d out_i / d A[i,j] = x_j
        for i in 0..d {
            for j in 0..self.n_x {
                grad[(i, col)] = x[j];
                col += 1;
            }
        }
        // B_lin, row-major: d out_i / d B[i,j] = u_j
        for i in 0..d {
            for j in 0..self.n_u {
                grad[(i, col)] = u[j];
                col += 1;
            }
        }
        debug_assert_eq!(col, self.param_count());
        Ok(grad)
    }

    /// Append the parameters to `out` in layout order
    /// (W_in row-major, b_hidden, W_out row-major, b_out, A_lin, B_lin).
    pub fn write_params(&self, out: &mut Vec<T>) {
        for r in 0..self.w_in.nrows() {
            for c in 0..self.w_in.ncols() {
                out.push(self.w_in[(r, c)]);
            }
        }
        out.extend(self.b_hidden.iter().copied());
        for r in 0..self.w_out.nrows() {
            for c in 0..self.w_out.ncols() {
                out.push(self.w_out[(r, c)]);
            }
        }
        out.extend(self.b_out.iter().copied());
        for r in 0..self.a_lin.nrows() {
            for c in 0..self.a_lin.ncols() {
                out.push(self.a_lin[(r, c)]);
            }
        }
        for r in 0..self.b_lin.nrows() {
            for c in 0..self.b_lin.ncols() {
                out.push(self.b_lin[(r, c)]);
            }
        }
    }

    /// Overwrite the parameters from a slice in layout order.
    pub fn read_params(&mut self, theta: &[T]) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(Error::Dimension(format!(
                "expected {} network parameters, got {}",
                self.param_count(),
                theta.len()
            )));
        }
        let mut it = theta.iter().copied();
        let mut next = || it.next().expect("length checked");
        for r in 0..self.w_in.nrows() {
            for c in 0..self.w_in.ncols() {
                self.w_in[(r, c)] = next();
            }
        }
        for r in 0..self.b_hidden.len() {
            self.b_hidden[r] = next();
        }
        for r in 0..self.w_out.nrows() {
            for c in 0..self.w_out.ncols() {
                self.w_out[(r, c)] = next();
            }
        }
        for r in 0..self.b_out.len() {
            self.b_out[r] = next();
        }
        for r in 0..self.a_lin.nrows() {
            for c in 0..self.a_lin.ncols() {
                self.a_lin[(r, c)] = next();
            }
        }
        for r in 0..self.b_lin.nrows() {
            for c in 0..self.b_lin.ncols() {
                self.b_lin[(r, c)] = next();
            }
        }
        Ok(())
    }
}
