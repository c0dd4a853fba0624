use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An a-priori-known state-space model: the physics part of the augmented
/// model. State Jacobians are needed by the sensitivity-propagation
/// Jacobian of the trainer.
pub trait PriorModel<T: Scalar>: Clone {
    fn n_x(&self) -> usize;
    fn n_u(&self) -> usize;
    fn n_y(&self) -> usize;

    /// x(k+1) = f̃(x, u).
    fn state_map(&self, x: &DVector<T>, u: &DVector<T>) -> DVector<T>;
    /// y(k) = g̃(x, u).
    fn output_map(&self, x: &DVector<T>, u: &DVector<T>) -> DVector<T>;

    /// ∂f̃/∂x, shape (n_x, n_x).
    fn state_jacobian_x(&self, x: &DVector<T>, u: &DVector<T>) -> DMatrix<T>;
    /// ∂g̃/∂x, shape (n_y, n_x).
    fn output_jacobian_x(&self, x: &DVector<T>, u: &DVector<T>) -> DMatrix<T>;
}

/// Linear-affine prior x(k+1) = A x + B u, y = C x + D u.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPrior<T> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
}

impl<T: Scalar> LinearPrior<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        let n_x = a.nrows();
        if a.ncols() != n_x {
            return Err(Error::Dimension("A must be square".into()));
        }
        if b.nrows() != n_x {
            return Err(Error::Dimension("B row count must equal n_x".into()));
        }
        if c.ncols() != n_x {
            return Err(Error::Dimension("C column count must equal n_x".into()));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension("D must be (n_y, n_u)".into()));
        }
        for (name, m) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if m.iter().any(|e| !e.is_finite_val()) {
                let _ = name;
                return Err(Error::NonFinite("prior matrix entry"));
            }
        }
        Ok(Self { a, b, c, d })
    }

    /// Scalar prior x(k+1) = a x + b u with identity output map y = x.
    pub fn siso(a: T, b: T) -> Self {
        Self {
            a: DMatrix::from_element(1, 1, a),
            b: DMatrix::from_element(1, 1, b),
            c: DMatrix::identity(1, 1),
            d: DMatrix::zeros(1, 1),
        }
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }
}

impl<T: Scalar> PriorModel<T> for LinearPrior<T> {
    fn n_x(&self) -> usize {
        self.a.nrows()
    }
    fn n_u(&self) -> usize {
        self.b.ncols()
    }
    fn n_y(&self) -> usize {
        self.c.nrows()
    }

    fn state_map(&self, x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        &self.a * x + &self.b * u
    }

    fn output_map(&self, x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        &self.c * x + &self.d * u
    }

    fn state_jacobian_x(&self, _x: &DVector<T>, _u: &DVector<T>) -> DMatrix<T> {
        self.a.clone()
    }

    fn output_jacobian_x(&self, _x: &DVector<T>, _u: &DVector<T>) -> DMatrix<T> {
        self.c.clone()
    }
}
