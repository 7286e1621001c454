//! Per-node objective oracles: value, gradient, curvature constants, and the
//! conjugate oracle `y -> argmin_theta { f(theta) - y^T theta }` used by the
//! dual methods, plus separable objectives for the parallel distributed mode.
//!
//! Quadratic and least-squares conjugates are closed-form; the logistic one
//! runs a warm-started damped Newton solve and reports failure instead of
//! returning a silent wrong answer.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error(
        "data matrix is rank deficient; the least-squares oracle requires full column rank \
         so that the local function is strongly convex"
    )]
    RankDeficient,
    #[error("ridge weight must be positive, got {0}")]
    BadRidge(f64),
    #[error("coefficient {index} is {value}; separable terms need a > 0")]
    NonPositiveCoefficient { index: usize, value: f64 },
    #[error("exponent must be 2 or 4, got {0}")]
    BadExponent(u8),
    #[error("labels must be in {{-1, +1}}")]
    BadLabel,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(
        "inner solve did not reach gradient norm {tolerance:e} in {iterations} iterations \
         (residual {residual:e})"
    )]
    InnerSolveFailed {
        iterations: usize,
        tolerance: f64,
        residual: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Quadratic,
    LeastSquares,
    Logistic,
}

/// Smooth, strongly convex local function with a conjugate oracle.
pub trait LocalProblem<S: Scalar> {
    fn dim(&self) -> usize;
    fn kind(&self) -> ProblemKind;
    fn value(&self, theta: &DVector<S>) -> S;
    fn gradient(&self, theta: &DVector<S>) -> DVector<S>;
    /// Strong-convexity constant `mu_i`.
    fn strong_convexity(&self) -> S;
    /// Smoothness constant `M_i`.
    fn smoothness(&self) -> S;
    /// Hessian at `theta`, for centralized reference solves.
    fn hessian(&self, theta: &DVector<S>) -> DMatrix<S>;
    /// Magnitude below which conjugate gradients are indistinguishable
    /// from inner-solver noise; zero for closed-form oracles.
    fn gradient_resolution(&self) -> S {
        S::zero()
    }
    /// `argmin_theta { f(theta) - y^T theta }`; at the result the gradient
    /// of `f` equals `y` (to inner tolerance for iterative solves).
    fn conjugate_gradient(&mut self, y: &DVector<S>) -> Result<DVector<S>, ProblemError>;
    /// Conjugate value and maximizer in one call.
    fn conjugate_pair(&mut self, y: &DVector<S>) -> Result<(S, DVector<S>), ProblemError> {
        let theta = self.conjugate_gradient(y)?;
        Ok((y.dot(&theta) - self.value(&theta), theta))
    }
    fn conjugate_value(&mut self, y: &DVector<S>) -> Result<S, ProblemError> {
        Ok(self.conjugate_pair(y)?.0)
    }
    /// Hessian of the conjugate when it is constant (closed-form kinds).
    fn conjugate_hessian(&self) -> Option<DMatrix<S>>;
}

fn check_symmetric<S: Scalar>(m: &DMatrix<S>) -> Result<(), ProblemError> {
    let tol = S::from_config(1e-10);
    let scale = m.amax().max(S::one());
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                return Err(ProblemError::NotSymmetric);
            }
        }
    }
    Ok(())
}

fn extreme_eigenvalues<S: Scalar>(m: &DMatrix<S>) -> (S, S) {
    let eig = m.clone().symmetric_eigen();
    let mut lo = eig.eigenvalues[0];
    let mut hi = eig.eigenvalues[0];
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// `f(theta) = 1/2 (theta - b)^T Q (theta - b)` with `Q` symmetric positive
/// definite. The family `f(theta) = c theta^T theta` is `Q = 2c I`, `b = 0`.
#[derive(Debug)]
pub struct Quadratic<S: Scalar> {
    b: DVector<S>,
    q: DMatrix<S>,
    chol: Cholesky<S, Dyn>,
    q_inv: DMatrix<S>,
    mu: S,
    m: S,
}

impl<S: Scalar> Quadratic<S> {
    pub fn new(b: DVector<S>, q: DMatrix<S>) -> Result<Self, ProblemError> {
        if q.nrows() != b.len() || q.ncols() != b.len() {
            return Err(ProblemError::DimensionMismatch {
                expected: b.len(),
                got: q.nrows(),
            });
        }
        check_symmetric(&q)?;
        let (mu, m) = extreme_eigenvalues(&q);
        if mu <= S::zero() {
            return Err(ProblemError::NotPositiveDefinite);
        }
        let chol = q.clone().cholesky().ok_or(ProblemError::NotPositiveDefinite)?;
        let q_inv = chol.inverse();
        Ok(Quadratic {
            b,
            q,
            chol,
            q_inv,
            mu,
            m,
        })
    }

    /// `f(theta) = c theta^T theta` in `d` dimensions.
    pub fn isotropic(d: usize, c: S) -> Result<Self, ProblemError> {
        Quadratic::new(
            DVector::zeros(d),
            DMatrix::identity(d, d) * (c + c),
        )
    }

    /// One-dimensional `f(theta) = q/2 (theta - b)^2`.
    pub fn scalar(q: S, b: S) -> Result<Self, ProblemError> {
        Quadratic::new(
            DVector::from_element(1, b),
            DMatrix::from_element(1, 1, q),
        )
    }
}

impl<S: Scalar> LocalProblem<S> for Quadratic<S> {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn kind(&self) -> ProblemKind {
        ProblemKind::Quadratic
    }

    fn value(&self, theta: &DVector<S>) -> S {
        let r = theta - &self.b;
        (&self.q * &r).dot(&r) * S::from_config(0.5)
    }

    fn gradient(&self, theta: &DVector<S>) -> DVector<S> {
        &self.q * (theta - &self.b)
    }

    fn hessian(&self, _theta: &DVector<S>) -> DMatrix<S> {
        self.q.clone()
    }

    fn strong_convexity(&self) -> S {
        self.mu
    }

    fn smoothness(&self) -> S {
        self.m
    }

    fn conjugate_gradient(&mut self, y: &DVector<S>) -> Result<DVector<S>, ProblemError> {
        Ok(&self.b + self.chol.solve(y))
    }

    fn conjugate_hessian(&self) -> Option<DMatrix<S>> {
        Some(self.q_inv.clone())
    }
}

/// `f(theta) = 1/M ||X theta - Y||^2 (+ c ||theta||^2 with an explicit
/// ridge)`. Requires `X` with full column rank so the function is strongly
/// convex; a ridge, when given, is reported in the constants.
#[derive(Debug)]
pub struct LeastSquares<S: Scalar> {
    x: DMatrix<S>,
    y: DVector<S>,
    ridge: S,
    hessian: DMatrix<S>,
    chol: Cholesky<S, Dyn>,
    hessian_inv: DMatrix<S>,
    rhs0: DVector<S>,
    mu: S,
    m: S,
}

impl<S: Scalar> LeastSquares<S> {
    pub fn new(x: DMatrix<S>, y: DVector<S>) -> Result<Self, ProblemError> {
        Self::with_ridge(x, y, S::zero())
    }

    pub fn with_ridge(x: DMatrix<S>, y: DVector<S>, ridge: S) -> Result<Self, ProblemError> {
        if ridge < S::zero() {
            return Err(ProblemError::BadRidge(ridge.to_config()));
        }
        if x.nrows() != y.len() {
            return Err(ProblemError::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        let rows = S::from_f64(x.nrows() as f64).expect("row count");
        let two_over_m = S::from_config(2.0) / rows;
        let gram = x.transpose() * &x;
        let mut hessian = gram * two_over_m;
        for i in 0..hessian.nrows() {
            hessian[(i, i)] += ridge + ridge;
        }
        let (mut mu, m) = extreme_eigenvalues(&hessian);
        let cutoff = m * S::from_config(1e-12);
        if mu <= cutoff {
            return Err(ProblemError::RankDeficient);
        }
        let chol = hessian
            .clone()
            .cholesky()
            .ok_or(ProblemError::RankDeficient)?;
        let hessian_inv = chol.inverse();
        let rhs0 = x.transpose() * &y * two_over_m;
        if mu > m {
            mu = m;
        }
        Ok(LeastSquares {
            x,
            y,
            ridge,
            hessian,
            chol,
            hessian_inv,
            rhs0,
            mu,
            m,
        })
    }
}

impl<S: Scalar> LocalProblem<S> for LeastSquares<S> {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn kind(&self) -> ProblemKind {
        ProblemKind::LeastSquares
    }

    fn value(&self, theta: &DVector<S>) -> S {
        let r = &self.x * theta - &self.y;
        let rows = S::from_f64(self.x.nrows() as f64).expect("row count");
        r.norm_squared() / rows + self.ridge * theta.norm_squared()
    }

    fn gradient(&self, theta: &DVector<S>) -> DVector<S> {
        &self.hessian * theta - &self.rhs0
    }

    fn hessian(&self, _theta: &DVector<S>) -> DMatrix<S> {
        self.hessian.clone()
    }

    fn strong_convexity(&self) -> S {
        self.mu
    }

    fn smoothness(&self) -> S {
        self.m
    }

    fn conjugate_gradient(&mut self, y: &DVector<S>) -> Result<DVector<S>, ProblemError> {
        Ok(self.chol.solve(&(y + &self.rhs0)))
    }

    fn conjugate_hessian(&self) -> Option<DMatrix<S>> {
        Some(self.hessian_inv.clone())
    }
}

fn sigmoid<S: Scalar>(z: S) -> S {
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}

/// `log(1 + exp(-z))`, stable for large |z|.
fn softplus_neg<S: Scalar>(z: S) -> S {
    if z >= S::zero() {
        ((-z).exp() + S::one()).ln()
    } else {
        -z + (z.exp() + S::one()).ln()
    }
}

pub const LOGISTIC_DEFAULT_TOLERANCE: f64 = 1e-10;
const NEWTON_MAX_ITERATIONS: usize = 100;

/// Regularized logistic regression
/// `f(theta) = 1/M sum_j log(1 + exp(-Y_j X_j^T theta)) + c ||theta||^2`.
///
/// The conjugate oracle solves `min_theta f(theta) - y^T theta` by damped
/// Newton with backtracking, warm-started from the previous solution.
#[derive(Debug)]
pub struct Logistic<S: Scalar> {
    x: DMatrix<S>,
    labels: DVector<S>,
    ridge: S,
    tolerance: S,
    warm: DVector<S>,
    mu: S,
    m: S,
}

impl<S: Scalar> Logistic<S> {
    pub fn new(x: DMatrix<S>, labels: DVector<S>, ridge: S) -> Result<Self, ProblemError> {
        if ridge <= S::zero() {
            return Err(ProblemError::BadRidge(ridge.to_config()));
        }
        if x.nrows() != labels.len() {
            return Err(ProblemError::DimensionMismatch {
                expected: x.nrows(),
                got: labels.len(),
            });
        }
        if labels.iter().any(|&l| l != S::one() && l != -S::one()) {
            return Err(ProblemError::BadLabel);
        }
        let rows = S::from_f64(x.nrows() as f64).expect("row count");
        let gram = x.transpose() * &x;
        let (_, gram_max) = extreme_eigenvalues(&gram);
        let mu = ridge + ridge;
        let m = mu + gram_max / (rows + rows);
        let d = x.ncols();
        Ok(Logistic {
            x,
            labels,
            ridge,
            tolerance: S::from_config(LOGISTIC_DEFAULT_TOLERANCE),
            warm: DVector::zeros(d),
            mu,
            m,
        })
    }

    /// Tightened (or loosened) inner gradient-norm tolerance.
    pub fn with_inner_tolerance(mut self, tolerance: S) -> Self {
        self.tolerance = tolerance;
        self
    }

    fn data_margins(&self, theta: &DVector<S>) -> DVector<S> {
        let mut z = &self.x * theta;
        for (zi, &l) in z.iter_mut().zip(self.labels.iter()) {
            *zi *= l;
        }
        z
    }

    fn shifted_value(&self, theta: &DVector<S>, y: &DVector<S>) -> S {
        self.value(theta) - y.dot(theta)
    }

    fn shifted_gradient(&self, theta: &DVector<S>, y: &DVector<S>) -> DVector<S> {
        self.gradient(theta) - y
    }

    fn hessian_at(&self, theta: &DVector<S>) -> DMatrix<S> {
        let rows = S::from_f64(self.x.nrows() as f64).expect("row count");
        let z = self.data_margins(theta);
        let d = self.x.ncols();
        let mut h = DMatrix::identity(d, d) * (self.ridge + self.ridge);
        for j in 0..self.x.nrows() {
            let w = sigmoid(z[j]) * sigmoid(-z[j]) / rows;
            let row = self.x.row(j);
            for a in 0..d {
                for b in 0..d {
                    h[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        h
    }
}

impl<S: Scalar> LocalProblem<S> for Logistic<S> {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn kind(&self) -> ProblemKind {
        ProblemKind::Logistic
    }

    fn value(&self, theta: &DVector<S>) -> S {
        let rows = S::from_f64(self.x.nrows() as f64).expect("row count");
        let z = self.data_margins(theta);
        let mut acc = S::zero();
        for j in 0..z.len() {
            acc += softplus_neg(z[j]);
        }
        acc / rows + self.ridge * theta.norm_squared()
    }

    fn gradient(&self, theta: &DVector<S>) -> DVector<S> {
        let rows = S::from_f64(self.x.nrows() as f64).expect("row count");
        let z = self.data_margins(theta);
        let mut g = theta * (self.ridge + self.ridge);
        for j in 0..self.x.nrows() {
            let w = -self.labels[j] * sigmoid(-z[j]) / rows;
            for a in 0..self.x.ncols() {
                g[a] += w * self.x[(j, a)];
            }
        }
        g
    }

    fn hessian(&self, theta: &DVector<S>) -> DMatrix<S> {
        self.hessian_at(theta)
    }

    fn strong_convexity(&self) -> S {
        self.mu
    }

    fn smoothness(&self) -> S {
        self.m
    }

    fn conjugate_gradient(&mut self, y: &DVector<S>) -> Result<DVector<S>, ProblemError> {
        let mut theta = self.warm.clone();
        let mut grad = self.shifted_gradient(&theta, y);
        for _ in 0..NEWTON_MAX_ITERATIONS {
            let gnorm = grad.norm();
            if gnorm <= self.tolerance {
                self.warm = theta.clone();
                return Ok(theta);
            }
            let h = self.hessian_at(&theta);
            let step = match h.cholesky() {
                Some(ch) => ch.solve(&grad),
                // ridge keeps the Hessian positive definite; fall back to
                // a gradient step if factorization still fails numerically
                None => grad.clone() * (S::one() / self.m),
            };
            // Pure Newton whenever it makes clear gradient progress; near
            // the optimum value comparisons are flat at roundoff and only
            // the gradient norm can certify the quadratic-convergence phase.
            let full = &theta - &step;
            let full_grad = self.shifted_gradient(&full, y);
            if full_grad.norm() <= gnorm * S::from_config(0.5) {
                theta = full;
                grad = full_grad;
                continue;
            }
            let slope = grad.dot(&step);
            let current = self.shifted_value(&theta, y);
            let mut t = S::one();
            let armijo = S::from_config(0.25);
            let mut accepted = false;
            for _ in 0..60 {
                let candidate = &theta - &step * t;
                let val = self.shifted_value(&candidate, y);
                if val.is_finite() && val < current && val <= current - armijo * t * slope {
                    theta = candidate;
                    accepted = true;
                    break;
                }
                t *= S::from_config(0.5);
            }
            if !accepted {
                break;
            }
            grad = self.shifted_gradient(&theta, y);
        }
        let residual = self.shifted_gradient(&theta, y).norm();
        if residual <= self.tolerance {
            self.warm = theta.clone();
            return Ok(theta);
        }
        Err(ProblemError::InnerSolveFailed {
            iterations: NEWTON_MAX_ITERATIONS,
            tolerance: self.tolerance.to_config(),
            residual: residual.to_config(),
        })
    }

    fn conjugate_hessian(&self) -> Option<DMatrix<S>> {
        None
    }

    fn gradient_resolution(&self) -> S {
        self.tolerance * S::from_config(10.0)
    }
}

/// Coordinate-separable objective `F(x) = sum_l a_l x_l^p + offset` with
/// `p` either 2 or 4, for the parallel distributed mode.
#[derive(Debug, Clone)]
pub struct Separable<S: Scalar> {
    coeffs: Vec<S>,
    exponent: u8,
    offset: S,
    /// Per-coordinate box bound used by the quartic Lipschitz constants;
    /// grown on the fly when an iterate leaves the box.
    hat: Vec<S>,
}

impl<S: Scalar> Separable<S> {
    pub fn new(coeffs: Vec<S>, exponent: u8, offset: S) -> Result<Self, ProblemError> {
        if exponent != 2 && exponent != 4 {
            return Err(ProblemError::BadExponent(exponent));
        }
        for (index, &a) in coeffs.iter().enumerate() {
            if a <= S::zero() {
                return Err(ProblemError::NonPositiveCoefficient {
                    index,
                    value: a.to_config(),
                });
            }
        }
        let hat = vec![S::one(); coeffs.len()];
        Ok(Separable {
            coeffs,
            exponent,
            offset,
            hat,
        })
    }

    pub fn num_coords(&self) -> usize {
        self.coeffs.len()
    }

    pub fn exponent(&self) -> u8 {
        self.exponent
    }

    /// Seeds the box bounds from an initial point.
    pub fn init_box(&mut self, x0: &[S]) {
        for (h, &x) in self.hat.iter_mut().zip(x0) {
            *h = x.abs().max(S::one());
        }
    }

    /// Grows a box bound when the iterate exceeds it.
    pub fn observe(&mut self, l: usize, x: S) {
        if x.abs() > self.hat[l] {
            self.hat[l] = x.abs();
        }
    }

    pub fn value(&self, x: &[S]) -> S {
        let mut acc = self.offset;
        for (l, &xl) in x.iter().enumerate() {
            acc += self.coeffs[l] * power(xl, self.exponent);
        }
        acc
    }

    /// `p a_l x^(p-1)`
    pub fn coord_gradient(&self, l: usize, x: S) -> S {
        let p = S::from_f64(f64::from(self.exponent)).expect("exponent");
        p * self.coeffs[l] * power(x, self.exponent - 1)
    }

    /// `p (p-1) a_l x^(p-2)`
    pub fn coord_curvature(&self, l: usize, x: S) -> S {
        let p = f64::from(self.exponent);
        S::from_f64(p * (p - 1.0)).expect("exponent") * self.coeffs[l]
            * power(x, self.exponent - 2)
    }

    /// Global per-coordinate Lipschitz constant: `2 a_l` for the quadratic,
    /// `12 a_l hat_l^2` for the quartic over the current box.
    pub fn coord_lipschitz(&self, l: usize) -> S {
        match self.exponent {
            2 => self.coeffs[l] + self.coeffs[l],
            _ => S::from_config(12.0) * self.coeffs[l] * self.hat[l] * self.hat[l],
        }
    }

    /// Minimum of the separable objective (all coordinates at zero).
    pub fn optimum_value(&self) -> S {
        self.offset
    }
}

fn power<S: Scalar>(x: S, e: u8) -> S {
    match e {
        0 => S::one(),
        1 => x,
        2 => x * x,
        3 => x * x * x,
        _ => (x * x) * (x * x),
    }
}

/// Standard normal draw (Box-Muller); kept explicit so streams are stable.
pub fn standard_normal<R: rand::Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Synthetic least-squares family: shared linear model, per-node Gaussian
/// data, targets scaled by `node index + 1` so the nodes are not iid.
pub fn lls_family<S: Scalar>(
    n: usize,
    d: usize,
    m: usize,
    noise_std: f64,
    scale_by_index: bool,
    seed: u64,
) -> Result<Vec<LeastSquares<S>>, ProblemError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let model: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = DMatrix::from_fn(m, d, |_, _| S::from_config(standard_normal(&mut rng)));
        let mut y = DVector::zeros(m);
        for r in 0..m {
            let mut acc = noise_std * standard_normal(&mut rng);
            for c in 0..d {
                acc += model[c] * x[(r, c)].to_config();
            }
            if scale_by_index {
                acc *= (i + 1) as f64;
            }
            y[r] = S::from_config(acc);
        }
        out.push(LeastSquares::new(x, y)?);
    }
    Ok(out)
}

/// Synthetic logistic family: labels from the sign of a shared linear model.
pub fn logistic_family<S: Scalar>(
    n: usize,
    d: usize,
    m: usize,
    ridge: f64,
    seed: u64,
) -> Result<Vec<Logistic<S>>, ProblemError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let model: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let x = DMatrix::from_fn(m, d, |_, _| S::from_config(standard_normal(&mut rng)));
        let mut labels = DVector::zeros(m);
        for r in 0..m {
            let mut acc = 0.5 * standard_normal(&mut rng);
            for c in 0..d {
                acc += model[c] * x[(r, c)].to_config();
            }
            labels[r] = if acc >= 0.0 { S::one() } else { -S::one() };
        }
        out.push(Logistic::new(x, labels, S::from_config(ridge))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_conjugate_examples() {
        // f(theta) = 1/2 (theta - 1)^2: f*(y) = y^2/2 + y
        let mut f = Quadratic::<f64>::scalar(1.0, 1.0).unwrap();
        let y0 = DVector::from_element(1, 0.0);
        assert_relative_eq!(f.conjugate_gradient(&y0).unwrap()[0], 1.0);
        assert_relative_eq!(f.conjugate_value(&y0).unwrap(), 0.0);

        // f(theta) = 1/2 (theta + 1)^2: f*(y) = y^2/2 - y, f*(-1) = 3/2
        let mut g = Quadratic::<f64>::scalar(1.0, -1.0).unwrap();
        let ym = DVector::from_element(1, -1.0);
        assert_relative_eq!(g.conjugate_gradient(&ym).unwrap()[0], -2.0);
        assert_relative_eq!(g.conjugate_value(&ym).unwrap(), 1.5);

        // y = 0 returns the unconstrained minimizer b
        let b = DVector::from_vec(vec![2.0, -3.0]);
        let q = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let mut h = Quadratic::new(b.clone(), q).unwrap();
        let z = DVector::zeros(2);
        assert_relative_eq!(h.conjugate_gradient(&z).unwrap(), b, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_rejects_bad_q() {
        let b = DVector::zeros(2);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            Quadratic::new(b.clone(), asym),
            Err(ProblemError::NotSymmetric)
        ));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            Quadratic::new(b, indef),
            Err(ProblemError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn isotropic_constants() {
        let f = Quadratic::<f64>::isotropic(5, 3.0).unwrap();
        assert_relative_eq!(f.strong_convexity(), 6.0);
        assert_relative_eq!(f.smoothness(), 6.0);
    }

    #[test]
    fn lls_scalar_example() {
        // X = [[1]], Y = [0], M = 1: f(theta) = theta^2
        let mut f =
            LeastSquares::<f64>::new(DMatrix::from_element(1, 1, 1.0), DVector::zeros(1)).unwrap();
        let y = DVector::from_element(1, 2.0);
        assert_relative_eq!(f.conjugate_gradient(&y).unwrap()[0], 1.0);
        assert_relative_eq!(f.strong_convexity(), 2.0);
    }

    #[test]
    fn lls_identity_example() {
        // X = I, Y = (1,1), M = 2: minimizer of ||theta - Y||^2 is Y
        let mut f =
            LeastSquares::<f64>::new(DMatrix::identity(2, 2), DVector::from_element(2, 1.0))
                .unwrap();
        let z = DVector::zeros(2);
        let theta = f.conjugate_gradient(&z).unwrap();
        assert_relative_eq!(theta, DVector::from_element(2, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn lls_rejects_rank_deficient() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let err = LeastSquares::<f64>::new(x, DVector::zeros(2)).unwrap_err();
        assert!(err.to_string().contains("strongly convex"));
    }

    #[test]
    fn lls_stationarity_on_random_instance() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let x = DMatrix::from_fn(8, 3, |_, _| standard_normal(&mut rng));
        let yv = DVector::from_fn(8, |_, _| standard_normal(&mut rng));
        let mut f = LeastSquares::<f64>::new(x, yv).unwrap();
        for _ in 0..20 {
            let y = DVector::from_fn(3, |_, _| standard_normal(&mut rng));
            let theta = f.conjugate_gradient(&y).unwrap();
            assert_relative_eq!(f.gradient(&theta), y, epsilon = 1e-10);
        }
    }

    /// Root of `2 theta - sigmoid(-theta) = y` by bisection, for the 1-d
    /// logistic instance X = [1], label +1, c = 1, M = 1.
    fn bisect_logistic_1d(y: f64) -> f64 {
        let g = |t: f64| 2.0 * t - 1.0 / (1.0 + t.exp()) - y;
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn logistic_matches_bisection_oracle() {
        let mut f = Logistic::<f64>::new(
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, 1.0),
            1.0,
        )
        .unwrap();
        for y in [0.0, -1.0, 0.7, 2.5] {
            let theta = f.conjugate_gradient(&DVector::from_element(1, y)).unwrap();
            assert_relative_eq!(theta[0], bisect_logistic_1d(y), epsilon = 1e-8);
        }
    }

    #[test]
    fn logistic_stationarity_and_norm_bound() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let c = 50.0;
        let x = DMatrix::from_fn(6, 2, |_, _| standard_normal(&mut rng));
        let labels = DVector::from_fn(6, |r, _| if r % 2 == 0 { 1.0 } else { -1.0 });
        let mut f = Logistic::<f64>::new(x, labels, c).unwrap();
        let zero = DVector::zeros(2);
        let data_grad_at_zero = f.gradient(&zero).norm();
        let theta = f.conjugate_gradient(&zero).unwrap();
        // stationarity is the inner-solver contract
        assert!(f.gradient(&theta).norm() <= 1e-9);
        // large ridge keeps the minimizer near the origin
        assert!(theta.norm() <= data_grad_at_zero / (2.0 * c) + 1e-9);
    }

    #[test]
    fn logistic_smoothness_bound() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 3.0]);
        let labels = DVector::from_vec(vec![1.0, -1.0]);
        let f = Logistic::<f64>::new(x, labels, 0.5).unwrap();
        // 2c + lambda_max(X^T X) / (2 M) = 1 + 10/4
        assert_relative_eq!(f.smoothness(), 3.5);
        assert_relative_eq!(f.strong_convexity(), 1.0);
    }

    #[test]
    fn separable_examples() {
        let f = Separable::<f64>::new(vec![1.0, 1.0], 2, 0.0).unwrap();
        assert_relative_eq!(f.coord_gradient(0, 3.0), 6.0);
        // one exact step from any x lands on the coordinate optimum
        let x = 3.0;
        assert_relative_eq!(x - f.coord_gradient(0, x) / f.coord_lipschitz(0), 0.0);

        let g = Separable::<f64>::new(vec![2.0], 4, 0.0).unwrap();
        assert_relative_eq!(g.coord_gradient(0, 1.0), 8.0);
        assert_relative_eq!(g.coord_curvature(0, 1.0), 24.0);
        assert!(Separable::<f64>::new(vec![0.0], 2, 0.0).is_err());
        assert!(Separable::<f64>::new(vec![1.0], 3, 0.0).is_err());
    }

    #[test]
    fn separable_box_refresh() {
        let mut f = Separable::<f64>::new(vec![1.0], 4, 0.0).unwrap();
        f.init_box(&[2.0]);
        assert_relative_eq!(f.coord_lipschitz(0), 48.0);
        f.observe(0, -3.0);
        assert_relative_eq!(f.coord_lipschitz(0), 108.0);
        f.observe(0, 1.0); // inside the box: no shrink
        assert_relative_eq!(f.coord_lipschitz(0), 108.0);
    }

    #[test]
    fn fenchel_young_equality() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let q = {
            let a = DMatrix::from_fn(3, 3, |_, _| standard_normal(&mut rng));
            &a * a.transpose() + DMatrix::identity(3, 3)
        };
        let b = DVector::from_fn(3, |_, _| standard_normal(&mut rng));
        let mut f = Quadratic::new(b, q).unwrap();
        for _ in 0..50 {
            let y = DVector::from_fn(3, |_, _| standard_normal(&mut rng));
            let (fstar, theta) = f.conjugate_pair(&y).unwrap();
            assert_relative_eq!(fstar + f.value(&theta), y.dot(&theta), epsilon = 1e-9);
        }
    }
}

