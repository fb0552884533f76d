//! Kernel-regression mean predictor, gradient-flow dynamics and the
//! ordered-phase limiting predictor.

use nalgebra::{DMatrix, DVector};

use crate::activation::ActivationKernel;
use crate::eigen::{symmetric_eigen, symmetric_eigenvalues};
use crate::error::{Error, Result};
use crate::phase::{Hyperparams, Phase, PhaseReport};
use crate::propagation::{KernelPair, Propagator};
use crate::spectral::SpectrumSummary;

/// Relative ridge added when the plain factorization fails.
pub const FALLBACK_RIDGE: f64 = 1e-12;

/// Train/test kernel blocks with centered labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTask {
    pub k_dd: DMatrix<f64>,
    pub k_td: DMatrix<f64>,
    pub y: DMatrix<f64>,
    /// Ridge `σ²` added to the train-train block.
    pub ridge: f64,
}

impl RegressionTask {
    pub fn new(k_dd: DMatrix<f64>, k_td: DMatrix<f64>, y: DMatrix<f64>, ridge: f64) -> Result<Self> {
        let m = k_dd.nrows();
        if k_dd.ncols() != m || k_td.ncols() != m || y.nrows() != m {
            return Err(Error::Dimension(format!(
                "train block {}x{}, test block {}x{}, labels {}x{}",
                k_dd.nrows(),
                k_dd.ncols(),
                k_td.nrows(),
                k_td.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ridge must be nonnegative, got {ridge}"
            )));
        }
        Ok(RegressionTask {
            k_dd,
            k_td,
            y,
            ridge,
        })
    }

    /// Splits a kernel over `train` points followed by test points.
    pub fn from_joint(k: &DMatrix<f64>, train: usize, y: DMatrix<f64>, ridge: f64) -> Result<Self> {
        let total = k.nrows();
        if train == 0 || train > total || k.ncols() != total {
            return Err(Error::Dimension(format!(
                "cannot split a {}x{} kernel at {train} training points",
                total,
                k.ncols()
            )));
        }
        let k_dd = k.view((0, 0), (train, train)).into_owned();
        let k_td = k.view((train, 0), (total - train, train)).into_owned();
        Self::new(k_dd, k_td, y, ridge)
    }

    pub fn train_len(&self) -> usize {
        self.k_dd.nrows()
    }

    fn regularized(&self) -> DMatrix<f64> {
        let mut a = self.k_dd.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += self.ridge;
        }
        a
    }
}

/// Subtracts each column's mean.
pub fn center_labels(y: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = y.clone();
    let m = y.nrows().max(1) as f64;
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / m;
        col.add_scalar_mut(-mean);
    }
    out
}

/// Solves `A X = B` for symmetric positive definite `A`, retrying once with
/// a ridge of `1e−12·trace/m`.
pub fn spd_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    let m = a.nrows();
    let jitter = FALLBACK_RIDGE * a.trace().abs() / m.max(1) as f64;
    let mut shifted = a.clone();
    for i in 0..m {
        shifted[(i, i)] += jitter;
    }
    if let Some(ch) = shifted.cholesky() {
        return Ok(ch.solve(b));
    }
    let min_eigenvalue = symmetric_eigenvalues(a)?
        .first()
        .copied()
        .unwrap_or(f64::NAN);
    Err(Error::Singular { min_eigenvalue })
}

/// `K_td (K_dd + σ² I)⁻¹ Y`.
pub fn mean_predict(task: &RegressionTask) -> Result<DMatrix<f64>> {
    let alpha = spd_solve(&task.regularized(), &task.y)?;
    Ok(&task.k_td * alpha)
}

/// Outputs of gradient flow with learning rate `eta` at the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTrace {
    pub times: Vec<f64>,
    pub mu_train: Vec<DMatrix<f64>>,
    pub mu_test: Vec<DMatrix<f64>>,
    pub eta: f64,
}

/// Gradient flow `μ_t = (Id − e^{−ηKt}) Y` on the train set, and its image
/// `K_td K_dd⁻¹ (Id − e^{−ηKt}) Y` on the test set, in the eigenbasis of
/// `K_dd + σ² I`.
pub fn dynamics(task: &RegressionTask, eta: f64, times: &[f64]) -> Result<DynamicsTrace> {
    let eig = symmetric_eigen(&task.regularized())?;
    let v = &eig.vectors;
    let y_rot = v.transpose() * &task.y;
    let kv = &task.k_td * v;
    let mut mu_train = Vec::with_capacity(times.len());
    let mut mu_test = Vec::with_capacity(times.len());
    for &t in times {
        let mut train_rot = y_rot.clone();
        let mut test_rot = y_rot.clone();
        for (i, &lam) in eig.values.iter().enumerate() {
            let decay = -(-eta * lam * t).exp_m1();
            // (1 − e^{−ηλt})/λ → ηt as λ → 0.
            let gain = if lam > 0.0 { decay / lam } else { eta * t };
            train_rot.row_mut(i).scale_mut(decay);
            test_rot.row_mut(i).scale_mut(gain);
        }
        mu_train.push(v * train_rot);
        mu_test.push(&kv * test_rot);
    }
    Ok(DynamicsTrace {
        times: times.to_vec(),
        mu_train,
        mu_test,
        eta,
    })
}

/// `2/λ_max`, the largest stable step of discrete gradient descent.
pub fn max_learning_rate(summary: &SpectrumSummary) -> Result<f64> {
    if !(summary.lambda_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "largest eigenvalue must be positive, got {}",
            summary.lambda_max
        )));
    }
    Ok(2.0 / summary.lambda_max)
}

/// Frobenius norms of the residual `Y − μ` under discrete gradient descent
/// `μ ← μ + η K (Y − μ)` started from zero, one entry per step (after the
/// update) for `steps` steps.
pub fn gradient_descent_residuals(k: &DMatrix<f64>, y: &DMatrix<f64>, eta: f64, steps: usize) -> Vec<f64> {
    let mut residual = y.clone();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        residual -= eta * (k * &residual);
        out.push(residual.norm());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPoint {
    pub depth: usize,
    /// `‖P(Θ⁽ˡ⁾) Y‖_F` over the test rows.
    pub ntk: f64,
    /// `‖P(𝒦⁽ˡ⁾) Y‖_F` over the test rows.
    pub nngp: f64,
}

/// Mean-predictor norms at each depth. `x` holds `train` training rows
/// followed by the test rows; `y` are the centered training labels.
pub fn predictor_decay(
    h: &Hyperparams,
    kernel: &ActivationKernel,
    x: &DMatrix<f64>,
    train: usize,
    y: &DMatrix<f64>,
    depths: &[usize],
) -> Result<Vec<DecayPoint>> {
    let mut prop = Propagator::new(h, kernel.clone(), x)?;
    let mut out = Vec::with_capacity(depths.len());
    for &l in depths {
        prop.advance_to(l)?;
        let kp = prop.kernels()?;
        let ntk = mean_predict(&RegressionTask::from_joint(&kp.ntk, train, y.clone(), 0.0)?)?;
        let nngp = mean_predict(&RegressionTask::from_joint(&kp.nngp, train, y.clone(), 0.0)?)?;
        out.push(DecayPoint {
            depth: l,
            ntk: ntk.norm(),
            nngp: nngp.norm(),
        });
    }
    Ok(out)
}

/// Mean-predictor matrix `P = Θ_td Θ_dd⁻¹` in the ordered phase, written
/// through the data-dependent part `A = (Θ − p* 𝟙𝟙ᵀ)/(l χ₁ˡ)`:
/// `P = A_td A_dd⁻¹ − p̂ A_td a aᵀ + p̂ 𝟙_t aᵀ`, `a = A_dd⁻¹ 𝟙`,
/// `p̂ = p*/(l χ₁ˡ + p* 𝟙ᵀa)`.
///
/// `kp` covers `train` training points followed by test points and `depth`
/// is the `l` used in the normalization.
pub fn ordered_limit_predictor(
    kp: &KernelPair,
    train: usize,
    ph: &PhaseReport,
    depth: usize,
) -> Result<DMatrix<f64>> {
    if ph.phase != Phase::Ordered {
        return Err(Error::InvalidParameter(format!(
            "limit predictor needs the ordered phase, got {}",
            ph.phase
        )));
    }
    let pstar = ph.pstar.expect("ordered phase has finite p*");
    let total = kp.len();
    if train == 0 || train > total {
        return Err(Error::Dimension(format!(
            "cannot split {total} points at {train} training points"
        )));
    }
    let lf = depth.max(1) as f64;
    let scale = lf * ph.chi1.powf(lf);
    let a = kp.ntk.map(|v| (v - pstar) / scale);
    let a_dd = a.view((0, 0), (train, train)).into_owned();
    let a_td = a.view((train, 0), (total - train, train)).into_owned();
    let lu = a_dd.clone().lu();
    let ones = DVector::from_element(train, 1.0);
    let singular = || {
        let min_eigenvalue = symmetric_eigenvalues(&a_dd)
            .ok()
            .and_then(|v| v.into_iter().min_by(|x, y| x.abs().total_cmp(&y.abs())))
            .unwrap_or(f64::NAN);
        Error::Singular { min_eigenvalue }
    };
    let a_vec = lu.solve(&ones).ok_or_else(singular)?;
    let a_inv = lu.try_inverse().ok_or_else(singular)?;
    if a_vec.iter().chain(a_inv.iter()).any(|v| !v.is_finite()) {
        return Err(singular());
    }
    let p_hat = pstar / (scale + pstar * a_vec.sum());
    let at_a = &a_td * &a_vec;
    let n = total - train;
    let ones_t = DVector::from_element(n, 1.0);
    Ok(&a_td * a_inv - (at_a * a_vec.transpose()) * p_hat + (ones_t * a_vec.transpose()) * p_hat)
}
