//! Output layer with dropout on the penultimate activations.
//!
//! Dropout with keep rate `ρ` rescales surviving activations by `1/ρ`, which
//! inflates the second moment on the diagonal only: off-diagonal pairs use
//! independent masks and are unchanged.

use crate::activation::ActivationKernel;
use crate::error::{Error, Result};
use crate::phase::Hyperparams;
use crate::propagation::fcn::{step_fcn, KernelPair};

/// Applies one more layer to the penultimate kernels `kp`, with dropout at
/// keep rate `h.dropout_keep` on its input. The diagonals become
/// `𝒦_ρ(x,x) = σ_w² 𝒯(𝒦(x,x))/ρ + σ_b²` and
/// `Θ_ρ(x,x) = Θ(x,x)/ρ + (1 − 1/ρ) σ_b²`, where `Θ` is the plain layer.
/// At `ρ = 1` the result equals [`step_fcn`] bit for bit.
pub fn apply_dropout(kp: &KernelPair, h: &Hyperparams, k: &ActivationKernel) -> Result<KernelPair> {
    let rho = h.dropout_keep;
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "dropout keep rate must lie in (0, 1], got {rho}"
        )));
    }
    let mut out = step_fcn(kp, h, k)?;
    let excess = 1.0 / rho - 1.0;
    for i in 0..out.len() {
        out.nngp[(i, i)] += excess * h.sigma_w2 * k.t_map(kp.nngp[(i, i)])?;
        let t = out.ntk[(i, i)];
        out.ntk[(i, i)] = t + excess * (t - h.sigma_b2);
    }
    Ok(out)
}

/// Large-depth condition number `m p*/((1/ρ − 1)(p* − σ_b²)) + 1` of the
/// dropout NTK in the ordered phase.
pub fn dropout_kappa_limit(m: usize, pstar: f64, sigma_b2: f64, rho: f64) -> f64 {
    m as f64 * pstar / ((1.0 / rho - 1.0) * (pstar - sigma_b2)) + 1.0
}
