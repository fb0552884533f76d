//! Two-point recursion for a single pair of inputs.

use crate::activation::ActivationKernel;
use crate::error::{Error, Result};
use crate::phase::Hyperparams;

/// Diagonal and off-diagonal entries of `𝒦⁽ˡ⁾` and `Θ⁽ˡ⁾` for one input pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarKernelState {
    pub q_diag: f64,
    pub q_ab: f64,
    pub p_diag: f64,
    pub p_ab: f64,
    pub depth: usize,
}

impl ScalarKernelState {
    pub fn new(q_diag: f64, q_ab: f64, p_diag: f64, p_ab: f64) -> Result<Self> {
        if q_ab.abs() > q_diag * (1.0 + 1e-12) {
            return Err(Error::Domain {
                q_ab,
                qstar: q_diag,
            });
        }
        Ok(ScalarKernelState {
            q_diag,
            q_ab,
            p_diag,
            p_ab,
            depth: 0,
        })
    }

    /// Input-layer state for two inputs at variance `qstar` and correlation
    /// `c0`, with the NTK started equal to the NNGP.
    pub fn from_correlation(qstar: f64, c0: f64) -> Result<Self> {
        Self::new(qstar, c0 * qstar, qstar, c0 * qstar)
    }
}

/// `q_ab′ = σ_w² 𝒯(q_ab) + σ_b²`, `p_ab′ = q_ab′ + σ_w² 𝒯̇(q_ab) p_ab`,
/// `q′ = q*`, `p′ = q* + χ₁ p`. `k` must be built at `q*`.
pub fn step_scalar(
    s: &ScalarKernelState,
    h: &Hyperparams,
    k: &ActivationKernel,
) -> Result<ScalarKernelState> {
    let (sw, sb, q) = (h.sigma_w2, h.sigma_b2, k.qstar());
    let chi1 = sw * k.t_dot(q)?;
    let q_ab = (sw * k.t_map(s.q_ab)? + sb).clamp(-q, q);
    let p_ab = q_ab + sw * k.t_dot(s.q_ab)? * s.p_ab;
    Ok(ScalarKernelState {
        q_diag: q,
        q_ab,
        p_diag: q + chi1 * s.p_diag,
        p_ab,
        depth: s.depth + 1,
    })
}

/// Applies `steps` layers, returning every intermediate state including `s0`.
pub fn scalar_trajectory(
    s0: &ScalarKernelState,
    h: &Hyperparams,
    k: &ActivationKernel,
    steps: usize,
) -> Result<Vec<ScalarKernelState>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(*s0);
    for _ in 0..steps {
        let next = step_scalar(out.last().expect("nonempty"), h, k)?;
        out.push(next);
    }
    Ok(out)
}
