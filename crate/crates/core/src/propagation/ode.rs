//! Continuum-depth kernels of residual ReLU networks (`σ_w² = 2`, `σ_b² = 0`).
//!
//! Plain residual blocks give `q̇ = 2𝒯(q)`, `Θ̇ = 2𝒯 + 2𝒯̇ ⊙ Θ`. With the
//! `1/√(1+dt)` normalization after each block the discrete update
//! `Θ ← (Θ + dt 𝒦 + 2dt 𝒯̇ Θ)/(1 + dt)` gives `𝒦̇ = −𝒦 + 2𝒯(𝒦)` and
//! `Θ̇ = −Θ + 𝒦 + 2𝒯̇ ⊙ Θ`.

use crate::activation::{relu_t, relu_t_dot};
use crate::error::{Error, Result};

/// Largest tolerated drift of the layer-norm diagonal from one.
pub const LAYER_NORM_DRIFT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OdeVariant {
    ResidualRelu,
    ResidualReluLayerNorm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeKernelState {
    pub t: f64,
    pub q_diag: f64,
    pub q_ab: f64,
    pub p_diag: f64,
    pub p_ab: f64,
    pub variant: OdeVariant,
}

impl OdeKernelState {
    /// Unit-variance inputs at correlation `c0` with a zero initial NTK.
    pub fn initial(variant: OdeVariant, c0: f64) -> Self {
        OdeKernelState {
            t: 0.0,
            q_diag: 1.0,
            q_ab: c0,
            p_diag: 0.0,
            p_ab: 0.0,
            variant,
        }
    }
}

type Vec4 = [f64; 4];

fn rhs(variant: OdeVariant, y: &Vec4) -> Vec4 {
    let [q, qab, p, pab] = *y;
    let q = q.max(f64::MIN_POSITIVE);
    let qab = qab.clamp(-q, q);
    let (t_diag, t_ab) = (0.5 * q, relu_t(q, qab));
    let (dot_diag, dot_ab) = (0.5, relu_t_dot(q, qab));
    match variant {
        OdeVariant::ResidualRelu => [
            2.0 * t_diag,
            2.0 * t_ab,
            2.0 * t_diag + 2.0 * dot_diag * p,
            2.0 * t_ab + 2.0 * dot_ab * pab,
        ],
        OdeVariant::ResidualReluLayerNorm => [
            -q + 2.0 * t_diag,
            -qab + 2.0 * t_ab,
            -p + q + 2.0 * dot_diag * p,
            -pab + qab + 2.0 * dot_ab * pab,
        ],
    }
}

fn axpy(y: &Vec4, a: f64, k: &Vec4) -> Vec4 {
    [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2], y[3] + a * k[3]]
}

fn rk4(variant: OdeVariant, y: &Vec4, dt: f64) -> Vec4 {
    let k1 = rhs(variant, y);
    let k2 = rhs(variant, &axpy(y, 0.5 * dt, &k1));
    let k3 = rhs(variant, &axpy(y, 0.5 * dt, &k2));
    let k4 = rhs(variant, &axpy(y, dt, &k3));
    let mut out = *y;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Classical RK4 from `s0` to `t_end` with step `dt`; returns `s0`, every
/// `sample_every`-th state and the final state.
pub fn integrate_residual(
    s0: &OdeKernelState,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Vec<OdeKernelState>> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_end >= s0.t) || sample_every == 0 {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0, t_end ≥ t0 and a positive sampling stride (dt = {dt}, t_end = {t_end})"
        )));
    }
    let steps = ((t_end - s0.t) / dt).round() as usize;
    let mut y = [s0.q_diag, s0.q_ab, s0.p_diag, s0.p_ab];
    let mut out = vec![*s0];
    for n in 1..=steps {
        y = rk4(s0.variant, &y, dt);
        y[1] = y[1].clamp(-y[0], y[0]);
        let t = s0.t + n as f64 * dt;
        if s0.variant == OdeVariant::ResidualReluLayerNorm {
            let drift = (y[0] - 1.0).abs();
            if drift > LAYER_NORM_DRIFT_TOL {
                return Err(Error::StepTooLarge { t, drift });
            }
        }
        if n % sample_every == 0 || n == steps {
            out.push(OdeKernelState {
                t,
                q_diag: y[0],
                q_ab: y[1],
                p_diag: y[2],
                p_ab: y[3],
                variant: s0.variant,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_diagonal_is_exponential() {
        let s0 = OdeKernelState::initial(OdeVariant::ResidualRelu, 0.3);
        let end = *integrate_residual(&s0, 5.0, 1e-3, 1000).unwrap().last().unwrap();
        let e5 = 5f64.exp();
        assert!((end.t - 5.0).abs() < 1e-12);
        assert!((end.q_diag / e5 - 1.0).abs() < 1e-6);
        assert!((end.p_diag / (5.0 * e5) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn layer_norm_keeps_unit_diagonal() {
        let s0 = OdeKernelState::initial(OdeVariant::ResidualReluLayerNorm, 0.0);
        let traj = integrate_residual(&s0, 10.0, 1e-3, 500).unwrap();
        for s in &traj {
            assert!((s.q_diag - 1.0).abs() < 1e-12);
            assert!((s.p_diag - s.t).abs() < 1e-9);
            assert!(s.q_ab <= s.q_diag);
        }
        assert_eq!(traj.len(), 21);
    }

    #[test]
    fn invalid_steps_rejected() {
        let s0 = OdeKernelState::initial(OdeVariant::ResidualRelu, 0.0);
        assert!(integrate_residual(&s0, 1.0, 0.0, 1).is_err());
        assert!(integrate_residual(&s0, 1.0, 1e-2, 0).is_err());
    }
}
