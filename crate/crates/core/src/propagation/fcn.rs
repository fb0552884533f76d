//! Dense NNGP/NTK recursion for fully-connected networks.

use nalgebra::DMatrix;

use crate::activation::ActivationKernel;
use crate::error::{Error, Result};
use crate::phase::Hyperparams;

/// Largest tolerated drift of an NNGP diagonal entry away from `q*` before
/// it is pinned back.
pub const DIAGONAL_DRIFT_TOL: f64 = 1e-8;

/// NNGP `𝒦⁽ˡ⁾` and NTK `Θ⁽ˡ⁾` over a dataset at depth `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPair {
    pub nngp: DMatrix<f64>,
    pub ntk: DMatrix<f64>,
    pub depth: usize,
}

impl KernelPair {
    pub fn len(&self) -> usize {
        self.nngp.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.nngp.nrows() == 0
    }
}

/// Rescales every row to mean square `q*`.
pub fn normalize_inputs(x: &DMatrix<f64>, qstar: f64) -> Result<DMatrix<f64>> {
    let n = x.ncols();
    let mut out = x.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        let ms = row.iter().map(|v| v * v).sum::<f64>() / n as f64;
        if !(ms > 0.0) {
            return Err(Error::ZeroRow { row: i });
        }
        row *= (qstar / ms).sqrt();
    }
    Ok(out)
}

/// Input-layer kernels `𝒦⁽⁰⁾ = XXᵀ/n` with `Θ⁽⁰⁾ = 𝒦⁽⁰⁾`.
pub fn init_kernels(x: &DMatrix<f64>) -> KernelPair {
    let n = x.ncols().max(1) as f64;
    let mut nngp = x * x.transpose() / n;
    symmetrize(&mut nngp);
    KernelPair {
        ntk: nngp.clone(),
        nngp,
        depth: 0,
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// One layer: `𝒦′ = σ_w² 𝒯(𝒦) + σ_b²`, `Θ′ = 𝒦′ + σ_w² 𝒯̇(𝒦) ⊙ Θ`.
///
/// `k` must be built at the diagonal fixed point `q*`. The NNGP diagonal is
/// pinned to `q*` after the drift check.
pub fn step_fcn(kp: &KernelPair, h: &Hyperparams, k: &ActivationKernel) -> Result<KernelPair> {
    let m = kp.len();
    let (sw, sb, q) = (h.sigma_w2, h.sigma_b2, k.qstar());
    let mut nngp = DMatrix::zeros(m, m);
    let mut ntk = DMatrix::zeros(m, m);
    for j in 0..m {
        for i in j..m {
            let x = kp.nngp[(i, j)];
            let mut kn = sw * k.t_map(x)? + sb;
            if i == j {
                if (kn - q).abs() > DIAGONAL_DRIFT_TOL {
                    return Err(Error::DiagonalDrift {
                        depth: kp.depth + 1,
                        value: kn,
                        qstar: q,
                    });
                }
                kn = q;
            }
            let tn = kn + sw * k.t_dot(x)? * kp.ntk[(i, j)];
            nngp[(i, j)] = kn;
            nngp[(j, i)] = kn;
            ntk[(i, j)] = tn;
            ntk[(j, i)] = tn;
        }
    }
    Ok(KernelPair {
        nngp,
        ntk,
        depth: kp.depth + 1,
    })
}
