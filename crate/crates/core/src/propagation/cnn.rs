//! NNGP/NTK recursion for 1-D convolutional networks with circular padding.
//!
//! Inputs are `m × (C·d)` matrices whose column `α·C + c` holds channel `c`
//! of pixel `α`. Kernels are stored as one `d × d` block per unordered pair
//! of inputs; block `(i, j)` holds `𝒦_{α,α′}(x_i, x_j)` and block `(j, i)` is
//! its transpose.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::activation::ActivationKernel;
use crate::error::{Error, Result};
use crate::phase::Hyperparams;
use crate::propagation::fcn::{KernelPair, DIAGONAL_DRIFT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Readout {
    Flatten,
    Pool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnKernel {
    pub nngp: Vec<DMatrix<f64>>,
    pub ntk: Vec<DMatrix<f64>>,
    pub points: usize,
    pub spatial: usize,
    pub filter_halfwidth: usize,
    pub depth: usize,
}

/// Position of the unordered pair `{i, j}` in the block list.
pub fn pair_index(i: usize, j: usize, points: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * points - a * (a + 1) / 2 + b
}

impl CnnKernel {
    /// NNGP block for the ordered pair `(i, j)`.
    pub fn nngp_block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let b = &self.nngp[pair_index(i, j, self.points)];
        if i <= j {
            b.clone()
        } else {
            b.transpose()
        }
    }

    /// NTK block for the ordered pair `(i, j)`.
    pub fn ntk_block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let b = &self.ntk[pair_index(i, j, self.points)];
        if i <= j {
            b.clone()
        } else {
            b.transpose()
        }
    }
}

fn channels(x: &DMatrix<f64>, spatial: usize) -> Result<usize> {
    if spatial == 0 || !x.ncols().is_multiple_of(spatial) || x.ncols() == 0 {
        return Err(Error::Dimension(format!(
            "{} input columns do not split into {} pixels",
            x.ncols(),
            spatial
        )));
    }
    Ok(x.ncols() / spatial)
}

/// Rescales every pixel so its mean square over channels is `q*`.
pub fn normalize_spatial_inputs(x: &DMatrix<f64>, spatial: usize, qstar: f64) -> Result<DMatrix<f64>> {
    let c = channels(x, spatial)?;
    let mut out = x.clone();
    for i in 0..x.nrows() {
        for a in 0..spatial {
            let cols = a * c..(a + 1) * c;
            let ms = cols.clone().map(|j| x[(i, j)] * x[(i, j)]).sum::<f64>() / c as f64;
            if !(ms > 0.0) {
                return Err(Error::ZeroRow { row: i });
            }
            let scale = (qstar / ms).sqrt();
            for j in cols {
                out[(i, j)] *= scale;
            }
        }
    }
    Ok(out)
}

/// Input-layer pixel covariances with `Θ⁽⁰⁾ = 𝒦⁽⁰⁾`.
pub fn init_cnn_kernels(x: &DMatrix<f64>, spatial: usize, filter_halfwidth: usize) -> Result<CnnKernel> {
    check_window(spatial, filter_halfwidth)?;
    let c = channels(x, spatial)?;
    let m = x.nrows();
    let mut nngp = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for j in i..m {
            nngp.push(DMatrix::from_fn(spatial, spatial, |a, b| {
                (0..c).map(|ch| x[(i, a * c + ch)] * x[(j, b * c + ch)]).sum::<f64>() / c as f64
            }));
        }
    }
    Ok(CnnKernel {
        ntk: nngp.clone(),
        nngp,
        points: m,
        spatial,
        filter_halfwidth,
        depth: 0,
    })
}

fn check_window(spatial: usize, k: usize) -> Result<()> {
    if 2 * k + 1 > spatial {
        return Err(Error::WindowTooLarge {
            window: 2 * k + 1,
            spatial,
        });
    }
    Ok(())
}

/// `𝒜(B)_{α,α′} = (2k+1)⁻¹ Σ_{|β|≤k} B_{α+β, α′+β}` with circular indices.
pub fn apply_a(block: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let d = block.nrows();
    check_window(d, k)?;
    let w = (2 * k + 1) as f64;
    Ok(DMatrix::from_fn(d, d, |a, b| {
        let mut s = 0.0;
        for beta in 0..=2 * k {
            // β − k, shifted to stay nonnegative modulo d.
            let shift = d + beta - k;
            s += block[((a + shift) % d, (b + shift) % d)];
        }
        s / w
    }))
}

/// Eigenvalues `ρ_q = (2k+1)⁻¹ Σ_{|β|≤k} cos(2πqβ/d)` of `𝒜` on Fourier modes.
pub fn fourier_eigs(d: usize, k: usize) -> Result<Vec<f64>> {
    check_window(d, k)?;
    let w = (2 * k + 1) as f64;
    Ok((0..d)
        .map(|q| {
            let s: f64 = (-(k as i64)..=k as i64)
                .map(|beta| (2.0 * PI * (q as f64) * beta as f64 / d as f64).cos())
                .sum();
            s / w
        })
        .collect())
}

/// One convolutional layer:
/// `𝒦′ = σ_w² 𝒜(𝒯(𝒦)) + σ_b²`, `Θ′ = 𝒦′ + 𝒜(σ_w² 𝒯̇(𝒦) ⊙ Θ)`.
pub fn step_cnn(ck: &CnnKernel, h: &Hyperparams, k: &ActivationKernel) -> Result<CnnKernel> {
    let (sw, sb, q) = (h.sigma_w2, h.sigma_b2, k.qstar());
    let d = ck.spatial;
    let hw = ck.filter_halfwidth;
    let m = ck.points;
    let mut nngp = Vec::with_capacity(ck.nngp.len());
    let mut ntk = Vec::with_capacity(ck.ntk.len());
    for i in 0..m {
        for j in i..m {
            let idx = pair_index(i, j, m);
            let (kb, tb) = (&ck.nngp[idx], &ck.ntk[idx]);
            let mut t = DMatrix::zeros(d, d);
            let mut g = DMatrix::zeros(d, d);
            for a in 0..d {
                for b in 0..d {
                    let x = kb[(a, b)];
                    t[(a, b)] = k.t_map(x)?;
                    g[(a, b)] = sw * k.t_dot(x)? * tb[(a, b)];
                }
            }
            let mut kn = apply_a(&t, hw)? * sw;
            kn.add_scalar_mut(sb);
            if i == j {
                for a in 0..d {
                    let v = kn[(a, a)];
                    if (v - q).abs() > DIAGONAL_DRIFT_TOL {
                        return Err(Error::DiagonalDrift {
                            depth: ck.depth + 1,
                            value: v,
                            qstar: q,
                        });
                    }
                    kn[(a, a)] = q;
                }
            }
            let tn = &kn + apply_a(&g, hw)?;
            nngp.push(kn);
            ntk.push(tn);
        }
    }
    Ok(CnnKernel {
        nngp,
        ntk,
        points: m,
        spatial: d,
        filter_halfwidth: hw,
        depth: ck.depth + 1,
    })
}

fn collapse(block: &DMatrix<f64>, mode: Readout) -> f64 {
    let d = block.nrows() as f64;
    match mode {
        Readout::Flatten => block.diagonal().sum() / d,
        Readout::Pool => block.sum() / (d * d),
    }
}

/// Collapses the spatial indices: flatten averages the pixel diagonal,
/// pooling averages every pixel pair.
pub fn readout(ck: &CnnKernel, mode: Readout) -> KernelPair {
    let m = ck.points;
    let mut nngp = DMatrix::zeros(m, m);
    let mut ntk = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let idx = pair_index(i, j, m);
            let (a, b) = (collapse(&ck.nngp[idx], mode), collapse(&ck.ntk[idx], mode));
            nngp[(i, j)] = a;
            nngp[(j, i)] = a;
            ntk[(i, j)] = b;
            ntk[(j, i)] = b;
        }
    }
    KernelPair {
        nngp,
        ntk,
        depth: ck.depth,
    }
}
