//! Eigenvalue summaries of kernel matrices and empirical rate fits.

use nalgebra::DMatrix;

use crate::activation::ActivationKernel;
use crate::eigen::symmetric_eigenvalues;
use crate::error::{Error, Result};
use crate::phase::Hyperparams;
use crate::propagation::Propagator;

/// Relative asymmetry tolerated by [`spectrum`].
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSummary {
    /// Sorted in descending order.
    pub eigenvalues: Vec<f64>,
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// Second-largest eigenvalue, representative of the bulk at large depth.
    pub lambda_bulk: f64,
    /// `λ_max / λ_min`; infinite when `λ_min ≤ 0`.
    pub kappa: f64,
    /// `λ_max / λ_bulk`.
    pub kappa_bulk: f64,
    pub depth: usize,
}

fn ratio(top: f64, bottom: f64) -> f64 {
    if bottom > 0.0 {
        top / bottom
    } else {
        f64::INFINITY
    }
}

/// Full spectrum of a symmetric matrix. Asymmetry above [`SYMMETRY_TOL`]
/// relative to the largest entry is rejected.
pub fn spectrum(m: &DMatrix<f64>) -> Result<SpectrumSummary> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "spectrum needs a nonempty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Asymmetric {
            max_asymmetry: asym,
        });
    }
    let mut eigenvalues = symmetric_eigenvalues(m)?;
    eigenvalues.reverse();
    let lambda_max = eigenvalues[0];
    let lambda_min = *eigenvalues.last().expect("nonempty");
    let lambda_bulk = *eigenvalues.get(1).unwrap_or(&lambda_max);
    Ok(SpectrumSummary {
        kappa: ratio(lambda_max, lambda_min),
        kappa_bulk: ratio(lambda_max, lambda_bulk),
        eigenvalues,
        lambda_max,
        lambda_min,
        lambda_bulk,
        depth: 0,
    })
}

/// NNGP and NTK spectra at one depth.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub depth: usize,
    pub ntk: SpectrumSummary,
    pub nngp: SpectrumSummary,
}

/// Propagates `x` and records both spectra at each requested depth.
pub fn kappa_trajectory(
    h: &Hyperparams,
    kernel: &ActivationKernel,
    x: &DMatrix<f64>,
    depths: &[usize],
) -> Result<Vec<TrajectoryPoint>> {
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "depths must be strictly increasing".into(),
        ));
    }
    let mut prop = Propagator::new(h, kernel.clone(), x)?;
    let mut out = Vec::with_capacity(depths.len());
    for &l in depths {
        prop.advance_to(l)?;
        let kp = prop.kernels()?;
        let mut ntk = spectrum(&kp.ntk)?;
        let mut nngp = spectrum(&kp.nngp)?;
        ntk.depth = l;
        nngp.depth = l;
        out.push(TrajectoryPoint { depth: l, ntk, nngp });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateModel {
    /// `log y` linear in depth; the slope is a per-layer log rate.
    LogLinear,
    /// `log y` linear in `log depth`; the slope is an exponent.
    PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub window: (f64, f64),
}

/// Least-squares line through `(x, log y)` or `(log x, log y)`.
pub fn fit_rate(series: &[(f64, f64)], model: RateModel) -> Result<RateFit> {
    const NEED: usize = 4;
    if series.len() < NEED {
        return Err(Error::TooFewPoints {
            got: series.len(),
            need: NEED,
        });
    }
    let mut pts = Vec::with_capacity(series.len());
    for (index, &(x, y)) in series.iter().enumerate() {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::NonPositiveValue { index, value: y });
        }
        let u = match model {
            RateModel::LogLinear => x,
            RateModel::PowerLaw => {
                if !(x > 0.0) {
                    return Err(Error::NonPositiveValue { index, value: x });
                }
                x.ln()
            }
        };
        pts.push((u, y.ln()));
    }
    let n = pts.len() as f64;
    let mu = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut suu, mut suv, mut svv) = (0.0, 0.0, 0.0);
    for &(u, v) in &pts {
        suu += (u - mu) * (u - mu);
        suv += (u - mu) * (v - mv);
        svv += (v - mv) * (v - mv);
    }
    if suu == 0.0 {
        return Err(Error::InvalidParameter(
            "rate fit needs at least two distinct abscissae".into(),
        ));
    }
    let slope = suv / suu;
    let intercept = mv - slope * mu;
    let r2 = if svv == 0.0 {
        1.0
    } else {
        (suv * suv / (suu * svv)).clamp(0.0, 1.0)
    };
    let first = series.first().map(|p| p.0).unwrap_or(0.0);
    let last = series.last().map(|p| p.0).unwrap_or(0.0);
    Ok(RateFit {
        slope,
        intercept,
        r2,
        window: (first, last),
    })
}
