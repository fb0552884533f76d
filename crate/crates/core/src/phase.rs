//! Fixed points, slopes, phase classification, depth scales and the
//! leading-order large-depth predictions for spectra and scalar corrections.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::activation::{Activation, ActivationKernel, Backend};
use crate::error::{Error, Result};

/// `|χ₁ − 1|` at or below this is classified as critical.
pub const PHASE_TOL: f64 = 1e-8;

const FIXED_POINT_TOL: f64 = 1e-12;
const MAX_FIXED_POINT_ITERS: usize = 10_000;
const MAX_POLISH_STEPS: usize = 100;
const MAX_BISECTION_STEPS: usize = 200;
const CRITICAL_BRACKET: (f64, f64) = (1e-3, 20.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    Fcn,
    CnnFlatten,
    CnnPool,
}

impl Architecture {
    pub fn is_cnn(self) -> bool {
        !matches!(self, Architecture::Fcn)
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Fcn => "fcn",
            Architecture::CnnFlatten => "cnn_f",
            Architecture::CnnPool => "cnn_p",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "fcn" => Ok(Architecture::Fcn),
            "cnn_f" | "cnn_flatten" => Ok(Architecture::CnnFlatten),
            "cnn_p" | "cnn_pool" => Ok(Architecture::CnnPool),
            other => Err(Error::InvalidParameter(format!(
                "unknown architecture '{other}'"
            ))),
        }
    }
}

/// Network configuration shared by every propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub sigma_w2: f64,
    pub sigma_b2: f64,
    pub activation: Activation,
    pub depth: usize,
    pub architecture: Architecture,
    /// Spatial size `d`; 1 for fully-connected networks.
    pub spatial: usize,
    /// Convolution filter half-width `k` (window `2k + 1`).
    pub filter_halfwidth: usize,
    /// Dropout keep probability `ρ`; 1 disables dropout.
    pub dropout_keep: f64,
}

impl Hyperparams {
    pub fn fcn(activation: Activation, sigma_w2: f64, sigma_b2: f64) -> Self {
        Hyperparams {
            sigma_w2,
            sigma_b2,
            activation,
            depth: 1,
            architecture: Architecture::Fcn,
            spatial: 1,
            filter_halfwidth: 0,
            dropout_keep: 1.0,
        }
    }

    pub fn cnn(
        activation: Activation,
        sigma_w2: f64,
        sigma_b2: f64,
        architecture: Architecture,
        spatial: usize,
        filter_halfwidth: usize,
    ) -> Self {
        Hyperparams {
            architecture,
            spatial,
            filter_halfwidth,
            ..Self::fcn(activation, sigma_w2, sigma_b2)
        }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_dropout(mut self, keep: f64) -> Self {
        self.dropout_keep = keep;
        self
    }

    /// Spatial factor appearing in the pooled-readout predictions.
    pub fn pool_factor(&self) -> f64 {
        match self.architecture {
            Architecture::CnnPool => self.spatial as f64,
            _ => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.sigma_w2 >= 0.0 && self.sigma_w2.is_finite()) {
            return bad(format!("sigma_w2 must be nonnegative, got {}", self.sigma_w2));
        }
        if !(self.sigma_b2 >= 0.0 && self.sigma_b2.is_finite()) {
            return bad(format!("sigma_b2 must be nonnegative, got {}", self.sigma_b2));
        }
        if self.sigma_w2 == 0.0 && self.sigma_b2 == 0.0 {
            return bad("sigma_w2 and sigma_b2 cannot both be zero".into());
        }
        if self.depth == 0 {
            return bad("depth must be positive".into());
        }
        if self.spatial == 0 {
            return bad("spatial size must be positive".into());
        }
        if !self.architecture.is_cnn() && self.spatial != 1 {
            return bad(format!(
                "fully-connected networks have spatial size 1, got {}",
                self.spatial
            ));
        }
        if self.architecture.is_cnn() && 2 * self.filter_halfwidth + 1 > self.spatial {
            return Err(Error::WindowTooLarge {
                window: 2 * self.filter_halfwidth + 1,
                spatial: self.spatial,
            });
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return bad(format!(
                "dropout keep rate must lie in (0, 1], got {}",
                self.dropout_keep
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Ordered,
    Critical,
    Chaotic,
}

impl Phase {
    pub fn classify(chi1: f64) -> Self {
        if chi1 < 1.0 - PHASE_TOL {
            Phase::Ordered
        } else if chi1 > 1.0 + PHASE_TOL {
            Phase::Chaotic
        } else {
            Phase::Critical
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Ordered => "ordered",
            Phase::Critical => "critical",
            Phase::Chaotic => "chaotic",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A depth scale `−1/log χ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DepthScale {
    Finite(f64),
    /// `χ = 1`: convergence is slower than exponential.
    Infinite,
    /// `χ > 1` (or a ratio with a zero denominator): no convergence scale.
    Undefined,
}

impl DepthScale {
    pub fn from_slope(chi: f64) -> Self {
        if !chi.is_finite() || chi < 0.0 {
            DepthScale::Undefined
        } else if (chi - 1.0).abs() <= PHASE_TOL {
            DepthScale::Infinite
        } else if chi > 1.0 {
            DepthScale::Undefined
        } else {
            // chi = 0 gives −1/(−∞) = 0.
            DepthScale::Finite(-1.0 / chi.ln())
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            DepthScale::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Numeric encoding for tables: `inf` for infinite, `NaN` for undefined.
    pub fn as_f64(self) -> f64 {
        match self {
            DepthScale::Finite(v) => v,
            DepthScale::Infinite => f64::INFINITY,
            DepthScale::Undefined => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slopes {
    pub chi1: f64,
    pub chi_c: f64,
    pub chi1_2: f64,
    pub chi_c_2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthScales {
    pub xi1: DepthScale,
    pub xi_c: DepthScale,
    pub xi_star: DepthScale,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseReport {
    pub activation: Activation,
    pub sigma_w2: f64,
    pub sigma_b2: f64,
    pub qstar: f64,
    pub cstar: f64,
    pub chi1: f64,
    pub chi_c: f64,
    pub chi1_2: f64,
    pub chi_c_2: f64,
    pub pstar: Option<f64>,
    pub pabstar: Option<f64>,
    pub phase: Phase,
    pub xi1: DepthScale,
    pub xi_c: DepthScale,
    pub xi_star: DepthScale,
}

impl PhaseReport {
    pub fn qab_star(&self) -> f64 {
        self.cstar * self.qstar
    }
}

/// Solves every fixed point and slope for `h`, returning the report and the
/// activation kernel at `q*`.
pub fn analyze(h: &Hyperparams, backend: Backend) -> Result<(PhaseReport, ActivationKernel)> {
    let probe = ActivationKernel::new(h.activation, 1.0, backend)?;
    let qstar = solve_qstar(h, &probe)?;
    let k = probe.with_qstar(qstar)?;
    let chi1 = h.sigma_w2 * k.t_dot(qstar)?;
    let cstar = solve_cstar(h, &k, chi1)?;
    let s = slopes(h, &k, cstar)?;
    let scales = depth_scales(s.chi1, s.chi_c);
    let pstar = (s.chi1 < 1.0 - PHASE_TOL).then(|| qstar / (1.0 - s.chi1));
    let pabstar = (s.chi_c < 1.0 - PHASE_TOL).then(|| cstar * qstar / (1.0 - s.chi_c));
    let report = PhaseReport {
        activation: h.activation,
        sigma_w2: h.sigma_w2,
        sigma_b2: h.sigma_b2,
        qstar,
        cstar,
        chi1: s.chi1,
        chi_c: s.chi_c,
        chi1_2: s.chi1_2,
        chi_c_2: s.chi_c_2,
        pstar,
        pabstar,
        phase: Phase::classify(s.chi1),
        xi1: scales.xi1,
        xi_c: scales.xi_c,
        xi_star: scales.xi_star,
    };
    Ok((report, k))
}

/// Iterates `x ↦ f(x)` from `x0`, halving the step while the secant slope of
/// the map exceeds one in magnitude, then polishes while `|Δ|` still shrinks.
///
/// Near-marginal maps (slope close to one) converge too slowly for plain
/// iteration, so each step also tries an Aitken extrapolation and keeps it
/// when it lowers the residual.
fn fixed_point(what: &'static str, x0: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut x = x0;
    let mut fx = f(x)?;
    let mut prev: Option<(f64, f64)> = None;
    let mut converged = false;
    for _ in 0..MAX_FIXED_POINT_ITERS {
        let delta = fx - x;
        if !delta.is_finite() {
            break;
        }
        if delta.abs() < FIXED_POINT_TOL {
            converged = true;
            break;
        }
        let damping = match prev {
            Some((px, pfx)) if px != x && ((fx - pfx) / (x - px)).abs() > 1.0 => 0.5,
            _ => 1.0,
        };
        prev = Some((x, fx));
        let plain = x + damping * delta;
        let f_plain = f(plain)?;
        let mut next = (plain, f_plain);
        let curvature = f_plain - 2.0 * fx + x;
        if damping == 1.0 && curvature != 0.0 {
            let aitken = x - delta * delta / curvature;
            if aitken.is_finite() {
                if let Ok(fa) = f(aitken) {
                    if (fa - aitken) * delta < 0.0 {
                        // The extrapolation overshot the fixed point, so
                        // [x, aitken] brackets it; nearly linear maps can
                        // otherwise be thrown onto an unstable fixed point.
                        (x, fx) = bisect_residual(&f, x, aitken)?;
                        converged = true;
                        break;
                    }
                    if (fa - aitken).abs() < (f_plain - plain).abs() {
                        next = (aitken, fa);
                    }
                }
            }
        }
        (x, fx) = next;
    }
    if !converged {
        return Err(Error::NonConvergence {
            what,
            last: x,
            iterations: MAX_FIXED_POINT_ITERS,
        });
    }
    let mut best = (fx - x).abs();
    for _ in 0..MAX_POLISH_STEPS {
        let next = fx;
        let f_next = f(next)?;
        let gap = (f_next - next).abs();
        if gap >= best {
            break;
        }
        x = next;
        fx = f_next;
        best = gap;
    }
    Ok(x)
}

/// Bisects `f(x) − x` on a sign-changing bracket down to adjacent floats.
fn bisect_residual(f: &impl Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let r_lo = f(lo)? - lo;
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid)? - mid) * r_lo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    Ok(if (f_lo - lo).abs() <= (f_hi - hi).abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    })
}

/// Stable fixed point of the diagonal map `q ↦ σ_w² E φ(√q z)² + σ_b²`,
/// starting from unit input variance.
pub fn solve_qstar(h: &Hyperparams, k: &ActivationKernel) -> Result<f64> {
    if h.sigma_w2 == 0.0 {
        if h.sigma_b2 > 0.0 {
            return Ok(h.sigma_b2);
        }
        return Err(Error::InvalidParameter(
            "sigma_w2 and sigma_b2 cannot both be zero".into(),
        ));
    }
    let (sw, sb) = (h.sigma_w2, h.sigma_b2);
    fixed_point("diagonal fixed point q*", 1.0, |q| {
        Ok(sw * k.diag_map(q.max(0.0)) + sb)
    })
}

/// Stable correlation fixed point `c*`, iterated from `c = 0.5`.
///
/// When `χ₁ ≤ 1` (within [`PHASE_TOL`]) the fixed point `c* = 1` is stable
/// and returned directly. `k` must be built at `q*`.
pub fn solve_cstar(h: &Hyperparams, k: &ActivationKernel, chi1: f64) -> Result<f64> {
    if chi1 <= 1.0 + PHASE_TOL {
        return Ok(1.0);
    }
    let qstar = k.qstar();
    let (sw, sb) = (h.sigma_w2, h.sigma_b2);
    fixed_point("correlation fixed point c*", 0.5, |c| {
        let c = c.clamp(-1.0, 1.0);
        Ok((sw * k.t_map(c * qstar)? + sb) / qstar)
    })
}

/// `χ₁ = σ_w² 𝒯̇(q*)`, `χ_c = σ_w² 𝒯̇(c* q*)` and the matching second-order
/// slopes. ReLU's second derivative is singular at `q_ab = q*`; those slopes
/// are reported as `+∞`.
pub fn slopes(h: &Hyperparams, k: &ActivationKernel, cstar: f64) -> Result<Slopes> {
    let sw = h.sigma_w2;
    let q = k.qstar();
    let qab = cstar * q;
    let second = |x: f64| -> Result<f64> {
        match k.t_ddot(x) {
            Err(Error::Domain { .. }) if k.activation().has_kink() => Ok(f64::INFINITY),
            other => other.map(|v| sw * v),
        }
    };
    Ok(Slopes {
        chi1: sw * k.t_dot(q)?,
        chi_c: sw * k.t_dot(qab)?,
        chi1_2: second(q)?,
        chi_c_2: second(qab)?,
    })
}

pub fn depth_scales(chi1: f64, chi_c: f64) -> DepthScales {
    let xi_star = if chi1 > 0.0 {
        DepthScale::from_slope(chi_c / chi1)
    } else {
        DepthScale::Undefined
    };
    DepthScales {
        xi1: DepthScale::from_slope(chi1),
        xi_c: DepthScale::from_slope(chi_c),
        xi_star,
    }
}

/// `χ₁` as a function of `σ_w²` at fixed `σ_b²`.
pub fn chi1_at(
    activation: Activation,
    backend: Backend,
    sigma_w2: f64,
    sigma_b2: f64,
) -> Result<f64> {
    let probe = ActivationKernel::new(activation, 1.0, backend)?;
    if activation == Activation::Relu {
        // Positively homogeneous: 𝒯̇ at the diagonal does not depend on q*,
        // which is useful because q* diverges on the critical line when σ_b² > 0.
        return Ok(sigma_w2 * probe.t_dot(1.0)?);
    }
    let h = Hyperparams::fcn(activation, sigma_w2, sigma_b2);
    let qstar = solve_qstar(&h, &probe)?;
    Ok(sigma_w2 * probe.diag_dot(qstar))
}

/// `σ_w²` on the order-to-chaos line `χ₁ = 1`, by bisection on `[1e−3, 20]`.
pub fn critical_sigma_w2(sigma_b2: f64, activation: Activation, backend: Backend) -> Result<f64> {
    if !(sigma_b2 >= 0.0 && sigma_b2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma_b2 must be nonnegative, got {sigma_b2}"
        )));
    }
    let g = |sw: f64| chi1_at(activation, backend, sw, sigma_b2).map(|c| c - 1.0);
    let (mut lo, mut hi) = CRITICAL_BRACKET;
    let (glo, ghi) = (g(lo)?, g(hi)?);
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    if glo.signum() == ghi.signum() {
        return Err(Error::BracketFailure { lo, hi });
    }
    let rising = glo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if (gm < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Ntk,
    Nngp,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Ntk => "ntk",
            KernelKind::Nngp => "nngp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionSource {
    TablePhaseFormula,
}

/// Leading-order large-depth spectrum.
///
/// Where only an order of magnitude is known the value is the rate with a
/// unit prefactor (for example `lχ₁ˡ` for the ordered NTK bulk); compare
/// growth exponents, not absolute values, for those entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticPrediction {
    pub lambda_max: f64,
    pub lambda_bulk: f64,
    pub kappa: f64,
    /// Scale of `‖P(Θ)Y‖`; `None` where no rate is known.
    pub mean_pred_norm_scale: Option<f64>,
    pub valid_for: KernelKind,
    pub source: PredictionSource,
}

pub fn predict_spectrum(
    ph: &PhaseReport,
    h: &Hyperparams,
    m: usize,
    l: usize,
    kind: KernelKind,
) -> Result<AsymptoticPrediction> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "spectral predictions need at least two points, got {m}"
        )));
    }
    if l == 0 {
        return Err(Error::InvalidParameter("depth must be positive".into()));
    }
    let (mf, lf, q) = (m as f64, l as f64, ph.qstar);
    let d = h.pool_factor();
    let chi1_l = ph.chi1.powf(lf);
    let undefined = |why: &str| {
        Err(Error::UndefinedPrediction(format!(
            "{} {} {} ({why})",
            h.activation,
            h.architecture,
            kind.name()
        )))
    };
    if ph.activation == Activation::Relu {
        if h.architecture.is_cnn() {
            return undefined("only fully-connected ReLU networks are covered");
        }
        if ph.phase != Phase::Critical {
            return undefined("ReLU asymptotics are given on the critical line only");
        }
        let (lambda_max, lambda_bulk, scale) = match kind {
            KernelKind::Ntk => ((mf + 3.0) / 4.0 * lf * q, 0.75 * lf * q, 1.0 / lf),
            KernelKind::Nngp => {
                let bulk = q * 4.5 * PI * PI / (lf * lf);
                (mf * q, bulk, 1.0 / lf)
            }
        };
        return Ok(AsymptoticPrediction {
            lambda_max,
            lambda_bulk,
            kappa: lambda_max / lambda_bulk,
            mean_pred_norm_scale: Some(scale),
            valid_for: kind,
            source: PredictionSource::TablePhaseFormula,
        });
    }
    let (lambda_max, lambda_bulk, kappa, scale) = match (ph.phase, kind) {
        (Phase::Ordered, KernelKind::Ntk) => {
            let pstar = ph.pstar.expect("ordered phase has finite p*");
            let bulk = lf * chi1_l / d;
            (mf * pstar, bulk, d * mf * pstar / (lf * chi1_l), 1.0)
        }
        (Phase::Critical, KernelKind::Ntk) => {
            let top = (mf * d + 2.0) / (3.0 * d) * lf * q;
            let bulk = 2.0 / (3.0 * d) * lf * q;
            (top, bulk, (mf * d + 2.0) / 2.0, d / lf)
        }
        (Phase::Chaotic, KernelKind::Ntk) => {
            let scale = d * lf * (ph.chi_c / ph.chi1).powf(lf);
            (chi1_l / d, chi1_l / d, 1.0, scale)
        }
        (Phase::Ordered, KernelKind::Nngp) => {
            let bulk = chi1_l / d;
            (mf * q, bulk, d * mf * q / chi1_l, 1.0)
        }
        (Phase::Critical, KernelKind::Nngp) => (mf * q, 1.0 / (lf * d), d * mf * lf, 1.0 / lf),
        (Phase::Chaotic, KernelKind::Nngp) => {
            let c = ph.cstar;
            let top = ((1.0 - c) / d + mf * c) * q;
            let bulk = (1.0 - c) * q / d;
            let scale = d * ph.chi_c.powf(lf);
            (top, bulk, 1.0 + d * mf * c / (1.0 - c), scale)
        }
    };
    Ok(AsymptoticPrediction {
        lambda_max,
        lambda_bulk,
        kappa: kappa.max(1.0),
        mean_pred_norm_scale: Some(scale),
        valid_for: kind,
        source: PredictionSource::TablePhaseFormula,
    })
}

/// Leading-order finite-depth corrections of the two-point kernels, with
/// `ε_ab = q_ab − q*_ab` and `δ_ab = p_ab − p*_ab` (`p_ab − lq*` on the
/// critical line).
///
/// Depth counts layers applied to a state whose NTK diagonal starts at zero,
/// so `p_diag = q* (1 + χ₁ + … + χ₁^{l−1})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarCorrections {
    pub eps_ab: f64,
    pub delta_ab: f64,
    pub p_diag: f64,
    /// `eps_ab` and `delta_ab` are per unit of the data-dependent constant
    /// `ζ_ab` and must be multiplied by it (see [`estimate_zeta`]).
    pub per_unit_zeta: bool,
}

impl ScalarCorrections {
    pub fn scaled(self, zeta: f64) -> Self {
        if !self.per_unit_zeta {
            return self;
        }
        ScalarCorrections {
            eps_ab: self.eps_ab * zeta,
            delta_ab: self.delta_ab * zeta,
            per_unit_zeta: false,
            ..self
        }
    }
}

pub fn predict_scalar_corrections(ph: &PhaseReport, l: usize) -> ScalarCorrections {
    let lf = l as f64;
    let q = ph.qstar;
    let geometric = |chi: f64| {
        if (chi - 1.0).abs() <= PHASE_TOL {
            lf * q
        } else {
            q * (chi.powf(lf) - 1.0) / (chi - 1.0)
        }
    };
    match ph.phase {
        Phase::Critical if ph.activation == Activation::Relu => ScalarCorrections {
            eps_ab: -q * 4.5 * PI * PI / (lf * lf),
            delta_ab: -0.75 * lf * q,
            p_diag: lf * q,
            per_unit_zeta: false,
        },
        Phase::Critical => ScalarCorrections {
            eps_ab: -2.0 / (ph.chi1_2 * lf),
            delta_ab: -2.0 / 3.0 * lf * q,
            p_diag: lf * q,
            per_unit_zeta: false,
        },
        Phase::Ordered => {
            let pstar = ph.pstar.unwrap_or(f64::INFINITY);
            let chi_l = ph.chi1.powf(lf);
            ScalarCorrections {
                eps_ab: chi_l,
                delta_ab: lf * chi_l * (1.0 + ph.chi1_2 * pstar / ph.chi1),
                p_diag: geometric(ph.chi1),
                per_unit_zeta: true,
            }
        }
        Phase::Chaotic => {
            let pab = ph.pabstar.unwrap_or(f64::INFINITY);
            let chi_l = ph.chi_c.powf(lf);
            let gain = if ph.chi_c == 0.0 {
                1.0
            } else {
                1.0 + ph.chi_c_2 * pab / ph.chi_c
            };
            ScalarCorrections {
                eps_ab: chi_l,
                delta_ab: lf * chi_l * gain,
                p_diag: geometric(ph.chi1),
                per_unit_zeta: true,
            }
        }
    }
}

/// Least-squares estimate of `ζ` in `ε_l ≈ ζ χˡ` over the supplied
/// `(depth, ε)` samples.
pub fn estimate_zeta(series: &[(usize, f64)], chi: f64) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::TooFewPoints { got: 0, need: 1 });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for &(l, eps) in series {
        let basis = chi.powf(l as f64);
        num += eps * basis;
        den += basis * basis;
    }
    if den == 0.0 || !den.is_finite() {
        return Err(Error::InvalidParameter(
            "depth window leaves no usable basis values".into(),
        ));
    }
    Ok(num / den)
}
