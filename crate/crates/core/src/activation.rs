//! Gaussian expectation maps of an activation at a fixed input variance.
//!
//! For `(u, v) ~ N(0, [[q*, q_ab], [q_ab, q*]])` an [`ActivationKernel`]
//! evaluates
//!
//! * `t_map(q_ab)  = E φ(u) φ(v)`
//! * `t_dot(q_ab)  = E φ'(u) φ'(v)`, the derivative of `t_map` in `q_ab`
//! * `t_ddot(q_ab)`, the second derivative of `t_map` in `q_ab`.
//!
//! Erf and ReLU have closed forms (arcsine and arc-cosine kernels). Tanh,
//! and any activation when the quadrature backend is requested, is
//! integrated numerically after whitening the covariance by its Cholesky
//! factor: `u = √q* z₁`, `v = √q* (c z₁ + s z₂)` with `c = q_ab/q*`.

use std::f64::consts::{FRAC_2_SQRT_PI, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_rule, QuadratureRule, RuleFamily};

/// Node count used for Tanh when no quadrature size is requested.
pub const DEFAULT_TANH_NODES: usize = 64;

/// Relative slack on `|q_ab| ≤ q*` before a domain error is raised.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Erf,
    Relu,
    Tanh,
}

impl Activation {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Erf => libm::erf(x),
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Erf => FRAC_2_SQRT_PI * (-x * x).exp(),
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }

    /// Non-differentiable at the origin.
    pub fn has_kink(self) -> bool {
        matches!(self, Activation::Relu)
    }

    pub fn has_closed_form(self) -> bool {
        !matches!(self, Activation::Tanh)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Erf => "erf",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "erf" => Ok(Activation::Erf),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidParameter(format!(
                "unknown activation '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    ClosedForm,
    Quadrature { nodes: usize },
}

impl Backend {
    /// Closed form where one exists, otherwise quadrature at the default size.
    pub fn default_for(activation: Activation) -> Self {
        if activation.has_closed_form() {
            Backend::ClosedForm
        } else {
            Backend::Quadrature {
                nodes: DEFAULT_TANH_NODES,
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Evaluator {
    Closed,
    /// Tensor Gauss–Hermite in whitened coordinates. `phi_u`/`dphi_u` cache
    /// the activation at the `u` nodes, which do not depend on `q_ab`.
    Tensor {
        rule: Arc<QuadratureRule>,
        phi_u: Vec<f64>,
        dphi_u: Vec<f64>,
    },
    /// Whitened plane in polar coordinates: Gauss–Legendre on the angular
    /// arcs between the kink lines `u = 0`, `v = 0`, Gauss–Laguerre in
    /// `t = r²/2` radially.
    Polar {
        angular: Arc<QuadratureRule>,
        radial: Arc<QuadratureRule>,
        hermite: Arc<QuadratureRule>,
    },
}

/// `E φ(u)φ(v)` and its derivatives at a fixed diagonal variance `q*`.
///
/// Immutable once built; share freely across threads.
#[derive(Debug, Clone)]
pub struct ActivationKernel {
    activation: Activation,
    qstar: f64,
    backend: Backend,
    evaluator: Evaluator,
}

impl ActivationKernel {
    pub fn new(activation: Activation, qstar: f64, backend: Backend) -> Result<Self> {
        if !(qstar > 0.0 && qstar.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "diagonal variance must be positive and finite, got {qstar}"
            )));
        }
        let quad_nodes = match (backend, activation.has_closed_form()) {
            (Backend::ClosedForm, true) => None,
            (Backend::ClosedForm, false) => Some(DEFAULT_TANH_NODES),
            (Backend::Quadrature { nodes }, _) => Some(nodes),
        };
        let evaluator = match quad_nodes {
            None => Evaluator::Closed,
            Some(n) if activation.has_kink() => Evaluator::Polar {
                angular: gauss_rule(RuleFamily::Legendre, n)?,
                radial: gauss_rule(RuleFamily::Laguerre, n)?,
                hermite: gauss_rule(RuleFamily::StandardNormal, n)?,
            },
            Some(n) => {
                let rule = gauss_rule(RuleFamily::StandardNormal, n)?;
                let sq = qstar.sqrt();
                let phi_u = rule.nodes.iter().map(|&z| activation.eval(sq * z)).collect();
                let dphi_u = rule
                    .nodes
                    .iter()
                    .map(|&z| activation.derivative(sq * z))
                    .collect();
                Evaluator::Tensor {
                    rule,
                    phi_u,
                    dphi_u,
                }
            }
        };
        Ok(ActivationKernel {
            activation,
            qstar,
            backend,
            evaluator,
        })
    }

    pub fn closed_form(activation: Activation, qstar: f64) -> Result<Self> {
        Self::new(activation, qstar, Backend::ClosedForm)
    }

    /// Same activation and backend at another diagonal variance.
    pub fn with_qstar(&self, qstar: f64) -> Result<Self> {
        Self::new(self.activation, qstar, self.backend)
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn qstar(&self) -> f64 {
        self.qstar
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    fn check_domain(&self, q_ab: f64) -> Result<f64> {
        if !q_ab.is_finite() || q_ab.abs() > self.qstar * (1.0 + DOMAIN_SLACK) {
            return Err(Error::Domain {
                q_ab,
                qstar: self.qstar,
            });
        }
        Ok(q_ab.clamp(-self.qstar, self.qstar))
    }

    /// `E φ(u)φ(v)`.
    pub fn t_map(&self, q_ab: f64) -> Result<f64> {
        let x = self.check_domain(q_ab)?;
        Ok(match &self.evaluator {
            Evaluator::Closed => match self.activation {
                Activation::Erf => erf_t(self.qstar, x),
                Activation::Relu => relu_t(self.qstar, x),
                Activation::Tanh => unreachable!("tanh has no closed form"),
            },
            Evaluator::Tensor { rule, phi_u, .. } => self.tensor(rule, phi_u, x, false),
            Evaluator::Polar {
                angular, radial, ..
            } => self.polar(angular, radial, x, false),
        })
    }

    /// `E φ'(u)φ'(v)`.
    pub fn t_dot(&self, q_ab: f64) -> Result<f64> {
        let x = self.check_domain(q_ab)?;
        Ok(match &self.evaluator {
            Evaluator::Closed => match self.activation {
                Activation::Erf => erf_t_dot(self.qstar, x),
                Activation::Relu => relu_t_dot(self.qstar, x),
                Activation::Tanh => unreachable!("tanh has no closed form"),
            },
            Evaluator::Tensor { rule, dphi_u, .. } => self.tensor(rule, dphi_u, x, true),
            Evaluator::Polar {
                angular, radial, ..
            } => self.polar(angular, radial, x, true),
        })
    }

    /// Second derivative of [`t_map`](Self::t_map) in `q_ab`.
    ///
    /// Analytic for closed-form Erf; otherwise a Richardson-extrapolated
    /// difference of `t_dot`, one-sided near `±q*` for smooth activations.
    /// ReLU is singular at `|q_ab| = q*` and raises a domain error there.
    pub fn t_ddot(&self, q_ab: f64) -> Result<f64> {
        let x = self.check_domain(q_ab)?;
        if let (Evaluator::Closed, Activation::Erf) = (&self.evaluator, self.activation) {
            return Ok(erf_t_ddot(self.qstar, x));
        }
        let margin = self.qstar - x.abs();
        if self.activation.has_kink() && margin <= 0.0 {
            return Err(Error::Domain {
                q_ab,
                qstar: self.qstar,
            });
        }
        let base = 1e-3 * self.qstar;
        if margin > 2.5 * base {
            return self.central_second(x, base);
        }
        if self.activation.has_kink() {
            // Singular at the boundary; shrink the stencil instead.
            return self.central_second(x, margin / 2.5);
        }
        let dir = if x >= 0.0 { -1.0 } else { 1.0 };
        let one_sided = |h: f64| -> Result<f64> {
            let f0 = self.t_dot(x)?;
            let f1 = self.t_dot(x + dir * h)?;
            let f2 = self.t_dot(x + 2.0 * dir * h)?;
            Ok(dir * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h))
        };
        let coarse = one_sided(base)?;
        let fine = one_sided(0.5 * base)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }

    fn central_second(&self, x: f64, h: f64) -> Result<f64> {
        let central = |h: f64| -> Result<f64> {
            Ok((self.t_dot(x + h)? - self.t_dot(x - h)?) / (2.0 * h))
        };
        let coarse = central(h)?;
        let fine = central(0.5 * h)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }

    /// `E φ(u)²` for `u ~ N(0, q)`: the diagonal of the map at variance `q`,
    /// independent of the stored `q*`.
    pub fn diag_map(&self, q: f64) -> f64 {
        match (&self.evaluator, self.activation) {
            (Evaluator::Closed, Activation::Erf) => erf_t(q, q),
            (_, Activation::Relu) => 0.5 * q.max(0.0),
            _ => self.diag_quadrature(q, false),
        }
    }

    /// `E φ'(u)²` for `u ~ N(0, q)`.
    pub fn diag_dot(&self, q: f64) -> f64 {
        match (&self.evaluator, self.activation) {
            (Evaluator::Closed, Activation::Erf) => erf_t_dot(q, q),
            (_, Activation::Relu) => 0.5,
            _ => self.diag_quadrature(q, true),
        }
    }

    fn diag_quadrature(&self, q: f64, derivative: bool) -> f64 {
        let rule = match &self.evaluator {
            Evaluator::Tensor { rule, .. } => Arc::clone(rule),
            Evaluator::Polar { hermite, .. } => Arc::clone(hermite),
            Evaluator::Closed => gauss_rule(RuleFamily::StandardNormal, DEFAULT_TANH_NODES)
                .expect("default rule"),
        };
        let sq = q.max(0.0).sqrt();
        let act = self.activation;
        rule.integrate(|z| {
            let y = if derivative {
                act.derivative(sq * z)
            } else {
                act.eval(sq * z)
            };
            y * y
        })
    }

    fn tensor(&self, rule: &QuadratureRule, at_u: &[f64], x: f64, derivative: bool) -> f64 {
        let c = x / self.qstar;
        let s = (1.0 - c * c).max(0.0).sqrt();
        let sq = self.qstar.sqrt();
        let act = self.activation;
        let z = &rule.nodes;
        let w = &rule.weights;
        let mut total = 0.0;
        for i in 0..z.len() {
            if at_u[i] == 0.0 {
                continue;
            }
            let cz = c * z[i];
            let inner: f64 = z
                .iter()
                .zip(w)
                .map(|(&zj, &wj)| {
                    let v = sq * (cz + s * zj);
                    wj * if derivative {
                        act.derivative(v)
                    } else {
                        act.eval(v)
                    }
                })
                .sum();
            total += w[i] * at_u[i] * inner;
        }
        total
    }

    fn polar(
        &self,
        angular: &QuadratureRule,
        radial: &QuadratureRule,
        x: f64,
        derivative: bool,
    ) -> f64 {
        let theta = relu_angle(self.qstar, x);
        let two_pi = 2.0 * PI;
        let mut cuts = vec![
            0.0,
            0.5 * PI,
            1.5 * PI,
            (theta + 0.5 * PI).rem_euclid(two_pi),
            (theta + 1.5 * PI).rem_euclid(two_pi),
            two_pi,
        ];
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

        let sq = self.qstar.sqrt();
        let act = self.activation;
        let mut total = 0.0;
        for arc in cuts.windows(2) {
            let (a, b) = (arc[0], arc[1]);
            let half = 0.5 * (b - a);
            if half <= 0.0 {
                continue;
            }
            let mid = 0.5 * (a + b);
            for (&y, &wa) in angular.nodes.iter().zip(&angular.weights) {
                let psi = mid + half * y;
                let (cu, cv) = (psi.cos(), (psi - theta).cos());
                let radial_sum: f64 = radial
                    .nodes
                    .iter()
                    .zip(&radial.weights)
                    .map(|(&t, &wr)| {
                        let r = (2.0 * t).sqrt() * sq;
                        let (u, v) = (r * cu, r * cv);
                        wr * if derivative {
                            act.derivative(u) * act.derivative(v)
                        } else {
                            act.eval(u) * act.eval(v)
                        }
                    })
                    .sum();
                total += half * wa * radial_sum;
            }
        }
        total / two_pi
    }
}

fn erf_t(q: f64, x: f64) -> f64 {
    (2.0 / PI) * (2.0 * x / (1.0 + 2.0 * q)).clamp(-1.0, 1.0).asin()
}

fn erf_gap(q: f64, x: f64) -> f64 {
    // (1 + 2q)² − 4x², factored to keep precision near |x| = q.
    let a = 1.0 + 2.0 * q;
    (a - 2.0 * x) * (a + 2.0 * x)
}

fn erf_t_dot(q: f64, x: f64) -> f64 {
    (4.0 / PI) / erf_gap(q, x).sqrt()
}

fn erf_t_ddot(q: f64, x: f64) -> f64 {
    (16.0 / PI) * x / erf_gap(q, x).powf(1.5)
}

/// Angle between the whitened directions: `θ = acos(q_ab/q)`, computed from
/// `1 ∓ c` near the poles to avoid cancellation.
pub(crate) fn relu_angle(q: f64, x: f64) -> f64 {
    let c = x / q;
    if c > 0.5 {
        let gap = (q - x) / q;
        2.0 * (0.5 * gap).max(0.0).sqrt().asin()
    } else if c < -0.5 {
        let gap = (q + x) / q;
        PI - 2.0 * (0.5 * gap).max(0.0).sqrt().asin()
    } else {
        c.acos()
    }
}

pub(crate) fn relu_t(q: f64, x: f64) -> f64 {
    let theta = relu_angle(q, x);
    q / (2.0 * PI) * (theta.sin() + (PI - theta) * theta.cos())
}

pub(crate) fn relu_t_dot(q: f64, x: f64) -> f64 {
    (PI - relu_angle(q, x)) / (2.0 * PI)
}
