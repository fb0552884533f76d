//! Gaussian quadrature rules built by the Golub–Welsch method.
//!
//! Rules are cached per (family, size) since the Jacobi-matrix
//! eigendecomposition dominates the cost of constructing a kernel.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::eigen::tridiagonal_eigen;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleFamily {
    /// Weight `exp(-z²/2)/√(2π)` on the real line (probabilists' Hermite).
    StandardNormal,
    /// Unit weight on `[-1, 1]`.
    Legendre,
    /// Weight `exp(-t)` on `[0, ∞)`.
    Laguerre,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

type Cache = Mutex<HashMap<(RuleFamily, usize), Arc<QuadratureRule>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The `n`-point Gauss rule of the given family, shared across callers.
pub fn gauss_rule(family: RuleFamily, n: usize) -> Result<Arc<QuadratureRule>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "quadrature needs at least one node".into(),
        ));
    }
    if let Some(rule) = cache().lock().expect("quadrature cache").get(&(family, n)) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(golub_welsch(family, n)?);
    cache()
        .lock()
        .expect("quadrature cache")
        .insert((family, n), Arc::clone(&rule));
    Ok(rule)
}

fn golub_welsch(family: RuleFamily, n: usize) -> Result<QuadratureRule> {
    let (diag, off, mass): (Vec<f64>, Vec<f64>, f64) = match family {
        RuleFamily::StandardNormal => (
            vec![0.0; n],
            (1..n).map(|k| (k as f64).sqrt()).collect(),
            1.0,
        ),
        RuleFamily::Legendre => (
            vec![0.0; n],
            (1..n)
                .map(|k| {
                    let k = k as f64;
                    k / (4.0 * k * k - 1.0).sqrt()
                })
                .collect(),
            2.0,
        ),
        RuleFamily::Laguerre => (
            (0..n).map(|k| 2.0 * k as f64 + 1.0).collect(),
            (1..n).map(|k| k as f64).collect(),
            1.0,
        ),
    };
    let eig = tridiagonal_eigen(&diag, &off)?;
    let weights = (0..n)
        .map(|j| {
            let v0 = eig.vectors[(0, j)];
            mass * v0 * v0
        })
        .collect();
    let mut nodes = eig.values;
    if matches!(family, RuleFamily::StandardNormal | RuleFamily::Legendre) {
        symmetrize(&mut nodes);
    }
    Ok(QuadratureRule { nodes, weights })
}

// Symmetric families: average node pairs so the rule is exactly odd-symmetric.
fn symmetrize(nodes: &mut [f64]) {
    let n = nodes.len();
    for i in 0..n / 2 {
        let a = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -a;
        nodes[n - 1 - i] = a;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
}
