//! Acceptance suite: every criterion runs at its stated tolerance and prints
//! one PASS/FAIL line followed by the measured quantities.
//!
//! Depth conventions: the propagation code counts layers applied to the
//! input kernel, so a state at propagation depth `l` is the kernel of an
//! `l + 1`-layer network. Scalar laws stated for layer `l` are checked at
//! propagation depth `l − 1`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use ntk_core::activation::{Activation, ActivationKernel, Backend};
use ntk_core::phase::{analyze, critical_sigma_w2, Architecture, Hyperparams, PhaseReport};
use ntk_core::predictor::{
    gradient_descent_residuals, max_learning_rate, mean_predict, ordered_limit_predictor,
    RegressionTask,
};
use ntk_core::propagation::{
    apply_dropout, dropout_kappa_limit, fourier_eigs, integrate_residual, scalar_trajectory,
    step_fcn, OdeKernelState, OdeVariant, Propagator, ScalarKernelState,
};
use ntk_core::spectral::{fit_rate, spectrum, RateModel};
use ntk_sweep::{generate_data, run_sweep, Format, Generator, OutputKind, SweepConfig, SyntheticDataset};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<Vec<Check>, String>;

struct Check {
    label: String,
    detail: String,
    pass: bool,
}

/// `|measured − target| ≤ tol·|target|`.
fn rel(label: &str, measured: f64, target: f64, tol: f64) -> Check {
    let err = (measured - target).abs() / target.abs();
    Check {
        label: label.into(),
        detail: format!("{measured:.6e} vs {target:.6e} (rel err {err:.2e}, tol {tol:e})"),
        pass: err <= tol,
    }
}

/// `|measured − target| ≤ tol`.
fn abs(label: &str, measured: f64, target: f64, tol: f64) -> Check {
    let err = (measured - target).abs();
    Check {
        label: label.into(),
        detail: format!("{measured:.6e} vs {target:.6e} (abs err {err:.2e}, tol {tol:e})"),
        pass: err <= tol,
    }
}

fn below(label: &str, measured: f64, bound: f64) -> Check {
    Check {
        label: label.into(),
        detail: format!("{measured:.6e} < {bound:.3e}"),
        pass: measured < bound,
    }
}

fn holds(label: &str, pass: bool, detail: String) -> Check {
    Check {
        label: label.into(),
        detail,
        pass,
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn dataset(cfg: SweepConfig) -> Result<SyntheticDataset, String> {
    generate_data(&cfg).map_err(err)
}

fn fcn_data(m: usize, n: usize) -> Result<SyntheticDataset, String> {
    dataset(SweepConfig {
        m,
        n,
        ..SweepConfig::default()
    })
}

fn erf_point(sigma_w2: f64, sigma_b2: f64) -> Result<(Hyperparams, PhaseReport, ActivationKernel), String> {
    let h = Hyperparams::fcn(Activation::Erf, sigma_w2, sigma_b2);
    let (ph, k) = analyze(&h, Backend::ClosedForm).map_err(err)?;
    Ok((h, ph, k))
}

/// Equicorrelated `m × m` kernel with diagonal `p` and off-diagonal `p_ab`.
fn equicorrelated(m: usize, p: f64, p_ab: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| if i == j { p } else { p_ab })
}

fn criterion_1() -> Outcome {
    let mut checks = Vec::new();
    let q = 1.3;
    for act in [Activation::Erf, Activation::Relu] {
        let exact = ActivationKernel::new(act, q, Backend::ClosedForm).map_err(err)?;
        let quad = ActivationKernel::new(act, q, Backend::Quadrature { nodes: 200 }).map_err(err)?;
        let (mut dt, mut dd) = (0.0f64, 0.0f64);
        for i in 0..100 {
            let x = q * (-0.99 + 1.98 * i as f64 / 99.0);
            dt = dt.max((exact.t_map(x).map_err(err)? - quad.t_map(x).map_err(err)?).abs());
            dd = dd.max((exact.t_dot(x).map_err(err)? - quad.t_dot(x).map_err(err)?).abs());
        }
        checks.push(abs(&format!("{act} t_map max |closed − quadrature|"), dt, 0.0, 1e-6));
        checks.push(abs(&format!("{act} t_dot max |closed − quadrature|"), dd, 0.0, 1e-6));
    }
    Ok(checks)
}

fn criterion_2() -> Outcome {
    let m = 12;
    let (h, ph, k) = erf_point(4.0, 0.5)?;
    let xi = 1.0 / ph.chi1.ln();
    let l_end = (10.0 * xi).ceil() as usize;
    let data = fcn_data(m, 1)?;
    let mut prop = Propagator::new(&h, k, &data.x_train).map_err(err)?;
    let mut series = Vec::new();
    let mut at_end = f64::NAN;
    for l in 1..=l_end {
        prop.advance_to(l).map_err(err)?;
        let s = spectrum(&prop.kernels().map_err(err)?.ntk).map_err(err)?;
        let excess = s.kappa - 1.0;
        if l as f64 >= 3.0 * xi {
            series.push((l as f64, excess));
        }
        at_end = excess;
    }
    let fit = fit_rate(&series, RateModel::LogLinear).map_err(err)?;
    Ok(vec![
        below(&format!("κ − 1 at l = {l_end} (10ξ, ξ = {xi:.3})"), at_end, 1e-3),
        rel(
            &format!("log-rate of κ − 1 over l ∈ [{}, {l_end}] vs −log χ₁", series[0].0),
            fit.slope,
            -ph.chi1.ln(),
            0.10,
        ),
    ])
}

fn criterion_3() -> Outcome {
    let m = 12;
    let (h, ph, k) = erf_point(1.5, 0.5)?;
    let xi = -1.0 / ph.chi1.ln();
    let (lo, hi) = ((4.0 * xi).ceil() as usize, (8.0 * xi).floor() as usize);
    let data = fcn_data(m, 1)?;
    let mut prop = Propagator::new(&h, k, &data.x_train).map_err(err)?;
    let mut scaled = Vec::new();
    for l in lo..=hi {
        prop.advance_to(l).map_err(err)?;
        let s = spectrum(&prop.kernels().map_err(err)?.ntk).map_err(err)?;
        let lf = l as f64;
        scaled.push(s.kappa * lf * ph.chi1.powf(lf));
    }
    let max = scaled.iter().cloned().fold(f64::MIN, f64::max);
    let min = scaled.iter().cloned().fold(f64::MAX, f64::min);
    let variation = (max - min) / min;
    Ok(vec![holds(
        &format!("κ·lχ₁ˡ over l ∈ [{lo}, {hi}] (ξ₁ = {xi:.3})"),
        variation <= 0.10,
        format!("range [{min:.4e}, {max:.4e}], relative variation {variation:.3e} (tol 1e-1)"),
    )])
}

fn criterion_4() -> Outcome {
    let m = 12;
    let l = 512;
    let sb = 0.5;
    let sw = critical_sigma_w2(sb, Activation::Erf, Backend::ClosedForm).map_err(err)?;
    let h = Hyperparams::fcn(Activation::Erf, sw, sb);
    let (_, k) = analyze(&h, Backend::ClosedForm).map_err(err)?;
    let data = fcn_data(m, 1)?;
    let mut prop = Propagator::new(&h, k.clone(), &data.x_train).map_err(err)?;
    prop.advance_to(l).map_err(err)?;
    let fcn = spectrum(&prop.kernels().map_err(err)?.ntk).map_err(err)?;

    let d = 6;
    let cnn_cfg = SweepConfig {
        m,
        n: 1,
        architecture: Architecture::CnnPool,
        spatial: d,
        filter_halfwidth: 1,
        channels: 3,
        ..SweepConfig::default()
    };
    let cdata = dataset(cnn_cfg)?;
    let hc = Hyperparams::cnn(Activation::Erf, sw, sb, Architecture::CnnPool, d, 1);
    let mut cprop = Propagator::new(&hc, k, &cdata.x_train).map_err(err)?;
    cprop.advance_to(l).map_err(err)?;
    let cnn = spectrum(&cprop.kernels().map_err(err)?.ntk).map_err(err)?;
    Ok(vec![
        rel("FCN κ(Θ) at l = 512 vs (m+2)/2", fcn.kappa, (m as f64 + 2.0) / 2.0, 0.02),
        rel(
            "CNN-P (d = 6) κ(Θ) at l = 512 vs (md+2)/2",
            cnn.kappa,
            (m as f64 * d as f64 + 2.0) / 2.0,
            0.05,
        ),
    ])
}

fn criterion_5() -> Outcome {
    let sb = 0.5;
    let sw = critical_sigma_w2(sb, Activation::Erf, Backend::ClosedForm).map_err(err)?;
    let h = Hyperparams::fcn(Activation::Erf, sw, sb);
    let (ph, k) = analyze(&h, Backend::ClosedForm).map_err(err)?;
    let q = ph.qstar;
    let l = 4096;
    let s0 = ScalarKernelState::from_correlation(q, 0.2).map_err(err)?;
    let traj = scalar_trajectory(&s0, &h, &k, l - 1).map_err(err)?;
    // Accumulated rounding over l additions bounds "exact" at l·ε relative.
    let worst = traj
        .iter()
        .enumerate()
        .map(|(i, s)| (s.p_diag / ((i + 1) as f64 * q) - 1.0).abs())
        .fold(0.0, f64::max);
    let last = traj.last().expect("nonempty");
    let lf = l as f64;
    Ok(vec![
        abs(
            "max over l ≤ 4096 of |p⁽ˡ⁾/(lq*) − 1|",
            worst,
            0.0,
            lf * f64::EPSILON,
        ),
        rel("p_ab/l at l = 4096 vs q*/3", last.p_ab / lf, q / 3.0, 0.02),
        rel(
            "l·ε_ab at l = 4096 vs −2/χ₁,₂",
            lf * (last.q_ab - q),
            -2.0 / ph.chi1_2,
            0.05,
        ),
    ])
}

fn decay_series(
    h: &Hyperparams,
    k: &ActivationKernel,
    data: &SyntheticDataset,
    depths: impl Iterator<Item = usize>,
) -> Result<Vec<(usize, f64, f64)>, String> {
    let m = data.train_len();
    let mut prop = Propagator::new(h, k.clone(), &data.joint()).map_err(err)?;
    let mut out = Vec::new();
    for l in depths {
        prop.advance_to(l).map_err(err)?;
        let kp = prop.kernels().map_err(err)?;
        let norm = |kernel: &DMatrix<f64>| -> Result<f64, String> {
            let task = RegressionTask::from_joint(kernel, m, data.y.clone(), 0.0).map_err(err)?;
            Ok(mean_predict(&task).map_err(err)?.norm())
        };
        out.push((l, norm(&kp.ntk)?, norm(&kp.nngp)?));
    }
    Ok(out)
}

fn criterion_6() -> Outcome {
    let data = fcn_data(12, 8)?;
    let (h, ph, k) = erf_point(4.0, 0.5)?;
    let chaotic = decay_series(&h, &k, &data, 20..=60)?;
    // The NTK norm carries a linear prefactor, 𝒪(l (χ_c*/χ₁)ˡ); fit the
    // geometric part.
    let ntk: Vec<(f64, f64)> = chaotic.iter().map(|&(l, n, _)| (l as f64, n / l as f64)).collect();
    let nngp: Vec<(f64, f64)> = chaotic.iter().map(|&(l, _, g)| (l as f64, g)).collect();
    let ntk_fit = fit_rate(&ntk, RateModel::LogLinear).map_err(err)?;
    let nngp_fit = fit_rate(&nngp, RateModel::LogLinear).map_err(err)?;

    let sb = 0.5;
    let sw = critical_sigma_w2(sb, Activation::Erf, Backend::ClosedForm).map_err(err)?;
    let hc = Hyperparams::fcn(Activation::Erf, sw, sb);
    let (_, kc) = analyze(&hc, Backend::ClosedForm).map_err(err)?;
    let critical = decay_series(&hc, &kc, &data, (50..=400).step_by(10))?;
    let crit: Vec<(f64, f64)> = critical.iter().map(|&(l, n, _)| (l as f64, n)).collect();
    let crit_fit = fit_rate(&crit, RateModel::PowerLaw).map_err(err)?;
    Ok(vec![
        rel(
            "chaotic NTK log-slope of ‖P(Θ)Y‖/l over l ∈ [20, 60] vs log(χ_c*/χ₁)",
            ntk_fit.slope,
            (ph.chi_c / ph.chi1).ln(),
            0.05,
        ),
        rel(
            "chaotic NNGP log-slope of ‖P(𝒦)Y‖ over l ∈ [20, 60] vs log χ_c*",
            nngp_fit.slope,
            ph.chi_c.ln(),
            0.05,
        ),
        holds(
            "NNGP predictor decays more slowly than NTK",
            nngp_fit.slope > ntk_fit.slope,
            format!("{:.4} > {:.4}", nngp_fit.slope, ntk_fit.slope),
        ),
        rel(
            "critical NTK power-law exponent over l ∈ [50, 400] vs −1",
            crit_fit.slope,
            -1.0,
            0.10,
        ),
    ])
}

fn criterion_7() -> Outcome {
    let data = fcn_data(6, 8)?;
    let (h, ph, k) = erf_point(1.5, 0.5)?;
    let xi = ph.xi1.value().ok_or("ordered point has a finite ξ₁")?;
    let l = (6.0 * xi).round() as usize;
    let m = data.train_len();
    let mut prop = Propagator::new(&h, k, &data.joint()).map_err(err)?;
    prop.advance_to(l).map_err(err)?;
    let kp = prop.kernels().map_err(err)?;
    let direct = mean_predict(&RegressionTask::from_joint(&kp.ntk, m, data.y.clone(), 0.0).map_err(err)?)
        .map_err(err)?;
    let woodbury = ordered_limit_predictor(&kp, m, &ph, l).map_err(err)? * &data.y;
    let diff = (&direct - &woodbury).amax() / direct.amax();

    let deep = (10.0 * xi).round() as usize;
    prop.advance_to(deep).map_err(err)?;
    let a = ordered_limit_predictor(&prop.kernels().map_err(err)?, m, &ph, deep).map_err(err)? * &data.y;
    prop.advance_to(deep + 20).map_err(err)?;
    let b = ordered_limit_predictor(&prop.kernels().map_err(err)?, m, &ph, deep + 20).map_err(err)? * &data.y;
    let change = (&b - &a).norm() / a.norm();
    Ok(vec![
        abs(
            &format!("Woodbury vs direct at l = {l} (6ξ₁), max-relative difference"),
            diff,
            0.0,
            1e-6,
        ),
        below(
            &format!("relative change of P(Θ)Y from l = {deep} to {}", deep + 20),
            change,
            0.01,
        ),
    ])
}

fn criterion_8() -> Outcome {
    let m = 12;
    let h = Hyperparams::fcn(Activation::Relu, 2.0, 0.0);
    let q = 1.0;
    let k = ActivationKernel::closed_form(Activation::Relu, q).map_err(err)?;
    let l = 2000;
    let s0 = ScalarKernelState::from_correlation(q, 0.5).map_err(err)?;
    let traj = scalar_trajectory(&s0, &h, &k, l - 1).map_err(err)?;
    let layer = |i: usize| &traj[i - 1];
    let last = layer(l);
    let ntk = spectrum(&equicorrelated(m, last.p_diag, last.p_ab)).map_err(err)?;
    let lf = l as f64;
    let eps = last.q_ab - last.q_diag;
    let mut growth = Vec::new();
    for i in (500..=l).step_by(50) {
        let s = layer(i);
        let nngp = spectrum(&equicorrelated(m, s.q_diag, s.q_ab)).map_err(err)?;
        growth.push((i as f64, nngp.kappa));
    }
    let fit = fit_rate(&growth, RateModel::PowerLaw).map_err(err)?;
    Ok(vec![
        rel("NTK κ at l = 2000 vs (m+3)/3", ntk.kappa, (m as f64 + 3.0) / 3.0, 0.02),
        rel("−l²ε_ab/q* at l = 2000 vs 9π²/2", -lf * lf * eps / q, 4.5 * PI * PI, 0.03),
        abs("NNGP κ power-law exponent over l ∈ [500, 2000]", fit.slope, 2.0, 0.1),
    ])
}

fn criterion_9() -> Outcome {
    let plain = integrate_residual(&OdeKernelState::initial(OdeVariant::ResidualRelu, 0.0), 5.0, 1e-3, 1000)
        .map_err(err)?;
    let end = plain.last().expect("nonempty");
    let e5 = 5f64.exp();
    let c0 = 0.0;
    let t_end = 100.0;
    let ln = integrate_residual(
        &OdeKernelState::initial(OdeVariant::ResidualReluLayerNorm, c0),
        t_end,
        1e-2,
        1000,
    )
    .map_err(err)?;
    let last = ln.last().expect("nonempty");
    let q_drift = ln.iter().map(|s| (s.q_diag - 1.0).abs()).fold(0.0, f64::max);
    let p_err = ln
        .iter()
        .filter(|s| s.t > 0.0)
        .map(|s| (s.p_diag / s.t - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(vec![
        rel("residual q(5) vs e⁵", end.q_diag, e5, 1e-6),
        rel("residual p(5) vs 5e⁵", end.p_diag, 5.0 * e5, 1e-6),
        abs("layer-norm max |q(t) − 1|", q_drift, 0.0, 1e-6),
        abs("layer-norm max |p(t)/t − 1|", p_err, 0.0, 1e-6),
        rel(
            &format!("layer-norm (1 − q_ab)t² at t = 100 (c₀ = {c0}) vs 9π²/2"),
            (1.0 - last.q_ab) * t_end * t_end,
            4.5 * PI * PI,
            0.05,
        ),
        rel(
            &format!("layer-norm p_ab/t at t = 100 (c₀ = {c0}) vs 1/4"),
            last.p_ab / t_end,
            0.25,
            0.05,
        ),
    ])
}

fn criterion_10() -> Outcome {
    let m = 12;
    let (h, ph, k) = erf_point(0.5, 0.5)?;
    let xi = ph.xi1.value().ok_or("ordered point has a finite ξ₁")?;
    let depth = (8.0 * xi).ceil() as usize;
    let pstar = ph.pstar.ok_or("ordered point has a finite p*")?;
    let data = fcn_data(m, 1)?;
    let mut checks = Vec::new();
    for rho in [0.8, 0.95, 0.99] {
        let hd = h.with_dropout(rho);
        let mut prop = Propagator::new(&hd, k.clone(), &data.x_train).map_err(err)?;
        prop.advance_to(depth).map_err(err)?;
        let s = spectrum(&prop.kernels().map_err(err)?.ntk).map_err(err)?;
        checks.push(rel(
            &format!("ρ = {rho}: κ at L = {depth} (8ξ₁) vs dropout limit"),
            s.kappa,
            dropout_kappa_limit(m, pstar, h.sigma_b2, rho),
            0.02,
        ));
    }
    let mut prop = Propagator::new(&h, k.clone(), &data.x_train).map_err(err)?;
    prop.advance_to(depth - 1).map_err(err)?;
    let prev = prop.kernels().map_err(err)?;
    let plain = step_fcn(&prev, &h, &k).map_err(err)?;
    let keep_all = apply_dropout(&prev, &h.with_dropout(1.0), &k).map_err(err)?;
    let bits = |m: &DMatrix<f64>| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    checks.push(holds(
        "ρ = 1 dropout layer is bit-identical to a plain layer",
        bits(&plain.ntk) == bits(&keep_all.ntk) && bits(&plain.nngp) == bits(&keep_all.nngp),
        format!("{} NTK and NNGP entries compared", 2 * plain.ntk.len()),
    ));
    Ok(checks)
}

fn criterion_11() -> Outcome {
    let mut checks = Vec::new();
    let (mut worst_zero, mut cases) = (0.0f64, 0);
    // Split by filter width so the identity filter (k = 0, every ρ_q = 1)
    // shows up on its own line.
    let (mut worst_wide, mut worst_identity) = (0.0f64, 0.0f64);
    for d in 1..=32usize {
        for k in 0..=(d - 1) / 2 {
            let rho = fourier_eigs(d, k).map_err(err)?;
            worst_zero = worst_zero.max((rho[0] - 1.0).abs());
            let rest = rho[1..].iter().fold(0.0f64, |a, r| a.max(r.abs()));
            if k == 0 {
                worst_identity = worst_identity.max(rest);
            } else {
                worst_wide = worst_wide.max(rest);
            }
            cases += 1;
        }
    }
    checks.push(abs(&format!("max |ρ₀ − 1| over {cases} (d, k) pairs"), worst_zero, 0.0, 1e-12));
    checks.push(below("max |ρ_q|, q ≠ 0, over pairs with k ≥ 1", worst_wide, 1.0));
    checks.push(below("max |ρ_q|, q ≠ 0, over pairs with k = 0", worst_identity, 1.0));

    let (h, ph, k) = erf_point(4.0, 0.5)?;
    let cfg = SweepConfig {
        m: 6,
        n: 1,
        features: 5,
        ..SweepConfig::default()
    };
    let data = dataset(cfg)?;
    let mut worst = 0.0f64;
    for arch in [Architecture::CnnFlatten, Architecture::CnnPool] {
        let mut fcn = Propagator::new(&h, k.clone(), &data.x_train).map_err(err)?;
        let hc = Hyperparams::cnn(Activation::Erf, h.sigma_w2, h.sigma_b2, arch, 1, 0);
        let mut cnn = Propagator::new(&hc, k.clone(), &data.x_train).map_err(err)?;
        for l in [1, 5, 20] {
            fcn.advance_to(l).map_err(err)?;
            cnn.advance_to(l).map_err(err)?;
            let (a, b) = (fcn.kernels().map_err(err)?, cnn.kernels().map_err(err)?);
            worst = worst.max((&a.ntk - &b.ntk).amax() / a.ntk.amax());
            worst = worst.max((&a.nngp - &b.nngp).amax() / a.nngp.amax());
        }
    }
    checks.push(abs("d = 1 CNN vs FCN kernels (max relative entry difference)", worst, 0.0, 1e-12));

    let d = 6;
    let cfg = SweepConfig {
        m: 6,
        n: 1,
        architecture: Architecture::CnnFlatten,
        spatial: d,
        filter_halfwidth: 1,
        channels: 3,
        ..SweepConfig::default()
    };
    let data = dataset(cfg)?;
    let hc = Hyperparams::cnn(Activation::Erf, h.sigma_w2, h.sigma_b2, Architecture::CnnFlatten, d, 1);
    let mut cnn = Propagator::new(&hc, k.clone(), &data.x_train).map_err(err)?;
    let mut fcn = Propagator::new(&h, k, &data.x_train).map_err(err)?;
    let (lo, hi) = (10, 30);
    let mut gaps = Vec::new();
    for l in lo..=hi {
        cnn.advance_to(l).map_err(err)?;
        fcn.advance_to(l).map_err(err)?;
        let gap = (&cnn.kernels().map_err(err)?.nngp - &fcn.kernels().map_err(err)?.nngp).amax();
        gaps.push((l as f64, gap));
    }
    let fit = fit_rate(&gaps, RateModel::LogLinear).map_err(err)?;
    let rho1 = fourier_eigs(d, 1).map_err(err)?[1];
    let predicted = rho1.abs() * ph.chi_c;
    checks.push(rel(
        &format!("flatten − FCN NNGP per-layer rate over l ∈ [{lo}, {hi}] vs |ρ₁|χ_c*"),
        fit.slope.exp(),
        predicted,
        0.15,
    ));
    Ok(checks)
}

fn criterion_12() -> Outcome {
    let m = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut normal = move || {
        let u1 = 1.0 - (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    };
    let steps = 2000;
    let (mut converged, mut diverged) = (0, 0);
    let (mut worst_slow, mut least_fast) = (0.0f64, f64::INFINITY);
    for _ in 0..10 {
        let g = DMatrix::from_fn(m, 3 * m, |_, _| normal());
        let theta = &g * g.transpose() / (3 * m) as f64;
        let y = DMatrix::from_fn(m, 1, |_, _| normal());
        let s = spectrum(&theta).map_err(err)?;
        let eta = max_learning_rate(&s).map_err(err)?;
        let y0 = y.norm();
        let slow = gradient_descent_residuals(&theta, &y, 0.95 * eta, steps);
        let fast = gradient_descent_residuals(&theta, &y, 1.05 * eta, steps);
        let slow_ratio = slow.last().expect("steps > 0") / y0;
        let fast_ratio = fast.last().expect("steps > 0") / y0;
        worst_slow = worst_slow.max(slow_ratio);
        least_fast = least_fast.min(fast_ratio);
        converged += usize::from(slow_ratio < 1e-6);
        diverged += usize::from(fast_ratio > 1e6);
    }
    Ok(vec![
        holds(
            "η = 1.9/λ_max converges on 10 kernels",
            converged == 10,
            format!("{converged}/10, worst ‖Y − μ‖/‖Y‖ after {steps} steps {worst_slow:.2e} (tol 1e-6)"),
        ),
        holds(
            "η = 2.1/λ_max diverges on 10 kernels",
            diverged == 10,
            format!("{diverged}/10, smallest ‖Y − μ‖/‖Y‖ after {steps} steps {least_fast:.2e} (> 1e6)"),
        ),
    ])
}

fn sweep_bytes(cfg: &SweepConfig, threads: usize) -> Result<Vec<(String, Vec<u8>)>, String> {
    let results = run_sweep(cfg, Some(threads)).map_err(err)?;
    let dir = tempfile::tempdir().map_err(err)?;
    let mut out = Vec::new();
    for t in &results.tables {
        let path = t.write(dir.path(), Format::Csv).map_err(err)?;
        out.push((t.kind.name().to_string(), std::fs::read(&path).map_err(err)?));
    }
    Ok(out)
}

fn criterion_13() -> Outcome {
    let cfg = SweepConfig {
        sigma_w2_grid: vec![1.0, 2.5, 4.0],
        sigma_b2_grid: vec![0.05, 0.5],
        depths: vec![1, 4, 16, 64],
        generator: Generator::TwoClusters,
        outputs: OutputKind::ALL.to_vec(),
        seed: 2024,
        ..SweepConfig::default()
    };
    let a = sweep_bytes(&cfg, 1)?;
    let b = sweep_bytes(&cfg, 1)?;
    let c = sweep_bytes(&cfg, 4)?;
    let total: usize = a.iter().map(|(_, bytes)| bytes.len()).sum();
    Ok(vec![
        holds(
            "two runs produce byte-identical CSV",
            a == b,
            format!("{} tables, {total} bytes", a.len()),
        ),
        holds(
            "1 and 4 worker threads produce byte-identical CSV",
            a == c,
            format!("{} tables compared", a.len()),
        ),
    ])
}

/// When set, any failing criterion makes the binary exit with failure.
const STRICT_ENV: &str = "NTK_ACCEPTANCE_STRICT";

struct Criterion {
    id: usize,
    title: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, title: "closed forms vs quadrature", budget: secs(1), run: criterion_1 },
        Criterion { id: 2, title: "chaotic conditioning", budget: secs(5), run: criterion_2 },
        Criterion { id: 3, title: "ordered conditioning", budget: secs(5), run: criterion_3 },
        Criterion { id: 4, title: "critical conditioning", budget: secs(60), run: criterion_4 },
        Criterion { id: 5, title: "critical scalar laws", budget: secs(2), run: criterion_5 },
        Criterion { id: 6, title: "predictor decay rates", budget: secs(10), run: criterion_6 },
        Criterion { id: 7, title: "ordered predictor limit", budget: secs(5), run: criterion_7 },
        Criterion { id: 8, title: "critical ReLU", budget: secs(2), run: criterion_8 },
        Criterion { id: 9, title: "residual ODEs", budget: secs(5), run: criterion_9 },
        Criterion { id: 10, title: "dropout", budget: secs(5), run: criterion_10 },
        Criterion { id: 11, title: "CNN structure", budget: secs(60), run: criterion_11 },
        Criterion { id: 12, title: "learning-rate threshold", budget: secs(1), run: criterion_12 },
        Criterion { id: 13, title: "determinism", budget: None, run: criterion_13 },
    ];
    let mut failed = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_budget = c.budget.is_none_or(|b| elapsed <= b);
        let budget = c.budget.map_or("none".to_string(), |b| format!("{} s", b.as_secs()));
        let pass = in_budget && outcome.as_ref().is_ok_and(|checks| checks.iter().all(|k| k.pass));
        println!(
            "{} criterion {:>2}: {} ({:.3} s, budget {budget})",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            elapsed.as_secs_f64()
        );
        match &outcome {
            Ok(checks) => {
                for k in checks {
                    println!("    [{}] {}: {}", if k.pass { "ok" } else { "xx" }, k.label, k.detail);
                }
            }
            Err(e) => println!("    [xx] error: {e}"),
        }
        if !in_budget {
            println!("    [xx] runtime exceeded the budget");
        }
        if !pass {
            failed.push(c.id);
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed.len(),
        criteria.len()
    );
    if failed.is_empty() {
        return ExitCode::SUCCESS;
    }
    println!("failed criteria: {failed:?}");
    // Report-only by default so the rest of the workspace tests still run.
    if std::env::var_os(STRICT_ENV).is_some() {
        ExitCode::FAILURE
    } else {
        println!("set {STRICT_ENV}=1 to exit with failure status");
        ExitCode::SUCCESS
    }
}
