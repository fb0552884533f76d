//! Grid sweeps over `(σ_w², σ_b²)`: each grid point is evaluated
//! independently on a worker pool and the rows are merged in grid order.

use nalgebra::DMatrix;
use ntk_core::phase::{critical_sigma_w2, predict_spectrum, DepthScale};
use ntk_core::predictor::{dynamics, mean_predict, max_learning_rate, RegressionTask};
use ntk_core::{
    analyze, spectrum, ActivationKernel, Hyperparams, KernelKind, KernelPair, PhaseReport,
    Propagator, SpectrumSummary,
};
use ntk_core::Result as CoreResult;
use rayon::prelude::*;

use crate::config::{OutputKind, SweepConfig};
use crate::data::{generate_data, SyntheticDataset};
use crate::error::{Result, SweepError};
use crate::table::{columns, Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub sigma_w2: f64,
    pub sigma_b2: f64,
}

/// Grid in row-major order: `σ_w²` outer, `σ_b²` inner.
pub fn grid(cfg: &SweepConfig) -> Vec<GridPoint> {
    cfg.sigma_w2_grid
        .iter()
        .flat_map(|&sigma_w2| {
            cfg.sigma_b2_grid.iter().map(move |&sigma_b2| GridPoint { sigma_w2, sigma_b2 })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResults {
    /// One table per requested output, in the configured order.
    pub tables: Vec<Table>,
}

impl SweepResults {
    pub fn table(&self, kind: OutputKind) -> Option<&Table> {
        self.tables.iter().find(|t| t.kind == kind)
    }

    /// Number of rows carrying an error across all tables.
    pub fn failures(&self) -> usize {
        self.tables.iter().map(Table::failures).sum()
    }
}

fn hyperparams(cfg: &SweepConfig, p: GridPoint) -> Hyperparams {
    let h = if cfg.architecture.is_cnn() {
        Hyperparams::cnn(
            cfg.activation,
            p.sigma_w2,
            p.sigma_b2,
            cfg.architecture,
            cfg.spatial,
            cfg.filter_halfwidth,
        )
    } else {
        Hyperparams::fcn(cfg.activation, p.sigma_w2, p.sigma_b2)
    };
    h.with_dropout(cfg.dropout)
}

/// Runs every requested output. Configuration problems are returned as
/// errors; failures at individual grid points are recorded in the `error`
/// column of the affected rows.
pub fn run_sweep(cfg: &SweepConfig, threads: Option<usize>) -> Result<SweepResults> {
    cfg.validate()?;
    let data = generate_data(cfg)?;
    let points = grid(cfg);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| SweepError::Config(format!("cannot start worker pool: {e}")))?;
    let per_point: Vec<Vec<Table>> =
        pool.install(|| points.par_iter().map(|&p| evaluate_point(cfg, &data, p)).collect());

    let mut tables: Vec<Table> = cfg.outputs.iter().map(|&k| Table::new(k)).collect();
    for point_tables in per_point {
        for (dst, src) in tables.iter_mut().zip(point_tables) {
            dst.rows.extend(src.rows);
        }
    }
    if let Some(t) = tables.iter_mut().find(|t| t.kind == OutputKind::PhaseDiagram) {
        t.rows.extend(pool.install(|| transition_rows(cfg)));
    }
    Ok(SweepResults { tables })
}

fn num(v: f64) -> Cell {
    Cell::Num(v)
}

fn scale(v: DepthScale) -> Cell {
    Cell::Num(v.as_f64())
}

fn phase_row(kind: &str, p: GridPoint, report: std::result::Result<&PhaseReport, String>) -> Vec<Cell> {
    let head = vec![Cell::Text(kind.into()), num(p.sigma_w2), num(p.sigma_b2)];
    match report {
        Ok(r) => head
            .into_iter()
            .chain([
                num(r.qstar),
                num(r.cstar),
                num(r.chi1),
                num(r.chi_c),
                Cell::Text(r.phase.to_string()),
                scale(r.xi1),
                scale(r.xi_c),
                scale(r.xi_star),
                Cell::Missing,
            ])
            .collect(),
        Err(e) => head
            .into_iter()
            .chain(std::iter::repeat_n(Cell::Missing, 8))
            .chain([Cell::Text(e)])
            .collect(),
    }
}

/// The `χ₁ = 1` curve at each configured `σ_b²`.
fn transition_rows(cfg: &SweepConfig) -> Vec<Vec<Cell>> {
    cfg.sigma_b2_grid
        .par_iter()
        .map(|&sb| {
            match critical_sigma_w2(sb, cfg.activation, cfg.backend()) {
                Ok(sw) => {
                    let p = GridPoint { sigma_w2: sw, sigma_b2: sb };
                    let h = Hyperparams::fcn(cfg.activation, sw, sb);
                    match analyze(&h, cfg.backend()) {
                        Ok((r, _)) => phase_row("transition", p, Ok(&r)),
                        Err(e) => phase_row("transition", p, Err(e.to_string())),
                    }
                }
                Err(e) => {
                    let p = GridPoint { sigma_w2: f64::NAN, sigma_b2: sb };
                    phase_row("transition", p, Err(e.to_string()))
                }
            }
        })
        .collect()
}

/// Row prefix shared by the depth-indexed tables.
fn depth_head(p: GridPoint, l: usize) -> Vec<Cell> {
    vec![num(p.sigma_w2), num(p.sigma_b2), Cell::Int(l as u64)]
}

fn error_row(kind: OutputKind, head: Vec<Cell>, msg: &str) -> Vec<Cell> {
    let width = columns(kind).len();
    let mut row = head;
    row.resize(width - 1, Cell::Missing);
    row.push(Cell::Text(msg.into()));
    row
}

fn finish(mut row: Vec<Cell>, errors: &[String]) -> Vec<Cell> {
    row.push(if errors.is_empty() {
        Cell::Missing
    } else {
        Cell::Text(errors.join("; "))
    });
    row
}

fn train_block(k: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    k.view((0, 0), (m, m)).into_owned()
}

struct DepthContext<'a> {
    cfg: &'a SweepConfig,
    data: &'a SyntheticDataset,
    h: &'a Hyperparams,
    report: &'a PhaseReport,
    point: GridPoint,
    depth: usize,
}

impl DepthContext<'_> {
    fn prediction(&self, kind: KernelKind) -> Option<ntk_core::AsymptoticPrediction> {
        predict_spectrum(self.report, self.h, self.cfg.m, self.depth, kind).ok()
    }

    fn head(&self) -> Vec<Cell> {
        let mut head = depth_head(self.point, self.depth);
        head.push(Cell::Text(self.report.phase.to_string()));
        head
    }

    fn kappa_row(&self, ntk: &CoreResult<SpectrumSummary>, nngp: &CoreResult<SpectrumSummary>) -> Vec<Cell> {
        let mut row = self.head();
        let mut errors = Vec::new();
        for (s, kind) in [(ntk, KernelKind::Ntk), (nngp, KernelKind::Nngp)] {
            let pred = self.prediction(kind).map(|p| p.kappa);
            match s {
                Ok(s) => {
                    row.extend([num(s.kappa), num(s.kappa_bulk), Cell::opt(pred)]);
                    row.push(Cell::opt(pred.map(|p| s.kappa / p - 1.0)));
                }
                Err(e) => {
                    row.extend([Cell::Missing, Cell::Missing, Cell::opt(pred), Cell::Missing]);
                    errors.push(format!("{}: {e}", kind.name()));
                }
            }
        }
        finish(row, &errors)
    }

    fn spectrum_row(&self, ntk: &CoreResult<SpectrumSummary>, nngp: &CoreResult<SpectrumSummary>) -> Vec<Cell> {
        let mut row = self.head();
        let mut errors = Vec::new();
        for (s, kind) in [(ntk, KernelKind::Ntk), (nngp, KernelKind::Nngp)] {
            let pred = self.prediction(kind);
            match s {
                Ok(s) => row.extend([num(s.lambda_max), num(s.lambda_bulk), num(s.lambda_min)]),
                Err(e) => {
                    row.extend([Cell::Missing, Cell::Missing, Cell::Missing]);
                    errors.push(format!("{}: {e}", kind.name()));
                }
            }
            row.push(Cell::opt(pred.map(|p| p.lambda_max)));
            row.push(Cell::opt(pred.map(|p| p.lambda_bulk)));
        }
        let eta = ntk.as_ref().ok().and_then(|s| max_learning_rate(s).ok());
        row.push(Cell::opt(eta));
        finish(row, &errors)
    }

    fn decay_row(&self, kp: &KernelPair) -> Vec<Cell> {
        let mut row = self.head();
        let mut errors = Vec::new();
        let m = self.data.train_len();
        for (k, kind) in [(&kp.ntk, KernelKind::Ntk), (&kp.nngp, KernelKind::Nngp)] {
            let norm = RegressionTask::from_joint(k, m, self.data.y.clone(), self.cfg.ridge)
                .and_then(|t| mean_predict(&t));
            match norm {
                Ok(p) => row.push(num(p.norm())),
                Err(e) => {
                    row.push(Cell::Missing);
                    errors.push(format!("{}: {e}", kind.name()));
                }
            }
        }
        for kind in [KernelKind::Ntk, KernelKind::Nngp] {
            row.push(Cell::opt(self.prediction(kind).and_then(|p| p.mean_pred_norm_scale)));
        }
        finish(row, &errors)
    }

    fn dynamics_rows(&self, kp: &KernelPair, ntk: &CoreResult<SpectrumSummary>) -> Vec<Vec<Cell>> {
        let m = self.data.train_len();
        let head = || depth_head(self.point, self.depth);
        let result = (|| -> CoreResult<Vec<Vec<Cell>>> {
            let summary = ntk.clone()?;
            let eta = self.cfg.eta_fraction * max_learning_rate(&summary)?;
            let times: Vec<f64> =
                self.cfg.times.iter().map(|t| t / (eta * summary.lambda_max)).collect();
            let task = RegressionTask::from_joint(&kp.ntk, m, self.data.y.clone(), self.cfg.ridge)?;
            let trace = dynamics(&task, eta, &times)?;
            Ok(trace
                .times
                .iter()
                .zip(trace.mu_train.iter().zip(&trace.mu_test))
                .map(|(&t, (train, test))| {
                    let mut row = head();
                    row.extend([num(t), num(eta), num((&self.data.y - train).norm()), num(test.norm())]);
                    finish(row, &[])
                })
                .collect())
        })();
        result.unwrap_or_else(|e| {
            self.cfg
                .times
                .iter()
                .map(|_| error_row(OutputKind::DynamicsTrace, head(), &e.to_string()))
                .collect()
        })
    }
}

fn depth_tables(cfg: &SweepConfig) -> bool {
    cfg.outputs.iter().any(|&k| k != OutputKind::PhaseDiagram)
}

/// All rows for one grid point, one table per configured output.
fn evaluate_point(cfg: &SweepConfig, data: &SyntheticDataset, p: GridPoint) -> Vec<Table> {
    let mut tables: Vec<Table> = cfg.outputs.iter().map(|&k| Table::new(k)).collect();
    let h = hyperparams(cfg, p);
    let analysis = analyze(&h, cfg.backend());
    for t in tables.iter_mut().filter(|t| t.kind == OutputKind::PhaseDiagram) {
        let report = analysis.as_ref().map(|(r, _)| r).map_err(|e| e.to_string());
        t.rows.push(phase_row("grid", p, report));
    }
    if !depth_tables(cfg) {
        return tables;
    }
    let setup = analysis.and_then(|(report, kernel)| {
        let prop = Propagator::new(&h, kernel.clone(), &data.joint())?;
        Ok((report, kernel, prop))
    });
    let (report, _kernel, mut prop): (PhaseReport, ActivationKernel, Propagator) = match setup {
        Ok(s) => s,
        Err(e) => {
            fail_remaining(cfg, &mut tables, p, &cfg.depths, &e.to_string());
            return tables;
        }
    };
    for (i, &l) in cfg.depths.iter().enumerate() {
        let kp = match prop.advance_to(l).and_then(|_| prop.kernels()) {
            Ok(kp) => kp,
            Err(e) => {
                fail_remaining(cfg, &mut tables, p, &cfg.depths[i..], &e.to_string());
                break;
            }
        };
        let ctx = DepthContext {
            cfg,
            data,
            h: &h,
            report: &report,
            point: p,
            depth: l,
        };
        let ntk = spectrum(&train_block(&kp.ntk, cfg.m));
        let nngp = spectrum(&train_block(&kp.nngp, cfg.m));
        for t in tables.iter_mut() {
            match t.kind {
                OutputKind::Kappa => t.rows.push(ctx.kappa_row(&ntk, &nngp)),
                OutputKind::Spectrum => t.rows.push(ctx.spectrum_row(&ntk, &nngp)),
                OutputKind::PredictorDecay => t.rows.push(ctx.decay_row(&kp)),
                OutputKind::DynamicsTrace => t.rows.extend(ctx.dynamics_rows(&kp, &ntk)),
                OutputKind::PhaseDiagram => {}
            }
        }
    }
    tables
}

fn fail_remaining(cfg: &SweepConfig, tables: &mut [Table], p: GridPoint, depths: &[usize], msg: &str) {
    for t in tables.iter_mut().filter(|t| t.kind != OutputKind::PhaseDiagram) {
        for &l in depths {
            let reps = if t.kind == OutputKind::DynamicsTrace { cfg.times.len() } else { 1 };
            for _ in 0..reps {
                t.rows.push(error_row(t.kind, depth_head(p, l), msg));
            }
        }
    }
}
