//! Depth recursions for the NNGP and NTK kernels.

pub mod cnn;
pub mod dropout;
pub mod fcn;
pub mod ode;
pub mod scalar;

use nalgebra::DMatrix;

use crate::activation::ActivationKernel;
use crate::error::{Error, Result};
use crate::phase::{Architecture, Hyperparams};

pub use cnn::{
    apply_a, fourier_eigs, init_cnn_kernels, normalize_spatial_inputs, readout, step_cnn,
    CnnKernel, Readout,
};
pub use dropout::{apply_dropout, dropout_kappa_limit};
pub use fcn::{init_kernels, normalize_inputs, step_fcn, KernelPair};
pub use ode::{integrate_residual, OdeKernelState, OdeVariant};
pub use scalar::{scalar_trajectory, step_scalar, ScalarKernelState};

#[derive(Debug, Clone)]
enum State {
    Fcn(KernelPair),
    Cnn(CnnKernel),
}

/// Layer-by-layer propagation of one dataset under fixed hyperparameters,
/// for fully-connected or convolutional networks.
///
/// With a dropout keep rate below one, the kernels reported at depth `l`
/// are the depth-`l − 1` kernels followed by a dropout output layer.
#[derive(Debug, Clone)]
pub struct Propagator {
    h: Hyperparams,
    kernel: ActivationKernel,
    state: State,
    previous: Option<KernelPair>,
}

impl Propagator {
    /// Normalizes `x` to the kernel's `q*` and builds the input-layer state.
    /// Convolutional inputs have `C·d` columns laid out pixel-major.
    pub fn new(h: &Hyperparams, kernel: ActivationKernel, x: &DMatrix<f64>) -> Result<Self> {
        h.validate()?;
        let q = kernel.qstar();
        let state = match h.architecture {
            Architecture::Fcn => State::Fcn(init_kernels(&normalize_inputs(x, q)?)),
            _ => {
                let xs = normalize_spatial_inputs(x, h.spatial, q)?;
                State::Cnn(init_cnn_kernels(&xs, h.spatial, h.filter_halfwidth)?)
            }
        };
        if h.dropout_keep < 1.0 && h.architecture.is_cnn() {
            return Err(Error::InvalidParameter(
                "dropout is only supported for fully-connected networks".into(),
            ));
        }
        Ok(Propagator {
            h: *h,
            kernel,
            state,
            previous: None,
        })
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.h
    }

    pub fn activation_kernel(&self) -> &ActivationKernel {
        &self.kernel
    }

    pub fn depth(&self) -> usize {
        match &self.state {
            State::Fcn(kp) => kp.depth,
            State::Cnn(ck) => ck.depth,
        }
    }

    pub fn step(&mut self) -> Result<()> {
        self.state = match &self.state {
            State::Fcn(kp) => {
                let next = step_fcn(kp, &self.h, &self.kernel)?;
                if self.h.dropout_keep < 1.0 {
                    self.previous = Some(kp.clone());
                }
                State::Fcn(next)
            }
            State::Cnn(ck) => State::Cnn(step_cnn(ck, &self.h, &self.kernel)?),
        };
        Ok(())
    }

    pub fn advance_to(&mut self, depth: usize) -> Result<()> {
        if depth < self.depth() {
            return Err(Error::InvalidParameter(format!(
                "cannot rewind from depth {} to {depth}",
                self.depth()
            )));
        }
        while self.depth() < depth {
            self.step()?;
        }
        Ok(())
    }

    /// Kernels at the current depth after the architecture's readout.
    pub fn kernels(&self) -> Result<KernelPair> {
        match &self.state {
            State::Fcn(kp) => match (&self.previous, self.h.dropout_keep < 1.0) {
                (Some(prev), true) => apply_dropout(prev, &self.h, &self.kernel),
                _ => Ok(kp.clone()),
            },
            State::Cnn(ck) => Ok(readout(
                ck,
                match self.h.architecture {
                    Architecture::CnnPool => Readout::Pool,
                    _ => Readout::Flatten,
                },
            )),
        }
    }

    pub fn cnn_state(&self) -> Option<&CnnKernel> {
        match &self.state {
            State::Cnn(ck) => Some(ck),
            State::Fcn(_) => None,
        }
    }
}
