//! Infinite-width NNGP and NTK kernels for deep fully connected and
//! convolutional networks: layer-by-layer propagation, order/chaos phase
//! analysis, spectral summaries and kernel-regression predictors.

pub mod activation;
pub mod eigen;
pub mod error;
pub mod phase;
pub mod predictor;
pub mod propagation;
pub mod quadrature;
pub mod spectral;

pub use activation::{Activation, ActivationKernel, Backend};
pub use error::{Error, Result};
pub use phase::{
    analyze, Architecture, AsymptoticPrediction, DepthScale, Hyperparams, KernelKind, Phase,
    PhaseReport,
};
pub use predictor::{mean_predict, RegressionTask};
pub use propagation::{KernelPair, Propagator};
pub use spectral::{spectrum, SpectrumSummary};
