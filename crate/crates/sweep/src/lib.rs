//! Grid sweeps of infinite-width kernel statistics over `(σ_w², σ_b², l)`
//! with CSV and JSON output.

pub mod config;
pub mod data;
pub mod error;
pub mod sweep;
pub mod table;

pub use config::{Format, Generator, OutputKind, SweepConfig};
pub use data::{generate_data, SyntheticDataset};
pub use error::{Result, SweepError};
pub use sweep::{grid, run_sweep, GridPoint, SweepResults};
pub use table::{Cell, Table};
