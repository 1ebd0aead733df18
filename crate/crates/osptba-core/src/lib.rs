//! Numerics for the osp(1|2s) quantum transfer matrix: admissible tableaux,
//! dressed vacuum forms and their functional relations, a Bethe equation
//! solver, an exact-diagonalization oracle and a truncated TBA solver.

pub mod bethe;
pub mod combinat;
pub mod contour;
pub mod dvf;
pub mod error;
pub mod params;
pub mod qtm;
pub mod special;
pub mod suite;
pub mod tba;

pub use bethe::{BetheState, C};
pub use combinat::{Partition, SkewShape, Symbol, Tableau};
pub use error::{Error, Result};
pub use params::ModelParams;
pub use dvf::{Dvf, TKind};
pub use qtm::{DenseOperator, Qtm};
pub use tba::{Driving, Grid, TbaForm, ThermoResult, YField};
