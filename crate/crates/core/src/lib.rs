//! Window-threshold policies for the i.i.d. prophet inequality.
//!
//! Solvers are generic over [`Real`]; the aliases below fix the scalar to `f64`.

pub mod asymptotics;
pub mod distributions;
pub mod error;
pub mod finite_model;
pub mod infinite_model;
pub mod lp_oracle;
pub mod numerics;
pub mod policy_sim;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{LpScalar, Real};

pub type InfiniteBreakpoints = infinite_model::InfiniteBreakpoints<f64>;
pub type TwoThresholdTheta = infinite_model::TwoThresholdTheta<f64>;
pub type EpsilonSchedule = finite_model::EpsilonSchedule<f64>;
pub type DualCertificate = finite_model::DualCertificate<f64>;
pub type TwoThresholdExact = finite_model::TwoThresholdExact<f64>;
pub type BetaBar = asymptotics::BetaBar<f64>;
pub type SandwichReport = asymptotics::SandwichReport<f64>;
pub type DiscretizedLP = lp_oracle::DiscretizedLP<f64>;
pub type ExactLP = lp_oracle::DiscretizedLP<num_rational::BigRational>;
pub type SimplexResult = lp_oracle::SimplexResult<f64>;
