pub mod quadrature;
pub mod rng;
pub mod root;

pub use quadrature::{
    geometric_breaks, integrate, integrate_detailed, integrate_piecewise, integrate_with_substitution, Estimate,
    QuadratureSpec,
};
pub use rng::{seeded_rng, substream, uniform, RandomStream};
pub use root::{bisect_predicate, find_root_monotone, RootBracket, Sign};
