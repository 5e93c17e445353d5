//! Discretised LP formulations of the window problem and an exact-capable simplex.
//!
//! The LPs are built over any [`LpScalar`](crate::scalar::LpScalar): `f64` for
//! speed or `BigRational` for exact small instances.

mod build;
mod lpfile;
mod simplex;

pub use build::{build_D, build_P, DiscretizedLP, Orientation, Row, Sense, MAX_KM, MAX_M};
pub use lpfile::to_lp_string;
pub use simplex::{solve, solve_with, KktResiduals, PivotRule, SimplexResult, Status};

use crate::error::{Error, Result};
use crate::finite_model::WindowPlan;
use crate::scalar::LpScalar;

/// Default pivot budget; generous for the capped sizes.
pub const DEFAULT_ITERATION_LIMIT: usize = 200_000;

/// Optimal value of `D(n, k, m)` on equal windows.
#[allow(non_snake_case)]
pub fn solve_D<S: LpScalar>(n: usize, k: usize, m: usize) -> Result<SimplexResult<S>> {
    let plan = WindowPlan::equal(n, k)?;
    let lp = build_D::<S>(n, k, m, &plan)?;
    optimal(solve(&lp, DEFAULT_ITERATION_LIMIT))
}

/// Optimal value of `P(n, k, m)` on equal windows.
#[allow(non_snake_case)]
pub fn solve_P<S: LpScalar>(n: usize, k: usize, m: usize) -> Result<SimplexResult<S>> {
    let plan = WindowPlan::equal(n, k)?;
    let lp = build_P::<S>(n, k, m, &plan)?;
    optimal(solve(&lp, DEFAULT_ITERATION_LIMIT))
}

fn optimal<S>(r: SimplexResult<S>) -> Result<SimplexResult<S>> {
    if r.status == Status::Optimal {
        Ok(r)
    } else {
        Err(Error::NonConvergence(format!("simplex stopped with {:?}", r.status)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn one_buyer_one_window_is_one() {
        let r = solve_D::<f64>(1, 1, 10).unwrap();
        assert!((r.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn primal_equals_dual() {
        for (n, k, m) in [(2, 1, 20), (4, 2, 20), (6, 3, 15)] {
            let d = solve_D::<f64>(n, k, m).unwrap();
            let p = solve_P::<f64>(n, k, m).unwrap();
            assert!((d.objective - p.objective).abs() < 1e-6, "n={n} k={k} m={m}");
            assert!(d.kkt.unwrap().max() < 1e-7);
            assert!(p.kkt.unwrap().max() < 1e-7);
        }
    }

    #[test]
    fn two_windows_help_at_n2() {
        let one = solve_D::<f64>(2, 1, 40).unwrap().objective;
        let two = solve_D::<f64>(2, 2, 40).unwrap().objective;
        assert!(two >= one - 1e-9);
    }

    #[test]
    fn n2_k1_approaches_three_quarters() {
        let r = solve_D::<f64>(2, 1, 400).unwrap();
        assert!((r.objective - 0.75).abs() < 0.02, "{}", r.objective);
    }

    #[test]
    fn exact_small_instance_matches_float() {
        let exact = solve_D::<BigRational>(3, 2, 6).unwrap();
        let float = solve_D::<f64>(3, 2, 6).unwrap();
        assert_eq!(exact.kkt.unwrap().max(), 0.0);
        assert!((exact.objective.to_f64_lossy() - float.objective).abs() < 1e-9);
        let p = solve_P::<BigRational>(3, 2, 6).unwrap();
        assert_eq!(p.objective, exact.objective);
    }
}
