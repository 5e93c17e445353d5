//! CPLEX LP text format, for cross-checking with an external solver.

use std::fmt::Write;

use super::build::{DiscretizedLP, Sense};
use crate::scalar::LpScalar;

fn term<S: LpScalar>(out: &mut String, first: bool, c: &S, name: &str) {
    let neg = *c < S::zero();
    let mag = c.abs();
    let sign = match (first, neg) {
        (true, true) => "-",
        (true, false) => "",
        (false, true) => " - ",
        (false, false) => " + ",
    };
    if mag == S::one() {
        let _ = write!(out, "{sign}{name}");
    } else {
        let _ = write!(out, "{sign}{} {name}", fmt_num(&mag));
    }
}

fn fmt_num<S: LpScalar>(x: &S) -> String {
    let f = x.to_f64_lossy();
    if f.is_finite() {
        format!("{f:.17e}")
    } else {
        x.to_string()
    }
}

fn linear<S: LpScalar>(out: &mut String, coeffs: &[S], labels: &[String]) {
    let mut first = true;
    for (c, name) in coeffs.iter().zip(labels) {
        if c.is_zero() {
            continue;
        }
        term(out, first, c, name);
        first = false;
    }
    if first {
        let _ = write!(out, "0 {}", labels[0]);
    }
}

pub fn to_lp_string<S: LpScalar>(lp: &DiscretizedLP<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ n={} k={} m={} tau={:?}",
        lp.n, lp.k, lp.m, lp.tau
    );
    out.push_str(if lp.maximize() { "Maximize\n" } else { "Minimize\n" });
    out.push_str(" obj: ");
    linear(&mut out, &lp.objective, &lp.labels);
    out.push_str("\nSubject To\n");
    for r in &lp.rows {
        let _ = write!(out, " {}: ", r.label);
        linear(&mut out, &r.coeffs, &lp.labels);
        let op = match r.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", fmt_num(&r.rhs));
    }
    // Variables default to [0, +inf) in this format.
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_model::WindowPlan;
    use crate::lp_oracle::build_D;

    #[test]
    fn dump_has_every_row() {
        let plan = WindowPlan::equal(3, 1).unwrap();
        let lp = build_D::<f64>(3, 1, 4, &plan).unwrap();
        let s = to_lp_string(&lp);
        assert!(s.starts_with("\\ n=3"));
        assert!(s.contains("Minimize\n obj: d1\n"));
        assert!(s.contains(" prophet: "));
        assert!(s.contains(" monotone_4: f3 - f4 >= 0"));
        assert_eq!(s.lines().filter(|l| l.contains(':') && !l.starts_with('\\')).count(), lp.rows.len() + 1);
        assert!(s.ends_with("End\n"));
    }
}
