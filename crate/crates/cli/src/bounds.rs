use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use prophet_core::finite_model::{gamma_n_1, solve_v_finite, WindowPlan};
use prophet_core::infinite_model::{optimize_theta, solve_v_infinity};

use crate::args::{BoundsArgs, Format, Model};
use crate::manifest::RunManifest;
use crate::{CliError, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub k: usize,
    pub v: Option<f64>,
    /// Interior breakpoints: `y_1..y_{k-1}` (infinite) or `eps_1..eps_{k-1}` (finite).
    pub breakpoints: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `1 - (1 - 1/n)^n`, finite model with `k = 1` only.
    pub gamma: Option<f64>,
    /// Window split, when the row comes from a theta sweep.
    pub theta: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsTable {
    pub manifest: RunManifest,
    pub model: String,
    pub n: Option<usize>,
    pub rows: Vec<BoundsRow>,
}

impl BoundsTable {
    pub fn failed(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }
}

fn failed_row(k: usize, e: impl ToString) -> BoundsRow {
    BoundsRow {
        k,
        v: None,
        breakpoints: Vec::new(),
        residuals: Vec::new(),
        gamma: None,
        theta: None,
        error: Some(e.to_string()),
    }
}

fn infinite_row(k: usize, delta: f64) -> BoundsRow {
    match solve_v_infinity(k, delta) {
        Ok(b) => BoundsRow {
            k,
            v: Some(b.v),
            breakpoints: b.y[1..k].to_vec(),
            residuals: b.residuals,
            gamma: None,
            theta: None,
            error: None,
        },
        Err(e) => failed_row(k, e),
    }
}

fn sweep_row(r: usize, delta: f64) -> BoundsRow {
    match optimize_theta(r, delta) {
        Ok((theta, b)) => BoundsRow {
            k: 2,
            v: Some(b.v),
            breakpoints: vec![b.y1],
            residuals: b.residuals.to_vec(),
            gamma: None,
            theta: Some(theta),
            error: None,
        },
        Err(e) => failed_row(2, e),
    }
}

fn finite_row(n: usize, k: usize, delta: f64) -> BoundsRow {
    let solved = WindowPlan::equal(n, k).and_then(|plan| solve_v_finite(&plan, delta));
    match solved {
        Ok(s) => BoundsRow {
            k,
            v: Some(s.v),
            breakpoints: s.eps[1..k].to_vec(),
            residuals: vec![s.final_residual],
            gamma: if k == 1 { gamma_n_1(n).ok() } else { None },
            theta: None,
            error: None,
        },
        Err(e) => failed_row(k, e),
    }
}

pub fn compute(args: &BoundsArgs) -> Result<BoundsTable, CliError> {
    if !(args.delta > 0.0) {
        return Err(CliError::Invalid(format!("delta must be positive, got {}", args.delta)));
    }
    let ks = &args.k.0;
    let mut params = vec![
        ("k", args.k.to_string()),
        ("model", format!("{:?}", args.model).to_lowercase()),
        ("delta", args.delta.to_string()),
    ];
    let n = match args.model {
        Model::Infinite => {
            if args.n.is_some() {
                return Err(CliError::Invalid("--n only applies to the finite model".into()));
            }
            if let Some(&k) = ks.iter().find(|&&k| k > prophet_core::infinite_model::MAX_K) {
                return Err(CliError::Invalid(format!(
                    "k = {k} exceeds the infinite-model cap {}",
                    prophet_core::infinite_model::MAX_K
                )));
            }
            None
        }
        Model::Finite => {
            let n = args.n.ok_or_else(|| CliError::Invalid("the finite model needs --n".into()))?;
            if n < 2 {
                return Err(CliError::Invalid(format!("the finite model needs n >= 2, got {n}")));
            }
            if let Some(&k) = ks.iter().find(|&&k| k > n) {
                return Err(CliError::Invalid(format!("k = {k} exceeds n = {n}")));
            }
            params.push(("n", n.to_string()));
            Some(n)
        }
    };
    if let Some(r) = args.theta_sweep {
        if args.model != Model::Infinite || !ks.contains(&2) {
            return Err(CliError::Invalid("--theta-sweep needs the infinite model and k = 2 in range".into()));
        }
        if r < 2 {
            return Err(CliError::Invalid("--theta-sweep needs r >= 2".into()));
        }
        params.push(("theta_sweep", r.to_string()));
    }
    let rows: Vec<BoundsRow> = ks
        .par_iter()
        .map(|&k| match (n, args.theta_sweep) {
            (Some(n), _) => finite_row(n, k, args.delta),
            (None, Some(r)) if k == 2 => sweep_row(r, args.delta),
            (None, _) => infinite_row(k, args.delta),
        })
        .collect();
    Ok(BoundsTable {
        manifest: RunManifest::new("bounds", params, None),
        model: format!("{:?}", args.model).to_lowercase(),
        n,
        rows,
    })
}

/// Seventeen significant digits; parses back to the same `f64`.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv(table: &BoundsTable) -> Result<String, CliError> {
    let kmax = table.rows.iter().map(|r| r.k).max().unwrap_or(1);
    let rmax = table.rows.iter().map(|r| r.residuals.len()).max().unwrap_or(0);
    let finite = table.n.is_some();
    let sweep = table.rows.iter().any(|r| r.theta.is_some());
    let mut header = vec!["k".to_string(), "v".to_string()];
    header.extend((1..kmax).map(|t| format!("y{t}")));
    header.extend((1..=rmax).map(|t| format!("r{t}")));
    if finite {
        header.push("gamma".into());
    }
    if sweep {
        header.push("theta".into());
    }
    header.push("error".into());
    let opt = |x: Option<f64>| x.map(full).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(CliError::io)?;
    for r in &table.rows {
        let mut rec = vec![r.k.to_string(), opt(r.v)];
        rec.extend((0..kmax - 1).map(|i| opt(r.breakpoints.get(i).copied())));
        rec.extend((0..rmax).map(|i| opt(r.residuals.get(i).copied())));
        if finite {
            rec.push(opt(r.gamma));
        }
        if sweep {
            rec.push(opt(r.theta));
        }
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec).map_err(CliError::io)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| CliError::io(e.into_error()))?)
        .expect("csv output is utf-8");
    let manifest = serde_json::to_string(&table.manifest).expect("manifest serialises");
    Ok(format!("# manifest: {manifest}\n{body}"))
}

pub fn to_table(table: &BoundsTable) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:>3}  {:>8}  breakpoints\n", "k", "v"));
    for r in &table.rows {
        match (&r.error, r.v) {
            (Some(e), _) => out.push_str(&format!("{:>3}  failed: {e}\n", r.k)),
            (None, Some(v)) => {
                let ys: Vec<String> = r.breakpoints.iter().map(|y| format!("{y:.4}")).collect();
                let mut line = format!("{:>3}  {v:>8.4}  {}", r.k, ys.join(" "));
                if let Some(g) = r.gamma {
                    line.push_str(&format!("  gamma={g:.4}"));
                }
                if let Some(t) = r.theta {
                    line.push_str(&format!("  theta={t:.4}"));
                }
                out.push_str(line.trim_end());
                out.push('\n');
            }
            (None, None) => {}
        }
    }
    out
}

pub fn run(args: &BoundsArgs) -> Result<(String, Outcome), CliError> {
    let table = compute(args)?;
    let body = match args.format {
        Format::Json => crate::to_json(&table),
        Format::Csv => to_csv(&table)?,
        Format::Table => to_table(&table),
    };
    let outcome = if table.failed() { Outcome::NumericalFailure } else { Outcome::Pass };
    Ok((body, outcome))
}
