//! Serialisation of reports and tables. CSV numbers use `{:.16e}` and rows
//! end in `\n`, so identical inputs give byte-identical files.

use std::fmt::Write as _;

use crate::evolution::EvolutionSample;
use crate::Error;

use super::config::RunConfig;
use super::verify::VerificationReport;
use super::{CliError, ScanRow};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header plus one line per row of numbers.
pub fn csv_table<R, I>(header: &[&str], rows: I) -> String
where
    R: AsRef<[f64]>,
    I: IntoIterator<Item = R>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|&x| num(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn report_json(report: &VerificationReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report is serialisable");
    s.push('\n');
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn report_csv(report: &VerificationReport) -> String {
    let mut out = String::from("name,anchor,residual,tol,pass,notes\n");
    for c in &report.checks {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&c.name),
            csv_field(&c.anchor),
            num(c.residual),
            num(c.tol),
            c.pass,
            csv_field(&c.notes)
        );
    }
    out
}

pub fn evolution_csv(samples: &[EvolutionSample]) -> String {
    let dim = samples.first().map_or(0, |s| s.psi.len());
    let mut header = vec!["t".to_string()];
    for picture in ["psi", "phi"] {
        for i in 0..dim {
            header.push(format!("{picture}{i}_re"));
            header.push(format!("{picture}{i}_im"));
        }
    }
    for h in ["norm_phi", "norm_rho", "energy_h", "energy_rho_re", "energy_rho_im", "chi"] {
        header.push(h.to_string());
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = samples.iter().map(|s| {
        let mut row = vec![s.t];
        for z in s.psi.iter().chain(&s.phi) {
            row.push(z.re);
            row.push(z.im);
        }
        row.extend([
            s.norm_hermitian,
            s.norm_metric,
            s.energy_hermitian,
            s.energy_metric.re,
            s.energy_metric.im,
            s.chi,
        ]);
        row
    });
    csv_table(&header, rows)
}

pub fn scan_csv(dim: usize, rows: &[ScanRow]) -> String {
    let mut out = String::from("gamma");
    for i in 0..dim {
        let _ = write!(out, ",e{i}_re,e{i}_im");
    }
    out.push_str(",min_metric_eigenvalue,regime\n");
    for r in rows {
        out.push_str(&num(r.gamma));
        for z in &r.eigenvalues {
            let _ = write!(out, ",{},{}", num(z.re), num(z.im));
        }
        let _ = writeln!(out, ",{},{}", num(r.min_metric_eigenvalue), r.regime);
    }
    out
}

/// Writes to `--out` when given, else to stdout.
pub fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|source| {
            CliError::Run(Error::Io {
                path: path.clone(),
                source,
            })
        }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| {
                    CliError::Run(Error::Io {
                        path: "<stdout>".into(),
                        source,
                    })
                })
        }
    }
}
