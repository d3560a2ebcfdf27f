//! Result serialization: `results.csv` and `summary.txt`.
//!
//! The CSV schema is fixed and locale-free; every floating-point field is
//! printed with 6 significant digits so files diff cleanly across platforms
//! and worker counts. Fields that do not apply to a row's procedure or
//! family (for example `rho` for an SPRT run) are left empty.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::bounds::{self, DivergenceSelect};
use crate::harness::{self, ExperimentSpec, MonteCarloReport};
use crate::procedures::ProcedureConfig;

/// Exact column set of `results.csv`, in order.
pub const CSV_HEADER: &str = "n,s,m,procedure,family,theta,delta,rho,epsilon,trials,\
fwer_hat,fwer_ci,alpha_hat,beta_hat,avg_samples_per_dim,budget_ok,truncation_rate,\
seq_rate,nonseq_rate,regime";

/// Format with 6 significant digits: positional notation when the exponent
/// allows it, scientific otherwise. Pure string manipulation over the
/// `{:e}` rendering, so output is identical everywhere.
pub fn fmt_sig6(x: f64) -> String {
    fmt_sig(x, 6)
}

pub fn fmt_sig(x: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = s.split_once('e').expect("exponent format");
    let e: i32 = exp.parse().expect("exponent digits");
    if !(-4..sig as i32).contains(&e) {
        return s;
    }
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), sig);
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if e < 0 {
        out.push_str("0.");
        for _ in 0..(-e - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    } else {
        let point = e as usize + 1;
        if point >= digits.len() {
            out.push_str(&digits);
            for _ in 0..point - digits.len() {
                out.push('0');
            }
        } else {
            out.push_str(&digits[..point]);
            out.push('.');
            out.push_str(&digits[point..]);
        }
    }
    out
}

/// One row of `results.csv`, fully rendered.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub name: String,
    fields: Vec<String>,
}

impl ReportRow {
    /// Render a report against the spec that produced it.
    pub fn new(name: &str, spec: &ExperimentSpec, report: &MonteCarloReport) -> Self {
        let stats = harness::spec_stats(spec);
        let seq = if spec.s <= 1 {
            Some(0.0)
        } else if stats.d01 > 0.0 {
            Some((spec.s as f64).ln() / stats.d01)
        } else if stats.d01 == 0.0 {
            Some(f64::INFINITY)
        } else {
            None // NaN stats: degenerate pair
        };
        let nonseq = if stats.d10 > 0.0 {
            Some((spec.n as f64).ln() / stats.d10)
        } else if stats.d10 == 0.0 {
            Some(f64::INFINITY)
        } else {
            None
        };
        let m_eff = harness::effective_budget(spec, report.avg_samples_per_dim);
        let regime = bounds::context_report(
            m_eff,
            spec.n as f64,
            spec.s as f64,
            &stats,
            DivergenceSelect::Auto,
        )
        .regime;

        let (delta, rho, epsilon) = match &spec.procedure {
            ProcedureConfig::FixedSample(_) => (None, None, None),
            ProcedureConfig::Sprt(c) => (None, None, Some(c.epsilon)),
            ProcedureConfig::SimpleSt(c) => (Some(c.delta), None, None),
            ProcedureConfig::GeneralSt(c) => (Some(c.delta), Some(c.rho), None),
        };
        let m_field = match spec.procedure.nominal_budget() {
            Some(m) => m.to_string(),
            None => fmt_sig6(report.avg_samples_per_dim),
        };
        let opt = |v: Option<f64>| v.map(fmt_sig6).unwrap_or_default();

        let fields = vec![
            spec.n.to_string(),
            spec.s.to_string(),
            m_field,
            spec.procedure.name().to_string(),
            spec.pair.kind().as_str().to_string(),
            opt(spec.pair.theta()),
            opt(delta),
            opt(rho),
            opt(epsilon),
            report.trials.to_string(),
            fmt_sig6(report.fwer_hat),
            fmt_sig6(report.fwer_halfwidth),
            fmt_sig6(report.alpha_hat),
            fmt_sig6(report.beta_hat),
            fmt_sig6(report.avg_samples_per_dim),
            report.budget_ok.to_string(),
            fmt_sig6(report.truncation_rate),
            seq.map(fmt_sig6).unwrap_or_else(|| "nan".into()),
            nonseq.map(fmt_sig6).unwrap_or_else(|| "nan".into()),
            regime.as_str().to_string(),
        ];
        ReportRow {
            name: name.to_string(),
            fields,
        }
    }

    pub fn csv_line(&self) -> String {
        self.fields.join(",")
    }

    fn field(&self, name: &str) -> &str {
        let idx = CSV_HEADER
            .split(',')
            .position(|h| h == name)
            .expect("known column");
        &self.fields[idx]
    }
}

/// Write `results.csv` (exact header, one line per row) and `summary.txt`
/// into `dir`. Returns the two paths.
pub fn emit_report(rows: &[ReportRow], dir: &Path) -> io::Result<(PathBuf, PathBuf)> {
    let csv_path = dir.join("results.csv");
    let mut csv = String::with_capacity(1024);
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for row in rows {
        csv.push_str(&row.csv_line());
        csv.push('\n');
    }
    fs::write(&csv_path, csv)?;

    let summary_path = dir.join("summary.txt");
    let mut f = fs::File::create(&summary_path)?;
    writeln!(f, "{} experiment(s)", rows.len())?;
    for row in rows {
        writeln!(f)?;
        writeln!(f, "experiment {}", row.name)?;
        writeln!(
            f,
            "  {} on {} (n={}, s={}, m={}, trials={})",
            row.field("procedure"),
            row.field("family"),
            row.field("n"),
            row.field("s"),
            row.field("m"),
            row.field("trials"),
        )?;
        writeln!(
            f,
            "  fwer {} +- {} (95% ci), alpha {}, beta {}",
            row.field("fwer_hat"),
            row.field("fwer_ci"),
            row.field("alpha_hat"),
            row.field("beta_hat"),
        )?;
        writeln!(
            f,
            "  avg samples/dim {}, budget_ok {}, truncation {}",
            row.field("avg_samples_per_dim"),
            row.field("budget_ok"),
            row.field("truncation_rate"),
        )?;
        writeln!(
            f,
            "  rates: sequential {} vs non-sequential {} per dimension -> {}",
            row.field("seq_rate"),
            row.field("nonseq_rate"),
            row.field("regime"),
        )?;
    }
    Ok((csv_path, summary_path))
}
