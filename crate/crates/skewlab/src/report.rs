//! CSV and structured-text emission. Floats are printed with 17
//! significant digits so artifacts are bit-reproducible.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::genericity::GenericityReport;
use crate::measures::{BaxendaleReport, EmpiricalMeasure};
use crate::skeleton::Domain;
use crate::twosided::{BoneScan, StripKind, StripReport};

/// 17 significant digits.
pub fn fmt_f(x: f64) -> String {
    format!("{:.16e}", x)
}

pub fn write_domain_csv(path: &Path, domain: &Domain) -> Result<()> {
    let mut out = String::from("state,interval_index,left,right\n");
    for k in 0..domain.n_states() {
        for (idx, iv) in domain.state(k).iter().enumerate() {
            writeln!(out, "{},{},{},{}", k + 1, idx, fmt_f(iv.lo), fmt_f(iv.hi)).unwrap();
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_strips_csv(path: &Path, report: &StripReport) -> Result<()> {
    let mut out = String::from("strip,kind,state,interval_index,left,right\n");
    for (s, strip) in report.strips.iter().enumerate() {
        let kind = match strip.kind {
            StripKind::Attractor => "attractor",
            StripKind::Repeller => "repeller",
        };
        for k in 0..strip.domain.n_states() {
            for (idx, iv) in strip.domain.state(k).iter().enumerate() {
                writeln!(out, "{},{},{},{},{},{}", s, kind, k + 1, idx, fmt_f(iv.lo), fmt_f(iv.hi))
                    .unwrap();
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_measure_csv(path: &Path, measure: &EmpiricalMeasure) -> Result<()> {
    let mut out = String::from("state,bin_left,bin_right,mass\n");
    let bw = measure.bin_width();
    for k in 0..measure.n_states() {
        for (b, &m) in measure.state(k).iter().enumerate() {
            if m > 0.0 {
                writeln!(
                    out,
                    "{},{},{},{}",
                    k + 1,
                    fmt_f(b as f64 * bw),
                    fmt_f((b + 1) as f64 * bw),
                    fmt_f(m)
                )
                .unwrap();
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Rows: (1-based past word, 1-based arrival state, interval).
pub fn write_pullback_csv(path: &Path, rows: &[(String, usize, f64, f64)]) -> Result<()> {
    let mut out = String::from("past_word,state,left,right,length\n");
    for (word, state, lo, hi) in rows {
        writeln!(out, "{},{},{},{},{}", word, state, fmt_f(*lo), fmt_f(*hi), fmt_f(hi - lo))
            .unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_bone_csv(path: &Path, scan: &BoneScan) -> Result<()> {
    let mut out = String::from("depth,thick_fraction,mean_log_length,max_length\n");
    for s in &scan.per_depth {
        writeln!(
            out,
            "{},{},{},{}",
            s.depth,
            fmt_f(s.thick_fraction),
            fmt_f(s.mean_log_length),
            fmt_f(s.max_length)
        )
        .unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn genericity_text(report: &GenericityReport) -> String {
    let mut out = String::new();
    let rows = [
        ("condition 1 (hyperbolic return fixed points)", &report.hyperbolic_returns),
        ("condition 2 (no sink-to-source transition)", &report.no_sink_source_mapping),
        ("condition 3 (no invariant point tuple)", &report.no_invariant_tuple),
    ];
    for (name, c) in rows {
        if c.holds {
            writeln!(out, "{}: PASS margin={}", name, fmt_f(c.margin)).unwrap();
        } else {
            writeln!(
                out,
                "{}: FAILED, witness {}",
                name,
                c.witness.as_deref().unwrap_or("(none)")
            )
            .unwrap();
        }
    }
    writeln!(out, "generic: {}", report.is_generic()).unwrap();
    out
}

pub fn baxendale_text(report: &BaxendaleReport) -> String {
    let mut out = String::new();
    writeln!(out, "eps={} bins={}", fmt_f(report.eps), report.bins).unwrap();
    writeln!(out, "volume_exponent={}", fmt_f(report.volume_exponent)).unwrap();
    writeln!(out, "entropy_side={}", fmt_f(report.entropy_side)).unwrap();
    writeln!(out, "relative_gap={}", fmt_f(report.relative_gap)).unwrap();
    writeln!(out, "reflected_mass={}", fmt_f(report.reflected_mass)).unwrap();
    writeln!(out, "reflected_flagged={}", report.reflected_flagged).unwrap();
    writeln!(out, "verdict=negative_exponent:{}", report.negative_exponent).unwrap();
    out
}

pub fn strip_text(report: &StripReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{} attractor(s), {} repeller(s); periodic-word bound {} (witness {})",
        report.attractors, report.repellers, report.attractor_bound, report.bound_witness
    )
    .unwrap();
    for (i, strip) in report.strips.iter().enumerate() {
        let kind = match strip.kind {
            StripKind::Attractor => "attractor",
            StripKind::Repeller => "repeller",
        };
        writeln!(out, "strip {}: {} lyapunov={}", i, kind, fmt_f(strip.lyapunov)).unwrap();
        if let Some(b) = &strip.bones {
            writeln!(
                out,
                "  bones: depth={} slope={} final_thick_fraction={}",
                b.per_depth.len(),
                fmt_f(b.slope),
                fmt_f(b.per_depth.last().map(|s| s.thick_fraction).unwrap_or(0.0))
            )
            .unwrap();
        }
        if strip.kind == StripKind::Repeller {
            writeln!(out, "  rejections: {}", strip.rejections).unwrap();
        }
    }
    out
}
