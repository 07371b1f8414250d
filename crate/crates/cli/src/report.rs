//! Human-readable rendering of report and certificate files, plus plot
//! regeneration from embedded series.

use std::path::Path;

use anyhow::{bail, Context, Result};

use ddf_core::recon::CertificateReport;

use crate::runner::SummaryReport;
use crate::svg;

const GREEN: &str = "\x1b[32m";
const RED: &str = "\x1b[31m";
const RESET: &str = "\x1b[0m";

fn mark(pass: bool, color: bool) -> String {
    match (pass, color) {
        (true, true) => format!("{GREEN}PASS{RESET}"),
        (false, true) => format!("{RED}FAIL{RESET}"),
        (true, false) => "PASS".into(),
        (false, false) => "FAIL".into(),
    }
}

/// Print one artifact file; returns whether every check in it passed.
pub fn print_report(path: &Path, color: bool, plots_dir: Option<&Path>) -> Result<bool> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    if let Ok(summary) = serde_json::from_str::<SummaryReport>(&text) {
        if summary.rows.is_empty() {
            bail!("{} has no check rows", path.display());
        }
        print_summary(&summary, color);
        if let Some(dir) = plots_dir {
            regenerate_plots(&summary, dir)?;
        }
        return Ok(summary.verdict);
    }
    if let Ok(cert) = serde_json::from_str::<CertView>(&text) {
        if cert.lambda_rows.is_some() {
            return print_cert(&serde_json::from_str::<CertificateReport>(&text)?, color);
        }
    }
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) {
        if let Some(pass) = v.get("pass").and_then(|p| p.as_bool()) {
            println!("{}  [{}]", path.display(), mark(pass, color));
            for key in ["precision", "recall", "frac_within", "exact_rate", "spacing_rate"] {
                if let Some(x) = v.get(key).and_then(|x| x.as_f64()) {
                    println!("  {key:<28} {x:.4}");
                }
            }
            return Ok(pass);
        }
    }
    bail!("{} is not a recognized report file", path.display())
}

#[derive(serde::Deserialize)]
struct CertView {
    lambda_rows: Option<serde_json::Value>,
}

fn print_summary(summary: &SummaryReport, color: bool) {
    println!(
        "scenario {}  h {}  stencil radius {}  frame spacing {:.5}  seed {}",
        summary.scenario, summary.h, summary.stencil_radius, summary.frame_spacing, summary.seed
    );
    println!("{:-<78}", "");
    for row in &summary.rows {
        println!(
            "  {:<38} {:>12.5} {} {:>10.5}  [{}]",
            row.check,
            row.value,
            row.sense,
            row.threshold,
            mark(row.pass, color)
        );
    }
    if let Some(orc) = &summary.oracle {
        println!(
            "  oracle: {} computed {:.6} vs {:.6} (rel err {:.5})  [{}]",
            orc.description,
            orc.computed,
            orc.analytic,
            orc.rel_error,
            mark(orc.pass, color)
        );
    }
    println!("{:-<78}", "");
    println!("verdict: {}", mark(summary.verdict, color));
}

fn print_cert(cert: &CertificateReport, color: bool) -> Result<bool> {
    println!(
        "pairs {}  mutual {:.3}  ambiguous {:.3}  median sup defect {:.6}",
        cert.pair_count, cert.mutual_fraction, cert.ambiguous_fraction, cert.median_sup_defect
    );
    if let Some(bd) = cert.boundary_defect {
        println!(
            "  {:<38} {:>12.5} <= {:>10.5}  [{}]",
            "boundary identity defect",
            bd,
            2.0 * cert.frame_spacing,
            mark(cert.boundary_ok.unwrap_or(false), color)
        );
    }
    println!(
        "  {:<38} {:>12.3} >= {:>10.3}  [{}]",
        "lambda pass fraction",
        cert.lambda_pass_fraction,
        0.9,
        mark(cert.lambda_ok, color)
    );
    let max_spread =
        cert.lambda_rows.iter().fold(0.0f64, |a, r| a.max(r.lambda_spread));
    println!(
        "  {:<38} {:>12.5} <= {:>10.5}  [{}]",
        "lambda spread (max)",
        max_spread,
        cert.thresholds.lambda_spread,
        mark(cert.spread_ok, color)
    );
    println!(
        "  {:<38} {:>12.5} <= {:>10.5}  [{}]",
        "distance defect (max)",
        cert.max_distance_defect,
        cert.thresholds.dist_defect_h * cert.h,
        mark(cert.distance_ok, color)
    );
    for row in &cert.lambda_rows {
        println!(
            "    lambda at vertex {:<8} mean {:.5} spread {:.5} ({} estimates)",
            row.p, row.lambda_mean, row.lambda_spread, row.n_estimates
        );
    }
    println!("verdict: {}", mark(cert.verdict, color));
    Ok(cert.verdict)
}

fn regenerate_plots(summary: &SummaryReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    if let Some(profile) = &summary.phi_profile {
        let text = svg::line_plot(
            &format!("Phi over boundary arc ({} h={})", summary.scenario, summary.h),
            "boundary arclength",
            &[
                ("on-path x", "#4878b0", &profile.arcs, &profile.on_path),
                ("off-path x", "#b04848", &profile.arcs, &profile.off_path),
            ],
            &[(profile.z_arc, "#222222")],
        );
        std::fs::write(dir.join("phi_profile.svg"), text)?;
    }
    let hist = svg::histogram(
        &format!("lambda estimates ({} h={})", summary.scenario, summary.h),
        "lambda",
        &summary.lambda_estimates,
        24,
        Some((0.98, 1.02)),
    );
    std::fs::write(dir.join("lambda_hist.svg"), hist)?;
    Ok(())
}
