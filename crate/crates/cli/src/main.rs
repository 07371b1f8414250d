//! `ddflab` — batch front end for the distance-difference laboratory.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ddf_cli::pipeline::{parse_sources, preimage_sources};
use ddf_cli::runner::{certify_pair, load_pair, probe_depth, run_scenario};
use ddf_cli::{init_thread_pool, report};
use ddf_core::catalog::scenario;
use ddf_core::ddr::{BoundaryFrame, DdfArchive};
use ddf_core::domain::{pullback_domain, GaugeSpec};
use ddf_core::mesh::{build_mesh, build_mesh_pair, Mesh};
use ddf_core::rigidity::ManifoldCtx;
use ddf_core::sweeps::{dphi_sweep, membership_sweep, nearest_sweep, SweepParams};
use ddf_core::window::FieldCache;
use ddf_core::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "ddflab",
    about = "Distance-difference laboratory: meshes, boundary data, rigidity checks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Lemma {
    Nearest,
    Segment,
    Dphi,
}

#[derive(Subcommand)]
enum Command {
    /// Discretize a scenario into mesh files (optionally with the gauge
    /// partner and the control-metric mesh on the shared vertex set).
    Generate {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 3)]
        stencil_radius: usize,
        #[arg(long, default_value = "mesh.json")]
        out: PathBuf,
        /// Also write the gauge-pullback partner mesh.
        #[arg(long)]
        pair_out: Option<PathBuf>,
        /// Also write the control-metric mesh.
        #[arg(long)]
        control_out: Option<PathBuf>,
    },
    /// Assemble a DDF archive over boundary samples of a mesh.
    Ddf {
        #[arg(long)]
        mesh: PathBuf,
        /// grid:X | boundary:Y | grid+boundary:X:Y
        #[arg(long)]
        sources: String,
        #[arg(long)]
        frame_spacing: f64,
        #[arg(long)]
        out: PathBuf,
        /// Map source points through the inverse of this gauge before
        /// snapping (builds the partner archive of a pair).
        #[arg(long)]
        gauge_preimage: Option<String>,
    },
    /// Run one lemma criterion against its oracle over seeded probes.
    Verify {
        #[arg(long, value_enum)]
        lemma: Lemma,
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 3)]
        stencil_radius: usize,
        #[arg(long)]
        frame_spacing: Option<f64>,
        #[arg(long, default_value_t = 10)]
        probes: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
    },
    /// Match two archives and certify (or reject) the correspondence.
    Reconstruct {
        #[arg(long)]
        data_a: PathBuf,
        #[arg(long)]
        data_b: PathBuf,
        #[arg(long)]
        mesh_a: PathBuf,
        #[arg(long)]
        mesh_b: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 12)]
        probes: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Full pipeline: generate, ddf, verify all lemmas, reconstruct the
    /// gauge pair and the negative control, write reports and plots.
    Run {
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        stencil_radius: Option<usize>,
        #[arg(long)]
        frame_spacing: Option<f64>,
        #[arg(long)]
        source_grid: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Base config file; command-line flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Print pass/fail tables for report files and regenerate plots.
    Report {
        /// report.json, cert_*.json or verify_*.json files
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        plots_dir: Option<PathBuf>,
        #[arg(long, default_value_t = false)]
        no_color: bool,
    },
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate { scenario: name, h, stencil_radius, out, pair_out, control_out } => {
            if !(h > 0.0) {
                bail!("config field `h`: spacing must be positive, got {h}");
            }
            let scen = scenario(&name)?;
            if pair_out.is_some() || control_out.is_some() {
                let domain_b = pullback_domain(&scen.domain, &scen.gauge)?;
                let (mesh_a, mesh_b) =
                    build_mesh_pair(&scen.domain, &domain_b.metric, h, stencil_radius)?;
                mesh_a.save(&out)?;
                if let Some(p) = pair_out {
                    mesh_b.save(&p)?;
                }
                if let Some(p) = control_out {
                    let (_, mesh_c) =
                        build_mesh_pair(&scen.domain, &scen.control_metric, h, stencil_radius)?;
                    mesh_c.save(&p)?;
                }
            } else {
                build_mesh(&scen.domain, h, stencil_radius)?.save(&out)?;
            }
            println!("wrote {}", out.display());
            Ok(true)
        }
        Command::Ddf { mesh, sources, frame_spacing, out, gauge_preimage } => {
            let mesh = Mesh::load(&mesh)?;
            let frame = BoundaryFrame::build(&mesh, frame_spacing)?;
            let mut source_set = parse_sources(&sources, &mesh, &frame)?;
            if let Some(g) = gauge_preimage {
                let gauge = GaugeSpec::parse(&g)?;
                source_set = preimage_sources(&mesh, &gauge, &source_set);
            }
            if source_set.is_empty() {
                bail!("source spec `{sources}` selected no vertices");
            }
            let archive = DdfArchive::assemble(&mesh, &frame, &source_set)?;
            archive.save(&out)?;
            println!(
                "wrote {} ({} sources x {} samples)",
                out.display(),
                archive.len(),
                frame.len()
            );
            Ok(true)
        }
        Command::Verify {
            lemma,
            scenario: name,
            h,
            stencil_radius,
            frame_spacing,
            probes,
            seed,
            report: report_path,
        } => {
            let mut cfg = ExperimentConfig {
                scenario: name.clone(),
                h,
                stencil_radius,
                frame_spacing,
                ..ExperimentConfig::default()
            };
            cfg.seed = seed;
            cfg.validate()?;
            let scen = scenario(&name)?;
            let mesh = build_mesh(&scen.domain, h, stencil_radius)?;
            let frame = BoundaryFrame::build(&mesh, cfg.frame_spacing())?;
            let cache = FieldCache::new();
            let ctx = ManifoldCtx {
                mesh: &mesh,
                domain: &scen.domain,
                frame: &frame,
                cache: &cache,
            };
            let params = SweepParams {
                probes,
                seed,
                min_depth: probe_depth(&name),
                window_cap: 30,
                thresholds: cfg.thresholds.clone(),
            };
            let (text, pass) = match lemma {
                Lemma::Nearest => {
                    let r = nearest_sweep(&ctx, probes.max(20) * 3, seed)?;
                    (serde_json::to_string_pretty(&r)?, r.pass)
                }
                Lemma::Segment => {
                    let r = membership_sweep(&ctx, &params, probes * 24)?;
                    (serde_json::to_string_pretty(&r)?, r.pass)
                }
                Lemma::Dphi => {
                    let r = dphi_sweep(&ctx, &params, 0.05)?;
                    (serde_json::to_string_pretty(&r)?, r.pass)
                }
            };
            std::fs::write(&report_path, text)
                .with_context(|| format!("writing {}", report_path.display()))?;
            println!("wrote {} (pass: {pass})", report_path.display());
            Ok(pass)
        }
        Command::Reconstruct { data_a, data_b, mesh_a, mesh_b, out, probes, seed } => {
            let pair = load_pair(&mesh_a, &mesh_b, &data_a, &data_b)?;
            let mut cfg = ExperimentConfig::default();
            cfg.h = pair.mesh_a.h;
            cfg.seed = seed;
            cfg.scenario = pair.mesh_a.domain_kind.clone();
            let outcome = certify_pair(&pair, &cfg, probes)?;
            std::fs::write(&out, serde_json::to_string_pretty(&outcome.cert)?)?;
            println!("wrote {} (verdict: {})", out.display(), outcome.cert.verdict);
            Ok(outcome.cert.verdict)
        }
        Command::Run {
            scenario: name,
            h,
            stencil_radius,
            frame_spacing,
            source_grid,
            seed,
            config,
            out_dir,
        } => {
            let from_file = config.is_some();
            let mut cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    ExperimentConfig::from_json(&text)?
                }
                None => default_run_config(),
            };
            if let Some(v) = name {
                cfg.scenario = v;
            }
            if let Some(v) = h {
                cfg.h = v;
                // defaults tied to h scale with it unless given explicitly
                cfg.frame_spacing = None;
            }
            if let Some(v) = stencil_radius {
                cfg.stencil_radius = v;
            }
            if let Some(v) = frame_spacing {
                cfg.frame_spacing = Some(v);
            }
            if let Some(v) = source_grid {
                cfg.source_grid = v;
            } else if !from_file {
                cfg.source_grid = (10.0 * cfg.h).max(0.1);
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            cfg.validate()?;
            let artifacts = run_scenario(&cfg, &out_dir)?;
            report::print_report(&artifacts.out_dir.join("report.json"), true, None)?;
            if !artifacts.report.verdict {
                let first_fail = artifacts
                    .report
                    .rows
                    .iter()
                    .find(|r| !r.pass)
                    .map(|r| r.check.clone())
                    .unwrap_or_default();
                eprintln!("stage reconstruct/verify failed first at: {first_fail}");
            }
            Ok(artifacts.report.verdict)
        }
        Command::Report { paths, plots_dir, no_color } => {
            let mut all = true;
            for p in &paths {
                all &= report::print_report(p, !no_color, plots_dir.as_deref())?;
            }
            Ok(all)
        }
    }
}

fn default_run_config() -> ExperimentConfig {
    ExperimentConfig { scenario: "disk".into(), h: 0.02, source_grid: 0.2, ..Default::default() }
}
