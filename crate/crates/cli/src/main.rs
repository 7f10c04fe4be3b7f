//! `wavefock`: verify filter banks, convert loops, compute anchors and
//! truncated Fock spaces, and run the acceptance suite.
//!
//! Exit codes: 0 success, 1 verdict or numerical failure, 2 bad input.

mod input;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use wavefock::acceptance::{run_with, AcceptanceConfig};
use wavefock::anchor::anchor_report;
use wavefock::filterbank::{relation_report_with, RelationOptions, RelationReport, DEFAULT_TOLERANCE};
use wavefock::fock::fock_report;
use wavefock::polyphase::{
    bank_from_loops, check_invertible, filters_from_loop, loop_from_filters, loop_pair_residual,
    loop_unitarity_residual, modulation_matrix_check, LoopMatrix, ModulationResiduals,
};
use wavefock::subdivision::{fourier_product, pyramid_roundtrip, Pyramid, SignalWindow};
use wavefock::wavelet_fock::{sampled_choi, wavelet_creation_check, DEFAULT_GRID};
use wavefock::Error;

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Failure(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(msg) => CliError::Parse(msg),
            other => CliError::Failure(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "wavefock", version, about = "Wavelet filter banks and Fock-space creation operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where the primary object comes from.
#[derive(Args, Clone)]
pub struct Source {
    /// JSON input file (filter bank, loop or Choi matrix).
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Built-in object name.
    #[arg(long, short, conflicts_with = "input")]
    pub builtin: Option<String>,
    /// Seed for the random built-ins.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scale N for the random built-ins.
    #[arg(long, default_value_t = 2, value_parser = parse_scale)]
    pub scale: usize,
    /// Number of monomial factors in a random loop.
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Emit JSON (default).
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Emit a CSV table.
    #[arg(long)]
    csv: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Requirement {
    Cuntz,
    Biorthogonal,
    Isometry,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    ToLoop,
    ToFilters,
}

#[derive(Subcommand)]
enum Command {
    /// Relation residuals and verdicts for a filter bank.
    Verify {
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        /// Completeness is tested on modes |n| ≤ this (raised to N·g if smaller).
        #[arg(long, default_value_t = 16)]
        modes: i64,
        /// Verdict deciding the exit code; defaults to biorthogonal when duals are given, else Cuntz.
        #[arg(long, value_enum)]
        require: Option<Requirement>,
    },
    /// Convert between filters and loop matrices.
    Loop {
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long, value_enum, default_value = "to-loop")]
        direction: Direction,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Co-invariant anchor subspace, pull-back depths and cyclicity.
    Anchor {
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long, default_value_t = 8)]
        modes: i64,
    },
    /// Truncated Fock space of a Choi matrix, or of a bank's sampled 2N×2N matrix.
    Fock {
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        out: OutputArgs,
        /// Treat the input/builtin as a filter bank.
        #[arg(long)]
        bank: bool,
        /// Letters N for the built-in Choi matrices.
        #[arg(long, short = 'n', default_value_t = 2)]
        letters: usize,
        /// Truncation level K (default 3, or 2 with --bank).
        #[arg(long, short = 'k')]
        levels: Option<usize>,
        /// Torus grid size for the sampled bank matrix.
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Residual threshold deciding the exit code.
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Also write the sampled Choi matrix (bank mode) to this file.
        #[arg(long)]
        export_choi: Option<PathBuf>,
    },
    /// Analysis/synthesis pyramid on a CSV signal.
    Pyramid {
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        out: OutputArgs,
        /// Signal CSV with rows `index,re[,im]`.
        #[arg(long)]
        signal: PathBuf,
        #[arg(long, short = 'k', default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Samples of the infinite product for the scaling function's Fourier transform.
    Product {
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long, default_value_t = 40)]
        factors: usize,
        #[arg(long, default_value_t = 60)]
        points: usize,
        #[arg(long, default_value_t = 6.0)]
        t_max: f64,
    },
    /// Run the acceptance suite.
    Acceptance {
        #[command(flatten)]
        out: OutputArgs,
        /// Replace every criterion's threshold with this value.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

struct Emit {
    text: String,
    ok: bool,
    note: Option<String>,
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Serialize)]
struct VerifyReport {
    relations: RelationReport,
    modulation: ModulationResiduals,
    loop_unitarity_residual: f64,
    loop_pair_residual: f64,
    required: &'static str,
    passed: bool,
}

fn cmd_verify(
    src: &Source,
    out: &OutputArgs,
    tolerance: f64,
    grid: usize,
    modes: i64,
    require: Option<Requirement>,
) -> Result<Emit, CliError> {
    let bank = input::load_bank(src)?;
    let opts = RelationOptions { tolerance, grid_size: grid };
    let relations = relation_report_with(&bank, modes, &opts);
    let (a, dual) = loop_from_filters(&bank);
    let dual = dual.unwrap_or_else(|| a.clone());
    let require = require.unwrap_or(if bank.has_duals() { Requirement::Biorthogonal } else { Requirement::Cuntz });
    let (required, passed) = match require {
        Requirement::Cuntz => ("cuntz", relations.verdicts.cuntz),
        Requirement::Biorthogonal => ("biorthogonal", relations.verdicts.biorthogonal),
        Requirement::Isometry => ("isometry", relations.verdicts.isometry),
    };
    let report = VerifyReport {
        modulation: modulation_matrix_check(&bank, grid),
        loop_unitarity_residual: loop_unitarity_residual(&a, grid),
        loop_pair_residual: loop_pair_residual(&a, &dual, grid),
        relations,
        required,
        passed,
    };
    let text = if out.csv {
        let n = bank.scale();
        let r = &report.relations;
        csv_table(
            &["i", "j", "primary_residual", "pair_residual"],
            (0..n * n).map(|t| {
                let (i, j) = (t / n, t % n);
                vec![i.to_string(), j.to_string(), num(r.primary_residuals[i][j]), num(r.pair_residuals[i][j])]
            }),
        )
    } else {
        json(&report)
    };
    Ok(Emit {
        text,
        ok: passed,
        note: (!passed).then(|| format!("{required} verdict failed")),
    })
}

#[derive(Serialize, serde::Deserialize)]
struct LoopFile {
    #[serde(rename = "loop")]
    primary: LoopMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dual: Option<LoopMatrix>,
}

fn cmd_loop(src: &Source, direction: Direction, grid: usize) -> Result<Emit, CliError> {
    let text = match direction {
        Direction::ToLoop => {
            let bank = input::load_bank(src)?;
            let (primary, dual) = loop_from_filters(&bank);
            json(&LoopFile { primary, dual })
        }
        Direction::ToFilters => {
            let path = src
                .input
                .as_ref()
                .ok_or_else(|| CliError::Parse("--direction to-filters needs --input".into()))?;
            let file: LoopFile = input::load_json(path)?;
            let grid_pts = wavefock::laurent::torus_grid(grid);
            check_invertible(&file.primary, &grid_pts)?;
            let bank = match &file.dual {
                Some(d) => bank_from_loops(&file.primary, d)?,
                None => filters_from_loop(&file.primary)?,
            };
            json(&bank)
        }
    };
    Ok(Emit { text, ok: true, note: None })
}

fn cmd_anchor(src: &Source, out: &OutputArgs, modes: i64) -> Result<Emit, CliError> {
    let bank = input::load_bank(src)?;
    let report = anchor_report(&bank, modes, modes)?;
    let ok = report.coinvariance_residual < 1e-10 && report.cyclicity.max_residual() < 1e-9;
    let text = if out.csv {
        csv_table(
            &["n", "depth"],
            report.pullback_depths.iter().map(|(n, d)| vec![n.to_string(), d.to_string()]),
        )
    } else {
        json(&report)
    };
    Ok(Emit {
        text,
        ok,
        note: (!ok).then(|| "anchor residuals exceed tolerance".to_string()),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_fock(
    src: &Source,
    out: &OutputArgs,
    bank_mode: bool,
    letters: usize,
    levels: Option<usize>,
    grid: usize,
    tolerance: f64,
    export_choi: Option<&PathBuf>,
) -> Result<Emit, CliError> {
    if bank_mode {
        let bank = input::load_bank(src)?;
        let k = levels.unwrap_or(2);
        if let Some(path) = export_choi {
            let sampled = sampled_choi(&bank, grid)?;
            write_out(Some(path), &json(&sampled.choi))?;
        }
        let report = wavelet_creation_check(&bank, grid, k)?;
        let ok = report.max_item_residual() < tolerance && report.kernel_residual < 1e-10;
        let text = if out.csv {
            csv_table(
                &["level", "quotient_dim"],
                report.quotient_dims.iter().enumerate().map(|(k, q)| vec![k.to_string(), q.to_string()]),
            )
        } else {
            json(&report)
        };
        return Ok(Emit {
            text,
            ok,
            note: (!ok).then(|| "creation-operator residuals exceed tolerance".to_string()),
        });
    }
    let p = input::load_choi(src, letters)?;
    let k = levels.unwrap_or(3);
    let report = fock_report(&p, k)?;
    let t = &report.tstar_t;
    let ok = report.kernel_residual < 1e-10
        && t.vacuum_residual < 1e-10
        && report.projection_residual < 1e-12
        && (!t.blocks_commute || t.max_level_residual() < tolerance)
        && t.norm_bound_excess < tolerance
        && report.cuntz_toeplitz_residual.map_or(true, |r| r < 1e-12);
    let text = if out.csv {
        csv_table(
            &["level", "quotient_dim", "kernel_dim", "gram_norm", "gram_min_eig"],
            (0..=k).map(|l| {
                vec![
                    l.to_string(),
                    report.quotient_dims[l].to_string(),
                    report.kernel_dims[l].to_string(),
                    num(t.gram_norms[l]),
                    num(report.gram_min_eigs[l]),
                ]
            }),
        )
    } else {
        json(&report)
    };
    Ok(Emit {
        text,
        ok,
        note: (!ok).then(|| "Fock residuals exceed tolerance".to_string()),
    })
}

#[derive(Serialize)]
struct PyramidReport {
    depth: usize,
    max_error: f64,
    pyramid: Pyramid,
    reconstruction: SignalWindow,
}

fn cmd_pyramid(src: &Source, out: &OutputArgs, signal: &PathBuf, levels: usize, tol: f64) -> Result<Emit, CliError> {
    let bank = input::load_bank(src)?;
    let x = input::load_signal(signal)?;
    let (pyramid, y, err) = pyramid_roundtrip(&bank, &x, levels)?;
    let ok = err < tol;
    let text = if out.csv {
        csv_table(
            &["index", "re", "im", "input_re", "input_im"],
            (y.offset..y.end()).map(|i| {
                let (a, b) = (y.get(i), x.get(i));
                vec![i.to_string(), num(a.re), num(a.im), num(b.re), num(b.im)]
            }),
        )
    } else {
        json(&PyramidReport {
            depth: levels,
            max_error: err,
            pyramid,
            reconstruction: y,
        })
    };
    Ok(Emit {
        text,
        ok,
        note: (!ok).then(|| format!("reconstruction error {err:e}")),
    })
}

#[derive(Serialize)]
struct ProductSample {
    t: f64,
    re: f64,
    im: f64,
    abs: f64,
}

fn cmd_product(src: &Source, out: &OutputArgs, factors: usize, points: usize, t_max: f64) -> Result<Emit, CliError> {
    let bank = input::load_bank(src)?;
    let m0 = &bank.filters()[0];
    let samples = (1..=points)
        .map(|k| {
            let t = t_max * k as f64 / points as f64;
            fourier_product(m0, bank.scale(), t, factors).map(|v| ProductSample {
                t,
                re: v.re,
                im: v.im,
                abs: v.norm(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let text = if out.csv {
        csv_table(
            &["t", "re", "im", "abs"],
            samples.iter().map(|s| vec![num(s.t), num(s.re), num(s.im), num(s.abs)]),
        )
    } else {
        json(&samples)
    };
    Ok(Emit { text, ok: true, note: None })
}

fn cmd_acceptance(out: &OutputArgs, tolerance: Option<f64>, seed: u64) -> Result<Emit, CliError> {
    let results = run_with(&AcceptanceConfig { seed, tolerance });
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.name.to_string()).collect();
    let text = if out.csv {
        csv_table(
            &["id", "name", "passed", "detail"],
            results
                .iter()
                .map(|r| vec![r.id.to_string(), r.name.to_string(), r.passed.to_string(), r.detail.clone()]),
        )
    } else if out.json {
        json(&results)
    } else {
        let mut s: String = results.iter().map(|r| r.line() + "\n").collect();
        s.push_str(&format!("{} of {} passed\n", results.len() - failed.len(), results.len()));
        s
    };
    Ok(Emit {
        text,
        ok: failed.is_empty(),
        note: (!failed.is_empty()).then(|| format!("failed: {}", failed.join(", "))),
    })
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Failure(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<Emit, CliError> {
    match &cli.command {
        Command::Verify {
            src,
            out,
            tolerance,
            grid,
            modes,
            require,
        } => cmd_verify(src, out, *tolerance, *grid, *modes, *require),
        Command::Loop { src, direction, grid, .. } => cmd_loop(src, *direction, *grid),
        Command::Anchor { src, out, modes } => cmd_anchor(src, out, *modes),
        Command::Fock {
            src,
            out,
            bank,
            letters,
            levels,
            grid,
            tolerance,
            export_choi,
        } => cmd_fock(src, out, *bank, *letters, *levels, *grid, *tolerance, export_choi.as_ref()),
        Command::Pyramid {
            src,
            out,
            signal,
            levels,
            tolerance,
        } => cmd_pyramid(src, out, signal, *levels, *tolerance),
        Command::Product {
            src,
            out,
            factors,
            points,
            t_max,
        } => cmd_product(src, out, *factors, *points, *t_max),
        Command::Acceptance { out, tolerance, seed } => cmd_acceptance(out, *tolerance, *seed),
    }
}

fn output_of(cmd: &Command) -> Option<&PathBuf> {
    match cmd {
        Command::Verify { out, .. }
        | Command::Loop { out, .. }
        | Command::Anchor { out, .. }
        | Command::Fock { out, .. }
        | Command::Pyramid { out, .. }
        | Command::Product { out, .. }
        | Command::Acceptance { out, .. } => out.output.as_ref(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = output_of(&cli.command).cloned();
    let result = run(cli).and_then(|emit| write_out(output.as_ref(), &emit.text).map(|_| emit));
    match result {
        Ok(Emit { ok: true, .. }) => ExitCode::SUCCESS,
        Ok(Emit { note, .. }) => {
            eprintln!("wavefock: {}", note.unwrap_or_else(|| "check failed".into()));
            ExitCode::from(1)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("wavefock: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Parse(msg)) => {
            eprintln!("wavefock: {msg}");
            ExitCode::from(2)
        }
    }
}

fn parse_scale(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 2 => Ok(n),
        _ => Err(format!("scale must be an integer ≥ 2, got '{s}'")),
    }
}
