use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use fockdil::{run, Error, Experiment, ExperimentReport, RunConfig, SweepRow};

const CSV_HEADER: [&str; 11] = [
    "m_unit",
    "cutoff",
    "c_re",
    "c_im",
    "k",
    "M2_grid",
    "M2_closed_form",
    "T1a_norm",
    "isometry_defect",
    "semigroup_defect",
    "runtime_ms",
];

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExperimentArg {
    Theorem,
    Observation,
    Semigroup,
    Intertwine,
    Sweep,
    All,
}

impl From<ExperimentArg> for Experiment {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::Theorem => Experiment::Theorem,
            ExperimentArg::Observation => Experiment::Observation,
            ExperimentArg::Semigroup => Experiment::Semigroup,
            ExperimentArg::Intertwine => Experiment::Intertwine,
            ExperimentArg::Sweep => Experiment::Sweep,
            ExperimentArg::All => Experiment::All,
        }
    }
}

/// Checks the compressed Markov semigroup of a truncated Fock product system.
#[derive(Debug, Parser)]
#[command(name = "fockdil", version)]
struct Args {
    /// Grid cells per time unit.
    #[arg(long, default_value_t = 8)]
    cells_per_unit: usize,
    /// Cutoff on the total particle number.
    #[arg(long, default_value_t = 2)]
    cutoff: usize,
    /// Real part of the unit parameter (0 selects the vacuum unit).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    unit_re: f64,
    /// Imaginary part of the unit parameter.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    unit_im: f64,
    /// Length of the dilation window in time units.
    #[arg(long, default_value_t = 3)]
    window: usize,
    /// 1-based index of the ONB section used as X.
    #[arg(long, default_value_t = 2)]
    onb_index: usize,
    #[arg(long, value_enum, default_value_t = ExperimentArg::Theorem)]
    experiment: ExperimentArg,
    /// Directory receiving report.txt, summary.json and convergence.csv.
    #[arg(long, default_value = "fockdil-out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random sections per sampled identity.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Grid sizes for the convergence sweep.
    #[arg(long, value_delimiter = ',', default_values_t = vec![8, 16, 32, 64])]
    sweep_cells: Vec<usize>,
    /// Write 0 for runtime_ms so repeated runs produce identical files.
    #[arg(long)]
    no_timing: bool,
}

impl Args {
    fn config(&self) -> RunConfig {
        RunConfig {
            cells_per_unit: self.cells_per_unit,
            cutoff: self.cutoff,
            unit_re: self.unit_re,
            unit_im: self.unit_im,
            window: self.window,
            onb_index: self.onb_index,
            experiment: self.experiment.into(),
            seed: self.seed,
            samples: self.samples,
            sweep_cells: self.sweep_cells.clone(),
            timing: !self.no_timing,
        }
    }
}

#[derive(Serialize)]
struct Bound<'a> {
    name: &'a str,
    value: f64,
    expected: f64,
    tol: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    pass: bool,
    bounds: Vec<Bound<'a>>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::TruncationOverflow { .. } => 3,
        Error::InvalidGrid(_)
        | Error::CutoffTooLarge(_)
        | Error::InvalidOnbIndex { .. }
        | Error::Config(_)
        | Error::SizeGuard { .. } => 2,
        _ => 1,
    }
}

fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        v.to_string()
    }
}

fn csv_record(r: &SweepRow) -> [String; 11] {
    [
        r.m_unit.to_string(),
        r.cutoff.to_string(),
        format_float(r.c_re),
        format_float(r.c_im),
        r.k.to_string(),
        format_float(r.m2_grid),
        format_float(r.m2_closed_form),
        format_float(r.t1a_norm),
        format_float(r.isometry_defect),
        format_float(r.semigroup_defect),
        r.runtime_ms.to_string(),
    ]
}

fn write_outputs(dir: &Path, report: &ExperimentReport) -> io::Result<()> {
    fs::create_dir_all(dir)?;

    let mut text = String::new();
    text.push_str(&format!("experiment: {}\n", report.experiment));
    for line in &report.lines {
        text.push_str(line);
        text.push('\n');
    }
    text.push('\n');
    for c in &report.checks {
        text.push_str(&c.to_string());
        text.push('\n');
    }
    text.push_str(if report.pass() { "RESULT: PASS\n" } else { "RESULT: FAIL\n" });
    fs::write(dir.join("report.txt"), text)?;

    let summary = Summary {
        experiment: &report.experiment,
        pass: report.pass(),
        bounds: report
            .checks
            .iter()
            .map(|c| Bound { name: &c.name, value: c.value, expected: c.expected, tol: c.tol })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(io::Error::other)?;
    fs::write(dir.join("summary.json"), json + "\n")?;

    if !report.rows.is_empty() {
        let mut w = csv::Writer::from_path(dir.join("convergence.csv"))?;
        w.write_record(CSV_HEADER)?;
        for r in &report.rows {
            w.write_record(csv_record(r))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let report = match run(&args.config()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    for c in &report.checks {
        println!("{c}");
    }
    if let Err(e) = write_outputs(&args.out, &report) {
        eprintln!("error: cannot write to {}: {e}", args.out.display());
        return ExitCode::from(4);
    }
    if report.pass() {
        println!("RESULT: PASS");
        ExitCode::SUCCESS
    } else {
        println!("RESULT: FAIL");
        ExitCode::from(1)
    }
}
