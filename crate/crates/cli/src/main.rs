//! `foliate`: build, assemble and verify Dirac operators on foliated
//! space(times) from the command line.
//!
//! Exit status: 0 on success, 1 when a check fails or a computation breaks
//! down, 2 on malformed input.

use clap::{Args, Parser, Subcommand, ValueEnum};
use foliated_dirac::assembler::{self, AssembledOperator, Sign, TimeGrid, Which};
use foliated_dirac::clifford::{self, Signature, SignatureKind};
use foliated_dirac::family::{self, TripleFamily};
use foliated_dirac::io;
use foliated_dirac::lattice;
use foliated_dirac::oracle::{self, Derivatives, SpacetimeGrid};
use foliated_dirac::par::{self, Mode};
use foliated_dirac::scenario::Scenario;
use foliated_dirac::verify::{self, SuiteOptions};
use foliated_dirac::{Error, C64};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "foliate", version, about = "Dirac operators on foliated space(times)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clifford generators and their relation residuals.
    Clifford {
        #[command(flatten)]
        common: Common,
        /// Odd spatial dimension; defaults to the scenario's.
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Sample the operator family of a scenario and check its axioms.
    Family {
        #[command(flatten)]
        common: Common,
    },
    /// Assemble the total operators and write them as sparse triplets.
    Assemble {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        family: FamilyArg,
    },
    /// Smallest-magnitude eigenvalues of the assembled operator.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long, default_value_t = 10)]
        eigs: usize,
    },
    /// Intrinsic space(time) operator spectrum and curvature summary.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        eigs: usize,
    },
    /// Run the named check suite and write a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of checks.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        #[arg(long, default_value_t = 10)]
        eigs: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file, or the name of a bundled scenario.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, value_enum)]
    signature: Option<SignatureArg>,
    /// `L,Nt` or `L`; repeat for convergence checks. The first one is used
    /// by single-resolution commands.
    #[arg(long = "resolution", value_parser = parse_resolution)]
    resolutions: Vec<(usize, Option<usize>)>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Omit the timestamp and wall-clock runtimes from reports.
    #[arg(long)]
    no_timestamp: bool,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    /// Run on a single thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct FamilyArg {
    /// Family bundle JSON, used instead of a scenario.
    #[arg(long, conflicts_with = "scenario")]
    family: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignatureArg {
    Riemannian,
    Lorentzian,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn parse_resolution(s: &str) -> Result<(usize, Option<usize>), String> {
    let parse = |p: &str| p.trim().parse::<usize>().map_err(|_| format!("resolution: `{p}` is not a positive integer"));
    match s.split_once(',') {
        Some((l, t)) => Ok((parse(l)?, Some(parse(t)?))),
        None => Ok((parse(s)?, None)),
    }
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_input_error() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn input_failure(field: &str, message: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: format!("{field}: {message}"),
    }
}

type Outcome = Result<bool, Failure>;

const ALIASES: &[(&str, &str)] = &[("flat_t2", "flat_t2_riemannian"), ("warped", "warped_circle")];

impl Common {
    fn mode(&self) -> Mode {
        if self.sequential {
            Mode::Sequential
        } else {
            Mode::default()
        }
    }

    fn timestamp(&self) -> Option<u64> {
        if self.no_timestamp {
            return None;
        }
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs())
    }

    fn load_scenario(&self) -> Result<Scenario, Failure> {
        let Some(spec) = &self.scenario else {
            return Err(input_failure("--scenario", "required"));
        };
        let path = Path::new(spec);
        let mut sc = if path.exists() {
            Scenario::from_path(path).map_err(|e| match e {
                Error::Io(io) => input_failure("--scenario", io),
                other => Failure::from(other),
            })?
        } else {
            let stem = spec.strip_suffix(".json").unwrap_or(spec);
            let stem = Path::new(stem).file_name().and_then(|s| s.to_str()).unwrap_or(stem);
            let name = ALIASES.iter().find(|a| a.0 == stem).map_or(stem, |a| a.1);
            Scenario::bundled(name).ok_or_else(|| {
                input_failure(
                    "--scenario",
                    format!("no file `{spec}` and no bundled scenario of that name (bundled: {})", Scenario::bundled_names().join(", ")),
                )
            })?
        };
        if let Some(sig) = self.signature {
            sc = sc.with_signature(signature(sig));
        }
        if let Some(&(l, nt)) = self.resolutions.first() {
            sc = sc.with_resolution(l, nt.unwrap_or(sc.time.nt));
        }
        Ok(sc)
    }

    fn suite_resolutions(&self, sc: &Scenario) -> Vec<(usize, usize)> {
        if self.resolutions.is_empty() {
            sc.resolutions.clone()
        } else {
            self.resolutions.iter().map(|&(l, nt)| (l, nt.unwrap_or(sc.time.nt))).collect()
        }
    }

    fn signature_or(&self, default: Signature) -> Signature {
        self.signature.map_or(default, signature)
    }

    fn artifact(&self, file: &str) -> Result<PathBuf, Failure> {
        std::fs::create_dir_all(&self.out).map_err(|e| input_failure("--out", e))?;
        Ok(self.out.join(file))
    }
}

fn signature(s: SignatureArg) -> Signature {
    Signature::new(match s {
        SignatureArg::Riemannian => SignatureKind::Riemannian,
        SignatureArg::Lorentzian => SignatureKind::Lorentzian,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    })
}

fn write_json(path: &Path, v: &Value) -> Result<(), Failure> {
    io::write_json(path, v).map_err(Failure::from)
}

/// Family, time grid and output stem from `--family` or `--scenario`.
fn load_family(common: &Common, fam: &FamilyArg) -> Result<(String, TripleFamily, TimeGrid, Signature), Failure> {
    if let Some(path) = &fam.family {
        let bundle = io::read_family(path).map_err(|e| match e {
            Error::Io(io) => input_failure("--family", io),
            other => Failure::from(other.within("family")),
        })?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("family").to_string();
        let sig = common.signature_or(Signature::new(SignatureKind::Riemannian));
        return Ok((stem, bundle.family, bundle.time, sig));
    }
    let sc = common.load_scenario()?;
    let time = sc.time_grid()?;
    let family = family::from_scenario_with(&sc, common.mode())?;
    Ok((sc.name.clone(), family, time, sc.signature))
}

fn spectrum_text(values: &[C64], format: Format) -> String {
    match format {
        Format::Csv => io::spectrum_csv(values),
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&io::spectrum_json(values)).unwrap_or_default()),
    }
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn run_clifford(common: &Common, dim: Option<usize>) -> Outcome {
    let n = match (dim, &common.scenario) {
        (Some(n), _) => n,
        (None, Some(_)) => common.load_scenario()?.n,
        (None, None) => 1,
    };
    let sig = common.signature_or(Signature::new(SignatureKind::Riemannian));
    let odd = clifford::build_odd_rep(n).map_err(|e| Failure::from(e.within("--dim")))?;
    let even = clifford::build_even_rep(&odd, sig)?;
    let tilde = clifford::tilde_rep(&even)?;
    let reports = [
        ("odd", clifford::check_relations(&odd, 1e-12)),
        ("even", clifford::check_relations(&even, 1e-12)),
        ("tilde", clifford::check_relations(&tilde, 1e-12)),
    ];
    let passed = reports.iter().all(|r| r.1.passed);
    let v = json!({
        "n": n,
        "signature": sig.name(),
        "odd": odd.to_json(),
        "even": even.to_json(),
        "tilde": tilde.to_json(),
        "relations": reports.iter().map(|(k, r)| (k.to_string(), json!(r))).collect::<serde_json::Map<_, _>>(),
        "passed": passed,
    });
    let path = common.artifact(&format!("clifford_n{n}_{}.json", sig.name()))?;
    write_json(&path, &v)?;
    let worst = reports.iter().map(|r| r.1.max_residual).fold(0.0, f64::max);
    println!(
        "{}: n={n} {} generators {}x{}, max relation residual {worst:.3e} ({})",
        path.display(),
        even.generator_count(),
        even.spinor_dim(),
        even.spinor_dim(),
        if passed { "pass" } else { "FAIL" }
    );
    Ok(passed)
}

fn run_family(common: &Common) -> Outcome {
    let sc = common.load_scenario()?;
    let time = sc.time_grid()?;
    let fam = family::from_scenario_with(&sc, common.mode())?;
    let bundle = common.artifact(&format!("{}_family.json", sc.name))?;
    write_json(&bundle, &io::family_to_json(&fam, Some(&time)))?;
    println!("{}: {} nodes, Hilbert dimension {}", bundle.display(), fam.nodes(), fam.hilbert_dim);
    let report = family::check_family_axioms_with(&fam, 1e-10, common.seed, common.mode())?;
    let path = common.artifact(&format!("{}_family_report.json", sc.name))?;
    write_json(&path, &json!(report))?;
    println!(
        "{}: hermiticity {:.3e}, lapse in [{:.4}, {:.4}], max |dD/dt| {:.4} ({})",
        path.display(),
        report.hermiticity.iter().copied().fold(0.0, f64::max),
        report.lapse_min,
        report.lapse_max,
        report.derivative_max,
        if report.passed { "pass" } else { "FAIL" }
    );
    Ok(report.passed)
}

fn assembled(fam: &TripleFamily, time: &TimeGrid, sig: Signature) -> Result<Vec<(&'static str, AssembledOperator)>, Failure> {
    Ok(if sig.epsilon0() > 0.0 {
        vec![
            ("d_plus", assembler::assemble_riemannian(fam, time, Sign::Plus)?),
            ("d_minus", assembler::assemble_riemannian(fam, time, Sign::Minus)?),
        ]
    } else {
        vec![("lorentzian", assembler::assemble_lorentzian(fam, time)?)]
    })
}

fn run_assemble(common: &Common, fam_arg: &FamilyArg) -> Outcome {
    let (stem, fam, time, sig) = load_family(common, fam_arg)?;
    for (label, op) in assembled(&fam, &time, sig)? {
        let path = common.artifact(&format!("{stem}_{label}.txt"))?;
        write_text(&path, &io::sparse_to_text(&op.matrix))?;
        println!(
            "{}: dimension {}, {} nonzeros, oddness residual {:.3e}",
            path.display(),
            op.dim(),
            op.matrix.nnz(),
            op.oddness_residual()
        );
    }
    Ok(true)
}

fn run_spectrum(common: &Common, fam_arg: &FamilyArg, eigs: usize) -> Outcome {
    let (stem, fam, time, sig) = load_family(common, fam_arg)?;
    let ops = assembled(&fam, &time, sig)?;
    let op = &ops[0].1;
    let spec = if sig.epsilon0() > 0.0 {
        assembler::spectrum(op, eigs, Which::Smallest)?
    } else {
        assembler::spectrum_of(&op.krein_form(), eigs, Which::Smallest, Some(op.half_dim()))?
    };
    let values: Vec<C64> = spec.values.into_iter().take(eigs).collect();
    let path = common.artifact(&format!("{stem}_spectrum.{}", extension(common.format)))?;
    write_text(&path, &spectrum_text(&values, common.format))?;
    println!(
        "{}: {} eigenvalues of the {} operator (dimension {}, {})",
        path.display(),
        values.len(),
        if sig.epsilon0() > 0.0 { "D+" } else { "Krein-form Lorentzian" },
        op.dim(),
        spec.method
    );
    Ok(true)
}

fn run_oracle(common: &Common, eigs: usize) -> Outcome {
    let sc = common.load_scenario()?;
    let sg = SpacetimeGrid::from_scenario(&sc, Derivatives::Analytic)?;
    if sg.circle {
        let spec = oracle::intrinsic_spectrum(&sg, eigs)?;
        let values: Vec<C64> = spec.values.into_iter().take(eigs).collect();
        let path = common.artifact(&format!("{}_intrinsic.{}", sc.name, extension(common.format)))?;
        write_text(&path, &spectrum_text(&values, common.format))?;
        println!("{}: {} eigenvalues of the intrinsic operator (dimension {})", path.display(), values.len(), sg.dim());
    } else {
        println!("{}: interval time, intrinsic spectrum skipped", sc.name);
    }

    let grid = sc.grid()?;
    let metric = sc.metric()?;
    let lapse = sc.lapse()?;
    let x = grid.coords(0);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for t in sg.time_nodes() {
        let (k, h) = oracle::extrinsic_curvature(&sg, &x, t)?;
        let from_volume = lattice::mean_curvature(&metric, &lapse, sc.signature, &x, t, sc.time_derivative(true))?;
        worst = worst.max((h - from_volume).abs());
        rows.push(json!({"t": t, "principal": k, "mean": h, "mean_from_volume": from_volume}));
    }
    let path = common.artifact(&format!("{}_curvature.json", sc.name))?;
    write_json(
        &path,
        &json!({"scenario": sc.name, "signature": sc.signature.name(), "x": x, "nodes": rows, "max_discrepancy": worst}),
    )?;
    println!("{}: mean curvature at {} nodes, max discrepancy {worst:.3e}", path.display(), rows.len());
    Ok(true)
}

fn run_verify(common: &Common, checks: &[String], eigs: usize) -> Outcome {
    let sc = common.load_scenario()?;
    let resolutions = common.suite_resolutions(&sc);
    let opts = SuiteOptions {
        checks: (!checks.is_empty()).then(|| checks.to_vec()),
        eigs,
        seed: common.seed,
        mode: common.mode(),
        timing: !common.no_timestamp,
    };
    let report = verify::run_suite(&sc, &resolutions, &opts)?;
    let path = common.artifact(&format!("{}_report.json", sc.name))?;
    write_json(&path, &report.to_json(common.timestamp()))?;
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| c.status == verify::Status::Fail)
        .map(|c| c.check_id.as_str())
        .collect();
    println!(
        "{}: {} checks, {} failed{} ({})",
        path.display(),
        report.checks.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" [{}]", failed.join(", ")) },
        if report.passed { "pass" } else { "FAIL" }
    );
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let common = match &cli.command {
        Command::Clifford { common, .. }
        | Command::Family { common }
        | Command::Assemble { common, .. }
        | Command::Spectrum { common, .. }
        | Command::Oracle { common, .. }
        | Command::Verify { common, .. } => common,
    };
    par::configure_dense(common.mode());
    let result = match &cli.command {
        Command::Clifford { common, dim } => run_clifford(common, *dim),
        Command::Family { common } => run_family(common),
        Command::Assemble { common, family } => run_assemble(common, family),
        Command::Spectrum { common, family, eigs } => run_spectrum(common, family, *eigs),
        Command::Oracle { common, eigs } => run_oracle(common, *eigs),
        Command::Verify { common, checks, eigs } => run_verify(common, checks, *eigs),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
