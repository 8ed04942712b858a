//! Command-line driver: validity checking, untangling, boundary-movement
//! statistics, and the tetrahedron catalogue.
//!
//! Exit codes are stable contracts: 0 when the mesh is valid or the run
//! succeeded, 1 when it is invalid or the run gave up, 2 for usage and I/O
//! errors.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hexmend::metrics::{boundary_report, sci6};
use hexmend::untangle::IterationRecord;
use hexmend::vtk::{read_vtk, write_vtk};
use hexmend::{
    classify_mesh, untangle, BoundaryMode, HexMesh, Strategy, TetTable, UntangleConfig,
    UntangleOutcome, ValidityMethod,
};

#[derive(Parser)]
#[command(name = "hexmend", version, about = "Check and untangle hexahedral meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every hex of a mesh and report the result.
    Check {
        /// Input mesh (VTK legacy ASCII, unstructured grid of hexahedra).
        input: PathBuf,
        /// Validity classifier to use.
        #[arg(long, value_enum, default_value_t = ValidityArg::Bezier)]
        validity: ValidityArg,
    },
    /// Untangle a mesh and write the result.
    Untangle {
        /// Input mesh.
        input: PathBuf,
        /// Output mesh; on stall the partial result goes to `<output>.partial`.
        output: PathBuf,
        /// Which hexes contribute energy and which vertices move.
        #[arg(long, value_enum, default_value_t = StrategyArg::BlobWhole)]
        strategy: StrategyArg,
        /// Validity classifier driving the outer loop.
        #[arg(long, value_enum, default_value_t = ValidityArg::Bezier)]
        validity: ValidityArg,
        /// Weight of the quadratic displacement penalty on unlocked
        /// boundary vertices.
        #[arg(long, default_value_t = 1e6)]
        penalty_factor: f64,
        /// Weight of the volume term in the energy.
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Inner minimizer iteration budget per outer iteration.
        #[arg(long, default_value_t = 100)]
        inner_iters: usize,
        /// Outer iteration budget.
        #[arg(long, default_value_t = 10_000)]
        max_outer: usize,
        /// Disable the aggressive ε restart taken when the minimum
        /// determinant worsens.
        #[arg(long)]
        no_fast_eps: bool,
        /// Whether boundary vertices of stuck invalid hexes may be unlocked.
        #[arg(long, value_enum, default_value_t = BoundaryArg::Auto)]
        boundary: BoundaryArg,
        /// Blob neighborhood radius in hex hops.
        #[arg(long, default_value_t = 1)]
        layers: usize,
        /// Write one CSV row per outer iteration to this file.
        #[arg(long, value_name = "FILE")]
        log: Option<PathBuf>,
        /// Cap the worker threads used for energy assembly.
        #[arg(long, value_name = "N")]
        threads: Option<usize>,
        /// Accepted for interface stability; the pipeline is deterministic
        /// and does not consume randomness.
        #[arg(long, value_name = "S")]
        seed: Option<u64>,
    },
    /// Compare the boundaries of two meshes with shared connectivity.
    Stats {
        /// Mesh before untangling.
        before: PathBuf,
        /// Mesh after untangling.
        after: PathBuf,
        /// File with one vertex index per line: the vertices that were
        /// unlocked during the run ("movable" in the report).
        #[arg(long, value_name = "FILE")]
        unlocked_list: Option<PathBuf>,
    },
    /// Print the 58-tetrahedron catalogue.
    DumpTets,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ValidityArg {
    /// 8 corner determinants (necessary condition only).
    Corner,
    /// All 58 tetrahedron determinants (sufficient condition only).
    #[value(name = "58tet")]
    Tet58,
    /// Bernstein bound with subdivision (exact up to the depth cap).
    Bezier,
}

impl From<ValidityArg> for ValidityMethod {
    fn from(arg: ValidityArg) -> Self {
        match arg {
            ValidityArg::Corner => ValidityMethod::Corner,
            ValidityArg::Tet58 => ValidityMethod::AllTets,
            ValidityArg::Bezier => ValidityMethod::Bezier,
        }
    }
}

impl fmt::Display for ValidityArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValidityArg::Corner => "corner",
            ValidityArg::Tet58 => "58tet",
            ValidityArg::Bezier => "bezier",
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Global,
    BlobWhole,
    BlobIndividual,
}

impl From<StrategyArg> for Strategy {
    fn from(arg: StrategyArg) -> Self {
        match arg {
            StrategyArg::Global => Strategy::Global,
            StrategyArg::BlobWhole => Strategy::BlobWhole,
            StrategyArg::BlobIndividual => Strategy::BlobIndividual,
        }
    }
}

impl fmt::Display for StrategyArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyArg::Global => "global",
            StrategyArg::BlobWhole => "blob-whole",
            StrategyArg::BlobIndividual => "blob-individual",
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundaryArg {
    Locked,
    Auto,
}

impl From<BoundaryArg> for BoundaryMode {
    fn from(arg: BoundaryArg) -> Self {
        match arg {
            BoundaryArg::Locked => BoundaryMode::Locked,
            BoundaryArg::Auto => BoundaryMode::Auto,
        }
    }
}

impl fmt::Display for BoundaryArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryArg::Locked => "locked",
            BoundaryArg::Auto => "auto",
        })
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Check { input, validity } => cmd_check(&input, validity),
        Command::Untangle {
            input,
            output,
            strategy,
            validity,
            penalty_factor,
            lambda,
            inner_iters,
            max_outer,
            no_fast_eps,
            boundary,
            layers,
            log,
            threads,
            seed,
        } => cmd_untangle(UntangleArgs {
            input,
            output,
            strategy,
            validity,
            penalty_factor,
            lambda,
            inner_iters,
            max_outer,
            no_fast_eps,
            boundary,
            layers,
            log,
            threads,
            seed,
        }),
        Command::Stats {
            before,
            after,
            unlocked_list,
        } => cmd_stats(&before, &after, unlocked_list.as_deref()),
        Command::DumpTets => cmd_dump_tets(),
    }
}

fn load(path: &Path) -> Result<HexMesh, String> {
    read_vtk(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn fail(message: String) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

fn cmd_check(input: &Path, validity: ValidityArg) -> ExitCode {
    let mesh = match load(input) {
        Ok(mesh) => mesh,
        Err(e) => return fail(e),
    };
    let table = TetTable::new();
    let report = classify_mesh(&mesh, &table, validity.into());
    println!("method: {validity}");
    println!("hexes: {}", mesh.hex_count());
    println!("invalid: {}", report.invalid_count);
    println!("det_min: {}", sci6(report.det_min));
    if report.is_valid() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

struct UntangleArgs {
    input: PathBuf,
    output: PathBuf,
    strategy: StrategyArg,
    validity: ValidityArg,
    penalty_factor: f64,
    lambda: f64,
    inner_iters: usize,
    max_outer: usize,
    no_fast_eps: bool,
    boundary: BoundaryArg,
    layers: usize,
    log: Option<PathBuf>,
    threads: Option<usize>,
    seed: Option<u64>,
}

fn cmd_untangle(args: UntangleArgs) -> ExitCode {
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(format!("--threads {n}: {e}"));
        }
    }

    let mut mesh = match load(&args.input) {
        Ok(mesh) => mesh,
        Err(e) => return fail(e),
    };

    let config = UntangleConfig {
        strategy: args.strategy.into(),
        validity: args.validity.into(),
        penalty_factor: args.penalty_factor,
        lambda: args.lambda,
        inner_iterations: args.inner_iters,
        max_outer_iterations: args.max_outer,
        fast_epsilon_enabled: !args.no_fast_eps,
        boundary: args.boundary.into(),
        layers: args.layers,
        ..UntangleConfig::default()
    };
    println!(
        "config: strategy={} validity={} penalty-factor={} lambda={} inner-iters={} \
         max-outer={} fast-eps={} boundary={} layers={}",
        args.strategy,
        args.validity,
        args.penalty_factor,
        args.lambda,
        args.inner_iters,
        args.max_outer,
        if args.no_fast_eps { "off" } else { "on" },
        args.boundary,
        args.layers,
    );
    if let Some(seed) = args.seed {
        println!("seed: {seed} (accepted; the pipeline is deterministic)");
    }

    let table = TetTable::new();
    let invalid_before = classify_mesh(&mesh, &table, config.validity).invalid_count;
    let report = untangle(&mut mesh, &config, &table);

    if let Some(log_path) = &args.log {
        let mut rows = String::from(IterationRecord::CSV_HEADER);
        rows.push('\n');
        for record in &report.records {
            rows.push_str(&record.csv_row());
            rows.push('\n');
        }
        if let Err(e) = fs::write(log_path, rows) {
            return fail(format!("{}: {e}", log_path.display()));
        }
    }

    let outcome = match report.outcome {
        UntangleOutcome::Success => "success",
        UntangleOutcome::IterationLimit => "iteration limit",
        UntangleOutcome::Stalled => "stalled",
    };
    println!("outcome: {outcome}");
    println!("outer iterations: {}", report.outer_iterations);
    println!("optimizer calls: {}", report.optimizer_calls);
    println!("invalid before: {invalid_before}");
    println!("invalid after: {}", report.final_validity.invalid_count);
    println!(
        "unlocked boundary vertices: {}",
        report.ever_unlocked.iter().filter(|&&u| u).count()
    );
    println!("{}", report.boundary.render());

    let destination = if report.success() {
        args.output.clone()
    } else {
        // Keep whatever progress was made, clearly marked as incomplete.
        let mut partial = args.output.into_os_string();
        partial.push(".partial");
        PathBuf::from(partial)
    };
    if let Err(e) = write_vtk(&destination, &mesh) {
        return fail(format!("{}: {e}", destination.display()));
    }
    println!("wrote {}", destination.display());

    if report.success() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_stats(before: &Path, after: &Path, unlocked_list: Option<&Path>) -> ExitCode {
    let before_mesh = match load(before) {
        Ok(mesh) => mesh,
        Err(e) => return fail(e),
    };
    let after_mesh = match load(after) {
        Ok(mesh) => mesh,
        Err(e) => return fail(e),
    };

    let mut unlocked = vec![false; before_mesh.vertex_count()];
    if let Some(path) = unlocked_list {
        let text = match fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) => return fail(format!("{}: {e}", path.display())),
        };
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let vertex: usize = match line.parse() {
                Ok(v) => v,
                Err(_) => {
                    return fail(format!(
                        "{}:{}: not a vertex index: {line:?}",
                        path.display(),
                        line_no + 1
                    ))
                }
            };
            if vertex >= unlocked.len() {
                return fail(format!(
                    "{}:{}: vertex {vertex} out of range (mesh has {} vertices)",
                    path.display(),
                    line_no + 1,
                    unlocked.len()
                ));
            }
            unlocked[vertex] = true;
        }
    }

    match boundary_report(&before_mesh, &after_mesh, &unlocked) {
        Ok(report) => {
            println!("{}", report.render());
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.to_string()),
    }
}

fn cmd_dump_tets() -> ExitCode {
    let table = TetTable::new();
    let corner_indices = table.corner_tet_indices();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    // A write failure means the consumer went away (e.g. piped into
    // `head`); stop quietly instead of panicking.
    if writeln!(out, "tets: {}", table.len()).is_err() {
        return ExitCode::SUCCESS;
    }
    for (i, pattern) in table.patterns().iter().enumerate() {
        let corner = if corner_indices.contains(&i) { " corner" } else { "" };
        let row = writeln!(
            out,
            "{i:2}: corners {:?} det_s {}{corner}",
            pattern.corners, pattern.det_s
        );
        if row.is_err() {
            break;
        }
    }
    ExitCode::SUCCESS
}
