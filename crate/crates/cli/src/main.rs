use std::fs;
use std::io::{self, Read, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use unitary_sinkhorn::io::{matrix_from_text, matrix_to_text, to_json};
use unitary_sinkhorn::{
    census, circulant_decompose, emit_multiport, fourier_decompose, haar_random, line_sum_deviation,
    reconstruct, unitarity_defect, verify_counterexample, CirculantDecomposition, CircuitFormat,
    ComplexMatrix, Error, FourierDecomposition, ScalingOptions, ScalingResult,
};

#[derive(Parser)]
#[command(name = "unisink", version, about = "Sinkhorn-type normal form of unitary matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scale a unitary to U = e^{iφ}·D1·A·D2 with unit line sums in A
    Scale {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        scaling: ScalingArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Interlaced phase-layer / Fourier-block decomposition
    DecomposeFourier {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        scaling: ScalingArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// U = C1·(1 ⊕ Ũ)·C2 with circulant C1, C2
    DecomposeCirculant {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        scaling: ScalingArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Sample distinct normal forms from random starting points
    Census {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        scaling: ScalingArgs,
        /// Number of random starting points
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Re-check a saved result, or the 4×4 Fourier family with --phi
    Verify {
        #[command(flatten)]
        io: IoArgs,
        /// Check the one-parameter family of normal forms of F4 at this angle
        #[arg(long, allow_negative_numbers = true)]
        phi: Option<f64>,
        /// Original matrix to compare reconstructions against
        #[arg(long)]
        against: Option<String>,
        /// Largest residual or defect accepted
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Haar-random unitary
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long, default_value = "-")]
        output: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Multiport circuit for a decomposition (or for a matrix, decomposed first)
    EmitCircuit {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        scaling: ScalingArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Args)]
struct IoArgs {
    /// Input file, "-" for stdin
    #[arg(short, long, default_value = "-")]
    input: String,
    /// Output file, "-" for stdout
    #[arg(short, long, default_value = "-")]
    output: String,
}

#[derive(Args)]
struct ScalingArgs {
    /// Target line-sum deviation
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Sweep limit per attempt
    #[arg(long, default_value_t = 100_000)]
    max_sweeps: usize,
    /// Random restarts allowed after stagnation
    #[arg(long, default_value_t = 10)]
    max_restarts: usize,
    /// RNG seed (0 if omitted; required when CI_STRICT=1)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Svg,
}

enum Failure {
    Usage(String),
    NonConvergence(String),
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::NonConvergence(_) => 3,
            Failure::Input(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::NonConvergence(m) | Failure::Input(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Usage(_) => Failure::Usage(e.to_string()),
            Error::NonConvergence(_) | Error::Census(_) => Failure::NonConvergence(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Scale { io, scaling, format } => {
            only(format, &[Format::Json], "scale")?;
            let opts = scaling.resolve()?;
            let u = load(&io.input)?.unitary()?;
            let res = unitary_sinkhorn::sinkhorn_scale(&u, &opts)?;
            eprintln!(
                "scale: n={} sweeps={} restarts={} deviation={:.3e} residual={:.3e}",
                u.n(),
                res.sweeps_used,
                res.restarts_used,
                res.deviation,
                res.reconstruct().distance(&u)
            );
            write_json(&io.output, &res)
        }
        Command::DecomposeFourier { io, scaling, format } => {
            only(format, &[Format::Json], "decompose-fourier")?;
            let opts = scaling.resolve()?;
            let u = load(&io.input)?.unitary()?;
            let d = fourier_decompose(&u, &opts)?;
            let residual = reconstruct(&d).distance(&u);
            eprintln!(
                "decompose-fourier: n={} phase_layers={} fourier_blocks={} free_parameters={} residual={residual:.3e}",
                d.n,
                d.phase_layer_count(),
                d.fourier_block_count(),
                d.free_parameter_count()
            );
            write_json(&io.output, &with_residual(&d, residual)?)
        }
        Command::DecomposeCirculant { io, scaling, format } => {
            only(format, &[Format::Json], "decompose-circulant")?;
            let opts = scaling.resolve()?;
            let u = load(&io.input)?.unitary()?;
            let d = circulant_decompose(&u, &opts)?;
            let residual = d.reconstruct().distance(&u);
            eprintln!("decompose-circulant: n={} residual={residual:.3e}", u.n());
            write_json(&io.output, &with_residual(&d, residual)?)
        }
        Command::Census {
            io,
            scaling,
            trials,
            format,
        } => {
            only(format, &[Format::Json], "census")?;
            let opts = scaling.resolve()?;
            if trials == 0 {
                return Err(Failure::Usage("--trials must be at least 1".into()));
            }
            let u = load(&io.input)?.unitary()?;
            let report = census(&u, trials, opts.seed, &opts)?;
            print_census_table(&report);
            write_json(&io.output, &report)
        }
        Command::Verify {
            io,
            phi,
            against,
            tol,
            format,
        } => {
            only(format, &[Format::Json], "verify")?;
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Failure::Usage("--tol must be positive and finite".into()));
            }
            match phi {
                Some(phi) => verify_family(phi, &io.output),
                None => verify_document(&io, against.as_deref(), tol),
            }
        }
        Command::Random {
            n,
            seed,
            output,
            format,
        } => {
            only(format, &[Format::Json, Format::Text], "random")?;
            if n == 0 {
                return Err(Failure::Usage("--n must be at least 1".into()));
            }
            let seed = resolve_seed(seed)?;
            let u = haar_random(n, seed)?;
            eprintln!("random: n={n} seed={seed} unitarity_defect={:.3e}", unitarity_defect(&u)?);
            match format {
                Format::Text => write_bytes(&output, matrix_to_text(&u).as_bytes()),
                _ => write_json(&output, &u),
            }
        }
        Command::EmitCircuit { io, scaling, format } => {
            only(format, &[Format::Json, Format::Svg], "emit-circuit")?;
            let opts = scaling.resolve()?;
            let d = match load(&io.input)? {
                Document::Fourier(d) => d,
                other => fourier_decompose(&other.unitary()?, &opts)?,
            };
            let circuit_format = match format {
                Format::Svg => CircuitFormat::Svg,
                _ => CircuitFormat::Json,
            };
            let mut bytes = emit_multiport(&d, circuit_format)?;
            if circuit_format == CircuitFormat::Json {
                bytes.push(b'\n');
            }
            eprintln!(
                "emit-circuit: n={} phase_layers={} fourier_blocks={}",
                d.n,
                d.phase_layer_count(),
                d.fourier_block_count()
            );
            write_bytes(&io.output, &bytes)
        }
    }
}

impl ScalingArgs {
    fn resolve(&self) -> CliResult<ScalingOptions> {
        let opts = ScalingOptions {
            tol: self.tol,
            max_sweeps: self.max_sweeps,
            max_restarts: self.max_restarts,
            seed: resolve_seed(self.seed)?,
            ..ScalingOptions::default()
        };
        opts.validate()?;
        Ok(opts)
    }
}

fn resolve_seed(seed: Option<u64>) -> CliResult<u64> {
    match seed {
        Some(s) => Ok(s),
        None if std::env::var("CI_STRICT").is_ok_and(|v| v == "1") => {
            Err(Failure::Usage("--seed is required when CI_STRICT=1".into()))
        }
        None => Ok(0),
    }
}

fn only(format: Format, allowed: &[Format], command: &str) -> CliResult<()> {
    if allowed.contains(&format) {
        Ok(())
    } else {
        let names: Vec<&str> = allowed.iter().map(|f| f.name()).collect();
        Err(Failure::Usage(format!(
            "{command} does not support --format {} (supported: {})",
            format.name(),
            names.join(", ")
        )))
    }
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Text => "text",
            Format::Svg => "svg",
        }
    }
}

/// Anything the subcommands emit can be fed back in.
enum Document {
    Matrix(ComplexMatrix),
    Scaling(Box<ScalingResult>),
    Fourier(FourierDecomposition),
    Circulant(CirculantDecomposition),
}

impl Document {
    fn unitary(&self) -> CliResult<ComplexMatrix> {
        Ok(match self {
            Document::Matrix(m) => m.clone(),
            Document::Scaling(r) => r.reconstruct(),
            Document::Fourier(d) => reconstruct(d),
            Document::Circulant(d) => d.reconstruct(),
        })
    }
}

fn read_input(path: &str) -> CliResult<String> {
    let mut s = String::new();
    if path == "-" {
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Input(format!("reading stdin: {e}")))?;
    } else {
        s = fs::read_to_string(path).map_err(|e| Failure::Input(format!("reading {path}: {e}")))?;
    }
    Ok(s)
}

fn load(path: &str) -> CliResult<Document> {
    parse_document(&read_input(path)?)
}

fn parse_document(text: &str) -> CliResult<Document> {
    if !text.trim_start().starts_with('{') {
        return Ok(Document::Matrix(matrix_from_text(text)?));
    }
    let value: Value = serde_json::from_str(text).map_err(|e| Failure::Input(format!("invalid JSON: {e}")))?;
    let has = |k: &str| value.get(k).is_some();
    let decode = |e: serde_json::Error| Failure::Input(format!("malformed document: {e}"));
    if has("layers") {
        Ok(Document::Fourier(serde_json::from_value(value).map_err(decode)?))
    } else if has("A") && has("d1") {
        Ok(Document::Scaling(Box::new(serde_json::from_value(value).map_err(decode)?)))
    } else if has("c1") && has("c2") {
        Ok(Document::Circulant(serde_json::from_value(value).map_err(decode)?))
    } else if has("entries") {
        Ok(Document::Matrix(serde_json::from_value(value).map_err(decode)?))
    } else {
        Err(Failure::Input(
            "unrecognized document (expected a matrix, scaling result or decomposition)".into(),
        ))
    }
}

fn with_residual<T: serde::Serialize>(payload: &T, residual: f64) -> CliResult<Value> {
    let mut v = serde_json::to_value(payload).map_err(|e| Failure::Input(e.to_string()))?;
    v["reconstruction_residual"] = json!(residual);
    Ok(v)
}

fn write_bytes(path: &str, bytes: &[u8]) -> CliResult<()> {
    let result = if path == "-" {
        let mut out = io::stdout().lock();
        out.write_all(bytes).and_then(|_| out.flush())
    } else {
        fs::write(path, bytes)
    };
    result.map_err(|e| Failure::Input(format!("writing {path}: {e}")))
}

fn write_json<T: serde::Serialize + ?Sized>(path: &str, payload: &T) -> CliResult<()> {
    let mut s = to_json(payload)?;
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

fn print_census_table(report: &unitary_sinkhorn::CensusReport) {
    eprintln!(
        "census: n={} trials={} failures={} representatives={} continuum_suspected={}",
        report.n,
        report.trials,
        report.failures,
        report.representatives.len(),
        report.continuum_suspected
    );
    match report.reference.conjectured {
        Some(c) => eprintln!(
            "reference: conjectured {c}, transversal heuristic 2^(n-1) = {}",
            report.reference.transversal_heuristic
        ),
        None => eprintln!(
            "reference: transversal heuristic 2^(n-1) = {}",
            report.reference.transversal_heuristic
        ),
    }
    if let Some(d) = report.min_pairwise_distance {
        eprintln!("min pairwise distance: {d:.3e}");
    }
    eprintln!("{:>5} {:>7}  {:>24}", "rank", "hits", "A[0,0]");
    for (k, r) in report.representatives.iter().enumerate() {
        let z = r.a[(0, 0)];
        eprintln!("{:>5} {:>7}  {:>+11.6}{:>+11.6}i", k + 1, r.hits, z.re, z.im);
    }
}

fn verify_family(phi: f64, output: &str) -> CliResult<()> {
    if !phi.is_finite() {
        return Err(Failure::Usage("--phi must be finite".into()));
    }
    let check = verify_counterexample(phi)?;
    for r in &check.readings {
        eprintln!(
            "verify: phi={phi:.6} reading={:?} distance={:.3e} middle_line_sum_deviation={:.3e}",
            r.reading, r.distance, r.middle_line_sum_deviation
        );
    }
    eprintln!("residual: {:.3e}", check.distance);
    write_json(output, &check)?;
    if check.distance < 1e-12 && check.middle_line_sum_deviation < 1e-12 {
        Ok(())
    } else {
        Err(Failure::Input(format!(
            "F4 family does not hold at phi={phi} (distance {:.3e})",
            check.distance
        )))
    }
}

fn verify_document(io: &IoArgs, against: Option<&str>, tol: f64) -> CliResult<()> {
    let doc = load(&io.input)?;
    let original = against.map(|p| load(p)?.unitary()).transpose()?;
    let mut report = serde_json::Map::new();
    let mut checks: Vec<(&str, f64)> = Vec::new();

    match &doc {
        Document::Matrix(m) => {
            report.insert("kind".into(), json!("matrix"));
            report.insert("line_sum_deviation".into(), json!(line_sum_deviation(m)));
            checks.push(("unitarity_defect", unitarity_defect(m)?));
        }
        Document::Scaling(r) => {
            report.insert("kind".into(), json!("scaling"));
            let gauge = r.d1.phases()[0] == 0.0 && r.d2.phases()[0] == 0.0;
            report.insert("gauge_fixed".into(), json!(gauge));
            if !gauge {
                return Err(Failure::Input("D1 and D2 must start with phase 0".into()));
            }
            checks.push(("line_sum_deviation", line_sum_deviation(&r.a)));
            checks.push(("unitarity_defect", unitarity_defect(&r.a)?));
        }
        Document::Fourier(d) => {
            report.insert("kind".into(), json!("fourier"));
            report.insert("phase_layers".into(), json!(d.phase_layer_count()));
            report.insert("fourier_blocks".into(), json!(d.fourier_block_count()));
            report.insert("free_parameters".into(), json!(d.free_parameter_count()));
            report.insert("gauge_refined".into(), json!(d.gauge_is_refined()));
            checks.push(("unitarity_defect", unitarity_defect(&reconstruct(d))?));
        }
        Document::Circulant(d) => {
            report.insert("kind".into(), json!("circulant"));
            checks.push(("core_unitarity_defect", unitarity_defect(&d.core)?));
            checks.push(("unitarity_defect", unitarity_defect(&d.reconstruct())?));
        }
    }
    if let Some(u) = original {
        checks.push(("reconstruction_residual", doc.unitary()?.distance(&u)));
    }

    let mut ok = true;
    for (name, value) in &checks {
        let pass = *value < tol;
        ok &= pass;
        eprintln!("verify: {name}={value:.3e} {}", if pass { "ok" } else { "FAIL" });
        report.insert((*name).into(), json!(value));
    }
    report.insert("tol".into(), json!(tol));
    report.insert("ok".into(), json!(ok));
    write_json(&io.output, &Value::Object(report))?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Input(format!("verification failed at tolerance {tol:e}")))
    }
}
