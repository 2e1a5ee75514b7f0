//! `kwgraph`: spectrum inspection, solving, divergence probes and
//! verification of Kazdan–Warner problems on weighted graphs.
//!
//! Exit codes: 0 success, 1 input/validation error, 2 unbounded regime at
//! solve, 3 non-convergence, 4 inconclusive probe, 5 failed verification.
// `!(x > 0)` is the NaN-rejecting form of the domain checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kwgraph::{
    compute_spectrum, minimize, parse_graph, poincare_constant, probe_divergence, verify_solution, CandidateDocument,
    CheckResult, Graph64, KwError, Multiplier, ProbeReport64, Regime, SolveReport64, SolveStatus, SolverOptions,
    Spectrum64, Verdict, DEFAULT_GROUPING_TOL, DEFAULT_PROBE_EXPONENT,
};
use serde::Serialize;

const EXIT_INPUT: u8 = 1;
const EXIT_UNBOUNDED: u8 = 2;
const EXIT_MAX_ITERS: u8 = 3;
const EXIT_INCONCLUSIVE: u8 = 4;
const EXIT_VERIFY_FAILED: u8 = 5;

#[derive(Parser)]
#[command(name = "kwgraph", version, about = "Kazdan–Warner equations on finite weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print distinct eigenvalues of -Δ, multiplicities and the Poincaré constant.
    Spectrum {
        graph: PathBuf,
        /// Relative eigenvalue grouping tolerance.
        #[arg(long, default_value_t = DEFAULT_GROUPING_TOL)]
        tol: f64,
        /// Emit the full spectrum, bases included, as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Minimize J_{α,β} over the subspace selected by the regime.
    Solve {
        graph: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// Sup-norm gradient tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        /// Also write the report to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Sample J along the ray t·u_{k+1} in an unbounded regime.
    Probe {
        graph: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_PROBE_EXPONENT)]
        max_exp: u32,
        /// Write the (t, J) samples as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check a candidate solution against the Kazdan–Warner equation.
    Verify {
        solution: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

/// Command failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<KwError> for Failure {
    fn from(e: KwError) -> Self {
        Failure::input(e.to_string())
    }
}

/// Writes one line to stdout. A closed pipe (`kwgraph … | head`) is not an
/// error worth reporting.
fn emit(args: std::fmt::Arguments) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_fmt(args).and_then(|()| out.write_all(b"\n"));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Spectrum { graph, tol, json } => cmd_spectrum(&graph, tol, json),
        Command::Solve { graph, alpha, beta, k, tol, max_iters, json } => {
            cmd_solve(&graph, alpha, beta, k, tol, max_iters, json.as_deref())
        }
        Command::Probe { graph, alpha, beta, k, max_exp, csv } => {
            cmd_probe(&graph, alpha, beta, k, max_exp, csv.as_deref())
        }
        Command::Verify { solution, tol } => cmd_verify(&solution, tol),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("kwgraph: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_graph(path: &Path) -> Result<Graph64, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(parse_graph(&text)?)
}

fn to_json<S: Serialize>(value: &S) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

/// Human-friendly rendering: 12 significant digits, trailing zeros dropped.
fn short(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded}")
}

#[derive(Serialize)]
struct SpectrumDocument<'a> {
    vertex_ids: &'a [String],
    poincare_constant: f64,
    #[serde(flatten)]
    spectrum: &'a Spectrum64,
}

fn cmd_spectrum(path: &Path, tol: f64, json: bool) -> Result<u8, Failure> {
    let g = load_graph(path)?;
    let spec = compute_spectrum(&g, tol)?;
    let cp = poincare_constant(&spec)?;
    if json {
        emit(format_args!("{}", to_json(&SpectrumDocument { vertex_ids: g.vertex_ids(), poincare_constant: cp, spectrum: &spec })));
    } else {
        let parts: Vec<String> = spec
            .distinct_eigenvalues
            .iter()
            .zip(&spec.multiplicities)
            .map(|(&l, &n)| format!("{} ({n})", short(l)))
            .collect();
        emit(format_args!("λ: {}; C_P = {}", parts.join(", "), short(cp)));
    }
    Ok(0)
}

/// Solve report in the candidate-solution layout, so `verify` accepts it.
#[derive(Serialize)]
struct SolveDocument<'a> {
    graph: String,
    alpha: f64,
    beta: f64,
    /// Index of the minimization subspace; multipliers run over s ≤ k.
    k: usize,
    requested_k: usize,
    u: BTreeMap<String, f64>,
    xi: f64,
    t_multipliers: &'a [Multiplier<f64>],
    regime: Regime,
    status: SolveStatus,
    objective: f64,
    grad_sup: f64,
    residual_sup: f64,
    residual_l2: f64,
    iterations: usize,
    saddle_escapes: usize,
    objective_trace: &'a [f64],
}

#[derive(Serialize)]
struct UnboundedDocument {
    graph: String,
    alpha: f64,
    beta: f64,
    requested_k: usize,
    regime: Regime,
    status: SolveStatus,
}

fn solver_seed() -> Result<u64, Failure> {
    match std::env::var("KWGRAPH_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| Failure::input(format!("KWGRAPH_SEED is not an integer: {s}"))),
        Err(_) => Ok(SolverOptions::default().seed),
    }
}

fn cmd_solve(
    path: &Path,
    alpha: f64,
    beta: f64,
    k: usize,
    tol: f64,
    max_iters: usize,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    let g = load_graph(path)?;
    let spec = compute_spectrum(&g, DEFAULT_GROUPING_TOL)?;
    let opts = SolverOptions { grad_tol: tol, max_iters, seed: solver_seed()?, ..SolverOptions::default() };
    let graph_ref = path.display().to_string();
    let report: SolveReport64 = match minimize(&g, &spec, alpha, beta, k, &opts) {
        Ok(r) => r,
        Err(KwError::UnboundedRegime { .. }) => {
            let lambda = spec.lambda(k + 1);
            let regime = kwgraph::classify_regime(&spec, alpha, beta, k, kwgraph::default_eq_tol(lambda))?;
            let doc = UnboundedDocument {
                graph: graph_ref,
                alpha,
                beta,
                requested_k: k,
                regime,
                status: SolveStatus::Unbounded,
            };
            emit(format_args!("{}", to_json(&doc)));
            eprintln!(
                "kwgraph: regime UNBOUNDED_BELOW (alpha = {alpha}, beta = {beta}, k = {k}); \
                 inf J = -inf, run `kwgraph probe` to certify divergence"
            );
            return Ok(EXIT_UNBOUNDED);
        }
        Err(e) => return Err(e.into()),
    };
    let u = g.vertex_ids().iter().cloned().zip(report.minimizer.iter().copied()).collect();
    let doc = SolveDocument {
        graph: graph_ref,
        alpha,
        beta,
        k: report.regime.subspace_index,
        requested_k: k,
        u,
        xi: report.xi,
        t_multipliers: &report.t_multipliers,
        regime: report.regime,
        status: report.status,
        objective: report.objective,
        grad_sup: report.grad_sup,
        residual_sup: report.residual_sup,
        residual_l2: report.residual_l2,
        iterations: report.iterations,
        saddle_escapes: report.saddle_escapes,
        objective_trace: &report.objective_trace,
    };
    let text = to_json(&doc);
    emit(format_args!("{text}"));
    if let Some(out) = out {
        fs::write(out, format!("{text}\n")).map_err(|e| Failure::input(format!("{}: {e}", out.display())))?;
    }
    if report.status == SolveStatus::Converged {
        Ok(0)
    } else {
        eprintln!("kwgraph: no convergence after {} iterations (grad_sup = {:e})", report.iterations, report.grad_sup);
        Ok(EXIT_MAX_ITERS)
    }
}

fn cmd_probe(path: &Path, alpha: f64, beta: f64, k: usize, max_exp: u32, csv: Option<&Path>) -> Result<u8, Failure> {
    let g = load_graph(path)?;
    let spec = compute_spectrum(&g, DEFAULT_GROUPING_TOL)?;
    let report: ProbeReport64 = probe_divergence(&g, &spec, alpha, beta, k, max_exp)?;
    emit(format_args!("{}", to_json(&report)));
    if let Some(csv) = csv {
        let mut text = String::from("t,J\n");
        for s in &report.samples {
            text.push_str(&format!("{},{}\n", s.t, s.j));
        }
        fs::write(csv, text).map_err(|e| Failure::input(format!("{}: {e}", csv.display())))?;
    }
    Ok(match report.verdict {
        Verdict::Unbounded => 0,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

/// Graph paths are taken as given first, then relative to the solution file.
fn resolve_graph_path(solution: &Path, graph: &str) -> PathBuf {
    let direct = PathBuf::from(graph);
    if direct.is_absolute() || direct.exists() {
        return direct;
    }
    match solution.parent() {
        Some(dir) => dir.join(graph),
        None => direct,
    }
}

#[derive(Serialize)]
struct VerifyDocument<'a> {
    passed: bool,
    tol: f64,
    checks: &'a [CheckResult],
}

fn cmd_verify(path: &Path, tol: f64) -> Result<u8, Failure> {
    if !(tol > 0.0) {
        return Err(Failure::input(format!("--tol must be positive, got {tol}")));
    }
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let doc: CandidateDocument =
        serde_json::from_str(&text).map_err(|e| Failure::input(format!("malformed candidate: {e}")))?;
    let g = load_graph(&resolve_graph_path(path, &doc.graph))?;
    let spec = compute_spectrum(&g, DEFAULT_GROUPING_TOL)?;
    if doc.k >= spec.m() {
        return Err(KwError::IndexOutOfRange { k: doc.k, max: spec.m() - 1 }.into());
    }
    let cand = doc.to_candidate(&g)?;
    let checks = verify_solution(&g, &spec, &cand, tol)?;
    let passed = checks.iter().all(|c| c.passed);
    emit(format_args!("{}", to_json(&VerifyDocument { passed, tol, checks: &checks })));
    if passed {
        Ok(0)
    } else {
        for c in checks.iter().filter(|c| !c.passed) {
            eprintln!("kwgraph: check `{}` failed: {}", c.name, c.detail);
        }
        Ok(EXIT_VERIFY_FAILED)
    }
}
