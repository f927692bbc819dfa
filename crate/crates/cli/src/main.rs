//! `cavity-gates` command-line front end.
//!
//! Exit status is 0 on success, 2 for usage errors (bad flags, invalid
//! parameters or ranges) and 1 for every other failure (unreadable files,
//! circuit parse errors, routing errors).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use cavity_gates::cavity::{
    reflection_spectrum, regime_check, resonant_reflection, CavityParams, RegimeReport, DEFAULT_REGIME_MARGIN,
};
use cavity_gates::circuit::text::{gate_label, parse_circuit, parse_input_amplitudes, serialize_circuit};
use cavity_gates::circuit::{build_cnot, build_toffoli, CircuitSpec, GateKind};
use cavity_gates::metrics::{
    average_both, average_bound, input_vector, GateAverages, GateMetrics, InputAngles, QuadratureConfig,
};
use cavity_gates::sweep::{format_significant, round_significant, sweep, SweepGrid};
use cavity_gates::{HybridState, ReflectionPair};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(
    name = "cavity-gates",
    version,
    about = "Cavity-assisted photon-atom CNOT and Toffoli gate simulator"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Print machine-readable JSON instead of text or CSV.
    #[arg(long, global = true)]
    json: bool,

    /// Also write the table as CSV to this file (sweep, point, spectrum).
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,

    /// Quadrature nodes per angle: one count for both gates, or
    /// `CNOT,TOFFOLI`. Defaults to 128,64.
    #[arg(long, global = true, value_name = "N[,M]", value_parser = parse_quad_nodes)]
    quad_nodes: Option<QuadratureConfig>,

    /// Factor a `>>` relation must exceed in the regime check.
    #[arg(long, global = true, value_name = "F", default_value_t = DEFAULT_REGIME_MARGIN)]
    margin: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the four averages against x = g/sqrt(kappa*gamma).
    Sweep(SweepArgs),
    /// Evaluate one cavity parameter set.
    Point(PointArgs),
    /// Run a circuit file on one input state.
    Run(RunArgs),
    /// Reflection spectrum of the coupled and empty cavity.
    Spectrum(SpectrumArgs),
    /// Check the bad-cavity hierarchy kappa >> g^2/kappa >> gamma.
    Check(CavityArgs),
    /// Validate a circuit file without running it.
    Parse(ParseArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value_t = cavity_gates::sweep::DEFAULT_X_MIN)]
    x_min: f64,
    #[arg(long, default_value_t = cavity_gates::sweep::DEFAULT_X_MAX)]
    x_max: f64,
    #[arg(long, default_value_t = cavity_gates::sweep::DEFAULT_POINTS)]
    points: usize,
    /// Space the grid linearly instead of logarithmically.
    #[arg(long)]
    linear: bool,
}

#[derive(Debug, Args)]
struct CavityArgs {
    /// Atom-cavity coupling strength.
    #[arg(allow_negative_numbers = true)]
    g: f64,
    /// Cavity field decay rate.
    #[arg(allow_negative_numbers = true)]
    kappa: f64,
    /// Atomic dipole decay rate.
    #[arg(allow_negative_numbers = true)]
    gamma: f64,
    /// Cavity frequency.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    omega_c: f64,
    /// Atomic transition frequency.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    omega_0: f64,
}

impl CavityArgs {
    fn params(&self) -> cavity_gates::Result<CavityParams> {
        CavityParams::with_detunings(self.g, self.kappa, self.gamma, self.omega_c, self.omega_0)
    }
}

#[derive(Debug, Args)]
struct PointArgs {
    #[command(flatten)]
    cavity: CavityArgs,
    /// Probe frequency.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    omega_p: f64,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[command(flatten)]
    cavity: CavityArgs,
    #[arg(long, allow_negative_numbers = true)]
    from: f64,
    #[arg(long, allow_negative_numbers = true)]
    to: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
}

#[derive(Debug, Args)]
struct RunArgs {
    file: PathBuf,
    /// Input amplitudes such as `R0=0.6,L1=0.8i`.
    #[arg(long, conflicts_with = "angles")]
    input: Option<String>,
    /// Product input from angles `PHI,THETA[,ETA]`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    angles: Option<Vec<f64>>,
    /// Scale the input to unit norm before running.
    #[arg(long)]
    normalize: bool,
    /// Coupled-cavity reflection amplitude. Repeat once per cavity atom to
    /// set them separately.
    #[arg(long = "r", value_parser = parse_complex, allow_negative_numbers = true)]
    r: Vec<Complex64>,
    /// Empty-cavity reflection amplitude, repeatable like `--r`.
    #[arg(long = "r0", value_parser = parse_complex, allow_negative_numbers = true)]
    r0: Vec<Complex64>,
}

#[derive(Debug, Args)]
struct ParseArgs {
    file: PathBuf,
    /// Print the canonical serialization of the parsed circuit.
    #[arg(long)]
    canonical: bool,
}

fn parse_quad_nodes(text: &str) -> Result<QuadratureConfig, String> {
    let counts: Vec<usize> = text
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()?;
    let (cnot_nodes, toffoli_nodes) = match counts[..] {
        [n] => (n, n),
        [c, t] => (c, t),
        _ => return Err("expected N or CNOT,TOFFOLI".into()),
    };
    if cnot_nodes < 2 || toffoli_nodes < 2 {
        return Err("node counts must be at least 2".into());
    }
    Ok(QuadratureConfig {
        cnot_nodes,
        toffoli_nodes,
    })
}

fn parse_complex(text: &str) -> Result<Complex64, String> {
    let value: Complex64 = text
        .trim()
        .parse()
        .map_err(|_| format!("invalid complex number '{text}'"))?;
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(format!("'{text}' is not finite"))
    }
}

/// A failure that maps to the usage exit status.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(result: cavity_gates::Result<T>) -> anyhow::Result<T> {
    result.map_err(|e| match e {
        cavity_gates::Error::Parameter(msg) => UsageError(msg).into(),
        other => other.into(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    if !(g.margin.is_finite() && g.margin > 0.0) {
        return Err(UsageError(format!("--margin must be positive, got {}", g.margin)).into());
    }
    let quad = g.quad_nodes.unwrap_or_default();
    if g.csv.is_some() && matches!(cli.command, Command::Run(_) | Command::Check(_) | Command::Parse(_)) {
        return Err(UsageError("--csv applies to sweep, point and spectrum only".into()).into());
    }
    match &cli.command {
        Command::Sweep(args) => cmd_sweep(g, &quad, args),
        Command::Point(args) => cmd_point(g, &quad, args),
        Command::Run(args) => cmd_run(g, args),
        Command::Spectrum(args) => cmd_spectrum(g, args),
        Command::Check(args) => cmd_check(g, args),
        Command::Parse(args) => cmd_parse(g, args),
    }
}

/// Writes to stdout. A closed pipe (`| head`) ends output quietly.
fn emit(text: &str) -> anyhow::Result<()> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write_csv(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_sweep(g: &GlobalOpts, quad: &QuadratureConfig, args: &SweepArgs) -> anyhow::Result<()> {
    let grid = SweepGrid {
        x_min: args.x_min,
        x_max: args.x_max,
        points: args.points,
        log_spacing: !args.linear,
    };
    let table = usage(sweep(&grid, quad))?;
    let csv = table.to_csv();
    if let Some(path) = &g.csv {
        write_csv(path, &csv)?;
    }
    if g.json {
        emit(&format!("{}\n", table.to_json()))?;
    } else {
        emit(&csv)?;
    }
    Ok(())
}

fn complex_json(z: Complex64) -> Value {
    json!({ "re": round_significant(z.re), "im": round_significant(z.im) })
}

fn metrics_json(m: &GateMetrics) -> Value {
    json!({
        "fidelity": round_significant(m.fidelity),
        "efficiency": round_significant(m.efficiency),
        "nodes": m.nodes,
        "fidelity_error": m.fidelity_error,
        "efficiency_error": m.efficiency_error,
    })
}

fn regime_text(report: &RegimeReport) -> String {
    let flag = |ok: bool| if ok { "holds" } else { "FAILS" };
    format!(
        "kappa = {}, g^2/kappa = {}, gamma = {} (margin {})\n\
         kappa >> g^2/kappa: {}\n\
         g^2/kappa >> gamma: {}\n\
         bad-cavity regime: {}\n",
        format_significant(report.kappa),
        format_significant(report.g2_over_kappa),
        format_significant(report.gamma),
        report.margin,
        flag(report.kappa_dominates),
        flag(report.coupling_dominates),
        if report.is_bad_cavity() { "yes" } else { "no" },
    )
}

const POINT_CSV_HEADER: &str = "x,log10_x,re_r,im_r,re_r0,im_r0,f_cnot,p_cnot,f_toffoli,p_toffoli";

fn cmd_point(g: &GlobalOpts, quad: &QuadratureConfig, args: &PointArgs) -> anyhow::Result<()> {
    let params = usage(args.cavity.params())?;
    let pair = usage(params.reflection_pair(args.omega_p))?;
    let x = params.coupling_ratio();
    let regime = regime_check(&params, g.margin);
    // On resonance the closed forms apply; otherwise average the engine's maps.
    let (method, averages) = if pair.r_empty == Complex64::new(-1.0, 0.0) {
        ("closed-form", average_both(pair.r_coupled, quad)?)
    } else {
        let averages = GateAverages {
            cnot: average_bound(&build_cnot(pair.r_coupled, pair.r_empty), GateKind::Cnot, quad)?,
            toffoli: average_bound(
                &build_toffoli(pair.r_coupled, pair.r_empty, pair.r_coupled, pair.r_empty),
                GateKind::Toffoli,
                quad,
            )?,
        };
        ("engine", averages)
    };
    let values = [
        x,
        x.log10(),
        pair.r_coupled.re,
        pair.r_coupled.im,
        pair.r_empty.re,
        pair.r_empty.im,
        averages.cnot.fidelity,
        averages.cnot.efficiency,
        averages.toffoli.fidelity,
        averages.toffoli.efficiency,
    ];
    if let Some(path) = &g.csv {
        let row: Vec<String> = values.iter().map(|v| format_significant(*v)).collect();
        write_csv(path, &format!("{POINT_CSV_HEADER}\n{}\n", row.join(",")))?;
    }
    if g.json {
        let doc = json!({
            "params": params,
            "omega_p": args.omega_p,
            "x": round_significant(x),
            "r": complex_json(pair.r_coupled),
            "r0": complex_json(pair.r_empty),
            "resonant_r": resonant_reflection(x).ok().map(round_significant),
            "regime": regime,
            "method": method,
            "cnot": metrics_json(&averages.cnot),
            "toffoli": metrics_json(&averages.toffoli),
        });
        emit(&format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
        return Ok(());
    }
    let mut out = String::new();
    writeln!(out, "x = g/sqrt(kappa*gamma) = {}", format_significant(x))?;
    writeln!(out, "r  = {}", pair.r_coupled)?;
    writeln!(out, "r0 = {}", pair.r_empty)?;
    out.push_str(&regime_text(&regime));
    writeln!(
        out,
        "averages ({method}, nodes {}/{}):",
        quad.cnot_nodes, quad.toffoli_nodes
    )?;
    writeln!(out, "  F_CNOT    = {}", format_significant(averages.cnot.fidelity))?;
    writeln!(out, "  P_CNOT    = {}", format_significant(averages.cnot.efficiency))?;
    writeln!(out, "  F_Toffoli = {}", format_significant(averages.toffoli.fidelity))?;
    writeln!(out, "  P_Toffoli = {}", format_significant(averages.toffoli.efficiency))?;
    emit(&out)?;
    Ok(())
}

fn cmd_check(g: &GlobalOpts, args: &CavityArgs) -> anyhow::Result<()> {
    let params = usage(args.params())?;
    let report = regime_check(&params, g.margin);
    if g.json {
        emit(&format!(
            "{}\n",
            serde_json::to_string_pretty(&json!({ "regime": report, "bad_cavity": report.is_bad_cavity() }))?
        ))?;
    } else {
        emit(&regime_text(&report))?;
    }
    Ok(())
}

fn cmd_spectrum(g: &GlobalOpts, args: &SpectrumArgs) -> anyhow::Result<()> {
    let params = usage(args.cavity.params())?;
    let rows = usage(reflection_spectrum(&params, args.from, args.to, args.points))?;
    let mut csv = String::from("omega_p,re_r,im_r,abs_r,arg_r,re_r0,im_r0\n");
    for row in &rows {
        let cells = [
            row.omega_p,
            row.r.re,
            row.r.im,
            row.r.norm(),
            row.r.arg(),
            row.r0.re,
            row.r0.im,
        ];
        let cells: Vec<String> = cells.iter().map(|v| format_significant(*v)).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    if let Some(path) = &g.csv {
        write_csv(path, &csv)?;
    }
    if g.json {
        let rows: Vec<Value> = rows
            .iter()
            .map(|row| {
                json!({
                    "omega_p": round_significant(row.omega_p),
                    "r": complex_json(row.r),
                    "abs_r": round_significant(row.r.norm()),
                    "arg_r": round_significant(row.r.arg()),
                    "r0": complex_json(row.r0),
                })
            })
            .collect();
        emit(&format!("{}\n", serde_json::to_string_pretty(&rows)?))?;
    } else {
        emit(&csv)?;
    }
    Ok(())
}

fn read_circuit(path: &Path) -> anyhow::Result<CircuitSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_circuit(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_parse(g: &GlobalOpts, args: &ParseArgs) -> anyhow::Result<()> {
    let spec = read_circuit(&args.file)?;
    if args.canonical {
        emit(&serialize_circuit(&spec))?;
    } else if g.json {
        let doc = json!({
            "valid": true,
            "atoms": spec.atom_count(),
            "locations": spec.layout().locations(),
            "elements": spec.elements().len(),
            "checkpoints": spec.checkpoints().iter().map(|c| c.label.clone()).collect::<Vec<_>>(),
        });
        emit(&format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
    } else {
        emit(&format!(
            "ok: {} atom(s), {} location(s), {} element(s), {} checkpoint(s)\n",
            spec.atom_count(),
            spec.layout().locations().len(),
            spec.elements().len(),
            spec.checkpoints().len()
        ))?;
    }
    Ok(())
}

/// One amplitude per node, either shared or given per node.
fn per_node(values: &[Complex64], nodes: usize, default: Complex64, flag: &str) -> anyhow::Result<Vec<Complex64>> {
    match values.len() {
        0 => Ok(vec![default; nodes]),
        1 => Ok(vec![values[0]; nodes]),
        n if n == nodes => Ok(values.to_vec()),
        n => Err(UsageError(format!(
            "{flag} given {n} times for a circuit with {nodes} cavity atom(s)"
        ))
        .into()),
    }
}

fn run_input(spec: &CircuitSpec, args: &RunArgs) -> anyhow::Result<HybridState> {
    let n = spec.atom_count();
    let mut vector = if let Some(text) = &args.input {
        parse_input_amplitudes(text, n).map_err(|e| UsageError(format!("--input: {e}")))?
    } else if let Some(angles) = &args.angles {
        let kind = match (n, angles.len()) {
            (1, 2) => GateKind::Cnot,
            (2, 3) => GateKind::Toffoli,
            _ => bail!(UsageError(format!(
                "--angles needs {} value(s) for a circuit with {n} atom(s)",
                n + 1
            ))),
        };
        let angles = InputAngles::toffoli(angles[0], angles[1], angles.get(2).copied().unwrap_or(0.0));
        usage(angles.check())?;
        input_vector(kind, &angles)
    } else {
        return Err(UsageError("run needs --input or --angles".into()).into());
    };
    if args.normalize {
        let norm = vector.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(UsageError("input has zero norm".into()).into());
        }
        vector.iter_mut().for_each(|a| *a /= norm);
    }
    usage(spec.vector_input(&vector))
}

fn state_json(state: &HybridState) -> Value {
    let n = state.atom_count();
    let terms: Vec<Value> = state
        .iter()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(label, amp)| {
            json!({
                "location": state.layout().name(label.loc),
                "label": format!("{}{}", label.pol, label.atoms.to_string_with(n)),
                "re": round_significant(amp.re),
                "im": round_significant(amp.im),
            })
        })
        .collect();
    json!({ "norm": round_significant(state.total_norm()), "terms": terms })
}

fn port_text(state: &HybridState, spec: &CircuitSpec, loc: cavity_gates::state::LocationId) -> String {
    let n = spec.atom_count();
    let terms: Vec<String> = state
        .gate_vector(loc)
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(i, a)| format!("  {:<6} {a}", gate_label(i, n)))
        .collect();
    if terms.is_empty() {
        "  (empty)".into()
    } else {
        terms.join("\n")
    }
}

fn cmd_run(g: &GlobalOpts, args: &RunArgs) -> anyhow::Result<()> {
    let spec = read_circuit(&args.file)?;
    let input = run_input(&spec, args)?;
    let atoms = spec.node_atoms();
    let count = atoms.last().map_or(0, |a| a + 1);
    let r = per_node(&args.r, count, Complex64::new(1.0, 0.0), "--r")?;
    let r0 = per_node(&args.r0, count, Complex64::new(-1.0, 0.0), "--r0")?;
    let nodes: Vec<ReflectionPair> = r.into_iter().zip(r0).map(|(a, b)| ReflectionPair::new(a, b)).collect();
    let circuit = spec.bind(nodes);
    let output = usage(circuit.run(&input))?;

    if g.json {
        let checkpoints: Vec<Value> = output
            .checkpoint_states
            .iter()
            .map(|(label, s)| json!({ "label": label, "state": state_json(s) }))
            .collect();
        let doc = json!({
            "out": state_json(&output.out_state),
            "discard": state_json(&output.discard_state),
            "stray": state_json(&output.stray_state),
            "absorbed": round_significant(output.absorbed),
            "checkpoints": checkpoints,
        });
        emit(&format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
        return Ok(());
    }
    let spec = &circuit.spec;
    let mut out = String::new();
    writeln!(
        out,
        "out port ({}), norm {}:",
        spec.layout().name(spec.output_port()),
        format_significant(output.out_state.total_norm())
    )?;
    writeln!(out, "{}", port_text(&output.out_state, spec, spec.output_port()))?;
    if let Some(loc) = spec.discard_port() {
        writeln!(
            out,
            "discard port ({}), norm {}:",
            spec.layout().name(loc),
            format_significant(output.discard_state.total_norm())
        )?;
        writeln!(out, "{}", port_text(&output.discard_state, spec, loc))?;
    }
    if !output.stray_state.is_empty() {
        writeln!(out, "left on internal paths: {}", output.stray_state.describe())?;
    }
    writeln!(out, "absorbed: {}", format_significant(output.absorbed))?;
    for (label, state) in &output.checkpoint_states {
        writeln!(out, "checkpoint {label}: {}", state.describe())?;
    }
    emit(&out)?;
    Ok(())
}
