//! `spiralflow` — command-line front end for the gradient-flow geometry
//! laboratory.
//!
//! Exit status: 0 on success, 1 when any assert-kind claim fails,
//! 2 on usage or I/O errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use spiralflow_core::analysis::{geometry_report, GeometryReport, ReportConfig, SampledPath};
use spiralflow_core::claims::{ClaimConfig, ClaimReport, CLAIM_IDS};
use spiralflow_core::curve::{gamma_point, gamma_speed, tail_length, GammaParam};
use spiralflow_core::diffcheck::{dual_partial, fd_partial, Var};
use spiralflow_core::field::{
    amplitude, cost_direct, scaling_direct, sine_profile, FieldHandle,
};
use spiralflow_core::flow::{
    integrate, Convention, FlowError, IntegratorConfig, Method, StopCondition, Trajectory,
};
use spiralflow_core::geom::{CartesianPoint, PolarPoint};
use spiralflow_core::log_spaced;

#[derive(Parser)]
#[command(
    name = "spiralflow",
    version,
    about = "Gradient-flow geometry laboratory: spiral trajectories, flat cost fields, claim verification",
    after_help = "Numerical defaults: rel-tol 1e-9, abs-tol 1e-12, h-init 1e-3, h-min 1e-12, \
                  h-max 0.25, max-steps 1000000, rho-max 20, grad-floor 1e-300. All floating \
                  point output uses 17 significant digits."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the normalized descent flow and emit the trajectory
    Simulate(SimulateArgs),
    /// Run the claims ledger and emit the JSON report
    Claims(ClaimsArgs),
    /// Tabulate the spiral curve: closed forms, tail length, ratio
    Curve(CurveArgs),
    /// Cross-check the dual-number oracle against finite differences
    Gradcheck(GradcheckArgs),
    /// Export a field grid and curve samples for external contour plotting
    ExportFigure(ExportFigureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FieldArg {
    /// Spiral field with oracle-differentiated partials
    Spiral,
    /// Quadratic bowl control field
    Bowl,
    /// Spiral field with the transcribed closed-form partials
    #[value(name = "paper-displayed", alias = "displayed")]
    Displayed,
}

impl FieldArg {
    fn handle(self) -> FieldHandle {
        match self {
            FieldArg::Spiral => FieldHandle::spiral(),
            FieldArg::Bowl => FieldHandle::quadratic_bowl(),
            FieldArg::Displayed => FieldHandle::displayed_spiral(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConventionArg {
    /// Plane chart, Euclidean gradient
    Cartesian,
    /// Log-polar chart, Euclidean coordinate flow
    PolarEuclidean,
    /// Log-polar chart, frame components read as velocities
    PolarFrame,
}

impl ConventionArg {
    fn convention(self) -> Convention {
        match self {
            ConventionArg::Cartesian => Convention::CartesianEuclidean,
            ConventionArg::PolarEuclidean => Convention::PolarEuclidean,
            ConventionArg::PolarFrame => Convention::PolarFrame,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Rk45,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = FieldArg::Spiral)]
    field: FieldArg,
    #[arg(long, value_enum, default_value_t = ConventionArg::PolarEuclidean)]
    convention: ConventionArg,
    /// Start point as "r,theta" (default: the curve start at t = 2)
    #[arg(long, default_value = "0.5,-0.36651292058166433")]
    x0: String,
    /// Stop once rho = log(1/r) reaches this value
    #[arg(long, default_value_t = 20.0)]
    rho_max: f64,
    /// Stop once the factored gradient magnitude drops below this floor
    #[arg(long, default_value_t = 1e-300)]
    grad_floor: f64,
    /// Stop once the accumulated arc length reaches this value
    #[arg(long)]
    max_arclength: Option<f64>,
    /// Keep integrating past the field's domain boundary event
    #[arg(long, default_value_t = false)]
    no_domain_exit: bool,
    #[arg(long, value_enum, default_value_t = MethodArg::Rk45)]
    method: MethodArg,
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    abs_tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    h_init: f64,
    #[arg(long, default_value_t = 1e-12)]
    h_min: f64,
    #[arg(long, default_value_t = 0.25)]
    h_max: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: usize,
    /// Integrate the ascent flow +∇f/|∇f| instead of descent
    #[arg(long, default_value_t = false)]
    ascend: bool,
    /// Trajectory output path ("-" for stdout)
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Also emit a JSON geometry report to this path ("-" for stdout)
    #[arg(long)]
    report: Option<String>,
}

#[derive(Args)]
struct ClaimsArgs {
    /// Run the complete ledger (the default when no --claim is given)
    #[arg(long, default_value_t = false)]
    all: bool,
    /// Run a single claim by id (repeatable)
    #[arg(long = "claim")]
    claims: Vec<String>,
    /// Report output path ("-" for stdout)
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct CurveArgs {
    /// Evaluate at this parameter value (repeatable); overrides the grid
    #[arg(long = "t")]
    t_values: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    t_min: f64,
    #[arg(long, default_value_t = 1e6)]
    t_max: f64,
    #[arg(long, default_value_t = 50)]
    count: usize,
    /// Absolute tolerance for the tail-length quadrature
    #[arg(long, default_value_t = spiralflow_core::curve::DEFAULT_TAIL_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Number of seeded sample points in the annulus 0.05 <= r <= 0.5
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 0x5eed_cafe)]
    seed: u64,
    /// Base step for the finite-difference oracle
    #[arg(long, default_value_t = 1e-5)]
    h0: f64,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args)]
struct ExportFigureArgs {
    #[arg(long, value_enum, default_value_t = FieldArg::Spiral)]
    field: FieldArg,
    #[arg(long, default_value_t = 1e-3)]
    r_min: f64,
    #[arg(long, default_value_t = 0.5)]
    r_max: f64,
    #[arg(long, default_value_t = 200)]
    r_count: usize,
    #[arg(long, default_value_t = 400)]
    theta_count: usize,
    /// Number of curve samples overlaid on the grid
    #[arg(long, default_value_t = 1000)]
    curve_count: usize,
    #[arg(long, default_value = "figure_grid.csv")]
    grid_out: String,
    #[arg(long, default_value = "figure_curve.csv")]
    curve_out: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Claims(args) => claims(args),
        Command::Curve(args) => curve(args),
        Command::Gradcheck(args) => gradcheck(args),
        Command::ExportFigure(args) => export_figure(args),
    }
}

fn open_out(path: &str) -> Result<Box<dyn Write>, io::Error> {
    if path == "-" {
        Ok(Box::new(BufWriter::new(io::stdout())))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}

/// 17 significant digits: enough for a bit-faithful f64 round trip.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------

#[derive(Serialize)]
struct SimulateReport {
    field: String,
    convention: String,
    stop_reason: String,
    sample_count: usize,
    total_arclength: f64,
    final_rho: f64,
    final_theta: f64,
    /// Max and final values of |θ − log ρ|, the on-curve residual.
    on_curve_residual_max: f64,
    on_curve_residual_final: f64,
    f_nonincreasing: bool,
    geometry: GeometryReport,
}

fn parse_x0(arg: &str) -> Result<PolarPoint, String> {
    let parts: Vec<&str> = arg.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("--x0 expects \"r,theta\", got {arg:?}"));
    }
    let r: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| format!("bad radius in --x0: {e}"))?;
    let theta: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| format!("bad angle in --x0: {e}"))?;
    if r.is_nan() || r <= 0.0 {
        return Err("--x0 radius must be positive".into());
    }
    Ok(PolarPoint::new(r, theta))
}

fn simulate(args: SimulateArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    if args.out == "-" && args.report.as_deref() == Some("-") {
        return Err("trajectory and report cannot both go to stdout; give --out a path".into());
    }
    let field = args.field.handle();
    let x0 = parse_x0(&args.x0)?;
    let cfg = IntegratorConfig {
        method: match args.method {
            MethodArg::Rk45 => Method::Rk45Adaptive,
            MethodArg::Rk4 => Method::Rk4Fixed,
        },
        rel_tol: args.rel_tol,
        abs_tol: args.abs_tol,
        h_init: args.h_init,
        h_min: args.h_min,
        h_max: args.h_max,
        max_steps: args.max_steps,
        ascend: args.ascend,
    };
    let stop = StopCondition {
        rho_max: Some(args.rho_max),
        grad_floor: Some(args.grad_floor),
        max_arclength: args.max_arclength,
        domain_exit: !args.no_domain_exit,
    };

    let traj = match integrate(&field, x0, args.convention.convention(), &cfg, &stop) {
        Ok(t) => t,
        Err(FlowError::StepSizeUnderflow { partial, s, h_min }) => {
            eprintln!(
                "note: step size underflowed below {h_min:.1e} at s = {s:.6e}; \
                 emitting the partial trajectory"
            );
            *partial
        }
        Err(e) => return Err(e.into()),
    };

    {
        let mut out = open_out(&args.out)?;
        match args.format {
            FormatArg::Csv => write_trajectory_csv(&mut out, &traj)?,
            FormatArg::Json => write_trajectory_json(&mut out, &traj)?,
        }
        out.flush()?;
    }

    if let Some(report_path) = &args.report {
        let path = SampledPath::from_trajectory(&traj);
        let geometry = geometry_report(&path, CartesianPoint::ORIGIN, &ReportConfig::default())?;
        let mut residual_max: f64 = 0.0;
        let mut residual_final = 0.0;
        let mut f_nonincreasing = true;
        let slack = 10.0 * cfg.rel_tol;
        for w in traj.samples.windows(2) {
            if !w[0].f_value.nonincreasing_to(w[1].f_value, slack) {
                f_nonincreasing = false;
            }
        }
        for smp in &traj.samples {
            // |θ − log ρ| only exists inside the unit disk (ρ > 0).
            if smp.q.rho > 0.0 {
                let res = (smp.q.theta - smp.q.rho.ln()).abs();
                residual_max = residual_max.max(res);
                residual_final = res;
            }
        }
        let last = traj.final_sample();
        let report = SimulateReport {
            field: format!("{:?}", traj.field_kind),
            convention: format!("{:?}", traj.convention),
            stop_reason: format!("{:?}", traj.stop_reason),
            sample_count: traj.samples.len(),
            total_arclength: traj.total_arclength(),
            final_rho: last.q.rho,
            final_theta: last.q.theta,
            on_curve_residual_max: residual_max,
            on_curve_residual_final: residual_final,
            f_nonincreasing,
            geometry,
        };
        let mut out = open_out(report_path)?;
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        out.flush()?;
    }

    Ok(ExitCode::SUCCESS)
}

const TRAJECTORY_HEADER: &str = "s,rho,theta_unwrapped,r,x,y,f_sign,f_log,grad_factored";

fn write_trajectory_csv(out: &mut dyn Write, traj: &Trajectory) -> io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for smp in &traj.samples {
        let r = smp.q.radius();
        let c = smp.q.to_cartesian();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt(smp.s),
            fmt(smp.q.rho),
            fmt(smp.q.theta),
            fmt(r),
            fmt(c.x),
            fmt(c.y),
            smp.f_value.sign(),
            fmt(smp.f_value.log_magnitude()),
            fmt(smp.factored_grad_magnitude),
        )?;
    }
    Ok(())
}

fn write_trajectory_json(out: &mut dyn Write, traj: &Trajectory) -> io::Result<()> {
    #[derive(Serialize)]
    struct Row {
        s: f64,
        rho: f64,
        theta_unwrapped: f64,
        r: f64,
        x: f64,
        y: f64,
        f_sign: i8,
        f_log: f64,
        grad_factored: f64,
    }
    #[derive(Serialize)]
    struct Out {
        field: String,
        convention: String,
        stop_reason: String,
        samples: Vec<Row>,
    }
    let rows = traj
        .samples
        .iter()
        .map(|smp| {
            let c = smp.q.to_cartesian();
            Row {
                s: smp.s,
                rho: smp.q.rho,
                theta_unwrapped: smp.q.theta,
                r: smp.q.radius(),
                x: c.x,
                y: c.y,
                f_sign: smp.f_value.sign(),
                f_log: smp.f_value.log_magnitude(),
                grad_factored: smp.factored_grad_magnitude,
            }
        })
        .collect();
    let doc = Out {
        field: format!("{:?}", traj.field_kind),
        convention: format!("{:?}", traj.convention),
        stop_reason: format!("{:?}", traj.stop_reason),
        samples: rows,
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializes"))
}

// ---------------------------------------------------------------------
// claims
// ---------------------------------------------------------------------

fn claims(args: ClaimsArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let cfg = ClaimConfig::default();
    let ids: Vec<String> = if args.claims.is_empty() || args.all {
        CLAIM_IDS.iter().map(|s| s.to_string()).collect()
    } else {
        args.claims.clone()
    };
    let records = ids
        .iter()
        .map(|id| spiralflow_core::claims::run_claim(id, &cfg))
        .collect();
    let report = ClaimReport::from_claims(&cfg, records);
    let failed = report.any_assert_failed();

    let mut out = open_out(&args.out)?;
    writeln!(out, "{}", report.to_json())?;
    out.flush()?;

    Ok(if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

// ---------------------------------------------------------------------
// curve
// ---------------------------------------------------------------------

fn curve(args: CurveArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let ts: Vec<f64> = if args.t_values.is_empty() {
        log_spaced(args.t_min, args.t_max, args.count.max(2))
    } else {
        args.t_values.clone()
    };

    #[derive(Serialize)]
    struct Row {
        t: f64,
        r: f64,
        theta: f64,
        speed: f64,
        tail_length: f64,
        ratio: f64,
    }

    let mut rows = Vec::with_capacity(ts.len());
    for &t in &ts {
        let param = GammaParam::new(t).map_err(|e| e.to_string())?;
        let p = gamma_point(param);
        let tail = tail_length(t, args.tol).map_err(|e| e.to_string())?;
        rows.push(Row {
            t,
            r: p.r,
            theta: p.theta,
            speed: gamma_speed(param),
            tail_length: tail.length,
            ratio: tail.length * t,
        });
    }

    let mut out = open_out(&args.out)?;
    match args.format {
        FormatArg::Csv => {
            writeln!(out, "t,r,theta,speed,tail_length,ratio")?;
            for row in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    fmt(row.t),
                    fmt(row.r),
                    fmt(row.theta),
                    fmt(row.speed),
                    fmt(row.tail_length),
                    fmt(row.ratio),
                )?;
            }
        }
        FormatArg::Json => writeln!(out, "{}", serde_json::to_string_pretty(&rows)?)?,
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------

fn gradcheck(args: GradcheckArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    #[derive(Serialize)]
    struct Row {
        expr: &'static str,
        var: &'static str,
        r: f64,
        theta: f64,
        dual: f64,
        fd: f64,
        fd_error_estimate: f64,
        abs_diff: f64,
        rel_diff: f64,
    }

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut rows = Vec::new();
    for _ in 0..args.count {
        let r = rng.gen_range(0.05..=0.5);
        let theta = rng.gen_range(-3.0..3.0);
        let p = PolarPoint::new(r, theta);
        let mut push = |expr: &'static str,
                        var: Var,
                        dual: f64,
                        fd: spiralflow_core::diffcheck::FdEstimate| {
            let abs_diff = (dual - fd.estimate).abs();
            rows.push(Row {
                expr,
                var: match var {
                    Var::R => "r",
                    Var::Theta => "theta",
                },
                r,
                theta,
                dual,
                fd: fd.estimate,
                fd_error_estimate: fd.error_estimate,
                abs_diff,
                rel_diff: abs_diff / dual.abs().max(1e-300),
            });
        };
        for var in [Var::R, Var::Theta] {
            push(
                "f",
                var,
                dual_partial(cost_direct, p, var),
                fd_partial(cost_direct::<f64>, p, var, args.h0)?,
            );
            push(
                "g",
                var,
                dual_partial(sine_profile, p, var),
                fd_partial(sine_profile::<f64>, p, var, args.h0)?,
            );
        }
        push(
            "a",
            Var::R,
            dual_partial(|r, _| amplitude(r), p, Var::R),
            fd_partial(|r, _| amplitude(r), p, Var::R, args.h0)?,
        );
        push(
            "b",
            Var::R,
            dual_partial(|r, _| scaling_direct(r), p, Var::R),
            fd_partial(|r, _| scaling_direct(r), p, Var::R, args.h0)?,
        );
    }

    let mut out = open_out(&args.out)?;
    match args.format {
        FormatArg::Csv => {
            writeln!(
                out,
                "expr,var,r,theta,dual,fd,fd_error_estimate,abs_diff,rel_diff"
            )?;
            for row in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    row.expr,
                    row.var,
                    fmt(row.r),
                    fmt(row.theta),
                    fmt(row.dual),
                    fmt(row.fd),
                    fmt(row.fd_error_estimate),
                    fmt(row.abs_diff),
                    fmt(row.rel_diff),
                )?;
            }
        }
        FormatArg::Json => writeln!(out, "{}", serde_json::to_string_pretty(&rows)?)?,
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------
// export-figure
// ---------------------------------------------------------------------

fn export_figure(args: ExportFigureArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let field = args.field.handle();
    if args.r_count < 2 || args.theta_count < 1 || args.curve_count < 2 {
        return Err("grid resolution must be at least 2x1 with 2 curve samples".into());
    }

    {
        let mut out = open_out(&args.grid_out)?;
        writeln!(out, "r,theta,f_sign,f_log")?;
        let rs = log_spaced(args.r_min, args.r_max, args.r_count);
        for &r in &rs {
            for j in 0..args.theta_count {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / args.theta_count as f64;
                let v = field.eval(PolarPoint::new(r, theta)).map_err(|e| e.to_string())?;
                writeln!(
                    out,
                    "{},{},{},{}",
                    fmt(r),
                    fmt(theta),
                    v.sign(),
                    fmt(v.log_magnitude())
                )?;
            }
        }
        out.flush()?;
    }

    {
        let mut out = open_out(&args.curve_out)?;
        writeln!(out, "t,r,theta,x,y")?;
        let t_max = 1.0 / args.r_min;
        for &t in &log_spaced(2.0, t_max, args.curve_count) {
            let p = gamma_point(GammaParam::new(t).map_err(|e| e.to_string())?);
            let c = p.to_cartesian();
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt(t),
                fmt(p.r),
                fmt(p.theta),
                fmt(c.x),
                fmt(c.y)
            )?;
        }
        out.flush()?;
    }

    Ok(ExitCode::SUCCESS)
}
