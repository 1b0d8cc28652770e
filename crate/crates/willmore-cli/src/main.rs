//! `willmore` — command-line front door of the laboratory.
//!
//! Exit codes: 0 success / all checks pass, 1 a check failed, 2 execution error.

use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use willmore::error::{Error, Result};
use willmore::expansion::{build_approximate, residual, DistanceHierarchy, ExpansionCoefficients};
use willmore::geometry::{build_chart, ClosedCurve, GridDomain, Interface};
use willmore::harness::{run_experiment, ExperimentConfig, SpectralConstants};
use willmore::pde::{
    read_snapshot, run, write_snapshot, PeriodicSpace, PhaseFieldState, RadialSpace, Scheme, SnapshotHeader,
    SolverConfig, Space,
};
use willmore::profiles::{alpha_profile, eta_bump, gamma_profiles, theta_all, theta_profile, Profile1D};
use willmore::sharp_interface::{bending_energy, default_dt, evolve_front_with, WillmoreState};
use willmore::spectral::{QuadraticFormReport, SpectralSetup};

#[derive(Parser)]
#[command(name = "willmore", version, about = "Phase-field Willmore flow laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// 1D optimal profile and correction profiles.
    Profiles {
        #[command(subcommand)]
        cmd: ProfilesCmd,
    },
    /// Tubular-chart diagnostics.
    Geometry {
        #[command(subcommand)]
        cmd: GeometryCmd,
    },
    /// Sharp-interface front tracking.
    Sharp {
        #[command(subcommand)]
        cmd: SharpCmd,
    },
    /// Matched asymptotic approximate solutions.
    Expand {
        #[command(subcommand)]
        cmd: ExpandCmd,
    },
    /// Phase-field time stepping.
    Pf {
        #[command(subcommand)]
        cmd: PfCmd,
    },
    /// Spectral lower-bound probes.
    Spectral {
        #[command(subcommand)]
        cmd: SpectralCmd,
    },
    /// Run a convergence experiment from a config file.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `out_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ProfilesCmd {
    /// CSV of z, theta, theta_p, alpha, gamma1, gamma2, gamma3, eta, eta_p.
    Dump {
        #[arg(long, default_value_t = 2001)]
        grid: usize,
        #[arg(long, default_value_t = 20.0)]
        window: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum GeometryCmd {
    /// h, b, a per surface node.
    Chart {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the interface nodes (x, y) of a curve.
        #[arg(long)]
        curve_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SharpCmd {
    /// Evolve a closed curve; one CSV row per node per frame.
    Run {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        t_end: f64,
        /// Step size (default h²/4 on the initial curve).
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 128)]
        nodes: usize,
        /// Steps between frames.
        #[arg(long, default_value_t = 100)]
        every: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ExpandArgs {
    #[arg(long)]
    spec: String,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Nodes per axis (periodic box) or radial nodes (spheres).
    #[arg(long)]
    grid: usize,
    /// Tube half-width (default 0.8R, or half the smallest curvature radius).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    time: f64,
}

#[derive(Subcommand)]
enum ExpandCmd {
    /// Write φ_a, μ_a as CSV with an ε, δ, k_impl header.
    Build {
        #[command(flatten)]
        args: ExpandArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// One-line CSV: eps, k, r1_sup, r1_l2, r2_sup, r2_l2.
    Residual {
        #[command(flatten)]
        args: ExpandArgs,
        #[arg(long, default_value_t = 1e-4)]
        dt_probe: f64,
        /// Print the column header first.
        #[arg(long)]
        header: bool,
    },
}

#[derive(Subcommand)]
enum PfCmd {
    /// Time-step from a flat key=value config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum SpectralCmd {
    /// Ĉ fitted at the first ε, then one CSV row per ε.
    Probe {
        #[arg(long)]
        spec: String,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 300)]
        n_lanczos: usize,
        #[arg(long, default_value_t = 64)]
        n_theta: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Profiles { cmd: ProfilesCmd::Dump { grid, window, out } } => profiles_dump(grid, window, &out),
        Cmd::Geometry { cmd: GeometryCmd::Chart { spec, delta, nodes, out, curve_out } } => {
            geometry_chart(&spec, delta, nodes, out.as_deref(), curve_out.as_deref())
        }
        Cmd::Sharp { cmd: SharpCmd::Run { spec, t_end, dt, nodes, every, out } } => {
            sharp_run(&spec, t_end, dt, nodes, every, &out)
        }
        Cmd::Expand { cmd: ExpandCmd::Build { args, out } } => expand_build(&args, &out),
        Cmd::Expand { cmd: ExpandCmd::Residual { args, dt_probe, header } } => expand_residual(&args, dt_probe, header),
        Cmd::Pf { cmd: PfCmd::Run { config } } => pf_run(&config),
        Cmd::Spectral { cmd: SpectralCmd::Probe { spec, eps, out, n_lanczos, n_theta } } => {
            spectral_probe(&spec, &eps, &out, n_lanczos, n_theta)
        }
        Cmd::Converge { config, out } => converge(&config, out),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn profiles_dump(n: usize, window: f64, out: &Path) -> Result<bool> {
    let grid = Profile1D::grid(n, window)?;
    let z = &grid.z_nodes;
    let alpha = alpha_profile(z)?;
    let (g1, g2, g3) = gamma_profiles(z)?;
    let mut s = String::from("z,theta,theta_p,alpha,gamma1,gamma2,gamma3,eta,eta_p\n");
    for (i, &t) in z.iter().enumerate() {
        let th = theta_all(t);
        writeln!(
            s,
            "{t},{},{},{},{},{},{},{},{}",
            th[0],
            th[1],
            alpha.values[i],
            g1.values[i],
            g2.values[i],
            g3.values[i],
            eta_bump(t, 0)?,
            eta_bump(t, 1)?
        )
        .unwrap();
    }
    write(out, &s)?;
    Ok(true)
}

fn geometry_chart(spec: &str, delta: f64, nodes: usize, out: Option<&Path>, curve_out: Option<&Path>) -> Result<bool> {
    let iface = Interface::parse(spec)?;
    let chart = build_chart(iface, delta)?;
    // surface coordinate: arclength on curves and circles, polar angle on spheres
    let span = match &chart.interface {
        Interface::Sphere(_) => std::f64::consts::PI,
        _ => chart.surface_measure(),
    };
    let mut s = String::from("s,h,b,a\n");
    for k in 0..nodes {
        let t = span * k as f64 / nodes as f64;
        writeln!(s, "{t},{},{},{}", chart.h(t), chart.b(t), chart.a(t)).unwrap();
    }
    match out {
        Some(p) => write(p, &s)?,
        None => print!("{s}"),
    }
    if let Some(p) = curve_out {
        let curve = match &chart.interface {
            Interface::Circle { center, radius } => ClosedCurve::circle(*center, *radius, nodes)?,
            Interface::Curve(c) => c.clone(),
            Interface::Sphere(_) => return Err(Error::InvalidArgument("a sphere has no curve to dump".into())),
        };
        write(p, &curve_csv(&curve))?;
    }
    Ok(true)
}

fn curve_csv(c: &ClosedCurve) -> String {
    let mut s = String::from("x,y\n");
    for p in c.nodes() {
        writeln!(s, "{},{}", p[0], p[1]).unwrap();
    }
    s
}

fn sharp_run(spec: &str, t_end: f64, dt: Option<f64>, nodes: usize, every: usize, out: &Path) -> Result<bool> {
    let curve = match Interface::parse(spec)? {
        Interface::Circle { center, radius } => ClosedCurve::circle(center, radius, nodes)?,
        Interface::Curve(c) => c.redistribute(nodes),
        Interface::Sphere(_) => return Err(Error::InvalidArgument("the front tracker evolves curves only".into())),
    };
    let dt0 = dt.unwrap_or_else(|| default_dt(&curve));
    let steps = (t_end / dt0).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let every = every.max(1);
    let mut s = String::from("time,node,x,y,bending_energy\n");
    let frame = |s: &mut String, st: &WillmoreState| {
        let e = bending_energy(&st.curve);
        for (i, p) in st.curve.nodes().iter().enumerate() {
            writeln!(s, "{},{i},{},{},{e}", st.time, p[0], p[1]).unwrap();
        }
    };
    let start = WillmoreState::new(curve);
    frame(&mut s, &start);
    let mut k = 0usize;
    let end = evolve_front_with(&start, dt, steps, |st| {
        k += 1;
        if k % every == 0 && k != steps {
            frame(&mut s, st);
        }
    });
    let end = end?;
    frame(&mut s, &end);
    write(out, &s)?;
    Ok(true)
}

/// Hierarchy plus the space the fields live on.
fn expand_setup(a: &ExpandArgs) -> Result<(DistanceHierarchy, Box<dyn Space>)> {
    let iface = Interface::parse(&a.spec)?;
    let delta = a.delta.unwrap_or_else(|| match iface.radius() {
        Some(r) => 0.8 * r,
        None => iface.default_delta(),
    });
    let space: Box<dyn Space> = match &iface {
        Interface::Sphere(sp) => Box::new(RadialSpace::with_spacing(3, sp.radius + 3.0 * delta, (sp.radius + 3.0 * delta) / a.grid as f64)?),
        other => {
            let reach = match other {
                Interface::Circle { center, radius } => radius + center[0].abs().max(center[1].abs()),
                Interface::Curve(c) => c.nodes().iter().fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs())),
                Interface::Sphere(_) => unreachable!(),
            };
            Box::new(PeriodicSpace::new(GridDomain::new(2.0 * (reach + 1.5 * delta), a.grid)?))
        }
    };
    let hier = DistanceHierarchy::willmore(iface, delta, a.time, a.k)?.with_chi_band(10.0 * space.spacing());
    Ok((hier, space))
}

fn expand_build(a: &ExpandArgs, out: &Path) -> Result<bool> {
    let (hier, space) = expand_setup(a)?;
    let coeffs = ExpansionCoefficients::default_coefficients()?;
    let sol = build_approximate(&hier, &coeffs, a.eps, space.as_ref())?;
    let mut s = format!(
        "# eps={} delta={} k_impl={} t={} h={} nodes={}\nx,y,z,phi_a,mu_a\n",
        a.eps,
        hier.chart.delta,
        a.k,
        a.time,
        space.spacing(),
        space.len()
    );
    for i in 0..space.len() {
        let p = space.point(i);
        writeln!(s, "{},{},{},{},{}", p[0], p[1], p[2], sol.phi_a[i], sol.mu_a[i]).unwrap();
    }
    write(out, &s)?;
    Ok(true)
}

fn expand_residual(a: &ExpandArgs, dt_probe: f64, header: bool) -> Result<bool> {
    let (hier, space) = expand_setup(a)?;
    let coeffs = ExpansionCoefficients::default_coefficients()?;
    let rep = residual(&hier, &coeffs, a.eps, space.as_ref(), dt_probe)?;
    if header {
        println!("eps,k,r1_sup,r1_l2,r2_sup,r2_l2");
    }
    println!("{}", rep.csv_line());
    Ok(true)
}

/// Flat `key = value` lines; `#` starts a comment.
fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Configuration(format!("line {}: expected key = value", no + 1)))?;
        if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Configuration(format!("duplicate key '{}'", k.trim())));
        }
    }
    Ok(map)
}

const PF_KEYS: [&str; 11] = ["L", "n", "eps", "dt", "t_end", "scheme", "S", "init", "sample_every", "out_prefix", "geometry"];

fn pf_run(path: &Path) -> Result<bool> {
    let kv = parse_kv(&std::fs::read_to_string(path)?)?;
    if let Some(k) = kv.keys().find(|k| !PF_KEYS.contains(&k.as_str())) {
        return Err(Error::Configuration(format!("unknown key '{k}'")));
    }
    let get = |k: &str| kv.get(k).map(String::as_str);
    let num = |k: &str| -> Result<Option<f64>> {
        get(k)
            .map(|v| v.parse::<f64>().map_err(|e| Error::Configuration(format!("{k}: {e}"))))
            .transpose()
    };
    let need = |k: &str| -> Result<f64> { num(k)?.ok_or_else(|| Error::Configuration(format!("missing key '{k}'"))) };
    let extent = need("L")?;
    let n = need("n")? as usize;
    let eps = need("eps")?;
    let t_end = need("t_end")?;
    let scheme: Scheme = get("scheme").unwrap_or("imex").parse()?;
    let geometry = get("geometry").unwrap_or("periodic");
    let space: Box<dyn Space> = match geometry {
        "periodic" => Box::new(PeriodicSpace::new(GridDomain::new(extent, n)?)),
        "radial2" => Box::new(RadialSpace::with_spacing(2, extent, extent / n as f64)?),
        "radial3" => Box::new(RadialSpace::with_spacing(3, extent, extent / n as f64)?),
        other => return Err(Error::Configuration(format!("unknown geometry '{other}'"))),
    };
    let phi0 = initial_field(get("init").unwrap_or("stripe"), eps, extent, n, geometry, space.as_ref())?;
    let dt = num("dt")?.unwrap_or_else(|| SolverConfig::default_dt(scheme, eps, space.spacing()));
    let mut cfg = SolverConfig::new(eps, dt, t_end, scheme);
    if let Some(s) = num("S")? {
        cfg.stabilization = s;
    }
    cfg.sample_every = num("sample_every")?.map_or(1, |v| v as usize);
    let prefix = get("out_prefix").unwrap_or("pf");
    let init = PhaseFieldState::new(space.as_ref(), phi0, eps, 0.0);
    let magic = if geometry == "periodic" { *b"WPF1" } else { *b"WPR1" };
    let snap = |name: &str, st: &PhaseFieldState| -> Result<()> {
        let p = PathBuf::from(format!("{prefix}_{name}.bin"));
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        write_snapshot(&p, &SnapshotHeader { magic, n, extent, epsilon: eps, time: st.time }, &st.phi)
    };
    snap("initial", &init)?;
    let (end, trace) = run(space.as_ref(), &cfg, &init)?;
    snap("final", &end)?;
    write(Path::new(&format!("{prefix}_trace.csv")), &trace.to_csv())?;
    println!(
        "pf run: {} steps to t = {}, energy violations {}, final radius {}",
        trace.steps,
        end.time,
        trace.violations,
        space.interface_radius(&end.phi).map_or("none".into(), |r| r.to_string())
    );
    Ok(trace.violations == 0)
}

/// `approx:circle:R0:k`, `approx:sphere:R0:k`, `stripe` or `file:path`.
fn initial_field(init: &str, eps: f64, extent: f64, n: usize, geometry: &str, space: &dyn Space) -> Result<Vec<f64>> {
    if let Some(rest) = init.strip_prefix("approx:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Configuration(format!("init '{init}': expected approx:<circle|sphere>:R0:k")));
        }
        let iface = Interface::parse(&format!("{}:{}", parts[0], parts[1]))?;
        let k: usize = parts[2].parse().map_err(|_| Error::Configuration(format!("init '{init}': bad k")))?;
        let delta = 0.8 * iface.radius().unwrap_or(1.0);
        let hier = DistanceHierarchy::willmore(iface, delta, 0.0, k)?.with_chi_band(10.0 * space.spacing());
        let coeffs = ExpansionCoefficients::default_coefficients()?;
        return Ok(build_approximate(&hier, &coeffs, eps, space)?.phi_a);
    }
    if init == "stripe" {
        // two flat interfaces at x = ±L/4 (r = L/2 on radial grids)
        let f = |i: usize| -> f64 {
            let x = space.point(i)[0];
            let d = if geometry == "periodic" { extent / 4.0 - x.abs() } else { extent / 2.0 - x };
            theta_profile(d / eps, 0).unwrap_or(0.0)
        };
        return Ok((0..space.len()).map(f).collect());
    }
    if let Some(p) = init.strip_prefix("file:") {
        let (h, data) = read_snapshot(Path::new(p))?;
        if h.n != n || data.len() != space.len() {
            return Err(Error::Configuration(format!("snapshot {p} has n = {}, config has n = {n}", h.n)));
        }
        return Ok(data);
    }
    Err(Error::Configuration(format!("unknown init '{init}'")))
}

fn spectral_probe(spec: &str, eps: &[f64], out: &Path, n_lanczos: usize, n_theta: usize) -> Result<bool> {
    let radius = match Interface::parse(spec)? {
        Interface::Circle { radius, .. } => radius,
        _ => return Err(Error::InvalidArgument("spectral probes support circle:R only".into())),
    };
    let setups: Vec<SpectralSetup> = eps
        .iter()
        .map(|&e| SpectralSetup::circle(radius, e, 8.0, n_theta))
        .collect::<Result<_>>()?;
    let k = SpectralConstants::fit(&setups[0], n_lanczos)?;
    let mut s = format!("{}\n", QuadraticFormReport::CSV_HEADER);
    let mut ok = true;
    for setup in &setups {
        let probe = setup.min_eig(n_lanczos)?;
        let rep = setup.report(&probe, k.c_hat)?;
        ok &= probe.lambda_min >= -k.c_hat && rep.ratio >= k.c_tilde;
        s.push_str(&rep.csv_line());
        s.push('\n');
    }
    write(out, &s)?;
    println!("spectral probe: C_hat = {:.6}, C_tilde = {:.6}, {}", k.c_hat, k.c_tilde, if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

fn converge(path: &Path, out: Option<PathBuf>) -> Result<bool> {
    let mut cfg = ExperimentConfig::parse(&std::fs::read_to_string(path)?)?;
    if out.is_some() {
        cfg.out_dir = out;
    }
    let rep = run_experiment(&cfg)?;
    println!("{}", rep.summary_line());
    Ok(rep.passed)
}
