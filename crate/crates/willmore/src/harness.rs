//! Experiment orchestration: ε sweeps, log-log order fits, reports, CSV and plot files.
//!
//! Configs are flat `key = value` text; see [`ExperimentConfig::parse`] for the keys.

use crate::error::{invalid, Error, Result};
use crate::expansion::{build_approximate, residual, DistanceHierarchy, ExpansionCoefficients};
use crate::geometry::{ClosedCurve, GridDomain, Interface};
use crate::linalg::linear_fit;
use crate::pde::{l2_norm, run, PeriodicSpace, PhaseFieldState, RadialSpace, Scheme, SolverConfig, Space};
use crate::profiles::{cancellation_integral, eigen_1d, gamma_profiles, sigma_constant, Profile1D};
use crate::spectral::{random_smooth_field, SpectralSetup};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Build identifier stamped on every report row.
pub fn build_id() -> String {
    match option_env!("WILLMORE_BUILD_ID") {
        Some(id) => id.to_string(),
        None => format!("willmore-{}", env!("CARGO_PKG_VERSION")),
    }
}

/// Log-log least squares: value ≈ e^c·ε^p. Returns (p, c).
pub fn fit_order(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    let f = fit_with_band(pairs)?;
    Ok((f.p, f.intercept))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderFit {
    pub p: f64,
    pub intercept: f64,
    /// 95% confidence band on p (degenerate for two points).
    pub band: (f64, f64),
}

/// Two-sided 97.5% Student-t quantiles for 1..=10 degrees of freedom.
const T975: [f64; 10] = [12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228];

pub fn fit_with_band(pairs: &[(f64, f64)]) -> Result<OrderFit> {
    if pairs.len() < 2 {
        return invalid("order fit needs at least two points");
    }
    if let Some(&(e, v)) = pairs.iter().find(|(e, v)| !(*v > 0.0) || !(*e > 0.0)) {
        return invalid(format!("order fit needs positive data, got ({e}, {v})"));
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let (p, c, se) = linear_fit(&x, &y);
    if !p.is_finite() {
        return invalid("order fit needs distinct eps values");
    }
    let dof = pairs.len().saturating_sub(2);
    let t = if dof == 0 { 0.0 } else { T975.get(dof - 1).copied().unwrap_or(1.96) };
    Ok(OrderFit {
        p,
        intercept: c,
        band: (p - t * se, p + t * se),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExperimentKind {
    Identities,
    ResidualOrder,
    LevelsetConvergence,
    SpectralSweep,
    DifferenceDecay,
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identities" => ExperimentKind::Identities,
            "residual_order" => ExperimentKind::ResidualOrder,
            "levelset_convergence" => ExperimentKind::LevelsetConvergence,
            "spectral_sweep" => ExperimentKind::SpectralSweep,
            "difference_decay" => ExperimentKind::DifferenceDecay,
            other => return Err(Error::Configuration(format!("unknown experiment kind '{other}'"))),
        })
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExperimentKind::Identities => "identities",
            ExperimentKind::ResidualOrder => "residual_order",
            ExperimentKind::LevelsetConvergence => "levelset_convergence",
            ExperimentKind::SpectralSweep => "spectral_sweep",
            ExperimentKind::DifferenceDecay => "difference_decay",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    /// Periodic square, power-of-two grid.
    Cartesian,
    /// Radially symmetric fields (circles in 2D, spheres in 3D).
    Radial,
}

impl FromStr for SpaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartesian" => Ok(SpaceKind::Cartesian),
            "radial" => Ok(SpaceKind::Radial),
            other => Err(Error::Configuration(format!("unknown space '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub interface_spec: String,
    pub interface: Interface,
    /// Strictly decreasing.
    pub eps: Vec<f64>,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub t_end: f64,
    pub k_impl: usize,
    /// Grid policy h ≤ ε/grid_factor (≥ 4).
    pub grid_factor: f64,
    /// Multiplier on the scheme's default step.
    pub dt_factor: f64,
    pub scheme: Scheme,
    pub space: SpaceKind,
    /// Tube half-width; default 0.8 R.
    pub delta: f64,
    pub n_lanczos: usize,
    pub n_theta: usize,
    /// Central-difference step for ∂_tφ_a in the residual.
    pub dt_probe: f64,
}

const KEYS: [&str; 15] = [
    "kind", "interface", "eps", "seed", "out_dir", "t_end", "k_impl", "grid_factor", "dt_factor", "scheme",
    "space", "delta", "n_lanczos", "n_theta", "dt_probe",
];

impl ExperimentConfig {
    /// Parse `key = value` lines; `#` starts a comment. Keys:
    /// kind, interface, eps (comma list), seed, out_dir, t_end, k_impl, grid_factor,
    /// dt_factor, scheme, space, delta, n_lanczos, n_theta, dt_probe.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Configuration(format!("line {}: expected key = value", ln + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::Configuration(format!("line {}: unknown key '{k}'", ln + 1)));
            }
            if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Configuration(format!("line {}: duplicate key '{k}'", ln + 1)));
            }
        }
        Self::from_map(&map)
    }

    fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let cfg_err = |k: &str, e: &dyn std::fmt::Display| Error::Configuration(format!("bad value for {k}: {e}"));
        let get = |k: &str| map.get(k).map(|s| s.as_str());
        fn num<T: FromStr>(map: &BTreeMap<String, String>, k: &str, d: T) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            match map.get(k) {
                None => Ok(d),
                Some(v) => v.parse::<T>().map_err(|e| Error::Configuration(format!("bad value for {k}: {e}"))),
            }
        }
        let kind: ExperimentKind = get("kind")
            .ok_or_else(|| Error::Configuration("missing key 'kind'".into()))?
            .parse()?;
        let interface_spec = get("interface").unwrap_or("circle:1.0").to_string();
        let interface = Interface::parse(&interface_spec).map_err(|e| cfg_err("interface", &e))?;
        let eps = match get("eps") {
            Some(list) => list
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| cfg_err("eps", &e)))
                .collect::<Result<Vec<f64>>>()?,
            None => vec![0.08, 0.056, 0.04],
        };
        let radius = interface.radius().unwrap_or(1.0);
        let default_space = match (&kind, &interface) {
            (ExperimentKind::ResidualOrder, Interface::Circle { .. }) => "cartesian",
            _ => "radial",
        };
        let cfg = ExperimentConfig {
            kind,
            interface_spec,
            eps,
            seed: num(map, "seed", 20240601u64)?,
            out_dir: get("out_dir").map(PathBuf::from),
            t_end: num(map, "t_end", 0.01)?,
            k_impl: num(map, "k_impl", 2usize)?,
            grid_factor: num(map, "grid_factor", 4.0)?,
            dt_factor: num(map, "dt_factor", 1.0)?,
            scheme: get("scheme").unwrap_or("linearized").parse()?,
            space: get("space").unwrap_or(default_space).parse()?,
            delta: num(map, "delta", 0.8 * radius)?,
            n_lanczos: num(map, "n_lanczos", 300usize)?,
            n_theta: num(map, "n_theta", 64usize)?,
            dt_probe: num(map, "dt_probe", 1e-4)?,
            interface,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let c = |m: String| Err(Error::Configuration(m));
        if self.kind != ExperimentKind::Identities && self.eps.len() < 2 {
            return c("order fits need at least two eps values".into());
        }
        if self.eps.iter().any(|e| !(*e > 0.0)) || self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return c("eps list must be positive and strictly decreasing".into());
        }
        if self.grid_factor < 4.0 {
            return c(format!("grid_factor {} < 4 violates h <= eps/4", self.grid_factor));
        }
        if !(self.dt_factor > 0.0) || !(self.t_end > 0.0) || !(self.dt_probe > 0.0) {
            return c("t_end, dt_factor and dt_probe must be positive".into());
        }
        if !(self.k_impl == 2 || self.k_impl == 3) {
            return c(format!("k_impl {} not in {{2, 3}}", self.k_impl));
        }
        match (&self.space, &self.interface) {
            (SpaceKind::Radial, Interface::Circle { center, .. }) if *center != [0.0, 0.0] => {
                return c("radial space needs a circle centred at the origin".into())
            }
            (SpaceKind::Radial, Interface::Curve(_)) => return c("radial space needs a circle or sphere".into()),
            (SpaceKind::Cartesian, Interface::Sphere(_)) => return c("spheres need the radial space".into()),
            _ => {}
        }
        Ok(())
    }

    /// Sorted `key=value` lines; the hashed identity of the config.
    pub fn canonical(&self) -> String {
        let eps: Vec<String> = self.eps.iter().map(|e| format!("{e}")).collect();
        let mut s = String::new();
        let _ = writeln!(s, "delta={}", self.delta);
        let _ = writeln!(s, "dt_factor={}", self.dt_factor);
        let _ = writeln!(s, "dt_probe={}", self.dt_probe);
        let _ = writeln!(s, "eps={}", eps.join(","));
        let _ = writeln!(s, "grid_factor={}", self.grid_factor);
        let _ = writeln!(s, "interface={}", self.interface_spec);
        let _ = writeln!(s, "k_impl={}", self.k_impl);
        let _ = writeln!(s, "kind={}", self.kind);
        let _ = writeln!(s, "n_lanczos={}", self.n_lanczos);
        let _ = writeln!(s, "n_theta={}", self.n_theta);
        let _ = writeln!(s, "scheme={}", self.scheme);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(
            s,
            "space={}",
            match self.space {
                SpaceKind::Cartesian => "cartesian",
                SpaceKind::Radial => "radial",
            }
        );
        let _ = writeln!(s, "t_end={}", self.t_end);
        s
    }

    /// FNV-1a of [`canonical`](Self::canonical), hex.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.canonical().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    fn radius(&self) -> f64 {
        self.interface.radius().unwrap_or(1.0)
    }

    /// Space for one ε under the grid policy.
    pub fn space_for(&self, eps: f64) -> Result<(Box<dyn Space + Send + Sync>, String)> {
        let hmax = eps / self.grid_factor;
        let r = self.radius();
        match self.space {
            SpaceKind::Radial => {
                let s = RadialSpace::with_spacing(self.interface.dim(), r + 3.0 * self.delta, hmax)?;
                let label = format!("radial{}d:{}", s.grid.dim, s.grid.n);
                Ok((Box::new(s), label))
            }
            SpaceKind::Cartesian => {
                // box half-width R + 1.5δ around the centre; smallest power of two
                let c = match &self.interface {
                    Interface::Circle { center, .. } => center[0].abs().max(center[1].abs()),
                    _ => 0.0,
                };
                let extent = 2.0 * (r + 1.5 * self.delta + c);
                let mut n = 16usize;
                while extent / n as f64 > hmax {
                    n *= 2;
                }
                let label = format!("cartesian:{n}x{n}");
                Ok((Box::new(PeriodicSpace::new(GridDomain::new(extent, n)?)), label))
            }
        }
    }

    fn hierarchy(&self, space: &dyn Space, t: f64) -> Result<DistanceHierarchy> {
        Ok(DistanceHierarchy::willmore(self.interface.clone(), self.delta, t, self.k_impl)?
            .with_chi_band(10.0 * space.spacing()))
    }
}

/// A named scalar check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// `value <= bound` if true, else `value >= bound`.
    pub upper: bool,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
            upper: true,
            pass: value <= bound,
        }
    }
    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
            upper: false,
            pass: value >= bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub eps: f64,
    pub value: f64,
    pub grid: String,
    pub dt: f64,
    pub extra: Vec<(String, f64)>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub kind: ExperimentKind,
    pub metric: String,
    /// Sorted by decreasing ε.
    pub rows: Vec<ReportRow>,
    pub fit: Option<OrderFit>,
    pub threshold: Option<f64>,
    pub checks: Vec<Check>,
    /// ε values whose run failed, with the error.
    pub failures: Vec<(f64, String)>,
    pub passed: bool,
    pub build_id: String,
    pub config_hash: String,
    /// What the threshold leaves out relative to the asymptotic rate.
    pub note: String,
}

impl ConvergenceReport {
    pub fn summary_line(&self) -> String {
        let fit = match (&self.fit, self.threshold) {
            (Some(f), Some(t)) => format!(" p = {:.4} [{:.4}, {:.4}] (threshold {t})", f.p, f.band.0, f.band.1),
            (Some(f), None) => format!(" p = {:.4}", f.p),
            _ => String::new(),
        };
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        format!(
            "{} {}{}{}{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.kind,
            fit,
            if failed.is_empty() { String::new() } else { format!(" failed: {}", failed.join(", ")) },
            if self.failures.is_empty() { String::new() } else { format!(" ({} eps runs errored)", self.failures.len()) }
        )
    }

    /// CSV with a versioned comment header; every row carries its provenance.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# willmore-report v1 kind={} metric={} build={} config={}",
            self.kind, self.metric, self.build_id, self.config_hash
        );
        let extra_names: Vec<&str> = self.rows.first().map_or(Vec::new(), |r| r.extra.iter().map(|e| e.0.as_str()).collect());
        let mut head = format!("build_id,config_hash,eps,grid,dt,{}", self.metric);
        for n in &extra_names {
            head.push(',');
            head.push_str(n);
        }
        let _ = writeln!(s, "{head}");
        for r in &self.rows {
            let mut line = format!(
                "{},{},{},{},{:e},{:.12e}",
                self.build_id, self.config_hash, r.eps, r.grid, r.dt, r.value
            );
            for (_, v) in &r.extra {
                let _ = write!(line, ",{v:.12e}");
            }
            let _ = writeln!(s, "{line}");
        }
        for c in &self.checks {
            let _ = writeln!(
                s,
                "# check {} value={:.6e} {} {:.6e} {}",
                c.name,
                c.value,
                if c.upper { "<=" } else { ">=" },
                c.bound,
                if c.pass { "pass" } else { "fail" }
            );
        }
        for (e, m) in &self.failures {
            let _ = writeln!(s, "# failed eps={e}: {m}");
        }
        if let Some(f) = &self.fit {
            let _ = writeln!(s, "# fit p={:.6} intercept={:.6} band=[{:.6},{:.6}]", f.p, f.intercept, f.band.0, f.band.1);
        }
        let _ = writeln!(s, "# note {}", self.note);
        let _ = writeln!(s, "# {}", self.summary_line());
        s
    }
}

/// Write `<kind>.dat` (ε, value) and `<kind>.gp` (log-log plot with the fitted slope).
pub fn emit_plots(report: &ConvergenceReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if report.rows.is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "refusing to plot an empty report",
        )));
    }
    std::fs::create_dir_all(out_dir)?;
    let stem = report.kind.to_string();
    let dat = out_dir.join(format!("{stem}.dat"));
    let gp = out_dir.join(format!("{stem}.gp"));
    let mut d = format!("# eps {}\n", report.metric);
    for r in &report.rows {
        let _ = writeln!(d, "{} {:.12e}", r.eps, r.value);
    }
    let mut g = String::new();
    let _ = writeln!(g, "set logscale xy");
    let _ = writeln!(g, "set xlabel 'eps'");
    let _ = writeln!(g, "set ylabel '{}'", report.metric);
    let _ = writeln!(g, "set key left top");
    match &report.fit {
        Some(f) => {
            let _ = writeln!(g, "p = {:.4}", f.p);
            let _ = writeln!(g, "c = {:.6}", f.intercept);
            let _ = writeln!(g, "f(x) = exp(c) * x**p");
            let _ = writeln!(g, "set title '{stem}: slope {:.4}'", f.p);
            let _ = writeln!(
                g,
                "plot '{stem}.dat' using 1:2 with linespoints title '{}', f(x) title 'slope {:.4}'",
                report.metric, f.p
            );
        }
        None => {
            let _ = writeln!(g, "set title '{stem}'");
            let _ = writeln!(g, "plot '{stem}.dat' using 1:2 with linespoints title '{}'", report.metric);
        }
    }
    std::fs::write(&dat, d)?;
    std::fs::write(&gp, g)?;
    Ok(vec![dat, gp])
}

type RowResult = Result<ReportRow>;

/// Run the per-ε jobs on worker threads; results come back in input order.
fn per_eps<F>(eps: &[f64], job: F) -> Vec<RowResult>
where
    F: Fn(f64) -> RowResult + Sync,
{
    std::thread::scope(|sc| {
        let handles: Vec<_> = eps.iter().map(|&e| sc.spawn({
            let job = &job;
            move || job(e)
        })).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Configuration("worker panicked".into()))))
            .collect()
    })
}

/// Execute an experiment; writes CSV, plot files and a summary when `out_dir` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let mut report = match cfg.kind {
        ExperimentKind::Identities => identities(cfg)?,
        ExperimentKind::ResidualOrder => sweep(
            cfg,
            "r2_sup",
            Some(2.0),
            "k_impl=2 constructions have O(eps^3) raw residuals asymptotically; threshold 2 leaves room for grid error",
            |e| residual_row(cfg, e),
        ),
        ExperimentKind::LevelsetConvergence => sweep(
            cfg,
            "hausdorff",
            Some(1.0),
            "with d1 = 0 only O(eps) is guaranteed for the zero level; observed rates are higher",
            |e| levelset_row(cfg, e),
        ),
        ExperimentKind::DifferenceDecay => sweep(
            cfg,
            "diff_l2",
            Some(1.5),
            "the asymptotic theory gives eps^(7/2) for high-order constructions; order-2 data at desk scale targets 1.5",
            |e| difference_row(cfg, e),
        ),
        ExperimentKind::SpectralSweep => spectral_sweep(cfg)?,
    };
    report.config_hash = cfg.hash();
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.csv", cfg.kind)), report.to_csv())?;
        if !report.rows.is_empty() {
            emit_plots(&report, dir)?;
        }
        std::fs::write(dir.join(format!("{}.summary", cfg.kind)), report.summary_line() + "\n")?;
    }
    Ok(report)
}

fn empty_report(kind: ExperimentKind, metric: &str, note: &str) -> ConvergenceReport {
    ConvergenceReport {
        kind,
        metric: metric.into(),
        rows: Vec::new(),
        fit: None,
        threshold: None,
        checks: Vec::new(),
        failures: Vec::new(),
        passed: false,
        build_id: build_id(),
        config_hash: String::new(),
        note: note.into(),
    }
}

fn sweep<F>(cfg: &ExperimentConfig, metric: &str, threshold: Option<f64>, note: &str, job: F) -> ConvergenceReport
where
    F: Fn(f64) -> RowResult + Sync,
{
    let mut rep = empty_report(cfg.kind, metric, note);
    rep.threshold = threshold;
    for (e, r) in cfg.eps.iter().zip(per_eps(&cfg.eps, job)) {
        match r {
            Ok(row) => rep.rows.push(row),
            Err(err) => rep.failures.push((*e, err.to_string())),
        }
    }
    for row in &rep.rows {
        if let Some((_, v)) = row.extra.iter().find(|(n, _)| n == "energy_violations") {
            rep.checks.push(Check::at_most(&format!("energy_dissipation eps={}", row.eps), *v, 0.0));
        }
    }
    if rep.rows.len() >= 2 {
        let pairs: Vec<(f64, f64)> = rep.rows.iter().map(|r| (r.eps, r.value)).collect();
        match fit_with_band(&pairs) {
            Ok(f) => {
                if let Some(t) = threshold {
                    rep.checks.push(Check::at_least("fitted_order", f.p, t));
                }
                rep.fit = Some(f);
            }
            Err(e) => rep.failures.push((f64::NAN, e.to_string())),
        }
    } else {
        rep.failures.push((f64::NAN, "fewer than two successful eps runs".into()));
    }
    if cfg.kind == ExperimentKind::DifferenceDecay {
        let mono = rep.rows.windows(2).all(|w| w[1].value < w[0].value);
        rep.checks.push(Check::at_least("monotone_in_eps", if mono { 1.0 } else { 0.0 }, 1.0));
    }
    rep.passed = rep.failures.is_empty() && rep.checks.iter().all(|c| c.pass);
    rep
}

fn residual_row(cfg: &ExperimentConfig, eps: f64) -> RowResult {
    let (space, grid) = cfg.space_for(eps)?;
    let hier = cfg.hierarchy(space.as_ref(), 0.0)?;
    let coeffs = ExpansionCoefficients::default_coefficients()?;
    let rep = residual(&hier, &coeffs, eps, space.as_ref(), cfg.dt_probe)?;
    Ok(ReportRow {
        eps,
        value: rep.r2_sup,
        grid,
        dt: cfg.dt_probe,
        extra: vec![
            ("r2_l2".into(), rep.r2_l2),
            ("r1_sup".into(), rep.r1_sup),
            ("r1_l2".into(), rep.r1_l2),
        ],
    })
}

/// Evolve φ_a(0) to t_end; returns (space, final state, step, violations, grid label).
fn evolve(cfg: &ExperimentConfig, eps: f64) -> Result<(Box<dyn Space + Send + Sync>, PhaseFieldState, f64, usize, String)> {
    let (space, grid) = cfg.space_for(eps)?;
    let hier = cfg.hierarchy(space.as_ref(), 0.0)?;
    let coeffs = ExpansionCoefficients::default_coefficients()?;
    let a0 = build_approximate(&hier, &coeffs, eps, space.as_ref())?;
    let init = PhaseFieldState::new(space.as_ref(), a0.phi_a, eps, 0.0);
    let dt = SolverConfig::default_dt(cfg.scheme, eps, space.spacing()) * cfg.dt_factor;
    let mut sc = SolverConfig::new(eps, dt, cfg.t_end, cfg.scheme);
    sc.sample_every = usize::MAX;
    let (state, trace) = run(space.as_ref(), &sc, &init)?;
    Ok((space, state, dt, trace.violations, grid))
}

fn levelset_row(cfg: &ExperimentConfig, eps: f64) -> RowResult {
    let (r0, center) = match &cfg.interface {
        Interface::Circle { radius, center } => (*radius, *center),
        _ => return invalid("levelset_convergence needs a circle"),
    };
    let (space, state, dt, viol, grid) = evolve(cfg, eps)?;
    let exact = crate::sharp_interface::circle_exact(r0, cfg.t_end);
    let value = match cfg.space {
        SpaceKind::Radial => (space.interface_radius(&state.phi).ok_or(Error::NoInterface)? - exact).abs(),
        SpaceKind::Cartesian => {
            let n = (space.len() as f64).sqrt().round() as usize;
            let extent = space.spacing() * n as f64;
            let zl = crate::geometry::extract_zero_level(&state.phi, &GridDomain::new(extent, n)?)?;
            let curve = zl.to_curve()?;
            circle_hausdorff(&curve, center, exact)
        }
    };
    Ok(ReportRow {
        eps,
        value,
        grid,
        dt,
        extra: vec![("energy_violations".into(), viol as f64)],
    })
}

/// Hausdorff distance between a polyline and an exact circle.
pub fn circle_hausdorff(curve: &ClosedCurve, center: [f64; 2], radius: f64) -> f64 {
    let to_circle = curve
        .nodes()
        .iter()
        .map(|p| ((p[0] - center[0]).hypot(p[1] - center[1]) - radius).abs())
        .fold(0.0, f64::max);
    let m = 4096;
    let to_curve = (0..m)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            curve.project([center[0] + radius * t.cos(), center[1] + radius * t.sin()]).0.abs()
        })
        .fold(0.0, f64::max);
    to_circle.max(to_curve)
}

fn difference_row(cfg: &ExperimentConfig, eps: f64) -> RowResult {
    let (space, state, dt, viol, grid) = evolve(cfg, eps)?;
    let hier_t = cfg.hierarchy(space.as_ref(), 0.0)?.at_time(cfg.t_end)?;
    let coeffs = ExpansionCoefficients::default_coefficients()?;
    let at = build_approximate(&hier_t, &coeffs, eps, space.as_ref())?;
    let d: Vec<f64> = state.phi.iter().zip(&at.phi_a).map(|(a, b)| a - b).collect();
    Ok(ReportRow {
        eps,
        value: l2_norm(space.as_ref(), &d),
        grid,
        dt,
        extra: vec![("energy_violations".into(), viol as f64)],
    })
}

/// Fitted spectral constants: Ĉ = |λ_min| and C̃ = ½(λ_min + Ĉ)‖v‖²/K(v) at the
/// coarsest ε, frozen for the finer ones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralConstants {
    pub c_hat: f64,
    pub c_tilde: f64,
}

impl SpectralConstants {
    /// Fit from the minimising direction of one setup.
    pub fn fit(setup: &SpectralSetup, n_lanczos: usize) -> Result<Self> {
        let p = setup.min_eig(n_lanczos)?;
        let c_hat = p.lambda_min.abs();
        let r = setup.report(&p, c_hat)?;
        Ok(SpectralConstants {
            c_hat,
            c_tilde: 0.5 * r.ratio,
        })
    }
}

fn spectral_sweep(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let radius = match &cfg.interface {
        Interface::Circle { radius, center } if *center == [0.0, 0.0] => *radius,
        _ => return Err(Error::Configuration("spectral_sweep needs a circle centred at the origin".into())),
    };
    let mut rep = empty_report(
        cfg.kind,
        "lambda_min",
        "constants fitted once at the coarsest eps and frozen; uniformity in eps is checked, not proved",
    );
    let results = per_eps(&cfg.eps, |e| {
        let s = SpectralSetup::circle(radius, e, 8.0, cfg.n_theta)?;
        let p = s.min_eig(cfg.n_lanczos)?;
        let r = s.report(&p, 0.0)?;
        let l2: f64 = p.eigvec.iter().zip(s.space.weights()).map(|(v, w)| w * v * v).sum();
        Ok(ReportRow {
            eps: e,
            value: p.lambda_min,
            grid: format!("polar:{}x{}", s.space.grid.n_r, s.space.grid.n_theta),
            dt: 0.0,
            extra: vec![
                ("q_value".into(), r.q_value),
                ("k_value".into(), r.k_value),
                ("l2_sq".into(), l2),
                ("I1".into(), r.i1),
                ("I2".into(), r.i2),
                ("I3".into(), r.i3),
                ("orthogonality_defect".into(), r.orthogonality_defect),
                ("eig_residual".into(), p.residual),
            ],
        })
    });
    for (e, r) in cfg.eps.iter().zip(results) {
        match r {
            Ok(row) => rep.rows.push(row),
            Err(err) => rep.failures.push((*e, err.to_string())),
        }
    }
    if let Some(first) = rep.rows.first() {
        let ex = |r: &ReportRow, n: &str| r.extra.iter().find(|e| e.0 == n).map_or(f64::NAN, |e| e.1);
        let c_hat = first.value.abs();
        let c_tilde = 0.5 * (ex(first, "q_value") + c_hat) / ex(first, "k_value");
        rep.checks.push(Check::at_least("C_tilde_positive", c_tilde, f64::MIN_POSITIVE));
        for r in rep.rows.iter().skip(1) {
            rep.checks.push(Check::at_least(&format!("lambda_min eps={}", r.eps), r.value, -c_hat));
            let ratio = (ex(r, "q_value") + c_hat * ex(r, "l2_sq")) / ex(r, "k_value");
            rep.checks.push(Check::at_least(&format!("ratio eps={}", r.eps), ratio, c_tilde));
        }
        for r in &rep.rows {
            rep.checks.push(Check::at_most(
                &format!("orthogonality eps={}", r.eps),
                ex(r, "orthogonality_defect"),
                1e-10,
            ));
        }
    }
    rep.passed = rep.failures.is_empty() && !rep.rows.is_empty() && rep.checks.iter().all(|c| c.pass);
    Ok(rep)
}

fn identities(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let mut rep = empty_report(cfg.kind, "identity", "exact identities; tolerances are rounding-level");
    rep.checks.push(Check::at_most("cancellation_integral", cancellation_integral().abs(), 1e-10));
    rep.checks.push(Check::at_most(
        "sigma_closed_form",
        (sigma_constant() - 2.0 * 2f64.sqrt() / 3.0).abs(),
        1e-10,
    ));
    let grid = Profile1D::default_grid();
    let (_, g2, _) = gamma_profiles(&grid.z_nodes)?;
    let dev = g2
        .z_nodes
        .iter()
        .zip(&g2.values)
        .fold(0.0f64, |m, (z, v)| m.max((v + 0.5 * z * z).abs()));
    rep.checks.push(Check::at_most("gamma2_is_minus_half_z_squared", dev, 1e-10));
    let eig = eigen_1d(0.05, 1.0, 4000)?;
    rep.checks.push(Check::at_most("eigen_lambda1", eig.lambda1.abs(), 1e-8));
    rep.checks.push(Check::at_most("eigen_kernel_defect", eig.kernel_defect(), 1e-6));
    let eps = cfg.eps.first().copied().unwrap_or(0.1).min(0.1);
    let radius = cfg.radius();
    let s = SpectralSetup::circle(radius, eps, 8.0, 32)?;
    let f = random_smooth_field(&s.space, radius, s.chart.delta, cfg.seed, 0);
    let d = s.decompose(&f)?;
    rep.checks.push(Check::at_most("orthogonality_defect", d.orthogonality_defect(&s.space, s.psi()), 1e-10));
    rep.passed = rep.checks.iter().all(|c| c.pass);
    Ok(rep)
}
