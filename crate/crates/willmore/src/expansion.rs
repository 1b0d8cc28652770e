//! Matched-asymptotic approximate solutions (φ_a, μ_a).
//!
//! Inner terms, in z = d/ε with d the signed distance of Γ_t:
//!
//! * φ̃⁰ = θ, φ̃¹ = 0, φ̃² = D⁰θ'α, φ̃³ = Σ cᵢUᵢ (L⁻¹ of the projected pieces);
//! * μ̃⁰ = −Δd θ', μ̃¹ = D⁰zθ' − Δd¹θ', μ̃² = ΔdD⁰θ'γ₁ + ∂_rD⁰θ'γ₂ + μ₂θ' + χ⁰dθ'γ₃;
//!
//! with D⁰ = ∂_rΔd + ½(Δd)², χ⁰ = (σ/σ̄)·G₀/d and G₀ = ∂_td + Δ²d − ΔdD⁰ − ∂_rD⁰.
//! Every x-coefficient is a closed form in the principal curvatures at the foot
//! point and the distance r, so no curvilinear grid is stored. The inner and outer
//! (±1, 0) expansions are glued with the cutoff ζ.

use crate::error::{invalid, Error, Result};
use crate::geometry::{laplace_beltrami, arclength_derivative, signed_distance, Interface, TubularChart};
use crate::linalg::ksum;
use crate::pde::Space;
use crate::profiles::{fp, fpp, theta_all, ProfileTables};
use crate::sharp_interface::{circle_exact, willmore_velocity};

/// Smooth even cutoff: 1 on |r| ≤ δ/2, 0 on |r| ≥ δ.
pub fn cutoff_zeta(r: f64, delta: f64) -> f64 {
    assert!(delta > 0.0, "cutoff width must be positive");
    let x = (delta - r.abs()) / (0.5 * delta);
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let h = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
        let a = h(x);
        a / (a + h(1.0 - x))
    }
}

/// How Γ_t moves, which fixes ∂_t d⁰ = −V.
#[derive(Clone, Debug)]
pub enum Motion {
    /// The Willmore law V = Δ_ΓH + H|A|² − H³/2 (closed form on circles and spheres).
    Willmore,
    /// Γ_t is frozen.
    Stationary,
    /// Prescribed normal velocity per curve node.
    Prescribed(Vec<f64>),
}

#[derive(Clone, Debug)]
struct CurveData {
    kappa: Vec<f64>,
    kappa_s: Vec<f64>,
    kappa_ss: Vec<f64>,
    velocity: Vec<f64>,
}

/// d⁰ (through the chart), a radial d¹ and the truncation order.
#[derive(Clone, Debug)]
pub struct DistanceHierarchy {
    pub chart: TubularChart,
    pub time: f64,
    pub motion: Motion,
    /// Truncation order, 2 or 3.
    pub k_impl: usize,
    /// d¹, constant along Γ and in the normal direction (radial mode); 0 by default.
    pub d1: f64,
    /// Half-width of the band where χ⁰ blends towards its on-interface branch.
    pub chi_band: f64,
    curve: Option<CurveData>,
}

impl DistanceHierarchy {
    pub fn new(chart: TubularChart, time: f64, k_impl: usize, motion: Motion) -> Result<Self> {
        if !(k_impl == 2 || k_impl == 3) {
            return invalid(format!("k_impl = {k_impl} not in {{2, 3}}"));
        }
        let curve = match &chart.interface {
            Interface::Curve(c) => {
                let kappa = c.curvature();
                let kappa_s = arclength_derivative(c, &kappa);
                let kappa_ss = laplace_beltrami(c, &kappa);
                let velocity = match &motion {
                    Motion::Willmore => willmore_velocity(c)?,
                    Motion::Stationary => vec![0.0; c.len()],
                    Motion::Prescribed(v) => {
                        if v.len() != c.len() {
                            return invalid("prescribed velocity length differs from node count");
                        }
                        v.clone()
                    }
                };
                Some(CurveData {
                    kappa,
                    kappa_s,
                    kappa_ss,
                    velocity,
                })
            }
            _ => {
                if let Motion::Prescribed(_) = motion {
                    return invalid("prescribed node velocities need a polyline interface");
                }
                None
            }
        };
        Ok(DistanceHierarchy {
            chart,
            time,
            motion,
            k_impl,
            d1: 0.0,
            chi_band: 0.0,
            curve,
        })
    }

    /// Hierarchy for a circle or sphere moving by the Willmore law.
    pub fn willmore(interface: Interface, delta: f64, time: f64, k_impl: usize) -> Result<Self> {
        Self::new(crate::geometry::build_chart(interface, delta)?, time, k_impl, Motion::Willmore)
    }

    pub fn with_chi_band(mut self, band: f64) -> Self {
        self.chi_band = band;
        self
    }

    pub fn with_d1(mut self, d1: f64) -> Self {
        self.d1 = d1;
        self
    }

    /// The same hierarchy at time t (closed-form motion only).
    pub fn at_time(&self, t: f64) -> Result<Self> {
        let interface = match (&self.chart.interface, &self.motion) {
            (_, Motion::Stationary) => self.chart.interface.clone(),
            (Interface::Circle { center, radius }, Motion::Willmore) => {
                let r = circle_exact(*radius, t - self.time);
                if !r.is_finite() || r <= 0.0 {
                    return invalid("circle law undefined at the requested time");
                }
                Interface::Circle {
                    center: *center,
                    radius: r,
                }
            }
            (Interface::Sphere(_), Motion::Willmore) => self.chart.interface.clone(),
            _ => {
                return invalid("no second time level: polyline motion needs front-tracker snapshots");
            }
        };
        let chart = crate::geometry::build_chart(interface, self.chart.delta)?;
        let mut h = Self::new(chart, t, self.k_impl, self.motion.clone())?;
        h.d1 = self.d1;
        h.chi_band = self.chi_band;
        Ok(h)
    }

    /// Local data at x: (r, s, principal curvatures, κ_s, κ_ss, V).
    fn local(&self, x: &[f64]) -> Local {
        let (r, _) = signed_distance(&self.chart, x);
        match (&self.chart.interface, &self.curve) {
            (Interface::Curve(c), Some(cd)) => {
                let s = c.project_smooth([x[0], x[1]]).1;
                Local {
                    r,
                    kappas: vec![c.interp_at(&cd.kappa, s)],
                    kappa_s: c.interp_at(&cd.kappa_s, s),
                    kappa_ss: c.interp_at(&cd.kappa_ss, s),
                    velocity: c.interp_at(&cd.velocity, s),
                }
            }
            (iface, _) => {
                let kappas = self.chart.kappas(0.0);
                let velocity = match (&self.motion, iface) {
                    (Motion::Stationary, _) => 0.0,
                    (_, Interface::Circle { radius, .. }) => 0.5 / radius.powi(3),
                    // V = H|A|² − H³/2 = 0 on spheres
                    _ => 0.0,
                };
                Local {
                    r,
                    kappas,
                    kappa_s: 0.0,
                    kappa_ss: 0.0,
                    velocity,
                }
            }
        }
    }

    /// ∂_t d⁰ at x.
    pub fn dt_d0(&self, x: &[f64]) -> f64 {
        -self.local(x).velocity
    }

    /// |∇d^{[k]}| − 1; d¹ is constant so the defect is that of d⁰, zero in the tube.
    pub fn eikonal_defect(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Debug)]
struct Local {
    r: f64,
    kappas: Vec<f64>,
    kappa_s: f64,
    kappa_ss: f64,
    velocity: f64,
}

/// Closed-form normal-coordinate quantities at distance r.
#[derive(Clone, Copy, Debug)]
struct Radial {
    dd: f64,
    d0: f64,
    dr_d0: f64,
    g0: f64,
}

impl Local {
    fn at(&self, r: f64) -> Radial {
        let (mut dd, mut dr_dd, mut drr_dd) = (0.0, 0.0, 0.0);
        for k in &self.kappas {
            let a = 1.0 + r * k;
            dd += k / a;
            dr_dd -= k * k / (a * a);
            drr_dd += 2.0 * k * k * k / (a * a * a);
        }
        let d0 = dr_dd + 0.5 * dd * dd;
        let dr_d0 = drr_dd + dd * dr_dd;
        // tangential Laplacian of Δd on the parallel curve (planar curves only)
        let tang = if self.kappas.len() == 1 {
            let a = 1.0 + r * self.kappas[0];
            self.kappa_ss / a.powi(4) - 3.0 * r * self.kappa_s * self.kappa_s / a.powi(5)
        } else {
            0.0
        };
        // Δ²d = ∂_rrΔd + Δd∂_rΔd + Δ_{Γ_r}Δd and ∂_rD⁰ = ∂_rrΔd + Δd∂_rΔd
        let g0 = -self.velocity + tang - dd * d0;
        Radial {
            dd,
            d0,
            dr_d0,
            g0,
        }
    }

    /// ∂_rG₀ and ∂_rrG₀ at r = 0 (five-point differences).
    fn g0_derivatives(&self) -> (f64, f64) {
        let kmax = self.kappas.iter().fold(1.0f64, |m, k| m.max(k.abs()));
        let eta = 1e-3 / kmax;
        let g: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|m| self.at(m * eta).g0).collect();
        let d1 = (g[0] - 8.0 * g[1] + 8.0 * g[3] - g[4]) / (12.0 * eta);
        let d2 = (-g[0] + 16.0 * g[1] - 30.0 * g[2] + 16.0 * g[3] - g[4]) / (12.0 * eta * eta);
        (d1, d2)
    }
}

/// All x-dependent coefficients at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointCoefficients {
    pub r: f64,
    pub in_tube: bool,
    pub laplacian_d: f64,
    pub d0: f64,
    pub dr_d0: f64,
    pub g0: f64,
    pub chi0: f64,
    pub mu2: f64,
}

/// Profile tables plus the coefficient formulas.
#[derive(Clone, Debug)]
pub struct ExpansionCoefficients {
    pub tables: ProfileTables,
    /// ∫θ'γ₁θ'', ∫θ'γ₂θ'', ∫θ'θ'', ∫θ'γ₃θ'' — the Ξ⁰ integrals (zero by parity).
    pub xi_integrals: [f64; 4],
}

impl ExpansionCoefficients {
    pub fn new(tables: ProfileTables) -> Self {
        let z = &tables.alpha.z_nodes;
        let prod = |g: Option<&crate::profiles::Profile1D>| -> f64 {
            let vals: Vec<f64> = z
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let th = theta_all(t);
                    th[1] * th[2] * g.map_or(1.0, |p| p.values[i])
                })
                .collect();
            tables.alpha.with_values(vals).integrate()
        };
        let xi_integrals = [
            prod(Some(&tables.gamma1)),
            prod(Some(&tables.gamma2)),
            prod(None),
            prod(Some(&tables.gamma3)),
        ];
        log::debug!("Xi0 profile integrals {xi_integrals:?}");
        ExpansionCoefficients {
            tables,
            xi_integrals,
        }
    }

    pub fn default_coefficients() -> Result<Self> {
        Ok(Self::new(ProfileTables::default_tables()?))
    }

    fn sigma_ratio(&self) -> f64 {
        self.tables.sigma / self.tables.sigma_bar
    }

    fn chi0_local(&self, hier: &DistanceHierarchy, loc: &Local, rad: &Radial) -> f64 {
        let (g1, g2) = loc.g0_derivatives();
        let grad = g1 + 0.5 * g2 * loc.r;
        let band = hier.chi_band;
        let v = if loc.r == 0.0 {
            g1
        } else if loc.r.abs() >= band {
            rad.g0 / loc.r
        } else {
            let w = loc.r.abs() / band;
            // w·G₀/r = G₀/band keeps the quotient branch free of cancellation
            (1.0 - w) * grad + if band > 0.0 { rad.g0 * loc.r.signum() / band } else { 0.0 }
        };
        self.sigma_ratio() * v
    }

    fn mu2_local(&self, rad: &Radial, chi0: f64, r: f64) -> f64 {
        let t = &self.tables;
        -((rad.dr_d0 + 0.5 * rad.dd * rad.d0) * t.i_tau
            + rad.dd * rad.d0 * t.g_int[0]
            + rad.dr_d0 * t.g_int[1]
            + chi0 * r * t.g_int[2])
            / t.sigma
    }

    /// Coefficients at x.
    pub fn at(&self, hier: &DistanceHierarchy, x: &[f64]) -> PointCoefficients {
        let loc = hier.local(x);
        let rad = loc.at(loc.r);
        let chi0 = self.chi0_local(hier, &loc, &rad);
        PointCoefficients {
            r: loc.r,
            in_tube: loc.r.abs() <= hier.chart.delta,
            laplacian_d: rad.dd,
            d0: rad.d0,
            dr_d0: rad.dr_d0,
            g0: rad.g0,
            chi0,
            mu2: self.mu2_local(&rad, chi0, loc.r),
        }
    }

    /// D⁽ⁱ⁾ at x. D¹ vanishes identically for the radial (constant) d¹.
    pub fn d_coeff(&self, hier: &DistanceHierarchy, i: usize, x: &[f64]) -> Result<f64> {
        match i {
            0 => Ok(self.at(hier, x).d0),
            1 => Ok(0.0),
            _ => invalid(format!("D coefficient index {i} not in {{0, 1}}")),
        }
    }

    pub fn chi0(&self, hier: &DistanceHierarchy, x: &[f64]) -> f64 {
        self.at(hier, x).chi0
    }

    /// μ₂ at x (with Δd² = 0).
    pub fn mu2(&self, hier: &DistanceHierarchy, x: &[f64]) -> f64 {
        self.at(hier, x).mu2
    }

    /// μ₂ on Γ at the foot point of x.
    pub fn mu2_on_interface(&self, hier: &DistanceHierarchy, x: &[f64]) -> f64 {
        let mut loc = hier.local(x);
        loc.r = 0.0;
        let rad = loc.at(0.0);
        let chi0 = self.chi0_local(hier, &loc, &rad);
        self.mu2_local(&rad, chi0, 0.0)
    }

    /// χ⁰ on Γ by the gradient branch at the foot point of x.
    pub fn chi0_gradient_branch(&self, hier: &DistanceHierarchy, x: &[f64]) -> f64 {
        let loc = hier.local(x);
        self.sigma_ratio() * loc.g0_derivatives().0
    }

    /// χ⁰ by the quotient branch G₀/d at x.
    pub fn chi0_quotient_branch(&self, hier: &DistanceHierarchy, x: &[f64]) -> f64 {
        let loc = hier.local(x);
        self.sigma_ratio() * loc.at(loc.r).g0 / loc.r
    }

    /// (φ̃⁽ⁱ⁾, μ̃⁽ⁱ⁾) at (z, x). μ̃³ is not constructed and returned as 0.
    pub fn inner_term(&self, hier: &DistanceHierarchy, order: usize, z: f64, x: &[f64]) -> Result<(f64, f64)> {
        let c = self.at(hier, x);
        self.inner_from(&c, order, z)
    }

    fn inner_from(&self, c: &PointCoefficients, order: usize, z: f64) -> Result<(f64, f64)> {
        let th = theta_all(z);
        let t = &self.tables;
        Ok(match order {
            0 => (th[0], -c.laplacian_d * th[1]),
            1 => (0.0, c.d0 * z * th[1]),
            2 => {
                let phi = c.d0 * th[1] * t.alpha.eval(z);
                let mu = th[1]
                    * (c.laplacian_d * c.d0 * t.gamma1.eval(z)
                        + c.dr_d0 * t.gamma2.eval(z)
                        + c.mu2
                        + c.chi0 * c.r * t.gamma3.eval(z));
                (phi, mu)
            }
            3 => {
                let w = [
                    2.0 * c.dr_d0 + c.d0 * c.laplacian_d,
                    c.laplacian_d * c.d0,
                    c.dr_d0,
                    c.chi0 * c.r,
                ];
                let phi = w.iter().zip(&t.phi3_pieces).map(|(w, p)| w * p.eval(z)).sum();
                (phi, 0.0)
            }
            _ => return invalid(format!("inner term order {order} not in 0..=3")),
        })
    }

    /// Ξ⁰ on Γ at the foot point of x:
    /// −(2/σ)[∂_r∫Ψ̃⁰θ'' + Δd∫Ψ̃⁰θ''], with Ψ̃⁰ the d¹-independent part of μ̃².
    pub fn xi0(&self, hier: &DistanceHierarchy, x: &[f64]) -> f64 {
        let loc = hier.local(x);
        let t = &self.tables;
        let j = &self.xi_integrals;
        let psi = |r: f64| -> f64 {
            let mut l = loc.clone();
            l.r = r;
            let rad = l.at(r);
            let chi0 = self.chi0_local(hier, &l, &rad);
            let mu2 = self.mu2_local(&rad, chi0, r);
            rad.dd * rad.d0 * j[0] + rad.dr_d0 * j[1] + mu2 * j[2] + chi0 * r * j[3]
        };
        let eta = 1e-4;
        let dpsi = (psi(eta) - psi(-eta)) / (2.0 * eta);
        let dd = loc.at(0.0).dd;
        -2.0 / t.sigma * (dpsi + dd * psi(0.0))
    }
}

/// Radial d¹ mode: on circles/spheres d¹ is constant on Γ and G₁d¹ = ∂_td¹, so the
/// equation G₁d¹ = (σ̄/σ)χ⁰d¹ + Ξ⁰ becomes c' = ∂_rG₀|_Γ c + Ξ⁰. Integrated with RK4;
/// returns (t, d¹) samples including the start.
pub fn evolve_d1_radial(
    coeffs: &ExpansionCoefficients,
    hier: &DistanceHierarchy,
    d1_0: f64,
    t_end: f64,
    steps: usize,
) -> Result<Vec<(f64, f64)>> {
    if steps == 0 || !(t_end > hier.time) {
        return invalid("d1 evolution needs t_end > t0 and steps > 0");
    }
    if matches!(hier.chart.interface, Interface::Curve(_)) {
        return invalid("radial d1 mode applies to circles and spheres only");
    }
    let probe = |t: f64| -> Result<[f64; 2]> {
        let h = hier.at_time(t)?;
        let x = h.chart.embed(0.0, 0.0);
        let loc = h.local(&x);
        Ok([loc.g0_derivatives().0, coeffs.xi0(&h, &x)])
    };
    let rhs = |t: f64, c: f64| -> Result<f64> {
        let [a, b] = probe(t)?;
        Ok(a * c + b)
    };
    let dt = (t_end - hier.time) / steps as f64;
    let mut t = hier.time;
    let mut c = d1_0;
    let mut out = vec![(t, c)];
    for _ in 0..steps {
        let k1 = rhs(t, c)?;
        let k2 = rhs(t + 0.5 * dt, c + 0.5 * dt * k1)?;
        let k3 = rhs(t + 0.5 * dt, c + 0.5 * dt * k2)?;
        let k4 = rhs(t + dt, c + dt * k3)?;
        c += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += dt;
        if !c.is_finite() {
            return Err(Error::Blowup {
                time: t,
                msg: "d1 left the finite range".into(),
            });
        }
        out.push((t, c));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ApproximateSolution {
    pub phi_a: Vec<f64>,
    pub mu_a: Vec<f64>,
    pub epsilon: f64,
    pub k_impl: usize,
    pub time: f64,
}

/// Glue the inner expansion (through order k_impl) to the outer states on a space.
pub fn build_approximate(
    hier: &DistanceHierarchy,
    coeffs: &ExpansionCoefficients,
    epsilon: f64,
    space: &dyn Space,
) -> Result<ApproximateSolution> {
    let delta = hier.chart.delta;
    if epsilon > delta / 8.0 {
        return Err(Error::Configuration(format!(
            "scale separation violated: eps = {epsilon} > delta/8 = {}",
            delta / 8.0
        )));
    }
    if space.spacing() > epsilon / 4.0 * (1.0 + 1e-12) {
        return Err(Error::Configuration(format!(
            "grid spacing {} does not resolve eps/4 = {}",
            space.spacing(),
            epsilon / 4.0
        )));
    }
    let n = space.len();
    let mut phi_a = vec![0.0; n];
    let mut mu_a = vec![0.0; n];
    for i in 0..n {
        let x = space.point(i);
        let (p, m) = approximate_at(hier, coeffs, epsilon, &x)?;
        phi_a[i] = p;
        mu_a[i] = m;
    }
    Ok(ApproximateSolution {
        phi_a,
        mu_a,
        epsilon,
        k_impl: hier.k_impl,
        time: hier.time,
    })
}

/// (φ_a, μ_a) at one point.
pub fn approximate_at(
    hier: &DistanceHierarchy,
    coeffs: &ExpansionCoefficients,
    epsilon: f64,
    x: &[f64],
) -> Result<(f64, f64)> {
    let delta = hier.chart.delta;
    let (r, _) = signed_distance(&hier.chart, x);
    let outer = if r >= 0.0 { 1.0 } else { -1.0 };
    if r.abs() >= delta {
        return Ok((outer, 0.0));
    }
    let c = coeffs.at(hier, x);
    let z = (r + epsilon * hier.d1) / epsilon;
    let (mut phi, mut mu) = (0.0, 0.0);
    let mut e = 1.0;
    for order in 0..=hier.k_impl {
        let (p, m) = coeffs.inner_from(&c, order, z)?;
        phi += e * p;
        // μ̃³ is not part of the construction
        if order <= 2 {
            mu += e * m;
        }
        e *= epsilon;
    }
    let zeta = cutoff_zeta(r, delta);
    Ok((phi + (1.0 - zeta) * (outer - phi), zeta * mu))
}

/// Raw residuals of the approximate system and their norms.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    /// ε³∂_tφ_a − ε²Δμ_a + f''(φ_a)μ_a
    pub r1: Vec<f64>,
    /// εμ_a + ε²Δφ_a − f'(φ_a)
    pub r2: Vec<f64>,
    pub r1_sup: f64,
    pub r1_l2: f64,
    pub r2_sup: f64,
    pub r2_l2: f64,
    pub epsilon: f64,
    pub k_impl: usize,
}

impl ResidualReport {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:e},{:e},{:e},{:e}",
            self.epsilon, self.k_impl, self.r1_sup, self.r1_l2, self.r2_sup, self.r2_l2
        )
    }
}

fn norms(space: &dyn Space, v: &[f64]) -> (f64, f64) {
    let sup = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let l2 = ksum(v.iter().zip(space.weights()).map(|(x, w)| w * x * x)).sqrt();
    (sup, l2)
}

/// Residuals of `approx` given its neighbours at t ∓ dt_probe (central ∂_t).
pub fn residual_from(
    space: &dyn Space,
    before: &ApproximateSolution,
    approx: &ApproximateSolution,
    after: &ApproximateSolution,
    dt_probe: f64,
) -> Result<ResidualReport> {
    if !(dt_probe > 0.0) {
        return invalid("dt_probe must be positive");
    }
    let eps = approx.epsilon;
    let lphi = space.laplacian(&approx.phi_a);
    let lmu = space.laplacian(&approx.mu_a);
    let n = space.len();
    let mut r1 = vec![0.0; n];
    let mut r2 = vec![0.0; n];
    for i in 0..n {
        let u = approx.phi_a[i];
        let m = approx.mu_a[i];
        let dphi = (after.phi_a[i] - before.phi_a[i]) / (2.0 * dt_probe);
        r1[i] = eps.powi(3) * dphi - eps * eps * lmu[i] + fpp(u) * m;
        r2[i] = eps * m + eps * eps * lphi[i] - fp(u);
    }
    let (r1_sup, r1_l2) = norms(space, &r1);
    let (r2_sup, r2_l2) = norms(space, &r2);
    Ok(ResidualReport {
        r1,
        r2,
        r1_sup,
        r1_l2,
        r2_sup,
        r2_l2,
        epsilon: eps,
        k_impl: approx.k_impl,
    })
}

/// Build at t and t ± dt_probe and measure the residuals.
pub fn residual(
    hier: &DistanceHierarchy,
    coeffs: &ExpansionCoefficients,
    epsilon: f64,
    space: &dyn Space,
    dt_probe: f64,
) -> Result<ResidualReport> {
    let before = build_approximate(&hier.at_time(hier.time - dt_probe)?, coeffs, epsilon, space)?;
    let now = build_approximate(hier, coeffs, epsilon, space)?;
    let after = build_approximate(&hier.at_time(hier.time + dt_probe)?, coeffs, epsilon, space)?;
    residual_from(space, &before, &now, &after, dt_probe)
}
