//! Reference motion of the limiting interface: normal velocity
//! V = Δ_Γ H + H|A|² − H³/2 (outward positive), the exact circle law and a
//! front tracker for closed planar curves.

use crate::error::{invalid, Error, Result};
use crate::geometry::{
    arclength_derivative, laplace_beltrami, ClosedCurve, Interface, Point2, RadialSurface,
    TubularChart,
};
use rustfft::{num_complex::Complex64, FftPlanner};

/// A curve at a time.
#[derive(Clone, Debug)]
pub struct WillmoreState {
    pub curve: ClosedCurve,
    pub time: f64,
}

impl WillmoreState {
    pub fn new(curve: ClosedCurve) -> Self {
        WillmoreState { curve, time: 0.0 }
    }
}

/// Normal velocity V = κ_ss + κ³/2 per node.
pub fn willmore_velocity(curve: &ClosedCurve) -> Result<Vec<f64>> {
    if curve.segment_lengths().iter().any(|&l| l <= 0.0) {
        return Err(Error::Geometry("repeated nodes".into()));
    }
    let k = curve.curvature();
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::Geometry("curvature not computable".into()));
    }
    let kss = laplace_beltrami(curve, &k);
    Ok(k.iter().zip(&kss).map(|(k, kss)| kss + 0.5 * k * k * k).collect())
}

/// V for a sphere: H|A|² − H³/2 with H = 2/R, |A|² = 2/R² (the surface Laplacian of
/// a constant H vanishes).
pub fn willmore_velocity_sphere(s: &RadialSurface) -> f64 {
    let h = 2.0 / s.radius;
    let a2 = 2.0 / (s.radius * s.radius);
    h * a2 - 0.5 * h * h * h
}

/// Radius of the circle moving by V = 1/(2R³).
pub fn circle_exact(r0: f64, t: f64) -> f64 {
    assert!(r0 > 0.0, "initial radius must be positive");
    (r0.powi(4) + 2.0 * t).powf(0.25)
}

/// ½∫κ² dℓ with node quadrature.
pub fn bending_energy(curve: &ClosedCurve) -> f64 {
    let k = curve.curvature();
    0.5 * k.iter().zip(curve.node_weights()).map(|(k, w)| k * k * w).sum::<f64>()
}

/// Default semi-implicit step h²/4 for the mean node spacing.
pub fn default_dt(curve: &ClosedCurve) -> f64 {
    let h = curve.total_length() / curve.len() as f64;
    0.25 * h * h
}

// Periodic (I + c D⁴) solves on uniform spacing via FFT.
struct Circulant {
    n: usize,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
    symbol: Vec<f64>,
}

impl Circulant {
    fn new(n: usize, h: f64) -> Self {
        let mut p = FftPlanner::new();
        let symbol = (0..n)
            .map(|k| {
                let s = 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos();
                s * s / h.powi(4)
            })
            .collect();
        Circulant {
            n,
            fwd: p.plan_fft_forward(n),
            inv: p.plan_fft_inverse(n),
            symbol,
        }
    }

    fn d4(&self, v: &[f64]) -> Vec<f64> {
        self.apply(v, |s| s)
    }

    fn solve(&self, c: f64, v: &[f64]) -> Vec<f64> {
        self.apply(v, |s| 1.0 / (1.0 + c * s))
    }

    fn apply(&self, v: &[f64], g: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut b: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut b);
        for (bk, s) in b.iter_mut().zip(&self.symbol) {
            *bk *= g(*s);
        }
        self.inv.process(&mut b);
        b.iter().map(|c| c.re / self.n as f64).collect()
    }
}

fn normal_velocity_field(curve: &ClosedCurve) -> Result<Vec<Point2>> {
    let v = willmore_velocity(curve)?;
    Ok(curve
        .normals()
        .iter()
        .zip(&v)
        .map(|(n, v)| [v * n[0], v * n[1]])
        .collect())
}

fn split(p: &[Point2]) -> (Vec<f64>, Vec<f64>) {
    (p.iter().map(|q| q[0]).collect(), p.iter().map(|q| q[1]).collect())
}

fn join(x: &[f64], y: &[f64]) -> Vec<Point2> {
    x.iter().zip(y).map(|(a, b)| [*a, *b]).collect()
}

/// One ARS(2,2,2) step of X_t = V n, with −D⁴X implicit and (V n + D⁴X) explicit.
fn ars_step(curve: &ClosedCurve, dt: f64) -> Result<ClosedCurve> {
    const G: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
    let d = 1.0 - 1.0 / (2.0 * G);
    let n = curve.len();
    let op = Circulant::new(n, curve.total_length() / n as f64);
    let explicit = |c: &ClosedCurve| -> Result<(Vec<f64>, Vec<f64>)> {
        let (vx, vy) = split(&normal_velocity_field(c)?);
        let (x, y) = split(c.nodes());
        let (dx, dy) = (op.d4(&x), op.d4(&y));
        Ok((
            vx.iter().zip(&dx).map(|(a, b)| a + b).collect(),
            vy.iter().zip(&dy).map(|(a, b)| a + b).collect(),
        ))
    };
    let (x0, y0) = split(curve.nodes());
    let (e1x, e1y) = explicit(curve)?;
    let rhs = |u0: &[f64], e: &[f64]| -> Vec<f64> {
        u0.iter().zip(e).map(|(u, e)| u + G * dt * e).collect::<Vec<_>>()
    };
    let x2 = op.solve(G * dt, &rhs(&x0, &e1x));
    let y2 = op.solve(G * dt, &rhs(&y0, &e1y));
    let c2 = ClosedCurve::from_nodes_unchecked(join(&x2, &y2));
    let (e2x, e2y) = explicit(&c2)?;
    let (l2x, l2y) = (op.d4(&x2), op.d4(&y2));
    let stage3 = |u0: &[f64], e1: &[f64], e2: &[f64], l2: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| u0[i] + dt * (d * e1[i] + (1.0 - d) * e2[i]) - (1.0 - G) * dt * l2[i])
            .collect()
    };
    let x3 = op.solve(G * dt, &stage3(&x0, &e1x, &e2x, &l2x));
    let y3 = op.solve(G * dt, &stage3(&y0, &e1y, &e2y, &l2y));
    Ok(ClosedCurve::from_nodes_unchecked(join(&x3, &y3)))
}

/// Advance `steps` steps of size `dt`, redistributing nodes to uniform arclength
/// after every step. Stops with a topology error on self-intersection and a blow-up
/// error (carrying the last stable time) on non-finite nodes.
pub fn evolve_front(state: &WillmoreState, dt: f64, steps: usize) -> Result<WillmoreState> {
    evolve_front_with(state, dt, steps, |_| {})
}

/// As [`evolve_front`], calling `observe` after every step.
pub fn evolve_front_with(
    state: &WillmoreState,
    dt: f64,
    steps: usize,
    mut observe: impl FnMut(&WillmoreState),
) -> Result<WillmoreState> {
    if !(dt > 0.0) {
        return invalid("dt must be positive");
    }
    let n = state.curve.len();
    let mut cur = state.clone();
    for _ in 0..steps {
        let next = ars_step(&cur.curve, dt)?;
        if next.nodes().iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Blowup {
                time: cur.time,
                msg: "non-finite node positions".into(),
            });
        }
        if !next.is_simple() {
            return Err(Error::Topology(format!(
                "self-intersection after t = {}",
                cur.time
            )));
        }
        let curve = next.redistribute(n);
        let seg = curve.segment_lengths();
        let mean = curve.total_length() / n as f64;
        if seg.iter().any(|&s| s > 3.0 * mean || s < mean / 3.0) {
            return Err(Error::Blowup {
                time: cur.time,
                msg: "node spacing left the factor-3 band".into(),
            });
        }
        cur = WillmoreState {
            curve,
            time: cur.time + dt,
        };
        observe(&cur);
    }
    Ok(cur)
}

/// Residual of ∂_t d + Δ²d − Δd D⁰ − ∇d·∇D⁰ on the interface at the middle entry of
/// `series` (time, interface), with D⁰ = ∇Δd·∇d + ½(Δd)². The time derivative is the
/// three-point (non-uniform) difference of the signed distance; spatial terms are
/// closed forms in the principal curvatures. Returns one value per sample point:
/// 64 angles for circles, 16 polar angles for spheres, the nodes for curves.
pub fn distance_law_residual(series: &[(f64, Interface)]) -> Result<Vec<f64>> {
    if series.len() < 3 {
        return invalid("distance law residual needs at least 3 time levels");
    }
    let m = series.len() / 2;
    let (t0, t1, t2) = (series[m - 1].0, series[m].0, series[m + 1].0);
    if !(t0 < t1 && t1 < t2) {
        return invalid("time levels must increase");
    }
    let charts: Vec<TubularChart> = series[m - 1..=m + 1]
        .iter()
        .map(|(_, i)| TubularChart::unchecked(i.clone()))
        .collect();
    // sample points on Γ(t1) with their principal curvatures and κ_ss
    let samples: Vec<(Vec<f64>, Vec<f64>, f64)> = match &series[m].1 {
        Interface::Circle { center, radius } => (0..64)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
                (
                    vec![center[0] + radius * a.cos(), center[1] + radius * a.sin()],
                    vec![1.0 / radius],
                    0.0,
                )
            })
            .collect(),
        Interface::Sphere(s) => (0..16)
            .map(|k| {
                let a = std::f64::consts::PI * (k as f64 + 0.5) / 16.0;
                (
                    vec![
                        s.center[0] + s.radius * a.sin(),
                        s.center[1],
                        s.center[2] + s.radius * a.cos(),
                    ],
                    vec![1.0 / s.radius; 2],
                    0.0,
                )
            })
            .collect(),
        Interface::Curve(c) => {
            let k = c.curvature();
            let kss = laplace_beltrami(c, &k);
            c.nodes()
                .iter()
                .zip(k.iter().zip(&kss))
                .map(|(p, (k, kss))| (p.to_vec(), vec![*k], *kss))
                .collect()
        }
    };
    let (h0, h2) = (t1 - t0, t2 - t1);
    Ok(samples
        .iter()
        .map(|(x, kap, kss)| {
            let d: Vec<f64> = charts
                .iter()
                .map(|c| crate::geometry::signed_distance(c, x).0)
                .collect();
            let dt_d = (-h2 / (h0 * (h0 + h2))) * d[0]
                + ((h2 - h0) / (h0 * h2)) * d[1]
                + (h0 / (h2 * (h0 + h2))) * d[2];
            // on Γ: Δd = Σκ, ∂_rΔd = −Σκ², ∂_rrΔd = 2Σκ³, Δ_Γ(Δd) = Σκ_ss
            let s1: f64 = kap.iter().sum();
            let s2: f64 = kap.iter().map(|k| k * k).sum();
            let s3: f64 = kap.iter().map(|k| k * k * k).sum();
            let bilap = 2.0 * s3 - s1 * s2 + kss;
            let d0 = -s2 + 0.5 * s1 * s1;
            // ∂_r D⁰ = ∂_rrΔd + Δd ∂_rΔd
            let dr_d0 = 2.0 * s3 - s1 * s2;
            dt_d + bilap - s1 * d0 - dr_d0
        })
        .collect())
}

/// Tangential derivative of curvature, exposed for diagnostics.
pub fn curvature_derivative(curve: &ClosedCurve) -> Vec<f64> {
    arclength_derivative(curve, &curve.curvature())
}
