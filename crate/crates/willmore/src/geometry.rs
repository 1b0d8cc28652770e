//! Interfaces (closed planar curves, circles, radially symmetric spheres), their
//! tubular charts, surface calculus on polylines, zero-level extraction and the
//! grids the other modules discretise on.

use crate::error::{invalid, Error, Result};
use crate::linalg::PeriodicSpline;
use std::collections::HashMap;
use std::f64::consts::PI;

pub type Point2 = [f64; 2];

#[inline]
fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn norm(a: Point2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
fn cross(a: Point2, b: Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Closed polyline, stored counter-clockwise.
#[derive(Clone, Debug)]
pub struct ClosedCurve {
    nodes: Vec<Point2>,
    /// Cumulative arclength at each node, starting at 0.
    arclength: Vec<f64>,
    total: f64,
    /// Periodic splines x(s), y(s) in polyline arclength, built on first use.
    splines: std::sync::OnceLock<[PeriodicSpline; 2]>,
}

impl ClosedCurve {
    /// Build from nodes; orientation is normalised to counter-clockwise.
    pub fn new(mut nodes: Vec<Point2>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Geometry("a closed curve needs at least 3 nodes".into()));
        }
        if nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Geometry("non-finite node".into()));
        }
        if signed_area(&nodes) < 0.0 {
            nodes.reverse();
        }
        let c = Self::from_ccw(nodes);
        if c.segment_lengths().iter().any(|&l| l <= 1e-14 * c.total.max(1e-300)) {
            return Err(Error::Geometry("repeated node".into()));
        }
        if !c.is_simple() {
            return Err(Error::Topology("curve self-intersects".into()));
        }
        Ok(c)
    }

    fn from_ccw(nodes: Vec<Point2>) -> Self {
        let n = nodes.len();
        let mut arclength = Vec::with_capacity(n);
        let mut acc = 0.0;
        for i in 0..n {
            arclength.push(acc);
            acc += norm(sub(nodes[(i + 1) % n], nodes[i]));
        }
        ClosedCurve {
            nodes,
            arclength,
            total: acc,
            splines: std::sync::OnceLock::new(),
        }
    }

    pub fn circle(center: Point2, radius: f64, n: usize) -> Result<Self> {
        if radius <= 0.0 {
            return invalid("circle radius must be positive");
        }
        Self::new(
            (0..n)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n as f64;
                    [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                })
                .collect(),
        )
    }

    pub fn ellipse(center: Point2, a: f64, b: f64, n: usize) -> Result<Self> {
        let raw = Self::new(
            (0..n)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n as f64;
                    [center[0] + a * t.cos(), center[1] + b * t.sin()]
                })
                .collect(),
        )?;
        Ok(raw.redistribute(n))
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn arclength_params(&self) -> &[f64] {
        &self.arclength
    }

    pub fn total_length(&self) -> f64 {
        self.total
    }

    /// Length of segment i → i+1.
    pub fn segment_lengths(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|i| norm(sub(self.nodes[(i + 1) % n], self.nodes[i]))).collect()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.nodes)
    }

    pub fn centroid(&self) -> Point2 {
        let n = self.len() as f64;
        let s = self.nodes.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
        [s[0] / n, s[1] / n]
    }

    /// Mean distance of the nodes from the centroid.
    pub fn mean_radius(&self) -> f64 {
        let c = self.centroid();
        self.nodes.iter().map(|p| norm(sub(*p, c))).sum::<f64>() / self.len() as f64
    }

    /// (max - min)/mean of node distances from the centroid.
    pub fn radial_spread(&self) -> f64 {
        let c = self.centroid();
        let d: Vec<f64> = self.nodes.iter().map(|p| norm(sub(*p, c))).collect();
        let mx = d.iter().cloned().fold(f64::MIN, f64::max);
        let mn = d.iter().cloned().fold(f64::MAX, f64::min);
        (mx - mn) / self.mean_radius()
    }

    /// Signed curvature at each node (three-point circumscribed circle; positive for convex).
    pub fn curvature(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let p0 = self.nodes[(i + n - 1) % n];
                let p1 = self.nodes[i];
                let p2 = self.nodes[(i + 1) % n];
                let a = sub(p1, p0);
                let b = sub(p2, p1);
                let c = sub(p2, p0);
                2.0 * cross(a, b) / (norm(a) * norm(b) * norm(c))
            })
            .collect()
    }

    /// Outward unit normal at each node (from the chord of the neighbours).
    pub fn normals(&self) -> Vec<Point2> {
        self.tangents().iter().map(|t| [t[1], -t[0]]).collect()
    }

    pub fn tangents(&self) -> Vec<Point2> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let d = sub(self.nodes[(i + 1) % n], self.nodes[(i + n - 1) % n]);
                let l = norm(d);
                [d[0] / l, d[1] / l]
            })
            .collect()
    }

    /// Dual-cell lengths (half of the two adjacent segments) used as node quadrature.
    pub fn node_weights(&self) -> Vec<f64> {
        let seg = self.segment_lengths();
        let n = self.len();
        (0..n).map(|i| 0.5 * (seg[i] + seg[(i + n - 1) % n])).collect()
    }

    /// Segment-pair intersection test over non-adjacent segments.
    pub fn is_simple(&self) -> bool {
        let n = self.len();
        for i in 0..n {
            let a0 = self.nodes[i];
            let a1 = self.nodes[(i + 1) % n];
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let b0 = self.nodes[j];
                let b1 = self.nodes[(j + 1) % n];
                if segments_intersect(a0, a1, b0, b1) {
                    return false;
                }
            }
        }
        true
    }

    /// Resample to `n` nodes equally spaced in arclength of the periodic cubic spline
    /// through the current nodes (parametrised by chord length).
    pub fn redistribute(&self, n: usize) -> ClosedCurve {
        let t = &self.arclength;
        let [sx, sy] = self.splines();
        // arclength of the spline by fine Simpson sampling per node interval
        let m = self.len();
        let sub_n = 8;
        let mut cum = vec![0.0];
        let mut params = vec![0.0];
        for i in 0..m {
            let a = t[i];
            let b = if i + 1 < m { t[i + 1] } else { self.total };
            let h = (b - a) / sub_n as f64;
            for k in 0..sub_n {
                let s0 = a + k as f64 * h;
                let f = |s: f64| {
                    let (_, dx, _) = sx.eval(s);
                    let (_, dy, _) = sy.eval(s);
                    dx.hypot(dy)
                };
                let seg = h / 6.0 * (f(s0) + 4.0 * f(s0 + 0.5 * h) + f(s0 + h));
                cum.push(cum.last().unwrap() + seg);
                params.push(s0 + h);
            }
        }
        let total = *cum.last().unwrap();
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        for j in 0..n {
            let target = total * j as f64 / n as f64;
            while k + 1 < cum.len() - 1 && cum[k + 1] < target {
                k += 1;
            }
            let frac = (target - cum[k]) / (cum[k + 1] - cum[k]);
            let s = params[k] + frac * (params[k + 1] - params[k]);
            out.push([sx.eval(s).0, sy.eval(s).0]);
        }
        ClosedCurve::from_ccw(out)
    }

    pub fn scaled(&self, lambda: f64) -> ClosedCurve {
        ClosedCurve::from_ccw(self.nodes.iter().map(|p| [lambda * p[0], lambda * p[1]]).collect())
    }

    /// Rotation by `angle` about the origin followed by translation.
    pub fn moved(&self, angle: f64, shift: Point2) -> ClosedCurve {
        let (s, c) = angle.sin_cos();
        ClosedCurve::from_ccw(
            self.nodes
                .iter()
                .map(|p| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]])
                .collect(),
        )
    }

    pub(crate) fn from_nodes_unchecked(nodes: Vec<Point2>) -> ClosedCurve {
        ClosedCurve::from_ccw(nodes)
    }

    /// Distance from x to the polyline, with the foot's arclength.
    pub fn project(&self, x: Point2) -> (f64, f64) {
        let n = self.len();
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..n {
            let a = self.nodes[i];
            let b = self.nodes[(i + 1) % n];
            let ab = sub(b, a);
            let l2 = ab[0] * ab[0] + ab[1] * ab[1];
            let t = (((x[0] - a[0]) * ab[0] + (x[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0);
            let f = [a[0] + t * ab[0], a[1] + t * ab[1]];
            let d = norm(sub(x, f));
            if d < best.0 {
                best = (d, self.arclength[i] + t * l2.sqrt());
            }
        }
        best
    }

    fn splines(&self) -> &[PeriodicSpline; 2] {
        self.splines.get_or_init(|| {
            let xs: Vec<f64> = self.nodes.iter().map(|p| p[0]).collect();
            let ys: Vec<f64> = self.nodes.iter().map(|p| p[1]).collect();
            [
                PeriodicSpline::new(&self.arclength, &xs, self.total),
                PeriodicSpline::new(&self.arclength, &ys, self.total),
            ]
        })
    }

    /// Point, first and second derivative of the interpolating spline at s.
    pub fn smooth_point(&self, s: f64) -> [Point2; 3] {
        let [sx, sy] = self.splines();
        let (x, dx, ddx) = sx.eval(s);
        let (y, dy, ddy) = sy.eval(s);
        [[x, y], [dx, dy], [ddx, ddy]]
    }

    /// Outward unit normal of the spline at s.
    pub fn smooth_normal(&self, s: f64) -> Point2 {
        let [_, d, _] = self.smooth_point(s);
        let l = norm(d);
        [d[1] / l, -d[0] / l]
    }

    /// Signed distance (negative inside) to the spline through the nodes and the foot
    /// parameter: Newton on (X(s) − x)·X'(s) = 0 seeded by the polyline projection.
    pub fn project_smooth(&self, x: Point2) -> (f64, f64) {
        let (_, mut s) = self.project(x);
        for _ in 0..20 {
            let [p, d, dd] = self.smooth_point(s);
            let e = sub(p, x);
            let g = e[0] * d[0] + e[1] * d[1];
            let gp = d[0] * d[0] + d[1] * d[1] + e[0] * dd[0] + e[1] * dd[1];
            if gp <= 0.0 {
                break;
            }
            let step = g / gp;
            s -= step;
            if step.abs() < 1e-15 * self.total {
                break;
            }
        }
        let s = s.rem_euclid(self.total);
        let [p, _, _] = self.smooth_point(s);
        let nrm = self.smooth_normal(s);
        let e = sub(x, p);
        let d = norm(e);
        (if e[0] * nrm[0] + e[1] * nrm[1] < 0.0 { -d } else { d }, s)
    }

    /// Winding-number point-in-polygon test.
    pub fn contains(&self, x: Point2) -> bool {
        let n = self.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.nodes[i];
            let b = self.nodes[(i + 1) % n];
            if (a[1] > x[1]) != (b[1] > x[1]) {
                let xc = a[0] + (x[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if x[0] < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Node value interpolated linearly in arclength.
    pub fn interp_at(&self, values: &[f64], s: f64) -> f64 {
        let n = self.len();
        let s = s.rem_euclid(self.total);
        let i = match self.arclength.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
            Ok(k) => k,
            Err(k) => k - 1,
        };
        let s1 = if i + 1 < n { self.arclength[i + 1] } else { self.total };
        let f = (s - self.arclength[i]) / (s1 - self.arclength[i]);
        values[i] * (1.0 - f) + values[(i + 1) % n] * f
    }
}

fn signed_area(nodes: &[Point2]) -> f64 {
    let n = nodes.len();
    0.5 * (0..n).map(|i| cross(nodes[i], nodes[(i + 1) % n])).sum::<f64>()
}

fn segments_intersect(a0: Point2, a1: Point2, b0: Point2, b1: Point2) -> bool {
    let d1 = cross(sub(a1, a0), sub(b0, a0));
    let d2 = cross(sub(a1, a0), sub(b1, a0));
    let d3 = cross(sub(b1, b0), sub(a0, b0));
    let d4 = cross(sub(b1, b0), sub(a1, b0));
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0
}

/// Radially symmetric sphere in R³.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialSurface {
    pub radius: f64,
    pub center: [f64; 3],
}

impl RadialSurface {
    pub fn new(radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return invalid("sphere radius must be positive");
        }
        Ok(RadialSurface {
            radius,
            center: [0.0; 3],
        })
    }

    pub const DIM: usize = 3;
}

/// Interfaces handled by the charts.
#[derive(Clone, Debug)]
pub enum Interface {
    Circle { center: Point2, radius: f64 },
    Sphere(RadialSurface),
    Curve(ClosedCurve),
}

impl Interface {
    /// Parse `circle:R`, `circle:R:cx:cy`, `sphere:R` or `ellipse:a:b[:n]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let num = |k: usize| -> Result<f64> {
            parts
                .get(k)
                .ok_or_else(|| Error::InvalidArgument(format!("missing field {k} in '{spec}'")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad number in '{spec}': {e}")))
        };
        match parts[0] {
            "circle" => {
                let r = num(1)?;
                if r <= 0.0 {
                    return invalid("circle radius must be positive");
                }
                let c = if parts.len() >= 4 { [num(2)?, num(3)?] } else { [0.0, 0.0] };
                Ok(Interface::Circle { center: c, radius: r })
            }
            "sphere" => Ok(Interface::Sphere(RadialSurface::new(num(1)?)?)),
            "ellipse" => {
                let n = if parts.len() >= 4 { num(3)? as usize } else { 256 };
                Ok(Interface::Curve(ClosedCurve::ellipse([0.0, 0.0], num(1)?, num(2)?, n)?))
            }
            other => invalid(format!("unknown interface kind '{other}'")),
        }
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            Interface::Sphere(_) => 3,
            _ => 2,
        }
    }

    /// Largest |κᵢ| over the interface.
    pub fn max_curvature(&self) -> f64 {
        match self {
            Interface::Circle { radius, .. } => 1.0 / radius,
            Interface::Sphere(s) => 1.0 / s.radius,
            Interface::Curve(c) => c.curvature().iter().fold(0.0, |m, k| m.max(k.abs())),
        }
    }

    /// Radius of the circle or sphere, if the interface is one.
    pub fn radius(&self) -> Option<f64> {
        match self {
            Interface::Circle { radius, .. } => Some(*radius),
            Interface::Sphere(s) => Some(s.radius),
            Interface::Curve(_) => None,
        }
    }

    /// Default tube half-width: half the smallest curvature radius.
    pub fn default_delta(&self) -> f64 {
        0.5 / self.max_curvature()
    }
}

/// Signed-distance chart of a tubular neighbourhood.
#[derive(Clone, Debug)]
pub struct TubularChart {
    pub interface: Interface,
    pub delta: f64,
    kappa_nodes: Vec<f64>,
}

/// Build the chart, rejecting tubes wider than the curvature radius.
pub fn build_chart(interface: Interface, delta: f64) -> Result<TubularChart> {
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    let bound = 1.0 / interface.max_curvature();
    if delta >= bound {
        return Err(Error::ChartInjectivity { delta, bound });
    }
    let kappa_nodes = match &interface {
        Interface::Curve(c) => c.curvature(),
        _ => Vec::new(),
    };
    Ok(TubularChart {
        interface,
        delta,
        kappa_nodes,
    })
}

impl TubularChart {
    /// Chart without the injectivity check (distance evaluation only).
    pub(crate) fn unchecked(interface: Interface) -> TubularChart {
        let kappa_nodes = match &interface {
            Interface::Curve(c) => c.curvature(),
            _ => Vec::new(),
        };
        TubularChart {
            interface,
            delta: f64::INFINITY,
            kappa_nodes,
        }
    }

    pub fn dim(&self) -> usize {
        self.interface.dim()
    }

    /// Principal curvatures at surface coordinate s.
    pub fn kappas(&self, s: f64) -> Vec<f64> {
        match &self.interface {
            Interface::Circle { radius, .. } => vec![1.0 / radius],
            Interface::Sphere(sp) => vec![1.0 / sp.radius; 2],
            Interface::Curve(c) => vec![c.interp_at(&self.kappa_nodes, s)],
        }
    }

    /// h(s) = Δr at r = 0 (mean curvature).
    pub fn h(&self, s: f64) -> f64 {
        self.kappas(s).iter().sum()
    }

    /// b(s) in Δr = h + b r + a r² + O(r³).
    pub fn b(&self, s: f64) -> f64 {
        -self.kappas(s).iter().map(|k| k * k).sum::<f64>()
    }

    /// a(s) in Δr = h + b r + a r² + O(r³).
    pub fn a(&self, s: f64) -> f64 {
        self.kappas(s).iter().map(|k| k * k * k).sum()
    }

    /// e(s) in J = 1 + r h + r² e + O(r³).
    pub fn e(&self, s: f64) -> f64 {
        let k = self.kappas(s);
        if k.len() == 2 {
            k[0] * k[1]
        } else {
            0.0
        }
    }

    /// Exact Δr at distance r along the normal.
    pub fn laplacian_r(&self, r: f64, s: f64) -> f64 {
        self.kappas(s).iter().map(|k| k / (1.0 + r * k)).sum()
    }

    /// Surface coordinate of the foot point: arclength for curves, angle·R for
    /// circles, polar angle for spheres.
    pub fn s_coord(&self, x: &[f64]) -> f64 {
        match &self.interface {
            Interface::Circle { center, radius } => {
                let t = (x[1] - center[1]).atan2(x[0] - center[0]);
                t.rem_euclid(2.0 * PI) * radius
            }
            Interface::Sphere(sp) => {
                let d: Vec<f64> = (0..3).map(|k| x.get(k).copied().unwrap_or(0.0) - sp.center[k]).collect();
                let rho = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                if rho == 0.0 {
                    0.0
                } else {
                    (d[2] / rho).clamp(-1.0, 1.0).acos()
                }
            }
            Interface::Curve(c) => c.project_smooth([x[0], x[1]]).1,
        }
    }

    /// Point X₀(s) + r n(s) for circles (s = angle·R) and spheres (s = polar angle, azimuth 0).
    pub fn embed(&self, r: f64, s: f64) -> Vec<f64> {
        match &self.interface {
            Interface::Circle { center, radius } => {
                let t = s / radius;
                vec![center[0] + (radius + r) * t.cos(), center[1] + (radius + r) * t.sin()]
            }
            Interface::Sphere(sp) => {
                let rho = sp.radius + r;
                vec![sp.center[0] + rho * s.sin(), sp.center[1], sp.center[2] + rho * s.cos()]
            }
            Interface::Curve(c) => {
                let p = c.smooth_point(s)[0];
                let nrm = c.smooth_normal(s);
                vec![p[0] + r * nrm[0], p[1] + r * nrm[1]]
            }
        }
    }

    /// Total measure of the interface (length or area).
    pub fn surface_measure(&self) -> f64 {
        match &self.interface {
            Interface::Circle { radius, .. } => 2.0 * PI * radius,
            Interface::Sphere(sp) => 4.0 * PI * sp.radius * sp.radius,
            Interface::Curve(c) => c.total_length(),
        }
    }
}

/// Signed distance (negative inside) and whether x lies in the tube.
pub fn signed_distance(chart: &TubularChart, x: &[f64]) -> (f64, bool) {
    let r = match &chart.interface {
        Interface::Circle { center, radius } => (x[0] - center[0]).hypot(x[1] - center[1]) - radius,
        Interface::Sphere(sp) => {
            let mut s = 0.0;
            for k in 0..3 {
                let d = x.get(k).copied().unwrap_or(0.0) - sp.center[k];
                s += d * d;
            }
            s.sqrt() - sp.radius
        }
        Interface::Curve(c) => c.project_smooth([x[0], x[1]]).0,
    };
    (r, r.abs() <= chart.delta)
}

/// J(r, s) = ∏(1 + r κᵢ(s)).
pub fn jacobian(chart: &TubularChart, r: f64, s: f64) -> f64 {
    chart.kappas(s).iter().map(|k| 1.0 + r * k).product()
}

/// Second arclength derivative on the closed polyline (three-point, non-uniform).
pub fn laplace_beltrami(curve: &ClosedCurve, field: &[f64]) -> Vec<f64> {
    let n = curve.len();
    assert_eq!(field.len(), n);
    let seg = curve.segment_lengths();
    (0..n)
        .map(|i| {
            let hm = seg[(i + n - 1) % n];
            let hp = seg[i];
            let fm = field[(i + n - 1) % n];
            let fpl = field[(i + 1) % n];
            2.0 * ((fpl - field[i]) / hp - (field[i] - fm) / hm) / (hp + hm)
        })
        .collect()
}

/// First arclength derivative on the closed polyline (three-point, non-uniform).
pub fn arclength_derivative(curve: &ClosedCurve, field: &[f64]) -> Vec<f64> {
    let n = curve.len();
    let seg = curve.segment_lengths();
    (0..n)
        .map(|i| {
            let hm = seg[(i + n - 1) % n];
            let hp = seg[i];
            let fm = field[(i + n - 1) % n];
            let fpl = field[(i + 1) % n];
            (hm * hm * (fpl - field[i]) + hp * hp * (field[i] - fm)) / (hm * hp * (hm + hp))
        })
        .collect()
}

/// Periodic square box [-L/2, L/2)² with n nodes per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridDomain {
    pub extent: f64,
    pub n: usize,
}

impl GridDomain {
    pub fn new(extent: f64, n: usize) -> Result<Self> {
        if n < 4 || n % 2 == 1 {
            return invalid(format!("grid n = {n} must be even and >= 4"));
        }
        if !(extent > 0.0) {
            return invalid("grid extent must be positive");
        }
        Ok(GridDomain { extent, n })
    }

    /// Smallest power-of-two grid with spacing at most `hmax`.
    pub fn with_max_spacing(extent: f64, hmax: f64) -> Result<Self> {
        let mut n = 4;
        while extent / n as f64 > hmax {
            n *= 2;
        }
        Self::new(extent, n)
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.extent + i as f64 * self.spacing()
    }

    /// Point of flat index `k = iy * n + ix`.
    pub fn point(&self, k: usize) -> Point2 {
        [self.coord(k % self.n), self.coord(k / self.n)]
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing().powi(2)
    }

    pub fn sample(&self, f: impl Fn(Point2) -> f64) -> Vec<f64> {
        (0..self.len()).map(|k| f(self.point(k))).collect()
    }
}

/// Result of a zero-level extraction.
#[derive(Clone, Debug)]
pub struct ZeroLevel {
    /// Longest chain of crossings, ordered.
    pub points: Vec<Point2>,
    pub closed: bool,
    pub n_components: usize,
}

impl ZeroLevel {
    pub fn to_curve(&self) -> Result<ClosedCurve> {
        if !self.closed {
            return Err(Error::Topology("zero level is not a closed curve".into()));
        }
        ClosedCurve::new(self.points.clone())
    }

    /// Flag raised when the level set is not a single closed contour.
    pub fn flagged(&self) -> bool {
        !self.closed || self.n_components != 1
    }
}

/// Marching-squares zero contour with linear sub-cell interpolation. Cells are not
/// wrapped across the periodic seam, so contours crossing it come back open.
pub fn extract_zero_level(field: &[f64], domain: &GridDomain) -> Result<ZeroLevel> {
    let n = domain.n;
    assert_eq!(field.len(), n * n);
    let has_pos = field.iter().any(|&v| v > 0.0);
    let has_neg = field.iter().any(|&v| v <= 0.0);
    if !(has_pos && has_neg) {
        return Err(Error::NoInterface);
    }
    let at = |i: usize, j: usize| field[j * n + i];
    // edge keys: (dir, i, j); dir 0 = (i,j)-(i+1,j), dir 1 = (i,j)-(i,j+1)
    let mut points: HashMap<(u8, usize, usize), Point2> = HashMap::new();
    let mut crossing = |dir: u8, i: usize, j: usize| -> Option<(u8, usize, usize)> {
        let (i2, j2) = if dir == 0 { (i + 1, j) } else { (i, j + 1) };
        let a = at(i, j);
        let b = at(i2, j2);
        if (a > 0.0) == (b > 0.0) {
            return None;
        }
        let key = (dir, i, j);
        points.entry(key).or_insert_with(|| {
            let t = a / (a - b);
            let x0 = domain.coord(i);
            let y0 = domain.coord(j);
            let h = domain.spacing();
            if dir == 0 {
                [x0 + t * h, y0]
            } else {
                [x0, y0 + t * h]
            }
        });
        Some(key)
    };
    let mut segs: Vec<((u8, usize, usize), (u8, usize, usize))> = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let e = [
                crossing(0, i, j),
                crossing(1, i + 1, j),
                crossing(0, i, j + 1),
                crossing(1, i, j),
            ];
            let ks: Vec<(u8, usize, usize)> = e.iter().flatten().cloned().collect();
            match ks.len() {
                2 => segs.push((ks[0], ks[1])),
                4 => {
                    let c = 0.25 * (at(i, j) + at(i + 1, j) + at(i, j + 1) + at(i + 1, j + 1));
                    let s00 = at(i, j) > 0.0;
                    if (c > 0.0) == s00 {
                        segs.push((ks[0], ks[1]));
                        segs.push((ks[2], ks[3]));
                    } else {
                        segs.push((ks[0], ks[3]));
                        segs.push((ks[1], ks[2]));
                    }
                }
                _ => {}
            }
        }
    }
    let mut adj: HashMap<(u8, usize, usize), Vec<usize>> = HashMap::new();
    for (k, s) in segs.iter().enumerate() {
        adj.entry(s.0).or_default().push(k);
        adj.entry(s.1).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut chains: Vec<(Vec<Point2>, bool)> = Vec::new();
    for start in 0..segs.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let walk = |from: (u8, usize, usize), used: &mut Vec<bool>| -> (Vec<(u8, usize, usize)>, bool) {
            let mut keys = vec![];
            let mut cur = from;
            loop {
                let next = adj[&cur].iter().find(|&&s| !used[s]).copied();
                match next {
                    Some(s) => {
                        used[s] = true;
                        let other = if segs[s].0 == cur { segs[s].1 } else { segs[s].0 };
                        keys.push(other);
                        cur = other;
                    }
                    None => return (keys, false),
                }
            }
        };
        let (a, b) = (segs[start].0, segs[start].1);
        let (fwd, _) = walk(b, &mut used);
        let closed = fwd.last() == Some(&a);
        let mut keys = vec![a, b];
        if closed {
            keys.extend(fwd.iter().take(fwd.len() - 1));
        } else {
            keys.extend(fwd);
            let (back, _) = walk(a, &mut used);
            let mut pre: Vec<_> = back.into_iter().rev().collect();
            pre.extend(keys);
            keys = pre;
        }
        // a node exactly on the level is reached through several edges
        let tol = 1e-9 * domain.spacing();
        let mut pts: Vec<Point2> = Vec::with_capacity(keys.len());
        for k in &keys {
            let p = points[k];
            if pts.last().map_or(true, |q| norm(sub(p, *q)) > tol) {
                pts.push(p);
            }
        }
        while closed && pts.len() > 1 && norm(sub(pts[0], *pts.last().unwrap())) <= tol {
            pts.pop();
        }
        chains.push((pts, closed));
    }
    let n_components = chains.len();
    let (pts, closed) = chains
        .into_iter()
        .max_by_key(|c| c.0.len())
        .ok_or(Error::NoInterface)?;
    Ok(ZeroLevel {
        points: pts,
        closed,
        n_components,
    })
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = sub(b, a);
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm(sub(p, [a[0] + t * ab[0], a[1] + t * ab[1]]))
}

fn directed_hausdorff(a: &[Point2], b: &[Point2]) -> f64 {
    let m = b.len();
    a.iter()
        .map(|p| {
            (0..m)
                .map(|j| point_segment_distance(*p, b[j], b[(j + 1) % m]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two closed polylines (node-to-segment).
pub fn hausdorff(a: &ClosedCurve, b: &ClosedCurve) -> f64 {
    directed_hausdorff(a.nodes(), b.nodes()).max(directed_hausdorff(b.nodes(), a.nodes()))
}

/// Annular polar grid r ∈ (r_in, r_out), cell-centred in r, uniform in angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarGrid {
    pub r_in: f64,
    pub r_out: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl PolarGrid {
    pub fn new(r_in: f64, r_out: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(r_in > 0.0 && r_out > r_in) || n_r < 4 || n_theta < 4 {
            return invalid("polar grid needs 0 < r_in < r_out, n_r >= 4, n_theta >= 4");
        }
        Ok(PolarGrid {
            r_in,
            r_out,
            n_r,
            n_theta,
        })
    }

    pub fn dr(&self) -> f64 {
        (self.r_out - self.r_in) / self.n_r as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r_in + (i as f64 + 0.5) * self.dr()
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Area weight of each node, r dr dθ.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.len());
        for i in 0..self.n_r {
            let wi = self.r(i) * self.dr() * self.dtheta();
            w.extend(std::iter::repeat(wi).take(self.n_theta));
        }
        w
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        for i in 0..self.n_r {
            for j in 0..self.n_theta {
                v.push(f(self.r(i), self.theta(j)));
            }
        }
        v
    }
}

/// Cell-centred radial grid r_i = (i + ½) h on (0, r_max) for radially symmetric
/// fields in dimension `dim` (2 or 3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialGrid {
    pub dim: usize,
    pub n: usize,
    pub r_max: f64,
}

impl RadialGrid {
    pub fn new(dim: usize, n: usize, r_max: f64) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return invalid("radial grid dimension must be 2 or 3");
        }
        if n < 8 || !(r_max > 0.0) {
            return invalid("radial grid needs n >= 8 and r_max > 0");
        }
        Ok(RadialGrid { dim, n, r_max })
    }

    /// Smallest node count with spacing at most `hmax`.
    pub fn with_max_spacing(dim: usize, r_max: f64, hmax: f64) -> Result<Self> {
        Self::new(dim, ((r_max / hmax).ceil() as usize).max(8), r_max)
    }

    pub fn h(&self) -> f64 {
        self.r_max / self.n as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }

    /// Surface measure of the unit sphere in this dimension.
    pub fn omega(&self) -> f64 {
        if self.dim == 2 {
            2.0 * PI
        } else {
            4.0 * PI
        }
    }

    /// Midpoint control-volume weights ω r_i^{d−1} h.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.n)
            .map(|i| self.omega() * self.r(i).powi(self.dim as i32 - 1) * h)
            .collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.r(i))).collect()
    }
}
