//! Truncated-Fourier-series target contours, their placement in the global
//! frame and the partition of the visible arc into subsections.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planar point or vector in meters.
pub type Vec2 = [f64; 2];

const VISIBILITY_GRID: usize = 4096;
const BISECTION_STEPS: usize = 60;
const GL_ORDER: usize = 8;
const GL_PANELS: usize = 8;

/// Contour `rho(u) = [sum_q m_q cos(q u), sum_q n_q sin(q u)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfsContour {
    m: Vec<f64>,
    n: Vec<f64>,
}

impl TfsContour {
    pub fn new(m: Vec<f64>, n: Vec<f64>) -> Result<Self> {
        if m.is_empty() || m.len() != n.len() {
            return Err(Error::InvalidContour(format!(
                "coefficient lengths differ or are empty (m: {}, n: {})",
                m.len(),
                n.len()
            )));
        }
        if m.iter().chain(&n).any(|v| !v.is_finite()) {
            return Err(Error::InvalidContour("non-finite coefficient".into()));
        }
        if !(m[0] > 0.0 && n[0] > 0.0) {
            return Err(Error::InvalidContour(format!(
                "first harmonic must be positive (m_1 = {}, n_1 = {})",
                m[0], n[0]
            )));
        }
        Ok(Self { m, n })
    }

    pub fn circle(radius: f64) -> Result<Self> {
        Self::new(vec![radius], vec![radius])
    }

    pub fn vehicle() -> Self {
        Self {
            m: vec![2.05, -0.002, 0.5, 0.0, 0.056, 0.001, -0.125, 0.003],
            n: vec![1.24, -0.001, 0.335, -0.001, 0.124, -0.001, 0.018, 0.0],
        }
    }

    pub fn uav() -> Self {
        Self {
            m: vec![0.797, 0.0, -0.153, 0.0, -0.272, 0.0, -0.12, 0.0, 0.045],
            n: vec![0.797, 0.0, 0.153, 0.0, -0.272, 0.0, 0.12, 0.0, 0.045],
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "vehicle" => Some(Self::vehicle()),
            "uav" => Some(Self::uav()),
            _ => None,
        }
    }

    pub fn harmonics(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn n(&self) -> &[f64] {
        &self.n
    }

    /// Cosine and sine harmonic vectors `[cos(q u)]_q`, `[sin(q u)]_q`.
    pub fn harmonic_vectors(&self, u: f64) -> (Vec<f64>, Vec<f64>) {
        (1..=self.harmonics())
            .map(|q| {
                let (s, c) = (q as f64 * u).sin_cos();
                (c, s)
            })
            .unzip()
    }

    pub fn point(&self, u: f64) -> Vec2 {
        let mut x = 0.0;
        let mut y = 0.0;
        for (q, (mq, nq)) in self.m.iter().zip(&self.n).enumerate() {
            let (s, c) = ((q + 1) as f64 * u).sin_cos();
            x += mq * c;
            y += nq * s;
        }
        [x, y]
    }

    /// `d rho / du`.
    pub fn tangent(&self, u: f64) -> Vec2 {
        let mut x = 0.0;
        let mut y = 0.0;
        for (q, (mq, nq)) in self.m.iter().zip(&self.n).enumerate() {
            let qf = (q + 1) as f64;
            let (s, c) = (qf * u).sin_cos();
            x -= qf * mq * s;
            y += qf * nq * c;
        }
        [x, y]
    }
}

/// Target center range, direction and orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetPose {
    pub d_o: f64,
    pub phi_o: f64,
    pub varphi: f64,
}

impl TargetPose {
    pub fn new(d_o: f64, phi_o: f64, varphi: f64) -> Result<Self> {
        if !(d_o > 0.0 && d_o.is_finite()) {
            return Err(Error::InvalidPose(format!("range must be positive, got {d_o}")));
        }
        if !(phi_o.is_finite() && varphi.is_finite()) {
            return Err(Error::InvalidPose("non-finite angle".into()));
        }
        Ok(Self { d_o, phi_o, varphi })
    }

    pub fn center(&self) -> Vec2 {
        [self.d_o * self.phi_o.cos(), self.d_o * self.phi_o.sin()]
    }

    pub fn rotate(&self, v: Vec2) -> Vec2 {
        rotate(v, self.varphi)
    }
}

fn rotate(v: Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

pub fn contour_point(c: &TfsContour, u: f64) -> Vec2 {
    c.point(u)
}

/// `p(u) = p_o + V rho(u)`.
pub fn global_point(c: &TfsContour, pose: &TargetPose, u: f64) -> Vec2 {
    let r = pose.rotate(c.point(u));
    let p = pose.center();
    [p[0] + r[0], p[1] + r[1]]
}

/// Which closed form of the contour intermediate `X_k` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntermediateForm {
    /// `-nu^T m cos(phi_o + varphi) + sigma^T n sin(phi_o + varphi)`.
    #[default]
    Printed,
    /// `rho^T V^T p_perp / d_o = -nu^T m sin(phi_o - varphi) + sigma^T n cos(phi_o - varphi)`,
    /// the first-order sensitivity of the subsection range to `phi_o`.
    Geometric,
}

pub fn contour_intermediate(c: &TfsContour, pose: &TargetPose, u_k: f64) -> f64 {
    contour_intermediate_with(c, pose, u_k, IntermediateForm::Printed)
}

pub fn contour_intermediate_with(c: &TfsContour, pose: &TargetPose, u_k: f64, form: IntermediateForm) -> f64 {
    let [rx, ry] = c.point(u_k);
    match form {
        IntermediateForm::Printed => {
            let a = pose.phi_o + pose.varphi;
            -rx * a.cos() + ry * a.sin()
        }
        IntermediateForm::Geometric => {
            let a = pose.phi_o - pose.varphi;
            -rx * a.sin() + ry * a.cos()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsectionGeometry {
    pub u: f64,
    pub rho: Vec2,
    pub p: Vec2,
    pub d: f64,
    pub phi: f64,
    pub l: f64,
    pub x: f64,
    pub nu: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourPartition {
    pub subsections: Vec<SubsectionGeometry>,
    pub u_lower: f64,
    pub u_upper: f64,
}

impl ContourPartition {
    pub fn k(&self) -> usize {
        self.subsections.len()
    }

    pub fn total_length(&self) -> f64 {
        self.subsections.iter().map(|s| s.l).sum()
    }

    /// Bin edges `u_lower + i (u_upper - u_lower) / K`.
    pub fn bin_edges(&self) -> Vec<f64> {
        let k = self.k();
        let du = (self.u_upper - self.u_lower) / k as f64;
        (0..=k).map(|i| self.u_lower + i as f64 * du).collect()
    }
}

/// Options for [`partition_los_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionOptions {
    pub k: usize,
    pub normalize: bool,
    pub form: IntermediateForm,
}

fn is_visible(c: &TfsContour, pose: &TargetPose, bs: Vec2, u: f64) -> bool {
    let t = pose.rotate(c.tangent(u));
    let normal = [t[1], -t[0]];
    let p = global_point(c, pose, u);
    dot(normal, [bs[0] - p[0], bs[1] - p[1]]) > 0.0
}

/// Visible local-direction interval `[u_lower, u_upper]`, with
/// `0 <= u_lower < 2 pi` and `u_upper` possibly beyond `2 pi` when the
/// visible arc wraps.
pub fn visible_interval(c: &TfsContour, pose: &TargetPose, bs: Vec2) -> Result<(f64, f64)> {
    let n = VISIBILITY_GRID;
    let step = TAU / n as f64;
    let flags: Vec<bool> = (0..n).map(|i| is_visible(c, pose, bs, i as f64 * step)).collect();
    if flags.iter().all(|&f| f) {
        return Ok((0.0, TAU));
    }
    let Some(first_hidden) = flags.iter().position(|&f| !f) else {
        return Err(Error::EmptyLos);
    };
    // Longest circular run of visible samples, scanning from a hidden one.
    let mut best: Option<(usize, usize)> = None;
    let mut run_start = None;
    for off in 1..=n {
        let i = (first_hidden + off) % n;
        if flags[i] {
            run_start.get_or_insert(off);
        } else if let Some(s) = run_start.take() {
            let len = off - s;
            if best.is_none_or(|(_, l)| len > l) {
                best = Some((s, len));
            }
        }
    }
    let (start_off, len) = best.ok_or(Error::EmptyLos)?;
    let start = (first_hidden + start_off) % n;
    let lo_hidden = (start as f64 - 1.0) * step;
    let lo_visible = start as f64 * step;
    let hi_visible = (start + len - 1) as f64 * step;
    let hi_hidden = (start + len) as f64 * step;
    let u_lower = bisect(c, pose, bs, lo_hidden, lo_visible);
    let u_upper = bisect(c, pose, bs, hi_hidden, hi_visible);
    let shift = (u_lower / TAU).floor() * TAU;
    Ok((u_lower - shift, u_upper - shift))
}

/// Boundary between `hidden` and `visible` sample positions.
fn bisect(c: &TfsContour, pose: &TargetPose, bs: Vec2, mut hidden: f64, mut visible: f64) -> f64 {
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (hidden + visible);
        if is_visible(c, pose, bs, mid) {
            visible = mid;
        } else {
            hidden = mid;
        }
    }
    0.5 * (hidden + visible)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=order {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Arc length of `rho` over `[a, b]` by composite Gauss-Legendre quadrature.
pub fn arc_length(c: &TfsContour, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gauss_legendre(GL_ORDER);
    let h = (b - a) / GL_PANELS as f64;
    let mut total = 0.0;
    for p in 0..GL_PANELS {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in nodes.iter().zip(&weights) {
            total += w * norm(c.tangent(mid + 0.5 * h * x));
        }
    }
    total * 0.5 * h
}

pub fn partition_los(
    c: &TfsContour,
    pose: &TargetPose,
    bs: Vec2,
    k: usize,
    normalize: bool,
) -> Result<ContourPartition> {
    partition_los_with(c, pose, bs, PartitionOptions { k, normalize, form: IntermediateForm::Printed })
}

pub fn partition_los_with(
    c: &TfsContour,
    pose: &TargetPose,
    bs: Vec2,
    opts: PartitionOptions,
) -> Result<ContourPartition> {
    if opts.k == 0 {
        return Err(Error::InvalidContour("subsection count must be at least 1".into()));
    }
    let (u_lower, u_upper) = visible_interval(c, pose, bs)?;
    let du = (u_upper - u_lower) / opts.k as f64;
    let mut subsections: Vec<SubsectionGeometry> = (0..opts.k)
        .map(|i| {
            let a = u_lower + i as f64 * du;
            let u = a + 0.5 * du;
            subsection_at(c, pose, bs, u, arc_length(c, a, a + du), opts.form)
        })
        .collect();
    if opts.normalize {
        let total: f64 = subsections.iter().map(|s| s.l).sum();
        for s in &mut subsections {
            s.l /= total;
        }
    }
    Ok(ContourPartition { subsections, u_lower, u_upper })
}

/// Geometry of a single contour element at local direction `u`, seen from `bs`.
pub fn subsection_at(
    c: &TfsContour,
    pose: &TargetPose,
    bs: Vec2,
    u: f64,
    l: f64,
    form: IntermediateForm,
) -> SubsectionGeometry {
    let rho = c.point(u);
    let p = global_point(c, pose, u);
    let rel = [p[0] - bs[0], p[1] - bs[1]];
    let (nu, sigma) = c.harmonic_vectors(u);
    SubsectionGeometry {
        u,
        rho,
        p,
        d: norm(rel),
        phi: rel[1].atan2(rel[0]),
        l,
        x: contour_intermediate_with(c, pose, u, form),
        nu,
        sigma,
    }
}
