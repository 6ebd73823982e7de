//! A priori bounds on `|f(A)_{kl} - f(A~)_{kl}|` when `A~` differs from `A`
//! on a localized edge set.
//!
//! Every polynomial of degree at most `delta` has identical `(k, l)` entries
//! on `A` and `A~`, where `delta` depends on hop distances between `k`, `l`
//! and the perturbed edges. Combined with a Faber-series error estimate on a
//! region enclosing both fields of values, this gives bounds that decay
//! geometrically (resolvent) or superexponentially (exponential) in `delta`.
//!
//! Bounds are computed in log-space. `f64::INFINITY` is a sentinel for "not
//! applicable" (a degree precondition fails), never a numeric overflow.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

pub use crate::func::FunctionDescriptor;
use crate::graph::{
    apply_delta, build_matrix, distances_to_set, Direction, EdgeDelta, Graph, GraphError, Hops,
    MatrixKind, NodeId,
};
use crate::spectral::{enclosing_region, Region, SpectralError};

/// Effective polynomial-invariance degree; `None` is `+inf`.
pub type Degree = Option<i64>;

#[derive(Debug, Error)]
pub enum BoundError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(
        "node {node} lies in the perturbed set; the normalized-matrix degree needs k, l outside it"
    )]
    NodeInPerturbedSet { node: NodeId },
    #[error("1/alpha = {inv_alpha} is not outside the region {region:?}")]
    PoleInRegion { inv_alpha: f64, region: Region },
    #[error("alpha must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error("epsilon {eps} outside (0, {max})")]
    EpsilonOutOfRange { eps: f64, max: f64 },
    #[error("tau must exceed 1, got {0}")]
    InvalidTau(f64),
    #[error("f is not analytic inside the level curve for tau = {tau}; try a smaller tau")]
    NotAnalytic { tau: f64 },
    #[error("contour quadrature did not converge at tau = {tau} with {points} points; try a smaller tau")]
    Quadrature { tau: f64, points: usize },
}

impl BoundError {
    pub fn is_precondition(&self) -> bool {
        match self {
            BoundError::Graph(g) => g.is_precondition(),
            BoundError::Spectral(_) | BoundError::Quadrature { .. } => false,
            _ => true,
        }
    }
}

/// Choice of the free parameter of the resolvent bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    /// Minimize the bound over the admissible interval.
    Auto,
    Fixed(f64),
}

/// Auxiliary values behind a bound, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundParams {
    pub tau: Option<f64>,
    pub epsilon: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
}

impl BoundParams {
    /// The optimized parameter: epsilon for resolvents, tau otherwise.
    pub fn tau_or_eps(&self) -> Option<f64> {
        self.epsilon.or(self.tau)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub k: NodeId,
    pub l: NodeId,
    /// `dist(k, S)`.
    pub dist_k_s: Hops,
    /// `dist(T, l)`.
    pub dist_t_l: Hops,
    /// `dist(k, S) + dist(T, l)`.
    pub delta_raw: Hops,
    pub delta_effective: Degree,
    pub region: Region,
    pub function: FunctionDescriptor,
    pub bound: f64,
    pub params: BoundParams,
}

fn add_hops(a: Hops, b: Hops) -> Hops {
    Some(a? + b?)
}

/// Hop distances between every node and the perturbed sets.
#[derive(Debug, Clone)]
pub struct DeltaDistances {
    sources: BTreeSet<NodeId>,
    /// `dist(m, S)`.
    to_sources: Vec<Hops>,
    /// `dist(S, m)`.
    from_sources: Vec<Hops>,
    /// `dist(T, m)`.
    from_tips: Vec<Hops>,
    empty: bool,
}

impl DeltaDistances {
    pub fn new(g: &Graph, d: &EdgeDelta) -> Self {
        let n = g.n_nodes();
        if d.is_empty() {
            return DeltaDistances {
                sources: BTreeSet::new(),
                to_sources: vec![None; n],
                from_sources: vec![None; n],
                from_tips: vec![None; n],
                empty: true,
            };
        }
        DeltaDistances {
            sources: d.sources().clone(),
            to_sources: distances_to_set(g, d.sources(), Direction::FromNode),
            from_sources: distances_to_set(g, d.sources(), Direction::ToNode),
            from_tips: distances_to_set(g, d.tips(), Direction::ToNode),
            empty: false,
        }
    }

    pub fn dist_k_s(&self, k: NodeId) -> Hops {
        self.to_sources[k]
    }

    pub fn dist_t_l(&self, l: NodeId) -> Hops {
        self.from_tips[l]
    }

    pub fn dist_s_l(&self, l: NodeId) -> Hops {
        self.from_sources[l]
    }

    pub fn delta_raw(&self, k: NodeId, l: NodeId) -> Hops {
        add_hops(self.dist_k_s(k), self.dist_t_l(l))
    }

    pub fn effective(&self, k: NodeId, l: NodeId, kind: MatrixKind) -> Result<Degree, BoundError> {
        if self.empty {
            return Ok(None);
        }
        let as_degree = |h: Hops| h.map(|v| v as i64);
        let dk = as_degree(self.dist_k_s(k));
        let dt = as_degree(self.dist_t_l(l));
        let ds = as_degree(self.dist_s_l(l));
        let sum = |x: Degree, y: Degree| Some(x? + y?);
        Ok(match kind {
            MatrixKind::PlainAdjacency => sum(dk, dt),
            MatrixKind::NormalizedSymmetric => {
                for node in [k, l] {
                    if self.sources.contains(&node) {
                        return Err(BoundError::NodeInPerturbedSet { node });
                    }
                }
                sum(dk, ds).map(|v| v - 1)
            }
            MatrixKind::TransitionOut => {
                let tail = match (dt, ds) {
                    (Some(t), Some(s)) => Some(t.min(s - 1)),
                    (Some(t), None) => Some(t),
                    (None, Some(s)) => Some(s - 1),
                    (None, None) => None,
                };
                sum(dk, tail)
            }
        })
    }
}

/// Degree up to which polynomials of the `kind` matrix of `g` and of its
/// perturbation by `d` agree in entry `(k, l)`.
pub fn effective_delta(
    g: &Graph,
    k: NodeId,
    l: NodeId,
    d: &EdgeDelta,
    kind: MatrixKind,
) -> Result<Degree, BoundError> {
    g.check_node(k)?;
    g.check_node(l)?;
    d.validate(g)?;
    DeltaDistances::new(g, d).effective(k, l, kind)
}

/// `p(t) = 1 + sqrt(1 + rho^2 / t^2)` with `rho^2 = a^2 - b^2`.
pub fn exp_p(rho_sq: f64, t: f64) -> f64 {
    1.0 + (1.0 + rho_sq / (t * t)).sqrt()
}

/// `q(t) = 1 + rho^2 / (t^2 + t sqrt(t^2 + rho^2))`.
pub fn exp_q(rho_sq: f64, t: f64) -> f64 {
    1.0 + rho_sq / (t * t + t * (t * t + rho_sq).sqrt())
}

fn rho_sq(region: &Region) -> f64 {
    let (a, b) = region.semi_axes();
    match region {
        Region::Disk { .. } => 0.0,
        Region::Segment { .. } => a * a,
        Region::Ellipse { .. } => (a - b) * (a + b),
    }
}

/// Bound for `f = exp` with its parameters.
pub fn exp_bound_with_params(region: &Region, delta: Degree) -> (f64, BoundParams) {
    let Some(delta) = delta else {
        return (0.0, BoundParams::default());
    };
    if region.validate().is_err() || delta < 0 {
        return (f64::INFINITY, BoundParams::default());
    }
    let (a, b) = region.semi_axes();
    let applicable = match region {
        Region::Segment { .. } => delta > 0,
        _ => (delta as f64) > b - 1.0,
    };
    if !applicable {
        return (f64::INFINITY, BoundParams::default());
    }
    let t = delta as f64 + 1.0;
    let rs = rho_sq(region);
    let p = exp_p(rs, t);
    let q = exp_q(rs, t);
    let sum = a + b;
    let ratio = sum / t;
    let log_bound =
        4f64.ln() + region.center() + (p / (p - ratio)).ln() + t * (ratio.ln() + q - p.ln());
    let tau = (t + (t * t + rs).sqrt()) / sum;
    (
        log_bound.exp(),
        BoundParams {
            tau: Some(tau),
            epsilon: None,
            p: Some(p),
            q: Some(q),
        },
    )
}

/// Closed-form bound on the variation of `exp` entries at degree `delta`.
pub fn exp_bound(region: &Region, delta: Degree) -> f64 {
    exp_bound_with_params(region, delta).0
}

fn resolvent_margin(region: &Region, alpha: f64) -> Result<(f64, f64), BoundError> {
    region.validate()?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(BoundError::InvalidAlpha(alpha));
    }
    let dist = (1.0 / alpha - region.center()).abs();
    let (a, _) = region.semi_axes();
    if dist <= a {
        return Err(BoundError::PoleInRegion {
            inv_alpha: 1.0 / alpha,
            region: *region,
        });
    }
    Ok((dist, dist - a))
}

fn log_resolvent_bound(region: &Region, alpha: f64, dist: f64, t: f64, eps: f64) -> (f64, f64) {
    let (a, b) = region.semi_axes();
    let m = dist - eps;
    let p_eps = 1.0 + (1.0 - rho_sq(region) / (m * m)).max(0.0).sqrt();
    let base = (a + b) / (m * p_eps);
    let log = 4f64.ln() - (1.0 - base).ln() - (alpha * eps).ln() + t * base.ln();
    (log, p_eps)
}

/// Bound for the resolvent `(I - alpha A)^{-1}`. `delta <= 0` yields the
/// `+inf` sentinel, `delta = +inf` yields 0.
pub fn resolvent_bound(
    region: &Region,
    alpha: f64,
    delta: Degree,
    eps: Epsilon,
) -> Result<(f64, BoundParams), BoundError> {
    let (dist, margin) = resolvent_margin(region, alpha)?;
    if let Epsilon::Fixed(e) = eps {
        if !(e > 0.0 && e < margin) {
            return Err(BoundError::EpsilonOutOfRange {
                eps: e,
                max: margin,
            });
        }
    }
    let Some(delta) = delta else {
        return Ok((0.0, BoundParams::default()));
    };
    if delta <= 0 {
        return Ok((f64::INFINITY, BoundParams::default()));
    }
    let t = delta as f64 + 1.0;
    let eps = match eps {
        Epsilon::Fixed(e) => e,
        Epsilon::Auto => {
            let lo = (margin * 1e-12).ln();
            let hi = (margin * (1.0 - 1e-12)).ln();
            let x = golden_section(
                |x| log_resolvent_bound(region, alpha, dist, t, x.exp()).0,
                lo,
                hi,
                1e-7,
            );
            x.exp()
        }
    };
    let (log, p_eps) = log_resolvent_bound(region, alpha, dist, t, eps);
    let (a, b) = region.semi_axes();
    let m = dist - eps;
    let tau = (m + (m * m - rho_sq(region)).max(0.0).sqrt()) / (a + b);
    Ok((
        log.exp(),
        BoundParams {
            tau: Some(tau),
            epsilon: Some(eps),
            p: Some(p_eps),
            q: None,
        },
    ))
}

/// Minimizer of a unimodal function on `[lo, hi]`, to absolute width `tol`.
fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Conformal map from the exterior of the unit disk onto the exterior of the region.
pub fn exterior_map(region: &Region, z: Complex64) -> Complex64 {
    let c = region.center();
    match *region {
        Region::Disk { radius, .. } => c + radius * z,
        Region::Segment { half_length, .. } => c + 0.5 * half_length * (z + z.inv()),
        Region::Ellipse {
            semi_major,
            semi_minor,
            ..
        } => {
            let rho = ((semi_major - semi_minor) * (semi_major + semi_minor)).sqrt();
            if rho == 0.0 {
                return c + semi_major * z;
            }
            let r = (semi_major + semi_minor) / rho;
            c + 0.5 * rho * (r * z + (r * z).inv())
        }
    }
}

/// Semi-axes of the image of `|z| = tau` under [`exterior_map`].
fn level_axes(region: &Region, tau: f64) -> (f64, f64) {
    match *region {
        Region::Disk { radius, .. } => (radius * tau, radius * tau),
        _ => {
            let (a, b) = region.semi_axes();
            let rho = ((a - b) * (a + b)).sqrt();
            if rho == 0.0 {
                return (a * tau, a * tau);
            }
            let rt = (a + b) / rho * tau;
            (0.5 * rho * (rt + 1.0 / rt), 0.5 * rho * (rt - 1.0 / rt))
        }
    }
}

const QUADRATURE_START: usize = 64;
const QUADRATURE_MAX: usize = 1 << 20;
const QUADRATURE_TOL: f64 = 1e-8;

/// `int_{|z| = tau} |f(psi(z))| |dz|` by the trapezoid rule with doubling.
pub fn contour_integral(
    f: &FunctionDescriptor,
    region: &Region,
    tau: f64,
) -> Result<f64, BoundError> {
    let sample = |theta: f64| {
        f.eval(exterior_map(region, Complex64::from_polar(tau, theta)))
            .norm()
    };
    let mut points = QUADRATURE_START;
    let mut sum: f64 = (0..points)
        .map(|j| sample(2.0 * PI * j as f64 / points as f64))
        .sum();
    let mut value = 2.0 * PI * tau * sum / points as f64;
    while points < QUADRATURE_MAX {
        // the new points interleave the old ones
        let extra: f64 = (0..points)
            .map(|j| sample(2.0 * PI * (j as f64 + 0.5) / points as f64))
            .sum();
        sum += extra;
        points *= 2;
        let next = 2.0 * PI * tau * sum / points as f64;
        if !next.is_finite() {
            break;
        }
        let change = (next - value).abs();
        value = next;
        if change <= QUADRATURE_TOL * value.abs() {
            return Ok(value);
        }
    }
    Err(BoundError::Quadrature { tau, points })
}

/// `mu_tau(f) (2/pi) tau/(tau - 1) tau^{-(delta + 2)}`, valid for any `f`
/// analytic inside the level curve of `tau`.
pub fn generic_tau_bound(
    f: &FunctionDescriptor,
    region: &Region,
    tau: f64,
    delta: Degree,
) -> Result<f64, BoundError> {
    region.validate()?;
    if !(tau > 1.0) || !tau.is_finite() {
        return Err(BoundError::InvalidTau(tau));
    }
    let Some(delta) = delta else {
        return Ok(0.0);
    };
    if delta < 0 {
        return Ok(f64::INFINITY);
    }
    if let FunctionDescriptor::Resolvent { alpha } = f {
        let (ax, _) = level_axes(region, tau);
        if (1.0 / alpha - region.center()).abs() <= ax {
            return Err(BoundError::NotAnalytic { tau });
        }
    }
    let mu = contour_integral(f, region, tau)?;
    let log =
        mu.ln() + (2.0 / PI).ln() + (tau / (tau - 1.0)).ln() - (delta as f64 + 2.0) * tau.ln();
    Ok(log.exp())
}

/// Minimizes [`generic_tau_bound`] over `tau` in `[tau_lo, tau_hi]`
/// (golden section on `ln(tau - 1)`), returning `(bound, tau)`.
pub fn minimize_generic_tau_bound(
    f: &FunctionDescriptor,
    region: &Region,
    delta: Degree,
    tau_lo: f64,
    tau_hi: f64,
) -> Result<(f64, f64), BoundError> {
    if !(tau_lo > 1.0) {
        return Err(BoundError::InvalidTau(tau_lo));
    }
    if !(tau_hi > tau_lo) {
        return Err(BoundError::InvalidTau(tau_hi));
    }
    if delta.is_none() {
        return Ok((0.0, tau_lo));
    }
    let eval = |x: f64| generic_tau_bound(f, region, 1.0 + x.exp(), delta);
    let objective = |x: f64| eval(x).map(f64::ln).unwrap_or(f64::INFINITY);
    let x = golden_section(objective, (tau_lo - 1.0).ln(), (tau_hi - 1.0).ln(), 1e-6);
    let tau = 1.0 + x.exp();
    Ok((generic_tau_bound(f, region, tau, delta)?, tau))
}

/// Bracket used for [`FunctionDescriptor::Custom`] in batch reports.
pub const CUSTOM_TAU_RANGE: (f64, f64) = (1.0 + 1e-6, 64.0);

/// Bound for any supported function at degree `delta`.
pub fn bound_for(
    f: &FunctionDescriptor,
    region: &Region,
    delta: Degree,
    eps: Epsilon,
) -> Result<(f64, BoundParams), BoundError> {
    match f {
        FunctionDescriptor::Exp => {
            region.validate()?;
            Ok(exp_bound_with_params(region, delta))
        }
        FunctionDescriptor::Resolvent { alpha } => resolvent_bound(region, *alpha, delta, eps),
        FunctionDescriptor::Custom { .. } => {
            if delta.is_some_and(|d| d < 0) {
                return Ok((f64::INFINITY, BoundParams::default()));
            }
            let (bound, tau) = minimize_generic_tau_bound(
                f,
                region,
                delta,
                CUSTOM_TAU_RANGE.0,
                CUSTOM_TAU_RANGE.1,
            )?;
            Ok((
                bound,
                BoundParams {
                    tau: Some(tau),
                    ..BoundParams::default()
                },
            ))
        }
    }
}

/// Options for [`stability_report`].
#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    /// Use this region instead of computing one.
    pub region: Option<Region>,
    /// Relative tolerance of the numerical radius estimate.
    pub tol: f64,
    pub epsilon: Epsilon,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            region: None,
            tol: 1e-10,
            epsilon: Epsilon::Auto,
        }
    }
}

/// Region enclosing the fields of values of the original and perturbed matrices.
pub fn perturbation_region(
    g: &Graph,
    d: &EdgeDelta,
    kind: MatrixKind,
    tol: f64,
) -> Result<Region, BoundError> {
    let a = build_matrix(g, kind)?;
    let perturbed = apply_delta(g, d)?;
    let at = build_matrix(&perturbed, kind)?;
    Ok(enclosing_region(&a, Some(&at), kind, tol)?)
}

/// One bound per requested pair; the region is computed once. Region and
/// delta problems fail the whole batch, per-pair problems only their entry.
pub fn stability_report(
    g: &Graph,
    d: &EdgeDelta,
    kind: MatrixKind,
    f: &FunctionDescriptor,
    pairs: &[(NodeId, NodeId)],
    opts: &ReportOptions,
) -> Result<Vec<Result<BoundReport, BoundError>>, BoundError> {
    d.validate(g)?;
    let region = match opts.region {
        Some(r) => {
            r.validate()?;
            r
        }
        None => perturbation_region(g, d, kind, opts.tol)?,
    };
    if let FunctionDescriptor::Resolvent { alpha } = f {
        resolvent_margin(&region, *alpha)?;
    }
    let dists = DeltaDistances::new(g, d);
    let reports = pairs
        .par_iter()
        .map(|&(k, l)| {
            g.check_node(k)?;
            g.check_node(l)?;
            let delta_effective = dists.effective(k, l, kind)?;
            let (bound, params) = bound_for(f, &region, delta_effective, opts.epsilon)?;
            Ok(BoundReport {
                k,
                l,
                dist_k_s: dists.dist_k_s(k),
                dist_t_l: dists.dist_t_l(l),
                delta_raw: dists.delta_raw(k, l),
                delta_effective,
                region,
                function: f.clone(),
                bound,
                params,
            })
        })
        .collect();
    Ok(reports)
}
