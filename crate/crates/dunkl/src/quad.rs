//! Deterministic weighted quadrature of `∫ integrand(x)·w_k(x) dx` over
//! balls, annuli and boxes in R^n, n ∈ {1, 2, 3}.
//!
//! Balls and annuli are parameterised in polar/spherical coordinates so the
//! radial factor r^{n−1} is explicit and the weight's low regularity along
//! reflection hyperplanes is absorbed by angular subdivision. Refinement is
//! dyadic and uniform per level; the rule stops as soon as two consecutive
//! levels agree to `rtol`. Node order and the pairwise-summation tree are
//! fixed, so repeated runs are bit-identical.

use crate::rootsys::RootSystem;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, r_in: f64, r_out: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Ball { center, .. } | Region::Annulus { center, .. } => center.len(),
            Region::Box { lo, .. } => lo.len(),
        }
    }

    /// A ball that contains the region; used for sampling batteries.
    pub fn bounding_ball(&self) -> (Vec<f64>, f64) {
        match self {
            Region::Ball { center, radius } => (center.clone(), *radius),
            Region::Annulus { center, r_out, .. } => (center.clone(), *r_out),
            Region::Box { lo, hi } => {
                let center: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
                let radius = lo
                    .iter()
                    .zip(hi)
                    .map(|(a, b)| 0.5 * (b - a))
                    .fold(0.0f64, |acc, h| acc + h * h)
                    .sqrt();
                (center, radius)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadSpec {
    pub region: Region,
    /// tensor Gauss–Legendre order per axis
    pub order: usize,
    /// dyadic subdivision levels tried (level 0 included)
    pub max_refine: u32,
    pub rtol: f64,
    /// Radii about the region center at which the integrand may kink or
    /// jump (cutoff ramps, level sets of radial fields). The radial axis is
    /// split there so the pieces are smooth; in 1D these map to the two
    /// mirrored coordinates center ± r.
    #[serde(default)]
    pub breaks: Vec<f64>,
}

impl QuadSpec {
    pub fn new(region: Region) -> Self {
        QuadSpec { region, order: 48, max_refine: 6, rtol: 1e-7, breaks: Vec::new() }
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn with_max_refine(mut self, levels: u32) -> Self {
        self.max_refine = levels;
        self
    }

    pub fn with_breaks(mut self, mut breaks: Vec<f64>) -> Self {
        breaks.retain(|b| b.is_finite() && *b >= 0.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        self.breaks = breaks;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if let Region::Annulus { r_in, r_out, .. } = &self.region {
            if r_in >= r_out {
                return Err(format!("annulus needs r_in < r_out, got {r_in} ≥ {r_out}"));
            }
        }
        if self.rtol <= 0.0 {
            return Err("rtol must be positive".into());
        }
        if self.order < 4 {
            return Err(format!("order must be ≥ 4, got {}", self.order));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
    pub evaluations: u64,
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult { value: 0.0, error_estimate: 0.0, converged: true, evaluations: 0 }
    }
}

// ---------------------------------------------------------------------------
// Gauss–Legendre nodes

static GL_CACHE: Lazy<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    if let Some(hit) = GL_CACHE.lock().unwrap().get(&n) {
        return hit.clone();
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-based initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P'_n by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            pp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GL_CACHE.lock().unwrap().insert(n, (nodes.clone(), weights.clone()));
    (nodes, weights)
}

/// Deterministic pairwise summation over a fixed-order slice.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

// ---------------------------------------------------------------------------
// integration

/// Angular split points isolating the weight's hyperplane kinks: for each
/// root, the directions orthogonal to it. Computed per root system so polar
/// parameterisations see smooth pieces.
#[derive(Debug, Clone, Default)]
struct AngularBreaks {
    /// azimuth angles in (0, 2π) — 2-d and 3-d
    azimuth: Vec<f64>,
    /// polar angles in (0, π) — 3-d only
    polar: Vec<f64>,
}

fn angular_breaks(rs: &RootSystem) -> AngularBreaks {
    let mut out = AngularBreaks::default();
    match rs.dim() {
        2 => {
            for (alpha, k) in rs.positive_roots() {
                if k == 0.0 {
                    continue;
                }
                let a = alpha[1].atan2(alpha[0]);
                for kink in [a + PI / 2.0, a - PI / 2.0, a + 3.0 * PI / 2.0] {
                    let t = kink.rem_euclid(2.0 * PI);
                    if t > 1e-12 && t < 2.0 * PI - 1e-12 {
                        out.azimuth.push(t);
                    }
                }
            }
        }
        3 => {
            // catalog 3-d systems are axis-aligned (Z₂^3); their hyperplanes
            // are coordinate planes, exactly representable as axis splits
            for (alpha, k) in rs.positive_roots() {
                if k == 0.0 {
                    continue;
                }
                let axis = alpha.iter().position(|c| c.abs() > 1e-9);
                match axis {
                    Some(0) => out.azimuth.extend([PI / 2.0, 3.0 * PI / 2.0]),
                    Some(1) => out.azimuth.push(PI),
                    Some(2) => out.polar.push(PI / 2.0),
                    _ => {}
                }
            }
        }
        _ => {}
    }
    let tidy = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    };
    tidy(&mut out.azimuth);
    tidy(&mut out.polar);
    out
}

/// ∫_region integrand(x)·w_k(x) dx.
///
/// The integrand must be total on the region (indicator guards are applied
/// by the caller). A non-converged result is returned with the flag down;
/// the caller decides whether that is an error.
pub fn integrate(
    rs: &RootSystem,
    integrand: &(dyn Fn(&[f64]) -> f64 + Sync),
    spec: &QuadSpec,
) -> QuadResult {
    let weighted = |x: &[f64]| integrand(x) * rs.weight(x);
    if rs.dim() == 1 && rs.positive_roots().any(|(_, k)| k > 0.0) {
        // the weight |x|^{2k} kinks at the hyperplane x = 0; split there
        let (center, _) = spec.region.bounding_ball();
        let mut spec1 = spec.clone();
        spec1.breaks.push(center[0].abs());
        let spec1 = spec1.clone().with_breaks(spec1.breaks.clone());
        integrate_with(&weighted, &spec1, &AngularBreaks::default())
    } else {
        integrate_with(&weighted, spec, &angular_breaks(rs))
    }
}

/// Same as [`integrate`] but without the w_k factor.
pub fn integrate_raw(f: &(dyn Fn(&[f64]) -> f64 + Sync), spec: &QuadSpec) -> QuadResult {
    integrate_with(f, spec, &AngularBreaks::default())
}

fn integrate_with(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    spec: &QuadSpec,
    angular: &AngularBreaks,
) -> QuadResult {
    let mut prev = f64::NAN;
    let mut evals: u64 = 0;
    let mut value = 0.0;
    let mut err = f64::INFINITY;
    for level in 0..=spec.max_refine {
        let cells_per_axis = 1usize << level;
        let (v, n) = level_value(f, spec, angular, cells_per_axis);
        evals += n;
        value = v;
        if level > 0 {
            err = (value - prev).abs();
            if err <= spec.rtol * (value.abs() + 1e-300) {
                return QuadResult { value, error_estimate: err, converged: true, evaluations: evals };
            }
        }
        prev = value;
    }
    QuadResult { value, error_estimate: err, converged: false, evaluations: evals }
}

fn level_value(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    spec: &QuadSpec,
    angular: &AngularBreaks,
    cells: usize,
) -> (f64, u64) {
    let dim = spec.region.dim();
    match &spec.region {
        Region::Box { lo, hi } => {
            if dim == 1 && !spec.breaks.is_empty() {
                let center = 0.5 * (lo[0] + hi[0]);
                let pts = split_points(lo[0], hi[0], center, &spec.breaks);
                let pieces: Vec<(f64, f64)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
                tensor_pieces(&[pieces], cells, spec.order, &mut |u| f(u))
            } else {
                let axes: Vec<Vec<(f64, f64)>> =
                    lo.iter().zip(hi).map(|(&a, &b)| vec![(a, b)]).collect();
                tensor_pieces(&axes, cells, spec.order, &mut |u| f(u))
            }
        }
        Region::Ball { center, radius } => {
            radial_integrate(f, center, 0.0, *radius, dim, cells, spec.order, &spec.breaks, angular)
        }
        Region::Annulus { center, r_in, r_out } => radial_integrate(
            f,
            center,
            *r_in,
            *r_out,
            dim,
            cells,
            spec.order,
            &spec.breaks,
            angular,
        ),
    }
}

/// Splits [lo, hi] at center ± r for every break radius r, keeping only
/// interior points; the result is a sorted partition of [lo, hi].
fn split_points(lo: f64, hi: f64, center: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    for &r in breaks {
        for cand in [center - r, center + r] {
            if cand > lo + 1e-13 && cand < hi - 1e-13 {
                pts.push(cand);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    pts
}

/// Splits the interval [a, b] at the given interior points.
fn segments(a: f64, b: f64, cuts: &[f64]) -> Vec<(f64, f64)> {
    let mut pts = vec![a, b];
    for &r in cuts {
        if r > a + 1e-13 && r < b - 1e-13 {
            pts.push(r);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
    pts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Quintic graded map [0,1] → [a,b]: q(τ) = 10τ³ − 15τ⁴ + 6τ⁵ with
/// q′ = 30τ²(1−τ)². The vanishing jacobian at both ends tames algebraic
/// endpoint cusps (weight kinks at hyperplane angles, ρ^{1+2γ} at the
/// origin) so composite Gauss–Legendre converges at high order again.
#[inline]
fn graded_map(a: f64, b: f64, tau: f64) -> (f64, f64) {
    let t2 = tau * tau;
    let q = t2 * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
    let one = 1.0 - tau;
    let dq = 30.0 * t2 * one * one;
    (a + (b - a) * q, (b - a) * dq)
}

/// Tensor Gauss–Legendre over a cartesian product of per-axis piece lists
/// (each axis is a union of disjoint intervals), every piece mapped through
/// the graded substitution and dyadically split into `cells` subintervals.
/// Fixed lexicographic iteration order and a fixed pairwise-summation tree
/// keep the result bit-deterministic.
fn tensor_pieces(
    axes_pieces: &[Vec<(f64, f64)>],
    cells: usize,
    order: usize,
    eval: &mut dyn FnMut(&[f64]) -> f64,
) -> (f64, u64) {
    let dim = axes_pieces.len();
    let unit: Vec<(f64, f64)> = vec![(0.0, 1.0); dim];
    let mut parts: Vec<f64> = Vec::new();
    let mut evals: u64 = 0;
    let mut piece_idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    loop {
        let axes: Vec<(f64, f64)> = (0..dim).map(|d| axes_pieces[d][piece_idx[d]]).collect();
        let (v, n) = tensor_integrate(&unit, cells, order, &mut |tau: &[f64]| {
            let mut jac = 1.0;
            for d in 0..dim {
                let (xd, jd) = graded_map(axes[d].0, axes[d].1, tau[d]);
                x[d] = xd;
                jac *= jd;
            }
            if jac == 0.0 {
                0.0
            } else {
                jac * eval(&x)
            }
        });
        parts.push(v);
        evals += n;
        // mixed-radix odometer over piece indices
        let mut axis = 0;
        loop {
            if axis == dim {
                return (pairwise_sum(&parts), evals);
            }
            piece_idx[axis] += 1;
            if piece_idx[axis] < axes_pieces[axis].len() {
                break;
            }
            piece_idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Tensor Gauss–Legendre over a box in parameter space, dyadically split
/// into `cells` subintervals per axis, with the map applied pointwise.
fn tensor_integrate(
    axes: &[(f64, f64)],
    cells: usize,
    order: usize,
    eval: &mut dyn FnMut(&[f64]) -> f64,
) -> (f64, u64) {
    let dim = axes.len();
    let (nodes, weights) = gauss_legendre(order);
    let mut contributions: Vec<f64> = Vec::new();
    let mut evals: u64 = 0;

    // iterate cells then nodes in fixed lexicographic order
    let mut cell_idx = vec![0usize; dim];
    let mut node_idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    loop {
        // sub-box for this cell
        let mut cell_jac = 1.0;
        let mut sub: Vec<(f64, f64)> = Vec::with_capacity(dim);
        for d in 0..dim {
            let (a, b) = axes[d];
            let h = (b - a) / cells as f64;
            let lo = a + h * cell_idx[d] as f64;
            sub.push((lo, lo + h));
            cell_jac *= h / 2.0;
        }
        node_idx.iter_mut().for_each(|i| *i = 0);
        loop {
            let mut wprod = cell_jac;
            for d in 0..dim {
                let (a, b) = sub[d];
                x[d] = 0.5 * (a + b) + 0.5 * (b - a) * nodes[node_idx[d]];
                wprod *= weights[node_idx[d]];
            }
            contributions.push(wprod * eval(&x));
            evals += 1;
            if !odometer(&mut node_idx, order) {
                break;
            }
        }
        if !odometer(&mut cell_idx, cells) {
            break;
        }
    }
    (pairwise_sum(&contributions), evals)
}

fn odometer(idx: &mut [usize], base: usize) -> bool {
    for d in idx.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

#[allow(clippy::too_many_arguments)]
fn radial_integrate(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    center: &[f64],
    r_in: f64,
    r_out: f64,
    dim: usize,
    cells: usize,
    order: usize,
    breaks: &[f64],
    angular: &AngularBreaks,
) -> (f64, u64) {
    match dim {
        1 => {
            // mirrored intervals (one when r_in = 0), split at center ± break
            let c = center[0];
            let intervals = if r_in == 0.0 {
                vec![(c - r_out, c + r_out)]
            } else {
                vec![(c - r_out, c - r_in), (c + r_in, c + r_out)]
            };
            let mut total = Vec::new();
            let mut evals = 0;
            for (lo, hi) in intervals {
                let pts = split_points(lo, hi, c, breaks);
                let pieces: Vec<(f64, f64)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
                let (v, n) = tensor_pieces(&[pieces], cells, order, &mut |u| f(u));
                total.push(v);
                evals += n;
            }
            (pairwise_sum(&total), evals)
        }
        2 => {
            let axes = vec![
                segments(r_in, r_out, breaks),
                segments(0.0, 2.0 * PI, &angular.azimuth),
            ];
            tensor_pieces(&axes, cells, order, &mut |u| {
                let (rho, th) = (u[0], u[1]);
                let x = [center[0] + rho * th.cos(), center[1] + rho * th.sin()];
                rho * f(&x)
            })
        }
        3 => {
            let axes = vec![
                segments(r_in, r_out, breaks),
                segments(0.0, PI, &angular.polar),
                segments(0.0, 2.0 * PI, &angular.azimuth),
            ];
            tensor_pieces(&axes, cells, order, &mut |u| {
                let (rho, th, ph) = (u[0], u[1], u[2]);
                let x = [
                    center[0] + rho * th.sin() * ph.cos(),
                    center[1] + rho * th.sin() * ph.sin(),
                    center[2] + rho * th.cos(),
                ];
                rho * rho * th.sin() * f(&x)
            })
        }
        d => panic!("quadrature supports n ≤ 3, got {d}"),
    }
}

/// θ_{n−1} = 2π^{n/2}/Γ(n/2) — the surface measure of the unit sphere.
pub fn surface_measure(n: usize) -> f64 {
    assert!(n >= 1);
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half_integer(n)
}

/// Γ(n/2) for integer n ≥ 1.
fn gamma_half_integer(n: usize) -> f64 {
    if n % 2 == 0 {
        // Γ(m) = (m−1)!
        let m = n / 2;
        (1..m).map(|i| i as f64).product::<f64>().max(1.0)
    } else {
        // Γ(1/2 + m) = (2m−1)!!/2^m √π
        let m = n / 2;
        let mut acc = PI.sqrt();
        for i in 0..m {
            acc *= 0.5 + i as f64;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rank1(k: f64) -> RootSystem {
        RootSystem::build("rank1", 1, &[k]).unwrap()
    }

    #[test]
    fn gl_nodes_integrate_polynomials_exactly() {
        let (nodes, weights) = gauss_legendre(8);
        // degree-15 polynomial is exact for an 8-point rule
        let val: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * x.powi(14)).sum();
        assert_relative_eq!(val, 2.0 / 15.0, max_relative = 1e-13);
        let total: f64 = weights.iter().sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn rank1_weighted_ball() {
        // ∫_{−1}^{1} 2^k |x|^{2k} dx = 2^{k+1}/(2k+1)
        for k in [0.0, 0.5, 1.0, 1.5] {
            let rs = rank1(k);
            let spec = QuadSpec::new(Region::Ball { center: vec![0.0], radius: 1.0 });
            let r = integrate(&rs, &|_x| 1.0, &spec);
            assert!(r.converged);
            assert_relative_eq!(r.value, 2f64.powf(k + 1.0) / (2.0 * k + 1.0), max_relative = 1e-6);
        }
    }

    #[test]
    fn unit_disk_area() {
        let rs = RootSystem::build("product_Z2", 2, &[0.0, 0.0]).unwrap();
        let spec =
            QuadSpec::new(Region::Ball { center: vec![0.0, 0.0], radius: 1.0 }).with_order(24);
        let r = integrate(&rs, &|_x| 1.0, &spec);
        assert!(r.converged);
        assert_relative_eq!(r.value, PI, max_relative = 1e-9);
    }

    #[test]
    fn separable_box_weight() {
        // ∫_{[0,1]²} w_k = 2^{k1+k2}/((2k1+1)(2k2+1))
        let (k1, k2) = (0.5, 1.25);
        let rs = RootSystem::build("product_Z2", 2, &[k1, k2]).unwrap();
        let spec = QuadSpec::new(Region::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] })
            .with_order(32);
        let r = integrate(&rs, &|_x| 1.0, &spec);
        assert!(r.converged);
        let exact = 2f64.powf(k1 + k2) / ((2.0 * k1 + 1.0) * (2.0 * k2 + 1.0));
        assert_relative_eq!(r.value, exact, max_relative = 1e-6);
    }

    #[test]
    fn additivity_ball_annulus() {
        let rs = rank1(0.75);
        let f = |x: &[f64]| (-x[0] * x[0]).exp();
        let whole = integrate(&rs, &f, &QuadSpec::new(Region::Ball { center: vec![0.0], radius: 2.0 }));
        let inner = integrate(&rs, &f, &QuadSpec::new(Region::Ball { center: vec![0.0], radius: 1.0 }));
        let ring = integrate(
            &rs,
            &f,
            &QuadSpec::new(Region::Annulus { center: vec![0.0], r_in: 1.0, r_out: 2.0 }),
        );
        assert!(whole.converged && inner.converged && ring.converged);
        assert_relative_eq!(whole.value, inner.value + ring.value, max_relative = 1e-7);
    }

    #[test]
    fn dense_riemann_oracle_1d() {
        // 10⁶-point midpoint rule vs integrate, on a weighted Gaussian
        let rs = rank1(1.0);
        let f = |x: &[f64]| (-2.0 * x[0] * x[0]).exp();
        let spec = QuadSpec::new(Region::Ball { center: vec![0.0], radius: 3.0 });
        let r = integrate(&rs, &f, &spec);
        let n = 1_000_000;
        let (a, b) = (-3.0, 3.0);
        let h = (b - a) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = [a + (i as f64 + 0.5) * h];
            acc += f(&x) * rs.weight(&x);
        }
        acc *= h;
        assert_relative_eq!(r.value, acc, max_relative = 1e-5);
    }

    #[test]
    fn indicator_integrand_converges_by_refinement() {
        let rs = rank1(0.0);
        // hard indicator {x > 0.3} on [−1, 1]
        let f = |x: &[f64]| if x[0] > 0.3 { 1.0 } else { 0.0 };
        let spec = QuadSpec::new(Region::Ball { center: vec![0.0], radius: 1.0 })
            .with_max_refine(10)
            .with_rtol(1e-4);
        let r = integrate(&rs, &f, &spec);
        assert!((r.value - 0.7).abs() < 5e-3);
    }

    #[test]
    fn sphere_measures() {
        assert_relative_eq!(surface_measure(1), 2.0);
        assert_relative_eq!(surface_measure(2), 2.0 * PI);
        assert_relative_eq!(surface_measure(3), 4.0 * PI);
    }

    #[test]
    fn determinism_bitwise() {
        let rs = RootSystem::build("A2", 2, &[0.6]).unwrap();
        let f = |x: &[f64]| (1.0 + x[0] * x[0] + 0.5 * x[1]).abs().sqrt();
        let spec = QuadSpec::new(Region::Ball { center: vec![0.1, -0.2], radius: 1.5 })
            .with_order(16);
        let a = integrate(&rs, &f, &spec);
        let b = integrate(&rs, &f, &spec);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn spec_validation() {
        let bad = QuadSpec::new(Region::Annulus { center: vec![0.0], r_in: 2.0, r_out: 1.0 });
        assert!(bad.validate().is_err());
        let bad2 = QuadSpec::new(Region::Ball { center: vec![0.0], radius: 1.0 }).with_order(2);
        assert!(bad2.validate().is_err());
    }
}
