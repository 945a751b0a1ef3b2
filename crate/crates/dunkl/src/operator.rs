//! The Dunkl operator `T_ξ`, gradient `∇_k`, Laplacian `Δ_k`, the weak
//! A-Laplacian pairing, the differential-inequality residual and the
//! chain-rule checker for G-invariant fields.
//!
//! With the |α|² = 2 normalisation,
//!
//! ```text
//! T_ξ f(x) = ∂_ξ f(x) + Σ_{α∈R₊} k(α) ⟨α,ξ⟩ (f(x) − f(σ_α x)) / ⟨α,x⟩
//! ```
//!
//! and the difference quotient is replaced by its exact limit ⟨∇f(x), α⟩
//! within `hyperplane_epsilon` of a reflection hyperplane (x − σ_α x =
//! ⟨α,x⟩α makes the singularity removable). The Laplacian uses the displayed
//! representation Δf + 2Σ k(α)(⟨∇f,α⟩/⟨α,x⟩ − (f−f∘σ_α)/⟨α,x⟩²), whose
//! bracket tends to ½⟨α, ∇²f α⟩ on the hyperplane.

use crate::dsl::{Expr, Field, Profile};
use crate::quad::{integrate, QuadResult, QuadSpec};
use crate::rootsys::{reflect_vec, RootSystem};
use crate::vecn::{dot, norm};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use thiserror::Error;

/// Below this threshold |∇_k u| is treated as zero when restricting
/// integrands to {∇_k u ≠ 0}; Λ(s)/s → 0 at 0 makes the integrands vanish
/// there anyway, the threshold only avoids 0·∞ in B.
pub const GRADIENT_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("field `{label}` is not G-invariant: worst deviation {worst:.3e} at {at:?}")]
    NotInvariant { label: String, worst: f64, at: Vec<f64> },
    #[error("test function `{0}` is negative at a sampled point {1:?}")]
    NegativeTestFunction(String, Vec<f64>),
    #[error("dimension mismatch: field has dim {field}, context has dim {ctx}")]
    Dimension { field: usize, ctx: usize },
}

/// Evaluation context: the root system plus the hyperplane guard width.
#[derive(Debug, Clone)]
pub struct DunklContext {
    pub rs: Arc<RootSystem>,
    pub hyperplane_epsilon: f64,
}

impl DunklContext {
    pub fn new(rs: Arc<RootSystem>) -> Self {
        DunklContext { rs, hyperplane_epsilon: 1e-8 }
    }

    pub fn dim(&self) -> usize {
        self.rs.dim()
    }
}

/// T_j f(x) along the j-th coordinate direction.
pub fn dunkl_apply(ctx: &DunklContext, j: usize, f: &Field, x: &[f64]) -> f64 {
    let mut acc = f.grad_j(j, x);
    for (alpha, k) in ctx.rs.positive_roots() {
        if k == 0.0 {
            continue;
        }
        let t = dot(alpha, x);
        let quotient = if t.abs() < ctx.hyperplane_epsilon {
            // removable singularity: the quotient's limit is ⟨∇f, α⟩ on the
            // hyperplane; evaluating at the midpoint projection x − (t/2)α
            // (which lies on it) keeps the error O(t²)
            let mid: Vec<f64> = x.iter().zip(alpha).map(|(xi, ai)| xi - 0.5 * t * ai).collect();
            dot(&f.grad(&mid), alpha)
        } else {
            let sx = reflect_vec(alpha, x);
            (f.value(x) - f.value(&sx)) / t
        };
        acc += k * alpha[j] * quotient;
    }
    acc
}

/// ∇_k f(x) = (T_1 f, …, T_n f)(x).
pub fn dunkl_gradient(ctx: &DunklContext, f: &Field, x: &[f64]) -> Vec<f64> {
    (0..ctx.dim()).map(|j| dunkl_apply(ctx, j, f, x)).collect()
}

/// Δ_k f(x) via the displayed representation, with the second-order limit
/// ½⟨α, ∇²f α⟩ substituted for the bracket within the hyperplane guard.
pub fn dunkl_laplacian(ctx: &DunklContext, f: &Field, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    // classical Laplacian from the symbolic Hessian diagonal
    let h = f.hessian();
    for (j, row) in h.iter().enumerate() {
        acc += row[j].eval(x);
    }
    for (alpha, k) in ctx.rs.positive_roots() {
        if k == 0.0 {
            continue;
        }
        let t = dot(alpha, x);
        let bracket = if t.abs() < ctx.hyperplane_epsilon {
            let mid: Vec<f64> = x.iter().zip(alpha).map(|(xi, ai)| xi - 0.5 * t * ai).collect();
            0.5 * f.second_directional(alpha, &mid)
        } else {
            let sx = reflect_vec(alpha, x);
            dot(&f.grad(x), alpha) / t - (f.value(x) - f.value(&sx)) / (t * t)
        };
        acc += 2.0 * k * bracket;
    }
    acc
}

/// Builds the symbolic expression of T_j f as an AST (difference quotients
/// spelled out with σ_α-substituted copies of f). Only valid away from the
/// reflection hyperplanes; used as the independent T∘T oracle for Δ_k.
pub fn dunkl_apply_expr(ctx: &DunklContext, j: usize, f: &Field) -> Arc<Expr> {
    use crate::dsl::BinOp::*;
    let n = ctx.dim();
    let mut acc = f.gradient[j].clone();
    for (alpha, k) in ctx.rs.positive_roots() {
        if k == 0.0 {
            continue;
        }
        // x ↦ σ_α x is linear: x_i − α_i Σ_m α_m x_m
        let ip: Arc<Expr> = {
            let mut terms: Option<Arc<Expr>> = None;
            for (m, &am) in alpha.iter().enumerate() {
                let term = Expr::bin(Mul, Expr::num(am), Expr::var(m));
                terms = Some(match terms {
                    None => term,
                    Some(t) => Expr::bin(Add, t, term),
                });
            }
            terms.unwrap()
        };
        let reflected_vars: Vec<Arc<Expr>> = (0..n)
            .map(|i| {
                Expr::bin(
                    Sub,
                    Expr::var(i),
                    Expr::bin(Mul, Expr::num(alpha[i]), ip.clone()),
                )
            })
            .collect();
        let f_sigma = f.expr.subst_vars(&reflected_vars);
        let quotient = Expr::bin(Div, Expr::bin(Sub, f.expr.clone(), f_sigma), ip.clone());
        acc = Expr::bin(Add, acc, Expr::bin(Mul, Expr::num(k * alpha[j]), quotient));
    }
    acc
}

/// G-invariance check by sampling: true iff
/// max |f(σ_α x) − f(x)| ≤ 1e−9·(1 + |f(x)|) over the battery.
pub struct InvarianceReport {
    pub invariant: bool,
    pub worst: f64,
    pub worst_point: Vec<f64>,
    pub worst_root: usize,
}

pub fn check_g_invariance(
    rs: &RootSystem,
    f: &Field,
    samples: usize,
    seed: u64,
) -> InvarianceReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut worst_point = vec![0.0; rs.dim()];
    let mut worst_root = 0;
    let mut invariant = true;
    for _ in 0..samples.max(1) {
        let x: Vec<f64> = (0..rs.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let fx = f.value(&x);
        for (i, alpha) in rs.roots().iter().enumerate() {
            let sx = reflect_vec(alpha, &x);
            let dev = (f.value(&sx) - fx).abs();
            let rel = dev / (1.0 + fx.abs());
            if rel > worst {
                worst = rel;
                worst_point = x.clone();
                worst_root = i;
            }
            if dev > 1e-9 * (1.0 + fx.abs()) {
                invariant = false;
            }
        }
    }
    InvarianceReport { invariant, worst, worst_point, worst_root }
}

// ---------------------------------------------------------------------------
// the A-Laplacian

#[derive(Debug, Error)]
pub enum ALaplacianError {
    #[error("Λ(s) − B(s)s² deviates by {0:.3e} on the check grid")]
    LambdaMismatch(f64),
    #[error("Λ failed the N-function check: {0}")]
    NotNFunction(String),
}

/// A(x) = B(|x|)x with Λ(s) = B(s)s² an N-function.
#[derive(Debug, Clone)]
pub struct ALaplacian {
    pub b_profile: Profile,
    pub lambda: Profile,
}

impl ALaplacian {
    /// Builds from B, deriving Λ = B(s)·s².
    pub fn from_b(b_profile: Profile) -> Result<Self, ALaplacianError> {
        use crate::dsl::BinOp::*;
        let lambda_expr = Expr::bin(
            Mul,
            b_profile.expr.clone(),
            Expr::bin(Pow, Expr::var(0), Expr::num(2.0)),
        );
        let lambda = Profile::new(lambda_expr, format!("({})*s^2", b_profile.label)).unwrap();
        let a = ALaplacian { b_profile, lambda };
        a.validate()?;
        Ok(a)
    }

    /// Builds from Λ, deriving B = Λ(s)/s².
    pub fn from_lambda(lambda: Profile) -> Result<Self, ALaplacianError> {
        use crate::dsl::BinOp::*;
        let b_expr = Expr::bin(
            Div,
            lambda.expr.clone(),
            Expr::bin(Pow, Expr::var(0), Expr::num(2.0)),
        );
        let b_profile = Profile::new(b_expr, format!("({})/s^2", lambda.label)).unwrap();
        let a = ALaplacian { b_profile, lambda };
        a.validate()?;
        Ok(a)
    }

    fn validate(&self) -> Result<(), ALaplacianError> {
        let grid = log_grid(1e-6, 1e6, 200);
        let mut prev_slope = f64::NEG_INFINITY;
        for window in grid.windows(2) {
            let (s0, s1) = (window[0], window[1]);
            let (v0, v1) = (self.lambda.value(s0), self.lambda.value(s1));
            let mismatch = (v0 - self.b_profile.value(s0) * s0 * s0).abs();
            if mismatch > 1e-12 * (1.0 + v0.abs()) {
                return Err(ALaplacianError::LambdaMismatch(mismatch));
            }
            let slope = (v1 - v0) / (s1 - s0);
            if slope < prev_slope * (1.0 - 1e-9) - 1e-10 {
                return Err(ALaplacianError::NotNFunction(format!(
                    "secant slope decreases near s = {s0:.3e}"
                )));
            }
            prev_slope = slope;
        }
        // N-function limits at the grid endpoints (trend check)
        let s_lo = grid[0];
        let s_hi = *grid.last().unwrap();
        if self.lambda.value(s_lo) / s_lo > 1e-3 {
            return Err(ALaplacianError::NotNFunction("Λ(s)/s does not vanish at 0".into()));
        }
        if s_hi / self.lambda.value(s_hi) > 1e-3 {
            return Err(ALaplacianError::NotNFunction("s/Λ(s) does not vanish at ∞".into()));
        }
        Ok(())
    }

    pub fn b(&self, s: f64) -> f64 {
        self.b_profile.value(s)
    }

    pub fn lambda_at(&self, s: f64) -> f64 {
        self.lambda.value(s)
    }
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (llo + (lhi - llo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

// ---------------------------------------------------------------------------
// weak pairing and the differential-inequality residual

/// ⟨Δ_{k,A}u, v⟩ = −∫_{|∇_k u|≠0} B(|∇_k u|)⟨∇_k u, ∇_k v⟩ w_k dx over the
/// region (the test function is assumed supported inside it).
pub fn weak_a_pairing(
    ctx: &DunklContext,
    a: &ALaplacian,
    u: &Field,
    v: &Field,
    spec: &QuadSpec,
) -> QuadResult {
    let integrand = move |x: &[f64]| {
        let gu = dunkl_gradient(ctx, u, x);
        let m = norm(&gu);
        if m <= GRADIENT_ZERO_TOL {
            return 0.0;
        }
        let gv = dunkl_gradient(ctx, v, x);
        -a.b(m) * dot(&gu, &gv)
    };
    integrate(&ctx.rs, &integrand, spec)
}

/// Margin of the differential inequality against one test function:
/// ⟨−Δ_{k,A}u, v⟩ − ∫_{u>0} b Φ(u) v w_k dx. Nonnegative margin ⟺ the
/// inequality holds against v.
pub struct DdiResidual {
    pub pairing: f64,
    pub source_term: f64,
    pub margin: f64,
    pub converged: bool,
}

pub fn ddi_residual(
    ctx: &DunklContext,
    a: &ALaplacian,
    u: &Field,
    b: &Field,
    phi_nl: &Profile,
    v: &Field,
    spec: &QuadSpec,
    sample_seed: u64,
) -> Result<DdiResidual, OperatorError> {
    // precondition: v ≥ 0 on sampled points of the region
    let (center, radius) = spec.region.bounding_ball();
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    for _ in 0..200 {
        let x: Vec<f64> = center
            .iter()
            .map(|c| c + rng.gen_range(-radius..radius))
            .collect();
        if v.value(&x) < -1e-12 {
            return Err(OperatorError::NegativeTestFunction(v.label.clone(), x));
        }
    }
    let lhs = {
        let pairing = weak_a_pairing(ctx, a, u, v, spec);
        QuadResult { value: -pairing.value, ..pairing }
    };
    let rhs = {
        let integrand = move |x: &[f64]| {
            let uv = u.value(x);
            if uv > 0.0 {
                b.value(x) * phi_nl.value(uv) * v.value(x)
            } else {
                0.0
            }
        };
        integrate(&ctx.rs, &integrand, spec)
    };
    Ok(DdiResidual {
        pairing: lhs.value,
        source_term: rhs.value,
        margin: lhs.value - rhs.value,
        converged: lhs.converged && rhs.converged,
    })
}

/// Worst relative deviation of T_j(Ψ∘u) from Ψ′(u)·T_j u over a sample
/// battery. Non-invariant u is rejected.
pub fn chain_rule_check(
    ctx: &DunklContext,
    u: &Field,
    psi: &Profile,
    samples: usize,
    seed: u64,
) -> Result<f64, OperatorError> {
    let inv = check_g_invariance(&ctx.rs, u, 200, seed);
    if !inv.invariant {
        return Err(OperatorError::NotInvariant {
            label: u.label.clone(),
            worst: inv.worst,
            at: inv.worst_point,
        });
    }
    let composed = Field::new(
        psi.compose_expr(u.expr.clone()),
        u.dim,
        format!("{}∘{}", psi.label, u.label),
    )
    .expect("composition stays in dimension");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let mut worst = 0.0f64;
    for _ in 0..samples.max(1) {
        let x: Vec<f64> = (0..u.dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        for j in 0..u.dim {
            let lhs = dunkl_apply(ctx, j, &composed, &x);
            let rhs = psi.deriv(u.value(&x)) * dunkl_apply(ctx, j, u, &x);
            let dev = (lhs - rhs).abs() / (1.0 + rhs.abs());
            worst = worst.max(dev);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::Region;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn ctx(name: &str, dim: usize, ks: &[f64]) -> DunklContext {
        DunklContext::new(Arc::new(RootSystem::build(name, dim, ks).unwrap()))
    }

    #[test]
    fn rank1_identity_field() {
        // T f(x) = 1 + k (x − (−x))/x = 1 + 2k for x ≠ 0 (and at x = 0 via limit)
        let c = ctx("rank1", 1, &[0.7]);
        let f = Field::from_source("x1", 1, "id").unwrap();
        for x in [-2.0, -0.5, 0.3, 1.0, 4.0, 0.0] {
            assert_abs_diff_eq!(dunkl_apply(&c, 0, &f, &[x]), 1.0 + 2.0 * 0.7, epsilon = 1e-12);
        }
    }

    #[test]
    fn remark_counterexample_k_over_x() {
        // f = smoothstep(0,1,x): for x ≥ 1, T f(x) = k/x
        for k in [0.5, 1.0, 2.0] {
            let c = ctx("rank1", 1, &[k]);
            let f = Field::from_source("smoothstep(0,1,x1)", 1, "ramp").unwrap();
            for x in [1.0, 1.5, 2.0, 3.0] {
                assert_relative_eq!(dunkl_apply(&c, 0, &f, &[x]), k / x, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn zero_multiplicity_collapses_to_partial() {
        let c = ctx("A2", 2, &[0.0]);
        let f = Field::from_source("exp(-x1^2-2*x2^2)", 2, "g").unwrap();
        let x = [0.37, -1.2];
        for j in 0..2 {
            assert_abs_diff_eq!(dunkl_apply(&c, j, &f, &x), f.grad_j(j, &x), epsilon = 1e-15);
        }
    }

    #[test]
    fn gradient_even_field_kills_difference_part() {
        let c = ctx("product_Z2", 2, &[0.4, 0.9]);
        let f = Field::from_source("r^2", 2, "r2").unwrap();
        let g = dunkl_gradient(&c, &f, &[1.0, 2.0]);
        assert_abs_diff_eq!(g[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn laplacian_even_rank1() {
        // even f: Δ_k f = f″ + (2k/x) f′ ⇒ for f = x²: 2 + 4k
        let k = 0.65;
        let c = ctx("rank1", 1, &[k]);
        let f = Field::from_source("x1^2", 1, "sq").unwrap();
        for x in [0.5, -1.7, 3.0] {
            assert_abs_diff_eq!(dunkl_laplacian(&c, &f, &[x]), 2.0 + 4.0 * k, epsilon = 1e-10);
        }
    }

    #[test]
    fn laplacian_classical_limit() {
        let c = ctx("product_Z2", 2, &[0.0, 0.0]);
        let f = Field::from_source("r^2", 2, "r2").unwrap();
        assert_abs_diff_eq!(dunkl_laplacian(&c, &f, &[0.7, -0.4]), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn laplacian_odd_field_vanishes_and_matches_composed_oracle() {
        // f(x) = x: T f ≡ 1 + 2k, so Δ_k f = T(Tf) = 0; the displayed
        // representation must agree.
        let k = 0.8;
        let c = ctx("rank1", 1, &[k]);
        let f = Field::from_source("x1", 1, "id").unwrap();
        for x in [0.4, 1.3, -2.2] {
            assert_abs_diff_eq!(dunkl_laplacian(&c, &f, &[x]), 0.0, epsilon = 1e-10);
        }
        // composed T(T f) oracle away from the hyperplane
        let tf_expr = dunkl_apply_expr(&c, 0, &f);
        let tf = Field::new(tf_expr, 1, "Tf").unwrap();
        for x in [0.4, 1.3, -2.2] {
            let composed = dunkl_apply(&c, 0, &tf, &[x]);
            assert_abs_diff_eq!(composed, dunkl_laplacian(&c, &f, &[x]), epsilon = 1e-9);
        }
    }

    #[test]
    fn laplacian_matches_composed_oracle_generic() {
        let k = 0.45;
        let c = ctx("rank1", 1, &[k]);
        for src in ["exp(-x1^2)", "x1^4", "1/(1+x1^2)"] {
            let f = Field::from_source(src, 1, src).unwrap();
            let tf = Field::new(dunkl_apply_expr(&c, 0, &f), 1, "Tf").unwrap();
            for x in [0.31, 0.9, -1.6, 2.4] {
                let lap = dunkl_laplacian(&c, &f, &[x]);
                let oracle = dunkl_apply(&c, 0, &tf, &[x]);
                assert_relative_eq!(lap, oracle, max_relative = 1e-8, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn hyperplane_continuity() {
        // T f is continuous across the hyperplane; the epsilon switch must
        // not introduce a jump. Probed on a field with nonvanishing T f at
        // the hyperplane so the relative comparison is meaningful.
        let c = ctx("rank1", 1, &[1.1]);
        let f = Field::from_source("exp(0.3*x1)", 1, "asym").unwrap();
        let reference = dunkl_apply(&c, 0, &f, &[1e-6]);
        for d in [1e-9, 1e-12] {
            let v = dunkl_apply(&c, 0, &f, &[d]);
            assert!(
                (v - reference).abs() <= 1e-6 * (1.0 + reference.abs()),
                "jump across the hyperplane switch: {v} vs {reference}"
            );
        }
        // bracket the switch boundary itself (ε = 1e−8)
        let above = dunkl_apply(&c, 0, &f, &[1.0001e-8]);
        let below = dunkl_apply(&c, 0, &f, &[0.9999e-8]);
        assert!((above - below).abs() <= 1e-6 * (1.0 + above.abs()));

        // even fields: both paths agree that T f → 0 at the hyperplane
        let even = Field::from_source("exp(-x1^2)", 1, "even").unwrap();
        for d in [1e-6, 1e-9, 1e-12] {
            assert!(dunkl_apply(&c, 0, &even, &[d]).abs() <= 1e-5);
        }

        // 2D: approach the x2-axis hyperplane of product_Z2
        let c2 = ctx("product_Z2", 2, &[0.5, 0.5]);
        let g = Field::from_source("exp(-(x1-0.3)^2-x2^2)", 2, "g2").unwrap();
        let b2 = dunkl_apply(&c2, 0, &g, &[1e-6, 0.8]);
        for d in [1e-9, 1e-12] {
            let v = dunkl_apply(&c2, 0, &g, &[d, 0.8]);
            assert!((v - b2).abs() <= 1e-6 * (1.0 + b2.abs()));
        }
    }

    #[test]
    fn invariance_checker() {
        let rs = RootSystem::build("rank1", 1, &[1.0]).unwrap();
        let radial = Field::from_source("r^2", 1, "r2").unwrap();
        assert!(check_g_invariance(&rs, &radial, 100, 42).invariant);
        let ramp = Field::from_source("smoothstep(0,1,x1)", 1, "ramp").unwrap();
        assert!(!check_g_invariance(&rs, &ramp, 100, 42).invariant);

        let rs2 = RootSystem::build("product_Z2", 2, &[0.5, 0.5]).unwrap();
        let even = Field::from_source("x1^2*x2^2", 2, "even").unwrap();
        assert!(check_g_invariance(&rs2, &even, 100, 42).invariant);
    }

    #[test]
    fn chain_rule_on_invariant_fields() {
        let c = ctx("rank1", 1, &[0.9]);
        let u = Field::from_source("r^2", 1, "r2").unwrap();
        let psi = Profile::from_source("s^2", "sq").unwrap();
        let dev = chain_rule_check(&c, &u, &psi, 100, 42).unwrap();
        assert!(dev <= 1e-10, "chain-rule deviation {dev}");
        let ident = Profile::from_source("s", "id").unwrap();
        let dev_id = chain_rule_check(&c, &u, &ident, 100, 42).unwrap();
        assert_eq!(dev_id, 0.0);
    }

    #[test]
    fn chain_rule_rejects_non_invariant() {
        let c = ctx("rank1", 1, &[0.5]);
        let u = Field::from_source("smoothstep(0,1,x1)", 1, "ramp").unwrap();
        let psi = Profile::from_source("s^2", "sq").unwrap();
        assert!(matches!(
            chain_rule_check(&c, &u, &psi, 50, 42),
            Err(OperatorError::NotInvariant { .. })
        ));
        // and indeed the unguarded two sides differ: T(Ψ∘u)(x) ≠ Ψ'(u)Tu at x ≥ 1
        let composed = Field::new(psi.compose_expr(u.expr.clone()), 1, "sq∘ramp").unwrap();
        let x = [1.5];
        let lhs = dunkl_apply(&c, 0, &composed, &x);
        let rhs = psi.deriv(u.value(&x)) * dunkl_apply(&c, 0, &u, &x);
        assert!((lhs - rhs).abs() > 1e-3);
    }

    #[test]
    fn weak_pairing_constant_u_is_zero() {
        let c = ctx("rank1", 1, &[0.5]);
        let a = ALaplacian::from_b(Profile::from_source("s", "B").unwrap()).unwrap();
        let u = Field::from_source("2.0", 1, "const").unwrap();
        let v = Field::from_source("clampzero(1-x1^2)^3", 1, "bump").unwrap();
        let spec = QuadSpec::new(Region::Ball { center: vec![0.0], radius: 1.5 });
        let p = weak_a_pairing(&c, &a, &u, &v, &spec);
        assert_eq!(p.value, 0.0);
    }

    #[test]
    fn weak_pairing_classical_energy() {
        // A = identity (B ≡ 1), k = 0, u = v: pairing = −∫ u′² dx
        let c = ctx("rank1", 1, &[0.0]);
        let a = ALaplacian::from_b(Profile::from_source("1", "one").unwrap()).unwrap();
        let u = Field::from_source("clampzero(1-x1^2)^3", 1, "bump").unwrap();
        let spec = QuadSpec::new(Region::Ball { center: vec![0.0], radius: 1.2 });
        let p = weak_a_pairing(&c, &a, &u, &u, &spec);
        // dense Riemann oracle
        let n = 400_000;
        let (lo, hi) = (-1.2, 1.2);
        let h = (hi - lo) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = [lo + (i as f64 + 0.5) * h];
            let d = u.grad_j(0, &x);
            acc += d * d;
        }
        acc *= h;
        assert_relative_eq!(p.value, -acc, max_relative = 1e-6);
    }

    #[test]
    fn weak_strong_consistency_rank1() {
        // B ≡ 1: ⟨Δ_{k,A}u, v⟩ = ∫ Δ_k u · v w_k dx for G-invariant u, v
        let c = ctx("rank1", 1, &[0.8]);
        let a = ALaplacian::from_b(Profile::from_source("1", "one").unwrap()).unwrap();
        let u = Field::from_source("exp(-r^2)", 1, "gauss").unwrap();
        let v = Field::from_source("clampzero(1-0.25*x1^2)^3", 1, "bump").unwrap();
        let spec = QuadSpec::new(Region::Ball { center: vec![0.0], radius: 2.0 })
            .with_max_refine(9);
        let weak = weak_a_pairing(&c, &a, &u, &v, &spec);
        let strong = integrate(
            &c.rs,
            &|x: &[f64]| dunkl_laplacian(&c, &u, x) * v.value(x),
            &spec,
        );
        assert!(weak.converged && strong.converged);
        assert_relative_eq!(weak.value, strong.value, max_relative = 1e-5);
    }

    #[test]
    fn ddi_residual_zero_u() {
        let c = ctx("rank1", 1, &[0.5]);
        let a = ALaplacian::from_b(Profile::from_source("s", "B").unwrap()).unwrap();
        let u = Field::from_source("0", 1, "zero").unwrap();
        let b = Field::from_source("1", 1, "one").unwrap();
        let phi = Profile::from_source("s^2", "sq").unwrap();
        let v = Field::from_source("clampzero(1-x1^2)^2", 1, "bump").unwrap();
        let spec = QuadSpec::new(Region::Ball { center: vec![0.0], radius: 1.5 });
        let r = ddi_residual(&c, &a, &u, &b, &phi, &v, &spec, 42).unwrap();
        assert_eq!(r.margin, 0.0);
    }

    #[test]
    fn ddi_residual_rejects_negative_v() {
        let c = ctx("rank1", 1, &[0.5]);
        let a = ALaplacian::from_b(Profile::from_source("s", "B").unwrap()).unwrap();
        let u = Field::from_source("exp(-x1^2)", 1, "g").unwrap();
        let b = Field::from_source("1", 1, "one").unwrap();
        let phi = Profile::from_source("s", "id").unwrap();
        let v = Field::from_source("x1", 1, "signed").unwrap();
        let spec = QuadSpec::new(Region::Ball { center: vec![0.0], radius: 1.0 });
        assert!(matches!(
            ddi_residual(&c, &a, &u, &b, &phi, &v, &spec, 42),
            Err(OperatorError::NegativeTestFunction(..))
        ));
    }

    #[test]
    fn ddi_residual_gaussian_classical() {
        // k = 0, u = exp(−x²), A identity, Φ(s) = s, b = c: closed form via
        // Gaussian integrals, matched against a dense Riemann oracle.
        let c = ctx("rank1", 1, &[0.0]);
        let a = ALaplacian::from_b(Profile::from_source("1", "one").unwrap()).unwrap();
        let u = Field::from_source("exp(-x1^2)", 1, "g").unwrap();
        let bc = 0.35;
        let b = Field::from_source("0.35", 1, "b").unwrap();
        let phi = Profile::from_source("s", "id").unwrap();
        let v = Field::from_source("clampzero(1-0.16*x1^2)^3", 1, "bump").unwrap();
        let spec = QuadSpec::new(Region::Ball { center: vec![0.0], radius: 2.5 })
            .with_max_refine(9);
        let r = ddi_residual(&c, &a, &u, &b, &phi, &v, &spec, 42).unwrap();
        // oracle: ∫ u′v′ − b ∫ u v over [−2.5, 2.5]
        let n = 1_000_000;
        let (lo, hi) = (-2.5, 2.5);
        let h = (hi - lo) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = [lo + (i as f64 + 0.5) * h];
            acc += u.grad_j(0, &x) * v.grad_j(0, &x) - bc * u.value(&x) * v.value(&x);
        }
        acc *= h;
        assert_relative_eq!(r.margin, acc, max_relative = 1e-6);
    }
}
