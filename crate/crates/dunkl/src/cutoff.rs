//! The auxiliary cutoff family η^r_{l,x₀}(x) = (η(|x−x₀|/l))^r, where η is
//! 1 on [0,1], the ramp 2−s on [1,2] and 0 beyond, together with its
//! classical-gradient bound and the sampled reflection-bound constant
//! C(η,k).

use crate::dsl::Field;
use crate::operator::{dunkl_gradient, DunklContext};
use crate::vecn::{norm, sub};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Cutoff {
    pub x0: Vec<f64>,
    pub l: f64,
    pub r: u32,
}

impl Cutoff {
    pub fn new(x0: Vec<f64>, l: f64, r: u32) -> Self {
        assert!(l > 0.0 && r >= 1);
        Cutoff { x0, l, r }
    }

    /// η(|x−x₀|/l)^r as a DSL field with exact symbolic gradient.
    pub fn field(&self) -> Field {
        let dim = self.x0.len();
        let dist = if dim == 1 {
            format!("abs(x1-{:?})", self.x0[0])
        } else {
            let sq: Vec<String> = self
                .x0
                .iter()
                .enumerate()
                .map(|(i, c)| format!("(x{}-{:?})^2", i + 1, c))
                .collect();
            format!("sqrt({})", sq.join("+"))
        };
        let eta = format!("min(1,clampzero(2-{dist}/{:?}))", self.l);
        let src = if self.r == 1 { eta } else { format!("({eta})^{}", self.r) };
        Field::from_source(&src, dim, format!("eta^{}(l={},x0={:?})", self.r, self.l, self.x0))
            .expect("cutoff expression is well-formed")
    }

    /// The classical bound (r/l)(2 − |x−x₀|/l)^{r−1} on the gradient, valid
    /// on the annulus l ≤ |x−x₀| ≤ 2l (0 elsewhere).
    pub fn classical_gradient_bound(&self, x: &[f64]) -> f64 {
        let s = norm(&sub(x, &self.x0)) / self.l;
        if (1.0..=2.0).contains(&s) {
            (self.r as f64 / self.l) * (2.0 - s).powi(self.r as i32 - 1)
        } else {
            0.0
        }
    }

    /// Shape factor of the combined Dunkl-gradient bound: the reflection part
    /// is ≤ C(η,k)·(r/l)·[(2−s)^{r−1}·χ_annulus + χ_ball].
    fn reflection_shape(&self, x: &[f64]) -> f64 {
        let s = norm(&sub(x, &self.x0)) / self.l;
        let rl = self.r as f64 / self.l;
        if s < 1.0 {
            rl
        } else if s <= 2.0 {
            rl * (2.0 - s).powi(self.r as i32 - 1)
        } else {
            0.0
        }
    }

    /// Empirical sup of |R_j(η^r)(x)| / shape(x) over ball + annulus samples,
    /// inflated by 1.1. Zero for radially centered cutoffs in any system
    /// (reflections fix them exactly).
    pub fn reflection_constant(&self, ctx: &DunklContext, samples: usize, seed: u64) -> f64 {
        let field = self.field();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.x0.len();
        let mut sup = 0.0f64;
        for _ in 0..samples {
            let x: Vec<f64> = (0..dim)
                .map(|i| self.x0[i] + rng.gen_range(-2.0 * self.l..2.0 * self.l))
                .collect();
            let s = norm(&sub(&x, &self.x0)) / self.l;
            if s > 2.0 {
                continue;
            }
            let shape = self.reflection_shape(&x);
            if shape == 0.0 {
                continue;
            }
            let gk = dunkl_gradient(ctx, &field, &x);
            let classical = field.grad(&x);
            for j in 0..dim {
                let refl_part = (gk[j] - classical[j]).abs();
                sup = sup.max(refl_part / shape);
            }
        }
        sup * 1.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::RootSystem;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    #[test]
    fn cutoff_values() {
        let c = Cutoff::new(vec![0.0, 0.0], 1.0, 4);
        let f = c.field();
        assert_abs_diff_eq!(f.value(&[0.5, 0.0]), 1.0);
        assert_abs_diff_eq!(f.value(&[0.0, 0.0]), 1.0);
        assert_abs_diff_eq!(f.value(&[1.5, 0.0]), 0.5f64.powi(4), epsilon = 1e-14);
        assert_abs_diff_eq!(f.value(&[2.5, 0.0]), 0.0);
        // values in [0,1]
        for x in [[0.3, 0.9], [1.2, 1.2], [1.9, 0.1]] {
            let v = f.value(&x);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn gradient_zero_at_center_and_plateau() {
        let c = Cutoff::new(vec![0.2, -0.4], 0.8, 3);
        let f = c.field();
        for x in [[0.2, -0.4], [0.5, -0.4], [0.2, 0.1]] {
            let g = f.grad(&x);
            assert!(g.iter().all(|v| v.is_finite()), "NaN gradient at {x:?}");
            assert_abs_diff_eq!(norm(&g), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn gradient_bound_on_annulus() {
        let c = Cutoff::new(vec![0.0], 1.0, 4);
        let f = c.field();
        for x in [1.1, 1.5, 1.9] {
            let g = f.grad_j(0, &[x]).abs();
            let bound = c.classical_gradient_bound(&[x]);
            assert!(g <= bound * (1.0 + 1e-12), "|∇η|={g} > bound={bound} at {x}");
        }
    }

    #[test]
    fn centered_cutoff_has_zero_reflection_constant() {
        let rs = Arc::new(RootSystem::build("rank1", 1, &[1.5]).unwrap());
        let ctx = DunklContext::new(rs);
        let c = Cutoff::new(vec![0.0], 1.0, 6);
        let cc = c.reflection_constant(&ctx, 2000, 42);
        assert!(cc <= 1e-10, "radial cutoff should be reflection-invariant, C = {cc}");
    }

    #[test]
    fn offcenter_cutoff_bound_holds() {
        // hyperplane {x = 0} stays clear of supp η = [1, 5]: the reflection
        // part is genuinely dominated by the ramp shape and C(η,k) is a
        // stable finite constant
        let rs = Arc::new(RootSystem::build("rank1", 1, &[1.5]).unwrap());
        let ctx = DunklContext::new(rs);
        let c = Cutoff::new(vec![3.0], 1.0, 6);
        let cc = c.reflection_constant(&ctx, 20_000, 42);
        assert!(cc > 0.0 && cc.is_finite());
        // combined display: |∇_k η^r| ≤ classical·(1 + C) + (r/l)·C·χ_ball
        let field = c.field();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        use rand::Rng;
        for _ in 0..5000 {
            let x = [3.0 + rng.gen_range(-2.0..2.0)];
            let gk = dunkl_gradient(&ctx, &field, &x);
            let s = (x[0] - 3.0).abs() / c.l;
            let ball = if s < 1.0 { (c.r as f64 / c.l) * cc } else { 0.0 };
            let bound = c.classical_gradient_bound(&x) * (1.0 + cc) + ball;
            assert!(
                norm(&gk) <= bound + 1e-9,
                "Dunkl gradient bound fails at {x:?}: {} > {bound}",
                norm(&gk)
            );
        }
    }
}
