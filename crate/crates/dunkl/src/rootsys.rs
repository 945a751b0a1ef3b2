//! Finite root systems, reflections, reflection-group orbits, multiplicity
//! functions and the weight `w_k(x) = Π_{α∈R₊} |⟨α,x⟩|^{2k(α)}`.
//!
//! Roots are stored already rescaled to |α|² = 2, so the reflection along α
//! specialises to `x ↦ x − ⟨x,α⟩α`. Construction goes through a catalog of
//! pre-verified systems; arbitrary user root sets are not accepted.

use crate::vecn::{dot, norm};
use thiserror::Error;

const ROOT_MATCH_TOL: f64 = 1e-9;
/// Vector hashing precision for orbit identification (decimal digits).
const HASH_DIGITS: i32 = 12;

#[derive(Debug, Error)]
pub enum RootSystemError {
    #[error("unknown catalog name `{0}` (known: rank1, product_Z2, A2, B2, dihedral(m))")]
    UnknownCatalog(String),
    #[error("catalog `{name}` needs dimension {expected}, got {got}")]
    DimensionMismatch { name: String, expected: usize, got: usize },
    #[error("catalog `{name}` has {orbits} root orbit(s), got {got} multiplicit(ies)")]
    MultiplicityCount { name: String, orbits: usize, got: usize },
    #[error("multiplicity must be nonnegative, got {0}")]
    NegativeMultiplicity(f64),
    #[error("dihedral order must be ≥ 3, got {0}")]
    BadDihedralOrder(usize),
    #[error("vector is not a root of this system: {0:?}")]
    NotARoot(Vec<f64>),
    #[error("internal catalog invariant violated: {0}")]
    Invariant(String),
}

/// A finite root system with |α|² = 2 normalisation, a fixed positive
/// subsystem, an orbit-constant multiplicity function and γ = Σ_{R₊} k(α).
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct RootSystem {
    name: String,
    dim: usize,
    roots: Vec<Vec<f64>>,
    positive: Vec<usize>,
    multiplicity: Vec<f64>,
    orbit_of_root: Vec<usize>,
    orbit_count: usize,
    gamma: f64,
}

fn hash_key(v: &[f64]) -> Vec<i64> {
    let scale = 10f64.powi(HASH_DIGITS);
    v.iter().map(|x| (x * scale).round() as i64).collect()
}

/// Reflection along α under |α|² = 2: x ↦ x − ⟨x,α⟩α.
pub fn reflect_vec(alpha: &[f64], x: &[f64]) -> Vec<f64> {
    let c = dot(x, alpha);
    x.iter().zip(alpha).map(|(xi, ai)| xi - c * ai).collect()
}

impl RootSystem {
    /// Builds a cataloged root system.
    ///
    /// `name` ∈ {`rank1`, `product_Z2`, `A2`, `B2`, `dihedral(m)`}; the
    /// multiplicity list has one entry per root orbit, in order of first
    /// appearance in the catalog's root list.
    pub fn build(name: &str, dim: usize, multiplicities: &[f64]) -> Result<Self, RootSystemError> {
        for &k in multiplicities {
            if k < 0.0 || !k.is_finite() {
                return Err(RootSystemError::NegativeMultiplicity(k));
            }
        }
        let s2 = std::f64::consts::SQRT_2;
        let (roots, expected_dim): (Vec<Vec<f64>>, usize) = if name == "rank1" {
            (vec![vec![s2], vec![-s2]], 1)
        } else if name == "product_Z2" {
            let mut r = Vec::new();
            for i in 0..dim {
                for sign in [1.0, -1.0] {
                    let mut v = vec![0.0; dim];
                    v[i] = sign * s2;
                    r.push(v);
                }
            }
            (r, dim)
        } else if name == "A2" {
            (dihedral_roots(3), 2)
        } else if name == "B2" {
            // Axis roots first, then diagonals, so multiplicities read
            // [k_axis, k_diagonal].
            (
                vec![
                    vec![s2, 0.0],
                    vec![-s2, 0.0],
                    vec![0.0, s2],
                    vec![0.0, -s2],
                    vec![1.0, 1.0],
                    vec![-1.0, -1.0],
                    vec![1.0, -1.0],
                    vec![-1.0, 1.0],
                ],
                2,
            )
        } else if let Some(m) = parse_dihedral(name) {
            if m < 3 {
                return Err(RootSystemError::BadDihedralOrder(m));
            }
            (dihedral_roots(m), 2)
        } else {
            return Err(RootSystemError::UnknownCatalog(name.to_string()));
        };
        if dim != expected_dim {
            return Err(RootSystemError::DimensionMismatch {
                name: name.to_string(),
                expected: expected_dim,
                got: dim,
            });
        }
        Self::assemble(name, expected_dim, roots, multiplicities)
    }

    fn assemble(
        name: &str,
        dim: usize,
        roots: Vec<Vec<f64>>,
        multiplicities: &[f64],
    ) -> Result<Self, RootSystemError> {
        // Closure/±α/norm invariants; the catalog should always satisfy them.
        let keys: Vec<Vec<i64>> = roots.iter().map(|r| hash_key(r)).collect();
        let find = |v: &[f64]| -> Option<usize> {
            let k = hash_key(v);
            keys.iter().position(|x| *x == k)
        };
        for r in &roots {
            let n2 = dot(r, r);
            if (n2 - 2.0).abs() > 1e-12 {
                return Err(RootSystemError::Invariant(format!("|α|² = {n2}, want 2")));
            }
            let neg: Vec<f64> = r.iter().map(|x| -x).collect();
            if find(&neg).is_none() {
                return Err(RootSystemError::Invariant("missing −α".into()));
            }
            for other in &roots {
                if find(&reflect_vec(r, other)).is_none() {
                    return Err(RootSystemError::Invariant("not closed under reflections".into()));
                }
            }
        }

        // Orbits: closure of each root under all reflections, identified by
        // fixed-precision hashing.
        let mut orbit_of_root = vec![usize::MAX; roots.len()];
        let mut orbit_count = 0;
        for start in 0..roots.len() {
            if orbit_of_root[start] != usize::MAX {
                continue;
            }
            let id = orbit_count;
            orbit_count += 1;
            let mut stack = vec![start];
            orbit_of_root[start] = id;
            while let Some(i) = stack.pop() {
                for mirror in &roots {
                    let image = reflect_vec(mirror, &roots[i]);
                    let j = find(&image).ok_or_else(|| {
                        RootSystemError::Invariant("orbit image left the root set".into())
                    })?;
                    if orbit_of_root[j] == usize::MAX {
                        orbit_of_root[j] = id;
                        stack.push(j);
                    }
                }
            }
        }
        if multiplicities.len() != orbit_count {
            return Err(RootSystemError::MultiplicityCount {
                name: name.to_string(),
                orbits: orbit_count,
                got: multiplicities.len(),
            });
        }
        let multiplicity: Vec<f64> = orbit_of_root.iter().map(|&o| multiplicities[o]).collect();

        // Positive subsystem via a generic direction (irrational-ish slope so
        // no catalog root is orthogonal to it).
        let mut y = vec![0.0; dim];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = 1.0 + 0.123_456_789 * i as f64 + 0.003_14 * (i * i) as f64;
        }
        let positive: Vec<usize> = (0..roots.len()).filter(|&i| dot(&roots[i], &y) > 0.0).collect();
        if positive.len() * 2 != roots.len() {
            return Err(RootSystemError::Invariant("positive subsystem is not half of R".into()));
        }
        let gamma = positive.iter().map(|&i| multiplicity[i]).sum();

        Ok(RootSystem {
            name: name.to_string(),
            dim,
            roots,
            positive,
            multiplicity,
            orbit_of_root,
            orbit_count,
            gamma,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn orbit_count(&self) -> usize {
        self.orbit_count
    }

    pub fn roots(&self) -> &[Vec<f64>] {
        &self.roots
    }

    pub fn orbit_of(&self, root_idx: usize) -> usize {
        self.orbit_of_root[root_idx]
    }

    /// Positive roots with their multiplicities, skipping k = 0 entries is
    /// the caller's concern; iteration order is fixed by the catalog.
    pub fn positive_roots(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.positive.iter().map(|&i| (self.roots[i].as_slice(), self.multiplicity[i]))
    }

    pub fn multiplicity_of(&self, root_idx: usize) -> f64 {
        self.multiplicity[root_idx]
    }

    fn root_index(&self, alpha: &[f64]) -> Option<usize> {
        self.roots.iter().position(|r| {
            r.len() == alpha.len() && r.iter().zip(alpha).all(|(a, b)| (a - b).abs() < ROOT_MATCH_TOL)
        })
    }

    /// σ_α(x) = x − ⟨x,α⟩α. Errors when α is not a root of this system.
    pub fn reflect(&self, alpha: &[f64], x: &[f64]) -> Result<Vec<f64>, RootSystemError> {
        if self.root_index(alpha).is_none() {
            return Err(RootSystemError::NotARoot(alpha.to_vec()));
        }
        Ok(reflect_vec(alpha, x))
    }

    /// w_k(x) = Π_{α∈R₊} |⟨α,x⟩|^{2k(α)}, with 0⁰ = 1 when k(α) = 0.
    pub fn weight(&self, x: &[f64]) -> f64 {
        let mut w = 1.0;
        for (alpha, k) in self.positive_roots() {
            if k == 0.0 {
                continue;
            }
            w *= dot(alpha, x).abs().powf(2.0 * k);
        }
        w
    }

    /// Sampled sup of w_k over a ball; used for the ‖w_k‖_{L^∞} constants.
    /// For cataloged systems w_k is maximised on the boundary sphere, but the
    /// sup here is taken over a deterministic boundary + interior sample.
    pub fn weight_sup_ball(&self, center: &[f64], radius: f64, samples_per_axis: usize) -> f64 {
        let mut sup: f64 = 0.0;
        let m = samples_per_axis.max(2);
        let mut idx = vec![0usize; self.dim];
        loop {
            let x: Vec<f64> = idx
                .iter()
                .zip(center)
                .map(|(&i, c)| c - radius + 2.0 * radius * (i as f64) / ((m - 1) as f64))
                .collect();
            let d = norm(&crate::vecn::sub(&x, center));
            if d <= radius * (1.0 + 1e-12) {
                sup = sup.max(self.weight(&x));
                // Also probe the radial projection onto the sphere, where the
                // homogeneous weight peaks.
                if d > 1e-12 {
                    let y: Vec<f64> = x
                        .iter()
                        .zip(center)
                        .map(|(xi, c)| c + (xi - c) * radius / d)
                        .collect();
                    sup = sup.max(self.weight(&y));
                }
            }
            // odometer increment
            let mut axis = 0;
            loop {
                if axis == self.dim {
                    return sup;
                }
                idx[axis] += 1;
                if idx[axis] < m {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
        }
    }
}

fn parse_dihedral(name: &str) -> Option<usize> {
    let inner = name.strip_prefix("dihedral(")?.strip_suffix(')')?;
    inner.trim().parse().ok()
}

/// 2m roots of the dihedral system I₂(m) at angles jπ/m, norm √2.
fn dihedral_roots(m: usize) -> Vec<Vec<f64>> {
    let s2 = std::f64::consts::SQRT_2;
    (0..2 * m)
        .map(|j| {
            let th = std::f64::consts::PI * (j as f64) / (m as f64);
            // snap near-zero components so the hash key is stable
            let (c, s) = (th.cos(), th.sin());
            vec![snap(s2 * c), snap(s2 * s)]
        })
        .collect()
}

fn snap(x: f64) -> f64 {
    if x.abs() < 1e-14 {
        0.0
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(42)
    }

    #[test]
    fn rank1_catalog() {
        let rs = RootSystem::build("rank1", 1, &[0.7]).unwrap();
        assert_eq!(rs.roots().len(), 2);
        assert_abs_diff_eq!(rs.gamma(), 0.7);
        let pos: Vec<_> = rs.positive_roots().collect();
        assert_eq!(pos.len(), 1);
        assert_abs_diff_eq!(pos[0].0[0], std::f64::consts::SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn product_z2_catalog() {
        let rs = RootSystem::build("product_Z2", 2, &[0.3, 0.6]).unwrap();
        assert_eq!(rs.roots().len(), 4);
        assert_eq!(rs.orbit_count(), 2);
        assert_abs_diff_eq!(rs.gamma(), 0.9, epsilon = 1e-15);
    }

    #[test]
    fn a2_six_roots_one_orbit() {
        let rs = RootSystem::build("A2", 2, &[0.4]).unwrap();
        assert_eq!(rs.roots().len(), 6);
        assert_eq!(rs.orbit_count(), 1);
        // γ = 3k: three positive roots, one orbit
        assert_abs_diff_eq!(rs.gamma(), 1.2, epsilon = 1e-15);
        // brute-force closure under every reflection
        for alpha in rs.roots() {
            for beta in rs.roots() {
                let img = reflect_vec(alpha, beta);
                assert!(
                    rs.roots()
                        .iter()
                        .any(|r| r.iter().zip(&img).all(|(a, b)| (a - b).abs() < 1e-10)),
                    "A2 not closed under reflection"
                );
            }
        }
    }

    #[test]
    fn b2_two_orbits() {
        let rs = RootSystem::build("B2", 2, &[0.5, 1.0]).unwrap();
        assert_eq!(rs.roots().len(), 8);
        assert_eq!(rs.orbit_count(), 2);
        // two positive roots per orbit
        assert_abs_diff_eq!(rs.gamma(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn dihedral_orbit_counts() {
        assert_eq!(RootSystem::build("dihedral(5)", 2, &[0.2]).unwrap().orbit_count(), 1);
        assert_eq!(RootSystem::build("dihedral(6)", 2, &[0.2, 0.4]).unwrap().orbit_count(), 2);
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(
            RootSystem::build("E8", 8, &[1.0]),
            Err(RootSystemError::UnknownCatalog(_))
        ));
        assert!(matches!(
            RootSystem::build("rank1", 1, &[-0.1]),
            Err(RootSystemError::NegativeMultiplicity(_))
        ));
        assert!(matches!(
            RootSystem::build("A2", 2, &[0.1, 0.2]),
            Err(RootSystemError::MultiplicityCount { .. })
        ));
        assert!(matches!(
            RootSystem::build("product_Z2", 3, &[0.1, 0.2]),
            Err(RootSystemError::MultiplicityCount { .. })
        ));
    }

    #[test]
    fn reflect_examples() {
        let rs = RootSystem::build("rank1", 1, &[1.0]).unwrap();
        let a = [std::f64::consts::SQRT_2];
        assert_abs_diff_eq!(rs.reflect(&a, &[3.0]).unwrap()[0], -3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rs.reflect(&a, &[0.0]).unwrap()[0], 0.0);
        assert!(rs.reflect(&[1.0], &[3.0]).is_err());
    }

    #[test]
    fn reflection_involution_and_isometry() {
        let mut rng = rng();
        for name in ["rank1", "product_Z2", "A2", "B2", "dihedral(5)"] {
            let dim = if name == "rank1" { 1 } else { 2 };
            let ks = vec![0.5; if name == "B2" || name == "dihedral(6)" { 2 } else if name == "product_Z2" { dim } else { 1 }];
            let rs = RootSystem::build(name, dim, &ks).unwrap();
            for _ in 0..50 {
                let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
                for alpha in rs.roots() {
                    let y = reflect_vec(alpha, &x);
                    assert_abs_diff_eq!(norm(&y), norm(&x), epsilon = 1e-12);
                    let back = reflect_vec(alpha, &y);
                    for (a, b) in back.iter().zip(&x) {
                        assert!((a - b).abs() <= 1e-14, "involution failed for {name}");
                    }
                }
            }
        }
    }

    #[test]
    fn weight_rank1_closed_form() {
        for k in [0.0, 0.5, 1.0, 2.0] {
            let rs = RootSystem::build("rank1", 1, &[k]).unwrap();
            assert_abs_diff_eq!(rs.weight(&[1.0]), 2f64.powf(k), epsilon = 1e-12);
            let x = 1.7;
            assert_abs_diff_eq!(
                rs.weight(&[x]),
                2f64.powf(k) * x.abs().powf(2.0 * k),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn weight_trivial_for_zero_multiplicity() {
        let rs = RootSystem::build("A2", 2, &[0.0]).unwrap();
        let mut rng = rng();
        for _ in 0..20 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            assert_eq!(rs.weight(&x), 1.0);
        }
    }

    #[test]
    fn weight_homogeneous_and_invariant() {
        let mut rng = rng();
        let rs = RootSystem::build("B2", 2, &[0.5, 1.5]).unwrap();
        for _ in 0..100 {
            let x = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let t: f64 = rng.gen_range(0.5..4.0);
            let tx: Vec<f64> = x.iter().map(|v| v * t).collect();
            let lhs = rs.weight(&tx);
            let rhs = t.powf(2.0 * rs.gamma()) * rs.weight(&x);
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-300));
            for alpha in rs.roots() {
                let sx = reflect_vec(alpha, &x);
                let w1 = rs.weight(&sx);
                let w0 = rs.weight(&x);
                assert!((w1 - w0).abs() <= 1e-12 * (1.0 + w0));
            }
        }
    }
}
