//! Sharp and rough constants for the stability of minimal submanifolds,
//! the quadratic functional of an abstract second fundamental form, and
//! a randomized audit of the bound `F(II) <= c1 |II|^2`.
//!
//! For ambient dimension `m` and submanifold dimension `n` with
//! codimension `p = m - n >= 2`:
//!
//! * `eps0` is the positive root of `n ε² - n ε - p = 0`,
//! * `c2 = max(1 + p/2, n eps0)` and `c1 = c2 / p`,
//! * `c_sharp = n / c1`, the threshold on the conformal invariant below
//!   which no closed stable minimal `n`-submanifold exists,
//! * `c_rough` is the closed-form bound from fixed trade-off parameters:
//!   `2 - 4/(m+1)` for `n = 1` and `n(m-n)/m` for `n >= 2`.
//!
//! The functional itself acts on a symmetric tensor `b[μ][A][B]` on an
//! `(n+p)`-dimensional tangent space with `q` normal directions:
//!
//! ```text
//! F(b) = (1 + 2/p) Σ_{i,α,μ} b²_{iα}
//!        - (2/p) Σ_μ (Σ_i b_{ii}) (Σ_α b_{αα})
//!        + n/(p(p-1)) Σ_μ [ (Σ_α b_{αα})² - Σ_{α,β} b²_{αβ} ]
//! ```
//!
//! with `i` over the first `n` indices and `α, β` over the last `p`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::numeric::CompensatedSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("invalid dimensions: need m >= 3 and 1 <= n <= m - 2, got m = {m}, n = {n}")]
    InvalidDimensions { m: usize, n: usize },
    #[error("codimension p must be at least 2, got {p}")]
    CodimensionTooSmall { p: usize },
    #[error("iteration count must be at least 1")]
    InvalidIterations,
}

/// Dimension switch: the smallest admissible submanifold dimension is 1
/// for `3 <= m <= 5` and 2 for `m >= 6`.
pub fn xi(m: usize) -> Result<usize, StabilityError> {
    if m < 3 {
        return Err(StabilityError::InvalidDimensions { m, n: 0 });
    }
    Ok(if m <= 5 { 1 } else { 2 })
}

/// The constants bundle for a dimension pair `(m, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityConstants {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub xi: usize,
    pub eps0: f64,
    pub c2: f64,
    pub c1: f64,
    pub c_sharp: f64,
    pub c_rough: f64,
    /// `min` of `c_sharp(m, k)` over admissible `k`, for this `m`.
    pub c_prime_sharp: f64,
    /// Closed-form rough counterpart `2 - 4/m`.
    pub c_prime_rough: f64,
}

fn check_dims(m: usize, n: usize) -> Result<usize, StabilityError> {
    if m < 3 || n < 1 || n + 2 > m {
        return Err(StabilityError::InvalidDimensions { m, n });
    }
    Ok(m - n)
}

/// `(eps0, c2, c1, c_sharp)` for admissible `(m, n)`.
fn sharp_parts(m: usize, n: usize) -> (f64, f64, f64, f64) {
    let p = (m - n) as f64;
    let nf = n as f64;
    let eps0 = 0.5 * (1.0 + (1.0 + 4.0 * p / nf).sqrt());
    let c2 = (1.0 + p / 2.0).max(nf * eps0);
    let c1 = c2 / p;
    // For n = 1 the max is always 1 + p/2, so the sharp constant reduces
    // to the same closed form as the rough bound; using that expression
    // keeps the two bitwise equal.
    let c_sharp = if n == 1 {
        2.0 - 4.0 / (m as f64 + 1.0)
    } else {
        nf / c1
    };
    (eps0, c2, c1, c_sharp)
}

fn rough_constant(m: usize, n: usize) -> f64 {
    if n == 1 {
        2.0 - 4.0 / (m as f64 + 1.0)
    } else {
        (n * (m - n)) as f64 / m as f64
    }
}

/// Builds the full constants bundle for `(m, n)`.
pub fn constants(m: usize, n: usize) -> Result<StabilityConstants, StabilityError> {
    let p = check_dims(m, n)?;
    let xi_m = xi(m)?;
    let (eps0, c2, c1, c_sharp) = sharp_parts(m, n);
    Ok(StabilityConstants {
        m,
        n,
        p,
        xi: xi_m,
        eps0,
        c2,
        c1,
        c_sharp,
        c_rough: rough_constant(m, n),
        c_prime_sharp: c_prime(m)?,
        c_prime_rough: 2.0 - 4.0 / m as f64,
    })
}

/// `min` of `c_sharp(m, n)` over the admissible range `xi(m) <= n <= m-2`.
pub fn c_prime(m: usize) -> Result<f64, StabilityError> {
    let lo = xi(m)?;
    let mut best = f64::INFINITY;
    for n in lo..=(m - 2) {
        best = best.min(sharp_parts(m, n).3);
    }
    Ok(best)
}

/// The coefficient `4a - 2 - n + p (a - 1)^2` multiplying the tangential
/// gradient term; the admissible parameter `a` must make it nonpositive.
pub fn curvature_term_coefficient(n: usize, p: usize, a: f64) -> f64 {
    4.0 * a - 2.0 - n as f64 + p as f64 * (a - 1.0) * (a - 1.0)
}

/// Abstract symmetric second-fundamental-form tensor `b[μ][A][B]` on an
/// `(n + p)`-dimensional tangent space with `q` normal directions.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgII {
    n: usize,
    p: usize,
    q: usize,
    comp: Vec<f64>,
}

impl AlgII {
    pub fn zeros(n: usize, p: usize, q: usize) -> Self {
        assert!(n >= 1 && p >= 1 && q >= 1, "dimensions must be positive");
        Self {
            n,
            p,
            q,
            comp: vec![0.0; q * (n + p) * (n + p)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.n + self.p
    }

    fn idx(&self, mu: usize, a: usize, b: usize) -> usize {
        (mu * self.dim() + a) * self.dim() + b
    }

    pub fn get(&self, mu: usize, a: usize, b: usize) -> f64 {
        self.comp[self.idx(mu, a, b)]
    }

    /// Sets `b[μ][a][b]` and its mirror entry.
    pub fn set_sym(&mut self, mu: usize, a: usize, b: usize, v: f64) {
        let i = self.idx(mu, a, b);
        self.comp[i] = v;
        let j = self.idx(mu, b, a);
        self.comp[j] = v;
    }

    /// A single unit mixed pair `b⁰_{0, n} = b⁰_{n, 0} = 1`.
    pub fn unit_mixed(n: usize, p: usize, q: usize) -> Self {
        let mut b = Self::zeros(n, p, q);
        b.set_sym(0, 0, n, 1.0);
        b
    }

    /// Pure normal-trace tensor: `b⁰_{αα} = 1` for every normal index.
    pub fn unit_normal_trace(n: usize, p: usize, q: usize) -> Self {
        let mut b = Self::zeros(n, p, q);
        for al in n..(n + p) {
            b.set_sym(0, al, al, 1.0);
        }
        b
    }

    /// Seeded standard-normal sample, symmetrized by averaging.
    pub fn random_symmetric<R: Rng>(n: usize, p: usize, q: usize, rng: &mut R) -> Self {
        let mut b = Self::zeros(n, p, q);
        let d = n + p;
        for mu in 0..q {
            let raw: Vec<f64> = (0..d * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            for a in 0..d {
                for bb in a..d {
                    let v = 0.5 * (raw[a * d + bb] + raw[bb * d + a]);
                    b.set_sym(mu, a, bb, v);
                }
            }
        }
        b
    }

    /// Squared norm over ordered index pairs: off-diagonal entries count
    /// twice.
    pub fn norm_sq(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for v in &self.comp {
            acc.add(v * v);
        }
        acc.value()
    }

    pub fn scale(&self, t: f64) -> Self {
        Self {
            n: self.n,
            p: self.p,
            q: self.q,
            comp: self.comp.iter().map(|v| t * v).collect(),
        }
    }
}

/// The quadratic functional bounded by `c1 |II|^2`; requires `p >= 2`.
pub fn stability_functional(b: &AlgII) -> Result<f64, StabilityError> {
    let (n, p, q) = (b.n(), b.p(), b.q());
    if p < 2 {
        return Err(StabilityError::CodimensionTooSmall { p });
    }
    let d = n + p;
    let pf = p as f64;
    let mut mixed = CompensatedSum::new();
    let mut trace_cross = CompensatedSum::new();
    let mut normal_block = CompensatedSum::new();
    for mu in 0..q {
        for i in 0..n {
            for al in n..d {
                let v = b.get(mu, i, al);
                mixed.add(v * v);
            }
        }
        let tr_tan: f64 = (0..n).map(|i| b.get(mu, i, i)).sum();
        let tr_nor: f64 = (n..d).map(|al| b.get(mu, al, al)).sum();
        trace_cross.add(tr_tan * tr_nor);
        // The α ≠ β restriction is immaterial: diagonal terms cancel.
        let mut sq_nor = CompensatedSum::new();
        for al in n..d {
            for be in n..d {
                let v = b.get(mu, al, be);
                sq_nor.add(v * v);
            }
        }
        normal_block.add(tr_nor * tr_nor - sq_nor.value());
    }
    Ok((1.0 + 2.0 / pf) * mixed.value() - (2.0 / pf) * trace_cross.value()
        + n as f64 / (pf * (pf - 1.0)) * normal_block.value())
}

/// Outcome of a randomized audit of the functional bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundAudit {
    pub max_ratio: f64,
    /// Samples with `F / |II|² > c1 + 1e-10`.
    pub violations: usize,
    pub samples: usize,
    pub c1: f64,
    pub seed: u64,
}

const AUDIT_BLOCK: usize = 4096;

/// Draws seeded symmetric samples and audits `F(II) <= c1 |II|^2`.
///
/// Samples with `|II|² < 1e-12` are discarded and redrawn. Blocks of
/// iterations use stream-separated generators derived from the master
/// seed, so the result only depends on `(n, p, q, iterations, seed)`.
pub fn bound_audit(
    n: usize,
    p: usize,
    q: usize,
    iterations: usize,
    seed: u64,
) -> Result<BoundAudit, StabilityError> {
    if iterations == 0 {
        return Err(StabilityError::InvalidIterations);
    }
    if p < 2 {
        return Err(StabilityError::CodimensionTooSmall { p });
    }
    let m = n + p;
    check_dims(m, n)?;
    let c1 = sharp_parts(m, n).2;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut violations = 0usize;
    let blocks = iterations.div_ceil(AUDIT_BLOCK);
    for block in 0..blocks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block as u64 + 1);
        let in_block = AUDIT_BLOCK.min(iterations - block * AUDIT_BLOCK);
        for _ in 0..in_block {
            let (b, nsq) = loop {
                let b = AlgII::random_symmetric(n, p, q, &mut rng);
                let nsq = b.norm_sq();
                if nsq >= 1e-12 {
                    break (b, nsq);
                }
            };
            let ratio = stability_functional(&b)? / nsq;
            max_ratio = max_ratio.max(ratio);
            if ratio > c1 + 1e-10 {
                violations += 1;
            }
        }
    }
    Ok(BoundAudit {
        max_ratio,
        violations,
        samples: iterations,
        c1,
        seed,
    })
}

/// Projected gradient ascent on `F / |II|²`, an informational sharpness
/// probe; the bound itself is what the audit certifies.
pub fn ratio_ascent(n: usize, p: usize, q: usize, steps: usize, seed: u64) -> Result<f64, StabilityError> {
    if p < 2 {
        return Err(StabilityError::CodimensionTooSmall { p });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = n + p;
    let mut b = AlgII::random_symmetric(n, p, q, &mut rng);
    let nsq = b.norm_sq();
    b = b.scale(1.0 / nsq.sqrt());
    let mut best = stability_functional(&b)? / b.norm_sq();
    let mut lr = 0.1;
    for _ in 0..steps {
        // Exact gradient of the quadratic form via polarization along
        // each symmetric basis direction.
        let mut grad = AlgII::zeros(n, p, q);
        let f_b = stability_functional(&b)?;
        let norm_b = b.norm_sq();
        let ratio = f_b / norm_b;
        for mu in 0..q {
            for i in 0..d {
                for j in i..d {
                    let mut plus = b.clone();
                    plus.set_sym(mu, i, j, b.get(mu, i, j) + 1.0);
                    let mut minus = b.clone();
                    minus.set_sym(mu, i, j, b.get(mu, i, j) - 1.0);
                    let df = (stability_functional(&plus)? - stability_functional(&minus)?) / 2.0;
                    let dn = (plus.norm_sq() - minus.norm_sq()) / 2.0;
                    grad.set_sym(mu, i, j, (df - ratio * dn) / norm_b);
                }
            }
        }
        let mut trial = b.clone();
        for mu in 0..q {
            for i in 0..d {
                for j in i..d {
                    trial.set_sym(mu, i, j, b.get(mu, i, j) + lr * grad.get(mu, i, j));
                }
            }
        }
        let tn = trial.norm_sq();
        if tn < 1e-12 {
            break;
        }
        let trial = trial.scale(1.0 / tn.sqrt());
        let r = stability_functional(&trial)? / trial.norm_sq();
        if r > best {
            best = r;
            b = trial;
        } else {
            lr *= 0.5;
            if lr < 1e-12 {
                break;
            }
        }
    }
    Ok(best)
}

/// Pointwise evaluator for the projected-test-field second-variation sum:
/// `Σ|II_mixed|² + p (a-1)² |∇u_tan|² + n |∇u_nor|² - Σ(mixed sectional curvatures)`.
pub fn projected_variation_sum(
    ii_mixed_sq: f64,
    u_tan_sq: f64,
    u_norm_sq: f64,
    ricci_mixed_sum: f64,
    n: usize,
    p: usize,
    a: f64,
) -> f64 {
    ii_mixed_sq + p as f64 * (a - 1.0) * (a - 1.0) * u_tan_sq + n as f64 * u_norm_sq
        - ricci_mixed_sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn xi_switches_at_six() {
        assert_eq!(xi(3).unwrap(), 1);
        assert_eq!(xi(5).unwrap(), 1);
        assert_eq!(xi(6).unwrap(), 2);
        assert_eq!(xi(12).unwrap(), 2);
        assert!(xi(2).is_err());
    }

    #[test]
    fn sharp_constants_match_known_values() {
        let c41 = constants(4, 1).unwrap();
        assert_abs_diff_eq!(c41.c_sharp, 6.0 / 5.0, epsilon = 1e-15);
        let c42 = constants(4, 2).unwrap();
        assert_abs_diff_eq!(c42.c_sharp, 5.0f64.sqrt() - 1.0, epsilon = 1e-15);
    }

    #[test]
    fn constants_6_2_are_rational() {
        // 2ε² - 2ε - 4 = 0 has positive root 2; c2 = max(3, 4) = 4.
        let c = constants(6, 2).unwrap();
        assert_abs_diff_eq!(c.eps0, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.c2, 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.c1, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.c_sharp, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn invalid_dimensions_are_rejected() {
        assert!(constants(2, 1).is_err());
        assert!(constants(4, 0).is_err());
        assert!(constants(4, 3).is_err());
    }

    #[test]
    fn eps0_solves_its_quadratic_everywhere() {
        for m in 3..=12 {
            for n in 1..=(m - 2) {
                let c = constants(m, n).unwrap();
                assert!(c.eps0 > 1.0);
                let resid = n as f64 * c.eps0 * c.eps0 - n as f64 * c.eps0 - c.p as f64;
                assert!(resid.abs() < 1e-12, "(m,n)=({m},{n}) residual {resid}");
                assert!(c.c_sharp >= c.c_rough - 1e-12);
                if n == 1 {
                    assert_eq!(c.c_sharp, 2.0 - 4.0 / (m as f64 + 1.0));
                    assert_eq!(c.c_sharp, c.c_rough);
                } else {
                    assert_abs_diff_eq!(c.c_rough, (n * (m - n)) as f64 / m as f64, epsilon = 0.0);
                }
                assert_abs_diff_eq!(c.c_sharp, n as f64 / c.c1, epsilon = 1e-12);
                assert_abs_diff_eq!(c.c2, c.c1 * c.p as f64, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn c_prime_matches_enumeration() {
        assert_abs_diff_eq!(c_prime(4).unwrap(), 6.0 / 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c_prime(3).unwrap(), 1.0, epsilon = 1e-15);
        // Brute-force the m = 6 minimum via the root formula directly.
        let mut best = f64::INFINITY;
        for n in 2..=4usize {
            let p = 6 - n;
            let eps0 = 0.5 * (1.0 + (1.0 + 4.0 * p as f64 / n as f64).sqrt());
            let c2 = (1.0 + p as f64 / 2.0).max(n as f64 * eps0);
            best = best.min(n as f64 * p as f64 / c2);
        }
        assert_abs_diff_eq!(c_prime(6).unwrap(), best, epsilon = 1e-14);
    }

    #[test]
    fn coefficient_case_split() {
        assert_eq!(curvature_term_coefficient(2, 7, 1.0), 0.0);
        assert_eq!(curvature_term_coefficient(1, 4, 0.5), 0.0);
        assert_abs_diff_eq!(curvature_term_coefficient(1, 5, 0.5), 0.25, epsilon = 1e-15);
        // a = 1 gives 2 - n for every p: nonpositive exactly when n >= 2.
        for p in 2..10 {
            for n in 1..6 {
                let v = curvature_term_coefficient(n, p, 1.0);
                assert_abs_diff_eq!(v, 2.0 - n as f64, epsilon = 1e-15);
                assert_eq!(v <= 0.0, n >= 2);
            }
        }
    }

    #[test]
    fn functional_on_unit_mixed_pair() {
        for (n, p, q) in [(1usize, 2usize, 1usize), (2, 3, 2), (3, 2, 1)] {
            let b = AlgII::unit_mixed(n, p, q);
            let f = stability_functional(&b).unwrap();
            assert_abs_diff_eq!(f, 1.0 + 2.0 / p as f64, epsilon = 1e-14);
            assert_abs_diff_eq!(b.norm_sq(), 2.0, epsilon = 0.0);
        }
    }

    #[test]
    fn functional_on_normal_trace_tensor() {
        for (n, p, q) in [(1usize, 2usize, 1usize), (2, 3, 1), (3, 4, 2)] {
            let b = AlgII::unit_normal_trace(n, p, q);
            let f = stability_functional(&b).unwrap();
            assert_abs_diff_eq!(f, n as f64, epsilon = 1e-12);
            assert_abs_diff_eq!(b.norm_sq(), p as f64, epsilon = 0.0);
        }
    }

    #[test]
    fn functional_rejects_small_codimension() {
        let b = AlgII::zeros(2, 1, 1);
        assert!(matches!(
            stability_functional(&b),
            Err(StabilityError::CodimensionTooSmall { p: 1 })
        ));
    }

    #[test]
    fn norm_counts_ordered_pairs() {
        let mut b = AlgII::zeros(2, 2, 1);
        b.set_sym(0, 0, 0, 1.0);
        assert_eq!(b.norm_sq(), 1.0);
        let mut b = AlgII::zeros(2, 2, 1);
        b.set_sym(0, 0, 3, 1.0);
        assert_eq!(b.norm_sq(), 2.0);
    }

    #[test]
    fn audit_finds_no_violations_on_small_runs() {
        for (n, p, q) in [(1usize, 2usize, 1usize), (2, 2, 1), (2, 3, 2)] {
            let audit = bound_audit(n, p, q, 2000, 0).unwrap();
            assert_eq!(audit.violations, 0, "(n,p,q)=({n},{p},{q})");
            assert!(audit.max_ratio <= audit.c1 + 1e-10);
        }
    }

    #[test]
    fn audit_is_deterministic() {
        let a = bound_audit(2, 2, 1, 5000, 7).unwrap();
        let b = bound_audit(2, 2, 1, 5000, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn audit_rejects_zero_iterations() {
        assert!(matches!(
            bound_audit(2, 2, 1, 0, 0),
            Err(StabilityError::InvalidIterations)
        ));
    }

    #[test]
    fn mixed_ratio_attains_c1_for_n_one() {
        // (1 + 2/p) / 2 = (p + 2) / (2p), which equals c1 whenever
        // c2 = 1 + p/2 — always the case for n = 1.
        for p in 2..6usize {
            let b = AlgII::unit_mixed(1, p, 1);
            let ratio = stability_functional(&b).unwrap() / b.norm_sq();
            let c1 = sharp_parts(1 + p, 1).2;
            assert_abs_diff_eq!(ratio, (p as f64 + 2.0) / (2.0 * p as f64), epsilon = 1e-15);
            assert_abs_diff_eq!(ratio, c1, epsilon = 1e-14);
        }
    }

    #[test]
    fn ascent_stays_below_the_bound() {
        let best = ratio_ascent(2, 2, 1, 60, 3).unwrap();
        let c1 = sharp_parts(4, 2).2;
        assert!(best <= c1 + 1e-8, "ascent ratio {best} vs c1 {c1}");
    }

    #[test]
    fn variation_sum_examples() {
        assert_eq!(projected_variation_sum(0.0, 0.0, 0.0, 0.0, 2, 2, 1.0), 0.0);
        // a = 1 kills the tangential term regardless of p.
        assert_eq!(
            projected_variation_sum(0.3, 123.0, 0.0, 0.0, 2, 9, 1.0),
            0.3
        );
        assert_abs_diff_eq!(
            projected_variation_sum(1.0, 1.0, 0.0, 2.0, 2, 2, 1.0),
            -1.0,
            epsilon = 1e-15
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        /// F is quadratic: F(t b) = t² F(b).
        #[test]
        fn functional_scales_quadratically(t in -3.0f64..3.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = AlgII::random_symmetric(2, 3, 2, &mut rng);
            let f = stability_functional(&b).unwrap();
            let ft = stability_functional(&b.scale(t)).unwrap();
            prop_assert!((ft - t * t * f).abs() <= 1e-12 * f.abs().max(1.0) * (1.0 + t * t));
        }

        /// F is invariant under a simultaneous rotation of the normal
        /// (μ) index.
        #[test]
        fn functional_is_mu_rotation_invariant(theta in 0.0f64..6.28, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = AlgII::random_symmetric(2, 2, 2, &mut rng);
            let (c, s) = (theta.cos(), theta.sin());
            let mut rotated = AlgII::zeros(2, 2, 2);
            let d = b.dim();
            for i in 0..d {
                for j in i..d {
                    rotated.set_sym(0, i, j, c * b.get(0, i, j) - s * b.get(1, i, j));
                    rotated.set_sym(1, i, j, s * b.get(0, i, j) + c * b.get(1, i, j));
                }
            }
            let f0 = stability_functional(&b).unwrap();
            let f1 = stability_functional(&rotated).unwrap();
            prop_assert!((f0 - f1).abs() <= 1e-10 * f0.abs().max(1.0));
        }
    }
}
