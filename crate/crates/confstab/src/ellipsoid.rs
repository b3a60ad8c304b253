//! The rotationally symmetric ellipsoid
//! `(x^1)^2 + … + (x^n)^2 + (x^{n+1})^2 / a^2 = 1`, as the graph
//! `x^{n+1} = f(x) = a sqrt(1 - |x|^2)` over the upper hemisphere, and
//! everything the conformal second-fundamental-form analysis needs:
//! closed-form point data, the rational profile of `|ĥ|²` in
//! `t = (x^{n+1})^2`, the extremum of the conformal second fundamental
//! form, the admissible parameter range below a threshold, and the
//! pinching constant.
//!
//! The squared conformal norm `htilde_sq` is always produced by the
//! componentwise oracle — the closed forms for `h` in a g-orthonormal
//! frame pushed through [`conformal::transform_second_form`] — never by
//! the condensed summary expression, whose cross term drops a
//! mean-curvature factor. The rational profile is then validated against
//! that oracle rather than trusted.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::conformal::{self, ResidualReport};
use crate::fields::{ChartBox, FieldError, ScalarField};
use crate::frame;
use crate::immersion::GraphImmersion;
use crate::numeric;

/// Relative tolerance for closed-form vs oracle reconciliation.
pub const CLOSED_VS_ORACLE_TOL: f64 = 1e-8;

/// Bisection tolerance in `a` for the admissible range.
pub const RANGE_TOL: f64 = 1e-10;

const RANGE_A_MIN: f64 = 0.01;
const RANGE_A_MAX: f64 = 25.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipsoidError {
    #[error("semi-axis must be positive and dimension at least 2")]
    InvalidShape,
    #[error("point must lie strictly inside the unit ball, |x|^2 = {r2}")]
    PointOutsideUnitBall { r2: f64 },
    #[error("profile parameter t = {t} outside [0, a^2] = [0, {max}]")]
    ProfileParamOutOfRange { t: f64, max: f64 },
    #[error("threshold {threshold} is not crossed for a in [{lo}, {hi}]")]
    ThresholdUnreachable { threshold: f64, lo: f64, hi: f64 },
    #[error("extremum is not monotone on the bracket [{lo}, {hi}]")]
    BracketInvalid { lo: f64, hi: f64 },
    #[error("the published range comparison needs n = 4, got n = {n}")]
    DimensionNotFour { n: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("search failed: {0}")]
    Search(#[from] numeric::SearchError),
}

/// Closed-form data at one graph point.
#[derive(Debug, Clone)]
pub struct EllipsoidPointData {
    pub x: Vec<f64>,
    /// Graph height `a sqrt(1 - |x|^2)`.
    pub f: f64,
    /// `sqrt(1 + |∇f|^2)`.
    pub w: f64,
    pub gradf_sq: f64,
    /// Induced metric in graph coordinates.
    pub g: DMatrix<f64>,
    /// Second fundamental form `(a² δ + f_i f_j) / (w f)` in graph coordinates.
    pub h: DMatrix<f64>,
    /// Trace of the shape operator (`n` times the mean curvature).
    pub h_trace: f64,
    /// Frame-independent `trace((g^{-1} h)^2)`.
    pub norm_sq_h: f64,
    /// Conformal factor `e^u = 2 / (2 + (1 - 1/a²) f²)`.
    pub e_u: f64,
    /// Derivative of `u` along the unit normal: `e^u a² / (w f)`.
    pub u_normal: f64,
    /// Squared norm of the conformally transformed second fundamental
    /// form, from the componentwise oracle.
    pub htilde_sq: f64,
}

/// Root of the extremum used when solving for the admissible range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeBasis {
    /// The published piecewise closed form
    /// `(1/a - a)^2` for `a <= 1`, `(a² - 1)² a²` for `a > 1`.
    PaperClosedForm,
    /// The measured maximum from [`Ellipsoid::max_conformal_ii`].
    MeasuredMax,
}

impl RangeBasis {
    pub fn as_str(self) -> &'static str {
        match self {
            RangeBasis::PaperClosedForm => "paper_closed_form",
            RangeBasis::MeasuredMax => "measured_max",
        }
    }
}

/// The interval of semi-axes whose extremum stays below a threshold.
#[derive(Debug, Clone)]
pub struct AdmissibleRange {
    pub a1: f64,
    pub a2: f64,
    pub basis: RangeBasis,
    /// Set when the measured basis disagrees with the closed-form basis
    /// by more than `1e-3` in either endpoint.
    pub reconciliation: Option<String>,
}

/// Extremum of the conformal second fundamental form over the surface.
#[derive(Debug, Clone)]
pub struct ConformalIiMax {
    pub max_value: f64,
    /// Argmax in the profile parameter `t = (x^{n+1})^2`.
    pub argmax_t: f64,
    /// The published piecewise value, available for `n = 4`.
    pub paper_value: Option<f64>,
    /// Whether the measured maximum matches the published value to
    /// `1e-6 * max(1, paper_value)`.
    pub agrees: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid {
    a: f64,
    n: usize,
}

impl Ellipsoid {
    pub fn new(a: f64, n: usize) -> Result<Self, EllipsoidError> {
        if !(a > 0.0) || n < 2 {
            return Err(EllipsoidError::InvalidShape);
        }
        Ok(Self { a, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The graph height `f = a sqrt(1 - |x|^2)` on a cube chart of the
    /// given half-extent, with analytic derivative rules.
    pub fn graph_field(&self, half: f64) -> Result<ScalarField, EllipsoidError> {
        assert!(
            half * half * self.n as f64 <= 0.995,
            "chart corners must stay inside the unit ball"
        );
        let a = self.a;
        let chart = ChartBox::cube(self.n, half, 5)?;
        let eval = move |x: &[f64]| a * (1.0 - x.iter().map(|v| v * v).sum::<f64>()).sqrt();
        Ok(ScalarField::new(chart, eval)
            .with_gradient(move |x| {
                let fx = eval(x);
                DVector::from_fn(x.len(), |i, _| -a * a * x[i] / fx)
            })
            .with_hessian(move |x| {
                let fx = eval(x);
                let g = DVector::from_fn(x.len(), |i, _| -a * a * x[i] / fx);
                DMatrix::from_fn(x.len(), x.len(), |i, j| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    -(a * a * delta + g[i] * g[j]) / fx
                })
            }))
    }

    /// Upper-hemisphere graph immersion with the tip-convex normal.
    pub fn immersion(&self, half: f64) -> Result<GraphImmersion, EllipsoidError> {
        Ok(GraphImmersion::new(self.graph_field(half)?, 1))
    }

    /// Restriction of the ambient stereographic factor to the graph:
    /// `u(x) = ln 2 - ln(1 + a² + (1 - a²) |x|²)`, with analytic rules.
    pub fn conformal_factor_field(&self, half: f64) -> Result<ScalarField, EllipsoidError> {
        let a2 = self.a * self.a;
        let chart = ChartBox::cube(self.n, half, 5)?;
        let s = move |x: &[f64]| 1.0 + a2 + (1.0 - a2) * x.iter().map(|v| v * v).sum::<f64>();
        Ok(ScalarField::new(chart, move |x| (2.0 / s(x)).ln())
            .with_gradient(move |x| {
                let sx = s(x);
                DVector::from_fn(x.len(), |i, _| -2.0 * (1.0 - a2) * x[i] / sx)
            })
            .with_hessian(move |x| {
                let sx = s(x);
                DMatrix::from_fn(x.len(), x.len(), |i, j| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    -2.0 * (1.0 - a2) * delta / sx
                        + 4.0 * (1.0 - a2) * (1.0 - a2) * x[i] * x[j] / (sx * sx)
                })
            }))
    }

    /// All closed-form quantities at a graph point, with `htilde_sq`
    /// produced by the componentwise transform oracle.
    pub fn point_data(&self, x: &[f64]) -> Result<EllipsoidPointData, EllipsoidError> {
        let n = self.n;
        assert_eq!(x.len(), n, "point dimension mismatch");
        let a = self.a;
        let a2 = a * a;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if !(r2 < 1.0) {
            return Err(EllipsoidError::PointOutsideUnitBall { r2 });
        }
        let f = a * (1.0 - r2).sqrt();
        let grad = DVector::from_fn(n, |i, _| -a2 * x[i] / f);
        let gradf_sq = grad.norm_squared();
        let w = (1.0 + gradf_sq).sqrt();
        let g = DMatrix::identity(n, n) + &grad * grad.transpose();
        let wf = w * f;
        let h = DMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j { a2 } else { 0.0 };
            (delta + grad[i] * grad[j]) / wf
        });
        let ratio = (1.0 - a2) / (w * w);
        let h_trace = (n as f64 * a2 + ratio * gradf_sq) / wf;
        let norm_sq_h =
            (n as f64 * a2 * a2 + ratio * ratio * gradf_sq * gradf_sq + 2.0 * a2 * ratio * gradf_sq)
                / (wf * wf);
        let e_u = 2.0 / (2.0 + (1.0 - 1.0 / a2) * f * f);
        let u_normal = e_u * a2 / wf;

        let e = frame::orthonormal_frame(&g).expect("graph metric is positive definite");
        let h_frame = frame::form_in_frame(&h, &e);
        let (h_tilde, _) =
            conformal::transform_second_form(&h_frame, h_trace / n as f64, u_normal, e_u.ln());
        let htilde_sq = conformal::frame_norm_sq(&h_tilde);

        Ok(EllipsoidPointData {
            x: x.to_vec(),
            f,
            w,
            gradf_sq,
            g,
            h,
            h_trace,
            norm_sq_h,
            e_u,
            u_normal,
            htilde_sq,
        })
    }

    /// The rational profile `G(t)` with `t = (x^{n+1})^2`, defined so
    /// `|ĥ|² = (a² - 1)² / 4 * G(t)` on `[0, a²]`.
    pub fn rational_profile(&self, t: f64) -> Result<f64, EllipsoidError> {
        let a2 = self.a * self.a;
        if !(0.0..=a2 * (1.0 + 1e-12)).contains(&t) {
            return Err(EllipsoidError::ProfileParamOutOfRange { t, max: a2 });
        }
        let nm1 = (self.n - 1) as f64;
        let a4 = a2 * a2;
        let a6 = a4 * a2;
        let a8 = a4 * a4;
        let num = nm1 * (a2 - 1.0) * (a2 - 1.0) * t.powi(4) - 2.0 * nm1 * a4 * (a2 - 1.0) * t.powi(3)
            + a4 * (nm1 * a4 + 9.0) * t * t
            - 12.0 * a6 * t
            + 4.0 * a8;
        let den = (a4 + (1.0 - a2) * t).powi(3);
        Ok(num / den)
    }

    /// Closed form for `|ĥ|²` as a function of `t`.
    pub fn closed_form_htilde_sq(&self, t: f64) -> Result<f64, EllipsoidError> {
        let a2 = self.a * self.a;
        Ok((a2 - 1.0) * (a2 - 1.0) / 4.0 * self.rational_profile(t)?)
    }

    fn point_at_profile(&self, t: f64) -> Vec<f64> {
        // Put the point on the first axis: (x^{n+1})^2 = t means
        // |x|^2 = 1 - t / a^2.
        let r2 = (1.0 - t / (self.a * self.a)).max(0.0);
        let mut x = vec![0.0; self.n];
        x[0] = r2.sqrt();
        x
    }

    /// Oracle `htilde_sq` at the point with `(x^{n+1})^2 = t`.
    pub fn oracle_htilde_sq(&self, t: f64) -> Result<f64, EllipsoidError> {
        Ok(self.point_data(&self.point_at_profile(t))?.htilde_sq)
    }

    /// Compares the closed form against the oracle on a `t`-grid that
    /// avoids the coordinate-degenerate equator (`t_min = a² · 1e-6`) and
    /// the tip endpoint. Relative residuals for `a ≠ 1`, absolute at
    /// `a = 1` where both sides vanish.
    pub fn closed_vs_oracle(&self, grid_size: usize) -> Result<ResidualReport, EllipsoidError> {
        assert!(grid_size >= 2, "grid must have at least two points");
        let a2 = self.a * self.a;
        let t_lo = a2 * 1e-6;
        let t_hi = a2 * (1.0 - 1e-6);
        let round = (self.a - 1.0).abs() < 1e-14;
        let mut worst = 0.0f64;
        for k in 0..grid_size {
            let t = t_lo + (t_hi - t_lo) * k as f64 / (grid_size - 1) as f64;
            let closed = self.closed_form_htilde_sq(t)?;
            let oracle = self.oracle_htilde_sq(t)?;
            let resid = if round {
                (closed - oracle).abs()
            } else {
                (closed - oracle).abs() / closed.abs().max(oracle.abs()).max(1e-300)
            };
            worst = worst.max(resid);
        }
        let tolerance = if round { 1e-12 } else { CLOSED_VS_ORACLE_TOL };
        let name = if round {
            "conformal_ii_closed_form_abs"
        } else {
            "conformal_ii_closed_form_rel"
        };
        Ok(ResidualReport::new(name, worst, grid_size, 0.0, tolerance))
    }

    fn profile_evaluator(&self, t: f64) -> f64 {
        let a2 = self.a * self.a;
        if t <= 0.0 || t >= a2 {
            // Analytic endpoint values stand in for the coordinate-
            // degenerate equator and the exact tip.
            self.closed_form_htilde_sq(t.clamp(0.0, a2))
                .expect("endpoint inside range")
        } else {
            self.oracle_htilde_sq(t).expect("interior profile point")
        }
    }

    /// Maximum of `|ĥ|²` over the surface, scanned in `t` on a dense grid
    /// with golden-section refinement, compared against the published
    /// piecewise value when `n = 4`.
    pub fn max_conformal_ii(&self) -> ConformalIiMax {
        const GRID: usize = 10_000;
        let a2 = self.a * self.a;
        let mut best_t = 0.0;
        let mut best_v = f64::NEG_INFINITY;
        for k in 0..=GRID {
            let t = a2 * k as f64 / GRID as f64;
            let v = self.profile_evaluator(t);
            if v > best_v {
                best_v = v;
                best_t = t;
            }
        }
        let dt = a2 / GRID as f64;
        let lo = (best_t - dt).max(0.0);
        let hi = (best_t + dt).min(a2);
        let (t_ref, v_ref) = numeric::golden_section_max(|t| self.profile_evaluator(t), lo, hi, 1e-12 * a2.max(1.0));
        let (argmax_t, max_value) = if v_ref > best_v { (t_ref, v_ref) } else { (best_t, best_v) };
        let (paper_value, agrees) = if self.n == 4 {
            let pv = published_piecewise_max(self.a);
            let ok = (max_value - pv).abs() <= 1e-6 * pv.max(1.0);
            (Some(pv), Some(ok))
        } else {
            (None, None)
        };
        ConformalIiMax {
            max_value,
            argmax_t,
            paper_value,
            agrees,
        }
    }

    /// `a^6` for `a <= 1` and `a^{-6}` for `a > 1`: the published
    /// pinching constant of the ellipsoid.
    pub fn pinching_delta(&self) -> f64 {
        if self.a <= 1.0 {
            self.a.powi(6)
        } else {
            self.a.powi(-6)
        }
    }
}

/// The published piecewise maximum of `|ĥ|²` for the 4-dimensional case:
/// `(1/a - a)^2` for `0 < a <= 1` and `(a² - 1)² a²` for `a > 1`.
pub fn published_piecewise_max(a: f64) -> f64 {
    if a <= 1.0 {
        let v = 1.0 / a - a;
        v * v
    } else {
        let d = a * a - 1.0;
        d * d * a * a
    }
}

/// Semi-axis window attaining at least the given pinching constant:
/// `[δ^{1/6}, δ^{-1/6}]`.
pub fn pinching_window(delta: f64) -> (f64, f64) {
    assert!(delta > 0.0 && delta <= 1.0);
    (delta.powf(1.0 / 6.0), delta.powf(-1.0 / 6.0))
}

fn measured_extremum(a: f64) -> f64 {
    Ellipsoid::new(a, 4)
        .expect("valid semi-axis during range search")
        .max_conformal_ii()
        .max_value
}

fn extremum_for(basis: RangeBasis, a: f64) -> f64 {
    match basis {
        RangeBasis::PaperClosedForm => published_piecewise_max(a),
        RangeBasis::MeasuredMax => measured_extremum(a),
    }
}

/// Verifies the extremum decreases toward `a = 1` from the left and
/// increases from the right on the given bracket.
fn check_monotone(basis: RangeBasis, lo: f64, hi: f64, increasing: bool) -> Result<(), EllipsoidError> {
    const SAMPLES: usize = 9;
    let mut prev = extremum_for(basis, lo);
    for k in 1..=SAMPLES {
        let a = lo + (hi - lo) * k as f64 / SAMPLES as f64;
        let v = extremum_for(basis, a);
        let ok = if increasing { v + 1e-9 >= prev } else { v <= prev + 1e-9 };
        if !ok {
            return Err(EllipsoidError::BracketInvalid { lo, hi });
        }
        prev = v;
    }
    Ok(())
}

/// Solves `extremum(a) = threshold` on both sides of `a = 1` for the
/// 4-dimensional ellipsoid. The measured basis also reports how far it
/// deviates from the closed-form basis.
pub fn admissible_range(threshold: f64, basis: RangeBasis) -> Result<AdmissibleRange, EllipsoidError> {
    assert!(threshold > 0.0, "threshold must be positive");
    let (a1, a2) = range_roots(threshold, basis)?;
    let reconciliation = if basis == RangeBasis::MeasuredMax {
        let (c1, c2) = range_roots(threshold, RangeBasis::PaperClosedForm)?;
        if (a1 - c1).abs() > 1e-3 || (a2 - c2).abs() > 1e-3 {
            Some(format!(
                "measured_max range ({a1:.6}, {a2:.6}) deviates from paper_closed_form range ({c1:.6}, {c2:.6})"
            ))
        } else {
            None
        }
    } else {
        None
    };
    Ok(AdmissibleRange {
        a1,
        a2,
        basis,
        reconciliation,
    })
}

fn range_roots(threshold: f64, basis: RangeBasis) -> Result<(f64, f64), EllipsoidError> {
    // Lower root in (0, 1): walk down until the extremum exceeds the
    // threshold, then bisect.
    let mut lo = 0.9;
    while extremum_for(basis, lo) < threshold {
        lo *= 0.85;
        if lo < RANGE_A_MIN {
            return Err(EllipsoidError::ThresholdUnreachable {
                threshold,
                lo: RANGE_A_MIN,
                hi: 1.0,
            });
        }
    }
    check_monotone(basis, lo, 1.0, false)?;
    let a1 = numeric::bisect(
        |a| extremum_for(basis, a) - threshold,
        lo,
        1.0,
        RANGE_TOL,
        200,
    )?;

    // Upper root in (1, ∞): walk up, then bisect.
    let mut hi = 1.1;
    while extremum_for(basis, hi) < threshold {
        hi *= 1.2;
        if hi > RANGE_A_MAX {
            return Err(EllipsoidError::ThresholdUnreachable {
                threshold,
                lo: 1.0,
                hi: RANGE_A_MAX,
            });
        }
    }
    check_monotone(basis, 1.0, hi, true)?;
    let a2 = numeric::bisect(
        |a| extremum_for(basis, a) - threshold,
        1.0,
        hi,
        RANGE_TOL,
        200,
    )?;
    Ok((a1, a2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_sphere_has_zero_conformal_form() {
        let e = Ellipsoid::new(1.0, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.45..0.45)).collect();
            let data = e.point_data(&x).unwrap();
            assert!(data.htilde_sq <= 1e-12, "htilde_sq {}", data.htilde_sq);
        }
    }

    #[test]
    fn tip_values_match_hand_computation() {
        for a in [0.5f64, 0.8, 1.25, 2.0] {
            let e = Ellipsoid::new(a, 4).unwrap();
            let data = e.point_data(&[0.0; 4]).unwrap();
            let want = 4.0 * a * a * (a * a - 1.0) * (a * a - 1.0) / 4.0;
            assert_abs_diff_eq!(data.htilde_sq, want, epsilon = 1e-10 * want.max(1.0));
            assert_abs_diff_eq!(data.f, a, epsilon = 1e-14);
            assert_abs_diff_eq!(data.w, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(data.e_u, 2.0 / (1.0 + a * a), epsilon = 1e-14);
            assert_abs_diff_eq!(data.u_normal, 2.0 * a / (1.0 + a * a), epsilon = 1e-13);
        }
    }

    #[test]
    fn equator_limit_matches_hand_computation() {
        // t = 1e-13 stands in for the coordinate-degenerate equator.
        for a in [0.5f64, 0.8, 1.25, 2.0] {
            let e = Ellipsoid::new(a, 4).unwrap();
            let got = e.oracle_htilde_sq(1e-13).unwrap();
            let want = (1.0 - a * a) * (1.0 - a * a) / (a * a * a * a);
            assert_abs_diff_eq!(got, want, epsilon = 1e-10 * want.max(1.0));
        }
    }

    #[test]
    fn point_data_internal_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for a in [0.5f64, 0.8, 1.0, 1.25, 2.0] {
            let e = Ellipsoid::new(a, 4).unwrap();
            for _ in 0..200 {
                let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.45..0.45)).collect();
                let d = e.point_data(&x).unwrap();
                assert!(d.w >= 1.0);
                assert!((d.w * d.w - (1.0 + d.gradf_sq)).abs() < 1e-12);
                let grad_closed = a * a * (a * a / (d.f * d.f) - 1.0);
                assert!((d.gradf_sq - grad_closed).abs() < 1e-10);
                // Trace and norm displays against direct contractions.
                let ginv = d.g.clone().try_inverse().unwrap();
                let shape = &ginv * &d.h;
                assert_abs_diff_eq!(shape.trace(), d.h_trace, epsilon = 1e-10);
                assert_abs_diff_eq!((&shape * &shape).trace(), d.norm_sq_h, epsilon = 1e-10);
                assert!(d.htilde_sq >= 0.0);
            }
        }
    }

    #[test]
    fn profile_endpoints_are_closed_forms() {
        for a in [0.5f64, 0.8, 1.25, 2.0] {
            for n in [2usize, 3, 4, 5] {
                let e = Ellipsoid::new(a, n).unwrap();
                let g0 = e.rational_profile(0.0).unwrap();
                assert!(
                    (g0 - 4.0 / a.powi(4)).abs() <= 1e-10 * g0.abs(),
                    "G(0) = {g0} for a = {a}"
                );
                let gt = e.rational_profile(a * a).unwrap();
                assert!(
                    (gt - n as f64 * a * a).abs() <= 1e-10 * gt.abs(),
                    "G(a^2) = {gt} for a = {a}, n = {n}"
                );
            }
        }
    }

    #[test]
    fn profile_at_round_sphere_is_quadratic() {
        // Substituting a = 1 in the displayed profile leaves
        // 12 t² - 12 t + 4 for n = 4; the prefactor (a² - 1)²/4 kills it
        // in |ĥ|² either way.
        let e = Ellipsoid::new(1.0, 4).unwrap();
        for t in [0.0, 0.25, 0.5, 1.0] {
            let g = e.rational_profile(t).unwrap();
            assert_abs_diff_eq!(g, 12.0 * t * t - 12.0 * t + 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_oracle() {
        for a in [0.8f64, 2.0] {
            let e = Ellipsoid::new(a, 4).unwrap();
            let rep = e.closed_vs_oracle(1000).unwrap();
            assert!(rep.pass, "a = {a}: residual {}", rep.max_abs_residual);
        }
        let e = Ellipsoid::new(1.0, 4).unwrap();
        let rep = e.closed_vs_oracle(100).unwrap();
        assert!(rep.pass, "round case residual {}", rep.max_abs_residual);
    }

    #[test]
    fn max_round_sphere_is_zero_and_agrees() {
        let e = Ellipsoid::new(1.0, 4).unwrap();
        let m = e.max_conformal_ii();
        assert!(m.max_value.abs() <= 1e-12);
        assert_eq!(m.paper_value, Some(0.0));
        assert_eq!(m.agrees, Some(true));
    }

    #[test]
    fn max_prolate_agrees_with_published_value() {
        // a = 2: the tip dominates and the published branch matches.
        let e = Ellipsoid::new(2.0, 4).unwrap();
        let m = e.max_conformal_ii();
        assert_abs_diff_eq!(m.max_value, 36.0, epsilon = 1e-6 * 36.0);
        assert_eq!(m.paper_value, Some(36.0));
        assert_eq!(m.agrees, Some(true));
    }

    #[test]
    fn max_oblate_reports_published_disagreement() {
        // a = 0.5: the equator value 9.0 exceeds the published 2.25, and
        // the operation must report the measurement without failing.
        let e = Ellipsoid::new(0.5, 4).unwrap();
        let m = e.max_conformal_ii();
        assert!(m.max_value >= 9.0 - 1e-9, "measured {}", m.max_value);
        assert_abs_diff_eq!(m.paper_value.unwrap(), 2.25, epsilon = 1e-12);
        assert_eq!(m.agrees, Some(false));
    }

    #[test]
    fn measured_max_dominates_endpoints() {
        for a in [0.5f64, 0.8, 1.25, 2.0] {
            let e = Ellipsoid::new(a, 4).unwrap();
            let m = e.max_conformal_ii();
            let tip = e.closed_form_htilde_sq(a * a).unwrap();
            let equator = e.closed_form_htilde_sq(0.0).unwrap();
            assert!(m.max_value >= tip.max(equator) - 1e-12);
        }
    }

    #[test]
    fn max_is_continuous_in_a() {
        let mut prev: Option<f64> = None;
        let mut a = 0.5;
        while a <= 2.0 {
            let m = Ellipsoid::new(a, 4).unwrap().max_conformal_ii().max_value;
            if let Some(p) = prev {
                // A branch-switching artifact would jump by O(1) of the
                // value; the true slope contributes at most ~10% per 0.01.
                let jump = (m - p).abs();
                assert!(jump <= 0.2 * (1.0 + m.max(p)), "jump {jump} at a = {a}");
            }
            prev = Some(m);
            a += 0.01;
        }
    }

    #[test]
    fn admissible_range_closed_form_matches_published_roots() {
        let r = admissible_range(6.0 / 5.0, RangeBasis::PaperClosedForm).unwrap();
        assert!((r.a1 - 0.593).abs() <= 1e-3, "a1 = {}", r.a1);
        assert!((r.a2 - 1.346).abs() <= 1e-3, "a2 = {}", r.a2);
        assert!(r.reconciliation.is_none());
    }

    #[test]
    fn admissible_range_measured_flags_reconciliation() {
        let r = admissible_range(6.0 / 5.0, RangeBasis::MeasuredMax).unwrap();
        // Lower root solves the equator closed form (1 - a²)²/a⁴ = 6/5.
        let want = (1.0 + 1.2f64.sqrt()).powf(-0.5);
        assert!((r.a1 - want).abs() <= 1e-6, "a1 = {} vs {}", r.a1, want);
        assert!((r.a2 - 1.346).abs() <= 1e-3, "a2 = {}", r.a2);
        assert!(r.reconciliation.is_some());
    }

    #[test]
    fn unreachable_threshold_is_an_error() {
        assert!(matches!(
            admissible_range(1e9, RangeBasis::PaperClosedForm),
            Err(EllipsoidError::ThresholdUnreachable { .. })
        ));
    }

    #[test]
    fn tiny_threshold_collapses_to_round_sphere() {
        let r = admissible_range(1e-9, RangeBasis::PaperClosedForm).unwrap();
        assert!((r.a1 - 1.0).abs() < 1e-4);
        assert!((r.a2 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn pinching_constant_values() {
        assert_eq!(Ellipsoid::new(1.0, 4).unwrap().pinching_delta(), 1.0);
        let a = 0.2f64.powf(1.0 / 12.0);
        assert_abs_diff_eq!(
            Ellipsoid::new(a, 4).unwrap().pinching_delta(),
            1.0 / 5.0f64.sqrt(),
            epsilon = 1e-12
        );
        assert_eq!(Ellipsoid::new(2.0, 4).unwrap().pinching_delta(), 0.015625);
        // The window endpoints round to roughly 0.88 and 1.14.
        let (lo, hi) = pinching_window(1.0 / 5.0f64.sqrt());
        assert!((lo - 0.88).abs() < 0.01, "lo = {lo}");
        assert!((hi - 1.14).abs() < 0.01, "hi = {hi}");
    }
}
