//! Conformal rescaling `ĝ = e^{2u} g` and two-sided numerical checks of
//! the transformation laws it induces.
//!
//! All frame-dependent identities are evaluated in an explicitly
//! constructed g-orthonormal frame `E` (Gram-Schmidt of the coordinate
//! basis in fixed axis order); the rescaled metric's frame is
//! `Ê_A = e^{-u} E_A`. In those frames, writing `u_A`, `u_{AB}` for
//! covariant derivatives with respect to the base metric:
//!
//! * gradients: `|∇̂F|²_ĝ = e^{-2u} |∇F|²_g`,
//! * Hessians: `e^{2u} F̂_{AB} = F_{AB} + Σ_C u_C F_C δ_{AB} - F_A u_B - F_B u_A`,
//! * curvature:
//!   `e^{2u} R̂_{ABCD} = R_{ABCD}
//!      - (u_{AC} δ_{BD} + u_{BD} δ_{AC} - u_{AD} δ_{BC} - u_{BC} δ_{AD})
//!      + (u_A u_C δ_{BD} + u_B u_D δ_{AC} - u_B u_C δ_{AD} - u_A u_D δ_{BC})
//!      - |∇u|²_g (δ_{AC} δ_{BD} - δ_{AD} δ_{BC})`,
//! * second fundamental forms: `ĥ = e^{-u} (h - u_ν Id)` and
//!   `Ĥ = e^{-u} (H - u_ν)`, with `u_ν` the derivative of `u` along the
//!   unit normal used for `h`.
//!
//! Each check evaluates both sides independently and reports the worst
//! componentwise residual over a seeded sample of interior points.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curvature::{covariant_hessian, riemann, CurvatureError, RIEMANN_MARGIN_FACTOR};
use crate::fields::{ChartBox, MetricField, ScalarField};
use crate::frame;
use crate::numeric::CompensatedSum;

/// Residual tolerance for the first-order (gradient) law.
pub const GRAD_LAW_TOL: f64 = 1e-6;
/// Residual tolerance for the Hessian law.
pub const HESSIAN_LAW_TOL: f64 = 1e-5;
/// Residual tolerance for the curvature law over a flat base metric.
pub const CURVATURE_LAW_TOL_FLAT: f64 = 1e-5;
/// Residual tolerance for the curvature law over a curved base metric,
/// where both sides carry nested differencing error.
pub const CURVATURE_LAW_TOL_CURVED: f64 = 1e-4;

/// Outcome of a residual check of one identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub identity_name: String,
    pub max_abs_residual: f64,
    pub points: usize,
    pub step: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualReport {
    pub fn new(name: impl Into<String>, max_abs_residual: f64, points: usize, step: f64, tolerance: f64) -> Self {
        Self {
            identity_name: name.into(),
            max_abs_residual,
            points,
            step,
            tolerance,
            pass: max_abs_residual <= tolerance,
        }
    }
}

/// A conformal factor `e^{2u}` paired with the base metric it rescales.
#[derive(Clone)]
pub struct ConformalData {
    u: ScalarField,
    base: MetricField,
}

impl ConformalData {
    /// The fields must live on charts of equal dimension; sampling uses
    /// the base metric's chart.
    pub fn new(u: ScalarField, base: MetricField) -> Self {
        assert_eq!(
            u.chart().dim(),
            base.chart().dim(),
            "conformal factor and base metric must share a chart dimension"
        );
        Self { u, base }
    }

    pub fn factor(&self) -> &ScalarField {
        &self.u
    }

    pub fn base_metric(&self) -> &MetricField {
        &self.base
    }

    /// The pointwise rescaled metric `e^{2u(x)} g(x)`.
    pub fn rescaled_metric(&self) -> MetricField {
        let u = self.u.clone();
        let base = self.base.clone();
        MetricField::new(self.base.chart().clone(), move |x| {
            (2.0 * u.value(x)).exp() * base.value(x)
        })
    }

    fn sample_points(&self, points: usize, margin: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.base.chart().sample_interior(points, margin, &mut rng)
    }

    /// Frame-free restatement of the gradient law:
    /// `|∇̂F|²_ĝ - e^{-2u} |∇F|²_g` at seeded points.
    pub fn check_grad_law(
        &self,
        f: &ScalarField,
        points: usize,
        step: f64,
        seed: u64,
        tolerance: f64,
    ) -> Result<ResidualReport, CurvatureError> {
        let rescaled = self.rescaled_metric();
        let mut worst = 0.0f64;
        for x in self.sample_points(points, 10.0 * step, seed) {
            let df = f.gradient(&x, step)?;
            let g = self.base.value(&x);
            let ginv = g.clone().try_inverse().ok_or(CurvatureError::MetricSingular {
                cond: f64::INFINITY,
            })?;
            let gt = rescaled.value(&x);
            let gtinv = gt.clone().try_inverse().ok_or(CurvatureError::MetricSingular {
                cond: f64::INFINITY,
            })?;
            let lhs = (df.transpose() * &gtinv * &df)[(0, 0)];
            let rhs = (-2.0 * self.u.value(&x)).exp() * (df.transpose() * &ginv * &df)[(0, 0)];
            worst = worst.max((lhs - rhs).abs());
        }
        Ok(ResidualReport::new("conformal_grad_law", worst, points, step, tolerance))
    }

    /// Componentwise Hessian law in g-orthonormal frames, computing the
    /// rescaled Hessian from the rescaled metric's Christoffel symbols.
    pub fn check_hessian_law(
        &self,
        f: &ScalarField,
        points: usize,
        step: f64,
        seed: u64,
        tolerance: f64,
    ) -> Result<ResidualReport, CurvatureError> {
        let rescaled = self.rescaled_metric();
        let dim = self.base.chart().dim();
        let mut worst = 0.0f64;
        for x in self.sample_points(points, 10.0 * step, seed) {
            let g = self.base.value(&x);
            let e = frame::orthonormal_frame(&g).ok_or(CurvatureError::MetricSingular {
                cond: f64::INFINITY,
            })?;
            let hess_base = frame::form_in_frame(&covariant_hessian(f, &self.base, &x, step)?, &e);
            let hess_resc = frame::form_in_frame(&covariant_hessian(f, &rescaled, &x, step)?, &e);
            let df = frame::covector_in_frame(&f.gradient(&x, step)?, &e);
            let du = frame::covector_in_frame(&self.u.gradient(&x, step)?, &e);
            let mixed = df.dot(&du);
            for a in 0..dim {
                for b in 0..dim {
                    // e^{2u} F̂_{AB} in the ĝ frame equals the coordinate
                    // covariant Hessian contracted with the g frame.
                    let lhs = hess_resc[(a, b)];
                    let delta = if a == b { 1.0 } else { 0.0 };
                    let rhs = hess_base[(a, b)] + mixed * delta - df[a] * du[b] - df[b] * du[a];
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        Ok(ResidualReport::new("conformal_hessian_law", worst, points, step, tolerance))
    }

    fn frame_data_at(
        &self,
        rescaled: &MetricField,
        x: &[f64],
        step: f64,
    ) -> Result<FramePointData, CurvatureError> {
        let g = self.base.value(x);
        let e = frame::orthonormal_frame(&g).ok_or(CurvatureError::MetricSingular {
            cond: f64::INFINITY,
        })?;
        let r_base = riemann(&self.base, x, step)?.in_frame(&e);
        let r_resc = riemann(rescaled, x, step)?.in_frame(&e);
        let du = frame::covector_in_frame(&self.u.gradient(x, step)?, &e);
        let hess_u = frame::form_in_frame(&covariant_hessian(&self.u, &self.base, x, step)?, &e);
        let hess_u_resc = frame::form_in_frame(&covariant_hessian(&self.u, rescaled, x, step)?, &e);
        Ok(FramePointData {
            u_value: self.u.value(x),
            r_base,
            r_resc,
            du,
            hess_u,
            hess_u_resc,
        })
    }

    /// Componentwise curvature law in g-orthonormal frames. Both
    /// curvature tensors come from nested differencing: the base metric's
    /// directly, the rescaled one's from `e^{2u} g`.
    pub fn check_curvature_law(
        &self,
        points: usize,
        step: f64,
        seed: u64,
        tolerance: f64,
    ) -> Result<ResidualReport, CurvatureError> {
        let rescaled = self.rescaled_metric();
        let dim = self.base.chart().dim();
        let margin = (RIEMANN_MARGIN_FACTOR + 2.0) * step;
        let mut worst = 0.0f64;
        for x in self.sample_points(points, margin, seed) {
            let d = self.frame_data_at(&rescaled, &x, step)?;
            let e2u = (2.0 * d.u_value).exp();
            let grad_sq: f64 = d.du.iter().map(|v| v * v).sum();
            let kr = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            for a in 0..dim {
                for b in 0..dim {
                    for c in 0..dim {
                        for dd in 0..dim {
                            // Components in the ĝ frame pick up e^{-4u}.
                            let lhs = e2u * d.r_resc.get(a, b, c, dd) / (e2u * e2u);
                            let hess_term = d.hess_u[(a, c)] * kr(b, dd)
                                + d.hess_u[(b, dd)] * kr(a, c)
                                - d.hess_u[(a, dd)] * kr(b, c)
                                - d.hess_u[(b, c)] * kr(a, dd);
                            let grad_term = d.du[a] * d.du[c] * kr(b, dd)
                                + d.du[b] * d.du[dd] * kr(a, c)
                                - d.du[b] * d.du[c] * kr(a, dd)
                                - d.du[a] * d.du[dd] * kr(b, c);
                            let rhs = d.r_base.get(a, b, c, dd) - hess_term + grad_term
                                - grad_sq * (kr(a, c) * kr(b, dd) - kr(a, dd) * kr(b, c));
                            worst = worst.max((lhs - rhs).abs());
                        }
                    }
                }
            }
        }
        Ok(ResidualReport::new("conformal_curvature_law", worst, points, step, tolerance))
    }

    /// Summed forms of the curvature law for a tangent/normal index split
    /// `(n, p)` with `n + p = dim`: the mixed, normal-normal and
    /// tangent-tangent partial traces, each stated with rescaled-frame
    /// derivatives of `u` on the right-hand side.
    ///
    /// These follow from the componentwise law by summation, so their
    /// residuals are bounded by `dim²` times the componentwise residual.
    pub fn check_summed_curvature_laws(
        &self,
        split_n: usize,
        points: usize,
        step: f64,
        seed: u64,
        tolerance: f64,
    ) -> Result<Vec<ResidualReport>, CurvatureError> {
        let dim = self.base.chart().dim();
        assert!(split_n >= 1 && split_n < dim, "split must leave both blocks nonempty");
        let p = dim - split_n;
        let rescaled = self.rescaled_metric();
        let margin = (RIEMANN_MARGIN_FACTOR + 2.0) * step;
        let mut worst_mixed = 0.0f64;
        let mut worst_normal = 0.0f64;
        let mut worst_tangent = 0.0f64;
        for x in self.sample_points(points, margin, seed) {
            let d = self.frame_data_at(&rescaled, &x, step)?;
            let e2u = (2.0 * d.u_value).exp();
            let eu = d.u_value.exp();
            // Rescaled-frame derivatives of u.
            let ut: DVector<f64> = &d.du / eu;
            let hess_ut = &d.hess_u_resc / e2u;
            let grad_sq_t: f64 = ut.iter().map(|v| v * v).sum();
            let tangent = 0..split_n;
            let normal = split_n..dim;

            let sum_ut_tan: f64 = tangent.clone().map(|i| ut[i] * ut[i]).sum();
            let sum_ut_nor: f64 = normal.clone().map(|al| ut[al] * ut[al]).sum();
            let sum_hut_tan: f64 = tangent.clone().map(|i| hess_ut[(i, i)]).sum();
            let sum_hut_nor: f64 = normal.clone().map(|al| hess_ut[(al, al)]).sum();

            let mut lhs_mixed = CompensatedSum::new();
            let mut rhs_mixed = CompensatedSum::new();
            for i in tangent.clone() {
                for al in normal.clone() {
                    lhs_mixed.add(d.r_base.get(i, al, i, al) / e2u);
                    rhs_mixed.add(d.r_resc.get(i, al, i, al) / (e2u * e2u));
                }
            }
            let res_mixed = lhs_mixed.value()
                - (rhs_mixed.value()
                    + p as f64 * sum_hut_tan
                    + split_n as f64 * sum_hut_nor
                    + p as f64 * sum_ut_tan
                    + split_n as f64 * sum_ut_nor
                    - (split_n * p) as f64 * grad_sq_t);
            worst_mixed = worst_mixed.max(res_mixed.abs());

            let mut lhs_nor = CompensatedSum::new();
            let mut rhs_nor = CompensatedSum::new();
            for al in normal.clone() {
                for be in normal.clone() {
                    if al != be {
                        lhs_nor.add(d.r_base.get(al, be, al, be) / e2u);
                        rhs_nor.add(d.r_resc.get(al, be, al, be) / (e2u * e2u));
                    }
                }
            }
            let res_nor = lhs_nor.value()
                - (rhs_nor.value() + 2.0 * (p as f64 - 1.0) * sum_hut_nor
                    + 2.0 * (p as f64 - 1.0) * sum_ut_nor
                    - (p * (p - 1)) as f64 * grad_sq_t);
            worst_normal = worst_normal.max(res_nor.abs());

            let mut lhs_tan = CompensatedSum::new();
            let mut rhs_tan = CompensatedSum::new();
            for i in tangent.clone() {
                for j in tangent.clone() {
                    if i != j {
                        lhs_tan.add(d.r_base.get(i, j, i, j) / e2u);
                        rhs_tan.add(d.r_resc.get(i, j, i, j) / (e2u * e2u));
                    }
                }
            }
            let res_tan = lhs_tan.value()
                - (rhs_tan.value() + 2.0 * (split_n as f64 - 1.0) * sum_hut_tan
                    + 2.0 * (split_n as f64 - 1.0) * sum_ut_tan
                    - (split_n * (split_n - 1)) as f64 * grad_sq_t);
            worst_tangent = worst_tangent.max(res_tan.abs());
        }
        Ok(vec![
            ResidualReport::new("conformal_sum_mixed", worst_mixed, points, step, tolerance),
            ResidualReport::new("conformal_sum_normal", worst_normal, points, step, tolerance),
            ResidualReport::new("conformal_sum_tangent", worst_tangent, points, step, tolerance),
        ])
    }
}

struct FramePointData {
    u_value: f64,
    r_base: crate::curvature::Riemann4,
    r_resc: crate::curvature::Riemann4,
    du: DVector<f64>,
    hess_u: DMatrix<f64>,
    hess_u_resc: DMatrix<f64>,
}

/// Transforms a second fundamental form under `ĝ = e^{2u} g`.
///
/// `h` must be given in a g-orthonormal frame and `u_normal` is the
/// derivative of `u` along the unit normal used for `h`. Returns
/// `(ĥ, Ĥ) = (e^{-u} (h - u_normal Id), e^{-u} (mean_h - u_normal))`
/// with `ĥ` in the corresponding ĝ-orthonormal frame, so its squared
/// norm is the plain component sum [`frame_norm_sq`].
pub fn transform_second_form(
    h: &DMatrix<f64>,
    mean_h: f64,
    u_normal: f64,
    u_value: f64,
) -> (DMatrix<f64>, f64) {
    let n = h.nrows();
    let scale = (-u_value).exp();
    let h_tilde = scale * (h - DMatrix::identity(n, n) * u_normal);
    let mean_tilde = scale * (mean_h - u_normal);
    (h_tilde, mean_tilde)
}

/// Componentwise squared norm of a form given in an orthonormal frame.
pub fn frame_norm_sq(m: &DMatrix<f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in m.iter() {
        acc.add(v * v);
    }
    acc.value()
}

/// The flat-chart stereographic factor `u = ln(2 / (1 + |x|^2))`, with
/// analytic derivative rules. Rescaling the flat metric by `e^{2u}`
/// produces the round unit-sphere metric.
pub fn stereographic_factor(chart: ChartBox) -> ScalarField {
    let dim = chart.dim();
    ScalarField::new(chart, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (2.0 / (1.0 + r2)).ln()
    })
    .with_gradient(move |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        DVector::from_fn(dim, |i, _| -2.0 * x[i] / (1.0 + r2))
    })
    .with_hessian(move |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let s = 1.0 + r2;
        DMatrix::from_fn(dim, dim, |i, j| {
            let delta = if i == j { 2.0 } else { 0.0 };
            -delta / s + 4.0 * x[i] * x[j] / (s * s)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::sectional;
    use crate::fields::DEFAULT_STEP;
    use approx::assert_abs_diff_eq;

    fn flat_data(u: ScalarField) -> ConformalData {
        let base = MetricField::flat(u.chart().clone());
        ConformalData::new(u, base)
    }

    #[test]
    fn zero_factor_is_identity() {
        let chart = ChartBox::cube(3, 1.0, 4).unwrap();
        let data = flat_data(ScalarField::constant(chart.clone(), 0.0));
        let m = data.rescaled_metric();
        assert!((m.value(&[0.2, 0.1, -0.3]) - DMatrix::identity(3, 3)).amax() < 1e-15);

        let f = ScalarField::coordinate(chart, 0);
        let rep = data.check_grad_law(&f, 10, DEFAULT_STEP, 0, 1e-12).unwrap();
        assert!(rep.pass, "residual {}", rep.max_abs_residual);
        let rep = data.check_hessian_law(&f, 5, DEFAULT_STEP, 0, 1e-12).unwrap();
        assert!(rep.pass, "residual {}", rep.max_abs_residual);
    }

    #[test]
    fn constant_factor_scales_metric() {
        let chart = ChartBox::cube(2, 1.0, 4).unwrap();
        let data = flat_data(ScalarField::constant(chart.clone(), 2.0f64.ln()));
        let m = data.rescaled_metric();
        assert!((m.value(&[0.3, 0.4]) - DMatrix::identity(2, 2) * 4.0).amax() < 1e-12);

        // Both sides of the gradient law scale identically.
        let f = ScalarField::new(chart, |x| (x[0] * 1.3).sin() + x[1]);
        let rep = data.check_grad_law(&f, 20, DEFAULT_STEP, 1, 1e-10).unwrap();
        assert!(rep.pass, "residual {}", rep.max_abs_residual);
    }

    #[test]
    fn stereographic_rescaling_gives_round_sphere() {
        let chart = ChartBox::cube(4, 0.8, 3).unwrap();
        let data = flat_data(stereographic_factor(chart.clone()));
        let m = data.rescaled_metric();
        let x = [0.2, -0.1, 0.3, 0.05];
        let r = riemann(&m, &x, DEFAULT_STEP).unwrap();
        let g = m.value(&x);
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]);
        let k = sectional(&r, &g, &e1, &e2).unwrap();
        assert_abs_diff_eq!(k, 1.0, epsilon = 1e-5);
    }

    #[test]
    fn grad_law_passes_for_stereographic_factor() {
        let chart = ChartBox::cube(4, 0.8, 3).unwrap();
        let data = flat_data(stereographic_factor(chart.clone()));
        let f = ScalarField::coordinate(chart, 0);
        let rep = data.check_grad_law(&f, 50, DEFAULT_STEP, 0, GRAD_LAW_TOL).unwrap();
        assert!(rep.pass, "residual {}", rep.max_abs_residual);
    }

    #[test]
    fn hessian_law_passes_for_stereographic_factor() {
        let chart = ChartBox::cube(4, 0.8, 3).unwrap();
        let data = flat_data(stereographic_factor(chart.clone()));
        let f = ScalarField::new(chart, |x| x[0] * x[1]);
        let rep = data
            .check_hessian_law(&f, 25, DEFAULT_STEP, 0, HESSIAN_LAW_TOL)
            .unwrap();
        assert!(rep.pass, "residual {}", rep.max_abs_residual);
    }

    #[test]
    fn hessian_law_trivial_for_constant_field() {
        let chart = ChartBox::cube(3, 0.8, 3).unwrap();
        let data = flat_data(stereographic_factor(chart.clone()));
        let f = ScalarField::constant(chart, 5.0);
        let rep = data.check_hessian_law(&f, 10, DEFAULT_STEP, 0, 1e-9).unwrap();
        assert!(rep.pass, "residual {}", rep.max_abs_residual);
    }

    #[test]
    fn curvature_law_passes_on_flat_base() {
        let chart = ChartBox::cube(4, 0.8, 3).unwrap();
        let data = flat_data(stereographic_factor(chart));
        let rep = data
            .check_curvature_law(25, DEFAULT_STEP, 0, CURVATURE_LAW_TOL_FLAT)
            .unwrap();
        assert!(rep.pass, "residual {}", rep.max_abs_residual);
    }

    #[test]
    fn summed_laws_follow_from_componentwise() {
        let chart = ChartBox::cube(4, 0.8, 3).unwrap();
        let data = flat_data(stereographic_factor(chart));
        let tol = 16.0 * CURVATURE_LAW_TOL_FLAT;
        let reps = data
            .check_summed_curvature_laws(2, 10, DEFAULT_STEP, 0, tol)
            .unwrap();
        assert_eq!(reps.len(), 3);
        for rep in reps {
            assert!(rep.pass, "{}: residual {}", rep.identity_name, rep.max_abs_residual);
        }
    }

    #[test]
    fn second_form_transform_is_identity_for_trivial_factor() {
        let h = DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, -0.7]);
        let (ht, mt) = transform_second_form(&h, 0.4, 0.0, 0.0);
        assert!((ht - &h).amax() == 0.0);
        assert_eq!(mt, 0.4);
    }

    #[test]
    fn second_form_transform_tip_chain() {
        // Cap tip with generic a: h = a Id, e^u = 2/(1+a²),
        // u_normal = e^u a, giving ĥ = (a(a²-1)/2) Id.
        for a in [0.5f64, 0.8, 1.0, 1.25, 2.0] {
            let n = 4;
            let h = DMatrix::identity(n, n) * a;
            let eu = 2.0 / (1.0 + a * a);
            let (ht, _) = transform_second_form(&h, a, eu * a, eu.ln());
            let want = a * (a * a - 1.0) / 2.0;
            assert!((ht - DMatrix::identity(n, n) * want).amax() < 1e-14);
            let norm = frame_norm_sq(&(DMatrix::identity(n, n) * want));
            assert_abs_diff_eq!(norm, n as f64 * a * a * (a * a - 1.0) * (a * a - 1.0) / 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn second_form_transform_equator_chain() {
        // Equator limit: h = diag(1,1,1,1/a²), e^u = 1, u_normal = 1.
        let a = 0.5f64;
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0 / (a * a)]));
        let (ht, _) = transform_second_form(&h, 0.0, 1.0, 0.0);
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![
            0.0,
            0.0,
            0.0,
            1.0 / (a * a) - 1.0,
        ]));
        assert!((&ht - &want).amax() < 1e-14);
        let expect = (1.0 - a * a) * (1.0 - a * a) / (a * a * a * a);
        assert_abs_diff_eq!(frame_norm_sq(&ht), expect, epsilon = 1e-12);
    }

    #[test]
    fn second_form_transform_round_trips() {
        // Applying the transform with u and then undoing it with -u (and
        // the rescaled-normal derivative) restores the input.
        let h = DMatrix::from_row_slice(3, 3, &[0.9, 0.1, 0.0, 0.1, -0.4, 0.2, 0.0, 0.2, 1.1]);
        let (u, un, mean) = (0.37f64, 0.81f64, 0.53f64);
        let (ht, mt) = transform_second_form(&h, mean, un, u);
        let (back, mean_back) = transform_second_form(&ht, mt, -(-u).exp() * un, -u);
        assert!((back - &h).amax() < 1e-14);
        assert!((mean_back - mean).abs() < 1e-14);
    }

    #[test]
    fn minimal_case_mean_transform_is_exact() {
        // mean_h = 0 forces Ĥ = -e^{-u} u_normal exactly.
        let h = DMatrix::zeros(2, 2);
        let (_, mt) = transform_second_form(&h, 0.0, 0.7, 0.3);
        assert_eq!(mt, -(-0.3f64).exp() * 0.7);
    }
}
