//! Graph hypersurfaces in flat space: induced metric, second fundamental
//! form, mean curvature, and Gauss-equation residuals.
//!
//! A graph `x^{n+1} = f(x)` carries the unit normal
//! `normal_sign * (∇f, -1) / w` with `w = sqrt(1 + |∇f|^2)`, so that
//!
//! ```text
//! g_ij = δ_ij + f_i f_j,        h_ij = -normal_sign * f_ij / w.
//! ```
//!
//! `normal_sign = +1` makes a convex cap like `a sqrt(1 - |x|^2)` have
//! positive principal curvatures.

use nalgebra::{DMatrix, DVector};

use crate::curvature::{riemann, CurvatureError};
use crate::fields::{ChartBox, FieldError, MetricField, ScalarField, DEFAULT_STEP};
use crate::frame;

/// Induced metric, second fundamental form and derived scalars at a point.
#[derive(Debug, Clone)]
pub struct FundamentalForms {
    /// Induced metric `δ + (∇f)(∇f)^T` in graph coordinates.
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// Second fundamental form in graph coordinates.
    pub h: DMatrix<f64>,
    /// Second fundamental form in a g-orthonormal frame.
    pub h_frame: DMatrix<f64>,
    /// `sqrt(1 + |∇f|^2)`, always at least 1.
    pub w: f64,
    /// Mean curvature `trace(g^{-1} h) / n`.
    pub mean_h: f64,
    /// `trace((g^{-1} h)^2)`, the frame-independent squared norm of `h`.
    pub norm_sq_h: f64,
}

/// A hypersurface given as the graph of a scalar field.
#[derive(Clone)]
pub struct GraphImmersion {
    f: ScalarField,
    normal_sign: f64,
}

impl GraphImmersion {
    /// `normal_sign` must be `+1` or `-1`; it selects the unit normal
    /// orientation `normal_sign * (∇f, -1) / w`.
    pub fn new(f: ScalarField, normal_sign: i8) -> Self {
        assert!(normal_sign == 1 || normal_sign == -1, "normal_sign must be ±1");
        Self {
            f,
            normal_sign: normal_sign as f64,
        }
    }

    pub fn height(&self) -> &ScalarField {
        &self.f
    }

    pub fn normal_sign(&self) -> f64 {
        self.normal_sign
    }

    pub fn dim(&self) -> usize {
        self.f.chart().dim()
    }

    /// Fundamental forms at `x`, using analytic derivative rules when the
    /// height field carries them and central differences otherwise.
    pub fn fundamental_forms(&self, x: &[f64]) -> Result<FundamentalForms, CurvatureError> {
        let grad = self.f.gradient(x, DEFAULT_STEP)?;
        let hess = self.f.hessian(x, DEFAULT_STEP)?;
        let n = grad.len();
        let w = (1.0 + grad.norm_squared()).sqrt();
        let g = DMatrix::identity(n, n) + &grad * grad.transpose();
        let g_inv = g.clone().try_inverse().ok_or(CurvatureError::MetricSingular {
            cond: f64::INFINITY,
        })?;
        let h = hess * (-self.normal_sign / w);
        let shape = &g_inv * &h;
        let mean_h = shape.trace() / n as f64;
        let norm_sq_h = (&shape * &shape).trace();
        let e = frame::orthonormal_frame(&g).ok_or(CurvatureError::MetricSingular {
            cond: f64::INFINITY,
        })?;
        let h_frame = frame::form_in_frame(&h, &e);
        Ok(FundamentalForms {
            g,
            g_inv,
            h,
            h_frame,
            w,
            mean_h,
            norm_sq_h,
        })
    }

    /// The induced metric `δ + (∇f)(∇f)^T` as a [`MetricField`].
    ///
    /// When the height field has no analytic gradient its chart is shrunk
    /// by the differencing stencil so the metric stays evaluable
    /// everywhere on its own chart.
    pub fn induced_metric(&self) -> MetricField {
        let f = self.f.clone();
        let chart = if f.has_analytic_gradient() {
            f.chart().clone()
        } else {
            let pad = 2.0 * DEFAULT_STEP;
            ChartBox::new(
                f.chart().lower().iter().map(|v| v + pad).collect(),
                f.chart().upper().iter().map(|v| v - pad).collect(),
                f.chart().resolution().to_vec(),
            )
            .expect("padded chart remains valid")
        };
        MetricField::new(chart, move |x| {
            let grad = f
                .gradient(x, DEFAULT_STEP)
                .expect("interior point by chart construction");
            let n = grad.len();
            DMatrix::identity(n, n) + &grad * grad.transpose()
        })
    }

    /// Worst Gauss-equation residual at `x`, in a g-orthonormal frame:
    /// the intrinsic curvature of the induced metric against
    /// `h_ik h_jl - h_il h_jk`.
    pub fn gauss_residual(&self, x: &[f64], step: f64) -> Result<f64, CurvatureError> {
        let forms = self.fundamental_forms(x)?;
        let metric = self.induced_metric();
        let r = riemann(&metric, x, step)?;
        let e = frame::orthonormal_frame(&forms.g).ok_or(CurvatureError::MetricSingular {
            cond: f64::INFINITY,
        })?;
        let rf = r.in_frame(&e);
        let hf = &forms.h_frame;
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let gauss = hf[(i, k)] * hf[(j, l)] - hf[(i, l)] * hf[(j, k)];
                        worst = worst.max((rf.get(i, j, k, l) - gauss).abs());
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// Convenience constructor for the spherical cap `f = a sqrt(1 - |x|^2)`
/// on a cube chart, with analytic derivative rules.
pub fn sphere_cap(a: f64, dim: usize, half: f64) -> Result<GraphImmersion, FieldError> {
    assert!(a > 0.0, "semi-axis must be positive");
    let chart = ChartBox::cube(dim, half, 5)?;
    let eval = move |x: &[f64]| a * (1.0 - x.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let field = ScalarField::new(chart, eval)
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
        });
    Ok(GraphImmersion::new(field, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_slice_has_vanishing_forms() {
        let chart = ChartBox::cube(3, 1.0, 4).unwrap();
        let imm = GraphImmersion::new(ScalarField::constant(chart, 2.0), 1);
        let forms = imm.fundamental_forms(&[0.2, 0.0, -0.4]).unwrap();
        assert!((forms.g - DMatrix::identity(3, 3)).amax() < 1e-14);
        assert!(forms.h.amax() < 1e-14);
        assert_eq!(forms.mean_h, 0.0);
    }

    #[test]
    fn unit_sphere_graph_is_totally_umbilic() {
        // h = g with principal curvature 1, so mean_h = 1 and
        // norm_sq_h = n.
        let imm = sphere_cap(1.0, 4, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..8 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.35..0.35)).collect();
            let forms = imm.fundamental_forms(&x).unwrap();
            assert!((&forms.h - &forms.g).amax() < 1e-8);
            assert_abs_diff_eq!(forms.mean_h, 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(forms.norm_sq_h, 4.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn cap_tip_forms_match_closed_values() {
        // At x = 0: ∇f = 0, w = 1, f = a, h = a δ, mean_h = a,
        // norm_sq_h = n a^2.
        let imm = sphere_cap(2.0, 4, 0.4).unwrap();
        let forms = imm.fundamental_forms(&[0.0; 4]).unwrap();
        assert!((&forms.g - DMatrix::identity(4, 4)).amax() < 1e-14);
        assert!((&forms.h - DMatrix::identity(4, 4) * 2.0).amax() < 1e-12);
        assert_abs_diff_eq!(forms.w, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(forms.mean_h, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(forms.norm_sq_h, 16.0, epsilon = 1e-11);
    }

    #[test]
    fn normal_flip_negates_h_only() {
        let plus = sphere_cap(0.8, 3, 0.4).unwrap();
        let minus = GraphImmersion::new(plus.height().clone(), -1);
        let x = [0.1, -0.2, 0.05];
        let fp = plus.fundamental_forms(&x).unwrap();
        let fm = minus.fundamental_forms(&x).unwrap();
        assert!((&fp.h + &fm.h).amax() == 0.0);
        assert_eq!(fp.mean_h, -fm.mean_h);
        assert_eq!(fp.w, fm.w);
        assert!((&fp.g - &fm.g).amax() == 0.0);
        assert_eq!(fp.norm_sq_h, fm.norm_sq_h);
    }

    #[test]
    fn forms_are_rotation_invariant_for_symmetric_cap() {
        // The cap height only depends on |x|, so a rotated point carries
        // identical scalar invariants.
        let imm = sphere_cap(1.25, 3, 0.45).unwrap();
        let x = DVector::from_vec(vec![0.2, -0.1, 0.15]);
        // A fixed rotation in the (0, 1) plane composed with one in (1, 2).
        let (c1, s1) = (0.6f64, 0.8f64);
        let (c2, s2) = (0.28f64, 0.96f64);
        let r1 = DMatrix::from_row_slice(3, 3, &[c1, -s1, 0.0, s1, c1, 0.0, 0.0, 0.0, 1.0]);
        let r2 = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, c2, -s2, 0.0, s2, c2]);
        let xr = &r2 * (&r1 * &x);
        let a = imm.fundamental_forms(x.as_slice()).unwrap();
        let b = imm.fundamental_forms(xr.as_slice()).unwrap();
        assert_abs_diff_eq!(a.mean_h, b.mean_h, epsilon = 1e-10);
        assert_abs_diff_eq!(a.norm_sq_h, b.norm_sq_h, epsilon = 1e-10);
        assert_abs_diff_eq!(a.w, b.w, epsilon = 1e-12);
    }

    #[test]
    fn cauchy_schwarz_between_mean_and_norm() {
        let imm = sphere_cap(0.5, 4, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.35..0.35)).collect();
            let f = imm.fundamental_forms(&x).unwrap();
            assert!(f.norm_sq_h >= 4.0 * f.mean_h * f.mean_h - 1e-10);
        }
    }

    #[test]
    fn gauss_residual_vanishes_for_flat_slice() {
        let chart = ChartBox::cube(2, 1.0, 4).unwrap();
        let imm = GraphImmersion::new(ScalarField::constant(chart, 1.0), 1);
        let res = imm.gauss_residual(&[0.1, 0.2], 1e-4).unwrap();
        assert!(res < 1e-10);
    }

    #[test]
    fn gauss_residual_small_on_unit_sphere() {
        let imm = sphere_cap(1.0, 3, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.3..0.3)).collect();
            let res = imm.gauss_residual(&x, 1e-4).unwrap();
            assert!(res < 1e-5, "residual {res}");
        }
    }
}
