//! Coordinate charts, scalar/metric fields as pure evaluation rules, and
//! numerical differentiation.
//!
//! A [`ChartBox`] is a plain coordinate box; a [`ScalarField`] pairs a
//! chart with a deterministic `point -> real` rule and, optionally,
//! analytic gradient and Hessian rules. When analytic rules are present
//! they always win; central differences are then only used to verify
//! them. Differentiation requires an interior margin of twice the step —
//! points too close to the boundary are rejected rather than clamped, so
//! residual reports never silently average in boundary garbage.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Starting step for Richardson-extrapolated derivatives.
pub const DEFAULT_RICHARDSON_STEP: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("chart axis {axis}: lower bound {lower} is not below upper bound {upper}")]
    InvalidBounds { axis: usize, lower: f64, upper: f64 },
    #[error("chart axis {axis}: resolution {resolution} is below the minimum of 2")]
    InvalidResolution { axis: usize, resolution: usize },
    #[error("chart grid point count overflows")]
    GridTooLarge,
    #[error("point has dimension {found}, chart has dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point lies outside the chart (margin {margin})")]
    PointOutsideChart { margin: f64 },
    #[error("step {step} is too large for the available margin {margin}")]
    StepTooLargeForMargin { step: f64, margin: f64 },
    #[error("step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("metric is not symmetric at a sampled point (deviation {0})")]
    AsymmetricMetric(f64),
    #[error("metric is not positive definite at a sampled point")]
    NotPositiveDefinite,
}

/// An axis-aligned coordinate box with a sampling resolution per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
    resolution: Vec<usize>,
}

impl ChartBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>) -> Result<Self, FieldError> {
        if lower.len() != upper.len() || lower.len() != resolution.len() {
            return Err(FieldError::DimensionMismatch {
                expected: lower.len(),
                found: upper.len().max(resolution.len()),
            });
        }
        for axis in 0..lower.len() {
            if !(lower[axis] < upper[axis]) {
                return Err(FieldError::InvalidBounds {
                    axis,
                    lower: lower[axis],
                    upper: upper[axis],
                });
            }
            if resolution[axis] < 2 {
                return Err(FieldError::InvalidResolution {
                    axis,
                    resolution: resolution[axis],
                });
            }
        }
        let mut count: usize = 1;
        for &r in &resolution {
            count = count.checked_mul(r).ok_or(FieldError::GridTooLarge)?;
        }
        Ok(Self { lower, upper, resolution })
    }

    /// Symmetric cube `[-half, half]^dim` with a uniform resolution.
    pub fn cube(dim: usize, half: f64, resolution: usize) -> Result<Self, FieldError> {
        Self::new(vec![-half; dim], vec![half; dim], vec![resolution; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    /// Total number of grid points (product of per-axis resolutions).
    pub fn grid_len(&self) -> usize {
        self.resolution.iter().product()
    }

    /// Smallest distance from `x` to the boundary, negative outside.
    pub fn margin(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let mut m = f64::INFINITY;
        for k in 0..self.dim() {
            m = m.min(x[k] - self.lower[k]).min(self.upper[k] - x[k]);
        }
        m
    }

    pub fn contains_with_margin(&self, x: &[f64], margin: f64) -> bool {
        x.len() == self.dim() && self.margin(x) >= margin
    }

    fn check_point(&self, x: &[f64], margin: f64) -> Result<(), FieldError> {
        if x.len() != self.dim() {
            return Err(FieldError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        if !self.contains_with_margin(x, margin) {
            return Err(FieldError::PointOutsideChart { margin });
        }
        Ok(())
    }

    /// Uniform product grid over the closed box, in row-major axis order.
    pub fn grid_points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let total = self.grid_len();
        (0..total).map(move |mut flat| {
            let mut x = vec![0.0; self.dim()];
            for axis in (0..self.dim()).rev() {
                let r = self.resolution[axis];
                let i = flat % r;
                flat /= r;
                let t = i as f64 / (r - 1) as f64;
                x[axis] = self.lower[axis] + t * (self.upper[axis] - self.lower[axis]);
            }
            x
        })
    }

    /// Seeded uniform samples at least `margin` inside the boundary.
    pub fn sample_interior<R: Rng>(&self, count: usize, margin: f64, rng: &mut R) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                (0..self.dim())
                    .map(|k| rng.gen_range(self.lower[k] + margin..self.upper[k] - margin))
                    .collect()
            })
            .collect()
    }
}

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
type HessFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A pure scalar field on a chart, with optional analytic derivative rules.
#[derive(Clone)]
pub struct ScalarField {
    chart: ChartBox,
    eval: EvalFn,
    grad: Option<GradFn>,
    hess: Option<HessFn>,
}

impl ScalarField {
    pub fn new<F>(chart: ChartBox, eval: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            chart,
            eval: Arc::new(eval),
            grad: None,
            hess: None,
        }
    }

    pub fn with_gradient<F>(mut self, grad: F) -> Self
    where
        F: Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn with_hessian<F>(mut self, hess: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.hess = Some(Arc::new(hess));
        self
    }

    /// The constant field `c`.
    pub fn constant(chart: ChartBox, c: f64) -> Self {
        let dim = chart.dim();
        Self::new(chart, move |_| c)
            .with_gradient(move |_| DVector::zeros(dim))
            .with_hessian(move |_| DMatrix::zeros(dim, dim))
    }

    /// The coordinate field `x[axis]`.
    pub fn coordinate(chart: ChartBox, axis: usize) -> Self {
        let dim = chart.dim();
        assert!(axis < dim, "axis out of range");
        Self::new(chart, move |x| x[axis])
            .with_gradient(move |_| {
                let mut g = DVector::zeros(dim);
                g[axis] = 1.0;
                g
            })
            .with_hessian(move |_| DMatrix::zeros(dim, dim))
    }

    pub fn chart(&self) -> &ChartBox {
        &self.chart
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn has_analytic_hessian(&self) -> bool {
        self.hess.is_some()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    fn check_step(&self, x: &[f64], step: f64) -> Result<(), FieldError> {
        if !(step > 0.0) {
            return Err(FieldError::NonPositiveStep(step));
        }
        self.chart.check_point(x, 0.0)?;
        let margin = self.chart.margin(x);
        if margin < 2.0 * step {
            return Err(FieldError::StepTooLargeForMargin { step, margin });
        }
        Ok(())
    }

    /// Gradient at `x`: the analytic rule when present, otherwise central
    /// differences `(f(x+h e_k) - f(x-h e_k)) / 2h` per axis.
    pub fn gradient(&self, x: &[f64], step: f64) -> Result<DVector<f64>, FieldError> {
        self.check_step(x, step)?;
        if let Some(g) = &self.grad {
            return Ok(g(x));
        }
        Ok(self.central_gradient(x, step))
    }

    /// Central-difference gradient, ignoring any analytic rule.
    pub fn finite_gradient(&self, x: &[f64], step: f64) -> Result<DVector<f64>, FieldError> {
        self.check_step(x, step)?;
        Ok(self.central_gradient(x, step))
    }

    fn central_gradient(&self, x: &[f64], step: f64) -> DVector<f64> {
        let dim = self.chart.dim();
        let mut p = x.to_vec();
        DVector::from_fn(dim, |k, _| {
            p[k] = x[k] + step;
            let fp = (self.eval)(&p);
            p[k] = x[k] - step;
            let fm = (self.eval)(&p);
            p[k] = x[k];
            (fp - fm) / (2.0 * step)
        })
    }

    /// Hessian at `x`: analytic rule when present, otherwise central
    /// second differences, symmetrized as `(H + H^T)/2`.
    pub fn hessian(&self, x: &[f64], step: f64) -> Result<DMatrix<f64>, FieldError> {
        self.check_step(x, step)?;
        if let Some(h) = &self.hess {
            return Ok(h(x));
        }
        Ok(self.central_hessian(x, step))
    }

    /// Central-difference Hessian, ignoring any analytic rule.
    pub fn finite_hessian(&self, x: &[f64], step: f64) -> Result<DMatrix<f64>, FieldError> {
        self.check_step(x, step)?;
        Ok(self.central_hessian(x, step))
    }

    fn central_hessian(&self, x: &[f64], step: f64) -> DMatrix<f64> {
        let dim = self.chart.dim();
        let f0 = (self.eval)(x);
        let mut p = x.to_vec();
        let mut h = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            p[i] = x[i] + step;
            let fp = (self.eval)(&p);
            p[i] = x[i] - step;
            let fm = (self.eval)(&p);
            p[i] = x[i];
            h[(i, i)] = (fp - 2.0 * f0 + fm) / (step * step);
            for j in (i + 1)..dim {
                p[i] = x[i] + step;
                p[j] = x[j] + step;
                let fpp = (self.eval)(&p);
                p[j] = x[j] - step;
                let fpm = (self.eval)(&p);
                p[i] = x[i] - step;
                let fmm = (self.eval)(&p);
                p[j] = x[j] + step;
                let fmp = (self.eval)(&p);
                p[i] = x[i];
                p[j] = x[j];
                let v = (fpp - fpm - fmp + fmm) / (4.0 * step * step);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        // Already symmetric by construction; averaging keeps the contract
        // explicit for analytic callers layered on top.
        0.5 * (&h + h.transpose())
    }

    /// Richardson-extrapolated gradient with an error estimate.
    ///
    /// Two fourth-order extrapolations are formed from step pairs
    /// `(h, h/2)` and `(h/2, h/4)`; the second is returned and the error
    /// estimate is the max-norm difference between the two. The starting
    /// step shrinks near the boundary so the stencil always fits.
    pub fn richardson_gradient(&self, x: &[f64]) -> Result<(DVector<f64>, f64), FieldError> {
        self.chart.check_point(x, 0.0)?;
        let margin = self.chart.margin(x);
        let h = DEFAULT_RICHARDSON_STEP.min(0.49 * margin);
        if !(h > 0.0) {
            return Err(FieldError::StepTooLargeForMargin { step: h, margin });
        }
        let d_full = self.central_gradient(x, h);
        let d_half = self.central_gradient(x, h / 2.0);
        let d_quarter = self.central_gradient(x, h / 4.0);
        let first = (4.0 * &d_half - &d_full) / 3.0;
        let second = (4.0 * &d_quarter - &d_half) / 3.0;
        let err = (&second - &first).amax();
        Ok((second, err))
    }

    /// Max deviation between analytic derivative rules and central
    /// differences over seeded interior samples. Fields without analytic
    /// rules report zero.
    pub fn validate_analytic<R: Rng>(
        &self,
        points: usize,
        step: f64,
        rng: &mut R,
    ) -> Result<f64, FieldError> {
        let mut worst = 0.0f64;
        let samples = self.chart.sample_interior(points, 2.0 * step, rng);
        for x in &samples {
            if let Some(g) = &self.grad {
                let dev = (g(x) - self.central_gradient(x, step)).amax();
                worst = worst.max(dev);
            }
            if let Some(h) = &self.hess {
                let dev = (h(x) - self.central_hessian(x, step)).amax();
                worst = worst.max(dev);
            }
        }
        Ok(worst)
    }
}

type MetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A position-dependent symmetric bilinear form on a chart.
#[derive(Clone)]
pub struct MetricField {
    chart: ChartBox,
    eval: MetricFn,
}

impl MetricField {
    pub fn new<F>(chart: ChartBox, eval: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self {
            chart,
            eval: Arc::new(eval),
        }
    }

    /// The flat metric `δ` on the given chart.
    pub fn flat(chart: ChartBox) -> Self {
        let dim = chart.dim();
        Self::new(chart, move |_| DMatrix::identity(dim, dim))
    }

    pub fn chart(&self) -> &ChartBox {
        &self.chart
    }

    pub fn value(&self, x: &[f64]) -> DMatrix<f64> {
        (self.eval)(x)
    }

    /// Checks symmetry and positive definiteness at every grid point of
    /// the chart.
    pub fn validate_on_grid(&self) -> Result<(), FieldError> {
        for x in self.chart.grid_points() {
            let g = self.value(&x);
            let asym = (&g - g.transpose()).amax();
            if asym > 1e-12 * g.amax().max(1.0) {
                return Err(FieldError::AsymmetricMetric(asym));
            }
            if nalgebra::Cholesky::new(g).is_none() {
                return Err(FieldError::NotPositiveDefinite);
            }
        }
        Ok(())
    }
}
