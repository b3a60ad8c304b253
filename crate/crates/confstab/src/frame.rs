//! g-orthonormal frames built by Gram-Schmidt of the coordinate basis in
//! a fixed axis order, plus helpers to express tensors in a frame.
//!
//! The fixed order makes every frame-dependent residual reproducible.

use nalgebra::{DMatrix, DVector};

/// Inner product `u^T g v`.
pub fn inner(g: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (u.transpose() * g * v)[(0, 0)]
}

/// Orthonormal frame for the metric `g`: the columns `E_a` satisfy
/// `E^T g E = I`. Returns `None` when `g` is numerically degenerate.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let dim = g.nrows();
    let mut frame = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        let mut v = DVector::zeros(dim);
        v[a] = 1.0;
        for b in 0..a {
            let eb: DVector<f64> = frame.column(b).into();
            let proj = inner(g, &eb, &v);
            v -= proj * &eb;
        }
        let nsq = inner(g, &v, &v);
        if !(nsq > 1e-300) {
            return None;
        }
        frame.set_column(a, &(v / nsq.sqrt()));
    }
    Some(frame)
}

/// Gram-Schmidt a pair of vectors under `g`; `None` if the span is
/// numerically degenerate.
pub fn orthonormal_pair(
    g: &DMatrix<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let nu = inner(g, u, u);
    if !(nu > 1e-24) {
        return None;
    }
    let e1 = u / nu.sqrt();
    let mut w = v - inner(g, &e1, v) * &e1;
    let nw = inner(g, &w, &w);
    if !(nw > 1e-24) {
        return None;
    }
    w /= nw.sqrt();
    Some((e1, w))
}

/// Components of a bilinear form in the frame: `T(E_a, E_b)`.
pub fn form_in_frame(t: &DMatrix<f64>, frame: &DMatrix<f64>) -> DMatrix<f64> {
    frame.transpose() * t * frame
}

/// Components of a covector (gradient) in the frame: `dF(E_a)`.
pub fn covector_in_frame(df: &DVector<f64>, frame: &DMatrix<f64>) -> DVector<f64> {
    frame.transpose() * df
}
