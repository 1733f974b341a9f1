//! Small dense helpers shared by the solvers.

use ndarray::{Array1, ArrayView1, Zip};

/// Default cap on power-iteration sweeps.
pub const POWER_MAX_ITER: usize = 10_000;

/// Deterministic, non-constant start vector for power iteration.
///
/// A constant vector is orthogonal to the top eigenvector of every
/// edge-incidence Gram matrix on a regular graph, so the entries are spread
/// with the golden-ratio sequence instead.
pub fn power_start(dim: usize) -> Array1<f64> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    let mut v = Array1::from_shape_fn(dim, |j| 1.0 + ((j + 1) as f64 * PHI).fract());
    let norm = v.dot(&v).sqrt();
    if norm > 0.0 {
        v /= norm;
    }
    v
}

/// Largest eigenvalue of a symmetric positive semidefinite operator.
///
/// Iterates `v <- A v / |A v|` and stops once the Rayleigh quotient changes by
/// less than `tol` relative to its current value.
pub fn power_iteration<F>(dim: usize, tol: f64, max_iter: usize, mut apply: F) -> f64
where
    F: FnMut(&Array1<f64>) -> Array1<f64>,
{
    if dim == 0 {
        return 0.0;
    }
    let mut v = power_start(dim);
    let mut eig = 0.0;
    for _ in 0..max_iter {
        let av = apply(&v);
        let next = v.dot(&av);
        let norm = av.dot(&av).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let done = (next - eig).abs() <= tol * next.abs();
        eig = next;
        v = av / norm;
        if done {
            break;
        }
    }
    eig
}

pub fn l1_norm(v: ArrayView1<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn l2_norm(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// sign with sign(0) = 0.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `a + scale * (b - c)` elementwise, allocated.
pub fn extrapolate(a: &Array1<f64>, b: &Array1<f64>, c: &Array1<f64>, scale: f64) -> Array1<f64> {
    let mut out = a.clone();
    Zip::from(&mut out)
        .and(b)
        .and(c)
        .for_each(|o, &bi, &ci| *o += scale * (bi - ci));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn power_iteration_on_diagonal() {
        let d = array![1.0, 4.0, 2.5];
        let eig = power_iteration(3, 1e-14, POWER_MAX_ITER, |v| v * &d);
        assert!((eig - 4.0).abs() < 1e-10);
    }

    #[test]
    fn power_start_not_orthogonal_to_difference() {
        let v = power_start(2);
        assert!((v[0] - v[1]).abs() > 0.1);
    }

    #[test]
    fn sign_of_zero_is_zero() {
        assert_eq!(sign(0.0), 0.0);
        assert_eq!(sign(-0.0), 0.0);
        assert_eq!(sign(-3.0), -1.0);
    }
}
