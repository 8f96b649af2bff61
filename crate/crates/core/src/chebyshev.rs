//! Chebyshev-Lobatto nodes, differentiation and quadrature on the unit interval.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Nodes `xi_j = (1 - cos(j pi / (N-1))) / 2`, ascending from 0 to 1.
pub fn nodes(n: usize) -> DVector<f64> {
    assert!(n >= 2, "at least two nodes required");
    let m = (n - 1) as f64;
    DVector::from_fn(n, |j, _| {
        // sin^2 form keeps the nodes near 0 accurate.
        let s = (PI * j as f64 / (2.0 * m)).sin();
        s * s
    })
}

/// First-derivative matrix on the unit-interval nodes.
pub fn diff_matrix(n: usize) -> DMatrix<f64> {
    assert!(n >= 2, "at least two nodes required");
    let m = n - 1;
    // Standard matrix on x_j = cos(j pi / m) in [-1, 1]; xi = (1 - x) / 2 gives d/dxi = -2 d/dx.
    let x: Vec<f64> = (0..n).map(|j| (PI * j as f64 / m as f64).cos()).collect();
    let weight = |j: usize| {
        let c = if j == 0 || j == m { 2.0 } else { 1.0 };
        if j.is_multiple_of(2) {
            c
        } else {
            -c
        }
    };
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let v = weight(i) / weight(j) / (x[i] - x[j]);
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        // Negative-sum trick: rows annihilate constants exactly.
        d[(i, i)] = -row_sum;
    }
    d * -2.0
}

/// Clenshaw-Curtis weights for the unit-interval nodes.
pub fn quadrature_weights(n: usize) -> DVector<f64> {
    assert!(n >= 2, "at least two nodes required");
    let m = n - 1;
    let mf = m as f64;
    let mut w = DVector::zeros(n);
    for j in 0..n {
        let theta = PI * j as f64 / mf;
        let mut sum = 0.0;
        for k in 1..=m / 2 {
            let b = if 2 * k == m { 1.0 } else { 2.0 };
            sum += b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * k as f64 * theta).cos();
        }
        let c = if j == 0 || j == m { 1.0 } else { 2.0 };
        // Half of the [-1, 1] weight, for the interval length 1.
        w[j] = 0.5 * c / mf * (1.0 - sum);
    }
    w
}

/// Discrete Chebyshev coefficients of nodal values (nodes ascending in xi).
pub fn coefficients(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 2, "at least two nodes required");
    let m = n - 1;
    let mf = m as f64;
    (0..n)
        .map(|k| {
            let mut sum = 0.0;
            for (j, v) in values.iter().enumerate() {
                let c = if j == 0 || j == m { 0.5 } else { 1.0 };
                sum += c * v * (PI * (k * j) as f64 / mf).cos();
            }
            let scale = if k == 0 || k == m { 1.0 / mf } else { 2.0 / mf };
            sum * scale
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nodes_span_unit_interval() {
        let xi = nodes(9);
        assert_eq!(xi[0], 0.0);
        assert_relative_eq!(xi[8], 1.0, epsilon = 1e-15);
        assert_relative_eq!(xi[4], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn differentiates_polynomials_exactly() {
        let n = 12;
        let xi = nodes(n);
        let d = diff_matrix(n);
        let f = xi.map(|x| x.powi(7) - 3.0 * x * x + 1.0);
        let df = &d * f;
        for j in 0..n {
            let x = xi[j];
            assert_relative_eq!(df[j], 7.0 * x.powi(6) - 6.0 * x, epsilon = 1e-10);
        }
    }

    #[test]
    fn constants_have_zero_derivative() {
        let d = diff_matrix(20);
        let ones = DVector::from_element(20, 1.0);
        assert!((d * ones).amax() < 1e-10);
    }

    #[test]
    fn weights_integrate_polynomials() {
        let n = 15;
        let xi = nodes(n);
        let w = quadrature_weights(n);
        assert_relative_eq!(w.sum(), 1.0, epsilon = 1e-14);
        let integral: f64 = (0..n).map(|j| w[j] * xi[j].powi(10)).sum();
        assert_relative_eq!(integral, 1.0 / 11.0, epsilon = 1e-13);
    }

    #[test]
    fn coefficients_recover_chebyshev_polynomial() {
        // T_3(x) with x = 1 - 2 xi.
        let xi = nodes(8);
        let vals: Vec<f64> = xi.iter().map(|s| {
            let x = 1.0 - 2.0 * s;
            4.0 * x * x * x - 3.0 * x
        }).collect();
        let c = coefficients(&vals);
        for (k, ck) in c.iter().enumerate() {
            let expected = if k == 3 { 1.0 } else { 0.0 };
            assert_relative_eq!(*ck, expected, epsilon = 1e-13);
        }
    }
}
