use mimetic_core::mimetic1d::{
    build_boundary, build_divergence, build_gradient, build_weights, face_points, scalar_points, Operators1d,
};

/// Solves V c = e_1 for the derivative weights at `x0` from nodes `xs` (Gaussian elimination).
fn derivative_weights(xs: &[f64], x0: f64) -> Vec<f64> {
    let n = xs.len();
    // row j: Σ c_i (x_i − x0)^j = j·0^(j−1)
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut row: Vec<f64> = xs.iter().map(|x| (x - x0).powi(j as i32)).collect();
            row.push(if j == 1 { 1.0 } else { 0.0 });
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

#[test]
fn fourth_order_boundary_rows_match_vandermonde() {
    let m = 12;
    let d = build_divergence(4, m, 1.0).unwrap();
    let g = build_gradient(4, m, 1.0).unwrap();
    let xs = scalar_points(m).iter().map(|x| x * m as f64).collect::<Vec<_>>();
    let xf = face_points(m).iter().map(|x| x * m as f64).collect::<Vec<_>>();

    let w = derivative_weights(&xf[..5], xs[1]);
    for j in 0..5 {
        assert!((d.get(1, j) - w[j]).abs() < 1e-12, "D[1,{j}]");
    }
    for row in 0..2 {
        let w = derivative_weights(&xs[..5], xf[row]);
        for j in 0..5 {
            assert!((g.get(row, j) - w[j]).abs() < 1e-12, "G[{row},{j}]");
        }
    }
    let w = derivative_weights(&xf[3..7], xs[5]);
    for s in 0..4 {
        assert!((d.get(5, 3 + s) - w[s]).abs() < 1e-12);
    }
}

#[test]
fn persymmetry() {
    for k in [2, 4] {
        let m = 10;
        let d = build_divergence(k, m, 0.1).unwrap();
        let g = build_gradient(k, m, 0.1).unwrap();
        for r in 0..=m + 1 {
            for c in 0..=m {
                assert_eq!(d.get(r, c), -d.get(m + 1 - r, m - c));
            }
        }
        for r in 0..=m {
            for c in 0..=m + 1 {
                assert_eq!(g.get(r, c), -g.get(m - r, m + 1 - c));
            }
        }
    }
}

#[test]
fn weights_are_quadratures() {
    // Dᵀq = e_end − e_0 makes Q exact for derivatives of face polynomials of degree ≤ k,
    // so Σ Q x^n dx = 1/(n+1) for n < k on scalar points; likewise P on faces.
    for k in [2usize, 4] {
        for m in [8usize, 13, 32] {
            let dx = 1.0 / m as f64;
            let ops = Operators1d::new(k, m, dx).unwrap();
            let (xs, xf) = (scalar_points(m), face_points(m));
            for n in 0..k as i32 {
                let exact = 1.0 / (n + 1) as f64;
                let q: f64 = ops.q.values.iter().zip(&xs).map(|(w, x)| w * x.powi(n)).sum::<f64>() * dx;
                let p: f64 = ops.p.values.iter().zip(&xf).map(|(w, x)| w * x.powi(n)).sum::<f64>() * dx;
                // Q's boundary entries carry the endpoint values, so only interior points integrate
                let q_int: f64 = ops.q.values[1..=m].iter().zip(&xs[1..=m]).map(|(w, x)| w * x.powi(n)).sum::<f64>() * dx;
                assert!((p - exact).abs() < 1e-12, "P k={k} m={m} n={n}: {p}");
                assert!((q_int - exact).abs() < 1e-12, "Q k={k} m={m} n={n}: {q_int}");
                assert!(q > q_int);
            }
        }
    }
}

#[test]
fn boundary_operator_rows_and_columns() {
    for k in [2, 4] {
        let m = 48;
        let dx = 1.0 / m as f64;
        let d = build_divergence(k, m, dx).unwrap();
        let g = build_gradient(k, m, dx).unwrap();
        let (p, q) = build_weights(&d, &g, k, m, dx).unwrap();
        let b = build_boundary(&d, &g, &p, &q, dx).unwrap();
        let col_sums = b.transpose().apply(&vec![1.0; m + 2]);
        let row_sums = b.apply(&vec![1.0; m + 1]);
        for (i, s) in col_sums.iter().enumerate() {
            let want = if i == 0 { -1.0 } else if i == m { 1.0 } else { 0.0 };
            assert!((s * dx - want).abs() < 1e-11);
        }
        for (i, s) in row_sums.iter().enumerate() {
            let want = if i == 0 { -1.0 } else if i == m + 1 { 1.0 } else { 0.0 };
            assert!((s * dx - want).abs() < 1e-11);
        }
        // near-boundary rows carry a geometrically decaying tail; the centre is empty
        let reach = if k == 2 { 3 } else { 12 };
        for r in reach..m + 2 - reach {
            assert_eq!(b.row(r).count(), 0, "row {r}");
        }
    }
}

#[test]
fn second_order_gradient_boundary_row() {
    let g = build_gradient(2, 5, 1.0).unwrap();
    assert_eq!(g.get(0, 0), -8.0 / 3.0);
    assert_eq!(g.get(0, 1), 3.0);
    assert_eq!(g.get(0, 2), -1.0 / 3.0);
    assert_eq!(g.get(2, 2), -1.0);
    assert_eq!(g.get(2, 3), 1.0);
}

#[test]
fn invalid_inputs() {
    assert!(build_divergence(3, 10, 0.1).is_err());
    assert!(build_divergence(4, 7, 0.1).is_err());
    assert!(build_gradient(4, 10, 0.0).is_err());
    assert!(build_gradient(2, 2, 0.5).is_err());
}
