//! Orthonormal Jacobi polynomials, Gauss-type quadrature and the Koornwinder-Dubiner modal basis
//! on the bi-unit triangle `{-1 <= r, s; r + s <= 0}`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dense::DenseMatrix;

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Gamma function for positive integer arguments, which is all the Jacobi weights here need.
fn gamma_int(x: f64) -> f64 {
    let n = x.round();
    debug_assert!(
        (x - n).abs() < 1e-12 && n >= 1.0,
        "gamma_int needs a positive integer"
    );
    factorial(n as u32 - 1)
}

/// Normalized Jacobi polynomial `P_n^{(alpha, beta)}(x)`, orthonormal on `[-1, 1]` with weight
/// `(1 - x)^alpha (1 + x)^beta`.
pub fn jacobi_p(x: f64, alpha: f64, beta: f64, n: usize) -> f64 {
    let gamma0 =
        2f64.powf(alpha + beta + 1.0) / (alpha + beta + 1.0) * gamma_int(alpha + 1.0) * gamma_int(beta + 1.0)
            / gamma_int(alpha + beta + 1.0);
    let p0 = 1.0 / gamma0.sqrt();
    if n == 0 {
        return p0;
    }
    let gamma1 = (alpha + 1.0) * (beta + 1.0) / (alpha + beta + 3.0) * gamma0;
    let p1 = ((alpha + beta + 2.0) * x / 2.0 + (alpha - beta) / 2.0) / gamma1.sqrt();
    if n == 1 {
        return p1;
    }

    let mut aold = 2.0 / (2.0 + alpha + beta) * ((alpha + 1.0) * (beta + 1.0) / (alpha + beta + 3.0)).sqrt();
    let (mut pm1, mut p) = (p0, p1);
    for i in 1..n {
        let i = i as f64;
        let h1 = 2.0 * i + alpha + beta;
        let anew = 2.0 / (h1 + 2.0)
            * ((i + 1.0) * (i + 1.0 + alpha + beta) * (i + 1.0 + alpha) * (i + 1.0 + beta)
                / (h1 + 1.0)
                / (h1 + 3.0))
                .sqrt();
        let bnew = -(alpha * alpha - beta * beta) / h1 / (h1 + 2.0);
        let pn = (-aold * pm1 + (x - bnew) * p) / anew;
        pm1 = p;
        p = pn;
        aold = anew;
    }
    p
}

/// Derivative of [`jacobi_p`].
pub fn grad_jacobi_p(x: f64, alpha: f64, beta: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    (nf * (nf + alpha + beta + 1.0)).sqrt() * jacobi_p(x, alpha + 1.0, beta + 1.0, n - 1)
}

/// Gauss-Jacobi quadrature with `n + 1` points (Golub-Welsch).
pub fn jacobi_gq(alpha: f64, beta: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 0 {
        return (vec![-(alpha - beta) / (alpha + beta + 2.0)], vec![2.0]);
    }
    let m = n + 1;
    let mut jm = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        let h1 = 2.0 * i as f64 + alpha + beta;
        let diag = if (alpha + beta).abs() < 1e-14 {
            0.0
        } else {
            (beta * beta - alpha * alpha) / (h1 + 2.0) / h1
        };
        jm[(i, i)] = diag;
        if i + 1 < m {
            let k = (i + 1) as f64;
            let off = 2.0 / (h1 + 2.0)
                * (k * (k + alpha + beta) * (k + alpha) * (k + beta) / (h1 + 1.0) / (h1 + 3.0)).sqrt();
            jm[(i, i + 1)] = off;
            jm[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(jm);
    let scale =
        2f64.powf(alpha + beta + 1.0) / (alpha + beta + 1.0) * gamma_int(alpha + 1.0) * gamma_int(beta + 1.0)
            / gamma_int(alpha + beta + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], v0 * v0 * scale)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss-Jacobi-Lobatto points (`n + 1` of them, including the end points).
pub fn jacobi_gl(alpha: f64, beta: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1, "Gauss-Lobatto rule needs at least two points");
    if n == 1 {
        return vec![-1.0, 1.0];
    }
    let (inner, _) = jacobi_gq(alpha + 1.0, beta + 1.0, n - 2);
    let mut x = Vec::with_capacity(n + 1);
    x.push(-1.0);
    x.extend(inner);
    x.push(1.0);
    x
}

/// Gauss-Legendre points and weights with `q` points on `[-1, 1]`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    jacobi_gq(0.0, 0.0, q - 1)
}

/// 1D Vandermonde matrix `V[i][j] = P_j(x_i)` of the orthonormal Legendre basis.
pub fn vandermonde_1d(n: usize, x: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(x.len(), n + 1, |i, j| jacobi_p(x[i], 0.0, 0.0, j))
}

/// Collapsed coordinates of a point of the bi-unit triangle.
pub fn rs_to_ab(r: f64, s: f64) -> (f64, f64) {
    let a = if (s - 1.0).abs() > 1e-14 {
        2.0 * (1.0 + r) / (1.0 - s) - 1.0
    } else {
        -1.0
    };
    (a, s)
}

/// Number of modes of total degree at most `n`.
pub fn num_modes(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

/// Mode indices `(i, j)` in the order used everywhere in the crate: `i` outer, `j` inner,
/// `i + j <= n`. The total degree of mode `m` is `i + j`.
pub fn mode_indices(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(num_modes(n));
    for i in 0..=n {
        for j in 0..=(n - i) {
            out.push((i, j));
        }
    }
    out
}

/// Orthonormal simplex mode `(i, j)` at collapsed coordinates `(a, b)`.
pub fn simplex_2d_p(a: f64, b: f64, i: usize, j: usize) -> f64 {
    let h1 = jacobi_p(a, 0.0, 0.0, i);
    let h2 = jacobi_p(b, 2.0 * i as f64 + 1.0, 0.0, j);
    std::f64::consts::SQRT_2 * h1 * h2 * (1.0 - b).powi(i as i32)
}

/// `(d/dr, d/ds)` of simplex mode `(i, j)` at collapsed coordinates `(a, b)`.
pub fn grad_simplex_2d_p(a: f64, b: f64, id: usize, jd: usize) -> (f64, f64) {
    let fa = jacobi_p(a, 0.0, 0.0, id);
    let dfa = grad_jacobi_p(a, 0.0, 0.0, id);
    let gb = jacobi_p(b, 2.0 * id as f64 + 1.0, 0.0, jd);
    let dgb = grad_jacobi_p(b, 2.0 * id as f64 + 1.0, 0.0, jd);
    let half_1mb = 0.5 * (1.0 - b);

    let mut dmodedr = dfa * gb;
    if id > 0 {
        dmodedr *= half_1mb.powi(id as i32 - 1);
    }
    let mut dmodeds = dfa * (gb * (0.5 * (1.0 + a)));
    if id > 0 {
        dmodeds *= half_1mb.powi(id as i32 - 1);
    }
    let mut tmp = dgb * half_1mb.powi(id as i32);
    if id > 0 {
        tmp -= 0.5 * id as f64 * gb * half_1mb.powi(id as i32 - 1);
    }
    dmodeds += fa * tmp;

    let scale = 2f64.powf(id as f64 + 0.5);
    (dmodedr * scale, dmodeds * scale)
}

/// Values of all modes up to degree `n` at `(r, s)`.
pub fn modal_basis_at(n: usize, r: f64, s: f64) -> Vec<f64> {
    let (a, b) = rs_to_ab(r, s);
    mode_indices(n)
        .into_iter()
        .map(|(i, j)| simplex_2d_p(a, b, i, j))
        .collect()
}

/// Quadrature rule on the bi-unit triangle built from collapsed Gauss rules with `q` points per
/// direction. Exact for polynomials of total degree `2q - 2`.
pub fn triangle_quadrature(q: usize) -> Vec<([f64; 2], f64)> {
    let (xa, wa) = gauss_legendre(q);
    let (xb, wb) = jacobi_gq(1.0, 0.0, q - 1);
    let mut out = Vec::with_capacity(q * q);
    for (&a, &w1) in xa.iter().zip(&wa) {
        for (&b, &w2) in xb.iter().zip(&wb) {
            let r = 0.5 * (1.0 + a) * (1.0 - b) - 1.0;
            out.push(([r, b], 0.5 * w1 * w2));
        }
    }
    out
}

/// Maps a quadrature rule on the bi-unit triangle onto the triangle `(p0, p1, p2)`.
pub fn map_quadrature(
    rule: &[([f64; 2], f64)],
    p0: [f64; 2],
    p1: [f64; 2],
    p2: [f64; 2],
) -> Vec<([f64; 2], f64)> {
    let area2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let jac = 0.25 * area2.abs();
    rule.iter()
        .map(|&([r, s], w)| {
            let l0 = -(r + s) / 2.0;
            let l1 = (1.0 + r) / 2.0;
            let l2 = (1.0 + s) / 2.0;
            (
                [
                    l0 * p0[0] + l1 * p1[0] + l2 * p2[0],
                    l0 * p0[1] + l1 * p1[1] + l2 * p2[1],
                ],
                w * jac,
            )
        })
        .collect()
}
