//! Banded L2 / L∞ error norms, the averaged interface L1 error and observed convergence orders.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::Discretization;

/// Smoothed Heaviside `0.5 (1 + tanh(pi phi / h))`.
#[inline]
pub fn heaviside(phi: f64, h: f64) -> f64 {
    0.5 * (1.0 + (std::f64::consts::PI * phi / h).tanh())
}

/// Error norms of one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    /// `sqrt` of the summed elemental inner products.
    pub l2: f64,
    /// The summed inner products themselves.
    pub l2_sum: f64,
    pub linf: f64,
    /// Signed averaged Heaviside mismatch.
    pub l1_interface: f64,
    /// Averaged absolute Heaviside mismatch.
    pub l1_abs: f64,
    pub band_eps: f64,
    pub h_char: f64,
    /// Nodes inside the band.
    pub band_nodes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandNorms {
    pub l2: f64,
    pub l2_sum: f64,
    pub linf: f64,
    pub nodes: usize,
}

/// Errors over the nodes with `|exact| <= band_eps`; L2 integrates the masked error with the
/// elemental mass matrix.
pub fn banded_norms(disc: &Discretization, phi: &[f64], exact: &[f64], band_eps: f64) -> Result<BandNorms> {
    let np = disc.np();
    check_len(disc, phi)?;
    check_len(disc, exact)?;
    if !(band_eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "band must be positive, got {band_eps}"
        )));
    }
    let m = &disc.re.mass;
    let (sum, linf, nodes) = (0..disc.num_elements())
        .into_par_iter()
        .map(|e| {
            let mut err = vec![0.0; np];
            let mut linf = 0.0f64;
            let mut nodes = 0;
            for i in 0..np {
                let k = e * np + i;
                if exact[k].abs() <= band_eps {
                    err[i] = phi[k] - exact[k];
                    linf = linf.max(err[i].abs());
                    nodes += 1;
                }
            }
            if nodes == 0 {
                return (0.0, 0.0, 0);
            }
            let mut s = 0.0;
            for i in 0..np {
                for j in 0..np {
                    s += err[i] * m[(i, j)] * err[j];
                }
            }
            (disc.geom.j[e] * s, linf, nodes)
        })
        .reduce(|| (0.0, 0.0, 0), |a, b| (a.0 + b.0, a.1.max(b.1), a.2 + b.2));
    if nodes == 0 {
        return Err(Error::EmptyBand(band_eps));
    }
    Ok(BandNorms {
        l2: sum.max(0.0).sqrt(),
        l2_sum: sum,
        linf,
        nodes,
    })
}

/// `(signed, absolute)` interface error `(1/L) sum_e (H_h(phi) - H_h(exact), 1)_e`.
pub fn interface_l1(
    disc: &Discretization,
    phi: &[f64],
    exact: &[f64],
    h_char: f64,
    interface_length: f64,
) -> Result<(f64, f64)> {
    check_len(disc, phi)?;
    check_len(disc, exact)?;
    if !(h_char > 0.0) || !(interface_length > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "h and interface length must be positive, got {h_char} and {interface_length}"
        )));
    }
    let np = disc.np();
    let m = &disc.re.mass;
    let weights: Vec<f64> = (0..np).map(|j| (0..np).map(|i| m[(i, j)]).sum()).collect();
    let (signed, abs) = (0..disc.num_elements())
        .into_par_iter()
        .map(|e| {
            let mut d = vec![0.0; np];
            for i in 0..np {
                let k = e * np + i;
                d[i] = heaviside(phi[k], h_char) - heaviside(exact[k], h_char);
            }
            let s: f64 = weights.iter().zip(&d).map(|(w, d)| w * d).sum();
            let a: f64 = weights.iter().zip(&d).map(|(w, d)| w * d.abs()).sum();
            (disc.geom.j[e] * s, disc.geom.j[e] * a)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok((signed / interface_length, abs / interface_length))
}

/// All norms of one run.
pub fn error_report(
    disc: &Discretization,
    phi: &[f64],
    exact: &[f64],
    band_eps: f64,
    h_char: f64,
    interface_length: f64,
) -> Result<ErrorReport> {
    let b = banded_norms(disc, phi, exact, band_eps)?;
    let (l1, l1_abs) = interface_l1(disc, phi, exact, h_char, interface_length)?;
    Ok(ErrorReport {
        l2: b.l2,
        l2_sum: b.l2_sum,
        linf: b.linf,
        l1_interface: l1,
        l1_abs,
        band_eps,
        h_char,
        band_nodes: b.nodes,
    })
}

/// `log(E_k / E_{k+1}) / log(h_k / h_{k+1})` per consecutive pair; `None` where undefined.
pub fn observed_order(errors: &[f64], h: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.len() != h.len() {
        return Err(Error::LengthMismatch {
            expected: h.len(),
            got: errors.len(),
        });
    }
    if h.len() < 2 {
        return Err(Error::InvalidArgument("at least two levels are needed".into()));
    }
    if h.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("mesh sizes must strictly decrease".into()));
    }
    Ok(errors
        .windows(2)
        .zip(h.windows(2))
        .map(|(e, h)| {
            let r = (e[0] / e[1]).ln() / (h[0] / h[1]).ln();
            (e[0] > 0.0 && e[1] > 0.0 && r.is_finite()).then_some(r)
        })
        .collect())
}

/// `||grad phi| - 1|` at every node with `|exact| <= band_eps`, from the elemental polynomial
/// gradient.
pub fn eikonal_residuals(
    disc: &Discretization,
    phi: &[f64],
    exact: &[f64],
    band_eps: f64,
) -> Result<Vec<f64>> {
    check_len(disc, phi)?;
    check_len(disc, exact)?;
    let np = disc.np();
    let g = &disc.geom;
    Ok((0..disc.num_elements())
        .into_par_iter()
        .flat_map_iter(|e| {
            let u = &phi[e * np..(e + 1) * np];
            let ur = disc.re.dr.mul_vec(u);
            let us = disc.re.ds.mul_vec(u);
            (0..np).filter_map(move |i| {
                if exact[e * np + i].abs() > band_eps {
                    return None;
                }
                let gx = g.rx[e] * ur[i] + g.sx[e] * us[i];
                let gy = g.ry[e] * ur[i] + g.sy[e] * us[i];
                Some((gx.hypot(gy) - 1.0).abs())
            })
        })
        .collect())
}

/// Median of a non-empty sample.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn check_len(disc: &Discretization, v: &[f64]) -> Result<()> {
    let n = disc.num_elements() * disc.np();
    if v.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: v.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_square_mesh, Mesh};

    fn disc(order: usize) -> Discretization {
        Discretization::new(generate_square_mesh(1.0, 0.5).unwrap(), order).unwrap()
    }

    #[test]
    fn exact_field_has_zero_error() {
        let d = disc(3);
        let ex = d.sample(|x, y| x + 0.3 * y);
        let r = error_report(&d, &ex, &ex, 0.5, 0.1, 2.0).unwrap();
        assert_eq!((r.l2, r.linf, r.l1_interface, r.l1_abs), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_error_scales_with_area() {
        let d = disc(4);
        let ex = d.sample(|_, _| 0.0);
        let phi: Vec<f64> = ex.iter().map(|v| v + 0.25).collect();
        let b = banded_norms(&d, &phi, &ex, f64::INFINITY).unwrap();
        // Oracle: total area from the element vertices.
        let area: f64 = (0..d.num_elements()).map(|e| d.mesh.area(e)).sum();
        assert!((b.l2 - 0.25 * area.sqrt()).abs() < 1e-12);
        assert!((b.linf - 0.25).abs() < 1e-15);
        assert_eq!(b.nodes, phi.len());
    }

    #[test]
    fn empty_band_is_an_error() {
        let d = disc(2);
        let ex = d.sample(|_, _| 5.0);
        assert!(matches!(
            banded_norms(&d, &ex, &ex, 0.1),
            Err(Error::EmptyBand(_))
        ));
    }

    #[test]
    fn heaviside_limits_and_symmetry() {
        assert_eq!(heaviside(0.0, 0.1), 0.5);
        assert_eq!(heaviside(1e3, 0.1), 1.0);
        for p in [-0.3, -0.01, 0.0, 0.02, 0.4] {
            let h = heaviside(p, 0.1);
            assert!(h > 0.0 && h < 1.0);
            assert!((heaviside(-p, 0.1) - (1.0 - h)).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_shift_measures_displacement() {
        // Straight interface x = 0 of length 2 on a fine high-order mesh; the tanh strip integral
        // of a shift delta is exactly delta per unit length.
        let mesh = crate::mesh::refine_times(&generate_square_mesh(1.0, 0.25).unwrap(), 2).unwrap();
        let d = Discretization::new(mesh, 5).unwrap();
        let ex = d.sample(|x, _| x);
        let delta = 1e-3;
        let phi: Vec<f64> = ex.iter().map(|v| v + delta).collect();
        let h = 0.2;
        let (signed, abs) = interface_l1(&d, &phi, &ex, h, 2.0).unwrap();
        // 1D oracle: int_{-1}^{1} H(x+delta) - H(x) dx by composite Simpson.
        let n = 20000;
        let f = |x: f64| heaviside(x + delta, h) - heaviside(x, h);
        let w = 2.0 / n as f64;
        let simpson: f64 = (0..=n)
            .map(|i| {
                let c = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * f(-1.0 + i as f64 * w)
            })
            .sum::<f64>()
            * w
            / 3.0;
        assert!((signed - simpson).abs() < 1e-8, "{signed} vs {simpson}");
        assert!((signed - delta).abs() < 1e-5);
        assert!((abs - signed).abs() < 1e-15);
    }

    #[test]
    fn orders() {
        let o = observed_order(&[1.0, 1.0 / 16.0], &[1.0, 0.5]).unwrap();
        assert!((o[0].unwrap() - 4.0).abs() < 1e-12);
        let o = observed_order(&[1e-3, 2.5e-4], &[0.4, 0.2]).unwrap();
        assert!((o[0].unwrap() - 2.0).abs() < 1e-12);
        let hs = [0.3, 0.15, 0.075, 0.0375];
        let es: Vec<f64> = hs.iter().map(|h: &f64| 7.0 * h.powi(4)).collect();
        for o in observed_order(&es, &hs).unwrap() {
            assert!((o.unwrap() - 4.0).abs() < 1e-12);
        }
        assert_eq!(observed_order(&[0.0, 1.0], &[1.0, 0.5]).unwrap(), vec![None]);
        assert!(observed_order(&[1.0, 1.0], &[0.5, 1.0]).is_err());
        assert!(observed_order(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn eikonal_residual_of_distance_fields() {
        let d = disc(4);
        let plane = d.sample(|x, y| 0.6 * x - 0.8 * y);
        let r = eikonal_residuals(&d, &plane, &plane, 0.3).unwrap();
        assert!(!r.is_empty() && r.iter().all(|v| *v < 1e-11));
        let steep: Vec<f64> = plane.iter().map(|v| 2.0 * v).collect();
        let r = eikonal_residuals(&d, &steep, &plane, 0.3).unwrap();
        assert!((median(&r).unwrap() - 1.0).abs() < 1e-11);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn two_element_mesh_band_selection() {
        let m = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let d = Discretization::new(m, 2).unwrap();
        let ex = d.sample(|x, _| x - 0.5);
        let phi: Vec<f64> = ex.iter().map(|v| 2.0 * v).collect();
        // Quadratic nodes sit at x in {0, 0.5, 1}; a narrow band keeps the four on x = 0.5.
        let b = banded_norms(&d, &phi, &ex, 0.25).unwrap();
        assert_eq!((b.nodes, b.linf, b.l2), (4, 0.0, 0.0));
        let wide = banded_norms(&d, &phi, &ex, 0.5).unwrap();
        assert_eq!(wide.nodes, 12);
        assert!(wide.linf >= b.linf && (wide.linf - 0.5).abs() < 1e-14);
    }
}
