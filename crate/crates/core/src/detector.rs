//! Modal regularity detector.
//!
//! Each element's nodal values are expanded in the orthonormal modal basis; the largest
//! coefficient magnitude per total degree is skyline-pegged and fitted to `C k^{-s}`. Elements
//! whose decay exponent `s` falls below the threshold are troubled.

use rayon::prelude::*;

use crate::refelem::ReferenceElement;

/// Relative floor applied to the skyline, scaled by the coefficient norm.
const BASELINE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimiterMode {
    Auto,
    AlwaysOn,
    Off,
}

impl std::str::FromStr for LimiterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Self::Auto),
            "on" | "always_on" => Ok(Self::AlwaysOn),
            "off" => Ok(Self::Off),
            other => Err(format!("unknown limiter mode '{other}' (expected auto, on, off)")),
        }
    }
}

impl std::fmt::Display for LimiterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Auto => "auto",
            Self::AlwaysOn => "on",
            Self::Off => "off",
        })
    }
}

/// The auto mode needs at least three degrees to fit; lower orders limit everywhere.
pub fn effective_mode(mode: LimiterMode, order: usize) -> LimiterMode {
    if mode == LimiterMode::Auto && order < 3 {
        log::warn!("modal detector needs N >= 3 (N = {order}); limiting every element");
        LimiterMode::AlwaysOn
    } else {
        mode
    }
}

#[derive(Clone, Debug)]
pub struct RegularityReport {
    /// Fitted decay exponent per element; `+inf` when no mode above degree 0 is resolved,
    /// `NaN` when the mode override skipped the fit or the field was not finite.
    pub decay_exponent: Vec<f64>,
    pub troubled: Vec<bool>,
    pub threshold: f64,
}

impl RegularityReport {
    pub fn count(&self) -> usize {
        self.troubled.iter().filter(|&&t| t).count()
    }
}

/// Decay exponent of one element's nodal values, or `None` if the values are not finite.
pub fn decay_exponent(re: &ReferenceElement, nodal: &[f64]) -> Option<f64> {
    if nodal.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let n = re.order;
    let modal = re.inv_vandermonde.mul_vec(nodal);
    let norm = modal.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut per_degree = vec![0.0f64; n + 1];
    for (c, &k) in modal.iter().zip(&re.mode_degree) {
        per_degree[k] = per_degree[k].max(c.abs());
    }
    for k in (0..n).rev() {
        per_degree[k] = per_degree[k].max(per_degree[k + 1]);
    }
    let floor = BASELINE * norm;
    if per_degree[1] <= floor {
        return Some(f64::INFINITY);
    }
    Some(fit_decay(
        &per_degree[1..].iter().map(|c| c.max(floor)).collect::<Vec<_>>(),
    ))
}

/// Least-squares slope of `log c_k` against `log k`, `k = 1..`, negated.
fn fit_decay(c: &[f64]) -> f64 {
    let m = c.len() as f64;
    let xs: Vec<f64> = (1..=c.len()).map(|k| (k as f64).ln()).collect();
    let ys: Vec<f64> = c.iter().map(|v| v.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return f64::INFINITY;
    }
    -sxy / sxx
}

/// Runs the detector on every element of `fields` (each `K x Np`, element-major); an element is
/// troubled if any field triggers. `skip[e]` elements are never marked.
pub fn detect(
    fields: &[&[f64]],
    re: &ReferenceElement,
    mode: LimiterMode,
    threshold: f64,
    skip: Option<&[bool]>,
) -> RegularityReport {
    let np = re.np;
    let k = fields.first().map_or(0, |f| f.len() / np);
    let mode = effective_mode(mode, re.order);
    let per_element: Vec<(f64, bool)> = (0..k)
        .into_par_iter()
        .map(|e| {
            if skip.is_some_and(|s| s[e]) {
                return (f64::NAN, false);
            }
            match mode {
                LimiterMode::Off => (f64::NAN, false),
                LimiterMode::AlwaysOn => (f64::NAN, true),
                LimiterMode::Auto => {
                    let mut s_min = f64::INFINITY;
                    for field in fields {
                        match decay_exponent(re, &field[e * np..(e + 1) * np]) {
                            Some(s) => s_min = s_min.min(s),
                            None => return (f64::NAN, true),
                        }
                    }
                    (s_min, s_min < threshold)
                }
            }
        })
        .collect();
    RegularityReport {
        decay_exponent: per_element.iter().map(|p| p.0).collect(),
        troubled: per_element.iter().map(|p| p.1).collect(),
        threshold,
    }
}
