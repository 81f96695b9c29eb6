//! Signed distance from first arrival times.
//!
//! Each node tracks the flow that starts positive on its side of the interface (`u` where
//! `phi0 > 0`, `v` where `phi0 < 0`). When that flow changes sign between steps `n` and `n+1`, the
//! samples `n-2 ..= n+3` are interpolated in time with a third-order ENO polynomial and the root
//! is located by safeguarded Newton iteration. Samples before `t = 0` come from the opposite
//! flow: `u^{-k} = -v^k`.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Highest ENO degree used for the time interpolant.
pub const ENO_DEGREE: usize = 3;
const STENCIL: usize = 6;
/// Offset of sample `n` (the left bracket end) inside the 6-sample stencil.
const LEFT: usize = 2;

/// Interpolating polynomial in Newton form:
/// `p(t) = c_0 + c_1 (t - x_0) + c_2 (t - x_0)(t - x_1) + ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonPoly {
    pub nodes: Vec<f64>,
    pub coeffs: Vec<f64>,
}

impl NewtonPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.coeffs.len();
        let mut v = self.coeffs[n - 1];
        for k in (0..n - 1).rev() {
            v = v * (t - self.nodes[k]) + self.coeffs[k];
        }
        v
    }

    /// Value and first derivative.
    pub fn eval_with_derivative(&self, t: f64) -> (f64, f64) {
        let n = self.coeffs.len();
        let mut v = self.coeffs[n - 1];
        let mut d = 0.0;
        for k in (0..n - 1).rev() {
            d = d * (t - self.nodes[k]) + v;
            v = v * (t - self.nodes[k]) + self.coeffs[k];
        }
        (v, d)
    }
}

/// Divided difference over `ts[lo..=hi]`.
fn divided_difference(ts: &[f64], ys: &[f64], lo: usize, hi: usize) -> f64 {
    let mut dd: Vec<f64> = ys[lo..=hi].to_vec();
    for level in 1..=(hi - lo) {
        for i in 0..=(hi - lo - level) {
            dd[i] = (dd[i + 1] - dd[i]) / (ts[lo + i + level] - ts[lo + i]);
        }
    }
    dd[0]
}

/// ENO interpolant through `(ts[n], ys[n])`, `(ts[n+1], ys[n+1])`, grown up to `max_degree` by
/// adding whichever neighbour gives the smaller divided difference (ties go left).
///
/// Returns the polynomial and the inclusive index range of the chosen stencil.
pub fn eno_interpolant(
    ts: &[f64],
    ys: &[f64],
    n: usize,
    max_degree: usize,
) -> Result<(NewtonPoly, (usize, usize))> {
    if ts.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: ts.len(),
            got: ys.len(),
        });
    }
    if n + 1 >= ts.len() || ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "ENO needs strictly increasing times and a bracket inside the samples".into(),
        ));
    }
    let (mut lo, mut hi) = (n, n + 1);
    let mut nodes = vec![ts[n], ts[n + 1]];
    let mut coeffs = vec![ys[n], divided_difference(ts, ys, n, n + 1)];
    while coeffs.len() <= max_degree {
        let left = (lo > 0).then(|| divided_difference(ts, ys, lo - 1, hi));
        let right = (hi + 1 < ts.len()).then(|| divided_difference(ts, ys, lo, hi + 1));
        let (c, t) = match (left, right) {
            (Some(l), Some(r)) if l.abs() <= r.abs() => {
                lo -= 1;
                (l, ts[lo])
            }
            (Some(l), None) => {
                lo -= 1;
                (l, ts[lo])
            }
            (_, Some(r)) => {
                hi += 1;
                (r, ts[hi])
            }
            (None, None) => break,
        };
        coeffs.push(c);
        nodes.push(t);
    }
    Ok((NewtonPoly { nodes, coeffs }, (lo, hi)))
}

/// Root of `p` in `[a, b]`: Newton from the midpoint, bisection whenever an iterate leaves the
/// bracket or fails to converge.
pub fn find_root(p: &NewtonPoly, a: f64, b: f64) -> Result<f64> {
    let (fa, fb) = (p.eval(a), p.eval(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange(a, b));
    }
    let width = b - a;
    let scale = fa.abs().max(fb.abs());
    let (mut lo, mut hi, mut flo) = (a, b, fa);
    let mut t = 0.5 * (a + b);
    for _ in 0..25 {
        let (v, d) = p.eval_with_derivative(t);
        if v.abs() < 1e-13 * scale {
            return Ok(t);
        }
        if v.signum() == flo.signum() {
            lo = t;
            flo = v;
        } else {
            hi = t;
        }
        let step = v / d;
        let next = t - step;
        if d != 0.0 && next > lo && next < hi && next.is_finite() {
            if step.abs() < 1e-14 * width {
                return Ok(next);
            }
            t = next;
        } else {
            break;
        }
    }
    // Bisection on the maintained bracket.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = p.eval(mid);
        if v == 0.0 || hi - lo < 1e-15 * width.max(f64::MIN_POSITIVE) {
            return Ok(mid);
        }
        if v.signum() == flo.signum() {
            lo = mid;
            flo = v;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Arrival time of the sign change between samples `n` and `n+1` of a uniformly sampled
/// stencil `ys` (sample `j` at time `t0 + j dt`), using as much ENO order as the data allows.
pub fn arrival_time(ys: &[f64], n: usize, t0: f64, dt: f64) -> Result<f64> {
    let ts: Vec<f64> = (0..ys.len()).map(|j| t0 + j as f64 * dt).collect();
    let (poly, _) = eno_interpolant(&ts, ys, n, ENO_DEGREE)?;
    let root = find_root(&poly, ts[n], ts[n + 1])?;
    assert!(root >= ts[n] && root <= ts[n + 1], "root escaped its bracket");
    Ok(root)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Status {
    /// `phi0 = 0`.
    OnInterface,
    Searching,
    /// Sign change between samples `n` and `n+1`, waiting for `n+3`.
    Pending(usize),
    Found(f64),
}

/// Per-node tracking state.
#[derive(Clone, Debug)]
struct Track {
    /// +1 tracks `u`, -1 tracks `v`.
    side: f64,
    /// Samples `m-5 ..= m` of the tracked flow after recording sample `m`; NaN if unknown.
    ring: [f64; STENCIL],
    status: Status,
}

/// Streaming six-deep time history of the flow fields and first-arrival bookkeeping.
#[derive(Clone, Debug)]
pub struct HistoryBuffer {
    dt: f64,
    tracks: Vec<Track>,
    /// Index of the latest recorded sample, if any.
    latest: Option<usize>,
}

/// Reconstructed signed distance.
#[derive(Clone, Debug)]
pub struct ArrivalResult {
    pub phi: Vec<f64>,
    /// `true` where a root was found (or the node lies on the interface).
    pub resolved: Vec<bool>,
}

impl HistoryBuffer {
    /// One track per node; `phi0` selects which flow each node follows.
    pub fn new(phi0: &[f64], dt: f64) -> Self {
        let tracks = phi0
            .iter()
            .map(|&p| Track {
                side: if p >= 0.0 { 1.0 } else { -1.0 },
                ring: [f64::NAN; STENCIL],
                status: if p == 0.0 {
                    Status::OnInterface
                } else {
                    Status::Searching
                },
            })
            .collect();
        Self {
            dt,
            tracks,
            latest: None,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn latest_sample(&self) -> Option<usize> {
        self.latest
    }

    /// Tracked-flow samples `m-5 ..= m` at node `i` (NaN where unknown).
    pub fn window(&self, i: usize) -> [f64; STENCIL] {
        self.tracks[i].ring
    }

    /// Records sample `m` (time `m dt`); samples must arrive in order starting at 0.
    pub fn record(&mut self, m: usize, u: &[f64], v: &[f64]) -> Result<()> {
        let expected = self.latest.map_or(0, |l| l + 1);
        if m != expected {
            return Err(Error::InvalidArgument(format!(
                "history sample {m} recorded out of order (expected {expected})"
            )));
        }
        if u.len() != self.tracks.len() || v.len() != self.tracks.len() {
            return Err(Error::LengthMismatch {
                expected: self.tracks.len(),
                got: u.len().min(v.len()),
            });
        }
        let dt = self.dt;
        self.tracks.par_iter_mut().enumerate().for_each(|(i, tr)| {
            if matches!(tr.status, Status::OnInterface | Status::Found(_)) {
                return;
            }
            let (own, other) = if tr.side > 0.0 { (u[i], v[i]) } else { (v[i], u[i]) };
            tr.ring.rotate_left(1);
            tr.ring[STENCIL - 1] = own;
            // Mirror seeding: tracked^{-k} = -other^{k}, placed at slot 5 - (m + k).
            if (1..=2).contains(&m) {
                tr.ring[STENCIL - 1 - 2 * m] = -other;
            }
            match tr.status {
                Status::Searching if m >= 1 => {
                    let (prev, cur) = (tr.ring[STENCIL - 2], own);
                    if prev > 0.0 && cur <= 0.0 {
                        tr.status = Status::Pending(m - 1);
                    }
                }
                _ => {}
            }
            if let Status::Pending(n) = tr.status {
                if m == n + 3 {
                    let t0 = (n as f64 - LEFT as f64) * dt;
                    tr.status = Status::Found(resolve(&tr.ring, LEFT, t0, dt));
                }
            }
        });
        self.latest = Some(m);
        Ok(())
    }

    /// Signed distance per node; unresolved nodes are clamped to `sign(phi0) t_final`.
    pub fn finish(&self, t_final: f64) -> ArrivalResult {
        let latest = self.latest.unwrap_or(0);
        let dt = self.dt;
        let (phi, resolved) = self
            .tracks
            .par_iter()
            .map(|tr| match tr.status {
                Status::OnInterface => (0.0, true),
                Status::Found(t) => (tr.side * t, true),
                Status::Pending(n) => {
                    // Fewer than three samples after the bracket: use what the ring holds.
                    let avail = latest - n; // samples n+1 ..= latest, 1 or 2 of them
                    let start = STENCIL - 1 - avail - LEFT;
                    let t0 = (n as f64 - LEFT as f64) * dt;
                    (tr.side * resolve(&tr.ring[start..], LEFT, t0, dt), true)
                }
                Status::Searching => (tr.side * t_final, false),
            })
            .unzip();
        ArrivalResult { phi, resolved }
    }
}

/// Root from a window whose sample `left` is the bracket start at time `t0 + left dt`.
/// Leading unknown samples (NaN) are dropped.
fn resolve(window: &[f64], left: usize, t0: f64, dt: f64) -> f64 {
    let skip = window[..left].iter().take_while(|v| v.is_nan()).count();
    let ys = &window[skip..];
    arrival_time(ys, left - skip, t0 + skip as f64 * dt, dt).expect("bracketed sign change always has a root")
}
