//! Benchmark interfaces: perturbed initial level sets and their signed-distance references.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Initial level set, signed-distance reference and interface length on `[-L, L]^2`.
#[derive(Clone)]
pub struct TestCase {
    pub name: String,
    pub half_width: f64,
    pub interface_length: f64,
    phi0: Field,
    exact: Field,
}

impl fmt::Debug for TestCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestCase")
            .field("name", &self.name)
            .field("half_width", &self.half_width)
            .field("interface_length", &self.interface_length)
            .finish_non_exhaustive()
    }
}

impl TestCase {
    pub fn new(
        name: impl Into<String>,
        half_width: f64,
        interface_length: f64,
        phi0: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        exact: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            half_width,
            interface_length,
            phi0: Arc::new(phi0),
            exact: Arc::new(exact),
        }
    }

    /// Built-in case by name: `circle`, `ellipse`, `xcircles`, `square` or `multi`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "circle" => Ok(circle()),
            "ellipse" => Ok(ellipse(ELLIPSE_SAMPLES)),
            "xcircles" => Ok(intersecting_circles(1.0, 0.7)),
            "square" => Ok(square()),
            "multi" => multi_circle(&MULTI_CIRCLE_LAYOUT),
            other => Err(Error::InvalidArgument(format!(
                "unknown case '{other}' (expected circle, ellipse, xcircles, square or multi)"
            ))),
        }
    }

    pub fn phi0(&self, x: f64, y: f64) -> f64 {
        (self.phi0)(x, y)
    }

    pub fn exact(&self, x: f64, y: f64) -> f64 {
        (self.exact)(x, y)
    }

    /// Half the domain diagonal.
    pub fn half_diagonal(&self) -> f64 {
        self.half_width * 2f64.sqrt()
    }
}

pub const CASE_NAMES: [&str; 5] = ["circle", "ellipse", "xcircles", "square", "multi"];

fn perturbation(x: f64, y: f64, x0: f64, y0: f64) -> f64 {
    (x - x0).powi(2) + (y - y0).powi(2) + 0.1
}

/// Unit circle under a strictly positive perturbation.
pub fn circle() -> TestCase {
    let d = |x: f64, y: f64| x.hypot(y) - 1.0;
    TestCase::new(
        "circle",
        2.0,
        2.0 * PI,
        move |x, y| perturbation(x, y, 1.0, 1.0) * d(x, y),
        d,
    )
}

pub const ELLIPSE_SAMPLES: usize = 100_000;
const ELLIPSE_A: f64 = 1.0;
const ELLIPSE_B: f64 = 0.5;

/// Ellipse `x^2/A^2 + y^2/B^2 = 1`; distance to `samples` interface points.
pub fn ellipse(samples: usize) -> TestCase {
    let (a, b) = (ELLIPSE_A, ELLIPSE_B);
    let phi0 = move |x: f64, y: f64| perturbation(x, y, 0.875, 0.5) * ((x / a).hypot(y / b) - 1.0);
    let pts: Vec<[f64; 2]> = (0..samples)
        .map(|n| {
            let th = 2.0 * PI * n as f64 / samples as f64;
            [a * th.cos(), b * th.sin()]
        })
        .collect();
    let perimeter = (0..samples)
        .map(|n| {
            let (p, q) = (pts[n], pts[(n + 1) % samples]);
            (q[0] - p[0]).hypot(q[1] - p[1])
        })
        .sum();
    let nearest = NearestOnCurve::new(pts);
    TestCase::new("ellipse", 2.0, perimeter, phi0, move |x, y| {
        let s = phi0(x, y);
        if s == 0.0 {
            0.0
        } else {
            nearest.distance([x, y]).copysign(s)
        }
    })
}

/// Exact minimum distance to a closed polyline's vertices by a coarse pass over every
/// `stride`-th vertex followed by a full scan of the strides around every coarse candidate that
/// could hide the minimum.
struct NearestOnCurve {
    pts: Vec<[f64; 2]>,
    stride: usize,
    /// Largest distance between a vertex and its nearest coarse vertex.
    reach: f64,
}

impl NearestOnCurve {
    fn new(pts: Vec<[f64; 2]>) -> Self {
        let stride = ((pts.len() as f64).sqrt() as usize).max(1);
        let n = pts.len();
        let mut reach = 0.0f64;
        for i in 0..n {
            let c0 = (i / stride) * stride;
            let c1 = (c0 + stride) % n;
            let d = dist(pts[i], pts[c0]).min(dist(pts[i], pts[c1]));
            reach = reach.max(d);
        }
        Self { pts, stride, reach }
    }

    fn distance(&self, p: [f64; 2]) -> f64 {
        let n = self.pts.len();
        let coarse: Vec<(usize, f64)> = (0..n)
            .step_by(self.stride)
            .map(|i| (i, dist(p, self.pts[i])))
            .collect();
        let best = coarse.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let mut d = best;
        for &(i, dc) in &coarse {
            if dc <= best + 2.0 * self.reach {
                for k in 1..self.stride {
                    d = d.min(dist(p, self.pts[(i + k) % n]));
                    d = d.min(dist(p, self.pts[(i + n - k) % n]));
                }
            }
        }
        d
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Union of two radius-`r` circles centred at `(+-a, 0)`, `0 < a < r`.
pub fn intersecting_circles(r: f64, a: f64) -> TestCase {
    let c = (r * r - a * a).sqrt();
    let d = move |x: f64, y: f64| {
        let right = (a - x) / (a - x).hypot(y) >= a / r;
        let left = (a + x) / (a + x).hypot(y) >= a / r;
        if right && left {
            // Lens between the two corners: nearest boundary point is a corner.
            -x.hypot(y.abs() - c)
        } else {
            ((x - a).hypot(y) - r).min((x + a).hypot(y) - r)
        }
    };
    // Two arcs of angle 2 pi - 2 acos(a / r) each.
    let length = 2.0 * r * (2.0 * PI - 2.0 * (a / r).acos());
    TestCase::new(
        "xcircles",
        2.0,
        length,
        move |x, y| perturbation(x, y, 1.0, 1.0) * d(x, y),
        d,
    )
}

/// Width-2 square centred at the origin; exact distance in closed form.
pub fn square() -> TestCase {
    let w = 2.0;
    let exact = move |x: f64, y: f64| {
        let qx = x.abs() - w / 2.0;
        let qy = y.abs() - w / 2.0;
        qx.max(0.0).hypot(qy.max(0.0)) + qx.max(qy).min(0.0)
    };
    TestCase::new(
        "square",
        2.0,
        4.0 * w,
        move |x, y| 0.8 * (x.abs() - w / 2.0).max(y.abs() - w / 2.0),
        exact,
    )
}

/// Default twelve-circle layout `(centre, radius)`: three staggered rows of four.
pub const MULTI_CIRCLE_LAYOUT: [([f64; 2], f64); 12] = [
    ([-1.5, -1.5], 0.35),
    ([-0.6, -1.5], 0.35),
    ([0.3, -1.5], 0.35),
    ([1.2, -1.5], 0.35),
    ([-1.2, 0.0], 0.35),
    ([-0.3, 0.0], 0.35),
    ([0.6, 0.0], 0.35),
    ([1.5, 0.0], 0.35),
    ([-1.5, 1.5], 0.35),
    ([-0.6, 1.5], 0.35),
    ([0.3, 1.5], 0.35),
    ([1.2, 1.5], 0.35),
];

/// Minimum of circle distances. Circles must be disjoint so the interface length is their sum.
pub fn multi_circle(circles: &[([f64; 2], f64)]) -> Result<TestCase> {
    if circles.is_empty() {
        return Err(Error::InvalidArgument(
            "multi-circle case needs at least one circle".into(),
        ));
    }
    for (i, (c, r)) in circles.iter().enumerate() {
        if !(*r > 0.0) {
            return Err(Error::InvalidArgument(format!("circle {i} has radius {r}")));
        }
        for (c2, r2) in &circles[i + 1..] {
            if dist(*c, *c2) <= r + r2 {
                return Err(Error::InvalidArgument(format!(
                    "circle {i} overlaps another circle"
                )));
            }
        }
    }
    let circles: Arc<[([f64; 2], f64)]> = circles.into();
    let length = circles.iter().map(|(_, r)| 2.0 * PI * r).sum();
    let cs = circles.clone();
    let d = move |x: f64, y: f64| {
        cs.iter()
            .map(|(c, r)| (x - c[0]).hypot(y - c[1]) - r)
            .fold(f64::INFINITY, f64::min)
    };
    let d0 = d.clone();
    Ok(TestCase::new(
        "multi",
        2.0,
        length,
        move |x, y| perturbation(x, y, 1.0, 1.0) * d0(x, y),
        d,
    ))
}

/// Parses `x:y:r` triples separated by `;`.
pub fn parse_circles(s: &str) -> Result<Vec<([f64; 2], f64)>> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let v: Vec<f64> = t
                .split(':')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("bad circle '{t}': {e}")))?;
            match v[..] {
                [x, y, r] => Ok(([x, y], r)),
                _ => Err(Error::InvalidArgument(format!(
                    "bad circle '{t}': expected x:y:r"
                ))),
            }
        })
        .collect()
}
