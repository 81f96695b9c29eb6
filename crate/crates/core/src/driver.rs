//! Run configuration, single runs, convergence sweeps and their CSV / field output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::arrival::ArrivalResult;
use crate::cases::{multi_circle, parse_circles, TestCase};
use crate::detector::LimiterMode;
use crate::error::{Error, Result};
use crate::mesh::{generate_square_mesh, refine_times, Mesh};
use crate::metrics::{error_report, observed_order, ErrorReport};
use crate::operator::{Discretization, FvOrder};
use crate::output::{dump_operators, write_nodal_csv, write_vtk, CsvTable, FieldSet};
use crate::timeloop::{advance_with, far_from_interface, AdvanceOptions, FlowState};

/// Element size of the level-0 generated mesh.
pub const BASE_MESH_SIZE: f64 = 0.4;
/// Default final time as a multiple of the band (or of the domain half-diagonal).
pub const FINAL_TIME_FACTOR: f64 = 1.25;

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    Generated,
    File(PathBuf),
}

impl fmt::Display for MeshSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshSource::Generated => f.write_str("generated"),
            MeshSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

/// Effective configuration of a run or sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub case: String,
    pub order: usize,
    /// Number of refinement levels in a sweep.
    pub levels: usize,
    pub start_level: usize,
    pub cfl: f64,
    /// Band half-width; infinite for global runs.
    pub band_eps: f64,
    /// `None` picks [`FINAL_TIME_FACTOR`] times the band (or half-diagonal).
    pub final_time: Option<f64>,
    pub limiter: LimiterMode,
    pub threshold: f64,
    pub fv_order: FvOrder,
    pub out_dir: Option<PathBuf>,
    pub mesh: MeshSource,
    /// Multi-circle layout override.
    pub circles: Option<Vec<([f64; 2], f64)>>,
    /// Times at which intermediate error norms are recorded.
    pub history_times: Vec<f64>,
    pub write_fields: bool,
    pub dump_operators: bool,
    /// Single troubled mask shared by both flows.
    pub joint_detection: bool,
    /// Freeze each flow far inside the side it never has to reach.
    pub one_sided: bool,
    /// Keep both flows non-increasing and above their initial minimum.
    pub bounds: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case: "circle".into(),
            order: 3,
            levels: 1,
            start_level: 0,
            cfl: 1.0,
            band_eps: f64::INFINITY,
            final_time: None,
            limiter: LimiterMode::Auto,
            threshold: 2.5,
            fv_order: FvOrder::Second,
            out_dir: None,
            mesh: MeshSource::Generated,
            circles: None,
            history_times: Vec::new(),
            write_fields: true,
            dump_operators: false,
            joint_detection: false,
            one_sided: true,
            bounds: true,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| Error::InvalidArgument(format!("{key} = '{value}': {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidArgument(format!(
            "{key} = '{value}': expected true or false"
        ))),
    }
}

impl RunConfig {
    /// Sets one option by its flag name (`-` and `_` are interchangeable).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "case" => self.case = value.to_string(),
            "order" | "n" => self.order = parse_num(&key, value)?,
            "levels" => self.levels = parse_num(&key, value)?,
            "start-level" | "level" => self.start_level = parse_num(&key, value)?,
            "cfl" => self.cfl = parse_num(&key, value)?,
            "band" | "band-eps" => {
                self.band_eps = match value {
                    "inf" | "none" | "global" => f64::INFINITY,
                    v => parse_num(&key, v)?,
                }
            }
            "final-time" | "t-final" => {
                self.final_time = match value {
                    "auto" => None,
                    v => Some(parse_num(&key, v)?),
                }
            }
            "limiter" => self.limiter = value.parse().map_err(Error::InvalidArgument)?,
            "threshold" => self.threshold = parse_num(&key, value)?,
            "fv-order" => {
                let k: u32 = parse_num(&key, value)?;
                self.fv_order = FvOrder::from_int(k)
                    .ok_or_else(|| Error::InvalidArgument(format!("fv-order must be 1 or 2, got {k}")))?;
            }
            "out" | "out-dir" => self.out_dir = Some(PathBuf::from(value)),
            "mesh" => {
                self.mesh = match value {
                    "generated" => MeshSource::Generated,
                    p => MeshSource::File(PathBuf::from(p)),
                }
            }
            "circles" => self.circles = Some(parse_circles(value)?),
            "history-times" => {
                self.history_times = value
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(|t| parse_num(&key, t))
                    .collect::<Result<_>>()?;
            }
            "write-fields" => self.write_fields = parse_bool(&key, value)?,
            "dump-operators" => self.dump_operators = parse_bool(&key, value)?,
            "joint-detection" => self.joint_detection = parse_bool(&key, value)?,
            "one-sided" => self.one_sided = parse_bool(&key, value)?,
            "bounds" => self.bounds = parse_bool(&key, value)?,
            _ => return Err(Error::InvalidArgument(format!("unknown option '{key}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_str(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                message: format!("line {}: expected key = value", n + 1),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                message: format!("line {}: {e}", n + 1),
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_str(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(1..=7).contains(&self.order) {
            return bad(format!("order must be in 1..=7, got {}", self.order));
        }
        if self.levels < 1 {
            return bad("levels must be at least 1".into());
        }
        if !(self.cfl > 0.0) || !self.cfl.is_finite() {
            return bad(format!("cfl must be positive, got {}", self.cfl));
        }
        if !(self.band_eps > 0.0) {
            return bad(format!("band must be positive, got {}", self.band_eps));
        }
        if let Some(t) = self.final_time {
            if !(t > 0.0) || !t.is_finite() {
                return bad(format!("final time must be positive, got {t}"));
            }
        }
        if !self.threshold.is_finite() {
            return bad(format!("threshold must be finite, got {}", self.threshold));
        }
        if self.history_times.iter().any(|t| !(*t > 0.0)) {
            return bad("history times must be positive".into());
        }
        self.test_case().map(|_| ())
    }

    pub fn test_case(&self) -> Result<TestCase> {
        match (&self.circles, self.case.as_str()) {
            (Some(c), "multi") => multi_circle(c),
            _ => TestCase::by_name(&self.case),
        }
    }

    pub fn effective_final_time(&self, case: &TestCase) -> f64 {
        self.final_time.unwrap_or_else(|| {
            let reach = if self.band_eps.is_finite() {
                self.band_eps
            } else {
                case.half_diagonal()
            };
            FINAL_TIME_FACTOR * reach
        })
    }

    /// `(key, value)` pairs echoed into every result row.
    pub fn echo(&self, case: &TestCase) -> Vec<(&'static str, String)> {
        let circles = self
            .circles
            .as_ref()
            .map(|c| {
                c.iter()
                    .map(|(p, r)| format!("{}:{}:{}", p[0], p[1], r))
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .unwrap_or_default();
        vec![
            ("cfl", self.cfl.to_string()),
            ("final_time", self.effective_final_time(case).to_string()),
            ("limiter", self.limiter.to_string()),
            ("threshold", self.threshold.to_string()),
            ("joint_detection", self.joint_detection.to_string()),
            ("one_sided", self.one_sided.to_string()),
            ("bounds", self.bounds.to_string()),
            ("fv_order", self.fv_order.as_int().to_string()),
            ("mesh", self.mesh.to_string()),
            ("start_level", self.start_level.to_string()),
            ("levels", self.levels.to_string()),
            ("circles", circles),
        ]
    }
}

/// Level-0 mesh and its characteristic size.
pub fn base_mesh(cfg: &RunConfig, case: &TestCase) -> Result<(Mesh, f64)> {
    match &cfg.mesh {
        MeshSource::Generated => Ok((
            generate_square_mesh(case.half_width, BASE_MESH_SIZE)?,
            BASE_MESH_SIZE,
        )),
        MeshSource::File(p) => {
            let m = Mesh::read(p)?;
            let h = (0..m.num_elements())
                .map(|e| {
                    let v = m.element_vertices(e);
                    (0..3)
                        .map(|i| {
                            let (a, b) = (v[i], v[(i + 1) % 3]);
                            (b[0] - a[0]).hypot(b[1] - a[1])
                        })
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            Ok((m, h))
        }
    }
}

/// Elements frozen by the band: see [`far_from_interface`]; nothing is frozen for an infinite band.
pub fn band_frozen(disc: &Discretization, phi0: &[f64], band_eps: f64) -> Vec<bool> {
    if !band_eps.is_finite() {
        return vec![false; disc.num_elements()];
    }
    far_from_interface(disc, phi0, band_eps)
}

/// Result of one run on one mesh level.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub level: usize,
    pub h: f64,
    pub k: usize,
    pub dt: f64,
    pub steps: usize,
    pub final_time: f64,
    pub report: ErrorReport,
    pub runtime_s: f64,
    pub troubled: Vec<bool>,
    pub troubled_per_step: Vec<usize>,
    pub frozen: usize,
    /// Nodes whose sign differs from the initial data.
    pub sign_violations: usize,
    pub max_abs_phi: f64,
    pub arrival: ArrivalResult,
    pub phi0: Vec<f64>,
    pub exact: Vec<f64>,
    /// `(time, norms)` at the requested history times.
    pub history: Vec<(f64, ErrorReport)>,
    pub disc: Discretization,
}

impl RunOutput {
    pub fn phi(&self) -> &[f64] {
        &self.arrival.phi
    }

    pub fn troubled_fraction(&self) -> f64 {
        self.troubled.iter().filter(|&&t| t).count() as f64 / self.k as f64
    }
}

/// Runs one level of `cfg` on `base` refined `level` times.
pub fn run_level(cfg: &RunConfig, case: &TestCase, base: &Mesh, h0: f64, level: usize) -> Result<RunOutput> {
    cfg.validate()?;
    let clock = Instant::now();
    let mesh = refine_times(base, level)?;
    let h = h0 / (1u64 << level) as f64;
    let disc = Discretization::new(mesh, cfg.order)?;
    let phi0 = disc.sample(|x, y| case.phi0(x, y));
    let exact = disc.sample(|x, y| case.exact(x, y));
    let final_time = cfg.effective_final_time(case);
    let frozen = band_frozen(&disc, &phi0, cfg.band_eps);
    let frozen_count = frozen.iter().filter(|&&f| f).count();
    let opts = AdvanceOptions {
        cfl: cfg.cfl,
        t_final: final_time,
        limiter: cfg.limiter,
        threshold: cfg.threshold,
        fv_order: cfg.fv_order,
        frozen: Some(frozen),
        joint_detection: cfg.joint_detection,
        one_sided: cfg.one_sided,
        bounds: cfg.bounds,
    };
    log::info!(
        "case {} N {} level {} K {} h {} band {} T {} frozen {}",
        case.name,
        cfg.order,
        level,
        disc.num_elements(),
        h,
        cfg.band_eps,
        final_time,
        frozen_count
    );

    let mut checkpoints: Vec<f64> = cfg.history_times.clone();
    checkpoints.sort_by(f64::total_cmp);
    let mut next = 0;
    let mut history = Vec::new();
    let mut state = FlowState::new(&disc, &phi0)?;
    let (hist, stats) = advance_with(&disc, &mut state, &opts, |st, hb| {
        let mut due = false;
        while next < checkpoints.len() && checkpoints[next] <= st.t + 0.5 * hb.dt() {
            next += 1;
            due = true;
        }
        if due {
            let r = hb.finish(st.t);
            let rep = error_report(&disc, &r.phi, &exact, cfg.band_eps, h, case.interface_length)?;
            history.push((st.t, rep));
        }
        Ok(())
    })?;
    let arrival = hist.finish(final_time);
    let runtime_s = clock.elapsed().as_secs_f64();

    let report = error_report(
        &disc,
        &arrival.phi,
        &exact,
        cfg.band_eps,
        h,
        case.interface_length,
    )?;
    let sign_violations = arrival
        .phi
        .iter()
        .zip(&phi0)
        .filter(|(p, p0)| **p0 != 0.0 && p.signum() != p0.signum())
        .count();
    let max_abs_phi = arrival.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    log::info!(
        "level {} l2 {:e} linf {:e} l1 {:e} steps {} troubled {} runtime {:.3}s",
        level,
        report.l2,
        report.linf,
        report.l1_interface,
        stats.steps,
        stats.final_troubled(),
        runtime_s
    );
    Ok(RunOutput {
        level,
        h,
        k: disc.num_elements(),
        dt: stats.dt,
        steps: stats.steps,
        final_time,
        report,
        runtime_s,
        troubled: state.troubled_any(),
        troubled_per_step: stats.troubled_per_step,
        frozen: frozen_count,
        sign_violations,
        max_abs_phi,
        arrival,
        phi0,
        exact,
        history,
        disc,
    })
}

/// Runs `cfg.start_level` alone and writes its outputs.
pub fn run_single(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let case = cfg.test_case()?;
    let (base, h0) = base_mesh(cfg, &case)?;
    let out = run_level(cfg, &case, &base, h0, cfg.start_level)?;
    write_outputs(cfg, &case, std::slice::from_ref(&out))?;
    Ok(out)
}

/// Per-level results with observed orders between consecutive levels.
#[derive(Clone, Debug)]
pub struct Convergence {
    pub runs: Vec<RunOutput>,
    pub order_l2: Vec<Option<f64>>,
    pub order_linf: Vec<Option<f64>>,
    /// From the absolute interface error.
    pub order_l1: Vec<Option<f64>>,
}

impl Convergence {
    pub fn from_runs(runs: Vec<RunOutput>) -> Result<Self> {
        let h: Vec<f64> = runs.iter().map(|r| r.h).collect();
        let col = |f: fn(&ErrorReport) -> f64| -> Result<Vec<Option<f64>>> {
            let e: Vec<f64> = runs.iter().map(|r| f(&r.report)).collect();
            observed_order(&e, &h)
        };
        Ok(Self {
            order_l2: col(|r| r.l2)?,
            order_linf: col(|r| r.linf)?,
            order_l1: col(|r| r.l1_abs)?,
            runs,
        })
    }

    /// Orders on the finest pair `(l2, linf, l1)`.
    pub fn finest_orders(&self) -> (Option<f64>, Option<f64>, Option<f64>) {
        (
            self.order_l2.last().copied().flatten(),
            self.order_linf.last().copied().flatten(),
            self.order_l1.last().copied().flatten(),
        )
    }
}

/// Runs `cfg.levels` consecutive levels from `cfg.start_level` and writes the table.
pub fn run_convergence(cfg: &RunConfig) -> Result<Convergence> {
    cfg.validate()?;
    if cfg.levels < 2 {
        return Err(Error::InvalidArgument(
            "a convergence sweep needs at least 2 levels".into(),
        ));
    }
    let case = cfg.test_case()?;
    let (base, h0) = base_mesh(cfg, &case)?;
    let runs = (cfg.start_level..cfg.start_level + cfg.levels)
        .map(|l| run_level(cfg, &case, &base, h0, l))
        .collect::<Result<Vec<_>>>()?;
    let conv = Convergence::from_runs(runs)?;
    write_outputs(cfg, &case, &conv.runs)?;
    Ok(conv)
}

/// Result table; identical configurations give identical tables.
pub fn results_table(cfg: &RunConfig, case: &TestCase, runs: &[RunOutput]) -> Result<CsvTable> {
    let echo = cfg.echo(case);
    let mut header = vec![
        "case",
        "N",
        "level",
        "h",
        "K",
        "band_eps",
        "l2",
        "linf",
        "l1",
        "l1_abs",
        "l2_sum",
        "order_l2",
        "order_linf",
        "order_l1",
        "dt",
        "steps",
        "troubled_final",
        "frozen",
        "sign_violations",
    ];
    header.extend(echo.iter().map(|(k, _)| *k));
    let mut t = CsvTable::new(&header);
    let h: Vec<f64> = runs.iter().map(|r| r.h).collect();
    let orders = |f: fn(&ErrorReport) -> f64| -> Vec<String> {
        let e: Vec<f64> = runs.iter().map(|r| f(&r.report)).collect();
        let mut o = vec![String::new()];
        if runs.len() >= 2 {
            if let Ok(v) = observed_order(&e, &h) {
                o.extend(
                    v.into_iter()
                        .map(|x| x.map(|x| x.to_string()).unwrap_or_else(|| "nan".into())),
                );
            }
        }
        o.resize(runs.len(), String::new());
        o
    };
    let (o2, oi, o1) = (orders(|r| r.l2), orders(|r| r.linf), orders(|r| r.l1_abs));
    for (i, r) in runs.iter().enumerate() {
        let mut row = vec![
            case.name.clone(),
            cfg.order.to_string(),
            r.level.to_string(),
            r.h.to_string(),
            r.k.to_string(),
            r.report.band_eps.to_string(),
            r.report.l2.to_string(),
            r.report.linf.to_string(),
            r.report.l1_interface.to_string(),
            r.report.l1_abs.to_string(),
            r.report.l2_sum.to_string(),
            o2[i].clone(),
            oi[i].clone(),
            o1[i].clone(),
            r.dt.to_string(),
            r.steps.to_string(),
            r.troubled.iter().filter(|&&t| t).count().to_string(),
            r.frozen.to_string(),
            r.sign_violations.to_string(),
        ];
        row.extend(echo.iter().map(|(_, v)| v.clone()));
        t.push(row)?;
    }
    Ok(t)
}

/// Wall-clock times, kept apart from the deterministic results table.
pub fn timing_table(case: &TestCase, cfg: &RunConfig, runs: &[RunOutput]) -> Result<CsvTable> {
    let mut t = CsvTable::new(&["case", "N", "level", "K", "runtime_s"]);
    for r in runs {
        t.push(vec![
            case.name.clone(),
            cfg.order.to_string(),
            r.level.to_string(),
            r.k.to_string(),
            format!("{:.6}", r.runtime_s),
        ])?;
    }
    Ok(t)
}

fn write_outputs(cfg: &RunConfig, case: &TestCase, runs: &[RunOutput]) -> Result<()> {
    let Some(dir) = &cfg.out_dir else {
        return Ok(());
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = format!("{}_N{}", case.name, cfg.order);
    results_table(cfg, case, runs)?.write(&dir.join(format!("{stem}_results.csv")))?;
    timing_table(case, cfg, runs)?.write(&dir.join(format!("{stem}_timing.csv")))?;
    for r in runs {
        if cfg.write_fields {
            let f = FieldSet {
                phi: r.phi(),
                phi0: &r.phi0,
                exact: &r.exact,
                troubled: &r.troubled,
            };
            write_vtk(&dir.join(format!("{stem}_level{}.vtk", r.level)), &r.disc, &f)?;
            write_nodal_csv(
                &dir.join(format!("{stem}_level{}_nodes.csv", r.level)),
                &r.disc,
                &f,
            )?;
        }
        if !r.history.is_empty() {
            let mut t = CsvTable::new(&["t", "l2", "linf", "l1", "l1_abs"]);
            for (time, rep) in &r.history {
                t.push(vec![
                    time.to_string(),
                    rep.l2.to_string(),
                    rep.linf.to_string(),
                    rep.l1_interface.to_string(),
                    rep.l1_abs.to_string(),
                ])?;
            }
            t.write(&dir.join(format!("{stem}_level{}_history.csv", r.level)))?;
        }
    }
    if cfg.dump_operators {
        if let Some(r) = runs.first() {
            dump_operators(&dir.join("operators"), &r.disc)?;
        }
    }
    Ok(())
}

/// Caps the global worker pool at `REDIST_THREADS` when set.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(v) = std::env::var("REDIST_THREADS") else {
        return Ok(None);
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Error::InvalidArgument(format!("REDIST_THREADS must be a positive integer, got '{v}'"))
    })?;
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
        log::warn!("worker pool already initialised: {e}");
    }
    Ok(Some(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing_and_precedence() {
        let mut c = RunConfig::default();
        c.apply_str(
            "# sweep\ncase = square\norder=4\nband = 0.3 # narrow\nlimiter = on\nfv_order = 1\nfinal-time = auto\n",
            Path::new("x.cfg"),
        )
        .unwrap();
        assert_eq!(c.case, "square");
        assert_eq!(c.order, 4);
        assert_eq!(c.band_eps, 0.3);
        assert_eq!(c.limiter, LimiterMode::AlwaysOn);
        assert_eq!(c.fv_order, FvOrder::First);
        assert_eq!(c.final_time, None);
        c.set("order", "5").unwrap();
        assert_eq!(c.order, 5);
        assert!(matches!(
            c.apply_str("order 3", Path::new("x.cfg")),
            Err(Error::Parse { .. })
        ));
        assert!(c.set("colour", "red").is_err());
        c.set("band", "inf").unwrap();
        assert!(c.band_eps.is_infinite());
    }

    #[test]
    fn validation() {
        let ok = RunConfig::default();
        assert!(ok.validate().is_ok());
        for (k, v) in [
            ("order", "0"),
            ("order", "8"),
            ("levels", "0"),
            ("cfl", "0"),
            ("final-time", "0"),
            ("band", "-1"),
            ("case", "blob"),
        ] {
            let mut c = RunConfig::default();
            c.set(k, v).unwrap();
            assert!(c.validate().unwrap_err().is_input_error(), "{k}={v}");
        }
    }

    #[test]
    fn final_time_defaults() {
        let mut c = RunConfig::default();
        let case = c.test_case().unwrap();
        assert!((c.effective_final_time(&case) - 1.25 * 2.0 * 2f64.sqrt()).abs() < 1e-15);
        c.band_eps = 0.3;
        assert!((c.effective_final_time(&case) - 0.375).abs() < 1e-15);
        c.final_time = Some(0.7);
        assert_eq!(c.effective_final_time(&case), 0.7);
    }

    #[test]
    fn freezing_keeps_band_elements_active() {
        let mesh = generate_square_mesh(2.0, 0.4).unwrap();
        let d = Discretization::new(mesh, 2).unwrap();
        let case = crate::cases::circle();
        let phi0 = d.sample(|x, y| case.phi0(x, y));
        let exact = d.sample(|x, y| case.exact(x, y));
        let frozen = band_frozen(&d, &phi0, 0.3);
        assert!(frozen.iter().any(|&f| f));
        for e in 0..d.num_elements() {
            let near = (0..d.np()).any(|i| exact[e * d.np() + i].abs() <= 0.3);
            assert!(!(near && frozen[e]), "element {e}");
        }
        assert!(band_frozen(&d, &phi0, f64::INFINITY).iter().all(|&f| !f));
    }

    #[test]
    fn single_run_writes_deterministic_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig {
            order: 2,
            band_eps: 0.3,
            out_dir: Some(dir.path().to_path_buf()),
            history_times: vec![0.1, 0.2],
            ..Default::default()
        };
        let a = run_single(&c).unwrap();
        assert!(a.report.l2.is_finite() && a.report.linf < 0.1);
        assert_eq!(a.sign_violations, 0);
        assert_eq!(a.history.len(), 2);
        let first = fs::read_to_string(dir.path().join("circle_N2_results.csv")).unwrap();
        run_single(&c).unwrap();
        let second = fs::read_to_string(dir.path().join("circle_N2_results.csv")).unwrap();
        assert_eq!(first, second);
        assert!(first.lines().next().unwrap().contains("final_time"));
        for f in [
            "circle_N2_level0.vtk",
            "circle_N2_level0_nodes.csv",
            "circle_N2_timing.csv",
            "circle_N2_level0_history.csv",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
    }

    #[test]
    fn sweep_needs_two_levels() {
        let c = RunConfig::default();
        assert!(run_convergence(&c).is_err());
    }
}
