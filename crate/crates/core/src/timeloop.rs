//! Low-storage RK4 integration of the dual flows with per-step troubled-element detection.

use rayon::prelude::*;

use crate::arrival::HistoryBuffer;
use crate::detector::{detect, LimiterMode};
use crate::error::{Error, Result};
use crate::operator::{evaluate_rhs, Discretization, ElementFlags, FvOrder, RhsWorkspace};

/// Five-stage fourth-order low-storage Runge-Kutta coefficients (Carpenter & Kennedy).
pub const RK4A: [f64; 5] = [
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
];
pub const RK4B: [f64; 5] = [
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
];
pub const RK4C: [f64; 5] = [
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363183890.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
];

/// `cfl * min_e r_in(e) / (N+1)^2` with unit characteristic speed.
pub fn compute_dt(disc: &Discretization, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0) {
        return Err(Error::InvalidArgument(format!("cfl must be positive, got {cfl}")));
    }
    let (e, r_in) = disc
        .geom
        .inradius
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::InvalidArgument("empty mesh".into()))?;
    if !(r_in > 0.0) {
        return Err(Error::DegenerateElement(e));
    }
    let n1 = (disc.re.order + 1) as f64;
    Ok(cfl * r_in / (n1 * n1))
}

/// One LSERK4 step of `dq/dt = f(stage, t, q)`; `res` carries the low-storage register.
pub fn lserk4_step<F>(
    q: &mut [f64],
    res: &mut [f64],
    rhs: &mut [f64],
    t: f64,
    dt: f64,
    mut f: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &[f64], &mut [f64]) -> Result<()>,
{
    for stage in 0..5 {
        f(stage, t + RK4C[stage] * dt, q, rhs)?;
        let (a, b) = (RK4A[stage], RK4B[stage]);
        q.par_iter_mut()
            .zip(res.par_iter_mut())
            .zip(rhs.par_iter())
            .for_each(|((q, r), &k)| {
                *r = a * *r + dt * k;
                *q += b * *r;
            });
    }
    Ok(())
}

/// Dual-flow state: `[u | v]` nodal (`K x Np` each) followed by `[u | v]` subcell means
/// (`K x Ns` each). Each flow has its own troubled mask; troubled elements evolve their means
/// and their nodal slots hold `R * means`.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub data: Vec<f64>,
    /// Troubled masks of `u` and `v`.
    pub troubled: [Vec<bool>; 2],
    pub t: f64,
    pub step: usize,
    knp: usize,
    kns: usize,
}

impl FlowState {
    /// `u = phi0`, `v = -phi0`, all elements DG.
    pub fn new(disc: &Discretization, phi0: &[f64]) -> Result<Self> {
        let knp = disc.num_elements() * disc.np();
        let kns = disc.num_elements() * disc.ns();
        if phi0.len() != knp {
            return Err(Error::LengthMismatch {
                expected: knp,
                got: phi0.len(),
            });
        }
        let mut data = Vec::with_capacity(2 * knp + 2 * kns);
        data.extend_from_slice(phi0);
        data.extend(phi0.iter().map(|x| -x));
        let um = disc.project_all(phi0);
        data.extend_from_slice(&um);
        data.extend(um.iter().map(|x| -x));
        Ok(Self {
            data,
            troubled: [vec![false; disc.num_elements()], vec![false; disc.num_elements()]],
            t: 0.0,
            step: 0,
            knp,
            kns,
        })
    }

    pub fn u(&self) -> &[f64] {
        &self.data[..self.knp]
    }

    pub fn v(&self) -> &[f64] {
        &self.data[self.knp..2 * self.knp]
    }

    pub fn u_means(&self) -> &[f64] {
        &self.data[2 * self.knp..2 * self.knp + self.kns]
    }

    pub fn v_means(&self) -> &[f64] {
        &self.data[2 * self.knp + self.kns..]
    }

    /// Mutable `(u, v, u_means, v_means)`.
    pub fn split_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64], &mut [f64]) {
        let (nodal, means) = self.data.split_at_mut(2 * self.knp);
        let (u, v) = nodal.split_at_mut(self.knp);
        let (um, vm) = means.split_at_mut(self.kns);
        (u, v, um, vm)
    }

    /// Elements troubled in either flow.
    pub fn troubled_any(&self) -> Vec<bool> {
        self.troubled[0]
            .iter()
            .zip(&self.troubled[1])
            .map(|(a, b)| *a || *b)
            .collect()
    }

    pub fn troubled_count(&self) -> usize {
        self.troubled[0]
            .iter()
            .zip(&self.troubled[1])
            .filter(|(a, b)| **a || **b)
            .count()
    }
}

#[derive(Clone, Debug)]
pub struct AdvanceOptions {
    pub cfl: f64,
    pub t_final: f64,
    pub limiter: LimiterMode,
    pub threshold: f64,
    pub fv_order: FvOrder,
    /// Elements held fixed for the whole run.
    pub frozen: Option<Vec<bool>>,
    /// One mask for both flows (troubled if either flow triggers) instead of one per flow.
    pub joint_detection: bool,
    /// Hold `u` fixed far inside `phi0 < 0` and `v` far inside `phi0 > 0`, where neither flow
    /// determines an arrival time.
    pub one_sided: bool,
    /// Keep each flow non-increasing in time and above its initial minimum.
    pub bounds: bool,
}

impl Default for AdvanceOptions {
    fn default() -> Self {
        Self {
            cfl: 1.0,
            t_final: 1.0,
            limiter: LimiterMode::Auto,
            threshold: 2.5,
            fv_order: FvOrder::Second,
            frozen: None,
            joint_detection: false,
            one_sided: true,
            bounds: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdvanceStats {
    pub dt: f64,
    pub steps: usize,
    /// Troubled-element count used in each step.
    pub troubled_per_step: Vec<usize>,
}

impl AdvanceStats {
    pub fn final_troubled(&self) -> usize {
        self.troubled_per_step.last().copied().unwrap_or(0)
    }
}

/// Elements whose vertices are all farther than `margin + h_e + h_cut` from every vertex of an
/// element cut by the zero level set of `phi0` (`h_cut` is the largest cut-element size). Nothing
/// is marked when no element is cut.
pub fn far_from_interface(disc: &Discretization, phi0: &[f64], margin: f64) -> Vec<bool> {
    let k = disc.num_elements();
    let np = disc.np();
    let cut: Vec<usize> = (0..k)
        .filter(|&e| {
            let u = &phi0[e * np..(e + 1) * np];
            let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            lo <= 0.0 && hi >= 0.0
        })
        .collect();
    if cut.is_empty() {
        log::warn!("no element is cut by the interface; nothing is frozen");
        return vec![false; k];
    }
    let h_cut = cut.iter().map(|&e| disc.geom.h_max[e]).fold(0.0, f64::max);
    let mut verts: Vec<usize> = cut.iter().flat_map(|&e| disc.mesh.elements[e]).collect();
    verts.sort_unstable();
    verts.dedup();
    let pts: Vec<[f64; 2]> = verts.iter().map(|&v| disc.mesh.vertices[v]).collect();
    (0..k)
        .into_par_iter()
        .map(|e| {
            let limit = margin + disc.geom.h_max[e] + h_cut;
            disc.mesh
                .element_vertices(e)
                .iter()
                .all(|a| pts.iter().all(|b| (a[0] - b[0]).hypot(a[1] - b[1]) > limit))
        })
        .collect()
}

/// Per-flow frozen masks: `base` plus, when `one_sided`, the elements far from the interface on
/// the side the flow never has to reach (`u` where `phi0 < 0`, `v` where `phi0 > 0`).
fn flow_frozen(disc: &Discretization, phi0: &[f64], base: &[bool], one_sided: bool) -> [Vec<bool>; 2] {
    if !one_sided {
        return [base.to_vec(), base.to_vec()];
    }
    let np = disc.np();
    let far = far_from_interface(disc, phi0, 0.0);
    let side = |want_positive: bool| -> Vec<bool> {
        (0..disc.num_elements())
            .map(|e| {
                let u = &phi0[e * np..(e + 1) * np];
                let beyond = if want_positive {
                    u.iter().all(|&x| x > 0.0)
                } else {
                    u.iter().all(|&x| x < 0.0)
                };
                base[e] || (far[e] && beyond)
            })
            .collect()
    };
    [side(false), side(true)]
}

/// Switches representations to match the per-flow masks: newly troubled elements get
/// `means = P u`; cleared elements keep their nodal slots, which already hold `R * means`.
pub fn apply_troubled(disc: &Discretization, state: &mut FlowState, troubled: [&[bool]; 2]) {
    let (np, ns) = (disc.np(), disc.ns());
    let previous = std::mem::replace(&mut state.troubled, troubled.map(|t| t.to_vec()));
    let (u, v, um, vm) = state.split_mut();
    for ((nodal, means), (now, before)) in [(&*u, um), (&*v, vm)]
        .into_iter()
        .zip(troubled.iter().zip(&previous))
    {
        means
            .par_chunks_mut(ns)
            .enumerate()
            .filter(|(e, _)| now[*e] && !before[*e])
            .for_each(|(e, m)| disc.sg.demote(&nodal[e * np..(e + 1) * np], m));
    }
}

/// Refreshes the nodal slots of troubled elements from their subcell means.
pub fn sync_nodal(disc: &Discretization, state: &mut FlowState) {
    let (np, ns) = (disc.np(), disc.ns());
    let troubled = state.troubled.clone();
    let (u, v, um, vm) = state.split_mut();
    for ((nodal, means), mask) in [(u, &*um), (v, &*vm)].into_iter().zip(&troubled) {
        nodal
            .par_chunks_mut(np)
            .enumerate()
            .filter(|(e, _)| mask[*e])
            .for_each(|(e, n)| disc.sg.promote(&means[e * ns..(e + 1) * ns], n));
    }
}

/// Integrates both flows to `t_final`, recording every step in the returned history.
///
/// The step is `T / ceil(T / dt_cfl)` so the run ends exactly at `t_final`.
pub fn advance(
    disc: &Discretization,
    state: &mut FlowState,
    opts: &AdvanceOptions,
) -> Result<(HistoryBuffer, AdvanceStats)> {
    advance_with(disc, state, opts, |_, _| Ok(()))
}

/// [`advance`] calling `observer` after every recorded step.
pub fn advance_with<F>(
    disc: &Discretization,
    state: &mut FlowState,
    opts: &AdvanceOptions,
    mut observer: F,
) -> Result<(HistoryBuffer, AdvanceStats)>
where
    F: FnMut(&FlowState, &HistoryBuffer) -> Result<()>,
{
    if !(opts.t_final > 0.0) || !opts.t_final.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "final time must be positive, got {}",
            opts.t_final
        )));
    }
    let k = disc.num_elements();
    let dt_cfl = compute_dt(disc, opts.cfl)?;
    let steps = (opts.t_final / dt_cfl - 1e-9).ceil().max(1.0) as usize;
    let dt = opts.t_final / steps as f64;
    let frozen = opts.frozen.clone().unwrap_or_else(|| vec![false; k]);
    if frozen.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            got: frozen.len(),
        });
    }

    let frozen = flow_frozen(disc, state.u(), &frozen, opts.one_sided);
    log::debug!(
        "frozen elements: u {} v {}",
        frozen[0].iter().filter(|&&f| f).count(),
        frozen[1].iter().filter(|&&f| f).count()
    );
    let floor = [state.u(), state.v()].map(|f| f.iter().copied().fold(f64::INFINITY, f64::min));
    let mut prev = if opts.bounds {
        state.data.clone()
    } else {
        Vec::new()
    };
    let mut history = HistoryBuffer::new(state.u(), dt);
    history.record(0, state.u(), state.v())?;
    let mut ws_u = RhsWorkspace::new(disc);
    let mut ws_v = RhsWorkspace::new(disc);
    let mut res = vec![0.0; state.data.len()];
    let mut rhs = vec![0.0; state.data.len()];
    let mut troubled_per_step = Vec::with_capacity(steps);
    let (knp, kns) = (state.knp, state.kns);

    for step in 0..steps {
        let fields = [state.u(), state.v()];
        let mut masks: [Vec<bool>; 2] = std::array::from_fn(|f| {
            detect(
                &[fields[f]],
                &disc.re,
                opts.limiter,
                opts.threshold,
                Some(&frozen[f]),
            )
            .troubled
        });
        if opts.joint_detection {
            let either: Vec<bool> = masks[0].iter().zip(&masks[1]).map(|(a, b)| *a || *b).collect();
            masks = std::array::from_fn(|f| either.iter().zip(&frozen[f]).map(|(t, z)| *t && !*z).collect());
        }
        apply_troubled(disc, state, [&masks[0], &masks[1]]);
        let count = state.troubled_count();
        troubled_per_step.push(count);

        let flags_u = ElementFlags {
            troubled: &masks[0],
            frozen: &frozen[0],
        };
        let flags_v = ElementFlags {
            troubled: &masks[1],
            frozen: &frozen[1],
        };
        let t0 = state.t;
        if opts.bounds {
            prev.copy_from_slice(&state.data);
        }
        lserk4_step(&mut state.data, &mut res, &mut rhs, t0, dt, |stage, t, q, out| {
            let (nodal, means) = q.split_at(2 * knp);
            let (on, om) = out.split_at_mut(2 * knp);
            let (onu, onv) = on.split_at_mut(knp);
            let (omu, omv) = om.split_at_mut(kns);
            evaluate_rhs(
                disc,
                opts.fv_order,
                &nodal[..knp],
                &means[..kns],
                flags_u,
                &mut ws_u,
                onu,
                omu,
            );
            evaluate_rhs(
                disc,
                opts.fv_order,
                &nodal[knp..],
                &means[kns..],
                flags_v,
                &mut ws_v,
                onv,
                omv,
            );
            check_finite(disc, out, knp, kns, stage, t)
        })?;
        state.t = (step + 1) as f64 * dt;
        state.step = step + 1;
        if opts.bounds {
            enforce_bounds(state, &prev, floor);
        }
        sync_nodal(disc, state);
        history.record(step + 1, state.u(), state.v())?;
        observer(state, &history)?;
        log::debug!(
            "step {} t {:.6} dt {:.3e} troubled {}",
            step + 1,
            state.t,
            dt,
            count
        );
    }
    Ok((
        history,
        AdvanceStats {
            dt,
            steps,
            troubled_per_step,
        },
    ))
}

/// Both flows are non-increasing in time and bounded below by their initial minimum; clamps
/// every nodal value and subcell mean of the step just taken back into that range.
fn enforce_bounds(state: &mut FlowState, prev: &[f64], floor: [f64; 2]) {
    let (knp, kns) = (state.knp, state.kns);
    // Ranges of u nodal, v nodal, u means, v means and the flow each belongs to.
    let blocks = [
        (0, knp, 0),
        (knp, 2 * knp, 1),
        (2 * knp, 2 * knp + kns, 0),
        (2 * knp + kns, 2 * (knp + kns), 1),
    ];
    for (start, end, f) in blocks {
        let lo = floor[f];
        state.data[start..end]
            .par_iter_mut()
            .zip(&prev[start..end])
            .for_each(|(q, &p)| *q = q.min(p).max(lo));
    }
}

fn check_finite(
    disc: &Discretization,
    out: &[f64],
    knp: usize,
    kns: usize,
    stage: usize,
    time: f64,
) -> Result<()> {
    let bad = out.par_iter().position_any(|v| !v.is_finite());
    match bad {
        None => Ok(()),
        Some(i) => {
            let element = if i < 2 * knp {
                (i % knp) / disc.np()
            } else {
                ((i - 2 * knp) % kns) / disc.ns()
            };
            Err(Error::NonFinite { element, stage, time })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_square_mesh, refine_uniform, Mesh};

    #[test]
    fn lserk4_is_fourth_order() {
        let solve = |n: usize| {
            let dt = 1.0 / n as f64;
            let mut q = vec![1.0];
            let mut res = vec![0.0];
            let mut rhs = vec![0.0];
            for s in 0..n {
                lserk4_step(&mut q, &mut res, &mut rhs, s as f64 * dt, dt, |_, _, y, out| {
                    out[0] = -y[0];
                    Ok(())
                })
                .unwrap();
            }
            (q[0] - (-1.0f64).exp()).abs()
        };
        let errs: Vec<f64> = [5, 10, 20, 40].iter().map(|&n| solve(n)).collect();
        let order = (errs[2] / errs[3]).log2();
        assert!(order >= 3.9, "order {order}, errors {errs:?}");
    }

    #[test]
    fn lserk4_constant_rhs_is_exact() {
        let mut q = vec![0.3, 2.0];
        let mut res = vec![0.0; 2];
        let mut rhs = vec![0.0; 2];
        let dt = 0.0137;
        for s in 0..10 {
            let before = q.clone();
            lserk4_step(&mut q, &mut res, &mut rhs, s as f64 * dt, dt, |_, _, _, out| {
                out[0] = -1.0;
                out[1] = 0.0;
                Ok(())
            })
            .unwrap();
            assert!((before[0] - q[0] - dt).abs() < 1e-12);
            assert_eq!(before[1], q[1]);
        }
    }

    #[test]
    fn dt_scaling() {
        let a = 1.0;
        let h = 3f64.sqrt() / 2.0;
        let tri = Mesh::new(vec![[0.0, 0.0], [a, 0.0], [0.5, h]], vec![[0, 1, 2]]).unwrap();
        let d = Discretization::new(tri, 1).unwrap();
        let dt = compute_dt(&d, 0.8).unwrap();
        assert!((dt - 0.8 * (a / (2.0 * 3f64.sqrt())) / 4.0).abs() < 1e-15);
        assert!((compute_dt(&d, 0.4).unwrap() - dt / 2.0).abs() < 1e-16);
        assert!(compute_dt(&d, 0.0).is_err());

        let coarse = generate_square_mesh(2.0, 0.4).unwrap();
        let fine = refine_uniform(&coarse).unwrap();
        let dc = compute_dt(&Discretization::new(coarse, 3).unwrap(), 1.0).unwrap();
        let df = compute_dt(&Discretization::new(fine, 3).unwrap(), 1.0).unwrap();
        assert!((dc / df - 2.0).abs() < 1e-12);
    }

    #[test]
    fn translating_plane_decreases_and_arrives() {
        let mesh = generate_square_mesh(1.0, 0.5).unwrap();
        let d = Discretization::new(mesh, 3).unwrap();
        let phi0 = d.sample(|x, _| x);
        let mut st = FlowState::new(&d, &phi0).unwrap();
        // A plane entering through the boundary leaves the initial range, so no bounds here.
        let opts = AdvanceOptions {
            t_final: 0.6,
            limiter: LimiterMode::Off,
            bounds: false,
            ..Default::default()
        };
        let (hist, stats) = advance(&d, &mut st, &opts).unwrap();
        assert_eq!(stats.final_troubled(), 0);
        for (k, (&u, &x)) in st.u().iter().zip(&d.x).enumerate() {
            assert!((u - (x - 0.6)).abs() < 1e-10, "node {k}");
        }
        let r = hist.finish(0.6);
        for k in 0..d.x.len() {
            let x = d.x[k];
            if x.abs() <= 0.55 {
                assert!((r.phi[k] - x).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_final_time_rejected() {
        let d = Discretization::new(generate_square_mesh(1.0, 1.0).unwrap(), 2).unwrap();
        let phi0 = d.sample(|x, _| x);
        let mut st = FlowState::new(&d, &phi0).unwrap();
        let opts = AdvanceOptions {
            t_final: 0.0,
            ..Default::default()
        };
        assert!(advance(&d, &mut st, &opts).is_err());
    }

    #[test]
    fn switching_conserves_means_and_frozen_is_untouched() {
        let mesh = generate_square_mesh(1.0, 0.5).unwrap();
        let d = Discretization::new(mesh, 3).unwrap();
        let phi0 = d.sample(|x, y| (x * x + y * y).sqrt() - 0.5);
        let mut st = FlowState::new(&d, &phi0).unwrap();
        let troubled: Vec<bool> = (0..d.num_elements()).map(|e| e % 2 == 0).collect();
        apply_troubled(&d, &mut st, [&troubled, &troubled]);
        sync_nodal(&d, &mut st);
        let mass_row: Vec<f64> = (0..d.np())
            .map(|j| (0..d.np()).map(|i| d.re.mass[(i, j)]).sum())
            .collect();
        for e in 0..d.num_elements() {
            let mean = |f: &[f64]| {
                mass_row
                    .iter()
                    .zip(&f[e * d.np()..(e + 1) * d.np()])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            };
            assert!((mean(st.u()) - mean(&phi0)).abs() < 1e-12);
        }

        let frozen: Vec<bool> = (0..d.num_elements()).map(|e| e % 3 == 0).collect();
        let mut st = FlowState::new(&d, &phi0).unwrap();
        let opts = AdvanceOptions {
            t_final: 0.1,
            limiter: LimiterMode::AlwaysOn,
            frozen: Some(frozen.clone()),
            ..Default::default()
        };
        let (_, stats) = advance(&d, &mut st, &opts).unwrap();
        assert!(stats.steps > 0);
        for e in (0..d.num_elements()).filter(|e| frozen[*e]) {
            for k in e * d.np()..(e + 1) * d.np() {
                assert_eq!(st.u()[k], phi0[k]);
            }
        }
    }

    #[test]
    fn far_from_interface_keeps_a_layer_around_cut_elements() {
        let d = Discretization::new(generate_square_mesh(2.0, 0.4).unwrap(), 2).unwrap();
        let phi0 = d.sample(|x, y| x.hypot(y) - 1.0);
        let far = far_from_interface(&d, &phi0, 0.0);
        let np = d.np();
        let h = d.geom.h_max.iter().copied().fold(0.0, f64::max);
        for e in 0..d.num_elements() {
            let r = |k: usize| d.x[e * np + k].hypot(d.y[e * np + k]);
            let closest = (0..np).map(|k| (r(k) - 1.0).abs()).fold(f64::INFINITY, f64::min);
            if far[e] {
                assert!(closest > h, "element {e} frozen at distance {closest}");
            }
            if closest > 4.0 * h {
                assert!(far[e], "element {e} active at distance {closest}");
            }
        }
        let positive = d.sample(|x, _| x + 5.0);
        assert!(far_from_interface(&d, &positive, 0.0).iter().all(|&f| !f));
    }

    #[test]
    fn one_sided_masks_follow_the_sign_of_phi0() {
        let d = Discretization::new(generate_square_mesh(2.0, 0.2).unwrap(), 2).unwrap();
        let phi0 = d.sample(|x, y| x.hypot(y) - 1.0);
        let base: Vec<bool> = (0..d.num_elements()).map(|e| e == 0).collect();
        let [fu, fv] = flow_frozen(&d, &phi0, &base, true);
        let np = d.np();
        assert!(fu[0] && fv[0]);
        let side = |e: usize| phi0[e * np..(e + 1) * np].iter().all(|&x| x < 0.0);
        for e in 1..d.num_elements() {
            assert!(!(fu[e] && fv[e]));
            if fu[e] {
                assert!(side(e));
            }
            if fv[e] {
                assert!(!side(e));
            }
        }
        assert!(fu.iter().filter(|&&f| f).count() > 1);
        assert!(fv.iter().filter(|&&f| f).count() > 1);
        assert_eq!(flow_frozen(&d, &phi0, &base, false), [base.clone(), base]);
    }

    #[test]
    fn bounds_keep_flows_monotone_and_above_initial_minimum() {
        let d = Discretization::new(generate_square_mesh(1.0, 0.25).unwrap(), 4).unwrap();
        let phi0 = d.sample(|x, y| (y - 0.1).abs() - 0.3 + 0.2 * x);
        let floor = [
            phi0.iter().copied().fold(f64::INFINITY, f64::min),
            phi0.iter().map(|x| -x).fold(f64::INFINITY, f64::min),
        ];
        let mut st = FlowState::new(&d, &phi0).unwrap();
        let opts = AdvanceOptions {
            t_final: 0.5,
            limiter: LimiterMode::Off,
            one_sided: false,
            ..Default::default()
        };
        let mut last = st.data.clone();
        advance_with(&d, &mut st, &opts, |s, _| {
            for (f, (now, before)) in [(s.u(), &last[..s.knp]), (s.v(), &last[s.knp..2 * s.knp])]
                .into_iter()
                .enumerate()
            {
                for (a, b) in now.iter().zip(before) {
                    assert!(*a <= *b + 1e-12 && *a >= floor[f] - 1e-12);
                }
            }
            last.copy_from_slice(&s.data);
            Ok(())
        })
        .unwrap();
    }
}
