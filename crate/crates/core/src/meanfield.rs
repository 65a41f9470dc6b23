//! Classical equations for the mean amplitudes and their fixed-step
//! integration.

use std::io::{self, Write};

use nalgebra::Vector6;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{MeanFieldState, SystemParams};

/// Default bound on any state component before a run is declared unstable.
pub const DEFAULT_INSTABILITY_BOUND: f64 = 1e6;

/// Coarsest step accepted, as a fraction of the modulation period.
pub const MIN_STEPS_PER_PERIOD: f64 = 1000.0;

/// Time derivative of the mean fields, with the inversion held at `N`.
pub fn meanfield_rhs(state: &MeanFieldState, t: f64, params: &SystemParams) -> MeanFieldState {
    let i = Complex64::i();
    let MeanFieldState { q, p, a, sigma } = *state;
    let wm = params.omega_m;
    let n = params.inversion;

    let q_dot = wm * p;
    let p_dot = -wm * q + params.g_om * a.norm_sqr() - params.gamma_m * p;
    let a_dot = (-i * params.delta_c - params.kappa_a) * a
        + i * params.g_om * a * q
        + params.drive_amplitude(t)
        - i * params.g0 * sigma;
    let sigma_dot = -(params.kappa_d - i * params.qd_detuning(t) * n) * sigma + i * params.g0 * a * n;

    MeanFieldState::new(q_dot, p_dot, a_dot, sigma_dot)
}

fn rhs_vec(y: &Vector6<f64>, t: f64, params: &SystemParams) -> Vector6<f64> {
    meanfield_rhs(&MeanFieldState::from_vector(y), t, params).to_vector()
}

/// The four RK4 stage states `y, y + dt/2 k1, y + dt/2 k2, y + dt k3` and the
/// advanced state. The covariance integrator re-derives these to evaluate the
/// drift matrix at the same stage points as a joint integration would.
pub(crate) fn rk4_stages(
    params: &SystemParams,
    y: &Vector6<f64>,
    t: f64,
    dt: f64,
) -> ([Vector6<f64>; 4], Vector6<f64>) {
    let h2 = 0.5 * dt;
    let k1 = rhs_vec(y, t, params);
    let y2 = y + k1 * h2;
    let k2 = rhs_vec(&y2, t + h2, params);
    let y3 = y + k2 * h2;
    let k3 = rhs_vec(&y3, t + h2, params);
    let y4 = y + k3 * dt;
    let k4 = rhs_vec(&y4, t + dt, params);
    let next = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    ([*y, y2, y3, y4], next)
}

/// Uniformly sampled mean-field trajectory with `times[k] = k * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldTrajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
}

impl MeanFieldTrajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &MeanFieldState {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// Mean of `f` over the samples in the final `span` time units.
    pub fn mean_over_last(&self, span: f64, f: impl Fn(&MeanFieldState) -> f64) -> f64 {
        let n = ((span / self.dt).round() as usize).min(self.len() - 1);
        let tail = &self.states[self.len() - 1 - n..];
        tail.iter().map(f).sum::<f64>() / tail.len() as f64
    }

    /// Writes `t,q,p,re_a,im_a,re_sigma,im_sigma`, every `stride`-th sample.
    pub fn write_csv<W: Write>(&self, mut w: W, stride: usize) -> io::Result<()> {
        writeln!(w, "t,q,p,re_a,im_a,re_sigma,im_sigma")?;
        for (t, s) in self.times.iter().zip(&self.states).step_by(stride.max(1)) {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                t, s.q, s.p, s.a.re, s.a.im, s.sigma.re, s.sigma.im
            )?;
        }
        Ok(())
    }
}

/// Fixed-step classical RK4 integrator for the mean fields.
#[derive(Debug, Clone, Copy)]
pub struct MeanFieldIntegrator {
    pub params: SystemParams,
    pub dt: f64,
    pub bound: f64,
}

impl MeanFieldIntegrator {
    pub fn new(params: SystemParams, dt: f64) -> Result<Self> {
        let params = params.validate()?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidStep(format!("dt must be positive, got {dt}")));
        }
        if params.drive_freq > 0.0 {
            let max_dt = params.period() / MIN_STEPS_PER_PERIOD;
            if dt > max_dt * (1.0 + 1e-12) {
                return Err(Error::InvalidStep(format!(
                    "dt = {dt} exceeds period/{MIN_STEPS_PER_PERIOD} = {max_dt}"
                )));
            }
        }
        Ok(Self { params, dt, bound: DEFAULT_INSTABILITY_BOUND })
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }

    /// Integrates from `initial` at `t = 0` until `t_end`.
    pub fn run(&self, initial: MeanFieldState, t_end: f64) -> Result<MeanFieldTrajectory> {
        if !(t_end >= self.dt) {
            return Err(Error::InvalidStep(format!("t_end = {t_end} is shorter than dt = {}", self.dt)));
        }
        let mut traj = MeanFieldTrajectory {
            dt: self.dt,
            times: vec![0.0],
            states: vec![initial],
        };
        self.extend(&mut traj, t_end)?;
        Ok(traj)
    }

    /// Continues `traj` up to `t_end`. Sample times are `k * dt` with the
    /// global index `k`, so a continued run is bitwise identical to a direct
    /// one.
    pub fn extend(&self, traj: &mut MeanFieldTrajectory, t_end: f64) -> Result<()> {
        if traj.dt != self.dt {
            return Err(Error::GridMismatch(format!("trajectory dt {} vs integrator dt {}", traj.dt, self.dt)));
        }
        let target = steps_for(t_end, self.dt);
        let mut k = traj.len() - 1;
        let mut y = traj.last().to_vector();
        traj.times.reserve(target.saturating_sub(k));
        traj.states.reserve(target.saturating_sub(k));
        while k < target {
            let t = k as f64 * self.dt;
            let (_, next) = rk4_stages(&self.params, &y, t, self.dt);
            y = next;
            k += 1;
            let t_next = k as f64 * self.dt;
            self.check(&y, t_next)?;
            traj.times.push(t_next);
            traj.states.push(MeanFieldState::from_vector(&y));
        }
        Ok(())
    }

    fn check(&self, y: &Vector6<f64>, t: f64) -> Result<()> {
        for (i, x) in y.iter().enumerate() {
            if !x.is_finite() || x.abs() > self.bound {
                return Err(Error::Instability {
                    time: t,
                    component: MeanFieldState::COMPONENTS[i],
                    magnitude: x.abs(),
                    bound: self.bound,
                });
            }
        }
        Ok(())
    }
}

/// Number of steps needed to reach `t_end`, tolerant to rounding in `t_end / dt`.
pub(crate) fn steps_for(t_end: f64, dt: f64) -> usize {
    let r = t_end / dt;
    let n = r.round();
    if (r - n).abs() <= 1e-9 * n.max(1.0) {
        n as usize
    } else {
        r.ceil() as usize
    }
}

/// Integrates the mean fields over `[0, t_end]` with the default instability bound.
pub fn integrate_meanfield(
    params: &SystemParams,
    initial: MeanFieldState,
    t_end: f64,
    dt: f64,
) -> Result<MeanFieldTrajectory> {
    MeanFieldIntegrator::new(*params, dt)?.run(initial, t_end)
}

/// Number of samples per period, or an error if `tau / dt` is not an integer
/// to within `1e-9` (relative).
pub fn samples_per_period(tau: f64, dt: f64) -> Result<usize> {
    let ratio = tau / dt;
    let n = ratio.round();
    if !(n >= 1.0) || (ratio - n).abs() > 1e-9 * n {
        return Err(Error::IncommensurateStep { ratio });
    }
    Ok(n as usize)
}

fn component_distance(a: &MeanFieldState, b: &MeanFieldState) -> f64 {
    (a.to_vector() - b.to_vector()).amax()
}

/// Earliest sampled time after which every state stays within `tol` (largest
/// component difference) of the state one period later.
///
/// Returns `Ok(None)` when the tail of the trajectory is not periodic, or when
/// the periodic tail is shorter than one period.
pub fn detect_limit_cycle(traj: &MeanFieldTrajectory, tau: f64, tol: f64) -> Result<Option<f64>> {
    let k = samples_per_period(tau, traj.dt)?;
    let span = traj.t_end();
    if traj.len() < 2 * k + 1 {
        return Err(Error::TrajectoryTooShort { span, required: 2.0 * tau });
    }
    let comparisons = traj.len() - k;
    let mut first_ok = comparisons;
    for i in (0..comparisons).rev() {
        if component_distance(&traj.states[i], &traj.states[i + k]) < tol {
            first_ok = i;
        } else {
            break;
        }
    }
    if comparisons - first_ok < k {
        return Ok(None);
    }
    Ok(Some(traj.times[first_ok]))
}

/// Steady mirror displacement from the few-mode elimination of the time
/// dependence,
/// `q_s = chi |sigma|^2 (delta_0^2 N^2 / 4 + kappa_d^2) / (g0^2 N^2) + chi eps^2 / (2 Omega^2)`
/// with `chi = G / omega_m`.
///
/// `sigma_mag2` is the long-time average of `|<sigma>|^2`, supplied by the caller.
pub fn steady_displacement_qs(params: &SystemParams, sigma_mag2: f64) -> Result<f64> {
    let n = params.inversion;
    if params.g0 == 0.0 {
        return Err(Error::DivisionByZero("g0 = 0"));
    }
    if n == 0.0 {
        return Err(Error::DivisionByZero("N = 0"));
    }
    if params.drive_freq == 0.0 {
        return Err(Error::DivisionByZero("Omega = 0"));
    }
    let chi = params.g_om / params.omega_m;
    let c = params.eps * params.eps / (2.0 * params.drive_freq * params.drive_freq);
    let bracket = params.delta_0 * params.delta_0 * n * n / 4.0 + params.kappa_d * params.kappa_d;
    Ok(chi * sigma_mag2 * bracket / (params.g0 * params.g0 * n * n) + chi * c)
}
