//! Linearised quadrature fluctuations around the mean fields.
//!
//! Quadrature order is `(dq, dp, dx, dy, dv, dw)` with `dx = sqrt(2) Re(da)`,
//! `dy = sqrt(2) Im(da)` and likewise `(dv, dw)` for the exciton coherence.
//! The symmetrised correlation matrix obeys `dV/dt = D V + V D^T + N`.

use std::io::{self, Write};

use nalgebra::{Matrix6, SMatrix};

use crate::error::{Error, Result};
use crate::meanfield::{rk4_stages, steps_for, MeanFieldTrajectory};
use crate::model::{MeanFieldState, SystemParams};

/// Entries beyond this magnitude abort the covariance integration.
pub const COVARIANCE_BOUND: f64 = 1e9;

pub const QUADRATURES: [&str; 6] = ["dq", "dp", "dx", "dy", "dv", "dw"];

/// Correlation matrix at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceState {
    pub t: f64,
    pub v: Matrix6<f64>,
}

impl CovarianceState {
    /// Mirror thermal at `n_b`, cavity and exciton in vacuum.
    pub fn thermal(params: &SystemParams) -> Self {
        let m = params.n_b + 0.5;
        Self { t: 0.0, v: Matrix6::from_diagonal(&[m, m, 0.5, 0.5, 0.5, 0.5].into()) }
    }

    pub fn asymmetry(&self) -> f64 {
        (self.v - self.v.transpose()).amax()
    }
}

/// Drift matrix of the linearised fluctuations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix {
    pub t: f64,
    pub d: Matrix6<f64>,
}

/// Drift matrix around the mean fields `mean` at time `t`.
pub fn drift_matrix(mean: &MeanFieldState, t: f64, params: &SystemParams) -> DriftMatrix {
    let s2g = std::f64::consts::SQRT_2 * params.g_om;
    let (re_a, im_a) = (mean.a.re, mean.a.im);
    let f1 = params.delta_c - params.g_om * mean.q;
    let mn = params.qd_detuning(t) * params.inversion;
    let gn = params.g0 * params.inversion;
    let (wm, ka, kd, g0) = (params.omega_m, params.kappa_a, params.kappa_d, params.g0);
    #[rustfmt::skip]
    let d = Matrix6::new(
        0.0,          wm,              0.0,         0.0,         0.0,  0.0,
        -wm,          -params.gamma_m, s2g * re_a,  s2g * im_a,  0.0,  0.0,
        -s2g * im_a,  0.0,             -ka,         f1,          0.0,  g0,
        s2g * re_a,   0.0,             -f1,         -ka,         -g0,  0.0,
        0.0,          0.0,             0.0,         -gn,         -kd,  -mn,
        0.0,          0.0,             gn,          0.0,         mn,   -kd,
    );
    DriftMatrix { t, d }
}

/// `diag(0, gamma_m (2 n_b + 1), kappa_a, kappa_a, kappa_d, kappa_d)`.
pub fn diffusion_matrix(params: &SystemParams) -> Matrix6<f64> {
    Matrix6::from_diagonal(
        &[
            0.0,
            params.gamma_m * (2.0 * params.n_b + 1.0),
            params.kappa_a,
            params.kappa_a,
            params.kappa_d,
            params.kappa_d,
        ]
        .into(),
    )
}

/// `D V + V D^T + N` for any square dimension.
pub fn lyapunov_rhs<const K: usize>(
    d: &SMatrix<f64, K, K>,
    v: &SMatrix<f64, K, K>,
    noise: &SMatrix<f64, K, K>,
) -> SMatrix<f64, K, K> {
    let dv = d * v;
    dv + dv.transpose() + noise
}

/// One RK4 step of the Lyapunov equation given the drift at the four stage
/// points (`t`, two at `t + dt/2`, `t + dt`). The result is symmetrised.
pub fn lyapunov_rk4_step<const K: usize>(
    v: &SMatrix<f64, K, K>,
    drifts: &[SMatrix<f64, K, K>; 4],
    noise: &SMatrix<f64, K, K>,
    dt: f64,
) -> SMatrix<f64, K, K> {
    let h2 = 0.5 * dt;
    let k1 = lyapunov_rhs(&drifts[0], v, noise);
    let k2 = lyapunov_rhs(&drifts[1], &(v + k1 * h2), noise);
    let k3 = lyapunov_rhs(&drifts[2], &(v + k2 * h2), noise);
    let k4 = lyapunov_rhs(&drifts[3], &(v + k3 * dt), noise);
    let next = v + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    (next + next.transpose()) * 0.5
}

/// Integrates the Lyapunov equation for a drift given as a function of time.
/// Returns the state after each of the `steps` steps.
pub fn integrate_lyapunov<const K: usize>(
    v0: SMatrix<f64, K, K>,
    drift: impl Fn(f64) -> SMatrix<f64, K, K>,
    noise: &SMatrix<f64, K, K>,
    dt: f64,
    steps: usize,
) -> Vec<SMatrix<f64, K, K>> {
    let mut out = Vec::with_capacity(steps);
    let mut v = v0;
    for k in 0..steps {
        let t = k as f64 * dt;
        let mid = drift(t + 0.5 * dt);
        let drifts = [drift(t), mid, mid, drift(t + dt)];
        v = lyapunov_rk4_step(&v, &drifts, noise, dt);
        out.push(v);
    }
    out
}

/// Correlation matrices recorded every `stride` steps of width `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTrajectory {
    pub dt: f64,
    pub stride: usize,
    pub states: Vec<CovarianceState>,
}

impl CovarianceTrajectory {
    /// Writes `t` followed by the 21 upper-triangle entries, row-major.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "t")?;
        for i in 0..6 {
            for j in i..6 {
                write!(w, ",v{}{}", i + 1, j + 1)?;
            }
        }
        writeln!(w)?;
        for s in &self.states {
            write!(w, "{}", s.t)?;
            for i in 0..6 {
                for j in i..6 {
                    write!(w, ",{}", s.v[(i, j)])?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Writes `t,mirror,cavity,exciton,phonon_number`.
    pub fn write_energies_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,mirror,cavity,exciton,phonon_number")?;
        for s in &self.states {
            let e = fluctuation_energies(s);
            writeln!(w, "{},{},{},{},{}", s.t, e.mirror, e.cavity, e.exciton, phonon_number(s))?;
        }
        Ok(())
    }
}

/// Co-integrates the correlation matrix with a stored mean-field trajectory.
#[derive(Debug, Clone, Copy)]
pub struct CovarianceIntegrator {
    pub params: SystemParams,
    pub stride: usize,
    pub bound: f64,
}

impl CovarianceIntegrator {
    pub fn new(params: SystemParams) -> Self {
        Self { params, stride: 1, bound: COVARIANCE_BOUND }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    /// Evolves `v0` from its own time to `t_end` on the trajectory's grid.
    ///
    /// The drift at the intermediate RK4 stages is built from the mean-field
    /// stage states re-derived from each stored sample, so the result is
    /// exactly that of integrating the mean fields and `V` jointly.
    pub fn run(&self, v0: CovarianceState, traj: &MeanFieldTrajectory, t_end: f64) -> Result<CovarianceTrajectory> {
        let dt = traj.dt;
        let start = v0.t / dt;
        let k0 = start.round();
        if (start - k0).abs() > 1e-9 * k0.max(1.0) {
            return Err(Error::GridMismatch(format!("initial time {} is not on the grid of step {dt}", v0.t)));
        }
        let k0 = k0 as usize;
        let k_end = steps_for(t_end, dt);
        if k_end >= traj.len() || k0 > k_end {
            return Err(Error::GridMismatch(format!(
                "covariance span [{}, {t_end}] not covered by mean-field samples up to {}",
                v0.t,
                traj.t_end()
            )));
        }
        let noise = diffusion_matrix(&self.params);
        let mut v = v0.v;
        let mut states = Vec::with_capacity((k_end - k0) / self.stride + 1);
        states.push(CovarianceState { t: traj.times[k0], v });
        for k in k0..k_end {
            let t = traj.times[k];
            let (stages, _) = rk4_stages(&self.params, &traj.states[k].to_vector(), t, dt);
            let offsets = [0.0, 0.5 * dt, 0.5 * dt, dt];
            let drifts: [Matrix6<f64>; 4] = std::array::from_fn(|s| {
                drift_matrix(&MeanFieldState::from_vector(&stages[s]), t + offsets[s], &self.params).d
            });
            v = lyapunov_rk4_step(&v, &drifts, &noise, dt);
            let t_next = traj.times[k + 1];
            let worst = v.amax();
            if !worst.is_finite() || worst > self.bound {
                return Err(Error::Instability { time: t_next, component: "V", magnitude: worst, bound: self.bound });
            }
            if (k + 1 - k0) % self.stride == 0 {
                states.push(CovarianceState { t: t_next, v });
            }
        }
        Ok(CovarianceTrajectory { dt, stride: self.stride, states })
    }
}

/// Integrates the correlation matrix from `v0` to `t_end`, recording every step.
pub fn integrate_covariance(
    params: &SystemParams,
    v0: CovarianceState,
    traj: &MeanFieldTrajectory,
    t_end: f64,
) -> Result<CovarianceTrajectory> {
    CovarianceIntegrator::new(*params).run(v0, traj, t_end)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationEnergies {
    pub mirror: f64,
    pub cavity: f64,
    pub exciton: f64,
}

impl FluctuationEnergies {
    /// Cavity and exciton with the vacuum contribution `1/2` removed.
    pub fn vacuum_subtracted(self) -> Self {
        Self { mirror: self.mirror, cavity: self.cavity - 0.5, exciton: self.exciton - 0.5 }
    }
}

/// Mirror `V11`, cavity `(V33 + V44) / 2`, exciton `(V55 + V66) / 2`.
pub fn fluctuation_energies(state: &CovarianceState) -> FluctuationEnergies {
    let v = &state.v;
    FluctuationEnergies {
        mirror: v[(0, 0)],
        cavity: 0.5 * (v[(2, 2)] + v[(3, 3)]),
        exciton: 0.5 * (v[(4, 4)] + v[(5, 5)]),
    }
}

/// Mean phonon number `(V11 + V22) / 2 - 1/2`.
pub fn phonon_number(state: &CovarianceState) -> f64 {
    0.5 * (state.v[(0, 0)] + state.v[(1, 1)]) - 0.5
}
