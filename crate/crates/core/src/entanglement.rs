//! Pairwise logarithmic negativity of the Gaussian fluctuation state.

use std::fmt;
use std::io::{self, Write};

use nalgebra::{Matrix2, Matrix4, Matrix6, Schur};

use crate::covariance::{fluctuation_energies, phonon_number, CovarianceState, FluctuationEnergies};
use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Slack for round-off in the discriminant and the local determinants.
pub const CLAMP_WINDOW: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Mirror,
    Cavity,
    Qd,
}

impl Mode {
    /// Zero-based index of the mode's first quadrature.
    pub fn offset(self) -> usize {
        match self {
            Mode::Mirror => 0,
            Mode::Cavity => 2,
            Mode::Qd => 4,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Mirror => "mirror",
            Mode::Cavity => "cavity",
            Mode::Qd => "qd",
        })
    }
}

/// Covariance of two modes: local blocks `x`, `y` and the cross block `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeCovariance {
    pub x: Matrix2<f64>,
    pub y: Matrix2<f64>,
    pub z: Matrix2<f64>,
}

impl TwoModeCovariance {
    pub fn assembled(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.x);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&self.z);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&self.z.transpose());
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.y);
        m
    }

    pub fn from_assembled(m: &Matrix4<f64>) -> Self {
        Self {
            x: m.fixed_view::<2, 2>(0, 0).into_owned(),
            y: m.fixed_view::<2, 2>(2, 2).into_owned(),
            z: m.fixed_view::<2, 2>(0, 2).into_owned(),
        }
    }

    /// `det X + det Y - 2 det Z`.
    pub fn seralian(&self) -> f64 {
        self.x.determinant() + self.y.determinant() - 2.0 * self.z.determinant()
    }
}

/// Picks out the blocks of modes `a` and `b` from the full correlation matrix.
pub fn extract_two_mode(state: &CovarianceState, a: Mode, b: Mode) -> Result<TwoModeCovariance> {
    if a == b {
        return Err(Error::IdenticalModes(a));
    }
    let (ia, ib) = (a.offset(), b.offset());
    let v = &state.v;
    Ok(TwoModeCovariance {
        x: v.fixed_view::<2, 2>(ia, ia).into_owned(),
        y: v.fixed_view::<2, 2>(ib, ib).into_owned(),
        z: v.fixed_view::<2, 2>(ia, ib).into_owned(),
    })
}

/// Smallest symplectic eigenvalue of the partial transpose.
pub fn smallest_pt_eigenvalue(tm: &TwoModeCovariance) -> Result<f64> {
    let det_x = tm.x.determinant();
    let det_y = tm.y.determinant();
    if det_x < -CLAMP_WINDOW || det_y < -CLAMP_WINDOW {
        return Err(Error::UnphysicalBlock { discriminant: det_x.min(det_y), time: None });
    }
    let sigma = tm.seralian();
    let det_v = tm.assembled().lu().determinant();
    let disc = sigma * sigma - 4.0 * det_v;
    if disc < -CLAMP_WINDOW {
        return Err(Error::UnphysicalBlock { discriminant: disc, time: None });
    }
    let root = disc.max(0.0).sqrt();
    let denom = sigma + root;
    let nu2 = if denom > 0.0 { 2.0 * det_v / denom } else { 0.0 };
    if nu2 < 0.0 {
        return Err(Error::UnphysicalBlock { discriminant: disc, time: None });
    }
    Ok(nu2.sqrt())
}

/// `max(0, -ln(2 nu))` with `nu` the smallest partially transposed
/// symplectic eigenvalue.
pub fn log_negativity(tm: &TwoModeCovariance) -> Result<f64> {
    let nu = smallest_pt_eigenvalue(tm)?;
    Ok((-(2.0 * nu).ln()).max(0.0))
}

/// Both symplectic eigenvalues of the partial transpose, ascending, from a
/// direct eigen-decomposition of `Omega * V_pt`.
pub fn symplectic_oracle(tm: &TwoModeCovariance) -> Result<[f64; 2]> {
    let flip = Matrix4::from_diagonal(&[1.0, 1.0, 1.0, -1.0].into());
    let transposed = flip * tm.assembled() * flip;
    #[rustfmt::skip]
    let omega = Matrix4::new(
        0.0, 1.0, 0.0, 0.0,
        -1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, -1.0, 0.0,
    );
    let schur = Schur::try_new(omega * transposed, f64::EPSILON, 10_000).ok_or(Error::NonConvergentEigensolve)?;
    let mut mags: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    mags.sort_by(f64::total_cmp);
    Ok([0.5 * (mags[0] + mags[1]), 0.5 * (mags[2] + mags[3])])
}

/// Phase-space orientation used for the exciton quadratures.
///
/// With positive inversion the pair `(dv, dw)` has commutator `-i N`, so it is
/// a left-handed frame. `Canonical` reflects `dw` in that case before any
/// negativity involving the QD is computed; `Raw` leaves it untouched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum QdFrame {
    #[default]
    Canonical,
    Raw,
}

impl QdFrame {
    pub fn name(self) -> &'static str {
        match self {
            QdFrame::Canonical => "canonical",
            QdFrame::Raw => "raw",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "canonical" => Some(QdFrame::Canonical),
            "raw" => Some(QdFrame::Raw),
            _ => None,
        }
    }

    /// The correlation matrix expressed in this frame.
    pub fn apply(self, v: &Matrix6<f64>, params: &SystemParams) -> Matrix6<f64> {
        if self == QdFrame::Raw || params.inversion <= 0.0 {
            return *v;
        }
        let mut out = *v;
        for k in 0..6 {
            out[(5, k)] = -out[(5, k)];
            out[(k, 5)] = -out[(k, 5)];
        }
        out
    }
}

/// Entanglement and energy content of one correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementReport {
    pub t: f64,
    pub mirror_qd: f64,
    pub cavity_qd: f64,
    pub cavity_mirror: f64,
    pub energies: FluctuationEnergies,
    pub phonons: f64,
}

pub fn entanglement_report(state: &CovarianceState, params: &SystemParams, frame: QdFrame) -> Result<EntanglementReport> {
    let framed = CovarianceState { t: state.t, v: frame.apply(&state.v, params) };
    let pair = |a, b| {
        extract_two_mode(&framed, a, b)
            .and_then(|tm| log_negativity(&tm))
            .map_err(|e| match e {
                Error::UnphysicalBlock { discriminant, .. } => Error::UnphysicalBlock { discriminant, time: Some(state.t) },
                other => other,
            })
    };
    Ok(EntanglementReport {
        t: state.t,
        mirror_qd: pair(Mode::Mirror, Mode::Qd)?,
        cavity_qd: pair(Mode::Cavity, Mode::Qd)?,
        cavity_mirror: pair(Mode::Cavity, Mode::Mirror)?,
        energies: fluctuation_energies(state),
        phonons: phonon_number(state),
    })
}

/// Reports for every state of a covariance sequence.
pub fn entanglement_timeseries(
    states: &[CovarianceState],
    params: &SystemParams,
    frame: QdFrame,
) -> Result<Vec<EntanglementReport>> {
    states.iter().map(|s| entanglement_report(s, params, frame)).collect()
}

/// Writes `t,E_md,E_cd,E_cm,mirror_energy,cavity_energy,exciton_energy,phonons`.
pub fn write_entanglement_csv<W: Write>(reports: &[EntanglementReport], mut w: W) -> io::Result<()> {
    writeln!(w, "t,E_md,E_cd,E_cm,mirror_energy,cavity_energy,exciton_energy,phonons")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.t, r.mirror_qd, r.cavity_qd, r.cavity_mirror, r.energies.mirror, r.energies.cavity, r.energies.exciton, r.phonons
        )?;
    }
    Ok(())
}
