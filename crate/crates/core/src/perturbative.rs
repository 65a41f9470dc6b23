//! Double expansion of the asymptotic mean fields in harmonics of the
//! modulation frequency and in powers of the radiation-pressure coupling,
//!
//! `<O(t)> = sum_j sum_n O[n, j] exp(i n Omega t) G^j`, for `O` in `q, p, a, sigma`.
//!
//! The coefficients never depend on `G`; only the reconstruction weights do.
//! Three recursions are available, see [`RecursionVariant`].

use std::collections::BTreeMap;
use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{MeanFieldState, SystemParams};

/// Denominators below this magnitude are treated as resonant.
pub const RESONANCE_EPS: f64 = 1e-12;

/// Imaginary residue tolerated in the reconstructed mirror coordinates.
pub const REALITY_TOL: f64 = 1e-8;

/// Fourier coefficients of a real periodic signal with fundamental `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    pub omega: f64,
    pub coeffs: BTreeMap<i32, Complex64>,
}

impl FourierSeries {
    pub fn get(&self, n: i32) -> Complex64 {
        self.coeffs.get(&n).copied().unwrap_or_default()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&n, c)| c * Complex64::from_polar(1.0, n as f64 * self.omega * t))
            .sum::<Complex64>()
            .re
    }
}

/// `E0` at `n = 0` and `eps / 2` at `n = +-1`.
pub fn fourier_drive_coeffs(params: &SystemParams) -> FourierSeries {
    let mut coeffs = BTreeMap::new();
    coeffs.insert(0, Complex64::from(params.e0));
    if params.eps != 0.0 {
        coeffs.insert(-1, Complex64::from(0.5 * params.eps));
        coeffs.insert(1, Complex64::from(0.5 * params.eps));
    }
    FourierSeries { omega: params.drive_freq, coeffs }
}

/// `delta_0 / 2` at `n = 0` and `-delta_0 / 4` at `n = +-1`, the harmonics of
/// `delta_0 (1 - cos(omega_e t)) / 2` on the drive fundamental (which requires
/// `omega_e = Omega` whenever the dot is modulated).
pub fn fourier_detuning_coeffs(params: &SystemParams) -> FourierSeries {
    let mut coeffs = BTreeMap::new();
    if params.delta_0 != 0.0 {
        coeffs.insert(0, Complex64::from(0.5 * params.delta_0));
        coeffs.insert(-1, Complex64::from(-0.25 * params.delta_0));
        coeffs.insert(1, Complex64::from(-0.25 * params.delta_0));
    }
    FourierSeries { omega: params.drive_freq, coeffs }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    Q,
    P,
    A,
    Sigma,
}

impl Variable {
    pub const ALL: [Variable; 4] = [Variable::Q, Variable::P, Variable::A, Variable::Sigma];

    pub fn name(self) -> &'static str {
        match self {
            Variable::Q => "q",
            Variable::P => "p",
            Variable::A => "a",
            Variable::Sigma => "sigma",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// How the dot detuning enters the cavity/dot coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecursionVariant {
    /// Term-by-term recursions: no detuning at zeroth order; at higher orders
    /// a static `delta_0` in the denominator, the extra cavity factor and
    /// `kappa_a` in the numerator.
    Literal,
    /// Static detuning equal to the mean `delta_0 / 2` at every order, with the
    /// cavity/dot elimination carried out consistently.
    DcDetuning,
    /// Every detuning harmonic couples neighbouring dot harmonics; each order
    /// solves one linear system over all harmonics `|n| <= n_max`. Closest to
    /// the integrated limit cycle, hence the default.
    #[default]
    FullDetuning,
}

impl RecursionVariant {
    pub const ALL: [RecursionVariant; 3] =
        [RecursionVariant::Literal, RecursionVariant::DcDetuning, RecursionVariant::FullDetuning];

    pub fn name(self) -> &'static str {
        match self {
            RecursionVariant::Literal => "literal",
            RecursionVariant::DcDetuning => "dc-detuning",
            RecursionVariant::FullDetuning => "full-detuning",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }
}

/// Coefficient table `O[n, j]`, `|n| <= n_max`, `j <= filled_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierExpansion {
    pub n_max: i32,
    pub omega: f64,
    pub variant: RecursionVariant,
    // [variable][j][n + n_max]
    coeffs: [Vec<Vec<Complex64>>; 4],
}

impl FourierExpansion {
    fn empty(n_max: i32, omega: f64, variant: RecursionVariant) -> Self {
        Self { n_max, omega, variant, coeffs: Default::default() }
    }

    fn width(&self) -> usize {
        (2 * self.n_max + 1) as usize
    }

    fn harmonics(&self) -> impl Iterator<Item = i32> + Clone {
        -self.n_max..=self.n_max
    }

    /// Highest coupling order filled so far.
    pub fn j_max(&self) -> usize {
        self.coeffs[0].len().saturating_sub(1)
    }

    /// `O[n, j]`, zero outside the stored range.
    pub fn get(&self, var: Variable, n: i32, j: usize) -> Complex64 {
        if n.abs() > self.n_max {
            return Complex64::default();
        }
        self.coeffs[var.index()]
            .get(j)
            .map(|row| row[(n + self.n_max) as usize])
            .unwrap_or_default()
    }

    fn push_order(&mut self, q: Vec<Complex64>, p: Vec<Complex64>, a: Vec<Complex64>, s: Vec<Complex64>) {
        for (slot, row) in self.coeffs.iter_mut().zip([q, p, a, s]) {
            slot.push(row);
        }
    }

    /// Truncated double sum at time `t` using orders `j <= j_max`.
    pub fn reconstruct_to_order(&self, g: f64, t: f64, j_max: usize) -> Result<MeanFieldState> {
        let mut sums = [Complex64::default(); 4];
        let phases: Vec<Complex64> = self
            .harmonics()
            .map(|n| Complex64::from_polar(1.0, n as f64 * self.omega * t))
            .collect();
        let mut weight = 1.0;
        for j in 0..=j_max.min(self.j_max()) {
            for (var, sum) in Variable::ALL.iter().zip(sums.iter_mut()) {
                let row = &self.coeffs[var.index()][j];
                let term: Complex64 = row.iter().zip(&phases).map(|(c, e)| c * e).sum();
                *sum += term * weight;
            }
            weight *= g;
        }
        let residue = sums[0].im.abs().max(sums[1].im.abs());
        if residue > REALITY_TOL {
            return Err(Error::NonRealReconstruction { residue });
        }
        Ok(MeanFieldState::new(sums[0].re, sums[1].re, sums[2], sums[3]))
    }

    /// Full reconstruction at coupling `g`.
    pub fn reconstruct(&self, g: f64, t: f64) -> Result<MeanFieldState> {
        self.reconstruct_to_order(g, t, self.j_max())
    }

    /// Writes `variable,n,j,re,im` for every stored coefficient.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "variable,n,j,re,im")?;
        for var in Variable::ALL {
            for j in 0..=self.j_max() {
                for n in self.harmonics() {
                    let c = self.get(var, n, j);
                    writeln!(w, "{},{},{},{},{}", var.name(), n, j, c.re, c.im)?;
                }
            }
        }
        Ok(())
    }
}

/// Free-function form of [`FourierExpansion::reconstruct`].
pub fn reconstruct(expansion: &FourierExpansion, g: f64, t: f64) -> Result<MeanFieldState> {
    expansion.reconstruct(g, t)
}

fn check_den(den: Complex64, n: i32) -> Result<Complex64> {
    if den.norm() < RESONANCE_EPS {
        Err(Error::ResonantDenominator { n, magnitude: den.norm() })
    } else {
        Ok(den)
    }
}

/// Cavity/dot solver for one order: given the cavity source `S[n]`, returns
/// `(a[n], sigma[n])` for every harmonic.
enum CavityDotSolver {
    Literal,
    Dc { detuning: f64 },
    Full { lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>, width: usize },
}

impl CavityDotSolver {
    fn new(params: &SystemParams, n_max: i32, variant: RecursionVariant) -> Result<Self> {
        let detuning = fourier_detuning_coeffs(params);
        if params.delta_0 != 0.0 && variant != RecursionVariant::Literal {
            let mismatch = (params.omega_e - params.drive_freq).abs();
            if mismatch > 1e-12 * params.drive_freq.abs().max(1.0) {
                return Err(Error::InvalidStep(format!(
                    "harmonic expansion needs omega_e = Omega (got {} vs {})",
                    params.omega_e, params.drive_freq
                )));
            }
        }
        match variant {
            RecursionVariant::Literal => Ok(Self::Literal),
            RecursionVariant::DcDetuning => Ok(Self::Dc { detuning: detuning.get(0).re }),
            RecursionVariant::FullDetuning => {
                let i = Complex64::i();
                let w = (2 * n_max + 1) as usize;
                let omega = params.drive_freq;
                let n_inv = params.inversion;
                let mut m = DMatrix::<Complex64>::zeros(2 * w, 2 * w);
                for (row, n) in (-n_max..=n_max).enumerate() {
                    let nw = n as f64 * omega;
                    m[(row, row)] = params.kappa_a + i * (params.delta_c + nw);
                    m[(row, w + row)] = i * params.g0;
                    m[(w + row, w + row)] = i * nw + params.kappa_d;
                    m[(w + row, row)] = -i * params.g0 * n_inv;
                    for (&h, &dh) in &detuning.coeffs {
                        let col = n - h;
                        if col.abs() <= n_max {
                            m[(w + row, w + (col + n_max) as usize)] -= i * n_inv * dh;
                        }
                    }
                }
                let lu = m.lu();
                let u = lu.u();
                for k in 0..2 * w {
                    let pivot = u[(k, k)].norm();
                    if pivot < RESONANCE_EPS {
                        return Err(Error::ResonantDenominator {
                            n: (k % w) as i32 - n_max,
                            magnitude: pivot,
                        });
                    }
                }
                Ok(Self::Full { lu, width: w })
            }
        }
    }

    fn solve(
        &self,
        params: &SystemParams,
        n_max: i32,
        order: usize,
        source: &[Complex64],
    ) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let i = Complex64::i();
        let omega = params.drive_freq;
        let (g0, n_inv) = (params.g0, params.inversion);
        let cavity = |n: i32| params.kappa_a + i * (params.delta_c + n as f64 * omega);
        match self {
            Self::Literal => {
                let mut a = Vec::with_capacity(source.len());
                let mut s = Vec::with_capacity(source.len());
                for n in -n_max..=n_max {
                    let nw = n as f64 * omega;
                    if order == 0 {
                        // The table is built from E[-n]; `source` holds E[n].
                        let e = source[(-n + n_max) as usize];
                        let qd = i * nw + params.kappa_d;
                        let den = check_den(cavity(n) * qd - g0 * g0 * n_inv, n)?;
                        a.push(e * qd / den);
                        s.push(e * i * g0 * n_inv / den);
                    } else {
                        let src = source[(n + n_max) as usize];
                        let c = cavity(n);
                        let den = check_den(c * (i * (nw - params.delta_0) + params.kappa_d) - g0 * g0 * n_inv, n)?;
                        a.push(i * src * c * (i * (nw - params.delta_0) + params.kappa_a) / den);
                        s.push(-g0 * n_inv * src * c / den);
                    }
                }
                Ok((a, s))
            }
            Self::Dc { detuning } => {
                let mut a = Vec::with_capacity(source.len());
                let mut s = Vec::with_capacity(source.len());
                for n in -n_max..=n_max {
                    let src = source[(n + n_max) as usize];
                    let qd = i * (n as f64 * omega - n_inv * detuning) + params.kappa_d;
                    let den = check_den(cavity(n) * qd - g0 * g0 * n_inv, n)?;
                    // Cavity equation source S, dot slaved: sigma = i g0 N a / qd.
                    let an = src * qd / den;
                    a.push(an);
                    s.push(i * g0 * n_inv * an / qd);
                }
                Ok((a, s))
            }
            Self::Full { lu, width } => {
                let mut rhs = nalgebra::DVector::<Complex64>::zeros(2 * width);
                for (k, src) in source.iter().enumerate() {
                    rhs[k] = *src;
                }
                let x = lu.solve(&rhs).ok_or(Error::ResonantDenominator { n: 0, magnitude: 0.0 })?;
                Ok((x.rows(0, *width).iter().copied().collect(), x.rows(*width, *width).iter().copied().collect()))
            }
        }
    }
}

/// Zeroth-order (`G^0`) coefficients: the mirror is at rest and the cavity and
/// dot respond linearly to the drive harmonics.
pub fn zeroth_order_coeffs(
    params: &SystemParams,
    n_max: i32,
    variant: RecursionVariant,
) -> Result<FourierExpansion> {
    let solver = CavityDotSolver::new(params, n_max, variant)?;
    let mut exp = FourierExpansion::empty(n_max, params.drive_freq, variant);
    let drive = fourier_drive_coeffs(params);
    let source: Vec<Complex64> = exp.harmonics().map(|n| drive.get(n)).collect();
    let (a, s) = solver.solve(params, n_max, 0, &source)?;
    let zeros = vec![Complex64::default(); exp.width()];
    exp.push_order(zeros.clone(), zeros, a, s);
    Ok(exp)
}

/// Fills orders `1..=j_max` from the already present lower orders.
pub fn higher_order_coeffs(
    mut expansion: FourierExpansion,
    params: &SystemParams,
    j_max: usize,
) -> Result<FourierExpansion> {
    let n_max = expansion.n_max;
    let solver = CavityDotSolver::new(params, n_max, expansion.variant)?;
    let i = Complex64::i();
    let wm = params.omega_m;
    let omega = params.drive_freq;
    for j in expansion.j_max() + 1..=j_max {
        let mut q = Vec::with_capacity(expansion.width());
        let mut p = Vec::with_capacity(expansion.width());
        for n in -n_max..=n_max {
            // Harmonic n of |a|^2 at order j - 1.
            let mut acc = Complex64::default();
            for k in 0..j {
                for m in -n_max..=n_max {
                    acc += expansion.get(Variable::A, m, k).conj() * expansion.get(Variable::A, n + m, j - 1 - k);
                }
            }
            let nw = n as f64 * omega;
            let den = check_den(Complex64::new(wm * wm - nw * nw, params.gamma_m * nw), n)?;
            let qn = wm * acc / den;
            q.push(qn);
            p.push(i * nw * qn / wm);
        }
        // Harmonic n of a * q at order j - 1; q at this order is not needed.
        let mut source = Vec::with_capacity(expansion.width());
        for n in -n_max..=n_max {
            let mut acc = Complex64::default();
            for k in 0..j {
                for m in -n_max..=n_max {
                    acc += expansion.get(Variable::A, m, k) * expansion.get(Variable::Q, n - m, j - 1 - k);
                }
            }
            source.push(acc);
        }
        if expansion.variant != RecursionVariant::Literal {
            for s in &mut source {
                *s *= i;
            }
        }
        let (a, s) = solver.solve(params, n_max, j, &source)?;
        expansion.push_order(q, p, a, s);
    }
    Ok(expansion)
}

/// Zeroth order followed by orders up to `j_max`.
pub fn expand(params: &SystemParams, n_max: i32, j_max: usize, variant: RecursionVariant) -> Result<FourierExpansion> {
    higher_order_coeffs(zeroth_order_coeffs(params, n_max, variant)?, params, j_max)
}

/// Truncation used unless configured otherwise.
pub const DEFAULT_N_MAX: i32 = 3;
pub const DEFAULT_J_MAX: usize = 4;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::fig2;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn drive_coeffs() {
        let e = fourier_drive_coeffs(&fig2());
        assert_eq!(e.get(0), c(1.0, 0.0));
        assert_eq!(e.get(1), c(0.3, 0.0));
        assert_eq!(e.get(-1), c(0.3, 0.0));
        assert_eq!(e.get(2), c(0.0, 0.0));
        let e = fourier_drive_coeffs(&SystemParams { eps: 0.0, ..fig2() });
        assert_eq!(e.coeffs.len(), 1);
    }

    #[test]
    fn detuning_coeffs() {
        let d = fourier_detuning_coeffs(&fig2());
        assert_eq!(d.get(0), c(0.5, 0.0));
        assert_eq!(d.get(1), c(-0.25, 0.0));
        assert_eq!(d.get(-1), c(-0.25, 0.0));
        assert!(fourier_detuning_coeffs(&SystemParams { delta_0: 0.0, ..fig2() }).coeffs.is_empty());
    }

    #[test]
    fn series_reproduce_waveforms() {
        let p = SystemParams { drive_freq: 1.7, omega_e: 1.7, ..fig2() };
        let e = fourier_drive_coeffs(&p);
        let d = fourier_detuning_coeffs(&p);
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let t = rng.random_range(-50.0..50.0);
            assert!((e.eval(t) - p.drive_amplitude(t)).abs() < 1e-12);
            assert!((d.eval(t) - p.qd_detuning(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn literal_zeroth_order_fig2() {
        let exp = zeroth_order_coeffs(&fig2(), 3, RecursionVariant::Literal).unwrap();
        let expected = c(0.2, 0.0) / c(-0.07, 0.2);
        assert_abs_diff_eq!((exp.get(Variable::A, 0, 0) - expected).norm(), 0.0, epsilon = 1e-14);
        for n in -3..=3 {
            assert_eq!(exp.get(Variable::Q, n, 0), c(0.0, 0.0));
            assert_eq!(exp.get(Variable::P, n, 0), c(0.0, 0.0));
        }
        for n in [-3, -2, 2, 3] {
            assert_eq!(exp.get(Variable::A, n, 0), c(0.0, 0.0));
            assert_eq!(exp.get(Variable::Sigma, n, 0), c(0.0, 0.0));
        }
    }

    #[test]
    fn zeroth_order_without_dot() {
        let p = SystemParams { g0: 0.0, ..fig2() };
        for variant in RecursionVariant::ALL {
            let exp = zeroth_order_coeffs(&p, 3, variant).unwrap();
            for n in -1..=1 {
                let e = fourier_drive_coeffs(&p).get(n);
                let expected = e / c(p.kappa_a, p.delta_c + n as f64);
                assert_abs_diff_eq!((exp.get(Variable::A, n, 0) - expected).norm(), 0.0, epsilon = 1e-14);
                assert_eq!(exp.get(Variable::Sigma, n, 0).norm(), 0.0);
            }
        }
    }

    #[test]
    fn unmodulated_expansion_is_static_fixed_point() {
        let p = SystemParams { eps: 0.0, delta_0: 0.0, ..fig2() };
        for variant in RecursionVariant::ALL {
            let exp = expand(&p, 3, 4, variant).unwrap();
            for j in 0..=4 {
                for n in [-3, -2, -1, 1, 2, 3] {
                    for var in Variable::ALL {
                        assert_eq!(exp.get(var, n, j).norm(), 0.0, "{variant:?} {var:?} n={n} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn coefficients_do_not_depend_on_coupling() {
        let a = expand(&fig2(), 3, 4, RecursionVariant::FullDetuning).unwrap();
        let b = expand(&SystemParams { g_om: 0.37, ..fig2() }, 3, 4, RecursionVariant::FullDetuning).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn momentum_follows_position() {
        let p = fig2();
        for variant in RecursionVariant::ALL {
            let exp = expand(&p, 3, 4, variant).unwrap();
            for j in 0..=4 {
                for n in -3..=3 {
                    let expected = Complex64::i() * n as f64 * p.drive_freq * exp.get(Variable::Q, n, j) / p.omega_m;
                    assert_eq!(exp.get(Variable::P, n, j), expected);
                }
            }
        }
    }

    #[test]
    fn mirror_coefficients_are_conjugate_symmetric() {
        for variant in RecursionVariant::ALL {
            let exp = expand(&fig2(), 3, 4, variant).unwrap();
            for j in 0..=4 {
                for n in 0..=3 {
                    for var in [Variable::Q, Variable::P] {
                        let c = exp.get(var, n, j);
                        let d = exp.get(var, -n, j) - c.conj();
                        assert!(d.norm() < 1e-10 * c.norm().max(1.0), "{variant:?} {var:?} n={n} j={j}: {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_coupling_reconstruction_is_zeroth_order() {
        let exp = expand(&fig2(), 3, 4, RecursionVariant::FullDetuning).unwrap();
        for t in [0.0, 0.4, 2.9] {
            let full = exp.reconstruct(0.0, t).unwrap();
            let zeroth = exp.reconstruct_to_order(1.0, t, 0).unwrap();
            assert_eq!(full, zeroth);
        }
    }

    #[test]
    fn reconstruction_is_periodic() {
        let p = fig2();
        let exp = expand(&p, 3, 4, RecursionVariant::default()).unwrap();
        for t in [0.0, 1.1, 5.0] {
            let a = exp.reconstruct(p.g_om, t).unwrap();
            let b = exp.reconstruct(p.g_om, t + p.period()).unwrap();
            assert!((a.to_vector() - b.to_vector()).amax() < 1e-12);
        }
    }

    #[test]
    fn mechanical_resonance_is_reported() {
        let p = SystemParams { gamma_m: 0.0, ..fig2() };
        let err = expand(&p, 3, 1, RecursionVariant::DcDetuning).unwrap_err();
        assert!(matches!(err, Error::ResonantDenominator { n: -1, .. }), "{err:?}");
    }

    #[test]
    fn resonant_cavity_dot_denominator_is_reported() {
        // kappa_a kappa_d = g0^2 N and delta_c = 0 make the n = 0 denominator vanish.
        let p = SystemParams { delta_c: 0.0, kappa_a: 0.1, kappa_d: 0.9, g0: 0.3, ..fig2() };
        let err = zeroth_order_coeffs(&p, 3, RecursionVariant::Literal).unwrap_err();
        assert!(matches!(err, Error::ResonantDenominator { n: 0, .. }), "{err:?}");
    }

    #[test]
    fn non_real_mirror_is_rejected() {
        let mut exp = expand(&fig2(), 3, 1, RecursionVariant::DcDetuning).unwrap();
        exp.coeffs[Variable::Q.index()][1][4] += c(0.0, 1.0);
        assert!(matches!(exp.reconstruct(0.01, 0.0), Err(Error::NonRealReconstruction { .. })));
    }

    #[test]
    fn coefficient_csv_lists_every_entry() {
        let exp = expand(&fig2(), 2, 1, RecursionVariant::default()).unwrap();
        let mut buf = Vec::new();
        exp.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("variable,n,j,re,im"));
        assert_eq!(text.lines().count(), 1 + 4 * 2 * 5);
    }
}
