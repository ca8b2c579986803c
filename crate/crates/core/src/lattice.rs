//! Lattice model: drive parameters, instantaneous Hamiltonian, plane waves,
//! the one-site translation operator and site-pairing observables.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use thiserror::Error;

/// Norm tolerance accepted by [`LatticeState`] constructors.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("site count must be an even integer >= 4, got {0}")]
    BadLength(usize),
    #[error("drive frequency must be positive, got {0}")]
    BadOmega(f64),
    #[error("modulation pitch must be positive, got {0}")]
    BadPitch(f64),
    #[error("momentum index {index} out of range for {length} sites")]
    MomentumOutOfRange { index: usize, length: usize },
    #[error("site index {index} out of range for {length} sites")]
    SiteOutOfRange { index: usize, length: usize },
    #[error("state norm deviates from 1 by {0:.3e}")]
    NotNormalized(f64),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("operation requires an even number of sites, got {0}")]
    OddLength(usize),
}

/// Shape of the periodic modulation `f(t)` entering the potential
/// `V cos(p f(t) i)`.
///
/// All variants are odd half-wave symmetric, `f(t + pi/omega) = -f(t)`, so
/// the potential itself repeats with period `pi/omega`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriveProfile {
    #[default]
    Sin,
    Square,
    Triangle,
}

impl DriveProfile {
    /// Modulation value at drive phase `omega * t`.
    pub fn value(self, phase: f64) -> f64 {
        match self {
            DriveProfile::Sin => phase.sin(),
            DriveProfile::Square => {
                let s = phase.sin();
                if s > 0.0 {
                    1.0
                } else if s < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            // Triangle wave with unit amplitude and the same zeros as sin.
            DriveProfile::Triangle => 2.0 / PI * (phase.sin()).asin(),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            DriveProfile::Sin => "sin",
            DriveProfile::Square => "square",
            DriveProfile::Triangle => "triangle",
        }
    }
}

impl std::str::FromStr for DriveProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sin" => Ok(DriveProfile::Sin),
            "square" => Ok(DriveProfile::Square),
            "triangle" => Ok(DriveProfile::Triangle),
            other => Err(format!("unknown drive profile '{other}'")),
        }
    }
}

/// Parameters of the driven chain: length, drive amplitude `V`, hopping `h`,
/// pitch `p`, angular frequency `omega` and modulation profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    length: usize,
    v: f64,
    h: f64,
    pitch: f64,
    omega: f64,
    profile: DriveProfile,
}

impl DriveParams {
    pub fn new(
        length: usize,
        v: f64,
        h: f64,
        pitch: f64,
        omega: f64,
        profile: DriveProfile,
    ) -> Result<Self, LatticeError> {
        if length < 4 || length % 2 != 0 {
            return Err(LatticeError::BadLength(length));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(LatticeError::BadOmega(omega));
        }
        if !(pitch > 0.0) || !pitch.is_finite() {
            return Err(LatticeError::BadPitch(pitch));
        }
        Ok(Self {
            length,
            v,
            h,
            pitch,
            omega,
            profile,
        })
    }

    /// Conventional parameter point: hopping `h = -1` sets the energy scale
    /// and the pitch is `pi`.
    pub fn standard(length: usize, v: f64, omega: f64) -> Result<Self, LatticeError> {
        Self::new(length, v, -1.0, PI, omega, DriveProfile::Sin)
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn hopping(&self) -> f64 {
        self.h
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn profile(&self) -> DriveProfile {
        self.profile
    }

    pub fn with_hopping(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_profile(mut self, profile: DriveProfile) -> Self {
        self.profile = profile;
        self
    }

    /// Modulation `f(t)`.
    pub fn modulation(&self, t: f64) -> f64 {
        self.profile.value(self.omega * t)
    }

    /// On-site potential `V cos(p f(t) i)` at site `i`.
    pub fn potential(&self, site: usize, t: f64) -> f64 {
        self.v * (self.pitch * self.modulation(t) * site as f64).cos()
    }

    /// Fundamental period of the potential, `pi/omega`.
    ///
    /// All supported profiles obey `f(t + pi/omega) = -f(t)` and the
    /// potential is even in `f`, so it repeats after half the modulation
    /// period.
    pub fn drive_period(&self) -> f64 {
        PI / self.omega
    }
}

/// Single-particle wavefunction on the ring, normalized to unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    amps: Array1<C64>,
}

impl LatticeState {
    /// Wraps amplitudes that are already normalized (tolerance [`NORM_TOL`]).
    pub fn new(amps: Array1<C64>) -> Result<Self, LatticeError> {
        let err = (norm_of(&amps) - 1.0).abs();
        if err > NORM_TOL {
            return Err(LatticeError::NotNormalized(err));
        }
        Ok(Self { amps })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amps: Array1<C64>) -> Result<Self, LatticeError> {
        let n = norm_of(&amps);
        if n == 0.0 || !n.is_finite() {
            return Err(LatticeError::ZeroNorm);
        }
        Ok(Self { amps: amps / C64::new(n, 0.0) })
    }

    /// Plane wave `psi_j = e^{i k j} / sqrt(L)` with `k = 2 pi n / L`.
    pub fn plane_wave(length: usize, momentum_index: usize) -> Result<Self, LatticeError> {
        if momentum_index >= length {
            return Err(LatticeError::MomentumOutOfRange {
                index: momentum_index,
                length,
            });
        }
        let k = momentum(length, momentum_index);
        let norm = 1.0 / (length as f64).sqrt();
        let amps = Array1::from_iter(
            (0..length).map(|j| C64::from_polar(norm, k * j as f64)),
        );
        Ok(Self { amps })
    }

    /// State fully localized on one site.
    pub fn site_delta(length: usize, site: usize) -> Result<Self, LatticeError> {
        if site >= length {
            return Err(LatticeError::SiteOutOfRange {
                index: site,
                length,
            });
        }
        let mut amps = Array1::zeros(length);
        amps[site] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Array1<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amps)
    }

    /// `| ||psi|| - 1 |`.
    pub fn norm_error(&self) -> f64 {
        (self.norm() - 1.0).abs()
    }

    /// Overlap `<self|other>`.
    pub fn overlap(&self, other: &LatticeState) -> C64 {
        inner(&self.amps, &other.amps)
    }

    pub(crate) fn from_raw(amps: Array1<C64>) -> Self {
        Self { amps }
    }
}

/// Instantaneous Hamiltonian in banded form: a real diagonal, a uniform real
/// hopping on the first off-diagonals and the two periodic corner entries.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    diag: Array1<f64>,
    hopping: f64,
}

impl HamiltonianMatrix {
    pub fn new(diag: Array1<f64>, hopping: f64) -> Self {
        Self { diag, hopping }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &Array1<f64> {
        &self.diag
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    /// Dense `L x L` matrix with the periodic corner couplings.
    pub fn to_dense(&self) -> Array2<C64> {
        let l = self.len();
        let mut m = Array2::zeros((l, l));
        let h = C64::new(self.hopping, 0.0);
        for i in 0..l {
            m[(i, i)] = C64::new(self.diag[i], 0.0);
            let j = (i + 1) % l;
            m[(i, j)] += h;
            m[(j, i)] += h;
        }
        m
    }

    /// Dense real-symmetric form; the matrix is real by construction.
    pub fn to_dense_real(&self) -> Array2<f64> {
        let l = self.len();
        let mut m = Array2::zeros((l, l));
        for i in 0..l {
            m[(i, i)] = self.diag[i];
            let j = (i + 1) % l;
            m[(i, j)] += self.hopping;
            m[(j, i)] += self.hopping;
        }
        m
    }

    /// Matrix-vector product with periodic boundary conditions.
    pub fn apply(&self, psi: &Array1<C64>) -> Array1<C64> {
        let l = self.len();
        assert_eq!(psi.len(), l, "state length must match Hamiltonian size");
        let h = self.hopping;
        Array1::from_iter((0..l).map(|i| {
            let left = psi[(i + l - 1) % l];
            let right = psi[(i + 1) % l];
            psi[i] * self.diag[i] + (left + right) * h
        }))
    }
}

/// Momentum `k = 2 pi n / L` of the `n`-th plane wave.
pub fn momentum(length: usize, momentum_index: usize) -> f64 {
    2.0 * PI * momentum_index as f64 / length as f64
}

/// Instantaneous Hamiltonian at time `t`: diagonal `V cos(p f(t) i)` and
/// hopping `h` with periodic corners. Total over valid parameters; `t` must
/// be finite.
pub fn build_hamiltonian(params: &DriveParams, t: f64) -> HamiltonianMatrix {
    debug_assert!(t.is_finite(), "time must be finite");
    let modulation = params.modulation(t);
    let arg = params.pitch * modulation;
    let diag = Array1::from_iter((0..params.length()).map(|i| params.v * (arg * i as f64).cos()));
    HamiltonianMatrix::new(diag, params.hopping())
}

/// One-site translation: `(T psi)_j = psi_{(j-1) mod L}`.
///
/// With this orientation plane waves are eigenstates with eigenvalue
/// `e^{-ik}`, so `T |k=0> = +|k=0>` and `T |k=pi> = -|k=pi>`.
pub fn translate(state: &LatticeState) -> LatticeState {
    let l = state.len();
    let amps = state.amplitudes();
    let shifted = Array1::from_iter((0..l).map(|j| amps[(j + l - 1) % l]));
    LatticeState::from_raw(shifted)
}

/// Expectation value `<psi| T |psi>` of the one-site translation operator.
pub fn translation_expectation(state: &LatticeState) -> C64 {
    let l = state.len();
    let amps = state.amplitudes();
    (0..l)
        .map(|j| amps[j].conj() * amps[(j + l - 1) % l])
        .sum()
}

/// Free dispersion `E(k) = 2 h cos k`.
pub fn dispersion(k: f64, h: f64) -> f64 {
    2.0 * h * k.cos()
}

/// Site-pairing products `M_i = conj(psi_i) psi_{i + L/2}` for
/// `i = 0 .. L/2 - 1`. For a plane wave all `M_i` coincide; for a random
/// wavefunction they scatter over the complex plane.
///
/// Their sum equals the complex conjugate of the cross-half overlap
/// `c = <psi_B|psi_A>` used by the entropy module.
pub fn randomness_scatter(state: &LatticeState) -> Result<Vec<C64>, LatticeError> {
    let l = state.len();
    if l % 2 != 0 {
        return Err(LatticeError::OddLength(l));
    }
    let half = l / 2;
    let amps = state.amplitudes();
    Ok((0..half).map(|i| amps[i].conj() * amps[i + half]).collect())
}

fn norm_of(amps: &Array1<C64>) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn inner(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}
