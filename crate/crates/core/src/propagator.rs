//! Time evolution under the driven Hamiltonian.
//!
//! The production integrator is Crank-Nicolson with the midpoint Hamiltonian
//! `H(t + dt/2)`. Each step solves a cyclic tridiagonal system (tridiagonal
//! plus the two periodic corner entries) by the Sherman-Morrison correction
//! of a plain Thomas solve, `O(L)` per step; the Cayley form is exactly
//! norm-preserving in exact arithmetic.
//!
//! [`evolve_reference`] is an independent oracle that advances the state with
//! a dense eigendecomposition of the same midpoint Hamiltonian and the exact
//! exponential of its eigenvalues, `O(L^3)` per step.

use crate::lattice::{self, DriveParams, LatticeState};
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, UPLO};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

/// Per-step norm drift that aborts a propagation.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PropagatorError {
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("final time {t_max} must be at least one step {dt}")]
    BadHorizon { dt: f64, t_max: f64 },
    #[error("output stride must be >= 1")]
    BadStride,
    #[error("norm drifted by {drift:.3e} at t = {time:.6} (limit {NORM_DRIFT_LIMIT:.1e})")]
    NormDrift { time: f64, drift: f64 },
    #[error("dt = {dt} does not divide the drive period {period} an integer number of times")]
    NonCommensurate { period: f64, dt: f64 },
    #[error("state length {state} does not match lattice length {lattice}")]
    LengthMismatch { state: usize, lattice: usize },
    #[error("eigensolver failure: {0}")]
    Eigensolver(#[from] ndarray_linalg::error::LinalgError),
}

/// Step size, final time and output sampling stride of a propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    t_max: f64,
    output_stride: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, t_max: f64, output_stride: usize) -> Result<Self, PropagatorError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(PropagatorError::BadStep(dt));
        }
        if !(t_max >= dt) || !t_max.is_finite() {
            return Err(PropagatorError::BadHorizon { dt, t_max });
        }
        if output_stride == 0 {
            return Err(PropagatorError::BadStride);
        }
        Ok(Self {
            dt,
            t_max,
            output_stride,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn output_stride(&self) -> usize {
        self.output_stride
    }

    /// Number of steps, rounding `t_max / dt` to the nearest integer.
    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round().max(1.0) as usize
    }
}

/// Recorded samples of a propagation. The first sample is the initial state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<LatticeState>,
    norm_errors: Vec<f64>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[LatticeState] {
        &self.states
    }

    pub fn norm_errors(&self) -> &[f64] {
        &self.norm_errors
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial_state(&self) -> &LatticeState {
        &self.states[0]
    }

    pub fn final_state(&self) -> &LatticeState {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one sample")
    }

    pub fn max_norm_error(&self) -> f64 {
        self.norm_errors.iter().copied().fold(0.0, f64::max)
    }
}

/// Floquet mode: quasienergy, eigenvector of the one-period propagator and
/// optionally the periodic part sampled over one period.
#[derive(Debug, Clone)]
pub struct FloquetMode {
    pub quasienergy: f64,
    pub state: Array1<C64>,
    pub periodic_samples: Option<Vec<(f64, Array1<C64>)>>,
}

/// One Crank-Nicolson step engine with preallocated workspace.
struct CnStepper {
    params: DriveParams,
    diag_mid: Vec<f64>,
    rhs: Vec<C64>,
    modified_diag: Vec<C64>,
    gammas: Vec<C64>,
    solution: Vec<C64>,
    correction: Vec<C64>,
}

impl CnStepper {
    fn new(params: DriveParams) -> Self {
        let l = params.length();
        Self {
            params,
            diag_mid: vec![0.0; l],
            rhs: vec![C64::new(0.0, 0.0); l],
            modified_diag: vec![C64::new(0.0, 0.0); l],
            gammas: vec![C64::new(0.0, 0.0); l],
            solution: vec![C64::new(0.0, 0.0); l],
            correction: vec![C64::new(0.0, 0.0); l],
        }
    }

    /// Advances `psi` from `t` to `t + dt` in place.
    fn step(&mut self, psi: &mut Array1<C64>, t: f64, dt: f64) {
        let l = self.params.length();
        let arg = self.params.pitch() * self.params.modulation(t + 0.5 * dt);
        let v = self.params.v();
        for (i, d) in self.diag_mid.iter_mut().enumerate() {
            *d = v * (arg * i as f64).cos();
        }
        let a = C64::new(0.0, 0.5 * dt);
        let off = a * self.params.hopping();

        // rhs = (I - i dt/2 H) psi
        for i in 0..l {
            let left = psi[(i + l - 1) % l];
            let right = psi[(i + 1) % l];
            self.rhs[i] = (C64::new(1.0, 0.0) - a * self.diag_mid[i]) * psi[i]
                - off * (left + right);
            self.modified_diag[i] = C64::new(1.0, 0.0) + a * self.diag_mid[i];
        }

        // Sherman-Morrison split of the periodic corners: solve the modified
        // tridiagonal system for the rhs and for the rank-one carrier, then
        // combine.
        let gamma = -self.modified_diag[0];
        let d_first = self.modified_diag[0] - gamma;
        let d_last = self.modified_diag[l - 1] - off * off / gamma;
        self.modified_diag[0] = d_first;
        self.modified_diag[l - 1] = d_last;

        thomas_uniform(
            &self.modified_diag,
            off,
            &self.rhs,
            &mut self.gammas,
            &mut self.solution,
        );

        for u in self.rhs.iter_mut() {
            *u = C64::new(0.0, 0.0);
        }
        self.rhs[0] = gamma;
        self.rhs[l - 1] = off;
        thomas_uniform(
            &self.modified_diag,
            off,
            &self.rhs,
            &mut self.gammas,
            &mut self.correction,
        );

        let ratio = off / gamma;
        let factor = (self.solution[0] + ratio * self.solution[l - 1])
            / (C64::new(1.0, 0.0) + self.correction[0] + ratio * self.correction[l - 1]);
        for i in 0..l {
            psi[i] = self.solution[i] - factor * self.correction[i];
        }
    }
}

/// Thomas solve of a tridiagonal system with a uniform off-diagonal value.
/// `gammas` and `x` are caller-provided workspaces of the system size.
fn thomas_uniform(diag: &[C64], off: C64, rhs: &[C64], gammas: &mut [C64], x: &mut [C64]) {
    let n = diag.len();
    let mut beta = diag[0];
    x[0] = rhs[0] / beta;
    for j in 1..n {
        gammas[j] = off / beta;
        beta = diag[j] - off * gammas[j];
        x[j] = (rhs[j] - off * x[j - 1]) / beta;
    }
    for j in (0..n - 1).rev() {
        let next = x[j + 1];
        x[j] -= gammas[j + 1] * next;
    }
}

fn check_state(params: &DriveParams, state: &LatticeState) -> Result<(), PropagatorError> {
    if state.len() != params.length() {
        return Err(PropagatorError::LengthMismatch {
            state: state.len(),
            lattice: params.length(),
        });
    }
    Ok(())
}

/// Common recording loop shared by the two integrators.
fn propagate<F>(
    state: &LatticeState,
    grid: &TimeGrid,
    mut step: F,
) -> Result<Trajectory, PropagatorError>
where
    F: FnMut(&mut Array1<C64>, f64, f64) -> Result<(), PropagatorError>,
{
    let n_steps = grid.n_steps();
    let dt = grid.dt();
    let mut psi = state.amplitudes().clone();

    let capacity = n_steps / grid.output_stride() + 2;
    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    let mut norm_errors = Vec::with_capacity(capacity);
    times.push(0.0);
    states.push(state.clone());
    norm_errors.push(state.norm_error());

    for s in 0..n_steps {
        let t = s as f64 * dt;
        step(&mut psi, t, dt)?;
        let drift = (psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(PropagatorError::NormDrift {
                time: t + dt,
                drift,
            });
        }
        if (s + 1) % grid.output_stride() == 0 || s + 1 == n_steps {
            times.push((s + 1) as f64 * dt);
            states.push(LatticeState::from_raw(psi.clone()));
            norm_errors.push(drift);
        }
    }

    Ok(Trajectory {
        times,
        states,
        norm_errors,
    })
}

/// Crank-Nicolson propagation of the Schroedinger equation
/// `i d/dt psi = H(t) psi`.
pub fn evolve(
    state: &LatticeState,
    params: &DriveParams,
    grid: &TimeGrid,
) -> Result<Trajectory, PropagatorError> {
    check_state(params, state)?;
    let mut stepper = CnStepper::new(*params);
    propagate(state, grid, |psi, t, dt| {
        stepper.step(psi, t, dt);
        Ok(())
    })
}

/// Reference propagation: dense eigendecomposition of the midpoint
/// Hamiltonian and exact exponential of its eigenvalues at each step.
/// Intended as an oracle at moderate sizes (`O(L^3)` per step).
pub fn evolve_reference(
    state: &LatticeState,
    params: &DriveParams,
    grid: &TimeGrid,
) -> Result<Trajectory, PropagatorError> {
    check_state(params, state)?;
    propagate(state, grid, |psi, t, dt| {
        reference_step(params, psi, t, dt)
    })
}

fn reference_step(
    params: &DriveParams,
    psi: &mut Array1<C64>,
    t: f64,
    dt: f64,
) -> Result<(), PropagatorError> {
    let h = lattice::build_hamiltonian(params, t + 0.5 * dt).to_dense_real();
    let (evals, evecs) = h.eigh(UPLO::Lower)?;
    let l = psi.len();
    let re = Array1::from_iter(psi.iter().map(|a| a.re));
    let im = Array1::from_iter(psi.iter().map(|a| a.im));
    let yr = evecs.t().dot(&re);
    let yi = evecs.t().dot(&im);
    let mut zr = Array1::zeros(l);
    let mut zi = Array1::zeros(l);
    for j in 0..l {
        let theta = evals[j] * dt;
        let (s, c) = theta.sin_cos();
        // e^{-i theta} (yr + i yi)
        zr[j] = c * yr[j] + s * yi[j];
        zi[j] = c * yi[j] - s * yr[j];
    }
    let xr = evecs.dot(&zr);
    let xi = evecs.dot(&zi);
    for j in 0..l {
        psi[j] = C64::new(xr[j], xi[j]);
    }
    Ok(())
}

/// One-period propagator `U(T, 0)` with `T = pi/omega`, built column by
/// column with the Crank-Nicolson stepper. Columns are independent and run
/// in parallel; the result does not depend on scheduling order.
///
/// `dt` must divide the period an integer number of times.
pub fn monodromy(params: &DriveParams, dt: f64) -> Result<Array2<C64>, PropagatorError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(PropagatorError::BadStep(dt));
    }
    let period = params.drive_period();
    let ratio = period / dt;
    let n_steps = ratio.round();
    if n_steps < 1.0 || (ratio - n_steps).abs() > 1e-9 * ratio.max(1.0) {
        return Err(PropagatorError::NonCommensurate { period, dt });
    }
    let n_steps = n_steps as usize;
    let l = params.length();

    let columns: Vec<Result<Vec<C64>, PropagatorError>> = (0..l)
        .into_par_iter()
        .map(|j| {
            let mut stepper = CnStepper::new(*params);
            let mut psi: Array1<C64> = Array1::zeros(l);
            psi[j] = C64::new(1.0, 0.0);
            for s in 0..n_steps {
                stepper.step(&mut psi, s as f64 * dt, dt);
            }
            Ok(psi.to_vec())
        })
        .collect();

    let mut u = Array2::zeros((l, l));
    for (j, col) in columns.into_iter().enumerate() {
        let col = col?;
        for (i, v) in col.into_iter().enumerate() {
            u[(i, j)] = v;
        }
    }
    Ok(u)
}

/// Deviation of `U^dag U` from the identity, in max-norm.
pub fn unitarity_defect(u: &Array2<C64>) -> f64 {
    let l = u.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..l {
        for j in 0..l {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..l {
                s += u[(k, i)].conj() * u[(k, j)];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((s - target).norm());
        }
    }
    worst
}

/// Quasienergy spectrum of a one-period propagator.
///
/// Quasienergies are `-arg(lambda)/T` mapped to `(-pi/T, pi/T]`, ties at the
/// zone edge broken toward `+pi/T`; modes are sorted by quasienergy.
/// Eigenvectors inside degenerate eigenvalue clusters are re-orthonormalized,
/// which is legitimate because any basis of an eigenvalue cluster of a normal
/// matrix spans the same invariant subspace.
pub fn floquet_spectrum(
    monodromy: &Array2<C64>,
    period: f64,
) -> Result<Vec<FloquetMode>, PropagatorError> {
    let (evals, evecs) = monodromy.eig()?;
    let l = evals.len();
    let zone = PI / period;

    let mut order: Vec<usize> = (0..l).collect();
    // sort by eigenvalue phase so clusters are adjacent; the fold tolerance
    // absorbs eigensolver noise so a phase numerically at -pi lands on the
    // +pi/T side of the zone
    let quasi = |idx: usize| -> f64 {
        let mut e = -evals[idx].arg() / period;
        if e <= -zone + 1e-9 * zone {
            e += 2.0 * zone;
        }
        e
    };
    order.sort_by(|&a, &b| quasi(a).partial_cmp(&quasi(b)).expect("finite quasienergies"));

    let mut vectors: Vec<Array1<C64>> = order
        .iter()
        .map(|&idx| evecs.column(idx).to_owned())
        .collect();
    let energies: Vec<f64> = order.iter().map(|&idx| quasi(idx)).collect();
    let lambdas: Vec<C64> = order.iter().map(|&idx| evals[idx]).collect();

    // Gram-Schmidt within clusters of equal eigenvalues.
    let mut start = 0;
    while start < l {
        let mut end = start + 1;
        while end < l && (lambdas[end] - lambdas[start]).norm() < 1e-10 {
            end += 1;
        }
        for i in start..end {
            for j in start..i {
                let (head, tail) = vectors.split_at_mut(i);
                let proj = lattice::inner(&head[j], &tail[0]);
                let vj = head[j].clone();
                tail[0].zip_mut_with(&vj, |a, b| *a -= proj * b);
            }
            let n = vectors[i].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            vectors[i].mapv_inplace(|a| a / n);
        }
        start = end;
    }

    Ok(energies
        .into_iter()
        .zip(vectors)
        .map(|(quasienergy, state)| FloquetMode {
            quasienergy,
            state,
            periodic_samples: None,
        })
        .collect())
}

/// Samples the periodic part `|u(t)> = e^{+i eps t} U(t,0) |u(0)>` of a
/// Floquet mode over one drive period and stores them on the mode.
pub fn attach_periodic_samples(
    mode: &mut FloquetMode,
    params: &DriveParams,
    dt: f64,
    n_samples: usize,
) -> Result<(), PropagatorError> {
    let period = params.drive_period();
    let stride = (period / (n_samples as f64) / dt).round().max(1.0) as usize;
    let n_steps = (period / dt).round() as usize;
    let mut stepper = CnStepper::new(*params);
    let mut psi = mode.state.clone();
    let mut samples = Vec::with_capacity(n_samples + 1);
    samples.push((0.0, psi.clone()));
    for s in 0..n_steps {
        stepper.step(&mut psi, s as f64 * dt, dt);
        if (s + 1) % stride == 0 || s + 1 == n_steps {
            let t = (s + 1) as f64 * dt;
            let phase = C64::from_polar(1.0, mode.quasienergy * t);
            samples.push((t, psi.mapv(|a| a * phase)));
        }
    }
    mode.periodic_samples = Some(samples);
    Ok(())
}
