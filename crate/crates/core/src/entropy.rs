//! Modified bipartite single-particle entropy.
//!
//! The chain is split into half A (sites `0..L/2`) and half B (sites
//! `L/2..L`). With the unnormalized halves `psi_A`, `psi_B`, the weights
//! `p_A = <psi_A|psi_A>`, `p_B = <psi_B|psi_B>` and the cross overlap
//! `c = <psi_B|psi_A>`, the entropy is built from the eigenvalues of
//!
//! ```text
//! [[p_A^2 + |c|^2,  conj(c)],
//!  [      c,        p_B^2 + |c|^2]]
//! ```
//!
//! via `S = -l1 ln l1 - l2 ln l2` with `0 ln 0 := 0`. The eigenvalues depend
//! on the state only through `(p_A, |c|)`. `S` vanishes for parallel halves
//! and reaches its maximum `ln 2` at `p_A = p_B = 1/2`, `c = 0`.

use crate::lattice::LatticeState;
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error("bipartition requires an even number of sites, got {0}")]
    OddLength(usize),
    #[error("weight p_A = {0} outside [0, 1]")]
    WeightOutOfRange(f64),
    #[error("squared overlap {c2} exceeds the Cauchy-Schwarz bound p_A p_B = {bound}")]
    OverlapOutOfRange { c2: f64, bound: f64 },
}

/// Half-chain weights, cross overlap, eigenvalue pair and entropy of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    pub p_a: f64,
    pub p_b: f64,
    /// Complex cross-half overlap `<psi_B|psi_A>`.
    pub c: C64,
    pub c_abs: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Entropy in nats.
    pub entropy: f64,
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Eigenvalue pair of the characteristic equation
/// `l^2 - (2c^2 + p_A^2 + p_B^2) l + [c^4 + c^2(p_A^2 + p_B^2) + p_A^2 p_B^2 - c^2] = 0`
/// with `c^2 = c_abs2`, and the resulting entropy.
///
/// Small negative eigenvalues from roundoff are clipped to zero before the
/// logarithm.
pub fn entropy_from_invariants(
    p_a: f64,
    c_abs2: f64,
) -> Result<(f64, f64, f64), EntropyError> {
    if !(0.0..=1.0).contains(&p_a) {
        return Err(EntropyError::WeightOutOfRange(p_a));
    }
    let p_b = 1.0 - p_a;
    let bound = p_a * p_b;
    if c_abs2 < 0.0 || c_abs2 > bound + 1e-12 {
        return Err(EntropyError::OverlapOutOfRange { c2: c_abs2, bound });
    }
    let (l1, l2) = eigenvalue_pair(p_a, p_b, c_abs2);
    Ok((l1, l2, -xlnx(l1) - xlnx(l2)))
}

fn eigenvalue_pair(p_a: f64, p_b: f64, c2: f64) -> (f64, f64) {
    // trace = 2c^2 + p_A^2 + p_B^2, discriminant = (p_A^2 - p_B^2)^2 + 4c^2
    let trace = 2.0 * c2 + p_a * p_a + p_b * p_b;
    let disc = ((p_a * p_a - p_b * p_b).powi(2) + 4.0 * c2).sqrt();
    let l1 = 0.5 * (trace + disc);
    let mut l2 = 0.5 * (trace - disc);
    debug_assert!(l2 > -1e-9, "eigenvalue {l2} unexpectedly negative");
    if l2 < 0.0 {
        l2 = 0.0;
    }
    (l1, l2)
}

/// Full entropy report of a state, from its half-chain invariants.
pub fn bipartite_entropy(state: &LatticeState) -> Result<EntropyReport, EntropyError> {
    let l = state.len();
    if l % 2 != 0 {
        return Err(EntropyError::OddLength(l));
    }
    let half = l / 2;
    let amps = state.amplitudes();
    let mut p_a = 0.0;
    let mut p_b = 0.0;
    let mut c = C64::new(0.0, 0.0);
    for i in 0..half {
        p_a += amps[i].norm_sqr();
        p_b += amps[i + half].norm_sqr();
        c += amps[i + half].conj() * amps[i];
    }
    let c2 = c.norm_sqr();
    let (lambda1, lambda2) = eigenvalue_pair(p_a, p_b, c2);
    Ok(EntropyReport {
        p_a,
        p_b,
        c,
        c_abs: c.norm(),
        lambda1,
        lambda2,
        entropy: -xlnx(lambda1) - xlnx(lambda2),
    })
}

/// Maximum of the entropy over `p_A` at fixed squared overlap, scanned on a
/// grid of step `1e-3` restricted to the Cauchy-Schwarz-feasible range.
pub fn max_entropy_over_pa(c_abs2: f64) -> Result<f64, EntropyError> {
    if !(0.0..=1.0 / 16.0 + 1e-15).contains(&c_abs2) {
        return Err(EntropyError::OverlapOutOfRange {
            c2: c_abs2,
            bound: 1.0 / 16.0,
        });
    }
    let steps = 1000;
    let mut best: f64 = 0.0;
    for i in 0..=steps {
        let p_a = i as f64 / steps as f64;
        if p_a * (1.0 - p_a) + 1e-15 < c_abs2 {
            continue;
        }
        let (l1, l2) = eigenvalue_pair(p_a, 1.0 - p_a, c_abs2.min(p_a * (1.0 - p_a)));
        best = best.max(-xlnx(l1) - xlnx(l2));
    }
    Ok(best)
}

/// Classical two-box entropy `-p_A ln p_A - p_B ln p_B`.
pub fn shannon_entropy(state: &LatticeState) -> Result<f64, EntropyError> {
    let l = state.len();
    if l % 2 != 0 {
        return Err(EntropyError::OddLength(l));
    }
    let half = l / 2;
    let p_a: f64 = state.amplitudes().iter().take(half).map(|a| a.norm_sqr()).sum();
    let p_b = 1.0 - p_a;
    Ok(-xlnx(p_a) - xlnx(p_b.max(0.0)))
}

/// Mean and standard deviation over the trailing fraction of a series.
/// Used to summarize the late-time value of an observable together with its
/// fluctuations.
pub fn tail_stats(values: &[f64], tail_fraction: f64) -> (f64, f64) {
    assert!(
        (0.0..=1.0).contains(&tail_fraction) && tail_fraction > 0.0,
        "tail fraction must lie in (0, 1]"
    );
    let n = values.len();
    let start = ((n as f64) * (1.0 - tail_fraction)).floor() as usize;
    let tail = &values[start.min(n.saturating_sub(1))..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let var = tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / tail.len() as f64;
    (mean, var.sqrt())
}
