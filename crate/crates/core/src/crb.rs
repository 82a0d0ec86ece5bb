//! Cramér-Rao bound evaluation per subarray and exhaustive best-subarray
//! search.
//!
//! For a single source observed through the K antennas of subarray q, the
//! joint elevation/azimuth bound is
//!
//! ```text
//! CRB_theta = sigma_n^2 / (2 L Re{ (da_t^H [I - a a^H / K] da_p)
//!                                 (sigma_s^4 a^H R_q^{-1} a) })
//! ```
//!
//! with the derivative roles swapped for `CRB_phi`, and the absolute bound
//! `eta = sqrt((CRB_theta^2 + CRB_phi^2) / 2)`. The joint form degenerates
//! for planar arrays at broadside (the elevation derivative vanishes), so
//! 1-D scenarios use the single-parameter azimuth bound [`crb_1d`] instead.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{binomial, ArrayGeometry, Subarray};
use crate::linalg::{cdot, quad_form, CMat, C64};
use crate::signal::{
    steering_derivatives_from_positions, steering_from_positions, DoA, PhaseSign, SampleCovariance,
};

/// Relative ridge added to a covariance before inversion; keeps rank-deficient
/// sample covariances (L < K) invertible without moving the argmin at
/// realistic snapshot counts.
const COV_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbResult {
    /// Elevation bound (rad^2).
    pub crb_theta: f64,
    /// Azimuth bound (rad^2).
    pub crb_phi: f64,
    /// Absolute bound over both coordinates (rad^2).
    pub eta: f64,
}

/// Which bound drives labeling and selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Joint elevation/azimuth bound, for 2-D scenarios.
    Crb2d,
    /// Single-parameter azimuth bound, for scenarios with known elevation.
    Crb1d,
}

impl BoundKind {
    pub fn tag(self) -> &'static str {
        match self {
            BoundKind::Crb2d => "crb2d",
            BoundKind::Crb1d => "crb1d",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "crb2d" => Ok(BoundKind::Crb2d),
            "crb1d" => Ok(BoundKind::Crb1d),
            other => Err(Error::Format(format!("unknown bound kind `{other}`"))),
        }
    }
}

/// `R = sigma_s^2 a a^H + sigma_n^2 I`.
pub fn analytic_covariance(a: &[C64], sigma_s2: f64, sigma_n2: f64) -> Result<CMat> {
    if !(sigma_s2 > 0.0) || !(sigma_n2 > 0.0) {
        return Err(Error::invalid("powers must be positive"));
    }
    let k = a.len();
    let mut r = CMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            r[(i, j)] = a[i] * a[j].conj() * sigma_s2;
        }
        r[(i, i)] += sigma_n2;
    }
    Ok(r)
}

fn validate_powers(l: usize, sigma_s2: f64, sigma_n2: f64) -> Result<()> {
    if l == 0 {
        return Err(Error::invalid("snapshot count must be >= 1"));
    }
    if !(sigma_s2 > 0.0) || !(sigma_n2 > 0.0) {
        return Err(Error::invalid("powers must be positive"));
    }
    Ok(())
}

/// Shared factor `sigma_s^4 a^H R^{-1} a` with the ridge applied. `None`
/// when the regularized covariance still fails to invert.
fn snr_factor(a: &[C64], cov: &CMat, sigma_s2: f64) -> Option<C64> {
    let k = cov.rows();
    let mut reg = cov.clone();
    let ridge = COV_RIDGE * reg.trace().re.max(0.0) / k as f64;
    for i in 0..k {
        reg[(i, i)] += ridge;
    }
    let inv = reg.inverse().ok()?;
    Some(quad_form(a, &inv, a) * sigma_s2 * sigma_s2)
}

/// `x^H (I - a a^H / K) y`.
fn projected_inner(x: &[C64], a: &[C64], y: &[C64]) -> C64 {
    let k = a.len() as f64;
    cdot(x, y) - cdot(x, a) * cdot(a, y) / k
}

fn eval_pair_from_positions(
    positions: &[[f64; 3]],
    doa: DoA,
    cov: &CMat,
    l: usize,
    sigma_s2: f64,
    sigma_n2: f64,
) -> Option<CrbResult> {
    let a = steering_from_positions(positions, doa, PhaseSign::Negative);
    let (dth, dph) = steering_derivatives_from_positions(positions, doa, PhaseSign::Negative);
    let factor = snr_factor(&a, cov, sigma_s2)?;
    let mixed_tp = projected_inner(&dth, &a, &dph);
    let mixed_pt = projected_inner(&dph, &a, &dth);
    let two_l = 2.0 * l as f64;
    let den_theta = two_l * (mixed_tp * factor).re;
    let den_phi = two_l * (mixed_pt * factor).re;
    if !(den_theta > 0.0) || !(den_phi > 0.0) {
        return None;
    }
    let crb_theta = sigma_n2 / den_theta;
    let crb_phi = sigma_n2 / den_phi;
    if !crb_theta.is_finite() || !crb_phi.is_finite() {
        return None;
    }
    let eta = ((crb_theta * crb_theta + crb_phi * crb_phi) / 2.0).sqrt();
    Some(CrbResult {
        crb_theta,
        crb_phi,
        eta,
    })
}

/// Joint elevation/azimuth CRB of a subarray geometry. `None` marks a
/// direction the subarray cannot identify (degenerate denominator).
pub fn crb_pair(
    subarray_geometry: &ArrayGeometry,
    doa: DoA,
    cov: &CMat,
    l: usize,
    sigma_s2: f64,
    sigma_n2: f64,
) -> Result<Option<CrbResult>> {
    validate_powers(l, sigma_s2, sigma_n2)?;
    if cov.rows() != subarray_geometry.len() || cov.cols() != subarray_geometry.len() {
        return Err(Error::invalid("covariance does not match geometry size"));
    }
    Ok(eval_pair_from_positions(
        subarray_geometry.positions(),
        doa,
        cov,
        l,
        sigma_s2,
        sigma_n2,
    ))
}

/// Single-parameter azimuth CRB, used whenever elevation is known/fixed.
pub fn crb_1d(
    subarray_geometry: &ArrayGeometry,
    doa: DoA,
    cov: &CMat,
    l: usize,
    sigma_s2: f64,
    sigma_n2: f64,
) -> Result<Option<f64>> {
    validate_powers(l, sigma_s2, sigma_n2)?;
    if cov.rows() != subarray_geometry.len() || cov.cols() != subarray_geometry.len() {
        return Err(Error::invalid("covariance does not match geometry size"));
    }
    let a = steering_from_positions(subarray_geometry.positions(), doa, PhaseSign::Negative);
    let (_, dph) =
        steering_derivatives_from_positions(subarray_geometry.positions(), doa, PhaseSign::Negative);
    let factor = match snr_factor(&a, cov, sigma_s2) {
        Some(f) => f,
        None => return Ok(None),
    };
    let den = 2.0 * l as f64 * (projected_inner(&dph, &a, &dph) * factor).re;
    if !(den > 0.0) {
        return Ok(None);
    }
    let bound = sigma_n2 / den;
    Ok(bound.is_finite().then_some(bound))
}

/// Covariance fed to the bound: the exact single-source model or an
/// estimated full-array covariance whose principal submatrices are used.
#[derive(Debug, Clone, Copy)]
pub enum CovSource<'a> {
    Analytic,
    Sample(&'a SampleCovariance),
}

/// Winner of the exhaustive bound search.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub class_id: u64,
    pub eta: f64,
    pub subarray: Subarray,
}

/// Exhaustive argmin of the chosen bound over all (or the given candidate)
/// K-of-M subarrays. Ties break to the lowest class id; deterministic.
#[allow(clippy::too_many_arguments)]
pub fn best_subarray(
    geometry: &ArrayGeometry,
    k: usize,
    doa: DoA,
    source: CovSource<'_>,
    bound: BoundKind,
    sigma_s2: f64,
    sigma_n2: f64,
    l: usize,
    candidates: Option<&[u64]>,
) -> Result<Selection> {
    let m = geometry.len();
    if k == 0 || k >= m {
        return Err(Error::invalid(format!(
            "selection size must satisfy 1 <= K < M, got K = {k}, M = {m}"
        )));
    }
    validate_powers(l, sigma_s2, sigma_n2)?;
    if let CovSource::Sample(cov) = source {
        if cov.m() != m {
            return Err(Error::invalid("sample covariance does not match geometry"));
        }
    }

    // Steering quantities depend only on per-element positions, so compute
    // them once for the full array and slice per subarray.
    let a_full = steering_from_positions(geometry.positions(), doa, PhaseSign::Negative);
    let (dth_full, dph_full) =
        steering_derivatives_from_positions(geometry.positions(), doa, PhaseSign::Negative);

    let q = binomial(m, k);
    let mut best: Option<(f64, u64, Vec<usize>)> = None;
    let mut scratch_a = vec![Complex64::new(0.0, 0.0); k];
    let mut scratch_t = vec![Complex64::new(0.0, 0.0); k];
    let mut scratch_p = vec![Complex64::new(0.0, 0.0); k];

    let mut consider = |class_id: u64,
                        indices: &[usize],
                        best: &mut Option<(f64, u64, Vec<usize>)>|
     -> Result<()> {
        for (slot, &i) in scratch_a.iter_mut().zip(indices) {
            *slot = a_full[i];
        }
        for (slot, &i) in scratch_t.iter_mut().zip(indices) {
            *slot = dth_full[i];
        }
        for (slot, &i) in scratch_p.iter_mut().zip(indices) {
            *slot = dph_full[i];
        }
        let cov = match source {
            CovSource::Analytic => analytic_covariance(&scratch_a, sigma_s2, sigma_n2)?,
            CovSource::Sample(sample) => sample.principal_submatrix(indices),
        };
        let factor = match snr_factor(&scratch_a, &cov, sigma_s2) {
            Some(f) => f,
            None => return Ok(()),
        };
        let two_l = 2.0 * l as f64;
        let eta = match bound {
            BoundKind::Crb1d => {
                let den = two_l * (projected_inner(&scratch_p, &scratch_a, &scratch_p) * factor).re;
                if !(den > 0.0) {
                    return Ok(());
                }
                sigma_n2 / den
            }
            BoundKind::Crb2d => {
                let den_t =
                    two_l * (projected_inner(&scratch_t, &scratch_a, &scratch_p) * factor).re;
                let den_p =
                    two_l * (projected_inner(&scratch_p, &scratch_a, &scratch_t) * factor).re;
                if !(den_t > 0.0) || !(den_p > 0.0) {
                    return Ok(());
                }
                let ct = sigma_n2 / den_t;
                let cp = sigma_n2 / den_p;
                ((ct * ct + cp * cp) / 2.0).sqrt()
            }
        };
        if !eta.is_finite() {
            return Ok(());
        }
        if best.as_ref().map_or(true, |(b, _, _)| eta < *b) {
            *best = Some((eta, class_id, indices.to_vec()));
        }
        Ok(())
    };

    match candidates {
        None => {
            for (id, sub) in crate::geometry::enumerate_subarrays(m, k)?.enumerate() {
                consider(id as u64, sub.indices(), &mut best)?;
            }
        }
        Some(ids) => {
            // Ascending order preserves the lowest-class-id tie rule.
            let mut sorted: Vec<u64> = ids.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            for &id in &sorted {
                if id >= q {
                    return Err(Error::invalid(format!(
                        "candidate class id {id} >= Q = {q}"
                    )));
                }
                let sub = Subarray::from_class_id(m, k, id)?;
                consider(id, sub.indices(), &mut best)?;
            }
        }
    }

    match best {
        Some((eta, class_id, indices)) => Ok(Selection {
            class_id,
            eta,
            subarray: Subarray::new(indices, m)?,
        }),
        None => Err(Error::NoSolution(format!(
            "no subarray of size {k} can identify direction ({}, {})",
            doa.theta_deg(),
            doa.phi_deg()
        ))),
    }
}

/// Distinct class ids in first-appearance order (the reduced class set).
pub fn reduce_classes(labels: &[u64]) -> Vec<u64> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for &l in labels {
        if seen.insert(l) {
            out.push(l);
        }
    }
    out
}
