//! Plane-wave signal model: steering vectors and their analytic derivatives,
//! snapshot simulation, sample covariance, and covariance feature channels.
//!
//! Sign convention: the expanded steering form
//! `a_m = exp{-j 2 pi (p_x mu + p_y nu + p_z xi)}` (positions in wavelengths)
//! is normative. A `PhaseSign` switch exposes the conjugate form for
//! sensitivity testing; bound values are conjugation-invariant but mixing
//! conventions between selection and beamforming would break coherence.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::linalg::{CMat, C64};

const SNAPSHOT_MAGIC: &[u8; 4] = b"CGSS";
const COVARIANCE_MAGIC: &[u8; 4] = b"CGSC";
const RECORD_VERSION: u8 = 1;

/// Sine in degrees, exact at multiples of 90.
pub fn sin_deg(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r == 0.0 || r == 180.0 {
        0.0
    } else if r == 90.0 {
        1.0
    } else if r == 270.0 {
        -1.0
    } else {
        deg.to_radians().sin()
    }
}

/// Cosine in degrees, exact at multiples of 90.
pub fn cos_deg(deg: f64) -> f64 {
    sin_deg(deg + 90.0)
}

/// Direction of arrival: elevation `theta` in `[0, 180]`, azimuth `phi`
/// normalized into `[0, 360)`, both degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoA {
    theta_deg: f64,
    phi_deg: f64,
}

impl DoA {
    pub fn new(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        if !theta_deg.is_finite() || !phi_deg.is_finite() {
            return Err(Error::invalid("DoA angles must be finite"));
        }
        if !(0.0..=180.0).contains(&theta_deg) {
            return Err(Error::invalid(format!(
                "elevation must lie in [0, 180], got {theta_deg}"
            )));
        }
        Ok(DoA {
            theta_deg,
            phi_deg: phi_deg.rem_euclid(360.0),
        })
    }

    /// Azimuth-only constructor for coplanar (theta = 90) scenarios.
    pub fn broadside(phi_deg: f64) -> Result<Self> {
        DoA::new(90.0, phi_deg)
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta_deg
    }

    pub fn phi_deg(&self) -> f64 {
        self.phi_deg
    }
}

/// Direction cosines (mu, nu, xi) of the incoming wavefront.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionCosines {
    pub mu: f64,
    pub nu: f64,
    pub xi: f64,
}

/// mu = cos(phi) sin(theta), nu = sin(phi) sin(theta), xi = cos(theta).
pub fn direction_vector(doa: DoA) -> DirectionCosines {
    let st = sin_deg(doa.theta_deg);
    DirectionCosines {
        mu: cos_deg(doa.phi_deg) * st,
        nu: sin_deg(doa.phi_deg) * st,
        xi: cos_deg(doa.theta_deg),
    }
}

/// Angles recovered from direction cosines. At zenith (mu = nu = 0) the
/// azimuth is undefined; it is reported as 0 with the degenerate flag set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveredDoa {
    pub doa: DoA,
    pub azimuth_degenerate: bool,
}

/// Invert [`direction_vector`]. The quadrant of the azimuth is resolved from
/// the signs of (mu, nu); elevation comes from xi alone.
pub fn doa_from_cosines(dc: &DirectionCosines) -> Result<RecoveredDoa> {
    let norm = (dc.mu * dc.mu + dc.nu * dc.nu + dc.xi * dc.xi).sqrt();
    if !(norm.is_finite()) || (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "direction cosines must be unit length, |.| = {norm}"
        )));
    }
    let theta_deg = dc.xi.clamp(-1.0, 1.0).acos().to_degrees();
    let planar = (dc.mu * dc.mu + dc.nu * dc.nu).sqrt();
    if planar < 1e-12 {
        return Ok(RecoveredDoa {
            doa: DoA::new(theta_deg, 0.0)?,
            azimuth_degenerate: true,
        });
    }
    let phi_deg = dc.nu.atan2(dc.mu).to_degrees();
    Ok(RecoveredDoa {
        doa: DoA::new(theta_deg, phi_deg)?,
        azimuth_degenerate: false,
    })
}

/// Exponent sign of the steering phase. `Negative` is normative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseSign {
    Negative,
    Positive,
}

impl PhaseSign {
    fn factor(self) -> f64 {
        match self {
            PhaseSign::Negative => -1.0,
            PhaseSign::Positive => 1.0,
        }
    }
}

pub(crate) fn steering_from_positions(
    positions: &[[f64; 3]],
    doa: DoA,
    sign: PhaseSign,
) -> Vec<C64> {
    let dc = direction_vector(doa);
    let s = sign.factor() * 2.0 * std::f64::consts::PI;
    positions
        .iter()
        .map(|p| {
            let phase = s * (p[0] * dc.mu + p[1] * dc.nu + p[2] * dc.xi);
            Complex64::from_polar(1.0, phase)
        })
        .collect()
}

pub(crate) fn steering_derivatives_from_positions(
    positions: &[[f64; 3]],
    doa: DoA,
    sign: PhaseSign,
) -> (Vec<C64>, Vec<C64>) {
    let a = steering_from_positions(positions, doa, sign);
    let st = sin_deg(doa.theta_deg);
    let ct = cos_deg(doa.theta_deg);
    let sp = sin_deg(doa.phi_deg);
    let cp = cos_deg(doa.phi_deg);
    // dr/dtheta and dr/dphi, per radian.
    let drt = [cp * ct, sp * ct, -st];
    let drp = [-sp * st, cp * st, 0.0];
    let s = sign.factor() * 2.0 * std::f64::consts::PI;
    let mut dth = Vec::with_capacity(a.len());
    let mut dph = Vec::with_capacity(a.len());
    for (p, am) in positions.iter().zip(&a) {
        let gt = s * (p[0] * drt[0] + p[1] * drt[1] + p[2] * drt[2]);
        let gp = s * (p[0] * drp[0] + p[1] * drp[1] + p[2] * drp[2]);
        dth.push(Complex64::new(0.0, gt) * am);
        dph.push(Complex64::new(0.0, gp) * am);
    }
    (dth, dph)
}

/// Steering vector of the array toward `doa`, normative sign convention.
pub fn steering_vector(geometry: &ArrayGeometry, doa: DoA) -> Vec<C64> {
    steering_from_positions(geometry.positions(), doa, PhaseSign::Negative)
}

pub fn steering_vector_signed(geometry: &ArrayGeometry, doa: DoA, sign: PhaseSign) -> Vec<C64> {
    steering_from_positions(geometry.positions(), doa, sign)
}

/// Analytic partials of the steering vector w.r.t. elevation and azimuth,
/// in radians.
pub fn steering_derivatives(geometry: &ArrayGeometry, doa: DoA) -> (Vec<C64>, Vec<C64>) {
    steering_derivatives_from_positions(geometry.positions(), doa, PhaseSign::Negative)
}

/// M x L received data block plus the SNR it was generated at (when known).
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: CMat,
    snr_db: Option<f64>,
}

impl SnapshotMatrix {
    pub fn data(&self) -> &CMat {
        &self.data
    }

    pub fn m(&self) -> usize {
        self.data.rows()
    }

    pub fn snapshots(&self) -> usize {
        self.data.cols()
    }

    pub fn snr_db(&self) -> Option<f64> {
        self.snr_db
    }

    /// Rows restricted to the given antenna indices.
    pub fn restrict_rows(&self, indices: &[usize]) -> SnapshotMatrix {
        let l = self.data.cols();
        let mut out = CMat::zeros(indices.len(), l);
        for (r, &i) in indices.iter().enumerate() {
            for c in 0..l {
                out[(r, c)] = self.data[(i, c)];
            }
        }
        SnapshotMatrix {
            data: out,
            snr_db: self.snr_db,
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_record(w, SNAPSHOT_MAGIC, &self.data)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let data = read_record(r, SNAPSHOT_MAGIC, false)?;
        Ok(SnapshotMatrix { data, snr_db: None })
    }
}

/// Hermitian M x M sample covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCovariance {
    matrix: CMat,
}

impl SampleCovariance {
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn m(&self) -> usize {
        self.matrix.rows()
    }

    pub fn from_matrix(matrix: CMat) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::invalid("covariance must be square"));
        }
        let cov = SampleCovariance { matrix };
        cov.validate()?;
        Ok(cov)
    }

    /// Check the Hermitian and positive-semidefinite invariants.
    pub fn validate(&self) -> Result<()> {
        let defect = self.matrix.hermitian_defect();
        if defect > 1e-10 {
            return Err(Error::Numeric(format!(
                "covariance not Hermitian, defect {defect}"
            )));
        }
        let trace = self.matrix.trace().re;
        if !self.matrix.is_psd_within(1e-8 * trace.max(1e-300)) {
            return Err(Error::Numeric(
                "covariance not positive semidefinite".into(),
            ));
        }
        Ok(())
    }

    pub fn principal_submatrix(&self, indices: &[usize]) -> CMat {
        self.matrix.principal_submatrix(indices)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        write_record(w, COVARIANCE_MAGIC, &self.matrix)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let matrix = read_record(r, COVARIANCE_MAGIC, true)?;
        SampleCovariance::from_matrix(matrix)
    }
}

/// Single-source snapshots: `Y = a(doa) s^T + N` with circularly symmetric
/// complex normal signal and noise. Deterministic for a fixed rng state.
pub fn generate_snapshots<R: Rng>(
    geometry: &ArrayGeometry,
    doa: DoA,
    l: usize,
    sigma_s2: f64,
    sigma_n2: f64,
    rng: &mut R,
) -> Result<SnapshotMatrix> {
    if l == 0 {
        return Err(Error::invalid("snapshot count must be >= 1"));
    }
    if !(sigma_s2 > 0.0) || !(sigma_n2 >= 0.0) {
        return Err(Error::invalid(
            "signal power must be positive and noise power nonnegative",
        ));
    }
    let m = geometry.len();
    let a = steering_vector(geometry, doa);
    let s_scale = (sigma_s2 / 2.0).sqrt();
    let n_scale = (sigma_n2 / 2.0).sqrt();
    let mut data = CMat::zeros(m, l);
    for col in 0..l {
        let sr: f64 = rng.sample(StandardNormal);
        let si: f64 = rng.sample(StandardNormal);
        let s = Complex64::new(sr * s_scale, si * s_scale);
        for row in 0..m {
            let nr: f64 = rng.sample(StandardNormal);
            let ni: f64 = rng.sample(StandardNormal);
            data[(row, col)] = a[row] * s + Complex64::new(nr * n_scale, ni * n_scale);
        }
    }
    let snr_db = if sigma_n2 > 0.0 {
        Some(10.0 * (sigma_s2 / sigma_n2).log10())
    } else {
        None
    };
    Ok(SnapshotMatrix { data, snr_db })
}

/// `(1/L) Y Y^H`, Hermitian by construction (upper triangle mirrored).
pub fn sample_covariance(y: &SnapshotMatrix) -> SampleCovariance {
    let m = y.m();
    let l = y.snapshots();
    let inv_l = 1.0 / l as f64;
    let mut r = CMat::zeros(m, m);
    for i in 0..m {
        let row_i = y.data.row(i);
        for j in i..m {
            let row_j = y.data.row(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in row_i.iter().zip(row_j) {
                acc += a * b.conj();
            }
            acc *= inv_l;
            r[(i, j)] = acc;
            if i != j {
                r[(j, i)] = acc.conj();
            }
        }
    }
    SampleCovariance { matrix: r }
}

/// Three real M x M feature channels of a covariance: phase, real part,
/// imaginary part. Channel 0 entries lie in (-pi, pi].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    m: usize,
    channels: [Vec<f64>; 3],
}

impl FeatureTensor {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    /// Channels concatenated in order (phase, real, imag), 3*M*M values.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * self.m * self.m);
        for ch in &self.channels {
            out.extend_from_slice(ch);
        }
        out
    }

    pub fn from_flat(m: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != 3 * m * m {
            return Err(Error::invalid(format!(
                "feature vector length {} does not match 3*{m}^2",
                flat.len()
            )));
        }
        let mm = m * m;
        Ok(FeatureTensor {
            m,
            channels: [
                flat[..mm].to_vec(),
                flat[mm..2 * mm].to_vec(),
                flat[2 * mm..].to_vec(),
            ],
        })
    }
}

pub fn extract_features(r: &SampleCovariance) -> FeatureTensor {
    let m = r.m();
    let mut phase = Vec::with_capacity(m * m);
    let mut re = Vec::with_capacity(m * m);
    let mut im = Vec::with_capacity(m * m);
    for v in r.matrix.data() {
        let mut ang = v.im.atan2(v.re);
        if ang == -std::f64::consts::PI {
            ang = std::f64::consts::PI;
        }
        phase.push(ang);
        re.push(v.re);
        im.push(v.im);
    }
    FeatureTensor {
        m,
        channels: [phase, re, im],
    }
}

fn write_record<W: Write>(w: &mut W, magic: &[u8; 4], m: &CMat) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&[RECORD_VERSION])?;
    w.write_all(&(m.rows() as u32).to_le_bytes())?;
    w.write_all(&(m.cols() as u32).to_le_bytes())?;
    for v in m.data() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_record<R: Read>(r: &mut R, magic: &[u8; 4], square: bool) -> Result<CMat> {
    let mut head = [0u8; 4];
    r.read_exact(&mut head)?;
    if &head != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            head, magic
        )));
    }
    let mut ver = [0u8; 1];
    r.read_exact(&mut ver)?;
    if ver[0] != RECORD_VERSION {
        return Err(Error::Format(format!("unsupported record version {}", ver[0])));
    }
    let mut dim = [0u8; 4];
    r.read_exact(&mut dim)?;
    let rows = u32::from_le_bytes(dim) as usize;
    r.read_exact(&mut dim)?;
    let cols = u32::from_le_bytes(dim) as usize;
    if rows == 0 || cols == 0 || (square && rows != cols) {
        return Err(Error::Format(format!("bad record dims {rows}x{cols}")));
    }
    let mut data = Vec::with_capacity(rows * cols);
    let mut buf = [0u8; 16];
    for _ in 0..rows * cols {
        r.read_exact(&mut buf)?;
        let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
        let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::Format("non-finite entry in record".into()));
        }
        data.push(Complex64::new(re, im));
    }
    Ok(CMat::from_rows(rows, cols, data))
}
