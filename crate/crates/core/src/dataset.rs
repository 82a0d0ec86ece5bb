//! Labeled training-set construction.
//!
//! For each sampled direction and realization, simulate a full-array
//! snapshot block, form the sample covariance, label the sample with the
//! class id of the bound-minimizing K-of-M subarray (evaluated on the
//! principal submatrices of that same sample covariance), and emit the
//! covariance feature channels as the input. Sample order is SNR-major,
//! then direction, then realization.

use std::io::{Read, Write};
use std::path::Path;

use crate::crb::{best_subarray, reduce_classes, BoundKind, CovSource};
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, ClassSet, Subarray};
use crate::rng::substream;
use crate::signal::{extract_features, generate_snapshots, sample_covariance, DoA, FeatureTensor};
use rand::seq::SliceRandom;
use rand::Rng;

const DATASET_MAGIC: &[u8; 4] = b"CGSD";
const DATASET_VERSION: u8 = 1;

/// Noise floor used for labeling when a noise-free SNR is requested: the
/// bound is proportional to `sigma_n^2` with all subarrays tied at zero in
/// the exact limit, so labeling uses a 120 dB floor whose argmin equals the
/// limit argmin.
const NOISE_FREE_LABEL_FLOOR: f64 = 1e-12;

/// How training/test directions are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleSampling {
    /// `count` azimuths uniformly gridded over [0, 360) at fixed elevation.
    AzimuthGrid { theta_deg: f64, count: usize },
    /// `count` azimuths drawn uniformly at random at fixed elevation.
    AzimuthRandom { theta_deg: f64, count: usize },
    /// Uniform elevation x azimuth grid (elevation inclusive of endpoints).
    Grid2d {
        theta_min_deg: f64,
        theta_max_deg: f64,
        theta_count: usize,
        phi_count: usize,
    },
    /// Uniform random draws over the elevation interval and full azimuth.
    Random2d {
        theta_min_deg: f64,
        theta_max_deg: f64,
        count: usize,
    },
}

impl AngleSampling {
    pub fn count(&self) -> usize {
        match self {
            AngleSampling::AzimuthGrid { count, .. }
            | AngleSampling::AzimuthRandom { count, .. }
            | AngleSampling::Random2d { count, .. } => *count,
            AngleSampling::Grid2d {
                theta_count,
                phi_count,
                ..
            } => theta_count * phi_count,
        }
    }

    /// Whether both angles vary (drives the bound choice default).
    pub fn is_two_dimensional(&self) -> bool {
        matches!(
            self,
            AngleSampling::Grid2d { .. } | AngleSampling::Random2d { .. }
        )
    }

    pub fn directions<R: Rng>(&self, rng: &mut R) -> Result<Vec<DoA>> {
        match *self {
            AngleSampling::AzimuthGrid { theta_deg, count } => {
                if count == 0 {
                    return Err(Error::invalid("direction count must be >= 1"));
                }
                (0..count)
                    .map(|p| DoA::new(theta_deg, 360.0 * p as f64 / count as f64))
                    .collect()
            }
            AngleSampling::AzimuthRandom { theta_deg, count } => {
                if count == 0 {
                    return Err(Error::invalid("direction count must be >= 1"));
                }
                (0..count)
                    .map(|_| DoA::new(theta_deg, rng.gen_range(0.0..360.0)))
                    .collect()
            }
            AngleSampling::Grid2d {
                theta_min_deg,
                theta_max_deg,
                theta_count,
                phi_count,
            } => {
                if theta_count == 0 || phi_count == 0 {
                    return Err(Error::invalid("grid counts must be >= 1"));
                }
                if theta_max_deg < theta_min_deg {
                    return Err(Error::invalid("elevation range is inverted"));
                }
                let mut out = Vec::with_capacity(theta_count * phi_count);
                for ti in 0..theta_count {
                    let theta = if theta_count == 1 {
                        theta_min_deg
                    } else {
                        theta_min_deg
                            + (theta_max_deg - theta_min_deg) * ti as f64
                                / (theta_count - 1) as f64
                    };
                    for pi in 0..phi_count {
                        out.push(DoA::new(theta, 360.0 * pi as f64 / phi_count as f64)?);
                    }
                }
                Ok(out)
            }
            AngleSampling::Random2d {
                theta_min_deg,
                theta_max_deg,
                count,
            } => {
                if count == 0 {
                    return Err(Error::invalid("direction count must be >= 1"));
                }
                if theta_max_deg < theta_min_deg {
                    return Err(Error::invalid("elevation range is inverted"));
                }
                (0..count)
                    .map(|_| {
                        let theta = if theta_max_deg > theta_min_deg {
                            rng.gen_range(theta_min_deg..theta_max_deg)
                        } else {
                            theta_min_deg
                        };
                        DoA::new(theta, rng.gen_range(0.0..360.0))
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub geometry: ArrayGeometry,
    pub k: usize,
    /// Snapshots per covariance estimate.
    pub l: usize,
    /// Signal/noise realizations per direction.
    pub t: usize,
    pub angles: AngleSampling,
    /// Training SNR levels in dB; `f64::INFINITY` means noise-free.
    pub snr_db: Vec<f64>,
    pub bound: BoundKind,
    pub sigma_s2: f64,
    pub seed: u64,
    /// Optional random class dropout: keep this fraction of the Q candidate
    /// subarrays (at least one), drawn once per dataset.
    pub class_subsample: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub m: usize,
    pub k: usize,
    pub l: usize,
    pub p: usize,
    pub t: usize,
    pub snr_db: Vec<f64>,
    pub bound: BoundKind,
    pub seed: u64,
    pub geometry: ArrayGeometry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: FeatureTensor,
    /// Full lexicographic class id of the bound-optimal subarray.
    pub label: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub meta: DatasetMeta,
    pub class_set: ClassSet,
    pub samples: Vec<Sample>,
}

impl LabeledDataset {
    /// Samples per SNR level (J = T * P).
    pub fn samples_per_snr(&self) -> usize {
        self.meta.p * self.meta.t
    }

    pub fn snr_of_sample(&self, index: usize) -> f64 {
        self.meta.snr_db[index / self.samples_per_snr()]
    }

    /// (class id, count) pairs in reduced-class order.
    pub fn label_histogram(&self) -> Vec<(u64, usize)> {
        let reduced = self.class_set.reduced().unwrap_or(&[]);
        let mut counts: Vec<(u64, usize)> = reduced.iter().map(|&c| (c, 0)).collect();
        for s in &self.samples {
            if let Some(slot) = counts.iter_mut().find(|(c, _)| *c == s.label) {
                slot.1 += 1;
            }
        }
        counts
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut file)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let reduced = self
            .class_set
            .reduced()
            .ok_or_else(|| Error::invalid("dataset class set has no reduced list"))?;
        w.write_all(DATASET_MAGIC)?;
        w.write_all(&[DATASET_VERSION])?;
        w.write_all(&(self.meta.m as u32).to_le_bytes())?;
        w.write_all(&(self.meta.k as u32).to_le_bytes())?;
        w.write_all(&self.class_set.total().to_le_bytes())?;
        w.write_all(&(reduced.len() as u32).to_le_bytes())?;
        w.write_all(&(self.meta.l as u32).to_le_bytes())?;
        w.write_all(&(self.meta.p as u32).to_le_bytes())?;
        w.write_all(&(self.meta.t as u32).to_le_bytes())?;
        w.write_all(&(self.meta.snr_db.len() as u32).to_le_bytes())?;
        for &snr in &self.meta.snr_db {
            w.write_all(&snr.to_le_bytes())?;
        }
        w.write_all(&self.meta.seed.to_le_bytes())?;
        w.write_all(&[match self.meta.bound {
            BoundKind::Crb1d => 1u8,
            BoundKind::Crb2d => 2u8,
        }])?;
        let doc = self.meta.geometry.to_document();
        w.write_all(&(doc.len() as u32).to_le_bytes())?;
        w.write_all(doc.as_bytes())?;
        for &class_id in reduced {
            let sub = self.class_set.subarray(class_id)?;
            for &idx in sub.indices() {
                w.write_all(&(idx as u32).to_le_bytes())?;
            }
        }
        w.write_all(&(self.samples.len() as u64).to_le_bytes())?;
        for s in &self.samples {
            for &v in &s.features.flat() {
                w.write_all(&v.to_le_bytes())?;
            }
            let label = u32::try_from(s.label)
                .map_err(|_| Error::Format(format!("label {} exceeds u32", s.label)))?;
            w.write_all(&label.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DATASET_MAGIC {
            return Err(Error::Format(format!("bad dataset magic {magic:?}")));
        }
        let mut ver = [0u8; 1];
        r.read_exact(&mut ver)?;
        if ver[0] != DATASET_VERSION {
            return Err(Error::Format(format!(
                "unsupported dataset version {}",
                ver[0]
            )));
        }
        let m = read_u32(r)? as usize;
        let k = read_u32(r)? as usize;
        let q = read_u64(r)?;
        let qbar = read_u32(r)? as usize;
        let l = read_u32(r)? as usize;
        let p = read_u32(r)? as usize;
        let t = read_u32(r)? as usize;
        let n_snr = read_u32(r)? as usize;
        let mut snr_db = Vec::with_capacity(n_snr);
        for _ in 0..n_snr {
            snr_db.push(read_f64(r)?);
        }
        let seed = read_u64(r)?;
        let mut bound_tag = [0u8; 1];
        r.read_exact(&mut bound_tag)?;
        let bound = match bound_tag[0] {
            1 => BoundKind::Crb1d,
            2 => BoundKind::Crb2d,
            other => return Err(Error::Format(format!("bad bound tag {other}"))),
        };
        let doc_len = read_u32(r)? as usize;
        let mut doc = vec![0u8; doc_len];
        r.read_exact(&mut doc)?;
        let geometry = ArrayGeometry::from_document(
            std::str::from_utf8(&doc).map_err(|e| Error::Format(e.to_string()))?,
        )?;
        if geometry.len() != m {
            return Err(Error::Format("geometry does not match header M".into()));
        }
        let mut class_set = ClassSet::full(m, k)?;
        if class_set.total() != q {
            return Err(Error::Format("header Q does not match C(M, K)".into()));
        }
        let mut reduced = Vec::with_capacity(qbar);
        for _ in 0..qbar {
            let mut indices = Vec::with_capacity(k);
            for _ in 0..k {
                indices.push(read_u32(r)? as usize);
            }
            let sub = Subarray::new(indices, m)
                .map_err(|e| Error::Format(format!("bad class table row: {e}")))?;
            reduced.push(sub.class_id(m));
        }
        class_set
            .set_reduced(reduced.clone())
            .map_err(|e| Error::Format(format!("bad class table: {e}")))?;
        let known: std::collections::HashSet<u64> = reduced.iter().copied().collect();
        let n_samples = read_u64(r)? as usize;
        let mut samples = Vec::with_capacity(n_samples.min(1 << 24));
        let feat_len = 3 * m * m;
        let mut flat = vec![0.0f64; feat_len];
        for _ in 0..n_samples {
            for v in &mut flat {
                *v = read_f64(r)?;
            }
            let label = read_u32(r)? as u64;
            if !known.contains(&label) {
                return Err(Error::Format(format!(
                    "sample label {label} missing from class table"
                )));
            }
            samples.push(Sample {
                features: FeatureTensor::from_flat(m, &flat)?,
                label,
            });
        }
        Ok(LabeledDataset {
            meta: DatasetMeta {
                m,
                k,
                l,
                p,
                t,
                snr_db,
                bound,
                seed,
                geometry,
            },
            class_set,
            samples,
        })
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Execute the full generation procedure: sample directions, simulate T
/// realizations per direction per SNR level, label each sample covariance by
/// the exhaustive bound argmin, and collect the reduced class set.
pub fn build_dataset(cfg: &DatasetConfig) -> Result<LabeledDataset> {
    let m = cfg.geometry.len();
    if cfg.k == 0 || cfg.k >= m {
        return Err(Error::invalid(format!(
            "dataset needs 1 <= K < M, got K = {}, M = {m}",
            cfg.k
        )));
    }
    if cfg.t == 0 || cfg.l == 0 {
        return Err(Error::invalid("T and L must be >= 1"));
    }
    if cfg.snr_db.is_empty() {
        return Err(Error::invalid("at least one SNR level required"));
    }
    if !(cfg.sigma_s2 > 0.0) {
        return Err(Error::invalid("signal power must be positive"));
    }

    let mut angle_rng = substream(cfg.seed, "angles", 0);
    let directions = cfg.angles.directions(&mut angle_rng)?;
    let p = directions.len();

    let candidates: Option<Vec<u64>> = match cfg.class_subsample {
        None => None,
        Some(frac) => {
            if !(frac > 0.0 && frac <= 1.0) {
                return Err(Error::invalid("class_subsample must lie in (0, 1]"));
            }
            let q = crate::geometry::binomial(m, cfg.k);
            let keep = ((q as f64 * frac).round() as u64).clamp(1, q);
            let mut ids: Vec<u64> = (0..q).collect();
            let mut rng = substream(cfg.seed, "classes", 0);
            ids.shuffle(&mut rng);
            let mut kept: Vec<u64> = ids.into_iter().take(keep as usize).collect();
            kept.sort_unstable();
            Some(kept)
        }
    };

    let mut samples = Vec::with_capacity(cfg.snr_db.len() * p * cfg.t);
    let mut labels = Vec::with_capacity(cfg.snr_db.len() * p * cfg.t);
    for (si, &snr) in cfg.snr_db.iter().enumerate() {
        let sigma_n2 = if snr.is_finite() {
            cfg.sigma_s2 * 10f64.powf(-snr / 10.0)
        } else {
            0.0
        };
        let label_n2 = if sigma_n2 > 0.0 {
            sigma_n2
        } else {
            cfg.sigma_s2 * NOISE_FREE_LABEL_FLOOR
        };
        for (pi, &doa) in directions.iter().enumerate() {
            for i in 0..cfg.t {
                let stream = ((si * p + pi) * cfg.t + i) as u64;
                let mut rng = substream(cfg.seed, "dataset", stream);
                let y = generate_snapshots(
                    &cfg.geometry,
                    doa,
                    cfg.l,
                    cfg.sigma_s2,
                    sigma_n2,
                    &mut rng,
                )?;
                let cov = sample_covariance(&y);
                let sel = best_subarray(
                    &cfg.geometry,
                    cfg.k,
                    doa,
                    CovSource::Sample(&cov),
                    cfg.bound,
                    cfg.sigma_s2,
                    label_n2,
                    cfg.l,
                    candidates.as_deref(),
                )?;
                labels.push(sel.class_id);
                samples.push(Sample {
                    features: extract_features(&cov),
                    label: sel.class_id,
                });
            }
        }
    }

    let mut class_set = ClassSet::full(m, cfg.k)?;
    class_set.set_reduced(reduce_classes(&labels))?;

    Ok(LabeledDataset {
        meta: DatasetMeta {
            m,
            k: cfg.k,
            l: cfg.l,
            p,
            t: cfg.t,
            snr_db: cfg.snr_db.clone(),
            bound: cfg.bound,
            seed: cfg.seed,
            geometry: cfg.geometry.clone(),
        },
        class_set,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_uca;
    use crate::rng::substream;

    fn small_cfg() -> DatasetConfig {
        DatasetConfig {
            geometry: make_uca(6, 0.5).unwrap(),
            k: 3,
            l: 24,
            t: 2,
            angles: AngleSampling::AzimuthGrid {
                theta_deg: 90.0,
                count: 5,
            },
            snr_db: vec![20.0],
            bound: BoundKind::Crb1d,
            sigma_s2: 1.0,
            seed: 7,
            class_subsample: None,
        }
    }

    #[test]
    fn dataset_shape_and_order() {
        let ds = build_dataset(&small_cfg()).unwrap();
        assert_eq!(ds.samples.len(), 10); // J = T * P per SNR level
        assert_eq!(ds.samples_per_snr(), 10);
        assert_eq!(ds.meta.p, 5);
        let reduced = ds.class_set.reduced().unwrap();
        assert!(!reduced.is_empty());
        for s in &ds.samples {
            assert!(reduced.contains(&s.label));
        }
    }

    #[test]
    fn same_seed_gives_identical_bytes() {
        let a = build_dataset(&small_cfg()).unwrap();
        let b = build_dataset(&small_cfg()).unwrap();
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        a.write_to(&mut ba).unwrap();
        b.write_to(&mut bb).unwrap();
        assert_eq!(ba, bb);
        let mut cfg = small_cfg();
        cfg.seed = 8;
        let c = build_dataset(&cfg).unwrap();
        let mut bc = Vec::new();
        c.write_to(&mut bc).unwrap();
        assert_ne!(ba, bc);
    }

    #[test]
    fn noise_free_labels_match_analytic_argmin() {
        let mut cfg = small_cfg();
        cfg.snr_db = vec![f64::INFINITY];
        cfg.t = 1;
        // An asymmetric geometry: the UCA has reflection-equivalent subarray
        // pairs whose bounds tie to ~1e-7, below the conditioning noise of
        // inverting a ridged rank-1 covariance, so either route may pick
        // either twin there. Random positions keep the argmin well separated.
        cfg.geometry = crate::geometry::make_rda(2, 3, 0.5, 0.15, 40).unwrap();
        cfg.angles = AngleSampling::AzimuthRandom {
            theta_deg: 90.0,
            count: 2,
        };
        let ds = build_dataset(&cfg).unwrap();
        assert_eq!(ds.samples.len(), 2);
        let mut rng = substream(cfg.seed, "angles", 0);
        let directions = cfg.angles.directions(&mut rng).unwrap();
        for (s, doa) in ds.samples.iter().zip(&directions) {
            let oracle = best_subarray(
                &cfg.geometry,
                cfg.k,
                *doa,
                CovSource::Analytic,
                cfg.bound,
                1.0,
                1e-12,
                cfg.l,
                None,
            )
            .unwrap();
            assert_eq!(s.label, oracle.class_id);
        }
    }

    #[test]
    fn file_round_trip_preserves_everything() {
        let ds = build_dataset(&small_cfg()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.cgsd");
        ds.save(&path).unwrap();
        let back = LabeledDataset::load(&path).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn loader_rejects_corruption() {
        let ds = build_dataset(&small_cfg()).unwrap();
        let mut bytes = Vec::new();
        ds.write_to(&mut bytes).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'Z';
        assert!(LabeledDataset::read_from(&mut bad.as_slice()).is_err());
        let mut truncated = bytes.clone();
        truncated.truncate(bytes.len() - 7);
        assert!(LabeledDataset::read_from(&mut truncated.as_slice()).is_err());
    }

    #[test]
    fn class_subsample_restricts_labels() {
        let mut cfg = small_cfg();
        cfg.class_subsample = Some(0.25);
        let ds = build_dataset(&cfg).unwrap();
        let q = crate::geometry::binomial(6, 3);
        let keep = ((q as f64 * 0.25).round() as usize).max(1);
        let reduced = ds.class_set.reduced().unwrap();
        assert!(reduced.len() <= keep);
    }

    #[test]
    fn multi_snr_blocks_are_ordered() {
        let mut cfg = small_cfg();
        cfg.snr_db = vec![20.0, 10.0];
        let ds = build_dataset(&cfg).unwrap();
        assert_eq!(ds.samples.len(), 20);
        assert_eq!(ds.snr_of_sample(0), 20.0);
        assert_eq!(ds.snr_of_sample(10), 10.0);
        let hist = ds.label_histogram();
        let total: usize = hist.iter().map(|(_, c)| c).sum();
        assert_eq!(total, 20);
    }
}

