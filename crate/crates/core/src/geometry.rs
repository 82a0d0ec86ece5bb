//! Array geometries, K-of-M subarray enumeration, and class sets.
//!
//! Antenna positions are stored in carrier-wavelength units so steering
//! phases never divide by the wavelength; the wavelength itself is kept only
//! for reporting. Subarrays are identified by their lexicographic rank in
//! the full enumeration, which doubles as the classification label.

use crate::error::{Error, Result};
use crate::rng::substream;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    Ula,
    Uca,
    Rda,
}

impl GeometryKind {
    pub fn tag(self) -> &'static str {
        match self {
            GeometryKind::Ula => "ula",
            GeometryKind::Uca => "uca",
            GeometryKind::Rda => "rda",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "ula" => Ok(GeometryKind::Ula),
            "uca" => Ok(GeometryKind::Uca),
            "rda" => Ok(GeometryKind::Rda),
            other => Err(Error::Format(format!("unknown geometry kind `{other}`"))),
        }
    }
}

/// Antenna positions (wavelength units) plus carrier wavelength (meters).
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<[f64; 3]>,
    wavelength: f64,
    kind: GeometryKind,
}

impl ArrayGeometry {
    pub fn new(positions: Vec<[f64; 3]>, wavelength: f64, kind: GeometryKind) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::invalid(format!(
                "array needs at least 2 elements, got {}",
                positions.len()
            )));
        }
        if !(wavelength > 0.0) {
            return Err(Error::invalid("wavelength must be positive"));
        }
        for (i, p) in positions.iter().enumerate() {
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::invalid(format!("non-finite coordinate at antenna {i}")));
            }
        }
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                if positions[i] == positions[j] {
                    return Err(Error::invalid(format!(
                        "antennas {i} and {j} share the same position"
                    )));
                }
            }
        }
        Ok(ArrayGeometry {
            positions,
            wavelength,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn with_wavelength(mut self, wavelength: f64) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::invalid("wavelength must be positive"));
        }
        self.wavelength = wavelength;
        Ok(self)
    }

    /// Structured text document: kind tag, element count, wavelength, and an
    /// M-row position table at full double precision.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("geometry {}\n", self.kind.tag()));
        out.push_str(&format!("elements {}\n", self.len()));
        out.push_str(&format!("wavelength {:.16e}\n", self.wavelength));
        out.push_str("positions\n");
        for p in &self.positions {
            out.push_str(&format!("{:.16e} {:.16e} {:.16e}\n", p[0], p[1], p[2]));
        }
        out
    }

    pub fn from_document(doc: &str) -> Result<Self> {
        let mut lines = doc.lines().filter(|l| !l.trim().is_empty());
        let kind_line = lines
            .next()
            .ok_or_else(|| Error::Format("empty geometry document".into()))?;
        let kind = match kind_line.strip_prefix("geometry ") {
            Some(tag) => GeometryKind::from_tag(tag.trim())?,
            None => return Err(Error::Format("missing `geometry` header".into())),
        };
        let m: usize = parse_field(lines.next(), "elements")?;
        let wavelength: f64 = parse_field(lines.next(), "wavelength")?;
        match lines.next() {
            Some("positions") => {}
            _ => return Err(Error::Format("missing `positions` header".into())),
        }
        let mut positions = Vec::with_capacity(m);
        for _ in 0..m {
            let line = lines
                .next()
                .ok_or_else(|| Error::Format("truncated position table".into()))?;
            let mut cols = line.split_whitespace();
            let mut p = [0.0f64; 3];
            for v in &mut p {
                *v = cols
                    .next()
                    .ok_or_else(|| Error::Format("position row needs 3 columns".into()))?
                    .parse()
                    .map_err(|e| Error::Format(format!("bad coordinate: {e}")))?;
            }
            if cols.next().is_some() {
                return Err(Error::Format("position row has extra columns".into()));
            }
            positions.push(p);
        }
        if lines.next().is_some() {
            return Err(Error::Format("trailing content after position table".into()));
        }
        ArrayGeometry::new(positions, wavelength, kind)
    }
}

fn parse_field<T: std::str::FromStr>(line: Option<&str>, name: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let line = line.ok_or_else(|| Error::Format(format!("missing `{name}` line")))?;
    let value = line
        .strip_prefix(name)
        .ok_or_else(|| Error::Format(format!("expected `{name}` line, got `{line}`")))?;
    value
        .trim()
        .parse()
        .map_err(|e| Error::Format(format!("bad `{name}` value: {e}")))
}

/// Uniform linear array along the x axis.
pub fn make_ula(m: usize, spacing: f64) -> Result<ArrayGeometry> {
    if m < 2 {
        return Err(Error::invalid(format!("ULA needs M >= 2, got {m}")));
    }
    if !(spacing > 0.0) {
        return Err(Error::invalid("ULA spacing must be positive"));
    }
    let positions = (0..m)
        .map(|i| [i as f64 * spacing, 0.0, 0.0])
        .collect();
    ArrayGeometry::new(positions, 1.0, GeometryKind::Ula)
}

/// Uniform circular array in the z=0 plane, indexed counter-clockwise with
/// antenna 0 on the +x axis.
///
/// `adjacent_spacing` is the chord between neighboring elements; the radius
/// follows as `spacing / (2 sin(pi/M))`. (Chord rather than arc: the chord is
/// the physical element separation that bounds mutual coupling.)
pub fn make_uca(m: usize, adjacent_spacing: f64) -> Result<ArrayGeometry> {
    if m < 3 {
        return Err(Error::invalid(format!("UCA needs M >= 3, got {m}")));
    }
    if !(adjacent_spacing > 0.0) {
        return Err(Error::invalid("UCA spacing must be positive"));
    }
    let radius = adjacent_spacing / (2.0 * (std::f64::consts::PI / m as f64).sin());
    let positions = (0..m)
        .map(|i| {
            let ang = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            [radius * ang.cos(), radius * ang.sin(), 0.0]
        })
        .collect();
    ArrayGeometry::new(positions, 1.0, GeometryKind::Uca)
}

/// Randomly deployed array: a rows x cols grid with each (x, y) offset by an
/// independent uniform draw in `[-perturb_max, +perturb_max]`. Deterministic
/// for a fixed seed.
pub fn make_rda(
    rows: usize,
    cols: usize,
    spacing: f64,
    perturb_max: f64,
    seed: u64,
) -> Result<ArrayGeometry> {
    if rows * cols < 2 {
        return Err(Error::invalid("RDA needs rows*cols >= 2"));
    }
    if !(spacing > 0.0) {
        return Err(Error::invalid("RDA spacing must be positive"));
    }
    if !(0.0..spacing / 2.0).contains(&perturb_max) {
        return Err(Error::invalid(format!(
            "perturb_max must satisfy 0 <= perturb_max < spacing/2 = {}, got {perturb_max}",
            spacing / 2.0
        )));
    }
    let mut rng = substream(seed, "rda", 0);
    let mut positions = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let dx = if perturb_max > 0.0 {
                rng.gen_range(-perturb_max..=perturb_max)
            } else {
                0.0
            };
            let dy = if perturb_max > 0.0 {
                rng.gen_range(-perturb_max..=perturb_max)
            } else {
                0.0
            };
            positions.push([c as f64 * spacing + dx, r as f64 * spacing + dy, 0.0]);
        }
    }
    ArrayGeometry::new(positions, 1.0, GeometryKind::Rda)
}

/// Strictly increasing antenna indices of one K-of-M subarray, K < M.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subarray {
    indices: Vec<usize>,
}

impl Subarray {
    pub fn new(indices: Vec<usize>, m: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("subarray must not be empty"));
        }
        if indices.len() >= m {
            return Err(Error::invalid(format!(
                "subarray size {} must be < M = {m}",
                indices.len()
            )));
        }
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::invalid("subarray indices must be strictly increasing"));
            }
        }
        if *indices.last().unwrap() >= m {
            return Err(Error::invalid(format!(
                "subarray index {} out of range for M = {m}",
                indices.last().unwrap()
            )));
        }
        Ok(Subarray { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Lexicographic rank of this subarray among all C(M, K) choices.
    pub fn class_id(&self, m: usize) -> u64 {
        let k = self.indices.len();
        let mut rank = 0u64;
        let mut prev: isize = -1;
        for (i, &ci) in self.indices.iter().enumerate() {
            for j in (prev + 1) as usize..ci {
                rank += binomial(m - 1 - j, k - 1 - i);
            }
            prev = ci as isize;
        }
        rank
    }

    /// Inverse of [`Subarray::class_id`].
    pub fn from_class_id(m: usize, k: usize, mut id: u64) -> Result<Self> {
        let total = binomial(m, k);
        if id >= total {
            return Err(Error::invalid(format!(
                "class id {id} out of range, Q = {total}"
            )));
        }
        let mut indices = Vec::with_capacity(k);
        let mut next = 0usize;
        for i in 0..k {
            loop {
                let below = binomial(m - 1 - next, k - 1 - i);
                if id < below {
                    indices.push(next);
                    next += 1;
                    break;
                }
                id -= below;
                next += 1;
            }
        }
        Subarray::new(indices, m)
    }

    /// One-based display form matching the tables in the literature.
    pub fn display_one_based(&self) -> String {
        let parts: Vec<String> = self.indices.iter().map(|i| (i + 1).to_string()).collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// Binomial coefficient; saturates with a panic on u64 overflow, which is far
/// beyond any enumerable problem size here.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul((n - i) as u64)
            .expect("binomial overflow")
            / (i as u64 + 1);
    }
    acc
}

/// Lexicographic enumeration of all K-of-M subarrays.
pub fn enumerate_subarrays(m: usize, k: usize) -> Result<SubarrayEnumerator> {
    if k == 0 || k >= m {
        return Err(Error::invalid(format!(
            "subarray size must satisfy 1 <= K < M, got K = {k}, M = {m}"
        )));
    }
    Ok(SubarrayEnumerator {
        m,
        k,
        next: Some((0..k).collect()),
    })
}

pub struct SubarrayEnumerator {
    m: usize,
    k: usize,
    next: Option<Vec<usize>>,
}

impl Iterator for SubarrayEnumerator {
    type Item = Subarray;

    fn next(&mut self) -> Option<Subarray> {
        let current = self.next.take()?;
        let out = Subarray {
            indices: current.clone(),
        };
        // Advance to the lexicographic successor.
        let mut idx = current;
        let mut i = self.k;
        loop {
            if i == 0 {
                self.next = None;
                break;
            }
            i -= 1;
            if idx[i] < self.m - self.k + i {
                idx[i] += 1;
                for j in (i + 1)..self.k {
                    idx[j] = idx[j - 1] + 1;
                }
                self.next = Some(idx);
                break;
            }
        }
        Some(out)
    }
}

/// Geometry containing only the selected antennas, order preserved.
pub fn restrict(geometry: &ArrayGeometry, subarray: &Subarray) -> Result<ArrayGeometry> {
    let mut positions = Vec::with_capacity(subarray.len());
    for &i in subarray.indices() {
        let p = geometry
            .positions()
            .get(i)
            .ok_or_else(|| Error::invalid(format!("antenna index {i} out of range")))?;
        positions.push(*p);
    }
    ArrayGeometry::new(positions, geometry.wavelength(), geometry.kind())
}

/// The label space: all C(M, K) subarrays in lexicographic order, plus the
/// reduced list of class ids that were actually selected for some direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSet {
    m: usize,
    k: usize,
    reduced: Option<Vec<u64>>,
}

impl ClassSet {
    pub fn full(m: usize, k: usize) -> Result<Self> {
        if k == 0 || k >= m {
            return Err(Error::invalid(format!(
                "class set needs 1 <= K < M, got K = {k}, M = {m}"
            )));
        }
        Ok(ClassSet {
            m,
            k,
            reduced: None,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Q = C(M, K).
    pub fn total(&self) -> u64 {
        binomial(self.m, self.k)
    }

    pub fn subarray(&self, class_id: u64) -> Result<Subarray> {
        Subarray::from_class_id(self.m, self.k, class_id)
    }

    pub fn reduced(&self) -> Option<&[u64]> {
        self.reduced.as_deref()
    }

    pub fn set_reduced(&mut self, ids: Vec<u64>) -> Result<()> {
        let q = self.total();
        let mut seen = std::collections::HashSet::new();
        for &id in &ids {
            if id >= q {
                return Err(Error::invalid(format!("reduced class id {id} >= Q = {q}")));
            }
            if !seen.insert(id) {
                return Err(Error::invalid(format!("duplicate reduced class id {id}")));
            }
        }
        self.reduced = Some(ids);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ula_positions_match_definition() {
        let g = make_ula(2, 0.5).unwrap();
        assert_eq!(g.positions(), &[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]]);

        let g = make_ula(10, 0.5).unwrap();
        assert_eq!(g.len(), 10);
        let aperture = g.positions()[9][0] - g.positions()[0][0];
        assert!((aperture - 4.5).abs() < 1e-15);
        assert!(g.positions().iter().all(|p| p[1] == 0.0 && p[2] == 0.0));
    }

    #[test]
    fn ula_rejects_degenerate_input() {
        assert!(make_ula(1, 0.5).is_err());
        assert!(make_ula(4, 0.0).is_err());
        assert!(make_ula(4, -0.5).is_err());
    }

    #[test]
    fn uca_radius_formula() {
        let g = make_uca(4, 0.5).unwrap();
        let r = (g.positions()[0][0].powi(2) + g.positions()[0][1].powi(2)).sqrt();
        assert!((r - 0.5 / (2.0 * (std::f64::consts::PI / 4.0).sin())).abs() < 1e-15);
        assert!((r - 0.35355339059327373).abs() < 1e-12);

        // Independent evaluation of 0.5 / (2 sin(pi/20)).
        let g = make_uca(20, 0.5).unwrap();
        let r = (g.positions()[0][0].powi(2) + g.positions()[0][1].powi(2)).sqrt();
        assert!((r - 1.5981133053749155).abs() < 1e-12);
    }

    #[test]
    fn uca_adjacent_chords_equal_spacing() {
        for m in [3usize, 4, 10, 20, 45] {
            let g = make_uca(m, 0.5).unwrap();
            for i in 0..m {
                let a = g.positions()[i];
                let b = g.positions()[(i + 1) % m];
                let chord =
                    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
                assert!(
                    (chord - 0.5).abs() / 0.5 < 1e-12,
                    "chord {chord} off for M={m}"
                );
            }
        }
    }

    #[test]
    fn uca_rotation_by_sector_maps_position_set_to_itself() {
        let m = 12;
        let g = make_uca(m, 0.5).unwrap();
        let ang = 2.0 * std::f64::consts::PI / m as f64;
        let (c, s) = (ang.cos(), ang.sin());
        for i in 0..m {
            let p = g.positions()[i];
            let rotated = [p[0] * c - p[1] * s, p[0] * s + p[1] * c, p[2]];
            let q = g.positions()[(i + 1) % m];
            assert!((rotated[0] - q[0]).abs() < 1e-12);
            assert!((rotated[1] - q[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn rda_is_seed_reproducible_and_bounded() {
        let a = make_rda(7, 7, 0.5, 0.1, 99).unwrap();
        let b = make_rda(7, 7, 0.5, 0.1, 99).unwrap();
        assert_eq!(a.positions(), b.positions());
        assert_eq!(a.len(), 49);
        let c = make_rda(7, 7, 0.5, 0.1, 100).unwrap();
        assert_ne!(a.positions(), c.positions());
        for (i, p) in a.positions().iter().enumerate() {
            let gx = (i % 7) as f64 * 0.5;
            let gy = (i / 7) as f64 * 0.5;
            assert!((p[0] - gx).abs() <= 0.1 + 1e-12);
            assert!((p[1] - gy).abs() <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn rda_zero_perturbation_is_exact_grid() {
        let g = make_rda(4, 4, 0.5, 0.0, 1).unwrap();
        assert_eq!(g.len(), 16);
        for (i, p) in g.positions().iter().enumerate() {
            assert_eq!(p[0], (i % 4) as f64 * 0.5);
            assert_eq!(p[1], (i / 4) as f64 * 0.5);
        }
    }

    #[test]
    fn rda_rejects_overlapping_perturbation() {
        assert!(make_rda(4, 4, 0.5, 0.25, 1).is_err());
        assert!(make_rda(4, 4, 0.5, 0.3, 1).is_err());
    }

    #[test]
    fn enumeration_counts_match_binomials() {
        assert_eq!(enumerate_subarrays(10, 3).unwrap().count(), 120);
        assert_eq!(enumerate_subarrays(16, 8).unwrap().count(), 12870);
        for m in 2..=12usize {
            for k in 1..m {
                assert_eq!(
                    enumerate_subarrays(m, k).unwrap().count() as u64,
                    binomial(m, k),
                    "M={m} K={k}"
                );
            }
        }
    }

    #[test]
    fn enumeration_is_lexicographic_and_exhaustive_small() {
        let subs: Vec<_> = enumerate_subarrays(3, 2).unwrap().collect();
        assert_eq!(
            subs.iter().map(|s| s.indices().to_vec()).collect::<Vec<_>>(),
            vec![vec![0, 1], vec![0, 2], vec![1, 2]]
        );
    }

    #[test]
    fn enumeration_rejects_bad_k() {
        assert!(enumerate_subarrays(5, 0).is_err());
        assert!(enumerate_subarrays(5, 5).is_err());
        assert!(enumerate_subarrays(5, 6).is_err());
    }

    #[test]
    fn class_id_rank_round_trips() {
        for (m, k) in [(10usize, 4usize), (16, 3), (7, 6)] {
            for (expected, sub) in enumerate_subarrays(m, k).unwrap().enumerate() {
                assert_eq!(sub.class_id(m), expected as u64);
                let back = Subarray::from_class_id(m, k, expected as u64).unwrap();
                assert_eq!(back, sub);
            }
        }
    }

    #[test]
    fn restrict_selects_positions() {
        let g = make_ula(3, 0.5).unwrap();
        let sub = Subarray::new(vec![0, 2], 3).unwrap();
        let r = restrict(&g, &sub).unwrap();
        assert_eq!(r.positions(), &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        assert_eq!(r.wavelength(), g.wavelength());
    }

    #[test]
    fn restrict_covers_every_index_across_enumeration() {
        let g = make_uca(6, 0.5).unwrap();
        let mut seen = vec![false; 6];
        for sub in enumerate_subarrays(6, 2).unwrap() {
            let r = restrict(&g, &sub).unwrap();
            assert_eq!(r.len(), 2);
            for &i in sub.indices() {
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn subarray_rejects_identity_and_malformed_sets() {
        assert!(Subarray::new((0..5).collect(), 5).is_err()); // K = M
        assert!(Subarray::new(vec![2, 1], 5).is_err());
        assert!(Subarray::new(vec![1, 1], 5).is_err());
        assert!(Subarray::new(vec![5], 5).is_err());
        assert!(Subarray::new(vec![], 5).is_err());
    }

    #[test]
    fn one_based_display_matches_literature_tables() {
        let sub = Subarray::new(vec![6, 16, 17], 20).unwrap();
        assert_eq!(sub.display_one_based(), "{7, 17, 18}");
    }

    #[test]
    fn geometry_document_round_trips() {
        let g = make_rda(4, 4, 0.5, 0.1, 7).unwrap();
        let doc = g.to_document();
        let back = ArrayGeometry::from_document(&doc).unwrap();
        assert_eq!(g, back);
        assert!(doc.starts_with("geometry rda\nelements 16\n"));
    }

    #[test]
    fn geometry_document_rejects_garbage() {
        assert!(ArrayGeometry::from_document("").is_err());
        assert!(ArrayGeometry::from_document("geometry hex\nelements 4\n").is_err());
        let g = make_ula(3, 0.5).unwrap();
        let doc = g.to_document();
        let truncated: String = doc.lines().take(4).collect::<Vec<_>>().join("\n");
        assert!(ArrayGeometry::from_document(&truncated).is_err());
    }

    #[test]
    fn class_set_validates_reduced_ids() {
        let mut cs = ClassSet::full(10, 4).unwrap();
        assert_eq!(cs.total(), 210);
        cs.set_reduced(vec![3, 1, 207]).unwrap();
        assert_eq!(cs.reduced(), Some(&[3u64, 1, 207][..]));
        assert!(cs.set_reduced(vec![210]).is_err());
        assert!(cs.set_reduced(vec![1, 1]).is_err());
    }
}
