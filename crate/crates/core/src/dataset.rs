//! Point sets, target weights and problem instances.
//!
//! Loaders cover three on-disk formats: CSV with an optional header and an
//! optional trailing integer label column, the big-endian IDX container used
//! by MNIST, and a little-endian binary matrix (`u64 n`, `u64 d`, then `n·d`
//! `f32` values) for synthetic fixtures.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::metric::DissimilarityProvider;
use crate::{seeded, Error, Result};

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Dense row-major matrix of finite features with optional integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    n: usize,
    d: usize,
    values: Vec<f64>,
    labels: Option<Vec<i64>>,
}

impl PointSet {
    pub fn new(values: Vec<f64>, d: usize, labels: Option<Vec<i64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter(
                "point dimension must be at least 1".into(),
            ));
        }
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !values.len().is_multiple_of(d) {
            return Err(Error::Consistency(format!(
                "{} values do not form rows of width {d}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: pos / d + 1,
                message: "non-finite feature value".into(),
            });
        }
        let n = values.len() / d;
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::Consistency(format!(
                    "{} labels for {n} points",
                    labels.len()
                )));
            }
        }
        Ok(Self {
            n,
            d,
            values,
            labels,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<i64>>) -> Result<Self> {
        let d = rows.first().map(Vec::len).ok_or(Error::EmptyInput)?;
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::Parse {
                row: bad + 1,
                message: format!("expected {d} columns, found {}", rows[bad].len()),
            });
        }
        Self::new(rows.concat(), d, labels)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    /// Rows at `indices`, in that order, with their labels.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::Parameter(format!(
                    "row {i} out of range ({})",
                    self.n
                )));
            }
            values.extend_from_slice(self.row(i));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        Self::new(values, self.d, labels)
    }

    /// Splits off `count` rows sampled uniformly without replacement.
    /// Returns `(sample, rest)`, both in original row order.
    pub fn split_sample(&self, count: usize, seed: u64) -> Result<(Self, Self)> {
        if count == 0 || count >= self.n {
            return Err(Error::InsufficientData(format!(
                "cannot split {count} of {} rows leaving a non-empty remainder",
                self.n
            )));
        }
        let mut rng = seeded(seed);
        let mut picked = vec![false; self.n];
        for i in index::sample(&mut rng, self.n, count) {
            picked[i] = true;
        }
        let (a, b): (Vec<usize>, Vec<usize>) = (0..self.n).partition(|&i| picked[i]);
        Ok((self.subset(&a)?, self.subset(&b)?))
    }
}

/// Non-negative target weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetWeights(Vec<f64>);

impl TargetWeights {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::EmptyInput);
        }
        if q.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
            return Err(Error::Parameter(
                "target weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = q.iter().sum();
        if (total - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::Parameter(format!(
                "target weights sum to {total}, not 1"
            )));
        }
        Ok(Self(q))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(Self(vec![1.0 / n as f64; n]))
    }

    /// Normalizes arbitrary non-negative masses.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Parameter(
                "weight masses must have a positive finite sum".into(),
            ));
        }
        Self::new(masses.iter().map(|m| m / total).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// A prototype selection problem `(S, T, q, d, k)`.
///
/// The point sets are optional: instances built straight from a precomputed
/// dissimilarity matrix have none, and only label-based scoring needs them.
#[derive(Debug)]
pub struct ProblemInstance {
    source: Option<Arc<PointSet>>,
    target: Option<Arc<PointSet>>,
    weights: TargetWeights,
    provider: DissimilarityProvider,
    k: usize,
}

impl ProblemInstance {
    /// Euclidean instance normalized by the diameter bound of `source ∪ target`.
    pub fn euclidean(
        source: Arc<PointSet>,
        target: Arc<PointSet>,
        weights: TargetWeights,
        k: usize,
    ) -> Result<Self> {
        let provider = DissimilarityProvider::euclidean_normalized(source.clone(), target.clone())?;
        Self::with_points(source, target, weights, provider, k)
    }

    pub fn with_points(
        source: Arc<PointSet>,
        target: Arc<PointSet>,
        weights: TargetWeights,
        provider: DissimilarityProvider,
        k: usize,
    ) -> Result<Self> {
        if source.len() != provider.n_sources() || target.len() != provider.n_targets() {
            return Err(Error::Consistency(
                "point sets do not match the dissimilarity provider".into(),
            ));
        }
        let mut instance = Self::with_provider(provider, weights, k)?;
        instance.source = Some(source);
        instance.target = Some(target);
        Ok(instance)
    }

    pub fn with_provider(
        provider: DissimilarityProvider,
        weights: TargetWeights,
        k: usize,
    ) -> Result<Self> {
        if weights.len() != provider.n_targets() {
            return Err(Error::Consistency(format!(
                "{} weights for {} targets",
                weights.len(),
                provider.n_targets()
            )));
        }
        if k == 0 || k > provider.n_sources() {
            return Err(Error::Parameter(format!(
                "k = {k} must lie in [1, {}]",
                provider.n_sources()
            )));
        }
        Ok(Self {
            source: None,
            target: None,
            weights,
            provider,
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_sources(&self) -> usize {
        self.provider.n_sources()
    }

    pub fn n_targets(&self) -> usize {
        self.provider.n_targets()
    }

    pub fn weights(&self) -> &TargetWeights {
        &self.weights
    }

    pub fn provider(&self) -> &DissimilarityProvider {
        &self.provider
    }

    pub fn source(&self) -> Option<&PointSet> {
        self.source.as_deref()
    }

    pub fn target(&self) -> Option<&PointSet> {
        self.target.as_deref()
    }

    /// Same data, fresh query counter and cache, possibly a different `k`.
    pub fn fresh(&self, k: usize, memoize: bool) -> Result<Self> {
        let mut instance =
            Self::with_provider(self.provider.fresh(memoize), self.weights.clone(), k)?;
        instance.source = self.source.clone();
        instance.target = self.target.clone();
        Ok(instance)
    }
}

fn is_number(cell: &str) -> bool {
    cell.trim().parse::<f64>().is_ok()
}

/// Reads a comma-separated point file.
///
/// A first row in which no cell is numeric is treated as a header. With
/// `has_labels` the last column is parsed as an integer class label.
/// Rows are numbered from 1 in error messages, counting the header.
pub fn load_csv(path: impl AsRef<Path>, has_labels: bool) -> Result<PointSet> {
    let file = fs::File::open(path)?;
    read_csv(file, has_labels)
}

pub fn read_csv<R: Read>(reader: R, has_labels: bool) -> Result<PointSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record?;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        if idx == 0 && !record.iter().any(is_number) {
            continue;
        }
        let cells: Vec<&str> = record.iter().collect();
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {w} columns, found {}", cells.len()),
                })
            }
            Some(_) => {}
        }
        let (features, label) = if has_labels {
            if cells.len() < 2 {
                return Err(Error::Parse {
                    row,
                    message: "need at least one feature and a label".into(),
                });
            }
            let (f, l) = cells.split_at(cells.len() - 1);
            (f, Some(l[0]))
        } else {
            (&cells[..], None)
        };
        for cell in features {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            values.push(v);
        }
        if let Some(l) = label {
            labels.push(l.parse::<i64>().map_err(|_| Error::Parse {
                row,
                message: format!("cannot parse label {l:?} as an integer"),
            })?);
        }
    }
    let Some(width) = width else {
        return Err(Error::EmptyInput);
    };
    let d = if has_labels { width - 1 } else { width };
    PointSet::new(values, d, has_labels.then_some(labels))
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format("truncated IDX header".into()))
}

/// Parses an IDX image file (and optionally its label file) into points
/// scaled to `[0, 1]`, one flattened image per row.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: Option<&Path>) -> Result<PointSet> {
    let images = fs::read(images_path)?;
    let labels = labels_path.map(fs::read).transpose()?;
    parse_idx(&images, labels.as_deref())
}

pub fn parse_idx(images: &[u8], labels: Option<&[u8]>) -> Result<PointSet> {
    let magic = be_u32(images, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"
        )));
    }
    let n = be_u32(images, 4)? as usize;
    let rows = be_u32(images, 8)? as usize;
    let cols = be_u32(images, 12)? as usize;
    let d = rows * cols;
    let pixels = &images[16..];
    if pixels.len() != n * d {
        return Err(Error::Format(format!(
            "expected {} pixel bytes, found {}",
            n * d,
            pixels.len()
        )));
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let values = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let labels = match labels {
        None => None,
        Some(bytes) => {
            let magic = be_u32(bytes, 0)?;
            if magic != IDX_LABELS_MAGIC {
                return Err(Error::Format(format!(
                    "label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"
                )));
            }
            let count = be_u32(bytes, 4)? as usize;
            let body = &bytes[8..];
            if count != n || body.len() != n {
                return Err(Error::Consistency(format!(
                    "{n} images but {count} labels ({} label bytes)",
                    body.len()
                )));
            }
            Some(body.iter().map(|&l| i64::from(l)).collect())
        }
    };
    PointSet::new(values, d, labels)
}

/// Reads the little-endian binary matrix format as an unlabeled point set.
pub fn load_binary_matrix(path: impl AsRef<Path>) -> Result<PointSet> {
    parse_binary_matrix(&fs::read(path)?)
}

pub fn parse_binary_matrix(bytes: &[u8]) -> Result<PointSet> {
    if bytes.len() < 16 {
        return Err(Error::Format("truncated binary matrix header".into()));
    }
    let n = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    let d = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    if n == 0 || d == 0 {
        return Err(Error::EmptyInput);
    }
    if body.len() != n * d * 4 {
        return Err(Error::Format(format!(
            "expected {} bytes of f32 data, found {}",
            n * d * 4,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    PointSet::new(values, d, None)
}

pub fn write_binary_matrix<W: Write>(mut out: W, points: &PointSet) -> Result<()> {
    out.write_all(&(points.len() as u64).to_le_bytes())?;
    out.write_all(&(points.dim() as u64).to_le_bytes())?;
    for &v in points.values() {
        out.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

/// Writes points as CSV, appending the label column when present.
pub fn write_csv<W: Write>(out: W, points: &PointSet) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for i in 0..points.len() {
        let mut rec: Vec<String> = points.row(i).iter().map(|v| v.to_string()).collect();
        if let Some(labels) = points.labels() {
            rec.push(labels[i].to_string());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Target set in which `skew_label` makes up `skew_percent`% of the rows.
///
/// All `c` rows carrying `skew_label` are kept and `round(100·c/θ) − c`
/// other rows are sampled uniformly without replacement. Rows keep their
/// original relative order. Weights are uniform.
pub fn build_skewed_target(
    base: &PointSet,
    skew_label: i64,
    skew_percent: f64,
    rng_seed: u64,
) -> Result<(PointSet, TargetWeights)> {
    if !(skew_percent > 0.0 && skew_percent <= 100.0) {
        return Err(Error::Parameter(format!(
            "skew percent {skew_percent} outside (0, 100]"
        )));
    }
    let labels = base
        .labels()
        .ok_or_else(|| Error::Label("skewed targets need a labeled base set".into()))?;
    let (skewed, others): (Vec<usize>, Vec<usize>) =
        (0..base.len()).partition(|&i| labels[i] == skew_label);
    let c = skewed.len();
    if c == 0 {
        return Err(Error::Parameter(format!(
            "label {skew_label} absent from base set"
        )));
    }
    let total = (100.0 * c as f64 / skew_percent).round() as usize;
    let need = total.saturating_sub(c);
    if need > others.len() {
        return Err(Error::InsufficientData(format!(
            "need {need} rows without label {skew_label}, only {} available",
            others.len()
        )));
    }
    let mut rng = seeded(rng_seed);
    let mut keep = vec![false; base.len()];
    for &i in &skewed {
        keep[i] = true;
    }
    for pos in index::sample(&mut rng, others.len(), need) {
        keep[others[pos]] = true;
    }
    let rows: Vec<usize> = (0..base.len()).filter(|&i| keep[i]).collect();
    let target = base.subset(&rows)?;
    let weights = TargetWeights::uniform(target.len())?;
    Ok((target, weights))
}

/// Label with the fewest rows (smallest label on ties).
pub fn least_populated_label(points: &PointSet) -> Option<i64> {
    let labels = points.labels()?;
    let mut counts = std::collections::BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    counts
        .into_iter()
        .min_by_key(|&(l, c)| (c, l))
        .map(|(l, _)| l)
}

/// Isotropic Gaussian mixture: `components` centers drawn uniformly in
/// `[-5, 5]^dims`, unit-variance noise, each point's label its component.
pub fn gaussian_mixture(
    components: usize,
    points: usize,
    dims: usize,
    seed: u64,
) -> Result<PointSet> {
    if components == 0 || points == 0 || dims == 0 {
        return Err(Error::Parameter(
            "mixture needs at least one component, point and dimension".into(),
        ));
    }
    let mut rng = seeded(seed);
    let centers: Vec<f64> = (0..components * dims)
        .map(|_| rng.random_range(-5.0..5.0))
        .collect();
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut values = Vec::with_capacity(points * dims);
    let mut labels = Vec::with_capacity(points);
    for _ in 0..points {
        let c = rng.random_range(0..components);
        labels.push(c as i64);
        let center = &centers[c * dims..(c + 1) * dims];
        values.extend(center.iter().map(|&m| m + noise.sample(&mut rng)));
    }
    PointSet::new(values, dims, Some(labels))
}

/// Instance with i.i.d. uniform dissimilarities and random positive weights.
pub fn random_instance(
    n_sources: usize,
    n_targets: usize,
    k: usize,
    seed: u64,
) -> Result<ProblemInstance> {
    let mut rng = seeded(seed);
    let values: Vec<f64> = (0..n_sources * n_targets)
        .map(|_| rng.random::<f64>())
        .collect();
    let masses: Vec<f64> = (0..n_targets)
        .map(|_| rng.random_range(0.05..1.0))
        .collect();
    let provider = DissimilarityProvider::precomputed(n_targets, n_sources, values)?;
    ProblemInstance::with_provider(provider, TargetWeights::from_masses(&masses)?, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx_images(n: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
        let mut b = IDX_IMAGES_MAGIC.to_be_bytes().to_vec();
        for v in [n, rows, cols] {
            b.extend_from_slice(&v.to_be_bytes());
        }
        b.extend_from_slice(pixels);
        b
    }

    fn idx_labels(labels: &[u8]) -> Vec<u8> {
        let mut b = IDX_LABELS_MAGIC.to_be_bytes().to_vec();
        b.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        b.extend_from_slice(labels);
        b
    }

    #[test]
    fn csv_plain_rows() {
        let p = read_csv("0,0\n1,0\n0,1".as_bytes(), false).unwrap();
        assert_eq!((p.len(), p.dim()), (3, 2));
        assert_eq!(p.row(2), &[0.0, 1.0]);
        assert!(p.labels().is_none());
    }

    #[test]
    fn csv_label_column() {
        let p = read_csv("0,0,7".as_bytes(), true).unwrap();
        assert_eq!((p.len(), p.dim()), (1, 2));
        assert_eq!(p.labels(), Some(&[7][..]));
    }

    #[test]
    fn csv_bad_cell_names_row() {
        match read_csv("0,abc".as_bytes(), false) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_header_detection_and_errors() {
        let p = read_csv("x,y\n1,2\n3,4\n".as_bytes(), false).unwrap();
        assert_eq!(p.len(), 2);
        assert!(matches!(
            read_csv("".as_bytes(), false),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            read_csv("a,b\n".as_bytes(), false),
            Err(Error::EmptyInput)
        ));
        match read_csv("1,2\n3\n".as_bytes(), false) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            read_csv("1,2,x\n".as_bytes(), true),
            Err(Error::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn idx_scales_pixels() {
        let p = parse_idx(&idx_images(1, 2, 2, &[0, 255, 128, 0]), None).unwrap();
        assert_eq!((p.len(), p.dim()), (1, 4));
        assert_eq!(p.row(0), &[0.0, 1.0, 128.0 / 255.0, 0.0]);
    }

    #[test]
    fn idx_with_labels() {
        let imgs = idx_images(2, 1, 1, &[0, 51]);
        let p = parse_idx(&imgs, Some(&idx_labels(&[3, 9]))).unwrap();
        assert_eq!(p.labels(), Some(&[3, 9][..]));
        assert_eq!(p.row(1), &[0.2]);
    }

    #[test]
    fn idx_label_count_mismatch() {
        let imgs = idx_images(2, 1, 1, &[0, 1]);
        assert!(matches!(
            parse_idx(&imgs, Some(&idx_labels(&[1]))),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn idx_bad_magic() {
        let mut imgs = idx_images(1, 1, 1, &[0]);
        imgs[..4].copy_from_slice(&0u32.to_be_bytes());
        assert!(matches!(parse_idx(&imgs, None), Err(Error::Format(_))));
    }

    #[test]
    fn binary_matrix_roundtrip() {
        let p = PointSet::new(vec![0.5, -1.0, 2.25, 3.0], 2, None).unwrap();
        let mut buf = Vec::new();
        write_binary_matrix(&mut buf, &p).unwrap();
        assert_eq!(buf.len(), 16 + 16);
        assert_eq!(parse_binary_matrix(&buf).unwrap(), p);
        assert!(matches!(
            parse_binary_matrix(&buf[..20]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn point_set_invariants() {
        assert!(PointSet::new(vec![1.0, f64::NAN], 2, None).is_err());
        assert!(PointSet::new(vec![1.0, 2.0], 2, Some(vec![1, 2])).is_err());
        assert!(PointSet::new(vec![], 2, None).is_err());
        assert!(PointSet::new(vec![1.0], 0, None).is_err());
    }

    #[test]
    fn weights_validate() {
        assert!(TargetWeights::new(vec![0.5, 0.5]).is_ok());
        assert!(TargetWeights::new(vec![0.5, 0.4]).is_err());
        assert!(TargetWeights::new(vec![1.5, -0.5]).is_err());
        let w = TargetWeights::from_masses(&[1.0, 3.0]).unwrap();
        assert_eq!(w.as_slice(), &[0.25, 0.75]);
    }

    fn toy_base() -> PointSet {
        let values: Vec<f64> = (0..8).map(f64::from).collect();
        PointSet::new(values, 1, Some(vec![0, 1, 0, 1, 0, 1, 0, 1])).unwrap()
    }

    #[test]
    fn skewed_target_half() {
        let (t, w) = build_skewed_target(&toy_base(), 0, 50.0, 3).unwrap();
        assert_eq!(t.len(), 8);
        assert_eq!(t.labels().unwrap().iter().filter(|&&l| l == 0).count(), 4);
        assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn skewed_target_full_skew_is_label_subset() {
        let (t, _) = build_skewed_target(&toy_base(), 1, 100.0, 11).unwrap();
        assert_eq!(t.labels().unwrap(), &[1, 1, 1, 1]);
        assert_eq!(t.values(), &[1.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn skewed_target_errors() {
        let base = toy_base();
        assert!(matches!(
            build_skewed_target(&base, 0, 0.0, 1),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            build_skewed_target(&base, 0, 120.0, 1),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            build_skewed_target(&base, 0, 20.0, 1),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            build_skewed_target(&base, 5, 50.0, 1),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn skewed_target_mnist_sizes() {
        // 5421 rows of the skew label among 60000, as in the MNIST training split.
        let n = 60_000;
        let labels: Vec<i64> = (0..n)
            .map(|i| {
                if i < 5421 {
                    5
                } else {
                    [0, 1, 2, 3, 4, 6, 7, 8, 9][i % 9]
                }
            })
            .collect();
        let base = PointSet::new(vec![0.0; n], 1, Some(labels)).unwrap();
        let (t, _) = build_skewed_target(&base, 5, 100.0, 0).unwrap();
        assert_eq!(t.len(), 5421);
        let (t, _) = build_skewed_target(&base, 5, 10.0, 0).unwrap();
        assert_eq!(t.len(), 54_210);
        assert_eq!(
            t.labels().unwrap().iter().filter(|&&l| l == 5).count(),
            5421
        );
    }

    #[test]
    fn mixture_is_deterministic() {
        let a = gaussian_mixture(3, 50, 4, 9).unwrap();
        let b = gaussian_mixture(3, 50, 4, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 4);
        assert!(a.labels().unwrap().iter().all(|&l| (0..3).contains(&l)));
        assert_eq!(least_populated_label(&toy_base()), Some(0));
    }
}
