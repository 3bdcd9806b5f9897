//! Seeded generators for experiment inputs and headerless CSV/PGM I/O.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::EmpiricalDistribution;
use crate::spd::SpdMatrix;

/// Eigenvalue profile of a generated covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum SpectrumKind {
    /// `lambda_i = i^{-alpha}`, so `lambda_1 = 1`.
    PowerLaw { alpha: f64 },
    /// Diagonal entries `exp(N(0, sigma0^2))`, sorted non-increasing.
    LogNormalDiag { sigma0: f64 },
    Explicit { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub kind: SpectrumKind,
    pub dim: usize,
}

impl SpectrumSpec {
    pub fn power_law(alpha: f64, dim: usize) -> Self {
        Self {
            kind: SpectrumKind::PowerLaw { alpha },
            dim,
        }
    }

    pub fn log_normal(sigma0: f64, dim: usize) -> Self {
        Self {
            kind: SpectrumKind::LogNormalDiag { sigma0 },
            dim,
        }
    }

    /// Diagonal entries this spec produces.
    pub fn diagonal(&self, rng: &mut impl Rng) -> Result<Vec<f64>> {
        if self.dim == 0 {
            return Err(Error::Dimension("spectrum dimension must be positive".into()));
        }
        let values = match &self.kind {
            SpectrumKind::PowerLaw { alpha } => {
                if !(alpha.is_finite() && *alpha >= 0.0) {
                    return Err(Error::InvalidInput(format!("power-law exponent {alpha} must be >= 0")));
                }
                (1..=self.dim).map(|i| (i as f64).powf(-alpha)).collect()
            }
            SpectrumKind::LogNormalDiag { sigma0 } => {
                let normal = Normal::new(0.0, *sigma0)
                    .map_err(|e| Error::InvalidInput(format!("log-normal sigma0 {sigma0}: {e}")))?;
                let mut v: Vec<f64> = (0..self.dim).map(|_| rng.sample(normal).exp()).collect();
                v.sort_by(|a, b| b.total_cmp(a));
                v
            }
            SpectrumKind::Explicit { values } => {
                if values.len() != self.dim {
                    return Err(Error::Dimension(format!(
                        "explicit spectrum has {} values for dim {}",
                        values.len(),
                        self.dim
                    )));
                }
                if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::InvalidInput("explicit spectrum must be positive".into()));
                }
                values.clone()
            }
        };
        Ok(values)
    }
}

pub fn make_covariance(spec: &SpectrumSpec, rng: &mut impl Rng) -> Result<SpdMatrix> {
    SpdMatrix::from_diagonal(&spec.diagonal(rng)?)
}

/// `B` rows drawn iid from `N(0, Sigma_x)` as `Sigma_x^{1/2} g`.
pub fn gaussian_samples(d: usize, b: usize, sigma_x: &SpdMatrix, rng: &mut impl Rng) -> Result<EmpiricalDistribution> {
    if sigma_x.dim() != d {
        return Err(Error::Dimension(format!("Sigma_x is {0}x{0}, requested d = {d}", sigma_x.dim())));
    }
    let g = DMatrix::from_fn(b, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    EmpiricalDistribution::new(g * sigma_x.sqrt())
}

/// The six binary stamps, indexed as in the label columns.
pub const SHAPE_NAMES: [&str; 6] = ["filled_square", "hollow_square", "disk", "plus", "x", "bar"];

/// Pixel mask of stamp `k` as `(rows, cols, mask)`.
pub fn stamp(k: usize) -> (usize, usize, Vec<bool>) {
    let grid = |h: usize, w: usize, f: &dyn Fn(usize, usize) -> bool| {
        let mut m = Vec::with_capacity(h * w);
        for i in 0..h {
            for j in 0..w {
                m.push(f(i, j));
            }
        }
        (h, w, m)
    };
    match k {
        0 => grid(5, 5, &|_, _| true),
        1 => grid(7, 7, &|i, j| i == 0 || j == 0 || i == 6 || j == 6),
        2 => grid(7, 7, &|i, j| {
            let (di, dj) = (i as i64 - 3, j as i64 - 3);
            di * di + dj * dj <= 9
        }),
        3 => grid(7, 7, &|i, j| i == 3 || j == 3),
        4 => grid(7, 7, &|i, j| i == j || i + j == 6),
        5 => grid(3, 9, &|_, _| true),
        _ => panic!("stamp index {k} out of range"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapesConfig {
    #[serde(default = "ShapesConfig::default_side")]
    pub image_side: usize,
    #[serde(default = "ShapesConfig::default_per_image")]
    pub shapes_per_image: usize,
    pub n_images: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ShapesConfig {
    fn default_side() -> usize {
        25
    }

    fn default_per_image() -> usize {
        4
    }

    pub fn new(n_images: usize, seed: u64) -> Self {
        Self {
            image_side: 25,
            shapes_per_image: 4,
            n_images,
            seed,
        }
    }

    pub fn dictionary_size(&self) -> usize {
        SHAPE_NAMES.len()
    }
}

/// Where a stamp went: top-left corner `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub shape: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
pub struct ShapesDataset {
    /// `n x side^2`, row-major pixels in `[0, 1]`.
    pub images: DMatrix<f64>,
    /// `n x 6`, `+1` iff the shape was drawn for the image.
    pub labels: DMatrix<f64>,
    pub placements: Vec<Vec<Placement>>,
}

impl ShapesDataset {
    /// Label vectors per shape, the layout the finite-class oracle expects.
    pub fn label_functions(&self) -> Vec<Vec<f64>> {
        (0..self.labels.ncols())
            .map(|j| self.labels.column(j).iter().copied().collect())
            .collect()
    }
}

/// Labels implied by a placement log.
pub fn labels_from_placements(placements: &[Vec<Placement>], dictionary_size: usize) -> DMatrix<f64> {
    let mut labels = DMatrix::from_element(placements.len(), dictionary_size, -1.0);
    for (i, row) in placements.iter().enumerate() {
        for p in row {
            labels[(i, p.shape)] = 1.0;
        }
    }
    labels
}

pub fn shapes_dataset(cfg: &ShapesConfig) -> Result<ShapesDataset> {
    let side = cfg.image_side;
    if side < 9 || cfg.shapes_per_image == 0 || cfg.n_images == 0 {
        return Err(Error::Config(format!(
            "shapes need side >= 9 and positive counts, got side {side}, {} per image, {} images",
            cfg.shapes_per_image, cfg.n_images
        )));
    }
    let mut rng: ChaCha8Rng = crate::rng::stream(cfg.seed, crate::rng::TAG_DATA, 0);
    let stamps: Vec<_> = (0..SHAPE_NAMES.len()).map(stamp).collect();
    let ids: Vec<usize> = (0..stamps.len()).collect();
    let mut images = DMatrix::zeros(cfg.n_images, side * side);
    let mut placements = Vec::with_capacity(cfg.n_images);
    for n in 0..cfg.n_images {
        let mut log = Vec::with_capacity(cfg.shapes_per_image);
        for _ in 0..cfg.shapes_per_image {
            let shape = *ids.choose(&mut rng).expect("dictionary is non-empty");
            let (h, w, mask) = &stamps[shape];
            let row = rng.random_range(0..=side - h);
            let col = rng.random_range(0..=side - w);
            for i in 0..*h {
                for j in 0..*w {
                    if mask[i * w + j] {
                        images[(n, (row + i) * side + col + j)] = 1.0;
                    }
                }
            }
            log.push(Placement { shape, row, col });
        }
        placements.push(log);
    }
    let labels = labels_from_placements(&placements, stamps.len());
    Ok(ShapesDataset {
        images,
        labels,
        placements,
    })
}

/// Reads a headerless comma-separated matrix.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("{}:{}: '{v}': {e}", path.display(), line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Dimension(format!(
                    "{}:{}: expected {} columns, found {}",
                    path.display(),
                    line + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!("{} is empty", path.display())));
    }
    let ncols = rows[0].len();
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}

/// Writes a headerless matrix using shortest round-trip float formatting.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in m.row_iter() {
        writer.write_record(row.iter().map(|v| v.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_vector_csv(path: &Path, v: &DVector<f64>) -> Result<()> {
    write_matrix_csv(path, &DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
}

/// Writes one image row as a binary (P5) greyscale PGM.
pub fn write_pgm(path: &Path, pixels: &[f64], side: usize) -> Result<()> {
    if pixels.len() != side * side {
        return Err(Error::Dimension(format!("{} pixels is not a {side}x{side} image", pixels.len())));
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(file, "P5\n{side} {side}\n255\n")?;
    let bytes: Vec<u8> = pixels.iter().map(|p| (p.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    file.write_all(&bytes)?;
    file.flush()?;
    Ok(())
}
