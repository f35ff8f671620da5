//! Complex hyperspectral cubes and the 2D/3D reshape passages.
//!
//! A cube is stored band-major: `data[[band, y, x]]`, where `y` is the row
//! index (`0..n_rows`) and `x` the column index (`0..n_cols`). Flattening a
//! band into a row of a [`SpectralMatrix`] walks `y` outer, `x` inner, which is
//! also the in-memory order, so both reshapes are pure copies.

pub mod chsc;

use ndarray::{s, Array2, Array3, ArrayView2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// N×M×L complex field with an explicit wavelength axis in nanometers.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexCube {
    data: Array3<Complex64>,
    wavelengths: Vec<f64>,
}

fn check_wavelengths(wavelengths: &[f64]) -> Result<()> {
    if wavelengths.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidCube("non-finite wavelength".into()));
    }
    if wavelengths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneWavelengths);
    }
    Ok(())
}

impl ComplexCube {
    /// Builds a cube from `(bands, rows, cols)` data.
    pub fn new(data: Array3<Complex64>, wavelengths: Vec<f64>) -> Result<Self> {
        let (bands, _, _) = data.dim();
        if wavelengths.len() != bands {
            return Err(Error::DimensionMismatch(format!(
                "{} wavelengths for {} bands",
                wavelengths.len(),
                bands
            )));
        }
        check_wavelengths(&wavelengths)?;
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidCube("non-finite sample".into()));
        }
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Ok(Self { data, wavelengths })
    }

    /// Stacks equally sized band images.
    pub fn from_bands(bands: &[Array2<Complex64>], wavelengths: Vec<f64>) -> Result<Self> {
        let Some(first) = bands.first() else {
            return Err(Error::InvalidCube("no bands".into()));
        };
        let (rows, cols) = first.dim();
        let mut data = Array3::zeros((bands.len(), rows, cols));
        for (b, img) in bands.iter().enumerate() {
            if img.dim() != (rows, cols) {
                return Err(Error::DimensionMismatch(format!(
                    "band {b} is {:?}, expected {:?}",
                    img.dim(),
                    (rows, cols)
                )));
            }
            data.index_axis_mut(Axis(0), b).assign(img);
        }
        Self::new(data, wavelengths)
    }

    pub fn n_rows(&self) -> usize {
        self.data.dim().1
    }

    pub fn n_cols(&self) -> usize {
        self.data.dim().2
    }

    pub fn n_bands(&self) -> usize {
        self.data.dim().0
    }

    /// `(n_rows, n_cols, n_bands)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_rows(), self.n_cols(), self.n_bands())
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn data(&self) -> &Array3<Complex64> {
        &self.data
    }

    pub fn into_data(self) -> Array3<Complex64> {
        self.data
    }

    /// Band image, rows indexed by `y`, columns by `x`.
    pub fn band(&self, b: usize) -> ArrayView2<'_, Complex64> {
        self.data.index_axis(Axis(0), b)
    }

    pub fn get(&self, x: usize, y: usize, band: usize) -> Complex64 {
        self.data[[band, y, x]]
    }

    /// Sub-cube of the contiguous band range `lo..hi`.
    pub fn band_range(&self, lo: usize, hi: usize) -> Result<Self> {
        if lo >= hi || hi > self.n_bands() {
            return Err(Error::DimensionMismatch(format!(
                "band range {lo}..{hi} outside 0..{}",
                self.n_bands()
            )));
        }
        Ok(Self {
            data: self.data.slice(s![lo..hi, .., ..]).to_owned(),
            wavelengths: self.wavelengths[lo..hi].to_vec(),
        })
    }

    /// Copy with every sample mapped through `f`; the wavelength grid is kept.
    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Result<Self> {
        Self::new(self.data.mapv(f), self.wavelengths.clone())
    }

    /// Index of the band whose wavelength is closest to `lambda_nm`.
    pub fn nearest_band(&self, lambda_nm: f64) -> usize {
        let mut best = 0;
        for (b, w) in self.wavelengths.iter().enumerate() {
            if (w - lambda_nm).abs() < (self.wavelengths[best] - lambda_nm).abs() {
                best = b;
            }
        }
        best
    }
}

/// Cube flattened to `bands × pixels`, remembering the spatial shape.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMatrix {
    pub entries: Array2<Complex64>,
    pub n_rows: usize,
    pub n_cols: usize,
    /// Wavelength grid carried through from the source cube, if any.
    pub wavelengths: Option<Vec<f64>>,
}

impl SpectralMatrix {
    pub fn new(entries: Array2<Complex64>, n_rows: usize, n_cols: usize) -> Result<Self> {
        let m = Self {
            entries,
            n_rows,
            n_cols,
            wavelengths: None,
        };
        m.check()?;
        Ok(m)
    }

    pub fn n_bands(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_pixels(&self) -> usize {
        self.entries.ncols()
    }

    fn check(&self) -> Result<()> {
        if self.n_pixels() != self.n_rows * self.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels cannot be reshaped to {}x{}",
                self.n_pixels(),
                self.n_rows,
                self.n_cols
            )));
        }
        Ok(())
    }

    /// Row `b` viewed as an `n_rows × n_cols` image.
    pub fn image(&self, b: usize) -> Array2<Complex64> {
        self.entries
            .row(b)
            .to_owned()
            .into_shape_with_order((self.n_rows, self.n_cols))
            .expect("row length matches provenance dims")
    }
}

/// Flattens every band into one row (y outer, x inner).
pub fn reshape_to_matrix(cube: &ComplexCube) -> SpectralMatrix {
    let (rows, cols, bands) = cube.shape();
    let entries = cube
        .data
        .clone()
        .into_shape_with_order((bands, rows * cols))
        .expect("cube data is in standard layout");
    SpectralMatrix {
        entries,
        n_rows: rows,
        n_cols: cols,
        wavelengths: Some(cube.wavelengths.clone()),
    }
}

/// Exact inverse of [`reshape_to_matrix`].
///
/// Matrices that do not carry a wavelength grid (eigenimage stacks) get the
/// placeholder grid `1, 2, …, n_bands`.
pub fn reshape_to_cube(mat: &SpectralMatrix) -> Result<ComplexCube> {
    mat.check()?;
    let bands = mat.n_bands();
    let wavelengths = match &mat.wavelengths {
        Some(w) if w.len() == bands => w.clone(),
        _ => (1..=bands).map(|b| b as f64).collect(),
    };
    let data = mat
        .entries
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((bands, mat.n_rows, mat.n_cols))
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    ComplexCube::new(data, wavelengths)
}

/// `n` wavelengths uniformly covering `[lo, hi]` nanometers.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
