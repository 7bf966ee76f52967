use std::path::PathBuf;

use phong_cbir::eval::{self, QueryMode};
use phong_cbir::{
    extract_features, index, phong, search, synth, Error, ExtractionOpts, FeatureVector, Vec3,
    FEATURE_DIM, FEATURE_NAMES,
};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "RgbImage", module = "pycbir", skip_from_py_object)]
#[derive(Clone)]
struct PyRgbImage {
    inner: phong_cbir::RgbImage,
}

#[pymethods]
impl PyRgbImage {
    /// `data` is interleaved RGB bytes, row-major.
    #[new]
    fn new(width: usize, height: usize, data: &[u8]) -> PyResult<Self> {
        if data.len() != width * height * 3 {
            return Err(PyValueError::new_err(format!(
                "expected {} bytes for {width}x{height}, got {}",
                width * height * 3,
                data.len()
            )));
        }
        let pixels = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        phong_cbir::RgbImage::new(width, height, pixels)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn decode_ppm(data: &[u8]) -> PyResult<Self> {
        phong_cbir::decode_ppm(data)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn read_ppm(path: PathBuf) -> PyResult<Self> {
        phong_cbir::read_ppm(path)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn encode_ppm<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &phong_cbir::encode_ppm(&self.inner))
    }

    fn write_ppm(&self, path: PathBuf) -> PyResult<()> {
        phong_cbir::write_ppm(path, &self.inner).map_err(to_py)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_raw())
    }

    /// Row-major luma values.
    fn to_grayscale<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, phong_cbir::to_grayscale(&self.inner).pixels())
    }

    fn get(&self, x: usize, y: usize) -> PyResult<(u8, u8, u8)> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err("pixel out of bounds"));
        }
        let [r, g, b] = self.inner.get(x, y);
        Ok((r, g, b))
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("RgbImage({}x{})", self.inner.width(), self.inner.height())
    }
}

#[pyclass(name = "PhongParams", module = "pycbir", skip_from_py_object)]
#[derive(Clone)]
struct PyPhongParams {
    inner: phong::PhongParams,
}

#[pymethods]
impl PyPhongParams {
    #[new]
    #[pyo3(signature = (ka=0.2, kd=0.6, ks=0.3, ia=1.0, il=1.0, ns=10.0, height_scale=10.0, light_dir=None, view_dir=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        ka: f64,
        kd: f64,
        ks: f64,
        ia: f64,
        il: f64,
        ns: f64,
        height_scale: f64,
        light_dir: Option<[f64; 3]>,
        view_dir: Option<[f64; 3]>,
    ) -> PyResult<Self> {
        let d = phong::PhongParams::default();
        let inner = phong::PhongParams {
            ka,
            kd,
            ks,
            ia,
            il,
            ns,
            height_scale,
            light_dir: light_dir.map(Vec3::from).unwrap_or(d.light_dir),
            view_dir: view_dir.map(Vec3::from).unwrap_or(d.view_dir),
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Ambient-only parameters that leave images unchanged.
    #[staticmethod]
    fn identity() -> Self {
        Self {
            inner: phong::PhongParams::identity(),
        }
    }

    #[getter]
    fn ka(&self) -> f64 {
        self.inner.ka
    }
    #[getter]
    fn kd(&self) -> f64 {
        self.inner.kd
    }
    #[getter]
    fn ks(&self) -> f64 {
        self.inner.ks
    }
    #[getter]
    fn ia(&self) -> f64 {
        self.inner.ia
    }
    #[getter]
    fn il(&self) -> f64 {
        self.inner.il
    }
    #[getter]
    fn ns(&self) -> f64 {
        self.inner.ns
    }
    #[getter]
    fn height_scale(&self) -> f64 {
        self.inner.height_scale
    }
    #[getter]
    fn light_dir(&self) -> [f64; 3] {
        self.inner.light_dir.into()
    }
    #[getter]
    fn view_dir(&self) -> [f64; 3] {
        self.inner.view_dir.into()
    }
    #[getter]
    fn halfway(&self) -> [f64; 3] {
        self.inner.halfway().into()
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "PhongParams(ka={}, kd={}, ks={}, ia={}, il={}, ns={}, height_scale={})",
            p.ka, p.kd, p.ks, p.ia, p.il, p.ns, p.height_scale
        )
    }
}

fn extraction_opts(
    levels: usize,
    offset: (i32, i32),
    edge_threshold: f64,
) -> PyResult<ExtractionOpts> {
    let o = ExtractionOpts {
        levels,
        offset,
        edge_threshold,
    };
    o.validate().map_err(to_py)?;
    Ok(o)
}

#[pyfunction]
#[pyo3(signature = (n_dot_l, n_dot_h, params=None))]
fn phong_intensity(n_dot_l: f64, n_dot_h: f64, params: Option<PyRef<'_, PyPhongParams>>) -> f64 {
    let p = params.map(|p| p.inner).unwrap_or_default();
    phong::phong_intensity(n_dot_l, n_dot_h, &p)
}

/// Shades an image; `tile` selects lattice-interpolated normals.
#[pyfunction]
#[pyo3(signature = (image, params=None, tile=None))]
fn shade_image(
    image: &PyRgbImage,
    params: Option<PyRef<'_, PyPhongParams>>,
    tile: Option<usize>,
) -> PyResult<PyRgbImage> {
    let p = params.map(|p| p.inner).unwrap_or_default();
    let inner = match tile {
        Some(t) => phong::shade_image_tiled(&image.inner, &p, t).map_err(to_py)?,
        None => phong::shade_image(&image.inner, &p),
    };
    Ok(PyRgbImage { inner })
}

#[pyfunction(name = "extract_features")]
#[pyo3(signature = (image, phong=None, levels=8, offset=(1, 0), edge_threshold=255.0))]
fn py_extract_features(
    image: &PyRgbImage,
    phong: Option<PyRef<'_, PyPhongParams>>,
    levels: usize,
    offset: (i32, i32),
    edge_threshold: f64,
) -> PyResult<Vec<f64>> {
    let opts = extraction_opts(levels, offset, edge_threshold)?;
    let p = phong.map(|p| p.inner);
    extract_features(&image.inner, p.as_ref(), &opts)
        .map(|v| v.0.to_vec())
        .map_err(to_py)
}

#[pyfunction]
fn feature_names() -> Vec<&'static str> {
    FEATURE_NAMES.to_vec()
}

#[pyfunction]
fn euclidean_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    search::euclidean_distance(&a, &b).map_err(to_py)
}

#[pyfunction]
fn precision(relevant_retrieved: usize, retrieved: usize) -> PyResult<f64> {
    eval::precision(relevant_retrieved, retrieved).map_err(to_py)
}

#[pyfunction]
fn recall(relevant_retrieved: usize, relevant_in_db: usize) -> PyResult<f64> {
    eval::recall(relevant_retrieved, relevant_in_db).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (out_dir, seed=42))]
fn generate_synthetic_corpus(out_dir: PathBuf, seed: u64) -> PyResult<Vec<PathBuf>> {
    synth::generate_synthetic_corpus(out_dir, seed).map_err(to_py)
}

type Ranked = (String, String, f64);
/// `(category, relevant_retrieved, retrieved, relevant_in_db, precision, recall)`
type Row = (String, usize, usize, usize, f64, f64);

#[pyclass(name = "Index", module = "pycbir")]
struct PyIndex {
    inner: index::Index,
}

#[pymethods]
impl PyIndex {
    #[staticmethod]
    #[pyo3(signature = (root, phong=None, levels=8, offset=(1, 0), edge_threshold=255.0))]
    fn build(
        py: Python<'_>,
        root: PathBuf,
        phong: Option<PyRef<'_, PyPhongParams>>,
        levels: usize,
        offset: (i32, i32),
        edge_threshold: f64,
    ) -> PyResult<Self> {
        let opts = extraction_opts(levels, offset, edge_threshold)?;
        let p = phong.map(|p| p.inner);
        py.detach(|| index::build_index(&root, p.as_ref(), &opts))
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        index::load_index(path)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        index::save_index(&self.inner, path).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn shaded(&self) -> bool {
        self.inner.phong.is_some()
    }

    fn categories(&self) -> Vec<String> {
        self.inner.categories()
    }

    /// `(path, category, features)` for every entry.
    fn entries(&self) -> Vec<(String, String, Vec<f64>)> {
        self.inner
            .entries
            .iter()
            .map(|e| (e.path.clone(), e.category.clone(), e.features.0.to_vec()))
            .collect()
    }

    /// Ranks against an image, shading it with the index's parameters if any.
    #[pyo3(signature = (image, k=12))]
    fn query(&self, image: &PyRgbImage, k: usize) -> PyResult<Vec<Ranked>> {
        let f = extract_features(
            &image.inner,
            self.inner.phong.as_ref(),
            &self.inner.extraction_opts,
        )
        .map_err(to_py)?;
        self.rank(f, k, None)
    }

    /// Ranks against raw (unnormalized) feature values.
    #[pyo3(signature = (features, k=12, exclude=None))]
    fn query_features(
        &self,
        features: Vec<f64>,
        k: usize,
        exclude: Option<String>,
    ) -> PyResult<Vec<Ranked>> {
        let arr: [f64; FEATURE_DIM] = features.try_into().map_err(|v: Vec<f64>| {
            PyValueError::new_err(format!("expected {FEATURE_DIM} features, got {}", v.len()))
        })?;
        self.rank(FeatureVector(arr), k, exclude.as_deref())
    }

    /// Per-category precision/recall with each query excluded from its results.
    #[pyo3(signature = (k=12, all_queries=false))]
    fn evaluate(&self, k: usize, all_queries: bool) -> PyResult<Vec<Row>> {
        let mode = if all_queries {
            QueryMode::AllQueriesAveraged
        } else {
            QueryMode::PerCategoryFirst
        };
        let r = eval::run_experiment(&self.inner, k, mode).map_err(to_py)?;
        Ok(r.rows
            .into_iter()
            .map(|r| {
                (
                    r.category,
                    r.relevant_retrieved,
                    r.retrieved,
                    r.relevant_in_db,
                    r.precision,
                    r.recall,
                )
            })
            .collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

impl PyIndex {
    fn rank(&self, f: FeatureVector, k: usize, exclude: Option<&str>) -> PyResult<Vec<Ranked>> {
        Ok(search::rank_excluding(&f, &self.inner, k, exclude)
            .map_err(to_py)?
            .into_iter()
            .map(|r| (r.path, r.category, r.distance))
            .collect())
    }
}

#[pymodule]
fn pycbir(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRgbImage>()?;
    m.add_class::<PyPhongParams>()?;
    m.add_class::<PyIndex>()?;
    m.add_function(wrap_pyfunction!(phong_intensity, m)?)?;
    m.add_function(wrap_pyfunction!(shade_image, m)?)?;
    m.add_function(wrap_pyfunction!(py_extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(euclidean_distance, m)?)?;
    m.add_function(wrap_pyfunction!(precision, m)?)?;
    m.add_function(wrap_pyfunction!(recall, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic_corpus, m)?)?;
    Ok(())
}
