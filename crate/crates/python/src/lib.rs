//! Python bindings: grammars, sampling, instantiation and ground-truth
//! rendering. Structured values cross the boundary as JSON strings.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sago::energy::total_energy;
use sago::gtrender::{render_ground_truth, CameraSpec};
use sago::learning::{learn_grammar, scenes_from_json, CdConfig};
use sago::sampler::SamplerConfig;

create_exception!(pysago, SagoError, PyException);

fn err(e: sago::Error) -> PyErr {
    SagoError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    SagoError::new_err(e.to_string())
}

/// A learned (or hand-written) grammar bundle.
#[pyclass(module = "pysago", frozen)]
struct Grammar {
    inner: sago::grammar::Saog,
}

#[pymethods]
impl Grammar {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        sago::grammar::Saog::from_json(text).map(|inner| Grammar { inner }).map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        sago::grammar::Saog::load(path).map(|inner| Grammar { inner }).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn categories(&self) -> Vec<String> {
        self.inner.categories().into_iter().collect()
    }

    /// Potential weights in loss-vector order.
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.to_array().to_vec()
    }

    /// Energy breakdown of a parse graph under this grammar.
    fn energy<'py>(&self, py: Python<'py>, pg: &ParseGraph) -> PyResult<Bound<'py, PyDict>> {
        let b = total_energy(&pg.inner, &self.inner);
        let d = PyDict::new(py);
        d.set_item("tree", b.tree_energy)?;
        d.set_item("wall", b.wall_energy)?;
        d.set_item("furniture", b.furniture_energy)?;
        d.set_item("support", b.support_energy)?;
        d.set_item("group", b.group_energy)?;
        d.set_item("total", b.total)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Grammar(root={:?}, categories={})", self.inner.root, self.inner.categories().len())
    }
}

#[pyclass(module = "pysago", frozen)]
struct ParseGraph {
    inner: sago::grammar::ParseGraph,
}

#[pymethods]
impl ParseGraph {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        sago::grammar::ParseGraph::from_json(text).map(|inner| ParseGraph { inner }).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.objects.len()
    }

    /// Category of every object, in id order.
    fn categories(&self) -> Vec<String> {
        self.inner.objects.iter().map(|o| o.category.clone()).collect()
    }

    #[getter]
    fn energy(&self) -> Option<f64> {
        self.inner.energy_cache
    }
}

#[pyclass(module = "pysago", frozen)]
struct Catalog {
    inner: sago::scene::ModelCatalog,
}

#[pymethods]
impl Catalog {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        sago::scene::ModelCatalog::from_json(text).map(|inner| Catalog { inner }).map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        sago::scene::ModelCatalog::load(path).map(|inner| Catalog { inner }).map_err(err)
    }

    fn select_model(&self, category: &str, dims: [f64; 3]) -> PyResult<String> {
        sago::scene::select_model(&self.inner, category, dims).map_err(err)
    }
}

#[pyclass(module = "pysago", frozen)]
struct SceneLayout {
    inner: sago::scene::SceneLayout,
}

#[pymethods]
impl SceneLayout {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        sago::scene::SceneLayout::from_json(text).map(|inner| SceneLayout { inner }).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn to_obj(&self) -> String {
        sago::scene::layout_to_obj(&self.inner)
    }

    /// Validator findings; empty when the layout is clean.
    fn validate(&self) -> Vec<String> {
        sago::scene::validate_layout(&self.inner).iter().map(ToString::to_string).collect()
    }

    fn label_table(&self) -> std::collections::BTreeMap<String, u16> {
        self.inner.label_table.clone()
    }

    /// Sampled camera specs as JSON strings.
    fn cameras(&self) -> PyResult<Vec<String>> {
        self.inner
            .attributes
            .cameras
            .iter()
            .map(|c| serde_json::to_string(c).map_err(json_err))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.placed.len()
    }
}

/// Laplace-smoothed branch probabilities.
#[pyfunction]
#[pyo3(signature = (counts, alpha=1.0))]
fn estimate_branch_probs(counts: Vec<u64>, alpha: f64) -> PyResult<Vec<f64>> {
    sago::learning::estimate_branch_probs(&counts, alpha).map_err(err)
}

/// Learns a grammar bundle from a skeleton and a JSON array of training scenes.
#[pyfunction]
#[pyo3(signature = (skeleton_json, scenes_json, iterations=200, seed=0))]
fn learn(py: Python<'_>, skeleton_json: &str, scenes_json: &str, iterations: usize, seed: u64) -> PyResult<Grammar> {
    let skel = sago::grammar::GrammarDoc::from_json(skeleton_json).map_err(err)?;
    let scenes = scenes_from_json(scenes_json).map_err(err)?;
    let cd = CdConfig {
        iterations,
        ..Default::default()
    };
    let learned = py
        .detach(|| learn_grammar(&skel, &scenes, &cd, &SamplerConfig::default(), seed))
        .map_err(err)?;
    Ok(Grammar {
        inner: learned.grammar,
    })
}

/// Samples one scene. Returns the parse graph and the number of MH steps.
#[pyfunction]
#[pyo3(signature = (grammar, seed=0, beta=1.0, iter_max=20000, staged=true))]
fn sample(
    py: Python<'_>,
    grammar: &Grammar,
    seed: u64,
    beta: f64,
    iter_max: usize,
    staged: bool,
) -> PyResult<(ParseGraph, usize, bool)> {
    let cfg = SamplerConfig {
        beta,
        iter_max,
        staged,
        ..Default::default()
    };
    let g = &grammar.inner;
    let (pg, trace) = py
        .detach(|| sago::sampler::sample(g, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)))
        .map_err(err)?;
    Ok((ParseGraph { inner: pg }, trace.steps(), trace.converged))
}

#[pyfunction]
#[pyo3(signature = (pg, catalog, seed=0, attributes_json=None))]
fn instantiate(pg: &ParseGraph, catalog: &Catalog, seed: u64, attributes_json: Option<&str>) -> PyResult<SceneLayout> {
    let ranges = match attributes_json {
        Some(t) => serde_json::from_str(t).map_err(json_err)?,
        None => sago::scene::AttributeRanges::default(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sago::scene::instantiate_scene(&pg.inner, &catalog.inner, &ranges, &mut rng)
        .map(|inner| SceneLayout { inner })
        .map_err(err)
}

/// Renders one camera. Returns a dict with `width`, `height` and row-major
/// `depth`, `normal` (world, xyz triples), `instance` and `semantic` lists.
#[pyfunction]
fn render<'py>(py: Python<'py>, layout: &SceneLayout, camera_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let spec: CameraSpec = serde_json::from_str(camera_json).map_err(json_err)?;
    let l = &layout.inner;
    let f = py.detach(|| render_ground_truth(l, &spec)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("width", f.width)?;
    d.set_item("height", f.height)?;
    d.set_item("depth", f.depth)?;
    d.set_item("normal", f.normal)?;
    d.set_item("instance", f.instance)?;
    d.set_item("semantic", f.semantic)?;
    Ok(d)
}

/// Runs the command line with `args` (without the program name) and
/// returns its exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    py.detach(|| sago::cli::run(std::iter::once("sago".to_string()).chain(args)))
}

#[pymodule]
fn pysago(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SagoError", m.py().get_type::<SagoError>())?;
    m.add_class::<Grammar>()?;
    m.add_class::<ParseGraph>()?;
    m.add_class::<Catalog>()?;
    m.add_class::<SceneLayout>()?;
    m.add_function(wrap_pyfunction!(estimate_branch_probs, m)?)?;
    m.add_function(wrap_pyfunction!(learn, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(instantiate, m)?)?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
