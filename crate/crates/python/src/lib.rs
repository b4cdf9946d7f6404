//! Python module `triage`: cleaning, labeling, preprocessing, training,
//! classification and replies over the core pipeline.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use triage_core::app::{PipelineConfig, Resources};
use triage_core::autoreply::{compose_reply, ReplyDecision, ThresholdPolicy};
use triage_core::corpus::{clean, clean_text, Direction, RawEmail};
use triage_core::eval::synth::{generate_corpus, SynthSpec};
use triage_core::labeling::{match_category, LabeledEmail};
use triage_core::models::Classifier;
use triage_core::pipeline::{evaluate, prepare_nn_samples, train_nn_classifier, train_tree_classifier};
use triage_core::TriageError;

fn py_err(e: TriageError) -> PyErr {
    match e {
        TriageError::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn raw(id: &str, subject: &str, body: &str) -> RawEmail {
    RawEmail {
        id: id.into(),
        thread_id: id.into(),
        direction: Direction::Incoming,
        subject: subject.into(),
        body: body.into(),
        timestamp: None,
    }
}

/// `(subject, body, category)` triples to labeled emails.
pub fn labeled(emails: &[(String, String, String)]) -> Result<Vec<LabeledEmail>, TriageError> {
    emails
        .iter()
        .enumerate()
        .map(|(i, (subject, body, category))| {
            Ok(LabeledEmail {
                email: clean(&raw(&format!("py-{}", i + 1), subject, body))?,
                category: category.clone(),
            })
        })
        .collect()
}

pub fn train(kind: &str, emails: &[(String, String, String)], seed: u64, augment: bool) -> Result<Classifier, TriageError> {
    let cfg = PipelineConfig { seed, ..PipelineConfig::default() };
    let res = Resources::helpdesk();
    let data = labeled(emails)?;
    match kind {
        "nn" => {
            let aug = cfg.augment_config();
            let samples = prepare_nn_samples(&data, &res.categories, &res.text, &res.lexicon, augment.then_some(&aug))?;
            let model = train_nn_classifier(&samples, &res.categories, &res.text, &cfg.train_config(), cfg.scale)?;
            Ok(Classifier::Mlp(model))
        }
        "tree" => Ok(Classifier::Tree(train_tree_classifier(&data, &res.categories, None)?)),
        other => Err(TriageError::InvalidArgument(format!("model kind must be nn or tree, got {other:?}"))),
    }
}

/// Punctuation removed and whitespace collapsed.
#[pyfunction]
#[pyo3(name = "clean")]
fn clean_py(text: &str) -> String {
    clean_text(text)
}

/// First matching helpdesk category, or None.
#[pyfunction]
#[pyo3(signature = (subject, body = ""))]
fn label(subject: &str, body: &str) -> PyResult<Option<String>> {
    let email = clean(&raw("py", subject, body)).map_err(py_err)?;
    Ok(match_category(&email, &Resources::helpdesk().categories).map(|c| c.name.clone()))
}

/// Lemmatized tokens with stop-words removed.
#[pyfunction]
fn preprocess(text: &str) -> Vec<String> {
    Resources::helpdesk().text.preprocess(text).into_inner()
}

/// Synthetic emails as `(subject, body, category)` with generated labels.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn synth(seed: u64) -> PyResult<Vec<(String, String, String)>> {
    let corpus = generate_corpus(&SynthSpec::helpdesk(seed)).map_err(py_err)?;
    Ok(corpus
        .emails
        .into_iter()
        .zip(corpus.labels)
        .map(|(e, l)| (e.subject, e.body, l))
        .collect())
}

fn decision_dict<'py>(py: Python<'py>, d: ReplyDecision) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("category", d.category)?;
    out.set_item("confidence", d.confidence)?;
    out.set_item("tailored", d.tailored)?;
    out.set_item("rendered", d.rendered)?;
    Ok(out)
}

#[pyclass(name = "Model", module = "triage", frozen)]
struct PyModel {
    inner: Classifier,
}

#[pymethods]
impl PyModel {
    /// Trains on `(subject, body, category)` triples. `kind` is "nn" or "tree".
    #[staticmethod]
    #[pyo3(signature = (kind, emails, seed = 0, augment = true))]
    fn train(kind: &str, emails: Vec<(String, String, String)>, seed: u64, augment: bool) -> PyResult<Self> {
        Ok(PyModel {
            inner: train(kind, &emails, seed, augment).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyModel {
            inner: Classifier::load(&path).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    #[getter]
    fn categories(&self) -> Vec<String> {
        self.inner.categories().names()
    }

    /// `(category, confidence)`.
    #[pyo3(signature = (subject, body = ""))]
    fn classify(&self, subject: &str, body: &str) -> PyResult<(String, f64)> {
        let email = clean(&raw("py", subject, body)).map_err(py_err)?;
        let p = self.inner.classify(&email).map_err(py_err)?;
        Ok((p.category, p.confidence))
    }

    #[pyo3(signature = (subject, body = "", threshold = 0.75))]
    fn reply<'py>(&self, py: Python<'py>, subject: &str, body: &str, threshold: f64) -> PyResult<Bound<'py, PyDict>> {
        let policy = ThresholdPolicy::new(threshold).map_err(py_err)?;
        let email = clean(&raw("py", subject, body)).map_err(py_err)?;
        let d = compose_reply(&email, &self.inner, &Resources::helpdesk().templates, &policy).map_err(py_err)?;
        decision_dict(py, d)
    }

    /// Classification report over `(subject, body, category)` triples.
    fn evaluate(&self, emails: Vec<(String, String, String)>) -> PyResult<String> {
        let data = labeled(&emails).map_err(py_err)?;
        let ev = evaluate(&self.inner, &data).map_err(py_err)?;
        Ok(ev.report.to_text())
    }

    fn __repr__(&self) -> String {
        format!("Model(kind={:?}, categories={})", self.kind(), self.inner.categories().len())
    }
}

#[pymodule]
fn triage(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(clean_py, m)?)?;
    m.add_function(wrap_pyfunction!(label, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_class::<PyModel>()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trains_both_kinds_from_triples() {
        let data = synth(4).unwrap();
        let tree = train("tree", &data, 4, false).unwrap();
        assert_eq!(tree.kind().to_string(), "tree");
        let nn = train("nn", &data[..60], 4, true).unwrap();
        assert_eq!(nn.categories().len(), 5);
        assert!(train("forest", &data, 4, false).is_err());
    }
}
