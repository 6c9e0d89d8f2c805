//! Browser bindings: a steering session over a synthetic Table-III-shaped
//! corpus. Every call returns the session view as JSON.

use concord::clustering::DistanceMetric;
use concord::constraints::ConstraintKind;
use concord::corpus::{generate, SynthSpec};
use concord::steer::{Session, SessionConfig, SessionMetrics, SessionState};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct View<'a> {
    state: SessionState,
    metrics: &'a SessionMetrics,
    /// Set by the call that produced this view.
    note: Option<String>,
}

#[wasm_bindgen]
pub struct Demo {
    session: Session,
}

impl Demo {
    pub fn open(corpus_seed: u32, k: usize, w: f64, metric: &str, rng_seed: u32) -> Result<Self, String> {
        let spec = SynthSpec::table_iii(corpus_seed.into());
        let (corpus, truth) = generate(&spec).map_err(|e| e.to_string())?;
        let metric: DistanceMetric = metric.parse().map_err(|e: concord::Error| e.to_string())?;
        let config = SessionConfig { k, w, metric, rng_seed: rng_seed.into(), ..SessionConfig::default() };
        let corpus_ref = format!("synthetic:table-iii:{corpus_seed}");
        let session = Session::create("demo", corpus_ref, corpus, &[truth], config).map_err(|e| e.to_string())?;
        Ok(Self { session })
    }

    fn view(&self, note: Option<String>) -> String {
        serde_json::to_string(&View { state: self.session.state(), metrics: self.session.latest_metrics(), note })
            .expect("serializable view")
    }

    pub fn link(&mut self, kind: &str, a: &str, b: &str) -> Result<String, String> {
        let kind = ConstraintKind::parse(kind).map_err(|e| e.to_string())?;
        let p = self.session.add_constraint(kind, a, b).map_err(|e| match e {
            concord::Error::Inconsistent { chain, .. } => {
                format!("contradicts the must-link chain {}", self.session.describe_chain(&chain).join(" - "))
            }
            other => other.to_string(),
        })?;
        let note = if p.violated_by_reference { "new information" } else { "already implied by the reference" };
        Ok(self.view(Some(format!("{} {} {}: {note}", p.constraint.kind.tag(), a, b))))
    }

    pub fn unlink(&mut self, index: usize) -> Result<String, String> {
        let d = self.session.delete_constraint(index).map_err(|e| e.to_string())?;
        Ok(self.view(Some(format!("{} {} {}", d.action, d.removed.a, d.removed.b))))
    }

    pub fn rerun(&mut self) -> Result<String, String> {
        let e = self.session.recluster().map_err(|e| e.to_string())?;
        let note = format!("run {}: {} violated, objective {:.3}", e.run_index, e.metrics.violated, e.metrics.objective);
        Ok(self.view(Some(note)))
    }
}

#[wasm_bindgen]
impl Demo {
    /// `metric` is `cosine` or `squared_euclidean`.
    #[wasm_bindgen(constructor)]
    pub fn new(corpus_seed: u32, k: usize, w: f64, metric: &str, rng_seed: u32) -> Result<Demo, JsError> {
        Self::open(corpus_seed, k, w, metric, rng_seed).map_err(|e| JsError::new(&e))
    }

    pub fn state(&self) -> String {
        self.view(None)
    }

    /// Stages a `ML` or `CL` constraint between two document ids.
    pub fn add_constraint(&mut self, kind: &str, a: &str, b: &str) -> Result<String, JsError> {
        self.link(kind, a, b).map_err(|e| JsError::new(&e))
    }

    pub fn delete_constraint(&mut self, index: usize) -> Result<String, JsError> {
        self.unlink(index).map_err(|e| JsError::new(&e))
    }

    pub fn recluster(&mut self) -> Result<String, JsError> {
        self.rerun().map_err(|e| JsError::new(&e))
    }
}
