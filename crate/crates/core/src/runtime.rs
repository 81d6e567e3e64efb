//! Shared inference runtime: the model registry plus cached engine
//! instances, resolved through the backend-selection policy.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use crate::backends::{
    self, select_backend, EngineConfig, EngineKind, EngineRegistry, InferenceEngine,
    ModelDescriptor, RuntimeEnv, TaskKind, TensorMap,
};
use crate::error::{Error, Result};
use crate::ocr::charset::Charset;

/// Named model descriptors known to the pipeline.
#[derive(Debug, Clone, Default)]
pub struct ModelSet {
    models: BTreeMap<String, ModelDescriptor>,
}

impl ModelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, model: ModelDescriptor) -> Result<()> {
        model.validate()?;
        self.models.insert(model.name.clone(), model);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&ModelDescriptor> {
        self.models.get(name).ok_or_else(|| {
            Error::config(format!("model '{name}'"), "not present in model registry")
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(|s| s.as_str())
    }
}

/// Task-to-model bindings used by a pipeline configuration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaskBindings {
    bindings: BTreeMap<TaskKind, String>,
}

impl TaskBindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, task: TaskKind, model_name: impl Into<String>) {
        self.bindings.insert(task, model_name.into());
    }

    pub fn get(&self, task: TaskKind) -> Option<&str> {
        self.bindings.get(&task).map(|s| s.as_str())
    }

    pub fn require(&self, task: TaskKind) -> Result<&str> {
        self.get(task).ok_or_else(|| {
            Error::config(
                format!("bindings.{task:?}"),
                "no model bound for this task",
            )
        })
    }
}

/// Resolves models to engines and executes inference calls.
///
/// Engine instances are created lazily per kind and cached; the stub engine
/// is safe for concurrent calls, so the context can be shared across
/// threads.
pub struct InferenceContext {
    models: ModelSet,
    registry: EngineRegistry,
    engine_cfg: EngineConfig,
    instances: Mutex<BTreeMap<EngineKind, Arc<dyn InferenceEngine>>>,
    charsets: Mutex<BTreeMap<String, Arc<Charset>>>,
}

impl InferenceContext {
    pub fn new(models: ModelSet, registry: EngineRegistry, engine_cfg: EngineConfig) -> Self {
        Self {
            models,
            registry,
            engine_cfg,
            instances: Mutex::new(BTreeMap::new()),
            charsets: Mutex::new(BTreeMap::new()),
        }
    }

    /// Context backed only by the stub engine.
    pub fn with_stub(models: ModelSet) -> Self {
        Self::new(models, EngineRegistry::with_stub(), EngineConfig::default())
    }

    pub fn models(&self) -> &ModelSet {
        &self.models
    }

    pub fn engine_config(&self) -> &EngineConfig {
        &self.engine_cfg
    }

    fn env(&self) -> RuntimeEnv {
        RuntimeEnv::new(self.engine_cfg.device, self.registry.kinds())
    }

    fn engine(&self, kind: EngineKind) -> Result<Arc<dyn InferenceEngine>> {
        let mut cache = self.instances.lock().expect("engine cache poisoned");
        if let Some(engine) = cache.get(&kind) {
            return Ok(engine.clone());
        }
        let engine = self.registry.instantiate(kind, &self.engine_cfg)?;
        cache.insert(kind, engine.clone());
        Ok(engine)
    }

    /// Runs the named model on the given inputs.
    pub fn run_model(&self, model_name: &str, inputs: &TensorMap) -> Result<TensorMap> {
        let model = self.models.get(model_name)?;
        let choice = select_backend(&self.env(), model, &self.engine_cfg)?;
        let engine = self.engine(choice.kind)?;
        backends::run(engine.as_ref(), model, inputs)
    }

    /// Loads (and caches) the charset attached to a recognition model.
    pub fn charset(&self, model_name: &str) -> Result<Arc<Charset>> {
        let mut cache = self.charsets.lock().expect("charset cache poisoned");
        if let Some(cs) = cache.get(model_name) {
            return Ok(cs.clone());
        }
        let model = self.models.get(model_name)?;
        let path = model.charset_path.as_ref().ok_or_else(|| {
            Error::config(format!("model '{model_name}'"), "missing charset_path")
        })?;
        let cs = Arc::new(Charset::load(path)?);
        cache.insert(model_name.to_string(), cs.clone());
        Ok(cs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{stub, Tensor};

    #[test]
    fn run_model_resolves_through_selection() {
        let dir = tempfile::tempdir().unwrap();
        let inputs = TensorMap::from([(
            "image".to_string(),
            Tensor::from_u8(vec![1, 1, 3], vec![5, 5, 5]).unwrap(),
        )]);
        let outputs = TensorMap::from([(
            "scores".to_string(),
            Tensor::from_f32(vec![2], &[0.9, 0.1]).unwrap(),
        )]);
        stub::write_fixtures(dir.path(), &inputs, &outputs).unwrap();

        let mut models = ModelSet::new();
        models
            .insert(ModelDescriptor::new(
                "cls",
                TaskKind::LineOrientation,
                dir.path(),
            ))
            .unwrap();
        let ctx = InferenceContext::with_stub(models);
        let got = ctx.run_model("cls", &inputs).unwrap();
        assert_eq!(got, outputs);
    }

    #[test]
    fn unknown_model_is_config_error() {
        let ctx = InferenceContext::with_stub(ModelSet::new());
        let err = ctx.run_model("nope", &TensorMap::new()).unwrap_err();
        assert!(matches!(err, Error::ConfigError { .. }));
    }
}
