//! Deterministic fixture-backed stub engine.
//!
//! The stub stands in for trained neural models so that every pipeline test
//! runs hermetically. A stub model's `artifact_path` is a directory of
//! fixture tensors keyed by the content hash of the call inputs: running the
//! model looks up `<key>.<output_name>.tensor` files and returns them
//! verbatim. Identical inputs therefore always yield identical outputs.

use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::{EngineConfig, EngineKind, InferenceEngine, ModelDescriptor, Tensor, TensorMap};
use crate::error::{Error, Result};

/// Hex length of the fixture key derived from the input hash.
const KEY_LEN: usize = 16;

/// Content hash of an input tensor map, used as the fixture key.
pub fn fixture_key(inputs: &TensorMap) -> String {
    let mut hasher = Sha256::new();
    for (name, tensor) in inputs {
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
        hasher.update(tensor.to_bytes());
    }
    let digest = hasher.finalize();
    let mut key = String::with_capacity(KEY_LEN);
    for byte in digest.iter().take(KEY_LEN / 2) {
        key.push_str(&format!("{byte:02x}"));
    }
    key
}

/// Writes fixture tensors for the given inputs into a stub model directory
/// and returns the fixture key.
pub fn write_fixtures(dir: &Path, inputs: &TensorMap, outputs: &TensorMap) -> Result<String> {
    std::fs::create_dir_all(dir)?;
    let key = fixture_key(inputs);
    for (name, tensor) in outputs {
        let path = dir.join(format!("{key}.{name}.tensor"));
        std::fs::write(path, tensor.to_bytes())?;
    }
    Ok(key)
}

/// Fixture-backed engine. Safe for concurrent `run` calls.
pub struct StubEngine {
    fp16_degraded: bool,
}

impl StubEngine {
    pub fn create(cfg: &EngineConfig) -> Result<Arc<dyn InferenceEngine>> {
        if cfg.fp16 {
            tracing::warn!("stub engine has no FP16 support; degrading to F32");
        }
        Ok(Arc::new(StubEngine {
            fp16_degraded: cfg.fp16,
        }))
    }

    /// True when FP16 was requested and silently degraded to F32.
    pub fn fp16_degraded(&self) -> bool {
        self.fp16_degraded
    }
}

impl InferenceEngine for StubEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Stub
    }

    fn run(&self, model: &ModelDescriptor, inputs: &TensorMap) -> Result<TensorMap> {
        let key = fixture_key(inputs);
        let dir = &model.artifact_path;
        let mut outputs = TensorMap::new();
        let entries = std::fs::read_dir(dir).map_err(|e| Error::EngineFailure {
            model: model.name.clone(),
            key: key.clone(),
            message: format!("cannot read fixture dir {}: {e}", dir.display()),
        })?;
        let prefix = format!("{key}.");
        for entry in entries {
            let entry = entry?;
            let file_name = entry.file_name();
            let Some(name) = file_name.to_str() else {
                continue;
            };
            if let Some(rest) = name.strip_prefix(&prefix) {
                if let Some(output_name) = rest.strip_suffix(".tensor") {
                    let bytes = std::fs::read(entry.path())?;
                    outputs.insert(output_name.to_string(), Tensor::from_bytes(&bytes)?);
                }
            }
        }
        if outputs.is_empty() {
            return Err(Error::EngineFailure {
                model: model.name.clone(),
                key,
                message: "no fixture found for input hash".into(),
            });
        }
        Ok(outputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{run, TaskKind};

    fn inputs() -> TensorMap {
        TensorMap::from([(
            "image".to_string(),
            Tensor::from_u8(vec![2, 2, 3], vec![1; 12]).unwrap(),
        )])
    }

    #[test]
    fn fixture_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let outs = TensorMap::from([(
            "scores".to_string(),
            Tensor::from_f32(vec![4], &[0.9, 0.03, 0.04, 0.03]).unwrap(),
        )]);
        write_fixtures(dir.path(), &inputs(), &outs).unwrap();

        let model = ModelDescriptor::new("orient", TaskKind::DocOrientation, dir.path());
        let engine = StubEngine::create(&EngineConfig::default()).unwrap();
        let got = run(engine.as_ref(), &model, &inputs()).unwrap();
        assert_eq!(got, outs);
    }

    #[test]
    fn missing_fixture_reports_model_and_key() {
        let dir = tempfile::tempdir().unwrap();
        let model = ModelDescriptor::new("det", TaskKind::TextDet, dir.path());
        let engine = StubEngine::create(&EngineConfig::default()).unwrap();
        let err = run(engine.as_ref(), &model, &inputs()).unwrap_err();
        match err {
            Error::EngineFailure { model, key, .. } => {
                assert_eq!(model, "det");
                assert_eq!(key.len(), KEY_LEN);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn wrong_rank_input_is_shape_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let model = ModelDescriptor::new("det", TaskKind::TextDet, dir.path());
        let engine = StubEngine::create(&EngineConfig::default()).unwrap();
        let bad = TensorMap::from([(
            "image".to_string(),
            Tensor::from_u8(vec![4], vec![0; 4]).unwrap(),
        )]);
        assert!(matches!(
            run(engine.as_ref(), &model, &bad),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn stub_is_bit_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let outs = TensorMap::from([("logits".to_string(), Tensor::from_f32(vec![1, 2], &[0.5, 0.5]).unwrap())]);
        write_fixtures(dir.path(), &inputs(), &outs).unwrap();
        let model = ModelDescriptor::new("rec", TaskKind::Layout, dir.path());
        let engine = StubEngine::create(&EngineConfig::default()).unwrap();
        let a = engine.run(&model, &inputs()).unwrap();
        let b = engine.run(&model, &inputs()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fp16_request_degrades_with_flag() {
        let cfg = EngineConfig {
            fp16: true,
            ..Default::default()
        };
        let engine = StubEngine::create(&cfg).unwrap();
        // Downcast through the concrete constructor for the flag.
        let concrete = StubEngine { fp16_degraded: cfg.fp16 };
        assert!(concrete.fp16_degraded());
        assert_eq!(engine.kind(), EngineKind::Stub);
    }
}
