//! Opaque inference-engine abstraction: model descriptors, an engine
//! registry, the automatic backend-selection policy, and a deterministic
//! stub engine for hermetic tests.
//!
//! Model artifacts are referenced by path only; no graph format is parsed
//! here. Real engines (native graph runtimes, portable graph runtimes,
//! vendor-accelerated runtimes) are integration points behind the
//! [`InferenceEngine`] trait.

pub mod stub;
mod tensor;

pub use tensor::{DType, Tensor, TensorMap, TensorSpec, TENSOR_MAGIC};

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model task within the parsing pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    DocOrientation,
    Unwarp,
    TextDet,
    LineOrientation,
    TextRec,
    Layout,
    RegionDet,
    TableCls,
    TableCell,
    TableStruct,
    Formula,
    Chart,
    Seal,
}

/// Kind of inference engine backing a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    NativeGraph,
    PortableGraph,
    VendorAccelerated,
    Stub,
}

impl EngineKind {
    pub const ALL: [EngineKind; 4] = [
        EngineKind::NativeGraph,
        EngineKind::PortableGraph,
        EngineKind::VendorAccelerated,
        EngineKind::Stub,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EngineKind::NativeGraph => "native_graph",
            EngineKind::PortableGraph => "portable_graph",
            EngineKind::VendorAccelerated => "vendor_accelerated",
            EngineKind::Stub => "stub",
        }
    }

    /// Artifact file extension conventionally used by each kind.
    pub fn artifact_extension(&self) -> &'static str {
        match self {
            EngineKind::NativeGraph => "ngraph",
            EngineKind::PortableGraph => "pgraph",
            EngineKind::VendorAccelerated => "vgraph",
            EngineKind::Stub => "stub",
        }
    }
}

/// Compute device for inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Device {
    Cpu,
    Gpu(u32),
}

impl Default for Device {
    fn default() -> Self {
        Device::Cpu
    }
}

/// Engine tuning knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub fp16: bool,
    pub intra_op_threads: usize,
    pub device: Device,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            fp16: false,
            intra_op_threads: 1,
            device: Device::Cpu,
        }
    }
}

/// Description of one model artifact and how to feed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub name: String,
    pub task: TaskKind,
    pub input_specs: Vec<TensorSpec>,
    pub artifact_path: PathBuf,
    pub charset_path: Option<PathBuf>,
    pub backend_hints: BTreeSet<EngineKind>,
}

impl ModelDescriptor {
    pub fn new(name: impl Into<String>, task: TaskKind, artifact_path: impl Into<PathBuf>) -> Self {
        Self {
            name: name.into(),
            task,
            input_specs: vec![TensorSpec::new("image", DType::U8, vec![-1, -1, 3])],
            artifact_path: artifact_path.into(),
            charset_path: None,
            backend_hints: BTreeSet::from([EngineKind::Stub]),
        }
    }

    /// Validates descriptor invariants (recognition models carry a charset).
    pub fn validate(&self) -> Result<()> {
        if self.task == TaskKind::TextRec && self.charset_path.is_none() {
            return Err(Error::config(
                format!("model '{}'", self.name),
                "text recognition models require charset_path",
            ));
        }
        Ok(())
    }
}

/// An inference engine able to execute model artifacts.
///
/// Implementations must either be safe for concurrent `run` calls or
/// serialize internally; the stub engine is fully concurrent.
pub trait InferenceEngine: Send + Sync {
    fn kind(&self) -> EngineKind;

    /// Whether the engine can execute in half precision.
    fn supports_fp16(&self) -> bool {
        false
    }

    fn run(&self, model: &ModelDescriptor, inputs: &TensorMap) -> Result<TensorMap>;
}

/// Constructor invoked when an engine kind is first instantiated.
pub type EngineFactory = Arc<dyn Fn(&EngineConfig) -> Result<Arc<dyn InferenceEngine>> + Send + Sync>;

/// Registry of engine factories, keyed by kind.
#[derive(Default, Clone)]
pub struct EngineRegistry {
    factories: std::collections::BTreeMap<EngineKind, EngineFactory>,
}

impl EngineRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry with only the stub engine, the default for hermetic runs.
    pub fn with_stub() -> Self {
        let mut reg = Self::new();
        reg.register(EngineKind::Stub, Arc::new(|cfg| stub::StubEngine::create(cfg)))
            .expect("empty registry accepts stub");
        reg
    }

    /// Registers a factory for an engine kind.
    pub fn register(&mut self, kind: EngineKind, factory: EngineFactory) -> Result<()> {
        if self.factories.contains_key(&kind) {
            return Err(Error::DuplicateEngine(kind.as_str()));
        }
        self.factories.insert(kind, factory);
        Ok(())
    }

    /// Kinds currently registered, in a fixed order.
    pub fn kinds(&self) -> BTreeSet<EngineKind> {
        self.factories.keys().copied().collect()
    }

    pub fn instantiate(&self, kind: EngineKind, cfg: &EngineConfig) -> Result<Arc<dyn InferenceEngine>> {
        let factory = self.factories.get(&kind).ok_or(Error::NoEngineAvailable)?;
        factory(cfg)
    }
}

/// Runtime environment fed into backend selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeEnv {
    pub device: Device,
    pub available: BTreeSet<EngineKind>,
}

impl RuntimeEnv {
    pub fn new(device: Device, available: BTreeSet<EngineKind>) -> Self {
        Self { device, available }
    }
}

/// Result of backend selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackendChoice {
    pub kind: EngineKind,
    /// True when no hinted kind was available and selection fell through to
    /// any registered kind.
    pub fallback: bool,
}

/// Fixed priority order per device. On GPU, accelerated engines come first;
/// on CPU, portable engines win on startup cost.
pub fn priority_order(device: Device) -> [EngineKind; 4] {
    match device {
        Device::Gpu(_) => [
            EngineKind::VendorAccelerated,
            EngineKind::NativeGraph,
            EngineKind::PortableGraph,
            EngineKind::Stub,
        ],
        Device::Cpu => [
            EngineKind::PortableGraph,
            EngineKind::NativeGraph,
            EngineKind::Stub,
            EngineKind::VendorAccelerated,
        ],
    }
}

/// Picks an engine kind for a model.
///
/// A kind must be both registered and hinted to win on priority; when the
/// intersection is empty, selection falls through to the first registered
/// kind in priority order and flags the choice as a fallback. Fails only
/// when nothing is registered.
pub fn select_backend(
    env: &RuntimeEnv,
    model: &ModelDescriptor,
    _cfg: &EngineConfig,
) -> Result<BackendChoice> {
    if env.available.is_empty() {
        return Err(Error::NoEngineAvailable);
    }
    let order = priority_order(env.device);
    for kind in order {
        if env.available.contains(&kind) && model.backend_hints.contains(&kind) {
            return Ok(BackendChoice {
                kind,
                fallback: false,
            });
        }
    }
    for kind in order {
        if env.available.contains(&kind) {
            tracing::warn!(
                model = %model.name,
                chosen = kind.as_str(),
                "no hinted backend available; falling through"
            );
            return Ok(BackendChoice {
                kind,
                fallback: true,
            });
        }
    }
    Err(Error::NoEngineAvailable)
}

/// Validates the inputs against the model contract and executes the engine.
pub fn run(engine: &dyn InferenceEngine, model: &ModelDescriptor, inputs: &TensorMap) -> Result<TensorMap> {
    for spec in &model.input_specs {
        let tensor = inputs.get(&spec.name).ok_or_else(|| {
            Error::ShapeMismatch(format!(
                "model '{}' expects input '{}'",
                model.name, spec.name
            ))
        })?;
        spec.check(tensor)?;
    }
    engine.run(model, inputs)
}

/// Outcome of an on-demand artifact re-resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversionOutcome {
    pub descriptor: ModelDescriptor,
    /// False when no pre-converted sibling artifact was found and the
    /// original descriptor is returned unchanged.
    pub converted: bool,
}

/// Re-resolves a model artifact to a pre-converted sibling file for the
/// target engine kind, when such a sibling exists on disk.
pub fn convert_on_demand(model: &ModelDescriptor, to: EngineKind) -> ConversionOutcome {
    let current_ext = model
        .artifact_path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("");
    if current_ext == to.artifact_extension() {
        return ConversionOutcome {
            descriptor: model.clone(),
            converted: true,
        };
    }
    let sibling = model.artifact_path.with_extension(to.artifact_extension());
    if sibling.exists() {
        let mut descriptor = model.clone();
        descriptor.artifact_path = sibling;
        ConversionOutcome {
            descriptor,
            converted: true,
        }
    } else {
        tracing::warn!(
            model = %model.name,
            target = to.as_str(),
            "no pre-converted sibling artifact; keeping original"
        );
        ConversionOutcome {
            descriptor: model.clone(),
            converted: false,
        }
    }
}
