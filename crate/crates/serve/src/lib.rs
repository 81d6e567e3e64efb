//! Serving layer: a lightweight HTTP API over the parsing pipelines and an
//! MCP server with local, self-hosted and hosted-cloud working modes.

pub mod http;
pub mod mcp;
pub mod pipelines;
pub mod pool;

pub use http::{serve_http, RunningService, ServiceConfig};
pub use mcp::{serve_streamable_http, McpConfig, McpServer, McpSource, McpTransport, RunningMcp};
pub use pipelines::{json_with_markdown, PipelineHandle, PipelineKind};
pub use pool::{PoolError, WorkerPool};
