//! MCP server exposing the OCR and structure pipelines as tools.
//!
//! Three working modes: Local runs the in-process pipelines; SelfHosted
//! forwards to a user-hosted HTTP service's /v1 endpoints; HostedCloud
//! forwards to a remote URL with a bearer token. Two transports: stdio
//! (newline-delimited JSON-RPC, strictly sequential) and Streamable HTTP
//! (POST /mcp, concurrent calls bounded by parallelism).

use std::io::{BufRead, Write};
use std::sync::Arc;

use base64::Engine as _;
use serde_json::{json, Value};

use ocrkit_core::error::{Error, Result};

use crate::pipelines::{json_with_markdown, PipelineHandle, PipelineKind};

/// MCP protocol revision implemented here.
pub const PROTOCOL_VERSION: &str = "2025-06-18";

/// Where tool calls execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McpSource {
    Local,
    HostedCloud,
    SelfHosted,
}

/// Wire transport of the MCP server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McpTransport {
    Stdio,
    StreamableHttp,
}

/// MCP server configuration.
#[derive(Debug, Clone)]
pub struct McpConfig {
    pub pipeline: PipelineKind,
    pub source: McpSource,
    pub server_url: Option<String>,
    pub access_token: Option<String>,
    pub transport: McpTransport,
    pub timeout_secs: u64,
    /// Concurrent tool calls allowed on the HTTP transport.
    pub parallelism: usize,
}

impl Default for McpConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineKind::Ocr,
            source: McpSource::Local,
            server_url: None,
            access_token: None,
            transport: McpTransport::Stdio,
            timeout_secs: 60,
            parallelism: 1,
        }
    }
}

impl McpConfig {
    /// Checks the mode invariants at startup.
    pub fn validate(&self) -> Result<()> {
        match self.source {
            McpSource::Local => Ok(()),
            McpSource::SelfHosted => {
                if self.server_url.is_none() {
                    return Err(Error::config(
                        "mcp.server_url",
                        "self_hosted mode requires a server url",
                    ));
                }
                Ok(())
            }
            McpSource::HostedCloud => {
                if self.server_url.is_none() {
                    return Err(Error::config(
                        "mcp.server_url",
                        "hosted_cloud mode requires a server url",
                    ));
                }
                if self.access_token.is_none() {
                    return Err(Error::config(
                        "mcp.access_token",
                        "hosted_cloud mode requires an access token",
                    ));
                }
                Ok(())
            }
        }
    }
}

enum Executor {
    Local(Arc<PipelineHandle>),
    Remote {
        base_url: String,
        token: Option<String>,
        timeout_secs: u64,
    },
}

/// The MCP server: a JSON-RPC message handler plus transport loops.
pub struct McpServer {
    config: McpConfig,
    executor: Executor,
}

impl McpServer {
    /// Local mode server over in-process pipelines.
    pub fn local(config: McpConfig, handle: Arc<PipelineHandle>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            executor: Executor::Local(handle),
        })
    }

    /// Forwarding server (SelfHosted or HostedCloud).
    pub fn forwarding(config: McpConfig) -> Result<Self> {
        config.validate()?;
        let base_url = config
            .server_url
            .clone()
            .expect("validate guarantees a url");
        let token = config.access_token.clone();
        Ok(Self {
            executor: Executor::Remote {
                base_url,
                token,
                timeout_secs: config.timeout_secs,
            },
            config,
        })
    }

    fn tool_descriptors() -> Value {
        let input_schema = json!({
            "type": "object",
            "properties": {
                "file": {
                    "type": "string",
                    "description": "Path of a local image or PDF file",
                },
                "image_base64": {
                    "type": "string",
                    "description": "Base64-encoded image or PDF bytes",
                },
            },
        });
        json!([
            {
                "name": "ocr",
                "description": "Extract text lines from a document image or PDF",
                "inputSchema": input_schema,
            },
            {
                "name": "structure",
                "description": "Parse a document image or PDF into structured JSON and Markdown",
                "inputSchema": input_schema,
            },
        ])
    }

    fn load_argument_bytes(args: &Value) -> std::result::Result<Vec<u8>, String> {
        if let Some(encoded) = args.get("image_base64").and_then(|v| v.as_str()) {
            return base64::engine::general_purpose::STANDARD
                .decode(encoded)
                .map_err(|e| format!("invalid base64 payload: {e}"));
        }
        if let Some(path) = args.get("file").and_then(|v| v.as_str()) {
            return std::fs::read(path).map_err(|e| format!("cannot read file '{path}': {e}"));
        }
        Err("arguments must provide 'file' or 'image_base64'".into())
    }

    fn call_tool(&self, name: &str, args: &Value) -> std::result::Result<String, String> {
        let bytes = Self::load_argument_bytes(args)?;
        match &self.executor {
            Executor::Local(handle) => match name {
                "ocr" => handle.run_ocr_bytes(&bytes).map_err(|e| e.to_string()),
                "structure" => handle
                    .run_structure_bytes(&bytes)
                    .map(|(json, markdown)| json_with_markdown(&json, &markdown))
                    .map_err(|e| e.to_string()),
                other => Err(format!("unknown tool '{other}'")),
            },
            Executor::Remote {
                base_url,
                token,
                timeout_secs,
            } => {
                if name != "ocr" && name != "structure" {
                    return Err(format!("unknown tool '{name}'"));
                }
                let is_pdf = bytes.starts_with(b"%PDF");
                let field = if is_pdf { "pdf" } else { "image" };
                let payload =
                    json!({ field: base64::engine::general_purpose::STANDARD.encode(&bytes) });
                let url = format!("{}/v1/{name}", base_url.trim_end_matches('/'));
                let client = reqwest::blocking::Client::builder()
                    .timeout(std::time::Duration::from_secs(*timeout_secs))
                    .build()
                    .map_err(|e| e.to_string())?;
                let mut request = client.post(&url).json(&payload);
                if let Some(token) = token {
                    request = request.bearer_auth(token);
                }
                let response = request.send().map_err(|e| e.to_string())?;
                let status = response.status();
                let text = response.text().map_err(|e| e.to_string())?;
                if !status.is_success() {
                    return Err(format!("upstream returned {status}: {text}"));
                }
                Ok(text)
            }
        }
    }

    fn rpc_error(id: Value, code: i64, message: &str) -> Value {
        json!({
            "jsonrpc": "2.0",
            "id": id,
            "error": { "code": code, "message": message },
        })
    }

    /// Handles one JSON-RPC message; notifications return None.
    pub fn handle_message(&self, raw: &str) -> Option<String> {
        let message: Value = match serde_json::from_str(raw) {
            Ok(value) => value,
            Err(e) => {
                return Some(
                    Self::rpc_error(Value::Null, -32700, &format!("parse error: {e}")).to_string(),
                )
            }
        };
        let id = message.get("id").cloned();
        let method = message.get("method").and_then(|m| m.as_str()).unwrap_or("");

        // Notifications (no id) get no response.
        let id = match id {
            Some(id) if !id.is_null() => id,
            _ => return None,
        };

        let result = match method {
            "initialize" => json!({
                "protocolVersion": PROTOCOL_VERSION,
                "capabilities": { "tools": {} },
                "serverInfo": {
                    "name": "ocrkit-mcp",
                    "version": env!("CARGO_PKG_VERSION"),
                },
            }),
            "ping" => json!({}),
            "tools/list" => json!({ "tools": Self::tool_descriptors() }),
            "tools/call" => {
                let params = message.get("params").cloned().unwrap_or(Value::Null);
                let name = params.get("name").and_then(|n| n.as_str()).unwrap_or("");
                let args = params
                    .get("arguments")
                    .cloned()
                    .unwrap_or_else(|| json!({}));
                match self.call_tool(name, &args) {
                    Ok(text) => json!({
                        "content": [{ "type": "text", "text": text }],
                        "isError": false,
                    }),
                    // Tool failures are structured results, never crashes.
                    Err(message) => json!({
                        "content": [{ "type": "text", "text": message }],
                        "isError": true,
                    }),
                }
            }
            other => {
                return Some(
                    Self::rpc_error(id, -32601, &format!("method '{other}' not found")).to_string(),
                )
            }
        };

        Some(json!({ "jsonrpc": "2.0", "id": id, "result": result }).to_string())
    }

    /// Runs the stdio transport loop: newline-delimited JSON-RPC messages,
    /// strictly sequential.
    pub fn run_stdio<R: BufRead, W: Write>(&self, reader: R, mut writer: W) -> Result<()> {
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(response) = self.handle_message(&line) {
                writeln!(writer, "{response}")?;
                writer.flush()?;
            }
        }
        Ok(())
    }

    pub fn config(&self) -> &McpConfig {
        &self.config
    }
}

/// A running Streamable HTTP MCP endpoint.
pub struct RunningMcp {
    pub addr: std::net::SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<()>,
}

impl RunningMcp {
    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.task).await;
    }
}

/// Serves MCP over Streamable HTTP: JSON-RPC requests POSTed to /mcp, one
/// JSON response per request. Concurrent tool calls are bounded by the
/// configured parallelism.
pub async fn serve_streamable_http(
    server: Arc<McpServer>,
    bind_address: &str,
    port: u16,
) -> std::io::Result<RunningMcp> {
    use axum::routing::post;

    let limit = Arc::new(tokio::sync::Semaphore::new(
        server.config().parallelism.max(1),
    ));
    let app = axum::Router::new().route(
        "/mcp",
        post(move |body: String| {
            let server = server.clone();
            let limit = limit.clone();
            async move {
                let _permit = limit.acquire_owned().await.expect("semaphore open");
                let response =
                    tokio::task::spawn_blocking(move || server.handle_message(&body))
                        .await
                        .unwrap_or_else(|e| {
                            Some(
                                serde_json::json!({
                                    "jsonrpc": "2.0",
                                    "id": null,
                                    "error": { "code": -32603, "message": e.to_string() },
                                })
                                .to_string(),
                            )
                        });
                match response {
                    Some(text) => (
                        [("content-type", "application/json")],
                        text,
                    )
                        .into_response(),
                    None => axum::http::StatusCode::ACCEPTED.into_response(),
                }
            }
        }),
    );

    let listener = tokio::net::TcpListener::bind(format!("{bind_address}:{port}")).await?;
    let addr = listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        let server = axum::serve(listener, app).with_graceful_shutdown(async {
            let _ = rx.await;
        });
        if let Err(e) = server.await {
            tracing::error!("mcp http server error: {e}");
        }
    });
    Ok(RunningMcp {
        addr,
        shutdown: Some(tx),
        task,
    })
}

use axum::response::IntoResponse;
