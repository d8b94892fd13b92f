use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde_json::Value;
use thiserror::Error;

use super::frame::{read_frame, write_frame, MsgType};
use super::{decode_certificate, decode_feedback, encode_canonical, Ack, AckStatus};
use crate::model::{FeedbackReport, QualityCertificate, Timestamp};

/// How long a connection may take to deliver its request.
const READ_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("BIND_FAILED: {0}")]
    BindFailed(String),
}

/// Application side of the peer. An `Err` becomes an ERROR frame.
pub trait Handler: Send + Sync {
    fn on_certificate(&self, cert: &QualityCertificate) -> Result<AckStatus, String>;
    fn on_feedback(&self, report: &FeedbackReport) -> Result<AckStatus, String>;
}

/// Accepts certificates for a fixed set of orders and feedback for any
/// certificate, optionally filing each document in an inbox directory.
#[derive(Debug, Clone, Default)]
pub struct OrderBook {
    orders: BTreeSet<String>,
    inbox: Option<PathBuf>,
}

impl OrderBook {
    pub fn new(orders: impl IntoIterator<Item = String>) -> Self {
        Self {
            orders: orders.into_iter().collect(),
            inbox: None,
        }
    }

    pub fn with_inbox(mut self, dir: impl Into<PathBuf>) -> Self {
        self.inbox = Some(dir.into());
        self
    }

    fn file(&self, id: &str, suffix: &str, bytes: &[u8]) -> Result<(), String> {
        let Some(dir) = &self.inbox else { return Ok(()) };
        let name: String = id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
            .collect();
        let path = dir.join(format!("{name}.{suffix}.json"));
        fs::write(&path, bytes).map_err(|e| format!("cannot store {}: {e}", path.display()))
    }
}

impl Handler for OrderBook {
    fn on_certificate(&self, cert: &QualityCertificate) -> Result<AckStatus, String> {
        if !self.orders.contains(&cert.order_id) {
            return Ok(AckStatus::UnknownOrder);
        }
        self.file(&cert.certificate_id, "cert", &super::encode_certificate(cert))?;
        Ok(AckStatus::Accepted)
    }

    fn on_feedback(&self, report: &FeedbackReport) -> Result<AckStatus, String> {
        self.file(&report.certificate_id, "feedback", &super::encode_feedback(report))?;
        Ok(AckStatus::Accepted)
    }
}

/// Append-only record of handled requests, kept in memory and optionally
/// mirrored to a file.
#[derive(Debug, Default)]
pub struct AuditLog {
    inner: Mutex<(Vec<String>, Option<File>)>,
}

impl AuditLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_file(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            inner: Mutex::new((Vec::new(), Some(file))),
        })
    }

    pub fn record(&self, direction: &str, msg_type: &str, certificate_id: &str, status: &str) {
        let id = if certificate_id.is_empty() { "-" } else { certificate_id };
        let line = format!("{} {direction} {msg_type} {id} {status}", Timestamp::now());
        let mut guard = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(f) = guard.1.as_mut() {
            // The in-memory copy stays authoritative if the disk fails.
            let _ = writeln!(f, "{line}");
        }
        guard.0.push(line);
    }

    pub fn lines(&self) -> Vec<String> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner()).0.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap_or_else(|p| p.into_inner()).0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn claimed_id(payload: &[u8]) -> String {
    serde_json::from_slice::<Value>(payload)
        .ok()
        .and_then(|v| v.get("certificate_id")?.as_str().map(str::to_owned))
        .unwrap_or_default()
}

struct Response {
    msg_type: MsgType,
    payload: Vec<u8>,
    request: &'static str,
    certificate_id: String,
    status: String,
}

impl Response {
    fn error(request: &'static str, certificate_id: String, code: &str, reason: String) -> Self {
        Self {
            msg_type: MsgType::Error,
            payload: format!("{code}: {reason}").into_bytes(),
            request,
            certificate_id,
            status: code.to_string(),
        }
    }

    fn ack(request: &'static str, msg_type: MsgType, certificate_id: String, status: AckStatus) -> Self {
        let ack = Ack {
            certificate_id: certificate_id.clone(),
            status,
        };
        Self {
            msg_type,
            payload: encode_canonical(&ack),
            request,
            certificate_id,
            status: status.to_string(),
        }
    }
}

fn respond(stream: &mut TcpStream, handler: &dyn Handler) -> Response {
    let msg = match read_frame(stream) {
        Ok(m) => m,
        Err(e) => return Response::error("-", String::new(), e.code(), e.to_string()),
    };
    let request = msg.msg_type.name();
    let handled = |id: String, reply: MsgType, outcome: Result<AckStatus, String>| match outcome {
        Ok(status) => Response::ack(request, reply, id, status),
        Err(reason) => Response::error(request, id, "HANDLER_FAILED", reason),
    };
    match msg.msg_type {
        MsgType::Cert => match decode_certificate(&msg.payload) {
            Ok(cert) => handled(cert.certificate_id.clone(), MsgType::CertAck, handler.on_certificate(&cert)),
            Err(_) => Response::ack(request, MsgType::CertAck, claimed_id(&msg.payload), AckStatus::Malformed),
        },
        MsgType::Feedback => match decode_feedback(&msg.payload) {
            Ok(report) => handled(
                report.certificate_id.clone(),
                MsgType::FeedbackAck,
                handler.on_feedback(&report),
            ),
            Err(_) => Response::ack(request, MsgType::FeedbackAck, claimed_id(&msg.payload), AckStatus::Malformed),
        },
        other => Response::error(
            request,
            String::new(),
            "UNEXPECTED_TYPE",
            format!("{other} is not a request"),
        ),
    }
}

fn handle(mut stream: TcpStream, handler: &dyn Handler, audit: &AuditLog) {
    let _ = stream.set_read_timeout(Some(READ_TIMEOUT));
    let _ = stream.set_write_timeout(Some(READ_TIMEOUT));
    let r = respond(&mut stream, handler);
    // Logged before replying so that a client holding its ack can rely on
    // the entry being there.
    audit.record("RECV", r.request, &r.certificate_id, &r.status);
    let _ = write_frame(&mut stream, r.msg_type, &r.payload);
    let _ = stream.shutdown(std::net::Shutdown::Both);
}

/// Thread-per-connection QXS peer.
pub struct Server {
    listener: TcpListener,
    handler: Arc<dyn Handler>,
    audit: Arc<AuditLog>,
    stop: Arc<AtomicBool>,
}

impl Server {
    pub fn bind(
        addr: impl ToSocketAddrs,
        handler: Arc<dyn Handler>,
        audit: Arc<AuditLog>,
    ) -> Result<Self, ServeError> {
        let listener = TcpListener::bind(addr).map_err(|e| ServeError::BindFailed(e.to_string()))?;
        Ok(Self {
            listener,
            handler,
            audit,
            stop: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    pub fn audit(&self) -> Arc<AuditLog> {
        Arc::clone(&self.audit)
    }

    /// Serves until stopped through a [`ServerHandle`]; runs forever otherwise.
    pub fn run(self) {
        for conn in self.listener.incoming() {
            if self.stop.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = conn else {
                // Typically descriptor exhaustion; back off instead of spinning.
                thread::sleep(Duration::from_millis(10));
                continue;
            };
            let handler = Arc::clone(&self.handler);
            let audit = Arc::clone(&self.audit);
            thread::spawn(move || handle(stream, handler.as_ref(), &audit));
        }
    }

    pub fn spawn(self) -> ServerHandle {
        let addr = self.local_addr();
        let stop = Arc::clone(&self.stop);
        let audit = Arc::clone(&self.audit);
        let join = thread::spawn(move || self.run());
        ServerHandle {
            addr,
            stop,
            audit,
            join: Some(join),
        }
    }
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    audit: Arc<AuditLog>,
    join: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn audit(&self) -> &AuditLog {
        &self.audit
    }

    /// Stops accepting; connections already in progress finish on their own.
    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        if let Some(join) = self.join.take() {
            self.stop.store(true, Ordering::SeqCst);
            // Wake the blocking accept.
            let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
            let _ = join.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_and_join();
    }
}
