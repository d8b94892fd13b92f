use std::io;
use std::net::{Shutdown, SocketAddr, TcpStream, ToSocketAddrs};
use std::time::Duration;

use thiserror::Error;

use super::frame::{read_frame, write_frame, FrameError, MsgType};
use super::{decode_ack, encode_certificate, encode_feedback, Ack};
use crate::model::{FeedbackReport, QualityCertificate};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("CONNECT_FAILED: {0}")]
    ConnectFailed(String),
    #[error("PROTOCOL_ERROR: {0}")]
    Protocol(String),
    #[error("TIMEOUT")]
    Timeout,
}

fn is_timeout(e: &io::Error) -> bool {
    matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut)
}

fn from_frame(e: FrameError) -> ClientError {
    match e {
        FrameError::Io(e) if is_timeout(&e) => ClientError::Timeout,
        other => ClientError::Protocol(other.to_string()),
    }
}

fn connect(addr: impl ToSocketAddrs, timeout: Duration) -> Result<TcpStream, ClientError> {
    let addrs: Vec<SocketAddr> = addr
        .to_socket_addrs()
        .map_err(|e| ClientError::ConnectFailed(e.to_string()))?
        .collect();
    let mut last = ClientError::ConnectFailed("address resolved to nothing".into());
    for a in addrs {
        match TcpStream::connect_timeout(&a, timeout) {
            Ok(s) => return Ok(s),
            Err(e) if is_timeout(&e) => last = ClientError::Timeout,
            Err(e) => last = ClientError::ConnectFailed(format!("{a}: {e}")),
        }
    }
    Err(last)
}

fn request(
    addr: impl ToSocketAddrs,
    msg_type: MsgType,
    payload: &[u8],
    expect: MsgType,
    timeout: Duration,
) -> Result<Ack, ClientError> {
    let mut stream = connect(addr, timeout)?;
    let io_err = |e: io::Error| {
        if is_timeout(&e) {
            ClientError::Timeout
        } else {
            ClientError::Protocol(e.to_string())
        }
    };
    stream.set_read_timeout(Some(timeout)).map_err(io_err)?;
    stream.set_write_timeout(Some(timeout)).map_err(io_err)?;
    write_frame(&mut stream, msg_type, payload).map_err(from_frame)?;
    let reply = read_frame(&mut stream).map_err(from_frame)?;
    let _ = stream.shutdown(Shutdown::Both);
    if reply.msg_type == MsgType::Error {
        return Err(ClientError::Protocol(format!(
            "peer reported: {}",
            String::from_utf8_lossy(&reply.payload)
        )));
    }
    if reply.msg_type != expect {
        return Err(ClientError::Protocol(format!(
            "expected {expect}, got {}",
            reply.msg_type
        )));
    }
    decode_ack(&reply.payload).map_err(|e| ClientError::Protocol(e.to_string()))
}

pub fn send_certificate(
    addr: impl ToSocketAddrs,
    cert: &QualityCertificate,
    timeout: Duration,
) -> Result<Ack, ClientError> {
    request(addr, MsgType::Cert, &encode_certificate(cert), MsgType::CertAck, timeout)
}

pub fn send_feedback(
    addr: impl ToSocketAddrs,
    report: &FeedbackReport,
    timeout: Duration,
) -> Result<Ack, ClientError> {
    request(addr, MsgType::Feedback, &encode_feedback(report), MsgType::FeedbackAck, timeout)
}
