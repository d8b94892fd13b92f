//! `Q4X1` framing: magic, one type byte, a big-endian u32 length and the
//! payload.

use std::io::{self, Read, Write};

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"Q4X1";
pub const HEADER_LEN: usize = 9;
pub const MAX_PAYLOAD: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    Cert = 0x01,
    CertAck = 0x02,
    Feedback = 0x03,
    FeedbackAck = 0x04,
    Error = 0x05,
}

impl MsgType {
    pub const ALL: [MsgType; 5] = [
        MsgType::Cert,
        MsgType::CertAck,
        MsgType::Feedback,
        MsgType::FeedbackAck,
        MsgType::Error,
    ];

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|t| *t as u8 == b)
    }

    pub fn name(self) -> &'static str {
        match self {
            MsgType::Cert => "CERT",
            MsgType::CertAck => "CERT_ACK",
            MsgType::Feedback => "FEEDBACK",
            MsgType::FeedbackAck => "FEEDBACK_ACK",
            MsgType::Error => "ERROR",
        }
    }
}

impl std::fmt::Display for MsgType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireMessage {
    pub msg_type: MsgType,
    pub payload: Vec<u8>,
}

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("BAD_MAGIC: {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("UNKNOWN_TYPE: 0x{0:02x}")]
    UnknownType(u8),
    #[error("FRAME_TRUNCATED")]
    Truncated,
    #[error("FRAME_TOO_LARGE: {0} bytes")]
    TooLarge(u64),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl FrameError {
    /// Stable code used in ERROR payloads and the audit log.
    pub fn code(&self) -> &'static str {
        match self {
            FrameError::BadMagic(_) => "BAD_MAGIC",
            FrameError::UnknownType(_) => "UNKNOWN_TYPE",
            FrameError::Truncated => "FRAME_TRUNCATED",
            FrameError::TooLarge(_) => "FRAME_TOO_LARGE",
            FrameError::Io(_) => "IO_ERROR",
        }
    }
}

pub fn frame(msg_type: MsgType, payload: &[u8]) -> Result<Vec<u8>, FrameError> {
    if payload.len() > MAX_PAYLOAD {
        return Err(FrameError::TooLarge(payload.len() as u64));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(msg_type as u8);
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

pub fn write_frame<W: Write>(w: &mut W, msg_type: MsgType, payload: &[u8]) -> Result<(), FrameError> {
    w.write_all(&frame(msg_type, payload)?)?;
    w.flush()?;
    Ok(())
}

fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), FrameError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => FrameError::Truncated,
        _ => FrameError::Io(e),
    })
}

/// Reads exactly one frame; bytes after it are left in the stream.
pub fn read_frame<R: Read>(r: &mut R) -> Result<WireMessage, FrameError> {
    let mut header = [0u8; HEADER_LEN];
    read_exact_or_truncated(r, &mut header)?;
    let magic: [u8; 4] = header[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(FrameError::BadMagic(magic));
    }
    let msg_type = MsgType::from_byte(header[4]).ok_or(FrameError::UnknownType(header[4]))?;
    let len = u32::from_be_bytes(header[5..9].try_into().expect("4 bytes")) as usize;
    if len > MAX_PAYLOAD {
        return Err(FrameError::TooLarge(len as u64));
    }
    let mut payload = vec![0u8; len];
    read_exact_or_truncated(r, &mut payload)?;
    Ok(WireMessage { msg_type, payload })
}

pub fn unframe(bytes: &[u8]) -> Result<WireMessage, FrameError> {
    read_frame(&mut &bytes[..])
}
