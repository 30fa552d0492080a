//! Frame codec.
//!
//! ```text
//! +------+------+-----+----------------------------+-----+
//! | 0xAA | 0x55 | len | payload (len bytes)        | crc |
//! +------+------+-----+----------------------------+-----+
//! payload = seq (u16 BE) | at_ms (u64 BE) | code (u8) | detail (UTF-8)
//! crc     = CRC-8, poly 0x07, init 0x00, over len and payload
//! ```

use crc::{Crc, CRC_8_SMBUS};
use thiserror::Error;

use super::message::{AlertCode, AlertMessage, MAX_DETAIL_BYTES};

pub const SYNC: [u8; 2] = [0xAA, 0x55];
/// Sync word, length byte and CRC byte.
pub const FRAME_OVERHEAD: usize = 4;
/// seq + at + code.
pub const PAYLOAD_HEADER: usize = 2 + 8 + 1;
pub const MAX_PAYLOAD: usize = PAYLOAD_HEADER + MAX_DETAIL_BYTES;

// poly 0x07, init 0x00, no reflection, no xorout
const CRC8: Crc<u8> = Crc::<u8>::new(&CRC_8_SMBUS);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("detail is {0} bytes, limit is {MAX_DETAIL_BYTES}")]
    DetailTooLong(usize),
    #[error("bad sync word")]
    BadSync,
    #[error("bad length: header says {declared} payload bytes, frame holds {actual}")]
    BadLength { declared: usize, actual: usize },
    #[error("crc mismatch: computed {computed:#04x}, frame carries {carried:#04x}")]
    BadCrc { computed: u8, carried: u8 },
    #[error("malformed payload: {0}")]
    BadPayload(&'static str),
}

pub fn crc8(bytes: &[u8]) -> u8 {
    CRC8.checksum(bytes)
}

pub fn encode_frame(msg: &AlertMessage) -> Result<Vec<u8>, FrameError> {
    let detail = msg.detail.as_bytes();
    if detail.len() > MAX_DETAIL_BYTES {
        return Err(FrameError::DetailTooLong(detail.len()));
    }
    let payload_len = PAYLOAD_HEADER + detail.len();
    let mut out = Vec::with_capacity(FRAME_OVERHEAD + payload_len);
    out.extend_from_slice(&SYNC);
    out.push(payload_len as u8);
    out.extend_from_slice(&msg.seq.to_be_bytes());
    out.extend_from_slice(&msg.at.to_be_bytes());
    out.push(msg.code as u8);
    out.extend_from_slice(detail);
    let crc = crc8(&out[2..]);
    out.push(crc);
    Ok(out)
}

/// Total over arbitrary input: every byte string yields a message or a
/// [`FrameError`].
pub fn decode_frame(bytes: &[u8]) -> Result<AlertMessage, FrameError> {
    if bytes.len() < 2 || bytes[..2] != SYNC {
        return Err(FrameError::BadSync);
    }
    let Some(&len) = bytes.get(2) else {
        return Err(FrameError::BadLength {
            declared: 0,
            actual: 0,
        });
    };
    let declared = usize::from(len);
    let actual = bytes.len().saturating_sub(FRAME_OVERHEAD);
    if bytes.len() < FRAME_OVERHEAD
        || actual != declared
        || !(PAYLOAD_HEADER..=MAX_PAYLOAD).contains(&declared)
    {
        return Err(FrameError::BadLength { declared, actual });
    }
    let (body, crc) = bytes.split_at(bytes.len() - 1);
    let computed = crc8(&body[2..]);
    if computed != crc[0] {
        return Err(FrameError::BadCrc {
            computed,
            carried: crc[0],
        });
    }

    let payload = &body[3..];
    let seq = u16::from_be_bytes([payload[0], payload[1]]);
    let mut at = [0u8; 8];
    at.copy_from_slice(&payload[2..10]);
    let code = AlertCode::from_byte(payload[10]).ok_or(FrameError::BadPayload("unknown code"))?;
    let detail = std::str::from_utf8(&payload[PAYLOAD_HEADER..])
        .map_err(|_| FrameError::BadPayload("detail is not UTF-8"))?;
    Ok(AlertMessage {
        seq,
        at: u64::from_be_bytes(at),
        code,
        detail: detail.to_owned(),
    })
}
