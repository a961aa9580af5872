//! IEEE 802.15.4 (2.4 GHz O-QPSK PHY) frame codec.
//!
//! Wire layout produced by [`encode_frame`]:
//!
//! ```text
//! offset  1..=4   preamble (4 x 0x00)
//!         5       SFD (0xA7)
//!         6       PHR (MPDU length)
//!         7..=8   frame control field, little endian
//!         9       sequence number
//!         ...     addressing fields (per FCF addressing modes)
//!         ...     payload
//!         last 2  FCS, little endian
//! ```
//!
//! Offsets in this crate are 1-indexed over the whole frame, so the SFD sits
//! at offset 5 and the FCF spans offsets 7-8.

mod fcs;
mod field;

use std::fmt;

use thiserror::Error;

pub use fcs::{compute_fcs, compute_fcs_bitwise};
pub use field::{field_offset, FieldRef, APS_COMMAND_INDEX, NWK_CONTROL_INDEX};

use crate::BYTE_US;

pub const PREAMBLE_LEN: usize = 4;
pub const SFD: u8 = 0xA7;
/// Synchronisation header plus PHY header.
pub const SHR_PHR_LEN: usize = 6;
pub const MAX_PHY_LEN: usize = 127;
pub const FCS_LEN: usize = 2;

const FCF_TYPE_MASK: u16 = 0x0007;
const FCF_PAN_COMPRESSION: u16 = 1 << 6;
const FCF_DST_MODE_SHIFT: u16 = 10;
const FCF_SRC_MODE_SHIFT: u16 = 14;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("field `{field}` inconsistent with frame control: {reason}")]
    Inconsistent { field: &'static str, reason: String },
    #[error("MPDU length {0} exceeds {MAX_PHY_LEN} bytes")]
    TooLong(usize),
    #[error("truncated frame: need {needed} bytes at offset {offset}, have {have}")]
    Truncated {
        offset: usize,
        needed: usize,
        have: usize,
    },
    #[error("bad synchronisation header at offset {offset}")]
    BadHeader { offset: usize },
    #[error("unsupported addressing combination at offset {offset}: {reason}")]
    Addressing { offset: usize, reason: String },
    #[error("field `{0}` is not present in this frame layout")]
    FieldAbsent(String),
    #[error("invalid hex string: {0}")]
    Hex(String),
}

/// Frame type encoded in FCF bits 0-2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameType {
    Beacon,
    Data,
    Ack,
    /// MAC command frame, called "control" in gtables.
    Command,
    Reserved(u8),
}

impl FrameType {
    pub fn from_bits(bits: u8) -> Self {
        match bits & 0x7 {
            0 => FrameType::Beacon,
            1 => FrameType::Data,
            2 => FrameType::Ack,
            3 => FrameType::Command,
            other => FrameType::Reserved(other),
        }
    }

    pub fn bits(self) -> u8 {
        match self {
            FrameType::Beacon => 0,
            FrameType::Data => 1,
            FrameType::Ack => 2,
            FrameType::Command => 3,
            FrameType::Reserved(b) => b & 0x7,
        }
    }
}

/// Addressing mode from the FCF (two bits each for destination and source).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddrMode {
    None,
    Short,
    Extended,
}

impl AddrMode {
    fn from_bits(bits: u16, offset: usize) -> Result<Self, FrameError> {
        match bits & 0x3 {
            0 => Ok(AddrMode::None),
            2 => Ok(AddrMode::Short),
            3 => Ok(AddrMode::Extended),
            _ => Err(FrameError::Addressing {
                offset,
                reason: "reserved addressing mode 0b01".into(),
            }),
        }
    }

    fn bits(self) -> u16 {
        match self {
            AddrMode::None => 0,
            AddrMode::Short => 2,
            AddrMode::Extended => 3,
        }
    }

    fn len(self) -> usize {
        match self {
            AddrMode::None => 0,
            AddrMode::Short => 2,
            AddrMode::Extended => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Address {
    Short(u16),
    Extended(u64),
}

impl Address {
    fn mode(self) -> AddrMode {
        match self {
            Address::Short(_) => AddrMode::Short,
            Address::Extended(_) => AddrMode::Extended,
        }
    }

    pub fn short(self) -> Option<u16> {
        match self {
            Address::Short(a) => Some(a),
            Address::Extended(_) => None,
        }
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Address::Short(a) => write!(f, "0x{a:04X}"),
            Address::Extended(a) => write!(f, "0x{a:016X}"),
        }
    }
}

/// Metadata observed at reception, not part of the wire format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxMeta {
    pub rss_dbm: f64,
}

/// A parsed or to-be-serialised 802.15.4 frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub fcf: u16,
    pub seq: u8,
    pub dst_pan: Option<u16>,
    pub dst_addr: Option<Address>,
    pub src_pan: Option<u16>,
    pub src_addr: Option<Address>,
    pub payload: Vec<u8>,
    /// FCS as carried on the wire. [`encode_frame`] ignores this and
    /// recomputes it.
    pub fcs: u16,
    /// Set by [`decode_frame`] when the carried FCS does not match.
    pub corrupt: bool,
    pub rx_meta: Option<RxMeta>,
}

impl Frame {
    /// Immediate acknowledgment (no addressing, no payload).
    pub fn ack(seq: u8) -> Self {
        Self::from_parts(0x0002, seq, None, None, None, None, Vec::new())
    }

    /// Intra-PAN frame with short source and destination addresses, the
    /// layout used by every shipped scenario.
    pub fn intra_pan(
        frame_type: FrameType,
        seq: u8,
        pan: u16,
        dst: u16,
        src: u16,
        payload: Vec<u8>,
    ) -> Self {
        let fcf = frame_type.bits() as u16
            | FCF_PAN_COMPRESSION
            | (AddrMode::Short.bits() << FCF_DST_MODE_SHIFT)
            | (AddrMode::Short.bits() << FCF_SRC_MODE_SHIFT);
        Self::from_parts(
            fcf,
            seq,
            Some(pan),
            Some(Address::Short(dst)),
            None,
            Some(Address::Short(src)),
            payload,
        )
    }

    /// Builds a frame and fills in its FCS. Consistency with `fcf` is
    /// checked at encode time.
    pub fn from_parts(
        fcf: u16,
        seq: u8,
        dst_pan: Option<u16>,
        dst_addr: Option<Address>,
        src_pan: Option<u16>,
        src_addr: Option<Address>,
        payload: Vec<u8>,
    ) -> Self {
        let mut frame = Frame {
            fcf,
            seq,
            dst_pan,
            dst_addr,
            src_pan,
            src_addr,
            payload,
            fcs: 0,
            corrupt: false,
            rx_meta: None,
        };
        frame.fcs = compute_fcs(&frame.mhr_and_payload());
        frame
    }

    pub fn with_rss(mut self, rss_dbm: f64) -> Self {
        self.rx_meta = Some(RxMeta { rss_dbm });
        self
    }

    pub fn frame_type(&self) -> FrameType {
        FrameType::from_bits((self.fcf & FCF_TYPE_MASK) as u8)
    }

    pub fn pan_compression(&self) -> bool {
        self.fcf & FCF_PAN_COMPRESSION != 0
    }

    pub fn dst_mode(&self) -> u16 {
        (self.fcf >> FCF_DST_MODE_SHIFT) & 0x3
    }

    pub fn src_mode(&self) -> u16 {
        (self.fcf >> FCF_SRC_MODE_SHIFT) & 0x3
    }

    /// Source PAN, taking PAN ID compression into account.
    pub fn effective_src_pan(&self) -> Option<u16> {
        match (self.src_pan, self.src_addr) {
            (Some(p), _) => Some(p),
            (None, Some(_)) if self.pan_compression() => self.dst_pan,
            _ => None,
        }
    }

    /// Bytes of MAC header (FCF, sequence number, addressing).
    pub fn mhr_len(&self) -> usize {
        3 + self.dst_pan.map_or(0, |_| 2)
            + self.dst_addr.map_or(0, |a| a.mode().len())
            + self.src_pan.map_or(0, |_| 2)
            + self.src_addr.map_or(0, |a| a.mode().len())
    }

    /// MPDU length as carried in the PHR.
    pub fn phy_len(&self) -> usize {
        self.mhr_len() + self.payload.len() + FCS_LEN
    }

    /// Whole-frame length, synchronisation header included.
    pub fn total_len(&self) -> usize {
        SHR_PHR_LEN + self.phy_len()
    }

    pub fn airtime_us(&self) -> f64 {
        frame_airtime(self.total_len())
    }

    /// 1-indexed offset of the first payload byte.
    pub fn payload_start(&self) -> usize {
        SHR_PHR_LEN + self.mhr_len() + 1
    }

    fn mhr_and_payload(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.phy_len());
        out.extend_from_slice(&self.fcf.to_le_bytes());
        out.push(self.seq);
        if let Some(pan) = self.dst_pan {
            out.extend_from_slice(&pan.to_le_bytes());
        }
        if let Some(a) = self.dst_addr {
            push_addr(&mut out, a);
        }
        if let Some(pan) = self.src_pan {
            out.extend_from_slice(&pan.to_le_bytes());
        }
        if let Some(a) = self.src_addr {
            push_addr(&mut out, a);
        }
        out.extend_from_slice(&self.payload);
        out
    }

    /// Checks that the addressing fields are exactly those dictated by the FCF.
    pub fn validate(&self) -> Result<(), FrameError> {
        let dst_mode = AddrMode::from_bits(self.dst_mode(), 7).map_err(|_| {
            FrameError::Inconsistent {
                field: "dst_addr",
                reason: "reserved destination addressing mode".into(),
            }
        })?;
        let src_mode = AddrMode::from_bits(self.src_mode(), 8).map_err(|_| {
            FrameError::Inconsistent {
                field: "src_addr",
                reason: "reserved source addressing mode".into(),
            }
        })?;
        check_addr("dst_addr", dst_mode, self.dst_addr)?;
        check_addr("src_addr", src_mode, self.src_addr)?;
        let want_dst_pan = dst_mode != AddrMode::None;
        if self.dst_pan.is_some() != want_dst_pan {
            return Err(FrameError::Inconsistent {
                field: "dst_pan",
                reason: format!("expected {}", presence(want_dst_pan)),
            });
        }
        let compress = self.pan_compression();
        if compress && (dst_mode == AddrMode::None || src_mode == AddrMode::None) {
            return Err(FrameError::Inconsistent {
                field: "fcf",
                reason: "PAN ID compression requires both addresses".into(),
            });
        }
        let want_src_pan = src_mode != AddrMode::None && !compress;
        if self.src_pan.is_some() != want_src_pan {
            return Err(FrameError::Inconsistent {
                field: "src_pan",
                reason: format!("expected {}", presence(want_src_pan)),
            });
        }
        if self.phy_len() > MAX_PHY_LEN {
            return Err(FrameError::TooLong(self.phy_len()));
        }
        Ok(())
    }
}

fn presence(present: bool) -> &'static str {
    if present {
        "present"
    } else {
        "absent"
    }
}

fn check_addr(
    field: &'static str,
    mode: AddrMode,
    addr: Option<Address>,
) -> Result<(), FrameError> {
    match (mode, addr) {
        (AddrMode::None, None) => Ok(()),
        (AddrMode::None, Some(_)) => Err(FrameError::Inconsistent {
            field,
            reason: "addressing mode is none but address present".into(),
        }),
        (m, None) => Err(FrameError::Inconsistent {
            field,
            reason: format!("addressing mode {m:?} requires an address"),
        }),
        (m, Some(a)) if a.mode() != m => Err(FrameError::Inconsistent {
            field,
            reason: format!("addressing mode {m:?} but {:?} address given", a.mode()),
        }),
        _ => Ok(()),
    }
}

fn push_addr(out: &mut Vec<u8>, addr: Address) {
    match addr {
        Address::Short(a) => out.extend_from_slice(&a.to_le_bytes()),
        Address::Extended(a) => out.extend_from_slice(&a.to_le_bytes()),
    }
}

/// Serialises a frame to its on-air byte sequence, recomputing the FCS.
pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, FrameError> {
    frame.validate()?;
    let mpdu = frame.mhr_and_payload();
    let fcs = compute_fcs(&mpdu);
    let mut out = Vec::with_capacity(frame.total_len());
    out.extend_from_slice(&[0u8; PREAMBLE_LEN]);
    out.push(SFD);
    out.push(frame.phy_len() as u8);
    out.extend_from_slice(&mpdu);
    out.extend_from_slice(&fcs.to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    /// 0-indexed cursor into `bytes`.
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FrameError> {
        if self.pos + n > self.bytes.len() {
            return Err(FrameError::Truncated {
                offset: self.pos + 1,
                needed: n,
                have: self.bytes.len().saturating_sub(self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, FrameError> {
        let s = self.take(2)?;
        Ok(u16::from_le_bytes([s[0], s[1]]))
    }

    fn addr(&mut self, mode: AddrMode) -> Result<Option<Address>, FrameError> {
        Ok(match mode {
            AddrMode::None => None,
            AddrMode::Short => Some(Address::Short(self.u16()?)),
            AddrMode::Extended => {
                let s = self.take(8)?;
                let mut b = [0u8; 8];
                b.copy_from_slice(s);
                Some(Address::Extended(u64::from_le_bytes(b)))
            }
        })
    }
}

/// Parses an on-air byte sequence. FCS mismatches are reported through
/// [`Frame::corrupt`] rather than as an error.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, FrameError> {
    if bytes.len() < SHR_PHR_LEN {
        return Err(FrameError::Truncated {
            offset: 1,
            needed: SHR_PHR_LEN,
            have: bytes.len(),
        });
    }
    if let Some(i) = bytes[..PREAMBLE_LEN].iter().position(|&b| b != 0) {
        return Err(FrameError::BadHeader { offset: i + 1 });
    }
    if bytes[PREAMBLE_LEN] != SFD {
        return Err(FrameError::BadHeader {
            offset: PREAMBLE_LEN + 1,
        });
    }
    let phy_len = bytes[SHR_PHR_LEN - 1] as usize;
    if phy_len > MAX_PHY_LEN {
        return Err(FrameError::TooLong(phy_len));
    }
    if phy_len < 3 + FCS_LEN {
        return Err(FrameError::Truncated {
            offset: SHR_PHR_LEN,
            needed: 3 + FCS_LEN,
            have: phy_len,
        });
    }
    let end = SHR_PHR_LEN + phy_len;
    if bytes.len() < end {
        return Err(FrameError::Truncated {
            offset: bytes.len() + 1,
            needed: end - bytes.len(),
            have: 0,
        });
    }
    let mpdu = &bytes[SHR_PHR_LEN..end - FCS_LEN];
    let mut r = Reader {
        bytes: &bytes[..end - FCS_LEN],
        pos: SHR_PHR_LEN,
    };
    let fcf = r.u16()?;
    let seq = r.take(1)?[0];
    let dst_mode = AddrMode::from_bits(fcf >> FCF_DST_MODE_SHIFT, 8)?;
    let src_mode = AddrMode::from_bits(fcf >> FCF_SRC_MODE_SHIFT, 8)?;
    let compress = fcf & FCF_PAN_COMPRESSION != 0;
    if compress && (dst_mode == AddrMode::None || src_mode == AddrMode::None) {
        return Err(FrameError::Addressing {
            offset: 7,
            reason: "PAN ID compression without both addresses".into(),
        });
    }
    let dst_pan = if dst_mode != AddrMode::None {
        Some(r.u16()?)
    } else {
        None
    };
    let dst_addr = r.addr(dst_mode)?;
    let src_pan = if src_mode != AddrMode::None && !compress {
        Some(r.u16()?)
    } else {
        None
    };
    let src_addr = r.addr(src_mode)?;
    let payload = bytes[r.pos..end - FCS_LEN].to_vec();
    let fcs = u16::from_le_bytes([bytes[end - 2], bytes[end - 1]]);
    Ok(Frame {
        fcf,
        seq,
        dst_pan,
        dst_addr,
        src_pan,
        src_addr,
        payload,
        fcs,
        corrupt: compute_fcs(mpdu) != fcs,
        rx_meta: None,
    })
}

/// On-air duration of `total_frame_bytes` bytes (32 µs per byte).
pub fn frame_airtime(total_frame_bytes: usize) -> f64 {
    total_frame_bytes as f64 * BYTE_US
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02X}")).collect()
}

pub fn from_hex(s: &str) -> Result<Vec<u8>, FrameError> {
    let s = s.trim();
    if !s.len().is_multiple_of(2) {
        return Err(FrameError::Hex("odd number of hex digits".into()));
    }
    (0..s.len())
        .step_by(2)
        .map(|i| {
            s.get(i..i + 2)
                .and_then(|pair| u8::from_str_radix(pair, 16).ok())
                .ok_or_else(|| FrameError::Hex(format!("bad byte at character {}", i + 1)))
        })
        .collect()
}
