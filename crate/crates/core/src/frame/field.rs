use std::fmt;
use std::str::FromStr;

use super::{Address, Frame, FrameError, PREAMBLE_LEN, SHR_PHR_LEN};

/// Payload index (0-based) of the last byte of the ZigBee NWK frame control
/// field, read as a little-endian `u16` from payload bytes 0-1.
pub const NWK_CONTROL_INDEX: usize = 1;

/// Payload index (0-based) of the APS command identifier: an 8-byte NWK
/// header without optional fields, then APS frame control and APS counter.
pub const APS_COMMAND_INDEX: usize = 10;

/// A frame field a rule can inspect. The names are the external vocabulary
/// used by the CLI and the rule engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldRef {
    Sfd,
    Fcf,
    Seq,
    DstPan,
    DstAddr,
    SrcPan,
    SrcAddr,
    /// Frame type bits; resolved to the whole FCF since the framer needs it
    /// complete before anything else can be parsed.
    FrameType,
    /// 0-based index into the MAC payload.
    PayloadByte(usize),
    NwCtrl,
    AslCmd,
    /// Received signal strength, sampled over the synchronisation header.
    Rss,
}

impl fmt::Display for FieldRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldRef::Sfd => f.write_str("sfd"),
            FieldRef::Fcf => f.write_str("fcf"),
            FieldRef::Seq => f.write_str("seq"),
            FieldRef::DstPan => f.write_str("dst_pan"),
            FieldRef::DstAddr => f.write_str("dst_addr"),
            FieldRef::SrcPan => f.write_str("src_pan"),
            FieldRef::SrcAddr => f.write_str("src_addr"),
            FieldRef::FrameType => f.write_str("frame_type"),
            FieldRef::PayloadByte(i) => write!(f, "payload_byte({i})"),
            FieldRef::NwCtrl => f.write_str("nw_ctrl"),
            FieldRef::AslCmd => f.write_str("asl_cmd"),
            FieldRef::Rss => f.write_str("rss"),
        }
    }
}

impl FromStr for FieldRef {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "sfd" => FieldRef::Sfd,
            "fcf" => FieldRef::Fcf,
            "seq" => FieldRef::Seq,
            "dst_pan" => FieldRef::DstPan,
            "dst_addr" => FieldRef::DstAddr,
            "src_pan" => FieldRef::SrcPan,
            "src_addr" => FieldRef::SrcAddr,
            "frame_type" => FieldRef::FrameType,
            "nw_ctrl" => FieldRef::NwCtrl,
            "asl_cmd" => FieldRef::AslCmd,
            "rss" => FieldRef::Rss,
            other => {
                let idx = other
                    .strip_prefix("payload_byte(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| FrameError::FieldAbsent(other.to_string()))?;
                FieldRef::PayloadByte(idx)
            }
        })
    }
}

fn addr_len(a: Address) -> usize {
    match a {
        Address::Short(_) => 2,
        Address::Extended(_) => 8,
    }
}

/// 1-indexed whole-frame offset of the LAST byte of `field` in this
/// frame's layout, i.e. the byte after which a rule on the field can fire.
pub fn field_offset(layout: &Frame, field: FieldRef) -> Result<usize, FrameError> {
    let absent = || FrameError::FieldAbsent(field.to_string());
    // running offset of the last byte consumed so far
    let fcf_end = SHR_PHR_LEN + 2;
    let seq_end = fcf_end + 1;
    let dst_pan_end = seq_end + layout.dst_pan.map_or(0, |_| 2);
    let dst_addr_end = dst_pan_end + layout.dst_addr.map_or(0, addr_len);
    let src_pan_end = dst_addr_end + layout.src_pan.map_or(0, |_| 2);
    let src_addr_end = src_pan_end + layout.src_addr.map_or(0, addr_len);
    let payload = |idx: usize| {
        if idx < layout.payload.len() {
            Ok(src_addr_end + idx + 1)
        } else {
            Err(absent())
        }
    };
    match field {
        FieldRef::Sfd | FieldRef::Rss => Ok(PREAMBLE_LEN + 1),
        FieldRef::Fcf | FieldRef::FrameType => Ok(fcf_end),
        FieldRef::Seq => Ok(seq_end),
        FieldRef::DstPan => layout.dst_pan.map(|_| dst_pan_end).ok_or_else(absent),
        FieldRef::DstAddr => layout.dst_addr.map(|_| dst_addr_end).ok_or_else(absent),
        FieldRef::SrcPan => layout.src_pan.map(|_| src_pan_end).ok_or_else(absent),
        FieldRef::SrcAddr => layout.src_addr.map(|_| src_addr_end).ok_or_else(absent),
        FieldRef::PayloadByte(i) => payload(i),
        FieldRef::NwCtrl => payload(NWK_CONTROL_INDEX),
        FieldRef::AslCmd => payload(APS_COMMAND_INDEX),
    }
}
