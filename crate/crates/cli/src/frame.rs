use std::io::Write;

use clap::{Args, Subcommand, ValueEnum};
use guardian_core::frame::{
    decode_frame, encode_frame, field_offset, from_hex, to_hex, Address, FieldRef, Frame, FrameType,
};

use crate::num::{fixed2, parse_u16, parse_u8};
use crate::CliError;

#[derive(Subcommand, Debug)]
pub enum FrameCmd {
    /// Build an intra-PAN short-address frame (or an ACK) and print its hex
    Encode(EncodeArgs),
    /// Parse a hex frame and print its fields and offsets
    Decode {
        /// Whole frame including preamble, SFD and PHR
        hex: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    Data,
    Command,
    Beacon,
    Ack,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    #[arg(long = "type", value_enum, default_value = "data")]
    kind: Kind,
    #[arg(long, value_parser = parse_u8, default_value = "0")]
    seq: u8,
    #[arg(long, value_parser = parse_u16, default_value = "0x0022")]
    pan: u16,
    #[arg(long, value_parser = parse_u16, default_value = "0xFFFF")]
    dst: u16,
    #[arg(long, value_parser = parse_u16, default_value = "0x0000")]
    src: u16,
    /// MAC payload as hex
    #[arg(long, default_value = "")]
    payload: String,
}

pub fn run(cmd: FrameCmd, out: &mut impl Write) -> Result<(), CliError> {
    match cmd {
        FrameCmd::Encode(a) => {
            let payload = from_hex(&a.payload).map_err(|e| CliError::Usage(format!("--payload: {e}")))?;
            let frame = match a.kind {
                Kind::Ack if !payload.is_empty() => {
                    return Err(CliError::Usage("acknowledgments carry no payload".into()))
                }
                Kind::Ack => Frame::ack(a.seq),
                Kind::Data => Frame::intra_pan(FrameType::Data, a.seq, a.pan, a.dst, a.src, payload),
                Kind::Command => Frame::intra_pan(FrameType::Command, a.seq, a.pan, a.dst, a.src, payload),
                Kind::Beacon => Frame::intra_pan(FrameType::Beacon, a.seq, a.pan, a.dst, a.src, payload),
            };
            let bytes = encode_frame(&frame).map_err(CliError::domain)?;
            Ok(writeln!(out, "{}", to_hex(&bytes))?)
        }
        FrameCmd::Decode { hex } => {
            let bytes = from_hex(&hex).map_err(CliError::domain)?;
            let f = decode_frame(&bytes).map_err(CliError::domain)?;
            Ok(write_decoded(&f, out)?)
        }
    }
}

fn type_name(t: FrameType) -> &'static str {
    match t {
        FrameType::Beacon => "beacon",
        FrameType::Data => "data",
        FrameType::Ack => "ack",
        FrameType::Command => "command",
        FrameType::Reserved(_) => "reserved",
    }
}

fn write_decoded(f: &Frame, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "fcf=0x{:04X}", f.fcf)?;
    writeln!(out, "frame_type={}", type_name(f.frame_type()))?;
    writeln!(out, "seq={}", f.seq)?;
    let addr = |a: Option<Address>| a.map(|a| a.to_string());
    let pan = |p: Option<u16>| p.map(|p| format!("0x{p:04X}"));
    for (name, v) in [
        ("dst_pan", pan(f.dst_pan)),
        ("dst_addr", addr(f.dst_addr)),
        ("src_pan", pan(f.src_pan)),
        ("src_addr", addr(f.src_addr)),
    ] {
        if let Some(v) = v {
            writeln!(out, "{name}={v}")?;
        }
    }
    writeln!(out, "payload={}", to_hex(&f.payload))?;
    writeln!(out, "fcs=0x{:04X}", f.fcs)?;
    writeln!(out, "corrupt={}", f.corrupt)?;
    writeln!(out, "total_bytes={}", f.total_len())?;
    writeln!(out, "airtime_us={}", fixed2(f.airtime_us()))?;
    for field in [
        FieldRef::Sfd,
        FieldRef::Fcf,
        FieldRef::Seq,
        FieldRef::DstPan,
        FieldRef::DstAddr,
        FieldRef::SrcPan,
        FieldRef::SrcAddr,
        FieldRef::NwCtrl,
        FieldRef::AslCmd,
    ] {
        // a compressed source PAN is read from the destination PAN bytes
        if field == FieldRef::SrcPan && f.src_pan.is_none() {
            continue;
        }
        if let Ok(off) = field_offset(f, field) {
            writeln!(out, "offset.{field}={off}")?;
        }
    }
    Ok(())
}
