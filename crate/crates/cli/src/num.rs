//! Number parsing and the fixed output precisions.

/// Decimal or `0x`-prefixed hexadecimal.
pub fn parse_u16(s: &str) -> Result<u16, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u16::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.map_err(|_| format!("`{s}` is not a 16-bit value"))
}

pub fn parse_u8(s: &str) -> Result<u8, String> {
    let v = parse_u16(s)?;
    u8::try_from(v).map_err(|_| format!("`{s}` is not an 8-bit value"))
}

/// Distances in metres and times in microseconds.
pub fn fixed2(v: f64) -> String {
    format!("{v:.2}")
}

/// Rates and ratios: six significant digits, in scientific notation outside
/// `[1e-4, 1e6)`.
pub fn sig6(v: f64) -> String {
    let mag = v.abs();
    if v == 0.0 {
        "0".into()
    } else if (1e-4..1e6).contains(&mag) {
        let decimals = (5 - mag.log10().floor() as i32).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.5e}")
    }
}

/// Sweep axis values: shortest representation that round-trips.
pub fn axis(v: f64) -> String {
    let s = format!("{v}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}
