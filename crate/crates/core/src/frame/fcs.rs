//! 802.15.4 frame check sequence.
//!
//! CRC-16 with generator x^16 + x^12 + x^5 + 1, zero initial value, bits
//! processed least-significant first and no final XOR (the ITU-T/KERMIT
//! parameterisation). The reflected polynomial is `0x8408`.

const POLY_REFLECTED: u16 = 0x8408;

const TABLE: [u16; 256] = {
    let mut table = [0u16; 256];
    let mut i = 0usize;
    while i < 256 {
        let mut crc = i as u16;
        let mut j = 0;
        while j < 8 {
            if crc & 1 != 0 {
                crc = (crc >> 1) ^ POLY_REFLECTED;
            } else {
                crc >>= 1;
            }
            j += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
};

/// Table-driven FCS over an MPDU that does not yet include its FCS.
pub fn compute_fcs(mpdu_without_fcs: &[u8]) -> u16 {
    mpdu_without_fcs.iter().fold(0u16, |crc, &b| {
        (crc >> 8) ^ TABLE[((crc ^ b as u16) & 0xFF) as usize]
    })
}

/// Bit-at-a-time FCS. Slow, used to cross-check the table.
pub fn compute_fcs_bitwise(mpdu_without_fcs: &[u8]) -> u16 {
    let mut crc = 0u16;
    for &byte in mpdu_without_fcs {
        for bit in 0..8 {
            let inbit = ((byte >> bit) & 1) as u16;
            let fb = (crc ^ inbit) & 1;
            crc >>= 1;
            if fb != 0 {
                crc ^= POLY_REFLECTED;
            }
        }
    }
    crc
}
