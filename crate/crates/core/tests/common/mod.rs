#![allow(dead_code)]

use std::path::{Path, PathBuf};

use guardian_core::analysis::{force_attack_range, stealth_attack_range};
use guardian_core::sim::{run, Scenario, StatsReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

pub fn load(name: &str) -> Scenario {
    Scenario::load(&scenario_dir().join(name)).expect("shipped scenario loads")
}

pub fn build(doc: Value) -> Scenario {
    Scenario::from_json(&doc.to_string()).expect("test scenario parses")
}

pub fn simulate(doc: Value) -> StatsReport {
    run(&build(doc)).expect("test scenario runs")
}

/// Attacker at `-d_av`, victim at the origin, guardian at `+d_gv`.
#[derive(Debug, Clone, Copy)]
pub struct Collinear {
    pub d_av: f64,
    pub d_gv: f64,
    pub alpha: f64,
    pub pa_dbm: f64,
    pub pg_dbm: f64,
    pub sv_dbm: f64,
    pub sg_dbm: f64,
    pub stealthy: bool,
}

impl Collinear {
    pub fn random(rng: &mut impl Rng) -> Self {
        let sv = rng.random_range(-100.0..-85.0);
        Collinear {
            d_av: rng.random_range(0.5..60.0),
            d_gv: rng.random_range(0.5..60.0),
            alpha: rng.random_range(2.0..4.5),
            pa_dbm: rng.random_range(-10.0..20.0),
            pg_dbm: rng.random_range(-10.0..20.0),
            sv_dbm: sv,
            sg_dbm: sv - rng.random_range(0.5..25.0),
            stealthy: rng.random_bool(0.5),
        }
    }

    pub fn scenario(&self) -> Value {
        json!({
            "rf": {"alpha": self.alpha},
            "duration_s": 0.05,
            "nodes": [
                {"id": 1, "role": "attacker", "addr": "0x0BAD", "position": [-self.d_av, 0.0], "tx_power_dbm": self.pa_dbm},
                {"id": 2, "role": "victim", "position": [0.0, 0.0], "sensitivity_dbm": self.sv_dbm},
                {"id": 3, "role": "guardian", "position": [self.d_gv, 0.0], "tx_power_dbm": self.pg_dbm,
                 "sensitivity_dbm": self.sg_dbm, "rules": ["gtables -A -m src --addr 0x0BAD -j DROP"]}
            ],
            "flows": [{"id": "attack", "src": 1, "dst": 2, "pan": "0x0022", "rate_pps": 100.0,
                       "start_s": 0.0, "end_s": 0.03,
                       "strategy": if self.stealthy { "stealthy" } else { "brute_force" }}]
        })
    }
}

#[derive(Debug, Default)]
pub struct BoundCheck {
    pub trials: usize,
    pub undetected_successes: usize,
    pub detected_successes: usize,
    pub violations: Vec<String>,
}

/// Every frame that reaches the victim must respect the range bound for
/// how it got there: undetected frames the stealth bound, detected frames
/// the force bound.
pub fn bound_vs_oracle(trials: usize, seed: u64) -> BoundCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BoundCheck { trials, ..Default::default() };
    for _ in 0..trials {
        let g = Collinear::random(&mut rng);
        let report = simulate(g.scenario());
        let f = &report.flows[0];
        if f.received == 0 {
            continue;
        }
        let gamma = guardian_core::rf::RfParams::default().gamma_eff_db();
        let (bound, kind) = if f.detected == 0 {
            out.undetected_successes += 1;
            (stealth_attack_range(g.sv_dbm, g.sg_dbm, g.d_gv, g.alpha).unwrap(), "stealth")
        } else {
            out.detected_successes += 1;
            (force_attack_range(g.pa_dbm, g.pg_dbm, gamma, g.d_gv, g.alpha).unwrap(), "force")
        };
        if g.d_av > bound + 1e-6 {
            out.violations.push(format!("{g:?}: d_av exceeds {kind} bound {bound:.4}"));
        }
    }
    out
}

/// One broadcast frame per run, the guardian's receive delay shifted by
/// `offset` µs so the burst lands at every alignment against the symbol grid.
pub fn alignment_outcomes(t_interfere_us: f64) -> Vec<bool> {
    (0..32)
        .map(|offset| {
            let report = simulate(json!({
                "duration_s": 0.01,
                "nodes": [
                    {"id": 1, "role": "attacker", "addr": "0x1234", "position": [3.0, 0.0], "tx_power_dbm": 0.0},
                    {"id": 2, "role": "victim", "position": [0.0, 0.0], "sensitivity_dbm": -94.0},
                    {"id": 3, "role": "guardian", "position": [0.0, 1.0], "tx_power_dbm": 0.0,
                     "sensitivity_dbm": -94.0,
                     "timing": {"rx_delay_us": 4.0 + offset as f64, "t_interfere_us": t_interfere_us},
                     "rules": ["gtables -A -m dst --addr 0xFFFF --pan 0x22 -j DROP"]}
                ],
                "flows": [{"id": "bc", "src": 1, "dst": 2, "pan": "0x0022", "rate_pps": 100.0,
                           "start_s": 0.0, "end_s": 0.005, "frame": {"dst_addr": "0xFFFF"}}]
            }));
            let f = &report.flows[0];
            assert_eq!(f.sent, 1);
            f.destroyed == 1
        })
        .collect()
}

pub const REVOKED: [&str; 3] = ["mote-1111", "mote-1112", "mote-1115"];

/// Checks the shipped revocation run: no legitimate frame lost, at most one
/// leaked frame per revoked node per rule transition, and the on/off shape.
pub fn check_revocation(report: &StatsReport) -> Result<(), String> {
    let transitions = 3u64;
    if report.total_false_pos() != 0 {
        return Err(format!("{} false positives", report.total_false_pos()));
    }
    for f in &report.flows {
        let revoked = REVOKED.contains(&f.flow_id.as_str());
        if revoked && f.false_neg > transitions {
            return Err(format!("{}: {} false negatives", f.flow_id, f.false_neg));
        }
        if !revoked && (f.destroyed != 0 || f.false_neg != 0) {
            return Err(format!("{}: legitimate node disturbed", f.flow_id));
        }
        if f.sent != f.received + f.destroyed + f.below_sensitivity {
            return Err(format!("{}: counters do not add up", f.flow_id));
        }
    }
    // blocked windows [70, 160) and [180, 300) in 10 s intervals
    let blocked = |t: f64| (70.0..160.0).contains(&t) || t >= 180.0;
    for row in &report.intervals {
        if !REVOKED.contains(&row.flow_id.as_str()) {
            continue;
        }
        let t = row.interval_start_s;
        let first_of_window = t == 70.0 || t == 180.0;
        let ok = if blocked(t) {
            row.received <= (first_of_window as u64)
        } else {
            row.destroyed <= ((t == 160.0) as u64) && row.received + 1 >= row.sent
        };
        if !ok {
            return Err(format!("{} interval {t}: {row:?}", row.flow_id));
        }
    }
    Ok(())
}

/// CRC by explicit polynomial long division over GF(2): message bits are fed
/// least significant bit first, multiplied by x^16 and reduced modulo
/// x^16 + x^12 + x^5 + 1. The remainder's x^15 coefficient is FCS bit 0.
pub fn fcs_long_division(data: &[u8]) -> u16 {
    let mut bits: Vec<u8> = data
        .iter()
        .flat_map(|b| (0..8).map(move |i| (b >> i) & 1))
        .collect();
    bits.extend(std::iter::repeat_n(0, 16));
    let generator: [u8; 17] = {
        let mut g = [0u8; 17];
        for power in [16usize, 12, 5, 0] {
            g[16 - power] = 1;
        }
        g
    };
    for i in 0..bits.len().saturating_sub(16) {
        if bits[i] == 1 {
            for (j, g) in generator.iter().enumerate() {
                bits[i + j] ^= g;
            }
        }
    }
    let rem = &bits[bits.len() - 16..];
    rem.iter()
        .enumerate()
        .fold(0u16, |acc, (i, &b)| acc | ((b as u16) << i))
}

/// Random frame with any valid addressing combination.
pub fn random_frame(rng: &mut impl Rng) -> guardian_core::frame::Frame {
    use guardian_core::frame::{Address, Frame};
    let addr = |rng: &mut ChaCha8Rng| -> Option<Address> {
        match rng.random_range(0..3) {
            0 => None,
            1 => Some(Address::Short(rng.random())),
            _ => Some(Address::Extended(rng.random())),
        }
    };
    let mut local = ChaCha8Rng::seed_from_u64(rng.random());
    let dst = addr(&mut local);
    let src = addr(&mut local);
    let bits = |a: Option<Address>| match a {
        None => 0u16,
        Some(Address::Short(_)) => 2,
        Some(Address::Extended(_)) => 3,
    };
    let compress = dst.is_some() && src.is_some() && local.random_bool(0.5);
    let fcf = local.random_range(0..8u16)
        | (local.random_range(0..4u16) << 4)
        | ((compress as u16) << 6)
        | (bits(dst) << 10)
        | (bits(src) << 14);
    let len = local.random_range(0..90);
    let payload = (0..len).map(|_| local.random()).collect();
    Frame::from_parts(
        fcf,
        local.random(),
        dst.map(|_| local.random()),
        dst,
        (src.is_some() && !compress).then(|| local.random()),
        src,
        payload,
    )
}
