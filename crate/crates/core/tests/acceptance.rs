//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};

use guardian_core::analysis::{
    energy_cost, false_positive_rate, force_attack_range, max_react_time, no_guardian_range,
    reaction_feasible, stealth_attack_range, TimingModel,
};
use guardian_core::frame::{
    compute_fcs, compute_fcs_bitwise, decode_frame, encode_frame, Frame, FrameType,
};
use guardian_core::rf::RfParams;
use guardian_core::rules::{
    decide_time, evaluate_chain, parse_rule_line, parse_rules, DecisionCostModel, RuleChain, Verdict,
};
use guardian_core::sim::run;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(value: f64, target: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure(
        (value - target).abs() <= tol,
        format!("{what}: {value} not within {tol} of {target}"),
    )
}

fn no_guardian() -> Check {
    let r = no_guardian_range(20.0, -94.0, &RfParams::default()).map_err(|e| e.to_string())?;
    within(r, 384.51, 384.51 * 0.005, "range")?;
    Ok(format!("{r:.2} m"))
}

fn stealth() -> Check {
    let r = stealth_attack_range(-94.0, -116.0, 10.0, 3.3).map_err(|e| e.to_string())?;
    within(r, 2.75, 0.01, "range")?;
    Ok(format!("{r:.3} m"))
}

fn force() -> Check {
    let a2 = force_attack_range(0.0, 20.0, 3.0, 10.0, 2.0).map_err(|e| e.to_string())?;
    let a33 = force_attack_range(0.0, 20.0, 3.0, 10.0, 3.3).map_err(|e| e.to_string())?;
    within(a2, 0.707, 0.01, "alpha 2")?;
    within(a33, 2.01, 0.01, "alpha 3.3")?;
    Ok(format!("{a2:.3} m at alpha 2, {a33:.3} m at alpha 3.3"))
}

fn energy() -> Check {
    let e16 = energy_cost(0.0, 5.0, 0.0, 5.0, 32, 16.0, 3.3).map_err(|e| e.to_string())?;
    let e26 = energy_cost(0.0, 5.0, 0.0, 5.0, 32, 26.0, 3.3).map_err(|e| e.to_string())?;
    ensure(e16 == 64.0, format!("16 µs cost {e16}"))?;
    within(e26, 39.38, 0.05, "26 µs cost")?;
    Ok(format!("{e16} and {e26:.2}"))
}

fn false_positives() -> Check {
    let fp = false_positive_rate(32, 2).map_err(|e| e.to_string())?;
    ensure(fp.hits == 529 && fp.field_bits == 32, format!("{} / 2^{}", fp.hits, fp.field_bits))?;
    ensure(fp.as_f64() < 2e-7, format!("rate {}", fp.as_f64()))?;
    Ok(format!("529/2^32 = {:.5e}", fp.as_f64()))
}

fn deadline_table() -> Check {
    let got: Vec<f64> = [5, 8, 15, 27, 30]
        .iter()
        .map(|&o| max_react_time(o, 32).unwrap())
        .collect();
    ensure(got == [864.0, 768.0, 544.0, 160.0, 64.0], format!("{got:?}"))?;
    Ok(format!("{got:?} µs"))
}

fn time_constants() -> Check {
    let last_byte = RuleChain::new(vec![parse_rule_line(
        "gtables -A -m raw_byte --offset 14 --value 0x00 -j DROP",
    )
    .unwrap()]);
    let frame = Frame::intra_pan(FrameType::Data, 0, 0x22, 0xFFFF, 0x1234, vec![0; 15]);
    let fpga = TimingModel::default();
    let firmware = TimingModel::with_decision(DecisionCostModel::Fixed { t_decide_us: 116.0 });
    let a = reaction_feasible(&last_byte, &frame, &fpga, 32).map_err(|e| e.to_string())?;
    let b = reaction_feasible(&last_byte, &frame, &firmware, 32).map_err(|e| e.to_string())?;
    ensure(a.depth == 30, format!("depth {}", a.depth))?;
    ensure(a.t_react_us == 39.0, format!("fpga t_react {}", a.t_react_us))?;
    ensure(b.t_react_us == 145.0, format!("firmware t_react {}", b.t_react_us))?;
    ensure(a.feasible && !b.feasible, "feasibility marks")?;
    Ok("39 µs feasible, 145 µs infeasible".into())
}

fn rule_conformance() -> Check {
    let lines = [
        "gtables -A -m dst --pan 0x22 --addr 0xFFFF -m type --ctrl -j DROP",
        "gtables -A -m dst --addr 0xFFFF --pan 0x22 -j DROP",
        "gtables -A -m dst --pan 0xACAC -m nw_ctrl 0x0008 -m asl_cmd 0x01 -j DROP",
        "gtables -A -m type --control -m dst --pan 0xACAC -m RSS --above -80 -j DROP",
        "gtables -A -m src --addr 0x1111 --pan 0xACAC -j DROP\n\
         gtables -A -m src --addr 0x1112 --pan 0xACAC -j DROP\n\
         gtables -A -m src --addr 0x1115 --pan 0xACAC -j DROP",
    ];
    let chains: Vec<RuleChain> = lines
        .iter()
        .map(|l| parse_rules(l).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    for c in &chains {
        for r in &c.rules {
            ensure(parse_rule_line(&r.to_string()).as_ref() == Ok(r), format!("round trip of {r}"))?;
        }
    }
    let verdict = |c: &RuleChain, f: &Frame| evaluate_chain(c, f).map(|e| e.verdict).map_err(|e| e.to_string());
    let mut ota_payload = vec![0u8; 15];
    ota_payload[..2].copy_from_slice(&0x0008u16.to_le_bytes());
    ota_payload[10] = 0x01;
    let cases = [
        (0, Frame::intra_pan(FrameType::Command, 1, 0x22, 0xFFFF, 0x0001, vec![]), Verdict::Drop),
        (0, Frame::intra_pan(FrameType::Data, 1, 0x22, 0xFFFF, 0x0001, vec![]), Verdict::Accept),
        (1, Frame::intra_pan(FrameType::Data, 1, 0x22, 0xFFFF, 0x1234, vec![0; 15]), Verdict::Drop),
        (1, Frame::intra_pan(FrameType::Data, 1, 0x22, 0x0001, 0x1234, vec![0; 15]), Verdict::Accept),
        (2, Frame::intra_pan(FrameType::Data, 1, 0xACAC, 0x0000, 0x0BAD, ota_payload), Verdict::Drop),
        (2, Frame::intra_pan(FrameType::Data, 1, 0xACAC, 0x0000, 0x0BAD, vec![0; 15]), Verdict::Accept),
        (3, Frame::intra_pan(FrameType::Command, 1, 0xACAC, 0x0000, 0x4001, vec![]).with_rss(-75.0), Verdict::Drop),
        (3, Frame::intra_pan(FrameType::Command, 1, 0xACAC, 0x0000, 0x4001, vec![]).with_rss(-85.0), Verdict::Accept),
        (4, Frame::intra_pan(FrameType::Data, 1, 0xACAC, 0x0000, 0x1111, vec![]), Verdict::Drop),
        (4, Frame::intra_pan(FrameType::Data, 1, 0xACAC, 0x0000, 0x1113, vec![]), Verdict::Accept),
    ];
    for (i, (chain, frame, want)) in cases.iter().enumerate() {
        let got = verdict(&chains[*chain], frame)?;
        ensure(got == *want, format!("case {i}: {got} instead of {want}"))?;
    }
    Ok(format!("{} rule lines, {} verdicts", 7, cases.len()))
}

fn codec_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0DEC);
    for i in 0..10_000 {
        let f = common::random_frame(&mut rng);
        let bytes = encode_frame(&f).map_err(|e| format!("frame {i}: {e}"))?;
        let d = decode_frame(&bytes).map_err(|e| format!("frame {i}: {e}"))?;
        ensure(d == f, format!("frame {i} did not round-trip"))?;
    }
    for i in 0..10_000 {
        let len = rng.random_range(0..128);
        let data: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        let t = compute_fcs(&data);
        ensure(
            t == compute_fcs_bitwise(&data) && t == common::fcs_long_division(&data),
            format!("input {i}: FCS disagreement"),
        )?;
    }
    let mut flips = 0usize;
    for _ in 0..200 {
        let bytes = encode_frame(&common::random_frame(&mut rng)).unwrap();
        for i in 6..bytes.len() {
            for shift in [0, 4] {
                for pattern in 1u8..16 {
                    let mut bad = bytes.clone();
                    bad[i] ^= pattern << shift;
                    let caught = decode_frame(&bad).map_or(true, |d| d.corrupt);
                    ensure(caught, format!("nibble {i}/{shift} pattern {pattern:x} undetected"))?;
                    flips += 1;
                }
            }
        }
    }
    Ok(format!("10000 round trips, 10000 FCS inputs, {flips} nibble flips"))
}

fn simulator_properties() -> Check {
    // (a) determinism and (b) conservation over the shipped scenarios
    for name in ["revocation.json", "ota.json", "rss_flood.json", "broadcast.json"] {
        let mut sc = common::load(name);
        sc.rf.shadowing_sigma_db = 4.0;
        let a = run(&sc).map_err(|e| e.to_string())?;
        let b = run(&sc).map_err(|e| e.to_string())?;
        ensure(a.to_csv() == b.to_csv() && a.summary_json() == b.summary_json(), format!("{name} not deterministic"))?;
        for f in &a.flows {
            ensure(f.sent == f.received + f.destroyed + f.below_sensitivity, format!("{name}/{} conservation", f.flow_id))?;
        }
    }
    // (c) soundness on the deterministic broadcast and OTA scenarios
    for name in ["broadcast.json", "ota.json", "rss_flood.json"] {
        let r = run(&common::load(name)).map_err(|e| e.to_string())?;
        ensure(r.total_false_pos() == 0 && r.total_false_neg() == 0, format!("{name}: fp/fn"))?;
        for f in &r.flows {
            ensure(f.destroyed == 0 || f.destroyed == f.sent, format!("{name}/{}: partial destruction", f.flow_id))?;
        }
    }
    let mixed = common::simulate(json!({
        "duration_s": 2.0,
        "nodes": [
            {"id": 1, "role": "victim", "addr": "0x0000", "position": [0.0, 0.0], "sensitivity_dbm": -94.0},
            {"id": 2, "role": "guardian", "position": [0.5, 0.5], "tx_power_dbm": 10.0, "sensitivity_dbm": -94.0,
             "rules": ["gtables -A -m src --addr 0x1111 --pan 0xACAC -j DROP"]},
            {"id": 3, "role": "attacker", "addr": "0x1111", "position": [4.0, 0.0], "tx_power_dbm": 0.0},
            {"id": 4, "role": "victim", "addr": "0x2222", "position": [-3.0, 2.0], "tx_power_dbm": 0.0, "sensitivity_dbm": -94.0}
        ],
        "flows": [
            {"id": "bad", "src": 3, "dst": 1, "pan": "0xACAC", "rate_pps": 40.0, "start_s": 0.0, "end_s": 2.0},
            {"id": "good", "src": 4, "dst": 1, "pan": "0xACAC", "rate_pps": 40.0, "start_s": 0.004, "end_s": 2.0}
        ]
    }));
    let (bad, good) = (mixed.flow("bad").unwrap(), mixed.flow("good").unwrap());
    ensure(bad.destroyed == bad.sent && good.received == good.sent && mixed.total_false_pos() == 0, "mixed soundness")?;
    // (d) alignment
    let a26 = common::alignment_outcomes(26.0);
    let a12 = common::alignment_outcomes(12.0);
    ensure(a26.iter().all(|&d| d), "26 µs missed an alignment")?;
    ensure(a12.iter().any(|&d| !d), "12 µs destroyed under every alignment")?;
    // (e) revocation
    let r = run(&common::load("revocation.json")).map_err(|e| e.to_string())?;
    common::check_revocation(&r)?;
    Ok(format!(
        "deterministic, conserved, sound, 32/32 alignments at 26 µs, revocation fp={} fn={}",
        r.total_false_pos(),
        r.total_false_neg()
    ))
}

fn bound_vs_oracle() -> Check {
    let c = common::bound_vs_oracle(1_000, 2024);
    ensure(c.violations.is_empty(), c.violations.join("; "))?;
    ensure(c.undetected_successes > 0 && c.detected_successes > 0, format!("vacuous: {c:?}"))?;
    Ok(format!(
        "{} geometries, {} stealthy and {} forced successes within bounds",
        c.trials, c.undetected_successes, c.detected_successes
    ))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    // firmware sanity: the cost-model figures quoted alongside the tables
    let one = RuleChain::new(vec![parse_rule_line("gtables -A -j DROP").unwrap()]);
    assert!((decide_time(&one, &DecisionCostModel::firmware()) - 4.29).abs() < 1e-9);

    let criteria: [Criterion; 11] = [
        ("no-guardian attack range", no_guardian),
        ("stealthy attack range", stealth),
        ("brute-force attack range", force),
        ("energy cost", energy),
        ("false-positive rate", false_positives),
        ("deadline table", deadline_table),
        ("time-constants table", time_constants),
        ("rule conformance", rule_conformance),
        ("codec properties", codec_properties),
        ("simulator properties", simulator_properties),
        ("bound vs oracle", bound_vs_oracle),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
