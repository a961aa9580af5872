mod common;

use common::{alignment_outcomes, bound_vs_oracle, build, check_revocation, load, simulate};
use guardian_core::analysis::{reaction_feasible, TimingModel};
use guardian_core::frame::{Frame, FrameType};
use guardian_core::rf::{destroys, detects, RfParams};
use guardian_core::rules::{evaluate_chain, parse_rules, Verdict};
use guardian_core::sim::{run, Scenario, SimError};
use proptest::prelude::*;
use serde_json::json;

#[test]
fn shipped_scenarios_are_deterministic() {
    for name in ["revocation.json", "ota.json", "rss_flood.json", "broadcast.json", "empty.json"] {
        let sc = load(name);
        let a = run(&sc).unwrap();
        let b = run(&sc).unwrap();
        assert_eq!(a.to_csv(), b.to_csv(), "{name}");
        assert_eq!(a.summary_json(), b.summary_json(), "{name}");
    }
}

#[test]
fn shadowed_runs_depend_only_on_seed() {
    let mut sc = load("ota.json");
    sc.rf.shadowing_sigma_db = 6.0;
    let a = run(&sc).unwrap().to_csv();
    assert_eq!(a, run(&sc).unwrap().to_csv());
    sc.seed += 1;
    // different draws, same shape of output
    let c = run(&sc).unwrap().to_csv();
    assert_eq!(a.lines().count(), c.lines().count());
}

#[test]
fn empty_scenario_has_header_only() {
    let r = run(&load("empty.json")).unwrap();
    assert_eq!(
        r.to_csv(),
        "interval_start_s,flow_id,sent,received,destroyed,below_sensitivity,false_pos,false_neg,jam_airtime_us\n"
    );
}

#[test]
fn revocation_shape() {
    let r = run(&load("revocation.json")).unwrap();
    check_revocation(&r).unwrap();
    for id in common::REVOKED {
        assert!(r.flow(id).unwrap().destroyed > 1500, "{id} barely blocked");
    }
}

#[test]
fn flood_rule_spares_inside_nodes() {
    let r = run(&load("rss_flood.json")).unwrap();
    for f in &r.flows {
        if f.flow_id.starts_with("inside") {
            assert_eq!((f.destroyed, f.jam_transmissions), (0, 0), "{}", f.flow_id);
        } else {
            assert_eq!(f.destroyed, f.sent, "{}", f.flow_id);
        }
    }
    assert_eq!(r.total_false_pos() + r.total_false_neg(), 0);
}

#[test]
fn ota_update_blocked_sensor_untouched() {
    let r = run(&load("ota.json")).unwrap();
    let ota = r.flow("ota-update").unwrap();
    assert_eq!(ota.destroyed, ota.sent);
    let sensor = r.flow("sensor").unwrap();
    assert_eq!(sensor.received, sensor.sent);
}

#[test]
fn no_guardians_no_losses() {
    let r = simulate(json!({
        "duration_s": 2.0,
        "nodes": [
            {"id": 1, "role": "attacker", "position": [5.0, 0.0], "tx_power_dbm": 0.0},
            {"id": 2, "role": "victim", "position": [0.0, 0.0], "sensitivity_dbm": -94.0},
            {"id": 3, "role": "victim", "position": [0.0, 4.0], "sensitivity_dbm": -94.0, "tx_power_dbm": 0.0}
        ],
        "flows": [
            {"id": "a", "src": 1, "dst": 2, "pan": "0x22", "rate_pps": 50.0, "start_s": 0.0, "end_s": 2.0},
            {"id": "b", "src": 3, "dst": 2, "pan": "0x22", "rate_pps": 30.0, "start_s": 0.001, "end_s": 2.0}
        ]
    }));
    for f in &r.flows {
        assert_eq!(f.received, f.sent);
        assert_eq!(f.destroyed, 0);
    }
}

#[test]
fn alignment_sweep() {
    assert!(alignment_outcomes(26.0).iter().all(|&d| d));
    assert!(alignment_outcomes(12.0).iter().any(|&d| !d));
    // 16 µs only works when it straddles no symbol boundary badly
    let sixteen = alignment_outcomes(16.0);
    assert!(sixteen.iter().any(|&d| d));
}

#[test]
fn late_firmware_decision_lets_frames_through() {
    let r = simulate(json!({
        "duration_s": 1.0,
        "nodes": [
            {"id": 1, "role": "attacker", "position": [3.0, 0.0], "tx_power_dbm": 0.0},
            {"id": 2, "role": "victim", "position": [0.0, 0.0], "sensitivity_dbm": -94.0},
            {"id": 3, "role": "guardian", "position": [0.0, 1.0], "tx_power_dbm": 0.0, "sensitivity_dbm": -94.0,
             "timing": {"decision": {"variant": "fixed", "t_decide_us": 116.0}},
             "rules": ["gtables -A -m raw_byte --offset 14 --value 0 -j DROP"]}
        ],
        "flows": [{"id": "f", "src": 1, "dst": 2, "pan": "0x22", "rate_pps": 10.0, "start_s": 0.0, "end_s": 1.0}]
    }));
    let f = &r.flows[0];
    assert_eq!(f.jam_transmissions, f.sent);
    assert_eq!(f.received, f.sent);
    assert_eq!(f.false_neg, f.sent);
}

#[test]
fn bound_vs_oracle_small() {
    let check = bound_vs_oracle(300, 11);
    assert!(check.violations.is_empty(), "{:?}", check.violations);
    assert!(check.undetected_successes > 0 && check.detected_successes > 0, "{check:?}");
}

#[test]
fn validation_errors() {
    let bad = |doc: serde_json::Value| Scenario::from_json(&doc.to_string()).and_then(|s| run(&s));
    let missing = bad(json!({"duration_s": 1.0, "flows": [
        {"id": "x", "src": 1, "dst": 2, "pan": 1, "rate_pps": 1.0, "start_s": 0.0, "end_s": 1.0}]}));
    assert!(matches!(missing, Err(SimError::Invalid(_))));
    let negative = bad(json!({"duration_s": -1.0}));
    assert!(matches!(negative, Err(SimError::Invalid(_))));
    let unknown = bad(json!({"duration_s": 1.0, "bogus": true}));
    assert!(matches!(unknown, Err(SimError::Parse(_))));
    let bad_rule = bad(json!({"duration_s": 1.0, "nodes": [
        {"id": 3, "role": "guardian", "position": [0, 0], "sensitivity_dbm": -94, "rules": ["gtables -A -j MAYBE"]}]}));
    assert!(matches!(bad_rule, Err(SimError::Rules(_))));
}

const DROP_LINES: [&str; 4] = [
    "gtables -A -m src --addr 0x1111 --pan 0xACAC -j DROP",
    "gtables -A -m dst --addr 0xFFFF --pan 0xACAC -j DROP",
    "gtables -A -m type --control -m dst --pan 0xACAC -j DROP",
    "gtables -A -m dst --pan 0xACAC -m nw_ctrl 0x0008 -m asl_cmd 0x01 -j DROP",
];

#[derive(Debug, Clone)]
struct SrcSpec {
    addr: u16,
    pos: (f64, f64),
    control: bool,
    broadcast: bool,
    ota: bool,
}

fn any_src() -> impl Strategy<Value = SrcSpec> {
    (
        prop_oneof![Just(0x1111u16), Just(0x1112), 0x2000u16..0x2100],
        (-15.0f64..15.0, -15.0f64..15.0),
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(addr, pos, control, broadcast, ota)| SrcSpec { addr, pos, control, broadcast, ota })
}

fn flow_frame(s: &SrcSpec) -> Frame {
    let ty = if s.control { FrameType::Command } else { FrameType::Data };
    let mut payload = vec![0u8; 15];
    if s.ota {
        payload[0] = 0x08;
        payload[10] = 0x01;
    }
    let dst = if s.broadcast { 0xFFFF } else { 0x0000 };
    Frame::intra_pan(ty, 0, 0xACAC, dst, s.addr, payload)
}

fn soundness_doc(rules: &[&str], srcs: &[SrcSpec], guardian: (f64, f64), firmware: bool) -> serde_json::Value {
    let mut nodes = vec![
        json!({"id": 1, "role": "victim", "addr": "0x0000", "position": [0.0, 0.0], "sensitivity_dbm": -94.0}),
        json!({"id": 2, "role": "guardian", "addr": "0x00FF", "position": [guardian.0, guardian.1],
               "tx_power_dbm": 10.0, "sensitivity_dbm": -98.0, "rules": rules,
               "timing": if firmware { json!({"decision": {"variant": "firmware"}}) } else { json!({}) }}),
    ];
    let mut flows = Vec::new();
    for (i, s) in srcs.iter().enumerate() {
        let id = 10 + i as u32;
        nodes.push(json!({"id": id, "role": "attacker", "addr": format!("0x{:04X}", s.addr),
                          "position": [s.pos.0, s.pos.1], "tx_power_dbm": 0.0}));
        flows.push(json!({"id": format!("f{i}"), "src": id, "dst": 1, "pan": "0xACAC",
                          "rate_pps": 20.0, "start_s": 0.003 * i as f64, "end_s": 1.0,
                          "frame": {"type": if s.control { "control" } else { "data" },
                                    "dst_addr": if s.broadcast { "0xFFFF" } else { "0x0000" },
                                    "nw_ctrl": if s.ota { "0x0008" } else { "0x0000" },
                                    "asl_cmd": if s.ota { 1 } else { 0 }}}));
    }
    json!({"duration_s": 1.0, "nodes": nodes, "flows": flows})
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Deterministic channel, every node in range, feasible timing: every
    /// DROP-matched frame is destroyed and nothing else is.
    #[test]
    fn rule_soundness(
        rule_mask in 1usize..16,
        srcs in proptest::collection::vec(any_src(), 1..5),
        guardian in (-1.5f64..1.5, -1.5f64..1.5),
        firmware in any::<bool>(),
    ) {
        let rules: Vec<&str> = (0..4).filter(|i| rule_mask >> i & 1 == 1).map(|i| DROP_LINES[i]).collect();
        let chain = parse_rules(&rules.join("\n")).unwrap();
        let p = RfParams::default();
        let timing = if firmware {
            TimingModel::with_decision(guardian_core::rules::DecisionCostModel::firmware())
        } else {
            TimingModel::default()
        };
        for s in &srcs {
            prop_assume!(dist(s.pos, (0.0, 0.0)) > 0.5 && dist(s.pos, guardian) > 0.5);
            prop_assume!(dist(guardian, (0.0, 0.0)) > 0.1);
            prop_assume!(detects(0.0, dist(s.pos, (0.0, 0.0)), -94.0, &p).unwrap());
            prop_assume!(detects(0.0, dist(s.pos, guardian), -98.0, &p).unwrap());
            prop_assume!(destroys(0.0, dist(s.pos, (0.0, 0.0)), 10.0, dist(guardian, (0.0, 0.0)), &p).unwrap());
            let f = flow_frame(s);
            prop_assume!(reaction_feasible(&chain, &f, &timing, f.total_len()).unwrap().feasible);
        }
        let report = simulate(soundness_doc(&rules, &srcs, guardian, firmware));
        prop_assert_eq!(report.total_false_pos(), 0);
        prop_assert_eq!(report.total_false_neg(), 0);
        for (i, s) in srcs.iter().enumerate() {
            let f = &report.flows[i];
            let verdict = evaluate_chain(&chain, &flow_frame(s)).unwrap().verdict;
            if verdict == Verdict::Drop {
                prop_assert_eq!(f.destroyed, f.sent, "{:?}", s);
            } else {
                prop_assert_eq!(f.destroyed, 0, "{:?}", s);
                prop_assert_eq!(f.received, f.sent);
            }
        }
    }

    /// Counters add up for arbitrary geometry, shadowing and overlap.
    #[test]
    fn conservation(
        srcs in proptest::collection::vec(any_src(), 1..5),
        guardian in (-20.0f64..20.0, -20.0f64..20.0),
        sigma in 0.0f64..8.0,
        seed in any::<u64>(),
        carrier_sense in any::<bool>(),
    ) {
        prop_assume!(dist(guardian, (0.0, 0.0)) > 0.1);
        for s in &srcs {
            prop_assume!(dist(s.pos, (0.0, 0.0)) > 0.1 && dist(s.pos, guardian) > 0.1);
        }
        let mut doc = soundness_doc(&DROP_LINES, &srcs, guardian, false);
        doc["seed"] = json!(seed);
        doc["rf"] = json!({"shadowing_sigma_db": sigma});
        doc["stats_interval_s"] = json!(0.25);
        for f in doc["flows"].as_array_mut().unwrap() {
            f["carrier_sense"] = json!(carrier_sense);
        }
        let report = simulate(doc);
        for f in &report.flows {
            prop_assert_eq!(f.sent, f.received + f.destroyed + f.below_sensitivity);
            let rows: Vec<_> = report.intervals.iter().filter(|r| r.flow_id == f.flow_id).collect();
            prop_assert_eq!(rows.len(), 4);
            prop_assert_eq!(rows.iter().map(|r| r.sent).sum::<u64>(), f.sent);
            prop_assert_eq!(rows.iter().map(|r| r.destroyed).sum::<u64>(), f.destroyed);
            prop_assert!(f.false_neg <= f.received && f.false_pos <= f.destroyed);
        }
    }

    /// A second guardian only adds interference.
    #[test]
    fn second_guardian_never_reduces_destruction(
        srcs in proptest::collection::vec(any_src(), 1..4),
        seed in any::<u64>(),
        offset in (-0.5f64..0.5, -0.5f64..0.5),
    ) {
        let guardian = (6.0, 0.0);
        for s in &srcs {
            prop_assume!(dist(s.pos, (0.0, 0.0)) > 0.1 && dist(s.pos, guardian) > 0.1);
        }
        let mut single = soundness_doc(&DROP_LINES, &srcs, guardian, false);
        single["seed"] = json!(seed);
        single["rf"] = json!({"shadowing_sigma_db": 6.0});
        let mut double = single.clone();
        let mut twin = double["nodes"][1].clone();
        twin["id"] = json!(4);
        twin["position"] = json!([guardian.0 + offset.0, guardian.1 + offset.1]);
        double["nodes"].as_array_mut().unwrap().push(twin);
        let one = simulate(single);
        let two = simulate(double);
        for (a, b) in one.flows.iter().zip(&two.flows) {
            prop_assert_eq!(a.sent, b.sent);
            prop_assert!(b.destroyed >= a.destroyed, "{} {} < {}", a.flow_id, b.destroyed, a.destroyed);
        }
    }
}

#[test]
fn scenario_round_trips_through_json() {
    let sc = load("revocation.json");
    let text = serde_json::to_string(&sc).unwrap();
    let again = build(serde_json::from_str(&text).unwrap());
    assert_eq!(again.nodes, sc.nodes);
    assert_eq!(again.flows, sc.flows);
}
