//! WebAssembly bindings behind `www/index.html`.
//!
//! Every export takes plain numbers or strings and returns a JSON document,
//! so the page needs no generated type glue beyond `wasm-bindgen`'s own. The
//! functions are ordinary Rust too and are tested natively.

use guardian_core::analysis::{
    force_attack_range, max_react_time, no_guardian_range, stealth_attack_range, timing_at_depth,
    TimingModel,
};
use guardian_core::frame::{decode_frame, field_offset, from_hex, FieldRef};
use guardian_core::rf::RfParams;
use guardian_core::rules::{
    chain_inspection_depth, decide_time, evaluate_chain, parse_rules, DecisionCostModel, RuleChain,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Failure {
    error: String,
}

fn to_json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v),
        Err(error) => serde_json::to_string(&Failure { error }),
    }
    .expect("plain data serialises")
}

#[derive(Serialize)]
struct RangePoint {
    d_gv: f64,
    stealth_m: Option<f64>,
    force_m: f64,
}

#[derive(Serialize)]
struct RangeCurve {
    no_guardian_m: f64,
    points: Vec<RangePoint>,
}

/// Stealthy and brute-force attack ranges as the guardian moves away from
/// the victim, for `steps + 1` evenly spaced distances in `(0, d_gv_max]`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn range_curve(
    pa_dbm: f64,
    pg_dbm: f64,
    sv_dbm: f64,
    sg_dbm: f64,
    gamma_eff_db: f64,
    alpha: f64,
    d_gv_max: f64,
    steps: u32,
) -> String {
    to_json((|| {
        if !(d_gv_max > 0.0) || steps == 0 || steps > 10_000 {
            return Err("need d_gv_max > 0 and 1..=10000 steps".to_string());
        }
        let params = RfParams {
            alpha,
            ..RfParams::default()
        };
        let no_guardian_m = no_guardian_range(pa_dbm, sv_dbm, &params).map_err(|e| e.to_string())?;
        let points = (1..=steps)
            .map(|i| {
                let d_gv = d_gv_max * i as f64 / steps as f64;
                Ok(RangePoint {
                    d_gv,
                    stealth_m: stealth_attack_range(sv_dbm, sg_dbm, d_gv, alpha).ok(),
                    force_m: force_attack_range(pa_dbm, pg_dbm, gamma_eff_db, d_gv, alpha)
                        .map_err(|e| e.to_string())?,
                })
            })
            .collect::<Result<_, String>>()?;
        Ok(RangeCurve {
            no_guardian_m,
            points,
        })
    })())
}

#[derive(Serialize)]
struct TimingRow {
    field: &'static str,
    offset: usize,
    max_react_us: f64,
    t_react_us: f64,
    feasible: bool,
}

/// Which blocking rules a guardian can still act on, for a frame of
/// `total_bytes`. `model` is `fpga`, `firmware` or `fixed` (`t_decide_us`
/// is used by `fpga` and `fixed`). For `firmware` the chain is `rules`
/// rules of `matches_per_rule` matches each.
#[wasm_bindgen]
pub fn timing_table(
    model: &str,
    t_decide_us: f64,
    rules: u32,
    matches_per_rule: u32,
    total_bytes: u32,
) -> String {
    to_json((|| {
        let decision = match model {
            "fpga" => DecisionCostModel::Fpga { const_us: t_decide_us },
            "firmware" => DecisionCostModel::firmware(),
            "fixed" => DecisionCostModel::Fixed { t_decide_us },
            other => return Err(format!("unknown model `{other}`")),
        };
        if !decision.is_valid() {
            return Err("decision time must be non-negative".into());
        }
        let chain = synthetic_chain(rules.min(200), matches_per_rule.min(8));
        let t_decide = decide_time(&chain, &decision);
        let timing = TimingModel::with_decision(decision);
        let total = total_bytes as usize;
        let rows = [
            ("Start-of-frame delimiter", 5),
            ("Frame control field", 8),
            ("Source address", 15),
            ("Payload byte 11", 26),
            ("Last payload byte", total.saturating_sub(2)),
        ];
        rows.iter()
            .filter(|(_, off)| *off >= 1 && *off <= total)
            .map(|&(field, offset)| {
                let r = timing_at_depth(offset, t_decide, &timing, total).map_err(|e| e.to_string())?;
                Ok(TimingRow {
                    field,
                    offset,
                    max_react_us: max_react_time(offset, total).map_err(|e| e.to_string())?,
                    t_react_us: r.t_react_us,
                    feasible: r.feasible,
                })
            })
            .collect::<Result<Vec<_>, String>>()
    })())
}

fn synthetic_chain(rules: u32, matches: u32) -> RuleChain {
    let line = format!(
        "gtables -A{} -j DROP",
        " -m dst --addr 0x0001".repeat(matches as usize)
    );
    let rule = guardian_core::rules::parse_rule_line(&line).expect("well-formed");
    RuleChain::new(vec![rule; rules as usize])
}

#[derive(Serialize)]
struct Classification {
    verdict: String,
    rule: Option<usize>,
    inspection_depth: Option<usize>,
    corrupt: bool,
    fields: Vec<(String, usize)>,
}

/// Decodes a hex frame and runs it through a rules file. `rss_dbm` is
/// ignored when NaN.
#[wasm_bindgen]
pub fn classify(frame_hex: &str, rules_text: &str, rss_dbm: f64) -> String {
    to_json((|| {
        let bytes = from_hex(frame_hex).map_err(|e| e.to_string())?;
        let mut frame = decode_frame(&bytes).map_err(|e| e.to_string())?;
        if !rss_dbm.is_nan() {
            frame = frame.with_rss(rss_dbm);
        }
        let chain = parse_rules(rules_text).map_err(|e| e.to_string())?;
        let e = evaluate_chain(&chain, &frame).map_err(|e| e.to_string())?;
        let fields = [
            FieldRef::Sfd,
            FieldRef::Fcf,
            FieldRef::DstPan,
            FieldRef::DstAddr,
            FieldRef::SrcAddr,
            FieldRef::NwCtrl,
            FieldRef::AslCmd,
        ]
        .into_iter()
        .filter_map(|f| field_offset(&frame, f).ok().map(|o| (f.to_string(), o)))
        .collect();
        Ok(Classification {
            verdict: e.verdict.to_string(),
            rule: e.rule,
            inspection_depth: chain_inspection_depth(&chain, &frame).ok(),
            corrupt: frame.corrupt,
            fields,
        })
    })())
}
