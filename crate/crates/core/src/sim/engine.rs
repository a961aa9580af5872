use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;

use super::pipeline::{guardian_pipeline, GuardianView};
use super::reception::{reception_outcome, Interference, Outcome, SimTime, Window};
use super::scenario::{CompiledRules, FrameKind, Role, Scenario, Strategy};
use super::stats::{FlowSummary, GuardianSummary, IntervalRow, StatsReport};
use super::SimError;
use crate::analysis::{stealth_power_window, TimingModel};
use crate::frame::{Frame, FrameType, APS_COMMAND_INDEX};
use crate::rf::{path_loss_db, path_loss_shadowed_db, Shadowing};
use crate::rules::{evaluate_chain, RuleChain, Verdict};

/// Gap a deferring transmitter leaves after the channel clears (12 symbols).
const TURNAROUND_US: f64 = 192.0;

#[derive(Debug, Clone, Copy)]
enum Event {
    FrameStart { flow: usize, k: u64, deferred: bool },
    FrameEnd { tx: u64 },
    RuleSwap { guardian: usize, entry: usize },
}

struct Scheduled {
    time: SimTime,
    node: u32,
    seq: u64,
    event: Event,
}

impl Scheduled {
    fn key(&self) -> (SimTime, u32, u64) {
        (self.time, self.node, self.seq)
    }
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

struct ScheduleEntry {
    scheduled: SimTime,
    effective: SimTime,
    chain: Arc<RuleChain>,
}

struct GuardianState {
    node: usize,
    timing: TimingModel,
    jam_power_dbm: f64,
    sensitivity_dbm: f64,
    initial: Arc<RuleChain>,
    schedule: Vec<ScheduleEntry>,
    current: Arc<RuleChain>,
    summary: GuardianSummary,
}

impl GuardianState {
    /// Chain the operator intends at `t`, ignoring reconfiguration latency.
    fn intended(&self, t: SimTime) -> &RuleChain {
        self.schedule
            .iter()
            .rev()
            .find(|e| e.scheduled <= t)
            .map_or(&self.initial, |e| &e.chain)
    }

    /// Chain actually loaded at `t`.
    fn in_force(&self, t: SimTime) -> &RuleChain {
        self.schedule
            .iter()
            .rev()
            .find(|e| e.effective <= t)
            .map_or(&self.initial, |e| &e.chain)
    }
}

struct FlowState {
    spec: usize,
    src: usize,
    dst: usize,
    seq: u8,
    summary: FlowSummary,
}

#[derive(Debug, Clone, Copy)]
struct Burst {
    window: Window,
    src: usize,
    power_dbm: f64,
    /// Transmission id for frames, `None` for interference.
    tx: Option<u64>,
}

struct InFlight {
    flow: usize,
    window: Window,
    rx_power_dbm: f64,
    interval: usize,
    /// Some guardian's intended policy drops the frame.
    unauthorized: bool,
    /// Every guardian's intended and loaded policy accepts the frame.
    authorized: bool,
}

struct Engine<'a> {
    sc: &'a Scenario,
    shadow: Shadowing,
    guardians: Vec<GuardianState>,
    flows: Vec<FlowState>,
    rows: Vec<IntervalRow>,
    intervals: usize,
    heap: BinaryHeap<Reverse<Scheduled>>,
    next_seq: u64,
    bursts: Vec<Burst>,
    in_flight: BTreeMap<u64, InFlight>,
    next_tx: u64,
}

/// Runs a scenario to completion.
pub fn run(scenario: &Scenario) -> Result<StatsReport, SimError> {
    let compiled = scenario.validate()?;
    let mut engine = Engine::new(scenario, compiled);
    engine.run()?;
    Ok(engine.finish())
}

impl<'a> Engine<'a> {
    fn new(sc: &'a Scenario, compiled: CompiledRules) -> Self {
        let index_of = |id: u32| sc.nodes.iter().position(|n| n.id == id).expect("validated");
        let latency = SimTime::from_micros(sc.reconfig_latency_us());
        let guardians: Vec<GuardianState> = sc
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.role == Role::Guardian)
            .map(|(i, n)| {
                let mut schedule: Vec<ScheduleEntry> = compiled
                    .updates
                    .iter()
                    .filter(|(_, g, _)| *g == n.id)
                    .map(|(t, _, chain)| {
                        let scheduled = SimTime::from_secs(*t);
                        ScheduleEntry {
                            scheduled,
                            effective: scheduled + latency,
                            chain: Arc::clone(chain),
                        }
                    })
                    .collect();
                schedule.sort_by_key(|e| e.scheduled);
                let initial = Arc::clone(&compiled.initial[&n.id]);
                GuardianState {
                    node: i,
                    timing: n.timing.unwrap_or_default(),
                    jam_power_dbm: n.jam_power_dbm.unwrap_or(n.tx_power_dbm),
                    sensitivity_dbm: n.sensitivity_dbm.expect("validated"),
                    current: Arc::clone(&initial),
                    initial,
                    schedule,
                    summary: GuardianSummary {
                        guardian: n.id,
                        detections: 0,
                        jams: 0,
                        jam_airtime_us: 0.0,
                    },
                }
            })
            .collect();
        let flows: Vec<FlowState> = sc
            .flows
            .iter()
            .enumerate()
            .map(|(i, f)| FlowState {
                spec: i,
                src: index_of(f.src),
                dst: index_of(f.dst),
                seq: 0,
                summary: FlowSummary {
                    flow_id: f.id.clone(),
                    sent: 0,
                    received: 0,
                    destroyed: 0,
                    below_sensitivity: 0,
                    false_pos: 0,
                    false_neg: 0,
                    detected: 0,
                    abstained: 0,
                    jam_transmissions: 0,
                    jam_airtime_us: 0.0,
                },
            })
            .collect();
        let intervals = if sc.flows.is_empty() {
            0
        } else {
            ((sc.duration_s / sc.stats_interval_s).ceil() as usize).max(1)
        };
        let mut rows = Vec::with_capacity(intervals * flows.len());
        for k in 0..intervals {
            for f in &sc.flows {
                rows.push(IntervalRow::new(k as f64 * sc.stats_interval_s, &f.id));
            }
        }
        Engine {
            sc,
            shadow: Shadowing::new(sc.seed, sc.rf.shadowing_sigma_db),
            guardians,
            flows,
            rows,
            intervals,
            heap: BinaryHeap::new(),
            next_seq: 0,
            bursts: Vec::new(),
            in_flight: BTreeMap::new(),
            next_tx: 0,
        }
    }

    fn schedule(&mut self, time: SimTime, node: u32, event: Event) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Scheduled {
            time,
            node,
            seq,
            event,
        }));
    }

    fn node_id(&self, idx: usize) -> u32 {
        self.sc.nodes[idx].id
    }

    /// Shadowed path loss between two nodes.
    fn link_loss(&self, tx: usize, rx: usize) -> Result<f64, SimError> {
        let (a, b) = (&self.sc.nodes[tx], &self.sc.nodes[rx]);
        path_loss_shadowed_db(a.distance_to(b), &self.sc.rf, &self.shadow, a.id, b.id)
            .map_err(|e| SimError::Invalid(format!("link {} -> {}: {e}", a.id, b.id)))
    }

    fn nominal_start(&self, flow: usize, k: u64) -> Option<SimTime> {
        let f = &self.sc.flows[self.flows[flow].spec];
        let t = f.start_s + k as f64 / f.rate_pps;
        (t < f.end_s).then(|| SimTime::from_secs(t))
    }

    fn run(&mut self) -> Result<(), SimError> {
        for fi in 0..self.flows.len() {
            if let Some(t) = self.nominal_start(fi, 0) {
                let node = self.node_id(self.flows[fi].src);
                self.schedule(t, node, Event::FrameStart { flow: fi, k: 0, deferred: false });
            }
        }
        for gi in 0..self.guardians.len() {
            let node = self.node_id(self.guardians[gi].node);
            for ei in 0..self.guardians[gi].schedule.len() {
                let t = self.guardians[gi].schedule[ei].effective;
                self.schedule(t, node, Event::RuleSwap { guardian: gi, entry: ei });
            }
        }
        while let Some(Reverse(ev)) = self.heap.pop() {
            match ev.event {
                Event::FrameStart { flow, k, deferred } => self.frame_start(ev.time, flow, k, deferred)?,
                Event::FrameEnd { tx } => self.frame_end(tx)?,
                Event::RuleSwap { guardian, entry } => {
                    let g = &mut self.guardians[guardian];
                    g.current = Arc::clone(&g.schedule[entry].chain);
                }
            }
        }
        Ok(())
    }

    fn channel_busy_until(&self, t: SimTime) -> Option<SimTime> {
        self.bursts
            .iter()
            .filter(|b| b.tx.is_some() && b.window.start <= t && t < b.window.end)
            .map(|b| b.window.end)
            .max()
    }

    fn prune_bursts(&mut self, now: SimTime) {
        let horizon = self
            .in_flight
            .values()
            .map(|f| f.window.start)
            .min()
            .unwrap_or(now)
            .min(now);
        self.bursts.retain(|b| b.window.end > horizon);
    }

    /// Transmit power for the next frame, `None` when a stealthy attacker
    /// finds no power that stays hidden.
    fn choose_power(&self, flow: usize) -> Result<Option<f64>, SimError> {
        let fs = &self.flows[flow];
        let f = &self.sc.flows[fs.spec];
        let src = &self.sc.nodes[fs.src];
        if f.strategy != Strategy::Stealthy {
            return Ok(Some(src.tx_power_dbm));
        }
        let dst = &self.sc.nodes[fs.dst];
        let sv = dst.sensitivity_dbm.expect("validated");
        let d_av = src.distance_to(dst);
        let mut window: Option<(f64, f64)> = None;
        let mut any_guardian = false;
        for g in &self.guardians {
            any_guardian = true;
            let gn = &self.sc.nodes[g.node];
            let w = stealth_power_window(d_av, src.distance_to(gn), sv, g.sensitivity_dbm, &self.sc.rf)
                .map_err(|e| SimError::Invalid(e.to_string()))?;
            match (w, window) {
                (None, _) => return Ok(None),
                (Some(w), None) => window = Some((w.lower_dbm, w.upper_dbm)),
                (Some(w), Some((lo, hi))) => window = Some((lo.max(w.lower_dbm), hi.min(w.upper_dbm))),
            }
        }
        if !any_guardian {
            return Ok(Some(src.tx_power_dbm));
        }
        let (lo, hi) = window.expect("at least one guardian");
        if lo >= hi {
            return Ok(None);
        }
        let p = (0.5 * (lo + hi)).min(src.tx_power_dbm);
        Ok((p >= lo).then_some(p))
    }

    fn build_frame(&mut self, flow: usize) -> Frame {
        let fs = &mut self.flows[flow];
        let f = &self.sc.flows[fs.spec];
        let src = &self.sc.nodes[fs.src];
        let dst = &self.sc.nodes[fs.dst];
        let mut payload = vec![0u8; f.frame.payload_len];
        if let Some(nw) = f.frame.nw_ctrl {
            payload[..2].copy_from_slice(&nw.0.to_le_bytes());
        }
        if let Some(cmd) = f.frame.asl_cmd {
            payload[APS_COMMAND_INDEX] = cmd;
        }
        let ty = match f.frame.kind {
            FrameKind::Data => FrameType::Data,
            FrameKind::Control => FrameType::Command,
            FrameKind::Beacon => FrameType::Beacon,
        };
        let dst_addr = f.frame.dst_addr.map_or(dst.short_addr(), |a| a.0);
        let seq = fs.seq;
        fs.seq = fs.seq.wrapping_add(1);
        Frame::intra_pan(ty, seq, f.pan.0, dst_addr, src.short_addr(), payload)
    }

    fn interval_of(&self, t: SimTime) -> usize {
        let k = (t.as_secs() / self.sc.stats_interval_s).floor() as usize;
        k.min(self.intervals.saturating_sub(1))
    }

    fn frame_start(&mut self, t: SimTime, flow: usize, k: u64, deferred: bool) -> Result<(), SimError> {
        let src = self.flows[flow].src;
        let src_id = self.node_id(src);
        if !deferred {
            if let Some(next) = self.nominal_start(flow, k + 1) {
                self.schedule(next, src_id, Event::FrameStart { flow, k: k + 1, deferred: false });
            }
        }
        self.prune_bursts(t);
        if self.sc.flows[self.flows[flow].spec].carrier_sense {
            if let Some(busy) = self.channel_busy_until(t) {
                let retry = busy + SimTime::from_micros(TURNAROUND_US);
                self.schedule(retry, src_id, Event::FrameStart { flow, k, deferred: true });
                return Ok(());
            }
        }
        let Some(power) = self.choose_power(flow)? else {
            self.flows[flow].summary.abstained += 1;
            return Ok(());
        };
        let frame = self.build_frame(flow);
        let window = Window::new(t, t + SimTime::from_micros(frame.airtime_us()));
        let interval = self.interval_of(t);
        let row = interval * self.flows.len() + flow;
        self.rows[row].sent += 1;
        self.flows[flow].summary.sent += 1;

        let dst = self.flows[flow].dst;
        let rx_power_dbm = power - self.link_loss(src, dst)?;
        let mut unauthorized = false;
        let mut authorized = true;
        let mut detected = false;
        for gi in 0..self.guardians.len() {
            let g_node = self.guardians[gi].node;
            let rx_g = power - self.link_loss(src, g_node)?;
            let observed = frame.clone().with_rss(rx_g);
            let g = &self.guardians[gi];
            let verdict = |c: &RuleChain| {
                evaluate_chain(c, &observed).map(|e| e.verdict).unwrap_or(Verdict::Accept)
            };
            let intended = verdict(g.intended(t));
            unauthorized |= intended == Verdict::Drop;
            authorized &= intended == Verdict::Accept && verdict(g.in_force(t)) == Verdict::Accept;

            if rx_g < g.sensitivity_dbm {
                continue;
            }
            detected = true;
            let view = GuardianView {
                chain: &g.current,
                timing: &g.timing,
                jam_power_dbm: g.jam_power_dbm,
            };
            let action = guardian_pipeline(&frame, &view, rx_g, t);
            let g = &mut self.guardians[gi];
            g.summary.detections += 1;
            if let Some(jam) = action {
                let airtime = jam.duration.as_micros();
                g.summary.jams += 1;
                g.summary.jam_airtime_us += airtime;
                self.rows[row].jam_airtime_us += airtime;
                let fsum = &mut self.flows[flow].summary;
                fsum.jam_transmissions += 1;
                fsum.jam_airtime_us += airtime;
                self.bursts.push(Burst {
                    window: Window::new(jam.start, jam.end()),
                    src: g_node,
                    power_dbm: jam.power_dbm,
                    tx: None,
                });
            }
        }
        if detected {
            self.flows[flow].summary.detected += 1;
        }

        let tx = self.next_tx;
        self.next_tx += 1;
        self.bursts.push(Burst {
            window,
            src,
            power_dbm: power,
            tx: Some(tx),
        });
        self.in_flight.insert(
            tx,
            InFlight {
                flow,
                window,
                rx_power_dbm,
                interval,
                unauthorized,
                authorized,
            },
        );
        self.schedule(window.end, src_id, Event::FrameEnd { tx });
        Ok(())
    }

    fn frame_end(&mut self, tx: u64) -> Result<(), SimError> {
        let f = self.in_flight.remove(&tx).expect("frame in flight");
        let victim = self.flows[f.flow].dst;
        let mut interference = Vec::new();
        for b in &self.bursts {
            if b.tx == Some(tx) || b.src == victim || b.window.overlap(&f.window) == 0 {
                continue;
            }
            interference.push(Interference {
                window: b.window,
                power_dbm: b.power_dbm - self.link_loss(b.src, victim)?,
            });
        }
        let sens = self.sc.nodes[victim].sensitivity_dbm.expect("validated");
        let outcome = reception_outcome(
            f.window,
            f.rx_power_dbm,
            sens,
            &interference,
            self.sc.rf.gamma_eff_db(),
            self.sc.min_overlap_us,
        );
        let row = f.interval * self.flows.len() + f.flow;
        let false_neg = f.unauthorized && outcome == Outcome::Received;
        let false_pos = f.authorized && outcome == Outcome::Destroyed;
        let r = &mut self.rows[row];
        r.record(outcome);
        r.false_neg += false_neg as u64;
        r.false_pos += false_pos as u64;
        let s = &mut self.flows[f.flow].summary;
        match outcome {
            Outcome::Received => s.received += 1,
            Outcome::Destroyed => s.destroyed += 1,
            Outcome::BelowSensitivity => s.below_sensitivity += 1,
        }
        s.false_neg += false_neg as u64;
        s.false_pos += false_pos as u64;
        Ok(())
    }

    fn finish(self) -> StatsReport {
        StatsReport {
            seed: self.sc.seed,
            duration_s: self.sc.duration_s,
            stats_interval_s: self.sc.stats_interval_s,
            intervals: self.rows,
            flows: self.flows.into_iter().map(|f| f.summary).collect(),
            guardians: self.guardians.into_iter().map(|g| g.summary).collect(),
        }
    }
}

/// Deterministic (unshadowed) received power between two scenario nodes.
pub fn nominal_rx_power(sc: &Scenario, tx: u32, rx: u32, ptx_dbm: f64) -> Result<f64, SimError> {
    let a = sc.node(tx).ok_or_else(|| SimError::Invalid(format!("unknown node {tx}")))?;
    let b = sc.node(rx).ok_or_else(|| SimError::Invalid(format!("unknown node {rx}")))?;
    path_loss_db(a.distance_to(b), &sc.rf)
        .map(|pl| ptx_dbm - pl)
        .map_err(|e| SimError::Invalid(e.to_string()))
}
