//! Deterministic slot loop: arrivals, scheduling, transmissions, PHY outcomes
//! and learning, with a training phase followed by a greedy evaluation phase.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::agents::{
    conservative_slice, eps_bucket, rrp_decide, rrp_learn, rrp_reward, rru_decide, rru_learn, rrs_schedule,
    InterferenceLevel, NsLink, RiskMap, RiskPredictor, RrpAgent, RrpState, RrpTransition, RruAction, RruAgent,
    RruState, SchedCandidate, DEFAULT_RING_EDGES_M,
};
use crate::geometry_channel::{db_to_lin, draw_fading, noise_power_dbm, path_loss_at, ChannelParams};
use crate::phy_outage::{eps_outage_rate, Combining, RateModel};
use crate::rl_core::{LearningParams, QTable, StepSize};
use crate::slicing_hma::{
    make_mode, slices_for_mode, user_psd_contribution, InterferenceCap, Mode, RrbRole, SliceConfig,
};
use crate::traffic_users::{
    next_ns_arrival, place_devices, ArrivalProcess, Device, DeviceClass, NS_TX_DBM, SCHEDULED_DELAY_BUDGET,
    SCHEDULED_TX_DBM,
};
use crate::{Error, Result, N_RRB};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalScope {
    /// Each NS device arrives at the configured rate.
    PerDevice,
    /// The configured rate is the whole cell's; devices share it equally.
    PerCell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlicePolicy {
    /// RRP learns the slice within the mode's action set.
    Learned,
    /// The slice given by the mode and the configured counts.
    Fixed,
    /// Dedicated NS RRBs sized for the cell-edge user, no sharing.
    Conservative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub channel: ChannelParams,
    pub rrb_bandwidth_hz: f64,
    pub combining: Combining,
    pub n_scheduled: usize,
    pub n_ns: usize,
    pub sched_r_min_m: f64,
    pub sched_r_max_m: f64,
    pub ns_r_min_m: f64,
    pub ns_r_max_m: f64,
    pub sched_tx_dbm: f64,
    pub ns_tx_dbm: f64,
    pub sched_delay_budget: u32,
    pub ns_arrival_rate: f64,
    pub arrival_scope: ArrivalScope,
    pub mode: Mode,
    pub policy: SlicePolicy,
    pub n_ded_ns: usize,
    pub n_ded_s: usize,
    pub cap_dbm_hz: f64,
    /// Whether the shared-RRB cap also binds under NOMA.
    pub noma_cap: bool,
    pub eps_ns: f64,
    pub sched_eps: f64,
    pub ns_target_rate_bps: f64,
    pub learning: LearningParams,
    pub rru_step: StepSize,
    pub episode_slots: u64,
    pub kappa: f64,
    pub forgetting: f64,
    pub ring_edges_m: Vec<f64>,
    pub n_slots_train: u64,
    pub n_slots_eval: u64,
    pub slot_ms: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            channel: ChannelParams::default(),
            rrb_bandwidth_hz: 180_000.0,
            combining: Combining::Mrc,
            n_scheduled: 20,
            n_ns: 20,
            sched_r_min_m: 30.0,
            sched_r_max_m: 3000.0,
            ns_r_min_m: 30.0,
            ns_r_max_m: 3000.0,
            sched_tx_dbm: SCHEDULED_TX_DBM,
            ns_tx_dbm: NS_TX_DBM,
            sched_delay_budget: SCHEDULED_DELAY_BUDGET,
            ns_arrival_rate: 0.01,
            arrival_scope: ArrivalScope::PerDevice,
            mode: Mode::Hma,
            policy: SlicePolicy::Learned,
            n_ded_ns: 1,
            n_ded_s: 2,
            cap_dbm_hz: -172.0,
            noma_cap: false,
            eps_ns: 1e-4,
            sched_eps: 1e-4,
            ns_target_rate_bps: 256_000.0,
            learning: LearningParams::default(),
            rru_step: StepSize::VisitCount,
            episode_slots: 1000,
            kappa: 10.0,
            forgetting: 1e-4,
            ring_edges_m: DEFAULT_RING_EDGES_M.to_vec(),
            n_slots_train: 1_000_000,
            n_slots_eval: 100_000,
            slot_ms: 1.0,
            seed: 1,
        }
    }
}

impl SimConfig {
    /// Checks every invariant; returns advisory warnings on success.
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |m: String| Err(Error::Config(m));
        self.channel.validate()?;
        self.learning.validate()?;
        if !(self.rrb_bandwidth_hz > 0.0) {
            return bad(format!("rrb bandwidth {} must be positive", self.rrb_bandwidth_hz));
        }
        for (name, lo, hi) in [("sched", self.sched_r_min_m, self.sched_r_max_m), ("ns", self.ns_r_min_m, self.ns_r_max_m)] {
            if !(30.0..=3000.0).contains(&lo) || !(lo..=3000.0).contains(&hi) {
                return bad(format!("{name} placement annulus [{lo}, {hi}] not inside [30, 3000]"));
            }
        }
        if !(0.0..1.0).contains(&self.ns_arrival_rate) {
            return bad(format!("arrival rate {} outside [0,1)", self.ns_arrival_rate));
        }
        if self.sched_delay_budget < 1 {
            return bad("scheduled delay budget must be at least 1 slot".into());
        }
        for (name, e) in [("eps_ns", self.eps_ns), ("sched_eps", self.sched_eps)] {
            if !(e > 0.0 && e < 1.0) {
                return bad(format!("{name} {e} outside (0,1)"));
            }
        }
        if !(self.ns_target_rate_bps > 0.0) {
            return bad("NS target rate must be positive".into());
        }
        if !self.cap_dbm_hz.is_finite() {
            return bad("interference cap must be finite".into());
        }
        if self.episode_slots == 0 {
            return bad("episode length must be positive".into());
        }
        if !(self.kappa >= 0.0) {
            return bad("kappa must be nonnegative".into());
        }
        if !(0.0..=1.0).contains(&self.forgetting) {
            return bad(format!("forgetting {} outside [0,1]", self.forgetting));
        }
        if self.ring_edges_m.len() < 2 || !self.ring_edges_m.windows(2).all(|w| w[0] < w[1]) {
            return bad("ring edges must be at least two increasing radii".into());
        }
        if self.n_slots_eval == 0 {
            return bad("evaluation phase must have at least one slot".into());
        }
        if !(self.slot_ms > 0.0) {
            return bad("slot duration must be positive".into());
        }
        if self.policy == SlicePolicy::Fixed {
            self.fixed_slice()?;
        }
        let mut warnings = Vec::new();
        if (self.n_slots_eval as f64) < 10.0 / self.eps_ns {
            warnings.push(format!(
                "n_slots_eval = {} is below 10/eps_ns = {:.0}; measured NS outage will be coarse",
                self.n_slots_eval,
                10.0 / self.eps_ns
            ));
        }
        Ok(warnings)
    }

    /// Slice selected by mode and counts; NOMA ignores the counts.
    pub fn fixed_slice(&self) -> Result<SliceConfig> {
        match self.mode {
            Mode::Noma => make_mode(Mode::Noma, 0, 0),
            Mode::Oma => make_mode(Mode::Oma, self.n_ded_ns, N_RRB.saturating_sub(self.n_ded_ns)),
            Mode::Hma => make_mode(Mode::Hma, self.n_ded_ns, self.n_ded_s),
        }
    }

    pub fn rate_model(&self) -> RateModel {
        RateModel { bandwidth_hz: self.rrb_bandwidth_hz, combining: self.combining }
    }

    pub fn ns_link(&self) -> NsLink {
        NsLink {
            channel: self.channel,
            model: self.rate_model(),
            ns_tx_dbm: self.ns_tx_dbm,
            target_rate_bps: self.ns_target_rate_bps,
        }
    }

    fn cap(&self) -> Option<InterferenceCap> {
        (self.mode != Mode::Noma || self.noma_cap).then_some(InterferenceCap { max_psd_dbm_hz: self.cap_dbm_hz })
    }

    fn per_device_rate(&self) -> f64 {
        match self.arrival_scope {
            ArrivalScope::PerDevice => self.ns_arrival_rate,
            ArrivalScope::PerCell if self.n_ns > 0 => self.ns_arrival_rate / self.n_ns as f64,
            ArrivalScope::PerCell => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub ns_attempts: u64,
    pub ns_outages: u64,
    pub ns_blocked: u64,
    pub scheduled_reliable_goodput_bps: f64,
    pub rrb_utilization: [f64; N_RRB],
    /// Used share of the offered RRB-slots of each group: dedicated-NS,
    /// dedicated-S, shared. Zero for a group that was never offered.
    pub slice_occupancy: [f64; 3],
    pub sched_collisions: u64,
    pub eval_slots: u64,
    /// Slice in force for the most evaluation episodes.
    pub dominant_slice: SliceConfig,
}

impl Metrics {
    pub fn ns_outage_rate(&self) -> f64 {
        if self.ns_attempts == 0 {
            0.0
        } else {
            self.ns_outages as f64 / self.ns_attempts as f64
        }
    }
}

#[derive(Debug, Clone)]
struct SchedUser {
    device: Device,
    psd_dbm_hz: f64,
    rate_bps: f64,
}

#[derive(Debug, Clone)]
struct NsUser {
    device: Device,
    pl_db: f64,
    ring: usize,
    agent: RruAgent,
}

#[derive(Debug, Clone, Copy)]
struct Episode {
    state: RrpState,
    action: usize,
    slice: SliceConfig,
    goodput: f64,
    slots: u64,
    blocked: bool,
}

#[derive(Debug, Default, Clone)]
struct Tally {
    attempts: u64,
    outages: u64,
    blocked: u64,
    goodput_bit_slots: f64,
    used: [u64; N_RRB],
    offered_group: [u64; 3],
    used_group: [u64; 3],
    collisions: u64,
    slice_episodes: Vec<(SliceConfig, u64)>,
}

/// A configured cell: placed devices, agents and the risk map.
#[derive(Debug, Clone)]
pub struct Engine {
    cfg: SimConfig,
    sched: Vec<SchedUser>,
    ns: Vec<NsUser>,
    risk: RiskMap,
    rrp: Option<RrpAgent>,
    predictor: RiskPredictor,
    static_slice: SliceConfig,
    max_goodput_per_slot: f64,
}

const STREAM_PLACEMENT: u64 = 1;
const STREAM_TRAIN: u64 = 2;
const STREAM_EVAL: u64 = 3;

fn stream(seed: u64, label: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(label);
    r
}

impl Engine {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let cfg = cfg.clone();
        let mut rng = stream(cfg.seed, STREAM_PLACEMENT);
        let sched_devs = place_devices(
            cfg.n_scheduled,
            DeviceClass::Scheduled,
            cfg.sched_r_min_m,
            cfg.sched_r_max_m,
            0,
            &mut rng,
        )?;
        let ns_devs =
            place_devices(cfg.n_ns, DeviceClass::NonScheduled, cfg.ns_r_min_m, cfg.ns_r_max_m, cfg.n_scheduled, &mut rng)?;
        let noise_dbm = noise_power_dbm(cfg.channel.noise_psd_dbm_hz, cfg.rrb_bandwidth_hz);
        let sched_rate = |pl: f64| -> Result<f64> {
            eps_outage_rate(db_to_lin(cfg.sched_tx_dbm + pl - noise_dbm), cfg.sched_eps, cfg.rrb_bandwidth_hz)
        };
        let sched = sched_devs
            .into_iter()
            .map(|mut d| {
                d.tx_power_dbm = cfg.sched_tx_dbm;
                d.delay_budget_slots = cfg.sched_delay_budget;
                let pl = path_loss_at(d.pos.radius_m, &cfg.channel)?;
                Ok(SchedUser {
                    psd_dbm_hz: user_psd_contribution(cfg.sched_tx_dbm, pl, cfg.rrb_bandwidth_hz),
                    rate_bps: sched_rate(pl)?,
                    device: d,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let risk = RiskMap::new(cfg.ring_edges_m.clone(), cfg.forgetting);
        let ns = ns_devs
            .into_iter()
            .map(|mut d| {
                d.tx_power_dbm = cfg.ns_tx_dbm;
                let pl = path_loss_at(d.pos.radius_m, &cfg.channel)?;
                Ok(NsUser {
                    ring: risk.ring_of(d.pos.radius_m),
                    pl_db: pl,
                    agent: RruAgent::new(cfg.learning, cfg.rru_step),
                    device: d,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let link = cfg.ns_link();
        let static_slice = match cfg.policy {
            SlicePolicy::Fixed => cfg.fixed_slice()?,
            SlicePolicy::Conservative => {
                conservative_slice(cfg.eps_ns, &link).unwrap_or(SliceConfig { n_ded_ns: N_RRB, n_ded_s: 0, n_shared: 0 })
            }
            SlicePolicy::Learned => cfg.fixed_slice().unwrap_or(SliceConfig { n_ded_ns: 1, n_ded_s: 4, n_shared: 0 }),
        };
        let rrp = (cfg.policy == SlicePolicy::Learned)
            .then(|| RrpAgent::new(slices_for_mode(cfg.mode), risk.n_rings(), cfg.learning, cfg.kappa));
        let max_goodput_per_slot = N_RRB as f64 * sched_rate(cfg.channel.pl_ref_db)?;
        Ok(Self {
            predictor: RiskPredictor::new(link, Some(cfg.cap_dbm_hz)),
            cfg,
            sched,
            ns,
            risk,
            rrp,
            static_slice,
            max_goodput_per_slot,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn rrp(&self) -> Option<&RrpAgent> {
        self.rrp.as_ref()
    }

    pub fn risk_map(&self) -> &RiskMap {
        &self.risk
    }

    pub fn ns_path_losses(&self) -> Vec<f64> {
        self.ns.iter().map(|u| u.pl_db).collect()
    }

    pub fn scheduled_devices(&self) -> impl Iterator<Item = &Device> {
        self.sched.iter().map(|u| &u.device)
    }

    pub fn ns_devices(&self) -> impl Iterator<Item = &Device> {
        self.ns.iter().map(|u| &u.device)
    }

    /// RRP table followed by one RRU table per NS device, in the Q-table text format.
    pub fn export_tables(&self) -> Vec<String> {
        let mut v = vec![self.rrp.as_ref().map_or_else(String::new, |a| a.q.to_text())];
        v.extend(self.ns.iter().map(|u| u.agent.q.to_text()));
        v
    }

    pub fn import_tables(&mut self, tables: &[String]) -> Result<()> {
        if tables.len() != self.ns.len() + 1 {
            return Err(Error::Config(format!("expected {} tables, got {}", self.ns.len() + 1, tables.len())));
        }
        if let Some(a) = self.rrp.as_mut() {
            a.q = load_shaped(&tables[0], a.q.n_states(), a.q.n_actions())?;
        }
        for (u, t) in self.ns.iter_mut().zip(&tables[1..]) {
            u.agent.q = load_shaped(t, u.agent.q.n_states(), u.agent.q.n_actions())?;
        }
        Ok(())
    }

    /// Replaces the learned risk map, e.g. after importing trained tables.
    pub fn set_risk_map(&mut self, map: RiskMap) {
        self.risk = map;
    }

    pub fn train(&mut self) {
        let mut rng = stream(self.cfg.seed, STREAM_TRAIN);
        let n = self.cfg.n_slots_train;
        self.run_phase(n, true, &mut rng);
    }

    /// Greedy evaluation on a copy of the trained state; `stream_seed` selects
    /// the evaluation random stream.
    pub fn evaluate(&self, stream_seed: u64) -> Metrics {
        let mut e = self.clone();
        let mut rng = stream(stream_seed, STREAM_EVAL);
        let n = e.cfg.n_slots_eval;
        let t = e.run_phase(n, false, &mut rng);
        let dominant_slice = t
            .slice_episodes
            .iter()
            .fold(None::<(SliceConfig, u64)>, |best, &(s, c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((s, c)),
            })
            .map_or(e.static_slice, |(s, _)| s);
        let frac = |u: u64, o: u64| if o == 0 { 0.0 } else { u as f64 / o as f64 };
        Metrics {
            ns_attempts: t.attempts,
            ns_outages: t.outages,
            ns_blocked: t.blocked,
            scheduled_reliable_goodput_bps: t.goodput_bit_slots / n as f64,
            rrb_utilization: t.used.map(|u| u as f64 / n as f64),
            slice_occupancy: [0, 1, 2].map(|g| frac(t.used_group[g], t.offered_group[g])),
            sched_collisions: t.collisions,
            eval_slots: n,
            dominant_slice,
        }
    }

    fn rrp_state(&self) -> RrpState {
        RrpState { eps_bucket: eps_bucket(self.cfg.eps_ns), worst_ring: self.risk.worst_ring() }
    }

    fn close_episode(&mut self, ep: &Episode, next: RrpState) {
        let pl = self.risk.ring_edge_pl(ep.state.worst_ring, &self.cfg.channel);
        let unsafe_ep = ep.blocked || self.predictor.worst_outage(pl, &ep.slice) > self.cfg.eps_ns;
        let g = ep.goodput / (ep.slots as f64 * self.max_goodput_per_slot);
        let agent = self.rrp.as_mut().expect("learned policy has an agent");
        let reward = rrp_reward(g, unsafe_ep, agent.kappa, agent.params.beta);
        rrp_learn(agent, &RrpTransition { state: ep.state, action: ep.action, reward, next });
    }

    fn run_phase<R: Rng>(&mut self, n_slots: u64, learn: bool, rng: &mut R) -> Tally {
        let cfg = self.cfg.clone();
        let cap = cfg.cap();
        let model = cfg.rate_model();
        let rate = cfg.per_device_rate();
        let process = (rate > 0.0).then(|| ArrivalProcess::new(rate)).transpose().expect("validated rate");
        let mut next_arrival: Vec<u64> = self
            .ns
            .iter()
            .map(|_| process.as_ref().map_or(u64::MAX, |p| next_ns_arrival(p, 0, rng)))
            .collect();
        let budget = cfg.sched_delay_budget as i64;
        let mut remaining: Vec<i64> = vec![budget; self.sched.len()];
        let mut tally = Tally::default();
        let mut episode: Option<Episode> = None;
        let mut slice = self.static_slice;
        let mut active = Vec::new();
        let mut gains = [0.0; N_RRB];
        let mut snrs = [0.0; N_RRB];

        for t in 0..n_slots {
            // provisioning at episode boundaries
            if self.rrp.is_some() && t % cfg.episode_slots == 0 {
                let state = self.rrp_state();
                if let Some(ep) = episode.take() {
                    if learn {
                        self.close_episode(&ep, state);
                    }
                }
                let agent = self.rrp.as_ref().expect("checked");
                let action = rrp_decide(agent, &state, learn, rng);
                slice = agent.actions[action];
                episode = Some(Episode { state, action, slice, goodput: 0.0, slots: 0, blocked: false });
                if !learn {
                    match tally.slice_episodes.iter_mut().find(|(s, _)| *s == slice) {
                        Some(e) => e.1 += 1,
                        None => tally.slice_episodes.push((slice, 1)),
                    }
                }
            }

            // arrivals
            active.clear();
            for (i, next) in next_arrival.iter_mut().enumerate() {
                if *next == t {
                    active.push(i);
                    *next = next_ns_arrival(process.as_ref().expect("arrivals imply a process"), t, rng);
                }
            }

            // scheduling grants
            let cands: Vec<SchedCandidate> = self
                .sched
                .iter()
                .enumerate()
                .map(|(i, u)| SchedCandidate { device: i, remaining_budget: remaining[i], expected_psd_dbm_hz: u.psd_dbm_hz })
                .collect();
            let grants = rrs_schedule(&cands, &slice, cap.as_ref(), &[None; N_RRB]);
            let shared_psd: Vec<Option<f64>> =
                slice.shared_rrbs().map(|r| grants[r].map(|d| self.sched[d].psd_dbm_hz)).collect();

            // non-scheduled transmissions and their outcomes
            let mut ns_on = [false; N_RRB];
            let usable = slice.ns_usable();
            let rru_state = RruState {
                n_dedicated: slice.n_ded_ns,
                shared: shared_psd.iter().map(|p| InterferenceLevel::quantize(*p)).collect(),
            };
            for &i in &active {
                tally.attempts += 1;
                if usable.is_empty() {
                    tally.outages += 1;
                    tally.blocked += 1;
                    if let Some(ep) = episode.as_mut() {
                        ep.blocked = true;
                    }
                    continue;
                }
                let u = &mut self.ns[i];
                let action = rru_decide(&u.agent, &rru_state, learn, rng);
                let fractions = RruAction::from_id(action).fractions(slice.n_ded_ns, slice.n_shared);
                debug_assert!((fractions.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                let link = cfg.ns_link();
                for (k, &rrb) in usable.iter().enumerate() {
                    let interf = match slice.role(rrb) {
                        RrbRole::Shared => shared_psd[rrb - slice.shared_rrbs().start],
                        _ => None,
                    };
                    snrs[k] = link.mean_snr(u.pl_db, interf);
                    gains[k] = draw_fading(rng);
                    if fractions[k] > 0.0 {
                        ns_on[rrb] = true;
                    }
                }
                let n = usable.len();
                let ok = model.delivered(&fractions, &snrs[..n], &gains[..n], cfg.ns_target_rate_bps);
                if !ok {
                    tally.outages += 1;
                }
                if learn {
                    rru_learn(&mut u.agent, &rru_state, action, ok);
                }
                let (ring, pl) = (u.ring, u.pl_db);
                self.risk.observe(ring, pl);
            }

            // scheduled goodput, utilization, budgets
            let mut slot_goodput = 0.0;
            for rrb in 0..N_RRB {
                let group = match slice.role(rrb) {
                    RrbRole::DedicatedNs => 0,
                    RrbRole::DedicatedS => 1,
                    RrbRole::Shared => 2,
                };
                tally.offered_group[group] += 1;
                if let Some(d) = grants[rrb] {
                    if ns_on[rrb] {
                        tally.collisions += 1;
                    } else {
                        slot_goodput += self.sched[d].rate_bps;
                    }
                }
                if grants[rrb].is_some() || ns_on[rrb] {
                    tally.used[rrb] += 1;
                    tally.used_group[group] += 1;
                }
            }
            for r in remaining.iter_mut() {
                *r -= 1;
            }
            for d in grants.iter().flatten() {
                remaining[*d] = budget;
            }
            tally.goodput_bit_slots += slot_goodput;
            if let Some(ep) = episode.as_mut() {
                ep.goodput += slot_goodput;
                ep.slots += 1;
            }
            self.risk.advance(1);
        }
        if learn {
            if let Some(ep) = episode.take() {
                if ep.slots == cfg.episode_slots {
                    let next = self.rrp_state();
                    self.close_episode(&ep, next);
                }
            }
        }
        tally
    }
}

fn load_shaped(text: &str, n_states: usize, n_actions: usize) -> Result<QTable> {
    let q = QTable::from_text(text)?;
    if q.n_states() != n_states || q.n_actions() != n_actions {
        return Err(Error::Config(format!(
            "table shape {}x{} does not match {n_states}x{n_actions}",
            q.n_states(),
            q.n_actions()
        )));
    }
    Ok(q)
}

/// Train, then evaluate greedily on the evaluation stream of the same seed.
pub fn run(config: &SimConfig) -> Result<Metrics> {
    let mut e = Engine::new(config)?;
    e.train();
    Ok(e.evaluate(config.seed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub n_reps: usize,
    pub goodput_mean_bps: f64,
    /// Normal-approximation 95% half-width across replications.
    pub goodput_half_width_bps: f64,
    pub ns_attempts: u64,
    pub ns_outages: u64,
    /// Pooled outage rate over every replication's attempts.
    pub ns_outage_rate: f64,
    /// Binomial 95% half-width of the pooled rate.
    pub ns_outage_half_width: f64,
    pub runs: Vec<Metrics>,
}

impl Summary {
    pub fn from_runs(runs: Vec<Metrics>) -> Self {
        let n = runs.len();
        assert!(n >= 1);
        let g: Vec<f64> = runs.iter().map(|m| m.scheduled_reliable_goodput_bps).collect();
        let mean = g.iter().sum::<f64>() / n as f64;
        let hw = if n > 1 {
            let var = g.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        } else {
            0.0
        };
        let attempts: u64 = runs.iter().map(|m| m.ns_attempts).sum();
        let outages: u64 = runs.iter().map(|m| m.ns_outages).sum();
        let p = if attempts == 0 { 0.0 } else { outages as f64 / attempts as f64 };
        let phw = if attempts == 0 { 0.0 } else { 1.96 * (p * (1.0 - p) / attempts as f64).sqrt() };
        Self {
            n_reps: n,
            goodput_mean_bps: mean,
            goodput_half_width_bps: hw,
            ns_attempts: attempts,
            ns_outages: outages,
            ns_outage_rate: p,
            ns_outage_half_width: phw,
            runs,
        }
    }

    pub fn ns_outage_ci(&self) -> (f64, f64) {
        ((self.ns_outage_rate - self.ns_outage_half_width).max(0.0), (self.ns_outage_rate + self.ns_outage_half_width).min(1.0))
    }
}

/// Replication `r` uses seed `config.seed + r`; replications run in parallel.
pub fn run_replications(config: &SimConfig, n_reps: usize) -> Result<Summary> {
    assert!(n_reps >= 1, "need at least one replication");
    config.validate()?;
    let runs = (0..n_reps as u64)
        .into_par_iter()
        .map(|r| run(&SimConfig { seed: config.seed + r, ..config.clone() }))
        .collect::<Result<Vec<_>>>()?;
    Ok(Summary::from_runs(runs))
}
