//! The three decision makers: slice provisioning (RRP) driven by a ring-based
//! risk map, rule-based scheduling (RRS) under the shared-RRB cap, and per-device
//! power utilization (RRU) across the usable RRBs.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry_channel::{
    db_to_lin, effective_psd_dbm_hz, noise_power_dbm, path_loss_at, ChannelParams,
};
use crate::phy_outage::{mrc_outage_exact, multi_rrb_outage_mc, Combining, PowerSplit, RateModel};
use crate::rl_core::{risk_utility, select_action, LearningParams, QTable, StepSize};
use crate::slicing_hma::{check_interference_cap, InterferenceCap, SliceConfig};
use crate::N_RRB;

/// Path loss a stale ring estimate relaxes toward.
pub const PL_BEST_DB: f64 = -70.0;
/// Samples used when an outage prediction has no closed form.
const ORACLE_MC_SAMPLES: usize = 200_000;

// ---------------------------------------------------------------------------
// Risk map
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct RiskMap {
    pub ring_edges_m: Vec<f64>,
    pub worst_pl_db: Vec<f64>,
    pub staleness_slots: Vec<u64>,
    pub forgetting: f64,
}

pub const DEFAULT_RING_EDGES_M: [f64; 9] = [30.0, 100.0, 300.0, 500.0, 1000.0, 1500.0, 2000.0, 2500.0, 3000.0];

impl RiskMap {
    pub fn new(ring_edges_m: Vec<f64>, forgetting: f64) -> Self {
        assert!(ring_edges_m.len() >= 2, "need at least one ring");
        assert!(ring_edges_m.windows(2).all(|w| w[0] < w[1]), "ring edges must increase");
        assert!((0.0..=1.0).contains(&forgetting));
        let n = ring_edges_m.len() - 1;
        Self { ring_edges_m, worst_pl_db: vec![PL_BEST_DB; n], staleness_slots: vec![0; n], forgetting }
    }

    pub fn n_rings(&self) -> usize {
        self.worst_pl_db.len()
    }

    pub fn ring_of(&self, radius_m: f64) -> usize {
        let n = self.n_rings();
        self.ring_edges_m[1..].iter().position(|e| radius_m <= *e).unwrap_or(n - 1)
    }

    /// Path loss at the outer edge of `ring`: the worst case inside it.
    pub fn ring_edge_pl(&self, ring: usize, cp: &ChannelParams) -> f64 {
        path_loss_at(self.ring_edges_m[ring + 1], cp).expect("ring edges are positive")
    }

    /// Ages every ring by `slots`, relaxing estimates toward -70 dB.
    pub fn advance(&mut self, slots: u64) {
        let keep = (1.0 - self.forgetting).powf(slots as f64);
        for (w, s) in self.worst_pl_db.iter_mut().zip(self.staleness_slots.iter_mut()) {
            *w = PL_BEST_DB + (*w - PL_BEST_DB) * keep;
            *s += slots;
        }
    }

    pub fn observe(&mut self, ring: usize, pl_db: f64) {
        debug_assert!((-120.0..=-70.0).contains(&pl_db));
        self.worst_pl_db[ring] = self.worst_pl_db[ring].min(pl_db);
        self.staleness_slots[ring] = 0;
    }

    /// Ring holding the lowest estimate; the innermost one on ties.
    pub fn worst_ring(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.worst_pl_db.iter().enumerate() {
            if *w < self.worst_pl_db[best] {
                best = i;
            }
        }
        best
    }
}

pub fn update_risk_map(map: &RiskMap, observation: (usize, f64)) -> RiskMap {
    let mut m = map.clone();
    m.observe(observation.0, observation.1);
    m
}

// ---------------------------------------------------------------------------
// Link context shared by the oracles
// ---------------------------------------------------------------------------

/// Everything needed to turn a path loss into per-RRB SNRs for an NS device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsLink {
    pub channel: ChannelParams,
    pub model: RateModel,
    pub ns_tx_dbm: f64,
    pub target_rate_bps: f64,
}

impl NsLink {
    pub fn mean_snr(&self, pl_db: f64, interference_psd: Option<f64>) -> f64 {
        let psd = effective_psd_dbm_hz(self.channel.noise_psd_dbm_hz, interference_psd);
        db_to_lin(self.ns_tx_dbm + pl_db - noise_power_dbm(psd, self.model.bandwidth_hz))
    }

    /// Outage for a given split; closed form under MRC, seeded Monte Carlo otherwise.
    pub fn outage(&self, fractions: &[f64], mean_snrs: &[f64]) -> f64 {
        match self.model.combining {
            Combining::Mrc => mrc_outage_exact(fractions, mean_snrs, self.target_rate_bps, self.model.bandwidth_hz),
            Combining::SumRate => {
                let split = PowerSplit::new(fractions.to_vec()).expect("candidate splits are valid");
                let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
                multi_rrb_outage_mc(&split, mean_snrs, self.target_rate_bps, &self.model, ORACLE_MC_SAMPLES, &mut rng)
                    .expect("valid oracle inputs")
                    .p_hat
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Conservative baseline
// ---------------------------------------------------------------------------

/// Path loss the conservative design provisions against.
pub const CELL_EDGE_PL_DB: f64 = -120.0;

/// Smallest number of dedicated NS RRBs that lets a cell-edge NS user meet
/// `eps_ns` with power split equally over them; `None` when even five do not.
pub fn conservative_slice(eps_ns: f64, link: &NsLink) -> Option<SliceConfig> {
    assert!(eps_ns > 0.0 && eps_ns < 1.0, "eps_ns must lie in (0,1)");
    let s = link.mean_snr(CELL_EDGE_PL_DB, None);
    (1..=N_RRB)
        .find(|&n| link.outage(&vec![1.0 / n as f64; n], &vec![s; n]) <= eps_ns)
        .map(|n| SliceConfig { n_ded_ns: n, n_ded_s: N_RRB - n, n_shared: 0 })
}

// ---------------------------------------------------------------------------
// RRU: power utilization
// ---------------------------------------------------------------------------

/// Quantized interference PSD on a usable RRB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InterferenceLevel {
    None,
    AtMost172,
    AtMost164,
    Above164,
}

impl InterferenceLevel {
    pub const ALL: [InterferenceLevel; 4] = [Self::None, Self::AtMost172, Self::AtMost164, Self::Above164];

    pub fn quantize(psd_dbm_hz: Option<f64>) -> Self {
        match psd_dbm_hz {
            None => Self::None,
            Some(p) if p <= -172.0 => Self::AtMost172,
            Some(p) if p <= -164.0 => Self::AtMost164,
            Some(_) => Self::Above164,
        }
    }

    /// PSD used when a level stands in for a concrete interferer: the upper
    /// edge of each bounded bucket, and 8 dB above the last edge for the open one.
    pub fn representative_psd(self) -> Option<f64> {
        match self {
            Self::None => None,
            Self::AtMost172 => Some(-172.0),
            Self::AtMost164 => Some(-164.0),
            Self::Above164 => Some(-156.0),
        }
    }

    fn code(self) -> usize {
        self as usize
    }
}

/// What a device sees before transmitting: how many dedicated RRBs it has and
/// the interference level on each shared one. Dedicated RRBs are always clean.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RruState {
    pub n_dedicated: usize,
    pub shared: Vec<InterferenceLevel>,
}

impl RruState {
    pub fn n_usable(&self) -> usize {
        self.n_dedicated + self.shared.len()
    }

    /// Dense id over every (n_dedicated, shared-levels) combination with at most
    /// five usable RRBs.
    pub fn id(&self) -> usize {
        assert!(self.n_usable() <= N_RRB);
        let mut offset = 0;
        for d in 0..=N_RRB {
            for s in 0..=N_RRB - d {
                if d == self.n_dedicated && s == self.shared.len() {
                    let code = self.shared.iter().fold(0, |acc, l| acc * 4 + l.code());
                    return offset + code;
                }
                offset += 4usize.pow(s as u32);
            }
        }
        unreachable!()
    }

    pub fn count() -> usize {
        (0..=N_RRB).map(|d| (0..=N_RRB - d).map(|s| 4usize.pow(s as u32)).sum::<usize>()).sum()
    }
}

/// Candidate power splits. Ids are fixed: 0 puts everything on the dedicated
/// RRBs, 1 spreads equally over all usable RRBs, 2..=11 are `alpha = 0.0 ..= 0.9`
/// on the dedicated group with the rest spread equally over the shared group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RruAction {
    Alpha(f64),
    Equal,
}

pub const N_RRU_ACTIONS: usize = 12;

impl RruAction {
    pub fn from_id(id: usize) -> Self {
        match id {
            0 => Self::Alpha(1.0),
            1 => Self::Equal,
            k if k < N_RRU_ACTIONS => Self::Alpha((k - 2) as f64 / 10.0),
            _ => panic!("undeclared RRU action {id}"),
        }
    }

    pub fn all() -> Vec<Self> {
        (0..N_RRU_ACTIONS).map(Self::from_id).collect()
    }

    /// Per-usable-RRB fractions, dedicated RRBs first. A group that does not
    /// exist cannot take power, so degenerate layouts spread over what exists.
    pub fn fractions(self, n_dedicated: usize, n_shared: usize) -> Vec<f64> {
        let n = n_dedicated + n_shared;
        assert!(n > 0, "no usable RRB");
        if n_shared == 0 || n_dedicated == 0 {
            return vec![1.0 / n as f64; n];
        }
        match self {
            Self::Equal => vec![1.0 / n as f64; n],
            Self::Alpha(a) => {
                let mut v = vec![a / n_dedicated as f64; n_dedicated];
                v.extend(std::iter::repeat_n((1.0 - a) / n_shared as f64, n_shared));
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RruAgent {
    pub q: QTable,
    pub params: LearningParams,
    pub step: StepSize,
}

impl RruAgent {
    pub fn new(params: LearningParams, step: StepSize) -> Self {
        Self { q: QTable::new(RruState::count(), N_RRU_ACTIONS), params, step }
    }
}

pub fn rru_decide<R: Rng + ?Sized>(agent: &RruAgent, state: &RruState, explore: bool, rng: &mut R) -> usize {
    let eps = if explore { agent.params.epsilon } else { 0.0 };
    select_action(&agent.q, state.id(), eps, rng)
}

/// One transmission is one episode: the target is the transformed reward alone.
pub fn rru_learn(agent: &mut RruAgent, state: &RruState, action: usize, delivered: bool) {
    let r = if delivered { 1.0 } else { -1.0 };
    let u = risk_utility(r, agent.params.beta);
    let params = agent.params;
    agent.q.update_with(state.id(), action, u, None, &params, agent.step);
}

/// Exact (or seeded MC) outage of every candidate for a device at `pl_db`
/// whose shared RRBs carry the given interference.
pub fn rru_candidate_outages(link: &NsLink, pl_db: f64, n_dedicated: usize, shared_psd: &[Option<f64>]) -> Vec<f64> {
    let mut snrs = vec![link.mean_snr(pl_db, None); n_dedicated];
    snrs.extend(shared_psd.iter().map(|p| link.mean_snr(pl_db, *p)));
    RruAction::all()
        .into_iter()
        .map(|a| link.outage(&a.fractions(n_dedicated, shared_psd.len()), &snrs))
        .collect()
}

// ---------------------------------------------------------------------------
// RRS: scheduling
// ---------------------------------------------------------------------------

/// Scheduler view of one saturated scheduled user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedCandidate {
    pub device: usize,
    /// Slots left before the delay budget runs out; negative once overdue.
    pub remaining_budget: i64,
    /// Path-loss-only prediction of the user's received PSD at the BS.
    pub expected_psd_dbm_hz: f64,
}

/// Grants for one slot: `grants[rrb]` is the scheduled device on that RRB.
/// Users are ranked by remaining budget, then by expected interference, then by
/// id. Dedicated-S RRBs are filled first; each shared RRB then takes the next
/// ranked user that keeps its aggregate (including `background`) within the cap.
/// `cap = None` reuses shared RRBs without any limit.
pub fn rrs_schedule(
    users: &[SchedCandidate],
    slice: &SliceConfig,
    cap: Option<&InterferenceCap>,
    background: &[Option<f64>; N_RRB],
) -> [Option<usize>; N_RRB] {
    let mut ranked: Vec<&SchedCandidate> = users.iter().collect();
    ranked.sort_by(|a, b| {
        a.remaining_budget
            .cmp(&b.remaining_budget)
            .then(a.expected_psd_dbm_hz.total_cmp(&b.expected_psd_dbm_hz))
            .then(a.device.cmp(&b.device))
    });
    let mut grants = [None; N_RRB];
    let mut next = ranked.into_iter().peekable();
    for rrb in slice.ded_s_rrbs() {
        match next.next() {
            Some(u) => grants[rrb] = Some(u.device),
            None => return grants,
        }
    }
    let mut waiting: Vec<&SchedCandidate> = next.collect();
    for rrb in slice.shared_rrbs() {
        let pick = waiting.iter().position(|u| match cap {
            None => true,
            Some(c) => check_interference_cap(c, &[background[rrb], Some(u.expected_psd_dbm_hz)]),
        });
        if let Some(i) = pick {
            grants[rrb] = Some(waiting.remove(i).device);
        }
    }
    grants
}

// ---------------------------------------------------------------------------
// RRP: provisioning
// ---------------------------------------------------------------------------

pub const N_EPS_BUCKETS: usize = 7;

/// Decade bucket of an NS outage target: 1e-1 -> 0, ..., 1e-7 -> 6.
pub fn eps_bucket(eps_ns: f64) -> usize {
    let k = (-eps_ns.log10()).round() as i64;
    (k.clamp(1, N_EPS_BUCKETS as i64) - 1) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RrpState {
    pub eps_bucket: usize,
    pub worst_ring: usize,
}

impl RrpState {
    pub fn id(&self, n_rings: usize) -> usize {
        self.eps_bucket * n_rings + self.worst_ring
    }
}

/// Predicts whether a slice protects the worst-risk NS user, from the ring's
/// edge path loss with shared RRBs assumed loaded up to the cap.
#[derive(Debug, Clone)]
pub struct RiskPredictor {
    pub link: NsLink,
    pub shared_psd: Option<f64>,
    cache: HashMap<(u64, SliceConfig), f64>,
}

impl RiskPredictor {
    pub fn new(link: NsLink, shared_psd: Option<f64>) -> Self {
        Self { link, shared_psd, cache: HashMap::new() }
    }

    /// Best-candidate outage of an NS user at `pl_db` under `slice`; 1 when the
    /// slice leaves NS traffic nowhere to go.
    pub fn worst_outage(&mut self, pl_db: f64, slice: &SliceConfig) -> f64 {
        if slice.ns_pool() == 0 {
            return 1.0;
        }
        let key = (pl_db.to_bits(), *slice);
        if let Some(v) = self.cache.get(&key) {
            return *v;
        }
        let v = rru_candidate_outages(&self.link, pl_db, slice.n_ded_ns, &vec![self.shared_psd; slice.n_shared])
            .into_iter()
            .fold(1.0, f64::min);
        self.cache.insert(key, v);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RrpAgent {
    pub q: QTable,
    pub actions: Vec<SliceConfig>,
    pub n_rings: usize,
    pub params: LearningParams,
    pub kappa: f64,
}

impl RrpAgent {
    pub fn new(actions: Vec<SliceConfig>, n_rings: usize, params: LearningParams, kappa: f64) -> Self {
        assert!(!actions.is_empty());
        Self { q: QTable::new(N_EPS_BUCKETS * n_rings, actions.len()), actions, n_rings, params, kappa }
    }

    pub fn greedy_slice(&self, state: &RrpState) -> SliceConfig {
        self.actions[self.q.greedy(state.id(self.n_rings))]
    }
}

pub fn rrp_decide<R: Rng + ?Sized>(agent: &RrpAgent, state: &RrpState, explore: bool, rng: &mut R) -> usize {
    let eps = if explore { agent.params.epsilon } else { 0.0 };
    select_action(&agent.q, state.id(agent.n_rings), eps, rng)
}

/// Episode reward: normalized goodput minus `kappa` when the episode was unsafe.
pub fn rrp_reward(goodput_norm: f64, unsafe_episode: bool, kappa: f64, beta: f64) -> f64 {
    risk_utility(goodput_norm - if unsafe_episode { kappa } else { 0.0 }, beta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrpTransition {
    pub state: RrpState,
    pub action: usize,
    pub reward: f64,
    pub next: RrpState,
}

pub fn rrp_learn(agent: &mut RrpAgent, t: &RrpTransition) {
    let params = agent.params;
    agent.q.update_with(
        t.state.id(agent.n_rings),
        t.action,
        t.reward,
        Some(t.next.id(agent.n_rings)),
        &params,
        StepSize::Constant,
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slicing_hma::{make_mode, slices_for_mode, Mode};
    use proptest::prelude::*;

    fn link(target: f64) -> NsLink {
        NsLink { channel: ChannelParams::default(), model: RateModel::default(), ns_tx_dbm: 23.0, target_rate_bps: target }
    }

    #[test]
    fn risk_map_first_observation_and_running_min() {
        let m = RiskMap::new(DEFAULT_RING_EDGES_M.to_vec(), 0.0);
        let m = update_risk_map(&m, (3, -95.0));
        assert_eq!(m.worst_pl_db[3], -95.0);
        let mut m = RiskMap::new(DEFAULT_RING_EDGES_M.to_vec(), 0.0);
        for pl in [-90.0, -110.0, -100.0] {
            m.observe(2, pl);
        }
        assert_eq!(m.worst_pl_db[2], -110.0);
        assert_eq!(m.worst_ring(), 2);
    }

    #[test]
    fn risk_map_forgets_monotonically() {
        let mut m = RiskMap::new(DEFAULT_RING_EDGES_M.to_vec(), 0.01);
        m.observe(5, -115.0);
        let mut prev = m.worst_pl_db[5];
        for _ in 0..500 {
            m.advance(1);
            assert!(m.worst_pl_db[5] >= prev && m.worst_pl_db[5] <= -70.0);
            prev = m.worst_pl_db[5];
        }
        assert_eq!(m.staleness_slots[5], 500);
        assert!((prev - (-70.0 - 45.0 * 0.99f64.powi(500))).abs() < 1e-9);
        m.observe(5, -100.0);
        assert_eq!(m.staleness_slots[5], 0);
    }

    #[test]
    fn ring_lookup() {
        let m = RiskMap::new(DEFAULT_RING_EDGES_M.to_vec(), 0.0);
        assert_eq!(m.ring_of(30.0), 0);
        assert_eq!(m.ring_of(100.0), 0);
        assert_eq!(m.ring_of(100.1), 1);
        assert_eq!(m.ring_of(3000.0), 7);
        assert!((m.ring_edge_pl(2, &ChannelParams::default()) - (-70.0 - 25.0 * (500.0f64 / 30.0).log10())).abs() < 1e-12);
    }

    #[test]
    fn conservative_examples() {
        let l = link(256_000.0);
        assert_eq!(conservative_slice(0.5, &l).unwrap().n_ded_ns, 1);
        let ns: Vec<usize> = (1..=7).map(|k| conservative_slice(10f64.powi(-k), &l).unwrap().n_ded_ns).collect();
        // brute force over n with the Erlang tail at the cell-edge mean SNR
        assert_eq!(ns, vec![1, 1, 2, 2, 3, 3, 4]);
        // an unreachable rate leaves even five RRBs short
        assert!(conservative_slice(1e-7, &link(5e6)).is_none());
    }

    #[test]
    fn rru_state_ids_are_dense_and_unique() {
        let mut seen = std::collections::HashSet::new();
        for d in 0..=N_RRB {
            for s in 0..=N_RRB - d {
                for code in 0..4usize.pow(s as u32) {
                    let shared = (0..s).map(|i| InterferenceLevel::ALL[(code / 4usize.pow((s - 1 - i) as u32)) % 4]).collect();
                    let st = RruState { n_dedicated: d, shared };
                    assert!(st.id() < RruState::count());
                    assert!(seen.insert(st.id()));
                }
            }
        }
        assert_eq!(seen.len(), RruState::count());
    }

    #[test]
    fn quantizer_edges() {
        assert_eq!(InterferenceLevel::quantize(None), InterferenceLevel::None);
        assert_eq!(InterferenceLevel::quantize(Some(-172.0)), InterferenceLevel::AtMost172);
        assert_eq!(InterferenceLevel::quantize(Some(-171.0)), InterferenceLevel::AtMost164);
        assert_eq!(InterferenceLevel::quantize(Some(-164.0)), InterferenceLevel::AtMost164);
        assert_eq!(InterferenceLevel::quantize(Some(-120.0)), InterferenceLevel::Above164);
    }

    #[test]
    fn candidate_fractions() {
        assert_eq!(RruAction::from_id(0).fractions(1, 2), vec![1.0, 0.0, 0.0]);
        assert_eq!(RruAction::from_id(1).fractions(1, 2), vec![1.0 / 3.0; 3]);
        assert_eq!(RruAction::from_id(7).fractions(1, 2), vec![0.5, 0.25, 0.25]);
        assert_eq!(RruAction::from_id(2).fractions(1, 2), vec![0.0, 0.5, 0.5]);
        assert_eq!(RruAction::from_id(5).fractions(2, 0), vec![0.5, 0.5]);
        assert_eq!(RruAction::from_id(0).fractions(0, 5), vec![0.2; 5]);
        for id in 0..N_RRU_ACTIONS {
            for (d, s) in [(1, 2), (2, 3), (3, 1), (0, 4), (4, 0)] {
                let f = RruAction::from_id(id).fractions(d, s);
                assert!(PowerSplit::new(f).is_ok());
            }
        }
    }

    #[test]
    fn rru_learns_a_clear_preference() {
        let params = LearningParams::default();
        let mut agent = RruAgent::new(params, StepSize::VisitCount);
        let st = RruState { n_dedicated: 1, shared: vec![InterferenceLevel::AtMost172; 2] };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // action 7 always delivers, everything else always fails
        for _ in 0..5000 {
            let a = rru_decide(&agent, &st, true, &mut rng);
            rru_learn(&mut agent, &st, a, a == 7);
        }
        assert_eq!(rru_decide(&agent, &st, false, &mut rng), 7);
    }

    fn cand(device: usize, budget: i64, psd: f64) -> SchedCandidate {
        SchedCandidate { device, remaining_budget: budget, expected_psd_dbm_hz: psd }
    }

    #[test]
    fn rrs_examples() {
        let none = [None; N_RRB];
        let oma14 = make_mode(Mode::Oma, 4, 1).unwrap();
        let g = rrs_schedule(&[cand(0, 9, -140.0), cand(1, 1, -140.0)], &oma14, None, &none);
        assert_eq!(g[4], Some(1));
        assert_eq!(g.iter().flatten().count(), 1);

        let all_s = make_mode(Mode::Oma, 0, 5).unwrap();
        let g = rrs_schedule(&[cand(0, 3, -140.0), cand(1, 3, -150.0), cand(2, 3, -130.0)], &all_s, None, &none);
        assert_eq!(g, [Some(1), Some(0), Some(2), None, None]);

        let hma = make_mode(Mode::Hma, 1, 1).unwrap();
        let cap = InterferenceCap::default();
        let mut bg = none;
        bg[2] = Some(-172.0);
        let users = [cand(0, 1, -180.0), cand(1, 2, -175.0), cand(2, 3, -160.0), cand(3, 4, -176.0)];
        let g = rrs_schedule(&users, &hma, Some(&cap), &bg);
        assert_eq!(g[0], None);
        assert_eq!(g[1], Some(0));
        assert_eq!(g[2], None, "cap saturated by background");
        assert_eq!(g[3], Some(1));
        assert_eq!(g[4], Some(3), "user 2 exceeds the cap");
    }

    #[test]
    fn rrp_penalty_dominates() {
        let beta = 1.0;
        let blocked = rrp_reward(1.0, true, 10.0, beta);
        let feasible_worst = rrp_reward(0.0, false, 10.0, beta);
        assert!(blocked < feasible_worst);
    }

    #[test]
    fn rrp_learns_fewer_ns_rrbs_than_conservative_for_near_users() {
        let l = link(256_000.0);
        let eps = 1e-3;
        let cons = conservative_slice(eps, &l).unwrap();
        let actions = slices_for_mode(Mode::Oma);
        let mut agent = RrpAgent::new(actions.clone(), 8, LearningParams::default(), 10.0);
        let mut pred = RiskPredictor::new(l, Some(-172.0));
        let st = RrpState { eps_bucket: eps_bucket(eps), worst_ring: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..3000 {
            let a = rrp_decide(&agent, &st, true, &mut rng);
            let s = actions[a];
            let unsafe_ep = pred.worst_outage(-80.0, &s) > eps;
            let r = rrp_reward(s.n_ded_s as f64 / 5.0, unsafe_ep, 10.0, 1.0);
            rrp_learn(&mut agent, &RrpTransition { state: st, action: a, reward: r, next: st });
        }
        let g = agent.greedy_slice(&st);
        assert!(g.n_ded_ns < cons.n_ded_ns, "{g} vs {cons}");
        assert_eq!(g.n_ded_ns, 1);
    }

    #[test]
    fn eps_buckets() {
        assert_eq!(eps_bucket(1e-1), 0);
        assert_eq!(eps_bucket(1e-4), 3);
        assert_eq!(eps_bucket(1e-7), 6);
    }

    proptest! {
        #[test]
        fn rrs_respects_roles_and_cap(
            a in 0usize..=5, b in 0usize..=5,
            psds in proptest::collection::vec(-190.0f64..-120.0, 0..12),
            budgets in proptest::collection::vec(-5i64..10, 12),
            capped in any::<bool>(),
        ) {
            prop_assume!(a + b <= 5);
            let slice = make_mode(Mode::Hma, a, b).unwrap();
            let users: Vec<SchedCandidate> = psds.iter().enumerate().map(|(i, p)| cand(i, budgets[i], *p)).collect();
            let cap = InterferenceCap::default();
            let g = rrs_schedule(&users, &slice, capped.then_some(&cap), &[None; N_RRB]);
            let mut seen = std::collections::HashSet::new();
            for (rrb, who) in g.iter().enumerate() {
                if let Some(d) = who {
                    prop_assert!(seen.insert(*d));
                    prop_assert!(!slice.ded_ns_rrbs().contains(&rrb));
                    if capped && slice.shared_rrbs().contains(&rrb) {
                        prop_assert!(users[*d].expected_psd_dbm_hz <= -172.0);
                    }
                }
            }
            prop_assert_eq!(g.iter().flatten().count() >= slice.n_ded_s.min(users.len()), true);
        }

        #[test]
        fn conservative_monotone(k1 in 1i32..=7, k2 in 1i32..=7) {
            let l = link(256_000.0);
            let (loose, tight) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            let nl = conservative_slice(10f64.powi(-loose), &l).map_or(6, |s| s.n_ded_ns);
            let nt = conservative_slice(10f64.powi(-tight), &l).map_or(6, |s| s.n_ded_ns);
            prop_assert!(nt >= nl);
        }
    }

    #[test]
    fn rrp_greedy_monotone_over_eps_grid() {
        // tighter targets never buy fewer dedicated NS RRBs with the map frozen
        let l = link(256_000.0);
        let mut pred = RiskPredictor::new(l, Some(-172.0));
        let actions = slices_for_mode(Mode::Oma);
        let mut last = 0;
        for bucket in 0..N_EPS_BUCKETS {
            let eps = 10f64.powi(-(bucket as i32 + 1));
            let mut agent = RrpAgent::new(actions.clone(), 8, LearningParams::default(), 10.0);
            let st = RrpState { eps_bucket: bucket, worst_ring: 4 };
            let pl = -100.5;
            let mut rng = ChaCha8Rng::seed_from_u64(bucket as u64);
            for _ in 0..3000 {
                let a = rrp_decide(&agent, &st, true, &mut rng);
                let s = actions[a];
                let r = rrp_reward(s.n_ded_s as f64 / 5.0, pred.worst_outage(pl, &s) > eps, 10.0, 1.0);
                rrp_learn(&mut agent, &RrpTransition { state: st, action: a, reward: r, next: st });
            }
            let n = agent.greedy_slice(&st).n_ded_ns;
            assert!(n >= last, "bucket {bucket}: {n} < {last}");
            last = n;
        }
    }
}
