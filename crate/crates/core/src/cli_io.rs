//! Flat `section.key = value` configuration, experiment presets and CSV output.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry_channel::{db_to_lin, ChannelParams};
use crate::phy_outage::{
    mrc_outage_exact, multi_rrb_outage_mc, rate_threshold, rayleigh_outage, Combining, OutageEstimate, PowerSplit,
    RateModel,
};
use crate::rl_core::StepSize;
use crate::sim_engine::{run_replications, ArrivalScope, Metrics, SimConfig, SlicePolicy, Summary};
use crate::slicing_hma::Mode;
use crate::{Error, Result};

/// Every accepted key, in the order they are documented.
pub const KEYS: &[&str] = &[
    "channel.pl_ref_db",
    "channel.d_ref_m",
    "channel.pl_exponent",
    "channel.pl_floor_db",
    "channel.noise_psd_dbm_hz",
    "channel.rrb_bandwidth_hz",
    "users.n_scheduled",
    "users.n_ns",
    "users.sched_r_min_m",
    "users.sched_r_max_m",
    "users.ns_r_min_m",
    "users.ns_r_max_m",
    "users.sched_tx_dbm",
    "users.ns_tx_dbm",
    "users.sched_delay_budget",
    "traffic.ns_rate",
    "traffic.ns_rate_scope",
    "slicing.mode",
    "slicing.policy",
    "slicing.n_ded_ns",
    "slicing.n_ded_s",
    "slicing.cap_dbm_hz",
    "slicing.noma_cap",
    "target.eps_ns",
    "target.sched_eps",
    "target.ns_rate_bps",
    "target.combining",
    "learning.alpha",
    "learning.epsilon",
    "learning.gamma",
    "learning.beta",
    "learning.rru_step",
    "rrp.episode_slots",
    "rrp.kappa",
    "rrp.forgetting",
    "rrp.ring_edges_m",
    "sim.n_slots_train",
    "sim.n_slots_eval",
    "sim.slot_ms",
    "sim.seed",
];

fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|_| format!("cannot parse `{v}` as {}", std::any::type_name::<T>()))
}

fn named<T: FromStr<Err = String>>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>()
}

fn in_range(x: f64, ok: bool, rule: &str) -> std::result::Result<f64, String> {
    if ok && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{x} violates {rule}"))
    }
}

fn radius(v: &str) -> std::result::Result<f64, String> {
    let r: f64 = num(v)?;
    in_range(r, (30.0..=3000.0).contains(&r), "radius in [30, 3000] m")
}

fn prob(v: &str) -> std::result::Result<f64, String> {
    let p: f64 = num(v)?;
    in_range(p, p > 0.0 && p < 1.0, "0 < value < 1")
}

impl FromStr for SlicePolicy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "learned" => Ok(Self::Learned),
            "fixed" => Ok(Self::Fixed),
            "conservative" => Ok(Self::Conservative),
            _ => Err(format!("unknown policy `{s}` (expected learned, fixed or conservative)")),
        }
    }
}

impl FromStr for ArrivalScope {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "per_device" => Ok(Self::PerDevice),
            "per_cell" => Ok(Self::PerCell),
            _ => Err(format!("unknown arrival scope `{s}` (expected per_device or per_cell)")),
        }
    }
}

/// Applies one key; the error text is the reason, without location.
pub fn apply_key(cfg: &mut SimConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    let v = value.trim();
    match key {
        "channel.pl_ref_db" => cfg.channel.pl_ref_db = num(v)?,
        "channel.d_ref_m" => {
            let d: f64 = num(v)?;
            cfg.channel.d_ref_m = in_range(d, d > 0.0, "d_ref_m > 0")?;
        }
        "channel.pl_exponent" => {
            let e: f64 = num(v)?;
            cfg.channel.pl_exponent = in_range(e, e > 0.0, "pl_exponent > 0")?;
        }
        "channel.pl_floor_db" => cfg.channel.pl_floor_db = num(v)?,
        "channel.noise_psd_dbm_hz" => cfg.channel.noise_psd_dbm_hz = num(v)?,
        "channel.rrb_bandwidth_hz" => {
            let b: f64 = num(v)?;
            cfg.rrb_bandwidth_hz = in_range(b, b > 0.0, "bandwidth > 0")?;
        }
        "users.n_scheduled" => cfg.n_scheduled = num(v)?,
        "users.n_ns" => cfg.n_ns = num(v)?,
        "users.sched_r_min_m" => cfg.sched_r_min_m = radius(v)?,
        "users.sched_r_max_m" => cfg.sched_r_max_m = radius(v)?,
        "users.ns_r_min_m" => cfg.ns_r_min_m = radius(v)?,
        "users.ns_r_max_m" => cfg.ns_r_max_m = radius(v)?,
        "users.sched_tx_dbm" => cfg.sched_tx_dbm = num(v)?,
        "users.ns_tx_dbm" => cfg.ns_tx_dbm = num(v)?,
        "users.sched_delay_budget" => {
            let d: u32 = num(v)?;
            if d == 0 {
                return Err("delay budget must be at least 1 slot".into());
            }
            cfg.sched_delay_budget = d;
        }
        "traffic.ns_rate" => {
            let r: f64 = num(v)?;
            cfg.ns_arrival_rate = in_range(r, (0.0..1.0).contains(&r), "0 <= rate < 1")?;
        }
        "traffic.ns_rate_scope" => cfg.arrival_scope = named(v)?,
        "slicing.mode" => {
            cfg.mode = named(v)?;
            if cfg.mode == Mode::Noma {
                cfg.n_ded_ns = 0;
                cfg.n_ded_s = 0;
            }
        }
        "slicing.policy" => cfg.policy = named(v)?,
        "slicing.n_ded_ns" => cfg.n_ded_ns = num(v)?,
        "slicing.n_ded_s" => cfg.n_ded_s = num(v)?,
        "slicing.cap_dbm_hz" => cfg.cap_dbm_hz = in_range(num(v)?, true, "finite cap")?,
        "slicing.noma_cap" => cfg.noma_cap = num(v)?,
        "target.eps_ns" => cfg.eps_ns = prob(v)?,
        "target.sched_eps" => cfg.sched_eps = prob(v)?,
        "target.ns_rate_bps" => {
            let r: f64 = num(v)?;
            cfg.ns_target_rate_bps = in_range(r, r > 0.0, "rate > 0")?;
        }
        "target.combining" => cfg.combining = named(v)?,
        "learning.alpha" | "learning.epsilon" | "learning.gamma" | "learning.beta" => {
            let x: f64 = num(v)?;
            let mut l = cfg.learning;
            match key {
                "learning.alpha" => l.alpha = x,
                "learning.epsilon" => l.epsilon = x,
                "learning.gamma" => l.gamma = x,
                _ => l.beta = x,
            }
            l.validate().map_err(|e| e.to_string())?;
            cfg.learning = l;
        }
        "learning.rru_step" => cfg.rru_step = named::<StepSize>(v)?,
        "rrp.episode_slots" => {
            let n: u64 = num(v)?;
            if n == 0 {
                return Err("episode must have at least one slot".into());
            }
            cfg.episode_slots = n;
        }
        "rrp.kappa" => {
            let k: f64 = num(v)?;
            cfg.kappa = in_range(k, k >= 0.0, "kappa >= 0")?;
        }
        "rrp.forgetting" => {
            let f: f64 = num(v)?;
            cfg.forgetting = in_range(f, (0.0..=1.0).contains(&f), "0 <= forgetting <= 1")?;
        }
        "rrp.ring_edges_m" => {
            let edges = v.split(',').map(|x| num::<f64>(x.trim())).collect::<std::result::Result<Vec<_>, _>>()?;
            if edges.len() < 2 || !edges.windows(2).all(|w| w[0] < w[1]) {
                return Err("ring edges must be at least two strictly increasing radii".into());
            }
            cfg.ring_edges_m = edges;
        }
        "sim.n_slots_train" => cfg.n_slots_train = num(v)?,
        "sim.n_slots_eval" => {
            let n: u64 = num(v)?;
            if n == 0 {
                return Err("evaluation needs at least one slot".into());
            }
            cfg.n_slots_eval = n;
        }
        "sim.slot_ms" => {
            let s: f64 = num(v)?;
            cfg.slot_ms = in_range(s, s > 0.0, "slot_ms > 0")?;
        }
        "sim.seed" => cfg.seed = num(v)?,
        _ => return Err("unknown key".into()),
    }
    Ok(())
}

/// Parses configuration text; `origin` names the source in errors.
pub fn parse_config_str(text: &str, origin: &str) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |key: &str, msg: String| Error::Parse { path: origin.into(), line: i + 1, key: key.into(), msg };
        let (key, value) = line.split_once('=').ok_or_else(|| err(line, "expected `section.key = value`".into()))?;
        let key = key.trim();
        apply_key(&mut cfg, key, value).map_err(|m| err(key, m))?;
    }
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), msg: e.to_string() })?;
    parse_config_str(&text, &path.display().to_string())
}

/// `channel.pl_ref_db` is overridden by `SIM_CHANNEL_PL_REF_DB`.
pub fn env_var_name(key: &str) -> String {
    format!("SIM_{}", key.replace('.', "_").to_ascii_uppercase())
}

/// Applies overrides from `lookup` (normally the process environment).
pub fn apply_env_overrides(cfg: &mut SimConfig, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
    for key in KEYS {
        let name = env_var_name(key);
        if let Some(v) = lookup(&name) {
            apply_key(cfg, key, &v).map_err(|m| Error::Parse { path: format!("env {name}"), line: 0, key: key.to_string(), msg: m })?;
        }
    }
    Ok(())
}

/// File, then environment overrides, then full validation.
pub fn load_config(path: &Path, lookup: impl Fn(&str) -> Option<String>) -> Result<(SimConfig, Vec<String>)> {
    let mut cfg = parse_config(path)?;
    apply_env_overrides(&mut cfg, lookup)?;
    let warnings = cfg.validate()?;
    Ok((cfg, warnings))
}

pub fn fmt_prob(p: f64) -> String {
    format!("{p:.6e}")
}

fn fmt_rate(r: f64) -> String {
    format!("{r:.3}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), msg: e.to_string() }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn metrics_row(rep: usize, seed: u64, m: &Metrics) -> Vec<String> {
    let mut r = vec![
        rep.to_string(),
        seed.to_string(),
        m.ns_attempts.to_string(),
        m.ns_outages.to_string(),
        m.ns_blocked.to_string(),
        fmt_prob(m.ns_outage_rate()),
        fmt_rate(m.scheduled_reliable_goodput_bps),
        m.sched_collisions.to_string(),
        m.dominant_slice.to_string(),
    ];
    r.extend(m.rrb_utilization.iter().map(|u| format!("{u:.6}")));
    r.extend(m.slice_occupancy.iter().map(|u| format!("{u:.6}")));
    r
}

const METRICS_HEADER: &[&str] = &[
    "replication",
    "seed",
    "ns_attempts",
    "ns_outages",
    "ns_blocked",
    "ns_outage_rate",
    "reliable_rate_bps",
    "sched_collisions",
    "dominant_slice",
    "util_rrb0",
    "util_rrb1",
    "util_rrb2",
    "util_rrb3",
    "util_rrb4",
    "occ_ded_ns",
    "occ_ded_s",
    "occ_shared",
];

/// Runs `reps` replications and writes `metrics.csv` and `summary.csv`.
pub fn run_to_dir(cfg: &SimConfig, reps: usize, out: &Path) -> Result<Summary> {
    if reps == 0 {
        return Err(Error::Config("at least one replication is required".into()));
    }
    let s = run_replications(cfg, reps)?;
    ensure_dir(out)?;
    let rows: Vec<Vec<String>> =
        s.runs.iter().enumerate().map(|(r, m)| metrics_row(r, cfg.seed + r as u64, m)).collect();
    write_csv(&out.join("metrics.csv"), METRICS_HEADER, &rows)?;
    let (lo, hi) = s.ns_outage_ci();
    write_csv(
        &out.join("summary.csv"),
        &["n_reps", "reliable_rate_bps", "rate_ci_half_width", "ns_attempts", "ns_outages", "ns_outage_measured", "ci_low", "ci_high"],
        &[vec![
            s.n_reps.to_string(),
            fmt_rate(s.goodput_mean_bps),
            fmt_rate(s.goodput_half_width_bps),
            s.ns_attempts.to_string(),
            s.ns_outages.to_string(),
            fmt_prob(s.ns_outage_rate),
            fmt_prob(lo),
            fmt_prob(hi),
        ]],
    )?;
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    RateVsEps,
    PowerAlloc,
    OracleCheck,
}

impl FromStr for PresetName {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rate_vs_eps" => Ok(Self::RateVsEps),
            "power_alloc" => Ok(Self::PowerAlloc),
            "oracle_check" => Ok(Self::OracleCheck),
            _ => Err(format!("unknown preset `{s}` (expected rate_vs_eps, power_alloc or oracle_check)")),
        }
    }
}

impl std::fmt::Display for PresetName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::RateVsEps => "rate_vs_eps",
            Self::PowerAlloc => "power_alloc",
            Self::OracleCheck => "oracle_check",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: PresetName,
    pub axis: &'static str,
    /// Strictly increasing sweep values.
    pub values: Vec<f64>,
    pub base: SimConfig,
    pub reps: usize,
    /// Monte Carlo samples per point (power_alloc, oracle_check).
    pub mc_samples: usize,
}

pub const EPS_GRID: [f64; 7] = [1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1];

/// NS target rate for the power-allocation study; see the README.
pub const POWER_ALLOC_RATE_BPS: f64 = 3.1e6;
pub const POWER_ALLOC_PL_DB: f64 = -80.0;

impl ExperimentPreset {
    pub fn new(name: PresetName) -> Self {
        match name {
            PresetName::RateVsEps => Self {
                name,
                axis: "eps_ns",
                values: EPS_GRID.to_vec(),
                base: SimConfig {
                    sched_r_max_m: 500.0,
                    ns_r_max_m: 500.0,
                    n_slots_train: 2_000_000,
                    n_slots_eval: 100_000,
                    ..SimConfig::default()
                },
                reps: 4,
                mc_samples: 0,
            },
            PresetName::PowerAlloc => {
                let mut values: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
                values.push(1.0 / 3.0);
                values.sort_by(f64::total_cmp);
                Self { name, axis: "alpha", values, base: SimConfig::default(), reps: 1, mc_samples: 1_000_000 }
            }
            PresetName::OracleCheck => Self {
                name,
                axis: "mean_snr_db",
                values: (1..=6).map(|k| 10.0 * k as f64).collect(),
                base: SimConfig::default(),
                reps: 1,
                mc_samples: 1_000_000,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || !self.values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(format!("preset {}: sweep values must be nonempty and strictly increasing", self.name)));
        }
        if self.reps == 0 {
            return Err(Error::Config(format!("preset {}: at least one replication", self.name)));
        }
        self.base.validate().map(|_| ())
    }
}

/// The four curves of the rate-versus-reliability study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Conservative,
    Oma,
    Noma,
    Hma,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Conservative, Scheme::Oma, Scheme::Noma, Scheme::Hma];

    pub fn configure(self, base: &SimConfig) -> SimConfig {
        let (mode, policy) = match self {
            Scheme::Conservative => (Mode::Oma, SlicePolicy::Conservative),
            Scheme::Oma => (Mode::Oma, SlicePolicy::Learned),
            Scheme::Noma => (Mode::Noma, SlicePolicy::Learned),
            Scheme::Hma => (Mode::Hma, SlicePolicy::Learned),
        };
        SimConfig { mode, policy, ..base.clone() }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Conservative => "conservative",
            Scheme::Oma => "OMA",
            Scheme::Noma => "NOMA",
            Scheme::Hma => "HMA",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub eps_ns: f64,
    pub scheme: Scheme,
    pub summary: Summary,
}

impl RateRow {
    pub fn rate(&self) -> f64 {
        self.summary.goodput_mean_bps
    }
}

/// Every (eps, scheme) point, each with `preset.reps` replications; rows are
/// ordered by eps descending, then scheme.
pub fn rate_vs_eps(preset: &ExperimentPreset) -> Result<Vec<RateRow>> {
    preset.validate()?;
    let mut jobs = Vec::new();
    for &eps in preset.values.iter().rev() {
        for scheme in Scheme::ALL {
            jobs.push((eps, scheme));
        }
    }
    let flat: Vec<(usize, u64)> = (0..jobs.len()).flat_map(|j| (0..preset.reps as u64).map(move |r| (j, r))).collect();
    let runs = flat
        .par_iter()
        .map(|&(j, r)| {
            let (eps, scheme) = jobs[j];
            let cfg = SimConfig { eps_ns: eps, seed: preset.base.seed + r, ..scheme.configure(&preset.base) };
            crate::sim_engine::run(&cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(jobs
        .iter()
        .zip(runs.chunks(preset.reps))
        .map(|(&(eps_ns, scheme), ms)| RateRow { eps_ns, scheme, summary: Summary::from_runs(ms.to_vec()) })
        .collect())
}

pub fn write_rate_vs_eps(rows: &[RateRow], out: &Path) -> Result<PathBuf> {
    ensure_dir(out)?;
    let path = out.join("rate_vs_eps.csv");
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let (lo, hi) = r.summary.ns_outage_ci();
            vec![
                fmt_prob(r.eps_ns),
                r.scheme.to_string(),
                fmt_rate(r.rate()),
                fmt_prob(r.summary.ns_outage_rate),
                fmt_prob(lo),
                fmt_prob(hi),
                fmt_rate(r.summary.goodput_half_width_bps),
                r.summary.ns_attempts.to_string(),
                r.summary.ns_outages.to_string(),
                r.summary.runs.iter().map(|m| m.dominant_slice.to_string()).collect::<Vec<_>>().join(" "),
            ]
        })
        .collect();
    write_csv(
        &path,
        &[
            "eps_ns",
            "mode",
            "reliable_rate_bps",
            "ns_outage_measured",
            "ci_low",
            "ci_high",
            "rate_ci_half_width",
            "ns_attempts",
            "ns_outages",
            "slices",
        ],
        &body,
    )?;
    Ok(path)
}

/// Received interference PSD on the two shared RRBs of the power study.
pub const POWER_ALLOC_CASES: [(&str, f64); 2] = [("A", -172.0), ("B", -164.0)];

#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub alpha: f64,
    pub case: &'static str,
    pub estimate: OutageEstimate,
    pub exact: f64,
}

/// Mean SNRs of a 23 dBm device at `pl_db` on [dedicated, shared, shared].
pub fn power_alloc_snrs(cp: &ChannelParams, bw: f64, pl_db: f64, shared_psd: f64) -> [f64; 3] {
    let link = crate::agents::NsLink {
        channel: *cp,
        model: RateModel { bandwidth_hz: bw, combining: Combining::Mrc },
        ns_tx_dbm: crate::traffic_users::NS_TX_DBM,
        target_rate_bps: POWER_ALLOC_RATE_BPS,
    };
    [link.mean_snr(pl_db, None), link.mean_snr(pl_db, Some(shared_psd)), link.mean_snr(pl_db, Some(shared_psd))]
}

/// Split `[alpha, (1-alpha)/2, (1-alpha)/2]`.
pub fn alpha_split(alpha: f64) -> PowerSplit {
    let rest = (1.0 - alpha) / 2.0;
    PowerSplit::new(vec![alpha, rest, rest]).expect("alpha in [0,1]")
}

/// Every candidate at one case is evaluated on the same fading draws.
pub fn power_alloc(preset: &ExperimentPreset) -> Result<Vec<PowerRow>> {
    preset.validate()?;
    let cfg = &preset.base;
    let model = RateModel { bandwidth_hz: cfg.rrb_bandwidth_hz, combining: Combining::Mrc };
    let work: Vec<(&'static str, f64, f64)> = POWER_ALLOC_CASES
        .iter()
        .flat_map(|&(case, psd)| preset.values.iter().map(move |&a| (case, psd, a)))
        .collect();
    work.par_iter()
        .map(|&(case, psd, alpha)| {
            let snrs = power_alloc_snrs(&cfg.channel, cfg.rrb_bandwidth_hz, POWER_ALLOC_PL_DB, psd);
            let split = alpha_split(alpha);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5041_0000 ^ (psd.to_bits() >> 32));
            let estimate = multi_rrb_outage_mc(&split, &snrs, POWER_ALLOC_RATE_BPS, &model, preset.mc_samples, &mut rng)?;
            let exact = mrc_outage_exact(split.fractions(), &snrs, POWER_ALLOC_RATE_BPS, cfg.rrb_bandwidth_hz);
            Ok(PowerRow { alpha, case, estimate, exact })
        })
        .collect()
}

pub fn write_power_alloc(rows: &[PowerRow], out: &Path) -> Result<PathBuf> {
    ensure_dir(out)?;
    let path = out.join("power_alloc.csv");
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let psd = POWER_ALLOC_CASES.iter().find(|c| c.0 == r.case).map_or(0.0, |c| c.1);
            vec![
                format!("{:.6}", r.alpha),
                format!("{}:[NONE,{psd},{psd}]", r.case),
                fmt_prob(r.estimate.p_hat),
                fmt_prob(r.estimate.half_width_95),
                fmt_prob(r.exact),
                r.estimate.n_samples.to_string(),
            ]
        })
        .collect();
    write_csv(&path, &["alpha", "interference_psd_case", "outage", "ci", "exact_outage", "samples"], &body)?;
    Ok(path)
}

/// Outage levels probed at each mean SNR.
pub const ORACLE_OUTAGES: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 0.5];

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub mean_snr_db: f64,
    pub threshold: f64,
    pub closed_form: f64,
    pub mc: f64,
    pub n: usize,
}

impl OracleRow {
    pub fn sigma(&self) -> f64 {
        (self.closed_form * (1.0 - self.closed_form) / self.n as f64).sqrt()
    }

    pub fn within(&self, k_sigma: f64) -> bool {
        (self.mc - self.closed_form).abs() <= k_sigma * self.sigma()
    }
}

/// Single-RRB Monte Carlo against the closed form over the SNR sweep.
pub fn oracle_check(preset: &ExperimentPreset) -> Result<Vec<OracleRow>> {
    preset.validate()?;
    let bw = preset.base.rrb_bandwidth_hz;
    let model = RateModel { bandwidth_hz: bw, combining: Combining::Mrc };
    let work: Vec<(usize, f64, f64)> = preset
        .values
        .iter()
        .flat_map(|&db| ORACLE_OUTAGES.iter().map(move |&p| (db, p)))
        .enumerate()
        .map(|(i, (db, p))| (i, db, p))
        .collect();
    work.par_iter()
        .map(|&(i, db, p)| {
            let s = db_to_lin(db);
            // threshold with outage p at mean SNR s
            let thr = -(-p).ln_1p() * s;
            let rate = bw * thr.ln_1p() / std::f64::consts::LN_2;
            let mut rng = ChaCha8Rng::seed_from_u64(preset.base.seed.wrapping_mul(1_000_003) + i as u64);
            let est = multi_rrb_outage_mc(&PowerSplit::equal(1), &[s], rate, &model, preset.mc_samples, &mut rng)?;
            Ok(OracleRow {
                mean_snr_db: db,
                threshold: rate_threshold(rate, bw),
                closed_form: rayleigh_outage(rate_threshold(rate, bw), s)?,
                mc: est.p_hat,
                n: est.n_samples,
            })
        })
        .collect()
}

pub fn write_oracle_check(rows: &[OracleRow], out: &Path) -> Result<PathBuf> {
    ensure_dir(out)?;
    let path = out.join("oracle_check.csv");
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                format!("{:.1}", r.mean_snr_db),
                fmt_prob(r.threshold),
                fmt_prob(r.closed_form),
                fmt_prob(r.mc),
                fmt_prob(r.sigma()),
                r.within(4.0).to_string(),
            ]
        })
        .collect();
    write_csv(&path, &["mean_snr_db", "threshold_sinr", "closed_form", "mc", "sigma", "within_4_sigma"], &body)?;
    Ok(path)
}

/// Runs a preset and writes its CSV; returns the written file.
pub fn run_preset(preset: &ExperimentPreset, out: &Path) -> Result<PathBuf> {
    match preset.name {
        PresetName::RateVsEps => write_rate_vs_eps(&rate_vs_eps(preset)?, out),
        PresetName::PowerAlloc => write_power_alloc(&power_alloc(preset)?, out),
        PresetName::OracleCheck => write_oracle_check(&oracle_check(preset)?, out),
    }
}
