//! Resource partition of the five RRBs into dedicated-NS, dedicated-S and
//! shared groups, and the aggregate interference cap on shared RRBs.

use crate::geometry_channel::db_to_lin;
use crate::{Error, Result, N_RRB};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SliceConfig {
    pub n_ded_ns: usize,
    pub n_ded_s: usize,
    pub n_shared: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrbRole {
    DedicatedNs,
    DedicatedS,
    Shared,
}

impl SliceConfig {
    pub fn new(n_ded_ns: usize, n_ded_s: usize, n_shared: usize) -> Result<Self> {
        if n_ded_ns + n_ded_s + n_shared != N_RRB {
            return Err(Error::Config(format!(
                "slice {{{n_ded_ns},{n_ded_s},{n_shared}}} does not cover {N_RRB} RRBs"
            )));
        }
        Ok(Self { n_ded_ns, n_ded_s, n_shared })
    }

    /// RRBs are laid out as dedicated-NS, then dedicated-S, then shared.
    pub fn role(&self, rrb: usize) -> RrbRole {
        debug_assert!(rrb < N_RRB);
        if rrb < self.n_ded_ns {
            RrbRole::DedicatedNs
        } else if rrb < self.n_ded_ns + self.n_ded_s {
            RrbRole::DedicatedS
        } else {
            RrbRole::Shared
        }
    }

    pub fn ded_ns_rrbs(&self) -> std::ops::Range<usize> {
        0..self.n_ded_ns
    }

    pub fn ded_s_rrbs(&self) -> std::ops::Range<usize> {
        self.n_ded_ns..self.n_ded_ns + self.n_ded_s
    }

    pub fn shared_rrbs(&self) -> std::ops::Range<usize> {
        self.n_ded_ns + self.n_ded_s..N_RRB
    }

    /// RRBs a non-scheduled transmission may use: dedicated-NS then shared.
    pub fn ns_usable(&self) -> Vec<usize> {
        self.ded_ns_rrbs().chain(self.shared_rrbs()).collect()
    }

    pub fn ns_pool(&self) -> usize {
        self.n_ded_ns + self.n_shared
    }
}

impl std::fmt::Display for SliceConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{},{},{}}}", self.n_ded_ns, self.n_ded_s, self.n_shared)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Oma,
    Noma,
    Hma,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "OMA" => Ok(Self::Oma),
            "NOMA" => Ok(Self::Noma),
            "HMA" => Ok(Self::Hma),
            _ => Err(format!("unknown mode `{s}` (expected OMA, NOMA or HMA)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Oma => "OMA",
            Self::Noma => "NOMA",
            Self::Hma => "HMA",
        })
    }
}

pub fn make_mode(mode: Mode, n_ded_ns: usize, n_ded_s: usize) -> Result<SliceConfig> {
    let bad = |why: &str| Error::Config(format!("{mode} with n_ded_ns={n_ded_ns}, n_ded_s={n_ded_s}: {why}"));
    match mode {
        Mode::Oma if n_ded_ns + n_ded_s != N_RRB => Err(bad("OMA leaves no RRB shared")),
        Mode::Noma if n_ded_ns != 0 || n_ded_s != 0 => Err(bad("NOMA has no dedicated RRBs")),
        _ if n_ded_ns + n_ded_s > N_RRB => Err(bad("more than 5 dedicated RRBs")),
        _ => SliceConfig::new(n_ded_ns, n_ded_s, N_RRB - n_ded_ns - n_ded_s),
    }
}

/// Every valid triple, ordered by (n_ded_ns, n_ded_s).
pub fn all_slices() -> Vec<SliceConfig> {
    let mut v = Vec::new();
    for a in 0..=N_RRB {
        for b in 0..=N_RRB - a {
            v.push(SliceConfig { n_ded_ns: a, n_ded_s: b, n_shared: N_RRB - a - b });
        }
    }
    v
}

/// The triples a mode may choose from.
pub fn slices_for_mode(mode: Mode) -> Vec<SliceConfig> {
    all_slices()
        .into_iter()
        .filter(|s| make_mode(mode, s.n_ded_ns, s.n_ded_s).is_ok())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceCap {
    pub max_psd_dbm_hz: f64,
}

impl Default for InterferenceCap {
    fn default() -> Self {
        Self { max_psd_dbm_hz: -172.0 }
    }
}

/// Received PSD at the BS of a scheduled user spreading its power over one RRB.
pub fn user_psd_contribution(tx_power_dbm: f64, pl_db: f64, rrb_bandwidth_hz: f64) -> f64 {
    tx_power_dbm + pl_db - 10.0 * rrb_bandwidth_hz.log10()
}

/// Linear sum of the contributions stays at or below the cap. `None` entries
/// contribute nothing.
pub fn check_interference_cap(cap: &InterferenceCap, contributions: &[Option<f64>]) -> bool {
    let total: f64 = contributions.iter().flatten().map(|p| db_to_lin(*p)).sum();
    total <= db_to_lin(cap.max_psd_dbm_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn make_mode_examples() {
        assert_eq!(make_mode(Mode::Oma, 1, 4).unwrap(), SliceConfig { n_ded_ns: 1, n_ded_s: 4, n_shared: 0 });
        assert_eq!(make_mode(Mode::Noma, 0, 0).unwrap(), SliceConfig { n_ded_ns: 0, n_ded_s: 0, n_shared: 5 });
        assert_eq!(make_mode(Mode::Hma, 1, 2).unwrap(), SliceConfig { n_ded_ns: 1, n_ded_s: 2, n_shared: 2 });
        assert!(make_mode(Mode::Oma, 1, 3).is_err());
        assert!(make_mode(Mode::Noma, 1, 0).is_err());
        assert!(make_mode(Mode::Hma, 4, 2).is_err());
        assert!(SliceConfig::new(1, 1, 1).is_err());
    }

    #[test]
    fn action_space_sizes() {
        assert_eq!(all_slices().len(), 21);
        assert_eq!(slices_for_mode(Mode::Oma).len(), 6);
        assert_eq!(slices_for_mode(Mode::Noma), vec![SliceConfig { n_ded_ns: 0, n_ded_s: 0, n_shared: 5 }]);
        assert_eq!(slices_for_mode(Mode::Hma).len(), 21);
    }

    #[test]
    fn rrb_layout() {
        let s = make_mode(Mode::Hma, 1, 2).unwrap();
        assert_eq!(s.role(0), RrbRole::DedicatedNs);
        assert_eq!(s.role(2), RrbRole::DedicatedS);
        assert_eq!(s.role(4), RrbRole::Shared);
        assert_eq!(s.ns_usable(), vec![0, 3, 4]);
        assert_eq!(s.ns_pool(), 3);
    }

    #[test]
    fn cap_examples() {
        let cap = InterferenceCap::default();
        assert!(check_interference_cap(&cap, &[]));
        assert!(check_interference_cap(&cap, &[None, None]));
        assert!(check_interference_cap(&cap, &[Some(-172.0)]));
        assert!(!check_interference_cap(&cap, &[Some(-172.0), Some(-172.0)]));
        assert!(!check_interference_cap(&cap, &[Some(-171.9)]));
    }

    #[test]
    fn contribution_accounting() {
        // 21 dBm at the -120 dB cell edge over 180 kHz
        let c = user_psd_contribution(21.0, -120.0, 180_000.0);
        assert!((c - (-151.552_725_051_033_06)).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn cap_is_monotone(
            cs in proptest::collection::vec(-200.0f64..-150.0, 0..6),
            extra in -200.0f64..-150.0,
            cap in -190.0f64..-150.0,
        ) {
            let cap = InterferenceCap { max_psd_dbm_hz: cap };
            let before: Vec<Option<f64>> = cs.iter().map(|c| Some(*c)).collect();
            let mut after = before.clone();
            after.push(Some(extra));
            prop_assert!(!(!check_interference_cap(&cap, &before) && check_interference_cap(&cap, &after)));
        }

        #[test]
        fn every_slice_partitions_five(a in 0usize..=5, b in 0usize..=5) {
            if let Ok(s) = make_mode(Mode::Hma, a, b) {
                prop_assert_eq!(s.ded_ns_rrbs().len() + s.ded_s_rrbs().len() + s.shared_rrbs().len(), 5);
                let oma = make_mode(Mode::Oma, a, b);
                prop_assert_eq!(oma.is_ok(), s.n_shared == 0);
            } else {
                prop_assert!(a + b > 5);
            }
        }
    }
}
