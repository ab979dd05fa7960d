//! Rate and outage primitives over Rayleigh-faded RRBs: single-RRB closed
//! forms, the multi-RRB Monte Carlo estimator, and an exact evaluator for
//! maximum-ratio combining.

use rand::Rng;

use crate::geometry_channel::draw_fading;
use crate::{Error, Result};

/// Tolerance on `Σ fractions = 1`.
pub const SPLIT_SUM_TOL: f64 = 1e-9;
/// Smallest sample count accepted by [`multi_rrb_outage_mc`].
pub const MIN_MC_SAMPLES: usize = 10_000;

pub fn shannon_rate(sinr_linear: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * sinr_linear.ln_1p() / std::f64::consts::LN_2
}

/// SINR needed to carry `rate_bps` on `bandwidth_hz`: `2^(R/B) - 1`.
pub fn rate_threshold(rate_bps: f64, bandwidth_hz: f64) -> f64 {
    (rate_bps / bandwidth_hz * std::f64::consts::LN_2).exp_m1()
}

/// `P(mean_snr * g < threshold)` for `g ~ Exp(1)`.
pub fn rayleigh_outage(threshold_sinr: f64, mean_snr: f64) -> Result<f64> {
    if !(threshold_sinr >= 0.0) || !(mean_snr > 0.0) {
        return Err(Error::Domain(format!(
            "rayleigh_outage needs threshold >= 0 and mean > 0, got {threshold_sinr}, {mean_snr}"
        )));
    }
    Ok(-(-threshold_sinr / mean_snr).exp_m1())
}

/// Largest rate whose single-RRB Rayleigh outage does not exceed `epsilon`.
pub fn eps_outage_rate(mean_snr: f64, epsilon: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(mean_snr > 0.0) {
        return Err(Error::Domain(format!(
            "eps_outage_rate needs epsilon in (0,1) and mean > 0, got {epsilon}, {mean_snr}"
        )));
    }
    Ok(shannon_rate(-(-epsilon).ln_1p() * mean_snr, bandwidth_hz))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSplit {
    fractions: Vec<f64>,
}

impl PowerSplit {
    pub fn new(fractions: Vec<f64>) -> Result<Self> {
        if fractions.is_empty() {
            return Err(Error::Domain("power split over zero RRBs".into()));
        }
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Domain(format!("split fractions outside [0,1]: {fractions:?}")));
        }
        let s: f64 = fractions.iter().sum();
        if (s - 1.0).abs() > SPLIT_SUM_TOL {
            return Err(Error::Domain(format!("split fractions sum to {s}, not 1")));
        }
        Ok(Self { fractions })
    }

    pub fn equal(n: usize) -> Self {
        Self { fractions: vec![1.0 / n as f64; n] }
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }
}

/// How per-RRB signals are turned into one achievable rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combining {
    /// Receiver combines the RRB copies coherently: `B·log2(1 + Σ fᵢ sᵢ gᵢ)`.
    Mrc,
    /// Independent streams per RRB: `Σ B·log2(1 + fᵢ sᵢ gᵢ)`.
    SumRate,
}

impl std::str::FromStr for Combining {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "mrc" => Ok(Self::Mrc),
            "sum_rate" | "sumrate" | "sum" => Ok(Self::SumRate),
            _ => Err(format!("unknown combining `{s}` (expected mrc or sum_rate)")),
        }
    }
}

impl std::fmt::Display for Combining {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Mrc => "mrc",
            Self::SumRate => "sum_rate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    pub bandwidth_hz: f64,
    pub combining: Combining,
}

impl Default for RateModel {
    fn default() -> Self {
        Self { bandwidth_hz: 180_000.0, combining: Combining::Mrc }
    }
}

impl RateModel {
    /// Whether one transmission with the given per-RRB gains meets the target.
    /// A rate exactly at the target counts as delivered.
    pub fn delivered(&self, fractions: &[f64], mean_snrs: &[f64], gains: &[f64], target_rate_bps: f64) -> bool {
        match self.combining {
            Combining::Mrc => {
                let t = rate_threshold(target_rate_bps, self.bandwidth_hz);
                let s: f64 = fractions.iter().zip(mean_snrs).zip(gains).map(|((f, m), g)| f * m * g).sum();
                s >= t
            }
            Combining::SumRate => {
                let r: f64 = fractions
                    .iter()
                    .zip(mean_snrs)
                    .zip(gains)
                    .map(|((f, m), g)| shannon_rate(f * m * g, self.bandwidth_hz))
                    .sum();
                r >= target_rate_bps
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub p_hat: f64,
    pub half_width_95: f64,
    pub n_samples: usize,
}

impl OutageEstimate {
    pub fn from_counts(outages: usize, n: usize) -> Self {
        let p = outages as f64 / n as f64;
        Self { p_hat: p, half_width_95: 1.96 * (p * (1.0 - p) / n as f64).sqrt(), n_samples: n }
    }

    pub fn ci(&self) -> (f64, f64) {
        ((self.p_hat - self.half_width_95).max(0.0), (self.p_hat + self.half_width_95).min(1.0))
    }

    /// True when the two 95% intervals do not overlap and `self` is lower.
    pub fn beats(&self, other: &OutageEstimate) -> bool {
        self.p_hat + self.half_width_95 < other.p_hat - other.half_width_95
    }
}

/// Monte Carlo outage of one transmission spread over several RRBs with
/// independent unit-mean Rayleigh gains. One gain is drawn per RRB per sample
/// regardless of the split, so estimates for different splits that start from
/// identically seeded generators share their fading realizations.
pub fn multi_rrb_outage_mc<R: Rng + ?Sized>(
    split: &PowerSplit,
    mean_snrs: &[f64],
    target_rate_bps: f64,
    model: &RateModel,
    n_samples: usize,
    rng: &mut R,
) -> Result<OutageEstimate> {
    if split.len() != mean_snrs.len() {
        return Err(Error::Config(format!(
            "split has {} entries but {} mean SNRs were given",
            split.len(),
            mean_snrs.len()
        )));
    }
    if n_samples < MIN_MC_SAMPLES {
        return Err(Error::Config(format!("n_samples {n_samples} below {MIN_MC_SAMPLES}")));
    }
    if mean_snrs.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::Domain("mean SNRs must be positive".into()));
    }
    let mut gains = vec![0.0; mean_snrs.len()];
    let mut outages = 0usize;
    for _ in 0..n_samples {
        for g in gains.iter_mut() {
            *g = draw_fading(rng);
        }
        if !model.delivered(split.fractions(), mean_snrs, &gains, target_rate_bps) {
            outages += 1;
        }
    }
    Ok(OutageEstimate::from_counts(outages, n_samples))
}

/// `P(Σ mᵢ Eᵢ < x)` for independent unit exponentials `Eᵢ`; zero means are
/// dropped. Evaluated by uniformizing the phase-type chain, so every term of the
/// series is nonnegative and small tail probabilities keep full relative
/// precision.
pub fn sum_exp_cdf(means: &[f64], x: f64) -> f64 {
    let rates: Vec<f64> = means.iter().filter(|m| **m > 0.0).map(|m| 1.0 / m).collect();
    if x <= 0.0 {
        return 0.0;
    }
    if rates.is_empty() {
        return 1.0;
    }
    let n = rates.len();
    let lam = rates.iter().cloned().fold(0.0, f64::max);
    let q: Vec<f64> = rates.iter().map(|r| r / lam).collect();
    let mu = lam * x;
    let ln_mu = mu.ln();
    // v[k]: probability of having completed exactly k phases after j jumps
    let mut v = vec![0.0; n + 1];
    v[0] = 1.0;
    let mut log_w = -mu;
    let mut acc = 0.0;
    let j_max = (mu + 60.0 * mu.sqrt() + 400.0).ceil() as usize;
    for j in 0..=j_max {
        if j > 0 {
            log_w += ln_mu - (j as f64).ln();
            for k in (0..n).rev() {
                let moved = v[k] * q[k];
                v[k] -= moved;
                v[k + 1] += moved;
            }
        }
        let w = log_w.exp();
        acc += w * v[n];
        if j as f64 > mu && j >= n && (w <= acc * 1e-17 || w == 0.0 && acc > 0.0) {
            break;
        }
    }
    acc.min(1.0)
}

/// Exact outage under maximum-ratio combining.
pub fn mrc_outage_exact(fractions: &[f64], mean_snrs: &[f64], target_rate_bps: f64, bandwidth_hz: f64) -> f64 {
    let means: Vec<f64> = fractions.iter().zip(mean_snrs).map(|(f, m)| f * m).collect();
    sum_exp_cdf(&means, rate_threshold(target_rate_bps, bandwidth_hz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::function::gamma::gamma_lr;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon_rate(0.0, 180_000.0), 0.0);
        assert!((shannon_rate(1.0, 180_000.0) - 180_000.0).abs() < 1e-6);
        assert!((shannon_rate(3.0, 180_000.0) - 360_000.0).abs() < 1e-6);
    }

    #[test]
    fn rayleigh_examples() {
        assert_eq!(rayleigh_outage(0.0, 10.0).unwrap(), 0.0);
        assert!((rayleigh_outage(5.0, 5.0).unwrap() - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert!(rel(rayleigh_outage(0.279, 2.79e6).unwrap(), 1e-7) < 1e-6);
        assert!(rayleigh_outage(-1.0, 1.0).is_err());
        assert!(rayleigh_outage(1.0, 0.0).is_err());
    }

    #[test]
    fn eps_outage_rate_example() {
        // cell-edge scheduled user at 21 dBm, 22.45 dB mean SNR
        let r = eps_outage_rate(175.8, 1e-4, 180_000.0).unwrap();
        let oracle = 180_000.0 * (1.0 + 175.8 * -(1.0f64 - 1e-4).ln()).log2();
        assert!(rel(r, oracle) < 1e-9);
        assert!((r - 4.6e3).abs() < 0.1e3, "{r}");
        assert!(eps_outage_rate(10.0, 0.0, 1.0).is_err());
        assert!(eps_outage_rate(10.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn split_validation() {
        assert!(PowerSplit::new(vec![0.5, 0.25, 0.25]).is_ok());
        assert!(PowerSplit::new(vec![0.5, 0.5 + 1e-10]).is_ok());
        assert!(PowerSplit::new(vec![0.5, 0.6]).is_err());
        assert!(PowerSplit::new(vec![1.5, -0.5]).is_err());
        assert!(PowerSplit::new(vec![]).is_err());
    }

    #[test]
    fn mc_rejects_mismatch_and_small_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = RateModel::default();
        let s = PowerSplit::equal(3);
        assert!(matches!(
            multi_rrb_outage_mc(&s, &[1.0, 1.0], 1e5, &m, 10_000, &mut rng),
            Err(Error::Config(_))
        ));
        assert!(multi_rrb_outage_mc(&s, &[1.0; 3], 1e5, &m, 100, &mut rng).is_err());
    }

    #[test]
    fn mc_single_rrb_matches_closed_form() {
        let m = RateModel::default();
        for (snr_db, target) in [(10.0, 180_000.0), (30.0, 540_000.0), (64.45, 2_000_000.0)] {
            let snr = 10f64.powf(snr_db / 10.0);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let est = multi_rrb_outage_mc(&PowerSplit::equal(1), &[snr], target, &m, 200_000, &mut rng).unwrap();
            let p = rayleigh_outage(rate_threshold(target, 180_000.0), snr).unwrap();
            let sigma = (p * (1.0 - p) / 200_000.0).sqrt();
            assert!((est.p_hat - p).abs() <= 4.0 * sigma + 1e-12, "{snr_db} dB: {} vs {p}", est.p_hat);
        }
    }

    #[test]
    fn sum_rate_and_mrc_agree_on_one_rrb() {
        let mrc = RateModel::default();
        let sum = RateModel { combining: Combining::SumRate, ..mrc };
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let s = PowerSplit::equal(1);
        let x = multi_rrb_outage_mc(&s, &[50.0], 500_000.0, &mrc, 20_000, &mut a).unwrap();
        let y = multi_rrb_outage_mc(&s, &[50.0], 500_000.0, &sum, 20_000, &mut b).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn half_width_formula() {
        let e = OutageEstimate::from_counts(100, 10_000);
        assert!((e.half_width_95 - 1.96 * (0.01f64 * 0.99 / 1e4).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exact_single_branch_is_rayleigh() {
        for (m, x) in [(1.0, 1e-6), (10.0, 3.0), (2.79e6, 0.279), (3.0, 40.0)] {
            let want = rayleigh_outage(x, m).unwrap();
            assert!(rel(sum_exp_cdf(&[m], x), want) < 1e-12, "{m} {x}");
        }
    }

    #[test]
    fn exact_equal_means_is_erlang() {
        for n in 1..=5usize {
            for (m, x) in [(279.0, 1.68), (1.0, 0.5), (5.0, 20.0), (24_830.0, 3.0)] {
                let means = vec![m; n];
                let want = gamma_lr(n as f64, x / m);
                let got = sum_exp_cdf(&means, x);
                assert!(rel(got, want) < 1e-9, "n={n} m={m} x={x}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn exact_distinct_means_matches_hypoexponential() {
        // closed form for distinct rates, evaluated where cancellation is mild
        let means = [2.0, 0.7, 1.3];
        let rates: Vec<f64> = means.iter().map(|m| 1.0 / m).collect();
        for x in [0.5, 1.0, 3.0, 8.0] {
            let mut surv = 0.0;
            for i in 0..3 {
                let mut c = 1.0;
                for j in 0..3 {
                    if i != j {
                        c *= rates[j] / (rates[j] - rates[i]);
                    }
                }
                surv += c * (-rates[i] * x).exp();
            }
            assert!(rel(sum_exp_cdf(&means, x), 1.0 - surv) < 1e-10);
        }
    }

    #[test]
    fn exact_mrc_agrees_with_mc() {
        let m = RateModel::default();
        let snrs = [2.79e6, 2.79e6 / 2.585, 2.79e6 / 2.585];
        let split = PowerSplit::new(vec![0.5, 0.25, 0.25]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let est = multi_rrb_outage_mc(&split, &snrs, 3.1e6, &m, 400_000, &mut rng).unwrap();
        let p = mrc_outage_exact(split.fractions(), &snrs, 3.1e6, 180_000.0);
        let sigma = (p * (1.0 - p) / 400_000.0).sqrt();
        assert!((est.p_hat - p).abs() < 4.0 * sigma, "{} vs {p}", est.p_hat);
    }

    #[test]
    fn exact_cdf_edge_cases() {
        assert_eq!(sum_exp_cdf(&[1.0], 0.0), 0.0);
        assert_eq!(sum_exp_cdf(&[0.0, 0.0], 1.0), 1.0);
        assert!(sum_exp_cdf(&[1e-3], 1e3) > 1.0 - 1e-6);
    }

    proptest! {
        #[test]
        fn eps_rate_round_trip(snr_db in 0.0f64..70.0, k in 1i32..=7) {
            let eps = 10f64.powi(-k);
            let snr = 10f64.powf(snr_db / 10.0);
            let r = eps_outage_rate(snr, eps, 180_000.0).unwrap();
            let back = rayleigh_outage(rate_threshold(r, 180_000.0), snr).unwrap();
            prop_assert!(rel(back, eps) < 1e-12);
        }

        #[test]
        fn outage_monotone_in_threshold(m in 0.1f64..1e6, a in 0.0f64..1e3, b in 0.0f64..1e3) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(rayleigh_outage(lo, m).unwrap() <= rayleigh_outage(hi, m).unwrap());
        }

        #[test]
        fn sum_exp_cdf_is_a_probability_and_monotone(
            means in proptest::collection::vec(0.01f64..100.0, 1..5),
            a in 0.0f64..50.0,
            b in 0.0f64..50.0,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let fl = sum_exp_cdf(&means, lo);
            let fh = sum_exp_cdf(&means, hi);
            prop_assert!((0.0..=1.0).contains(&fl));
            prop_assert!(fl <= fh + 1e-15);
        }

        #[test]
        fn adding_a_branch_never_raises_outage(
            means in proptest::collection::vec(0.01f64..100.0, 1..4),
            extra in 0.01f64..100.0,
            x in 0.01f64..20.0,
        ) {
            let mut more = means.clone();
            more.push(extra);
            prop_assert!(sum_exp_cdf(&more, x) <= sum_exp_cdf(&means, x) * (1.0 + 1e-12));
        }
    }
}
