//! Classical rank-frequency laws, kept for comparison with older analyses.
//!
//! These models describe the relative frequency of the kth-ranked type
//! directly, rather than the distribution of frequencies:
//!
//! * Zipf             p_k ∝ k^(-α)
//! * GeometricRank    p_k ∝ λ^k
//! * Whitworth        expected sorted parts of a randomly broken unit stick
//! * NegLog           p_k ∝ -ln(k / (n+1))
//! * YuleSimon        p_k ∝ λ^k · k^(-α)
//!
//! Yule-Simon contains two of the others: λ = 1 reduces it to Zipf and
//! α = 0 to the geometric rank law. Fitting here is the legacy least-squares
//! recipe — minimize squared error between log spectra and report R² — which
//! is known to be unreliable as evidence; it exists so reports can juxtapose
//! the modern likelihood machinery with what earlier work would have said.

use serde::Serialize;

use crate::corpus::FrequencyTable;
use crate::error::{Error, Result};
use crate::optim::{golden_max, nelder_mead_max};

/// A descending, normalized rank-frequency spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct RankSpectrum {
    rel_freqs: Vec<f64>,
}

impl RankSpectrum {
    /// Validates that `rel_freqs` is nonempty, strictly positive,
    /// nonincreasing, and sums to 1 within 1e-9.
    pub fn new(rel_freqs: Vec<f64>) -> Result<Self> {
        if rel_freqs.is_empty() {
            return Err(Error::domain("rank spectrum must be nonempty"));
        }
        if rel_freqs.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::domain("rank spectrum entries must be finite and > 0"));
        }
        if rel_freqs.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::domain("rank spectrum must be nonincreasing"));
        }
        let sum: f64 = rel_freqs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "rank spectrum sums to {sum}, not 1"
            )));
        }
        Ok(RankSpectrum { rel_freqs })
    }

    pub fn rel_freqs(&self) -> &[f64] {
        &self.rel_freqs
    }

    pub fn len(&self) -> usize {
        self.rel_freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankModelKind {
    Zipf,
    GeometricRank,
    Whitworth,
    NegLog,
    YuleSimon,
}

impl RankModelKind {
    pub const ALL: [RankModelKind; 5] = [
        RankModelKind::Zipf,
        RankModelKind::GeometricRank,
        RankModelKind::Whitworth,
        RankModelKind::NegLog,
        RankModelKind::YuleSimon,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RankModelKind::Zipf => "zipf",
            RankModelKind::GeometricRank => "geometric-rank",
            RankModelKind::Whitworth => "whitworth",
            RankModelKind::NegLog => "neg-log",
            RankModelKind::YuleSimon => "yule-simon",
        }
    }

    fn is_parameterized(self) -> bool {
        !matches!(self, RankModelKind::Whitworth | RankModelKind::NegLog)
    }
}

impl std::fmt::Display for RankModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Parameters for a rank model. Whitworth and NegLog are parameter-free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RankParams {
    Zipf { alpha: f64 },
    GeometricRank { lambda: f64 },
    Whitworth,
    NegLog,
    YuleSimon { alpha: f64, lambda: f64 },
}

impl RankParams {
    pub fn kind(&self) -> RankModelKind {
        match self {
            RankParams::Zipf { .. } => RankModelKind::Zipf,
            RankParams::GeometricRank { .. } => RankModelKind::GeometricRank,
            RankParams::Whitworth => RankModelKind::Whitworth,
            RankParams::NegLog => RankModelKind::NegLog,
            RankParams::YuleSimon { .. } => RankModelKind::YuleSimon,
        }
    }

    /// Domain checks. λ = 1 is admitted (it is the Zipf edge of Yule-Simon
    /// and the uniform edge of the geometric law); fitted geometric models
    /// stay inside the open interval because the optimizer never proposes
    /// the boundary.
    pub fn validate(&self) -> Result<()> {
        let check = |v: f64, what: &str, ok: bool| {
            if v.is_finite() && ok {
                Ok(())
            } else {
                Err(Error::domain(format!("{}: {what} = {v} out of range", self.kind())))
            }
        };
        match *self {
            RankParams::Zipf { alpha } => check(alpha, "alpha", alpha >= 0.0),
            RankParams::GeometricRank { lambda } => {
                check(lambda, "lambda", lambda > 0.0 && lambda <= 1.0)
            }
            RankParams::Whitworth | RankParams::NegLog => Ok(()),
            RankParams::YuleSimon { alpha, lambda } => {
                check(alpha, "alpha", alpha >= 0.0)?;
                check(lambda, "lambda", lambda > 0.0 && lambda <= 1.0)
            }
        }
    }
}

/// Observed spectrum of a frequency table: counts descending (the table's
/// canonical order) divided by the token total.
pub fn rank_spectrum(table: &FrequencyTable) -> Result<RankSpectrum> {
    let total = table.n_tokens() as f64;
    RankSpectrum::new(table.counts().iter().map(|&c| c as f64 / total).collect())
}

/// Unnormalized log mass at rank k (1-based) for the log-linear families.
///
/// The Yule-Simon arms reuse the exact expressions of the pure families so
/// that its λ = 1 and α = 0 reductions hold bitwise, not just within
/// tolerance.
fn ln_unnormalized(params: &RankParams, k: usize) -> f64 {
    let k_ln = (k as f64).ln();
    match *params {
        RankParams::Zipf { alpha } => -alpha * k_ln,
        RankParams::GeometricRank { lambda } => k as f64 * lambda.ln(),
        RankParams::YuleSimon { alpha, lambda } => k as f64 * lambda.ln() - alpha * k_ln,
        RankParams::Whitworth | RankParams::NegLog => unreachable!("not log-linear"),
    }
}

fn normalized_from_ln(lnq: &[f64]) -> Vec<f64> {
    let m = lnq.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let weights: Vec<f64> = lnq.iter().map(|&l| (l - m).exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

/// The expected spectrum of `params` over `n` ranks.
pub fn expected_spectrum(params: &RankParams, n: usize) -> Result<RankSpectrum> {
    params.validate()?;
    if n == 0 {
        return Err(Error::domain("spectrum length must be at least 1"));
    }
    let rel = match params {
        RankParams::Whitworth => {
            // Expected sorted parts of a unit stick broken at n-1 uniform
            // points: the kth largest averages (1/n) Σ_{i=k..n} 1/i. The
            // suffix sums telescope, so the spectrum is exactly normalized.
            let mut rel = vec![0.0; n];
            let mut acc = 0.0;
            for k in (1..=n).rev() {
                acc += 1.0 / k as f64;
                rel[k - 1] = acc / n as f64;
            }
            rel
        }
        RankParams::NegLog => {
            let raw: Vec<f64> = (1..=n)
                .map(|k| ((n + 1) as f64 / k as f64).ln())
                .collect();
            let z: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / z).collect()
        }
        _ => {
            let lnq: Vec<f64> = (1..=n).map(|k| ln_unnormalized(params, k)).collect();
            normalized_from_ln(&lnq)
        }
    };
    RankSpectrum::new(rel)
}

/// Checks both algebraic reductions of Yule-Simon at once: with λ = 1 it
/// must match Zipf(α), and with α = 0 it must match GeometricRank(λ),
/// elementwise within 1e-12.
pub fn yule_simon_reductions_check(n: usize, alpha: f64, lambda: f64) -> Result<bool> {
    let close = |a: &RankSpectrum, b: &RankSpectrum| {
        a.rel_freqs()
            .iter()
            .zip(b.rel_freqs())
            .all(|(x, y)| (x - y).abs() <= 1e-12)
    };
    let ys_zipf = expected_spectrum(&RankParams::YuleSimon { alpha, lambda: 1.0 }, n)?;
    let zipf = expected_spectrum(&RankParams::Zipf { alpha }, n)?;
    let ys_geom = expected_spectrum(&RankParams::YuleSimon { alpha: 0.0, lambda }, n)?;
    let geom = expected_spectrum(&RankParams::GeometricRank { lambda }, n)?;
    Ok(close(&ys_zipf, &zipf) && close(&ys_geom, &geom))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankModelFit {
    pub params: RankParams,
    pub r_squared: f64,
    pub expected: RankSpectrum,
}

impl RankModelFit {
    pub fn kind(&self) -> RankModelKind {
        self.params.kind()
    }
}

impl Serialize for RankSpectrum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rel_freqs.serialize(s)
    }
}

fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// Squared error between log spectra, with the expected side normalized in
/// log space so extreme trial parameters cannot underflow mid-search.
fn ln_sse(ln_obs: &[f64], params: &RankParams) -> f64 {
    let n = ln_obs.len();
    let lnq: Vec<f64> = (1..=n).map(|k| ln_unnormalized(params, k)).collect();
    let m = lnq.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lse = m + lnq.iter().map(|&l| (l - m).exp()).sum::<f64>().ln();
    ln_obs
        .iter()
        .zip(&lnq)
        .map(|(o, q)| {
            let d = o - (q - lse);
            d * d
        })
        .sum()
}

/// Least-squares fit of `kind` to an observed spectrum on the log scale,
/// the way the older rank-frequency literature fit straight lines to
/// log-log plots. R² is computed on ln(observed). This is comparison
/// output, not plausibility evidence.
pub fn fit_rank_model(observed: &RankSpectrum, kind: RankModelKind) -> Result<RankModelFit> {
    let n = observed.len();
    if kind.is_parameterized() && n < 3 {
        return Err(Error::insufficient(format!(
            "fitting {kind} needs at least 3 ranks, got {n}"
        )));
    }
    let ln_obs: Vec<f64> = observed.rel_freqs().iter().map(|p| p.ln()).collect();

    let params = match kind {
        RankModelKind::Whitworth => RankParams::Whitworth,
        RankModelKind::NegLog => RankParams::NegLog,
        RankModelKind::Zipf => {
            let (alpha, _) = golden_max(
                |a| -ln_sse(&ln_obs, &RankParams::Zipf { alpha: a }),
                0.0,
                30.0,
                1e-9,
            );
            RankParams::Zipf { alpha }
        }
        RankModelKind::GeometricRank => {
            let (lambda, _) = golden_max(
                |l| -ln_sse(&ln_obs, &RankParams::GeometricRank { lambda: l }),
                1e-6,
                1.0 - 1e-9,
                1e-12,
            );
            RankParams::GeometricRank { lambda }
        }
        RankModelKind::YuleSimon => {
            let from_u = |u: &[f64]| RankParams::YuleSimon {
                alpha: softplus(u[0]),
                lambda: 1.0 / (1.0 + (-u[1]).exp()),
            };
            // seed λ from the average log-slope, attributing all decay to
            // the geometric factor, and α near 1
            let slope = ((ln_obs[n - 1] - ln_obs[0]) / (n - 1) as f64).exp();
            let lam0 = slope.clamp(0.05, 0.95);
            let start = [0.5, (lam0 / (1.0 - lam0)).ln()];
            let (u, _) = nelder_mead_max(
                |u| -ln_sse(&ln_obs, &from_u(u)),
                &start,
                &[1.0, 1.0],
                1e-12,
                600,
            );
            from_u(&u)
        }
    };

    let expected = expected_spectrum(&params, n)?;
    let ss_res: f64 = ln_obs
        .iter()
        .zip(expected.rel_freqs())
        .map(|(o, e)| {
            let d = o - e.ln();
            d * d
        })
        .sum();
    let mean = ln_obs.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = ln_obs.iter().map(|o| (o - mean) * (o - mean)).sum();
    let r_squared = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / ss_tot
    };

    Ok(RankModelFit { params, r_squared, expected })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(params: &RankParams, n: usize) -> Vec<f64> {
        expected_spectrum(params, n).unwrap().rel_freqs().to_vec()
    }

    #[test]
    fn whitworth_two_parts_is_three_quarters_one_quarter() {
        assert_eq!(spectrum(&RankParams::Whitworth, 2), vec![0.75, 0.25]);
    }

    #[test]
    fn whitworth_smallest_part_is_inverse_n_squared() {
        for n in [1usize, 3, 7, 20] {
            let s = spectrum(&RankParams::Whitworth, n);
            let smallest = s[n - 1];
            assert!((smallest - 1.0 / (n * n) as f64).abs() < 1e-15, "n = {n}");
        }
    }

    #[test]
    fn neg_log_two_parts_matches_hand_normalization() {
        let s = spectrum(&RankParams::NegLog, 2);
        // {ln 3, ln 1.5} normalized
        let z = 3.0f64.ln() + 1.5f64.ln();
        assert!((s[0] - 3.0f64.ln() / z).abs() < 1e-15);
        assert!((s[0] - 0.7304).abs() < 1e-4);
        assert!((s[1] - 0.2696).abs() < 1e-4);
    }

    #[test]
    fn zipf_two_ranks_at_alpha_one() {
        let s = spectrum(&RankParams::Zipf { alpha: 1.0 }, 2);
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn spectra_are_normalized_and_nonincreasing() {
        let cases = [
            RankParams::Zipf { alpha: 0.0 },
            RankParams::Zipf { alpha: 2.4 },
            RankParams::GeometricRank { lambda: 0.3 },
            RankParams::GeometricRank { lambda: 1.0 },
            RankParams::Whitworth,
            RankParams::NegLog,
            RankParams::YuleSimon { alpha: 1.1, lambda: 0.8 },
        ];
        for params in cases {
            // RankSpectrum::new re-validates order, positivity, and the sum
            let s = expected_spectrum(&params, 40).unwrap();
            let sum: f64 = s.rel_freqs().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "{params:?} sums to {sum}");
        }
    }

    #[test]
    fn neg_log_tracks_whitworth_at_large_n() {
        let w = spectrum(&RankParams::Whitworth, 100);
        let nl = spectrum(&RankParams::NegLog, 100);
        let max_diff = w
            .iter()
            .zip(&nl)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_diff < 0.01, "max elementwise gap {max_diff}");
    }

    #[test]
    fn yule_simon_reductions_hold() {
        assert!(yule_simon_reductions_check(10, 1.2, 1.0).unwrap());
        assert!(yule_simon_reductions_check(10, 0.0, 0.7).unwrap());
        assert!(yule_simon_reductions_check(50, 2.7, 0.05).unwrap());
    }

    #[test]
    fn yule_simon_with_both_parameters_active_is_not_zipf() {
        let ys = spectrum(&RankParams::YuleSimon { alpha: 1.2, lambda: 0.7 }, 10);
        let zipf = spectrum(&RankParams::Zipf { alpha: 1.2 }, 10);
        let max_diff = ys
            .iter()
            .zip(&zipf)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_diff > 1e-6);
    }

    #[test]
    fn rank_spectrum_normalizes_table_counts() {
        let even = FrequencyTable::new("L1", vec![("p".into(), 2), ("a".into(), 2)]).unwrap();
        assert_eq!(rank_spectrum(&even).unwrap().rel_freqs(), &[0.5, 0.5]);
        let skewed = FrequencyTable::new("L1", vec![("a".into(), 3), ("b".into(), 1)]).unwrap();
        assert_eq!(rank_spectrum(&skewed).unwrap().rel_freqs(), &[0.75, 0.25]);
    }

    #[test]
    fn spectrum_validation_rejects_bad_shapes() {
        assert!(RankSpectrum::new(vec![]).is_err());
        assert!(RankSpectrum::new(vec![0.25, 0.75]).is_err());
        assert!(RankSpectrum::new(vec![0.6, 0.6]).is_err());
        assert!(RankSpectrum::new(vec![1.0, 0.0]).is_err());
        assert!(RankSpectrum::new(vec![0.5, -0.5]).is_err());
    }

    #[test]
    fn zipf_self_fit_recovers_alpha_exactly_enough() {
        let observed = expected_spectrum(&RankParams::Zipf { alpha: 1.3 }, 20).unwrap();
        let fit = fit_rank_model(&observed, RankModelKind::Zipf).unwrap();
        let RankParams::Zipf { alpha } = fit.params else { panic!("wrong variant") };
        assert!((alpha - 1.3).abs() < 1e-6, "alpha = {alpha}");
        assert!(fit.r_squared > 1.0 - 1e-9);
    }

    #[test]
    fn parameter_free_self_fits_are_perfect() {
        let observed = expected_spectrum(&RankParams::Whitworth, 5).unwrap();
        let fit = fit_rank_model(&observed, RankModelKind::Whitworth).unwrap();
        assert!(fit.r_squared > 1.0 - 1e-9);
        assert_eq!(fit.params, RankParams::Whitworth);
        assert_eq!(fit.expected, observed);
    }

    #[test]
    fn yule_simon_self_fit_recovers_both_parameters() {
        let truth = RankParams::YuleSimon { alpha: 0.8, lambda: 0.85 };
        let observed = expected_spectrum(&truth, 30).unwrap();
        let fit = fit_rank_model(&observed, RankModelKind::YuleSimon).unwrap();
        let RankParams::YuleSimon { alpha, lambda } = fit.params else {
            panic!("wrong variant")
        };
        assert!((alpha - 0.8).abs() < 1e-3, "alpha = {alpha}");
        assert!((lambda - 0.85).abs() < 1e-3, "lambda = {lambda}");
        assert!(fit.r_squared > 1.0 - 1e-9);
    }

    #[test]
    fn zipf_misfits_geometric_data() {
        let observed = expected_spectrum(&RankParams::GeometricRank { lambda: 0.6 }, 20).unwrap();
        let fit = fit_rank_model(&observed, RankModelKind::Zipf).unwrap();
        assert!(fit.r_squared < 1.0 - 1e-4, "r2 = {}", fit.r_squared);
        // the mismatch is structural: curvature on the log-log plot
        assert!(fit.r_squared > 0.5, "r2 = {}", fit.r_squared);
    }

    #[test]
    fn too_few_ranks_for_parameterized_kinds() {
        let observed = expected_spectrum(&RankParams::Whitworth, 2).unwrap();
        assert!(matches!(
            fit_rank_model(&observed, RankModelKind::Zipf),
            Err(Error::InsufficientData(_))
        ));
        assert!(fit_rank_model(&observed, RankModelKind::NegLog).is_ok());
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(expected_spectrum(&RankParams::Zipf { alpha: -0.5 }, 5).is_err());
        assert!(expected_spectrum(&RankParams::GeometricRank { lambda: 0.0 }, 5).is_err());
        assert!(expected_spectrum(&RankParams::GeometricRank { lambda: 1.2 }, 5).is_err());
        assert!(
            expected_spectrum(&RankParams::YuleSimon { alpha: 1.0, lambda: f64::NAN }, 5)
                .is_err()
        );
        assert!(expected_spectrum(&RankParams::Whitworth, 0).is_err());
    }
}
