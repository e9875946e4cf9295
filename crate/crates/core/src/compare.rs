//! Non-nested model selection: Vuong's likelihood-ratio test.
//!
//! For two fitted models sharing a support cutoff, the pointwise
//! log-likelihood ratios l_i = ln pA(x_i) - ln pB(x_i) are averaged and
//! normalized by their dispersion:
//!
//! ```text
//! statistic = Σ l_i / (s √n),   s = population SD of the l_i
//! ```
//!
//! Under the null that both models sit equally far from the truth the
//! statistic is asymptotically standard normal; the reported p-value is
//! two-sided. A positive statistic favors the first model. The comparison is
//! only meaningful at a common xmin, so the pairwise helper re-estimates
//! each rival at the other's scanned cutoff rather than comparing tails of
//! different lengths.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::dist::{Dist, ModelKind, Support};
use crate::error::{Error, Result};
use crate::fit::{fit_fixed_xmin, fit_with_xmin_scan, FitConfig, FittedModel};

/// Which model a comparison favors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Favored {
    A,
    B,
    None,
}

impl std::fmt::Display for Favored {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Favored::A => "A",
            Favored::B => "B",
            Favored::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VuongResult {
    pub statistic: f64,
    pub p_two_sided: f64,
    pub favored: Favored,
}

/// One direction of a shared-xmin pairwise comparison: the cutoff was taken
/// from `xmin_from`'s scan and the rival refit at it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharedXminComparison {
    pub xmin_from: ModelKind,
    pub xmin: u64,
    pub vuong: VuongResult,
}

/// Vuong's test of `fit_a` against `fit_b` on their common tail.
///
/// Both fits must share the same xmin and every point must lie on it. When
/// the ratios have no dispersion the test degenerates: identical pointwise
/// likelihoods favor neither model (p = 1), while a constant nonzero ratio
/// admits no normal approximation and is an error.
pub fn vuong_test(
    data_tail: &[u64],
    fit_a: &FittedModel,
    fit_b: &FittedModel,
) -> Result<VuongResult> {
    if data_tail.is_empty() {
        return Err(Error::domain("vuong_test: empty tail"));
    }
    if fit_a.xmin != fit_b.xmin {
        return Err(Error::protocol(format!(
            "vuong_test: fits disagree on xmin ({} vs {})",
            fit_a.xmin, fit_b.xmin
        )));
    }
    let support = Support::new(fit_a.xmin)?;
    if let Some(&bad) = data_tail.iter().find(|&&x| x < support.xmin()) {
        return Err(Error::domain(format!(
            "vuong_test: data point {bad} below xmin = {}",
            support.xmin()
        )));
    }

    let da = Dist::new(fit_a.params, support)?;
    let db = Dist::new(fit_b.params, support)?;
    let ratios: Vec<f64> = data_tail
        .iter()
        .map(|&x| da.ln_pmf(x) - db.ln_pmf(x))
        .collect();
    let n = ratios.len() as f64;
    let sum: f64 = ratios.iter().sum();
    let mean = sum / n;
    let var = ratios.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
    let s = var.sqrt();

    // Dispersion indistinguishable from zero at double precision counts as
    // zero; anything larger would make the statistic pure rounding noise.
    let scale = ratios.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if s <= scale * 1e-14 || scale == 0.0 {
        if sum.abs() <= scale * n * 1e-14 || scale == 0.0 {
            return Ok(VuongResult {
                statistic: 0.0,
                p_two_sided: 1.0,
                favored: Favored::None,
            });
        }
        return Err(Error::DegenerateComparison(
            "pointwise likelihood ratios are constant but nonzero".into(),
        ));
    }

    let statistic = sum / (s * n.sqrt());
    let p_two_sided = erfc(statistic.abs() / std::f64::consts::SQRT_2);
    let favored = if statistic > 0.0 {
        Favored::A
    } else if statistic < 0.0 {
        Favored::B
    } else {
        Favored::None
    };
    Ok(VuongResult {
        statistic,
        p_two_sided,
        favored,
    })
}

/// Compares two kinds on `data` at shared cutoffs, once per direction.
///
/// Each kind is first fit with its own xmin scan. The first result adopts
/// `kind_a`'s scanned xmin and refits `kind_b` there; the second mirrors it
/// with `kind_b`'s cutoff. Annotations record whose cutoff each result used.
pub fn pairwise_with_shared_xmin(
    data: &[u64],
    kind_a: ModelKind,
    kind_b: ModelKind,
    config: &FitConfig,
) -> Result<(SharedXminComparison, SharedXminComparison)> {
    let scan_a = fit_with_xmin_scan(kind_a, data, config)?;
    let scan_b = fit_with_xmin_scan(kind_b, data, config)?;

    let at = |owner: ModelKind, xmin: u64| -> Result<SharedXminComparison> {
        let a = fit_fixed_xmin(kind_a, data, xmin, config)?;
        let b = fit_fixed_xmin(kind_b, data, xmin, config)?;
        let tail: Vec<u64> = data.iter().copied().filter(|&x| x >= xmin).collect();
        Ok(SharedXminComparison {
            xmin_from: owner,
            xmin,
            vuong: vuong_test(&tail, &a, &b)?,
        })
    };

    Ok((at(kind_a, scan_a.xmin)?, at(kind_b, scan_b.xmin)?))
}

/// Bonferroni correction: each p-value is multiplied by the family size `m`
/// and capped at 1. `m` must cover at least the tests given.
pub fn bonferroni_adjust(p_values: &[f64], m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::domain("bonferroni_adjust: m must be >= 1"));
    }
    if m < p_values.len() {
        return Err(Error::domain(format!(
            "bonferroni_adjust: m = {m} smaller than the {} tests given",
            p_values.len()
        )));
    }
    if let Some(&bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::domain(format!(
            "bonferroni_adjust: p-value {bad} outside [0, 1]"
        )));
    }
    Ok(p_values.iter().map(|p| (p * m as f64).min(1.0)).collect())
}
