//! Goodness of fit: KS distance and the parametric bootstrap.
//!
//! A fit is never accepted on likelihood alone. The Kolmogorov-Smirnov
//! distance between the tail data and the fitted model is compared against
//! the distances produced by refitting synthetic datasets drawn from that
//! same model; the p-value is the fraction of synthetic distances at least
//! as large as the observed one. Small p means the model rarely looks as bad
//! as the data actually does, i.e. the model is implausible.
//!
//! Replicates are semi-parametric in the usual way: with probability
//! n_tail/n a point is drawn from the fitted model, otherwise it is resampled
//! uniformly from the observed points below xmin, so the replicate mimics the
//! whole dataset and the xmin scan faces the same noise floor it saw on the
//! real data. Each replicate consumes its own RNG stream derived from
//! (seed, replicate index), so the p-value does not depend on evaluation
//! order.

use serde::Serialize;

use crate::dist::{Dist, ModelParams, Support};
use crate::error::{Error, Result};
use crate::fit::{fit_fixed_xmin, fit_with_xmin_scan, FitConfig, FittedModel};
use crate::seed;

/// Replicates whose refit keeps failing are redrawn this many times, then
/// counted as worse than observed (the conservative direction).
const RETRY_BUDGET: u32 = 10;

/// Outcome of one bootstrap run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub iterations: u64,
    pub observed_ks: f64,
    /// Fraction of replicates with KS >= observed; an integer multiple of
    /// 1/iterations.
    pub p_value: f64,
    pub seed: u64,
    /// Whether replicate refits re-scanned xmin (true iff the original fit
    /// did).
    pub refit_xmin: bool,
    /// Replicates that exhausted the retry budget and were counted as worse
    /// than observed.
    pub failed_replicates: u64,
}

/// KS distance between the empirical cdf of `data_tail` and the model cdf,
/// taken over the observed support points.
pub fn ks_distance(data_tail: &[u64], params: &ModelParams, support: Support) -> Result<f64> {
    if data_tail.is_empty() {
        return Err(Error::domain("ks_distance: empty tail"));
    }
    if let Some(&bad) = data_tail.iter().find(|&&x| x < support.xmin()) {
        return Err(Error::domain(format!(
            "ks_distance: data point {bad} below xmin = {}",
            support.xmin()
        )));
    }
    let dist = Dist::new(*params, support)?;
    let mut sorted = data_tail.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let ecdf = j as f64 / n;
        let gap = (ecdf - dist.cdf(x)).abs();
        if gap > d {
            d = gap;
        }
        i = j;
    }
    Ok(d)
}

/// Bootstrap p-value for `fitted`, which must have been produced from `data`.
///
/// Each of `iterations` replicates draws `data.len()` points
/// semi-parametrically, refits the same model kind (re-scanning xmin if and
/// only if the original fit scanned), and contributes its KS distance. The
/// result is deterministic in (data, fitted, iterations, seed).
pub fn bootstrap_p(
    data: &[u64],
    fitted: &FittedModel,
    iterations: u64,
    seed: u64,
    config: &FitConfig,
) -> Result<BootstrapResult> {
    if iterations == 0 {
        return Err(Error::domain("bootstrap_p: iterations must be >= 1"));
    }
    if data.is_empty() {
        return Err(Error::domain("bootstrap_p: empty data"));
    }
    config.validate()?;
    let support = Support::new(fitted.xmin)?;
    let n_tail_now = data.iter().filter(|&&x| x >= fitted.xmin).count();
    if n_tail_now != fitted.n_tail {
        return Err(Error::protocol(format!(
            "bootstrap_p: fitted model reports n_tail = {} but data has {} points >= xmin = {}",
            fitted.n_tail, n_tail_now, fitted.xmin
        )));
    }

    let dist = Dist::new(fitted.params, support)?;
    let sampler = dist.sampler();
    let below: Vec<u64> = data.iter().copied().filter(|&x| x < fitted.xmin).collect();
    let n = data.len();
    let p_tail = fitted.n_tail as f64 / n as f64;
    let kind = fitted.params.kind();

    let mut at_least_as_bad = 0u64;
    let mut failed = 0u64;
    let mut replicate = Vec::with_capacity(n);
    for r in 0..iterations {
        let mut rng = seed::stream_rng(seed::derive(seed, r));
        let mut done = false;
        for _ in 0..RETRY_BUDGET {
            replicate.clear();
            for _ in 0..n {
                if below.is_empty() || seed::unit_f64(&mut rng) < p_tail {
                    replicate.push(sampler.draw(&mut rng));
                } else {
                    let idx = seed::below(&mut rng, below.len() as u64) as usize;
                    replicate.push(below[idx]);
                }
            }
            let refit = if fitted.xmin_scanned {
                fit_with_xmin_scan(kind, &replicate, config)
            } else {
                fit_fixed_xmin(kind, &replicate, fitted.xmin, config)
            };
            if let Ok(f) = refit {
                if f.ks >= fitted.ks {
                    at_least_as_bad += 1;
                }
                done = true;
                break;
            }
        }
        if !done {
            failed += 1;
        }
    }

    Ok(BootstrapResult {
        iterations,
        observed_ks: fitted.ks,
        p_value: (at_least_as_bad + failed) as f64 / iterations as f64,
        seed,
        refit_xmin: fitted.xmin_scanned,
        failed_replicates: failed,
    })
}
