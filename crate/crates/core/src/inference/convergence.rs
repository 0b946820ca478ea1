use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::HierarchyParams;
use crate::stats::{mean, variance};

/// Split-R-hat and effective sample size of one scalar parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostic {
    pub name: String,
    /// `None` when the parameter is constant or too few draws exist.
    pub rhat: Option<f64>,
    pub ess: Option<f64>,
    /// Draws entering the diagnostic, summed over chains.
    pub draws: usize,
    /// Share of draws in which the parameter exists; below one only for
    /// interaction knots and coefficients, which are diagnosed over the
    /// draws that include the interaction.
    pub conditioning_fraction: f64,
}

const MIN_DRAWS: usize = 4;

/// Splits every chain in half, dropping the middle draw of odd lengths.
fn split(chains: &[Vec<f64>]) -> Vec<&[f64]> {
    chains
        .iter()
        .flat_map(|c| {
            let h = c.len() / 2;
            [&c[..h], &c[c.len() - h..]]
        })
        .collect()
}

/// Within-chain mean variance `W` and `var+` for equal-length sequences.
fn variance_parts(seqs: &[&[f64]]) -> (f64, f64) {
    let n = seqs[0].len() as f64;
    let means: Vec<f64> = seqs.iter().map(|s| mean(s)).collect();
    let w = seqs.iter().map(|s| variance(s)).sum::<f64>() / seqs.len() as f64;
    let b_over_n = if seqs.len() > 1 { variance(&means) } else { 0.0 };
    (w, (n - 1.0) / n * w + b_over_n)
}

fn usable(chains: &[Vec<f64>]) -> Option<Vec<&[f64]>> {
    let n = chains.iter().map(Vec::len).min()?;
    if n < MIN_DRAWS {
        return None;
    }
    let seqs = split(chains);
    let len = seqs.iter().map(|s| s.len()).min()?;
    Some(seqs.into_iter().map(|s| &s[..len]).collect())
}

/// Split potential scale reduction factor.
pub fn split_rhat(chains: &[Vec<f64>]) -> Option<f64> {
    let seqs = usable(chains)?;
    let (w, var_plus) = variance_parts(&seqs);
    if w > 0.0 {
        Some((var_plus / w).sqrt())
    } else if var_plus > 0.0 {
        // constant within every sequence but not across them
        Some(f64::INFINITY)
    } else {
        None
    }
}

fn autocovariance(x: &[f64], m: f64, lag: usize) -> f64 {
    let n = x.len();
    x[..n - lag].iter().zip(&x[lag..]).map(|(a, b)| (a - m) * (b - m)).sum::<f64>() / n as f64
}

/// Effective sample size from the split chains' combined autocorrelations,
/// truncated by Geyer's initial monotone positive sequence.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> Option<f64> {
    let seqs = usable(chains)?;
    let (w, var_plus) = variance_parts(&seqs);
    if !(w > 0.0) {
        return None;
    }
    let n = seqs[0].len();
    let means: Vec<f64> = seqs.iter().map(|s| mean(s)).collect();
    let rho = |lag: usize| {
        let ac = seqs
            .iter()
            .zip(&means)
            .map(|(s, &m)| autocovariance(s, m, lag))
            .sum::<f64>()
            / seqs.len() as f64;
        1.0 - (w - ac) / var_plus
    };
    let mut tau = -1.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = (rho(2 * k) + rho(2 * k + 1)).min(prev);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        prev = pair;
        k += 1;
    }
    let total = (seqs.len() * n) as f64;
    Some(total / tau.max(1.0 / total.log10().max(1.0)))
}

type Extractor = Box<dyn Fn(&HierarchyParams) -> Option<f64>>;

fn extractors(s: &HierarchyParams) -> Vec<(String, Extractor)> {
    let mut v: Vec<(String, Extractor)> = Vec::new();
    let dims = s.dims;
    for i in 0..dims.particles {
        for j in 0..dims.outcomes {
            let tag = |n: &str| format!("{n}[{},{}]", i + 1, j + 1);
            v.push((tag("alpha"), Box::new(move |s| Some(s.cell(i, j).alpha))));
            for k in 0..2 {
                v.push((tag(&format!("phi{}", k + 1)), Box::new(move |s| Some(s.cell(i, j).dose.knots[k]))));
                v.push((tag(&format!("psi{}", k + 1)), Box::new(move |s| Some(s.cell(i, j).time.knots[k]))));
                v.push((
                    tag(&format!("chi{}", k + 1)),
                    Box::new(move |s| s.cell(i, j).interaction.map(|h| h.knots[k])),
                ));
            }
            for l in 1..4 {
                v.push((tag(&format!("beta{}", l + 1)), Box::new(move |s| Some(s.cell(i, j).dose.coef[l]))));
                v.push((tag(&format!("gamma{}", l + 1)), Box::new(move |s| Some(s.cell(i, j).time.coef[l]))));
                v.push((
                    tag(&format!("delta{}", l + 1)),
                    Box::new(move |s| s.cell(i, j).interaction.map(|h| h.coef[l])),
                ));
            }
            v.push((tag("rho"), Box::new(move |s| Some(s.cell(i, j).rho() as u8 as f64))));
        }
        let tag = |n: &str| format!("{n}[{}]", i + 1);
        v.push((tag("alpha_o"), Box::new(move |s| Some(s.particles[i].alpha_o))));
        v.push((tag("tau"), Box::new(move |s| Some(s.particles[i].tau))));
        v.push((tag("sigma2_alpha"), Box::new(move |s| Some(s.particles[i].sigma2_alpha))));
        for k in 0..2 {
            v.push((tag(&format!("lambda_phi{}", k + 1)), Box::new(move |s| Some(s.particles[i].lambda_phi[k]))));
            v.push((tag(&format!("lambda_psi{}", k + 1)), Box::new(move |s| Some(s.particles[i].lambda_psi[k]))));
        }
        for l in 1..4 {
            v.push((tag(&format!("beta_o{}", l + 1)), Box::new(move |s| Some(s.particles[i].beta_o[l]))));
            v.push((tag(&format!("gamma_o{}", l + 1)), Box::new(move |s| Some(s.particles[i].gamma_o[l]))));
        }
        for l in 0..4 {
            v.push((tag(&format!("sigma2_beta{}", l + 1)), Box::new(move |s| Some(s.particles[i].sigma2_beta[l]))));
            v.push((tag(&format!("sigma2_gamma{}", l + 1)), Box::new(move |s| Some(s.particles[i].sigma2_gamma[l]))));
        }
    }
    for j in 0..dims.outcomes {
        v.push((format!("sigma2_eps[{}]", j + 1), Box::new(move |s| Some(s.sigma2_eps[j]))));
    }
    v.push(("pi".into(), Box::new(|s| Some(s.pi))));
    v.push(("nu".into(), Box::new(|s| Some(s.nu as f64))));
    v
}

/// Split-R-hat and ESS for every scalar parameter across chains.
///
/// Interaction knots and coefficients are diagnosed on the subsequence of
/// draws that include the interaction. Constant parameters (pinned
/// coefficients) and parameters with fewer than four draws in some chain
/// are reported with no statistics.
pub fn convergence_stats(chains: &[&[HierarchyParams]]) -> Result<Vec<ParamDiagnostic>> {
    let Some(first) = chains.iter().find_map(|c| c.first()) else {
        return Err(Error::Unavailable("no retained draws".into()));
    };
    if chains.iter().any(|c| c.len() < MIN_DRAWS) {
        return Err(Error::Unavailable(format!(
            "every chain needs at least {MIN_DRAWS} retained draws"
        )));
    }
    let total: usize = chains.iter().map(|c| c.len()).sum();
    let out = extractors(first)
        .into_iter()
        .map(|(name, f)| {
            let series: Vec<Vec<f64>> = chains.iter().map(|c| c.iter().filter_map(&f).collect()).collect();
            let draws: usize = series.iter().map(Vec::len).sum();
            ParamDiagnostic {
                name,
                rhat: split_rhat(&series),
                ess: effective_sample_size(&series),
                draws,
                conditioning_fraction: draws as f64 / total as f64,
            }
        })
        .collect();
    Ok(out)
}
