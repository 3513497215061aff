use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Window length.
    pub w: usize,
    /// Stride between the two compared windows.
    pub s: usize,
    /// L1 threshold between normalised histograms.
    pub eps: f64,
    pub bins: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            w: 500,
            s: 100,
            eps: 0.15,
            bins: 20,
        }
    }
}

/// L1 distance between the normalised histograms of the last `w` energies
/// and of the `w` energies ending `s` steps earlier, binned over their
/// combined range. `None` when the history is shorter than `w + s`.
pub fn histogram_distance(history: &[f64], cfg: &ConvergenceConfig) -> Option<f64> {
    let n = history.len();
    if cfg.w == 0 || cfg.bins == 0 || n < cfg.w + cfg.s {
        return None;
    }
    let recent = &history[n - cfg.w..];
    let earlier = &history[n - cfg.w - cfg.s..n - cfg.s];
    let (lo, hi) = recent
        .iter()
        .chain(earlier)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(*e), hi.max(*e)));
    if !(hi > lo) {
        return Some(0.0);
    }
    let bin = |e: f64| (((e - lo) / (hi - lo) * cfg.bins as f64) as usize).min(cfg.bins - 1);
    let mut diff = vec![0i64; cfg.bins];
    for e in recent {
        diff[bin(*e)] += 1;
    }
    for e in earlier {
        diff[bin(*e)] -= 1;
    }
    Some(diff.iter().map(|d| d.unsigned_abs()).sum::<u64>() as f64 / cfg.w as f64)
}

pub fn has_converged(history: &[f64], cfg: &ConvergenceConfig) -> bool {
    histogram_distance(history, cfg).is_some_and(|d| d < cfg.eps)
}
