use serde::Serialize;

/// Averages over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    /// Mean of `|γ̂ ∩ t| / |t|`.
    pub tpr: f64,
    /// Fraction of replications with `γ̂ ⊇ t`.
    pub cp: f64,
    pub mean_size: f64,
    pub median_size: f64,
    pub replications: usize,
}

/// TPR, coverage and model-size summaries of `selected` against `truth`.
/// An empty `truth` counts as fully covered. With no replications every
/// summary is NaN.
pub fn evaluate(selected: &[Vec<usize>], truth: &[usize]) -> Metrics {
    let reps = selected.len();
    if reps == 0 {
        return Metrics {
            tpr: f64::NAN,
            cp: f64::NAN,
            mean_size: f64::NAN,
            median_size: f64::NAN,
            replications: 0,
        };
    }
    let mut tpr = 0.0;
    let mut covered = 0usize;
    let mut sizes: Vec<usize> = Vec::with_capacity(reps);
    for s in selected {
        let hits = truth.iter().filter(|t| s.contains(t)).count();
        if hits == truth.len() {
            covered += 1;
        }
        tpr += if truth.is_empty() { 1.0 } else { hits as f64 / truth.len() as f64 };
        sizes.push(s.len());
    }
    sizes.sort_unstable();
    let median_size = if reps % 2 == 1 {
        sizes[reps / 2] as f64
    } else {
        (sizes[reps / 2 - 1] + sizes[reps / 2]) as f64 / 2.0
    };
    Metrics {
        tpr: tpr / reps as f64,
        cp: covered as f64 / reps as f64,
        mean_size: sizes.iter().sum::<usize>() as f64 / reps as f64,
        median_size,
        replications: reps,
    }
}
