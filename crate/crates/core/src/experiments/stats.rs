//! Summary statistics and the two significance tools used by the harness.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// One-sided exact sign test: probability of at least `wins` successes out
/// of `wins + losses` fair coin flips. Ties are excluded by the caller.
pub fn sign_test(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let ln_half_n = -(n as f64) * std::f64::consts::LN_2;
    let mut ln_choose = vec![0.0; n + 1];
    for i in 1..=n {
        ln_choose[i] = ln_choose[i - 1] + ((n - i + 1) as f64).ln() - (i as f64).ln();
    }
    (wins..=n).map(|i| (ln_choose[i] + ln_half_n).exp()).sum::<f64>().min(1.0)
}

/// Paired differences summarized for the sign test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SignCounts {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
}

impl SignCounts {
    pub fn from_pairs(better: &[f64], baseline: &[f64]) -> Self {
        let mut c = SignCounts { wins: 0, losses: 0, ties: 0 };
        for (a, b) in better.iter().zip(baseline) {
            if a > b {
                c.wins += 1;
            } else if a < b {
                c.losses += 1;
            } else {
                c.ties += 1;
            }
        }
        c
    }

    pub fn p_value(&self) -> f64 {
        sign_test(self.wins, self.losses)
    }
}

/// Ranks starting at 1, ties receiving their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            r[o] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation; `None` when either series is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    pearson(&ranks(x), &ranks(y))
}
