//! Responsibility-weighted beta-binomial maximum likelihood for one component.



const MAX_NEWTON: usize = 50;

/// Tail weights: entry `k` of `hits` is the total weight of cases with
/// `H > k`, and likewise for misses `N − H` and trials `N`.
///
/// Writing `lnB(α+H, β+M) − lnB(α, β)` as sums of `ln(α+k)`, `ln(β+k)` and
/// `ln(α+β+k)` keeps the objective accurate when `α + β` is huge.
struct Collapsed {
    hits: Vec<f64>,
    misses: Vec<f64>,
    trials: Vec<f64>,
    total: f64,
}

fn suffix_tails(counts: &[f64]) -> Vec<f64> {
    // counts[v] = weight with value v; result[k] = weight with value > k
    let mut out = vec![0.0; counts.len().saturating_sub(1)];
    let mut acc = 0.0;
    for k in (0..out.len()).rev() {
        acc += counts[k + 1];
        out[k] = acc;
    }
    out
}

impl Collapsed {
    fn new(h: &[u64], n: &[u64], w: &[f64]) -> Self {
        let max = n.iter().copied().max().unwrap_or(0) as usize;
        let mut dense = [vec![0.0f64; max + 1], vec![0.0f64; max + 1], vec![0.0f64; max + 1]];
        let mut total = 0.0;
        for ((&hi, &ni), &wi) in h.iter().zip(n).zip(w) {
            if wi == 0.0 {
                continue;
            }
            dense[0][hi as usize] += wi;
            dense[1][(ni - hi) as usize] += wi;
            dense[2][ni as usize] += wi;
            total += wi;
        }
        let trim = |mut v: Vec<f64>| {
            while v.last() == Some(&0.0) {
                v.pop();
            }
            v
        };
        Self {
            hits: trim(suffix_tails(&dense[0])),
            misses: trim(suffix_tails(&dense[1])),
            trials: trim(suffix_tails(&dense[2])),
            total,
        }
    }

    fn objective(&self, alpha: f64, beta: f64) -> f64 {
        // Dividing every factor by s = α + β cancels since H + M = N.
        let s = alpha + beta;
        let (p, q) = (alpha / s, beta / s);
        let sum = |tails: &[f64], base: f64| -> f64 {
            tails.iter().enumerate().map(|(k, &t)| t * (base + k as f64 / s).ln()).sum()
        };
        let trials: f64 = self.trials.iter().enumerate().map(|(k, &t)| t * (k as f64 / s).ln_1p()).sum();
        sum(&self.hits, p) + sum(&self.misses, q) - trials
    }

    /// Gradient and Hessian with respect to `(log α, log β)`.
    fn derivatives(&self, alpha: f64, beta: f64) -> ([f64; 2], [[f64; 3]; 1]) {
        let sums = |tails: &[f64], shift: f64| {
            tails.iter().enumerate().fold((0.0, 0.0), |(d, t), (k, &w)| {
                let inv = 1.0 / (shift + k as f64);
                (d + w * inv, t + w * inv * inv)
            })
        };
        let (da, ta) = sums(&self.hits, alpha);
        let (db, tb) = sums(&self.misses, beta);
        let (dn, tn) = sums(&self.trials, alpha + beta);
        let ga = da - dn;
        let gb = db - dn;
        let haa = tn - ta;
        let hbb = tn - tb;
        let hab = tn;
        // chain rule onto log scale
        let grad = [alpha * ga, beta * gb];
        let hess = [[alpha * alpha * haa + alpha * ga, alpha * beta * hab, beta * beta * hbb + beta * gb]];
        (grad, hess)
    }
}

/// `lnB(α+H, β+N−H) − lnB(α, β)` for all `0 ≤ H ≤ N ≤ max_n`, via prefix sums.
pub(crate) struct LogRatioTable {
    hits: Vec<f64>,
    misses: Vec<f64>,
    trials: Vec<f64>,
}

impl LogRatioTable {
    pub(crate) fn new(alpha: f64, beta: f64, max_n: u64) -> Self {
        let s = alpha + beta;
        let (p, q) = (alpha / s, beta / s);
        let build = |f: &dyn Fn(f64) -> f64| {
            let mut out = Vec::with_capacity(max_n as usize + 1);
            let mut acc = 0.0;
            out.push(0.0);
            for k in 0..max_n {
                acc += f(k as f64 / s);
                out.push(acc);
            }
            out
        };
        Self { hits: build(&|x| (p + x).ln()), misses: build(&|x| (q + x).ln()), trials: build(&|x| x.ln_1p()) }
    }

    pub(crate) fn get(&self, h: u64, n: u64) -> f64 {
        self.hits[h as usize] + self.misses[(n - h) as usize] - self.trials[n as usize]
    }
}

/// Weighted objective `Σ w_i [lnB(α+H_i, β+N_i−H_i) − lnB(α, β)]`.
#[cfg(test)]
fn objective(h: &[u64], n: &[u64], w: &[f64], alpha: f64, beta: f64) -> f64 {
    Collapsed::new(h, n, w).objective(alpha, beta)
}

#[cfg(test)]
fn derivatives(h: &[u64], n: &[u64], w: &[f64], alpha: f64, beta: f64) -> ([f64; 2], [[f64; 3]; 1]) {
    Collapsed::new(h, n, w).derivatives(alpha, beta)
}

/// Damped Newton ascent on `(log α, log β)` from `start`. The returned point
/// never has a lower objective than `start`.
pub(crate) fn fit(h: &[u64], n: &[u64], w: &[f64], start: (f64, f64)) -> (f64, f64) {
    let data = Collapsed::new(h, n, w);
    let (mut la, mut lb) = (start.0.ln(), start.1.ln());
    let mut current = data.objective(start.0, start.1);
    let scale = data.total.max(1.0);
    for _ in 0..MAX_NEWTON {
        let (a, b) = (la.exp(), lb.exp());
        let (g, [[haa, hab, hbb]]) = data.derivatives(a, b);
        let det = haa * hbb - hab * hab;
        let mut step = if haa < 0.0 && det > 0.0 {
            [-(hbb * g[0] - hab * g[1]) / det, -(haa * g[1] - hab * g[0]) / det]
        } else {
            // not concave here: scaled gradient step
            let s = 1.0 / (haa.abs().max(hbb.abs()) + scale);
            [g[0] * s, g[1] * s]
        };
        // predicted gain of the full step
        let predicted = g[0] * step[0] + g[1] * step[1];
        if predicted <= 1e-12 * (1.0 + current.abs()) {
            break;
        }
        let norm = step[0].hypot(step[1]);
        if norm > 1.0 {
            step = [step[0] / norm, step[1] / norm];
        }
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let (na, nb) = (la + t * step[0], lb + t * step[1]);
            let value = data.objective(na.exp(), nb.exp());
            if value.is_finite() && value >= current {
                let gain = value - current;
                la = na;
                lb = nb;
                current = value;
                improved = gain > 1e-12 * (1.0 + current.abs());
                break;
            }
            t *= 0.5;
        }
        if !improved || t * norm < 1e-12 {
            break;
        }
    }
    (la.exp(), lb.exp())
}
