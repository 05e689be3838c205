//! Verification outcomes: measured values, regressions, checks and tidy CSV rows.

use std::fmt::Write as _;

/// Outcome of an experiment or a single check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ordinary least-squares line `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub name: String,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    /// Standard error of the slope (0 for exact fits or two points).
    pub slope_se: f64,
    pub points: usize,
}

/// OLS fit of `y` against `x`.
pub fn ols(name: impl Into<String>, x: &[f64], y: &[f64]) -> Fit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let slope_se = if x.len() > 2 && sxx > 0.0 {
        (ss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Fit {
        name: name.into(),
        slope,
        intercept,
        residual: (ss / n).sqrt(),
        slope_se,
        points: x.len(),
    }
}

/// Log-log OLS fit of `y ~ C x^slope`.
pub fn loglog(name: impl Into<String>, x: &[f64], y: &[f64]) -> Fit {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ols(name, &lx, &ly)
}

/// One stated tolerance and whether it held.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub detail: String,
    pub outcome: Verdict,
}

/// One tidy row: `quantity` measured at `axis = axis_value`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisRow {
    pub axis: String,
    pub axis_value: f64,
    pub quantity: String,
    pub value: f64,
    pub std_error: f64,
}

/// Result of one verification experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub id: String,
    pub seed: u64,
    pub values: Vec<(String, f64)>,
    pub fits: Vec<Fit>,
    pub checks: Vec<Check>,
    pub rows: Vec<AxisRow>,
    pub notes: Vec<String>,
}

pub const CSV_HEADER: &str = "experiment,seed,axis,axis_value,quantity,value,std_error";

fn num(v: f64) -> String {
    // shortest round-trip form keeps CSV bytes reproducible
    format!("{v:?}")
}

impl EstimateReport {
    pub fn new(id: impl Into<String>, seed: u64) -> Self {
        Self {
            id: id.into(),
            seed,
            values: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn value(&mut self, name: impl Into<String>, v: f64) -> &mut Self {
        self.values.push((name.into(), v));
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn fit(&mut self, fit: Fit) -> &mut Self {
        self.fits.push(fit);
        self
    }

    pub fn get_fit(&self, name: &str) -> Option<&Fit> {
        self.fits.iter().find(|f| f.name == name)
    }

    pub fn check(&mut self, name: impl Into<String>, outcome: Verdict, detail: impl Into<String>) -> &mut Self {
        self.checks.push(Check {
            name: name.into(),
            detail: detail.into(),
            outcome,
        });
        self
    }

    /// Record `value <= bound`.
    pub fn check_le(&mut self, name: impl Into<String>, value: f64, bound: f64) -> &mut Self {
        let ok = value <= bound;
        self.check(name, Verdict::from_bool(ok), format!("{value:.6e} <= {bound:.6e}"))
    }

    /// Record `value >= bound`.
    pub fn check_ge(&mut self, name: impl Into<String>, value: f64, bound: f64) -> &mut Self {
        let ok = value >= bound;
        self.check(name, Verdict::from_bool(ok), format!("{value:.6e} >= {bound:.6e}"))
    }

    pub fn row(
        &mut self,
        axis: impl Into<String>,
        axis_value: f64,
        quantity: impl Into<String>,
        value: f64,
        std_error: f64,
    ) -> &mut Self {
        self.rows.push(AxisRow {
            axis: axis.into(),
            axis_value,
            quantity: quantity.into(),
            value,
            std_error,
        });
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    /// Pass only if every check passed; any inconclusive check (and no failure) gives inconclusive.
    pub fn verdict(&self) -> Verdict {
        if self.checks.iter().any(|c| c.outcome == Verdict::Fail) {
            Verdict::Fail
        } else if self.checks.is_empty() || self.checks.iter().any(|c| c.outcome == Verdict::Inconclusive) {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict() == Verdict::Pass
    }

    /// Tidy rows (axis rows, then scalar values and fits on the `summary` axis) without header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        let mut line = |axis: &str, av: f64, q: &str, v: f64, se: f64| {
            let _ = writeln!(out, "{},{},{},{},{},{},{}", self.id, self.seed, axis, num(av), q, num(v), num(se));
        };
        for r in &self.rows {
            line(&r.axis, r.axis_value, &r.quantity, r.value, r.std_error);
        }
        for (n, v) in &self.values {
            line("summary", 0.0, n, *v, 0.0);
        }
        for f in &self.fits {
            line("fit", 0.0, &format!("{}.slope", f.name), f.slope, f.slope_se);
            line("fit", 0.0, &format!("{}.intercept", f.name), f.intercept, 0.0);
            line("fit", 0.0, &format!("{}.residual", f.name), f.residual, 0.0);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{CSV_HEADER}\n{}", self.csv_rows())
    }

    /// Human-readable summary block.
    pub fn summary(&self) -> String {
        let mut s = format!("[{}] {} (seed {})\n", self.verdict(), self.id, self.seed);
        for (n, v) in &self.values {
            let _ = writeln!(s, "  {n} = {v:.6e}");
        }
        for f in &self.fits {
            let _ = writeln!(
                s,
                "  fit {}: slope {:.4} ± {:.4}, intercept {:.4}, residual {:.3e} ({} points)",
                f.name, f.slope, f.slope_se, f.intercept, f.residual, f.points
            );
        }
        for c in &self.checks {
            let _ = writeln!(s, "  check {} [{}]: {}", c.name, c.outcome, c.detail);
        }
        for n in &self.notes {
            let _ = writeln!(s, "  note: {n}");
        }
        s
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let (s, _) = chunked_sums(values.iter().copied());
    let mean = s / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Sum in fixed chunks of 1024 (order-stable reduction); also returns the count.
pub fn chunked_sums<I: Iterator<Item = f64>>(it: I) -> (f64, usize) {
    let mut total = 0.0;
    let mut chunk = 0.0;
    let mut n = 0;
    for v in it {
        chunk += v;
        n += 1;
        if n % 1024 == 0 {
            total += chunk;
            chunk = 0.0;
        }
    }
    (total + chunk, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_has_zero_residual() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let f = ols("l", &x, &y);
        assert!((f.slope - 3.0).abs() < 1e-14);
        assert!(f.residual < 1e-14);
    }

    #[test]
    fn verdict_logic() {
        let mut r = EstimateReport::new("x", 1);
        assert_eq!(r.verdict(), Verdict::Inconclusive);
        r.check_le("a", 1.0, 2.0);
        assert_eq!(r.verdict(), Verdict::Pass);
        r.check("b", Verdict::Inconclusive, "");
        assert_eq!(r.verdict(), Verdict::Inconclusive);
        r.check_ge("c", 1.0, 2.0);
        assert_eq!(r.verdict(), Verdict::Fail);
        assert!(r.to_csv().starts_with(CSV_HEADER));
    }
}
