//! Numerical probes of the parabolic a-priori and embedding inequalities.

use crate::error::{Error, Result};
use crate::grid::PeriodicField;
use crate::norms::{mixed_norm, mollify, DriftField, MixedNormSpec};
use crate::report::{EstimateReport, Verdict};

use super::solver::{solve_kolmogorov, Forcing, KolmogorovProblem, PdeSolveReport};
use super::sobolev::fractional_sobolev_norm;

/// Norms of one solve: `u` in `H^{α+2,p}_q`, `∂_t u` and `f` in `H^{α,p}_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormTable {
    pub alpha: f64,
    pub solution: f64,
    pub time_derivative: f64,
    pub forcing: f64,
    /// `(‖∂_t u‖ + ‖u‖) / ‖f‖`, reported as 0 for zero forcing.
    pub ratio: f64,
    pub warnings: Vec<String>,
}

impl PdeSolveReport {
    /// Window covered by the stored snapshots.
    pub fn window(&self) -> (f64, f64) {
        let t = self.solution.times();
        (t[0], t[t.len() - 1])
    }

    pub fn norm_table(&self, alpha: f64, spec: &MixedNormSpec) -> Result<NormTable> {
        let w = self.window();
        let u = fractional_sobolev_norm(&self.solution, alpha + 2.0, spec, w)?;
        let du = fractional_sobolev_norm(&self.time_derivative, alpha, spec, w)?;
        let f = fractional_sobolev_norm(&self.forcing, alpha, spec, w)?;
        let ratio = if f.value > 0.0 { (du.value + u.value) / f.value } else { 0.0 };
        let warnings = [u.warning, du.warning, f.warning].into_iter().flatten().collect();
        Ok(NormTable {
            alpha,
            solution: u.value,
            time_derivative: du.value,
            forcing: f.value,
            ratio,
            warnings,
        })
    }
}

/// Time window, grid and step shared by a family of solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSetup {
    pub s0: f64,
    pub s1: f64,
    pub n: usize,
    pub dt: f64,
    pub record_every: usize,
}

impl SolveSetup {
    pub fn new(s0: f64, s1: f64, n: usize, dt: f64) -> Self {
        Self {
            s0,
            s1,
            n,
            dt,
            record_every: 1,
        }
    }

    pub fn with_record_every(mut self, k: usize) -> Self {
        self.record_every = k.max(1);
        self
    }

    fn backward(&self, b: DriftField, f: Forcing) -> KolmogorovProblem {
        KolmogorovProblem::backward(b, f, self.s0, self.s1, self.n, self.dt).with_record_every(self.record_every)
    }

    fn forward(&self, b: DriftField, f: Forcing) -> KolmogorovProblem {
        KolmogorovProblem::forward(b, f, self.s0, self.s1, self.n, self.dt).with_record_every(self.record_every)
    }
}

/// Ratio `(‖∂_t u‖ + ‖u‖_{H^{α+2}}) / ‖f‖_{H^α}` of the backward equation for each
/// forcing and each mollification level of `b`.
///
/// With an empty `levels` list `b` is used as given. The spread is the largest
/// max/min ratio across levels over all forcings.
pub fn apriori_probe(
    b: &DriftField,
    forcings: &[(String, Forcing)],
    spec: &MixedNormSpec,
    alpha: f64,
    levels: &[u32],
    setup: &SolveSetup,
) -> Result<EstimateReport> {
    if alpha != 0.0 && alpha != -1.0 {
        return Err(Error::Domain(format!("a-priori probe supports α ∈ {{0, -1}}, got {alpha}")));
    }
    let mut rep = EstimateReport::new("apriori_probe", 0);
    let drifts: Vec<(f64, DriftField)> = if levels.is_empty() {
        vec![(0.0, b.clone())]
    } else {
        levels.iter().map(|&m| Ok((m as f64, mollify(b, m)?))).collect::<Result<_>>()?
    };
    let mut max_ratio: f64 = 0.0;
    let mut spread: f64 = 1.0;
    for (name, f) in forcings {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (m, drift) in &drifts {
            let sol = solve_kolmogorov(&setup.backward(drift.clone(), f.clone()))?;
            let table = sol.norm_table(alpha, spec)?;
            rep.row("m", *m, format!("ratio:{name}"), table.ratio, 0.0);
            for w in &table.warnings {
                rep.note(format!("{name}, m = {m}: {w}"));
            }
            lo = lo.min(table.ratio);
            hi = hi.max(table.ratio);
        }
        max_ratio = max_ratio.max(hi);
        if lo > 0.0 {
            spread = spread.max(hi / lo);
        }
    }
    rep.value("alpha", alpha);
    rep.value("max_ratio", max_ratio);
    rep.value("spread", spread);
    if drifts.len() > 1 {
        rep.check_le("ratio spread across m", spread, 2.0);
    }
    Ok(rep)
}

/// Forward solves of `∂_t u = ½Δu - λu + f`, `u(S0) = 0`, reporting
/// `(‖∂_t u‖ + ½‖∇²u‖ + λ‖u‖) / ‖f‖` in `L^q_t L^p_x` for each `λ`.
pub fn zero_order_probe(
    f: &Forcing,
    lambdas: &[f64],
    spec: &MixedNormSpec,
    setup: &SolveSetup,
) -> Result<EstimateReport> {
    let mut rep = EstimateReport::new("zero_order_probe", 0);
    let d = spec.dim;
    let mut ratios = Vec::new();
    for &lam in lambdas {
        let p = setup.forward(DriftField::zero(d), f.clone()).with_zero_order(lam);
        let sol = solve_kolmogorov(&p)?;
        let w = sol.window();
        let hess = hessian(&sol.solution);
        let fu = mixed_norm(&sol.forcing, spec, w)?;
        let num = mixed_norm(&sol.time_derivative, spec, w)?
            + 0.5 * mixed_norm(&hess, spec, w)?
            + lam * mixed_norm(&sol.solution, spec, w)?;
        let r = if fu > 0.0 { num / fu } else { 0.0 };
        rep.row("lambda", lam, "ratio", r, 0.0);
        ratios.push(r);
    }
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    rep.value("max_ratio", hi);
    rep.value("min_ratio", lo);
    if lo > 0.0 {
        rep.check_le("ratio variation across λ", hi / lo, 2.0);
    }
    Ok(rep)
}

/// All second derivatives of a scalar field as `d²` components.
pub fn hessian(u: &PeriodicField) -> PeriodicField {
    let grid = u.grid();
    let d = u.dim();
    let times = u.times().to_vec();
    let mut out = PeriodicField::zeros(d, u.n(), d * d, times);
    for ti in 0..u.times().len() {
        let spec = grid.to_spectral(u.slice(ti, 0));
        for a in 0..d {
            for b in 0..d {
                let v = grid.second_derivative(&spec, a, b);
                out.slice_mut(ti, a * d + b).copy_from_slice(&v);
            }
        }
    }
    out
}

/// One parabolic embedding inequality to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmbeddingCase {
    /// `‖u‖_{H^{α+1,r}_s}` against the `(p, q)` energy, `1 < d/p+2/q = d/r+2/s+1`.
    Sobolev1 { alpha: f64, p: f64, q: f64, r: f64, s: f64 },
    /// `‖u‖_{H^{α,r}_s}` against the `(p, q)` energy, `2 < d/p+2/q = d/r+2/s+2`.
    Sobolev2 { alpha: f64, p: f64, q: f64, r: f64, s: f64 },
    /// Hölder quotient `‖u(t1)-u(t2)‖_{H^{α+2θ,p}} / |t1-t2|^{1-1/q-θ}`, `0 <= θ < 1-1/q`.
    Morrey { alpha: f64, p: f64, q: f64, theta: f64 },
}

impl EmbeddingCase {
    pub fn label(&self) -> &'static str {
        match self {
            EmbeddingCase::Sobolev1 { .. } => "sobolev1",
            EmbeddingCase::Sobolev2 { .. } => "sobolev2",
            EmbeddingCase::Morrey { .. } => "morrey",
        }
    }

    /// Check the exponent relations for dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        let d = d as f64;
        let open = |v: f64| v > 1.0 && v.is_finite();
        match *self {
            EmbeddingCase::Sobolev1 { p, q, r, s, .. } | EmbeddingCase::Sobolev2 { p, q, r, s, .. } => {
                let shift = if matches!(self, EmbeddingCase::Sobolev1 { .. }) { 1.0 } else { 2.0 };
                if !(open(p) && open(q) && r > p && s > q && r.is_finite() && s.is_finite()) {
                    return Err(Error::Domain(format!(
                        "need 1 < p < r < ∞ and 1 < q < s < ∞, got p={p} q={q} r={r} s={s}"
                    )));
                }
                let lhs = d / p + 2.0 / q;
                let rhs = d / r + 2.0 / s + shift;
                if !(lhs > shift) || (lhs - rhs).abs() > 1e-9 {
                    return Err(Error::Domain(format!(
                        "exponent relation {shift} < d/p+2/q = d/r+2/s+{shift} fails: {lhs} vs {rhs}"
                    )));
                }
            }
            EmbeddingCase::Morrey { p, q, theta, .. } => {
                if !(open(p) && open(q)) || !(theta >= 0.0 && theta < 1.0 - 1.0 / q) {
                    return Err(Error::Domain(format!(
                        "need p, q ∈ (1, ∞) and 0 <= θ < 1-1/q, got p={p} q={q} θ={theta}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Ratio of the left side to the energy `‖∂_t u‖_{H^{α,p}_q} + ‖u‖_{H^{α+2,p}_q}`
/// for each case; Morrey cases take the worst pair among times at multiples of
/// an eighth of the window.
///
/// `u` must vanish at the start of the window (or at its end for terminal data).
pub fn parabolic_embedding_probe(
    u: &PeriodicField,
    dudt: &PeriodicField,
    cases: &[EmbeddingCase],
) -> Result<EstimateReport> {
    let d = u.dim();
    let times = u.times();
    if times.len() < 2 || dudt.times() != times {
        return Err(Error::Data("u and ∂_t u need the same time grid with at least 2 samples".into()));
    }
    let w = (times[0], times[times.len() - 1]);
    let mut rep = EstimateReport::new("parabolic_embedding_probe", 0);
    let energy = |alpha: f64, p: f64, q: f64| -> Result<f64> {
        let spec = MixedNormSpec::new(d, p, q);
        Ok(fractional_sobolev_norm(dudt, alpha, &spec, w)?.value
            + fractional_sobolev_norm(u, alpha + 2.0, &spec, w)?.value)
    };
    let mut worst: f64 = 0.0;
    for case in cases {
        case.validate(d)?;
        let (lhs, rhs) = match *case {
            EmbeddingCase::Sobolev1 { alpha, p, q, r, s } => {
                let l = fractional_sobolev_norm(u, alpha + 1.0, &MixedNormSpec::new(d, r, s), w)?.value;
                (l, energy(alpha, p, q)?)
            }
            EmbeddingCase::Sobolev2 { alpha, p, q, r, s } => {
                let l = fractional_sobolev_norm(u, alpha, &MixedNormSpec::new(d, r, s), w)?.value;
                (l, energy(alpha, p, q)?)
            }
            EmbeddingCase::Morrey { alpha, p, q, theta } => {
                let sample = sample_indices(times, 8);
                let lifted = super::sobolev::bessel_potential(u, alpha + 2.0 * theta);
                let cv = u.grid().cell_volume();
                let expo = 1.0 - 1.0 / q - theta;
                let mut q_max: f64 = 0.0;
                for (i, &a) in sample.iter().enumerate() {
                    for &b in &sample[i + 1..] {
                        let diff: Vec<f64> = lifted
                            .snapshot(a)
                            .iter()
                            .zip(lifted.snapshot(b))
                            .map(|(x, y)| x - y)
                            .collect();
                        let nrm = crate::norms::spec::spatial_norm(&diff, u.components(), cv, p)?;
                        q_max = q_max.max(nrm / (times[b] - times[a]).abs().powf(expo));
                    }
                }
                (q_max, energy(alpha, p, q)?)
            }
        };
        let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        rep.value(format!("{}:lhs", case.label()), lhs);
        rep.value(format!("{}:rhs", case.label()), rhs);
        rep.value(format!("{}:ratio", case.label()), ratio);
        rep.check(
            format!("{} ratio finite", case.label()),
            Verdict::from_bool(ratio.is_finite()),
            format!("{ratio:.6}"),
        );
        worst = worst.max(ratio);
    }
    rep.value("worst_ratio", worst);
    Ok(rep)
}

/// Indices of the stored times closest to `k/parts` of the window, `k = 0..=parts`.
fn sample_indices(times: &[f64], parts: usize) -> Vec<usize> {
    let (a, b) = (times[0], times[times.len() - 1]);
    let mut out: Vec<usize> = (0..=parts)
        .map(|k| {
            let t = a + (b - a) * k as f64 / parts as f64;
            let i = times.partition_point(|&s| s < t).min(times.len() - 1);
            if i > 0 && (times[i - 1] - t).abs() < (times[i] - t).abs() {
                i - 1
            } else {
                i
            }
        })
        .collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::ScalarFn;

    #[test]
    fn zero_forcing_reports_zero_ratio() {
        let setup = SolveSetup::new(0.0, 0.2, 8, 0.01);
        let rep = apriori_probe(
            &DriftField::zero(2),
            &[("zero".into(), Forcing::Zero)],
            &MixedNormSpec::new(2, 2.0, 2.0),
            0.0,
            &[],
            &setup,
        )
        .unwrap();
        assert_eq!(rep.get("max_ratio"), Some(0.0));
    }

    #[test]
    fn linear_in_time_mode_has_closed_form_norms() {
        // u = t cos x1 on [0, 1], d = 2, p = q = 2:
        // ‖cos‖_{L²} = √(2π²), ‖u‖_{H^2} = 2‖cos‖/√3, ‖∂_t u‖ = ‖cos‖.
        let times: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
        let u = PeriodicField::sample(2, 16, 1, times.clone(), |t, x, o| o[0] = t * x[0].cos());
        let du = PeriodicField::sample(2, 16, 1, times, |_, x, o| o[0] = x[0].cos());
        let c2 = (2.0 * std::f64::consts::PI.powi(2)).sqrt();
        let rhs = c2 + 2.0 * c2 / 3f64.sqrt();
        // d/p + 2/q = 2 = d/r + 2/s + 1 with r = s = 4
        let cases = [
            EmbeddingCase::Sobolev1 { alpha: 0.0, p: 2.0, q: 2.0, r: 4.0, s: 4.0 },
            EmbeddingCase::Morrey { alpha: 0.0, p: 2.0, q: 2.0, theta: 0.25 },
        ];
        let rep = parabolic_embedding_probe(&u, &du, &cases).unwrap();
        assert!((rep.get("sobolev1:rhs").unwrap() / rhs - 1.0).abs() < 1e-5);
        // ‖cos x1‖_{L⁴(T²)} = (2π · 2π · 3/8)^{1/4}, ∫ t⁴ = 1/5
        let l4 = (4.0 * std::f64::consts::PI.powi(2) * 3.0 / 8.0).powf(0.25);
        let lhs = 2f64.sqrt() * l4 * 0.2f64.powf(0.25);
        assert!((rep.get("sobolev1:lhs").unwrap() / lhs - 1.0).abs() < 1e-4);
        // worst Morrey pair is the widest: |Δt|^{1-θ-1/2} · ‖cos‖ · (1+1)^{1/4}
        let m = 2f64.powf(0.25) * c2;
        assert!((rep.get("morrey:lhs").unwrap() / m - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exponent_relations_are_enforced() {
        let bad = EmbeddingCase::Sobolev1 { alpha: 0.0, p: 2.0, q: 2.0, r: 3.0, s: 3.0 };
        assert!(bad.validate(3).is_err());
        let good = EmbeddingCase::Sobolev1 { alpha: 0.0, p: 2.0, q: 2.0, r: 3.0, s: 4.0 };
        good.validate(3).unwrap();
        let two = EmbeddingCase::Sobolev2 { alpha: 0.0, p: 1.5, q: 1.5, r: 3.0, s: 6.0 };
        two.validate(3).unwrap();
        assert!(EmbeddingCase::Morrey { alpha: 0.0, p: 2.0, q: 2.0, theta: 0.5 }.validate(3).is_err());
    }

    #[test]
    fn heat_mode_ratio_matches_closed_form() {
        // b = 0, f = cos x1, backward on [0, T]: u = 2(1 - e^{-τ/2}) cos x1, τ = T - t
        let t_end = 1.0;
        let setup = SolveSetup::new(0.0, t_end, 8, 1e-3);
        let rep = apriori_probe(
            &DriftField::zero(2),
            &[("cos".into(), Forcing::Scalar(ScalarFn::cosine(&[1.0, 0.0], 1.0)))],
            &MixedNormSpec::new(2, 2.0, 2.0),
            0.0,
            &[],
            &setup,
        )
        .unwrap();
        let e = |a: f64| (-a * t_end).exp();
        let u2 = 4.0 * (t_end - 4.0 * (1.0 - e(0.5)) + (1.0 - e(1.0)));
        let exact = (2.0 * u2.sqrt() + (1.0 - e(1.0)).sqrt()) / t_end.sqrt();
        let got = rep.get("max_ratio").unwrap();
        assert!((got / exact - 1.0).abs() < 1e-5, "{got} vs {exact}");
    }

    #[test]
    fn zero_order_ratio_is_uniform() {
        let setup = SolveSetup::new(0.0, 1.0, 8, 1e-3).with_record_every(10);
        let f = Forcing::Scalar(ScalarFn::cosine(&[1.0, 1.0], 1.0));
        let rep = zero_order_probe(&f, &[0.0, 1.0, 10.0, 100.0], &MixedNormSpec::new(2, 2.0, 2.0), &setup).unwrap();
        assert!(rep.passed(), "{}", rep.summary());
    }
}
