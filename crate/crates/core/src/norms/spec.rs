use crate::error::{domain, Error, Result};
use crate::grid::PeriodicField;

/// Exponent triple `(s, p, q)` of the space `H^{s,p}_q` in dimension `d`.
///
/// `p` and `q` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedNormSpec {
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

impl MixedNormSpec {
    pub fn new(dim: usize, p: f64, q: f64) -> Self {
        Self { dim, p, q, s: 0.0 }
    }

    pub fn with_order(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    /// `d/p + 2/q` with `1/∞ = 0`.
    pub fn scaling(&self) -> f64 {
        self.dim as f64 * recip(self.p) + 2.0 * recip(self.q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return domain("dimension must be positive");
        }
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if v.is_nan() || v <= 1.0 {
                return domain(format!("exponent {name} = {v} must lie in (1, ∞]"));
            }
        }
        if !self.s.is_finite() {
            return domain("derivative order must be finite");
        }
        Ok(())
    }
}

pub(crate) fn recip(v: f64) -> f64 {
    if v.is_infinite() {
        0.0
    } else {
        1.0 / v
    }
}

/// Sign class of the criticality index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criticality {
    AboveCritical,
    Critical,
    BelowCritical,
}

impl Criticality {
    pub fn label(self) -> &'static str {
        match self {
            Criticality::AboveCritical => "above-critical",
            Criticality::Critical => "critical",
            Criticality::BelowCritical => "below-critical",
        }
    }

    /// The two names found in the literature for this regime: the first
    /// follows the regularity convention (more integrability is "sub"),
    /// the second the integrability convention.
    pub fn literature_names(self) -> (&'static str, &'static str) {
        match self {
            Criticality::AboveCritical => ("subcritical", "supercritical"),
            Criticality::Critical => ("critical", "critical"),
            Criticality::BelowCritical => ("supercritical", "subcritical"),
        }
    }
}

/// Criticality index `κ = 1 - d/p - 2/q` with its classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpsIndex {
    pub kappa: f64,
    pub class: Criticality,
}

/// Tolerance under which `κ` counts as zero.
pub const CRITICAL_TOL: f64 = 1e-12;

pub fn lps_index(spec: &MixedNormSpec) -> Result<LpsIndex> {
    spec.validate()?;
    let kappa = 1.0 - spec.scaling();
    let class = if kappa.abs() <= CRITICAL_TOL {
        Criticality::Critical
    } else if kappa > 0.0 {
        Criticality::AboveCritical
    } else {
        Criticality::BelowCritical
    };
    Ok(LpsIndex { kappa, class })
}

/// Indices of the stored times inside `[s, t]`.
pub(crate) fn window_indices(times: &[f64], window: (f64, f64)) -> Vec<usize> {
    let (s, t) = window;
    let tol = 1e-9 * (1.0 + s.abs().max(t.abs()));
    (0..times.len())
        .filter(|&i| times[i] >= s - tol && times[i] <= t + tol)
        .collect()
}

/// Spatial `L^p` norm of a component-major snapshot (Euclidean magnitude across components).
pub(crate) fn spatial_norm(snapshot: &[f64], components: usize, cell_volume: f64, p: f64) -> Result<f64> {
    let len = snapshot.len() / components;
    let mut acc = 0.0;
    let mut max: f64 = 0.0;
    for idx in 0..len {
        let mut m2 = 0.0;
        for c in 0..components {
            let v = snapshot[c * len + idx];
            if !v.is_finite() {
                return Err(Error::Data(format!("non-finite sample at node {idx}")));
            }
            m2 += v * v;
        }
        let m = m2.sqrt();
        if p.is_infinite() {
            max = max.max(m);
        } else {
            acc += m.powf(p);
        }
    }
    Ok(if p.is_infinite() {
        max
    } else {
        (acc * cell_volume).powf(1.0 / p)
    })
}

/// Temporal `L^q` norm of per-time values on a uniform grid (trapezoid rule).
pub(crate) fn temporal_norm(values: &[f64], times: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return values.iter().cloned().fold(0.0, f64::max);
    }
    let mut acc = 0.0;
    for i in 1..values.len() {
        let h = times[i] - times[i - 1];
        acc += 0.5 * h * (values[i].powf(q) + values[i - 1].powf(q));
    }
    acc.powf(1.0 / q)
}

/// `(∫_S^T (∫|f|^p dx)^{q/p} dt)^{1/q}` over the stored samples in the window.
///
/// A field with a single time sample is treated as constant in time over the
/// window. Spatial integrals use the (spectrally accurate) periodic rectangle
/// rule, time integrals the trapezoid rule.
pub fn mixed_norm(field: &PeriodicField, spec: &MixedNormSpec, window: (f64, f64)) -> Result<f64> {
    spec.validate()?;
    let (s, t) = window;
    if !(t > s) {
        return Err(Error::Data(format!("empty window [{s}, {t}]")));
    }
    let cv = field.grid().cell_volume();
    if field.times().len() == 1 {
        let sp = spatial_norm(field.snapshot(0), field.components(), cv, spec.p)?;
        return Ok(sp * (t - s).powf(recip(spec.q)));
    }
    let idx = window_indices(field.times(), window);
    if idx.len() < 2 {
        return Err(Error::Data(format!(
            "window [{s}, {t}] holds {} time samples, need at least 2",
            idx.len()
        )));
    }
    let mut vals = Vec::with_capacity(idx.len());
    let mut times = Vec::with_capacity(idx.len());
    for &i in &idx {
        vals.push(spatial_norm(field.snapshot(i), field.components(), cv, spec.p)?);
        times.push(field.times()[i]);
    }
    Ok(temporal_norm(&vals, &times, spec.q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn index_examples() {
        let inf = f64::INFINITY;
        let a = lps_index(&MixedNormSpec::new(3, 3.0, inf)).unwrap();
        assert_eq!(a.class, Criticality::Critical);
        assert_eq!(a.kappa, 0.0);
        let b = lps_index(&MixedNormSpec::new(3, inf, inf)).unwrap();
        assert_eq!(b.kappa, 1.0);
        assert_eq!(b.class, Criticality::AboveCritical);
        let c = lps_index(&MixedNormSpec::new(3, 5.0, 5.0)).unwrap();
        assert_eq!(c.class, Criticality::Critical);
        assert!(lps_index(&MixedNormSpec::new(3, 1.0, 2.0)).is_err());
        assert!(lps_index(&MixedNormSpec::new(3, f64::NAN, 2.0)).is_err());
    }

    #[test]
    fn cosine_mode_norm() {
        let times: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let f = PeriodicField::sample(3, 8, 1, times, |_, x, o| o[0] = x[0].cos());
        let v = mixed_norm(&f, &MixedNormSpec::new(3, 2.0, 2.0), (0.0, 1.0)).unwrap();
        let exact = ((2.0 * PI).powi(3) / 2.0).sqrt();
        assert!((v - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn constant_and_zero() {
        let times: Vec<f64> = (0..5).map(|i| i as f64 * 0.5).collect();
        let f = PeriodicField::sample(2, 8, 1, times.clone(), |_, _, o| o[0] = 3.0);
        let spec = MixedNormSpec::new(2, 4.0, 3.0);
        let v = mixed_norm(&f, &spec, (0.0, 2.0)).unwrap();
        let vol = (2.0 * PI).powi(2);
        let exact = 3.0 * vol.powf(0.25) * 2.0f64.powf(1.0 / 3.0);
        assert!((v - exact).abs() < 1e-12 * exact);
        let z = PeriodicField::sample(2, 8, 1, times, |_, _, o| o[0] = 0.0);
        assert_eq!(mixed_norm(&z, &spec, (0.0, 2.0)).unwrap(), 0.0);
        assert!(mixed_norm(&z, &spec, (1.0, 1.0)).is_err());
    }
}
