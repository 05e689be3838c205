//! Derivative processes along stored paths: the variational flow `∇X`, its
//! time-ordered series, and the Malliavin derivative `D_σX`.
//!
//! All three replay each path on the regenerated noise, so the states seen
//! here are bitwise those of the ensemble.

use rayon::prelude::*;

use super::ensemble::FlowEnsemble;
use super::euler::{integrate_path, steps_between};
use crate::error::{Error, Result};
use crate::grid::MAX_DIM;

/// Largest series order supported by [`chaos_series_gradient`].
pub const MAX_SERIES_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeKind {
    Spatial,
    Malliavin,
}

/// `d × d` matrices per (σ, checkpoint, point, path), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeRecord {
    pub kind: DerivativeKind,
    /// Base times σ (empty for the spatial derivative).
    pub sigmas: Vec<f64>,
    pub checkpoints: Vec<f64>,
    pub(crate) dim: usize,
    pub(crate) points: usize,
    pub(crate) paths: usize,
    pub(crate) data: Vec<f64>,
}

impl DerivativeRecord {
    fn zeros(kind: DerivativeKind, sigmas: Vec<f64>, ens: &FlowEnsemble) -> Self {
        let d = ens.dim();
        let ns = sigmas.len().max(1);
        let len = ns * ens.checkpoints().len() * ens.point_count() * ens.paths() * d * d;
        Self {
            kind,
            sigmas,
            checkpoints: ens.checkpoints().to_vec(),
            dim: d,
            points: ens.point_count(),
            paths: ens.paths(),
            data: vec![0.0; len],
        }
    }

    fn offset(&self, sigma: usize, checkpoint: usize, point: usize, path: usize) -> usize {
        let nc = self.checkpoints.len();
        (((sigma * nc + checkpoint) * self.points + point) * self.paths + path) * self.dim * self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Matrix for base time index `sigma` (0 for the spatial derivative).
    pub fn matrix(&self, sigma: usize, checkpoint: usize, point: usize, path: usize) -> &[f64] {
        let o = self.offset(sigma, checkpoint, point, path);
        &self.data[o..o + self.dim * self.dim]
    }

    /// Sum with another record of the same shape.
    pub fn add(&self, other: &DerivativeRecord) -> DerivativeRecord {
        assert_eq!(self.data.len(), other.data.len());
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &DerivativeRecord) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[inline]
pub(crate) fn identity(d: usize, out: &mut [f64]) {
    out[..d * d].fill(0.0);
    for i in 0..d {
        out[i * d + i] = 1.0;
    }
}

/// `m ← m + dt · b · src`, with `src` possibly equal to `m` (copied first).
#[inline]
pub(crate) fn step_matrix(d: usize, b: &[f64], src: &[f64], dt: f64, m: &mut [f64]) {
    let mut tmp = [0.0; MAX_DIM * MAX_DIM];
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += b[i * d + k] * src[k * d + j];
            }
            tmp[i * d + j] = s;
        }
    }
    for (a, t) in m[..d * d].iter_mut().zip(&tmp[..d * d]) {
        *a += dt * t;
    }
}

/// Replay every (point, path) of `ens`, calling `per_path(point, path, replay)`
/// where `replay(visit)` re-integrates the path with `visit(k, t, x)` before each step.
fn replay_all<T, F>(ens: &FlowEnsemble, per_path: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, usize, &mut dyn FnMut(&mut dyn FnMut(usize, f64, &[f64])) -> Result<()>) -> Result<T> + Sync,
{
    let d = ens.dim();
    let steps = steps_between(ens.start(), ens.end(), ens.dt())?;
    let first = ens.source().step_index(ens.start())?;
    let jobs: Vec<(usize, usize)> = (0..ens.point_count())
        .flat_map(|p| (0..ens.paths()).map(move |m| (p, m)))
        .collect();
    jobs.par_iter()
        .map(|&(pi, m)| {
            let mut replay = |visit: &mut dyn FnMut(usize, f64, &[f64])| -> Result<()> {
                let mut x = ens.point(pi).to_vec();
                debug_assert_eq!(x.len(), d);
                integrate_path(ens.drift(), ens.source(), m as u64, &mut x, ens.start(), first, steps, |k, t, xk, _| {
                    visit(k, t, xk)
                })?;
                visit(steps, ens.end(), &x);
                Ok(())
            };
            per_path(pi, m, &mut replay)
        })
        .collect()
}

/// `∇X_{s,·}` by `J_{k+1} = J_k + ∇b(t_k, X_k) J_k dt`, `J_0 = I`.
pub fn variational_flow(ens: &FlowEnsemble) -> Result<DerivativeRecord> {
    ens.drift().require_gradient()?;
    let d = ens.dim();
    let dd = d * d;
    let dt = ens.dt();
    let drift = ens.drift();
    let zero = drift.is_zero();
    let cp: Vec<usize> = (0..ens.checkpoints().len()).map(|c| ens.checkpoint_step(c)).collect();
    let per = replay_all(ens, |_, _, replay| {
        let mut out = vec![0.0; cp.len() * dd];
        let mut j = [0.0; MAX_DIM * MAX_DIM];
        identity(d, &mut j);
        let mut b = [0.0; MAX_DIM * MAX_DIM];
        let mut next = 0;
        replay(&mut |k, t, x| {
            while next < cp.len() && cp[next] == k {
                out[next * dd..(next + 1) * dd].copy_from_slice(&j[..dd]);
                next += 1;
            }
            if !zero && k < *cp.last().unwrap_or(&0) {
                drift.jacobian(t, x, &mut b);
                let src = j;
                step_matrix(d, &b, &src, dt, &mut j);
            }
        })?;
        Ok(out)
    })?;
    let mut rec = DerivativeRecord::zeros(DerivativeKind::Spatial, Vec::new(), ens);
    scatter(&mut rec, ens, 1, per, dd);
    Ok(rec)
}

fn scatter(rec: &mut DerivativeRecord, ens: &FlowEnsemble, nsig: usize, per: Vec<Vec<f64>>, dd: usize) {
    let nc = ens.checkpoints().len();
    let paths = ens.paths();
    for (j, v) in per.into_iter().enumerate() {
        let (pi, m) = (j / paths, j % paths);
        for si in 0..nsig {
            for c in 0..nc {
                let o = rec.offset(si, c, pi, m);
                let src = (si * nc + c) * dd;
                rec.data[o..o + dd].copy_from_slice(&v[src..src + dd]);
            }
        }
    }
}

/// Terms of the time-ordered series of `∇X`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRecord {
    /// `terms[n]` is the `n`-fold time-ordered integral of `∇b` products.
    pub terms: Vec<DerivativeRecord>,
}

impl SeriesRecord {
    pub fn n_max(&self) -> usize {
        self.terms.len() - 1
    }

    /// Partial sum `S_n = Σ_{j≤n} term_j`.
    pub fn partial_sum(&self, n: usize) -> DerivativeRecord {
        let mut acc = self.terms[0].clone();
        for t in &self.terms[1..=n] {
            acc = acc.add(t);
        }
        acc
    }
}

/// Terms `∫_{Δ_n} ∇b(t_n, X_{t_n}) ⋯ ∇b(t_1, X_{t_1}) dt` by left-endpoint
/// time-ordered sums on the simulation grid (strictly increasing indices).
///
/// With `T_0 = I`, each step applies `T_n ← T_n + dt ∇b_k T_{n-1}` for
/// `n = n_max, …, 1`, so the full sum of all orders equals the Euler
/// variational product exactly.
pub fn chaos_series_gradient(ens: &FlowEnsemble, n_max: usize) -> Result<SeriesRecord> {
    ens.drift().require_gradient()?;
    let steps = steps_between(ens.start(), ens.end(), ens.dt())?;
    if n_max > MAX_SERIES_ORDER || n_max > steps {
        return Err(Error::Domain(format!(
            "series order {n_max} exceeds the supported maximum ({MAX_SERIES_ORDER}) or the {steps} grid steps"
        )));
    }
    let d = ens.dim();
    let dd = d * d;
    let dt = ens.dt();
    let drift = ens.drift();
    let zero = drift.is_zero();
    let nt = n_max + 1;
    let cp: Vec<usize> = (0..ens.checkpoints().len()).map(|c| ens.checkpoint_step(c)).collect();
    let ncp = cp.len();
    let per = replay_all(ens, |_, _, replay| {
        // out layout: [term][checkpoint][dd]
        let mut out = vec![0.0; nt * ncp * dd];
        let mut terms = vec![0.0; nt * dd];
        identity(d, &mut terms[..dd]);
        let mut b = [0.0; MAX_DIM * MAX_DIM];
        let mut next = 0;
        let last = *cp.last().unwrap_or(&0);
        replay(&mut |k, t, x| {
            while next < ncp && cp[next] == k {
                for n in 0..nt {
                    let o = (n * ncp + next) * dd;
                    out[o..o + dd].copy_from_slice(&terms[n * dd..(n + 1) * dd]);
                }
                next += 1;
            }
            if zero || k >= last {
                return;
            }
            drift.jacobian(t, x, &mut b);
            for n in (1..nt).rev() {
                let (lo, hi) = terms.split_at_mut(n * dd);
                step_matrix(d, &b, &lo[(n - 1) * dd..], dt, &mut hi[..dd]);
            }
        })?;
        Ok(out)
    })?;
    let mut records: Vec<DerivativeRecord> = (0..nt)
        .map(|_| DerivativeRecord::zeros(DerivativeKind::Spatial, Vec::new(), ens))
        .collect();
    let paths = ens.paths();
    for (j, v) in per.into_iter().enumerate() {
        let (pi, m) = (j / paths, j % paths);
        for (n, rec) in records.iter_mut().enumerate() {
            for c in 0..ncp {
                let o = rec.offset(0, c, pi, m);
                let src = (n * ncp + c) * dd;
                rec.data[o..o + dd].copy_from_slice(&v[src..src + dd]);
            }
        }
    }
    Ok(SeriesRecord { terms: records })
}

/// Default Malliavin base times: 8 equispaced points in `[s, t]` (both ends included).
pub fn default_sigmas(s: f64, t: f64, dt: f64) -> Vec<f64> {
    let steps = ((t - s) / dt).round() as usize;
    (0..8)
        .map(|i| s + ((i * steps) as f64 / 7.0).round() * dt)
        .collect()
}

/// `D_σX_t`: `D_σX_σ = I`, `D_σX_{k+1} = D_σX_k + ∇b(t_k, X_k) D_σX_k dt`; zero for `σ > t`.
pub fn malliavin_derivative(ens: &FlowEnsemble, sigmas: &[f64]) -> Result<DerivativeRecord> {
    ens.drift().require_gradient()?;
    let d = ens.dim();
    let dd = d * d;
    let dt = ens.dt();
    let drift = ens.drift();
    let zero = drift.is_zero();
    let sig_steps: Vec<usize> = sigmas
        .iter()
        .map(|&sg| {
            steps_between(ens.start(), sg, dt)
                .map_err(|_| Error::Domain(format!("σ = {sg} is not aligned with the flow grid")))
        })
        .collect::<Result<_>>()?;
    let steps = steps_between(ens.start(), ens.end(), dt)?;
    if sig_steps.iter().any(|&k| k > steps) {
        return Err(Error::Domain("σ outside the flow window".into()));
    }
    let cp: Vec<usize> = (0..ens.checkpoints().len()).map(|c| ens.checkpoint_step(c)).collect();
    let ncp = cp.len();
    let ns = sigmas.len();
    let per = replay_all(ens, |_, _, replay| {
        // out layout: [sigma][checkpoint][dd]
        let mut out = vec![0.0; ns * ncp * dd];
        let mut mats = vec![0.0; ns * dd];
        for si in 0..ns {
            identity(d, &mut mats[si * dd..(si + 1) * dd]);
        }
        let mut b = [0.0; MAX_DIM * MAX_DIM];
        let mut next = 0;
        let last = *cp.last().unwrap_or(&0);
        replay(&mut |k, t, x| {
            while next < ncp && cp[next] == k {
                for si in 0..ns {
                    if sig_steps[si] <= k {
                        let o = (si * ncp + next) * dd;
                        out[o..o + dd].copy_from_slice(&mats[si * dd..(si + 1) * dd]);
                    }
                }
                next += 1;
            }
            if zero || k >= last {
                return;
            }
            let mut have_b = false;
            for si in 0..ns {
                if sig_steps[si] <= k {
                    if !have_b {
                        drift.jacobian(t, x, &mut b);
                        have_b = true;
                    }
                    let m = &mut mats[si * dd..(si + 1) * dd];
                    let src: Vec<f64> = m.to_vec();
                    step_matrix(d, &b, &src, dt, m);
                }
            }
        })?;
        Ok(out)
    })?;
    let mut rec = DerivativeRecord::zeros(DerivativeKind::Malliavin, sigmas.to_vec(), ens);
    scatter(&mut rec, ens, ns, per, dd);
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{simulate_flow, FlowConfig};
    use crate::norms::DriftField;

    fn ensemble(b: &DriftField) -> FlowEnsemble {
        let cfg = FlowConfig::new(0.0, 0.4, 0.01, 4, 5).with_checkpoints(&[0.2]);
        simulate_flow(b, &cfg, &[1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn zero_drift_gives_identity() {
        let ens = ensemble(&DriftField::zero(3));
        let j = variational_flow(&ens).unwrap();
        let sig = malliavin_derivative(&ens, &[0.0, 0.1, 0.3]).unwrap();
        let c = ens.checkpoint_index(0.2).unwrap();
        let mut id = [0.0; 9];
        identity(3, &mut id);
        assert_eq!(j.matrix(0, c, 0, 2), &id[..]);
        assert_eq!(sig.matrix(1, c, 0, 2), &id[..]);
        assert_eq!(sig.matrix(2, c, 0, 2), &[0.0; 9][..]);
        let series = chaos_series_gradient(&ens, 3).unwrap();
        for n in 1..=3 {
            assert!(series.terms[n].data.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn full_series_reproduces_euler_product() {
        let b = DriftField::taylor_green(3, 1.0);
        let cfg = FlowConfig::new(0.0, 0.05, 0.01, 3, 2);
        let ens = simulate_flow(&b, &cfg, &[0.3, 1.0, 2.0]).unwrap();
        let j = variational_flow(&ens).unwrap();
        let s = chaos_series_gradient(&ens, 5).unwrap();
        // five steps: orders above 5 vanish
        assert!(s.partial_sum(5).max_abs_diff(&j) < 1e-14);
        assert!(chaos_series_gradient(&ens, 6).is_err());
    }

    #[test]
    fn malliavin_product_identity() {
        let b = DriftField::taylor_green(2, 1.0);
        let cfg = FlowConfig::new(0.0, 0.5, 0.01, 3, 9).with_checkpoints(&[0.3]);
        let ens = simulate_flow(&b, &cfg, &[0.5, 1.5]).unwrap();
        let rec = malliavin_derivative(&ens, &[0.1, 0.3]).unwrap();
        let c_t = ens.checkpoint_index(0.5).unwrap();
        let c_mid = ens.checkpoint_index(0.3).unwrap();
        for m in 0..3 {
            let a = rec.matrix(0, c_t, 0, m);
            let bm = rec.matrix(1, c_t, 0, m);
            let inner = rec.matrix(0, c_mid, 0, m);
            for i in 0..2 {
                for j in 0..2 {
                    let mut rhs = 0.0;
                    for k in 0..2 {
                        let e = inner[k * 2 + j] - if k == j { 1.0 } else { 0.0 };
                        rhs += bm[i * 2 + k] * e;
                    }
                    assert!((a[i * 2 + j] - bm[i * 2 + j] - rhs).abs() < 1e-13);
                }
            }
        }
    }
}
