use rayon::prelude::*;

use super::euler::{integrate_path, steps_between};
use crate::error::{Error, Result};
use crate::norms::DriftField;
use crate::rng::BrownianSource;

/// Parameters of a flow simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub s: f64,
    pub t: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    /// Times at which states are kept; `t` is always included.
    pub checkpoints: Vec<f64>,
    /// Pair paths `(2i, 2i+1)` with opposite noise.
    pub antithetic: bool,
    /// Start of the noise grid (defaults to `s`). Flows started at different
    /// times share noise when they share this origin.
    pub noise_origin: Option<f64>,
    /// Flag paths whose sup-distance from the start exceeds this bound.
    pub escape_bound: Option<f64>,
}

impl FlowConfig {
    pub fn new(s: f64, t: f64, dt: f64, paths: usize, seed: u64) -> Self {
        Self {
            s,
            t,
            dt,
            paths,
            seed,
            checkpoints: Vec::new(),
            antithetic: false,
            noise_origin: None,
            escape_bound: None,
        }
    }

    pub fn with_checkpoints(mut self, times: &[f64]) -> Self {
        self.checkpoints = times.to_vec();
        self
    }

    pub fn with_noise_origin(mut self, origin: f64) -> Self {
        self.noise_origin = Some(origin);
        self
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn with_escape_bound(mut self, bound: f64) -> Self {
        self.escape_bound = Some(bound);
        self
    }

    pub fn source(&self, dim: usize) -> BrownianSource {
        BrownianSource::new(self.seed, dim, self.dt, self.noise_origin.unwrap_or(self.s))
            .with_antithetic(self.antithetic)
    }
}

/// Monte Carlo ensemble of flow paths `X_{s,·}^x` with common noise across initial points.
///
/// States are kept at the checkpoints, laid out `[checkpoint][point][path][d]`.
/// Brownian increments are not stored: they are regenerated on demand from
/// the counter-based source, which reproduces them bitwise.
#[derive(Debug, Clone)]
pub struct FlowEnsemble {
    pub(crate) drift: DriftField,
    pub(crate) source: BrownianSource,
    pub(crate) s: f64,
    pub(crate) t: f64,
    pub(crate) dim: usize,
    pub(crate) points: Vec<f64>,
    pub(crate) paths: usize,
    pub(crate) checkpoints: Vec<f64>,
    pub(crate) checkpoint_steps: Vec<usize>,
    pub(crate) states: Vec<f64>,
    pub(crate) escaped: usize,
    pub(crate) increment_sums: Vec<f64>,
    pub(crate) increment_count: u64,
}

fn normalise_checkpoints(s: f64, t: f64, dt: f64, times: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
    let mut pairs: Vec<(usize, f64)> = Vec::new();
    for &c in times.iter().chain(std::iter::once(&t)) {
        if c < s - 1e-12 || c > t + 1e-12 {
            return Err(Error::Domain(format!("checkpoint {c} outside [{s}, {t}]")));
        }
        let k = steps_between(s, c.max(s), dt)
            .map_err(|_| Error::Domain(format!("checkpoint {c} is not aligned with s + k·dt")))?;
        pairs.push((k, c));
    }
    pairs.sort_by_key(|p| p.0);
    pairs.dedup_by_key(|p| p.0);
    Ok((
        pairs.iter().map(|p| s + p.0 as f64 * dt).collect(),
        pairs.iter().map(|p| p.0).collect(),
    ))
}

/// Simulate `X_{s,t}^x` by Euler-Maruyama from every point in `xs` (flat, `d` per point).
pub fn simulate_flow(b: &DriftField, cfg: &FlowConfig, xs: &[f64]) -> Result<FlowEnsemble> {
    let d = b.dim();
    if xs.is_empty() || xs.len() % d != 0 {
        return Err(Error::Domain("initial points must be a non-empty multiple of d".into()));
    }
    if cfg.paths == 0 {
        return Err(Error::Domain("path count must be positive".into()));
    }
    let steps = steps_between(cfg.s, cfg.t, cfg.dt)?;
    let (checkpoints, checkpoint_steps) = normalise_checkpoints(cfg.s, cfg.t, cfg.dt, &cfg.checkpoints)?;
    let source = cfg.source(d);
    let first = source.step_index(cfg.s)?;
    let npts = xs.len() / d;
    let ncp = checkpoints.len();
    let paths = cfg.paths;

    // per (point, path): states at all checkpoints, escape flag, increment sums
    type PathOut = (Vec<f64>, bool, Vec<f64>);
    let jobs: Vec<(usize, usize)> = (0..npts).flat_map(|p| (0..paths).map(move |m| (p, m))).collect();
    let results: Vec<Result<PathOut>> = jobs
        .par_iter()
        .map(|&(pi, m)| {
            let x0 = &xs[pi * d..(pi + 1) * d];
            let mut x = x0.to_vec();
            let mut out = vec![0.0; ncp * d];
            let mut next = 0;
            let mut escaped = false;
            let mut sums = vec![0.0; d];
            let track_noise = pi == 0;
            integrate_path(b, &source, m as u64, &mut x, cfg.s, first, steps, |k, _, xk, dw| {
                while next < ncp && checkpoint_steps[next] == k {
                    out[next * d..(next + 1) * d].copy_from_slice(xk);
                    next += 1;
                }
                if let Some(bound) = cfg.escape_bound {
                    if xk.iter().zip(x0).any(|(a, b)| (a - b).abs() > bound) {
                        escaped = true;
                    }
                }
                if track_noise {
                    for a in 0..d {
                        sums[a] += dw[a];
                    }
                }
            })?;
            while next < ncp {
                out[next * d..(next + 1) * d].copy_from_slice(&x);
                next += 1;
            }
            if let Some(bound) = cfg.escape_bound {
                if x.iter().zip(x0).any(|(a, b)| (a - b).abs() > bound) {
                    escaped = true;
                }
            }
            Ok((out, escaped, sums))
        })
        .collect();

    let mut states = vec![0.0; ncp * npts * paths * d];
    let mut escaped = 0;
    let mut increment_sums = vec![0.0; d];
    for (j, r) in results.into_iter().enumerate() {
        let (out, esc, sums) = r?;
        let (pi, m) = jobs[j];
        for c in 0..ncp {
            let base = ((c * npts + pi) * paths + m) * d;
            states[base..base + d].copy_from_slice(&out[c * d..(c + 1) * d]);
        }
        escaped += esc as usize;
        if pi == 0 {
            for a in 0..d {
                increment_sums[a] += sums[a];
            }
        }
    }
    Ok(FlowEnsemble {
        drift: b.clone(),
        source,
        s: cfg.s,
        t: cfg.t,
        dim: d,
        points: xs.to_vec(),
        paths,
        checkpoints,
        checkpoint_steps,
        states,
        escaped,
        increment_sums,
        increment_count: (paths * steps) as u64,
    })
}

/// Continue the paths of `ens` from checkpoint `r` to `t_end` on the same noise stream.
///
/// The result is indexed like `ens` (same points and path numbers) and holds
/// `X_{r,·} ∘ X_{s,r}` at its checkpoints in `[r, t_end]`.
pub fn restart_flow(ens: &FlowEnsemble, r: f64, t_end: f64, checkpoints: &[f64]) -> Result<FlowEnsemble> {
    let ci = ens.checkpoint_index(r)?;
    let d = ens.dim;
    let dt = ens.source.dt();
    let steps = steps_between(r, t_end, dt)?;
    let (cps, cp_steps) = normalise_checkpoints(r, t_end, dt, checkpoints)?;
    let first = ens.source.step_index(r)?;
    let npts = ens.points.len() / d;
    let paths = ens.paths;
    let ncp = cps.len();
    let jobs: Vec<(usize, usize)> = (0..npts).flat_map(|p| (0..paths).map(move |m| (p, m))).collect();
    let results: Vec<Result<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(pi, m)| {
            let mut x = ens.state(ci, pi, m).to_vec();
            let mut out = vec![0.0; ncp * d];
            let mut next = 0;
            integrate_path(&ens.drift, &ens.source, m as u64, &mut x, r, first, steps, |k, _, xk, _| {
                while next < ncp && cp_steps[next] == k {
                    out[next * d..(next + 1) * d].copy_from_slice(xk);
                    next += 1;
                }
            })?;
            while next < ncp {
                out[next * d..(next + 1) * d].copy_from_slice(&x);
                next += 1;
            }
            Ok(out)
        })
        .collect();
    let mut states = vec![0.0; ncp * npts * paths * d];
    for (j, res) in results.into_iter().enumerate() {
        let out = res?;
        let (pi, m) = jobs[j];
        for c in 0..ncp {
            let base = ((c * npts + pi) * paths + m) * d;
            states[base..base + d].copy_from_slice(&out[c * d..(c + 1) * d]);
        }
    }
    Ok(FlowEnsemble {
        drift: ens.drift.clone(),
        source: ens.source.clone(),
        s: r,
        t: t_end,
        dim: d,
        points: ens.points.clone(),
        paths,
        checkpoints: cps,
        checkpoint_steps: cp_steps,
        states,
        escaped: 0,
        increment_sums: vec![0.0; d],
        increment_count: 0,
    })
}

impl FlowEnsemble {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn start(&self) -> f64 {
        self.s
    }

    pub fn end(&self) -> f64 {
        self.t
    }

    pub fn dt(&self) -> f64 {
        self.source.dt()
    }

    pub fn seed(&self) -> u64 {
        self.source.seed()
    }

    pub fn source(&self) -> &BrownianSource {
        &self.source
    }

    pub fn drift(&self) -> &DriftField {
        &self.drift
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn point_count(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn checkpoints(&self) -> &[f64] {
        &self.checkpoints
    }

    /// Paths flagged by the escape bound.
    pub fn escaped(&self) -> usize {
        self.escaped
    }

    /// Index of checkpoint `time`, or a domain error.
    pub fn checkpoint_index(&self, time: f64) -> Result<usize> {
        let tol = 1e-9 * (1.0 + time.abs());
        self.checkpoints
            .iter()
            .position(|c| (c - time).abs() <= tol)
            .ok_or_else(|| Error::Domain(format!("time {time} is not a checkpoint of this ensemble")))
    }

    /// Step offset (from `s`) of checkpoint `ci`.
    pub fn checkpoint_step(&self, ci: usize) -> usize {
        self.checkpoint_steps[ci]
    }

    /// `X_{s, checkpoint}` for initial point `point` and path `path`.
    pub fn state(&self, checkpoint: usize, point: usize, path: usize) -> &[f64] {
        let npts = self.point_count();
        let base = ((checkpoint * npts + point) * self.paths + path) * self.dim;
        &self.states[base..base + self.dim]
    }

    /// Sanity gate: the normalised sample mean of the increments is within `4/sqrt(M·steps)` of 0.
    pub fn increment_gate(&self) -> bool {
        crate::rng::increment_mean_gate(&self.increment_sums, self.increment_count, self.source.dt())
    }

    /// Per-component sample mean and variance across paths at a checkpoint.
    pub fn moments(&self, checkpoint: usize, point: usize) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let mut mean = vec![0.0; d];
        let mut var = vec![0.0; d];
        for a in 0..d {
            let vals: Vec<f64> = (0..self.paths).map(|m| self.state(checkpoint, point, m)[a]).collect();
            let (mu, se) = crate::report::mean_se(&vals);
            mean[a] = mu;
            var[a] = se * se * self.paths as f64;
        }
        (mean, var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restart_composes_bitwise() {
        let b = DriftField::taylor_green(2, 0.8);
        let cfg = FlowConfig::new(0.0, 0.5, 0.01, 16, 11).with_checkpoints(&[0.2]);
        let xs = [1.0, 2.0, 0.3, 0.4];
        let ens = simulate_flow(&b, &cfg, &xs).unwrap();
        let rs = restart_flow(&ens, 0.2, 0.5, &[]).unwrap();
        let last = ens.checkpoint_index(0.5).unwrap();
        let rl = rs.checkpoint_index(0.5).unwrap();
        for p in 0..2 {
            for m in 0..16 {
                assert_eq!(ens.state(last, p, m), rs.state(rl, p, m));
            }
        }
        assert!(restart_flow(&ens, 0.25, 0.5, &[]).is_err());
    }

    #[test]
    fn checkpoints_must_align() {
        let cfg = FlowConfig::new(0.0, 1.0, 0.1, 2, 0).with_checkpoints(&[0.35]);
        assert!(simulate_flow(&DriftField::zero(2), &cfg, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn nan_drift_aborts_with_location() {
        let b = DriftField::custom(2, |_, x, o| {
            o[0] = if x[0] > 100.0 { f64::NAN } else { 1000.0 };
            o[1] = 0.0;
        }, "blowup");
        let cfg = FlowConfig::new(0.0, 1.0, 0.01, 1, 0);
        match simulate_flow(&b, &cfg, &[0.0, 0.0]) {
            Err(Error::NonFinite { x, .. }) => assert!(x[0] > 100.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
