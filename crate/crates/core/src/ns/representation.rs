//! Monte Carlo evaluation of `E[∇^⊤X_{t,T} g(X_{t,T}^x)]` at every grid node.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::euler::steps_between;
use crate::grid::{PeriodicField, SpectralGrid, MAX_DIM};
use crate::rng::BrownianSource;

use super::tables::{Terminal, VelocityTables};

/// Mean field per start time and the largest per-node standard error.
#[derive(Debug, Clone)]
pub(crate) struct Expectation {
    pub fields: Vec<PeriodicField>,
    pub max_se: Vec<f64>,
    /// Per-node standard errors (Euclidean over components), one vector per start.
    pub se: Vec<Vec<f64>>,
}

/// Paths start at each node for each time in `starts` and run to `end` under
/// `drift`; the sample is `∇^⊤X g(X)` (vector terminal, `transpose = true`) or
/// `g(X)`. All nodes share the noise of path `m` (common noise), so the
/// estimation error is a smooth field.
pub(crate) fn expectation(
    drift: &VelocityTables,
    terminal: &Terminal,
    transpose: bool,
    starts: &[f64],
    end: f64,
    n: usize,
    paths: usize,
    source: &BrownianSource,
) -> Result<Expectation> {
    let d = source.dim();
    let dt = source.dt();
    let grid = SpectralGrid::shared(d, n);
    let len = grid.len();
    let comps = terminal.components();
    if transpose && comps != d {
        return Err(Error::Domain("transposed samples need a d-component terminal field".into()));
    }
    let first = starts.iter().cloned().fold(end, f64::min);
    let total = steps_between(first, end, dt)?;
    let first_step = source.step_index(first)?;
    let offsets: Vec<usize> = starts
        .iter()
        .map(|&s| steps_between(first, s, dt))
        .collect::<Result<_>>()?;
    // per path, all increments of [first, end]
    let noise: Vec<Vec<f64>> = (0..paths)
        .into_par_iter()
        .map(|m| source.increments(m as u64, first_step, total))
        .collect();
    let schedule: Vec<(usize, f64)> = (0..total).map(|k| drift.locate(first + k as f64 * dt)).collect();
    let antithetic = source.antithetic() && paths % 2 == 0;
    let nodes = grid.nodes();

    // per node: per start, (sum[comps], sum of squared group means, groups)
    let per_node: Vec<Vec<f64>> = (0..len)
        .into_par_iter()
        .map(|node| {
            let x0 = &nodes[node * d..(node + 1) * d];
            let mut acc = vec![0.0; starts.len() * (comps + 1)];
            let mut pair = [0.0; MAX_DIM];
            let mut x = [0.0; MAX_DIM];
            let mut jm = [0.0; MAX_DIM * MAX_DIM];
            let mut b = [0.0; MAX_DIM];
            let mut g = [0.0; MAX_DIM * MAX_DIM];
            let mut tmp = [0.0; MAX_DIM * MAX_DIM];
            let mut term = [0.0; MAX_DIM];
            let mut sample = [0.0; MAX_DIM];
            for (si, &off) in offsets.iter().enumerate() {
                let out = &mut acc[si * (comps + 1)..(si + 1) * (comps + 1)];
                for m in 0..paths {
                    x[..d].copy_from_slice(x0);
                    jm[..d * d].fill(0.0);
                    for i in 0..d {
                        jm[i * d + i] = 1.0;
                    }
                    let w = &noise[m];
                    for (k, &(seg, th)) in schedule.iter().enumerate().skip(off) {
                        let dw = &w[k * d..(k + 1) * d];
                        if drift.is_zero() {
                            for a in 0..d {
                                x[a] += dw[a];
                            }
                            continue;
                        }
                        drift.eval(seg, th, &x[..d], &mut b, &mut g);
                        if transpose {
                            for i in 0..d {
                                for j in 0..d {
                                    let mut s = 0.0;
                                    for l in 0..d {
                                        s += g[i * d + l] * jm[l * d + j];
                                    }
                                    tmp[i * d + j] = s;
                                }
                            }
                            for c in 0..d * d {
                                jm[c] += dt * tmp[c];
                            }
                        }
                        for a in 0..d {
                            x[a] = (x[a] + b[a] * dt) + dw[a];
                        }
                    }
                    terminal.eval(&x[..d], &mut term);
                    if transpose {
                        for j in 0..d {
                            sample[j] = (0..d).map(|i| jm[i * d + j] * term[i]).sum();
                        }
                    } else {
                        sample[..comps].copy_from_slice(&term[..comps]);
                    }
                    for c in 0..comps {
                        out[c] += sample[c];
                    }
                    // squared norms of independent group means (antithetic pairs)
                    if antithetic {
                        if m % 2 == 0 {
                            pair[..comps].copy_from_slice(&sample[..comps]);
                        } else {
                            out[comps] += (0..comps).map(|c| (0.5 * (pair[c] + sample[c])).powi(2)).sum::<f64>();
                        }
                    } else {
                        out[comps] += (0..comps).map(|c| sample[c] * sample[c]).sum::<f64>();
                    }
                }
            }
            acc
        })
        .collect();

    let groups = if antithetic { paths / 2 } else { paths } as f64;
    let mut fields = Vec::with_capacity(starts.len());
    let mut max_se = Vec::with_capacity(starts.len());
    let mut ses = Vec::with_capacity(starts.len());
    for (si, &t) in starts.iter().enumerate() {
        let mut f = PeriodicField::zeros(d, n, comps, vec![t]);
        let mut worst: f64 = 0.0;
        let mut se_field = vec![0.0; len];
        for node in 0..len {
            let a = &per_node[node][si * (comps + 1)..(si + 1) * (comps + 1)];
            let mut m2 = 0.0;
            for c in 0..comps {
                let mean = a[c] / paths as f64;
                f.slice_mut(0, c)[node] = mean;
                m2 += mean * mean;
            }
            let var = ((a[comps] / groups - m2) * groups / (groups - 1.0).max(1.0)).max(0.0);
            let se = (var / groups).sqrt();
            se_field[node] = se;
            worst = worst.max(se);
        }
        fields.push(f);
        max_se.push(worst);
        ses.push(se_field);
    }
    Ok(Expectation {
        fields,
        max_se,
        se: ses,
    })
}
