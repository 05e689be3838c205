use std::fmt::Write as _;

use super::{DerivativeRecord, FlowEnsemble};
use crate::error::{Error, Result};
use crate::grid::PeriodicField;

/// Per-checkpoint statistics as tidy CSV: `checkpoint,point,quantity,value`.
///
/// Quantities: `mean[a]` and `var[a]` per component, and when a derivative
/// record is given, `deriv_frobenius_mean` and `deriv_frobenius_max`
/// (for Malliavin records, of the first base time).
pub fn summary_csv(ens: &FlowEnsemble, deriv: Option<&DerivativeRecord>) -> String {
    let mut out = String::from("checkpoint,point,quantity,value\n");
    let d = ens.dim();
    for (c, t) in ens.checkpoints().iter().enumerate() {
        for p in 0..ens.point_count() {
            let (mean, var) = ens.moments(c, p);
            for a in 0..d {
                let _ = writeln!(out, "{t:?},{p},mean[{a}],{:?}", mean[a]);
                let _ = writeln!(out, "{t:?},{p},var[{a}],{:?}", var[a]);
            }
            if let Some(rec) = deriv {
                let norms: Vec<f64> = (0..rec.paths())
                    .map(|m| rec.matrix(0, c, p, m).iter().map(|v| v * v).sum::<f64>().sqrt())
                    .collect();
                let mean = norms.iter().sum::<f64>() / norms.len() as f64;
                let max = norms.iter().cloned().fold(0.0, f64::max);
                let _ = writeln!(out, "{t:?},{p},deriv_frobenius_mean,{mean:?}");
                let _ = writeln!(out, "{t:?},{p},deriv_frobenius_max,{max:?}");
            }
        }
    }
    out
}

/// Path-mean of the checkpoint states as a grid field, when the initial
/// points are the nodes of an `n^d` grid (in node order).
pub fn checkpoint_mean_field(ens: &FlowEnsemble, n: usize) -> Result<PeriodicField> {
    let d = ens.dim();
    let len = n.pow(d as u32);
    if ens.point_count() != len {
        return Err(Error::Domain(format!(
            "ensemble has {} points, an {n}^{d} grid needs {len}",
            ens.point_count()
        )));
    }
    let mut f = PeriodicField::zeros(d, n, d, ens.checkpoints().to_vec());
    for c in 0..ens.checkpoints().len() {
        let (means, _): (Vec<Vec<f64>>, Vec<Vec<f64>>) = (0..len).map(|p| ens.moments(c, p)).unzip();
        for a in 0..d {
            let slice = f.slice_mut(c, a);
            for (p, m) in means.iter().enumerate() {
                slice[p] = m[a];
            }
        }
    }
    Ok(f)
}
