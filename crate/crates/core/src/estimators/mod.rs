//! Statistical estimators over flow ensembles.

mod compactness;
mod gradient;
mod holder;
mod krylov;

pub use compactness::{cauchy_convergence, malliavin_stats};
pub use gradient::gradient_moment;
pub use holder::{holder_moments, PairAxis};
pub use krylov::krylov_check;

use crate::error::{Error, Result};
use crate::grid::{MAX_DIM, PERIOD};

/// Axis-aligned box sampled at the centres of a uniform `per_axis^d` cell grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub dim: usize,
    pub lo: [f64; MAX_DIM],
    pub hi: [f64; MAX_DIM],
    pub per_axis: usize,
}

impl Region {
    pub fn new(lo: &[f64], hi: &[f64], per_axis: usize) -> Result<Self> {
        let dim = lo.len();
        if dim == 0 || dim > MAX_DIM || hi.len() != dim || per_axis == 0 {
            return Err(Error::Domain("region needs matching corners in 1..=4 dimensions".into()));
        }
        if lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
            return Err(Error::Domain("region corners must satisfy lo < hi".into()));
        }
        let mut l = [0.0; MAX_DIM];
        let mut h = [0.0; MAX_DIM];
        l[..dim].copy_from_slice(lo);
        h[..dim].copy_from_slice(hi);
        Ok(Self {
            dim,
            lo: l,
            hi: h,
            per_axis,
        })
    }

    /// The whole torus.
    pub fn torus(dim: usize, per_axis: usize) -> Self {
        Self::new(&vec![0.0; dim], &vec![PERIOD; dim], per_axis).expect("valid torus region")
    }

    /// Cube of half-width `r` around `center`.
    pub fn cube(center: &[f64], r: f64, per_axis: usize) -> Result<Self> {
        let lo: Vec<f64> = center.iter().map(|c| c - r).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + r).collect();
        Self::new(&lo, &hi, per_axis)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.hi[a] - self.lo[a]).product()
    }

    pub fn len(&self) -> usize {
        self.per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Weight of each sample point in the midpoint rule.
    pub fn weight(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    /// Cell centres, flat with `d` coordinates per point (axis 0 slowest).
    pub fn points(&self) -> Vec<f64> {
        let d = self.dim;
        let n = self.per_axis;
        let mut out = Vec::with_capacity(self.len() * d);
        for idx in 0..self.len() {
            let mut rem = idx;
            let mut x = [0.0; MAX_DIM];
            for a in (0..d).rev() {
                let i = rem % n;
                rem /= n;
                x[a] = self.lo[a] + (i as f64 + 0.5) * (self.hi[a] - self.lo[a]) / n as f64;
            }
            out.extend_from_slice(&x[..d]);
        }
        out
    }
}

/// `max/min` of positive values, 1 for a single value and infinity if some value is 0.
pub(crate) fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(0.0, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if values.is_empty() || hi == 0.0 {
        1.0
    } else if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_points_and_weights() {
        let r = Region::new(&[0.0, 1.0], &[2.0, 2.0], 4).unwrap();
        let p = r.points();
        assert_eq!(p.len(), 32);
        assert_eq!(&p[..2], &[0.25, 1.125]);
        assert!((r.weight() * r.len() as f64 - 2.0).abs() < 1e-15);
        assert_eq!(spread(&[1.0, 2.0, 1.5]), 2.0);
    }
}
