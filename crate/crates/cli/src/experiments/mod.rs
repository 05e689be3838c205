//! Registry entries grouped by compute module.

pub(crate) mod estimators;
pub(crate) mod flow;
pub(crate) mod norms;
pub(crate) mod ns;
pub(crate) mod pde;

use critflow::flow::euler::steps_between;
use critflow::norms::{mollify, DriftField};

use crate::config::Params;

pub(crate) type Check = Result<(), String>;

pub(crate) fn positive(p: &Params, keys: &[&str]) -> Check {
    for k in keys {
        let v = p.f64(k);
        if !(v > 0.0 && v.is_finite()) {
            return Err(format!("`{k}` must be positive and finite, got {v}"));
        }
    }
    Ok(())
}

pub(crate) fn at_least(p: &Params, key: &str, min: usize) -> Check {
    let v = p.usize(key);
    if v < min {
        return Err(format!("`{key}` must be at least {min}, got {v}"));
    }
    Ok(())
}

/// `dt` divides `[a, b]`.
pub(crate) fn aligned(a: f64, b: f64, dt: f64, what: &str) -> Check {
    steps_between(a, b, dt).map(|_| ()).map_err(|e| format!("{what}: {e}"))
}

pub(crate) fn levels(p: &Params, key: &str, min_len: usize) -> Check {
    let v = p.list(key);
    if v.len() < min_len {
        return Err(format!("`{key}` needs at least {min_len} entries"));
    }
    if v.iter().any(|&m| !(m >= 1.0) || m.fract() != 0.0) {
        return Err(format!("`{key}` entries must be positive integers"));
    }
    Ok(())
}

pub(crate) fn increasing_positive(p: &Params, key: &str, min_len: usize) -> Check {
    let v = p.list(key);
    if v.len() < min_len {
        return Err(format!("`{key}` needs at least {min_len} entries"));
    }
    if v.iter().any(|&x| !(x > 0.0)) || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(format!("`{key}` must be positive and strictly increasing"));
    }
    Ok(())
}

pub(crate) fn grid_size(p: &Params, key: &str) -> Check {
    let n = p.usize(key);
    if n < 4 || !n.is_power_of_two() {
        return Err(format!("`{key}` must be a power of two >= 4, got {n}"));
    }
    Ok(())
}

pub(crate) fn dim(p: &Params, lo: usize, hi: usize) -> Check {
    let d = p.usize("d");
    if d < lo || d > hi {
        return Err(format!("`d` must lie in [{lo}, {hi}], got {d}"));
    }
    Ok(())
}

/// Singular drift mollified at each level, labelled by the level.
pub(crate) fn mollified_levels(d: usize, gamma: f64, levels: &[u32]) -> critflow::Result<Vec<(f64, DriftField)>> {
    let base = DriftField::singular(d, gamma)?;
    levels.iter().map(|&m| Ok((m as f64, mollify(&base, m)?))).collect()
}

pub(crate) fn all(checks: &[Check]) -> Check {
    for c in checks {
        c.clone()?;
    }
    Ok(())
}

/// Catalog drift by config id.
pub(crate) fn catalog_drift(name: &str, d: usize, gamma: f64) -> critflow::Result<DriftField> {
    let center = [std::f64::consts::PI; 4];
    Ok(match name {
        "zero" => DriftField::zero(d),
        "constant" => DriftField::constant(&[0.7, -0.4, 0.3, 0.1][..d]),
        "ou" => DriftField::ornstein_uhlenbeck(d, 1.0, &center[..d]),
        "shear" => DriftField::shear(d, 1.0),
        "taylor_green" => DriftField::taylor_green(d, 1.0),
        "singular" => DriftField::singular(d, gamma)?,
        other => return Err(critflow::Error::Domain(format!("unknown drift `{other}`"))),
    })
}

pub(crate) const DRIFT_IDS: [&str; 6] = ["zero", "constant", "ou", "shear", "taylor_green", "singular"];

/// Comma-separated catalog ids.
pub(crate) fn drift_list(p: &Params, key: &str) -> Check {
    let names: Vec<&str> = p.text(key).split(',').map(str::trim).collect();
    if names.is_empty() || names.iter().any(|n| !DRIFT_IDS.contains(n)) {
        return Err(format!("`{key}` entries must be drawn from {}", DRIFT_IDS.join(", ")));
    }
    Ok(())
}

pub(crate) fn gamma(p: &Params) -> Check {
    let g = p.f64("gamma");
    if !(g > 0.0 && g < 1.0) {
        return Err(format!("`gamma` must lie in (0, 1), got {g}"));
    }
    Ok(())
}
