//! Fixed registry of verification experiments.

use std::sync::OnceLock;

use critflow::grid::PeriodicField;
use critflow::report::{EstimateReport, Verdict};

use crate::config::{ParamSpec, Params};
use crate::experiments;

/// Compute modules covered by the registry, in listing order.
pub const MODULES: [&str; 5] = [
    "norms_and_drifts",
    "flow_sim",
    "kolmogorov_pde",
    "estimator_suite",
    "lagrangian_ns",
];

/// Everything an experiment produces.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub reports: Vec<EstimateReport>,
    /// Field snapshots written in the binary field format.
    pub fields: Vec<(String, PeriodicField)>,
    /// Extra CSV tables (name, contents).
    pub tables: Vec<(String, String)>,
}

impl Outcome {
    pub fn from_reports(reports: Vec<EstimateReport>) -> Self {
        Self {
            reports,
            ..Self::default()
        }
    }

    /// Fail if any report failed, else inconclusive if any was, else pass.
    pub fn verdict(&self) -> Verdict {
        let vs: Vec<Verdict> = self.reports.iter().map(|r| r.verdict()).collect();
        if vs.contains(&Verdict::Fail) {
            Verdict::Fail
        } else if vs.is_empty() || vs.contains(&Verdict::Inconclusive) {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }
    }

    pub fn report(&self, id: &str) -> Option<&EstimateReport> {
        self.reports.iter().find(|r| r.id == id)
    }
}

pub type Validator = fn(&Params) -> Result<(), String>;
pub type Runner = fn(&Params, u64) -> critflow::Result<Outcome>;

/// One registered experiment.
pub struct Experiment {
    pub id: &'static str,
    pub module: &'static str,
    /// One line: the property verified.
    pub summary: &'static str,
    pub default_seed: u64,
    pub params: Vec<ParamSpec>,
    pub(crate) validate: Validator,
    pub(crate) run: Runner,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment").field("id", &self.id).field("module", &self.module).finish()
    }
}

impl Experiment {
    /// Check the preconditions of `params` without computing anything.
    pub fn validate(&self, params: &Params) -> Result<(), String> {
        (self.validate)(params)
    }

    pub fn run(&self, params: &Params, seed: u64) -> critflow::Result<Outcome> {
        (self.run)(params, seed)
    }
}

/// All experiments, ordered by module then id.
pub fn registry() -> &'static [Experiment] {
    static REG: OnceLock<Vec<Experiment>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut all = Vec::new();
        all.extend(experiments::norms::experiments());
        all.extend(experiments::flow::experiments());
        all.extend(experiments::pde::experiments());
        all.extend(experiments::estimators::experiments());
        all.extend(experiments::ns::experiments());
        all.sort_by_key(|e| (MODULES.iter().position(|m| *m == e.module).unwrap_or(usize::MAX), e.id));
        all
    })
}

pub fn find(id: &str) -> Option<&'static Experiment> {
    registry().iter().find(|e| e.id == id)
}

/// Registry listing, optionally restricted to one module.
pub fn list_experiments(module: Option<&str>) -> Vec<&'static Experiment> {
    registry().iter().filter(|e| module.is_none_or(|m| e.module == m)).collect()
}
