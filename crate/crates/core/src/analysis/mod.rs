//! Moduli estimation, stepsize regions, KPIs and the statistics used for reporting.

mod fit;
mod kpi;
mod moduli;
mod stats;

pub use fit::fit_curve;
pub use kpi::{
    fit_contraction, iqr, kpis, linear_regression, quantile, KpiRecord, LinearFit, Summary,
    CONTRACTION_WINDOW,
};
pub use moduli::{estimate_moduli, estimate_operator_moduli, stepsize_region, Moduli, StepsizeRegion};
pub use stats::{fdr_bh, wilcoxon_exact, wilcoxon_normal, wilcoxon_signed_rank};
