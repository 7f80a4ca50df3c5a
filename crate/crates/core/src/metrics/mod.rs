//! Sample-quality metrics: quantile-ball α-precision / β-recall, the
//! classification accuracy score (train on generated, test on real) with a
//! built-in logistic regression, and manifold-constraint fractions.

mod cas;
mod constraints;
mod fidelity;
mod logreg;

pub use cas::{cas_evaluate, cas_evaluate_embedded, f1_score, roc_auc, CasConfig, CasReport, DEFAULT_C_GRID};
pub use constraints::{constraint_report, constraint_report_matrices, ConstraintReport, CONSTRAINT_TOL};
pub use fidelity::{ab_f1, default_alpha_grid, precision_recall_curves, FidelityReport};
pub use logreg::{logreg_fit, logreg_objective, LogRegModel, LOGREG_TOL};
