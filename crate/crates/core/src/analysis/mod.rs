//! Reference spectra, error measures, order fits and spurious-mode checks.

pub mod errors;
pub mod fit;
pub mod reference;
pub mod report;
pub mod spurious;

pub use errors::{broken_errors, BrokenErrors};
pub use fit::{fit_order, OrderFit};
pub use reference::{
    exact_rect_eigfun, exact_rect_eigs, rect_eigs, Constant, ExactField, RectMode, ReferenceEigenvalue,
    ReferenceSpectrum, CAVITY_HEIGHT,
};
pub use report::{flagged_table, ConvergenceReport, LevelResult, LevelSpectrum, TrackedEigenvalue, CSV_HEADER};
pub use spurious::{classify_spurious, Classified, Flag, SpuriousReport, DEFAULT_MATCH_RTOL};
