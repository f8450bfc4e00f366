//! Constant-coefficient exterior algebra on the coordinate and η-bases.

mod form;
mod structure;

pub use form::{evaluate, increasing_tuples, minor, normalize, pullback_linear, wedge, Basis, KForm, Multivector};
pub use structure::{
    admissible_pairs, complement_wedge, eta, eta_range, exterior_derivative, gamma_coefficients, maurer_cartan, span_test,
    theta_form, theta_product_check, GammaSolution, SpanTest, SpanVerdict, ThetaCheck,
};
