//! Regularized near-cloak construction and an exact layered-sphere Maxwell
//! solver for measuring scattering decay rates.

pub mod cloakmap;
pub mod experiments;
pub mod farnorms;
pub mod materials;
pub mod mie;
pub mod quadrature;
pub mod specfun;
