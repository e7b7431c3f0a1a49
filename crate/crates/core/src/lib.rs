pub mod error;
pub mod gevrey;
pub mod quadrature;
pub mod scalar;
pub mod special;
pub mod lattice;
pub mod poly;
pub mod summation;
pub mod gamma;
pub mod derham;
pub mod betti;
pub mod stokes;
pub mod acceptance;
pub mod invariants;
