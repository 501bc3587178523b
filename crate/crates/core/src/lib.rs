pub mod band;
pub mod circle;
pub mod germ;
pub mod holonomy;
pub mod hyperbolic;
pub mod qicurve;
pub mod runner;
pub mod rotation;
