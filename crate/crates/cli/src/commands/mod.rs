pub mod ablate;
pub mod eval;
pub mod export_mesh;
pub mod run;
pub mod synth;
