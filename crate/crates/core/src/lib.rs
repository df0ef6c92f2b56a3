//! Mod-p Dyer-Lashof calculus, free unstable modules, degreewise Hopf
//! algebra linear algebra for H_*(QX), the S^1-transfer, and Poincare
//! series pipelines for the stable homology of mapping class groups.

pub mod admissible_ops;
pub mod cli_io;
pub mod fp_core;
pub mod qx_homology;
pub mod series_assembly;
pub mod transfer;
pub mod unstable_modules;
