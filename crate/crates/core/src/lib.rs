pub mod analysis;
pub mod linalg;
pub mod nmr;
pub mod qmap;
pub mod solver;
pub mod tomography;
