//! Cell-centered finite-volume solver for the Euler equations on tetrahedral
//! grids.

pub mod audit;
pub mod bc;
pub mod config;
pub mod driver;
pub mod euler;
pub mod geometry;
pub mod interp;
pub mod lsq;
pub mod mesh;
pub mod mms;
pub mod quadrature;
pub mod residual;
pub mod scheme;
pub mod solver;
pub mod vec3;
pub mod vtk;
