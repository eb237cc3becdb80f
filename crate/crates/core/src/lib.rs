pub mod error;
pub mod expr;
pub mod flows;
pub mod geometry;
pub mod bs;
pub mod chabauty;
pub mod graph;
pub mod group;
pub mod mass_transport;
pub mod poisson;
pub mod sasaki;
pub mod schreier;
pub mod util;
pub mod io;
pub mod report;
pub mod suite;

pub use error::{Error, Result};
