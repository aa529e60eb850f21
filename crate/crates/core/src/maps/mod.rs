//! Gridded characteristic maps for engines and electric machines.

mod emachine;
mod engine;
mod grid;
mod io;

pub use emachine::{generate_em_map, EmMapSet, EmSpec};
pub use engine::{
    generate_engine_maps, scale_engine_maps, EngineMapSet, EngineSpec, Species, DIESEL_LHV, MAP_RESOLUTION,
};
pub(crate) use grid::linspace;
pub use grid::{interp2, Curve, Grid2D};
pub use io::{load_maps, read_maps, save_maps, write_maps, MapFile};
