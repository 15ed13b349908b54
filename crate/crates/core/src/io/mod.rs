//! Mesh files, field output, run configuration and the case driver.

mod config;
mod driver;
mod mesh_file;
mod output;

pub use config::{parse_config, parse_config_str, CaseConfig, CaseKind, ConfigOverrides, CONFIG_KEYS};
pub use driver::run_config;
pub use mesh_file::{format_mesh, parse_mesh, read_mesh, write_mesh};
pub use output::{format_vtk_snapshot, write_error_csv, write_vtk_snapshot};
