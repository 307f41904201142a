//! Scene files, parallel grid sweeps and the `rigidchain` command line on
//! top of [`rigidchain_core`].

pub mod cli;
pub mod output;
pub mod parallel;
pub mod scene_file;

pub use scene_file::{load_scene, parse_scene, save_scene, scene_to_json, SceneFileError};
