pub mod eval;
pub mod gradcheck;
pub mod recover;
pub mod render;
pub mod tam_toy;

use anyhow::{bail, Result};
use depthcast::synth::{presets, SceneFile};
use std::path::PathBuf;

/// Resolves a scene from either an explicit JSON file or a named preset.
pub fn resolve_scene(scene: &Option<PathBuf>, preset: &Option<String>, seed: u64) -> Result<SceneFile> {
    match (scene, preset) {
        (Some(path), None) => Ok(SceneFile::load(path)?),
        (None, Some(name)) => presets::by_name(name, seed)
            .ok_or_else(|| anyhow::anyhow!("unknown preset '{name}' (known: {})", presets::NAMES.join(", "))),
        (Some(_), Some(_)) => bail!("--scene and --preset are mutually exclusive"),
        (None, None) => bail!("one of --scene or --preset is required"),
    }
}
