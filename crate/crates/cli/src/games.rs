//! Resolving `--config` values into game trees: either a TOML descriptor
//! file or one of the named presets.

use std::path::Path;

use dlsolve::game::{
    GameDescriptor, GameTree, KuhnParams, LeducParams, NlfhParams,
};
use dlsolve::{Error, Result};

pub const PRESETS: &str = "rps+, kuhn, leduc, mini-nlfh, mini-nlfh+075";

fn preset(name: &str) -> Option<GameDescriptor> {
    Some(match name {
        "rps+" | "rps" => GameDescriptor::RpsPlus,
        "kuhn" => GameDescriptor::Kuhn(KuhnParams::default()),
        "leduc" => GameDescriptor::Leduc(LeducParams::default()),
        "nlfh" | "mini-nlfh" => GameDescriptor::Nlfh(NlfhParams::default()),
        // The default abstraction plus a 0.75x pot opening size, the
        // stock off-tree scenario.
        "mini-nlfh+075" => GameDescriptor::Nlfh(NlfhParams {
            extra_opening_fractions: vec![0.75],
            ..NlfhParams::default()
        }),
        _ => return None,
    })
}

pub fn load_descriptor(config: &str) -> Result<GameDescriptor> {
    let path = Path::new(config);
    if path.is_file() {
        return GameDescriptor::load(path);
    }
    preset(config).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "--config {config} is neither a file nor a preset ({PRESETS})"
        ))
    })
}

pub fn build_game(config: &str) -> Result<(GameDescriptor, GameTree)> {
    let descriptor = load_descriptor(config)?;
    let game = GameTree::build(&descriptor)?;
    Ok((descriptor, game))
}
