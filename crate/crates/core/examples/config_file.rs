//! Presets, a TOML layer and `key=value` overrides, as the CLI resolves them.
//!
//! cargo run --example config_file

use pamlab::config::{Config, Experiment};

fn main() -> pamlab::Result<()> {
    let dir = std::env::temp_dir().join("pamlab-config-example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join("blocking.toml");
    std::fs::write(&path, "seed = 7\nreplicas = 1000\n\n[blocking]\nbeta = 0.05\n").expect("write config");

    let cfg = Config::load(Experiment::Blocking, Some(&path), &["blocking.radii=[16, 32, 64]".into()])?;
    print!("{}", cfg.to_toml());
    println!("# window {:?}, observable {:?}", cfg.window()?, cfg.observable()?);

    let bad = Config::load(Experiment::Blocking, None, &["grid.step_guard=2".into()]);
    println!("# step_guard=2 -> {}", bad.unwrap_err());
    Ok(())
}
