//! Writes the packaged scene files into a directory (default `scenes/`).
//!
//! ```text
//! cargo run --example generate_scenes -- crates/core/scenes
//! ```

use std::path::PathBuf;

use extcw::scene::packaged;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("scenes"));
    std::fs::create_dir_all(&dir)?;
    for (name, file) in packaged::all() {
        let path = dir.join(&name);
        std::fs::write(&path, packaged::render(&file))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
