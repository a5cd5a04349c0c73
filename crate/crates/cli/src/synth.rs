//! `msgan synth`: write a synthetic tile dataset.

use std::path::Path;

use msgan_core::data::{generate_synthetic, SyntheticSpec};

pub fn run(spec_path: Option<&Path>, out: &Path, count: usize, size: usize) -> anyhow::Result<i32> {
    let spec = match spec_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("cannot read spec {}: {e}", p.display()))?;
            let spec: SyntheticSpec = serde_json::from_str(&text)
                .map_err(|e| anyhow::anyhow!("invalid spec {}: {e}", p.display()))?;
            spec
        }
        None => SyntheticSpec::default_with_seed(0),
    };
    let dataset = generate_synthetic(&spec, count, size)?;
    dataset.save_dir(out)?;
    println!(
        "wrote {count} tiles of {size}x{size} to {}",
        out.display()
    );
    Ok(0)
}
