//! Materializes a synthetic federation as feature files plus a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use fedsim_core::data::{generate_raw, write_features, DomainShiftSpec, Manifest, ManifestClient};
use fedsim_core::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Writes `<client id>.csv` per client and `manifest.toml`; loading the
/// manifest reproduces `generate_federation(spec)` exactly. Returns the
/// manifest path.
pub fn gen_data(spec: &DomainShiftSpec, out_dir: &Path) -> Result<PathBuf> {
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let tokens: Vec<String> = (0..spec.num_classes).map(|c| format!("class{c}")).collect();
    let mut clients = Vec::new();
    for ds in generate_raw(spec)? {
        let file = format!("{}.csv", ds.client_id);
        write_features(&out_dir.join(&file), &ds, &tokens)?;
        clients.push(ManifestClient {
            id: ds.client_id.clone(),
            path: file.into(),
        });
    }
    let manifest = Manifest {
        num_classes: spec.num_classes,
        classes: Some(tokens),
        label_column: "label".into(),
        train_ratio: spec.train_ratio,
        split_seed: spec.seed,
        clients,
    };
    let path = out_dir.join(MANIFEST_FILE);
    manifest.write(&path)?;
    Ok(path)
}
