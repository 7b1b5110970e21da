use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use reconcile_core::data::ExampleId;
use reconcile_core::io::{align_predictions, read_dataset_file, read_predictions_file};
use reconcile_core::{Dataset, TabularModel};

/// Writes `path` by filling a temporary file in the same directory and renaming it over.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset_file(path).with_context(|| format!("reading dataset {}", path.display()))
}

/// Loads a prediction file as a model and checks it covers exactly the dataset's ids.
pub fn load_model(path: &Path, data: &Dataset) -> Result<TabularModel<f64>> {
    let pairs: Vec<(ExampleId, f64)> =
        read_predictions_file(path).with_context(|| format!("reading predictions {}", path.display()))?;
    align_predictions::<f64>(&pairs, data).with_context(|| format!("matching {} to the dataset", path.display()))?;
    Ok(TabularModel::from_pairs(pairs))
}
