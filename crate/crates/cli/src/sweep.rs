use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use hscube::eval::experiment::write_csv;
use hscube::eval::{run_experiment, Manifest};

use crate::output::Staged;
use crate::Usage;

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML manifest.
    pub manifest: PathBuf,
    /// CSV destination [default: the manifest's `output`, else the manifest path with `.csv`]
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn parse_manifest(text: &str) -> Result<Manifest, Usage> {
    let de = toml::Deserializer::parse(text).map_err(|e| Usage(format!("manifest: {e}")))?;
    let m: Manifest = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Usage(format!("manifest field `{path}`: {}", e.inner().message().trim_end()))
    })?;
    m.validate().map_err(|e| Usage(format!("manifest: {e}")))?;
    Ok(m)
}

fn output_path(a: &SweepArgs, m: &Manifest) -> PathBuf {
    if let Some(p) = &a.output {
        return p.clone();
    }
    match &m.output {
        Some(o) => a.manifest.parent().unwrap_or(Path::new("")).join(o),
        None => a.manifest.with_extension("csv"),
    }
}

pub fn run(a: SweepArgs) -> anyhow::Result<()> {
    let text = fs::read_to_string(&a.manifest).with_context(|| format!("cannot read {}", a.manifest.display()))?;
    let manifest = parse_manifest(&text)?;
    let dest = output_path(&a, &manifest);
    let mut staged = Staged::default();
    let file = staged.file(&dest)?;

    let outcome = run_experiment(&manifest)?;
    write_csv(&outcome.rows(), file)?;
    staged.commit()?;
    println!("{} run(s), {} failure(s) -> {}", outcome.reports.len(), outcome.failures.len(), dest.display());
    for f in &outcome.failures {
        eprintln!("failed: {}: {}", f.combination, f.error);
    }
    if !outcome.failures.is_empty() {
        bail!("{} combination(s) failed", outcome.failures.len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_path_in_errors() {
        let e = parse_manifest("schema_version = 1\n[[methods]]\nmethod = \"ccf\"\nwindows = [\"x\"]\n").unwrap_err();
        assert!(e.0.contains("methods[0].windows[0]"), "{}", e.0);
        let e = parse_manifest("schema_version = 1\nsigmaz = [1.0]\n").unwrap_err();
        assert!(e.0.contains("sigmaz"), "{}", e.0);
    }

    #[test]
    fn shipped_manifests_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../manifests");
        for name in ["fig3a.manifest", "fig3d.manifest"] {
            let text = fs::read_to_string(dir.join(name)).unwrap();
            parse_manifest(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn fig3d_noise_grid() {
        let text = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../manifests/fig3d.manifest")).unwrap();
        assert_eq!(parse_manifest(&text).unwrap().sigmas, vec![0.5, 1.0, 1.3, 1.9, 2.5]);
    }
}
