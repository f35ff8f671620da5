use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use hscube::{chsc, ComplexCube};
use tempfile::NamedTempFile;

/// Output files written to temporaries next to their destinations and
/// moved into place together by [`Staged::commit`]. Dropping without
/// committing leaves no trace.
#[derive(Default)]
pub struct Staged {
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staged {
    pub fn file(&mut self, dest: &Path) -> anyhow::Result<&mut NamedTempFile> {
        let dir = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let tmp = NamedTempFile::new_in(dir).with_context(|| format!("cannot write to {}", dir.display()))?;
        self.files.push((tmp, dest.to_path_buf()));
        Ok(&mut self.files.last_mut().unwrap().0)
    }

    pub fn commit(self) -> anyhow::Result<()> {
        let mut done: Vec<PathBuf> = Vec::new();
        for (mut tmp, dest) in self.files {
            let result = tmp
                .flush()
                .map_err(anyhow::Error::from)
                .and_then(|_| tmp.persist(&dest).map(|_| ()).map_err(|e| e.error.into()));
            if let Err(e) = result {
                for d in &done {
                    let _ = fs::remove_file(d);
                }
                return Err(e.context(format!("cannot write {}", dest.display())));
            }
            done.push(dest);
        }
        Ok(())
    }
}

pub fn write_cube<W: Write>(cube: &ComplexCube, w: W) -> anyhow::Result<()> {
    let mut buf = BufWriter::new(w);
    chsc::write_to(cube, &mut buf)?;
    buf.flush()?;
    Ok(())
}
