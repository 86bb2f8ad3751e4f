//! CSV artifacts: header row, LF line endings, floats with 17 significant
//! digits. Tables are rendered in memory so a failing run writes nothing.

use anyhow::{Context, Result};
use std::path::{Path, PathBuf};

/// A finished artifact: file name relative to the output directory, and bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub fn float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Table { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(self, name: &str) -> Result<Artifact> {
        let bytes = self.writer.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(Artifact { name: name.into(), bytes })
    }
}

/// Writes every artifact through a temporary file in `dir` and renames it
/// into place, so readers never see a half-written file.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut staged = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        std::io::Write::write_all(&mut tmp, &a.bytes)?;
        staged.push((tmp, dir.join(&a.name)));
    }
    let mut out = Vec::with_capacity(staged.len());
    for (tmp, path) in staged {
        tmp.persist(&path).with_context(|| format!("writing {}", path.display()))?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_and_lf() {
        let mut t = Table::new(&["a", "b"]).unwrap();
        t.row([float(0.1), float(-2.5e-300)]).unwrap();
        t.row([float(f64::NEG_INFINITY), "x,y".to_string()]).unwrap();
        let a = t.finish("t.csv").unwrap();
        let s = String::from_utf8(a.bytes).unwrap();
        assert_eq!(s, "a,b\n1.0000000000000001e-1,-2.5000000000000000e-300\n-inf,\"x,y\"\n");
        let back: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn writes_atomically() {
        let d = tempfile::tempdir().unwrap();
        let a = Artifact { name: "x.csv".into(), bytes: b"h\n".to_vec() };
        let p = write_all(&d.path().join("sub"), &[a]).unwrap();
        assert_eq!(std::fs::read(&p[0]).unwrap(), b"h\n");
        assert_eq!(std::fs::read_dir(d.path().join("sub")).unwrap().count(), 1);
    }
}
