//! CSV tables and staged output files.
//!
//! Every CSV starts with a `schema` column holding [`SCHEMA`]. Columns whose
//! name ends in [`NONDETERMINISTIC_SUFFIX`] carry measured wall-clock values
//! and are the only ones allowed to differ between runs with the same seed.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub const SCHEMA: &str = "drss.v1";
pub const NONDETERMINISTIC_SUFFIX: &str = "_nondet";

/// An in-memory CSV table with string cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        let mut all = vec!["schema".to_string()];
        all.extend(headers.into_iter().map(Into::into));
        Table {
            headers: all,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        let mut row = vec![SCHEMA.to_string()];
        row.extend(cells);
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn get<'a>(&self, row: &'a [String], name: &str) -> Option<&'a str> {
        self.column(name).and_then(|i| row.get(i)).map(String::as_str)
    }

    pub fn get_f64(&self, row: &[String], name: &str) -> Option<f64> {
        self.get(row, name).and_then(|s| s.parse().ok())
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self, csv::Error> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let headers = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Table { headers, rows })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_csv(&text).map_err(|source| CliError::Csv {
            path: path.to_path_buf(),
            source,
        })
    }

    /// The table without measured wall-clock columns.
    pub fn deterministic(&self) -> Table {
        let keep: Vec<usize> = (0..self.headers.len())
            .filter(|&i| !self.headers[i].ends_with(NONDETERMINISTIC_SUFFIX))
            .collect();
        let pick = |row: &Vec<String>| keep.iter().map(|&i| row[i].clone()).collect();
        Table {
            headers: pick(&self.headers),
            rows: self.rows.iter().map(pick).collect(),
        }
    }
}

/// Formats a float so that equal values always print identically.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.9}")
}

/// Files written by one command. Nothing becomes visible until
/// [`Outputs::commit`], and a failed commit removes what it already wrote.
#[derive(Debug, Default)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Outputs {
            dir: dir.into(),
            files: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<String>) {
        self.files.push((name.into(), contents.into()));
    }

    pub fn add_table(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let text = table.to_csv().map_err(|source| CliError::Csv { path, source })?;
        self.add(name, text);
        Ok(())
    }

    pub fn contents(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        let mut staged = Vec::new();
        let cleanup = |paths: &[PathBuf]| {
            for p in paths {
                let _ = fs::remove_file(p);
            }
        };
        for (name, contents) in &self.files {
            let tmp = self.dir.join(format!(".{name}.partial"));
            if let Err(e) = fs::write(&tmp, contents) {
                cleanup(&staged);
                cleanup(std::slice::from_ref(&tmp));
                return Err(CliError::io(tmp, e));
            }
            staged.push(tmp);
        }
        let mut written = Vec::new();
        for ((name, _), tmp) in self.files.iter().zip(&staged) {
            let path = self.dir.join(name);
            if let Err(e) = fs::rename(tmp, &path) {
                cleanup(&written);
                cleanup(&staged);
                return Err(CliError::io(path, e));
            }
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_strip() {
        let mut t = Table::new(["a", "b_nondet", "c"]);
        t.push(vec!["1".into(), "0.25".into(), "x,y".into()]);
        let text = t.to_csv().unwrap();
        assert!(text.starts_with("schema,a,b_nondet,c\n"));
        assert!(!text.contains('\r'));
        let back = Table::from_csv(&text).unwrap();
        assert_eq!(back, t);
        let d = back.deterministic();
        assert_eq!(d.headers, ["schema", "a", "c"]);
        assert_eq!(d.rows[0], ["drss.v1", "1", "x,y"]);
    }

    #[test]
    fn commit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::new(dir.path().join("sub"));
        out.add("a.txt", "A");
        out.add("b.txt", "B");
        let written = out.commit().unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(fs::read_to_string(dir.path().join("sub/b.txt")).unwrap(), "B");
        assert_eq!(fs::read_dir(dir.path().join("sub")).unwrap().count(), 2);
    }

    #[test]
    fn failed_commit_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        // A directory in the way of the second file makes its rename fail.
        fs::create_dir(dir.path().join("b.txt")).unwrap();
        fs::write(dir.path().join("b.txt").join("keep"), "").unwrap();
        let mut out = Outputs::new(dir.path());
        out.add("a.txt", "A");
        out.add("b.txt", "B");
        assert!(out.commit().is_err());
        assert!(!dir.path().join("a.txt").exists());
        assert!(!dir.path().join(".a.txt.partial").exists());
        assert!(!dir.path().join(".b.txt.partial").exists());
    }
}
