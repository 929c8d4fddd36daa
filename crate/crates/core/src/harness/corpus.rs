use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::parse::{parse, ParseError};
use crate::syntax::{Expr, Lang};

/// One program read from a corpus directory.
#[derive(Clone, Debug)]
pub struct CorpusEntry {
    /// File stem, used as the case id.
    pub name: String,
    pub path: PathBuf,
    pub expr: Expr,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
}

/// Loads every `*.src` file directly inside `dir` as a source program,
/// sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    load_ext(dir, "src", Lang::Source)
}

/// Loads every file with extension `ext` in `dir`, parsed as `lang`.
pub fn load_ext(dir: &Path, ext: &str, lang: Lang) -> Result<Vec<CorpusEntry>, CorpusError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|d| d.ok().map(|d| d.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == ext))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let expr = parse(&text, lang).map_err(|source| CorpusError::Parse {
                path: path.clone(),
                source,
            })?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(CorpusEntry { name, path, expr })
        })
        .collect()
}
