//! File helpers shared by the writers in this crate.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// Writes through a temporary file in the destination directory and renames
/// it into place once `fill` succeeds.
pub fn write_atomic<F>(path: &Path, fill: F) -> io::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Reads a one-entry-per-line lexicon: blank lines and lines starting with
/// `#` are ignored, entries are trimmed and case-folded.
pub fn read_lexicon(path: &Path) -> io::Result<BTreeSet<String>> {
    Ok(parse_lexicon(&fs::read_to_string(path)?))
}

pub fn parse_lexicon(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(crate::preprocess::case_fold)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_skips_comments_and_folds() {
        let set = parse_lexicon("# stop words\nИ\n\n  the \n#not this\nЌЕ\n");
        let got: Vec<&str> = set.iter().map(String::as_str).collect();
        assert_eq!(got, ["the", "и", "ќе"]);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.txt");
        write_atomic(&p, |w| w.write_all(b"one")).unwrap();
        write_atomic(&p, |w| w.write_all(b"two")).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
