//! Directory index file, version 1.
//!
//! ```text
//! FEDSEL-DIR v1 dt=<real> db=<real> policy=<name>
//! C<TAB>name<TAB>record_count<TAB>df_max<TAB>est_latency_ms<TAB>price
//! T<TAB>term<TAB>collection<TAB>df
//! ```
//!
//! Lines are sorted within each section and every line, including the last,
//! ends with `\n`. Collection frequency and the max-owner view are not
//! stored; they are recomputed on load, and df_max is cross-checked
//! against the `T` lines.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::cori::{CoriParams, MissingTermPolicy};
use super::matrix::{CollectionStats, DfMatrix};
use super::utility::CollectionProfile;
use super::Directory;
use crate::error::{Error, Result};
use crate::index::CollectionId;
use crate::stemmer::Stem;

pub const MAGIC: &str = "FEDSEL-DIR";
pub const VERSION: &str = "v1";

pub fn to_index_string(dir: &Directory) -> String {
    let p = dir.params();
    let mut out = format!(
        "{MAGIC} {VERSION} dt={} db={} policy={}\n",
        p.d_t, p.d_b, p.missing_term_policy
    );
    let mut c_lines: Vec<String> = dir
        .matrix()
        .collections()
        .iter()
        .map(|c| {
            let profile = dir.profile(c.id.as_str());
            format!(
                "C\t{}\t{}\t{}\t{}\t{}",
                c.id, c.record_count, c.df_max, profile.est_latency_ms, profile.price
            )
        })
        .collect();
    c_lines.sort();
    let mut t_lines: Vec<String> = dir
        .matrix()
        .entries()
        .map(|(t, c, n)| format!("T\t{t}\t{c}\t{n}"))
        .collect();
    t_lines.sort();
    for line in c_lines.iter().chain(&t_lines) {
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// Writes to a sibling temp file and renames it into place, so readers
/// see either the old file or the new one.
pub fn save_index(dir: &Directory, path: &Path) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, to_index_string(dir)).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn load_index(path: &Path) -> Result<Directory> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::CorruptIndex(format!("{} is not UTF-8", path.display())))?;
    parse_index_str(&text)
}

fn corrupt(line: usize, what: impl std::fmt::Display) -> Error {
    Error::CorruptIndex(format!("line {line}: {what}"))
}

fn parse_header(line: &str) -> Result<CoriParams> {
    let mut fields = line.split(' ');
    if fields.next() != Some(MAGIC) {
        return Err(corrupt(1, "missing FEDSEL-DIR header"));
    }
    match fields.next() {
        Some(VERSION) => {}
        Some(other) => {
            return Err(Error::VersionMismatch {
                found: other.to_string(),
            })
        }
        None => return Err(corrupt(1, "missing version")),
    }
    let mut values = BTreeMap::new();
    for field in fields {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| corrupt(1, format!("bad header field {field:?}")))?;
        if values.insert(k, v).is_some() {
            return Err(corrupt(1, format!("repeated header field {k}")));
        }
    }
    let real = |k: &str| -> Result<f64> {
        values
            .get(k)
            .ok_or_else(|| corrupt(1, format!("missing {k}")))?
            .parse()
            .map_err(|_| corrupt(1, format!("bad {k}")))
    };
    let d_t = real("dt")?;
    let d_b = real("db")?;
    let policy: MissingTermPolicy = values
        .get("policy")
        .ok_or_else(|| corrupt(1, "missing policy"))?
        .parse()
        .map_err(|_| corrupt(1, "unknown policy"))?;
    if values.len() != 3 {
        return Err(corrupt(1, "unexpected header fields"));
    }
    CoriParams::new(d_t, d_b, policy).map_err(|e| corrupt(1, e))
}

fn int(line: usize, field: &str, what: &str) -> Result<u64> {
    field
        .parse()
        .map_err(|_| corrupt(line, format!("bad {what} {field:?}")))
}

pub fn parse_index_str(text: &str) -> Result<Directory> {
    if !text.ends_with('\n') {
        return Err(Error::CorruptIndex(
            "file truncated (no final newline)".into(),
        ));
    }
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::CorruptIndex("empty file".into()))?;
    let params = parse_header(header)?;

    let mut stats = Vec::new();
    let mut profiles = BTreeMap::new();
    let mut entries = Vec::new();
    let mut prev_c: Option<&str> = None;
    let mut prev_t: Option<&str> = None;
    for (no, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            ["C", name, records, df_max, latency, price] => {
                if prev_t.is_some() {
                    return Err(corrupt(no, "collection line after term lines"));
                }
                if prev_c.is_some_and(|p| p >= line) {
                    return Err(corrupt(no, "collection lines out of order"));
                }
                prev_c = Some(line);
                let id = CollectionId::new(*name).map_err(|e| corrupt(no, e))?;
                let price: f64 = price
                    .parse()
                    .map_err(|_| corrupt(no, format!("bad price {price:?}")))?;
                if !price.is_finite() || price < 0.0 {
                    return Err(corrupt(no, "price must be a non-negative number"));
                }
                let record_count = int(no, records, "record count")?;
                stats.push(CollectionStats {
                    id: id.clone(),
                    record_count,
                    df_max: int(no, df_max, "df_max")?,
                });
                profiles.insert(
                    id.clone(),
                    CollectionProfile {
                        collection: id,
                        est_latency_ms: int(no, latency, "latency")?,
                        price,
                        record_count,
                    },
                );
            }
            ["T", term, collection, df] => {
                if prev_t.is_some_and(|p| p >= line) {
                    return Err(corrupt(no, "term lines out of order"));
                }
                prev_t = Some(line);
                let term = Stem::from_stemmed(*term).map_err(|e| corrupt(no, e))?;
                let collection = CollectionId::new(*collection).map_err(|e| corrupt(no, e))?;
                entries.push((term, collection, int(no, df, "df")?));
            }
            _ => return Err(corrupt(no, "unrecognized line")),
        }
    }
    let matrix = DfMatrix::from_parts(stats, entries)?;
    Ok(Directory::new(matrix, profiles, params))
}
