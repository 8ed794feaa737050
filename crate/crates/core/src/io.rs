//! Persistence: the `SGTZ` binary table container, CSV dumps, and the tree
//! text format.
//!
//! Container layout (little endian):
//!
//! ```text
//! b"SGTZ" | version: u8 | descriptor length: u32 | descriptor: JSON weight family
//!        | N_max: u32 | (N_max + 1)^2 f64 values of ln Z(N, n), row-major in N
//! ```
//!
//! Tree files hold one tree per line as its space-separated outdegree word.
//! Blank lines and lines starting with `#` are skipped; a line holding only
//! `.` is the degenerate tree.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, SgError};
use crate::partition::ZTable;
use crate::trees::PlaneTree;
use crate::weights::{WeightFamily, WeightSequence};

pub const MAGIC: &[u8; 4] = b"SGTZ";
pub const VERSION: u8 = 1;

pub fn write_ztable<W: Write>(table: &ZTable, mut w: W) -> Result<()> {
    let descriptor = serde_json::to_vec(table.weights().family())?;
    let n_max = u32::try_from(table.n_max()).map_err(|_| SgError::Format("N_max does not fit in u32".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&(descriptor.len() as u32).to_le_bytes())?;
    w.write_all(&descriptor)?;
    w.write_all(&n_max.to_le_bytes())?;
    for x in table.log_entries() {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_ztable<R: Read>(mut r: R) -> Result<ZTable> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SgError::Format("not an SGTZ table (bad magic bytes)".into()));
    }
    let mut version = [0u8; 1];
    r.read_exact(&mut version)?;
    if version[0] != VERSION {
        return Err(SgError::Format(format!("unsupported SGTZ version {}", version[0])));
    }
    let len = read_u32(&mut r)? as usize;
    if len > 1 << 24 {
        return Err(SgError::Format(format!("descriptor length {len} is implausible")));
    }
    let mut descriptor = vec![0u8; len];
    r.read_exact(&mut descriptor)?;
    let family: WeightFamily = serde_json::from_slice(&descriptor)?;
    let ws = WeightSequence::new(family)?;
    let n_max = read_u32(&mut r)? as usize;
    let count = (n_max + 1)
        .checked_mul(n_max + 1)
        .ok_or_else(|| SgError::Format("N_max overflows".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(SgError::Format(format!(
            "expected {} bytes of table data, found {}",
            count * 8,
            bytes.len()
        )));
    }
    let entries = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    ZTable::from_log_entries(&ws, n_max, entries)
}

pub fn save_ztable(table: &ZTable, path: &Path) -> Result<()> {
    write_ztable(table, BufWriter::new(File::create(path)?))
}

pub fn load_ztable(path: &Path) -> Result<ZTable> {
    read_ztable(BufReader::new(File::open(path)?))
}

/// `N,n,logZ` rows for every tabulated entry; `-inf` is written as `-inf`.
pub fn write_ztable_csv<W: Write>(table: &ZTable, mut w: W) -> Result<()> {
    writeln!(w, "N,n,logZ")?;
    let stride = table.n_max() + 1;
    for (i, x) in table.log_entries().iter().enumerate() {
        writeln!(w, "{},{},{}", i / stride, i % stride, x)?;
    }
    w.flush()?;
    Ok(())
}

pub fn format_tree(t: &PlaneTree) -> String {
    if t.is_degenerate() {
        ".".to_string()
    } else {
        t.to_string()
    }
}

pub fn parse_tree_line(line: &str) -> Result<PlaneTree> {
    if line.trim() == "." {
        Ok(PlaneTree::degenerate())
    } else {
        line.parse()
    }
}

pub fn read_trees<R: BufRead>(r: R) -> Result<Vec<PlaneTree>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push(parse_tree_line(trimmed).map_err(|e| SgError::Format(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

pub fn read_tree_file(path: &Path) -> Result<Vec<PlaneTree>> {
    read_trees(BufReader::new(File::open(path)?))
}

pub fn write_trees<W: Write>(trees: &[PlaneTree], mut w: W) -> Result<()> {
    for t in trees {
        writeln!(w, "{}", format_tree(t))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::BuildOptions;

    #[test]
    fn container_round_trip() {
        let ws = WeightSequence::factorial_alpha(0.5).unwrap();
        let t = ZTable::build(&ws, &BuildOptions::new(40)).unwrap();
        let mut buf = Vec::new();
        write_ztable(&t, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"SGTZ");
        assert_eq!(buf[4], 1);
        let back = read_ztable(buf.as_slice()).unwrap();
        assert_eq!(back.n_max(), 40);
        assert_eq!(back.weights(), t.weights());
        for (a, b) in back.log_entries().iter().zip(t.log_entries()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.z_n(40).unwrap(), t.z_n(40).unwrap());
    }

    #[test]
    fn container_rejects_damage() {
        let t = ZTable::build(&WeightSequence::uniform(), &BuildOptions::new(5)).unwrap();
        let mut buf = Vec::new();
        write_ztable(&t, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_ztable(bad.as_slice()).is_err());
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(read_ztable(bad.as_slice()).is_err());
        assert!(read_ztable(&buf[..buf.len() - 3]).is_err());
    }

    #[test]
    fn csv_dump() {
        let t = ZTable::build(&WeightSequence::uniform(), &BuildOptions::new(2)).unwrap();
        let mut buf = Vec::new();
        write_ztable_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "N,n,logZ");
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[1], "0,0,0");
        assert_eq!(lines[2], "0,1,-inf");
    }

    #[test]
    fn tree_text_round_trip() {
        let trees = vec![PlaneTree::star(4), PlaneTree::degenerate(), PlaneTree::path(3)];
        let mut buf = Vec::new();
        write_trees(&trees, &mut buf).unwrap();
        let text = format!("# comment\n\n{}", String::from_utf8(buf).unwrap());
        assert_eq!(read_trees(text.as_bytes()).unwrap(), trees);
        assert!(read_trees("1 1".as_bytes()).is_err());
    }
}
