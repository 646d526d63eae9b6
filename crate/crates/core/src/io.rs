//! File plumbing: JSONL streams, atomic output files, and the `QATN` tensor
//! container.
//!
//! Tensor file layout, little-endian, one or more tensors back to back:
//!
//! ```text
//! magic  4 bytes  "QATN"
//! rank   u32
//! dims   u32 × rank
//! data   f64 × product(dims), row-major
//! ```

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"QATN";

/// Iterator over the records of a JSONL stream. Blank lines are skipped.
pub struct JsonlReader<R, T> {
    reader: R,
    path: PathBuf,
    line: usize,
    buf: String,
    _marker: PhantomData<T>,
}

impl<T: DeserializeOwned> JsonlReader<BufReader<File>, T> {
    pub fn open(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(JsonlReader::new(BufReader::with_capacity(1 << 16, f), path))
    }
}

impl<R: BufRead, T: DeserializeOwned> JsonlReader<R, T> {
    pub fn new(reader: R, path: impl Into<PathBuf>) -> Self {
        JsonlReader {
            reader,
            path: path.into(),
            line: 0,
            buf: String::new(),
            _marker: PhantomData,
        }
    }
}

impl<R: BufRead, T: DeserializeOwned> Iterator for JsonlReader<R, T> {
    type Item = Result<T>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            }
            self.line += 1;
            if self.buf.trim().is_empty() {
                continue;
            }
            return Some(
                serde_json::from_str(&self.buf).map_err(|source| Error::Json {
                    path: self.path.clone(),
                    line: self.line,
                    source,
                }),
            );
        }
    }
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    JsonlReader::open(path)?.collect()
}

/// Output file that only appears at its final path after [`commit`].
/// Dropping it uncommitted removes the temporary file.
///
/// [`commit`]: AtomicFile::commit
pub struct AtomicFile {
    path: PathBuf,
    writer: BufWriter<NamedTempFile>,
}

impl AtomicFile {
    pub fn create(path: &Path) -> Result<Self> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let tmp = tempfile::Builder::new()
            .prefix(".alias-qa-")
            .tempfile_in(dir)
            .map_err(|e| Error::io(path, e))?;
        Ok(AtomicFile {
            path: path.to_owned(),
            writer: BufWriter::with_capacity(1 << 16, tmp),
        })
    }

    pub fn write_json_line<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.writer, value)
            .map_err(|e| Error::io(&self.path, e.into()))?;
        self.writer
            .write_all(b"\n")
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn commit(self) -> Result<()> {
        let path = self.path;
        let tmp = self
            .writer
            .into_inner()
            .map_err(|e| Error::io(&path, e.into_error()))?;
        tmp.as_file().sync_all().map_err(|e| Error::io(&path, e))?;
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        Ok(())
    }
}

impl Write for AtomicFile {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.writer.write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.writer.flush()
    }
}

/// Write `bytes` to `path` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = AtomicFile::create(path)?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))?;
    f.commit()
}

/// Dense row-major f64 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "dims {dims:?} need {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { dims, data })
    }
}

pub fn write_tensors<W: Write>(mut w: W, tensors: &[Tensor]) -> io::Result<()> {
    for t in tensors {
        w.write_all(TENSOR_MAGIC)?;
        w.write_all(&(t.dims.len() as u32).to_le_bytes())?;
        for &d in &t.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &x in &t.data {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn read_tensors<R: Read>(mut r: R) -> Result<Vec<Tensor>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::io("<tensors>", e))?;
    let mut pos = 0usize;
    let mut out = Vec::new();
    while pos < bytes.len() || out.is_empty() {
        let magic = take(&bytes, &mut pos, 4)?;
        if magic != TENSOR_MAGIC {
            return Err(tensor_format(format!("bad magic {magic:?}")));
        }
        let rank = read_u32_at(&bytes, &mut pos)? as usize;
        let mut dims = Vec::with_capacity(rank.min(16));
        for _ in 0..rank {
            dims.push(read_u32_at(&bytes, &mut pos)? as usize);
        }
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| tensor_format(format!("dims {dims:?} overflow")))?;
        let data = take(&bytes, &mut pos, n)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push(Tensor { dims, data });
    }
    Ok(out)
}

fn tensor_format(detail: String) -> Error {
    Error::Format {
        what: "tensor file",
        detail,
    }
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8]> {
    let end = pos
        .checked_add(n)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| tensor_format(format!("truncated at byte {pos}")))?;
    let s = &bytes[*pos..end];
    *pos = end;
    Ok(s)
}

fn read_u32_at(bytes: &[u8], pos: &mut usize) -> Result<u32> {
    Ok(u32::from_le_bytes(take(bytes, pos, 4)?.try_into().unwrap()))
}

pub fn load_tensors(path: &Path) -> Result<Vec<Tensor>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_tensors(BufReader::new(f)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn jsonl_skips_blank_lines_and_reports_line() {
        let data = "{\"a\":1}\n\n{\"a\":2}\nnot json\n";
        let rows: Vec<Result<serde_json::Value>> =
            JsonlReader::new(data.as_bytes(), "mem").collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].as_ref().unwrap()["a"], 2);
        match &rows[2] {
            Err(Error::Json { line, .. }) => assert_eq!(*line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn atomic_file_appears_only_on_commit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        let mut f = AtomicFile::create(&path).unwrap();
        f.write_json_line(&serde_json::json!({"x": 1})).unwrap();
        assert!(!path.exists());
        drop(f);
        assert!(!path.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);

        let mut f = AtomicFile::create(&path).unwrap();
        f.write_json_line(&serde_json::json!({"x": 1})).unwrap();
        f.commit().unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "{\"x\":1}\n");
    }

    #[test]
    fn tensor_layout() {
        let t = Tensor::new(vec![1, 2], vec![1.5, -2.0]).unwrap();
        let mut buf = Vec::new();
        write_tensors(&mut buf, std::slice::from_ref(&t)).unwrap();
        assert_eq!(&buf[..4], b"QATN");
        assert_eq!(&buf[4..8], &2u32.to_le_bytes());
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(&buf[12..16], &2u32.to_le_bytes());
        assert_eq!(&buf[16..24], &1.5f64.to_le_bytes());
        assert_eq!(buf.len(), 32);
        assert!(read_tensors(&buf[..30]).is_err());
        assert!(read_tensors(&b""[..]).is_err());
        assert!(Tensor::new(vec![2, 2], vec![0.0]).is_err());
    }

    proptest! {
        #[test]
        fn tensors_round_trip(shapes in proptest::collection::vec(proptest::collection::vec(0usize..4, 0..4), 1..4)) {
            let tensors: Vec<Tensor> = shapes
                .into_iter()
                .map(|dims| {
                    let n: usize = dims.iter().product();
                    Tensor::new(dims, (0..n).map(|i| i as f64 * 0.25 - 1.0).collect()).unwrap()
                })
                .collect();
            let mut buf = Vec::new();
            write_tensors(&mut buf, &tensors).unwrap();
            prop_assert_eq!(read_tensors(&buf[..]).unwrap(), tensors);
        }
    }
}
