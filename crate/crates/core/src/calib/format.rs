//! Binary calibration table format (little-endian).
//!
//! ```text
//! magic "CROPTBL1" | u16 version | u8 k_bits | u8 reserved
//! u32 samples_per_cell | u32 num_illuminants | u32 num_colors
//! per illuminant: [u8; 32] id (zero padded) | 3 × f64 camera_rgb | f64 temperature (NaN if none)
//! per illuminant, per color ascending: samples × 3 × u16
//! u32 CRC32 of everything above
//! ```

use std::fs::File;
use std::io::{self, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use super::CalibrationTable;
use crate::color::{to_chromaticity, KBits, LinearRgb};
use crate::error::{Error, Result};
use crate::illum::{IlluminantKind, IlluminantSpec};

pub const TABLE_MAGIC: &[u8; 8] = b"CROPTBL1";
pub const TABLE_VERSION: u16 = 1;
const HEADER_LEN: u64 = 24;
const ID_LEN: usize = 32;
const ILLUM_RECORD_LEN: u64 = ID_LEN as u64 + 32;

struct Crc<W> {
    inner: W,
    hasher: crc32fast::Hasher,
}

impl<W: Write> Write for Crc<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

fn encode_id(id: &str) -> Result<[u8; ID_LEN]> {
    let bytes = id.as_bytes();
    if bytes.len() > ID_LEN || bytes.contains(&0) {
        return Err(Error::InvalidParameter(format!(
            "illuminant id {id:?} must be at most {ID_LEN} bytes with no NUL"
        )));
    }
    let mut out = [0u8; ID_LEN];
    out[..bytes.len()].copy_from_slice(bytes);
    Ok(out)
}

fn write_body<W: Write>(table: &CalibrationTable, w: &mut W) -> Result<()> {
    let io = |e| Error::io("<table stream>", e);
    let mut header = Vec::with_capacity(HEADER_LEN as usize);
    header.extend_from_slice(TABLE_MAGIC);
    header.extend_from_slice(&TABLE_VERSION.to_le_bytes());
    header.push(table.k_bits().get());
    header.push(0);
    header.extend_from_slice(&(table.samples_per_cell() as u32).to_le_bytes());
    header.extend_from_slice(&(table.illuminants().len() as u32).to_le_bytes());
    header.extend_from_slice(&(table.num_colors() as u32).to_le_bytes());
    w.write_all(&header).map_err(io)?;
    for il in table.illuminants() {
        w.write_all(&encode_id(&il.id)?).map_err(io)?;
        for v in il.camera_rgb.to_array() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        let t = il.temperature_kelvin.unwrap_or(f64::NAN);
        w.write_all(&t.to_le_bytes()).map_err(io)?;
    }
    let mut buf = Vec::new();
    for i in 0..table.illuminants().len() {
        buf.clear();
        buf.extend(table.chunk(i).iter().flat_map(|v| v.to_le_bytes()));
        w.write_all(&buf).map_err(io)?;
    }
    Ok(())
}

fn rebase_io(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

pub fn write_table(table: &CalibrationTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = Crc {
        inner: BufWriter::new(file),
        hasher: crc32fast::Hasher::new(),
    };
    write_body(table, &mut w).map_err(|e| rebase_io(e, path))?;
    let crc = w.hasher.finalize();
    let mut inner = w.inner;
    inner
        .write_all(&crc.to_le_bytes())
        .and_then(|_| inner.flush())
        .map_err(|e| Error::io(path, e))
}

/// CRC32 the table would carry on disk.
pub fn table_checksum(table: &CalibrationTable) -> Result<u32> {
    let mut w = Crc {
        inner: io::sink(),
        hasher: crc32fast::Hasher::new(),
    };
    write_body(table, &mut w)?;
    Ok(w.hasher.finalize())
}

#[derive(Debug, Clone)]
struct Header {
    k: KBits,
    samples: usize,
    num_illums: usize,
    num_colors: usize,
}

impl Header {
    fn chunk_bytes(&self) -> u64 {
        (self.num_colors * self.samples * 6) as u64
    }

    fn samples_offset(&self) -> u64 {
        HEADER_LEN + ILLUM_RECORD_LEN * self.num_illums as u64
    }

    fn file_len(&self) -> u64 {
        self.samples_offset() + self.chunk_bytes() * self.num_illums as u64 + 4
    }
}

fn parse_header(bytes: &[u8], actual_len: u64) -> Result<Header> {
    if bytes.len() < TABLE_MAGIC.len() || &bytes[..8] != TABLE_MAGIC {
        if bytes.len() < TABLE_MAGIC.len() && TABLE_MAGIC.starts_with(bytes) {
            return Err(Error::Truncated {
                expected: HEADER_LEN,
                found: actual_len,
            });
        }
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN as usize {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: actual_len,
        });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != TABLE_VERSION {
        return Err(Error::VersionMismatch(version));
    }
    let k = KBits::new(bytes[10]).map_err(|_| Error::MalformedTable(format!("k_bits = {}", bytes[10])))?;
    let h = Header {
        k,
        samples: u32_at(12),
        num_illums: u32_at(16),
        num_colors: u32_at(20),
    };
    if h.num_colors != k.num_colors() {
        return Err(Error::MalformedTable(format!(
            "num_colors {} inconsistent with k_bits {}",
            h.num_colors,
            k.get()
        )));
    }
    if h.samples == 0 {
        return Err(Error::MalformedTable("zero samples per cell".into()));
    }
    Ok(h)
}

fn parse_illuminants(bytes: &[u8], n: usize) -> Result<Vec<IlluminantSpec>> {
    (0..n)
        .map(|i| {
            let rec = &bytes[i * ILLUM_RECORD_LEN as usize..(i + 1) * ILLUM_RECORD_LEN as usize];
            let end = rec[..ID_LEN].iter().position(|&b| b == 0).unwrap_or(ID_LEN);
            let id = std::str::from_utf8(&rec[..end])
                .map_err(|_| Error::MalformedTable(format!("illuminant {i}: id is not UTF-8")))?
                .to_string();
            let f = |o: usize| f64::from_le_bytes(rec[ID_LEN + o..ID_LEN + o + 8].try_into().unwrap());
            let camera_rgb = LinearRgb::new(f(0), f(8), f(16));
            let t = f(24);
            let chromaticity = to_chromaticity(camera_rgb)
                .map_err(|_| Error::MalformedTable(format!("illuminant {id}: zero response")))?;
            // kept bit-exact (no renormalization) so re-serialization is identical
            Ok(IlluminantSpec {
                id,
                kind: if t.is_nan() {
                    IlluminantKind::Grid
                } else {
                    IlluminantKind::Planckian
                },
                chromaticity,
                camera_rgb,
                temperature_kelvin: (!t.is_nan()).then_some(t),
                spd: None,
            })
        })
        .collect()
}

fn decode_chunk(bytes: &[u8]) -> Vec<u16> {
    bytes
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect()
}

/// Reads and fully validates a table file.
pub fn read_table(path: impl AsRef<Path>) -> Result<CalibrationTable> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let len = bytes.len() as u64;
    let h = parse_header(&bytes, len)?;
    let expected = h.file_len();
    if len < expected {
        return Err(Error::Truncated { expected, found: len });
    }
    if len > expected {
        return Err(Error::MalformedTable(format!(
            "{} trailing bytes after checksum",
            len - expected
        )));
    }
    let body = &bytes[..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    let illuminants = parse_illuminants(&body[HEADER_LEN as usize..], h.num_illums)?;
    let start = h.samples_offset() as usize;
    let cb = h.chunk_bytes() as usize;
    let chunks = (0..h.num_illums)
        .map(|i| decode_chunk(&body[start + i * cb..start + (i + 1) * cb]))
        .collect();
    CalibrationTable::from_parts(None, h.k, h.samples, illuminants, chunks)
}

/// Table file opened for per-illuminant loading; sample chunks are read on demand.
#[derive(Debug)]
pub struct TableFile {
    path: PathBuf,
    header: Header,
    illuminants: Vec<IlluminantSpec>,
}

impl TableFile {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut f = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let len = f.metadata().map_err(|e| Error::io(&path, e))?.len();
        let mut head = vec![0u8; HEADER_LEN.min(len) as usize];
        f.read_exact(&mut head).map_err(|e| Error::io(&path, e))?;
        let header = parse_header(&head, len)?;
        let expected = header.file_len();
        if len < expected {
            return Err(Error::Truncated { expected, found: len });
        }
        let mut block = vec![0u8; (ILLUM_RECORD_LEN * header.num_illums as u64) as usize];
        f.read_exact(&mut block).map_err(|e| Error::io(&path, e))?;
        let illuminants = parse_illuminants(&block, header.num_illums)?;
        Ok(Self {
            path,
            header,
            illuminants,
        })
    }

    pub fn illuminants(&self) -> &[IlluminantSpec] {
        &self.illuminants
    }

    pub fn k_bits(&self) -> KBits {
        self.header.k
    }

    pub fn samples_per_cell(&self) -> usize {
        self.header.samples
    }

    /// Streams the whole file through CRC32 and compares with the trailer.
    pub fn verify(&self) -> Result<u32> {
        let mut f = File::open(&self.path).map_err(|e| Error::io(&self.path, e))?;
        let body_len = self.header.file_len() - 4;
        let mut hasher = crc32fast::Hasher::new();
        let mut remaining = body_len;
        let mut buf = vec![0u8; 1 << 20];
        while remaining > 0 {
            let n = remaining.min(buf.len() as u64) as usize;
            f.read_exact(&mut buf[..n])
                .map_err(|e| Error::io(&self.path, e))?;
            hasher.update(&buf[..n]);
            remaining -= n as u64;
        }
        let mut tail = [0u8; 4];
        f.read_exact(&mut tail).map_err(|e| Error::io(&self.path, e))?;
        let stored = u32::from_le_bytes(tail);
        let computed = hasher.finalize();
        if stored != computed {
            return Err(Error::ChecksumMismatch { stored, computed });
        }
        Ok(stored)
    }

    /// Table restricted to the given illuminant indices (in the order given).
    pub fn load(&self, indices: &[usize]) -> Result<CalibrationTable> {
        let mut f = File::open(&self.path).map_err(|e| Error::io(&self.path, e))?;
        let cb = self.header.chunk_bytes();
        let mut illums = Vec::with_capacity(indices.len());
        let mut chunks = Vec::with_capacity(indices.len());
        let mut buf = vec![0u8; cb as usize];
        for &i in indices {
            let il = self
                .illuminants
                .get(i)
                .ok_or_else(|| Error::UnknownIlluminant(format!("index {i}")))?;
            f.seek(SeekFrom::Start(self.header.samples_offset() + cb * i as u64))
                .and_then(|_| f.read_exact(&mut buf))
                .map_err(|e| Error::io(&self.path, e))?;
            illums.push(il.clone());
            chunks.push(decode_chunk(&buf));
        }
        CalibrationTable::from_parts(None, self.header.k, self.header.samples, illums, chunks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calib::{synth_table_diagonal, SynthConfig};
    use crate::spectrum::SensorModel;

    fn table(k: u8, n: usize) -> CalibrationTable {
        let illums: Vec<_> = (0..n)
            .map(|i| {
                IlluminantSpec::from_rgb(
                    format!("il-{i}"),
                    if i % 2 == 0 {
                        IlluminantKind::Grid
                    } else {
                        IlluminantKind::Planckian
                    },
                    LinearRgb::new(1.0 + i as f64, 0.7, 0.4),
                    (i % 2 == 1).then_some(3000.0 + i as f64),
                    None,
                )
                .unwrap()
            })
            .collect();
        let cfg = SynthConfig {
            k: KBits::new(k).unwrap(),
            noise_sigma: 0.03,
            seed: 11,
            ..Default::default()
        };
        synth_table_diagonal(&illums, &SensorModel::identity("id"), &cfg).unwrap()
    }

    #[test]
    fn file_size_matches_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.bin");
        let t = table(3, 2);
        write_table(&t, &p).unwrap();
        let size = std::fs::metadata(&p).unwrap().len();
        // 24-byte header, 2 × 64-byte illuminant records, samples, 4-byte CRC
        assert_eq!(size, 24 + 2 * 64 + 2 * 32768 * 25 * 6 + 4);
    }

    #[test]
    fn roundtrip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
        let t = table(5, 3);
        write_table(&t, &a).unwrap();
        let back = read_table(&a).unwrap();
        write_table(&back, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(back.illuminants()[1].temperature_kelvin, Some(3001.0));
        assert_eq!(back.illuminants()[0].kind, IlluminantKind::Grid);
        assert_eq!(table_checksum(&t).unwrap(), table_checksum(&back).unwrap());
    }

    #[test]
    fn distinct_errors_for_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.bin");
        write_table(&table(6, 1), &p).unwrap();
        let good = std::fs::read(&p).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(read_table(&p), Err(Error::BadMagic)));

        let mut bad = good.clone();
        bad[8] = 2;
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(read_table(&p), Err(Error::VersionMismatch(2))));

        std::fs::write(&p, &good[..good.len() - 10]).unwrap();
        assert!(matches!(read_table(&p), Err(Error::Truncated { .. })));
        assert!(matches!(TableFile::open(&p), Err(Error::Truncated { .. })));

        std::fs::write(&p, &good[..5]).unwrap();
        assert!(matches!(read_table(&p), Err(Error::Truncated { .. })));

        let mut bad = good.clone();
        let mid = good.len() / 2;
        bad[mid] ^= 0x40;
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(read_table(&p), Err(Error::ChecksumMismatch { .. })));
        assert!(matches!(
            TableFile::open(&p).unwrap().verify(),
            Err(Error::ChecksumMismatch { .. })
        ));

        let mut bad = good.clone();
        let n = bad.len();
        bad[n - 1] ^= 1;
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(read_table(&p), Err(Error::ChecksumMismatch { .. })));
    }

    #[test]
    fn lazy_load_matches_full_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.bin");
        let t = table(5, 4);
        write_table(&t, &p).unwrap();
        let f = TableFile::open(&p).unwrap();
        assert_eq!(f.verify().unwrap(), table_checksum(&t).unwrap());
        assert_eq!(f.illuminants().len(), 4);
        let sub = f.load(&[2, 0]).unwrap();
        assert_eq!(sub.illuminants()[0].id, "il-2");
        assert_eq!(sub.chunk(0), t.chunk(2));
        assert_eq!(sub.chunk(1), t.chunk(0));
        assert!(f.load(&[9]).is_err());
    }

    #[test]
    fn long_ids_rejected() {
        let il = IlluminantSpec::from_rgb(
            "x".repeat(33),
            IlluminantKind::Grid,
            LinearRgb::splat(1.0),
            None,
            None,
        )
        .unwrap();
        let cfg = SynthConfig {
            k: KBits::new(7).unwrap(),
            ..Default::default()
        };
        let t = synth_table_diagonal(&[il], &SensorModel::identity("id"), &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(write_table(&t, dir.path().join("t.bin")).is_err());
    }
}
