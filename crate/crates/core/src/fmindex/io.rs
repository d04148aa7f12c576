//! Binary index file.
//!
//! All integers are little-endian. Layout:
//!
//! ```text
//! magic            8 bytes   "GSPNFMIX"
//! version          u32       1
//! alphabet_size    u32       258
//! n                u64       text length including the terminator
//! sample_rate      u64
//! reversed         u8        0 or 1
//! occ_block        u32       128
//! bwt              u64 len, then len × u16
//! c_array          u64 len, then len × u64          (alphabet_size + 1 entries)
//! occ              u64 len, then len × u32          ((n / occ_block + 1) × alphabet_size)
//! sampled_rows     u64 len, then len × u64          (bit words, ceil(n / 64))
//! sa_samples       u64 len, then len × u64
//! boundaries       u64 len, then len × (u64 start, u64 end, u32 id_len, id_len bytes UTF-8)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::occ::{OccTable, RankBits, OCC_BLOCK};
use super::FmIndex;
use crate::corpus::{Boundary, Symbol, ALPHABET_SIZE};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GSPNFMIX";
pub const FORMAT_VERSION: u32 = 1;

fn put_u64<W: Write>(w: &mut W, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated index file: {e}")))?;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn len(&mut self, max: u64, what: &str) -> Result<usize> {
        let len = self.u64()?;
        if len > max {
            return Err(Error::Format(format!("{what} length {len} exceeds {max}")));
        }
        Ok(len as usize)
    }

    fn array<T>(&mut self, max: u64, what: &str, mut item: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        let len = self.len(max, what)?;
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(item(self)?);
        }
        Ok(out)
    }
}

impl FmIndex {
    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let n = self.len() as u64;
        w.write_all(MAGIC)?;
        put_u32(w, FORMAT_VERSION)?;
        put_u32(w, ALPHABET_SIZE as u32)?;
        put_u64(w, n)?;
        put_u64(w, self.sample_rate as u64)?;
        w.write_all(&[self.reversed as u8])?;
        put_u32(w, OCC_BLOCK as u32)?;

        put_u64(w, self.bwt.len() as u64)?;
        for &s in &self.bwt {
            w.write_all(&s.to_le_bytes())?;
        }
        put_u64(w, self.c_array.len() as u64)?;
        for &c in &self.c_array {
            put_u64(w, c as u64)?;
        }
        let occ = self.occ.raw();
        put_u64(w, occ.len() as u64)?;
        for &v in occ {
            put_u32(w, v)?;
        }
        let words = self.sampled_rows.words();
        put_u64(w, words.len() as u64)?;
        for &v in words {
            put_u64(w, v)?;
        }
        put_u64(w, self.sa_samples.len() as u64)?;
        for &v in &self.sa_samples {
            put_u64(w, v as u64)?;
        }
        put_u64(w, self.boundaries.len() as u64)?;
        for b in &self.boundaries {
            put_u64(w, b.start as u64)?;
            put_u64(w, b.end as u64)?;
            put_u32(w, b.doc_id.len() as u32)?;
            w.write_all(b.doc_id.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = Reader { inner: r };
        if &r.bytes::<8>()? != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let alphabet = r.u32()?;
        if alphabet as usize != ALPHABET_SIZE {
            return Err(Error::Format(format!("unsupported alphabet size {alphabet}")));
        }
        let n = r.u64()?;
        let sample_rate = r.u64()? as usize;
        let reversed = match r.u8()? {
            0 => false,
            1 => true,
            b => return Err(Error::Format(format!("bad reversed flag {b}"))),
        };
        let block = r.u32()?;
        if block as usize != OCC_BLOCK {
            return Err(Error::Format(format!("unsupported occ block size {block}")));
        }
        if n == 0 || sample_rate == 0 {
            return Err(Error::Format("empty index or zero sample rate".into()));
        }

        let bwt: Vec<Symbol> = r.array(n, "bwt", |r| r.u16())?;
        if bwt.len() as u64 != n || bwt.iter().any(|&s| s as usize >= ALPHABET_SIZE) {
            return Err(Error::Format("bwt does not match header".into()));
        }
        let c_array: Vec<usize> = r.array(ALPHABET_SIZE as u64 + 1, "c_array", |r| Ok(r.u64()? as usize))?;
        if c_array.len() != ALPHABET_SIZE + 1 || c_array[ALPHABET_SIZE] as u64 != n {
            return Err(Error::Format("c_array does not match header".into()));
        }
        let occ_len = (n / OCC_BLOCK as u64 + 1) * ALPHABET_SIZE as u64;
        let occ_raw = r.array(occ_len, "occ", |r| r.u32())?;
        let occ = OccTable::from_raw(occ_raw, bwt.len())
            .ok_or_else(|| Error::Format("occ table does not match header".into()))?;
        let words = r.array(n.div_ceil(64), "sampled_rows", |r| r.u64())?;
        if words.len() as u64 != n.div_ceil(64) {
            return Err(Error::Format("sampled row bits do not match header".into()));
        }
        let sampled_rows = RankBits::from_words(words, n as usize);
        let sa_samples = r.array(n, "sa_samples", |r| Ok(r.u64()? as usize))?;
        if sa_samples.len() != sampled_rows.count_ones() || sampled_rows.len() != bwt.len() {
            return Err(Error::Format("suffix array samples do not match sampled rows".into()));
        }
        let boundaries = r.array(n, "boundaries", |r| {
            let start = r.u64()? as usize;
            let end = r.u64()? as usize;
            let id_len = r.u32()? as usize;
            let mut id = vec![0u8; id_len];
            r.inner
                .read_exact(&mut id)
                .map_err(|e| Error::Format(format!("truncated index file: {e}")))?;
            let doc_id = String::from_utf8(id).map_err(|_| Error::Format("doc_id is not UTF-8".into()))?;
            Ok(Boundary { start, end, doc_id })
        })?;

        let mut trailing = [0u8; 1];
        if r.inner.read(&mut trailing).map_err(|e| Error::Format(e.to_string()))? != 0 {
            return Err(Error::Format("trailing bytes after index".into()));
        }

        Ok(FmIndex {
            bwt,
            c_array,
            occ,
            sampled_rows,
            sa_samples,
            sample_rate,
            boundaries,
            reversed,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }
}
