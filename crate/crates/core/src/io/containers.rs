//! Binary frame (`PFVF`) and waveform (`PFWV`) containers.
//!
//! Frames: magic, u16 version, T/H/W/C as u32, fps as f32, then `T·H·W·C`
//! bytes of row-major 8-bit RGB. Waveforms: magic, u16 version, sample
//! rate as f64, n as u64, n f64 samples, then the quality mask as an
//! LSB-first bitset of `ceil(n / 8)` bytes. Everything is little endian.

use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::FrameTensor;
use crate::signal::Waveform;

pub const FRAME_MAGIC: &[u8; 4] = b"PFVF";
pub const WAVE_MAGIC: &[u8; 4] = b"PFWV";
pub const FORMAT_VERSION: u16 = 1;

/// Cursor that reports the byte offset of every failure.
pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn pos(&self) -> usize {
        self.pos
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(
                self.pos as u64,
                format!("truncated {what}: need {n} bytes, {} left", self.buf.len() - self.pos),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("exact length"))
    }

    pub(crate) fn magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.take(4, "magic")? != magic {
            return Err(Error::format(0, format!("bad magic, expected {}", String::from_utf8_lossy(magic))));
        }
        Ok(())
    }

    pub(crate) fn version(&mut self, supported: u16) -> Result<u16> {
        let at = self.pos as u64;
        let v = u16::from_le_bytes(self.array("version")?);
        if v != supported {
            return Err(Error::format(at, format!("unsupported version {v}")));
        }
        Ok(v)
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array(what)?))
    }

    pub(crate) fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array(what)?))
    }

    pub(crate) fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array(what)?))
    }

    pub(crate) fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array(what)?))
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::format(
                self.pos as u64,
                format!("{} trailing bytes", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}

/// 8-bit video as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameContainer {
    pub t: u32,
    pub h: u32,
    pub w: u32,
    pub c: u32,
    pub fps: f32,
    pub payload: Vec<u8>,
}

impl FrameContainer {
    pub fn new(t: u32, h: u32, w: u32, c: u32, fps: f32, payload: Vec<u8>) -> Result<Self> {
        let n = t as u64 * h as u64 * w as u64 * c as u64;
        if n != payload.len() as u64 {
            return Err(Error::InvalidArgument(format!(
                "payload has {} bytes, dimensions need {n}",
                payload.len()
            )));
        }
        Ok(Self { t, h, w, c, fps, payload })
    }

    /// Quantizes `[0, 1]` intensities to 8 bits.
    pub fn from_frames(f: &FrameTensor) -> Self {
        let payload = f
            .data()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        Self {
            t: f.n_frames() as u32,
            h: f.height() as u32,
            w: f.width() as u32,
            c: 3,
            fps: f.fps() as f32,
            payload,
        }
    }

    pub fn to_frames(&self) -> Result<FrameTensor> {
        if self.c != 3 {
            return Err(Error::InvalidArgument(format!("expected 3 channels, got {}", self.c)));
        }
        let data = self.payload.iter().map(|&b| b as f32 / 255.0).collect();
        FrameTensor::new(self.t as usize, self.h as usize, self.w as usize, self.fps as f64, data)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(26 + self.payload.len());
        out.extend_from_slice(FRAME_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        for d in [self.t, self.h, self.w, self.c] {
            out.extend_from_slice(&d.to_le_bytes());
        }
        out.extend_from_slice(&self.fps.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.magic(FRAME_MAGIC)?;
        r.version(FORMAT_VERSION)?;
        let [t, h, w, c] = [r.u32("T")?, r.u32("H")?, r.u32("W")?, r.u32("C")?];
        let fps = r.f32("fps")?;
        let n = t as u64 * h as u64 * w as u64 * c as u64;
        let n = usize::try_from(n).map_err(|_| Error::format(r.pos() as u64, "payload too large"))?;
        let payload = r.take(n, "payload")?.to_vec();
        r.finish()?;
        Ok(Self { t, h, w, c, fps, payload })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}

pub fn encode_waveform(w: &Waveform) -> Vec<u8> {
    let n = w.len();
    let mut out = Vec::with_capacity(22 + 8 * n + n.div_ceil(8));
    out.extend_from_slice(WAVE_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&w.sample_rate_hz().to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for v in w.samples() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut bits = vec![0u8; n.div_ceil(8)];
    for (i, &q) in w.quality_mask().iter().enumerate() {
        if q {
            bits[i / 8] |= 1 << (i % 8);
        }
    }
    out.extend_from_slice(&bits);
    out
}

pub fn decode_waveform(bytes: &[u8]) -> Result<Waveform> {
    let mut r = ByteReader::new(bytes);
    r.magic(WAVE_MAGIC)?;
    r.version(FORMAT_VERSION)?;
    let fs = r.f64("sample rate")?;
    let n_at = r.pos() as u64;
    let n = usize::try_from(r.u64("sample count")?).map_err(|_| Error::format(n_at, "sample count too large"))?;
    let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::format(n_at, "sample count too large"))?, "samples")?;
    let samples: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mask_at = r.pos() as u64;
    let bits = r.take(n.div_ceil(8), "mask")?;
    if n % 8 != 0 && bits[n / 8] >> (n % 8) != 0 {
        return Err(Error::format(mask_at + (n / 8) as u64, "mask padding bits are set"));
    }
    r.finish()?;
    let mask = (0..n).map(|i| bits[i / 8] >> (i % 8) & 1 == 1).collect();
    Waveform::with_mask(samples, fs, mask).map_err(|e| Error::format(0, format!("invalid waveform: {e}")))
}

pub fn write_waveform(w: &Waveform, path: &Path) -> Result<()> {
    std::fs::write(path, encode_waveform(w))?;
    Ok(())
}

pub fn read_waveform(path: &Path) -> Result<Waveform> {
    decode_waveform(&std::fs::read(path)?)
}

/// Writes `time_s,value,usable` rows.
pub fn write_waveform_csv(w: &Waveform, path: &Path) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["time_s", "value", "usable"])?;
    let fs = w.sample_rate_hz();
    for (i, (v, q)) in w.samples().iter().zip(w.quality_mask()).enumerate() {
        out.write_record([(i as f64 / fs).to_string(), v.to_string(), (*q as u8).to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip() {
        let c = FrameContainer::new(2, 2, 3, 3, 30.0, (0..36).collect()).unwrap();
        let bytes = c.encode();
        assert_eq!(FrameContainer::decode(&bytes).unwrap(), c);
    }

    #[test]
    fn frame_errors_carry_offsets() {
        let c = FrameContainer::new(1, 1, 1, 3, 30.0, vec![1, 2, 3]).unwrap();
        let mut bytes = c.encode();
        bytes.push(0);
        assert!(matches!(FrameContainer::decode(&bytes), Err(Error::Format { offset: 29, .. })));
        bytes.truncate(27);
        assert!(matches!(FrameContainer::decode(&bytes), Err(Error::Format { offset: 26, .. })));
        bytes[0] = b'X';
        assert!(matches!(FrameContainer::decode(&bytes), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn waveform_round_trip_keeps_mask() {
        let mask = (0..11).map(|i| i % 3 != 0).collect();
        let w = Waveform::with_mask((0..11).map(|i| i as f64 * 0.1).collect(), 60.0, mask).unwrap();
        let back = decode_waveform(&encode_waveform(&w)).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn waveform_rejects_bad_version() {
        let w = Waveform::new(vec![1.0, 2.0], 10.0).unwrap();
        let mut bytes = encode_waveform(&w);
        bytes[4] = 9;
        assert!(matches!(decode_waveform(&bytes), Err(Error::Format { offset: 4, .. })));
    }
}
