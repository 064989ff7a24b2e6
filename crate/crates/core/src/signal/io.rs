//! Little-endian binary container for sampled signals.
//!
//! Layout (48-byte header, then payload):
//!
//! | offset | size | field                                   |
//! |-------:|-----:|-----------------------------------------|
//! | 0      | 8    | magic `TDRCWF\r\n`                      |
//! | 8      | 2    | format version (u16)                    |
//! | 10     | 1    | kind: 0 real, 1 complex                 |
//! | 11     | 1    | flags: bit 0 = normalized to `[0, 1]`   |
//! | 12     | 4    | columns (u32, 1 for plain waveforms)    |
//! | 16     | 8    | sample rate in Hz (f64)                 |
//! | 24     | 8    | center wavelength in nm (f64, 0 if n/a) |
//! | 32     | 8    | ASE PSD in mW/Hz (f64)                  |
//! | 40     | 8    | sample count (u64, complex counts once) |
//! | 48     | ...  | f64 samples; complex as (re, im) pairs  |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{ElectricalWaveform, OpticalField, SignalError};

pub const MAGIC: [u8; 8] = *b"TDRCWF\r\n";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Real,
    Complex,
}

/// One stored signal. `data` holds `count` reals or `2 * count` interleaved
/// complex components; `columns > 1` marks a row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub kind: RecordKind,
    pub normalized: bool,
    pub columns: u32,
    pub sample_rate_hz: f64,
    pub center_wavelength_nm: f64,
    pub ase_psd_mw_per_hz: f64,
    pub data: Vec<f64>,
}

impl Record {
    pub fn count(&self) -> usize {
        match self.kind {
            RecordKind::Real => self.data.len(),
            RecordKind::Complex => self.data.len() / 2,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.data.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(match self.kind {
            RecordKind::Real => 0,
            RecordKind::Complex => 1,
        });
        out.push(self.normalized as u8);
        out.extend_from_slice(&self.columns.to_le_bytes());
        out.extend_from_slice(&self.sample_rate_hz.to_le_bytes());
        out.extend_from_slice(&self.center_wavelength_nm.to_le_bytes());
        out.extend_from_slice(&self.ase_psd_mw_per_hz.to_le_bytes());
        out.extend_from_slice(&(self.count() as u64).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SignalError> {
        if bytes.len() < HEADER_LEN {
            return Err(SignalError::CorruptHeader(format!(
                "header needs {HEADER_LEN} bytes, file has {}",
                bytes.len()
            )));
        }
        if bytes[..8] != MAGIC {
            return Err(SignalError::CorruptHeader("bad magic".into()));
        }
        let version = u16::from_le_bytes([bytes[8], bytes[9]]);
        if version != FORMAT_VERSION {
            return Err(SignalError::VersionMismatch {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let kind = match bytes[10] {
            0 => RecordKind::Real,
            1 => RecordKind::Complex,
            k => return Err(SignalError::CorruptHeader(format!("unknown kind tag {k}"))),
        };
        if bytes[11] & !1 != 0 {
            return Err(SignalError::CorruptHeader(format!(
                "unknown flags {:#04x}",
                bytes[11]
            )));
        }
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let columns = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
        if columns == 0 {
            return Err(SignalError::CorruptHeader("zero columns".into()));
        }
        let count = u64::from_le_bytes(bytes[40..48].try_into().unwrap()) as usize;
        let scalars = match kind {
            RecordKind::Real => count,
            RecordKind::Complex => count.checked_mul(2).ok_or_else(|| {
                SignalError::CorruptHeader(format!("sample count {count} overflows"))
            })?,
        };
        let expected = scalars
            .checked_mul(8)
            .ok_or_else(|| SignalError::CorruptHeader(format!("sample count {count} overflows")))?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() < expected {
            return Err(SignalError::Truncated {
                expected,
                found: payload.len(),
            });
        }
        if payload.len() > expected {
            return Err(SignalError::CorruptHeader(format!(
                "{} trailing bytes after payload",
                payload.len() - expected
            )));
        }
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Record {
            kind,
            normalized: bytes[11] & 1 == 1,
            columns,
            sample_rate_hz: f64_at(16),
            center_wavelength_nm: f64_at(24),
            ase_psd_mw_per_hz: f64_at(32),
            data,
        })
    }
}

impl From<&ElectricalWaveform> for Record {
    fn from(w: &ElectricalWaveform) -> Self {
        Record {
            kind: RecordKind::Real,
            normalized: w.normalized,
            columns: 1,
            sample_rate_hz: w.sample_rate_hz,
            center_wavelength_nm: 0.0,
            ase_psd_mw_per_hz: 0.0,
            data: w.samples.clone(),
        }
    }
}

impl From<&OpticalField> for Record {
    fn from(f: &OpticalField) -> Self {
        Record {
            kind: RecordKind::Complex,
            normalized: false,
            columns: 1,
            sample_rate_hz: f.sample_rate_hz,
            center_wavelength_nm: f.center_wavelength_nm,
            ase_psd_mw_per_hz: f.ase_psd_mw_per_hz,
            data: f.samples.iter().flat_map(|c| [c.re, c.im]).collect(),
        }
    }
}

pub fn write_record(path: impl AsRef<Path>, rec: &Record) -> Result<(), SignalError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&rec.to_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn read_record(path: impl AsRef<Path>) -> Result<Record, SignalError> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    Record::from_bytes(&bytes)
}

pub fn write_electrical(path: impl AsRef<Path>, w: &ElectricalWaveform) -> Result<(), SignalError> {
    write_record(path, &Record::from(w))
}

pub fn read_electrical(path: impl AsRef<Path>) -> Result<ElectricalWaveform, SignalError> {
    let rec = read_record(path)?;
    if rec.kind != RecordKind::Real {
        return Err(SignalError::WrongKind {
            expected: RecordKind::Real,
            found: rec.kind,
        });
    }
    Ok(ElectricalWaveform {
        samples: rec.data,
        sample_rate_hz: rec.sample_rate_hz,
        normalized: rec.normalized,
    })
}

pub fn write_optical(path: impl AsRef<Path>, f: &OpticalField) -> Result<(), SignalError> {
    write_record(path, &Record::from(f))
}

pub fn read_optical(path: impl AsRef<Path>) -> Result<OpticalField, SignalError> {
    let rec = read_record(path)?;
    if rec.kind != RecordKind::Complex {
        return Err(SignalError::WrongKind {
            expected: RecordKind::Complex,
            found: rec.kind,
        });
    }
    Ok(OpticalField {
        samples: rec
            .data
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect(),
        sample_rate_hz: rec.sample_rate_hz,
        center_wavelength_nm: rec.center_wavelength_nm,
        ase_psd_mw_per_hz: rec.ase_psd_mw_per_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Rng;

    fn fnv1a(bytes: impl Iterator<Item = u8>) -> u64 {
        bytes.fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }

    fn field_checksum(f: &OpticalField) -> u64 {
        fnv1a(
            f.samples
                .iter()
                .flat_map(|c| c.re.to_bits().to_le_bytes().into_iter().chain(c.im.to_bits().to_le_bytes())),
        )
    }

    #[test]
    fn electrical_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.bin");
        let mut w = ElectricalWaveform::new(vec![0.0, 0.25, 1.0, -0.0, 1e-300], 4e11);
        w.normalized = true;
        write_electrical(&p, &w).unwrap();
        let back = read_electrical(&p).unwrap();
        assert_eq!(back, w);
        assert_eq!(back.samples[3].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn million_sample_field_checksum() {
        let mut rng = Rng::new(5);
        let samples: Vec<Complex64> = (0..1_000_000).map(|_| rng.complex_normal() * 3.0).collect();
        let mut f = OpticalField::new(samples, 4e11, 1550.0);
        f.ase_psd_mw_per_hz = 1.25e-15;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.bin");
        write_optical(&p, &f).unwrap();
        let back = read_optical(&p).unwrap();
        assert_eq!(field_checksum(&back), field_checksum(&f));
        assert_eq!(back, f);
    }

    #[test]
    fn wrong_magic_is_header_error() {
        let mut bytes = Record::from(&ElectricalWaveform::new(vec![1.0], 1.0)).to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            Record::from_bytes(&bytes),
            Err(SignalError::CorruptHeader(_))
        ));
    }

    #[test]
    fn truncated_payload_is_distinct() {
        let bytes = Record::from(&ElectricalWaveform::new(vec![1.0, 2.0, 3.0], 1.0)).to_bytes();
        let err = Record::from_bytes(&bytes[..bytes.len() - 4]).unwrap_err();
        assert!(matches!(err, SignalError::Truncated { expected: 24, found: 20 }));
    }

    #[test]
    fn version_mismatch_is_distinct() {
        let mut bytes = Record::from(&ElectricalWaveform::new(vec![1.0], 1.0)).to_bytes();
        bytes[8] = 9;
        assert!(matches!(
            Record::from_bytes(&bytes),
            Err(SignalError::VersionMismatch { found: 9, .. })
        ));
    }

    #[test]
    fn kind_is_checked_on_typed_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.bin");
        write_electrical(&p, &ElectricalWaveform::new(vec![1.0], 1.0)).unwrap();
        assert!(matches!(read_optical(&p), Err(SignalError::WrongKind { .. })));
    }
}
