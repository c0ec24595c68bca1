//! Hand-rolled NPY v1.0/v2.0 support, restricted to what the pipeline
//! needs: little-endian float32/float64, C-order, 2-D arrays.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";

fn format_error(offset: usize, reason: impl Into<String>) -> Error {
    Error::FormatError {
        offset,
        reason: reason.into(),
    }
}

/// Reads a 2-D `<f4`/`<f8` C-order NPY file, widening to f64.
pub fn load_npy(path: &Path) -> Result<Array2<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(format_error(0, "not an NPY file (bad magic)"));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (header_len, header_start) = match major {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 => {
            if bytes.len() < 12 {
                return Err(format_error(8, "truncated v2.0 header length"));
            }
            let len = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
            (len, 12)
        }
        _ => {
            return Err(format_error(
                6,
                format!("unsupported NPY version {major}.{minor}"),
            ));
        }
    };
    let data_start = header_start + header_len;
    if bytes.len() < data_start {
        return Err(format_error(header_start, "truncated header"));
    }
    let header = std::str::from_utf8(&bytes[header_start..data_start])
        .map_err(|_| format_error(header_start, "header is not valid UTF-8"))?;

    let descr = dict_value(header, "descr", header_start)?;
    let item_size = match descr.trim_matches(|c| c == '\'' || c == '"') {
        "<f4" => 4,
        "<f8" => 8,
        other => {
            return Err(format_error(
                header_start,
                format!("unsupported dtype {other} (need <f4 or <f8)"),
            ));
        }
    };
    let fortran = dict_value(header, "fortran_order", header_start)?;
    if fortran != "False" {
        return Err(format_error(
            header_start,
            "Fortran-order arrays are not supported",
        ));
    }
    let shape_str = dict_value(header, "shape", header_start)?;
    let dims: Vec<usize> = shape_str
        .trim_start_matches('(')
        .trim_end_matches(')')
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| format_error(header_start, format!("bad shape entry '{s}'")))
        })
        .collect::<Result<_>>()?;
    if dims.len() != 2 {
        return Err(format_error(
            header_start,
            format!("need a 2-D array, got {}-D", dims.len()),
        ));
    }
    let (n, d) = (dims[0], dims[1]);
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(item_size))
        .ok_or_else(|| format_error(header_start, "shape overflow"))?;
    let data = &bytes[data_start..];
    if data.len() != expected {
        return Err(format_error(
            data_start,
            format!("expected {expected} data bytes, found {}", data.len()),
        ));
    }
    let mut flat = Vec::with_capacity(n * d);
    if item_size == 4 {
        for chunk in data.chunks_exact(4) {
            flat.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
        }
    } else {
        for chunk in data.chunks_exact(8) {
            flat.push(f64::from_le_bytes(chunk.try_into().unwrap()));
        }
    }
    Array2::from_shape_vec((n, d), flat).map_err(|e| Error::ShapeMismatch(e.to_string()))
}

/// Extracts the value of `'key': value` from the python-dict-literal header.
fn dict_value(header: &str, key: &str, base: usize) -> Result<String> {
    let needle = format!("'{key}':");
    let start = header
        .find(&needle)
        .ok_or_else(|| format_error(base, format!("header missing '{key}'")))?
        + needle.len();
    let rest = &header[start..];
    let rest = rest.trim_start();
    // values are either quoted strings, booleans, or a parenthesized tuple
    let end = if rest.starts_with('(') {
        rest.find(')')
            .map(|i| i + 1)
            .ok_or_else(|| format_error(base, "unterminated shape tuple"))?
    } else {
        rest.find(',')
            .or_else(|| rest.find('}'))
            .ok_or_else(|| format_error(base, "unterminated header value"))?
    };
    Ok(rest[..end].trim().to_string())
}

/// Writes a v1.0 `<f8` C-order NPY file.
pub fn save_npy(path: &Path, matrix: &Array2<f64>) -> Result<()> {
    let (n, d) = matrix.dim();
    let dict = format!("{{'descr': '<f8', 'fortran_order': False, 'shape': ({n}, {d}), }}");
    // total header (magic through trailing newline) padded to 64 bytes
    let unpadded = 10 + dict.len() + 1;
    let padding = (64 - unpadded % 64) % 64;
    let header_len = (dict.len() + padding + 1) as u16;

    let mut out = Vec::with_capacity(10 + header_len as usize + n * d * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat(b' ').take(padding));
    out.push(b'\n');
    for &v in matrix.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn round_trip_f64() {
        let m = array![[1.5, -2.25, 0.0], [f64::MIN_POSITIVE, 1e300, -7.0]];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.npy");
        save_npy(&p, &m).unwrap();
        let back = load_npy(&p).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn header_is_aligned() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.npy");
        save_npy(&p, &array![[1.0], [2.0]]).unwrap();
        let bytes = fs::read(&p).unwrap();
        let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        assert_eq!((10 + header_len) % 64, 0);
        assert_eq!(bytes[10 + header_len - 1], b'\n');
    }

    #[test]
    fn f32_widened() {
        // hand-build a v1.0 <f4 file
        let dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2), }";
        let unpadded = 10 + dict.len() + 1;
        let padding = (64 - unpadded % 64) % 64;
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&[1, 0]);
        bytes.extend_from_slice(&((dict.len() + padding + 1) as u16).to_le_bytes());
        bytes.extend_from_slice(dict.as_bytes());
        bytes.extend(std::iter::repeat(b' ').take(padding));
        bytes.push(b'\n');
        for v in [0.5f32, -1.5, 3.25, 100.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.npy");
        fs::write(&p, bytes).unwrap();
        let m = load_npy(&p).unwrap();
        assert_eq!(m, array![[0.5, -1.5], [3.25, 100.0]]);
    }

    #[test]
    fn v2_header_accepted() {
        let dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (1, 2), }";
        let unpadded = 12 + dict.len() + 1;
        let padding = (64 - unpadded % 64) % 64;
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&[2, 0]);
        bytes.extend_from_slice(&((dict.len() + padding + 1) as u32).to_le_bytes());
        bytes.extend_from_slice(dict.as_bytes());
        bytes.extend(std::iter::repeat(b' ').take(padding));
        bytes.push(b'\n');
        for v in [4.0f64, 5.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.npy");
        fs::write(&p, bytes).unwrap();
        assert_eq!(load_npy(&p).unwrap(), array![[4.0, 5.0]]);
    }

    #[test]
    fn bad_magic_offset_zero() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.npy");
        fs::write(&p, b"NOTNPY..").unwrap();
        match load_npy(&p).unwrap_err() {
            Error::FormatError { offset, .. } => assert_eq!(offset, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_data_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.npy");
        save_npy(&p, &array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 4);
        fs::write(&p, bytes).unwrap();
        assert!(matches!(load_npy(&p), Err(Error::FormatError { .. })));
    }

    #[test]
    fn one_d_rejected() {
        let dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (3,), }";
        let unpadded = 10 + dict.len() + 1;
        let padding = (64 - unpadded % 64) % 64;
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&[1, 0]);
        bytes.extend_from_slice(&((dict.len() + padding + 1) as u16).to_le_bytes());
        bytes.extend_from_slice(dict.as_bytes());
        bytes.extend(std::iter::repeat(b' ').take(padding));
        bytes.push(b'\n');
        for v in [1.0f64, 2.0, 3.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.npy");
        fs::write(&p, bytes).unwrap();
        assert!(matches!(load_npy(&p), Err(Error::FormatError { .. })));
    }
}
