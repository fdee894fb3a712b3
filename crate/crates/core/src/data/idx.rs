//! IDX binary ingestion (the MNIST container format): big-endian headers,
//! magic 0x00000803 for image tensors and 0x00000801 for label vectors.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};

use super::{Dataset, Label, Provenance};
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Load an image/label IDX pair. Pixels are scaled to `[0, 1]` and images
/// flattened row-major, so `input_dim = rows * cols`.
pub fn load_idx(image_path: impl AsRef<Path>, label_path: impl AsRef<Path>) -> Result<Dataset> {
    let image_path = image_path.as_ref();
    let label_path = label_path.as_ref();

    let mut img = BufReader::new(File::open(image_path)?);
    let magic = img.read_u32::<BigEndian>()?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "{}: bad image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}",
            image_path.display()
        )));
    }
    let n_images = img.read_u32::<BigEndian>()? as usize;
    let rows = img.read_u32::<BigEndian>()? as usize;
    let cols = img.read_u32::<BigEndian>()? as usize;
    let pixels = rows * cols;
    let mut raw = vec![0u8; n_images * pixels];
    img.read_exact(&mut raw).map_err(|e| {
        Error::Format(format!(
            "{}: truncated image data ({e})",
            image_path.display()
        ))
    })?;

    let mut lbl = BufReader::new(File::open(label_path)?);
    let magic = lbl.read_u32::<BigEndian>()?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format(format!(
            "{}: bad label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}",
            label_path.display()
        )));
    }
    let n_labels = lbl.read_u32::<BigEndian>()? as usize;
    if n_labels != n_images {
        return Err(Error::Format(format!(
            "count mismatch: {} images vs {} labels",
            n_images, n_labels
        )));
    }
    let mut raw_labels = vec![0u8; n_labels];
    lbl.read_exact(&mut raw_labels).map_err(|e| {
        Error::Format(format!(
            "{}: truncated label data ({e})",
            label_path.display()
        ))
    })?;

    let features: Vec<f64> = raw.iter().map(|&b| b as f64 / 255.0).collect();
    let labels: Vec<Label> = raw_labels
        .iter()
        .map(|&b| Label::Class(b as usize))
        .collect();
    let ids: Vec<u64> = (0..n_images as u64).collect();

    Dataset::new(
        image_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "idx".into()),
        Provenance::Idx,
        pixels,
        features,
        labels,
        ids,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn idx_images(images: &[Vec<u8>], rows: u32, cols: u32) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(&IMAGES_MAGIC.to_be_bytes()).unwrap();
        f.write_all(&(images.len() as u32).to_be_bytes()).unwrap();
        f.write_all(&rows.to_be_bytes()).unwrap();
        f.write_all(&cols.to_be_bytes()).unwrap();
        for img in images {
            f.write_all(img).unwrap();
        }
        f.flush().unwrap();
        f
    }

    fn idx_labels(labels: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(&LABELS_MAGIC.to_be_bytes()).unwrap();
        f.write_all(&(labels.len() as u32).to_be_bytes()).unwrap();
        f.write_all(labels).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn zero_image_decodes_to_zero_features() {
        let img = idx_images(&[vec![0u8; 784]], 28, 28);
        let lbl = idx_labels(&[0]);
        let ds = load_idx(img.path(), lbl.path()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.input_dim(), 784);
        assert!(ds.feature_row(0).iter().all(|&x| x == 0.0));
        assert_eq!(ds.labels()[0], Label::Class(0));
    }

    #[test]
    fn count_mismatch_rejected() {
        let img = idx_images(&[vec![0u8; 4]], 2, 2);
        let lbl = idx_labels(&[0, 1]);
        let err = load_idx(img.path(), lbl.path()).unwrap_err();
        assert!(err.to_string().contains("count mismatch"), "{err}");
    }

    #[test]
    fn bad_magic_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(&0xdead_beefu32.to_be_bytes()).unwrap();
        f.write_all(&[0u8; 12]).unwrap();
        f.flush().unwrap();
        let lbl = idx_labels(&[0]);
        let err = load_idx(f.path(), lbl.path()).unwrap_err();
        assert!(err.to_string().contains("bad image magic"), "{err}");
    }

    /// Cross-check against a second, straight-line decoder that walks the
    /// byte layout independently of the production reader.
    #[test]
    fn matches_independent_decoder() {
        let images: Vec<Vec<u8>> = vec![
            (0..16).map(|i| (i * 16) as u8).collect(),
            (0..16).map(|i| (255 - i * 10) as u8).collect(),
            vec![7u8; 16],
        ];
        let img = idx_images(&images, 4, 4);
        let lbl = idx_labels(&[3, 1, 4]);
        let ds = load_idx(img.path(), lbl.path()).unwrap();

        // independent decode: read the whole file, index arithmetic only
        let bytes = std::fs::read(img.path()).unwrap();
        let n = u32::from_be_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let r = u32::from_be_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let c = u32::from_be_bytes(bytes[12..16].try_into().unwrap()) as usize;
        assert_eq!((n, r, c), (3, 4, 4));
        let mut checksum_ref = 0u64;
        let mut checksum_got = 0u64;
        for i in 0..n {
            for p in 0..r * c {
                let byte = bytes[16 + i * r * c + p];
                checksum_ref = checksum_ref.wrapping_mul(31).wrapping_add(byte as u64);
                let got = (ds.feature_row(i)[p] * 255.0).round() as u64;
                checksum_got = checksum_got.wrapping_mul(31).wrapping_add(got);
                assert_eq!(ds.feature_row(i)[p], byte as f64 / 255.0);
            }
        }
        assert_eq!(checksum_ref, checksum_got);
    }
}
