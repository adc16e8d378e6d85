//! CIFAR-10 binary batch loader.
//!
//! The public format: each batch file holds 10000 records of 3073 bytes,
//! one label byte (0..=9) followed by 3072 pixel bytes (row-major RGB
//! planes). Pixels map to `byte / 255`, bit-exact in f64.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::Dataset;

pub const CIFAR_DIM: usize = 3072;
pub const CIFAR_RECORD: usize = CIFAR_DIM + 1;
pub const CIFAR_RECORDS_PER_BATCH: usize = 10_000;

const TRAIN_BATCHES: [&str; 5] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
];
const TEST_BATCH: &str = "test_batch.bin";

/// Which batch files to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CifarInclude {
    Train,
    Test,
    Both,
}

impl CifarInclude {
    fn files(self) -> Vec<&'static str> {
        match self {
            CifarInclude::Train => TRAIN_BATCHES.to_vec(),
            CifarInclude::Test => vec![TEST_BATCH],
            CifarInclude::Both => {
                let mut v = TRAIN_BATCHES.to_vec();
                v.push(TEST_BATCH);
                v
            }
        }
    }
}

/// Loads CIFAR-10 binary batches from `dir`.
pub fn load_cifar10_binary(dir: impl AsRef<Path>, include: CifarInclude) -> Result<Dataset> {
    let dir = dir.as_ref();
    let files = include.files();
    let n = files.len() * CIFAR_RECORDS_PER_BATCH;
    let mut features = Vec::with_capacity(n * CIFAR_DIM);
    let mut labels = Vec::with_capacity(n);

    for name in &files {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        if bytes.len() != CIFAR_RECORD * CIFAR_RECORDS_PER_BATCH {
            return Err(Error::Format(format!(
                "{}: expected {} bytes ({} records of {}), found {}",
                path.display(),
                CIFAR_RECORD * CIFAR_RECORDS_PER_BATCH,
                CIFAR_RECORDS_PER_BATCH,
                CIFAR_RECORD,
                bytes.len()
            )));
        }
        for rec in bytes.chunks_exact(CIFAR_RECORD) {
            let label = rec[0];
            if label > 9 {
                return Err(Error::Format(format!(
                    "{}: label byte {} out of range 0..=9",
                    path.display(),
                    label
                )));
            }
            labels.push(label as u32);
            features.extend(rec[1..].iter().map(|&b| b as f64 / 255.0));
        }
    }

    let name = match include {
        CifarInclude::Train => "cifar10-train",
        CifarInclude::Test => "cifar10-test",
        CifarInclude::Both => "cifar10-both",
    };
    Dataset::new(features, CIFAR_DIM, labels, 10, name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    /// One synthetic batch: record i has label `labels[i % labels.len()]`
    /// and every pixel set to `fill(i)`.
    fn write_batch(dir: &Path, name: &str, labels: &[u8], fill: impl Fn(usize) -> u8) {
        let mut bytes = Vec::with_capacity(CIFAR_RECORD * CIFAR_RECORDS_PER_BATCH);
        for i in 0..CIFAR_RECORDS_PER_BATCH {
            bytes.push(labels[i % labels.len()]);
            bytes.extend(std::iter::repeat(fill(i)).take(CIFAR_DIM));
        }
        let mut f = std::fs::File::create(dir.join(name)).unwrap();
        f.write_all(&bytes).unwrap();
    }

    #[test]
    fn loads_test_batch_with_exact_pixel_scaling() {
        let dir = tempfile::tempdir().unwrap();
        write_batch(dir.path(), TEST_BATCH, &[0, 1, 2, 3], |i| (i % 256) as u8);
        let ds = load_cifar10_binary(dir.path(), CifarInclude::Test).unwrap();
        assert_eq!(ds.n(), 10_000);
        assert_eq!(ds.d(), 3072);
        assert_eq!(ds.class_count(), 10);
        // byte b maps to exactly b/255
        assert_eq!(ds.row(255)[0], 1.0);
        assert_eq!(ds.row(54)[0], 54.0 / 255.0);
        assert_eq!(ds.row(0)[0], 0.0);
    }

    #[test]
    fn wrong_record_size_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(TEST_BATCH), vec![0u8; 1000]).unwrap();
        let err = load_cifar10_binary(dir.path(), CifarInclude::Test).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn missing_train_file_fails() {
        let dir = tempfile::tempdir().unwrap();
        write_batch(dir.path(), "data_batch_1.bin", &[0, 1], |_| 0);
        let err = load_cifar10_binary(dir.path(), CifarInclude::Train).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn both_concatenates_train_then_test() {
        let dir = tempfile::tempdir().unwrap();
        for name in TRAIN_BATCHES {
            write_batch(dir.path(), name, &[0, 1], |_| 10);
        }
        write_batch(dir.path(), TEST_BATCH, &[2, 3], |_| 20);
        let ds = load_cifar10_binary(dir.path(), CifarInclude::Both).unwrap();
        assert_eq!(ds.n(), 60_000);
        assert_eq!(ds.row(0)[0], 10.0 / 255.0);
        assert_eq!(ds.row(50_000)[0], 20.0 / 255.0);
        assert_eq!(ds.label(50_000), 2);
    }
}
