//! File-backed byte sources, read options and open tracking.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use colgrove_core::metered::DEFAULT_TRANSFER_SIZE;
use colgrove_core::{ByteSource, MeteredSource, Metering, SkipLadder};

use crate::error::{IoContext, Result};

/// Positioned reads from an open file.
#[derive(Debug)]
pub struct FileSource {
    file: File,
    len: u64,
}

impl FileSource {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).at(path)?;
        let len = file.metadata().at(path)?.len();
        Ok(FileSource { file, len })
    }
}

impl ByteSource for FileSource {
    fn len(&self) -> u64 {
        self.len
    }

    fn read_at(&mut self, offset: u64, buf: &mut [u8]) -> colgrove_core::Result<()> {
        self.file
            .read_exact_at(buf, offset)
            .map_err(|e| colgrove_core::Error::Io(e.to_string()))
    }
}

/// Records every file opened for reading, with a count per path.
#[derive(Debug, Clone, Default)]
pub struct OpenLog(Arc<Mutex<BTreeMap<PathBuf, u64>>>);

impl OpenLog {
    pub fn record(&self, path: &Path) {
        *self
            .0
            .lock()
            .expect("open log poisoned")
            .entry(path.to_path_buf())
            .or_default() += 1;
    }

    pub fn opened(&self) -> BTreeMap<PathBuf, u64> {
        self.0.lock().expect("open log poisoned").clone()
    }

    pub fn was_opened(&self, path: &Path) -> bool {
        self.0.lock().expect("open log poisoned").contains_key(path)
    }

    pub fn clear(&self) {
        self.0.lock().expect("open log poisoned").clear();
    }
}

#[derive(Debug, Clone)]
pub struct ReadOptions {
    pub metering: Metering,
    pub open_log: OpenLog,
    /// Ladder used by skip-list columns; it is not recorded in the file.
    pub skip_ladder: SkipLadder,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            metering: Metering::Transfer(DEFAULT_TRANSFER_SIZE),
            open_log: OpenLog::default(),
            skip_ladder: SkipLadder::default(),
        }
    }
}

impl ReadOptions {
    pub fn exact() -> Self {
        ReadOptions {
            metering: Metering::Exact,
            ..Self::default()
        }
    }

    pub fn transfer(bytes: u64) -> Self {
        ReadOptions {
            metering: Metering::Transfer(bytes),
            ..Self::default()
        }
    }

    pub fn open(&self, path: &Path) -> Result<MeteredSource<FileSource>> {
        let src = FileSource::open(path)?;
        self.open_log.record(path);
        Ok(MeteredSource::new(src, self.metering))
    }
}

/// Buffered file writer that counts bytes written.
pub struct FileSink {
    path: PathBuf,
    out: BufWriter<File>,
    written: u64,
}

impl FileSink {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).at(parent)?;
        }
        let file = File::create(path).at(path)?;
        Ok(FileSink {
            path: path.to_path_buf(),
            out: BufWriter::with_capacity(1 << 20, file),
            written: 0,
        })
    }

    pub fn write_all(&mut self, bytes: &[u8]) -> Result<()> {
        self.out.write_all(bytes).at(&self.path)?;
        self.written += bytes.len() as u64;
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> Result<u64> {
        self.out.flush().at(&self.path)?;
        Ok(self.written)
    }
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut s = FileSink::create(path)?;
    s.write_all(bytes)?;
    s.finish()?;
    Ok(())
}

/// Sidecar schema path for single-file formats.
pub fn schema_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".schema");
    PathBuf::from(s)
}
