use alloc::collections::BTreeMap;
use alloc::string::String;

use crate::column::ColumnStats;
use crate::metered::IoStats;

/// Counters accumulated over one scan (one split, one job or one run).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanMetrics {
    pub bytes_read_local: u64,
    pub bytes_read_remote: u64,
    /// Values deserialized, per column name.
    pub values_deserialized: BTreeMap<String, u64>,
    pub blocks_decompressed: u64,
    pub bytes_decompressed: u64,
    pub records_emitted: u64,
    pub wall_time_secs: f64,
    pub load_time_secs: f64,
}

impl ScanMetrics {
    pub fn bytes_read(&self) -> u64 {
        self.bytes_read_local + self.bytes_read_remote
    }

    pub fn total_values_deserialized(&self) -> u64 {
        self.values_deserialized.values().sum()
    }

    pub fn add_io(&mut self, io: &IoStats) {
        self.bytes_read_local += io.bytes_local;
        self.bytes_read_remote += io.bytes_remote;
    }

    pub fn add_column(&mut self, name: &str, stats: &ColumnStats) {
        *self.values_deserialized.entry(name.into()).or_default() += stats.values_deserialized;
        self.blocks_decompressed += stats.blocks_decompressed;
        self.bytes_decompressed += stats.bytes_decompressed;
    }

    pub fn add_values(&mut self, name: &str, n: u64) {
        *self.values_deserialized.entry(name.into()).or_default() += n;
    }

    pub fn merge(&mut self, other: &ScanMetrics) {
        self.bytes_read_local += other.bytes_read_local;
        self.bytes_read_remote += other.bytes_read_remote;
        for (k, v) in &other.values_deserialized {
            *self.values_deserialized.entry(k.clone()).or_default() += v;
        }
        self.blocks_decompressed += other.blocks_decompressed;
        self.bytes_decompressed += other.bytes_decompressed;
        self.records_emitted += other.records_emitted;
        self.wall_time_secs += other.wall_time_secs;
        self.load_time_secs += other.load_time_secs;
    }
}
