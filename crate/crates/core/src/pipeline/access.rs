use std::sync::Mutex;

use crate::scene::{ChannelVector, Dataset};

/// One read of dataset channels by a pipeline stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Access {
    pub stage: &'static str,
    pub band: usize,
    pub indices: Vec<usize>,
}

/// Records which channels each stage reads, so tests can audit that
/// test-set channels never reach the charting stage of a leak-free variant.
#[derive(Debug, Default)]
pub struct AccessLog {
    entries: Mutex<Vec<Access>>,
}

impl AccessLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, stage: &'static str, band: usize, indices: &[usize]) {
        self.entries.lock().expect("log poisoned").push(Access { stage, band, indices: indices.to_vec() });
    }

    pub fn entries(&self) -> Vec<Access> {
        self.entries.lock().expect("log poisoned").clone()
    }

    /// Every channel index `stage` read, across all bands.
    pub fn indices_read_by(&self, stage: &str) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .entries()
            .into_iter()
            .filter(|a| a.stage == stage)
            .flat_map(|a| a.indices)
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn stage_count(&self, stage: &str) -> usize {
        self.entries().iter().filter(|a| a.stage == stage).count()
    }
}

/// Channel reads routed through the access log.
pub struct ChannelReader<'a> {
    pub dataset: &'a Dataset,
    pub log: &'a AccessLog,
}

impl ChannelReader<'_> {
    pub fn read(&self, stage: &'static str, band: usize, indices: &[usize]) -> Vec<ChannelVector> {
        self.log.record(stage, band, indices);
        let all = self.dataset.channels(band);
        indices.iter().map(|&i| all[i].clone()).collect()
    }
}
