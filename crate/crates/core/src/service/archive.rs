use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub const DEFAULT_ARCHIVE_CAPACITY: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    /// Id of the utterance that first put this text in the archive.
    pub id: String,
    pub text: String,
    /// Unix milliseconds of the most recent time this text was spoken.
    pub created_at: u64,
}

/// Recent messages, most recent first, one entry per distinct text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageArchive {
    entries: VecDeque<ArchiveEntry>,
    capacity: usize,
}

impl Default for MessageArchive {
    fn default() -> Self {
        Self::new(DEFAULT_ARCHIVE_CAPACITY)
    }
}

impl MessageArchive {
    /// A zero capacity is raised to 1.
    pub fn new(capacity: usize) -> Self {
        MessageArchive {
            entries: VecDeque::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &ArchiveEntry> {
        self.entries.iter()
    }

    pub fn get(&self, index: usize) -> Option<&ArchiveEntry> {
        self.entries.get(index)
    }

    pub fn position_of_id(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id)
    }

    pub fn position_of_text(&self, text: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.text == text)
    }

    /// Records a spoken text. A text already present moves to the front and
    /// keeps its id; a new one is inserted and the oldest entry is evicted
    /// when full.
    pub fn record(&mut self, id: &str, text: &str, now: u64) -> &ArchiveEntry {
        match self.position_of_text(text) {
            Some(pos) => self.touch(pos, now),
            None => {
                self.entries.push_front(ArchiveEntry {
                    id: id.to_owned(),
                    text: text.to_owned(),
                    created_at: now,
                });
                self.entries.truncate(self.capacity);
            }
        }
        &self.entries[0]
    }

    /// Moves the entry at `index` to the front and stamps it with `now`.
    pub fn touch(&mut self, index: usize, now: u64) {
        if let Some(mut entry) = self.entries.remove(index) {
            entry.created_at = now;
            self.entries.push_front(entry);
        }
    }

    /// Shrinking drops the oldest entries.
    pub fn set_capacity(&mut self, capacity: usize) {
        self.capacity = capacity.max(1);
        self.entries.truncate(self.capacity);
    }
}
