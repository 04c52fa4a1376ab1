use std::collections::{HashMap, HashSet, VecDeque};

use crate::crypto::RAND_LEN;
use crate::protocol::SupiIdentity;

pub const DEFAULT_NONCE_CACHE_CAPACITY: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonceStatus {
    Fresh,
    Replayed,
}

#[derive(Debug, Clone, Default)]
struct Seen {
    order: VecDeque<[u8; RAND_LEN]>,
    members: HashSet<[u8; RAND_LEN]>,
}

/// Per-subscriber record of recently used UE nonces, evicting oldest first.
#[derive(Debug, Clone)]
pub struct NonceCache {
    capacity: usize,
    seen: HashMap<SupiIdentity, Seen>,
}

impl Default for NonceCache {
    fn default() -> Self {
        Self::new(DEFAULT_NONCE_CACHE_CAPACITY)
    }
}

impl NonceCache {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "nonce cache capacity must be positive");
        Self {
            capacity,
            seen: HashMap::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Record `nonce` if unseen. A replayed nonce leaves the cache untouched.
    pub fn check(&mut self, supi: &SupiIdentity, nonce: &[u8; RAND_LEN]) -> NonceStatus {
        let entry = self.seen.entry(supi.clone()).or_default();
        if entry.members.contains(nonce) {
            return NonceStatus::Replayed;
        }
        if entry.order.len() == self.capacity {
            if let Some(old) = entry.order.pop_front() {
                entry.members.remove(&old);
            }
        }
        entry.order.push_back(*nonce);
        entry.members.insert(*nonce);
        NonceStatus::Fresh
    }

    pub fn len(&self, supi: &SupiIdentity) -> usize {
        self.seen.get(supi).map_or(0, |s| s.order.len())
    }

    pub fn is_empty(&self) -> bool {
        self.seen.values().all(|s| s.order.is_empty())
    }
}
