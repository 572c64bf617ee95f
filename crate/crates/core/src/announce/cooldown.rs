use std::collections::HashMap;

use super::Announcement;

pub const DEFAULT_COOLDOWN_MS: u64 = 5000;

/// Last time each dedupe key was spoken.
#[derive(Debug, Clone)]
pub struct CooldownRegistry {
    pub window_ms: u64,
    last_spoken: HashMap<String, u64>,
}

impl CooldownRegistry {
    pub fn new(window_ms: u64) -> Self {
        Self {
            window_ms,
            last_spoken: HashMap::new(),
        }
    }

    pub fn last_spoken(&self, key: &str) -> Option<u64> {
        self.last_spoken.get(key).copied()
    }

    fn admits(&self, key: &str, now_ms: u64) -> bool {
        self.last_spoken
            .get(key)
            .is_none_or(|&t| now_ms.saturating_sub(t) >= self.window_ms)
    }
}

impl Default for CooldownRegistry {
    fn default() -> Self {
        Self::new(DEFAULT_COOLDOWN_MS)
    }
}

/// Admits announcements whose key was not spoken within the window and
/// records admitted keys at `now_ms`.
pub fn filter_cooldown(
    announcements: Vec<Announcement>,
    registry: &mut CooldownRegistry,
    now_ms: u64,
) -> Vec<Announcement> {
    let window = registry.window_ms;
    registry
        .last_spoken
        .retain(|_, &mut t| now_ms.saturating_sub(t) < window);
    let mut admitted = Vec::new();
    for a in announcements {
        if registry.admits(&a.dedupe_key, now_ms) {
            registry.last_spoken.insert(a.dedupe_key.clone(), now_ms);
            admitted.push(a);
        }
    }
    admitted
}
