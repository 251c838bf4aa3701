//! Enumeration budgets for the exact-search and analytic layers.

/// Caps on how much work the enumerating operations may do.
///
/// `scored_events` bounds exact value searches (one event = scoring one
/// support atom against one candidate strategy pair); `table_entries`
/// bounds how large an n-fold function table may be materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub scored_events: u64,
    pub table_entries: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            scored_events: 1_000_000_000,
            table_entries: 10_000_000,
        }
    }
}

impl Budget {
    pub fn with_scored_events(events: u64) -> Self {
        Budget {
            scored_events: events,
            ..Budget::default()
        }
    }
}
