use super::schema::{EpisodeRecord, FilterVerdict};
use crate::action::ActionRecord;
use crate::env::REQUIRED_FLAGS;

/// Login walls win over system side effects.
pub fn filter_records<'a>(records: impl IntoIterator<Item = &'a ActionRecord>) -> FilterVerdict {
    let mut side_effect = false;
    for r in records {
        if r.login_gated {
            return FilterVerdict::DroppedLogin;
        }
        side_effect |= r.cleared_flags.iter().any(|f| REQUIRED_FLAGS.contains(&f.as_str()));
    }
    if side_effect {
        FilterVerdict::DroppedSystemSideEffect
    } else {
        FilterVerdict::Kept
    }
}

pub fn filter_episode(episode: &EpisodeRecord) -> FilterVerdict {
    filter_records(episode.records())
}
