//! Name generation shared by the passes.

use std::collections::HashSet;

/// Deterministic supply of `_g<N>` names. Source identifiers cannot start
/// with an underscore, so these never collide with user names.
#[derive(Debug, Default, Clone)]
pub struct Fresh {
    next: usize,
}

impl Fresh {
    pub fn new() -> Fresh {
        Fresh::default()
    }

    pub fn name(&mut self) -> String {
        let n = self.next;
        self.next += 1;
        format!("_g{n}")
    }
}

/// A primed variant of `base` that is not in `avoid`.
pub fn rename_away(base: &str, avoid: &HashSet<String>) -> String {
    let stem = base.trim_end_matches('\'');
    let mut candidate = format!("{stem}'");
    while avoid.contains(&candidate) {
        candidate.push('\'');
    }
    candidate
}
