use std::collections::HashMap;

use super::{Payload, SensorEvent};

/// Ordinal assigned to a contact trace, starting at 1.
pub type PersonId = u32;

/// Maps opaque contact traces to small ordinals by first appearance, so
/// narratives can say "person 3" without exposing the hashed number.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PersonRegistry {
    ids: HashMap<String, PersonId>,
}

impl PersonRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the ordinal for `trace`, allocating the next one if unseen.
    pub fn assign(&mut self, trace: &str) -> PersonId {
        if let Some(id) = self.ids.get(trace) {
            return *id;
        }
        let id = self.ids.len() as PersonId + 1;
        self.ids.insert(trace.to_owned(), id);
        id
    }

    pub fn get(&self, trace: &str) -> Option<PersonId> {
        self.ids.get(trace).copied()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Labels every call and message with a person ordinal. Calls and messages
/// share one numbering. `events` must already be chronological.
pub fn assign_person_ids(
    mut events: Vec<SensorEvent>,
    mut registry: PersonRegistry,
) -> (Vec<SensorEvent>, PersonRegistry) {
    for event in &mut events {
        match &mut event.payload {
            Payload::Call { trace, person, .. } | Payload::Message { trace, person, .. } => {
                *person = Some(registry.assign(trace));
            }
            _ => {}
        }
    }
    (events, registry)
}
