use serde::Serialize;

use crate::morphspec::Direction;

/// One observable runtime occurrence. Serialized as a flat JSON object with
/// a `kind` tag.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EngineEvent {
    pub tick: u64,
    pub vis: String,
    pub morph: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl EngineEvent {
    pub fn to_jsonl(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }

    pub fn kind_name(&self) -> &'static str {
        self.kind.name()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventKind {
    MachineEntered {
        state: String,
        /// Other states the vis also matched, when entry was ambiguous.
        #[serde(skip_serializing_if = "Vec::is_empty")]
        also_eligible: Vec<String>,
    },
    TransitionStarted {
        transition: String,
        direction: Direction,
        from: String,
        to: String,
        properties: Vec<String>,
    },
    TweenProgress {
        transition: String,
        direction: Direction,
        t: f64,
    },
    TransitionCompleted {
        transition: String,
        direction: Direction,
        state: String,
    },
    TransitionInterrupted {
        transition: String,
        direction: Direction,
        state: String,
        reason: String,
    },
    MachineExited {
        state: String,
        reason: String,
    },
    ConflictBlocked {
        transition: String,
        direction: Direction,
        by: String,
    },
    SignalFault {
        #[serde(skip_serializing_if = "Option::is_none")]
        signal: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        transition: Option<String>,
        message: String,
    },
    KeyframeError {
        transition: String,
        direction: Direction,
        message: String,
    },
    CommandRejected {
        message: String,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::MachineEntered { .. } => "machine-entered",
            EventKind::TransitionStarted { .. } => "transition-started",
            EventKind::TweenProgress { .. } => "tween-progress",
            EventKind::TransitionCompleted { .. } => "transition-completed",
            EventKind::TransitionInterrupted { .. } => "transition-interrupted",
            EventKind::MachineExited { .. } => "machine-exited",
            EventKind::ConflictBlocked { .. } => "conflict-blocked",
            EventKind::SignalFault { .. } => "signal-fault",
            EventKind::KeyframeError { .. } => "keyframe-error",
            EventKind::CommandRejected { .. } => "command-rejected",
        }
    }
}
