//! Morph runtime: declarative, signal-driven animated transitions over
//! visualisation specifications.

pub mod engine;
pub mod keyframes;
pub mod matcher;
pub mod morphspec;
pub mod scene;
pub mod signals;
pub mod tween;
pub mod visdoc;

pub use engine::{Engine, EngineConfig, EngineError, EngineEvent, EventKind, KeyframeDump, MachineView, Phase};
pub use keyframes::{Keyframe, KeyframeError, KeyframeStore};
pub use matcher::{match_state, MatchResult};
pub use morphspec::{parse_morph, Diagnostic, Direction, MorphError, MorphSpec, Severity};
pub use scene::{load_trace, Command, Scene, SceneSnapshot, TraceStep};
pub use signals::{SignalValue, Vec3};
pub use tween::{apply_tween, Easing, TweenState, VisState};
pub use visdoc::{compute_layout, MarkLayout, PropPath, VisSpec};
