//! Signals: source sampling, the expression language, and per-tick
//! propagation in dependency order.

mod expr;
mod graph;
mod sample;
mod value;

pub use expr::{
    lookup_var, normalise, parse_expression, BinOp, Env, EvalError, Expr, Func, ParseError, UnOp,
};
pub use graph::{Fault, GraphError, SignalGraph, SignalSnapshot, SignalState};
pub use sample::{sample_source, SampleFault};
pub use value::{
    angle_between_deg, rotation_from_axis_angle_deg, rotation_from_euler_deg, Rotation,
    SignalType, SignalValue, Vec3,
};

use std::fmt;
use std::str::FromStr;

macro_rules! token_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl FromStr for $name {
            type Err = ();
            fn from_str(s: &str) -> Result<Self, ()> {
                match s { $($text => Ok($name::$variant),)+ _ => Err(()) }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

token_enum!(SourceKind {
    Hand => "hand",
    Head => "head",
    Vis => "vis",
    Ui => "ui",
    Object => "object",
});

token_enum!(Handedness {
    Left => "left",
    Right => "right",
    Any => "any",
});

token_enum!(TargetKind {
    Mark => "mark",
    Axis => "axis",
    Surface => "surface",
    Head => "head",
    Vis => "vis",
    Object => "object",
});

token_enum!(Criteria {
    Select => "select",
    Touch => "touch",
    Nearest => "nearest",
});

token_enum!(
    /// What a source signal derives from its source or resolved target.
    ValueToken {
        Position => "position",
        Rotation => "rotation",
        Scale => "scale",
        Select => "select",
        Pinch => "pinch",
        Distance => "distance",
        Intersection => "intersection",
        Angle => "angle",
        Boolean => "boolean",
        UiValue => "uivalue",
    }
);

impl ValueToken {
    pub fn signal_type(self) -> SignalType {
        match self {
            ValueToken::Position | ValueToken::Scale | ValueToken::Intersection => SignalType::Vec3,
            ValueToken::Rotation => SignalType::Rotation,
            ValueToken::Select | ValueToken::Pinch | ValueToken::Boolean => SignalType::Bool,
            ValueToken::Distance | ValueToken::Angle => SignalType::Number,
            ValueToken::UiValue => SignalType::Unknown,
        }
    }
}

impl TargetKind {
    /// Targets with several possible candidates need a selection criteria.
    pub fn needs_criteria(self) -> bool {
        !matches!(self, TargetKind::Head)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceSignalSpec {
    pub name: String,
    pub source: SourceKind,
    pub handedness: Option<Handedness>,
    /// Picks one entity when a source kind has several (objects, widgets).
    pub id: Option<String>,
    pub target: Option<TargetKind>,
    pub criteria: Option<Criteria>,
    pub value: ValueToken,
}

impl SourceSignalSpec {
    pub fn is_deictic(&self) -> bool {
        self.target.is_some()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpressionSignalSpec {
    pub name: String,
    pub text: String,
    pub expr: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SignalSpec {
    Source(SourceSignalSpec),
    Expression(ExpressionSignalSpec),
}

impl SignalSpec {
    pub fn name(&self) -> &str {
        match self {
            SignalSpec::Source(s) => &s.name,
            SignalSpec::Expression(e) => &e.name,
        }
    }
}
