//! The simulated environment: hands, head, surfaces, tracked objects, UI
//! widgets and visualisations, with the geometric queries deictic signals
//! are resolved against.

mod geometry;
mod trace;

pub use geometry::{axis_normal_angle, tilt_deg, Obb, Plane};
pub use trace::{load_trace, Command, TraceError, TraceStep, PROTOCOL_VERSION};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::signals::{
    rotation_from_axis_angle_deg, Criteria, Handedness, Rotation, SignalValue, TargetKind, Vec3,
};
use crate::visdoc::{compute_layout, LayoutError, MarkLayout, SchemaError, ViewProp, VisSpec};

/// Touch tolerance used when none is configured.
pub const DEFAULT_TOUCH_TOLERANCE: f64 = 0.02;
pub const DEFAULT_HEAD_ID: &str = "head";
const DEFAULT_HEAD_HEIGHT: f64 = 1.6;
const DEFAULT_EXTENT: f64 = 0.05;
const AXIS_THICKNESS: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntityKind {
    HandLeft,
    HandRight,
    Head,
    Surface,
    Object,
    UiWidget,
    Vis,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::HandLeft => "hand-left",
            EntityKind::HandRight => "hand-right",
            EntityKind::Head => "head",
            EntityKind::Surface => "surface",
            EntityKind::Object => "object",
            EntityKind::UiWidget => "ui-widget",
            EntityKind::Vis => "vis",
        }
    }

    pub fn is_hand(self) -> bool {
        matches!(self, EntityKind::HandLeft | EntityKind::HandRight)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub rotation: Rotation,
}

impl Default for Pose {
    fn default() -> Self {
        Pose {
            position: Vec3::zeros(),
            rotation: Rotation::identity(),
        }
    }
}

impl Pose {
    pub fn transform(&self, local: &Vec3) -> Vec3 {
        self.position + self.rotation * local
    }

    fn compose(&self, other: &Pose) -> Pose {
        Pose {
            position: self.transform(&other.position),
            rotation: self.rotation * other.rotation,
        }
    }

    fn inverse(&self) -> Pose {
        let rotation = self.rotation.inverse();
        Pose {
            position: -(rotation * self.position),
            rotation,
        }
    }
}

impl Serialize for Pose {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let q = &self.rotation;
        serde_json::json!({
            "position": [self.position.x, self.position.y, self.position.z],
            "rotation": {"quat": [q.w, q.i, q.j, q.k]},
        })
        .serialize(s)
    }
}

/// Accepted rotation notations: XYZ Euler degrees, axis plus angle in
/// degrees, or a `[w, x, y, z]` quaternion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RotationInput {
    Euler([f64; 3]),
    AxisAngle { axis: [f64; 3], angle: f64 },
    Quat { quat: [f64; 4] },
}

impl RotationInput {
    pub fn to_rotation(&self) -> Option<Rotation> {
        match self {
            RotationInput::Euler([x, y, z]) => {
                Some(crate::signals::rotation_from_euler_deg(*x, *y, *z))
            }
            RotationInput::AxisAngle { axis, angle } => {
                rotation_from_axis_angle_deg(Vec3::from(*axis), *angle)
            }
            RotationInput::Quat { quat: [w, x, y, z] } => {
                let q = nalgebra::Quaternion::new(*w, *x, *y, *z);
                (q.norm() > 1e-12).then(|| Rotation::from_quaternion(q))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UiValue {
    Bool(bool),
    Number(f64),
}

impl UiValue {
    pub fn to_signal(self) -> SignalValue {
        match self {
            UiValue::Bool(b) => SignalValue::Bool(b),
            UiValue::Number(n) => SignalValue::Number(n),
        }
    }
}

/// Serializable description of an entity, used by scene files and `spawn`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityDef {
    pub id: String,
    pub kind: EntityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<RotationInput>,
    /// Half size along each local axis. Ignored for visualisations, whose
    /// box comes from the spec's view extents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinch: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grab: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<UiValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VisEntity {
    pub spec: Arc<VisSpec>,
    pub layout: Arc<MarkLayout>,
    /// Set by the engine while a `disablegrab` transition runs.
    pub grab_disabled: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entity {
    pub id: String,
    pub kind: EntityKind,
    pub pose: Pose,
    pub extent: Vec3,
    pub pinch: bool,
    pub grab: bool,
    pub ui_value: Option<UiValue>,
    pub vis: Option<VisEntity>,
}

impl Entity {
    /// Bounding box in world coordinates.
    pub fn bounds(&self) -> Obb {
        match &self.vis {
            Some(v) => {
                let half = Vec3::new(
                    v.spec.extent(ViewProp::Width),
                    v.spec.extent(ViewProp::Height),
                    v.spec.extent(ViewProp::Depth),
                ) / 2.0;
                Obb {
                    center: self.pose.transform(&half),
                    rotation: self.pose.rotation,
                    half,
                }
            }
            None => Obb {
                center: self.pose.position,
                rotation: self.pose.rotation,
                half: self.extent,
            },
        }
    }

    pub fn center(&self) -> Vec3 {
        self.bounds().center
    }

    /// Full size, which is what a `scale` signal reports.
    pub fn size(&self) -> Vec3 {
        self.bounds().half * 2.0
    }

    fn plane(&self) -> Plane {
        Plane {
            center: self.pose.position,
            rotation: self.pose.rotation,
            half_x: self.extent.x,
            half_z: self.extent.z,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("entity `{0}` already exists")]
    DuplicateId(String),
    #[error("entity `{id}` is not a {expected}")]
    WrongKind { id: String, expected: &'static str },
    #[error("entity `{id}`: {message}")]
    Invalid { id: String, message: String },
    #[error("visualisation `{id}`: {source}")]
    Spec { id: String, source: SchemaError },
    #[error("visualisation `{id}`: {source}")]
    Layout { id: String, source: LayoutError },
    #[error("scene file: {0}")]
    File(String),
}

/// Effects of a command the engine has to react to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SceneChange {
    VisEdited(String),
    VisSpawned(String),
    VisDespawned(String),
}

#[derive(Clone, Debug, PartialEq)]
struct Attachment {
    vis: String,
    offset: Pose,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SceneData {
    entities: BTreeMap<String, Entity>,
    attachments: BTreeMap<String, Attachment>,
}

impl SceneData {
    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.get(id)
    }

    /// Entities in id order.
    pub fn entities(&self) -> impl Iterator<Item = &Entity> + '_ {
        self.entities.values()
    }

    pub fn of_kind(&self, kind: EntityKind) -> impl Iterator<Item = &Entity> + '_ {
        self.entities.values().filter(move |e| e.kind == kind)
    }

    pub fn vis_ids(&self) -> Vec<String> {
        self.of_kind(EntityKind::Vis).map(|e| e.id.clone()).collect()
    }

    pub fn vis(&self, id: &str) -> Option<&VisEntity> {
        self.entities.get(id).and_then(|e| e.vis.as_ref())
    }

    pub fn hand(&self, side: Handedness) -> Option<&Entity> {
        let kind = match side {
            Handedness::Right => EntityKind::HandRight,
            Handedness::Left | Handedness::Any => EntityKind::HandLeft,
        };
        self.of_kind(kind).next()
    }

    pub fn head(&self) -> Option<&Entity> {
        self.entity(DEFAULT_HEAD_ID)
            .filter(|e| e.kind == EntityKind::Head)
            .or_else(|| self.of_kind(EntityKind::Head).next())
    }

    /// The vis a hand is currently holding, if any.
    pub fn grabbed_by(&self, hand: &str) -> Option<&str> {
        self.attachments.get(hand).map(|a| a.vis.as_str())
    }
}

/// Immutable view of the scene at one tick. Cloning is cheap and later edits
/// to the live scene never show through.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSnapshot(Arc<SceneData>);

impl std::ops::Deref for SceneSnapshot {
    type Target = SceneData;
    fn deref(&self) -> &SceneData {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    data: Arc<SceneData>,
    tolerance: f64,
}

impl Default for Scene {
    fn default() -> Self {
        Scene::new()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    #[serde(default = "protocol_version")]
    v: u32,
    #[serde(default)]
    entities: Vec<EntityDef>,
}

fn protocol_version() -> u32 {
    PROTOCOL_VERSION
}

fn build_entity(def: &EntityDef) -> Result<Entity, SceneError> {
    let invalid = |message: &str| SceneError::Invalid {
        id: def.id.clone(),
        message: message.to_string(),
    };
    if def.id.is_empty() {
        return Err(invalid("entity id must not be empty"));
    }
    let rotation = match &def.rotation {
        Some(r) => r.to_rotation().ok_or_else(|| invalid("degenerate rotation"))?,
        None => Rotation::identity(),
    };
    let position = def.position.map(Vec3::from).unwrap_or_else(|| {
        if def.kind == EntityKind::Head {
            Vec3::new(0.0, DEFAULT_HEAD_HEIGHT, 0.0)
        } else {
            Vec3::zeros()
        }
    });
    if !position.iter().all(|c| c.is_finite()) {
        return Err(invalid("position must be finite"));
    }
    let extent = def
        .extent
        .map(Vec3::from)
        .unwrap_or_else(|| Vec3::repeat(DEFAULT_EXTENT));
    if !extent.iter().all(|c| c.is_finite() && *c >= 0.0) {
        return Err(invalid("extent must be finite and non-negative"));
    }
    let vis = match (def.kind, &def.spec) {
        (EntityKind::Vis, Some(tree)) => {
            let spec = VisSpec::from_tree(tree).map_err(|source| SceneError::Spec {
                id: def.id.clone(),
                source,
            })?;
            Some(vis_entity(&def.id, spec)?)
        }
        (EntityKind::Vis, None) => return Err(invalid("visualisation entities need a `spec`")),
        (_, Some(_)) => return Err(invalid("only visualisation entities carry a `spec`")),
        (_, None) => None,
    };
    let ui_value = match def.kind {
        EntityKind::UiWidget => Some(def.value.unwrap_or(UiValue::Number(0.0))),
        _ if def.value.is_some() => return Err(invalid("only ui widgets carry a `value`")),
        _ => None,
    };
    if !def.kind.is_hand() && (def.pinch.is_some() || def.grab.is_some()) {
        return Err(invalid("only hands carry gestures"));
    }
    Ok(Entity {
        id: def.id.clone(),
        kind: def.kind,
        pose: Pose { position, rotation },
        extent,
        pinch: def.pinch.unwrap_or(false),
        grab: def.grab.unwrap_or(false),
        ui_value,
        vis,
    })
}

fn vis_entity(id: &str, spec: VisSpec) -> Result<VisEntity, SceneError> {
    let layout = compute_layout(&spec).map_err(|source| SceneError::Layout {
        id: id.to_string(),
        source,
    })?;
    Ok(VisEntity {
        spec: Arc::new(spec),
        layout: Arc::new(layout),
        grab_disabled: false,
    })
}

impl Scene {
    /// A scene holding only the default head.
    pub fn new() -> Scene {
        let mut scene = Scene {
            data: Arc::new(SceneData::default()),
            tolerance: DEFAULT_TOUCH_TOLERANCE,
        };
        scene.ensure_head();
        scene
    }

    pub fn from_defs(defs: &[EntityDef]) -> Result<Scene, SceneError> {
        let mut data = SceneData::default();
        for def in defs {
            let e = build_entity(def)?;
            if data.entities.insert(e.id.clone(), e).is_some() {
                return Err(SceneError::DuplicateId(def.id.clone()));
            }
        }
        let mut scene = Scene {
            data: Arc::new(data),
            tolerance: DEFAULT_TOUCH_TOLERANCE,
        };
        scene.ensure_head();
        Ok(scene)
    }

    /// Parses a scene file `{"v": 1, "entities": [...]}`.
    pub fn from_json(text: &str) -> Result<Scene, SceneError> {
        let file: SceneFile =
            serde_json::from_str(text).map_err(|e| SceneError::File(e.to_string()))?;
        if file.v != PROTOCOL_VERSION {
            return Err(SceneError::File(format!("unsupported version {}", file.v)));
        }
        Scene::from_defs(&file.entities)
    }

    /// Reads a scene file. A vis `spec` given as a string is a path to a
    /// spec file, relative to the scene file's directory.
    pub fn load(path: &Path) -> Result<Scene, SceneError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|e| SceneError::File(format!("{}: {e}", p.display())))
        };
        let mut file: SceneFile =
            serde_json::from_str(&read(path)?).map_err(|e| SceneError::File(e.to_string()))?;
        if file.v != PROTOCOL_VERSION {
            return Err(SceneError::File(format!("unsupported version {}", file.v)));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        for def in &mut file.entities {
            if let Some(Value::String(rel)) = &def.spec {
                let text = read(&base.join(rel))?;
                let spec = serde_json::from_str(&text)
                    .map_err(|e| SceneError::File(format!("{rel}: {e}")))?;
                def.spec = Some(spec);
            }
        }
        Scene::from_defs(&file.entities)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Scene {
        self.tolerance = tolerance;
        self
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    fn ensure_head(&mut self) {
        if self.data.head().is_none() {
            let head = build_entity(&EntityDef {
                id: DEFAULT_HEAD_ID.into(),
                kind: EntityKind::Head,
                position: None,
                rotation: None,
                extent: Some([0.1, 0.12, 0.1]),
                pinch: None,
                grab: None,
                value: None,
                spec: None,
            })
            .expect("default head is valid");
            Arc::make_mut(&mut self.data)
                .entities
                .insert(head.id.clone(), head);
        }
    }

    pub fn snapshot(&self) -> SceneSnapshot {
        SceneSnapshot(Arc::clone(&self.data))
    }

    pub fn data(&self) -> &SceneData {
        &self.data
    }

    fn entity_mut(&mut self, id: &str) -> Result<&mut Entity, SceneError> {
        Arc::make_mut(&mut self.data)
            .entities
            .get_mut(id)
            .ok_or_else(|| SceneError::UnknownEntity(id.to_string()))
    }

    /// Replaces a visualisation's live spec without treating it as a user
    /// edit. The engine uses this to publish tweened and landed specs.
    pub fn publish_vis(
        &mut self,
        id: &str,
        spec: Arc<VisSpec>,
        layout: Arc<MarkLayout>,
    ) -> Result<(), SceneError> {
        let e = self.entity_mut(id)?;
        let v = e.vis.as_mut().ok_or_else(|| SceneError::WrongKind {
            id: id.to_string(),
            expected: "visualisation",
        })?;
        v.spec = spec;
        v.layout = layout;
        Ok(())
    }

    pub fn set_grab_disabled(&mut self, id: &str, disabled: bool) -> Result<(), SceneError> {
        let e = self.entity_mut(id)?;
        match e.vis.as_mut() {
            Some(v) => {
                v.grab_disabled = disabled;
                Ok(())
            }
            None => Err(SceneError::WrongKind {
                id: id.to_string(),
                expected: "visualisation",
            }),
        }
    }

    /// Applies one scripted or live command.
    pub fn apply(&mut self, command: &Command) -> Result<Option<SceneChange>, SceneError> {
        match command {
            Command::SetPose {
                id,
                position,
                rotation,
            } => {
                let rotation = match rotation {
                    Some(r) => Some(r.to_rotation().ok_or_else(|| SceneError::Invalid {
                        id: id.clone(),
                        message: "degenerate rotation".into(),
                    })?),
                    None => None,
                };
                let e = self.entity_mut(id)?;
                if let Some(p) = position {
                    e.pose.position = Vec3::from(*p);
                }
                if let Some(r) = rotation {
                    e.pose.rotation = r;
                }
                let is_hand = e.kind.is_hand();
                let hand_pose = e.pose;
                if is_hand {
                    self.drag_attached(id, &hand_pose);
                }
                Ok(None)
            }
            Command::SetGesture { id, pinch, grab } => {
                let tolerance = self.tolerance;
                let e = self.entity_mut(id)?;
                if !e.kind.is_hand() {
                    return Err(SceneError::WrongKind {
                        id: id.clone(),
                        expected: "hand",
                    });
                }
                if let Some(p) = pinch {
                    e.pinch = *p;
                }
                if let Some(g) = grab {
                    e.grab = *g;
                }
                let (holding, hand_pose) = (e.grab, e.pose);
                let data = Arc::make_mut(&mut self.data);
                if !holding {
                    data.attachments.remove(id);
                } else if !data.attachments.contains_key(id) {
                    let target = data.entities.values().find(|v| {
                        v.vis.as_ref().is_some_and(|vis| !vis.grab_disabled)
                            && v.bounds().contains(&hand_pose.position, tolerance)
                    });
                    if let Some(v) = target {
                        let offset = hand_pose.inverse().compose(&v.pose);
                        let vis = v.id.clone();
                        data.attachments.insert(id.clone(), Attachment { vis, offset });
                    }
                }
                Ok(None)
            }
            Command::SetUiValue { id, value } => {
                let e = self.entity_mut(id)?;
                if e.kind != EntityKind::UiWidget {
                    return Err(SceneError::WrongKind {
                        id: id.clone(),
                        expected: "ui widget",
                    });
                }
                e.ui_value = Some(*value);
                Ok(None)
            }
            Command::EditVisSpec { id, spec } => {
                let spec = VisSpec::from_tree(spec).map_err(|source| SceneError::Spec {
                    id: id.clone(),
                    source,
                })?;
                let fresh = vis_entity(id, spec)?;
                let e = self.entity_mut(id)?;
                match e.vis.as_mut() {
                    Some(v) => {
                        v.spec = fresh.spec;
                        v.layout = fresh.layout;
                    }
                    None => {
                        return Err(SceneError::WrongKind {
                            id: id.clone(),
                            expected: "visualisation",
                        })
                    }
                }
                Ok(Some(SceneChange::VisEdited(id.clone())))
            }
            Command::Spawn { entity } => {
                if self.data.entities.contains_key(&entity.id) {
                    return Err(SceneError::DuplicateId(entity.id.clone()));
                }
                let e = build_entity(entity)?;
                let is_vis = e.vis.is_some();
                Arc::make_mut(&mut self.data)
                    .entities
                    .insert(e.id.clone(), e);
                Ok(is_vis.then(|| SceneChange::VisSpawned(entity.id.clone())))
            }
            Command::Despawn { id } => {
                let data = Arc::make_mut(&mut self.data);
                let e = data
                    .entities
                    .remove(id)
                    .ok_or_else(|| SceneError::UnknownEntity(id.clone()))?;
                data.attachments.retain(|hand, a| hand != id && a.vis != *id);
                Ok(e.vis.is_some().then(|| SceneChange::VisDespawned(id.clone())))
            }
        }
    }

    fn drag_attached(&mut self, hand: &str, hand_pose: &Pose) {
        let Some(att) = self.data.attachments.get(hand).cloned() else {
            return;
        };
        let data = Arc::make_mut(&mut self.data);
        if let Some(v) = data.entities.get_mut(&att.vis) {
            if v.vis.as_ref().is_some_and(|vis| !vis.grab_disabled) {
                v.pose = hand_pose.compose(&att.offset);
            }
        }
    }
}

/// Something a deictic query can land on.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TargetId {
    Entity(String),
    Mark(usize),
    Axis(char),
}

impl fmt::Display for TargetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetId::Entity(id) => f.write_str(id),
            TargetId::Mark(i) => write!(f, "mark[{i}]"),
            TargetId::Axis(a) => write!(f, "axis-{a}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Resolution {
    pub target: TargetId,
    pub center: Vec3,
    pub rotation: Rotation,
    pub size: Vec3,
    /// Contact point: the source centre projected onto a target plane, or
    /// the closest point of a target box.
    pub point: Vec3,
    pub distance: f64,
    /// Source forward axis against the target normal, folded to `[0, 90]`.
    pub angle: Option<f64>,
}

#[derive(Clone, Copy)]
enum Shape {
    Box(Obb),
    Plane(Plane),
}

struct Candidate {
    id: TargetId,
    shape: Shape,
}

impl Candidate {
    fn center(&self) -> Vec3 {
        match &self.shape {
            Shape::Box(b) => b.center,
            Shape::Plane(p) => p.center,
        }
    }

    fn rotation(&self) -> Rotation {
        match &self.shape {
            Shape::Box(b) => b.rotation,
            Shape::Plane(p) => p.rotation,
        }
    }

    fn normal(&self) -> Vec3 {
        self.rotation() * Vec3::y()
    }
}

fn candidates(snap: &SceneData, source: &Entity, kind: TargetKind, context: Option<&str>) -> Vec<Candidate> {
    let entity_box = |e: &Entity| Candidate {
        id: TargetId::Entity(e.id.clone()),
        shape: Shape::Box(e.bounds()),
    };
    let context_vis = context.and_then(|c| snap.entity(c)).filter(|e| e.vis.is_some());
    match kind {
        TargetKind::Mark => {
            let Some(ve) = context_vis else { return Vec::new() };
            let vis = ve.vis.as_ref().expect("checked");
            vis.layout
                .marks
                .iter()
                .enumerate()
                .map(|(i, m)| Candidate {
                    id: TargetId::Mark(i),
                    shape: Shape::Box(Obb {
                        center: ve.pose.transform(&Vec3::from(m.position)),
                        rotation: ve.pose.rotation,
                        half: Vec3::from(m.size) / 2.0,
                    }),
                })
                .collect()
        }
        TargetKind::Axis => {
            let Some(ve) = context_vis else { return Vec::new() };
            let size = ve.size();
            ['x', 'y', 'z']
                .iter()
                .enumerate()
                .map(|(i, name)| {
                    let mut half = Vec3::repeat(AXIS_THICKNESS);
                    half[i] = size[i] / 2.0;
                    let mut local = Vec3::zeros();
                    local[i] = size[i] / 2.0;
                    Candidate {
                        id: TargetId::Axis(*name),
                        shape: Shape::Box(Obb {
                            center: ve.pose.transform(&local),
                            rotation: ve.pose.rotation,
                            half,
                        }),
                    }
                })
                .collect()
        }
        TargetKind::Surface => snap
            .of_kind(EntityKind::Surface)
            .map(|e| Candidate {
                id: TargetId::Entity(e.id.clone()),
                shape: Shape::Plane(e.plane()),
            })
            .collect(),
        TargetKind::Head => snap.head().map(entity_box).into_iter().collect(),
        TargetKind::Object => snap
            .of_kind(EntityKind::Object)
            .filter(|e| e.id != source.id)
            .map(entity_box)
            .collect(),
        TargetKind::Vis => {
            if source.kind == EntityKind::Vis || context_vis.is_none() {
                snap.of_kind(EntityKind::Vis)
                    .filter(|e| e.id != source.id)
                    .map(entity_box)
                    .collect()
            } else {
                context_vis.map(entity_box).into_iter().collect()
            }
        }
    }
}

fn touches(source: &Entity, candidate: &Candidate, tolerance: f64) -> bool {
    let point_source = matches!(source.kind, EntityKind::HandLeft | EntityKind::HandRight | EntityKind::Head);
    match (&candidate.shape, point_source) {
        (Shape::Box(b), true) => b.contains(&source.pose.position, tolerance),
        (Shape::Plane(p), true) => p.touches_point(&source.pose.position, tolerance),
        (Shape::Box(b), false) => source.bounds().overlaps(b, tolerance),
        (Shape::Plane(p), false) => p.touches_box(&source.bounds(), tolerance),
    }
}

/// Resolves a deictic target for `source`. `context` names the
/// visualisation the querying morph is bound to; mark and axis targets
/// belong to it.
pub fn query_geometry(
    snap: &SceneData,
    source: &str,
    kind: TargetKind,
    criteria: Criteria,
    context: Option<&str>,
    tolerance: f64,
) -> Option<Resolution> {
    let src = snap.entity(source)?;
    let origin = src.center();
    let cands = candidates(snap, src, kind, context);
    let gesture = if src.kind.is_hand() { src.pinch || src.grab } else { true };
    let eligible = |c: &Candidate| match criteria {
        Criteria::Nearest => true,
        Criteria::Touch => touches(src, c, tolerance),
        Criteria::Select => gesture && touches(src, c, tolerance),
    };
    let mut best: Option<(f64, &Candidate)> = None;
    for c in cands.iter().filter(|c| eligible(c)) {
        let d = (c.center() - origin).norm();
        // Strict comparison keeps the first candidate on ties.
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, c));
        }
    }
    let (distance, c) = best?;
    let (point, size) = match &c.shape {
        Shape::Box(b) => (b.closest_point(&origin), b.half * 2.0),
        Shape::Plane(p) => (p.project(&origin), Vec3::new(p.half_x * 2.0, 0.0, p.half_z * 2.0)),
    };
    let forward = src.pose.rotation * Vec3::z();
    Some(Resolution {
        target: c.id.clone(),
        center: c.center(),
        rotation: c.rotation(),
        size,
        point,
        distance,
        angle: axis_normal_angle(&forward, &c.normal()),
    })
}
