use crate::signals::{angle_between_deg, Rotation, Vec3};

/// Oriented box: centre, orientation and half extents along local axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Obb {
    pub center: Vec3,
    pub rotation: Rotation,
    pub half: Vec3,
}

/// A bounded plane. The normal is the rotated local up axis; `half_x` and
/// `half_z` clip it for touch tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane {
    pub center: Vec3,
    pub rotation: Rotation,
    pub half_x: f64,
    pub half_z: f64,
}

impl Obb {
    pub fn axes(&self) -> [Vec3; 3] {
        [
            self.rotation * Vec3::x(),
            self.rotation * Vec3::y(),
            self.rotation * Vec3::z(),
        ]
    }

    pub fn contains(&self, p: &Vec3, tolerance: f64) -> bool {
        let local = self.rotation.inverse() * (p - self.center);
        (0..3).all(|i| local[i].abs() <= self.half[i] + tolerance)
    }

    pub fn closest_point(&self, p: &Vec3) -> Vec3 {
        let local = self.rotation.inverse() * (p - self.center);
        let clamped = Vec3::from_fn(|i, _| local[i].clamp(-self.half[i], self.half[i]));
        self.center + self.rotation * clamped
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let [ax, ay, az] = self.axes();
        std::array::from_fn(|i| {
            let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
            self.center + ax * (sx * self.half.x) + ay * (sy * self.half.y) + az * (sz * self.half.z)
        })
    }

    fn radius_along(&self, axis: &Vec3) -> f64 {
        let [ax, ay, az] = self.axes();
        self.half.x * ax.dot(axis).abs() + self.half.y * ay.dot(axis).abs() + self.half.z * az.dot(axis).abs()
    }

    /// Separating-axis overlap test with every extent grown by `tolerance`.
    pub fn overlaps(&self, other: &Obb, tolerance: f64) -> bool {
        let a = self.axes();
        let b = other.axes();
        let mut candidates: Vec<Vec3> = a.iter().chain(b.iter()).copied().collect();
        for u in &a {
            for v in &b {
                let c = u.cross(v);
                if c.norm() > 1e-9 {
                    candidates.push(c.normalize());
                }
            }
        }
        let d = other.center - self.center;
        candidates.iter().all(|axis| {
            let reach = self.radius_along(axis) + other.radius_along(axis) + tolerance;
            d.dot(axis).abs() <= reach
        })
    }
}

impl Plane {
    pub fn normal(&self) -> Vec3 {
        self.rotation * Vec3::y()
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        (p - self.center).dot(&self.normal())
    }

    pub fn project(&self, p: &Vec3) -> Vec3 {
        p - self.normal() * self.signed_distance(p)
    }

    /// True when the projection of `p` falls inside the clipped extent.
    pub fn within_extent(&self, p: &Vec3, tolerance: f64) -> bool {
        let local = self.rotation.inverse() * (p - self.center);
        local.x.abs() <= self.half_x + tolerance && local.z.abs() <= self.half_z + tolerance
    }

    pub fn touches_point(&self, p: &Vec3, tolerance: f64) -> bool {
        self.signed_distance(p).abs() <= tolerance && self.within_extent(p, tolerance)
    }

    /// The box straddles or rests on the plane and sits over its extent.
    pub fn touches_box(&self, b: &Obb, tolerance: f64) -> bool {
        let (lo, hi) = b
            .corners()
            .iter()
            .map(|c| self.signed_distance(c))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        lo <= tolerance && hi >= -tolerance && self.within_extent(&b.center, tolerance)
    }
}

/// Angle between an axis and a normal direction, folded into `[0, 90]`.
pub fn axis_normal_angle(axis: &Vec3, normal: &Vec3) -> Option<f64> {
    angle_between_deg(axis, normal).map(|a| if a > 90.0 { 180.0 - a } else { a })
}

/// Angle between a rotated local up axis and world up, degrees.
pub fn tilt_deg(rotation: &Rotation) -> f64 {
    angle_between_deg(&(rotation * Vec3::y()), &Vec3::y()).unwrap_or(0.0)
}
