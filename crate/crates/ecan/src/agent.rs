//! Agent body models: the local-frame offset table whose extremum points
//! force the whole body hull inside each fitted ellipsoid, plus pose
//! advancement.

use nalgebra::{SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Pose;
use crate::tol;

/// Plane body dimensions. The overall craft is a central box body with a
/// nose spike, one main wing pair, one rear wing pair and a twin tail fin
/// pair; every free wing end is a thin rectangle whose four corners enter
/// the offset table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneDims {
    pub body_length: f64,
    pub body_width: f64,
    pub body_height: f64,
    pub nose_length: f64,
    pub front_wing_span: f64,
    pub front_wing_chord: f64,
    pub rear_wing_span: f64,
    pub rear_wing_chord: f64,
    pub top_wing_span: f64,
    pub top_wing_chord: f64,
    pub wing_thickness: f64,
}

impl Default for PlaneDims {
    /// Fits in a 2×2×1 box: length 1.6 with nose, wingspan 2.0, height 0.625.
    fn default() -> Self {
        Self {
            body_length: 1.2,
            body_width: 0.3,
            body_height: 0.25,
            nose_length: 0.4,
            front_wing_span: 0.85,
            front_wing_chord: 0.3,
            rear_wing_span: 0.45,
            rear_wing_chord: 0.2,
            top_wing_span: 0.375,
            top_wing_chord: 0.2,
            wing_thickness: 0.04,
        }
    }
}

impl PlaneDims {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("body_length", self.body_length),
            ("body_width", self.body_width),
            ("body_height", self.body_height),
            ("nose_length", self.nose_length),
            ("front_wing_span", self.front_wing_span),
            ("front_wing_chord", self.front_wing_chord),
            ("rear_wing_span", self.rear_wing_span),
            ("rear_wing_chord", self.rear_wing_chord),
            ("top_wing_span", self.top_wing_span),
            ("top_wing_chord", self.top_wing_chord),
            ("wing_thickness", self.wing_thickness),
        ];
        for (name, v) in fields {
            if !(v > 0.0) {
                return Err(format!("plane dimension {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Body shape variants.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentKind {
    /// Single point, zero offset.
    Point,
    /// Axis-aligned rectangle in the local frame; the four corners are the
    /// extremum points.
    Box2D { width: f64, height: f64 },
    /// Fixed-wing craft with 33 extremum points.
    Plane3D(PlaneDims),
}

/// An agent body: its kind and the local-frame extremum offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentModel<const D: usize> {
    pub kind: AgentKind,
    offsets: Vec<SVector<f64, D>>,
}

impl<const D: usize> AgentModel<D> {
    pub fn point() -> Self {
        Self {
            kind: AgentKind::Point,
            offsets: vec![SVector::zeros()],
        }
    }

    pub(crate) fn from_parts(kind: AgentKind, offsets: Vec<SVector<f64, D>>) -> Self {
        Self { kind, offsets }
    }

    pub fn offsets(&self) -> &[SVector<f64, D>] {
        &self.offsets
    }

    pub fn extremum_count(&self) -> usize {
        self.offsets.len()
    }

    /// Radius of the smallest origin-centered ball containing the body.
    pub fn radius(&self) -> f64 {
        self.offsets
            .iter()
            .map(|o| o.norm())
            .fold(0.0f64, f64::max)
    }

    /// The extremum points in world coordinates; order is stable.
    pub fn extremum_points(&self, pose: &Pose<D>) -> Vec<SVector<f64, D>> {
        self.offsets
            .iter()
            .map(|o| pose.local_to_global(o))
            .collect()
    }
}

impl AgentModel<2> {
    pub fn box2d(width: f64, height: f64) -> Self {
        let (hw, hh) = (width / 2.0, height / 2.0);
        Self {
            kind: AgentKind::Box2D { width, height },
            offsets: vec![
                SVector::<f64, 2>::new(-hw, -hh),
                SVector::<f64, 2>::new(hw, -hh),
                SVector::<f64, 2>::new(hw, hh),
                SVector::<f64, 2>::new(-hw, hh),
            ],
        }
    }
}

impl AgentModel<3> {
    pub fn plane3d(dims: PlaneDims) -> Self {
        let offsets = plane33_offsets(&dims);
        Self {
            kind: AgentKind::Plane3D(dims),
            offsets,
        }
    }
}

/// The 33 extremum offsets of the plane body: 8 body-box corners, the nose
/// tip, and 4 corners on each of the 6 free wing ends (front pair, rear
/// pair, twin tail fins).
pub fn plane33_offsets(dims: &PlaneDims) -> Vec<Vector3<f64>> {
    let mut pts = Vec::with_capacity(33);
    let hl = dims.body_length / 2.0;
    let hw = dims.body_width / 2.0;
    let hh = dims.body_height / 2.0;
    for &x in &[-hl, hl] {
        for &y in &[-hw, hw] {
            for &z in &[-hh, hh] {
                pts.push(Vector3::new(x, y, z));
            }
        }
    }
    pts.push(Vector3::new(hl + dims.nose_length, 0.0, 0.0));

    let ht = dims.wing_thickness / 2.0;
    // Free end of a horizontal wing at x-center `cx`, reaching sideways to
    // `y_tip`: four corners spanning the chord and thickness.
    let mut side_wing_end = |cx: f64, chord: f64, y_tip: f64| {
        for &dx in &[-chord / 2.0, chord / 2.0] {
            for &dz in &[-ht, ht] {
                pts.push(Vector3::new(cx + dx, y_tip, dz));
            }
        }
    };
    let front_tip = hw + dims.front_wing_span;
    side_wing_end(0.0, dims.front_wing_chord, front_tip);
    side_wing_end(0.0, dims.front_wing_chord, -front_tip);
    let rear_cx = -hl + dims.rear_wing_chord / 2.0;
    let rear_tip = hw + dims.rear_wing_span;
    side_wing_end(rear_cx, dims.rear_wing_chord, rear_tip);
    side_wing_end(rear_cx, dims.rear_wing_chord, -rear_tip);

    // Twin tail fins rise from the body top; their free ends are the fin
    // tops.
    let fin_cx = -hl + dims.top_wing_chord / 2.0;
    let fin_top = hh + dims.top_wing_span;
    for &fy in &[-hw, hw] {
        for &dx in &[-dims.top_wing_chord / 2.0, dims.top_wing_chord / 2.0] {
            for &dy in &[-ht, ht] {
                pts.push(Vector3::new(fin_cx + dx, fy + dy, fin_top));
            }
        }
    }
    debug_assert_eq!(pts.len(), 33);
    pts
}

/// Advances a pose by `l_n` along the unit direction `z_n` and re-aims the
/// frame's first column at `z_n` (2D: the second column follows
/// perpendicular; 3D: the minimal rotation carrying the old x-axis onto
/// `z_n` is applied to the whole frame, then re-orthonormalized). A zero
/// step leaves the pose untouched.
pub fn advance<const D: usize>(pose: &Pose<D>, z_n: &SVector<f64, D>, l_n: f64) -> Pose<D> {
    if l_n == 0.0 {
        return pose.clone();
    }
    let position = pose.position + z_n * l_n;
    let frame = if D == 2 {
        let mut f = SMatrix::<f64, D, D>::zeros();
        f.set_column(0, z_n);
        f[(0, 1)] = -z_n[1];
        f[(1, 1)] = z_n[0];
        f
    } else {
        let rotated = minimal_rotation_apply(&pose.axis(0), z_n, &pose.frame, &pose.axis(2));
        gram_schmidt(&rotated)
    };
    Pose { position, frame }
}

/// Applies the minimal rotation taking `from` to `to` (both unit) to every
/// column of `frame`. Opposite vectors rotate half a turn about `fallback`.
fn minimal_rotation_apply<const D: usize>(
    from: &SVector<f64, D>,
    to: &SVector<f64, D>,
    frame: &SMatrix<f64, D, D>,
    fallback: &SVector<f64, D>,
) -> SMatrix<f64, D, D> {
    let c = from.dot(to);
    let axis = SVector::<f64, D>::from_fn(|i, _| match i {
        0 => from[1] * to[2] - from[2] * to[1],
        1 => from[2] * to[0] - from[0] * to[2],
        _ => from[0] * to[1] - from[1] * to[0],
    });
    let s = axis.norm();
    if s < 1e-15 {
        if c > 0.0 {
            return *frame;
        }
        // Antiparallel: half turn about the old frame's z-axis.
        return rotation_about(fallback, std::f64::consts::PI) * frame;
    }
    let unit_axis = axis / s;
    rotation_about(&unit_axis, s.atan2(c)) * frame
}

/// Rodrigues rotation matrix about a unit `axis` by `angle`.
fn rotation_about<const D: usize>(axis: &SVector<f64, D>, angle: f64) -> SMatrix<f64, D, D> {
    let (s, c) = angle.sin_cos();
    let mut k = SMatrix::<f64, D, D>::zeros();
    k[(0, 1)] = -axis[2];
    k[(0, 2)] = axis[1];
    k[(1, 0)] = axis[2];
    k[(1, 2)] = -axis[0];
    k[(2, 0)] = -axis[1];
    k[(2, 1)] = axis[0];
    SMatrix::<f64, D, D>::identity() + k * s + k * k * (1.0 - c)
}

/// Column-wise Gram-Schmidt; keeps accumulated rotations orthonormal.
fn gram_schmidt<const D: usize>(m: &SMatrix<f64, D, D>) -> SMatrix<f64, D, D> {
    let mut out = *m;
    for j in 0..D {
        let mut col = out.column(j).into_owned();
        for k in 0..j {
            let prev = out.column(k).into_owned();
            col -= prev * prev.dot(&col);
        }
        out.set_column(j, &(col / col.norm()));
    }
    out
}

/// Verifies that the convex hull of the offsets contains the local origin.
/// Every body model here carries an antipodal offset pair (the body
/// corners), whose midpoint is the origin, or the origin itself.
pub fn hull_contains_origin<const D: usize>(offsets: &[SVector<f64, D>]) -> bool {
    offsets.iter().any(|o| {
        o.norm() <= tol::FRAME_ORTHO
            || offsets.iter().any(|p| (o + p).norm() <= tol::FRAME_ORTHO)
    })
}
