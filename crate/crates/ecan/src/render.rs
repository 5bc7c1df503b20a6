//! Deterministic SVG rendering of a run: obstacles, ellipsoid outlines,
//! the executed path and start/goal markers. 3D traces are drawn as an
//! orthographic projection onto a coordinate plane, ellipsoids as the
//! exact silhouette of the projected quadric.

use nalgebra::{Matrix2, SVector, Vector2};

use crate::geometry::Ellipsoid;
use crate::planner::{Branch, PlanTrace};
use crate::world::Environment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Projection {
    #[default]
    Xy,
    Xz,
    Yz,
}

impl Projection {
    fn axes(&self) -> (usize, usize) {
        match self {
            Projection::Xy => (0, 1),
            Projection::Xz => (0, 2),
            Projection::Yz => (1, 2),
        }
    }

    /// The coordinate dropped by the projection (3D only).
    fn dropped(&self) -> usize {
        match self {
            Projection::Xy => 2,
            Projection::Xz => 1,
            Projection::Yz => 0,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "xy" => Some(Projection::Xy),
            "xz" => Some(Projection::Xz),
            "yz" => Some(Projection::Yz),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RenderOptions {
    pub projection: Projection,
    /// Draw every step's ellipsoid instead of only branch-change steps.
    pub all_ellipses: bool,
}

const ELLIPSE_SEGMENTS: usize = 128;

fn project<const D: usize>(v: &SVector<f64, D>, proj: Projection) -> Vector2<f64> {
    if D == 2 {
        Vector2::new(v[0], v[1])
    } else {
        let (a, b) = proj.axes();
        Vector2::new(v[a], v[b])
    }
}

/// Plane silhouette of the quadric: in 2D the quadric itself, in 3D the
/// shadow along the dropped axis, obtained by minimizing the quadric over
/// that coordinate (a Schur complement on the dropped row/column).
fn project_ellipsoid<const D: usize>(e: &Ellipsoid<D>, proj: Projection) -> Ellipsoid<2> {
    if D == 2 {
        return Ellipsoid {
            p: Matrix2::new(e.p[(0, 0)], e.p[(0, 1)], e.p[(1, 0)], e.p[(1, 1)]),
            q: Vector2::new(e.q[0], e.q[1]),
            r: e.r,
        };
    }
    let (a, b) = proj.axes();
    let k = proj.dropped();
    let pkk = e.p[(k, k)];
    let w = Vector2::new(e.p[(a, k)], e.p[(b, k)]);
    let p2 = Matrix2::new(e.p[(a, a)], e.p[(a, b)], e.p[(b, a)], e.p[(b, b)])
        - w * w.transpose() / pkk;
    let q2 = Vector2::new(e.q[a], e.q[b]) - w * (e.q[k] / pkk);
    let r2 = e.r - e.q[k] * e.q[k] / (4.0 * pkk);
    Ellipsoid { p: p2, q: q2, r: r2 }
}

/// Boundary polygon of a planar ellipsoid, sampled at the standard
/// segment count. Empty when the quadric has no interior.
fn ellipse_outline(e: &Ellipsoid<2>) -> Vec<Vector2<f64>> {
    let Ok(center) = e.center() else {
        return Vec::new();
    };
    let sigma = e.value(&center);
    if sigma >= 0.0 {
        return Vec::new();
    }
    let spectrum = e.spectrum();
    let a0 = (-sigma / spectrum.eigenvalues[0]).sqrt();
    let a1 = (-sigma / spectrum.eigenvalues[1]).sqrt();
    let v0 = spectrum.eigenvectors[0];
    let v1 = spectrum.eigenvectors[1];
    (0..ELLIPSE_SEGMENTS)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / ELLIPSE_SEGMENTS as f64;
            center + v0 * (a0 * t.cos()) + v1 * (a1 * t.sin())
        })
        .collect()
}

struct Bounds {
    min: Vector2<f64>,
    max: Vector2<f64>,
}

impl Bounds {
    fn new() -> Self {
        Self {
            min: Vector2::new(f64::INFINITY, f64::INFINITY),
            max: Vector2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn include(&mut self, p: &Vector2<f64>) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

fn points_attr(points: &[Vector2<f64>]) -> String {
    points
        .iter()
        .map(|p| format!("{},{}", fmt(p.x), fmt(-p.y)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders a run to a standalone SVG document; output is byte-identical
/// for identical input.
pub fn render_svg<const D: usize>(
    trace: &PlanTrace<D>,
    env: &Environment<D>,
    opts: RenderOptions,
) -> String {
    let proj = opts.projection;
    let mut bounds = Bounds::new();

    let mut path: Vec<Vector2<f64>> = trace
        .steps
        .iter()
        .map(|s| project(&s.pose.position, proj))
        .collect();
    path.push(project(&trace.final_pose.position, proj));
    for p in &path {
        bounds.include(p);
    }
    let start = *path.first().expect("path has at least the final pose");
    let goal = project(&trace.goal, proj);
    bounds.include(&goal);

    let mut outlines: Vec<Vec<Vector2<f64>>> = Vec::new();
    let mut previous_branch: Option<Branch> = None;
    for step in &trace.steps {
        let key_frame = match previous_branch {
            Some(prev) => prev != step.branch,
            None => false,
        };
        previous_branch = Some(step.branch);
        if opts.all_ellipses || key_frame {
            let outline = ellipse_outline(&project_ellipsoid(&step.ellipsoid, proj));
            if !outline.is_empty() {
                for p in &outline {
                    bounds.include(p);
                }
                outlines.push(outline);
            }
        }
    }

    let mut boxes: Vec<(Vector2<f64>, Vector2<f64>)> = Vec::new();
    for b in &env.boxes {
        let min = project(&b.min, proj);
        let max = project(&b.max, proj);
        bounds.include(&min);
        bounds.include(&max);
        boxes.push((min, max));
    }
    let mut polygons: Vec<Vec<Vector2<f64>>> = Vec::new();
    for poly in &env.polygons {
        let pts: Vec<Vector2<f64>> = poly.vertices.clone();
        for p in &pts {
            bounds.include(p);
        }
        polygons.push(pts);
    }
    let mut points: Vec<Vector2<f64>> = Vec::new();
    for p in &env.point_obstacles {
        let q = project(p, proj);
        bounds.include(&q);
        points.push(q);
    }

    let extent = (bounds.max - bounds.min).norm().max(1.0);
    let margin = extent * 0.05;
    let view_x = bounds.min.x - margin;
    let view_y = -(bounds.max.y + margin);
    let view_w = bounds.max.x - bounds.min.x + 2.0 * margin;
    let view_h = bounds.max.y - bounds.min.y + 2.0 * margin;
    let stroke = extent * 0.004;
    let marker_r = extent * 0.012;
    let dot_r = extent * 0.004;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" width=\"800\" height=\"{}\">\n",
        fmt(view_x),
        fmt(view_y),
        fmt(view_w),
        fmt(view_h),
        fmt(800.0 * view_h / view_w),
    ));

    svg.push_str("<g class=\"obstacles\">\n");
    for (min, max) in &boxes {
        svg.push_str(&format!(
            "<rect class=\"box\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#8a8a8a\" stroke=\"#555555\" stroke-width=\"{}\"/>\n",
            fmt(min.x),
            fmt(-max.y),
            fmt(max.x - min.x),
            fmt(max.y - min.y),
            fmt(stroke),
        ));
    }
    for poly in &polygons {
        svg.push_str(&format!(
            "<polygon class=\"poly\" points=\"{}\" fill=\"#8a8a8a\" stroke=\"#555555\" stroke-width=\"{}\"/>\n",
            points_attr(poly),
            fmt(stroke),
        ));
    }
    for p in &points {
        svg.push_str(&format!(
            "<circle class=\"obstacle-point\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#333333\"/>\n",
            fmt(p.x),
            fmt(-p.y),
            fmt(dot_r),
        ));
    }
    svg.push_str("</g>\n");

    svg.push_str("<g class=\"tunnel\">\n");
    for outline in &outlines {
        svg.push_str(&format!(
            "<polygon class=\"ellipsoid\" points=\"{}\" fill=\"none\" stroke=\"#2b7bba\" stroke-width=\"{}\"/>\n",
            points_attr(outline),
            fmt(stroke),
        ));
    }
    svg.push_str("</g>\n");

    if path.len() >= 2 {
        svg.push_str(&format!(
            "<polyline class=\"path\" points=\"{}\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"{}\"/>\n",
            points_attr(&path),
            fmt(stroke * 1.5),
        ));
    }

    svg.push_str(&format!(
        "<circle class=\"start\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#2ca02c\"/>\n",
        fmt(start.x),
        fmt(-start.y),
        fmt(marker_r),
    ));
    svg.push_str(&format!(
        "<circle class=\"goal\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#9467bd\"/>\n",
        fmt(goal.x),
        fmt(-goal.y),
        fmt(marker_r),
    ));
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::AgentModel;
    use crate::geometry::Pose;
    use crate::planner::{plan, Outcome, PlannerParams, StepRecord};
    use crate::world::PointCloud;
    use nalgebra::Matrix2;

    fn empty_trace() -> PlanTrace<2> {
        PlanTrace {
            steps: vec![],
            outcome: Outcome::GoalReached,
            final_pose: Pose::new(Vector2::zeros(), Matrix2::identity()).unwrap(),
            goal: Vector2::new(1.0, 0.0),
        }
    }

    #[test]
    fn empty_trace_renders_markers_only() {
        let svg = render_svg(&empty_trace(), &Environment::default(), RenderOptions::default());
        assert_eq!(svg.matches("class=\"ellipsoid\"").count(), 0);
        assert_eq!(svg.matches("class=\"path\"").count(), 0);
        assert_eq!(svg.matches("class=\"start\"").count(), 1);
        assert_eq!(svg.matches("class=\"goal\"").count(), 1);
    }

    #[test]
    fn unit_disk_outline_lies_on_the_circle() {
        let disk = Ellipsoid::<2> {
            p: Matrix2::identity(),
            q: Vector2::zeros(),
            r: -1.0,
        };
        let outline = ellipse_outline(&disk);
        assert_eq!(outline.len(), ELLIPSE_SEGMENTS);
        for p in outline {
            assert!((p.norm() - 1.0).abs() <= 1e-3, "{p:?}");
        }
    }

    #[test]
    fn two_step_trace_emits_two_outlines_and_one_polyline() {
        let goal = Vector2::new(9.0, 0.0);
        let disk = |c: Vector2<f64>| Ellipsoid::<2> {
            p: Matrix2::identity(),
            q: -c * 2.0,
            r: c.norm_squared() - 4.0,
        };
        let mk = |t: usize, x: f64, branch| StepRecord::<2> {
            t,
            pose: Pose::new(Vector2::new(x, 0.0), Matrix2::identity()).unwrap(),
            cloud: PointCloud::default(),
            ellipsoid: disk(Vector2::new(x + 1.0, 0.0)),
            branch,
            z_e: None,
            l_e: None,
            z_n: Vector2::new(1.0, 0.0),
            l_n: 1.0,
            fit_time: 0.0,
            direction_time: None,
            step_length_time: None,
            linear_constraints: 2,
            constraint_count: 3,
            fit_kkt: 0.0,
            fit_gap: 0.0,
            fit_iterations: 0,
        };
        let trace = PlanTrace {
            steps: vec![
                mk(0, 0.0, Branch::GoalOnBoundary),
                mk(1, 1.0, Branch::BoundaryNavigation),
                mk(2, 2.0, Branch::BoundaryNavigation),
                mk(3, 3.0, Branch::GoalOnBoundary),
                mk(4, 4.0, Branch::GoalOnBoundary),
            ],
            outcome: Outcome::GoalReached,
            final_pose: Pose::new(Vector2::new(5.0, 0.0), Matrix2::identity()).unwrap(),
            goal,
        };
        let svg = render_svg(&trace, &Environment::default(), RenderOptions::default());
        // Branch changes at t = 1 and t = 3 select the two key frames.
        assert_eq!(svg.matches("class=\"ellipsoid\"").count(), 2);
        assert_eq!(svg.matches("class=\"path\"").count(), 1);

        let all = render_svg(
            &trace,
            &Environment::default(),
            RenderOptions {
                all_ellipses: true,
                ..Default::default()
            },
        );
        assert_eq!(all.matches("class=\"ellipsoid\"").count(), 5);
    }

    #[test]
    fn rendering_is_byte_deterministic() {
        let goal = Vector2::new(4.0, 0.0);
        let env = Environment::<2> {
            point_obstacles: vec![Vector2::new(2.0, 0.3)],
            ..Default::default()
        };
        let trace = plan(
            &env,
            &AgentModel::point(),
            Pose::facing(Vector2::zeros(), &goal).unwrap(),
            goal,
            &PlannerParams::defaults_2d(5e-5),
        )
        .unwrap();
        let a = render_svg(&trace, &env, RenderOptions::default());
        let b = render_svg(&trace, &env, RenderOptions::default());
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
    }

    #[test]
    fn projected_quadric_matches_silhouette() {
        use nalgebra::{Matrix3, Vector3};
        let e = Ellipsoid::<3> {
            p: Matrix3::from_diagonal(&Vector3::new(1.0, 4.0, 2.0)),
            q: Vector3::new(0.0, 0.0, -4.0),
            r: 1.0,
        };
        let shadow = project_ellipsoid(&e, Projection::Xy);
        // The silhouette contains exactly the (x, y) with min over z of Ψ ≤ 0.
        for &(x, y) in &[(0.0, 0.0), (0.4, 0.2), (1.2, 0.0), (0.0, 0.8)] {
            let z_star = 1.0; // minimizer of z²·2 − 4z is z = 1
            let min_val = e.value(&Vector3::new(x, y, z_star));
            let shadow_val = shadow.value(&Vector2::new(x, y));
            assert!((min_val - shadow_val).abs() <= 1e-12);
        }
    }
}
