//! Environment representation, field-of-view discretization and the
//! simulated sensor that turns visible obstacle surfaces into point clouds.

use nalgebra::{SVector, Vector2};
use thiserror::Error;

use crate::geometry::Pose;
use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("field of view is invalid: {0}")]
    InvalidFov(String),
    #[error("discretization leaves the {0} axis empty")]
    EmptyAxis(&'static str),
    #[error("obstacle shape is invalid: {0}")]
    InvalidShape(String),
}

/// Axis-aligned box obstacle (closed set).
#[derive(Debug, Clone, PartialEq)]
pub struct Aabb<const D: usize> {
    pub min: SVector<f64, D>,
    pub max: SVector<f64, D>,
}

impl<const D: usize> Aabb<D> {
    pub fn validate(&self) -> Result<(), WorldError> {
        for i in 0..D {
            if !(self.max[i] > self.min[i]) {
                return Err(WorldError::InvalidShape(format!(
                    "box axis {i} has no extent ({} to {})",
                    self.min[i], self.max[i]
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, z: &SVector<f64, D>, slack: f64) -> bool {
        (0..D).all(|i| z[i] >= self.min[i] - slack && z[i] <= self.max[i] + slack)
    }
}

/// Convex polygon obstacle in the plane, vertices in walk order (closed
/// set).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    pub vertices: Vec<Vector2<f64>>,
}

impl ConvexPolygon {
    pub fn validate(&self) -> Result<(), WorldError> {
        if self.vertices.len() < 3 {
            return Err(WorldError::InvalidShape(
                "polygon needs at least 3 vertices".into(),
            ));
        }
        let n = self.vertices.len();
        let mut area2 = 0.0;
        let mut sign = 0.0f64;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            let cross = (b - a).perp(&(c - b));
            if cross.abs() > 1e-12 {
                if sign == 0.0 {
                    sign = cross.signum();
                } else if cross.signum() != sign {
                    return Err(WorldError::InvalidShape("polygon is not convex".into()));
                }
            }
            area2 += a.perp(&b);
        }
        if area2.abs() < 1e-12 {
            return Err(WorldError::InvalidShape("polygon has no area".into()));
        }
        Ok(())
    }

    pub fn contains(&self, z: &Vector2<f64>, slack: f64) -> bool {
        let n = self.vertices.len();
        let mut reference = 0.0f64;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let edge = b - a;
            let cross = edge.perp(&(z - a));
            if reference == 0.0 && cross.abs() > 1e-12 {
                reference = cross.signum();
            }
            let scaled_slack = slack * edge.norm().max(1.0);
            if reference != 0.0 && cross * reference < -scaled_slack {
                return false;
            }
        }
        true
    }
}

/// The world: exact point obstacles plus finite shapes that the sensor
/// samples into points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Environment<const D: usize> {
    pub point_obstacles: Vec<SVector<f64, D>>,
    pub boxes: Vec<Aabb<D>>,
    /// Planar polygon obstacles; only populated in 2D worlds.
    pub polygons: Vec<ConvexPolygon>,
}

impl<const D: usize> Environment<D> {
    pub fn validate(&self) -> Result<(), WorldError> {
        for b in &self.boxes {
            b.validate()?;
        }
        for p in &self.polygons {
            p.validate()?;
        }
        if D == 3 && !self.polygons.is_empty() {
            return Err(WorldError::InvalidShape(
                "polygon obstacles are planar only".into(),
            ));
        }
        Ok(())
    }

    pub fn has_finite_obstacles(&self) -> bool {
        !self.boxes.is_empty() || !self.polygons.is_empty()
    }

    /// Closed-set membership in any finite obstacle.
    pub fn occupancy(&self, z: &SVector<f64, D>) -> bool {
        if self.boxes.iter().any(|b| b.contains(z, tol::OCCUPANCY)) {
            return true;
        }
        if D == 2 {
            let z2 = Vector2::new(z[0], z[1]);
            if self
                .polygons
                .iter()
                .any(|p| p.contains(&z2, tol::OCCUPANCY))
            {
                return true;
            }
        }
        false
    }
}

/// Field-of-view wedge and its discretization, angles in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct FovSpec {
    pub r_fov: f64,
    pub theta_fov: f64,
    pub phi_fov: f64,
    pub dr: f64,
    pub dtheta: f64,
    pub dphi: f64,
}

impl FovSpec {
    pub fn validate<const D: usize>(&self) -> Result<(), WorldError> {
        if !(self.r_fov > 0.0 && self.dr > 0.0 && self.theta_fov > 0.0 && self.dtheta > 0.0) {
            return Err(WorldError::InvalidFov(
                "range and angular parameters must be positive".into(),
            ));
        }
        if self.theta_fov > 180.0 {
            return Err(WorldError::InvalidFov(format!(
                "theta_fov {} exceeds 180 degrees",
                self.theta_fov
            )));
        }
        if D == 3 {
            if !(self.phi_fov > 0.0 && self.dphi > 0.0) {
                return Err(WorldError::InvalidFov(
                    "vertical parameters must be positive".into(),
                ));
            }
            if self.phi_fov > 90.0 {
                return Err(WorldError::InvalidFov(format!(
                    "phi_fov {} exceeds 90 degrees",
                    self.phi_fov
                )));
            }
        }
        Ok(())
    }

    fn radial_count(&self) -> usize {
        (self.r_fov / self.dr).round() as usize
    }

    fn angular_count(full_deg: f64, step_deg: f64) -> usize {
        ((2.0 * full_deg + 1.0) / step_deg).round() as usize
    }

    /// Grid size by the closed-form count
    /// `N = (2θ+1)·R/(dr·dθ)` in 2D and `N = (2θ+1)(2φ+1)·R/(dr·dθ·dφ)`
    /// in 3D, with angles in degrees.
    pub fn grid_count<const D: usize>(&self) -> usize {
        let n_r = self.radial_count();
        let n_theta = Self::angular_count(self.theta_fov, self.dtheta);
        if D == 2 {
            n_r * n_theta
        } else {
            n_r * n_theta * Self::angular_count(self.phi_fov, self.dphi)
        }
    }
}

/// The local-frame sensing lattice, computed once per run, together with
/// the wedge limits used for exact point obstacles.
#[derive(Debug, Clone)]
pub struct FovGrid<const D: usize> {
    pub spec: FovSpec,
    pub points: Vec<SVector<f64, D>>,
}

/// Builds the sensing lattice: radii in `(0, R]`, angles spanning
/// `[−θ_fov, θ_fov]` (and the vertical wedge in 3D), with sample counts
/// matching [`FovSpec::grid_count`].
pub fn build_fov_grid<const D: usize>(fov: &FovSpec) -> Result<FovGrid<D>, WorldError> {
    fov.validate::<D>()?;
    let n_r = fov.radial_count();
    if n_r == 0 {
        return Err(WorldError::EmptyAxis("radial"));
    }
    let n_theta = FovSpec::angular_count(fov.theta_fov, fov.dtheta);
    if n_theta == 0 {
        return Err(WorldError::EmptyAxis("horizontal"));
    }
    let radii: Vec<f64> = (1..=n_r)
        .map(|i| fov.r_fov * i as f64 / n_r as f64)
        .collect();
    let thetas = angular_samples(fov.theta_fov, n_theta);

    let mut points = Vec::with_capacity(fov.grid_count::<D>());
    if D == 2 {
        for theta in &thetas {
            let (s, c) = theta.to_radians().sin_cos();
            for r in &radii {
                points.push(SVector::<f64, D>::from_fn(
                    |i, _| if i == 0 { r * c } else { r * s },
                ));
            }
        }
    } else {
        let n_phi = FovSpec::angular_count(fov.phi_fov, fov.dphi);
        if n_phi == 0 {
            return Err(WorldError::EmptyAxis("vertical"));
        }
        let phis = angular_samples(fov.phi_fov, n_phi);
        for phi in &phis {
            let (sp, cp) = phi.to_radians().sin_cos();
            for theta in &thetas {
                let (st, ct) = theta.to_radians().sin_cos();
                for r in &radii {
                    points.push(SVector::<f64, D>::from_fn(|i, _| match i {
                        0 => r * cp * ct,
                        1 => r * cp * st,
                        _ => r * sp,
                    }));
                }
            }
        }
    }
    Ok(FovGrid {
        spec: fov.clone(),
        points,
    })
}

/// `n` samples spanning `[−full, full]` inclusive (degrees).
fn angular_samples(full: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| -full + 2.0 * full * i as f64 / (n - 1) as f64)
        .collect()
}

/// Sensed obstacle points of one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud<const D: usize> {
    pub points: Vec<SVector<f64, D>>,
}

impl<const D: usize> PointCloud<D> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Wedge membership of a world point under the sensing pose.
pub fn in_fov<const D: usize>(fov: &FovSpec, pose: &Pose<D>, p: &SVector<f64, D>) -> bool {
    let local = pose.global_to_local(p);
    let r = local.norm();
    if r > fov.r_fov + tol::OCCUPANCY || r <= tol::ZERO_DIRECTION {
        return false;
    }
    let theta = local[1].atan2(local[0]).to_degrees();
    if theta.abs() > fov.theta_fov {
        return false;
    }
    if D == 3 {
        let phi = (local[2] / r).asin().to_degrees();
        if phi.abs() > fov.phi_fov {
            return false;
        }
    }
    true
}

/// The simulated sensor: maps the precomputed grid through the pose and
/// keeps every grid point inside a finite obstacle, then passes through
/// every exact point obstacle lying inside the wedge. No occlusion is
/// modeled; obstacles do not shadow what lies behind them.
pub fn sense<const D: usize>(
    env: &Environment<D>,
    pose: &Pose<D>,
    grid: &FovGrid<D>,
) -> PointCloud<D> {
    let mut points = Vec::new();
    if env.has_finite_obstacles() {
        for g in &grid.points {
            let w = pose.local_to_global(g);
            if env.occupancy(&w) {
                points.push(w);
            }
        }
    }
    for p in &env.point_obstacles {
        if in_fov(&grid.spec, pose, p) {
            points.push(*p);
        }
    }
    PointCloud { points }
}

/// The 2D defaults: 5-unit range, ±80° at 1° steps, 0.2-unit radial steps.
pub fn default_fov_2d() -> FovSpec {
    FovSpec {
        r_fov: 5.0,
        theta_fov: 80.0,
        phi_fov: 40.0,
        dr: 0.2,
        dtheta: 1.0,
        dphi: 0.5,
    }
}

/// The 3D defaults: 5-unit range, ±40° both axes at 0.5° steps, 0.1-unit
/// radial steps.
pub fn default_fov_3d() -> FovSpec {
    FovSpec {
        r_fov: 5.0,
        theta_fov: 40.0,
        phi_fov: 40.0,
        dr: 0.1,
        dtheta: 0.5,
        dphi: 0.5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix2;

    fn identity_pose_2d() -> Pose<2> {
        Pose::new(Vector2::zeros(), Matrix2::identity()).unwrap()
    }

    #[test]
    fn default_grid_count_is_4025() {
        let fov = default_fov_2d();
        assert_eq!(fov.grid_count::<2>(), 4025);
        let grid = build_fov_grid::<2>(&fov).unwrap();
        assert_eq!(grid.points.len(), 4025);
    }

    #[test]
    fn grid_count_matches_formula_in_3d() {
        let fov = default_fov_3d();
        // Independent evaluation of the closed form.
        let expected = ((2.0 * fov.theta_fov + 1.0) * (2.0 * fov.phi_fov + 1.0) * fov.r_fov
            / (fov.dr * fov.dtheta * fov.dphi))
            .round() as usize;
        assert_eq!(fov.grid_count::<3>(), expected);
        assert_eq!(expected, 1_312_200);
    }

    #[test]
    fn minimal_grid_is_single_cell() {
        let fov = FovSpec {
            r_fov: 5.0,
            theta_fov: 80.0,
            phi_fov: 40.0,
            dr: 5.0,
            dtheta: 160.0,
            dphi: 80.0,
        };
        let grid = build_fov_grid::<2>(&fov).unwrap();
        assert_eq!(grid.points.len(), 1);
        assert!((grid.points[0] - Vector2::new(5.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn oversized_radial_step_is_an_error() {
        let fov = FovSpec {
            dr: 20.0,
            ..default_fov_2d()
        };
        assert!(matches!(
            build_fov_grid::<2>(&fov),
            Err(WorldError::EmptyAxis("radial"))
        ));
    }

    #[test]
    fn grid_points_respect_range_and_angles() {
        let grid = build_fov_grid::<2>(&default_fov_2d()).unwrap();
        for p in &grid.points {
            let r = p.norm();
            assert!(r > 0.0 && r <= 5.0 + 1e-12);
            let theta = p[1].atan2(p[0]).to_degrees();
            assert!(theta.abs() <= 80.0 + 1e-9);
        }
        let grid3 = build_fov_grid::<3>(&FovSpec {
            dr: 1.0,
            dtheta: 5.0,
            dphi: 5.0,
            ..default_fov_3d()
        })
        .unwrap();
        for p in &grid3.points {
            let r = p.norm();
            assert!(r > 0.0 && r <= 5.0 + 1e-12);
            let theta = p[1].atan2(p[0]).to_degrees();
            let phi = (p[2] / r).asin().to_degrees();
            assert!(theta.abs() <= 40.0 + 1e-9);
            assert!(phi.abs() <= 40.0 + 1e-9);
        }
    }

    #[test]
    fn empty_environment_senses_nothing() {
        let env = Environment::<2>::default();
        let grid = build_fov_grid(&default_fov_2d()).unwrap();
        assert!(sense(&env, &identity_pose_2d(), &grid).is_empty());
    }

    #[test]
    fn point_obstacle_out_of_range_is_missed() {
        let env = Environment::<2> {
            point_obstacles: vec![Vector2::new(6.0, 0.0)],
            ..Default::default()
        };
        let grid = build_fov_grid(&default_fov_2d()).unwrap();
        assert!(sense(&env, &identity_pose_2d(), &grid).is_empty());
        let nearer = Environment::<2> {
            point_obstacles: vec![Vector2::new(4.0, 0.0)],
            ..Default::default()
        };
        let cloud = sense(&nearer, &identity_pose_2d(), &grid);
        assert_eq!(cloud.len(), 1);
    }

    #[test]
    fn point_obstacle_behind_is_missed() {
        let env = Environment::<2> {
            point_obstacles: vec![Vector2::new(-2.0, 0.0)],
            ..Default::default()
        };
        let grid = build_fov_grid(&default_fov_2d()).unwrap();
        assert!(sense(&env, &identity_pose_2d(), &grid).is_empty());
    }

    #[test]
    fn box_ahead_yields_only_points_on_the_box() {
        let env = Environment::<2> {
            boxes: vec![Aabb {
                min: Vector2::new(2.0, -0.5),
                max: Vector2::new(3.0, 0.5),
            }],
            ..Default::default()
        };
        let grid = build_fov_grid(&default_fov_2d()).unwrap();
        let pose = identity_pose_2d();
        let cloud = sense(&env, &pose, &grid);
        assert!(!cloud.is_empty());
        for p in &cloud.points {
            assert!(env.occupancy(p), "{p:?} off the box");
            assert!((p - pose.position).norm() <= 5.0 + 1e-9);
        }
    }

    #[test]
    fn occupancy_is_a_closed_set_test() {
        let env = Environment::<2> {
            boxes: vec![Aabb {
                min: Vector2::zeros(),
                max: Vector2::new(1.0, 1.0),
            }],
            ..Default::default()
        };
        assert!(env.occupancy(&Vector2::new(0.5, 0.5)));
        assert!(env.occupancy(&Vector2::new(1.0, 0.5)));
        assert!(!env.occupancy(&Vector2::new(1.1, 0.5)));
    }

    #[test]
    fn polygon_membership_and_validation() {
        let tri = ConvexPolygon {
            vertices: vec![
                Vector2::new(0.0, 0.0),
                Vector2::new(2.0, 0.0),
                Vector2::new(1.0, 2.0),
            ],
        };
        tri.validate().unwrap();
        assert!(tri.contains(&Vector2::new(1.0, 0.5), 0.0));
        assert!(tri.contains(&Vector2::new(1.0, 0.0), 1e-9));
        assert!(!tri.contains(&Vector2::new(2.5, 0.5), 1e-9));

        let bowtie = ConvexPolygon {
            vertices: vec![
                Vector2::new(0.0, 0.0),
                Vector2::new(1.0, 1.0),
                Vector2::new(1.0, 0.0),
                Vector2::new(0.0, 1.0),
            ],
        };
        assert!(bowtie.validate().is_err());
    }

    #[test]
    fn sensing_is_deterministic() {
        let env = Environment::<2> {
            point_obstacles: vec![Vector2::new(3.0, 1.0), Vector2::new(2.0, -2.0)],
            boxes: vec![Aabb {
                min: Vector2::new(1.0, -3.0),
                max: Vector2::new(2.0, -2.0),
            }],
            ..Default::default()
        };
        let grid = build_fov_grid(&default_fov_2d()).unwrap();
        let pose = identity_pose_2d();
        let a = sense(&env, &pose, &grid);
        let b = sense(&env, &pose, &grid);
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn angular_containment_of_sensed_box_points() {
        let env = Environment::<2> {
            boxes: vec![Aabb {
                min: Vector2::new(1.0, -4.0),
                max: Vector2::new(4.0, 4.0),
            }],
            ..Default::default()
        };
        let fov = default_fov_2d();
        let grid = build_fov_grid(&fov).unwrap();
        let pose = identity_pose_2d();
        for p in sense(&env, &pose, &grid).points {
            let local = pose.global_to_local(&p);
            let theta = local[1].atan2(local[0]).to_degrees();
            assert!(theta.abs() <= fov.theta_fov + fov.dtheta);
        }
    }
}
