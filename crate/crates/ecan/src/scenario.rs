//! Scenario files: a JSON description of the world, the agent, the goal
//! and the planner parameters, with defaults filled in and seeded random
//! world generation resolved at load time.

use nalgebra::{SVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{AgentKind, AgentModel, PlaneDims};
use crate::geometry::Pose;
use crate::planner::{PlannerParams, PointAgentReach};
use crate::tol;
use crate::world::{Aabb, ConvexPolygon, Environment, FovSpec};

#[derive(Debug, Error)]
pub enum ScenarioError {
    /// Parse failure with the offending field path and line/column.
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("scenario is invalid: {0}")]
    Validation(String),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation(msg.into())
}

/// A fully resolved scenario in a fixed dimension: generated obstacle
/// points are materialized and every parameter carries its final value.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<const D: usize> {
    pub agent: AgentModel<D>,
    pub start: Pose<D>,
    pub goal: SVector<f64, D>,
    pub env: Environment<D>,
    pub params: PlannerParams,
    pub seed: u64,
}

/// A scenario in whichever dimension the file declared.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedScenario {
    D2(Scenario<2>),
    D3(Scenario<3>),
}

impl LoadedScenario {
    pub fn dimension(&self) -> usize {
        match self {
            LoadedScenario::D2(_) => 2,
            LoadedScenario::D3(_) => 3,
        }
    }

    pub fn grid_count(&self) -> usize {
        match self {
            LoadedScenario::D2(s) => s.params.fov.grid_count::<2>(),
            LoadedScenario::D3(s) => s.params.fov.grid_count::<3>(),
        }
    }
}

/// Overrides applied after parsing, from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOverrides {
    pub seed: Option<u64>,
    pub max_steps: Option<usize>,
}

// ---------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    dimension: usize,
    agent: AgentFile,
    start: StartFile,
    goal: Vec<f64>,
    #[serde(default)]
    obstacles: ObstaclesFile,
    #[serde(default)]
    params: ParamsFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum AgentFile {
    Point,
    Box2d { dims: BoxDimsFile },
    Plane3d { dims: Option<PlaneDims> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxDimsFile {
    width: f64,
    height: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StartFile {
    position: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    heading: Option<Vec<f64>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstaclesFile {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    boxes: Vec<BoxFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    polygons: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    random_points: Option<RandomPointsFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxFile {
    min: Vec<f64>,
    max: Vec<f64>,
}

/// Generator block for seeded random point clutter.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomPointsFile {
    count: usize,
    region: BoxRegionFile,
    /// Points closer than this to the start body or the goal are re-drawn.
    #[serde(default = "default_clearance")]
    clearance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxRegionFile {
    min: Vec<f64>,
    max: Vec<f64>,
}

fn default_clearance() -> f64 {
    1.0
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    point_agent_reach: Option<PointAgentReachFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fov: Option<FovFile>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PointAgentReachFile {
    GoalDistance,
    BoundaryDistance,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FovFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r_fov: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta_fov: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi_fov: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dtheta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dphi: Option<f64>,
}

// ---------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------

pub fn load_scenario(text: &str) -> Result<LoadedScenario, ScenarioError> {
    load_scenario_with(text, LoadOverrides::default())
}

pub fn load_scenario_with(
    text: &str,
    overrides: LoadOverrides,
) -> Result<LoadedScenario, ScenarioError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        ScenarioError::Parse(format!("field `{path}`: {}", e.into_inner()))
    })?;
    match file.dimension {
        2 => Ok(LoadedScenario::D2(resolve::<2>(&file, overrides)?)),
        3 => Ok(LoadedScenario::D3(resolve::<3>(&file, overrides)?)),
        d => Err(invalid(format!("dimension must be 2 or 3, got {d}"))),
    }
}

fn vector<const D: usize>(raw: &[f64], what: &str) -> Result<SVector<f64, D>, ScenarioError> {
    if raw.len() != D {
        return Err(invalid(format!(
            "{what} must have {D} coordinates, got {}",
            raw.len()
        )));
    }
    Ok(SVector::<f64, D>::from_fn(|i, _| raw[i]))
}

fn resolve<const D: usize>(
    file: &ScenarioFile,
    overrides: LoadOverrides,
) -> Result<Scenario<D>, ScenarioError> {
    let agent = resolve_agent::<D>(&file.agent)?;
    let goal = vector::<D>(&file.goal, "goal")?;
    let position = vector::<D>(&file.start.position, "start position")?;
    let heading = match &file.start.heading {
        Some(h) => vector::<D>(h, "start heading")?,
        None => goal - position,
    };
    let start = Pose::facing(position, &heading)
        .map_err(|e| invalid(format!("start heading: {e}")))?;

    let mut env = Environment::<D>::default();
    for p in &file.obstacles.points {
        env.point_obstacles.push(vector::<D>(p, "obstacle point")?);
    }
    for b in &file.obstacles.boxes {
        env.boxes.push(Aabb {
            min: vector::<D>(&b.min, "box min")?,
            max: vector::<D>(&b.max, "box max")?,
        });
    }
    for poly in &file.obstacles.polygons {
        if D != 2 {
            return Err(invalid("polygon obstacles are only supported in 2D"));
        }
        let vertices = poly
            .iter()
            .map(|v| {
                if v.len() != 2 {
                    Err(invalid("polygon vertices must have 2 coordinates"))
                } else {
                    Ok(Vector2::new(v[0], v[1]))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        env.polygons.push(ConvexPolygon { vertices });
    }
    env.validate()
        .map_err(|e| invalid(format!("obstacles: {e}")))?;

    let seed = overrides.seed.or(file.seed).unwrap_or(0);
    if let Some(gen) = &file.obstacles.random_points {
        generate_points(&mut env, gen, seed, &agent, &start, &goal)?;
    }

    let gamma_default = if env.has_finite_obstacles() { 5e-4 } else { 5e-5 };
    let base = if D == 2 {
        PlannerParams::defaults_2d(gamma_default)
    } else {
        PlannerParams::defaults_3d(gamma_default)
    };
    let p = &file.params;
    let fov = match &p.fov {
        Some(f) => FovSpec {
            r_fov: f.r_fov.unwrap_or(base.fov.r_fov),
            theta_fov: f.theta_fov.unwrap_or(base.fov.theta_fov),
            phi_fov: f.phi_fov.unwrap_or(base.fov.phi_fov),
            dr: f.dr.unwrap_or(base.fov.dr),
            dtheta: f.dtheta.unwrap_or(base.fov.dtheta),
            dphi: f.dphi.unwrap_or(base.fov.dphi),
        },
        None => base.fov.clone(),
    };
    fov.validate::<D>().map_err(|e| invalid(e.to_string()))?;
    let params = PlannerParams {
        delta1: p.delta1.unwrap_or(base.delta1),
        alpha: p.alpha.unwrap_or(base.alpha),
        beta: p.beta.unwrap_or(base.beta),
        gamma: p.gamma.unwrap_or(base.gamma),
        epsilon: p.epsilon.unwrap_or(base.epsilon),
        fov,
        max_steps: overrides
            .max_steps
            .or(p.max_steps)
            .unwrap_or(base.max_steps),
        point_agent_reach: match p.point_agent_reach {
            Some(PointAgentReachFile::GoalDistance) | None => PointAgentReach::GoalDistance,
            Some(PointAgentReachFile::BoundaryDistance) => PointAgentReach::BoundaryDistance,
        },
    };

    let scenario = Scenario {
        agent,
        start,
        goal,
        env,
        params,
        seed,
    };
    validate_scenario(&scenario)?;
    Ok(scenario)
}

fn resolve_agent<const D: usize>(file: &AgentFile) -> Result<AgentModel<D>, ScenarioError> {
    match file {
        AgentFile::Point => Ok(AgentModel::<D>::point()),
        AgentFile::Box2d { dims } => {
            if D != 2 {
                return Err(invalid("box2d agents require a 2D scenario"));
            }
            if !(dims.width > 0.0 && dims.height > 0.0) {
                return Err(invalid("box2d dimensions must be positive"));
            }
            let model = AgentModel::box2d(dims.width, dims.height);
            Ok(reshape_model::<2, D>(model))
        }
        AgentFile::Plane3d { dims } => {
            if D != 3 {
                return Err(invalid("plane3d agents require a 3D scenario"));
            }
            let dims = dims.clone().unwrap_or_default();
            dims.validate().map_err(invalid)?;
            Ok(reshape_model::<3, D>(AgentModel::plane3d(dims)))
        }
    }
}

/// Re-wraps a model between statically equal dimensions (checked at
/// runtime by the callers above).
fn reshape_model<const S: usize, const D: usize>(model: AgentModel<S>) -> AgentModel<D> {
    debug_assert_eq!(S, D);
    let offsets = model
        .offsets()
        .iter()
        .map(|o| SVector::<f64, D>::from_fn(|i, _| o[i]))
        .collect();
    AgentModel::from_parts(model.kind.clone(), offsets)
}

fn generate_points<const D: usize>(
    env: &mut Environment<D>,
    gen: &RandomPointsFile,
    seed: u64,
    agent: &AgentModel<D>,
    start: &Pose<D>,
    goal: &SVector<f64, D>,
) -> Result<(), ScenarioError> {
    let min = vector::<D>(&gen.region.min, "random region min")?;
    let max = vector::<D>(&gen.region.max, "random region max")?;
    for i in 0..D {
        if !(max[i] > min[i]) {
            return Err(invalid("random region has no extent"));
        }
    }
    let keep_out = agent.radius() + gen.clearance;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placed = 0usize;
    let mut attempts = 0usize;
    while placed < gen.count {
        attempts += 1;
        if attempts > gen.count * 1000 {
            return Err(invalid(
                "random obstacle generation exhausted its attempt budget; \
                 the region is too small for the requested clearance",
            ));
        }
        let p = SVector::<f64, D>::from_fn(|i, _| rng.random_range(min[i]..max[i]));
        if (p - start.position).norm() < keep_out || (p - goal).norm() < gen.clearance {
            continue;
        }
        if env.occupancy(&p) {
            continue;
        }
        env.point_obstacles.push(p);
        placed += 1;
    }
    Ok(())
}

fn validate_scenario<const D: usize>(s: &Scenario<D>) -> Result<(), ScenarioError> {
    let body = s.agent.extremum_points(&s.start);
    for b in &body {
        if s.env.occupancy(b) {
            return Err(invalid(format!(
                "start body point {:?} lies inside a finite obstacle",
                b.as_slice()
            )));
        }
        for o in &s.env.point_obstacles {
            if (o - b).norm() <= tol::COINCIDENT {
                return Err(invalid(format!(
                    "point obstacle {:?} coincides with the start body",
                    o.as_slice()
                )));
            }
        }
    }
    if (s.start.position - s.goal).norm() < tol::COINCIDENT {
        return Err(invalid("start and goal coincide"));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Saving (canonical form: everything explicit, generated points inlined)
// ---------------------------------------------------------------------

pub fn save_scenario(scenario: &LoadedScenario) -> String {
    let file = match scenario {
        LoadedScenario::D2(s) => encode(s),
        LoadedScenario::D3(s) => encode(s),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("scenario serialization");
    out.push('\n');
    out
}

fn encode<const D: usize>(s: &Scenario<D>) -> ScenarioFile {
    let agent = match &s.agent.kind {
        AgentKind::Point => AgentFile::Point,
        AgentKind::Box2D { width, height } => AgentFile::Box2d {
            dims: BoxDimsFile {
                width: *width,
                height: *height,
            },
        },
        AgentKind::Plane3D(dims) => AgentFile::Plane3d {
            dims: Some(dims.clone()),
        },
    };
    let coords = |v: &SVector<f64, D>| v.iter().copied().collect::<Vec<f64>>();
    ScenarioFile {
        dimension: D,
        agent,
        start: StartFile {
            position: coords(&s.start.position),
            heading: Some(coords(&s.start.axis(0))),
        },
        goal: coords(&s.goal),
        obstacles: ObstaclesFile {
            points: s.env.point_obstacles.iter().map(|p| coords(p)).collect(),
            boxes: s
                .env
                .boxes
                .iter()
                .map(|b| BoxFile {
                    min: coords(&b.min),
                    max: coords(&b.max),
                })
                .collect(),
            polygons: s
                .env
                .polygons
                .iter()
                .map(|p| p.vertices.iter().map(|v| vec![v.x, v.y]).collect())
                .collect(),
            random_points: None,
        },
        params: ParamsFile {
            alpha: Some(s.params.alpha),
            beta: Some(s.params.beta),
            gamma: Some(s.params.gamma),
            epsilon: Some(s.params.epsilon),
            delta1: Some(s.params.delta1),
            max_steps: Some(s.params.max_steps),
            point_agent_reach: Some(match s.params.point_agent_reach {
                PointAgentReach::GoalDistance => PointAgentReachFile::GoalDistance,
                PointAgentReach::BoundaryDistance => PointAgentReachFile::BoundaryDistance,
            }),
            fov: Some(FovFile {
                r_fov: Some(s.params.fov.r_fov),
                theta_fov: Some(s.params.fov.theta_fov),
                phi_fov: Some(s.params.fov.phi_fov),
                dr: Some(s.params.fov.dr),
                dtheta: Some(s.params.fov.dtheta),
                dphi: Some(s.params.fov.dphi),
            }),
        },
        seed: Some(s.seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_2D: &str = r#"{
        "dimension": 2,
        "agent": {"kind": "point"},
        "start": {"position": [0, 0]},
        "goal": [9, 0]
    }"#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let LoadedScenario::D2(s) = load_scenario(MINIMAL_2D).unwrap() else {
            panic!("wrong dimension");
        };
        assert_eq!(s.params.alpha, 0.1);
        assert_eq!(s.params.delta1, 1.0);
        assert_eq!(s.params.fov.theta_fov, 80.0);
        assert_eq!(s.params.gamma, 5e-5);
        assert_eq!(s.params.epsilon, 1e-2);
        // Facing the goal by default.
        assert!((s.start.axis(0) - Vector2::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gamma_default_switches_with_finite_obstacles() {
        let text = r#"{
            "dimension": 2,
            "agent": {"kind": "box2d", "dims": {"width": 0.5, "height": 0.3}},
            "start": {"position": [0, 0]},
            "goal": [9, 0],
            "obstacles": {"boxes": [{"min": [4, -1], "max": [5, 1]}]}
        }"#;
        let LoadedScenario::D2(s) = load_scenario(text).unwrap() else {
            panic!();
        };
        assert_eq!(s.params.gamma, 5e-4);
    }

    #[test]
    fn malformed_field_is_reported_by_name() {
        let text = r#"{
            "dimension": 2,
            "agent": {"kind": "point"},
            "start": {"position": [0, 0]},
            "goal": [9, 0],
            "params": {"fov": {"theta_fov": "eighty"}}
        }"#;
        let err = load_scenario(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("theta_fov"), "message was: {msg}");
    }

    #[test]
    fn overlapping_start_and_obstacle_is_rejected() {
        let text = r#"{
            "dimension": 2,
            "agent": {"kind": "point"},
            "start": {"position": [0.5, 0.5]},
            "goal": [9, 0],
            "obstacles": {"boxes": [{"min": [0, 0], "max": [1, 1]}]}
        }"#;
        assert!(matches!(
            load_scenario(text),
            Err(ScenarioError::Validation(_))
        ));
    }

    #[test]
    fn round_trip_is_identity_on_canonical_form() {
        let text = r#"{
            "dimension": 2,
            "agent": {"kind": "box2d", "dims": {"width": 0.5, "height": 0.3}},
            "start": {"position": [0, 0], "heading": [1, 0]},
            "goal": [20, 14],
            "obstacles": {
                "points": [[3, 1]],
                "boxes": [{"min": [5, 5], "max": [7, 8]}],
                "polygons": [[[10, 0], [12, 0], [11, 2]]],
                "random_points": {"count": 25, "region": {"min": [2, 2], "max": [18, 12]}, "clearance": 1.5}
            },
            "params": {"gamma": 2e-4, "epsilon": 0.5},
            "seed": 11
        }"#;
        let first = load_scenario(text).unwrap();
        let canonical = save_scenario(&first);
        let second = load_scenario(&canonical).unwrap();
        assert_eq!(first, second);
        assert_eq!(save_scenario(&second), canonical);
        let LoadedScenario::D2(s) = &first else { panic!() };
        assert_eq!(s.env.point_obstacles.len(), 26);
    }

    #[test]
    fn generated_points_are_seed_deterministic_and_clear_of_endpoints() {
        let text = r#"{
            "dimension": 2,
            "agent": {"kind": "point"},
            "start": {"position": [0, 0]},
            "goal": [30, 30],
            "obstacles": {"random_points": {"count": 446, "region": {"min": [-2, -2], "max": [32, 32]}, "clearance": 1.0}},
            "seed": 7
        }"#;
        let LoadedScenario::D2(a) = load_scenario(text).unwrap() else {
            panic!();
        };
        let LoadedScenario::D2(b) = load_scenario(text).unwrap() else {
            panic!();
        };
        assert_eq!(a.env.point_obstacles, b.env.point_obstacles);
        assert_eq!(a.env.point_obstacles.len(), 446);
        for p in &a.env.point_obstacles {
            assert!((p - a.start.position).norm() >= 1.0);
            assert!((p - a.goal).norm() >= 1.0);
        }
        let LoadedScenario::D2(c) = load_scenario_with(
            text,
            LoadOverrides {
                seed: Some(8),
                max_steps: None,
            },
        )
        .unwrap() else {
            panic!();
        };
        assert_ne!(a.env.point_obstacles, c.env.point_obstacles);
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let text = r#"{
            "dimension": 3,
            "agent": {"kind": "box2d", "dims": {"width": 1, "height": 1}},
            "start": {"position": [0, 0, 0]},
            "goal": [5, 5, 5]
        }"#;
        assert!(load_scenario(text).is_err());
        let text = r#"{
            "dimension": 2,
            "agent": {"kind": "point"},
            "start": {"position": [0, 0, 0]},
            "goal": [5, 5]
        }"#;
        assert!(load_scenario(text).is_err());
    }

    #[test]
    fn plane_agent_loads_with_default_dims() {
        let text = r#"{
            "dimension": 3,
            "agent": {"kind": "plane3d", "dims": null},
            "start": {"position": [0, 0, 1]},
            "goal": [50, 50, 10]
        }"#;
        let LoadedScenario::D3(s) = load_scenario(text).unwrap() else {
            panic!();
        };
        assert_eq!(s.agent.extremum_count(), 33);
        assert_eq!(s.params.delta1, 2.0);
        assert_eq!(s.params.fov.dr, 0.1);
    }
}
