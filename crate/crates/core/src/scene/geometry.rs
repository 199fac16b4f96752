//! First-order image-source tracing.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{Axis, Obstacle, SceneConfig, WallPlane, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    LineOfSight,
    Wall(usize),
    Ground,
}

impl PathKind {
    pub fn reflections(self) -> i32 {
        match self {
            PathKind::LineOfSight => 0,
            PathKind::Wall(_) | PathKind::Ground => 1,
        }
    }
}

/// Purely geometric description of one candidate ray between two points.
#[derive(Debug, Clone, PartialEq)]
pub struct RayGeometry {
    pub kind: PathKind,
    /// Total unfolded length in meters.
    pub length: f64,
    /// Unit vector from the transmitter toward its first interaction.
    pub departure: Vector3<f64>,
    pub blocked: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub kind: PathKind,
    pub delay_s: f64,
    pub gain: Complex64,
    /// Departure azimuth at the base station, from +x toward +y.
    pub azimuth: f64,
    /// Departure elevation at the base station, above the horizontal.
    pub elevation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub bs: usize,
    pub paths: Vec<Path>,
    pub los: bool,
}

impl PathSet {
    pub fn is_shadowed(&self) -> bool {
        self.paths.is_empty()
    }
}

fn segment_hits(o: &Obstacle, a: Vector3<f64>, b: Vector3<f64>) -> bool {
    let (c, other) = match o.axis {
        Axis::X => (0, 1),
        Axis::Y => (1, 0),
    };
    let da = a[c] - o.offset;
    let db = b[c] - o.offset;
    if da * db > 0.0 || da == db {
        return false;
    }
    let t = da / (da - db);
    let q = a + (b - a) * t;
    (o.span[0]..=o.span[1]).contains(&q[other]) && (o.z[0]..=o.z[1]).contains(&q[2])
}

fn blocked(obstacles: &[Obstacle], legs: &[(Vector3<f64>, Vector3<f64>)]) -> bool {
    obstacles.iter().any(|o| legs.iter().any(|&(a, b)| segment_hits(o, a, b)))
}

/// Reflection of a specular bounce on a plane through `point` with unit
/// `normal`; `None` if either endpoint is not strictly in front of it.
fn reflect(
    tx: Vector3<f64>,
    rx: Vector3<f64>,
    point: Vector3<f64>,
    normal: Vector3<f64>,
    kind: PathKind,
    obstacles: &[Obstacle],
) -> Option<RayGeometry> {
    let s_tx = (tx - point).dot(&normal);
    let s_rx = (rx - point).dot(&normal);
    if s_tx <= 0.0 || s_rx <= 0.0 {
        return None;
    }
    let image = tx - normal * (2.0 * s_tx);
    let t = s_tx / (s_tx + s_rx);
    let hit = image + (rx - image) * t;
    let first = hit - tx;
    Some(RayGeometry {
        kind,
        length: (rx - image).norm(),
        departure: first.normalize(),
        blocked: blocked(obstacles, &[(tx, hit), (hit, rx)]),
    })
}

fn wall_frame(w: &WallPlane) -> (Vector3<f64>, Vector3<f64>) {
    (Vector3::from(w.point), Vector3::from(w.normal).normalize())
}

/// Every first-order candidate ray from `tx` to `rx`: the direct ray, one
/// bounce per wall and one off the ground. Rays are reported even when
/// obstructed so that geometry can be checked independently of blockage.
pub fn image_source_rays(scene: &SceneConfig, tx: [f64; 3], rx: [f64; 3]) -> Vec<RayGeometry> {
    let tx = Vector3::from(tx);
    let rx = Vector3::from(rx);
    let direct = rx - tx;
    let mut rays = vec![RayGeometry {
        kind: PathKind::LineOfSight,
        length: direct.norm(),
        departure: direct.normalize(),
        blocked: blocked(&scene.obstacles, &[(tx, rx)]),
    }];
    for (i, w) in scene.wall_planes.iter().enumerate() {
        let (point, normal) = wall_frame(w);
        rays.extend(reflect(tx, rx, point, normal, PathKind::Wall(i), &scene.obstacles));
    }
    if scene.ground_reflection {
        let point = Vector3::new(0.0, 0.0, scene.ground_height);
        rays.extend(reflect(tx, rx, point, Vector3::z(), PathKind::Ground, &scene.obstacles));
    }
    rays
}

/// Propagation paths from base station `bs` to a user.
///
/// Gains follow free-space loss `λ / (4π d)` times the reflection
/// coefficient per bounce, at the carrier the base station operates on.
/// Rays that are obstructed or that leave through the back of the array
/// are dropped.
pub fn trace_paths(scene: &SceneConfig, user: [f64; 3], bs: usize) -> Result<PathSet> {
    if bs > 1 {
        return Err(Error::Domain(format!("no base station with index {bs}")));
    }
    if !scene.user_region.contains(user) {
        return Err(Error::Domain(format!("user {user:?} lies outside the user region")));
    }
    let wavelength = SPEED_OF_LIGHT / scene.carrier_hz(bs);
    let orientation = &scene.array_orientations[bs];
    let mut los = false;
    let mut paths = Vec::new();
    for ray in image_source_rays(scene, scene.bs_positions[bs], user) {
        if ray.blocked || orientation.direction_cosines(ray.departure).is_err() {
            continue;
        }
        if ray.kind == PathKind::LineOfSight {
            los = true;
        }
        let amplitude = wavelength / (4.0 * PI * ray.length)
            * scene.reflection_coefficient.powi(ray.kind.reflections());
        let d = ray.departure;
        paths.push(Path {
            kind: ray.kind,
            delay_s: ray.length / SPEED_OF_LIGHT,
            gain: Complex64::new(amplitude, 0.0),
            azimuth: d.y.atan2(d.x),
            elevation: d.z.clamp(-1.0, 1.0).asin(),
        });
    }
    if paths.is_empty() {
        return Err(Error::EmptyPathSet { bs, location: user });
    }
    Ok(PathSet { bs, paths, los })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_scene() -> SceneConfig {
        SceneConfig {
            wall_planes: vec![],
            ground_reflection: false,
            obstacles: vec![],
            ..SceneConfig::default()
        }
    }

    #[test]
    fn free_space_single_path() {
        let scene = open_scene();
        let user = [3.0, 2.0, 1.5];
        let set = trace_paths(&scene, user, 0).unwrap();
        assert_eq!(set.paths.len(), 1);
        assert!(set.los);
        let bs = Vector3::from(scene.bs_positions[0]);
        let d = (Vector3::from(user) - bs).norm();
        let lambda = SPEED_OF_LIGHT / scene.uplink_carrier_hz;
        let p = &set.paths[0];
        assert!((p.gain.re - lambda / (4.0 * PI * d)).abs() < 1e-15);
        assert_eq!(p.gain.im, 0.0);
        assert!((p.delay_s - d / SPEED_OF_LIGHT).abs() < 1e-20);
    }

    #[test]
    fn obstacle_removes_los_but_keeps_reflections() {
        let mut scene = SceneConfig::default();
        scene.obstacles = vec![Obstacle {
            axis: Axis::Y,
            offset: 0.0,
            span: [-50.0, 50.0],
            z: [0.0, 3.0],
        }];
        // BS2 sits at y = 18; a user close behind the screen at y = -1 is
        // hidden from the direct ray but reached via the far wall.
        let set = trace_paths(&scene, [12.0, -1.0, 1.5], 1).unwrap();
        assert!(!set.los);
        assert!(set.paths.iter().all(|p| p.kind != PathKind::LineOfSight));
        assert!(set.paths.iter().any(|p| matches!(p.kind, PathKind::Wall(_))));
    }

    #[test]
    fn fully_enclosed_user_is_shadowed() {
        let mut scene = SceneConfig::default();
        scene.wall_planes.clear();
        scene.ground_reflection = false;
        scene.obstacles = vec![Obstacle {
            axis: Axis::Y,
            offset: 0.0,
            span: [-100.0, 100.0],
            z: [-100.0, 100.0],
        }];
        let r = trace_paths(&scene, [0.0, -5.0, 1.5], 1);
        assert!(matches!(r, Err(Error::EmptyPathSet { bs: 1, .. })));
    }

    #[test]
    fn own_wall_bounce_leaves_through_the_back() {
        // BS1 is 2 m in front of the wall at y = -20; its bounce off that
        // wall departs backwards and must not appear.
        let scene = SceneConfig { obstacles: vec![], ..SceneConfig::default() };
        let set = trace_paths(&scene, [0.0, 0.0, 1.5], 0).unwrap();
        assert!(set.paths.iter().all(|p| p.kind != PathKind::Wall(0)));
        assert!(set.paths.iter().any(|p| p.kind == PathKind::Wall(1)));
        assert!(set.paths.iter().any(|p| p.kind == PathKind::Ground));
    }

    /// Brute-force search for the shortest tx → wall → rx polyline over a
    /// grid of reflection points on the wall, refined by golden sections.
    fn brute_force_bounce(w: &WallPlane, tx: Vector3<f64>, rx: Vector3<f64>) -> f64 {
        let (p0, n) = wall_frame(w);
        let e1 = n.cross(&Vector3::z()).normalize();
        let e2 = Vector3::z();
        let len = |a: f64, b: f64| {
            let q = p0 + e1 * a + e2 * b;
            (q - tx).norm() + (rx - q).norm()
        };
        let (mut best_a, mut best_b, mut best) = (0.0, 0.0, f64::INFINITY);
        let mut step = 4.0;
        let (mut ca, mut cb) = (0.0, 10.0);
        for _ in 0..40 {
            for i in -20..=20 {
                for j in -20..=20 {
                    let a = ca + i as f64 * step;
                    let b = cb + j as f64 * step;
                    let l = len(a, b);
                    if l < best {
                        best = l;
                        best_a = a;
                        best_b = b;
                    }
                }
            }
            ca = best_a;
            cb = best_b;
            step *= 0.25;
        }
        best
    }

    #[test]
    fn wall_bounce_length_matches_brute_force() {
        let scene = SceneConfig::default();
        let tx = Vector3::from(scene.bs_positions[1]);
        for user in [[0.0, 0.0, 1.5], [-20.0, 10.0, 1.5], [25.0, -12.0, 1.5]] {
            let rays = image_source_rays(&scene, scene.bs_positions[1], user);
            for (i, w) in scene.wall_planes.iter().enumerate() {
                let ray = rays.iter().find(|r| r.kind == PathKind::Wall(i)).unwrap();
                let brute = brute_force_bounce(w, tx, Vector3::from(user));
                assert!(
                    (ray.length - brute).abs() < 1e-9 * brute,
                    "wall {i}: image {} vs brute {}",
                    ray.length,
                    brute
                );
            }
        }
    }

    #[test]
    fn geometry_is_reciprocal() {
        let scene = SceneConfig::default();
        for user in [[0.0, 0.0, 1.5], [-27.0, 13.0, 1.5], [5.0, -9.0, 1.5]] {
            for bs in 0..2 {
                let fwd = image_source_rays(&scene, scene.bs_positions[bs], user);
                let back = image_source_rays(&scene, user, scene.bs_positions[bs]);
                assert_eq!(fwd.len(), back.len());
                for (a, b) in fwd.iter().zip(&back) {
                    assert_eq!(a.kind, b.kind);
                    assert!((a.length - b.length).abs() < 1e-12 * a.length);
                    assert_eq!(a.blocked, b.blocked);
                }
            }
        }
    }

    #[test]
    fn scaling_geometry_scales_gain_and_delay() {
        let scene = open_scene();
        let mut doubled = scene.clone();
        for p in doubled.bs_positions.iter_mut() {
            p.iter_mut().for_each(|c| *c *= 2.0);
        }
        let r = &mut doubled.user_region;
        r.x = [r.x[0] * 2.0, r.x[1] * 2.0];
        r.y = [r.y[0] * 2.0, r.y[1] * 2.0];
        r.height *= 2.0;
        let user = [7.0, -4.0, 1.5];
        let user2 = [14.0, -8.0, 3.0];
        let a = &trace_paths(&scene, user, 0).unwrap().paths[0];
        let b = &trace_paths(&doubled, user2, 0).unwrap().paths[0];
        assert!((b.gain.re - a.gain.re / 2.0).abs() < 1e-15);
        assert!((b.delay_s - 2.0 * a.delay_s).abs() < 1e-20);
    }
}
