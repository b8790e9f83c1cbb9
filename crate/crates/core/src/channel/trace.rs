use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::scene::{complex_pair, Partition, Point3, Scene, Wall};
use super::{ChannelError, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Los,
    Reflection,
    Scattering,
    Diffraction,
}

/// One propagation ray between a transmitter and a receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub kind: PathKind,
    /// Number of interactions with the environment.
    pub order: usize,
    /// Complex amplitude, carrier phase included.
    #[serde(with = "complex_pair")]
    pub gain: Complex64,
    /// Seconds.
    pub delay: f64,
    /// Azimuth of arrival at the receiver, degrees in [-180, 180).
    pub aaoa: f64,
    /// Elevation of arrival at the receiver, degrees in [-90, 90].
    pub eaoa: f64,
    pub power_dbm: f64,
    /// Room surfaces hit, in propagation order. Scattering paths list their
    /// parent reflection surface.
    #[serde(default)]
    pub walls: Vec<Wall>,
    /// Interaction points between tx and rx.
    #[serde(default)]
    pub interactions: Vec<[f64; 3]>,
}

impl PathComponent {
    pub fn length(&self) -> f64 {
        self.delay * SPEED_OF_LIGHT
    }
}

/// Image-method ray tracer for a shoebox room with thin partitions.
///
/// Returns LoS (if unobstructed), specular reflections up to
/// `max_reflection_order` bounces off the six room surfaces, first-order
/// knife-edge diffraction around the free vertical edges of partitions that
/// shadow the direct path, and, when the scene enables it, diffuse children of
/// first-order reflections. Paths below the scene's detection threshold are
/// dropped; the rest are sorted by descending power.
pub fn trace_paths(
    scene: &Scene,
    tx: &Point3,
    rx: &Point3,
    max_reflection_order: usize,
    max_diffraction_order: usize,
) -> Result<Vec<PathComponent>, ChannelError> {
    scene.validate()?;
    if max_diffraction_order > 1 {
        return Err(ChannelError::InvalidInput(format!(
            "diffraction order {max_diffraction_order} unsupported (0 or 1)"
        )));
    }
    for (name, p) in [("tx", tx), ("rx", rx)] {
        if !scene.contains(p) {
            return Err(ChannelError::InvalidInput(format!(
                "{name} {:?} is not strictly inside the room",
                p.as_slice()
            )));
        }
    }
    if (tx - rx).norm() < 1e-9 {
        return Err(ChannelError::InvalidInput("tx and rx coincide".into()));
    }

    let tracer = Tracer {
        scene,
        tx: *tx,
        rx: *rx,
        wavelength: scene.wavelength(),
    };
    let mut paths = Vec::new();

    let los_blocked = scene.is_blocked(tx, rx);
    if !los_blocked {
        paths.push(tracer.make_path(PathKind::Los, vec![], vec![], Complex64::new(1.0, 0.0)));
    }

    let mut walls = Vec::with_capacity(max_reflection_order);
    let mut images = vec![*tx];
    tracer.reflect_recursive(max_reflection_order, &mut walls, &mut images, &mut paths);

    if max_diffraction_order == 1 && los_blocked {
        for part in &scene.interior_partitions {
            if part.blocks(tx, rx) {
                tracer.diffract(part, &mut paths);
            }
        }
    }

    paths.retain(|p| p.power_dbm >= scene.min_detectable_power && p.gain.norm() > 0.0);
    sort_by_power(&mut paths);
    Ok(paths)
}

pub(crate) fn sort_by_power(paths: &mut [PathComponent]) {
    paths.sort_by(|a, b| {
        b.power_dbm
            .total_cmp(&a.power_dbm)
            .then(a.delay.total_cmp(&b.delay))
    });
}

/// TE Fresnel reflection coefficient for incidence angle with the given cosine.
pub fn fresnel_te(eps: Complex64, cos_theta: f64) -> Complex64 {
    let sin2 = 1.0 - cos_theta * cos_theta;
    let root = (eps - sin2).sqrt();
    (cos_theta - root) / (cos_theta + root)
}

/// Knife-edge diffraction loss in dB for Fresnel parameter `v`.
pub fn knife_edge_loss_db(v: f64) -> f64 {
    if v <= -0.78 {
        0.0
    } else {
        6.9 + 20.0 * (((v - 0.1).powi(2) + 1.0).sqrt() + v - 0.1).log10()
    }
}

pub(crate) fn arrival_angles(from_rx: &Point3) -> (f64, f64) {
    let n = from_rx.norm();
    let az = from_rx.y.atan2(from_rx.x).to_degrees();
    let el = (from_rx.z / n).clamp(-1.0, 1.0).asin().to_degrees();
    (wrap_degrees(az), el)
}

/// Wraps an angle into [-180, 180).
pub fn wrap_degrees(a: f64) -> f64 {
    let w = (a + 180.0).rem_euclid(360.0) - 180.0;
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

struct Tracer<'a> {
    scene: &'a Scene,
    tx: Point3,
    rx: Point3,
    wavelength: f64,
}

impl Tracer<'_> {
    fn make_path(
        &self,
        kind: PathKind,
        walls: Vec<Wall>,
        points: Vec<Point3>,
        coefficient: Complex64,
    ) -> PathComponent {
        let mut length = 0.0;
        let mut prev = self.tx;
        for p in points.iter().chain(std::iter::once(&self.rx)) {
            length += (p - prev).norm();
            prev = *p;
        }
        self.finish(kind, walls, points, coefficient, length)
    }

    fn finish(
        &self,
        kind: PathKind,
        walls: Vec<Wall>,
        points: Vec<Point3>,
        coefficient: Complex64,
        length: f64,
    ) -> PathComponent {
        let spread = self.wavelength / (4.0 * PI * length);
        let phase = Complex64::from_polar(1.0, -2.0 * PI * length / self.wavelength);
        let gain = coefficient * spread * phase;
        let last = points.last().copied().unwrap_or(self.tx);
        let (aaoa, eaoa) = arrival_angles(&(last - self.rx));
        PathComponent {
            kind,
            order: points.len(),
            gain,
            delay: length / SPEED_OF_LIGHT,
            aaoa,
            eaoa,
            power_dbm: self.scene.tx_power_dbm + 20.0 * gain.norm().log10(),
            walls,
            interactions: points.iter().map(|p| [p.x, p.y, p.z]).collect(),
        }
    }

    fn reflect_recursive(
        &self,
        remaining: usize,
        walls: &mut Vec<Wall>,
        images: &mut Vec<Point3>,
        out: &mut Vec<PathComponent>,
    ) {
        if remaining == 0 {
            return;
        }
        for wall in Wall::ALL {
            if walls.last() == Some(&wall) {
                continue;
            }
            let image = wall.mirror(self.scene, images.last().unwrap());
            walls.push(wall);
            images.push(image);
            if let Some(points) = self.unfold(walls, images) {
                self.emit_reflection(walls, points, images.last().unwrap(), out);
            }
            self.reflect_recursive(remaining - 1, walls, images, out);
            walls.pop();
            images.pop();
        }
    }

    /// Back-traces the image chain from rx, returning the reflection points
    /// in propagation order, or `None` if the chain is not realizable.
    fn unfold(&self, walls: &[Wall], images: &[Point3]) -> Option<Vec<Point3>> {
        let lo = self.scene.min_corner();
        let hi = self.scene.max_corner();
        let mut target = self.rx;
        let mut points = Vec::with_capacity(walls.len());
        for i in (0..walls.len()).rev() {
            let wall = walls[i];
            let image = images[i + 1];
            let a = wall.axis();
            let denom = target[a] - image[a];
            if denom.abs() < 1e-12 {
                return None;
            }
            let t = (wall.offset(self.scene) - image[a]) / denom;
            if !(t > 0.0 && t < 1.0) {
                return None;
            }
            let mut p = image + (target - image) * t;
            p[a] = wall.offset(self.scene);
            for k in 0..3 {
                if k != a && (p[k] < lo[k] - 1e-9 || p[k] > hi[k] + 1e-9) {
                    return None;
                }
            }
            points.push(p);
            target = p;
        }
        points.reverse();
        let mut prev = self.tx;
        for p in points.iter().chain(std::iter::once(&self.rx)) {
            if (p - prev).norm() < 1e-12 || self.scene.is_blocked(&prev, p) {
                return None;
            }
            prev = *p;
        }
        Some(points)
    }

    fn reflection_coefficient(&self, walls: &[Wall], points: &[Point3]) -> Complex64 {
        let mut coef = Complex64::new(1.0, 0.0);
        let mut prev = self.tx;
        for (w, p) in walls.iter().zip(points) {
            let d = p - prev;
            let cos_theta = (d[w.axis()].abs() / d.norm()).clamp(0.0, 1.0);
            coef *= fresnel_te(self.scene.wall_permittivity, cos_theta);
            prev = *p;
        }
        coef
    }

    fn emit_reflection(
        &self,
        walls: &[Wall],
        points: Vec<Point3>,
        last_image: &Point3,
        out: &mut Vec<PathComponent>,
    ) {
        let length = (last_image - self.rx).norm();
        let coef = self.reflection_coefficient(walls, &points);
        let s = self.scene.scattering_coefficient;
        if walls.len() == 1 && s > 0.0 && self.scene.scatter_children > 0 {
            self.scatter(walls[0], &points[0], coef, out);
            out.push(self.finish(
                PathKind::Reflection,
                walls.to_vec(),
                points,
                coef * (1.0 - s).sqrt(),
                length,
            ));
        } else {
            out.push(self.finish(PathKind::Reflection, walls.to_vec(), points, coef, length));
        }
    }

    /// Diffuse children around a first-order specular point. They reuse the
    /// parent's reflection coefficient so the model stays reciprocal.
    fn scatter(
        &self,
        wall: Wall,
        specular: &Point3,
        coef: Complex64,
        out: &mut Vec<PathComponent>,
    ) {
        let n = self.scene.scatter_children;
        let share = (self.scene.scattering_coefficient / n as f64).sqrt();
        let a = wall.axis();
        let (u, v) = match a {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let lo = self.scene.min_corner();
        let hi = self.scene.max_corner();
        for j in 0..n {
            let phi = 2.0 * PI * j as f64 / n as f64;
            let mut q = *specular;
            q[u] = (q[u] + self.scene.scatter_radius * phi.cos()).clamp(lo[u], hi[u]);
            q[v] = (q[v] + self.scene.scatter_radius * phi.sin()).clamp(lo[v], hi[v]);
            if self.scene.is_blocked(&self.tx, &q) || self.scene.is_blocked(&q, &self.rx) {
                continue;
            }
            out.push(self.make_path(PathKind::Scattering, vec![wall], vec![q], coef * share));
        }
    }

    fn diffract(&self, part: &Partition, out: &mut Vec<PathComponent>) {
        let lo = self.scene.min_corner();
        let hi = self.scene.max_corner();
        let direct = (self.rx - self.tx).norm();
        for (ex, ey) in part.edges() {
            // edges flush with a room wall are not free edges
            let on_wall = (ex - lo.x).abs() < 1e-9
                || (ex - hi.x).abs() < 1e-9
                || (ey - lo.y).abs() < 1e-9
                || (ey - hi.y).abs() < 1e-9;
            if on_wall {
                continue;
            }
            let d1h = (self.tx.x - ex).hypot(self.tx.y - ey);
            let d2h = (self.rx.x - ex).hypot(self.rx.y - ey);
            if d1h + d2h < 1e-12 {
                continue;
            }
            let z = (self.tx.z + (self.rx.z - self.tx.z) * d1h / (d1h + d2h))
                .clamp(part.z[0], part.z[1]);
            let edge = Point3::new(ex, ey, z);
            if self.scene.is_blocked(&self.tx, &edge) || self.scene.is_blocked(&edge, &self.rx) {
                continue;
            }
            let d1 = (edge - self.tx).norm();
            let d2 = (self.rx - edge).norm();
            let excess = (d1 + d2 - direct).max(0.0);
            let v = 2.0 * (excess / self.wavelength).sqrt();
            let atten = 10f64.powf(-knife_edge_loss_db(v) / 20.0);
            out.push(self.make_path(
                PathKind::Diffraction,
                vec![],
                vec![edge],
                Complex64::new(atten, 0.0),
            ));
        }
    }
}
