use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ChannelError;

pub type Point3 = Vector3<f64>;

/// Normal direction of an axis-aligned vertical partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionPlane {
    /// Partition lies in the plane `x = offset`, spanning along y.
    X,
    /// Partition lies in the plane `y = offset`, spanning along x.
    Y,
}

/// Thin axis-aligned rectangle inside the room. Blocks rays crossing it and
/// diffracts around its free vertical edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub plane: PartitionPlane,
    pub offset: f64,
    /// Extent along the in-plane horizontal axis.
    pub span: [f64; 2],
    /// Vertical extent.
    pub z: [f64; 2],
}

impl Partition {
    pub fn new(plane: PartitionPlane, offset: f64, span: [f64; 2], z: [f64; 2]) -> Self {
        Self {
            plane,
            offset,
            span: [span[0].min(span[1]), span[0].max(span[1])],
            z: [z[0].min(z[1]), z[0].max(z[1])],
        }
    }

    fn normal_axis(&self) -> usize {
        match self.plane {
            PartitionPlane::X => 0,
            PartitionPlane::Y => 1,
        }
    }

    fn span_axis(&self) -> usize {
        1 - self.normal_axis()
    }

    /// True when the open segment `a -> b` passes through the partition.
    /// Segments that only touch the partition plane at an endpoint do not count.
    pub fn blocks(&self, a: &Point3, b: &Point3) -> bool {
        let n = self.normal_axis();
        let da = a[n] - self.offset;
        let db = b[n] - self.offset;
        if da * db >= 0.0 {
            return false;
        }
        let t = da / (da - db);
        let p = a + (b - a) * t;
        let s = p[self.span_axis()];
        s >= self.span[0] && s <= self.span[1] && p[2] >= self.z[0] && p[2] <= self.z[1]
    }

    /// Horizontal position of both vertical edges.
    pub fn edges(&self) -> [(f64, f64); 2] {
        let (u, v) = match self.plane {
            PartitionPlane::X => ((self.offset, self.span[0]), (self.offset, self.span[1])),
            PartitionPlane::Y => ((self.span[0], self.offset), (self.span[1], self.offset)),
        };
        [u, v]
    }
}

/// Rectangular room with optional interior partitions. The floor sits at
/// `z = 0` and the horizontal footprint starts at `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub origin: [f64; 2],
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    #[serde(default)]
    pub interior_partitions: Vec<Partition>,
    #[serde(default = "default_permittivity", with = "complex_pair")]
    pub wall_permittivity: Complex64,
    #[serde(default)]
    pub scattering_coefficient: f64,
    /// Diffuse children spawned per first-order reflection when scattering is on.
    #[serde(default = "default_scatter_children")]
    pub scatter_children: usize,
    /// Offset of the diffuse scattering points from the specular point, meters.
    #[serde(default = "default_scatter_radius")]
    pub scatter_radius: f64,
    #[serde(default = "default_min_power")]
    pub min_detectable_power: f64,
    #[serde(default = "default_carrier")]
    pub carrier_freq: f64,
    #[serde(default)]
    pub tx_power_dbm: f64,
}

fn default_permittivity() -> Complex64 {
    Complex64::new(5.0, -0.3)
}
fn default_scatter_children() -> usize {
    4
}
fn default_scatter_radius() -> f64 {
    0.1
}
fn default_min_power() -> f64 {
    -120.0
}
fn default_carrier() -> f64 {
    60e9
}

impl Scene {
    pub fn new(origin: [f64; 2], width: f64, depth: f64, height: f64) -> Self {
        Self {
            origin,
            width,
            depth,
            height,
            interior_partitions: Vec::new(),
            wall_permittivity: default_permittivity(),
            scattering_coefficient: 0.0,
            scatter_children: default_scatter_children(),
            scatter_radius: default_scatter_radius(),
            min_detectable_power: default_min_power(),
            carrier_freq: default_carrier(),
            tx_power_dbm: 0.0,
        }
    }

    pub fn with_partition(mut self, p: Partition) -> Self {
        self.interior_partitions.push(p);
        self
    }

    pub fn wavelength(&self) -> f64 {
        super::SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn min_corner(&self) -> Point3 {
        Point3::new(self.origin[0], self.origin[1], 0.0)
    }

    pub fn max_corner(&self) -> Point3 {
        Point3::new(
            self.origin[0] + self.width,
            self.origin[1] + self.depth,
            self.height,
        )
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let dims = [self.width, self.depth, self.height];
        if dims.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(ChannelError::InvalidScene(format!(
                "room dimensions must be positive, got {dims:?}"
            )));
        }
        if !(0.0..=1.0).contains(&self.scattering_coefficient) {
            return Err(ChannelError::InvalidScene(format!(
                "scattering coefficient {} outside [0, 1]",
                self.scattering_coefficient
            )));
        }
        if !(self.carrier_freq > 0.0) {
            return Err(ChannelError::InvalidScene(
                "carrier frequency must be positive".into(),
            ));
        }
        let lo = self.min_corner();
        let hi = self.max_corner();
        for (i, p) in self.interior_partitions.iter().enumerate() {
            let n = p.normal_axis();
            let s = p.span_axis();
            let inside = p.offset > lo[n]
                && p.offset < hi[n]
                && p.span[0] >= lo[s]
                && p.span[1] <= hi[s]
                && p.span[0] < p.span[1]
                && p.z[0] >= 0.0
                && p.z[1] <= self.height
                && p.z[0] < p.z[1];
            if !inside {
                return Err(ChannelError::InvalidScene(format!(
                    "partition {i} does not lie inside the room"
                )));
            }
        }
        Ok(())
    }

    /// Strictly inside the room volume.
    pub fn contains(&self, p: &Point3) -> bool {
        let lo = self.min_corner();
        let hi = self.max_corner();
        (0..3).all(|i| p[i] > lo[i] && p[i] < hi[i])
    }

    pub fn is_blocked(&self, a: &Point3, b: &Point3) -> bool {
        self.interior_partitions.iter().any(|p| p.blocks(a, b))
    }
}

/// The six bounding surfaces of the room.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wall {
    XMin,
    XMax,
    YMin,
    YMax,
    Floor,
    Ceiling,
}

impl Wall {
    pub const ALL: [Wall; 6] = [
        Wall::XMin,
        Wall::XMax,
        Wall::YMin,
        Wall::YMax,
        Wall::Floor,
        Wall::Ceiling,
    ];

    pub fn axis(self) -> usize {
        match self {
            Wall::XMin | Wall::XMax => 0,
            Wall::YMin | Wall::YMax => 1,
            Wall::Floor | Wall::Ceiling => 2,
        }
    }

    pub fn offset(self, scene: &Scene) -> f64 {
        match self {
            Wall::XMin => scene.origin[0],
            Wall::XMax => scene.origin[0] + scene.width,
            Wall::YMin => scene.origin[1],
            Wall::YMax => scene.origin[1] + scene.depth,
            Wall::Floor => 0.0,
            Wall::Ceiling => scene.height,
        }
    }

    pub fn mirror(self, scene: &Scene, p: &Point3) -> Point3 {
        let mut q = *p;
        let a = self.axis();
        q[a] = 2.0 * self.offset(scene) - p[a];
        q
    }
}

pub(crate) mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}
