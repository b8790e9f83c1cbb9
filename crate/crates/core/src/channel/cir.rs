use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::scene::complex_pair;
use super::trace::{PathComponent, PathKind};
use super::ChannelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impulse {
    pub kind: PathKind,
    pub delay: f64,
    #[serde(with = "complex_pair")]
    pub amplitude: Complex64,
}

/// Delay-tagged impulse list. Equal delays are kept as separate impulses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cir {
    pub impulses: Vec<Impulse>,
}

/// Number of impulses of each propagation mechanism.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KindCounts {
    pub los: usize,
    pub reflection: usize,
    pub scattering: usize,
    pub diffraction: usize,
}

impl Cir {
    pub fn counts(&self) -> KindCounts {
        let mut c = KindCounts::default();
        for i in &self.impulses {
            match i.kind {
                PathKind::Los => c.los += 1,
                PathKind::Reflection => c.reflection += 1,
                PathKind::Scattering => c.scattering += 1,
                PathKind::Diffraction => c.diffraction += 1,
            }
        }
        c
    }

    pub fn has_los(&self) -> bool {
        self.impulses.iter().any(|i| i.kind == PathKind::Los)
    }

    /// Frequency response at `freq` Hz (baseband offset).
    pub fn frequency_response(&self, freq: f64) -> Complex64 {
        self.impulses
            .iter()
            .map(|i| {
                i.amplitude
                    * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * freq * i.delay)
            })
            .sum()
    }
}

pub fn assemble_cir(paths: &[PathComponent]) -> Result<Cir, ChannelError> {
    if paths.is_empty() {
        return Err(ChannelError::EmptyChannel);
    }
    Ok(Cir {
        impulses: paths
            .iter()
            .map(|p| Impulse {
                kind: p.kind,
                delay: p.delay,
                amplitude: p.gain,
            })
            .collect(),
    })
}
