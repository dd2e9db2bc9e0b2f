//! Air-to-ground uplink channel: UAV/device geometry, large-scale path loss and
//! Rician small-scale fading.
//!
//! The UAV flies at a fixed altitude and every device sits on the ground, so
//! the link distance is the hypotenuse of the horizontal offset and the
//! altitude. Small-scale fading is redrawn independently every interval
//! (block fading). The line-of-sight component uses a fixed zero phase; only
//! `|h|^2` enters the SINR, so the phase has no observable effect.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Horizontal position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position2D {
    pub x: f64,
    pub y: f64,
}

impl Position2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Position2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned rectangle `[0, width] x [0, height]` the UAV may fly over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceArea {
    pub width: f64,
    pub height: f64,
}

impl ServiceArea {
    pub const fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn center(&self) -> Position2D {
        Position2D::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn contains(&self, p: &Position2D) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn clamp(&self, p: Position2D) -> Position2D {
        Position2D::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }

    /// Uniformly random point inside the area.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Position2D {
        Position2D::new(
            rng.random::<f64>() * self.width,
            rng.random::<f64>() * self.height,
        )
    }
}

/// Parameters of the composite channel, all linear scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Power gain at the 1 m reference distance.
    pub eta0: f64,
    /// Path-loss exponent.
    pub theta: f64,
    /// Rician factor (LoS to scattered power ratio). `f64::INFINITY` gives a
    /// deterministic LoS channel.
    pub rice_k: f64,
    /// UAV altitude in meters.
    pub altitude: f64,
}

/// One block-fading draw for one device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRealization {
    pub gain: Complex64,
    pub power_gain: f64,
}

impl ChannelRealization {
    pub fn from_gain(gain: Complex64) -> Self {
        Self {
            gain,
            power_gain: gain.norm_sqr(),
        }
    }
}

/// Slant distance between the UAV (at `altitude`) and a ground device.
pub fn distance(uav_xy: Position2D, device_xy: Position2D, altitude: f64) -> f64 {
    let dx = uav_xy.x - device_xy.x;
    let dy = uav_xy.y - device_xy.y;
    (dx * dx + dy * dy + altitude * altitude).sqrt()
}

/// Large-scale power gain `eta0 * d^-theta`.
pub fn large_scale_gain(d: f64, params: &ChannelParams) -> f64 {
    params.eta0 * d.powf(-params.theta)
}

/// Weights of the LoS and NLoS terms in the Rician mixture.
fn rician_weights(rice_k: f64) -> (f64, f64) {
    if rice_k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((rice_k / (rice_k + 1.0)).sqrt(), (1.0 / (rice_k + 1.0)).sqrt())
    }
}

/// Unit-mean-power Rician fading coefficient.
///
/// The scattered component is circularly-symmetric complex Gaussian with unit
/// variance (`N(0, 1/2)` per real dimension). Two normals are consumed on every
/// call regardless of `rice_k`, which keeps stream consumption independent of
/// the channel configuration.
pub fn rician_sample<R: Rng + ?Sized>(rng: &mut R, rice_k: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let nlos = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
    let los = Complex64::new(1.0, 0.0);
    let (w_los, w_nlos) = rician_weights(rice_k);
    los * w_los + nlos * w_nlos
}

/// Composite channel `sqrt(eta(d)) * rho`.
pub fn channel_gain<R: Rng + ?Sized>(
    d: f64,
    params: &ChannelParams,
    rng: &mut R,
) -> ChannelRealization {
    let rho = rician_sample(rng, params.rice_k);
    ChannelRealization::from_gain(rho * large_scale_gain(d, params).sqrt())
}

/// Convert a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
