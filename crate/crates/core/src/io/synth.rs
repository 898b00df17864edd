//! Synthetic registration pairs with a known smooth deformation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{RegError, Result};
use crate::fields::jacobian::displacement_gradient;
use crate::fields::{interpolate_vector, warp_volume, DisplacementField};
use crate::grids::{minmax_normalize, Dims, LandmarkSet, Volume};

/// Bound on every partial derivative of the true field; keeps `det(I + grad u) > 0`.
pub const MAX_FIELD_GRADIENT: f64 = 1.0 / 3.0;
const MAX_ATTEMPTS: usize = 64;
const FIELD_BUMPS: usize = 4;
const LANDMARK_MARGIN: f64 = 0.15;

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub dims: [usize; 3],
    pub max_disp: f64,
    pub landmarks: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SynthPair {
    /// Base volume; also the fixed image.
    pub fixed: Volume,
    /// `fixed` warped by `true_field`.
    pub moving: Volume,
    pub true_field: DisplacementField,
    pub fixed_landmarks: LandmarkSet,
    pub moving_landmarks: LandmarkSet,
}

fn gaussian_sum(dims: Dims, centers: &[([f64; 3], f64, f64)]) -> Vec<f64> {
    (0..dims.len())
        .map(|i| {
            let [x, y, z] = dims.coords(i).map(|c| c as f64);
            centers
                .iter()
                .map(|&(c, s, a)| {
                    let d2 = (x - c[0]).powi(2) + (y - c[1]).powi(2) + (z - c[2]).powi(2);
                    a * (-d2 / (2.0 * s * s)).exp()
                })
                .sum()
        })
        .collect()
}

fn random_point(rng: &mut ChaCha8Rng, dims: Dims, margin: f64) -> [f64; 3] {
    let mut p = [0.0; 3];
    for (a, slot) in p.iter_mut().enumerate() {
        let hi = (dims.0[a] - 1) as f64;
        let m = margin * hi;
        *slot = rng.random_range(m..=hi - m);
    }
    p
}

/// Smooth random texture: min-max normalized sum of Gaussian blobs.
pub fn blob_volume(dims: Dims, rng: &mut ChaCha8Rng) -> Volume {
    let count = (dims.len() / 300).max(8);
    let blobs: Vec<_> = (0..count)
        .map(|_| {
            let c = random_point(rng, dims, 0.0);
            let s = rng.random_range(1.5..4.0);
            let a = rng.random_range(-1.0..1.0);
            (c, s, a)
        })
        .collect();
    minmax_normalize(&Volume::from_vec(dims, gaussian_sum(dims, &blobs)))
}

fn max_partial(f: &DisplacementField) -> f64 {
    (0..f.dims().len())
        .map(|i| {
            displacement_gradient(f, i)
                .iter()
                .flatten()
                .fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .fold(0.0, f64::max)
}

fn bump_field(dims: Dims, max_disp: f64, rng: &mut ChaCha8Rng) -> DisplacementField {
    let sigma = 0.3 * dims.0.iter().copied().min().unwrap_or(1) as f64;
    let bumps: Vec<([f64; 3], [f64; 3])> = (0..FIELD_BUMPS)
        .map(|_| {
            let c = random_point(rng, dims, 0.1);
            let a = [(); 3].map(|_| rng.random_range(-1.0..1.0));
            (c, a)
        })
        .collect();
    let comps: Vec<Vec<f64>> = (0..3)
        .map(|k| {
            let centers: Vec<_> = bumps.iter().map(|(c, a)| (*c, sigma, a[k])).collect();
            gaussian_sum(dims, &centers)
        })
        .collect();
    let f = DisplacementField::from_fn(dims, |x, y, z| {
        let i = dims.index(x, y, z);
        [comps[0][i], comps[1][i], comps[2][i]]
    });
    let peak = f.max_norm();
    if peak > 0.0 {
        f.scaled(max_disp / peak)
    } else {
        f
    }
}

/// Generate a pair where `moving = warp(fixed, u)` for a smooth `u` with `max |u| = max_disp`.
///
/// Landmarks: random interior points `q` are the moving landmarks and `q + u(q)` the fixed
/// ones, so pushing fixed landmarks through the ideal registration field lands on them.
pub fn synth_pair(spec: &SynthSpec) -> Result<SynthPair> {
    let dims = Dims(spec.dims);
    if dims.0.iter().any(|&n| n < 2) {
        return Err(RegError::InvalidVolume(format!(
            "synthetic dims must be at least 2 per axis, got {:?}",
            spec.dims
        )));
    }
    if !(spec.max_disp.is_finite() && spec.max_disp >= 0.0) {
        return Err(RegError::InvalidConfig(format!(
            "max displacement must be >= 0, got {}",
            spec.max_disp
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let fixed = blob_volume(dims, &mut rng);

    let mut field = None;
    for _ in 0..MAX_ATTEMPTS {
        let candidate = if spec.max_disp == 0.0 {
            DisplacementField::zeros(dims)
        } else {
            bump_field(dims, spec.max_disp, &mut rng)
        };
        if max_partial(&candidate) < MAX_FIELD_GRADIENT {
            field = Some(candidate);
            break;
        }
    }
    let true_field = field.ok_or_else(|| {
        RegError::Infeasible(format!(
            "no field with max displacement {} keeps every partial derivative below 1/3 on {:?}",
            spec.max_disp, spec.dims
        ))
    })?;

    let moving = warp_volume(&fixed, &true_field)?;
    let q: Vec<[f64; 3]> = (0..spec.landmarks)
        .map(|_| random_point(&mut rng, dims, LANDMARK_MARGIN))
        .collect();
    let moving_landmarks = LandmarkSet::from_coords(q.iter().copied());
    let fixed_landmarks = LandmarkSet::from_coords(q.iter().map(|&p| {
        let u = interpolate_vector(&true_field, p);
        [p[0] + u[0], p[1] + u[1], p[2] + u[2]]
    }));
    Ok(SynthPair {
        fixed,
        moving,
        true_field,
        fixed_landmarks,
        moving_landmarks,
    })
}
