//! Seeded synthetic series for demos, tests and the bundled dataset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub level: f64,
    /// Added per step.
    pub slope: f64,
    pub period: usize,
    pub amplitude: f64,
    /// AR(1) coefficient of the noise.
    pub phi: f64,
    pub noise_sd: f64,
    pub spike_prob: f64,
    pub spike_size: f64,
    pub missing_prob: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 2400,
            level: 50.0,
            slope: 0.004,
            period: 24,
            amplitude: 6.0,
            phi: 0.5,
            noise_sd: 1.0,
            spike_prob: 0.004,
            spike_size: 12.0,
            missing_prob: 0.01,
            seed: 7,
        }
    }
}

/// Level + linear trend + sinusoidal season + AR(1) noise, with sparse
/// spikes and missing points.
pub fn generate(spec: &SyntheticSpec) -> Vec<Option<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sd.max(0.0)).expect("finite sd");
    let mut ar = 0.0;
    (0..spec.n)
        .map(|t| {
            ar = spec.phi * ar + noise.sample(&mut rng);
            let season = if spec.period > 0 {
                spec.amplitude * (std::f64::consts::TAU * t as f64 / spec.period as f64).sin()
            } else {
                0.0
            };
            let mut v = spec.level + spec.slope * t as f64 + season + ar;
            if rng.gen::<f64>() < spec.spike_prob {
                v += if rng.gen::<bool>() { spec.spike_size } else { -spec.spike_size };
            }
            (rng.gen::<f64>() >= spec.missing_prob).then_some(v)
        })
        .collect()
}

/// Two-column CSV (`t,value`), empty cells for missing points.
pub fn to_csv(values: &[Option<f64>]) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in values.iter().enumerate() {
        match v {
            Some(x) => out.push_str(&format!("{t},{x:.4}\n")),
            None => out.push_str(&format!("{t},\n")),
        }
    }
    out
}

/// The dataset shipped in `data/synthetic.csv`.
pub fn bundled() -> Vec<Option<f64>> {
    generate(&SyntheticSpec::default())
}
