use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result, Scalar, Tensor};

/// Ordered frames captured at a constant rate.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameStream<T = f64> {
    frames: Vec<Tensor<T>>,
    frame_rate: f64,
}

impl<T: Scalar> FrameStream<T> {
    pub fn new(frames: Vec<Tensor<T>>, frame_rate: f64) -> Result<Self> {
        if !(frame_rate > 0.0 && frame_rate.is_finite()) {
            return Err(Error::Input(format!("frame rate {frame_rate} must be positive")));
        }
        if let Some(first) = frames.first() {
            if frames.iter().any(|f| f.shape() != first.shape()) {
                return Err(Error::Input("frames in a stream must share one shape".into()));
            }
        }
        Ok(Self { frames, frame_rate })
    }

    pub fn frames(&self) -> &[Tensor<T>] {
        &self.frames
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Seconds since the first frame.
    pub fn timestamp(&self, index: usize) -> f64 {
        index as f64 / self.frame_rate
    }

    pub fn timestamps(&self) -> Vec<f64> {
        (0..self.frames.len()).map(|i| self.timestamp(i)).collect()
    }
}

/// Per-frame degradation used to synthesize a drifting sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftSpec {
    /// Fraction of the base brightness lost per frame.
    pub brightness_decay_per_frame: f64,
    /// Increase of the additive noise standard deviation per frame.
    pub noise_sigma_ramp_per_frame: f64,
    pub seed: u64,
}

impl DriftSpec {
    pub fn none() -> Self {
        Self {
            brightness_decay_per_frame: 0.0,
            noise_sigma_ramp_per_frame: 0.0,
            seed: 0,
        }
    }
}

/// Frame `k` is `clamp(base * max(0, 1 - k * decay) + k * ramp * z, 0, 1)`, where
/// `z` is one standard normal field drawn per stream. The clutter pattern stays
/// put and only its amplitude grows, so consecutive frames stay similar.
pub fn synth_sequence<T: Scalar>(
    base: &Tensor<T>,
    length: usize,
    frame_rate: f64,
    drift: &DriftSpec,
) -> Result<FrameStream<T>> {
    if length == 0 {
        return Err(Error::Input("sequence length must be at least 1".into()));
    }
    if drift.brightness_decay_per_frame < 0.0 || drift.noise_sigma_ramp_per_frame < 0.0 {
        return Err(Error::Input("drift rates must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(drift.seed);
    let clutter: Vec<f64> = (0..base.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let frames = (0..length)
        .map(|k| {
            let gain = (1.0 - k as f64 * drift.brightness_decay_per_frame).max(0.0);
            let sigma = k as f64 * drift.noise_sigma_ramp_per_frame;
            let values = base
                .values()
                .iter()
                .zip(&clutter)
                .map(|(&v, &z)| T::lit((v.to_f64_lossy() * gain + sigma * z).clamp(0.0, 1.0)))
                .collect();
            Tensor::new(base.shape().to_vec(), values)
        })
        .collect::<Result<Vec<_>>>()?;
    FrameStream::new(frames, frame_rate)
}

/// Keeps every `round(source / target)`-th frame, starting with the first.
pub fn subsample<T: Scalar>(stream: &FrameStream<T>, target_frame_rate: f64) -> Result<FrameStream<T>> {
    if !(target_frame_rate > 0.0) {
        return Err(Error::Input(format!("target frame rate {target_frame_rate} must be positive")));
    }
    if target_frame_rate > stream.frame_rate {
        return Err(Error::Input(format!(
            "cannot raise frame rate from {} to {target_frame_rate}",
            stream.frame_rate
        )));
    }
    let step = (stream.frame_rate / target_frame_rate).round().max(1.0) as usize;
    let frames = stream.frames.iter().step_by(step).cloned().collect();
    FrameStream::new(frames, stream.frame_rate / step as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Tensor {
        Tensor::new(vec![4, 4], (0..16).map(|i| i as f64 / 15.0).collect()).unwrap()
    }

    #[test]
    fn no_drift_repeats_the_base() {
        let s = synth_sequence(&base(), 6, 30.0, &DriftSpec::none()).unwrap();
        assert_eq!(s.len(), 6);
        assert!(s.frames().iter().all(|f| f == &base()));
        assert!((s.timestamp(3) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn full_decay_leaves_only_noise() {
        let length = 20;
        let drift = DriftSpec {
            brightness_decay_per_frame: 1.0 / length as f64,
            noise_sigma_ramp_per_frame: 0.0,
            seed: 1,
        };
        let s = synth_sequence(&base(), length, 30.0, &drift).unwrap();
        let last = s.frames().last().unwrap();
        // gain 1/length on the last frame
        assert!(last.values().iter().all(|&v| v <= 1.0 / length as f64 + 1e-12));
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let drift = DriftSpec {
            brightness_decay_per_frame: 0.01,
            noise_sigma_ramp_per_frame: 0.02,
            seed: 9,
        };
        let a = synth_sequence(&base(), 10, 30.0, &drift).unwrap();
        let b = synth_sequence(&base(), 10, 30.0, &drift).unwrap();
        assert_eq!(a, b);
        assert!(a.frames().iter().all(|f| f.values().iter().all(|v| (0.0..=1.0).contains(v))));
        assert_ne!(a.frames()[9], base());
        assert!(synth_sequence(&base(), 0, 30.0, &drift).is_err());
    }

    #[test]
    fn clutter_amplitude_grows_linearly() {
        let flat = Tensor::filled(vec![8, 8], 0.5).unwrap();
        let drift = DriftSpec {
            brightness_decay_per_frame: 0.0,
            noise_sigma_ramp_per_frame: 0.01,
            seed: 4,
        };
        let s = synth_sequence(&flat, 5, 30.0, &drift).unwrap();
        let first = &s.frames()[1];
        for (k, frame) in s.frames().iter().enumerate().skip(2) {
            for (&v, &v1) in frame.values().iter().zip(first.values()) {
                assert!(((v - 0.5) - k as f64 * (v1 - 0.5)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn subsample_examples() {
        let s = synth_sequence(&base(), 30, 30.0, &DriftSpec::none()).unwrap();
        assert_eq!(subsample(&s, 30.0).unwrap(), s);

        let drift = DriftSpec {
            brightness_decay_per_frame: 0.03,
            ..DriftSpec::none()
        };
        let s = synth_sequence(&base(), 30, 30.0, &drift).unwrap();
        let ten = subsample(&s, 10.0).unwrap();
        assert_eq!(ten.len(), 10);
        assert_eq!(ten.frame_rate(), 10.0);
        for (i, f) in ten.frames().iter().enumerate() {
            assert_eq!(f, &s.frames()[3 * i]);
        }
        assert!(matches!(subsample(&s, 60.0), Err(Error::Input(_))));
    }

    #[test]
    fn subsample_length_is_ceiling() {
        for len in 1..40 {
            let s = synth_sequence(&base(), len, 30.0, &DriftSpec::none()).unwrap();
            for (target, step) in [(30.0, 1), (15.0, 2), (10.0, 3), (5.0, 6), (7.0, 4)] {
                assert_eq!(subsample(&s, target).unwrap().len(), len.div_ceil(step));
            }
        }
    }
}
