use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::Model;
use crate::{Error, Result, Scalar, Tensor};

/// Stream id reserved for the shuffle RNG; dropout masks use small counters.
const SHUFFLE_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub train_dropout_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.2,
            train_dropout_rate: 0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("invalid learning rate {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.train_dropout_rate) {
            return Err(Error::Config(format!(
                "training dropout rate {} outside [0, 1)",
                self.train_dropout_rate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T = f64> {
    pub model: Model<T>,
    /// Mean mini-batch loss of each epoch.
    pub loss_history: Vec<f64>,
}

/// Mini-batch SGD on softmax cross-entropy.
///
/// Deterministic in `config.seed`: the per-epoch shuffle and every dropout
/// mask are drawn from seeded ChaCha streams, and samples are processed in a
/// fixed order on one thread.
pub fn train<T: Scalar>(
    mut model: Model<T>,
    images: &[Tensor<T>],
    labels: &[usize],
    config: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if images.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    if images.len() != labels.len() {
        return Err(Error::Input(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= model.class_count()) {
        return Err(Error::Input(format!(
            "label {bad} outside 0..{}",
            model.class_count()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..images.len()).collect();
    let lr = T::lit(config.learning_rate);
    let dropout = config.train_dropout_rate;
    let mut loss_history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let inputs: Vec<&[T]> = chunk.iter().map(|&i| images[i].values()).collect();
            let targets: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let counter = (epoch * images.len() + b * config.batch_size) as u64;
            let masks = (dropout > 0.0).then_some((dropout, config.seed, counter));
            let (loss, grads) = match model.loss_and_gradient(&inputs, &targets, masks) {
                Err(Error::Numeric(_)) => return Err(Error::Divergence { epoch }),
                other => other?,
            };
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            model.apply_gradients(&grads, lr);
            epoch_loss += loss.to_f64_lossy();
            batches += 1;
        }
        let mean = epoch_loss / batches as f64;
        if !mean.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        loss_history.push(mean);
    }
    Ok(TrainOutcome {
        model,
        loss_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tinynet::{init_model, Architecture};

    /// Two well separated clusters in the plane.
    fn toy_set() -> (Vec<Tensor>, Vec<usize>) {
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let t = i as f64 / 20.0;
            images.push(Tensor::from_vec(vec![1.0 + t, 0.5 - t]).unwrap());
            labels.push(0);
            images.push(Tensor::from_vec(vec![-1.0 - t, -0.5 + t]).unwrap());
            labels.push(1);
        }
        (images, labels)
    }

    fn toy_config() -> TrainConfig {
        TrainConfig {
            epochs: 50,
            batch_size: 4,
            learning_rate: 0.1,
            train_dropout_rate: 0.0,
            seed: 3,
        }
    }

    #[test]
    fn separable_toy_set_reaches_zero_error() {
        let (images, labels) = toy_set();
        let model: Model = init_model(&Architecture::new(vec![2, 2]), 2, 5).unwrap();
        let out = train(model, &images, &labels, &toy_config()).unwrap();
        let errors = images
            .iter()
            .zip(&labels)
            .filter(|(x, &y)| out.model.predict(x).unwrap() != y)
            .count();
        assert_eq!(errors, 0);
        assert_eq!(out.loss_history.len(), 50);
        assert!(out.loss_history.last().unwrap() < &out.loss_history[0]);
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let (images, labels) = toy_set();
        let model: Model = init_model(&Architecture::new(vec![2, 3, 2]), 2, 5).unwrap();
        let config = TrainConfig {
            learning_rate: 0.0,
            epochs: 3,
            ..toy_config()
        };
        let out = train(model.clone(), &images, &labels, &config).unwrap();
        assert_eq!(out.model, model);
        let first = out.loss_history[0];
        assert!(out.loss_history.iter().all(|&l| (l - first).abs() < 1e-12));
    }

    #[test]
    fn same_seed_same_weights() {
        let (images, labels) = toy_set();
        let arch = Architecture::new(vec![2, 8, 2]);
        let config = TrainConfig {
            train_dropout_rate: 0.3,
            epochs: 5,
            ..toy_config()
        };
        let a = train(init_model::<f64>(&arch, 2, 1).unwrap(), &images, &labels, &config).unwrap();
        let b = train(init_model::<f64>(&arch, 2, 1).unwrap(), &images, &labels, &config).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.loss_history, b.loss_history);
    }

    #[test]
    fn empty_set_and_divergence() {
        let model: Model = init_model(&Architecture::new(vec![2, 2]), 2, 5).unwrap();
        assert!(matches!(
            train(model.clone(), &[], &[], &toy_config()),
            Err(Error::Input(_))
        ));

        let (images, labels) = toy_set();
        let huge: Vec<Tensor> = images.iter().map(|x| x.map(|v| v * 1e200)).collect();
        let config = TrainConfig {
            learning_rate: 1e10,
            ..toy_config()
        };
        assert!(matches!(
            train(model, &huge, &labels, &config),
            Err(Error::Divergence { .. })
        ));
    }
}
