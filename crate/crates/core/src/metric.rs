//! Hit-count uncertainty.
//!
//! Each stochastic pass votes for one class per pixel. The votes are pooled
//! into a [`HitVector`] (classes with zero hits are not stored), the majority
//! class serves as pseudo ground truth, and the uncertainty is
//!
//! ```text
//! u = 1 - exp(max_hits / n) / sum_i exp(hits_i / n)
//! ```
//!
//! over the hit classes only, with `n` the number of votes. `u` is 0 when all
//! votes agree, never reaches 1 (its supremum for `k` hit classes is
//! `1 - 1/k`), and depends only on the vote shares, not on `n` itself.

use std::collections::BTreeMap;

use crate::tinynet::{predict_class, softmax};
use crate::{Error, Result, Scalar};

/// Per-class vote counts for one pixel (or one flat sample).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HitVector {
    counts: BTreeMap<usize, u32>,
    total: u32,
}

impl HitVector {
    /// One vote per pass.
    pub fn from_passes(passes: &[usize]) -> Result<Self> {
        if passes.is_empty() {
            return Err(Error::Input("no passes to accumulate".into()));
        }
        let mut counts = BTreeMap::new();
        for &class in passes {
            *counts.entry(class).or_insert(0u32) += 1;
        }
        Ok(Self {
            counts,
            total: passes.len() as u32,
        })
    }

    /// From explicit `(class, hits)` pairs; zero-hit entries are dropped.
    pub fn from_counts(pairs: impl IntoIterator<Item = (usize, u32)>) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for (class, hits) in pairs {
            if hits > 0 {
                *counts.entry(class).or_insert(0) += hits;
            }
        }
        let total = counts.values().sum();
        if total == 0 {
            return Err(Error::Input("hit vector has no hits".into()));
        }
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &BTreeMap<usize, u32> {
        &self.counts
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    /// Number of distinct classes that received at least one vote.
    pub fn hit_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn hits(&self, class: usize) -> u32 {
        self.counts.get(&class).copied().unwrap_or(0)
    }

    /// Every count (and the total) multiplied by `factor`.
    pub fn scaled(&self, factor: u32) -> Self {
        assert!(factor > 0, "scale factor must be positive");
        Self {
            counts: self.counts.iter().map(|(&c, &h)| (c, h * factor)).collect(),
            total: self.total * factor,
        }
    }

    fn add(&mut self, class: usize) {
        *self.counts.entry(class).or_insert(0) += 1;
        self.total += 1;
    }
}

/// Per-pixel class indices produced by one pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassMap {
    height: usize,
    width: usize,
    classes: Vec<usize>,
}

impl ClassMap {
    pub fn new(height: usize, width: usize, classes: Vec<usize>) -> Result<Self> {
        if height == 0 || width == 0 || classes.len() != height * width {
            return Err(Error::Input(format!(
                "class map {height}x{width} cannot hold {} entries",
                classes.len()
            )));
        }
        Ok(Self { height, width, classes })
    }

    /// 1x1 map for a flat classifier.
    pub fn single(class: usize) -> Self {
        Self {
            height: 1,
            width: 1,
            classes: vec![class],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn get(&self, row: usize, col: usize) -> usize {
        self.classes[row * self.width + col]
    }

    pub fn same_dims(&self, other: &ClassMap) -> bool {
        self.height == other.height && self.width == other.width
    }
}

/// Per-pixel uncertainty, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertaintyMap<T = f64> {
    height: usize,
    width: usize,
    values: Vec<T>,
}

impl<T: Scalar> UncertaintyMap<T> {
    pub fn new(height: usize, width: usize, values: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(Error::Input(format!(
                "uncertainty map {height}x{width} cannot hold {} values",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::Input(format!("uncertainty value {v} outside [0, 1]")));
        }
        Ok(Self { height, width, values })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.width + col]
    }
}

/// Votes of several passes for a flat classifier.
pub fn accumulate_hits(passes: &[usize]) -> Result<HitVector> {
    HitVector::from_passes(passes)
}

/// Per-pixel votes over several class maps, row-major.
pub fn accumulate_hit_grid(maps: &[ClassMap]) -> Result<Vec<HitVector>> {
    let first = maps
        .first()
        .ok_or_else(|| Error::Input("no class maps to accumulate".into()))?;
    if let Some(bad) = maps.iter().position(|m| !m.same_dims(first)) {
        return Err(Error::Input(format!(
            "class map {bad} is {}x{}, expected {}x{}",
            maps[bad].height, maps[bad].width, first.height, first.width
        )));
    }
    let mut grid: Vec<HitVector> = first
        .classes
        .iter()
        .map(|&c| HitVector {
            counts: BTreeMap::from([(c, 1)]),
            total: 1,
        })
        .collect();
    for map in &maps[1..] {
        for (hits, &class) in grid.iter_mut().zip(&map.classes) {
            hits.add(class);
        }
    }
    Ok(grid)
}

/// Majority class; the lowest class index wins ties.
pub fn pseudo_ground_truth(hits: &HitVector) -> usize {
    let mut best = (usize::MAX, 0u32);
    // BTreeMap iterates in ascending class order, so strict `>` keeps the lowest index.
    for (&class, &count) in &hits.counts {
        if count > best.1 {
            best = (class, count);
        }
    }
    best.0
}

/// Normalized hit-count uncertainty of a vote distribution, in `[0, 1 - 1/k]`.
pub fn ce_u<T: Scalar>(hits: &HitVector) -> T {
    let n = T::lit(f64::from(hits.total));
    let winner = pseudo_ground_truth(hits);
    let max = hits.counts[&winner];
    // 1 - exp(max/n) / sum exp(h/n) == rest / (1 + rest),
    // rest = sum over the other hit classes of exp((h - max) / n).
    let rest: T = hits
        .counts
        .iter()
        .filter(|(&c, _)| c != winner)
        .map(|(_, &h)| (T::lit(f64::from(h) - f64::from(max)) / n).exp())
        .sum();
    rest / (T::one() + rest)
}

/// One-hot cross-entropy against the model's own prediction: `-log softmax(logits)[argmax]`.
pub fn pseudo_cross_entropy<T: Scalar>(logits: &[T]) -> Result<T> {
    let probabilities = softmax(logits)?;
    let class = predict_class(&probabilities)?;
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    // -log q_c = log(sum exp(z - max)) - (z_c - max), avoiding log(0) on saturated logits.
    let lse: T = logits.iter().map(|&z| (z - max).exp()).sum::<T>().ln();
    Ok((lse - (logits[class] - max)).max(T::zero()))
}

/// Per-pixel [`ce_u`] over several passes.
pub fn pixel_uncertainty_map<T: Scalar>(passes: &[ClassMap]) -> Result<UncertaintyMap<T>> {
    let grid = accumulate_hit_grid(passes)?;
    let first = &passes[0];
    UncertaintyMap::new(first.height, first.width, grid.iter().map(ce_u).collect())
}

/// One-vs-rest uncertainty for each class, as a `1 x class_count` map.
///
/// Entry `c` is [`ce_u`] of the two-way split "voted `c`" / "voted anything
/// else"; classes that got no votes, or all of them, read 0. This is the
/// per-class bar used to render heatmaps for flat classifiers.
pub fn class_uncertainty_bar<T: Scalar>(hits: &HitVector, class_count: usize) -> Result<UncertaintyMap<T>> {
    if let Some((&c, _)) = hits.counts.iter().find(|(&c, _)| c >= class_count) {
        return Err(Error::Input(format!("class {c} outside 0..{class_count}")));
    }
    let values = (0..class_count)
        .map(|c| {
            let h = hits.hits(c);
            HitVector::from_counts([(0, h), (1, hits.total - h)]).map(|split| ce_u(&split))
        })
        .collect::<Result<Vec<T>>>()?;
    UncertaintyMap::new(1, class_count, values)
}

/// Per-pixel majority vote over several passes.
pub fn majority_map(passes: &[ClassMap]) -> Result<ClassMap> {
    let grid = accumulate_hit_grid(passes)?;
    let first = &passes[0];
    ClassMap::new(first.height, first.width, grid.iter().map(pseudo_ground_truth).collect())
}

/// Mean of all pixel uncertainties.
pub fn frame_uncertainty<T: Scalar>(map: &UncertaintyMap<T>) -> T {
    map.values.iter().copied().sum::<T>() / T::lit(map.values.len() as f64)
}
