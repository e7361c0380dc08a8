//! Synthetic event streams and dataset assembly.
//!
//! A [`FeatureModel`] stands in for an external feature extractor: each
//! class owns a centroid in the integer feature space [1, 255]^128 and
//! events are sampled around it with spherical noise. Streams are labeled
//! by the same repeat-within-window rule the rule base encodes, training
//! labels optionally pass through uniform label noise, and every split is a
//! pure function of its seeds.

pub mod files;

pub use files::{read_split, write_splits, SplitMeta};

use crate::engine::label_oracle;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

pub const FEATURE_DIM: usize = 128;
pub const NUM_CLASSES: usize = 10;
/// Default spread of the synthetic features, calibrated so a supervised
/// probe reaches well above 95% simple-event accuracy.
pub const DEFAULT_SIGMA: f64 = 25.0;
/// Seed of the shipped feature model; centroids are drawn once from it.
pub const FEATURE_MODEL_SEED: u64 = 0xFEA7;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed dataset: {message}")]
    Format { message: String },
    #[error(
        "cannot balance: class {class} has {available} points, {required} required \
         (generate a larger stream)"
    )]
    Balance {
        class: String,
        available: usize,
        required: usize,
    },
    #[error("stream carries no ground-truth classes")]
    MissingGroundTruth,
}

/// One timestamped feature vector; `true_class` is present in validation
/// and test data and withheld from emitted training features.
#[derive(Clone, Debug, PartialEq)]
pub struct SimpleEvent {
    pub timestamp: i64,
    pub feature: Vec<u8>,
    pub true_class: Option<u8>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventStream {
    pub events: Vec<SimpleEvent>,
}

impl EventStream {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Ground-truth classes per timestamp, when every event carries one.
    pub fn classes(&self) -> Option<Vec<u8>> {
        self.events.iter().map(|e| e.true_class).collect()
    }
}

/// Per-class centroids plus the sampling spread.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureModel {
    pub centroids: Vec<Vec<f64>>,
    pub sigma: f64,
}

impl FeatureModel {
    /// Draws one centroid per class uniformly from [1, 255]^dim.
    pub fn seeded(num_classes: usize, dim: usize, sigma: f64, seed: u64) -> Self {
        assert!(sigma > 0.0, "sigma must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centroids = (0..num_classes)
            .map(|_| (0..dim).map(|_| rng.random_range(1.0..=255.0)).collect())
            .collect();
        FeatureModel { centroids, sigma }
    }

    /// The shipped ten-class model.
    pub fn shipped(sigma: f64) -> Self {
        FeatureModel::seeded(NUM_CLASSES, FEATURE_DIM, sigma, FEATURE_MODEL_SEED)
    }

    pub fn dim(&self) -> usize {
        self.centroids[0].len()
    }

    fn sample(&self, class: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
        let normal = Normal::new(0.0, self.sigma).expect("sigma validated");
        self.centroids[class]
            .iter()
            .map(|&c| (c + normal.sample(rng)).round().clamp(1.0, 255.0) as u8)
            .collect()
    }
}

/// Complex-event labels per timestamp; `None` is the null class.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CeLabeling {
    pub labels: Vec<Option<u8>>,
}

impl CeLabeling {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Shuffles `class_counts[c]` events of each class into a stream and samples
/// their features from `model`. Deterministic in `seed`.
pub fn synth_stream(class_counts: &[usize], model: &FeatureModel, seed: u64) -> EventStream {
    let mut order: Vec<u8> = class_counts
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c as u8, n))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let events = order
        .into_iter()
        .enumerate()
        .map(|(t, class)| SimpleEvent {
            timestamp: t as i64,
            feature: model.sample(class as usize, &mut rng),
            true_class: Some(class),
        })
        .collect();
    EventStream { events }
}

/// Ground-truth complex-event labeling of a stream: class N at timestamp t
/// when the class at t re-occurs at some p with t - window < p < t.
/// Implemented as a last-occurrence scan; agrees pointwise with
/// [`label_oracle`].
pub fn label_ce(stream: &EventStream, window: u32) -> Result<CeLabeling, DataError> {
    let classes = stream.classes().ok_or(DataError::MissingGroundTruth)?;
    let mut last_seen: Vec<Option<usize>> = vec![None; 256];
    let mut labels = Vec::with_capacity(classes.len());
    for (t, &class) in classes.iter().enumerate() {
        let earliest = (t as i64 - window as i64 + 1).max(0) as usize;
        let hit = matches!(last_seen[class as usize], Some(p) if p >= earliest);
        labels.push(if hit { Some(class) } else { None });
        last_seen[class as usize] = Some(t);
    }
    Ok(CeLabeling { labels })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    /// Probability that a labeling event is replaced by a uniformly drawn
    /// complex-event class (the original class may be redrawn).
    pub fraction: f64,
    pub seed: u64,
}

/// Applies uniform label noise to the non-null positions; null positions
/// are never altered. Also returns how many labels were redrawn.
pub fn inject_noise_counted(labeling: &CeLabeling, cfg: &NoiseConfig) -> (CeLabeling, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut replaced = 0;
    let labels = labeling
        .labels
        .iter()
        .map(|label| match label {
            Some(_) if rng.random_range(0.0..1.0) < cfg.fraction => {
                replaced += 1;
                Some(rng.random_range(0..NUM_CLASSES as u8))
            }
            other => *other,
        })
        .collect();
    (CeLabeling { labels }, replaced)
}

pub fn inject_noise(labeling: &CeLabeling, cfg: &NoiseConfig) -> CeLabeling {
    inject_noise_counted(labeling, cfg).0
}

/// One selected training point: a timestamp and its (possibly noisy)
/// complex-event label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabeledPoint {
    pub timestamp: i64,
    pub label: Option<u8>,
}

fn label_name(label: Option<u8>) -> String {
    match label {
        Some(c) => crate::rulelang::stdlib::ce_constant(c as usize),
        None => "null".to_string(),
    }
}

/// Subsamples `total` points balanced over the eleven label classes (ten
/// complex events plus null); per-class counts differ by at most one.
pub fn balance(
    labeling: &CeLabeling,
    total: usize,
    seed: u64,
) -> Result<Vec<LabeledPoint>, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = NUM_CLASSES + 1; // the null class is balanced too
    let mut positions: Vec<Vec<i64>> = vec![Vec::new(); n_classes];
    for (t, label) in labeling.labels.iter().enumerate() {
        let idx = label.map_or(NUM_CLASSES, |c| c as usize);
        positions[idx].push(t as i64);
    }

    // Distribute the remainder over a seeded ordering of the classes.
    let base = total / n_classes;
    let mut bonus_order: Vec<usize> = (0..n_classes).collect();
    bonus_order.shuffle(&mut rng);
    let mut quota = vec![base; n_classes];
    for &c in bonus_order.iter().take(total % n_classes) {
        quota[c] += 1;
    }

    let mut points = Vec::with_capacity(total);
    for (idx, pool) in positions.iter_mut().enumerate() {
        if pool.len() < quota[idx] {
            let label = if idx == NUM_CLASSES {
                None
            } else {
                Some(idx as u8)
            };
            return Err(DataError::Balance {
                class: label_name(label),
                available: pool.len(),
                required: quota[idx],
            });
        }
        pool.shuffle(&mut rng);
        for &t in pool.iter().take(quota[idx]) {
            points.push(LabeledPoint {
                timestamp: t,
                label: labeling.labels[t as usize],
            });
        }
    }
    points.sort_by_key(|p| p.timestamp);
    Ok(points)
}

/// Shape of one generated dataset: stream sizes in an 8:1:1 ratio by
/// default, the training-point budget, the window and the noise level.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitConfig {
    pub window: u32,
    pub train_events: usize,
    pub val_events: usize,
    pub test_events: usize,
    pub train_points: usize,
    pub noise_fraction: f64,
    /// One seed per split stream (train, validation, test).
    pub seeds: [u64; 3],
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            window: 2,
            train_events: 8000,
            val_events: 1000,
            test_events: 1000,
            train_points: 1000,
            noise_fraction: 0.0,
            seeds: [11, 12, 13],
        }
    }
}

/// One split: its stream and its labeled points. Training points are the
/// balanced subsample; validation and test points cover every timestamp
/// with clean ground-truth labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub stream: EventStream,
    pub points: Vec<LabeledPoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Splits {
    pub train: Split,
    pub validation: Split,
    pub test: Split,
    pub config: SplitConfig,
}

fn derive_seed(base: u64, salt: u64) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt
}

fn all_points(labeling: &CeLabeling) -> Vec<LabeledPoint> {
    labeling
        .labels
        .iter()
        .enumerate()
        .map(|(t, &label)| LabeledPoint {
            timestamp: t as i64,
            label,
        })
        .collect()
}

fn even_counts(total: usize) -> Vec<usize> {
    let base = total / NUM_CLASSES;
    let mut counts = vec![base; NUM_CLASSES];
    for item in counts.iter_mut().take(total % NUM_CLASSES) {
        *item += 1;
    }
    counts
}

/// Generates the three splits. Label noise and balancing apply to the
/// training labels only; validation and test keep clean ground truth and
/// per-event true classes.
pub fn make_splits(cfg: &SplitConfig, model: &FeatureModel) -> Result<Splits, DataError> {
    let train_stream = synth_stream(&even_counts(cfg.train_events), model, cfg.seeds[0]);
    let val_stream = synth_stream(&even_counts(cfg.val_events), model, cfg.seeds[1]);
    let test_stream = synth_stream(&even_counts(cfg.test_events), model, cfg.seeds[2]);

    let train_labels = label_ce(&train_stream, cfg.window)?;
    let noisy = inject_noise(
        &train_labels,
        &NoiseConfig {
            fraction: cfg.noise_fraction,
            seed: derive_seed(cfg.seeds[0], 1),
        },
    );
    let train_points = balance(&noisy, cfg.train_points, derive_seed(cfg.seeds[0], 2))?;

    let val_points = all_points(&label_ce(&val_stream, cfg.window)?);
    let test_points = all_points(&label_ce(&test_stream, cfg.window)?);

    Ok(Splits {
        train: Split {
            stream: train_stream,
            points: train_points,
        },
        validation: Split {
            stream: val_stream,
            points: val_points,
        },
        test: Split {
            stream: test_stream,
            points: test_points,
        },
        config: cfg.clone(),
    })
}
