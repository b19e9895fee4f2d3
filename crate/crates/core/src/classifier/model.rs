//! Baseline two-head model: one L2-regularized logistic regression per head
//! over hashed n-gram features, trained by SGD.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{featurize, SparseVector};
use super::labels::{Head, LabeledExample, Prediction};
use super::thresholds::Thresholds;
use super::ClassifierError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub folds: usize,
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub hash_dims: usize,
    pub rng_seed: u64,
    /// Loss weight of positive examples; `None` means 1.
    pub positive_weight: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            folds: 5,
            learning_rate: 0.5,
            l2_penalty: 1e-4,
            hash_dims: 1 << 18,
            rng_seed: 42,
            positive_weight: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |msg: String| Err(ClassifierError::Config(msg));
        if self.epochs < 1 {
            return bad("epochs must be at least 1".into());
        }
        if self.folds < 2 {
            return bad("folds must be at least 2".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return bad(format!("l2_penalty {} must be non-negative", self.l2_penalty));
        }
        if self.learning_rate * self.l2_penalty >= 1.0 {
            return bad("learning_rate * l2_penalty must be below 1".into());
        }
        if self.hash_dims < 2 || !self.hash_dims.is_power_of_two() || self.hash_dims > u32::MAX as usize {
            return bad(format!("hash_dims {} must be a power of two >= 2", self.hash_dims));
        }
        if let Some(w) = self.positive_weight {
            if !(w > 0.0 && w.is_finite()) {
                return bad(format!("positive_weight {w} must be positive"));
            }
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(x)) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Weighted logistic loss with an L2 penalty on the weights (not the bias):
///
/// `L(w, b) = mean_i c_i * log(1 + exp(-y_i (w·x_i + b))) + l2/2 * |w|^2`
///
/// with `y_i` in {-1, +1} and `c_i` the positive weight for positives, 1
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticObjective {
    pub l2_penalty: f64,
    pub positive_weight: f64,
}

impl LogisticObjective {
    fn class_weight(&self, label: bool) -> f64 {
        if label {
            self.positive_weight
        } else {
            1.0
        }
    }

    /// Derivative of one example's data term with respect to its margin `z`.
    pub fn dloss_dmargin(&self, z: f64, label: bool) -> f64 {
        let y = if label { 1.0 } else { -1.0 };
        -y * self.class_weight(label) * sigmoid(-y * z)
    }

    pub fn example_loss(&self, z: f64, label: bool) -> f64 {
        let y = if label { 1.0 } else { -1.0 };
        self.class_weight(label) * softplus(-y * z)
    }

    pub fn loss(&self, weights: &[f64], bias: f64, data: &[(SparseVector, bool)]) -> f64 {
        let n = data.len().max(1) as f64;
        let data_term: f64 = data
            .iter()
            .map(|(x, y)| self.example_loss(x.dot(weights) + bias, *y))
            .sum::<f64>()
            / n;
        data_term + 0.5 * self.l2_penalty * weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Full-batch gradient `(dL/dw, dL/db)`.
    pub fn gradient(
        &self,
        weights: &[f64],
        bias: f64,
        data: &[(SparseVector, bool)],
    ) -> (Vec<f64>, f64) {
        let n = data.len().max(1) as f64;
        let mut grad: Vec<f64> = weights.iter().map(|w| self.l2_penalty * w).collect();
        let mut grad_bias = 0.0;
        for (x, y) in data {
            let g = self.dloss_dmargin(x.dot(weights) + bias, *y) / n;
            for (i, v) in x.iter() {
                grad[i] += g * v;
            }
            grad_bias += g;
        }
        (grad, grad_bias)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadWeights {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl HeadWeights {
    fn zeros(dims: usize) -> Self {
        Self {
            weights: vec![0.0; dims],
            bias: 0.0,
        }
    }

    pub fn score(&self, x: &SparseVector) -> f64 {
        sigmoid(x.dot(&self.weights) + self.bias)
    }
}

/// SGD over one head with the weight vector kept as `scale * v`, so the L2
/// shrink is O(1) per step.
struct SgdHead {
    v: Vec<f64>,
    scale: f64,
    bias: f64,
}

impl SgdHead {
    fn new(dims: usize) -> Self {
        Self {
            v: vec![0.0; dims],
            scale: 1.0,
            bias: 0.0,
        }
    }

    fn margin(&self, x: &SparseVector) -> f64 {
        self.scale * x.dot(&self.v) + self.bias
    }

    fn step(&mut self, x: &SparseVector, label: bool, lr: f64, objective: &LogisticObjective) {
        let g = objective.dloss_dmargin(self.margin(x), label);
        self.scale *= 1.0 - lr * objective.l2_penalty;
        if self.scale < 1e-9 {
            for w in &mut self.v {
                *w *= self.scale;
            }
            self.scale = 1.0;
        }
        for (i, value) in x.iter() {
            self.v[i] -= lr * g * value / self.scale;
        }
        self.bias -= lr * g;
    }

    fn finish(self) -> HeadWeights {
        let scale = self.scale;
        HeadWeights {
            weights: self.v.into_iter().map(|w| w * scale).collect(),
            bias: self.bias,
        }
    }
}

/// Prediction backend: the built-in linear model or an external service.
pub trait Scorer {
    fn predict_batch(&self, texts: &[&str]) -> Result<Vec<Prediction>, ClassifierError>;

    fn predict_one(&self, text: &str) -> Result<Prediction, ClassifierError> {
        self.predict_batch(&[text])?
            .pop()
            .ok_or(ClassifierError::ArityMismatch { sent: 1, received: 0 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub hash_dims: usize,
    pub menacing: HeadWeights,
    pub profiling: HeadWeights,
    pub thresholds: Thresholds,
}

impl LinearModel {
    pub fn head(&self, head: Head) -> &HeadWeights {
        match head {
            Head::Menacing => &self.menacing,
            Head::Profiling => &self.profiling,
        }
    }

    pub fn predict(&self, text: &str) -> Prediction {
        let x = featurize(text, self.hash_dims);
        Prediction {
            p_menacing: self.menacing.score(&x),
            p_profiling: self.profiling.score(&x),
        }
    }
}

impl Scorer for LinearModel {
    fn predict_batch(&self, texts: &[&str]) -> Result<Vec<Prediction>, ClassifierError> {
        Ok(texts.iter().map(|t| self.predict(t)).collect())
    }
}

pub fn predict(model: &LinearModel, text: &str) -> Prediction {
    model.predict(text)
}

/// Trains both heads. Every head needs at least one positive and one
/// negative example.
pub fn train(examples: &[LabeledExample], cfg: &TrainConfig) -> Result<LinearModel, ClassifierError> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    for head in Head::BOTH {
        let positives = examples.iter().filter(|e| e.labels.get(head)).count();
        if positives == 0 || positives == examples.len() {
            return Err(ClassifierError::DegenerateHead(head));
        }
    }
    let objective = LogisticObjective {
        l2_penalty: cfg.l2_penalty,
        positive_weight: cfg.positive_weight.unwrap_or(1.0),
    };
    let features: Vec<SparseVector> = examples
        .iter()
        .map(|e| featurize(&e.text, cfg.hash_dims))
        .collect();
    let mut heads = [SgdHead::new(cfg.hash_dims), SgdHead::new(cfg.hash_dims)];
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            for (head, sgd) in Head::BOTH.iter().zip(heads.iter_mut()) {
                sgd.step(&features[i], examples[i].labels.get(*head), cfg.learning_rate, &objective);
            }
        }
    }
    let [menacing, profiling] = heads;
    Ok(LinearModel {
        hash_dims: cfg.hash_dims,
        menacing: menacing.finish(),
        profiling: profiling.finish(),
        thresholds: Thresholds::default(),
    })
}

// On-disk form: only non-zero weights are stored.

const MODEL_FORMAT: &str = "hashed-ngram-logreg";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct HeadFile {
    bias: f64,
    weights: Vec<(u32, f64)>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    hash_dims: usize,
    menacing: HeadFile,
    profiling: HeadFile,
    thresholds: Thresholds,
}

impl HeadFile {
    fn from_head(h: &HeadWeights) -> Self {
        HeadFile {
            bias: h.bias,
            weights: h
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(i, w)| (i as u32, *w))
                .collect(),
        }
    }

    fn into_head(self, dims: usize) -> Result<HeadWeights, ClassifierError> {
        let mut head = HeadWeights::zeros(dims);
        head.bias = self.bias;
        for (i, w) in self.weights {
            let slot = head
                .weights
                .get_mut(i as usize)
                .ok_or_else(|| ClassifierError::ModelFile(format!("weight index {i} >= hash_dims {dims}")))?;
            *slot = w;
        }
        Ok(head)
    }
}

impl LinearModel {
    pub fn to_json(&self) -> Result<String, ClassifierError> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            hash_dims: self.hash_dims,
            menacing: HeadFile::from_head(&self.menacing),
            profiling: HeadFile::from_head(&self.profiling),
            thresholds: self.thresholds,
        };
        serde_json::to_string(&file).map_err(|e| ClassifierError::ModelFile(e.to_string()))
    }

    pub fn from_json(json: &str) -> Result<Self, ClassifierError> {
        let file: ModelFile =
            serde_json::from_str(json).map_err(|e| ClassifierError::ModelFile(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(ClassifierError::ModelFile(format!(
                "unsupported model {} v{}",
                file.format, file.version
            )));
        }
        if file.hash_dims < 2 {
            return Err(ClassifierError::ModelFile("hash_dims below 2".into()));
        }
        file.thresholds.validate()?;
        Ok(LinearModel {
            hash_dims: file.hash_dims,
            menacing: file.menacing.into_head(file.hash_dims)?,
            profiling: file.profiling.into_head(file.hash_dims)?,
            thresholds: file.thresholds,
        })
    }
}

impl Serialize for LinearModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            hash_dims: self.hash_dims,
            menacing: HeadFile::from_head(&self.menacing),
            profiling: HeadFile::from_head(&self.profiling),
            thresholds: self.thresholds,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LinearModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        LinearModel::from_json(&value.to_string()).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::labels::LabelSet;
    use rand::Rng;

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            hash_dims: 1 << 12,
            ..TrainConfig::default()
        }
    }

    /// 20 reviews; Profiling positives all mention "stalker" or "blackmail",
    /// Menacing positives all mention "nudes".
    pub(crate) fn planted() -> Vec<LabeledExample> {
        let mut out = Vec::new();
        let fillers = ["the app", "this dating app", "support never answers", "every day", "on here"];
        for i in 0..20 {
            let filler = fillers[i % fillers.len()];
            let (text, labels) = match i % 4 {
                0 => (format!("a stalker found me {filler}"), LabelSet::new(false, true)),
                1 => (format!("he tried to blackmail me {filler}"), LabelSet::new(false, true)),
                2 => (format!("someone keeps sending nudes {filler}"), LabelSet::new(true, false)),
                _ => (format!("it crashes and is slow {filler}"), LabelSet::NEITHER),
            };
            out.push(LabeledExample::new(format!("r{i:02}"), text, labels));
        }
        out
    }

    #[test]
    fn separable_planted_keywords() {
        let model = train(&planted(), &small_cfg()).unwrap();
        let stalker = model.predict("there is a stalker here");
        let neutral = model.predict("the login button is broken");
        assert!(stalker.p_profiling > neutral.p_profiling);
        assert!(model.predict("my ex threatened to blackmail me").p_profiling > neutral.p_profiling);
        let nudes = model.predict("random guys send nudes");
        assert!(nudes.p_menacing > neutral.p_menacing);
    }

    #[test]
    fn deterministic_weights() {
        let a = train(&planted(), &small_cfg()).unwrap();
        let b = train(&planted(), &small_cfg()).unwrap();
        assert_eq!(a, b);
        let c = train(&planted(), &TrainConfig { rng_seed: 7, ..small_cfg() }).unwrap();
        assert_ne!(a.menacing.weights, c.menacing.weights);
    }

    #[test]
    fn degenerate_head_is_named() {
        let data: Vec<LabeledExample> = planted()
            .into_iter()
            .map(|mut e| {
                e.labels.menacing = true;
                e
            })
            .collect();
        let err = train(&data, &small_cfg()).unwrap_err();
        assert_eq!(err.to_string(), "degenerate head: menacing");
        assert!(matches!(train(&[], &small_cfg()), Err(ClassifierError::EmptyTrainingSet)));
    }

    #[test]
    fn config_validation() {
        for bad in [
            TrainConfig { epochs: 0, ..small_cfg() },
            TrainConfig { folds: 1, ..small_cfg() },
            TrainConfig { hash_dims: 1000, ..small_cfg() },
            TrainConfig { learning_rate: 0.0, ..small_cfg() },
            TrainConfig { l2_penalty: -1.0, ..small_cfg() },
            TrainConfig { positive_weight: Some(0.0), ..small_cfg() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn empty_text_scores_from_bias() {
        let model = train(&planted(), &small_cfg()).unwrap();
        let p = model.predict("");
        assert_eq!(p.p_menacing, sigmoid(model.menacing.bias));
        assert_eq!(p.p_profiling, sigmoid(model.profiling.bias));
    }

    #[test]
    fn sgd_lazy_scaling_matches_naive_update() {
        let objective = LogisticObjective {
            l2_penalty: 0.05,
            positive_weight: 2.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dims = 16;
        let mut lazy = SgdHead::new(dims);
        let mut naive = HeadWeights::zeros(dims);
        for _ in 0..200 {
            let x = SparseVector::from_pairs(
                (0..3).map(|_| (rng.gen_range(0..dims as u32), rng.gen_range(-1.0..1.0))).collect(),
            );
            let y = rng.gen_bool(0.4);
            let g = objective.dloss_dmargin(x.dot(&naive.weights) + naive.bias, y);
            for w in &mut naive.weights {
                *w *= 1.0 - 0.3 * objective.l2_penalty;
            }
            for (i, v) in x.iter() {
                naive.weights[i] -= 0.3 * g * v;
            }
            naive.bias -= 0.3 * g;
            lazy.step(&x, y, 0.3, &objective);
        }
        let lazy = lazy.finish();
        for (a, b) in lazy.weights.iter().zip(&naive.weights) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((lazy.bias - naive.bias).abs() < 1e-12);
    }

    #[test]
    fn model_file_round_trip() {
        let model = train(&planted(), &small_cfg()).unwrap();
        let json = model.to_json().unwrap();
        let back = LinearModel::from_json(&json).unwrap();
        assert_eq!(back, model);
        let via_serde: LinearModel = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
        assert_eq!(via_serde, model);
        assert!(LinearModel::from_json(&json.replace(MODEL_FORMAT, "other")).is_err());
    }
}
