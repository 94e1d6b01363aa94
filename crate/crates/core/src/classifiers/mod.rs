//! Binary pair classifiers over (distance, effort angle) and construction of
//! the relation matrix from their predictions.
//!
//! All kinds share the same pipeline: features are z-scored with training-set
//! statistics stored in the model, the kind-specific scorer produces a
//! probability-like score in `[0, 1]`, and the label is the score thresholded
//! at 0.5.

mod knn;
mod logistic;
mod trees;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{effort_angle, distance, PairSample};
use crate::model::{check_frame, Frame, RelationMatrix};

pub use knn::KnnModel;
pub use logistic::{log_loss, log_loss_gradient, LogisticModel};
pub use trees::{Forest, Tree};

pub const MODEL_FORMAT: &str = "reform-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    WeightedKnn,
    BaggedTrees,
    LogisticRegression,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::WeightedKnn,
        ClassifierKind::BaggedTrees,
        ClassifierKind::LogisticRegression,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::WeightedKnn => "weighted_knn",
            ClassifierKind::BaggedTrees => "bagged_trees",
            ClassifierKind::LogisticRegression => "logistic_regression",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted_knn" | "knn" => Ok(ClassifierKind::WeightedKnn),
            "bagged_trees" | "trees" => Ok(ClassifierKind::BaggedTrees),
            "logistic_regression" | "logreg" => Ok(ClassifierKind::LogisticRegression),
            other => Err(Error::InvalidParameter(format!("unknown classifier kind {other:?}"))),
        }
    }
}

/// Training settings for every kind. Only the fields relevant to the chosen
/// kind are read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Neighbors consulted by weighted KNN.
    pub k: usize,
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Draw a bootstrap sample per tree; when false each tree sees the full set.
    pub bootstrap: bool,
    pub l2: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub gradient_tolerance: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            k: 10,
            n_trees: 30,
            max_depth: Some(12),
            min_leaf: 5,
            bootstrap: true,
            l2: 1e-4,
            learning_rate: 0.1,
            max_epochs: 2000,
            gradient_tolerance: 1e-8,
        }
    }
}

impl Hyperparams {
    fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.n_trees == 0 {
            return bad("n_trees must be at least 1");
        }
        if self.min_leaf == 0 {
            return bad("min_leaf must be at least 1");
        }
        if self.max_depth == Some(0) {
            return bad("max_depth must be at least 1");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be a finite non-negative number");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.gradient_tolerance >= 0.0) {
            return bad("gradient_tolerance must be non-negative");
        }
        Ok(())
    }
}

/// Per-feature z-score statistics learned at training time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub mean: [f64; 2],
    pub std: [f64; 2],
}

const FEATURE_NAMES: [&str; 2] = ["distance", "effort_angle"];

impl FeatureScaling {
    pub fn fit(points: &[[f64; 2]]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("training samples"));
        }
        let n = points.len() as f64;
        let mut mean = [0.0; 2];
        let mut std = [0.0; 2];
        for f in 0..2 {
            mean[f] = points.iter().map(|p| p[f]).sum::<f64>() / n;
            let var = points.iter().map(|p| (p[f] - mean[f]).powi(2)).sum::<f64>() / n;
            std[f] = var.sqrt();
            if !(std[f] > 0.0) {
                return Err(Error::DegenerateFeature(FEATURE_NAMES[f]));
            }
        }
        Ok(FeatureScaling { mean, std })
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        [
            (x[0] - self.mean[0]) / self.std[0],
            (x[1] - self.mean[1]) / self.std[1],
        ]
    }
}

/// Kind-specific learned state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum ModelParams {
    WeightedKnn(KnnModel),
    BaggedTrees(Forest),
    LogisticRegression(LogisticModel),
}

impl ModelParams {
    fn score(&self, z: [f64; 2]) -> f64 {
        match self {
            ModelParams::WeightedKnn(m) => m.score(z),
            ModelParams::BaggedTrees(m) => m.score(z),
            ModelParams::LogisticRegression(m) => m.score(z),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            ModelParams::WeightedKnn(_) => ClassifierKind::WeightedKnn,
            ModelParams::BaggedTrees(_) => ClassifierKind::BaggedTrees,
            ModelParams::LogisticRegression(_) => ClassifierKind::LogisticRegression,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: u8,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    pub version: u32,
    pub hyperparams: Hyperparams,
    pub scaling: FeatureScaling,
    pub seed: u64,
    #[serde(flatten)]
    pub params: ModelParams,
}

impl TrainedModel {
    /// Wraps hand-built parameters, e.g. a logistic model with fixed weights.
    pub fn from_parts(params: ModelParams, scaling: FeatureScaling, hyperparams: Hyperparams, seed: u64) -> Self {
        TrainedModel {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            hyperparams,
            scaling,
            seed,
            params,
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.params.kind()
    }

    pub fn predict(&self, distance: f64, effort_angle: f64) -> Result<Prediction> {
        for (what, value) in [("distance", distance), ("effort_angle", effort_angle)] {
            if !value.is_finite() {
                return Err(Error::NonFinite { what, value });
            }
        }
        let score = self.params.score(self.scaling.apply([distance, effort_angle]));
        let label = match self.params {
            // Exact ties between weighted votes go to the negative class.
            ModelParams::WeightedKnn(_) => u8::from(score > 0.5),
            _ => u8::from(score >= 0.5),
        };
        Ok(Prediction { label, score })
    }

    pub fn predict_sample(&self, sample: &PairSample) -> Result<Prediction> {
        self.predict(sample.distance, sample.effort_angle)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut model: TrainedModel = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT {
            return Err(Error::Format(format!("expected format {MODEL_FORMAT:?}, found {:?}", model.format)));
        }
        if model.version != MODEL_VERSION {
            return Err(Error::SchemaVersion {
                found: model.version,
                expected: MODEL_VERSION,
            });
        }
        model.hyperparams.check()?;
        if !model.scaling.std.iter().all(|s| *s > 0.0) {
            return Err(Error::DegenerateFeature("stored scaling"));
        }
        if let ModelParams::WeightedKnn(knn) = &mut model.params {
            knn.reindex();
        }
        Ok(model)
    }
}

/// Extracts features and labels, rejecting unlabeled samples.
fn labeled_points(samples: &[PairSample]) -> Result<(Vec<[f64; 2]>, Vec<u8>)> {
    let mut rows: Vec<([f64; 2], u8)> = Vec::with_capacity(samples.len());
    for s in samples {
        let label = s.label.ok_or_else(|| {
            Error::InvalidParameter(format!("pair {}-{} has no label", s.id_a, s.id_b))
        })?;
        if label > 1 {
            return Err(Error::InvalidParameter(format!("label {label} is not binary")));
        }
        for (what, value) in [("distance", s.distance), ("effort_angle", s.effort_angle)] {
            if !value.is_finite() {
                return Err(Error::NonFinite { what, value });
            }
        }
        rows.push((s.features(), label));
    }
    // Training is independent of the order samples arrive in.
    rows.sort_by(|a, b| {
        a.0[0]
            .total_cmp(&b.0[0])
            .then(a.0[1].total_cmp(&b.0[1]))
            .then(a.1.cmp(&b.1))
    });
    Ok(rows.into_iter().unzip())
}

pub fn train(samples: &[PairSample], kind: ClassifierKind, hyperparams: &Hyperparams, seed: u64) -> Result<TrainedModel> {
    hyperparams.check()?;
    if samples.len() < 2 {
        return Err(Error::Empty("need at least two labeled samples"));
    }
    let (points, labels) = labeled_points(samples)?;
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 {
        return Err(Error::DegenerateLabels(0));
    }
    if positives == labels.len() {
        return Err(Error::DegenerateLabels(1));
    }
    let scaling = FeatureScaling::fit(&points)?;
    let z: Vec<[f64; 2]> = points.iter().map(|p| scaling.apply(*p)).collect();
    let params = match kind {
        ClassifierKind::WeightedKnn => ModelParams::WeightedKnn(KnnModel::fit(z, labels, hyperparams.k)),
        ClassifierKind::BaggedTrees => ModelParams::BaggedTrees(Forest::fit(&z, &labels, hyperparams, seed)),
        ClassifierKind::LogisticRegression => {
            ModelParams::LogisticRegression(LogisticModel::fit(&z, &labels, hyperparams))
        }
    };
    Ok(TrainedModel::from_parts(params, scaling, hyperparams.clone(), seed))
}

/// Fraction of labeled samples whose predicted label matches.
pub fn pairwise_accuracy(model: &TrainedModel, samples: &[PairSample]) -> Result<f64> {
    accuracy_of(samples, |s| Ok(model.predict_sample(s)?.label))
}

pub(crate) fn accuracy_of<F>(samples: &[PairSample], mut predict: F) -> Result<f64>
where
    F: FnMut(&PairSample) -> Result<u8>,
{
    if samples.is_empty() {
        return Err(Error::Empty("samples for accuracy"));
    }
    let mut correct = 0usize;
    for s in samples {
        let truth = s.label.ok_or_else(|| {
            Error::InvalidParameter(format!("pair {}-{} has no label", s.id_a, s.id_b))
        })?;
        if predict(s)? == truth {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

/// Relation matrix for a frame: rows ordered by ascending agent id, entry
/// (i, j) the predicted label for that pair, unit diagonal.
pub fn build_relation_matrix(model: &TrainedModel, frame: &Frame) -> Result<RelationMatrix> {
    check_frame(frame)?;
    let agents = frame.sorted_agents();
    let ids = agents.iter().map(|a| a.id).collect();
    RelationMatrix::from_pairs(ids, |i, j| {
        let (a, b) = (&agents[i], &agents[j]);
        Ok(model.predict(distance(a, b), effort_angle(a, b))?.label == 1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AgentPose;

    fn sample(d: f64, ea: f64, label: u8) -> PairSample {
        PairSample {
            id_a: 1,
            id_b: 2,
            distance: d,
            effort_angle: ea,
            label: Some(label),
        }
    }

    fn two_point_set() -> Vec<PairSample> {
        vec![sample(0.5, 0.2, 1), sample(3.0, 3.0, 0)]
    }

    #[test]
    fn knn_two_point_example() {
        let model = train(&two_point_set(), ClassifierKind::WeightedKnn, &Hyperparams::default(), 0).unwrap();
        assert_eq!(model.predict(0.5, 0.2).unwrap().label, 1);
        assert_eq!(model.predict(3.0, 3.0).unwrap().label, 0);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let all_pos = vec![sample(0.5, 0.2, 1), sample(3.0, 3.0, 1)];
        for kind in ClassifierKind::ALL {
            assert!(matches!(
                train(&all_pos, kind, &Hyperparams::default(), 0),
                Err(Error::DegenerateLabels(1))
            ));
        }
        let flat = vec![sample(1.0, 0.2, 1), sample(1.0, 3.0, 0)];
        assert!(matches!(
            train(&flat, ClassifierKind::BaggedTrees, &Hyperparams::default(), 0),
            Err(Error::DegenerateFeature("distance"))
        ));
        assert!(train(&[sample(1.0, 1.0, 1)], ClassifierKind::WeightedKnn, &Hyperparams::default(), 0).is_err());
    }

    #[test]
    fn zero_weight_logistic_scores_half() {
        let model = TrainedModel::from_parts(
            ModelParams::LogisticRegression(LogisticModel { weights: [0.0; 3] }),
            FeatureScaling { mean: [0.0; 2], std: [1.0; 2] },
            Hyperparams::default(),
            0,
        );
        for (d, ea) in [(0.0, 0.0), (12.0, 6.0), (-3.0, 1.0)] {
            let p = model.predict(d, ea).unwrap();
            assert_eq!(p.score, 0.5);
            assert_eq!(p.label, 1);
        }
    }

    #[test]
    fn predict_rejects_non_finite() {
        let model = train(&two_point_set(), ClassifierKind::LogisticRegression, &Hyperparams::default(), 0).unwrap();
        assert!(model.predict(f64::NAN, 0.0).is_err());
        assert!(model.predict(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn accuracy_examples() {
        let set = vec![sample(0.1, 0.1, 1), sample(5.0, 6.0, 0), sample(0.3, 0.2, 1), sample(4.0, 5.0, 0)];
        // Constant-1 predictor on a balanced set.
        assert_eq!(accuracy_of(&set, |_| Ok(1)).unwrap(), 0.5);
        let hp = Hyperparams { k: 1, ..Hyperparams::default() };
        let model = train(&set, ClassifierKind::WeightedKnn, &hp, 0).unwrap();
        assert_eq!(pairwise_accuracy(&model, &set).unwrap(), 1.0);
        assert!(pairwise_accuracy(&model, &[]).is_err());
    }

    #[test]
    fn training_ignores_sample_order() {
        let mut set: Vec<PairSample> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.37;
                sample(t.sin().abs() * 3.0, (t * 1.3).cos().abs() * 4.0, u8::from(i % 3 == 0))
            })
            .collect();
        for kind in ClassifierKind::ALL {
            let a = train(&set, kind, &Hyperparams::default(), 9).unwrap();
            set.reverse();
            let b = train(&set, kind, &Hyperparams::default(), 9).unwrap();
            assert_eq!(a, b, "{kind}");
        }
    }

    #[test]
    fn relation_matrix_examples() {
        let frame = Frame::new(
            0,
            vec![
                AgentPose::new(3, 10.0, 10.0, 0.0).unwrap(),
                AgentPose::new(1, 0.0, 0.0, 0.0).unwrap(),
                AgentPose::new(2, 1.0, 0.0, std::f64::consts::PI).unwrap(),
            ],
        );
        let set = vec![
            sample(1.0, 0.0, 1),
            sample(0.8, 0.3, 1),
            sample(1.2, 0.1, 1),
            sample(14.0, 2.0, 0),
            sample(13.0, 3.5, 0),
            sample(15.0, 4.0, 0),
        ];
        let model = train(&set, ClassifierKind::WeightedKnn, &Hyperparams { k: 1, ..Default::default() }, 0).unwrap();
        let m = build_relation_matrix(&model, &frame).unwrap();
        assert_eq!(m.ids(), &[1, 2, 3]);
        let expected = [[true, true, false], [true, true, false], [false, false, true]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), expected[i][j], "({i},{j})");
            }
        }

        let single = Frame::new(1, vec![AgentPose::new(5, 0.0, 0.0, 0.0).unwrap()]);
        let m = build_relation_matrix(&model, &single).unwrap();
        assert_eq!(m.len(), 1);
        assert!(m.get(0, 0));

        // Logistic model that says yes to everything.
        let yes = TrainedModel::from_parts(
            ModelParams::LogisticRegression(LogisticModel { weights: [50.0, 0.0, 0.0] }),
            FeatureScaling { mean: [0.0; 2], std: [1.0; 2] },
            Hyperparams::default(),
            0,
        );
        let m = build_relation_matrix(&yes, &frame).unwrap();
        assert!((0..3).all(|i| (0..3).all(|j| m.get(i, j))));
    }

    #[test]
    fn persistence_rejects_foreign_documents() {
        let model = train(&two_point_set(), ClassifierKind::LogisticRegression, &Hyperparams::default(), 0).unwrap();
        let text = model.to_json().unwrap();
        assert_eq!(TrainedModel::from_json(&text).unwrap(), model);
        let wrong_version = text.replace("\"version\": 1", "\"version\": 7");
        assert!(matches!(TrainedModel::from_json(&wrong_version), Err(Error::SchemaVersion { found: 7, .. })));
        let wrong_format = text.replace(MODEL_FORMAT, "something-else");
        assert!(matches!(TrainedModel::from_json(&wrong_format), Err(Error::Format(_))));
    }
}
