//! Grid-transformation embeddings from a small convolutional network, and
//! the scoring function built on them.
//!
//! A grid one-hot encodes into 10 channels and runs through a size-preserving
//! conv stack; per-channel min/max/mean aggregation yields a fixed-length
//! vector for any grid size. A pair embeds as `encode(input) - encode(output)`
//! and a pair-set as the mean over its pairs; the distance between two such
//! embeddings scores how alike two transformations are.

mod io;
mod net;
mod train;

pub use io::{load_model, save_model, WeightsError, WEIGHTS_MAGIC};
pub use net::{
    aggregate, encode_grid_cached, one_hot, Architecture, CnnModel, ConvSpec, EncodeCache, Feat,
};
pub use train::{
    augment_task, batch_loss, classify, evaluate_accuracy, kfold_train, split_dataset,
    synthetic_concept_dataset, train, train_full, ConceptDataset, TrainConfig, TrainError,
    TrainStats, SYNTHETIC_CLASSES,
};

use crate::dsl::{execute, Budget, Program};
use crate::grid::{Grid, GridPair};
use crate::scoring::{ScoreError, ScoringFunction};

/// A transformation embedding: for the standard architecture, exactly 192
/// reals regardless of grid sizes and pair count.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformEmbedding {
    pub values: Vec<f64>,
}

impl TransformEmbedding {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn distance(&self, other: &TransformEmbedding) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

/// Aggregate feature vector of one grid: conv stack then per-channel
/// `[min ‖ max ‖ mean]`.
pub fn encode_grid(model: &CnnModel, grid: &Grid) -> Vec<f64> {
    net::encode_grid(model, grid)
}

/// Embed a transformation: the mean over pairs of
/// `encode(input) - encode(output)`.
pub fn embed_transformation(model: &CnnModel, pairs: &[GridPair]) -> TransformEmbedding {
    assert!(!pairs.is_empty(), "need at least one pair");
    let dim = model.arch.embed_dim();
    let mut values = vec![0.0; dim];
    for (input, output) in pairs {
        let vi = encode_grid(model, input);
        let vo = encode_grid(model, output);
        for k in 0..dim {
            values[k] += vi[k] - vo[k];
        }
    }
    for v in values.iter_mut() {
        *v /= pairs.len() as f64;
    }
    TransformEmbedding { values }
}

/// Ensemble embedding: the mean of each model's transformation embedding.
pub fn kfold_embed(models: &[CnnModel], pairs: &[GridPair]) -> TransformEmbedding {
    assert!(!models.is_empty(), "need at least one model");
    let dim = models[0].arch.embed_dim();
    let mut values = vec![0.0; dim];
    for model in models {
        let e = embed_transformation(model, pairs);
        for k in 0..dim {
            values[k] += e.values[k];
        }
    }
    for v in values.iter_mut() {
        *v /= models.len() as f64;
    }
    TransformEmbedding { values }
}

/// Distance between the demonstrated transformation and the one the program
/// realizes on the demo inputs. Pairs whose execution fails are dropped;
/// when every pair fails the configured ceiling is returned.
pub fn cnn_score(
    model: &CnnModel,
    demos: &[GridPair],
    program: &Program,
    budget: &Budget,
    all_fail_ceiling: f64,
) -> f64 {
    cnn_score_ensemble(std::slice::from_ref(model), demos, program, budget, all_fail_ceiling)
}

pub fn cnn_score_ensemble(
    models: &[CnnModel],
    demos: &[GridPair],
    program: &Program,
    budget: &Budget,
    all_fail_ceiling: f64,
) -> f64 {
    assert!(!demos.is_empty(), "demos must be non-empty");
    let realized: Vec<GridPair> = demos
        .iter()
        .filter_map(|(input, _)| {
            execute(&program.ast, input, budget).ok().map(|out| (input.clone(), out))
        })
        .collect();
    if realized.is_empty() {
        return all_fail_ceiling;
    }
    let target = kfold_embed(models, demos);
    let got = kfold_embed(models, &realized);
    target.distance(&got)
}

/// Scoring adapter over a k-fold model ensemble. Keeps a running maximum of
/// produced scores; a program that fails on every demo scores twice that
/// maximum, so broken programs rank below everything without infinities.
pub struct CnnScorer {
    models: Vec<CnnModel>,
    budget: Budget,
    max_observed: f64,
}

impl CnnScorer {
    pub fn new(models: Vec<CnnModel>) -> Self {
        assert!(!models.is_empty());
        CnnScorer { models, budget: Budget::default(), max_observed: 1.0 }
    }

    pub fn single(model: CnnModel) -> Self {
        Self::new(vec![model])
    }
}

impl ScoringFunction for CnnScorer {
    fn id(&self) -> &str {
        "cnn"
    }

    fn score(&mut self, demos: &[GridPair], program: &Program) -> Result<f64, ScoreError> {
        let ceiling = 2.0 * self.max_observed;
        let s = cnn_score_ensemble(&self.models, demos, program, &self.budget, ceiling);
        if s > self.max_observed && s < ceiling {
            self.max_observed = s;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::Origin;
    use crate::grid::Grid;

    fn grid(rows: &[&[i64]]) -> Grid {
        Grid::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn model() -> CnnModel {
        CnnModel::init(Architecture::standard(), 9)
    }

    fn random_grid(seed: u64, h: usize, w: usize) -> Grid {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let cells = (0..h * w).map(|_| rng.random_range(0..10u8)).collect();
        Grid::from_cells(h, w, cells).unwrap()
    }

    #[test]
    fn identical_pairs_embed_to_zero() {
        let m = model();
        let g = grid(&[&[1, 2], &[3, 4]]);
        let e = embed_transformation(&m, &[(g.clone(), g.clone())]);
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn embedding_dim_independent_of_sizes_and_counts() {
        let m = model();
        for &(h, w) in &[(1usize, 1usize), (5, 7), (30, 30)] {
            for &n in &[1usize, 2, 4] {
                let pairs: Vec<GridPair> = (0..n)
                    .map(|i| (random_grid(i as u64, h, w), random_grid(100 + i as u64, h, w)))
                    .collect();
                assert_eq!(embed_transformation(&m, &pairs).dim(), 192);
            }
        }
    }

    #[test]
    fn pair_order_is_irrelevant() {
        let m = model();
        let p1 = (random_grid(1, 3, 4), random_grid(2, 4, 3));
        let p2 = (random_grid(3, 5, 5), random_grid(4, 5, 5));
        let a = embed_transformation(&m, &[p1.clone(), p2.clone()]);
        let b = embed_transformation(&m, &[p2, p1]);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn kfold_single_model_matches_plain_embedding() {
        let m = model();
        let pairs = vec![(random_grid(1, 3, 3), random_grid(2, 3, 3))];
        let a = embed_transformation(&m, &pairs);
        let b = kfold_embed(std::slice::from_ref(&m), &pairs);
        assert_eq!(a, b);
    }

    #[test]
    fn kfold_identical_models_match_single() {
        let m = model();
        let pairs = vec![(random_grid(1, 3, 3), random_grid(2, 3, 3))];
        let single = embed_transformation(&m, &pairs);
        let five = kfold_embed(&vec![m.clone(); 5], &pairs);
        for (a, b) in single.values.iter().zip(&five.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cnn_score_zero_for_exact_solution() {
        let m = model();
        let input = grid(&[&[1, 2], &[3, 4]]);
        let output = grid(&[&[2, 1], &[4, 3]]);
        let demos = vec![(input, output)];
        let p = Program::parse_new("mirror_h", Origin::Seed, vec![]).unwrap();
        assert_eq!(cnn_score(&m, &demos, &p, &Budget::default(), 10.0), 0.0);
    }

    #[test]
    fn cnn_score_symmetry_between_pair_sets() {
        // score(A->B) computed both directions through the embedding distance.
        let m = model();
        let a = vec![(random_grid(1, 3, 3), random_grid(2, 3, 3))];
        let b = vec![(random_grid(3, 3, 3), random_grid(4, 3, 3))];
        let ea = embed_transformation(&m, &a);
        let eb = embed_transformation(&m, &b);
        assert_eq!(ea.distance(&eb), eb.distance(&ea));
    }

    #[test]
    fn cnn_score_triangle_inequality() {
        let m = model();
        let sets: Vec<Vec<GridPair>> = (0..3)
            .map(|i| vec![(random_grid(10 + i, 4, 4), random_grid(20 + i, 4, 4))])
            .collect();
        let e: Vec<TransformEmbedding> =
            sets.iter().map(|s| embed_transformation(&m, s)).collect();
        let ab = e[0].distance(&e[1]);
        let bc = e[1].distance(&e[2]);
        let ac = e[0].distance(&e[2]);
        assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn all_failures_hit_ceiling() {
        let m = model();
        let demos = vec![(grid(&[&[1]]), grid(&[&[2]]))];
        // crop far outside a 1x1 grid always fails.
        let p = Program::parse_new("crop(5,5,2,2)", Origin::Seed, vec![]).unwrap();
        let mut scorer = CnnScorer::single(m);
        let s = scorer.score(&demos, &p).unwrap();
        assert_eq!(s, 2.0);
        // A scoreable program raises the running maximum; the ceiling follows.
        let q = Program::parse_new("identity", Origin::Seed, vec![]).unwrap();
        let qs = scorer.score(&demos, &q).unwrap();
        let s2 = scorer.score(&demos, &p).unwrap();
        assert_eq!(s2, 2.0 * qs.max(1.0));
    }
}
