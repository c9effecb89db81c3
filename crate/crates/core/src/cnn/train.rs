//! From-scratch training of the transformation-embedding model with a dual
//! loss: cross-entropy on the classifier head plus a triplet-margin
//! contrastive loss on the projection head, optimized by mini-batch SGD with
//! momentum. Deterministic given the seed.

use super::net::{
    encode_backward, encode_grid_cached, linear_backward, linear_forward, Architecture, CnnModel,
    EncodeCache,
};
use crate::dsl::{run_source, Budget};
use crate::grid::{Grid, GridPair, Task, NUM_COLORS};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("label {label} outside 0..{max}")]
    BadLabel { label: usize, max: usize },
}

/// Tasks labeled with concept classes.
#[derive(Debug, Clone)]
pub struct ConceptDataset {
    pub entries: Vec<(Task, usize)>,
}

impl ConceptDataset {
    pub fn num_classes(&self) -> usize {
        self.entries.iter().map(|(_, l)| l + 1).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub arch: Architecture,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    /// Weight of the triplet term.
    pub lambda: f64,
    pub margin: f64,
    pub augment: bool,
    /// Global-norm gradient clip; `None` disables clipping.
    pub max_grad_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            arch: Architecture::standard(),
            epochs: 200,
            batch_size: 16,
            lr: 0.02,
            momentum: 0.9,
            lambda: 1.0,
            margin: 1.0,
            augment: true,
            max_grad_norm: Some(5.0),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainStats {
    pub epochs_run: usize,
    pub loss_history: Vec<f64>,
    pub holdout_accuracy: Option<f64>,
}

/// Train a model on the dataset. See `train_full` for the early-stopping
/// variant.
pub fn train(dataset: &ConceptDataset, config: &TrainConfig, seed: u64) -> Result<CnnModel, TrainError> {
    Ok(train_full(dataset, None, config, seed)?.0)
}

/// Train with an optional holdout: after each epoch the holdout accuracy is
/// measured and training stops once it reaches `target`.
pub fn train_full(
    dataset: &ConceptDataset,
    holdout: Option<(&ConceptDataset, f64)>,
    config: &TrainConfig,
    seed: u64,
) -> Result<(CnnModel, TrainStats), TrainError> {
    validate_dataset(dataset, &config.arch)?;
    let mut model = CnnModel::init(config.arch.clone(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e3779b97f4a7c15));
    let mut velocity = vec![0.0; model.params.len()];
    let mut stats = TrainStats::default();

    let n = dataset.entries.len();
    let mut order: Vec<usize> = (0..n).collect();
    for _epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(Vec<GridPair>, usize)> = chunk
                .iter()
                .map(|&i| {
                    let (task, label) = &dataset.entries[i];
                    let pairs = task.demos();
                    let pairs = if config.augment { augment_task(&pairs, &mut rng) } else { pairs };
                    (pairs, *label)
                })
                .collect();
            let (loss, grads) = batch_loss(&model, &batch, config.lambda, config.margin, true);
            let mut grads = grads.expect("gradients requested");
            if let Some(limit) = config.max_grad_norm {
                let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > limit {
                    let scale = limit / norm;
                    for g in grads.iter_mut() {
                        *g *= scale;
                    }
                }
            }
            for ((p, v), g) in model.params.iter_mut().zip(&mut velocity).zip(&grads) {
                *v = config.momentum * *v - config.lr * g;
                *p += *v;
            }
            epoch_loss += loss * chunk.len() as f64;
        }
        stats.loss_history.push(epoch_loss / n as f64);
        stats.epochs_run += 1;
        if let Some((held, target)) = holdout {
            let acc = evaluate_accuracy(&model, held);
            stats.holdout_accuracy = Some(acc);
            if acc >= target {
                break;
            }
        }
    }
    Ok((model, stats))
}

fn validate_dataset(dataset: &ConceptDataset, arch: &Architecture) -> Result<(), TrainError> {
    let mut counts = std::collections::BTreeMap::new();
    for (_, label) in &dataset.entries {
        if *label >= arch.num_classes {
            return Err(TrainError::BadLabel { label: *label, max: arch.num_classes });
        }
        *counts.entry(*label).or_insert(0usize) += 1;
    }
    if counts.len() < 2 {
        return Err(TrainError::InsufficientData(format!("{} classes, need at least 2", counts.len())));
    }
    if let Some((&label, &count)) = counts.iter().find(|(_, &c)| c < 2) {
        return Err(TrainError::InsufficientData(format!("class {label} has {count} samples, need 2")));
    }
    Ok(())
}

/// Forward (and optionally backward) over a batch of labeled pair-sets.
/// Loss is `mean(CE) + lambda * triplet`. Returned gradients cover every
/// model parameter.
pub fn batch_loss(
    model: &CnnModel,
    batch: &[(Vec<GridPair>, usize)],
    lambda: f64,
    margin: f64,
    with_grads: bool,
) -> (f64, Option<Vec<f64>>) {
    assert!(!batch.is_empty());
    let arch = &model.arch;
    let embed_dim = arch.embed_dim();
    let (cls_w_off, cls_b_off) = arch.classifier_offsets();
    let (proj_w_off, proj_b_off) = arch.projection_offsets();
    let cls_w = &model.params[cls_w_off..cls_b_off];
    let cls_b = &model.params[cls_b_off..cls_b_off + arch.num_classes];
    let proj_w = &model.params[proj_w_off..proj_b_off];
    let proj_b = &model.params[proj_b_off..proj_b_off + arch.proj_dim];

    struct ItemState {
        z: Vec<f64>,
        softmax: Vec<f64>,
        proj: Vec<f64>,
        caches: Vec<(EncodeCache, EncodeCache)>,
    }

    let b_count = batch.len() as f64;
    let mut items = Vec::with_capacity(batch.len());
    let mut ce_total = 0.0;
    for (pairs, label) in batch {
        assert!(!pairs.is_empty(), "task has no pairs");
        let mut z = vec![0.0; embed_dim];
        let mut caches = Vec::with_capacity(pairs.len());
        for (input, output) in pairs {
            let (vi, ci) = encode_grid_cached(model, input);
            let (vo, co) = encode_grid_cached(model, output);
            for k in 0..embed_dim {
                z[k] += vi[k] - vo[k];
            }
            if with_grads {
                caches.push((ci, co));
            }
        }
        for v in z.iter_mut() {
            *v /= pairs.len() as f64;
        }
        let logits = linear_forward(cls_w, cls_b, &z, arch.num_classes);
        let softmax = softmax(&logits);
        ce_total += -softmax[*label].max(1e-300).ln();
        let proj = linear_forward(proj_w, proj_b, &z, arch.proj_dim);
        items.push(ItemState { z, softmax, proj, caches });
    }
    let ce_mean = ce_total / b_count;

    let projs: Vec<&[f64]> = items.iter().map(|i| i.proj.as_slice()).collect();
    let labels: Vec<usize> = batch.iter().map(|(_, l)| *l).collect();
    let (trip_loss, d_projs) = triplet_margin(&projs, &labels, margin);

    let loss = ce_mean + lambda * trip_loss;
    if !with_grads {
        return (loss, None);
    }

    let mut grads = vec![0.0; model.params.len()];
    for (idx, ((pairs, label), item)) in batch.iter().zip(&items).enumerate() {
        // d logits = (softmax - onehot) / B
        let mut d_logits = item.softmax.clone();
        d_logits[*label] -= 1.0;
        for g in d_logits.iter_mut() {
            *g /= b_count;
        }
        let d_proj: Vec<f64> = d_projs[idx].iter().map(|g| g * lambda).collect();

        let mut d_z = vec![0.0; embed_dim];
        {
            let (d_cls_w, rest) = grads[cls_w_off..].split_at_mut(cls_b_off - cls_w_off);
            let d_cls_b = &mut rest[..arch.num_classes];
            linear_backward(cls_w, &item.z, &d_logits, d_cls_w, d_cls_b, &mut d_z);
        }
        {
            let (d_proj_w, rest) = grads[proj_w_off..].split_at_mut(proj_b_off - proj_w_off);
            let d_proj_b = &mut rest[..arch.proj_dim];
            linear_backward(proj_w, &item.z, &d_proj, d_proj_w, d_proj_b, &mut d_z);
        }

        let scale = 1.0 / pairs.len() as f64;
        let d_pos: Vec<f64> = d_z.iter().map(|g| g * scale).collect();
        let d_neg: Vec<f64> = d_z.iter().map(|g| -g * scale).collect();
        for (ci, co) in &item.caches {
            encode_backward(model, ci, &d_pos, &mut grads);
            encode_backward(model, co, &d_neg, &mut grads);
        }
    }
    (loss, Some(grads))
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Batch triplet-margin loss with semi-hard mining. For each anchor: the
/// hardest positive, then the closest negative farther than it (falling back
/// to the farthest negative when none qualifies). Ties resolve to the first
/// index so the selection is deterministic.
fn triplet_margin(projs: &[&[f64]], labels: &[usize], margin: f64) -> (f64, Vec<Vec<f64>>) {
    let n = projs.len();
    let dim = projs.first().map(|p| p.len()).unwrap_or(0);
    let mut d_projs = vec![vec![0.0; dim]; n];
    if n < 2 {
        return (0.0, d_projs);
    }
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 =
                projs[i].iter().zip(projs[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }

    let mut anchors = 0usize;
    let mut active: Vec<(usize, usize, usize)> = Vec::new();
    let mut loss_sum = 0.0;
    for a in 0..n {
        let positives: Vec<usize> = (0..n).filter(|&j| j != a && labels[j] == labels[a]).collect();
        if positives.is_empty() {
            continue;
        }
        let negatives: Vec<usize> = (0..n).filter(|&j| labels[j] != labels[a]).collect();
        if negatives.is_empty() {
            continue;
        }
        anchors += 1;
        let p = *positives
            .iter()
            .max_by(|&&x, &&y| dist[a][x].partial_cmp(&dist[a][y]).unwrap())
            .unwrap();
        let semi: Vec<usize> = negatives.iter().cloned().filter(|&k| dist[a][k] > dist[a][p]).collect();
        let ng = if semi.is_empty() {
            *negatives
                .iter()
                .max_by(|&&x, &&y| dist[a][x].partial_cmp(&dist[a][y]).unwrap())
                .unwrap()
        } else {
            *semi.iter().min_by(|&&x, &&y| dist[a][x].partial_cmp(&dist[a][y]).unwrap()).unwrap()
        };
        let l = dist[a][p] - dist[a][ng] + margin;
        if l > 0.0 {
            loss_sum += l;
            active.push((a, p, ng));
        }
    }
    if anchors == 0 {
        return (0.0, d_projs);
    }
    let scale = 1.0 / anchors as f64;
    for (a, p, ng) in active {
        // d/dx ||x - y|| = (x - y) / ||x - y||
        if dist[a][p] > 1e-12 {
            let inv = scale / dist[a][p];
            for k in 0..dim {
                let diff = (projs[a][k] - projs[p][k]) * inv;
                d_projs[a][k] += diff;
                d_projs[p][k] -= diff;
            }
        }
        if dist[a][ng] > 1e-12 {
            let inv = scale / dist[a][ng];
            for k in 0..dim {
                let diff = (projs[a][k] - projs[ng][k]) * inv;
                d_projs[a][k] -= diff;
                d_projs[ng][k] += diff;
            }
        }
    }
    (loss_sum * scale, d_projs)
}

/// Predict the concept class of a pair-set: argmax of the classifier head on
/// the transformation embedding.
pub fn classify(model: &CnnModel, pairs: &[GridPair]) -> usize {
    let z = super::embed_transformation(model, pairs);
    let arch = &model.arch;
    let (cls_w_off, cls_b_off) = arch.classifier_offsets();
    let logits = linear_forward(
        &model.params[cls_w_off..cls_b_off],
        &model.params[cls_b_off..cls_b_off + arch.num_classes],
        &z.values,
        arch.num_classes,
    );
    logits
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
        .map(|(i, _)| i)
        .unwrap()
}

/// Fraction of dataset entries whose class is predicted correctly.
pub fn evaluate_accuracy(model: &CnnModel, dataset: &ConceptDataset) -> f64 {
    if dataset.entries.is_empty() {
        return 0.0;
    }
    let correct = dataset
        .entries
        .iter()
        .filter(|(task, label)| classify(model, &task.demos()) == *label)
        .count();
    correct as f64 / dataset.entries.len() as f64
}

// --- augmentation ------------------------------------------------------

fn rot90_grid(g: &Grid) -> Grid {
    let (h, w) = (g.height(), g.width());
    let mut cells = Vec::with_capacity(h * w);
    for r in 0..w {
        for c in 0..h {
            cells.push(g.get(h - 1 - c, r));
        }
    }
    Grid::from_cells(w, h, cells).unwrap()
}

fn transpose_grid(g: &Grid) -> Grid {
    let (h, w) = (g.height(), g.width());
    let mut cells = Vec::with_capacity(h * w);
    for r in 0..w {
        for c in 0..h {
            cells.push(g.get(c, r));
        }
    }
    Grid::from_cells(w, h, cells).unwrap()
}

fn permute_colors(g: &Grid, perm: &[u8; NUM_COLORS]) -> Grid {
    let cells = g.cells().iter().map(|&c| perm[c as usize]).collect();
    Grid::from_cells(g.height(), g.width(), cells).unwrap()
}

/// Rotation by a random multiple of 90°, random transpose, and a random
/// color permutation, all shared across every grid of the task's pairs.
pub fn augment_task<R: Rng>(pairs: &[GridPair], rng: &mut R) -> Vec<GridPair> {
    let quarters = rng.random_range(0..4u32);
    let transpose = rng.random_bool(0.5);
    let mut perm: [u8; NUM_COLORS] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9];
    perm.shuffle(rng);
    let apply = |g: &Grid| {
        let mut out = g.clone();
        for _ in 0..quarters {
            out = rot90_grid(&out);
        }
        if transpose {
            out = transpose_grid(&out);
        }
        permute_colors(&out, &perm)
    };
    pairs.iter().map(|(i, o)| (apply(i), apply(o))).collect()
}

// --- synthetic concept dataset -----------------------------------------

/// Concept classes of the synthetic dataset.
pub const SYNTHETIC_CLASSES: [&str; 4] = ["rot90", "mirror_h", "recolor", "identity"];

/// Build the self-contained 4-class concept dataset. Grids are vertical
/// color bands of increasing width (1, 2, 3 columns) with random palettes
/// and speckle noise, so orientation, left-right order, and color usage all
/// carry signal; outputs are realized by running the class's program through
/// the interpreter. Classes: rot90, mirror_h, recolor (replace a→b with
/// task-level colors), identity.
pub fn synthetic_concept_dataset(tasks_per_class: usize, seed: u64) -> ConceptDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = Budget::default();
    let mut entries = Vec::with_capacity(4 * tasks_per_class);
    for (label, class) in SYNTHETIC_CLASSES.iter().enumerate() {
        for t in 0..tasks_per_class {
            // Palette shared across the task's pairs; band 1 always exists,
            // so its color anchors the recolor program.
            let mut colors: Vec<u8> = (0..NUM_COLORS as u8).collect();
            colors.shuffle(&mut rng);
            let palette = [colors[0], colors[1], colors[2]];
            let program = match *class {
                "recolor" => {
                    let from = palette[1];
                    let to = colors[3];
                    format!("replace({from},{to})")
                }
                other => other.to_string(),
            };
            let mut pairs = Vec::new();
            for _ in 0..3 {
                let input = banded_grid(&palette, &mut rng);
                let output = run_source(&program, &input, &budget).expect("synthetic program runs");
                pairs.push((input, output));
            }
            let test = pairs.pop().unwrap();
            let task = Task::new(format!("syn-{class}-{t}"), pairs, vec![test])
                .expect("synthetic task is valid");
            entries.push((task, label));
        }
    }
    ConceptDataset { entries }
}

/// Vertical bands of widths 1, 2, 3 (repeating) colored from the palette,
/// plus ~5% speckle. The repeating asymmetric width rhythm makes
/// orientation and left-right order locally detectable anywhere in the
/// grid, so the class signal survives mean aggregation at any size.
fn banded_grid<R: Rng>(palette: &[u8; 3], rng: &mut R) -> Grid {
    let h = rng.random_range(7..=10usize);
    let w = rng.random_range(9..=12usize);
    let band_of_col = |c: usize| -> usize {
        // widths 1,2,3,1,2,3,... -> cumulative starts 0,1,3,6,7,9,12...
        let cycle = c / 6;
        let rem = c % 6;
        let b = if rem < 1 {
            0
        } else if rem < 3 {
            1
        } else {
            2
        };
        (cycle * 3 + b) % 3
    };
    let mut cells = Vec::with_capacity(h * w);
    for _r in 0..h {
        for c in 0..w {
            if rng.random_bool(0.05) {
                cells.push(rng.random_range(0..NUM_COLORS as u8));
            } else {
                cells.push(palette[band_of_col(c)]);
            }
        }
    }
    Grid::from_cells(h, w, cells).unwrap()
}

/// Deterministic stratified split: the last `holdout_per_class` entries of
/// each class form the holdout.
pub fn split_dataset(dataset: &ConceptDataset, holdout_per_class: usize) -> (ConceptDataset, ConceptDataset) {
    let mut counts = std::collections::BTreeMap::new();
    for (_, label) in &dataset.entries {
        *counts.entry(*label).or_insert(0usize) += 1;
    }
    let mut seen = std::collections::BTreeMap::new();
    let mut train = Vec::new();
    let mut held = Vec::new();
    for (task, label) in &dataset.entries {
        let idx = seen.entry(*label).or_insert(0usize);
        let total = counts[label];
        if *idx + holdout_per_class >= total {
            held.push((task.clone(), *label));
        } else {
            train.push((task.clone(), *label));
        }
        *idx += 1;
    }
    (ConceptDataset { entries: train }, ConceptDataset { entries: held })
}

/// Stratified k-fold training: entry j of a class goes to fold `j % k`; each
/// model trains on the other folds and reports held-out accuracy on its own.
pub fn kfold_train(
    dataset: &ConceptDataset,
    k: usize,
    config: &TrainConfig,
    seed: u64,
) -> Result<Vec<(CnnModel, f64)>, TrainError> {
    assert!(k >= 1);
    if k == 1 {
        let model = train(dataset, config, seed)?;
        let acc = evaluate_accuracy(&model, dataset);
        return Ok(vec![(model, acc)]);
    }
    let mut fold_of = Vec::with_capacity(dataset.entries.len());
    let mut seen = std::collections::BTreeMap::new();
    for (_, label) in &dataset.entries {
        let idx = seen.entry(*label).or_insert(0usize);
        fold_of.push(*idx % k);
        *idx += 1;
    }
    let mut out = Vec::with_capacity(k);
    for fold in 0..k {
        let train_set = ConceptDataset {
            entries: dataset
                .entries
                .iter()
                .zip(&fold_of)
                .filter(|(_, &f)| f != fold)
                .map(|(e, _)| e.clone())
                .collect(),
        };
        let held_set = ConceptDataset {
            entries: dataset
                .entries
                .iter()
                .zip(&fold_of)
                .filter(|(_, &f)| f == fold)
                .map(|(e, _)| e.clone())
                .collect(),
        };
        let model = train(&train_set, config, seed.wrapping_add(fold as u64))?;
        let acc = evaluate_accuracy(&model, &held_set);
        out.push((model, acc));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            arch: Architecture::tiny(),
            epochs: 2,
            batch_size: 4,
            lr: 0.01,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn synthetic_dataset_shape() {
        let ds = synthetic_concept_dataset(3, 1);
        assert_eq!(ds.entries.len(), 12);
        assert_eq!(ds.num_classes(), 4);
        for (task, label) in &ds.entries {
            assert!(*label < 4);
            assert_eq!(task.train.len(), 2);
            assert_eq!(task.test.len(), 1);
        }
    }

    #[test]
    fn synthetic_dataset_is_deterministic() {
        let a = synthetic_concept_dataset(2, 9);
        let b = synthetic_concept_dataset(2, 9);
        for ((ta, la), (tb, lb)) in a.entries.iter().zip(&b.entries) {
            assert_eq!(la, lb);
            assert_eq!(ta, tb);
        }
    }

    #[test]
    fn augmentation_preserves_validity_and_task_shape() {
        let ds = synthetic_concept_dataset(1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (task, _) in &ds.entries {
            let pairs = augment_task(&task.demos(), &mut rng);
            assert_eq!(pairs.len(), task.train.len());
        }
    }

    #[test]
    fn insufficient_data_rejected() {
        let ds = synthetic_concept_dataset(1, 1);
        // One class only.
        let one_class = ConceptDataset {
            entries: ds.entries.iter().filter(|(_, l)| *l == 0).cloned().collect(),
        };
        assert!(matches!(
            train(&one_class, &tiny_config(), 0),
            Err(TrainError::InsufficientData(_))
        ));
    }

    #[test]
    fn bad_label_rejected() {
        let ds = synthetic_concept_dataset(2, 1);
        let mut bad = ds.clone();
        bad.entries[0].1 = 99;
        assert!(matches!(train(&bad, &tiny_config(), 0), Err(TrainError::BadLabel { .. })));
    }

    #[test]
    fn training_is_seed_deterministic() {
        let ds = synthetic_concept_dataset(2, 5);
        let a = train(&ds, &tiny_config(), 11).unwrap();
        let b = train(&ds, &tiny_config(), 11).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn loss_decreases_over_training() {
        let ds = synthetic_concept_dataset(4, 5);
        let config = TrainConfig {
            arch: Architecture::tiny(),
            epochs: 50,
            batch_size: 8,
            lr: 0.02,
            augment: false,
            ..TrainConfig::default()
        };
        let (_, stats) = train_full(&ds, None, &config, 3).unwrap();
        assert!(
            stats.loss_history[stats.epochs_run - 1] < stats.loss_history[0],
            "loss did not decrease: {:?}",
            stats.loss_history
        );
    }

    #[test]
    fn kfold_partitions_cover_everything() {
        let ds = synthetic_concept_dataset(5, 2);
        let models = kfold_train(&ds, 5, &tiny_config(), 1).unwrap();
        assert_eq!(models.len(), 5);
    }

    #[test]
    fn triplet_zero_when_classes_cluster() {
        // Two tight clusters far apart: loss hits zero.
        let a = vec![0.0, 0.0];
        let b = vec![0.1, 0.0];
        let c = vec![10.0, 0.0];
        let d = vec![10.1, 0.0];
        let projs: Vec<&[f64]> = vec![&a, &b, &c, &d];
        let (loss, grads) = triplet_margin(&projs, &[0, 0, 1, 1], 1.0);
        assert_eq!(loss, 0.0);
        assert!(grads.iter().all(|g| g.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn triplet_positive_when_classes_mix() {
        let a = vec![0.0, 0.0];
        let b = vec![5.0, 0.0];
        let c = vec![0.2, 0.0];
        let projs: Vec<&[f64]> = vec![&a, &b, &c];
        let (loss, _) = triplet_margin(&projs, &[0, 0, 1], 1.0);
        assert!(loss > 0.0);
    }
}
