//! Two-layer GCN with hand-derived reverse-mode gradients through the
//! pair-scoring BCE loss, Adam with classic L2 weight decay, and the
//! full-batch training loop.
//!
//! Forward: `H1 = relu(Â·X · W1)`, `F = Â·H1 · W2` — no nonlinearity on the
//! output layer; `F` feeds the sigmoid dot-product scorer directly. The loss
//! is the mean binary cross-entropy over sampled pairs with scores clamped to
//! `[1e-7, 1 − 1e-7]`. The backward pass uses the logit identity
//! `∂loss/∂logit = (s − y) / num_pairs` (unclamped sigmoid) and the relu
//! subgradient 0 at 0; weight decay is applied by the optimizer, not here.
//!
//! `Â·X` is constant across epochs, so the trainer computes it once with
//! spmm, sparsifies it, and reuses it; skipped zero terms and the fixed
//! accumulation order keep results identical to the direct evaluation.

use ndarray::{Array2, Zip};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::NormalizedAdjacency;
use crate::linkpred::{sigmoid, LabeledPair, LinkSampleSet};
use crate::sparse::Csr;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;
const SCORE_CLAMP: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("layer dimensions must be at least 1")]
    InvalidDimension,
    #[error("train pairs must be nonempty")]
    EmptyTrainPairs,
    #[error("test pairs must be nonempty")]
    EmptyTestPairs,
    #[error("pair index {index} out of range for {num_nodes} nodes")]
    IndexOutOfRange { index: usize, num_nodes: usize },
    #[error("learning rate must be positive")]
    InvalidLearningRate,
    #[error("epochs must be at least 1")]
    InvalidEpochs,
    #[error("eval_every must be at least 1")]
    InvalidEvalEvery,
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

/// The two weight matrices of the propagation layers.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

/// Training hyperparameters. Defaults: lr 0.001, weight decay 5e-4, hidden
/// 256+14, eval every 50 epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub init_seed: u64,
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            weight_decay: 5e-4,
            epochs: 1000,
            hidden1: 256,
            hidden2: 14,
            init_seed: 42,
            eval_every: 50,
        }
    }
}

/// Adam moments for both parameter matrices, plus the shared timestep.
/// β1 = 0.9, β2 = 0.999, ε = 1e-8.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m1: Array2<f64>,
    pub v1: Array2<f64>,
    pub m2: Array2<f64>,
    pub v2: Array2<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &GcnParams) -> AdamState {
        AdamState {
            m1: Array2::zeros(params.w1.dim()),
            v1: Array2::zeros(params.w1.dim()),
            m2: Array2::zeros(params.w2.dim()),
            v2: Array2::zeros(params.w2.dim()),
            t: 0,
        }
    }
}

/// Loss and evaluation trajectories of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub loss_curve: Vec<(usize, f64)>,
    pub eval_curve: Vec<(usize, f64)>,
    pub best_accuracy: f64,
    pub best_epoch: usize,
}

/// Glorot-uniform initialization: entries uniform in ±√(6/(fan_in+fan_out)),
/// drawn deterministically from the seed (W1 row-major, then W2).
pub fn init_params(
    num_features: usize,
    hidden1: usize,
    hidden2: usize,
    seed: u64,
) -> Result<GcnParams, ModelError> {
    if num_features == 0 || hidden1 == 0 || hidden2 == 0 {
        return Err(ModelError::InvalidDimension);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut glorot = |fan_in: usize, fan_out: usize| {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new(-limit, limit).expect("valid range");
        Array2::from_shape_fn((fan_in, fan_out), |_| dist.sample(&mut rng))
    };
    let w1 = glorot(num_features, hidden1);
    let w2 = glorot(hidden1, hidden2);
    Ok(GcnParams { w1, w2 })
}

fn check_dims(
    adj: &NormalizedAdjacency,
    features: &Array2<f64>,
    params: &GcnParams,
) -> Result<(), ModelError> {
    if features.nrows() != adj.num_nodes() {
        return Err(ModelError::DimensionMismatch(format!(
            "features have {} rows, adjacency has {} nodes",
            features.nrows(),
            adj.num_nodes()
        )));
    }
    if params.w1.nrows() != features.ncols() {
        return Err(ModelError::DimensionMismatch(format!(
            "W1 expects {} input features, features have {}",
            params.w1.nrows(),
            features.ncols()
        )));
    }
    if params.w2.nrows() != params.w1.ncols() {
        return Err(ModelError::DimensionMismatch(format!(
            "W2 expects {} inputs, W1 produces {}",
            params.w2.nrows(),
            params.w1.ncols()
        )));
    }
    Ok(())
}

struct ForwardState {
    z1: Array2<f64>,
    q: Array2<f64>,
    f: Array2<f64>,
}

fn forward_state(
    ax: &Csr,
    adj: &NormalizedAdjacency,
    params: &GcnParams,
) -> Result<ForwardState, ModelError> {
    let z1 = ax.mul_dense(&params.w1);
    let h1 = z1.mapv(|v| if v > 0.0 { v } else { 0.0 });
    let q = adj.spmm(&h1)?;
    // ndarray's matmul may hand back a column-major result; the pair kernels
    // index raw row slices, so pin the layout here.
    let f = q.dot(&params.w2).as_standard_layout().into_owned();
    Ok(ForwardState { z1, q, f })
}

/// Node embeddings: `Â·H1·W2` with `H1 = relu(Â·X·W1)`.
pub fn forward(
    adj: &NormalizedAdjacency,
    features: &Array2<f64>,
    params: &GcnParams,
) -> Result<Array2<f64>, ModelError> {
    check_dims(adj, features, params)?;
    let ax = Csr::from_dense(&adj.spmm(features)?);
    Ok(forward_state(&ax, adj, params)?.f)
}

struct PairBatch {
    i: Vec<usize>,
    j: Vec<usize>,
    y: Vec<f64>,
}

impl PairBatch {
    fn new(pairs: &[LabeledPair], num_nodes: usize) -> Result<PairBatch, ModelError> {
        let mut batch = PairBatch {
            i: Vec::with_capacity(pairs.len()),
            j: Vec::with_capacity(pairs.len()),
            y: Vec::with_capacity(pairs.len()),
        };
        for p in pairs {
            for idx in [p.i, p.j] {
                if idx >= num_nodes {
                    return Err(ModelError::IndexOutOfRange {
                        index: idx,
                        num_nodes,
                    });
                }
            }
            batch.i.push(p.i);
            batch.j.push(p.j);
            batch.y.push(f64::from(u8::from(p.positive)));
        }
        Ok(batch)
    }

    fn len(&self) -> usize {
        self.y.len()
    }
}

fn pair_scores(f: &Array2<f64>, batch: &PairBatch) -> Vec<f64> {
    let d = f.ncols();
    let fs = f.as_slice().expect("standard layout");
    let mut scores = Vec::with_capacity(batch.len());
    for k in 0..batch.len() {
        let fi = &fs[batch.i[k] * d..(batch.i[k] + 1) * d];
        let fj = &fs[batch.j[k] * d..(batch.j[k] + 1) * d];
        let logit: f64 = fi.iter().zip(fj).map(|(a, b)| a * b).sum();
        scores.push(sigmoid(logit));
    }
    scores
}

fn mean_bce(scores: &[f64], labels: &[f64]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| {
            let s = s.clamp(SCORE_CLAMP, 1.0 - SCORE_CLAMP);
            -(y * s.ln() + (1.0 - y) * (1.0 - s).ln())
        })
        .sum();
    total / scores.len() as f64
}

/// Mean binary cross-entropy of the pair scores against their labels.
pub fn loss(embeddings: &Array2<f64>, train: &[LabeledPair]) -> Result<f64, ModelError> {
    if train.is_empty() {
        return Err(ModelError::EmptyTrainPairs);
    }
    let batch = PairBatch::new(train, embeddings.nrows())?;
    Ok(mean_bce(&pair_scores(embeddings, &batch), &batch.y))
}

fn backward_state(
    ax: &Csr,
    adj: &NormalizedAdjacency,
    params: &GcnParams,
    state: &ForwardState,
    batch: &PairBatch,
    scores: &[f64],
) -> Result<(Array2<f64>, Array2<f64>), ModelError> {
    let m = batch.len() as f64;
    let d = state.f.ncols();
    let fs = state.f.as_slice().expect("standard layout");
    let mut df = Array2::<f64>::zeros(state.f.dim());
    {
        let dfs = df.as_slice_mut().expect("standard layout");
        for k in 0..batch.len() {
            let g = (scores[k] - batch.y[k]) / m;
            let (bi, bj) = (batch.i[k] * d, batch.j[k] * d);
            for c in 0..d {
                dfs[bi + c] += g * fs[bj + c];
                dfs[bj + c] += g * fs[bi + c];
            }
        }
    }
    let dw2 = state.q.t().dot(&df);
    let dq = df.dot(&params.w2.t());
    let dh1 = adj.spmm(&dq)?; // Â is symmetric
    let mut dz1 = dh1;
    Zip::from(&mut dz1).and(&state.z1).for_each(|g, &z| {
        if z <= 0.0 {
            *g = 0.0;
        }
    });
    let dw1 = ax.transpose_mul_dense(&dz1);
    Ok((dw1, dw2))
}

/// Analytic gradients of the training loss with respect to (W1, W2).
/// Weight decay is excluded; the optimizer applies it.
pub fn backward(
    adj: &NormalizedAdjacency,
    features: &Array2<f64>,
    params: &GcnParams,
    train: &[LabeledPair],
) -> Result<(Array2<f64>, Array2<f64>), ModelError> {
    if train.is_empty() {
        return Err(ModelError::EmptyTrainPairs);
    }
    check_dims(adj, features, params)?;
    let batch = PairBatch::new(train, adj.num_nodes())?;
    let ax = Csr::from_dense(&adj.spmm(features)?);
    let state = forward_state(&ax, adj, params)?;
    let scores = pair_scores(&state.f, &batch);
    backward_state(&ax, adj, params, &state, &batch, &scores)
}

fn adam_update(
    w: &mut Array2<f64>,
    grad: &Array2<f64>,
    m: &mut Array2<f64>,
    v: &mut Array2<f64>,
    t: u64,
    lr: f64,
    weight_decay: f64,
) {
    let bias1 = 1.0 - BETA1.powi(t as i32);
    let bias2 = 1.0 - BETA2.powi(t as i32);
    Zip::from(w)
        .and(grad)
        .and(m)
        .and(v)
        .for_each(|w, &g, m, v| {
            let g = g + weight_decay * *w;
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *w -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        });
}

/// One Adam step over both weight matrices with bias correction. Weight decay
/// is added to each gradient before the moment updates (classic L2).
pub fn adam_step(
    params: &mut GcnParams,
    grad_w1: &Array2<f64>,
    grad_w2: &Array2<f64>,
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) -> Result<(), ModelError> {
    if grad_w1.dim() != params.w1.dim() || grad_w2.dim() != params.w2.dim() {
        return Err(ModelError::DimensionMismatch(
            "gradient shapes do not match parameter shapes".into(),
        ));
    }
    state.t += 1;
    adam_update(
        &mut params.w1,
        grad_w1,
        &mut state.m1,
        &mut state.v1,
        state.t,
        lr,
        weight_decay,
    );
    adam_update(
        &mut params.w2,
        grad_w2,
        &mut state.m2,
        &mut state.v2,
        state.t,
        lr,
        weight_decay,
    );
    Ok(())
}

/// Full-batch training over the augmented graph's normalized adjacency.
///
/// Records the loss every epoch and the test accuracy every `eval_every`
/// epochs (plus the final epoch); both are measured on the parameters as they
/// stood at the start of the epoch. Ties in the eval curve resolve to the
/// earliest epoch. Pure function of its inputs: identical arguments produce a
/// bit-identical report.
pub fn train(
    adj: &NormalizedAdjacency,
    features: &Array2<f64>,
    samples: &LinkSampleSet,
    cfg: &TrainConfig,
) -> Result<TrainReport, ModelError> {
    if !(cfg.lr > 0.0) {
        return Err(ModelError::InvalidLearningRate);
    }
    if cfg.epochs == 0 {
        return Err(ModelError::InvalidEpochs);
    }
    if cfg.eval_every == 0 {
        return Err(ModelError::InvalidEvalEvery);
    }
    if samples.train.is_empty() {
        return Err(ModelError::EmptyTrainPairs);
    }
    if samples.test.is_empty() {
        return Err(ModelError::EmptyTestPairs);
    }
    let mut params = init_params(features.ncols(), cfg.hidden1, cfg.hidden2, cfg.init_seed)?;
    check_dims(adj, features, &params)?;
    let train_batch = PairBatch::new(&samples.train, adj.num_nodes())?;
    let test_batch = PairBatch::new(&samples.test, adj.num_nodes())?;
    let mut adam = AdamState::new(&params);
    let ax = Csr::from_dense(&adj.spmm(features)?);

    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let mut eval_curve = Vec::new();
    for epoch in 1..=cfg.epochs {
        let state = forward_state(&ax, adj, &params)?;
        let scores = pair_scores(&state.f, &train_batch);
        loss_curve.push((epoch, mean_bce(&scores, &train_batch.y)));

        if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            let test_scores = pair_scores(&state.f, &test_batch);
            let correct = test_scores
                .iter()
                .zip(&test_batch.y)
                .filter(|(&s, &y)| (s >= 0.5) == (y == 1.0))
                .count();
            eval_curve.push((epoch, correct as f64 / test_batch.len() as f64));
        }

        let (dw1, dw2) = backward_state(&ax, adj, &params, &state, &train_batch, &scores)?;
        adam_step(&mut params, &dw1, &dw2, &mut adam, cfg.lr, cfg.weight_decay)?;
    }

    let (best_epoch, best_accuracy) = eval_curve
        .iter()
        .fold((0usize, f64::NEG_INFINITY), |best, &(e, a)| {
            if a > best.1 {
                (e, a)
            } else {
                best
            }
        });
    Ok(TrainReport {
        loss_curve,
        eval_curve,
        best_accuracy,
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use ndarray::array;
    use rand::prelude::*;

    fn random_graph(n: usize, edge_prob: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in 0..i {
                if rng.random::<f64>() < edge_prob {
                    pairs.push((i, j));
                }
            }
        }
        Graph::from_edge_list(n, &pairs).unwrap()
    }

    fn random_features(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.random::<f64>() * 2.0 - 1.0)
    }

    fn random_pairs(n: usize, count: usize, seed: u64) -> Vec<LabeledPair> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| LabeledPair {
                i: rng.random_range(0..n),
                j: rng.random_range(0..n),
                positive: rng.random::<bool>(),
            })
            .collect()
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_params(20, 8, 3, 7).unwrap();
        let b = init_params(20, 8, 3, 7).unwrap();
        assert_eq!(a, b);
        let limit = (6.0f64 / 28.0).sqrt();
        assert!(a.w1.iter().all(|&v| v.abs() <= limit));
        let limit2 = (6.0f64 / 11.0).sqrt();
        assert!(a.w2.iter().all(|&v| v.abs() <= limit2));
        assert!(init_params(0, 1, 1, 0).is_err());
    }

    #[test]
    fn init_mean_is_near_zero() {
        // Monte Carlo: mean of 10⁴ U(−a, a) draws within 3 standard errors.
        let p = init_params(100, 100, 1, 123).unwrap();
        let a = (6.0f64 / 200.0).sqrt();
        let n = p.w1.len() as f64;
        let mean = p.w1.sum() / n;
        let se = a / (3.0 * n).sqrt();
        assert!(mean.abs() <= 3.0 * se, "mean {mean} exceeds 3·se {se}");
    }

    #[test]
    fn forward_zero_params_gives_zero() {
        let g = random_graph(6, 0.5, 1);
        let adj = g.normalize();
        let x = random_features(6, 4, 2);
        let params = GcnParams {
            w1: Array2::zeros((4, 3)),
            w2: Array2::zeros((3, 2)),
        };
        let f = forward(&adj, &x, &params).unwrap();
        assert!(f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_two_node_hand_case() {
        // Single edge: Â is the all-0.5 2×2 matrix. X = I, W1 = I, so
        // H1 = relu(Â) = Â, and F = Â·H1·W2 with W2 = [[1],[0]] gives
        // F = (Â·Â)[:,0] = [0.5, 0.5]ᵀ·0.5... computed via the dense oracle.
        let g = Graph::from_edge_list(2, &[(0, 1)]).unwrap();
        let adj = g.normalize();
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        let params = GcnParams {
            w1: array![[1.0, 0.0], [0.0, 1.0]],
            w2: array![[1.0], [0.0]],
        };
        let f = forward(&adj, &x, &params).unwrap();
        let a_hat = array![[0.5, 0.5], [0.5, 0.5]];
        let oracle = a_hat
            .dot(&a_hat.dot(&x).dot(&params.w1).mapv(|v| v.max(0.0)))
            .dot(&params.w2);
        for (got, want) in f.iter().zip(oracle.iter()) {
            assert!((got - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn forward_matches_dense_oracle() {
        let g = random_graph(9, 0.4, 3);
        let adj = g.normalize();
        let x = random_features(9, 5, 4);
        let params = GcnParams {
            w1: random_features(5, 4, 5),
            w2: random_features(4, 3, 6),
        };
        let n = 9;
        let mut a_hat = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                a_hat[(i, j)] = adj.value(i, j).unwrap_or(0.0);
            }
        }
        let h1 = a_hat.dot(&x).dot(&params.w1).mapv(|v| v.max(0.0));
        let oracle = a_hat.dot(&h1).dot(&params.w2);
        let f = forward(&adj, &x, &params).unwrap();
        for (got, want) in f.iter().zip(oracle.iter()) {
            assert!((got - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn relu_kills_nonpositive_columns() {
        // Drive one W1 column entirely nonpositive; its H1 column, and hence
        // its contribution to F through W2's matching row, must vanish.
        let g = random_graph(5, 0.6, 8);
        let adj = g.normalize();
        let x = Array2::ones((5, 2));
        let params = GcnParams {
            w1: array![[1.0, -1.0], [1.0, -1.0]],
            w2: array![[0.0], [1.0]],
        };
        let f = forward(&adj, &x, &params).unwrap();
        assert!(f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_dimension_mismatch() {
        let g = random_graph(4, 0.5, 9);
        let adj = g.normalize();
        let x = random_features(4, 3, 10);
        let params = GcnParams {
            w1: Array2::zeros((5, 2)), // wrong fan-in
            w2: Array2::zeros((2, 2)),
        };
        assert!(matches!(
            forward(&adj, &x, &params),
            Err(ModelError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn loss_all_zero_embeddings_is_ln2() {
        let f = Array2::<f64>::zeros((4, 3));
        let pairs = vec![
            LabeledPair { i: 0, j: 1, positive: true },
            LabeledPair { i: 2, j: 3, positive: false },
        ];
        let l = loss(&f, &pairs).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() <= 1e-15);
    }

    #[test]
    fn loss_clamp_floor() {
        // Perfectly confident correct scores bottom out at −ln(1−1e-7).
        let f = array![[100.0], [100.0]];
        let pairs = vec![LabeledPair { i: 0, j: 1, positive: true }];
        let l = loss(&f, &pairs).unwrap();
        let floor = -(1.0 - 1e-7f64).ln();
        assert!((l - floor).abs() <= 1e-15, "loss {l} vs clamp floor {floor}");
        assert!(loss(&f, &[]).is_err());
    }

    #[test]
    fn loss_matches_per_pair_oracle() {
        let f = random_features(6, 3, 11);
        let pairs = random_pairs(6, 10, 12);
        let l = loss(&f, &pairs).unwrap();
        let mut total = 0.0;
        for p in &pairs {
            let logit: f64 = f.row(p.i).iter().zip(f.row(p.j)).map(|(a, b)| a * b).sum();
            let s = sigmoid(logit).clamp(1e-7, 1.0 - 1e-7);
            let y = f64::from(u8::from(p.positive));
            total += -(y * s.ln() + (1.0 - y) * (1.0 - s).ln());
        }
        assert!((l - total / 10.0).abs() <= 1e-12);
    }

    #[test]
    fn loss_stays_within_clamp_range() {
        let f = random_features(8, 4, 13).mapv(|v| v * 50.0);
        let pairs = random_pairs(8, 30, 14);
        let l = loss(&f, &pairs).unwrap();
        assert!(l >= 0.0 && l <= -(1e-7f64).ln());
    }

    fn finite_difference_grads(
        adj: &NormalizedAdjacency,
        x: &Array2<f64>,
        params: &GcnParams,
        pairs: &[LabeledPair],
        step: f64,
    ) -> (Array2<f64>, Array2<f64>) {
        let mut fd1 = Array2::<f64>::zeros(params.w1.dim());
        let mut fd2 = Array2::<f64>::zeros(params.w2.dim());
        let eval = |p: &GcnParams| loss(&forward(adj, x, p).unwrap(), pairs).unwrap();
        for idx in 0..params.w1.len() {
            let (r, c) = (idx / params.w1.ncols(), idx % params.w1.ncols());
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus.w1[(r, c)] += step;
            minus.w1[(r, c)] -= step;
            fd1[(r, c)] = (eval(&plus) - eval(&minus)) / (2.0 * step);
        }
        for idx in 0..params.w2.len() {
            let (r, c) = (idx / params.w2.ncols(), idx % params.w2.ncols());
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus.w2[(r, c)] += step;
            minus.w2[(r, c)] -= step;
            fd2[(r, c)] = (eval(&plus) - eval(&minus)) / (2.0 * step);
        }
        (fd1, fd2)
    }

    fn max_rel_error(analytic: &Array2<f64>, numeric: &Array2<f64>) -> f64 {
        analytic
            .iter()
            .zip(numeric.iter())
            .map(|(&a, &n)| (a - n).abs() / (a.abs() + n.abs()).max(1e-8))
            .fold(0.0, f64::max)
    }

    #[test]
    fn backward_zero_params_matches_finite_differences() {
        let g = random_graph(5, 0.5, 20);
        let adj = g.normalize();
        let x = random_features(5, 3, 21);
        let params = GcnParams {
            w1: Array2::zeros((3, 4)),
            w2: Array2::zeros((4, 2)),
        };
        let pairs = random_pairs(5, 6, 22);
        let (dw1, dw2) = backward(&adj, &x, &params, &pairs).unwrap();
        assert!(dw2.iter().all(|&v| v == 0.0), "dW2 must vanish at F = 0");
        let (fd1, fd2) = finite_difference_grads(&adj, &x, &params, &pairs, 1e-5);
        assert!(fd2.iter().all(|&v| v.abs() < 1e-9));
        assert!(dw1.iter().zip(fd1.iter()).all(|(&a, &n)| (a - n).abs() < 1e-9));
    }

    #[test]
    fn backward_matches_finite_differences_tiny_case() {
        let g = random_graph(5, 0.6, 30);
        let adj = g.normalize();
        let x = random_features(5, 3, 31);
        let params = GcnParams {
            w1: random_features(3, 4, 32),
            w2: random_features(4, 2, 33),
        };
        let pairs = random_pairs(5, 8, 34);
        let (dw1, dw2) = backward(&adj, &x, &params, &pairs).unwrap();
        let (fd1, fd2) = finite_difference_grads(&adj, &x, &params, &pairs, 1e-5);
        assert!(max_rel_error(&dw1, &fd1) <= 1e-4);
        assert!(max_rel_error(&dw2, &fd2) <= 1e-4);
    }

    #[test]
    fn duplicating_pairs_leaves_gradients_unchanged() {
        let g = random_graph(6, 0.5, 40);
        let adj = g.normalize();
        let x = random_features(6, 3, 41);
        let params = GcnParams {
            w1: random_features(3, 3, 42),
            w2: random_features(3, 2, 43),
        };
        let pairs = random_pairs(6, 7, 44);
        let mut doubled = pairs.clone();
        doubled.extend(pairs.iter().copied());
        let (a1, a2) = backward(&adj, &x, &params, &pairs).unwrap();
        let (b1, b2) = backward(&adj, &x, &params, &doubled).unwrap();
        assert!(max_rel_error(&a1, &b1) <= 1e-12);
        assert!(max_rel_error(&a2, &b2) <= 1e-12);
    }

    #[test]
    fn adam_first_step_has_learning_rate_magnitude() {
        let mut params = GcnParams {
            w1: array![[0.0]],
            w2: array![[0.0]],
        };
        let mut state = AdamState::new(&params);
        let g = array![[0.37]];
        adam_step(&mut params, &g, &g, &mut state, 1e-3, 0.0).unwrap();
        // First bias-corrected step is −lr·g/(|g| + ε·√(1−β2)) ≈ −lr·sign(g).
        assert!((params.w1[(0, 0)] + 1e-3).abs() < 1e-6);
        assert_eq!(params.w1, params.w2);
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut params = GcnParams {
            w1: array![[1.5, -2.0]],
            w2: array![[0.25], [4.0]],
        };
        let before = params.clone();
        let mut state = AdamState::new(&params);
        let g1 = Array2::zeros((1, 2));
        let g2 = Array2::zeros((2, 1));
        adam_step(&mut params, &g1, &g2, &mut state, 1e-3, 0.0).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn adam_shape_mismatch_errors() {
        let mut params = GcnParams {
            w1: Array2::zeros((2, 2)),
            w2: Array2::zeros((2, 1)),
        };
        let mut state = AdamState::new(&params);
        let bad = Array2::zeros((3, 2));
        let g2 = Array2::zeros((2, 1));
        assert!(adam_step(&mut params, &bad, &g2, &mut state, 1e-3, 0.0).is_err());
    }

    #[test]
    fn adam_matches_reference_trajectory_on_quadratic() {
        // Independent scalar Adam; loss 0.5·a·w², gradient a·w.
        let a = 3.0;
        let (lr, wd) = (0.01, 0.1);
        let mut w_ref = 1.0f64;
        let mut m = 0.0f64;
        let mut v = 0.0f64;
        let mut reference = Vec::new();
        for t in 1..=10 {
            let g = a * w_ref + wd * w_ref;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let m_hat = m / (1.0 - 0.9f64.powi(t));
            let v_hat = v / (1.0 - 0.999f64.powi(t));
            w_ref -= lr * m_hat / (v_hat.sqrt() + 1e-8);
            reference.push(w_ref);
        }

        let mut params = GcnParams {
            w1: array![[1.0]],
            w2: array![[1.0]],
        };
        let mut state = AdamState::new(&params);
        for step in 0..10 {
            let g1 = array![[a * params.w1[(0, 0)]]];
            let g2 = array![[a * params.w2[(0, 0)]]];
            adam_step(&mut params, &g1, &g2, &mut state, lr, wd).unwrap();
            assert!(
                (params.w1[(0, 0)] - reference[step]).abs() <= 1e-12,
                "step {step}: {} vs {}",
                params.w1[(0, 0)],
                reference[step]
            );
        }
    }

    fn training_fixture() -> (NormalizedAdjacency, Array2<f64>, LinkSampleSet) {
        let g = random_graph(12, 0.4, 50);
        let adj_full = g.normalize();
        let samples = LinkSampleSet {
            train: vec![
                LabeledPair { i: 1, j: 0, positive: true },
                LabeledPair { i: 5, j: 2, positive: false },
                LabeledPair { i: 7, j: 3, positive: true },
                LabeledPair { i: 9, j: 4, positive: false },
            ],
            test: vec![
                LabeledPair { i: 6, j: 1, positive: true },
                LabeledPair { i: 11, j: 8, positive: false },
            ],
        };
        (adj_full, random_features(12, 5, 51), samples)
    }

    #[test]
    fn train_single_epoch_has_one_loss_point() {
        let (adj, x, samples) = training_fixture();
        let cfg = TrainConfig {
            epochs: 1,
            hidden1: 4,
            hidden2: 2,
            ..TrainConfig::default()
        };
        let report = train(&adj, &x, &samples, &cfg).unwrap();
        assert_eq!(report.loss_curve.len(), 1);
        assert_eq!(report.loss_curve[0].0, 1);
        assert_eq!(report.eval_curve.len(), 1); // final epoch always evaluated
        assert_eq!(report.best_epoch, 1);
    }

    #[test]
    fn train_is_deterministic() {
        let (adj, x, samples) = training_fixture();
        let cfg = TrainConfig {
            epochs: 20,
            hidden1: 4,
            hidden2: 2,
            eval_every: 5,
            ..TrainConfig::default()
        };
        let a = train(&adj, &x, &samples, &cfg).unwrap();
        let b = train(&adj, &x, &samples, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn train_requires_nonempty_test_set() {
        let (adj, x, mut samples) = training_fixture();
        samples.test.clear();
        let cfg = TrainConfig::default();
        assert_eq!(
            train(&adj, &x, &samples, &cfg).unwrap_err(),
            ModelError::EmptyTestPairs
        );
    }

    #[test]
    fn train_validates_config() {
        let (adj, x, samples) = training_fixture();
        let mut cfg = TrainConfig::default();
        cfg.lr = 0.0;
        assert!(train(&adj, &x, &samples, &cfg).is_err());
        cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        assert!(train(&adj, &x, &samples, &cfg).is_err());
    }

    #[test]
    fn best_accuracy_is_curve_maximum() {
        let (adj, x, samples) = training_fixture();
        let cfg = TrainConfig {
            epochs: 30,
            hidden1: 4,
            hidden2: 2,
            eval_every: 10,
            ..TrainConfig::default()
        };
        let report = train(&adj, &x, &samples, &cfg).unwrap();
        let max = report
            .eval_curve
            .iter()
            .map(|&(_, a)| a)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(report.best_accuracy, max);
        assert!(report.eval_curve.iter().any(|&(e, a)| e == report.best_epoch && a == max));
        assert!(report.loss_curve.windows(2).all(|w| w[0].0 < w[1].0));
    }
}
