//! Training loops for single-view and multiplex graphs.
//!
//! Single-view training follows the two-augmented-views scheme: sample two
//! views, encode and project them with the shared encoder, soft-assign each
//! view against its own centroid matrix, and take one Adam step on the
//! decaying joint objective. Multiplex training skips augmentation — the
//! views are real — and sums the same objective over every unordered pair
//! of views.
//!
//! Everything is deterministic given the config seed: parameter init,
//! centroid init and the per-epoch augmentation draws all use fixed seeded
//! streams.

use crate::augment::{augment_view, AugmentConfig};
use crate::community::{deca_loss, edge_densities, CommunityState};
use crate::contrast::{alpha, community_contrast, node_contrast_loss};
use crate::encoder::{encode, init_params, project, Activation, GcnParams, GcnVars};
use crate::graph::{adjacency, normalized_adjacency, AttributedGraph, MultiplexGraph};
use crate::matrix::Matrix;
use crate::rng::{augment_rng, stream_rng, STREAM_CENTROID_INIT, STREAM_ENCODER_INIT};
use crate::similarity::{Similarity, SimilarityKind};
use crate::tensor::{AdamState, Tape, TensorError, Var};
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("non-finite loss at epoch {epoch} (node={l_node}, deca={l_deca}, com={l_com})")]
    NonFinite {
        epoch: usize,
        l_node: f64,
        l_deca: f64,
        l_com: f64,
    },
    #[error("numeric failure: {0}")]
    Tensor(#[from] TensorError),
}

/// Which objective terms participate; ablation variants zero the excluded
/// ones. Not a config-file key — set programmatically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossTerms {
    pub node: bool,
    pub deca: bool,
    pub com: bool,
}

impl Default for LossTerms {
    fn default() -> Self {
        LossTerms {
            node: true,
            deca: true,
            com: true,
        }
    }
}

impl LossTerms {
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.node {
            parts.push("node");
        }
        if self.deca {
            parts.push("deca");
        }
        if self.com {
            parts.push("com");
        }
        parts.join("+")
    }
}

/// How multiplex training pairs up views. All unordered pairs is the only
/// policy; the field exists so configs state it explicitly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViewPairPolicy {
    #[default]
    #[serde(rename = "all-pairs")]
    AllPairs,
}

/// Full training configuration. The serialized keys are the tunable
/// hyperparameters plus seed, split and similarity settings; unknown keys
/// are hard errors so sweep typos fail loudly.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Similarity sensitivity factor.
    pub tau: f64,
    /// Weight of the inter-community density term.
    pub lambda_w: f64,
    /// RBF reweighting sharpness in the community contrast.
    pub gamma: f64,
    /// Decay scale of the joint objective.
    pub eta: f64,
    /// Attribute-mask probability.
    pub p_v: f64,
    /// Edge-drop probability.
    pub p_e: f64,
    /// Community count; defaults to the number of classes.
    pub k: Option<usize>,
    pub hidden_dim: usize,
    pub repr_dim: usize,
    pub similarity: SimilarityKind,
    pub activation: String,
    pub seed: u64,
    pub view_pair_policy: ViewPairPolicy,
    /// Evaluation split: fraction of labeled nodes used to fit the probe.
    pub train_fraction: f64,
    /// Number of evaluation seeds (splits / K-means restarts).
    pub eval_seeds: usize,
    /// Ablation switches; never read from config files.
    #[serde(skip)]
    pub terms: LossTerms,
    /// Hold the decay coefficient fixed instead of decaying it.
    #[serde(skip)]
    pub alpha_hold: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            learning_rate: 0.01,
            tau: 0.4,
            lambda_w: 1.0,
            gamma: 8e-5,
            eta: 500.0,
            p_v: 0.1,
            p_e: 0.2,
            k: None,
            hidden_dim: 64,
            repr_dim: 32,
            similarity: SimilarityKind::ExponentCosine,
            activation: "prelu".into(),
            seed: 42,
            view_pair_policy: ViewPairPolicy::AllPairs,
            train_fraction: 0.1,
            eval_seeds: 5,
            terms: LossTerms::default(),
            alpha_hold: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let cfg_err = |msg: String| Err(TrainError::Config(msg));
        if self.learning_rate <= 0.0 {
            return cfg_err(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.tau <= 0.0 {
            return cfg_err(format!("tau must be positive, got {}", self.tau));
        }
        if self.lambda_w < 0.0 {
            return cfg_err(format!(
                "lambda_w must be nonnegative, got {}",
                self.lambda_w
            ));
        }
        if self.gamma < 0.0 {
            return cfg_err(format!("gamma must be nonnegative, got {}", self.gamma));
        }
        if self.eta <= 0.0 {
            return cfg_err(format!("eta must be positive, got {}", self.eta));
        }
        for (name, p) in [("p_v", self.p_v), ("p_e", self.p_e)] {
            if !(0.0..=1.0).contains(&p) {
                return cfg_err(format!("{name} must be in [0,1], got {p}"));
            }
        }
        if let Some(k) = self.k {
            if k == 0 {
                return cfg_err("k must be positive".into());
            }
        }
        if self.hidden_dim == 0 || self.repr_dim == 0 {
            return cfg_err("hidden_dim and repr_dim must be positive".into());
        }
        if !(0.0 < self.train_fraction && self.train_fraction < 1.0) {
            return cfg_err(format!(
                "train_fraction must be in (0,1), got {}",
                self.train_fraction
            ));
        }
        if self.eval_seeds == 0 {
            return cfg_err("eval_seeds must be at least 1".into());
        }
        if let Some(a) = self.alpha_hold {
            if !(0.0..=1.0).contains(&a) {
                return cfg_err(format!("alpha_hold must be in [0,1], got {a}"));
            }
        }
        if !self.terms.node && !self.terms.deca && !self.terms.com {
            return cfg_err("at least one loss term must be enabled".into());
        }
        Activation::parse(&self.activation).map_err(TrainError::Config)?;
        Ok(())
    }

    pub fn similarity_fn(&self) -> Similarity {
        Similarity::new(self.similarity, self.tau)
    }

    pub fn activation_fn(&self) -> Activation {
        Activation::parse(&self.activation).expect("validated activation")
    }

    /// Community count: the configured `k`, else the label count.
    pub fn resolve_k(&self, num_classes: Option<usize>) -> Result<usize, TrainError> {
        match (self.k, num_classes) {
            (Some(k), _) => Ok(k),
            (None, Some(c)) if c > 0 => Ok(c),
            _ => Err(TrainError::Config(
                "k is required when the dataset has no labels".into(),
            )),
        }
    }
}

/// The full trainable set: encoder/projector weights plus one centroid
/// matrix per view.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelParams {
    pub gcn: GcnParams,
    pub centroids: Vec<Matrix>,
}

impl ModelParams {
    /// Fresh parameters with `num_views` centroid matrices.
    pub fn init(cfg: &TrainConfig, feature_dim: usize, k: usize, num_views: usize) -> Self {
        let gcn = init_params(
            feature_dim,
            cfg.hidden_dim,
            cfg.repr_dim,
            cfg.activation_fn(),
            &mut stream_rng(cfg.seed, STREAM_ENCODER_INIT),
        );
        let mut rng = stream_rng(cfg.seed, STREAM_CENTROID_INIT);
        let centroids = (0..num_views)
            .map(|_| crate::encoder::glorot(k, cfg.repr_dim, &mut rng))
            .collect();
        ModelParams { gcn, centroids }
    }

    fn shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = vec![
            self.gcn.w1.shape(),
            self.gcn.w2.shape(),
            self.gcn.p1.shape(),
            self.gcn.b1.shape(),
            self.gcn.p2.shape(),
            self.gcn.b2.shape(),
        ];
        shapes.extend(self.centroids.iter().map(|c| c.shape()));
        shapes
    }

    fn param_refs_mut(&mut self) -> Vec<&mut Matrix> {
        let mut refs = vec![
            &mut self.gcn.w1,
            &mut self.gcn.w2,
            &mut self.gcn.p1,
            &mut self.gcn.b1,
            &mut self.gcn.p2,
            &mut self.gcn.b2,
        ];
        refs.extend(self.centroids.iter_mut());
        refs
    }
}

/// Per-epoch log record. `wall_ms` is kept for callers but excluded from
/// serialization so logs from identical runs are byte-identical.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub l_node: f64,
    pub l_deca: f64,
    pub l_com: f64,
    pub alpha: f64,
    pub total: f64,
    /// Average community edge density per view, on the unaugmented graph.
    pub ed: Vec<f64>,
    /// Average community class entropy per view, when labels exist.
    pub ch: Option<Vec<f64>>,
    #[serde(skip)]
    pub wall_ms: f64,
}

struct EpochLosses<'t> {
    l_node: Option<Var<'t>>,
    l_deca: Option<Var<'t>>,
    l_com: Option<Var<'t>>,
}

/// Leaf vars for the whole parameter set, in `shapes()` order.
fn leaf_vars<'t>(tape: &'t Tape, params: &ModelParams) -> (GcnVars<'t>, Vec<Var<'t>>) {
    let gcn = params.gcn.leaf_vars(tape);
    let centroids = params
        .centroids
        .iter()
        .map(|c| tape.var(c.clone()))
        .collect();
    (gcn, centroids)
}

fn gather_grads(gcn: &GcnVars<'_>, centroids: &[Var<'_>]) -> Vec<Matrix> {
    let mut vars = vec![gcn.w1, gcn.w2, gcn.p1, gcn.b1, gcn.p2, gcn.b2];
    vars.extend_from_slice(centroids);
    vars.iter()
        .map(|v| {
            v.grad().unwrap_or_else(|| {
                let (r, c) = v.shape();
                Matrix::zeros(r, c)
            })
        })
        .collect()
}

fn combine_terms<'t>(tape: &'t Tape, losses: &EpochLosses<'t>, a: f64) -> Var<'t> {
    let zero = || tape.constant(Matrix::scalar(0.0));
    let l_node = losses.l_node.unwrap_or_else(zero);
    let l_deca = losses.l_deca.unwrap_or_else(zero);
    let l_com = losses.l_com.unwrap_or_else(zero);
    crate::contrast::combine_with_alpha(l_node, l_deca, l_com, a)
}

fn class_entropy_or_none(
    labels: Option<&[usize]>,
    hards: &[&[usize]],
    k: usize,
) -> Option<Vec<f64>> {
    labels.map(|l| {
        hards
            .iter()
            .map(|h| crate::eval::class_entropy_score(h, l, k))
            .collect()
    })
}

/// Train on a single-view graph with two stochastic augmentations per
/// epoch. Deterministic given the config seed; `on_epoch` sees each record
/// as soon as it exists so partial logs survive numeric aborts.
pub fn train_single(
    g: &AttributedGraph,
    cfg: &TrainConfig,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<(ModelParams, Vec<EpochRecord>), TrainError> {
    cfg.validate()?;
    let k = cfg.resolve_k(g.num_classes())?;
    let params = ModelParams::init(cfg, g.attributes().cols(), k, 2);
    train_single_from(g, cfg, params, on_epoch)
}

/// Single-view training from explicit initial parameters.
pub fn train_single_from(
    g: &AttributedGraph,
    cfg: &TrainConfig,
    mut params: ModelParams,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(ModelParams, Vec<EpochRecord>), TrainError> {
    cfg.validate()?;
    assert_eq!(
        params.centroids.len(),
        2,
        "single-view training uses two centroid matrices"
    );
    let k = params.centroids[0].rows();
    let sim = cfg.similarity_fn();
    let aug =
        AugmentConfig::new(cfg.p_v, cfg.p_e).map_err(|e| TrainError::Config(e.to_string()))?;
    let a_full = g.adjacency();
    let mut adam = AdamState::new(cfg.learning_rate, &params.shapes());
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let (x1, e1) = augment_view(g, aug, &mut augment_rng(cfg.seed, epoch, 0))
            .map_err(|e| TrainError::Config(e.to_string()))?;
        let (x2, e2) = augment_view(g, aug, &mut augment_rng(cfg.seed, epoch, 1))
            .map_err(|e| TrainError::Config(e.to_string()))?;
        let n = g.num_nodes();
        let norm1 = normalized_adjacency(n, &e1);
        let norm2 = normalized_adjacency(n, &e2);
        let raw1 = adjacency(n, &e1);
        let raw2 = adjacency(n, &e2);

        let tape = Tape::new();
        let (gcn, centroids) = leaf_vars(&tape, &params);
        let h1 = project(encode(&tape, &x1, &norm1, &gcn), &gcn);
        let h2 = project(encode(&tape, &x2, &norm2, &gcn), &gcn);

        let r1 = crate::community::assignment_matrix(&sim, h1, centroids[0])?;
        let r2 = crate::community::assignment_matrix(&sim, h2, centroids[1])?;
        let state1 = CommunityState::from_soft(r1.value());
        let state2 = CommunityState::from_soft(r2.value());

        let losses = EpochLosses {
            l_node: cfg
                .terms
                .node
                .then(|| node_contrast_loss(&sim, h1, h2))
                .transpose()?,
            l_deca: cfg.terms.deca.then(|| {
                deca_loss(r1, &raw1, state1.hard(), cfg.lambda_w)
                    .add(deca_loss(r2, &raw2, state2.hard(), cfg.lambda_w))
                    .scale(0.5)
            }),
            l_com: cfg
                .terms
                .com
                .then(|| community_contrast(&sim, h1, h2, centroids[0], centroids[1], cfg.gamma))
                .transpose()?,
        };

        let a = cfg
            .alpha_hold
            .unwrap_or_else(|| alpha(epoch as f64, cfg.eta));
        let total = combine_terms(&tape, &losses, a);

        let diagnostics = EpochDiagnostics {
            ed: vec![
                mean(&edge_densities(&a_full, state1.hard(), k)),
                mean(&edge_densities(&a_full, state2.hard(), k)),
            ],
            ch: class_entropy_or_none(g.labels(), &[state1.hard(), state2.hard()], k),
        };
        let record = finish_epoch(FinishEpoch {
            tape: &tape,
            total,
            losses: &losses,
            alpha: a,
            epoch,
            adam: &mut adam,
            params: &mut params,
            gcn: &gcn,
            centroids: &centroids,
            start,
            diagnostics,
        })?;
        on_epoch(&record);
        log.push(record);
    }
    Ok((params, log))
}

/// Train on a multiplex graph: no augmentation, shared encoder over every
/// view, objectives summed over all unordered view pairs.
pub fn train_multiplex(
    mg: &MultiplexGraph,
    cfg: &TrainConfig,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<(ModelParams, Vec<EpochRecord>), TrainError> {
    cfg.validate()?;
    if mg.num_views() < 2 {
        return Err(TrainError::Config(
            "multiplex training needs at least two views; use single-view training".into(),
        ));
    }
    let k = cfg.resolve_k(mg.num_classes())?;
    let params = ModelParams::init(cfg, mg.attributes().cols(), k, mg.num_views());
    train_multiplex_from(mg, cfg, params, on_epoch)
}

/// Multiplex training from explicit initial parameters.
pub fn train_multiplex_from(
    mg: &MultiplexGraph,
    cfg: &TrainConfig,
    mut params: ModelParams,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(ModelParams, Vec<EpochRecord>), TrainError> {
    cfg.validate()?;
    let views = mg.num_views();
    assert_eq!(
        params.centroids.len(),
        views,
        "one centroid matrix per view"
    );
    let k = params.centroids[0].rows();
    let sim = cfg.similarity_fn();
    let x = mg.attributes();
    let n = mg.num_nodes();
    let norms: Vec<Matrix> = (0..views)
        .map(|r| normalized_adjacency(n, mg.view_edges(r)))
        .collect();
    let raws: Vec<Matrix> = (0..views).map(|r| adjacency(n, mg.view_edges(r))).collect();
    let mut adam = AdamState::new(cfg.learning_rate, &params.shapes());
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let tape = Tape::new();
        let (gcn, centroids) = leaf_vars(&tape, &params);
        let hs: Vec<Var<'_>> = (0..views)
            .map(|r| project(encode(&tape, x, &norms[r], &gcn), &gcn))
            .collect();
        let rs = (0..views)
            .map(|r| crate::community::assignment_matrix(&sim, hs[r], centroids[r]))
            .collect::<Result<Vec<_>, _>>()?;
        let states: Vec<CommunityState> = rs
            .iter()
            .map(|r| CommunityState::from_soft(r.value()))
            .collect();

        // Per-view objectives, reused across the pairs that touch the view.
        let decas: Vec<Var<'_>> = (0..views)
            .map(|r| deca_loss(rs[r], &raws[r], states[r].hard(), cfg.lambda_w))
            .collect();

        let mut l_node_sum: Option<Var<'_>> = None;
        let mut l_deca_sum: Option<Var<'_>> = None;
        let mut l_com_sum: Option<Var<'_>> = None;
        fn add_to<'t>(slot: &mut Option<Var<'t>>, term: Var<'t>) {
            *slot = Some(match slot.take() {
                Some(acc) => acc.add(term),
                None => term,
            });
        }
        for i in 0..views {
            for j in (i + 1)..views {
                if cfg.terms.node {
                    add_to(&mut l_node_sum, node_contrast_loss(&sim, hs[i], hs[j])?);
                }
                if cfg.terms.deca {
                    add_to(&mut l_deca_sum, decas[i].add(decas[j]).scale(0.5));
                }
                if cfg.terms.com {
                    add_to(
                        &mut l_com_sum,
                        community_contrast(
                            &sim,
                            hs[i],
                            hs[j],
                            centroids[i],
                            centroids[j],
                            cfg.gamma,
                        )?,
                    );
                }
            }
        }
        let losses = EpochLosses {
            l_node: l_node_sum,
            l_deca: l_deca_sum,
            l_com: l_com_sum,
        };
        let a = cfg
            .alpha_hold
            .unwrap_or_else(|| alpha(epoch as f64, cfg.eta));
        let total = combine_terms(&tape, &losses, a);

        let hards: Vec<&[usize]> = states.iter().map(|s| s.hard()).collect();
        let diagnostics = EpochDiagnostics {
            ed: (0..views)
                .map(|r| mean(&edge_densities(&raws[r], states[r].hard(), k)))
                .collect(),
            ch: class_entropy_or_none(mg.labels(), &hards, k),
        };
        let record = finish_epoch(FinishEpoch {
            tape: &tape,
            total,
            losses: &losses,
            alpha: a,
            epoch,
            adam: &mut adam,
            params: &mut params,
            gcn: &gcn,
            centroids: &centroids,
            start,
            diagnostics,
        })?;
        on_epoch(&record);
        log.push(record);
    }
    Ok((params, log))
}

struct EpochDiagnostics {
    ed: Vec<f64>,
    ch: Option<Vec<f64>>,
}

struct FinishEpoch<'a, 't> {
    tape: &'t Tape,
    total: Var<'t>,
    losses: &'a EpochLosses<'t>,
    alpha: f64,
    epoch: usize,
    adam: &'a mut AdamState,
    params: &'a mut ModelParams,
    gcn: &'a GcnVars<'t>,
    centroids: &'a [Var<'t>],
    start: Instant,
    diagnostics: EpochDiagnostics,
}

fn finish_epoch(step: FinishEpoch<'_, '_>) -> Result<EpochRecord, TrainError> {
    let item = |v: &Option<Var<'_>>| v.map_or(0.0, |v| v.item());
    let l_node = item(&step.losses.l_node);
    let l_deca = item(&step.losses.l_deca);
    let l_com = item(&step.losses.l_com);
    let total_val = step.total.item();
    if !total_val.is_finite() {
        return Err(TrainError::NonFinite {
            epoch: step.epoch,
            l_node,
            l_deca,
            l_com,
        });
    }

    step.tape.backward(step.total)?;
    let grads = gather_grads(step.gcn, step.centroids);
    step.adam.step(&mut step.params.param_refs_mut(), &grads);

    Ok(EpochRecord {
        epoch: step.epoch,
        l_node,
        l_deca,
        l_com,
        alpha: step.alpha,
        total: total_val,
        ed: step.diagnostics.ed,
        ch: step.diagnostics.ch,
        wall_ms: step.start.elapsed().as_secs_f64() * 1e3,
    })
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Pre-projection embedding of the clean (unaugmented) graph — the output
/// downstream evaluation consumes.
pub fn embed_view(x: &Matrix, edges: &[(usize, usize)], params: &ModelParams) -> Matrix {
    let norm = normalized_adjacency(x.rows(), edges);
    crate::encoder::encode_plain(x, &norm, &params.gcn)
}

/// Final soft/hard community assignment of a view on the clean graph
/// against that view's trained centroids, over projected representations
/// exactly as in training.
pub fn community_assignment(
    x: &Matrix,
    edges: &[(usize, usize)],
    params: &ModelParams,
    view: usize,
    cfg: &TrainConfig,
) -> Result<CommunityState, TrainError> {
    let sim = cfg.similarity_fn();
    let norm = normalized_adjacency(x.rows(), edges);
    let tape = Tape::new();
    let gcn = params.gcn.leaf_vars(&tape);
    let h = project(encode(&tape, x, &norm, &gcn), &gcn);
    let phi = tape.constant(params.centroids[view].clone());
    let r = crate::community::assignment_matrix(&sim, h, phi)?;
    Ok(CommunityState::from_soft(r.value()))
}
