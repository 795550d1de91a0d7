//! From-scratch differentiable sequence labelers.
//!
//! Twelve variants share one stack shape: an optional two-stage CNN front
//! that halves time (and frequency) resolution, two recurrent layers
//! (LSTM or GRU cells, unidirectional or bidirectional), a 32-unit ReLU
//! projection, and a single sigmoid output per frame. SIMP variants halve
//! the recurrent cell count of their bidirectional counterparts.
//!
//! Everything is generic over `f32`/`f64`: training runs in single
//! precision, gradient checking in double precision.

mod adam;
mod cells;
mod checkpoint;
mod conv;
mod loss;
mod model;
mod train;

pub use adam::{adam_update, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use cells::{gru_backward, gru_forward, lstm_backward, lstm_forward, CellGrads, CellParams};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use conv::{conv_front_backward, conv_front_forward, ConvLayerParams};
pub use loss::{bce_loss, bce_output_grad};
pub use model::{count_parameters, forward, gradients, init_parameters, Model};
pub use train::{
    train_model, EpochRecord, PlateauSchedule, ScheduleAction, TrainSample, TrainingConfig,
    TrainingHistory,
};

use ndarray::{Array1, Array2, Array4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model input width (feature columns).
pub const INPUT_DIM: usize = 193;
/// Units in the penultimate projection layer.
pub const HEAD_UNITS: usize = 32;
/// Default recurrent cells per direction.
pub const DEFAULT_HIDDEN: usize = 128;
/// Default CNN front channel widths.
pub const DEFAULT_CNN_CHANNELS: [usize; 2] = [32, 64];

/// The eight base architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Lstm,
    Gru,
    BiLstm,
    BiGru,
    CnnLstm,
    CnnGru,
    CnnBiLstm,
    CnnBiGru,
}

/// Recurrent cell family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    Lstm,
    Gru,
}

impl CellKind {
    /// Stacked gate count: 4 for LSTM (i, f, g, o), 3 for GRU (z, r, h).
    pub fn gates(self) -> usize {
        match self {
            CellKind::Lstm => 4,
            CellKind::Gru => 3,
        }
    }
}

impl Variant {
    pub fn is_bidirectional(self) -> bool {
        matches!(
            self,
            Variant::BiLstm | Variant::BiGru | Variant::CnnBiLstm | Variant::CnnBiGru
        )
    }

    pub fn has_cnn(self) -> bool {
        matches!(
            self,
            Variant::CnnLstm | Variant::CnnGru | Variant::CnnBiLstm | Variant::CnnBiGru
        )
    }

    pub fn cell_kind(self) -> CellKind {
        match self {
            Variant::Lstm | Variant::BiLstm | Variant::CnnLstm | Variant::CnnBiLstm => {
                CellKind::Lstm
            }
            _ => CellKind::Gru,
        }
    }

    pub fn all() -> [Variant; 8] {
        [
            Variant::Lstm,
            Variant::Gru,
            Variant::BiLstm,
            Variant::BiGru,
            Variant::CnnLstm,
            Variant::CnnGru,
            Variant::CnnBiLstm,
            Variant::CnnBiGru,
        ]
    }

    fn base_name(self) -> &'static str {
        match self {
            Variant::Lstm => "lstm",
            Variant::Gru => "gru",
            Variant::BiLstm => "bilstm",
            Variant::BiGru => "bigru",
            Variant::CnnLstm => "cnn_lstm",
            Variant::CnnGru => "cnn_gru",
            Variant::CnnBiLstm => "cnn_bilstm",
            Variant::CnnBiGru => "cnn_bigru",
        }
    }
}

/// One of the twelve benchmark configurations (8 base + 4 SIMP).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    /// Halve the recurrent cell count (defined for bidirectional variants).
    pub simp: bool,
    /// Recurrent cells per direction.
    pub hidden_size: usize,
    /// CNN front channel widths; empty for non-CNN variants.
    pub cnn_channels: Vec<usize>,
    pub seed: u64,
}

impl ModelConfig {
    /// The benchmark-standard configuration for a variant.
    pub fn standard(variant: Variant, simp: bool) -> ModelConfig {
        ModelConfig {
            variant,
            simp,
            hidden_size: if simp { DEFAULT_HIDDEN / 2 } else { DEFAULT_HIDDEN },
            cnn_channels: if variant.has_cnn() {
                DEFAULT_CNN_CHANNELS.to_vec()
            } else {
                Vec::new()
            },
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.simp && !self.variant.is_bidirectional() {
            return Err(Error::Config(
                "SIMP variants exist only for bidirectional models".into(),
            ));
        }
        if self.hidden_size == 0 {
            return Err(Error::Config("hidden_size must be >= 1".into()));
        }
        if self.variant.has_cnn() && self.cnn_channels.is_empty() {
            return Err(Error::Config("CNN variants need channel widths".into()));
        }
        if !self.variant.has_cnn() && !self.cnn_channels.is_empty() {
            return Err(Error::Config("non-CNN variants must not set channels".into()));
        }
        Ok(())
    }

    /// Output frames per recording: 938, or 469 when a CNN front halves time.
    pub fn output_frames(&self) -> usize {
        if self.variant.has_cnn() {
            crate::dsp::N_FRAMES_COARSE
        } else {
            crate::dsp::N_FRAMES
        }
    }

    pub fn name(&self) -> String {
        if self.simp {
            format!("simp_{}", self.variant.base_name())
        } else {
            self.variant.base_name().to_string()
        }
    }

    pub fn from_name(name: &str) -> Result<ModelConfig> {
        let (simp, base) = match name.strip_prefix("simp_") {
            Some(rest) => (true, rest),
            None => (false, name),
        };
        let variant = Variant::all()
            .into_iter()
            .find(|v| v.base_name() == base)
            .ok_or_else(|| Error::Config(format!("unknown model name {name:?}")))?;
        let cfg = ModelConfig::standard(variant, simp);
        cfg.validate()?;
        Ok(cfg)
    }

    /// All twelve benchmark configurations in report order.
    pub fn all_standard() -> Vec<ModelConfig> {
        let mut out: Vec<ModelConfig> =
            Variant::all().into_iter().map(|v| ModelConfig::standard(v, false)).collect();
        for v in [Variant::BiLstm, Variant::BiGru, Variant::CnnBiLstm, Variant::CnnBiGru] {
            out.push(ModelConfig::standard(v, true));
        }
        out
    }
}

/// Trainable-parameter counts reported for the twelve variants, used as
/// reference columns in the parameter report.
pub const REFERENCE_PARAMETER_COUNTS: [(&str, usize); 12] = [
    ("lstm", 300_609),
    ("gru", 227_265),
    ("bilstm", 732_225),
    ("bigru", 552_769),
    ("cnn_lstm", 3_448_513),
    ("cnn_gru", 2_605_249),
    ("cnn_bilstm", 6_959_809),
    ("cnn_bigru", 5_240_513),
    ("simp_bilstm", 235_073),
    ("simp_bigru", 178_113),
    ("simp_cnn_bilstm", 3_382_977),
    ("simp_cnn_bigru", 2_556_097),
];

pub fn reference_parameter_count(name: &str) -> Option<usize> {
    REFERENCE_PARAMETER_COUNTS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|&(_, c)| c)
}

/// Dense layer activations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Sigmoid,
}

/// Weights of a dense (per-frame) layer.
#[derive(Debug, Clone)]
pub struct DenseParams<F> {
    /// (units, inputs)
    pub w: Array2<F>,
    pub b: Array1<F>,
    pub activation: Activation,
}

/// Weights of one recurrent layer: a forward cell and, when bidirectional,
/// a backward cell of identical shape.
#[derive(Debug, Clone)]
pub struct RecurrentParams<F> {
    pub kind: CellKind,
    pub fwd: CellParams<F>,
    pub bwd: Option<CellParams<F>>,
}

impl<F> RecurrentParams<F> {
    pub fn hidden(&self) -> usize
    where
        F: Copy,
    {
        self.fwd.w_h.ncols()
    }
}

/// One layer's weights. The parameter set doubles as the gradient
/// container: gradients share the exact tensor structure.
#[derive(Debug, Clone)]
pub enum LayerParams<F> {
    /// The CNN front: 3×3 same-padded convolutions with a 2×2 ceil
    /// max-pool after the first, ReLU throughout.
    Conv(Vec<ConvLayerParams<F>>),
    Recurrent(RecurrentParams<F>),
    Dense(DenseParams<F>),
}

/// All weights of one model, in layer order.
#[derive(Debug, Clone)]
pub struct ParameterSet<F> {
    pub layers: Vec<LayerParams<F>>,
}

/// A named view of every tensor, used for counting, Adam state, checkpoints,
/// and the per-layer report breakdown.
pub struct TensorRef<'a, F> {
    pub name: String,
    pub view: ndarray::ArrayViewD<'a, F>,
}

impl<F: ndarray::NdFloat> ParameterSet<F> {
    pub fn tensors(&self) -> Vec<TensorRef<'_, F>> {
        let mut out = Vec::new();
        for (li, layer) in self.layers.iter().enumerate() {
            let push = |out: &mut Vec<TensorRef<'_, F>>, name: String, view: ndarray::ArrayViewD<'_, F>| {
                out.push(TensorRef { name, view });
            };
            match layer {
                LayerParams::Conv(convs) => {
                    for (ci, c) in convs.iter().enumerate() {
                        push(&mut out, format!("layer{li}.conv{ci}.kernels"), c.kernels.view().into_dyn());
                        push(&mut out, format!("layer{li}.conv{ci}.bias"), c.bias.view().into_dyn());
                    }
                }
                LayerParams::Recurrent(rec) => {
                    for (dir, cell) in [("fwd", Some(&rec.fwd)), ("bwd", rec.bwd.as_ref())] {
                        if let Some(cell) = cell {
                            push(&mut out, format!("layer{li}.{dir}.w_x"), cell.w_x.view().into_dyn());
                            push(&mut out, format!("layer{li}.{dir}.w_h"), cell.w_h.view().into_dyn());
                            push(&mut out, format!("layer{li}.{dir}.b_x"), cell.b_x.view().into_dyn());
                            if let Some(b_h) = &cell.b_h {
                                push(&mut out, format!("layer{li}.{dir}.b_h"), b_h.view().into_dyn());
                            }
                        }
                    }
                }
                LayerParams::Dense(d) => {
                    push(&mut out, format!("layer{li}.dense.w"), d.w.view().into_dyn());
                    push(&mut out, format!("layer{li}.dense.b"), d.b.view().into_dyn());
                }
            }
        }
        out
    }

    /// Visit every tensor mutably, in the same order as [`Self::tensors`].
    pub fn for_each_tensor_mut(&mut self, mut f: impl FnMut(ndarray::ArrayViewMutD<'_, F>)) {
        for layer in &mut self.layers {
            match layer {
                LayerParams::Conv(convs) => {
                    for c in convs {
                        f(c.kernels.view_mut().into_dyn());
                        f(c.bias.view_mut().into_dyn());
                    }
                }
                LayerParams::Recurrent(rec) => {
                    let mut cells: Vec<&mut CellParams<F>> = vec![&mut rec.fwd];
                    if let Some(bwd) = rec.bwd.as_mut() {
                        cells.push(bwd);
                    }
                    for cell in cells {
                        f(cell.w_x.view_mut().into_dyn());
                        f(cell.w_h.view_mut().into_dyn());
                        f(cell.b_x.view_mut().into_dyn());
                        if let Some(b_h) = cell.b_h.as_mut() {
                            f(b_h.view_mut().into_dyn());
                        }
                    }
                }
                LayerParams::Dense(d) => {
                    f(d.w.view_mut().into_dyn());
                    f(d.b.view_mut().into_dyn());
                }
            }
        }
    }

    /// Total trainable element count.
    pub fn count(&self) -> usize {
        self.tensors().iter().map(|t| t.view.len()).sum()
    }

    /// A structurally identical set with zeroed tensors.
    pub fn zeros_like(&self) -> ParameterSet<F> {
        let mut out = self.clone();
        out.for_each_tensor_mut(|mut v| v.fill(F::zero()));
        out
    }

    /// Element counts per layer, for the parameter report.
    pub fn layer_breakdown(&self) -> Vec<(String, usize)> {
        self.tensors().into_iter().map(|t| (t.name, t.view.len())).collect()
    }

    /// Accumulate `other` scaled by `alpha` into `self` (same structure).
    pub fn axpy(&mut self, alpha: F, other: &ParameterSet<F>) {
        let views: Vec<ndarray::ArrayD<F>> =
            other.tensors().into_iter().map(|t| t.view.to_owned()).collect();
        let mut idx = 0;
        self.for_each_tensor_mut(|mut v| {
            v.scaled_add(alpha, &views[idx]);
            idx += 1;
        });
    }

    /// Cast every tensor (f32 <-> f64 bridges for oracle tests).
    pub fn cast<G: ndarray::NdFloat>(&self) -> ParameterSet<G> {
        let convert1 = |a: &Array1<F>| a.mapv(|x| G::from(x).unwrap());
        let convert2 = |a: &Array2<F>| a.mapv(|x| G::from(x).unwrap());
        let convert4 = |a: &Array4<F>| a.mapv(|x| G::from(x).unwrap());
        let layers = self
            .layers
            .iter()
            .map(|layer| match layer {
                LayerParams::Conv(convs) => LayerParams::Conv(
                    convs
                        .iter()
                        .map(|c| ConvLayerParams {
                            kernels: convert4(&c.kernels),
                            bias: convert1(&c.bias),
                        })
                        .collect(),
                ),
                LayerParams::Recurrent(rec) => {
                    let cell = |c: &CellParams<F>| CellParams {
                        w_x: convert2(&c.w_x),
                        w_h: convert2(&c.w_h),
                        b_x: convert1(&c.b_x),
                        b_h: c.b_h.as_ref().map(convert1),
                    };
                    LayerParams::Recurrent(RecurrentParams {
                        kind: rec.kind,
                        fwd: cell(&rec.fwd),
                        bwd: rec.bwd.as_ref().map(cell),
                    })
                }
                LayerParams::Dense(d) => LayerParams::Dense(DenseParams {
                    w: convert2(&d.w),
                    b: convert1(&d.b),
                    activation: d.activation,
                }),
            })
            .collect();
        ParameterSet { layers }
    }
}
