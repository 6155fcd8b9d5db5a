//! Separated hierarchical Transformer: property segments share one local
//! encoder stack, the circuit has its own, global layers mix both and an
//! autoregressive decoder emits the repaired circuit.

mod beam;
mod checkpoint;
mod net;
mod ops;
mod train;

use std::collections::BTreeMap;
use std::fmt::{self, Debug};
use std::iter::Sum;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::encoding::{self, EncodedCircuit, EncodedSpec, Vocab};

pub use beam::{beam_search, beam_search_with, Hypothesis};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use net::{attention, decode, encode, encode_local, loss, sample_gradients, token_accuracy, LocalRepresentations};
pub use ops::Mat;
pub use train::{lr_at, train, train_params, Adam, TrainConfig, TrainReport};

/// Floating point type the model runs in.
pub trait Scalar:
    num_traits::Float + num_traits::NumAssign + Sum + Debug + Default + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).unwrap()
    }

    fn f64(self) -> f64 {
        <f64 as num_traits::NumCast>::from(self).unwrap()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("input exceeds model limits: {0}")]
    Limits(String),
    #[error("non-finite loss at step {step}")]
    Diverged { step: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub d_model: usize,
    pub ffn_dim: usize,
    pub heads_local_spec: usize,
    pub heads_local_circuit: usize,
    pub heads_global: usize,
    pub heads_decoder: usize,
    pub layers_local_spec: usize,
    pub layers_local_circuit: usize,
    pub layers_global: usize,
    pub layers_decoder: usize,
    pub dropout: f64,
    pub max_segments: usize,
    pub max_segment_len: usize,
    pub max_circuit_len: usize,
    pub vocab_size: usize,
    pub tree_depth: usize,
    /// `false` runs the circuit through the property stack as well, the
    /// shared baseline the separated model is compared with.
    pub separated: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_model: 256,
            ffn_dim: 1024,
            heads_local_spec: 4,
            heads_local_circuit: 4,
            heads_global: 4,
            heads_decoder: 4,
            layers_local_spec: 4,
            layers_local_circuit: 4,
            layers_global: 4,
            layers_decoder: 8,
            dropout: 0.1,
            max_segments: encoding::MAX_SEGMENTS,
            max_segment_len: encoding::MAX_SEGMENT_LEN,
            max_circuit_len: 256,
            vocab_size: Vocab::standard().len(),
            tree_depth: encoding::DEFAULT_TREE_DEPTH,
            separated: true,
        }
    }
}

impl ModelConfig {
    /// The scaled-down shape used for CPU experiments.
    pub fn small() -> Self {
        ModelConfig {
            d_model: 64,
            ffn_dim: 128,
            layers_local_spec: 2,
            layers_local_circuit: 2,
            layers_global: 2,
            layers_decoder: 2,
            ..ModelConfig::default()
        }
    }

    /// Tiny shape for gradient and invariance tests.
    pub fn micro() -> Self {
        ModelConfig {
            d_model: 8,
            ffn_dim: 16,
            heads_local_spec: 2,
            heads_local_circuit: 2,
            heads_global: 2,
            heads_decoder: 2,
            layers_local_spec: 1,
            layers_local_circuit: 1,
            layers_global: 1,
            layers_decoder: 1,
            dropout: 0.0,
            tree_depth: 8,
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Config(m));
        for (name, v) in self.fields_usize() {
            if v == 0 && !name.starts_with("layers") {
                return bad(format!("{name} must be positive"));
            }
        }
        for h in [self.heads_local_spec, self.heads_local_circuit, self.heads_global, self.heads_decoder] {
            if self.d_model % h != 0 {
                return bad(format!("d_model {} not divisible by {h} heads", self.d_model));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)".into());
        }
        Ok(())
    }

    fn fields_usize(&self) -> [(&'static str, usize); 15] {
        [
            ("d_model", self.d_model),
            ("ffn_dim", self.ffn_dim),
            ("heads_local_spec", self.heads_local_spec),
            ("heads_local_circuit", self.heads_local_circuit),
            ("heads_global", self.heads_global),
            ("heads_decoder", self.heads_decoder),
            ("layers_local_spec", self.layers_local_spec),
            ("layers_local_circuit", self.layers_local_circuit),
            ("layers_global", self.layers_global),
            ("layers_decoder", self.layers_decoder),
            ("max_segments", self.max_segments),
            ("max_segment_len", self.max_segment_len),
            ("max_circuit_len", self.max_circuit_len),
            ("vocab_size", self.vocab_size),
            ("tree_depth", self.tree_depth),
        ]
    }

    /// `key=value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields_usize() {
            out.push_str(&format!("{k}={v}\n"));
        }
        out.push_str(&format!("dropout={}\nseparated={}\n", self.dropout, self.separated));
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let mut map = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| ModelError::Config(format!("bad line {line:?}")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        fn get<T: FromStr>(map: &BTreeMap<String, String>, k: &str) -> Result<T, ModelError> {
            map.get(k)
                .ok_or_else(|| ModelError::Config(format!("missing {k}")))?
                .parse()
                .map_err(|_| ModelError::Config(format!("bad value for {k}")))
        }
        let c = ModelConfig {
            d_model: get(&map, "d_model")?,
            ffn_dim: get(&map, "ffn_dim")?,
            heads_local_spec: get(&map, "heads_local_spec")?,
            heads_local_circuit: get(&map, "heads_local_circuit")?,
            heads_global: get(&map, "heads_global")?,
            heads_decoder: get(&map, "heads_decoder")?,
            layers_local_spec: get(&map, "layers_local_spec")?,
            layers_local_circuit: get(&map, "layers_local_circuit")?,
            layers_global: get(&map, "layers_global")?,
            layers_decoder: get(&map, "layers_decoder")?,
            dropout: get(&map, "dropout")?,
            max_segments: get(&map, "max_segments")?,
            max_segment_len: get(&map, "max_segment_len")?,
            max_circuit_len: get(&map, "max_circuit_len")?,
            vocab_size: get(&map, "vocab_size")?,
            tree_depth: get(&map, "tree_depth")?,
            separated: get(&map, "separated")?,
        };
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Lin {
    pub w: usize,
    pub b: usize,
    pub n_in: usize,
    pub n_out: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Norm {
    pub gain: usize,
    pub bias: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Attn {
    pub q: Lin,
    pub k: Lin,
    pub v: Lin,
    pub o: Lin,
    pub heads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct EncLayer {
    pub ln1: Norm,
    pub attn: Attn,
    pub ln2: Norm,
    pub ff1: Lin,
    pub ff2: Lin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct DecLayer {
    pub ln1: Norm,
    pub self_attn: Attn,
    pub ln2: Norm,
    pub cross: Attn,
    pub ln3: Norm,
    pub ff1: Lin,
    pub ff2: Lin,
}

/// Tensor indices of every component.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub embed_spec: usize,
    pub embed_circuit: usize,
    pub embed_target: usize,
    pub embed_kind: usize,
    pub spec_local: Vec<EncLayer>,
    pub circuit_local: Vec<EncLayer>,
    pub global: Vec<EncLayer>,
    pub encoder_norm: Norm,
    pub decoder: Vec<DecLayer>,
    pub decoder_norm: Norm,
    pub output: Lin,
}

/// Kind of initial values a tensor receives.
#[derive(Clone, Copy)]
enum Init {
    Embedding,
    Xavier { fan_in: usize, fan_out: usize },
    Zeros,
    Ones,
}

struct Builder {
    shapes: Vec<(String, Vec<usize>, Init)>,
}

impl Builder {
    fn add(&mut self, name: String, shape: Vec<usize>, init: Init) -> usize {
        self.shapes.push((name, shape, init));
        self.shapes.len() - 1
    }

    fn lin(&mut self, name: &str, n_in: usize, n_out: usize) -> Lin {
        let w = self.add(format!("{name}.weight"), vec![n_in, n_out], Init::Xavier { fan_in: n_in, fan_out: n_out });
        let b = self.add(format!("{name}.bias"), vec![n_out], Init::Zeros);
        Lin { w, b, n_in, n_out }
    }

    fn norm(&mut self, name: &str, d: usize) -> Norm {
        let gain = self.add(format!("{name}.gain"), vec![d], Init::Ones);
        let bias = self.add(format!("{name}.bias"), vec![d], Init::Zeros);
        Norm { gain, bias }
    }

    fn attn(&mut self, name: &str, d: usize, heads: usize) -> Attn {
        Attn {
            q: self.lin(&format!("{name}.q"), d, d),
            k: self.lin(&format!("{name}.k"), d, d),
            v: self.lin(&format!("{name}.v"), d, d),
            o: self.lin(&format!("{name}.o"), d, d),
            heads,
        }
    }

    fn enc_stack(&mut self, name: &str, c: &ModelConfig, layers: usize, heads: usize) -> Vec<EncLayer> {
        (0..layers)
            .map(|l| {
                let p = format!("{name}.{l}");
                EncLayer {
                    ln1: self.norm(&format!("{p}.ln1"), c.d_model),
                    attn: self.attn(&format!("{p}.attn"), c.d_model, heads),
                    ln2: self.norm(&format!("{p}.ln2"), c.d_model),
                    ff1: self.lin(&format!("{p}.ff1"), c.d_model, c.ffn_dim),
                    ff2: self.lin(&format!("{p}.ff2"), c.ffn_dim, c.d_model),
                }
            })
            .collect()
    }
}

fn build_layout(c: &ModelConfig) -> (Layout, Vec<(String, Vec<usize>, Init)>) {
    let mut b = Builder { shapes: Vec::new() };
    let (v, d) = (c.vocab_size, c.d_model);
    let embed_spec = b.add("embed.spec".into(), vec![v, d], Init::Embedding);
    let embed_circuit = b.add("embed.circuit".into(), vec![v, d], Init::Embedding);
    let embed_target = b.add("embed.target".into(), vec![v, d], Init::Embedding);
    let embed_kind = b.add("embed.kind".into(), vec![2, d], Init::Embedding);
    let spec_local = b.enc_stack("spec_local", c, c.layers_local_spec, c.heads_local_spec);
    let circuit_local = if c.separated {
        b.enc_stack("circuit_local", c, c.layers_local_circuit, c.heads_local_circuit)
    } else {
        spec_local.clone()
    };
    let global = b.enc_stack("global", c, c.layers_global, c.heads_global);
    let encoder_norm = b.norm("encoder_norm", d);
    let decoder = (0..c.layers_decoder)
        .map(|l| {
            let p = format!("decoder.{l}");
            DecLayer {
                ln1: b.norm(&format!("{p}.ln1"), d),
                self_attn: b.attn(&format!("{p}.self_attn"), d, c.heads_decoder),
                ln2: b.norm(&format!("{p}.ln2"), d),
                cross: b.attn(&format!("{p}.cross_attn"), d, c.heads_decoder),
                ln3: b.norm(&format!("{p}.ln3"), d),
                ff1: b.lin(&format!("{p}.ff1"), d, c.ffn_dim),
                ff2: b.lin(&format!("{p}.ff2"), c.ffn_dim, d),
            }
        })
        .collect();
    let decoder_norm = b.norm("decoder_norm", d);
    let output = b.lin("output", d, v);
    let layout = Layout {
        embed_spec,
        embed_circuit,
        embed_target,
        embed_kind,
        spec_local,
        circuit_local,
        global,
        encoder_norm,
        decoder,
        decoder_norm,
        output,
    };
    (layout, b.shapes)
}

/// Number of learned scalars of a model with this configuration.
pub fn param_count(config: &ModelConfig) -> usize {
    build_layout(config).1.iter().map(|(_, s, _)| s.iter().product::<usize>()).sum()
}

/// All learned tensors of a model, addressable by name.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub config: ModelConfig,
    pub tensors: Vec<Tensor<T>>,
    pub(crate) layout: Layout,
}

impl<T: Scalar> ModelParams<T> {
    /// Freshly initialized parameters: Xavier-uniform projections,
    /// unit-variance embeddings, unit gains and zero biases.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = crate::rng::seeded(seed);
        let (layout, shapes) = build_layout(config);
        let tensors = shapes
            .into_iter()
            .map(|(name, shape, init)| {
                let n: usize = shape.iter().product();
                let data = match init {
                    Init::Zeros => vec![T::zero(); n],
                    Init::Ones => vec![T::one(); n],
                    Init::Embedding => {
                        let a = 3f64.sqrt();
                        (0..n).map(|_| T::of(rng.gen_range(-a..a))).collect()
                    }
                    Init::Xavier { fan_in, fan_out } => {
                        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                        (0..n).map(|_| T::of(rng.gen_range(-a..a))).collect()
                    }
                };
                Tensor { name, shape, data }
            })
            .collect();
        Ok(ModelParams { config: config.clone(), tensors, layout })
    }

    /// Parameters with the same values in another float type.
    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            config: self.config.clone(),
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                    data: t.data.iter().map(|x| U::of(x.f64())).collect(),
                })
                .collect(),
            layout: self.layout.clone(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }

    pub fn num_params(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    /// Zero-valued tensors shaped like the parameters.
    pub fn zeros_like(&self) -> Vec<Vec<T>> {
        self.tensors.iter().map(|t| vec![T::zero(); t.data.len()]).collect()
    }

    pub(crate) fn t(&self, idx: usize) -> &[T] {
        &self.tensors[idx].data
    }

    pub(crate) fn from_tensors(config: ModelConfig, tensors: Vec<Tensor<T>>) -> Result<Self, ModelError> {
        config.validate()?;
        let (layout, shapes) = build_layout(&config);
        if shapes.len() != tensors.len() {
            return Err(ModelError::Checkpoint(format!("expected {} tensors, found {}", shapes.len(), tensors.len())));
        }
        for ((name, shape, _), t) in shapes.iter().zip(&tensors) {
            if *name != t.name || *shape != t.shape || t.data.len() != shape.iter().product::<usize>() {
                return Err(ModelError::Checkpoint(format!("tensor {} does not match {name} {shape:?}", t.name)));
            }
        }
        Ok(ModelParams { config, tensors, layout })
    }
}

/// One training example: encoder inputs and the target body tokens, ending
/// with EOS.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub spec: EncodedSpec,
    pub circuit: EncodedCircuit,
    pub target: Vec<usize>,
}

impl TrainSample {
    /// Decoder input: SOS followed by all target tokens but the last.
    pub fn decoder_input(&self) -> Vec<usize> {
        let mut v = vec![encoding::SOS];
        v.extend_from_slice(&self.target[..self.target.len().saturating_sub(1)]);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_grow_with_layers_and_separation() {
        let c = ModelConfig::default();
        let more = ModelConfig { layers_local_circuit: 8, ..c.clone() };
        assert!(param_count(&more) > param_count(&c));
        let shared = ModelConfig { separated: false, ..c.clone() };
        assert!(param_count(&c) > param_count(&shared));
    }

    #[test]
    fn micro_count_by_hand() {
        let c = ModelConfig::micro();
        let (v, d, f) = (90, 8, 16);
        let lin = |i: usize, o: usize| i * o + o;
        let norm = 2 * d;
        let attn = 4 * lin(d, d);
        let enc = 2 * norm + attn + lin(d, f) + lin(f, d);
        let dec = 3 * norm + 2 * attn + lin(d, f) + lin(f, d);
        let expect = 3 * v * d + 2 * d + 3 * enc + norm + dec + norm + lin(d, v);
        assert_eq!(param_count(&c), expect);
        assert_eq!(ModelParams::<f32>::init(&c, 0).unwrap().num_params(), expect);
    }

    #[test]
    fn config_text_round_trip() {
        let c = ModelConfig::small();
        assert_eq!(ModelConfig::from_text(&c.to_text()).unwrap(), c);
        let bad = ModelConfig { heads_global: 3, ..c };
        assert!(bad.validate().is_err());
    }
}
