//! The five experiment architectures.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{PORTRAIT_DIM, TEXT_DIM, TRAD_DIM};
use crate::nn::{Activation, Checkpoint, LayerSpec, Mlp, MlpSpec, Mode, Tensor};

const DROPOUT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelVariant {
    Full,
    SynopsisOnly,
    CharDescOnly,
    PortraitOnly,
    Traditional,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 5] = [
        ModelVariant::Full,
        ModelVariant::SynopsisOnly,
        ModelVariant::CharDescOnly,
        ModelVariant::PortraitOnly,
        ModelVariant::Traditional,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Full => "full",
            ModelVariant::SynopsisOnly => "synopsis",
            ModelVariant::CharDescOnly => "char-desc",
            ModelVariant::PortraitOnly => "portrait",
            ModelVariant::Traditional => "traditional",
        }
    }

    /// Widths of the model inputs, in the order [`ModelGraph::forward`] expects them.
    pub fn input_dims(self) -> Vec<usize> {
        match self {
            ModelVariant::Full => vec![TEXT_DIM, TEXT_DIM, PORTRAIT_DIM],
            ModelVariant::SynopsisOnly | ModelVariant::CharDescOnly => vec![TEXT_DIM],
            ModelVariant::PortraitOnly => vec![PORTRAIT_DIM],
            ModelVariant::Traditional => vec![TRAD_DIM],
        }
    }

    pub fn default_epochs(self) -> usize {
        match self {
            ModelVariant::Traditional => 30,
            _ => 5,
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown variant {s:?}; expected one of full, synopsis, char-desc, portrait, traditional"
                ))
            })
    }
}

fn linear(i: usize, o: usize, a: Activation) -> LayerSpec {
    LayerSpec::linear(i, o, a)
}

/// Character branch: concatenated description and portrait embeddings to 768.
pub fn character_mlp_spec() -> MlpSpec {
    MlpSpec {
        layers: vec![
            LayerSpec::dropout(DROPOUT),
            linear(TEXT_DIM + PORTRAIT_DIM, 768, Activation::Tanh),
            LayerSpec::dropout(DROPOUT),
            linear(768, 768, Activation::Tanh),
        ],
    }
}

/// Regression head reducing `input_dim` to one value. The final activation is a
/// sigmoid: a softmax over a single logit is constant.
fn head_layers(input_dim: usize) -> Vec<LayerSpec> {
    vec![
        linear(input_dim, 768, Activation::Tanh),
        linear(768, 384, Activation::Tanh),
        linear(384, 192, Activation::Tanh),
        linear(192, 96, Activation::Tanh),
        linear(96, 48, Activation::Relu),
        linear(48, 24, Activation::Relu),
        linear(24, 12, Activation::Relu),
        linear(12, 6, Activation::Relu),
        linear(6, 3, Activation::Relu),
        linear(3, 1, Activation::Sigmoid),
    ]
}

/// Large head over synopsis and character-branch outputs.
pub fn head_mlp_spec() -> MlpSpec {
    let mut layers = vec![LayerSpec::dropout(DROPOUT)];
    layers.extend(head_layers(2 * TEXT_DIM));
    MlpSpec { layers }
}

/// The large head without its leading dropout, fed a single 768-wide text embedding.
pub fn single_text_mlp_spec() -> MlpSpec {
    MlpSpec {
        layers: head_layers(TEXT_DIM),
    }
}

/// Character-branch layout on portraits alone, followed by two regression layers.
pub fn portrait_mlp_spec() -> MlpSpec {
    MlpSpec {
        layers: vec![
            LayerSpec::dropout(DROPOUT),
            linear(PORTRAIT_DIM, 768, Activation::Tanh),
            LayerSpec::dropout(DROPOUT),
            linear(768, 768, Activation::Tanh),
            linear(768, 384, Activation::Relu),
            linear(384, 1, Activation::Sigmoid),
        ],
    }
}

pub fn traditional_mlp_spec() -> MlpSpec {
    MlpSpec {
        layers: vec![
            linear(TRAD_DIM, 1000, Activation::Tanh),
            linear(1000, 500, Activation::Tanh),
            linear(500, 250, Activation::Tanh),
            linear(250, 100, Activation::Tanh),
            linear(100, 1, Activation::Sigmoid),
        ],
    }
}

/// Specs of `(branch, head)` for a variant; only `Full` has a branch.
pub fn variant_specs(variant: ModelVariant) -> (Option<MlpSpec>, MlpSpec) {
    match variant {
        ModelVariant::Full => (Some(character_mlp_spec()), head_mlp_spec()),
        ModelVariant::SynopsisOnly | ModelVariant::CharDescOnly => (None, single_text_mlp_spec()),
        ModelVariant::PortraitOnly => (None, portrait_mlp_spec()),
        ModelVariant::Traditional => (None, traditional_mlp_spec()),
    }
}

/// An assembled network for one variant.
#[derive(Debug, Clone)]
pub struct ModelGraph {
    variant: ModelVariant,
    input_dims: Vec<usize>,
    branch: Option<Mlp>,
    head: Mlp,
}

/// Builds a variant with parameters drawn from `init_seed`.
pub fn build_model(variant: ModelVariant, init_seed: u64) -> Result<ModelGraph> {
    let (branch_spec, head_spec) = variant_specs(variant);
    ModelGraph::from_specs(
        variant,
        variant.input_dims(),
        branch_spec.as_ref(),
        &head_spec,
        init_seed,
    )
}

impl ModelGraph {
    /// Builds a graph with custom layer stacks, e.g. narrowed copies for testing.
    ///
    /// With a branch, `input_dims` is `[synopsis, char_desc, portrait]`: the branch
    /// reads `char_desc ⊕ portrait` and the head reads `synopsis ⊕ branch output`.
    pub fn from_specs(
        variant: ModelVariant,
        input_dims: Vec<usize>,
        branch: Option<&MlpSpec>,
        head: &MlpSpec,
        init_seed: u64,
    ) -> Result<Self> {
        let (head_in, head_out) = head.validate()?;
        if head_out != 1 {
            return Err(Error::InvalidSpec("head must output one value".into()));
        }
        match (branch, variant) {
            (Some(b), ModelVariant::Full) => {
                let (b_in, b_out) = b.validate()?;
                if input_dims.len() != 3
                    || b_in != input_dims[1] + input_dims[2]
                    || head_in != input_dims[0] + b_out
                {
                    return Err(Error::InvalidSpec(format!(
                        "inputs {input_dims:?} do not chain into branch {b_in}->{b_out} and head {head_in}"
                    )));
                }
            }
            (None, ModelVariant::Full) => {
                return Err(Error::InvalidSpec("full variant needs a branch".into()))
            }
            (Some(_), _) => {
                return Err(Error::InvalidSpec(
                    "only the full variant has a branch".into(),
                ))
            }
            (None, _) => {
                if input_dims != [head_in] {
                    return Err(Error::InvalidSpec(format!(
                        "inputs {input_dims:?} do not match head input {head_in}"
                    )));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
        let branch = branch.map(|s| Mlp::init(s, &mut rng)).transpose()?;
        let head = Mlp::init(head, &mut rng)?;
        Ok(Self {
            variant,
            input_dims,
            branch,
            head,
        })
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    pub fn branch(&self) -> Option<&Mlp> {
        self.branch.as_ref()
    }

    pub fn head(&self) -> &Mlp {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut Mlp {
        &mut self.head
    }

    /// Widths of the inputs this graph expects.
    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn parameter_count(&self) -> usize {
        self.branch.as_ref().map_or(0, Mlp::parameter_count) + self.head.parameter_count()
    }

    /// Architecture text stored in checkpoints.
    pub fn descriptor(&self) -> String {
        let mut s = format!("variant={}\n", self.variant);
        if let Some(b) = &self.branch {
            s.push_str(&format!("branch={}\n", b.spec()));
        }
        s.push_str(&format!("head={}\n", self.head.spec()));
        s
    }

    fn check_inputs(&self, inputs: &[Tensor]) -> Result<()> {
        let got: Vec<usize> = inputs.iter().map(Tensor::cols).collect();
        if got != self.input_dims {
            return Err(Error::ShapeMismatch {
                op: "model inputs",
                lhs: got,
                rhs: self.input_dims.clone(),
            });
        }
        Ok(())
    }

    /// Training-capable forward pass; records activations for [`ModelGraph::backward`].
    pub fn forward(
        &mut self,
        inputs: &[Tensor],
        mode: Mode,
        rng: &mut dyn RngCore,
    ) -> Result<Tensor> {
        self.check_inputs(inputs)?;
        match &mut self.branch {
            Some(branch) => {
                let char_in = Tensor::concat_cols(&[&inputs[1], &inputs[2]])?;
                let h = branch.forward(&char_in, mode, rng)?;
                let head_in = Tensor::concat_cols(&[&inputs[0], &h])?;
                self.head.forward(&head_in, mode, rng)
            }
            None => self.head.forward(&inputs[0], mode, rng),
        }
    }

    /// Eval-mode prediction; does not touch recorded state.
    pub fn infer(&self, inputs: &[Tensor]) -> Result<Tensor> {
        self.check_inputs(inputs)?;
        match &self.branch {
            Some(branch) => {
                let char_in = Tensor::concat_cols(&[&inputs[1], &inputs[2]])?;
                let h = branch.infer(&char_in)?;
                self.head.infer(&Tensor::concat_cols(&[&inputs[0], &h])?)
            }
            None => self.head.infer(&inputs[0]),
        }
    }

    /// Accumulates parameter gradients and returns gradients for each input.
    pub fn backward(&mut self, grad_output: &Tensor) -> Result<Vec<Tensor>> {
        let g_head = self.head.backward(grad_output)?;
        match &mut self.branch {
            Some(branch) => {
                let dims = {
                    let b_out = branch.spec().output_dim();
                    vec![g_head.cols() - b_out, b_out]
                };
                let parts = g_head.split_cols(&dims)?;
                let g_char = branch.backward(&parts[1])?;
                let mut chars = g_char.split_cols(&self.input_dims[1..])?;
                let portrait = chars.pop().expect("two parts");
                let desc = chars.pop().expect("two parts");
                Ok(vec![parts[0].clone(), desc, portrait])
            }
            None => Ok(vec![g_head]),
        }
    }

    pub fn zero_grad(&mut self) {
        if let Some(b) = &mut self.branch {
            b.zero_grad();
        }
        self.head.zero_grad();
    }

    /// Parameter and gradient slots: branch first, then head.
    pub fn param_slots(&mut self) -> Vec<(&mut [f64], &[f64])> {
        let mut slots = match &mut self.branch {
            Some(b) => b.param_slots(),
            None => Vec::new(),
        };
        slots.extend(self.head.param_slots());
        slots
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut p = self
            .branch
            .as_ref()
            .map(Mlp::flat_params)
            .unwrap_or_default();
        p.extend(self.head.flat_params());
        p
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for m in self.branch.iter().chain(std::iter::once(&self.head)) {
            for g in m.grads() {
                out.extend_from_slice(g.weight());
                out.extend_from_slice(g.bias());
            }
        }
        out
    }

    pub fn load_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::ShapeMismatch {
                op: "load parameters",
                lhs: vec![self.parameter_count()],
                rhs: vec![params.len()],
            });
        }
        let used = match &mut self.branch {
            Some(b) => b.load_flat_params(params)?,
            None => 0,
        };
        self.head.load_flat_params(&params[used..])?;
        Ok(())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            descriptor: self.descriptor(),
            params: self.flat_params(),
        }
    }

    /// Restores a standard variant, checking the stored architecture matches it.
    pub fn from_checkpoint(checkpoint: &Checkpoint) -> Result<Self> {
        let variant_line = checkpoint
            .descriptor
            .lines()
            .next()
            .and_then(|l| l.strip_prefix("variant="))
            .ok_or_else(|| Error::SpecMismatch("descriptor lacks variant".into()))?;
        let variant: ModelVariant = variant_line
            .parse()
            .map_err(|_| Error::SpecMismatch(format!("unknown variant {variant_line:?}")))?;
        let mut model = build_model(variant, 0)?;
        if model.descriptor() != checkpoint.descriptor {
            return Err(Error::SpecMismatch(format!(
                "checkpoint architecture differs from the {variant} variant"
            )));
        }
        model.load_flat_params(&checkpoint.params).map_err(|_| {
            Error::SpecMismatch(format!(
                "expected {} parameters, found {}",
                model.parameter_count(),
                checkpoint.params.len()
            ))
        })?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_variant_shape() {
        let m = build_model(ModelVariant::Full, 0).unwrap();
        assert_eq!(m.input_dims(), &[768, 768, 49]);
        assert_eq!(m.head().spec().output_dim(), 1);
        let branch = m.branch().unwrap();
        assert_eq!(
            branch.parameter_count(),
            (817 * 768 + 768) + (768 * 768 + 768)
        );
        assert_eq!(m.head().spec().input_dim(), 1536);
    }

    #[test]
    fn traditional_first_layer() {
        let m = build_model(ModelVariant::Traditional, 0).unwrap();
        let first = &m.head().linears()[0];
        assert_eq!((first.in_dim(), first.out_dim()), (2250, 1000));
    }

    #[test]
    fn single_text_variants_drop_leading_dropout() {
        for v in [ModelVariant::SynopsisOnly, ModelVariant::CharDescOnly] {
            let m = build_model(v, 0).unwrap();
            assert!(matches!(
                m.head().spec().layers[0],
                LayerSpec::Linear { .. }
            ));
            let first = &m.head().linears()[0];
            assert_eq!((first.in_dim(), first.out_dim()), (768, 768));
            assert_eq!(m.head().linears().len(), 10);
        }
    }

    #[test]
    fn portrait_variant_layers() {
        let m = build_model(ModelVariant::PortraitOnly, 0).unwrap();
        let outs: Vec<usize> = m.head().linears().iter().map(|l| l.out_dim()).collect();
        assert_eq!(outs, vec![768, 768, 384, 1]);
        assert_eq!(m.input_dims(), &[49]);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in ModelVariant::ALL {
            assert_eq!(v.name().parse::<ModelVariant>().unwrap(), v);
            assert_eq!(
                build_model(v, 1)
                    .unwrap()
                    .descriptor()
                    .lines()
                    .next()
                    .unwrap(),
                format!("variant={v}")
            );
        }
        assert!("nope".parse::<ModelVariant>().is_err());
    }

    #[test]
    fn checkpoint_round_trip_and_mismatch() {
        let m = build_model(ModelVariant::PortraitOnly, 3).unwrap();
        let ck = m.to_checkpoint();
        let back = ModelGraph::from_checkpoint(&ck).unwrap();
        assert_eq!(back.flat_params(), m.flat_params());
        let mut wrong = ck.clone();
        wrong.descriptor = wrong.descriptor.replace("portrait", "synopsis");
        assert!(matches!(
            ModelGraph::from_checkpoint(&wrong),
            Err(Error::SpecMismatch(_))
        ));
        let mut short = ck;
        short.params.pop();
        assert!(matches!(
            ModelGraph::from_checkpoint(&short),
            Err(Error::SpecMismatch(_))
        ));
    }
}
