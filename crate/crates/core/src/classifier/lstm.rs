//! Bidirectional LSTM baseline: learned embeddings, one layer per direction,
//! final states concatenated into a single-logit head.

use candle_core::{Tensor, D};

use super::layers::{sigmoid, Embedding, ForwardMode, Init, Linear, ParamStore, Source};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LstmDims {
    pub vocab_size: usize,
    pub embedding_dim: usize,
    pub hidden: usize,
    pub head_dropout: f64,
}

#[derive(Debug, Clone)]
struct Direction {
    input: Linear,
    recurrent: Linear,
}

#[derive(Debug, Clone)]
pub struct BiLstmClassifier {
    dims: LstmDims,
    pub(crate) embeddings: Embedding,
    forward_dir: Direction,
    backward_dir: Direction,
    head: Linear,
}

impl BiLstmClassifier {
    pub(crate) fn new(store: &mut ParamStore, source: &mut Source<'_>, dims: LstmDims) -> Result<Self> {
        let bound = 1.0 / (dims.hidden as f64).sqrt();
        let mut direction = |name: &str| -> Result<Direction> {
            Ok(Direction {
                input: Linear::with_init(
                    store,
                    source,
                    &format!("lstm.{name}.input"),
                    dims.embedding_dim,
                    4 * dims.hidden,
                    Init::Uniform(bound),
                )?,
                recurrent: Linear::with_init(
                    store,
                    source,
                    &format!("lstm.{name}.recurrent"),
                    dims.hidden,
                    4 * dims.hidden,
                    Init::Uniform(bound),
                )?,
            })
        };
        let forward_dir = direction("forward")?;
        let backward_dir = direction("backward")?;
        let embeddings = Embedding::new(
            store,
            source,
            "embeddings.word_embeddings.weight",
            dims.vocab_size,
            dims.embedding_dim,
        )?;
        let head = Linear::with_init(
            store,
            source,
            "classifier",
            2 * dims.hidden,
            1,
            Init::Uniform(1.0 / ((2 * dims.hidden) as f64).sqrt()),
        )?;
        Ok(Self {
            dims,
            embeddings,
            forward_dir,
            backward_dir,
            head,
        })
    }

    pub fn embed_words(&self, ids: &Tensor) -> Result<Tensor> {
        self.embeddings.forward(ids)
    }

    /// Runs one direction over `[batch, len, emb]`; padded steps (mask 0)
    /// carry the previous state through unchanged.
    fn run(&self, dir: &Direction, words: &Tensor, mask: &Tensor, reverse: bool) -> Result<Tensor> {
        let (batch, len, _) = words.dims3()?;
        let h_dim = self.dims.hidden;
        let projected = dir.input.forward(words)?;
        let zeros = Tensor::zeros((batch, h_dim), words.dtype(), words.device())?;
        let (mut h, mut c) = (zeros.clone(), zeros);
        let steps: Vec<usize> = if reverse {
            (0..len).rev().collect()
        } else {
            (0..len).collect()
        };
        for t in steps {
            let gates = (projected.narrow(1, t, 1)?.squeeze(1)? + dir.recurrent.forward(&h)?)?;
            let chunks = gates.chunk(4, D::Minus1)?;
            let i = sigmoid(&chunks[0])?;
            let f = sigmoid(&chunks[1])?;
            let g = chunks[2].tanh()?;
            let o = sigmoid(&chunks[3])?;
            let c_new = ((f * &c)? + (i * g)?)?;
            let h_new = (o * c_new.tanh()?)?;
            let m = mask.narrow(1, t, 1)?;
            let keep = m.affine(-1.0, 1.0)?;
            c = (c_new.broadcast_mul(&m)? + c.broadcast_mul(&keep)?)?;
            h = (h_new.broadcast_mul(&m)? + h.broadcast_mul(&keep)?)?;
        }
        Ok(h)
    }

    pub fn logits_from_embeddings(
        &self,
        words: &Tensor,
        mask: &Tensor,
        mode: &mut ForwardMode<'_>,
    ) -> Result<Tensor> {
        let fwd = self.run(&self.forward_dir, words, mask, false)?;
        let bwd = self.run(&self.backward_dir, words, mask, true)?;
        let both = Tensor::cat(&[fwd, bwd], 1)?;
        let both = mode.dropout(&both, self.dims.head_dropout)?;
        Ok(self.head.forward(&both)?.squeeze(1)?)
    }
}
