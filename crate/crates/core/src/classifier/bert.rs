//! Transformer encoder with the usual checkpoint parameter names, a tanh
//! pooler over the first position, and a single-logit linear head.

use candle_core::{Tensor, D};
use candle_nn::ops::softmax;
use serde::{Deserialize, Serialize};

use super::layers::{Embedding, ForwardMode, LayerNorm, Linear, ParamStore, Source};
use crate::error::Result;

const MASK_PENALTY: f64 = -1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderDims {
    pub vocab_size: usize,
    pub max_positions: usize,
    pub type_vocab_size: usize,
    pub hidden: usize,
    pub heads: usize,
    pub blocks: usize,
    pub intermediate: usize,
    pub hidden_dropout: f64,
    pub head_dropout: f64,
    pub layer_norm_eps: f64,
}

#[derive(Debug, Clone)]
struct Block {
    query: Linear,
    key: Linear,
    value: Linear,
    attn_out: Linear,
    attn_norm: LayerNorm,
    intermediate: Linear,
    output: Linear,
    out_norm: LayerNorm,
}

#[derive(Debug, Clone)]
pub struct BertClassifier {
    dims: EncoderDims,
    pub(crate) word_embeddings: Embedding,
    position_embeddings: Embedding,
    token_type_embeddings: Embedding,
    embed_norm: LayerNorm,
    blocks: Vec<Block>,
    pooler: Linear,
    head: Linear,
}

impl BertClassifier {
    /// Builds the encoder; the head always comes from `head_source` so a
    /// pretrained body can be paired with a freshly initialized head.
    pub(crate) fn new(
        store: &mut ParamStore,
        source: &mut Source<'_>,
        head_source: &mut Source<'_>,
        dims: EncoderDims,
    ) -> Result<Self> {
        let h = dims.hidden;
        let eps = dims.layer_norm_eps;
        let word_embeddings =
            Embedding::new(store, source, "embeddings.word_embeddings.weight", dims.vocab_size, h)?;
        let position_embeddings = Embedding::new(
            store,
            source,
            "embeddings.position_embeddings.weight",
            dims.max_positions,
            h,
        )?;
        let token_type_embeddings = Embedding::new(
            store,
            source,
            "embeddings.token_type_embeddings.weight",
            dims.type_vocab_size,
            h,
        )?;
        let embed_norm = LayerNorm::new(store, source, "embeddings.LayerNorm", h, eps)?;
        let mut blocks = Vec::with_capacity(dims.blocks);
        for i in 0..dims.blocks {
            let p = format!("encoder.layer.{i}");
            blocks.push(Block {
                query: Linear::new(store, source, &format!("{p}.attention.self.query"), h, h)?,
                key: Linear::new(store, source, &format!("{p}.attention.self.key"), h, h)?,
                value: Linear::new(store, source, &format!("{p}.attention.self.value"), h, h)?,
                attn_out: Linear::new(store, source, &format!("{p}.attention.output.dense"), h, h)?,
                attn_norm: LayerNorm::new(store, source, &format!("{p}.attention.output.LayerNorm"), h, eps)?,
                intermediate: Linear::new(
                    store,
                    source,
                    &format!("{p}.intermediate.dense"),
                    h,
                    dims.intermediate,
                )?,
                output: Linear::new(store, source, &format!("{p}.output.dense"), dims.intermediate, h)?,
                out_norm: LayerNorm::new(store, source, &format!("{p}.output.LayerNorm"), h, eps)?,
            });
        }
        let pooler = Linear::new(store, source, "pooler.dense", h, h)?;
        let head = Linear::new(store, head_source, "classifier", h, 1)?;
        Ok(Self {
            dims,
            word_embeddings,
            position_embeddings,
            token_type_embeddings,
            embed_norm,
            blocks,
            pooler,
            head,
        })
    }

    pub fn dims(&self) -> &EncoderDims {
        &self.dims
    }

    /// Word embeddings `[batch, len, hidden]` for ids `[batch, len]`.
    pub fn embed_words(&self, ids: &Tensor) -> Result<Tensor> {
        self.word_embeddings.forward(ids)
    }

    /// Logits `[batch]` from word embeddings `[batch, len, hidden]` and a
    /// `{0,1}` attention mask `[batch, len]` in the model dtype.
    pub fn logits_from_embeddings(
        &self,
        words: &Tensor,
        mask: &Tensor,
        mode: &mut ForwardMode<'_>,
    ) -> Result<Tensor> {
        let (batch, len, hidden) = words.dims3()?;
        let device = words.device();
        let positions = Tensor::arange(0u32, len as u32, device)?;
        let pos = self.position_embeddings.forward(&positions)?;
        let types = self.token_type_embeddings.row(0)?;
        let x = words.broadcast_add(&pos)?.broadcast_add(&types)?;
        let mut x = mode.dropout(&self.embed_norm.forward(&x)?, self.dims.hidden_dropout)?;

        // [batch, 1, 1, len] additive penalty on padded keys.
        let bias = mask
            .affine(-MASK_PENALTY, MASK_PENALTY)?
            .reshape((batch, 1, 1, len))?;
        let heads = self.dims.heads;
        let head_dim = hidden / heads;
        let scale = 1.0 / (head_dim as f64).sqrt();
        let split = |t: Tensor| -> Result<Tensor> {
            Ok(t.reshape((batch, len, heads, head_dim))?
                .transpose(1, 2)?
                .contiguous()?)
        };

        for block in &self.blocks {
            let q = split(block.query.forward(&x)?)?;
            let k = split(block.key.forward(&x)?)?;
            let v = split(block.value.forward(&x)?)?;
            let scores = (q.matmul(&k.transpose(2, 3)?.contiguous()?)? * scale)?;
            let probs = softmax(&scores.broadcast_add(&bias)?, D::Minus1)?;
            let probs = mode.dropout(&probs, self.dims.hidden_dropout)?;
            let ctx = probs
                .matmul(&v)?
                .transpose(1, 2)?
                .contiguous()?
                .reshape((batch, len, hidden))?;
            let attn = mode.dropout(&block.attn_out.forward(&ctx)?, self.dims.hidden_dropout)?;
            let x1 = block.attn_norm.forward(&(attn + &x)?)?;
            let inter = block.intermediate.forward(&x1)?.gelu_erf()?;
            let out = mode.dropout(&block.output.forward(&inter)?, self.dims.hidden_dropout)?;
            x = block.out_norm.forward(&(out + x1)?)?;
        }

        let first = x.narrow(1, 0, 1)?.squeeze(1)?;
        let pooled = self.pooler.forward(&first)?.tanh()?;
        let pooled = mode.dropout(&pooled, self.dims.head_dropout)?;
        Ok(self.head.forward(&pooled)?.squeeze(1)?)
    }
}
