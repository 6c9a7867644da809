//! Integrated Gradients over input word embeddings.
//!
//! The path integral is approximated by the midpoint rule with `m` steps,
//! `alpha_k = (k + 0.5) / m`. The explained quantity is the OFFENSIVE logit
//! and the default baseline puts the `[PAD]` embedding at every content
//! position while `[CLS]` and `[SEP]` stay as they are.

mod render;

use candle_core::{DType, Tensor, Var};
use serde::{Deserialize, Serialize};

use crate::classifier::layers::ForwardMode;
use crate::classifier::{predict_proba, Checkpoint, Classifier};
use crate::corpus::{Label, LabeledExample};
use crate::error::{Error, Result};

pub use render::{render_html, render_importance, render_terminal, RenderFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    #[default]
    PadEmbeddingSequence,
    ZeroEmbedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributionConfig {
    pub num_steps: usize,
    pub baseline_kind: BaselineKind,
    /// Absolute completeness residual, in logit units, above which a warning
    /// is logged.
    pub completeness_tolerance: f64,
    /// Interpolation points evaluated per forward/backward pass.
    pub step_batch: usize,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        Self {
            num_steps: 50,
            baseline_kind: BaselineKind::PadEmbeddingSequence,
            completeness_tolerance: 1e-2,
            step_batch: 32,
        }
    }
}

/// Raw IG output for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct IgOutput {
    /// Per-position attributions (summed over the embedding axis).
    pub scores: Vec<f64>,
    pub output: f64,
    pub baseline_output: f64,
}

impl IgOutput {
    /// `|sum(scores) - (F(x) - F(baseline))|`.
    pub fn completeness_residual(&self) -> f64 {
        (self.scores.iter().sum::<f64>() - (self.output - self.baseline_output)).abs()
    }
}

/// Integrated Gradients of a scalar function `f` between `baseline` and
/// `input`, both shaped `[positions, dim]`.
///
/// `f` receives a stack of points `[n, positions, dim]` and must return one
/// output per point, `[n]`.
pub fn integrated_gradients_fn<F>(
    input: &Tensor,
    baseline: &Tensor,
    steps: usize,
    step_batch: usize,
    f: F,
) -> Result<IgOutput>
where
    F: Fn(&Tensor) -> Result<Tensor>,
{
    if steps < 2 {
        return Err(Error::arg(format!("integrated gradients needs at least 2 steps, got {steps}")));
    }
    if input.dims() != baseline.dims() || input.rank() != 2 {
        return Err(Error::arg("input and baseline must share a [positions, dim] shape"));
    }
    let dtype = input.dtype();
    let delta = (input - baseline)?;
    let mut grad_sum = delta.zeros_like()?;
    let step_batch = step_batch.max(1);

    for start in (0..steps).step_by(step_batch) {
        let n = step_batch.min(steps - start);
        let alphas: Vec<f64> = (start..start + n)
            .map(|k| (k as f64 + 0.5) / steps as f64)
            .collect();
        let alphas = Tensor::from_vec(alphas, (n, 1, 1), input.device())?.to_dtype(dtype)?;
        let points = alphas
            .broadcast_mul(&delta.unsqueeze(0)?)?
            .broadcast_add(&baseline.unsqueeze(0)?)?;
        let points = Var::from_tensor(&points)?;
        let out = f(points.as_tensor())?;
        let grads = out.sum_all()?.backward()?;
        // No gradient entry means the output does not depend on the input.
        let g = match grads.get(points.as_tensor()) {
            Some(g) => g.sum(0)?,
            None => delta.zeros_like()?,
        };
        let finite = g.to_dtype(DType::F64)?.flatten_all()?.to_vec1::<f64>()?;
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { step: start });
        }
        grad_sum = (grad_sum + g)?;
    }

    let scores = (delta * (grad_sum / steps as f64)?)?
        .sum(1)?
        .to_dtype(DType::F64)?
        .to_vec1::<f64>()?;
    let ends = Tensor::stack(&[input, baseline], 0)?;
    let values = f(&ends)?.to_dtype(DType::F64)?.to_vec1::<f64>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient { step: steps });
    }
    Ok(IgOutput {
        scores,
        output: values[0],
        baseline_output: values[1],
    })
}

/// A word and the summed attribution of its pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordAttribution {
    pub word: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    pub text: String,
    /// Every piece, including `[CLS]` and `[SEP]`.
    pub tokens: Vec<String>,
    pub scores: Vec<f64>,
    pub words: Vec<WordAttribution>,
    /// Probability of OFFENSIVE.
    pub prediction: f64,
    pub predicted_label: Label,
    pub logit: f64,
    pub baseline_logit: f64,
    pub completeness_residual: f64,
    pub num_steps: usize,
}

/// Attributes the checkpoint's OFFENSIVE logit for `example` to its tokens.
pub fn integrated_gradients(
    checkpoint: &Checkpoint,
    example: &LabeledExample,
    config: &AttributionConfig,
) -> Result<AttributionResult> {
    attribute_text(
        &checkpoint.classifier,
        &example.text,
        checkpoint.training_config.decision_threshold,
        config,
    )
}

pub fn attribute_text(
    classifier: &Classifier,
    text: &str,
    threshold: f64,
    config: &AttributionConfig,
) -> Result<AttributionResult> {
    let encoding = classifier.encode(text);
    let len = encoding.len();
    let batch = classifier.batch(&[&encoding])?;
    let input = classifier.embed(&batch.ids)?.squeeze(0)?.detach();
    // [CLS] and [SEP] keep their own embeddings in the baseline, so only
    // content positions move along the path and receive attribution.
    let content: Vec<f64> = encoding
        .word_index
        .iter()
        .map(|w| if w.is_some() { 1.0 } else { 0.0 })
        .collect();
    let content = Tensor::from_vec(content, (len, 1), input.device())?.to_dtype(input.dtype())?;
    let replacement = match config.baseline_kind {
        BaselineKind::PadEmbeddingSequence => {
            let pad = classifier.pad_embedding()?.detach();
            pad.unsqueeze(0)?.repeat((len, 1))?
        }
        BaselineKind::ZeroEmbedding => input.zeros_like()?,
    };
    let baseline = (content.broadcast_mul(&replacement)? + content.affine(-1.0, 1.0)?.broadcast_mul(&input)?)?;
    let mask = batch.mask.clone();
    let ig = integrated_gradients_fn(&input, &baseline, config.num_steps, config.step_batch, |x| {
        let n = x.dim(0)?;
        let m = mask.repeat((n, 1))?;
        classifier.logits_from_embeddings(x, &m, &mut ForwardMode::eval())
    })?;
    let residual = ig.completeness_residual();
    if residual > config.completeness_tolerance {
        log::warn!(
            "completeness residual {residual:.4} exceeds {} with {} steps",
            config.completeness_tolerance,
            config.num_steps
        );
    }

    let mut words: Vec<WordAttribution> = encoding
        .words
        .iter()
        .map(|w| WordAttribution {
            word: w.clone(),
            score: 0.0,
        })
        .collect();
    for (wi, s) in encoding.word_index.iter().zip(&ig.scores) {
        if let Some(w) = wi.and_then(|i| words.get_mut(i)) {
            w.score += s;
        }
    }
    // Words cut off by truncation carry no pieces and are dropped.
    let kept = encoding.word_index.iter().flatten().max().map_or(0, |m| m + 1);
    words.truncate(kept);

    let prediction = 1.0 / (1.0 + (-ig.output).exp());
    Ok(AttributionResult {
        text: text.to_string(),
        tokens: encoding.pieces.clone(),
        scores: ig.scores.clone(),
        words,
        prediction,
        predicted_label: Label::from_offensive(prediction > threshold),
        logit: ig.output,
        baseline_logit: ig.baseline_output,
        completeness_residual: residual,
        num_steps: config.num_steps,
    })
}

/// NOT OFFENSIVE examples the checkpoint labels OFFENSIVE, most confident
/// first, at most `limit` of them.
pub fn collect_false_positives(
    checkpoint: &Checkpoint,
    examples: &[LabeledExample],
    limit: usize,
) -> Result<Vec<(LabeledExample, f64)>> {
    let preds = predict_proba(checkpoint, examples)?;
    let mut out: Vec<(LabeledExample, f64)> = examples
        .iter()
        .zip(preds.probabilities.iter().zip(&preds.labels))
        .filter(|(e, (_, l))| e.label == Label::NotOffensive && **l == Label::Offensive)
        .map(|(e, (&p, _))| (e.clone(), p))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.id.cmp(&b.0.id)));
    out.truncate(limit);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use candle_core::Device;

    use super::*;

    fn t(v: Vec<f64>, shape: (usize, usize)) -> Tensor {
        Tensor::from_vec(v, shape, &Device::Cpu).unwrap()
    }

    #[test]
    fn linear_function_is_attributed_exactly() {
        let w = t(vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0], (3, 2));
        let x = t(vec![1.0, 1.0, 2.0, 0.0, -1.0, 4.0], (3, 2));
        let base = t(vec![0.5; 6], (3, 2));
        let ig = integrated_gradients_fn(&x, &base, 2, 8, |p| {
            Ok(p.broadcast_mul(&w.unsqueeze(0)?)?.sum((1, 2))?)
        })
        .unwrap();
        // Oracle: (x - x') . w per row.
        let expected = [
            0.5 * 1.0 + 0.5 * -2.0,
            1.5 * 0.5 + -0.5 * 3.0,
            -1.5 * 0.0 + 3.5 * -1.0,
        ];
        for (s, e) in ig.scores.iter().zip(expected) {
            assert!((s - e).abs() < 1e-12, "{s} vs {e}");
        }
        assert!(ig.completeness_residual() < 1e-12);
    }

    #[test]
    fn quadratic_matches_closed_form_midpoint_sum() {
        // F(x) = sum x^2, baseline 0: grad at alpha*x is 2 alpha x, so the
        // midpoint rule gives 2 x^2 * mean(alpha_k) = x^2 exactly.
        let x = t(vec![1.0, -2.0, 0.5, 3.0], (2, 2));
        let base = x.zeros_like().unwrap();
        let ig = integrated_gradients_fn(&x, &base, 7, 3, |p| Ok(p.sqr()?.sum((1, 2))?)).unwrap();
        assert!((ig.scores[0] - 5.0).abs() < 1e-12);
        assert!((ig.scores[1] - 9.25).abs() < 1e-12);
        assert!(ig.completeness_residual() < 1e-12);
    }

    #[test]
    fn constant_function_gets_zero_attribution() {
        let x = t(vec![1.0, 2.0], (1, 2));
        let base = x.zeros_like().unwrap();
        let ig = integrated_gradients_fn(&x, &base, 4, 4, |p| {
            Ok((p.sum((1, 2))? * 0.0)?.affine(1.0, 3.0)?)
        })
        .unwrap();
        assert_eq!(ig.scores, vec![0.0]);
        assert_eq!(ig.output, 3.0);
    }

    #[test]
    fn residual_shrinks_with_steps_on_a_curved_function() {
        let x = t(vec![0.8, -1.3, 2.0, 0.4], (2, 2));
        let base = x.zeros_like().unwrap();
        let f = |p: &Tensor| -> Result<Tensor> { Ok(p.sum((1, 2))?.tanh()?) };
        let residuals: Vec<f64> = [2, 8, 32, 128]
            .iter()
            .map(|&m| integrated_gradients_fn(&x, &base, m, 16, f).unwrap().completeness_residual())
            .collect();
        assert!(residuals.windows(2).all(|w| w[1] <= w[0]), "{residuals:?}");
        assert!(residuals[3] < 1e-4);
    }

    #[test]
    fn too_few_steps_is_rejected() {
        let x = t(vec![1.0], (1, 1));
        assert!(matches!(
            integrated_gradients_fn(&x, &x, 1, 1, |p| Ok(p.sum((1, 2))?)),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn non_finite_gradients_are_reported() {
        let x = t(vec![1.0], (1, 1));
        let base = x.zeros_like().unwrap();
        let err = integrated_gradients_fn(&x, &base, 2, 2, |p| Ok((p.sum((1, 2))? * f64::NAN)?));
        assert!(matches!(err, Err(Error::NonFiniteGradient { .. })));
    }
}
