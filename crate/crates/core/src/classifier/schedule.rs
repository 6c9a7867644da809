use super::TrainingConfig;
use crate::error::{Error, Result};

/// Number of warmup steps: `ceil(warmup_fraction * total_steps)`.
pub fn warmup_steps(total_steps: usize, warmup_fraction: f64) -> usize {
    ((warmup_fraction * total_steps as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Linear warmup from zero to the peak over the first `W` steps, then linear
/// decay to zero at `total_steps`.
pub fn lr_at_step(step: usize, total_steps: usize, config: &TrainingConfig) -> Result<f64> {
    if total_steps == 0 {
        return Err(Error::arg("total_steps must be at least 1"));
    }
    if step > total_steps {
        return Err(Error::arg(format!(
            "step {step} outside [0, {total_steps}]"
        )));
    }
    let peak = config.peak_learning_rate;
    let w = warmup_steps(total_steps, config.warmup_fraction);
    let lr = if w > 0 && step <= w {
        peak * step as f64 / w as f64
    } else {
        peak * (total_steps - step) as f64 / (total_steps - w) as f64
    };
    Ok(lr)
}
