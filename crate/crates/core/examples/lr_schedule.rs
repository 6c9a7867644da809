//! Prints the warmup-then-linear-decay learning rate for a ten-epoch run
//! over 13,240 examples in batches of 32.

use xlod::classifier::{lr_at_step, warmup_steps, TrainingConfig};

fn main() -> xlod::Result<()> {
    let config = TrainingConfig::default();
    let total = config.total_steps(13_240);
    let warmup = warmup_steps(total, config.warmup_fraction);
    println!("{total} steps, warmup {warmup}");
    for step in [0, 1, warmup / 2, warmup, warmup + 1, total / 2, total - 1, total] {
        println!("step {step:>5}  lr {:.3e}", lr_at_step(step, total, &config)?);
    }
    Ok(())
}
