use crate::error::{Error, Result};
use crate::model::TrainingConfig;

/// Number of warmup steps: `warmup_fraction · total_steps`, rounded.
pub fn warmup_steps(total_steps: usize, warmup_fraction: f64) -> usize {
    ((warmup_fraction * total_steps as f64).round() as usize).min(total_steps)
}

/// Linear warmup from 0 to the peak rate, then linear decay to 0 at
/// `total_steps`.
pub fn lr_at_step(step: usize, total_steps: usize, config: &TrainingConfig) -> Result<f64> {
    if total_steps == 0 {
        return Err(Error::validation("learning-rate schedule needs total_steps ≥ 1"));
    }
    if step > total_steps {
        return Err(Error::validation(format!(
            "step {step} is past the end of a {total_steps}-step schedule"
        )));
    }
    let peak = config.learning_rate;
    let warmup = warmup_steps(total_steps, config.warmup_fraction);
    let lr = if step < warmup {
        peak * step as f64 / warmup as f64
    } else if total_steps == warmup {
        0.0
    } else {
        peak * (total_steps - step) as f64 / (total_steps - warmup) as f64
    };
    Ok(lr)
}
