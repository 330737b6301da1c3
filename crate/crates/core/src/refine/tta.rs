use serde::{Deserialize, Serialize};

use super::problem::{RefineProblem, RefineScene};
use super::{GradientMode, LossBreakdown, RefineWeights, TtaConfig};
use crate::error::{Error, Result};
use crate::hand::{HandParams, HandTemplate, NUM_OPT_PARAMS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtaResult {
    /// Lowest-loss iterate seen.
    pub params: HandParams,
    pub best_iteration: usize,
    /// Loss at every evaluated iterate, the start included.
    pub trace: Vec<LossBreakdown>,
}

impl TtaResult {
    pub fn initial(&self) -> &LossBreakdown {
        &self.trace[0]
    }

    pub fn best(&self) -> &LossBreakdown {
        &self.trace[self.best_iteration]
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from(LossBreakdown::CSV_HEADER);
        out.push('\n');
        for (i, l) in self.trace.iter().enumerate() {
            out.push_str(&l.csv_row(i));
            out.push('\n');
        }
        out
    }
}

/// Adam descent on rotation, translation and pose with shape frozen.
/// Translation is optimized in units of `cfg.translation_unit` mm.
pub fn tta_refine(
    template: &HandTemplate,
    init: &HandParams,
    scene: &RefineScene,
    weights: &RefineWeights,
    cfg: &TtaConfig,
) -> Result<TtaResult> {
    init.validate()?;
    let problem = RefineProblem::new(template, &init.shape, scene, weights, cfg)?;
    let unit = cfg.translation_unit;
    let to_params = |y: &[f64; NUM_OPT_PARAMS]| -> [f64; NUM_OPT_PARAMS] {
        let mut x = *y;
        for v in &mut x[3..6] {
            *v *= unit;
        }
        x
    };
    let mut y = init.to_opt_vector();
    for v in &mut y[3..6] {
        *v /= unit;
    }
    let mut m = [0.0; NUM_OPT_PARAMS];
    let mut s = [0.0; NUM_OPT_PARAMS];
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    let mut best = (0usize, init.to_opt_vector(), f64::INFINITY);

    for it in 0..=cfg.iterations {
        let x = if it == 0 { init.to_opt_vector() } else { to_params(&y) };
        let last = it == cfg.iterations;
        let (loss, grad) = if last {
            (problem.evaluate(&x), [0.0; NUM_OPT_PARAMS])
        } else {
            match cfg.gradient {
                GradientMode::Exact => problem.evaluate_with_gradient(&x),
                GradientMode::CentralDifference => (problem.evaluate(&x), problem.finite_difference_gradient(&x)),
            }
        };
        trace.push(loss);
        if !loss.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { iteration: it, trace: trace.iter().map(|l| l.total).collect() });
        }
        if loss.total < best.2 {
            best = (it, x, loss.total);
        }
        if last {
            break;
        }
        let t = (it + 1) as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for i in 0..NUM_OPT_PARAMS {
            let g = if (3..6).contains(&i) { grad[i] * unit } else { grad[i] };
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            s[i] = cfg.beta2 * s[i] + (1.0 - cfg.beta2) * g * g;
            let step = cfg.learning_rate * (m[i] / c1) / ((s[i] / c2).sqrt() + cfg.epsilon);
            y[i] -= step;
        }
    }
    Ok(TtaResult { params: init.with_opt_vector(&best.1), best_iteration: best.0, trace })
}
