//! Central-difference gradient checking for parameters held in `Var`s.

use candle_core::{Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ops::to_f64_vec;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub name: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradCheck {
    /// `|a − n| / max(|a|, |n|, floor)`.
    pub fn relative_error(&self, floor: f64) -> f64 {
        let scale = self.analytic.abs().max(self.numeric.abs()).max(floor);
        (self.analytic - self.numeric).abs() / scale
    }
}

fn set_entry(var: &Var, values: &[f64], index: usize, value: f64) -> Result<()> {
    let mut v = values.to_vec();
    v[index] = value;
    let t = Tensor::from_vec(v, var.shape(), var.device())?.to_dtype(var.dtype())?;
    var.set(&t)?;
    Ok(())
}

/// Compare backprop gradients of `loss` with central differences. For each
/// variable the entry with the largest analytic gradient is checked, plus
/// `extra` entries drawn at random.
pub fn check_gradients<F>(vars: &[(String, Var)], loss: F, extra: usize, eps: f64, seed: u64) -> Result<Vec<GradCheck>>
where
    F: Fn() -> Result<Tensor>,
{
    let grads = loss()?.backward()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (name, var) in vars {
        let n = var.elem_count();
        let analytic = match grads.get(var.as_tensor()) {
            Some(g) => to_f64_vec(g)?,
            None => vec![0.0; n],
        };
        let mut picks = vec![analytic
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)];
        for _ in 0..extra.min(n.saturating_sub(1)) {
            picks.push(rng.gen_range(0..n));
        }
        picks.sort_unstable();
        picks.dedup();
        let values = to_f64_vec(var.as_tensor())?;
        for index in picks {
            set_entry(var, &values, index, values[index] + eps)?;
            let up = loss()?.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
            set_entry(var, &values, index, values[index] - eps)?;
            let down = loss()?.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
            set_entry(var, &values, index, values[index])?;
            out.push(GradCheck {
                name: name.clone(),
                index,
                analytic: analytic[index],
                numeric: (up - down) / (2.0 * eps),
            });
        }
    }
    Ok(out)
}
