//! Differentiable building blocks composed from primitive tensor ops, plus
//! the forward context carrying the dropout source.

use std::cell::RefCell;

use candle_core::{DType, Tensor, D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Result;

/// Forward-pass context. Evaluation mode disables dropout.
pub struct Ctx {
    dropout: f64,
    rng: Option<RefCell<ChaCha8Rng>>,
}

impl Ctx {
    pub fn eval() -> Self {
        Ctx { dropout: 0.0, rng: None }
    }

    pub fn train(dropout: f64, seed: u64) -> Self {
        Ctx {
            dropout,
            rng: Some(RefCell::new(ChaCha8Rng::seed_from_u64(seed))),
        }
    }

    pub fn is_training(&self) -> bool {
        self.rng.is_some()
    }

    pub fn dropout(&self, x: &Tensor) -> Result<Tensor> {
        let Some(rng) = &self.rng else {
            return Ok(x.clone());
        };
        if self.dropout <= 0.0 {
            return Ok(x.clone());
        }
        let keep = 1.0 - self.dropout;
        let scale = 1.0 / keep;
        let mut rng = rng.borrow_mut();
        let mask: Vec<f64> = (0..x.elem_count())
            .map(|_| if rng.gen_bool(keep) { scale } else { 0.0 })
            .collect();
        let mask = Tensor::from_vec(mask, x.shape(), x.device())?.to_dtype(x.dtype())?;
        Ok((x * mask)?)
    }
}

/// max(x, 0) written as (x + |x|) / 2 so the derivative at 0 is 1/2.
fn positive_part(x: &Tensor) -> Result<Tensor> {
    Ok(((x + x.abs()?)? * 0.5)?)
}

/// log(1 + e^x), stable for large |x|.
pub fn softplus(x: &Tensor) -> Result<Tensor> {
    let tail = ((x.abs()?.neg()?.exp()? + 1.0)?).log()?;
    Ok((positive_part(x)? + tail)?)
}

/// Logistic function as exp(-softplus(-x)), finite in value and gradient.
pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    Ok(softplus(&x.neg()?)?.neg()?.exp()?)
}

/// Summed binary cross-entropy from logits.
pub fn bce_with_logits_sum(logits: &Tensor, targets: &Tensor) -> Result<Tensor> {
    Ok((softplus(logits)? - (logits * targets)?)?.sum_all()?)
}

pub fn log_softmax(x: &Tensor) -> Result<Tensor> {
    let m = x.max_keepdim(D::Minus1)?.detach();
    let shifted = x.broadcast_sub(&m)?;
    let lse = shifted.exp()?.sum_keepdim(D::Minus1)?.log()?;
    Ok(shifted.broadcast_sub(&lse)?)
}

/// Softmax over the last axis. Entries where `keep` is 0 come out exactly
/// zero.
pub fn masked_softmax(x: &Tensor, keep: Option<&Tensor>) -> Result<Tensor> {
    let m = x.max_keepdim(D::Minus1)?.detach();
    let mut e = x.broadcast_sub(&m)?.exp()?;
    if let Some(keep) = keep {
        e = e.broadcast_mul(keep)?;
    }
    let z = e.sum_keepdim(D::Minus1)?;
    Ok(e.broadcast_div(&z)?)
}

pub fn layer_norm(x: &Tensor, weight: &Tensor, bias: &Tensor, eps: f64) -> Result<Tensor> {
    let mean = x.mean_keepdim(D::Minus1)?;
    let centered = x.broadcast_sub(&mean)?;
    let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
    let normed = centered.broadcast_div(&(var + eps)?.sqrt()?)?;
    Ok(normed.broadcast_mul(weight)?.broadcast_add(bias)?)
}

/// `x · wᵀ + b` for a row-major batch `x`.
pub fn linear(x: &Tensor, w: &Tensor, b: Option<&Tensor>) -> Result<Tensor> {
    let y = x.matmul(&w.t()?)?;
    Ok(match b {
        Some(b) => y.broadcast_add(b)?,
        None => y,
    })
}

/// Copy a tensor of any float dtype into `f64` values.
pub fn to_f64_vec(t: &Tensor) -> Result<Vec<f64>> {
    Ok(t.to_dtype(DType::F64)?.flatten_all()?.to_vec1()?)
}

pub fn to_f64_rows(t: &Tensor) -> Result<Vec<Vec<f64>>> {
    Ok(t.to_dtype(DType::F64)?.to_vec2()?)
}

pub fn from_rows(rows: &[Vec<f64>], cols: usize, like: &Tensor) -> Result<Tensor> {
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Tensor::from_vec(flat, (rows.len(), cols), like.device())?.to_dtype(like.dtype())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::{Device, Var};

    fn t(v: &[f64]) -> Tensor {
        Tensor::new(v, &Device::Cpu).unwrap()
    }

    #[test]
    fn sigmoid_and_softplus_match_closed_forms() {
        let xs = [-800.0, -3.0, -0.5, 0.0, 0.5, 3.0, 800.0];
        let s = sigmoid(&t(&xs)).unwrap().to_vec1::<f64>().unwrap();
        let sp = softplus(&t(&xs)).unwrap().to_vec1::<f64>().unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert!((s[i] - 1.0 / (1.0 + (-x).exp())).abs() < 1e-12);
            let expect = if x > 30.0 { x } else { x.exp().ln_1p() };
            assert!((sp[i] - expect).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn sigmoid_gradient_is_finite_at_extremes_and_zero() {
        let v = Var::new(&[-800.0f64, 0.0, 800.0], &Device::Cpu).unwrap();
        let g = sigmoid(v.as_tensor()).unwrap().sum_all().unwrap().backward().unwrap();
        let g = g.get(v.as_tensor()).unwrap().to_vec1::<f64>().unwrap();
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 0.25).abs() < 1e-15);
        assert_eq!(g[2], 0.0);
    }

    #[test]
    fn masked_softmax_zeroes_forbidden_cells() {
        let x = Tensor::new(&[[1.0f64, 2.0, 3.0], [0.5, -1.0, 2.0]], &Device::Cpu).unwrap();
        let keep = Tensor::new(&[[1.0f64, 0.0, 1.0], [1.0, 1.0, 1.0]], &Device::Cpu).unwrap();
        let p = masked_softmax(&x, Some(&keep)).unwrap().to_vec2::<f64>().unwrap();
        assert_eq!(p[0][1], 0.0);
        assert!((p[0][0] + p[0][2] - 1.0).abs() < 1e-15);
        assert!((p[1].iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let ls = log_softmax(&x).unwrap().to_vec2::<f64>().unwrap();
        let z: f64 = [1.0f64, 2.0, 3.0].iter().map(|v| v.exp()).sum();
        assert!((ls[0][2] - (3.0 - z.ln())).abs() < 1e-12);
    }

    #[test]
    fn layer_norm_normalizes_rows() {
        let x = Tensor::new(&[[1.0f64, 2.0, 3.0, 6.0]], &Device::Cpu).unwrap();
        let w = t(&[1.0; 4]);
        let b = t(&[0.0; 4]);
        let y = layer_norm(&x, &w, &b, 0.0).unwrap().to_vec2::<f64>().unwrap();
        let mean: f64 = y[0].iter().sum::<f64>() / 4.0;
        let var: f64 = y[0].iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dropout_is_seeded_and_inactive_in_eval() {
        let x = Tensor::ones((4, 8), DType::F64, &Device::Cpu).unwrap();
        assert_eq!(
            Ctx::eval().dropout(&x).unwrap().to_vec2::<f64>().unwrap(),
            x.to_vec2::<f64>().unwrap()
        );
        let a = Ctx::train(0.5, 9).dropout(&x).unwrap().to_vec2::<f64>().unwrap();
        let b = Ctx::train(0.5, 9).dropout(&x).unwrap().to_vec2::<f64>().unwrap();
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn bce_matches_direct_formula() {
        let l = t(&[0.3, -1.2]);
        let y = t(&[1.0, 0.0]);
        let got = bce_with_logits_sum(&l, &y).unwrap().to_scalar::<f64>().unwrap();
        let p = |x: f64| 1.0 / (1.0 + (-x).exp());
        let expect = -(p(0.3).ln()) - (1.0 - p(-1.2)).ln();
        assert!((got - expect).abs() < 1e-12);
    }
}
