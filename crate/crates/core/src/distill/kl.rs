//! KL divergence between teacher and student action distributions.

use crate::error::{Error, Result};
use crate::nn::{softmax, softmax_in_place, Matrix};

const ROW_SUM_TOLERANCE: f64 = 1e-6;

fn check(teacher: &Matrix, student_logits: &Matrix) -> Result<()> {
    if teacher.rows() != student_logits.rows() || teacher.cols() != student_logits.cols() {
        return Err(Error::Config(format!(
            "teacher batch [{}x{}] vs student logits [{}x{}]",
            teacher.rows(),
            teacher.cols(),
            student_logits.rows(),
            student_logits.cols()
        )));
    }
    if teacher.rows() == 0 {
        return Err(Error::Config("empty distillation batch".into()));
    }
    if !student_logits.is_finite() {
        return Err(Error::Numeric("non-finite student logits".into()));
    }
    for (i, row) in teacher.iter_rows().enumerate() {
        let sum: f64 = row.iter().sum();
        if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::Domain(format!(
                "teacher row {i} is not a distribution (sum {sum})"
            )));
        }
    }
    Ok(())
}

/// Student distribution: softmax, clamped below at `floor`, renormalized.
fn student_probs(logits: &[f64], floor: f64) -> Vec<f64> {
    let mut q = logits.to_vec();
    softmax_in_place(&mut q);
    if floor > 0.0 {
        q.iter_mut().for_each(|v| *v = v.max(floor));
        let sum: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= sum);
    }
    q
}

/// Batch mean of `sum_i p_i * ln(p_i / q_i)` where `p` is the teacher row and
/// `q` the floored student softmax. Teacher zeros contribute nothing.
pub fn kl_loss(teacher: &Matrix, student_logits: &Matrix, floor: f64) -> Result<f64> {
    check(teacher, student_logits)?;
    let mut total = 0.0;
    for (p_row, z_row) in teacher.iter_rows().zip(student_logits.iter_rows()) {
        let q = student_probs(z_row, floor);
        total += p_row
            .iter()
            .zip(&q)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, q)| p * (p.ln() - q.ln()))
            .sum::<f64>();
    }
    Ok(total / teacher.rows() as f64)
}

/// Gradient of [`kl_loss`] w.r.t. the student logits, `(softmax(z) - p) / B`.
/// Exact whenever the probability floor is inactive.
pub fn kl_loss_grad(teacher: &Matrix, student_logits: &Matrix) -> Result<Matrix> {
    check(teacher, student_logits)?;
    let scale = 1.0 / teacher.rows() as f64;
    let mut grad = student_logits.clone();
    for r in 0..grad.rows() {
        let row = grad.row_mut(r);
        softmax_in_place(row);
        for (g, p) in row.iter_mut().zip(teacher.row(r)) {
            *g = (*g - p) * scale;
        }
    }
    Ok(grad)
}

/// Softmax of `values / temperature`. Small temperatures concentrate the
/// mass on the argmax, which is preserved for every positive temperature.
pub fn sharpen_distribution(values: &[f64], temperature: f64) -> Result<Vec<f64>> {
    softmax(values, temperature)
}

/// Sharpens a stored probability vector by treating its logs as logits.
/// Temperature 1 returns the input unchanged.
pub fn sharpen_probabilities(probs: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if temperature == 1.0 {
        return Ok(probs.to_vec());
    }
    let logs: Vec<f64> = probs.iter().map(|p| p.max(f64::MIN_POSITIVE).ln()).collect();
    sharpen_distribution(&logs, temperature)
}
