//! Running per-dimension mean/std normalisation.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub count: u64,
    pub sum: Vec<f64>,
    pub sumsq: Vec<f64>,
    /// Lower bound on the standard deviation.
    pub eps: f64,
    /// Normalised values are clipped to `[-clip, clip]`.
    pub clip: f64,
}

impl Normalizer {
    pub fn new(dim: usize, eps: f64, clip: f64) -> Self {
        Normalizer {
            count: 0,
            sum: vec![0.0; dim],
            sumsq: vec![0.0; dim],
            eps,
            clip,
        }
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn update(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim());
        self.count += 1;
        for ((s, q), v) in self.sum.iter_mut().zip(&mut self.sumsq).zip(x) {
            *s += v;
            *q += v * v;
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Population standard deviation, at least `eps`.
    pub fn std(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sum
            .iter()
            .zip(&self.sumsq)
            .map(|(s, q)| {
                let m = s / n;
                (q / n - m * m).max(self.eps * self.eps).sqrt()
            })
            .collect()
    }

    /// Writes the normalised `x` into `out`.
    pub fn normalize_into(&self, x: &[f64], mean: &[f64], std: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(x).zip(mean).zip(std) {
            *o = ((v - m) / s).clamp(-self.clip, self.clip);
        }
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.normalize_into(x, &self.mean(), &self.std(), &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn streamed_stats_match_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let data: Vec<[f64; 3]> = (0..5000)
            .map(|_| [rng.random_range(-2.0..3.0), rng.random_range(0.0..0.1), 7.0])
            .collect();
        let mut n = Normalizer::new(3, 1e-12, 5.0);
        for d in &data {
            n.update(d);
        }
        for j in 0..3 {
            let mean = data.iter().map(|d| d[j]).sum::<f64>() / data.len() as f64;
            let var = data.iter().map(|d| (d[j] - mean).powi(2)).sum::<f64>() / data.len() as f64;
            assert!((n.mean()[j] - mean).abs() < 1e-10);
            assert!((n.std()[j] - var.sqrt().max(1e-12)).abs() < 1e-10);
        }
    }

    #[test]
    fn output_is_clipped_and_std_floored() {
        let mut n = Normalizer::new(1, 0.01, 5.0);
        n.update(&[1.0]);
        n.update(&[1.0]);
        assert_eq!(n.std(), vec![0.01]);
        assert_eq!(n.normalize(&[2.0]), vec![5.0]);
        assert_eq!(n.normalize(&[0.0]), vec![-5.0]);
        assert_eq!(n.normalize(&[1.0]), vec![0.0]);
    }
}
