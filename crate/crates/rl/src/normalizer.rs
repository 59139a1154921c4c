//! Running mean/variance observation normalizer.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    mean: Vec<f64>,
    var: Vec<f64>,
    count: f64,
    pub clip: f64,
}

impl Normalizer {
    pub fn new(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], var: vec![1.0; dim], count: 1e-4, clip: 10.0 }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn var(&self) -> &[f64] {
        &self.var
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    /// Merges the statistics of a batch of samples.
    pub fn update<'a>(&mut self, batch: impl IntoIterator<Item = &'a [f64]>) {
        let d = self.dim();
        let mut n = 0.0;
        let mut sum = vec![0.0; d];
        let mut sq = vec![0.0; d];
        let rows: Vec<&[f64]> = batch.into_iter().collect();
        for x in &rows {
            assert_eq!(x.len(), d);
            n += 1.0;
            for i in 0..d {
                sum[i] += x[i];
            }
        }
        if n == 0.0 {
            return;
        }
        let batch_mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        for x in &rows {
            for i in 0..d {
                let e = x[i] - batch_mean[i];
                sq[i] += e * e;
            }
        }
        let total = self.count + n;
        for i in 0..d {
            let delta = batch_mean[i] - self.mean[i];
            let m2 = self.var[i] * self.count + sq[i] + delta * delta * self.count * n / total;
            self.mean[i] += delta * n / total;
            self.var[i] = m2 / total;
        }
        self.count = total;
    }

    pub fn normalize_into(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.dim() {
            out[i] = ((x[i] - self.mean[i]) / (self.var[i] + 1e-8).sqrt()).clamp(-self.clip, self.clip);
        }
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.normalize_into(x, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_batch_statistics() {
        let mut n = Normalizer::new(2);
        let a = [[1.0, 10.0], [3.0, 10.0]];
        let b = [[5.0, 10.0], [7.0, 14.0]];
        n.update(a.iter().map(|r| &r[..]));
        n.update(b.iter().map(|r| &r[..]));
        // prior count is negligible
        assert!((n.mean()[0] - 4.0).abs() < 1e-2);
        assert!((n.var()[0] - 5.0).abs() < 1e-2);
        assert!((n.mean()[1] - 11.0).abs() < 1e-2);
        assert!((n.var()[1] - 3.0).abs() < 1e-2);
    }

    #[test]
    fn clips_outliers() {
        let n = Normalizer::new(1);
        assert_eq!(n.normalize(&[1e6])[0], 10.0);
    }
}
