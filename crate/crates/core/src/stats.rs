//! Compensated sums and batch statistics.

use num_complex::Complex64;

/// Neumaier (improved Kahan) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn sum(&self) -> Complex64 {
        Complex64::new(self.re.sum(), self.im.sum())
    }
}

/// Mean and standard error from equally weighted batch means, reduced in
/// batch order.
pub fn batch_mean_stderr(batches: &[Complex64]) -> (Complex64, f64) {
    let n = batches.len();
    let mut acc = ComplexSum::default();
    for b in batches {
        acc.add(*b);
    }
    let mean = acc.sum() / n as f64;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let mut var = NeumaierSum::default();
    for b in batches {
        var.add((b - mean).norm_sqr());
    }
    let s2 = var.sum() / (n as f64 - 1.0);
    (mean, (s2 / n as f64).sqrt())
}

/// Real-valued convenience wrapper around [`batch_mean_stderr`].
pub fn batch_mean_stderr_real(batches: &[f64]) -> (f64, f64) {
    let c: Vec<Complex64> = batches.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let (m, s) = batch_mean_stderr(&c);
    (m.re, s)
}

/// Sample mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut acc = NeumaierSum::default();
    for x in xs {
        acc.add(*x);
    }
    let m = acc.sum() / n;
    let mut v = NeumaierSum::default();
    for x in xs {
        v.add((x - m) * (x - m));
    }
    (m, (v.sum() / (n - 1.0).max(1.0)).sqrt())
}

/// Kolmogorov–Smirnov statistic of samples against Uniform[0, 1].
pub fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        d = d.max((i as f64 + 1.0) / n - x).max(x - i as f64 / n);
    }
    d
}

/// Least-squares line y = slope·x + intercept.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = NeumaierSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.sum(), 1000.0);
    }

    #[test]
    fn batch_stats_of_constant() {
        let (m, s) = batch_mean_stderr_real(&[2.0; 16]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 0.0);
    }
}
