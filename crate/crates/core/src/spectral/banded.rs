//! Symmetric banded eigensolver: bisection on inertia counts plus inverse iteration.

/// Real symmetric matrix stored by its upper diagonals: `diags[k][i] = A[i][i + k]`.
#[derive(Debug, Clone)]
pub(crate) struct SymBand {
    n: usize,
    diags: Vec<Vec<f64>>,
}

impl SymBand {
    pub fn new(n: usize, bandwidth: usize) -> Self {
        let diags = (0..=bandwidth).map(|k| vec![0.0; n.saturating_sub(k)]).collect();
        Self { n, diags }
    }

    pub fn bandwidth(&self) -> usize {
        self.diags.len() - 1
    }

    pub fn set(&mut self, i: usize, k: usize, value: f64) {
        self.diags[k][i] = value;
    }

    /// Entry `A[i][j]`, zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k > self.bandwidth() {
            0.0
        } else {
            self.diags[k][lo]
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += self.diags[0][i] * x[i];
        }
        for k in 1..=self.bandwidth() {
            for i in 0..self.n - k {
                let a = self.diags[k][i];
                y[i] += a * x[i + k];
                y[i + k] += a * x[i];
            }
        }
        y
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let mut radius = 0.0;
            for j in i.saturating_sub(self.bandwidth())..(i + self.bandwidth() + 1).min(self.n) {
                if j != i {
                    radius += self.get(i, j).abs();
                }
            }
            lo = lo.min(self.diags[0][i] - radius);
            hi = hi.max(self.diags[0][i] + radius);
        }
        (lo, hi)
    }

    fn scale(&self) -> f64 {
        self.diags
            .iter()
            .flat_map(|d| d.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE)
    }

    /// Number of eigenvalues strictly below `sigma`, from the signs of the
    /// pivots of an `LDLᵀ` factorization of `A - sigma I` (Sylvester inertia).
    pub fn count_below(&self, sigma: f64) -> usize {
        let b = self.bandwidth();
        let n = self.n;
        let pivmin = f64::EPSILON * f64::EPSILON * self.scale().max(sigma.abs());
        // l[i * b + t] = L[i][i - 1 - t]
        let bw = b.max(1);
        let mut l = vec![0.0; n * bw];
        let mut d = vec![0.0; n];
        let mut negatives = 0;
        for i in 0..n {
            // entries L[i][j] for j in i-b..i
            for j in i.saturating_sub(b)..i {
                let mut v = self.get(i, j);
                for k in i.saturating_sub(b)..j {
                    v -= l[i * bw + i - 1 - k] * l[j * bw + j - 1 - k] * d[k];
                }
                l[i * bw + i - 1 - j] = v / d[j];
            }
            let mut di = self.diags[0][i] - sigma;
            for k in i.saturating_sub(b)..i {
                let lik = l[i * bw + i - 1 - k];
                di -= lik * lik * d[k];
            }
            if di.abs() < pivmin {
                di = -pivmin;
            }
            if di < 0.0 {
                negatives += 1;
            }
            d[i] = di;
        }
        negatives
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let pad = 1e-12 * (hi - lo).abs().max(1.0);
        lo -= pad;
        hi += pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// LU factorization of `A - sigma I` with partial pivoting.
    pub fn factor_shifted(&self, sigma: f64) -> BandLu {
        let b = self.bandwidth();
        let n = self.n;
        let width = 3 * b + 1;
        let mut rows = vec![0.0; n * width];
        // row i stores columns [i - b, i + 2b] at offsets 0..width
        let idx = |i: usize, j: usize| i * width + (j + b - i);
        for i in 0..n {
            for j in i.saturating_sub(b)..(i + b + 1).min(n) {
                let mut v = self.get(i, j);
                if i == j {
                    v -= sigma;
                }
                rows[idx(i, j)] = v;
            }
        }
        let tiny = f64::EPSILON * self.scale().max(sigma.abs());
        let mut pivots = vec![0usize; n];
        let mut mults = vec![0.0; n * b.max(1)];
        let mut buf_k = vec![0.0; 2 * b + 1];
        let mut buf_p = vec![0.0; 2 * b + 1];
        for k in 0..n {
            let last = (k + b).min(n - 1);
            let mut p = k;
            let mut best = rows[idx(k, k)].abs();
            for r in k + 1..=last {
                let v = rows[idx(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            pivots[k] = p;
            let span = (k + 2 * b).min(n - 1);
            if p != k {
                for (t, c) in (k..=span).enumerate() {
                    buf_k[t] = rows[idx(k, c)];
                    buf_p[t] = if c + b >= p && c <= p + 2 * b { rows[idx(p, c)] } else { 0.0 };
                }
                for (t, c) in (k..=span).enumerate() {
                    rows[idx(k, c)] = buf_p[t];
                    if c + b >= p && c <= p + 2 * b {
                        rows[idx(p, c)] = buf_k[t];
                    }
                }
            }
            if rows[idx(k, k)].abs() < tiny {
                rows[idx(k, k)] = tiny;
            }
            let pivot = rows[idx(k, k)];
            for r in k + 1..=last {
                let f = rows[idx(r, k)] / pivot;
                mults[k * b.max(1) + (r - k - 1)] = f;
                rows[idx(r, k)] = 0.0;
                if f != 0.0 {
                    for c in k + 1..=span {
                        let u = rows[idx(k, c)];
                        rows[idx(r, c)] -= f * u;
                    }
                }
            }
        }
        BandLu { n, b, rows, pivots, mults }
    }
}

pub(crate) struct BandLu {
    n: usize,
    b: usize,
    rows: Vec<f64>,
    pivots: Vec<usize>,
    mults: Vec<f64>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, b) = (self.n, self.b);
        let width = 3 * b + 1;
        let idx = |i: usize, j: usize| i * width + (j + b - i);
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let last = (k + b).min(n - 1);
            for r in k + 1..=last {
                x[r] -= self.mults[k * b.max(1) + (r - k - 1)] * x[k];
            }
        }
        for k in (0..n).rev() {
            let span = (k + 2 * b).min(n - 1);
            let mut v = x[k];
            for c in k + 1..=span {
                v -= self.rows[idx(k, c)] * x[c];
            }
            x[k] = v / self.rows[idx(k, k)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn random_band(n: usize, b: usize, seed: u64) -> SymBand {
        let mut m = SymBand::new(n, b);
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for k in 0..=b {
            for i in 0..n - k {
                m.set(i, k, if k == 0 { 4.0 * next() + (i as f64) * 0.1 } else { next() });
            }
        }
        m
    }

    fn dense(m: &SymBand) -> DMatrix<f64> {
        DMatrix::from_fn(m.n, m.n, |i, j| m.get(i, j))
    }

    #[test]
    fn bisection_matches_dense_eigenvalues() {
        for &b in &[1usize, 2] {
            let m = random_band(40, b, 7 + b as u64);
            let mut reference: Vec<f64> = dense(&m).symmetric_eigenvalues().iter().copied().collect();
            reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (k, r) in reference.iter().enumerate() {
                assert!((m.eigenvalue(k) - r).abs() < 1e-10, "b={b} k={k}");
            }
        }
    }

    #[test]
    fn pivoted_solve_inverts_shifted_matrix() {
        for &b in &[1usize, 2] {
            let m = random_band(30, b, 99);
            let sigma = 0.37;
            let lu = m.factor_shifted(sigma);
            let rhs: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).sin()).collect();
            let x = lu.solve(&rhs);
            let ax = m.matvec(&x);
            for i in 0..30 {
                assert!((ax[i] - sigma * x[i] - rhs[i]).abs() < 1e-9);
            }
        }
    }
}
