//! Crank–Nicolson heat substeps for `∂V = μΔV` on a uniform grid, where `Δ`
//! is the unnormalized second difference and `μ` the heat variance of the
//! step divided by `2h²`.
//!
//! Both operators factor the implicit matrix `I - (μ/2)Δ` once. For
//! `μ <= 1` the explicit part `I + (μ/2)Δ` is nonnegative and the implicit
//! part is an M-matrix, so positive input stays positive.

/// Constant-coefficient tridiagonal system `diag·x_i + off·(x_{i-1} + x_{i+1}) = r_i`
/// with zero values outside the grid.
#[derive(Debug, Clone)]
struct Thomas {
    off: f64,
    cprime: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl Thomas {
    fn new(n: usize, diag: f64, off: f64) -> Self {
        let mut cprime = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let denom = diag - off * prev;
            inv_denom[i] = 1.0 / denom;
            prev = off / denom;
            cprime[i] = prev;
        }
        Self {
            off,
            cprime,
            inv_denom,
        }
    }

    /// Solves in place.
    fn solve(&self, r: &mut [f64]) {
        let n = r.len();
        debug_assert_eq!(n, self.cprime.len());
        let mut prev = 0.0;
        for i in 0..n {
            prev = (r[i] - self.off * prev) * self.inv_denom[i];
            r[i] = prev;
        }
        for i in (0..n - 1).rev() {
            r[i] -= self.cprime[i] * r[i + 1];
        }
    }
}

/// CN step with homogeneous Dirichlet data just outside both ends.
#[derive(Debug, Clone)]
pub struct DirichletCn {
    mu: f64,
    implicit: Thomas,
}

impl DirichletCn {
    pub fn new(n: usize, mu: f64) -> Self {
        Self {
            mu,
            implicit: Thomas::new(n, 1.0 + mu, -0.5 * mu),
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Advances `v` by one step, using `rhs` as scratch of the same length.
    pub fn apply(&self, v: &mut [f64], rhs: &mut [f64]) {
        let n = v.len();
        let (a, b) = (1.0 - self.mu, 0.5 * self.mu);
        if n == 1 {
            v[0] *= a / (1.0 + self.mu);
            return;
        }
        rhs[0] = a * v[0] + b * v[1];
        for i in 1..n - 1 {
            rhs[i] = a * v[i] + b * (v[i - 1] + v[i + 1]);
        }
        rhs[n - 1] = a * v[n - 1] + b * v[n - 2];
        self.implicit.solve(rhs);
        v.copy_from_slice(rhs);
    }
}

/// CN step on a periodic grid, solved with the Sherman–Morrison correction of
/// the cyclic corner entries.
#[derive(Debug, Clone)]
pub struct PeriodicCn {
    mu: f64,
    gamma: f64,
    corner: f64,
    reduced: Thomas,
    correction: Vec<f64>,
    correction_scale: f64,
}

impl PeriodicCn {
    pub fn new(n: usize, mu: f64) -> Self {
        assert!(n >= 3, "periodic grid needs at least 3 cells");
        let diag = 1.0 + mu;
        let off = -0.5 * mu;
        let gamma = -diag;
        // Reduced matrix: first diagonal entry minus gamma, last minus off²/gamma.
        let reduced = ThomasVarEnds::new(n, diag, off, diag - gamma, diag - off * off / gamma);
        let mut z = vec![0.0; n];
        z[0] = gamma;
        z[n - 1] = off;
        reduced.solve(&mut z);
        let correction_scale = 1.0 / (1.0 + z[0] + off * z[n - 1] / gamma);
        Self {
            mu,
            gamma,
            corner: off,
            reduced: reduced.into_thomas(),
            correction: z,
            correction_scale,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn apply(&self, v: &mut [f64], rhs: &mut [f64]) {
        let n = v.len();
        let (a, b) = (1.0 - self.mu, 0.5 * self.mu);
        rhs[0] = a * v[0] + b * (v[n - 1] + v[1]);
        for i in 1..n - 1 {
            rhs[i] = a * v[i] + b * (v[i - 1] + v[i + 1]);
        }
        rhs[n - 1] = a * v[n - 1] + b * (v[n - 2] + v[0]);
        self.reduced.solve(rhs);
        let factor =
            (rhs[0] + self.corner * rhs[n - 1] / self.gamma) * self.correction_scale;
        for ((out, &y), &z) in v.iter_mut().zip(rhs.iter()).zip(&self.correction) {
            *out = y - factor * z;
        }
    }
}

/// Tridiagonal matrix with constant interior diagonal but distinct end entries.
struct ThomasVarEnds {
    inner: Thomas,
}

impl ThomasVarEnds {
    fn new(n: usize, diag: f64, off: f64, first: f64, last: f64) -> Self {
        let mut cprime = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let d = if i == 0 {
                first
            } else if i == n - 1 {
                last
            } else {
                diag
            };
            let denom = d - off * prev;
            inv_denom[i] = 1.0 / denom;
            prev = off / denom;
            cprime[i] = prev;
        }
        Self {
            inner: Thomas {
                off,
                cprime,
                inv_denom,
            },
        }
    }

    fn solve(&self, r: &mut [f64]) {
        self.inner.solve(r)
    }

    fn into_thomas(self) -> Thomas {
        self.inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_apply(v: &[f64], mu: f64, periodic: bool) -> Vec<f64> {
        // Solve (I - mu/2 Δ) x = (I + mu/2 Δ) v by Gaussian elimination.
        let n = v.len();
        let at = |i: isize| -> Option<usize> {
            if (0..n as isize).contains(&i) {
                Some(i as usize)
            } else if periodic {
                Some(i.rem_euclid(n as isize) as usize)
            } else {
                None
            }
        };
        let mut m = vec![vec![0.0; n + 1]; n];
        for i in 0..n {
            m[i][i] += 1.0 + mu;
            let mut r = (1.0 - mu) * v[i];
            for j in [i as isize - 1, i as isize + 1] {
                if let Some(j) = at(j) {
                    m[i][j] -= 0.5 * mu;
                    r += 0.5 * mu * v[j];
                }
            }
            m[i][n] = r;
        }
        for c in 0..n {
            let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
            m.swap(c, p);
            for r in 0..n {
                if r != c {
                    let f = m[r][c] / m[c][c];
                    for k in c..=n {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
        (0..n).map(|i| m[i][n] / m[i][i]).collect()
    }

    #[test]
    fn dirichlet_matches_dense_solve() {
        let v: Vec<f64> = (0..9).map(|i| 1.0 + (i as f64 * 0.7).sin()).collect();
        let cn = DirichletCn::new(v.len(), 0.4);
        let mut got = v.clone();
        let mut scratch = vec![0.0; v.len()];
        cn.apply(&mut got, &mut scratch);
        for (g, e) in got.iter().zip(dense_apply(&v, 0.4, false)) {
            assert!((g - e).abs() < 1e-13);
        }
    }

    #[test]
    fn periodic_matches_dense_solve_and_conserves_mass() {
        let v: Vec<f64> = (0..11).map(|i| 2.0 + (i as f64 * 1.3).cos()).collect();
        let cn = PeriodicCn::new(v.len(), 0.9);
        let mut got = v.clone();
        let mut scratch = vec![0.0; v.len()];
        cn.apply(&mut got, &mut scratch);
        for (g, e) in got.iter().zip(dense_apply(&v, 0.9, true)) {
            assert!((g - e).abs() < 1e-13);
        }
        let before: f64 = v.iter().sum();
        let after: f64 = got.iter().sum();
        assert!((before - after).abs() < 1e-12);
    }

    #[test]
    fn periodic_is_shift_equivariant() {
        let v: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).exp().sin() + 1.5).collect();
        let mut shifted = v.clone();
        shifted.rotate_left(5);
        let cn = PeriodicCn::new(v.len(), 0.5);
        let mut s = vec![0.0; v.len()];
        let mut a = v.clone();
        cn.apply(&mut a, &mut s);
        cn.apply(&mut shifted, &mut s);
        a.rotate_left(5);
        for (x, y) in a.iter().zip(&shifted) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_field_is_fixed_point_of_periodic_step() {
        let cn = PeriodicCn::new(50, 0.2);
        let mut v = vec![1.0; 50];
        let mut s = vec![0.0; 50];
        for _ in 0..100 {
            cn.apply(&mut v, &mut s);
        }
        assert!(v.iter().all(|x| (x - 1.0).abs() < 1e-13));
    }

    proptest! {
        #[test]
        fn positivity_is_preserved(
            values in proptest::collection::vec(1e-12f64..10.0, 3..40),
            mu in 0.0f64..1.0,
        ) {
            let mut s = vec![0.0; values.len()];
            let mut d = values.clone();
            DirichletCn::new(values.len(), mu).apply(&mut d, &mut s);
            prop_assert!(d.iter().all(|&x| x > 0.0));
            let mut p = values.clone();
            PeriodicCn::new(values.len(), mu).apply(&mut p, &mut s);
            prop_assert!(p.iter().all(|&x| x > 0.0));
        }
    }
}
