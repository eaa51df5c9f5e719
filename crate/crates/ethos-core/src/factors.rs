//! Exploratory factor analysis of the genre ratings: principal axis
//! factoring, varimax and promax rotation, explained variance, and
//! Thurstone regression factor scores.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::linalg::{self, Matrix};
use crate::{Error, Result};

/// Communality ceiling for Heywood cases.
const HEYWOOD_CAP: f64 = 1.0 - 1e-6;

/// Rotation applied to the retained factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Rotation {
    None,
    Varimax,
    Promax { kappa: u32 },
}

/// Fitting controls for [`fit_factor_model`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorOptions {
    pub n_factors: usize,
    pub rotation: Rotation,
    /// Convergence threshold on the max communality change.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions {
            n_factors: 5,
            rotation: Rotation::Promax { kappa: 4 },
            tol: 1e-6,
            max_iter: 200,
        }
    }
}

/// A fitted factor solution over named variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorModel {
    pub variables: Vec<String>,
    pub rotation: Rotation,
    /// Unrotated principal-axis loadings, p x k.
    pub unrotated: Matrix,
    /// Rotated pattern loadings, p x k (equals `unrotated` when rotation is
    /// `None`).
    pub pattern: Matrix,
    /// Factor correlations, k x k; identity for orthogonal rotations.
    pub phi: Matrix,
    pub communalities: Vec<f64>,
    /// Eigenvalues of the input correlation matrix, descending, for
    /// factor-count diagnostics.
    pub eigenvalues: Vec<f64>,
    /// Share of total variance carried by the unrotated loadings.
    pub explained_variance: f64,
    /// Same share computed from the structure loadings (pattern x phi).
    pub explained_variance_structure: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Indices of variables whose communality was capped below 1.
    pub heywood: Vec<usize>,
    /// Correlation matrix the model was fitted on; reused for scoring.
    pub correlation: Matrix,
}

impl FactorModel {
    pub fn n_factors(&self) -> usize {
        self.pattern.cols()
    }

    /// Structure loadings: correlations between variables and factors.
    pub fn structure(&self) -> Matrix {
        self.pattern
            .matmul(&self.phi)
            .expect("pattern and phi shapes agree by construction")
    }

    /// Pattern row for one variable, by name.
    pub fn loading_row(&self, variable: &str) -> Option<&[f64]> {
        self.variables
            .iter()
            .position(|v| v == variable)
            .map(|i| self.pattern.row(i))
    }
}

/// Pearson correlation matrix over the columns of a feature matrix.
pub fn correlation_matrix(x: &FeatureMatrix) -> Result<Matrix> {
    correlations_of(x.matrix())
}

/// Pearson correlation matrix over the columns of a raw data matrix.
pub fn correlations_of(x: &Matrix) -> Result<Matrix> {
    let n = x.rows();
    let p = x.cols();
    if n < 2 {
        return Err(Error::InvalidData(String::from(
            "correlation matrix needs at least 2 rows",
        )));
    }
    let z = standardize_columns(x)?;
    let mut r = Matrix::zeros(p, p);
    for i in 0..p {
        r[(i, i)] = 1.0;
        for j in (i + 1)..p {
            let mut s = 0.0;
            for row in 0..n {
                s += z[(row, i)] * z[(row, j)];
            }
            let v = s / n as f64;
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    Ok(r)
}

/// Column z-scores using population standard deviation, so duplicating every
/// row leaves the output rows unchanged.
fn standardize_columns(x: &Matrix) -> Result<Matrix> {
    let n = x.rows();
    let p = x.cols();
    let mut z = x.clone();
    for j in 0..p {
        let col = x.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        if var <= 0.0 {
            return Err(Error::ConstantColumn(format!("column {j} has zero variance")));
        }
        let sd = var.sqrt();
        for i in 0..n {
            z[(i, j)] = (x[(i, j)] - mean) / sd;
        }
    }
    Ok(z)
}

/// Unrotated principal-axis solution.
#[derive(Debug, Clone, PartialEq)]
pub struct PafSolution {
    pub loadings: Matrix,
    pub communalities: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub heywood: Vec<usize>,
}

/// Principal axis factoring on a correlation matrix.
///
/// Communalities start at the squared multiple correlations, then iterate:
/// replace diag(R) with the communalities, eigendecompose, take the top-k
/// eigenvectors scaled by sqrt of their (floored) eigenvalues, and read the
/// next communalities off the row sums of squared loadings. Stops when the
/// largest communality change drops below `tol`. Non-convergence returns the
/// last iterate with `converged = false`.
pub fn principal_axis_factoring(
    r: &Matrix,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<PafSolution> {
    let p = r.rows();
    if r.cols() != p {
        return Err(Error::DimensionMismatch(format!(
            "correlation matrix is {}x{}",
            r.rows(),
            r.cols()
        )));
    }
    if k == 0 || k >= p {
        return Err(Error::InvalidInput(format!(
            "factor count {k} must be in 1..{p}"
        )));
    }

    let mut heywood_set = alloc::collections::BTreeSet::new();
    let mut h = initial_communalities(r, &mut heywood_set);
    let mut loadings = Matrix::zeros(p, k);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=max_iter {
        iterations = iter;
        let mut reduced = r.clone();
        for i in 0..p {
            reduced[(i, i)] = h[i];
        }
        let eig = linalg::sym_eigen(&reduced)?;
        for i in 0..p {
            for j in 0..k {
                loadings[(i, j)] = eig.vectors[(i, j)] * eig.values[j].max(0.0).sqrt();
            }
        }
        let mut max_change: f64 = 0.0;
        for i in 0..p {
            let mut hi: f64 = (0..k).map(|j| loadings[(i, j)] * loadings[(i, j)]).sum();
            if hi > HEYWOOD_CAP {
                hi = HEYWOOD_CAP;
                heywood_set.insert(i);
            }
            max_change = max_change.max((hi - h[i]).abs());
            h[i] = hi;
        }
        if max_change < tol {
            converged = true;
            break;
        }
    }

    Ok(PafSolution {
        loadings,
        communalities: h,
        converged,
        iterations,
        heywood: heywood_set.into_iter().collect(),
    })
}

/// Squared multiple correlations, falling back to the largest absolute
/// off-diagonal per row when R is singular.
fn initial_communalities(
    r: &Matrix,
    heywood: &mut alloc::collections::BTreeSet<usize>,
) -> Vec<f64> {
    let p = r.rows();
    match linalg::inverse(r) {
        Ok(inv) => (0..p)
            .map(|i| {
                let smc = 1.0 - 1.0 / inv[(i, i)];
                if smc > HEYWOOD_CAP {
                    heywood.insert(i);
                    HEYWOOD_CAP
                } else {
                    smc.max(0.0)
                }
            })
            .collect(),
        Err(_) => (0..p)
            .map(|i| {
                (0..p)
                    .filter(|&j| j != i)
                    .map(|j| r[(i, j)].abs())
                    .fold(0.0_f64, f64::max)
            })
            .collect(),
    }
}

/// Raw varimax criterion: summed column variances of squared loadings.
pub fn varimax_criterion(l: &Matrix) -> f64 {
    let p = l.rows() as f64;
    let mut v = 0.0;
    for j in 0..l.cols() {
        let mut s2 = 0.0;
        let mut s4 = 0.0;
        for i in 0..l.rows() {
            let sq = l[(i, j)] * l[(i, j)];
            s2 += sq;
            s4 += sq * sq;
        }
        v += s4 / p - (s2 / p) * (s2 / p);
    }
    v
}

/// Orthogonal varimax rotation via pairwise planar rotations.
///
/// Returns the rotated loadings and the accumulated rotation matrix T with
/// `rotated = input x T`. A single factor is returned unchanged.
pub fn varimax(l: &Matrix) -> (Matrix, Matrix) {
    let p = l.rows();
    let k = l.cols();
    let mut rotated = l.clone();
    let mut t = Matrix::identity(k);
    if k < 2 || p == 0 {
        return (rotated, t);
    }

    let mut last = varimax_criterion(&rotated);
    for _ in 0..100 {
        for a in 0..(k - 1) {
            for b in (a + 1)..k {
                let mut sum_u = 0.0;
                let mut sum_v = 0.0;
                let mut sum_c = 0.0;
                let mut sum_d = 0.0;
                for i in 0..p {
                    let x = rotated[(i, a)];
                    let y = rotated[(i, b)];
                    let u = x * x - y * y;
                    let v = 2.0 * x * y;
                    sum_u += u;
                    sum_v += v;
                    sum_c += u * u - v * v;
                    sum_d += 2.0 * u * v;
                }
                let pf = p as f64;
                let num = sum_d - 2.0 * sum_u * sum_v / pf;
                let den = sum_c - (sum_u * sum_u - sum_v * sum_v) / pf;
                let theta = 0.25 * num.atan2(den);
                if theta.abs() < 1e-12 {
                    continue;
                }
                let (s, c) = theta.sin_cos();
                for i in 0..p {
                    let x = rotated[(i, a)];
                    let y = rotated[(i, b)];
                    rotated[(i, a)] = c * x + s * y;
                    rotated[(i, b)] = c * y - s * x;
                }
                for i in 0..k {
                    let x = t[(i, a)];
                    let y = t[(i, b)];
                    t[(i, a)] = c * x + s * y;
                    t[(i, b)] = c * y - s * x;
                }
            }
        }
        let now = varimax_criterion(&rotated);
        if now - last < 1e-8 {
            break;
        }
        last = now;
    }
    (rotated, t)
}

/// Promax oblique rotation of varimax-rotated loadings.
///
/// Builds the power target sign(l) x |l|^kappa, solves the least-squares
/// transform toward it, and rescales its columns so the implied factor
/// correlation matrix has a unit diagonal. Returns (pattern, phi).
pub fn promax(l: &Matrix, kappa: u32) -> Result<(Matrix, Matrix)> {
    if kappa == 0 {
        return Err(Error::InvalidInput(String::from("kappa must be >= 1")));
    }
    let k = l.cols();
    if k < 2 {
        return Ok((l.clone(), Matrix::identity(k)));
    }

    let mut target = l.clone();
    for i in 0..l.rows() {
        for j in 0..k {
            let v = l[(i, j)];
            let sign = if v < 0.0 { -1.0 } else { 1.0 };
            target[(i, j)] = sign * v.abs().powi(kappa as i32);
        }
    }

    let lt = l.transpose();
    let gram = lt.matmul(l)?;
    let gram_inv = linalg::inverse(&gram).map_err(|_| {
        Error::SingularMatrix(String::from(
            "degenerate loadings in oblique transform; try a lower kappa",
        ))
    })?;
    let u0 = gram_inv.matmul(&lt.matmul(&target)?)?;

    let u0t_u0 = u0.transpose().matmul(&u0)?;
    let d_inv = linalg::inverse(&u0t_u0).map_err(|_| {
        Error::SingularMatrix(String::from(
            "degenerate oblique transform; try a lower kappa",
        ))
    })?;
    let mut u = u0;
    for j in 0..k {
        let scale = d_inv[(j, j)].sqrt();
        for i in 0..k {
            u[(i, j)] *= scale;
        }
    }

    let pattern = l.matmul(&u)?;
    let u_inv = linalg::inverse(&u).map_err(|_| {
        Error::SingularMatrix(String::from(
            "oblique transform is singular; try a lower kappa",
        ))
    })?;
    let mut phi = u_inv.matmul(&u_inv.transpose())?;
    phi.symmetrize();
    Ok((pattern, phi))
}

/// Share of total variance explained by a loadings matrix: sum of squared
/// loadings over the variable count.
pub fn explained_variance(l: &Matrix) -> f64 {
    if l.rows() == 0 {
        return 0.0;
    }
    let ss: f64 = l.data().iter().map(|v| v * v).sum();
    ss / l.rows() as f64
}

/// Fit the full factor model on encoded features: correlation matrix, PAF,
/// then the configured rotation.
pub fn fit_factor_model(x: &FeatureMatrix, opts: &FactorOptions) -> Result<FactorModel> {
    let r = correlation_matrix(x)?;
    let eigenvalues = linalg::sym_eigen(&r)?.values;
    let paf = principal_axis_factoring(&r, opts.n_factors, opts.tol, opts.max_iter)?;

    let (pattern, phi) = match opts.rotation {
        Rotation::None => (
            paf.loadings.clone(),
            Matrix::identity(opts.n_factors),
        ),
        Rotation::Varimax => {
            let (rotated, _) = varimax(&paf.loadings);
            (rotated, Matrix::identity(opts.n_factors))
        }
        Rotation::Promax { kappa } => {
            let (rotated, _) = varimax(&paf.loadings);
            promax(&rotated, kappa)?
        }
    };

    let structure = pattern.matmul(&phi)?;
    Ok(FactorModel {
        variables: x.names().to_vec(),
        rotation: opts.rotation,
        explained_variance: explained_variance(&paf.loadings),
        explained_variance_structure: explained_variance(&structure),
        unrotated: paf.loadings,
        pattern,
        phi,
        communalities: paf.communalities,
        eigenvalues,
        converged: paf.converged,
        iterations: paf.iterations,
        heywood: paf.heywood,
        correlation: r,
    })
}

/// Thurstone regression factor scores: standardize the data and project
/// through R^-1 times the structure matrix.
pub fn factor_scores(x: &FeatureMatrix, m: &FactorModel) -> Result<Matrix> {
    if x.names() != m.variables.as_slice() {
        return Err(Error::InvalidInput(String::from(
            "feature columns do not match the factor model's variables",
        )));
    }
    let z = standardize_columns(x.matrix())?;
    let r_inv = linalg::inverse(&m.correlation)?;
    let weights = r_inv.matmul(&m.structure())?;
    z.matmul(&weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ColumnKind;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn feature_matrix(values: Matrix) -> FeatureMatrix {
        let n = values.rows();
        let p = values.cols();
        FeatureMatrix::new(
            (0..n).map(|i| format!("r{i}")).collect(),
            (0..p).map(|j| format!("v{j}")).collect(),
            vec![ColumnKind::Score; p],
            values,
        )
        .unwrap()
    }

    fn uniform_r(p: usize, off: f64) -> Matrix {
        let mut r = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                r[(i, j)] = if i == j { 1.0 } else { off };
            }
        }
        r
    }

    #[test]
    fn correlation_of_copy_and_negation() {
        let mut data = Matrix::zeros(5, 3);
        for i in 0..5 {
            let v = i as f64;
            data[(i, 0)] = v;
            data[(i, 1)] = v; // exact copy
            data[(i, 2)] = -v; // exact negation
        }
        let r = correlations_of(&data).unwrap();
        assert_abs_diff_eq!(r[(0, 1)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[(0, 2)], -1.0, epsilon = 1e-12);
        assert_eq!(r[(0, 0)], 1.0);
        assert_abs_diff_eq!(r.max_abs_diff(&r.transpose()), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn correlation_rejects_constant_column_and_short_input() {
        let mut data = Matrix::zeros(4, 2);
        for i in 0..4 {
            data[(i, 0)] = i as f64;
            data[(i, 1)] = 7.0;
        }
        assert!(matches!(
            correlations_of(&data),
            Err(Error::ConstantColumn(_))
        ));
        let one_row = Matrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(correlations_of(&one_row).is_err());
    }

    #[test]
    fn correlation_of_independent_noise_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let mut data = Matrix::zeros(n, 3);
        for i in 0..n {
            for j in 0..3 {
                // sum of uniforms is close enough to normal for this check
                let v: f64 = (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0;
                data[(i, j)] = v;
            }
        }
        let r = correlations_of(&data).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(r[(i, j)].abs() < 0.05, "r[{i},{j}] = {}", r[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn paf_identity_correlation_gives_zero_loadings() {
        let r = Matrix::identity(6);
        let sol = principal_axis_factoring(&r, 2, 1e-6, 100).unwrap();
        for v in sol.loadings.data() {
            assert!(v.abs() < 1e-8);
        }
        for h in &sol.communalities {
            assert!(h.abs() < 1e-8);
        }
    }

    #[test]
    fn paf_recovers_uniform_single_factor() {
        // All off-diagonals 0.64 is the one-factor model with loading 0.8;
        // the PAF fixed point reproduces it.
        let r = uniform_r(8, 0.64);
        let sol = principal_axis_factoring(&r, 1, 1e-8, 200).unwrap();
        assert!(sol.converged);
        for i in 0..8 {
            assert_abs_diff_eq!(sol.loadings[(i, 0)].abs(), 0.8, epsilon = 1e-3);
        }
        // communalities are exactly the row sums of squared loadings
        for i in 0..8 {
            let ss: f64 = (0..1).map(|j| sol.loadings[(i, j)].powi(2)).sum();
            assert_abs_diff_eq!(sol.communalities[i], ss, epsilon = 1e-10);
        }
    }

    #[test]
    fn paf_rejects_bad_factor_count() {
        let r = Matrix::identity(4);
        assert!(principal_axis_factoring(&r, 4, 1e-6, 10).is_err());
        assert!(principal_axis_factoring(&r, 0, 1e-6, 10).is_err());
    }

    #[test]
    fn paf_singular_r_uses_fallback_start() {
        // duplicated variable makes R exactly singular
        let mut r = uniform_r(4, 0.3);
        r[(0, 1)] = 1.0;
        r[(1, 0)] = 1.0;
        let sol = principal_axis_factoring(&r, 1, 1e-6, 200).unwrap();
        assert!(sol.loadings.data().iter().all(|v| v.is_finite()));
    }

    fn simple_structure() -> Matrix {
        Matrix::from_rows(&[
            vec![0.9, 0.0],
            vec![0.8, 0.0],
            vec![0.7, 0.0],
            vec![0.0, 0.85],
            vec![0.0, 0.75],
            vec![0.0, 0.65],
        ])
        .unwrap()
    }

    fn rotate_by(l: &Matrix, theta: f64) -> Matrix {
        let (s, c) = theta.sin_cos();
        let rot = Matrix::from_rows(&[vec![c, -s], vec![s, c]]).unwrap();
        l.matmul(&rot).unwrap()
    }

    /// |congruence| between column `a` of `x` and column `b` of `y`.
    fn col_congruence(x: &Matrix, a: usize, y: &Matrix, b: usize) -> f64 {
        let mut num = 0.0;
        let mut dx = 0.0;
        let mut dy = 0.0;
        for i in 0..x.rows() {
            num += x[(i, a)] * y[(i, b)];
            dx += x[(i, a)] * x[(i, a)];
            dy += y[(i, b)] * y[(i, b)];
        }
        (num / (dx * dy).sqrt()).abs()
    }

    #[test]
    fn varimax_recovers_rotated_simple_structure() {
        let ideal = simple_structure();
        let mixed = rotate_by(&ideal, core::f64::consts::FRAC_PI_4);
        let (rotated, t) = varimax(&mixed);

        // rotation is orthonormal and reproduces the output
        let tt = t.transpose().matmul(&t).unwrap();
        assert!(tt.max_abs_diff(&Matrix::identity(2)) < 1e-9);
        assert!(mixed.matmul(&t).unwrap().max_abs_diff(&rotated) < 1e-9);

        // row communalities preserved
        for i in 0..mixed.rows() {
            let before: f64 = mixed.row(i).iter().map(|v| v * v).sum();
            let after: f64 = rotated.row(i).iter().map(|v| v * v).sum();
            assert_abs_diff_eq!(before, after, epsilon = 1e-9);
        }

        // recovered columns match the planted ones up to permutation/sign
        let direct = col_congruence(&rotated, 0, &ideal, 0).max(col_congruence(&rotated, 0, &ideal, 1));
        assert!(direct > 0.999, "congruence {direct}");
        let second = col_congruence(&rotated, 1, &ideal, 0).max(col_congruence(&rotated, 1, &ideal, 1));
        assert!(second > 0.999, "congruence {second}");
        assert!(varimax_criterion(&rotated) >= varimax_criterion(&mixed) - 1e-12);
    }

    #[test]
    fn varimax_is_stationary_on_simple_structure() {
        let ideal = simple_structure();
        let (rotated, _) = varimax(&ideal);
        for i in 0..ideal.rows() {
            for j in 0..2 {
                assert_abs_diff_eq!(rotated[(i, j)].abs(), ideal[(i, j)].abs(), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn varimax_single_factor_is_identity() {
        let l = Matrix::from_rows(&[vec![0.5], vec![0.6], vec![0.7]]).unwrap();
        let (rotated, t) = varimax(&l);
        assert_eq!(rotated, l);
        assert_eq!(t, Matrix::identity(1));
    }

    #[test]
    fn promax_kappa_one_returns_input() {
        let l = simple_structure();
        let (pattern, phi) = promax(&l, 1).unwrap();
        assert!(pattern.max_abs_diff(&l) < 1e-9);
        assert!(phi.max_abs_diff(&Matrix::identity(2)) < 1e-9);
    }

    #[test]
    fn promax_of_simple_structure_is_nearly_orthogonal() {
        let (pattern, phi) = promax(&simple_structure(), 4).unwrap();
        assert!(phi[(0, 1)].abs() < 0.05, "phi12 = {}", phi[(0, 1)]);
        assert_abs_diff_eq!(phi[(0, 0)], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(phi[(1, 1)], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(phi[(0, 1)], phi[(1, 0)], epsilon = 1e-12);
        // pattern keeps the simple-structure shape
        assert!(pattern[(0, 0)].abs() > 0.5);
        assert!(pattern[(0, 1)].abs() < 0.2);
    }

    #[test]
    fn explained_variance_examples() {
        let mut l = Matrix::zeros(8, 1);
        for i in 0..4 {
            l[(i, 0)] = 1.0;
        }
        assert_eq!(explained_variance(&l), 0.5);
        assert_eq!(explained_variance(&Matrix::zeros(5, 2)), 0.0);
    }

    #[test]
    fn factor_scores_identity_model_returns_standardized_data() {
        let data = Matrix::from_rows(&[
            vec![1.0, 10.0],
            vec![2.0, 30.0],
            vec![3.0, 20.0],
            vec![4.0, 40.0],
        ])
        .unwrap();
        let x = feature_matrix(data.clone());
        let m = FactorModel {
            variables: x.names().to_vec(),
            rotation: Rotation::None,
            unrotated: Matrix::identity(2),
            pattern: Matrix::identity(2),
            phi: Matrix::identity(2),
            communalities: vec![1.0, 1.0],
            eigenvalues: vec![1.0, 1.0],
            explained_variance: 1.0,
            explained_variance_structure: 1.0,
            converged: true,
            iterations: 1,
            heywood: vec![],
            correlation: Matrix::identity(2),
        };
        let scores = factor_scores(&x, &m).unwrap();
        let z = standardize_columns(&data).unwrap();
        assert!(scores.max_abs_diff(&z) < 1e-12);
    }

    #[test]
    fn factor_scores_invariant_under_row_duplication() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let mut data = Matrix::zeros(n, 4);
        for i in 0..n {
            let f = rng.gen::<f64>() * 2.0 - 1.0;
            for j in 0..4 {
                data[(i, j)] = 0.8 * f + 0.4 * (rng.gen::<f64>() - 0.5);
            }
        }
        let x = feature_matrix(data.clone());
        let m = fit_factor_model(
            &x,
            &FactorOptions {
                n_factors: 2,
                ..FactorOptions::default()
            },
        )
        .unwrap();
        let scores = factor_scores(&x, &m).unwrap();

        let mut doubled = Matrix::zeros(2 * n, 4);
        for i in 0..n {
            for j in 0..4 {
                doubled[(i, j)] = data[(i, j)];
                doubled[(n + i, j)] = data[(i, j)];
            }
        }
        let x2 = feature_matrix(doubled);
        let scores2 = factor_scores(&x2, &m).unwrap();
        for i in 0..n {
            for j in 0..scores.cols() {
                assert_abs_diff_eq!(scores[(i, j)], scores2[(i, j)], epsilon = 1e-12);
                assert_abs_diff_eq!(scores[(i, j)], scores2[(n + i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn variable_reordering_permutes_loading_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 200;
        let p = 5;
        let mut data = Matrix::zeros(n, p);
        for i in 0..n {
            let f = rng.gen::<f64>() * 2.0 - 1.0;
            for j in 0..p {
                let w = if j < 3 { 0.9 } else { 0.2 };
                data[(i, j)] = w * f + 0.5 * (rng.gen::<f64>() - 0.5);
            }
        }
        let perm = [3usize, 0, 4, 1, 2];
        let mut permuted = Matrix::zeros(n, p);
        for i in 0..n {
            for (new_j, &old_j) in perm.iter().enumerate() {
                permuted[(i, new_j)] = data[(i, old_j)];
            }
        }
        let r_a = correlations_of(&data).unwrap();
        let r_b = correlations_of(&permuted).unwrap();
        let sol_a = principal_axis_factoring(&r_a, 2, 1e-8, 300).unwrap();
        let sol_b = principal_axis_factoring(&r_b, 2, 1e-8, 300).unwrap();
        for (new_j, &old_j) in perm.iter().enumerate() {
            for f in 0..2 {
                assert_abs_diff_eq!(
                    sol_b.loadings[(new_j, f)].abs(),
                    sol_a.loadings[(old_j, f)].abs(),
                    epsilon = 1e-6
                );
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn varimax_never_decreases_criterion(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = 6 + (seed % 4) as usize;
            let k = 2 + (seed % 2) as usize;
            let mut l = Matrix::zeros(p, k);
            for v in l.data_mut() {
                *v = rng.gen::<f64>() * 1.6 - 0.8;
            }
            let (rotated, t) = varimax(&l);
            prop_assert!(varimax_criterion(&rotated) >= varimax_criterion(&l) - 1e-12);
            let tt = t.transpose().matmul(&t).unwrap();
            prop_assert!(tt.max_abs_diff(&Matrix::identity(k)) < 1e-9);
            for i in 0..p {
                let before: f64 = l.row(i).iter().map(|v| v * v).sum();
                let after: f64 = rotated.row(i).iter().map(|v| v * v).sum();
                prop_assert!((before - after).abs() < 1e-9);
            }
        }

        #[test]
        fn promax_phi_is_valid_correlation(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut l = Matrix::zeros(8, 3);
            for (i, v) in l.data_mut().iter_mut().enumerate() {
                let block = (i / 3) % 3;
                let col = i % 3;
                *v = if block == col { 0.6 + 0.3 * rng.gen::<f64>() } else { 0.2 * (rng.gen::<f64>() - 0.5) };
            }
            let (rotated, _) = varimax(&l);
            let (_, phi) = promax(&rotated, 4).unwrap();
            for j in 0..3 {
                prop_assert!((phi[(j, j)] - 1.0).abs() < 1e-8);
            }
            prop_assert!(phi.max_abs_diff(&phi.transpose()) < 1e-10);
            let eig = linalg::sym_eigen(&phi).unwrap();
            for v in &eig.values {
                prop_assert!(*v > -1e-8);
            }
        }
    }
}
