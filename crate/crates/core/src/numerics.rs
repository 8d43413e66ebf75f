//! Small symmetric-matrix linear algebra and chi-square distribution
//! functions.
//!
//! Everything here is self-contained: the solver is an unblocked Cholesky
//! factorization sized for the 5x5 and 16x16 matrices used by the test, and
//! the chi-square CDF is computed from the regularized lower incomplete gamma
//! function (series expansion for small arguments, continued fraction for
//! large ones, switching at `z = a + 1`).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("matrix is not positive definite: pivot {index} = {value:e}")]
    NotPositiveDefinite { index: usize, value: f64 },
    #[error("domain error: {0}")]
    Domain(String),
}

/// A symmetric matrix; the constructor stores `(M + M') / 2` so symmetry
/// holds exactly regardless of input roundoff.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<const N: usize> {
    data: [[f64; N]; N],
}

pub type SymMatrix5 = SymMatrix<5>;
pub type SymMatrix16 = SymMatrix<16>;

impl<const N: usize> SymMatrix<N> {
    pub fn new(m: [[f64; N]; N]) -> Self {
        let mut data = [[0.0; N]; N];
        for i in 0..N {
            for j in 0..N {
                data[i][j] = 0.5 * (m[i][j] + m[j][i]);
            }
        }
        Self { data }
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = [[0.0; N]; N];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(i, j);
            }
        }
        Self::new(m)
    }

    pub fn zeros() -> Self {
        Self {
            data: [[0.0; N]; N],
        }
    }

    pub fn identity() -> Self {
        let mut m = [[0.0; N]; N];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { data: m }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i][j]
    }

    pub fn rows(&self) -> &[[f64; N]; N] {
        &self.data
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut m = self.data;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= c;
            }
        }
        Self { data: m }
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// Relative pivot tolerance for the positive-definiteness check.
pub const PD_TOLERANCE: f64 = 1e-12;

/// Solve `M x = b` for symmetric positive definite `M` via Cholesky.
///
/// A pivot at or below `PD_TOLERANCE` times the largest diagonal entry fails
/// the factorization with the offending index.
pub fn solve_spd<const N: usize>(
    m: &SymMatrix<N>,
    b: &[f64; N],
) -> Result<[f64; N], NumericsError> {
    let max_diag = (0..N).fold(0.0f64, |acc, i| acc.max(m.get(i, i)));
    let tol = PD_TOLERANCE * max_diag;

    // Lower-triangular factor, M = L L'.
    let mut l = [[0.0f64; N]; N];
    for j in 0..N {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d <= tol {
            return Err(NumericsError::NotPositiveDefinite { index: j, value: d });
        }
        l[j][j] = d.sqrt();
        for i in j + 1..N {
            let mut v = m.get(i, j);
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            l[i][j] = v / l[j][j];
        }
    }

    // Forward then back substitution.
    let mut y = [0.0f64; N];
    for i in 0..N {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i][k] * y[k];
        }
        y[i] = v / l[i][i];
    }
    let mut x = [0.0f64; N];
    for i in (0..N).rev() {
        let mut v = y[i];
        for k in i + 1..N {
            v -= l[k][i] * x[k];
        }
        x[i] = v / l[i][i];
    }
    Ok(x)
}

// Lanczos approximation, g = 7, 9 terms; coefficients kept at published
// precision.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma(z: f64) -> f64 {
    if z < 0.5 {
        // reflection formula
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 1000;

/// Series expansion of P(a, z); accurate for z < a + 1.
fn lower_gamma_series(a: f64, z: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    for k in 1..GAMMA_MAX_ITER {
        term *= z / (a + k as f64);
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * (a * z.ln() - z - ln_gamma(a)).exp()
}

/// Continued fraction for Q(a, z) by modified Lentz; accurate for z >= a + 1.
fn upper_gamma_cf(a: f64, z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    h * (a * z.ln() - z - ln_gamma(a)).exp()
}

/// Regularized lower incomplete gamma function P(a, z).
pub fn reg_lower_gamma(a: f64, z: f64) -> Result<f64, NumericsError> {
    if a <= 0.0 {
        return Err(NumericsError::Domain(format!(
            "shape must be positive, got {a}"
        )));
    }
    if z < 0.0 {
        return Err(NumericsError::Domain(format!(
            "argument must be >= 0, got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z < a + 1.0 {
        Ok(lower_gamma_series(a, z))
    } else {
        Ok(1.0 - upper_gamma_cf(a, z))
    }
}

/// Chi-square CDF with `df` degrees of freedom.
pub fn chi2_cdf(x: f64, df: f64) -> Result<f64, NumericsError> {
    if df <= 0.0 {
        return Err(NumericsError::Domain(format!(
            "degrees of freedom must be positive, got {df}"
        )));
    }
    if x < 0.0 {
        return Err(NumericsError::Domain(format!(
            "chi2_cdf argument must be >= 0, got {x}"
        )));
    }
    reg_lower_gamma(df / 2.0, x / 2.0)
}

/// Chi-square density, used as the quantile search derivative.
fn chi2_pdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = df / 2.0;
    ((a - 1.0) * x.ln() - x / 2.0 - a * 2.0f64.ln() - ln_gamma(a)).exp()
}

/// Chi-square quantile: the `x` with `chi2_cdf(x, df) = p`, found by a
/// bisection-safeguarded Newton search.
pub fn chi2_quantile(p: f64, df: f64) -> Result<f64, NumericsError> {
    if !(0.0..=1.0).contains(&p) || p == 0.0 || p == 1.0 {
        return Err(NumericsError::Domain(format!(
            "quantile probability must lie in (0, 1), got {p}"
        )));
    }
    if df <= 0.0 {
        return Err(NumericsError::Domain(format!(
            "degrees of freedom must be positive, got {df}"
        )));
    }

    let mut lo = 0.0f64;
    let mut hi = df + 10.0;
    while chi2_cdf(hi, df)? < p {
        hi *= 2.0;
    }

    let mut x = df; // start near the mean
    for _ in 0..200 {
        let fx = chi2_cdf(x, df)? - p;
        if fx.abs() <= 1e-12 {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let deriv = chi2_pdf(x, df);
        let newton = x - fx / deriv;
        x = if deriv > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn solve_identity() {
        let m = SymMatrix5::identity();
        let b = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(solve_spd(&m, &b).unwrap(), b);
    }

    #[test]
    fn solve_scalar_matrix() {
        let m = SymMatrix5::identity().scale(2.0);
        let x = solve_spd(&m, &[2.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-15);
        assert_eq!(x[1..], [0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn solve_diagonal() {
        let m = SymMatrix5::from_fn(|i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        let x = solve_spd(&m, &[1.0; 5]).unwrap();
        for (i, v) in x.iter().enumerate() {
            assert_abs_diff_eq!(*v, 1.0 / (i + 1) as f64, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_matrix_is_not_positive_definite() {
        let m = SymMatrix5::zeros();
        let err = solve_spd(&m, &[1.0; 5]).unwrap_err();
        assert!(matches!(
            err,
            NumericsError::NotPositiveDefinite { index: 0, .. }
        ));
    }

    #[test]
    fn symmetrization_is_idempotent() {
        let raw = [[1.0, 2.0], [0.0, 3.0]];
        let m = SymMatrix::<2>::new(raw);
        let again = SymMatrix::<2>::new(*m.rows());
        assert_eq!(m, again);
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(1, 0), 1.0);
    }

    // Independent check for the CDF: adaptive Simpson quadrature of the
    // chi-square density after the substitution t = u^2, which removes the
    // endpoint singularity for df < 2. Shares no code with the
    // series/continued-fraction evaluation above.
    fn chi2_cdf_quadrature(x: f64, df: f64) -> f64 {
        fn integrand(u: f64, df: f64) -> f64 {
            if u <= 0.0 {
                return if df == 1.0 {
                    2.0 * (-(0.5) * 2.0f64.ln() - ln_gamma(0.5)).exp()
                } else {
                    0.0
                };
            }
            (2.0f64.ln() + (df - 1.0) * u.ln()
                - u * u / 2.0
                - (df / 2.0) * 2.0f64.ln()
                - ln_gamma(df / 2.0))
            .exp()
        }
        fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
            (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        }
        #[allow(clippy::too_many_arguments)]
        fn adaptive(
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            df: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = integrand(lm, df);
            let frm = integrand(rm, df);
            let left = simpson(a, m, fa, flm, fm);
            let right = simpson(m, b, fm, frm, fb);
            if depth == 0 || (left + right - whole).abs() < 1e-13 {
                left + right + (left + right - whole) / 15.0
            } else {
                adaptive(a, m, fa, flm, fm, left, df, depth - 1)
                    + adaptive(m, b, fm, frm, fb, right, df, depth - 1)
            }
        }
        if x == 0.0 {
            return 0.0;
        }
        let hi = x.sqrt();
        let fa = integrand(0.0, df);
        let fb = integrand(hi, df);
        let fm = integrand(0.5 * hi, df);
        adaptive(0.0, hi, fa, fm, fb, simpson(0.0, hi, fa, fm, fb), df, 40)
    }

    #[test]
    fn cdf_lower_endpoint() {
        assert_eq!(chi2_cdf(0.0, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn cdf_matches_quadrature_oracle() {
        for i in 1..=80 {
            let x = i as f64 * 0.5;
            let got = chi2_cdf(x, 5.0).unwrap();
            let want = chi2_cdf_quadrature(x, 5.0);
            assert_abs_diff_eq!(got, want, epsilon = 1e-10);
        }
        // other degrees of freedom stay available for cross-checks
        for df in [1.0, 2.0, 3.0, 10.0] {
            for x in [0.3, 1.7, 5.0, 19.0] {
                assert_abs_diff_eq!(
                    chi2_cdf(x, df).unwrap(),
                    chi2_cdf_quadrature(x, df),
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn cdf_value_at_95th_percentile() {
        assert_abs_diff_eq!(chi2_cdf(11.0705, 5.0).unwrap(), 0.95, epsilon = 1e-4);
    }

    #[test]
    fn cdf_strictly_increasing_on_grid() {
        let mut prev = chi2_cdf(0.0, 5.0).unwrap();
        let mut x = 0.5;
        while x <= 40.0 {
            let cur = chi2_cdf(x, 5.0).unwrap();
            assert!(cur > prev, "cdf not increasing at x = {x}");
            prev = cur;
            x += 0.5;
        }
    }

    #[test]
    fn cdf_rejects_negative_argument() {
        assert!(chi2_cdf(-0.1, 5.0).is_err());
    }

    #[test]
    fn quantile_round_trip() {
        let p = chi2_cdf(7.3, 5.0).unwrap();
        assert_abs_diff_eq!(chi2_quantile(p, 5.0).unwrap(), 7.3, epsilon = 1e-8);
    }

    #[test]
    fn quantile_reference_values() {
        assert_abs_diff_eq!(chi2_quantile(0.95, 5.0).unwrap(), 11.0705, epsilon = 1e-3);
        assert_abs_diff_eq!(chi2_quantile(0.99, 5.0).unwrap(), 15.0863, epsilon = 1e-3);
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        assert!(chi2_quantile(0.0, 5.0).is_err());
        assert!(chi2_quantile(1.0, 5.0).is_err());
        assert!(chi2_quantile(-0.2, 5.0).is_err());
    }

    #[test]
    fn cdf_and_quantile_are_mutual_inverses() {
        let mut p = 0.001;
        while p <= 0.999 {
            let x = chi2_quantile(p, 5.0).unwrap();
            assert_abs_diff_eq!(chi2_cdf(x, 5.0).unwrap(), p, epsilon = 1e-8);
            p += 0.013;
        }
    }

    #[test]
    fn solve_recovers_solution_of_random_spd_systems() {
        // LCG noise is plenty for coverage here
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..200 {
            let a: [[f64; 5]; 5] = std::array::from_fn(|_| std::array::from_fn(|_| next()));
            // A'A plus a ridge bounding the condition number by ~1e6
            let mut m = [[0.0f64; 5]; 5];
            for i in 0..5 {
                for j in 0..5 {
                    m[i][j] = (0..5).map(|k| a[k][i] * a[k][j]).sum();
                }
            }
            let trace: f64 = (0..5).map(|i| m[i][i]).sum();
            let ridge = trace * 1e-6;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] += ridge;
            }
            let m = SymMatrix5::new(m);

            let x_true: [f64; 5] = std::array::from_fn(|_| next());
            let mut b = [0.0f64; 5];
            for i in 0..5 {
                b[i] = (0..5).map(|j| m.get(i, j) * x_true[j]).sum();
            }
            let x = solve_spd(&m, &b).unwrap();

            let norm = |v: &[f64; 5]| v.iter().map(|t| t * t).sum::<f64>().sqrt();
            let mut resid = [0.0f64; 5];
            for i in 0..5 {
                resid[i] = (0..5).map(|j| m.get(i, j) * x[j]).sum::<f64>() - b[i];
            }
            assert!(norm(&resid) <= 1e-10 * norm(&b).max(1e-300));
            let diff: [f64; 5] = std::array::from_fn(|i| x[i] - x_true[i]);
            assert!(norm(&diff) <= 1e-9 * norm(&x_true).max(1e-300));
        }
    }
}
