//! Coefficient extraction for products of affine factors.
//!
//! The polynomial `f(z) = prod_j (constant_j + slope_j z)` is sampled at the
//! `P`-th roots of unity and its coefficients recovered by the inverse
//! transform. All products run in [`ScaledComplex`] so that thousands of
//! factors never overflow.
//!
//! Sampling on the unit circle recovers every coefficient to an absolute
//! error of roughly `eps * max_b c_b`, which is useless for coefficients many
//! orders of magnitude below the largest. [`polynomial_coefficients`]
//! therefore samples on circles of radius `r` chosen so that the tilted
//! coefficients `c_b r^b` peak at the index being extracted, and sweeps `r`
//! until every requested coefficient has been read off near its own peak.

mod scaled;

pub use scaled::{ScaledComplex, ScaledReal};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::PersistentUser;

/// Default cap on [`convolution_expand`] inputs.
pub const CONVOLUTION_LIMIT: usize = 64;

/// Relative imaginary residue tolerated per coefficient.
const IMAG_RELATIVE_TOL: f64 = 1e-9;
/// Absolute residue tolerated, as a fraction of the largest coefficient.
const IMAG_ABSOLUTE_TOL: f64 = 1e-12;
/// A tilted coefficient is accepted once it is within this factor of the
/// largest tilted coefficient on the same circle.
const ACCEPT_FRACTION: f64 = 1e-3;

/// One factor `constant + slope * z` of the generating polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFactor {
    pub constant: f64,
    pub slope: f64,
}

impl AffineFactor {
    pub fn new(constant: f64, slope: f64) -> Self {
        Self { constant, slope }
    }

    /// `1 + alpha/beta + z * alpha u / (beta v)`: the user's Idle, Waiting and
    /// Transmitting weights, with the transmit weight marked by `z`.
    pub fn for_user(user: &PersistentUser) -> Self {
        Self {
            constant: 1.0 + user.wait_weight(),
            slope: user.transmit_weight(),
        }
    }

    fn at(&self, z: Complex64) -> Complex64 {
        Complex64::new(self.constant, 0.0) + z * self.slope
    }
}

/// `exp(-2 pi i k / points)` for `k` in `0..points`.
fn roots_of_unity(points: usize) -> Vec<Complex64> {
    (0..points)
        .map(|k| {
            let (sin, cos) = (std::f64::consts::TAU * k as f64 / points as f64).sin_cos();
            Complex64::new(cos, -sin)
        })
        .collect()
}

fn evaluate_on_circle(factors: &[AffineFactor], points: usize, radius: f64) -> Vec<ScaledComplex> {
    roots_of_unity(points)
        .into_iter()
        .map(|w| {
            let z = w * radius;
            factors
                .iter()
                .fold(ScaledComplex::ONE, |acc, f| acc * f.at(z))
        })
        .collect()
}

/// Samples `prod_j (constant_j + slope_j z)` at `z = exp(-2 pi i t / points)`
/// for `t` in `0..points`.
pub fn evaluate_at_roots(factors: &[AffineFactor], points: usize) -> Vec<ScaledComplex> {
    assert!(points >= 1, "need at least one sample point");
    evaluate_on_circle(factors, points, 1.0)
}

/// Inverts [`evaluate_at_roots`]: returns the first `wanted` coefficients of
/// the polynomial (of degree below `values.len()`) whose samples are `values`.
///
/// Imaginary parts must vanish to within `1e-9 |Re| + 1e-12 M`, where `M` is
/// the largest coefficient modulus; a larger residue means the samples did not
/// come from a real polynomial at this precision and is reported as a
/// conditioning error. Negative real parts within the same noise floor are
/// clamped to zero.
pub fn inverse_dft_coefficients(
    values: &[ScaledComplex],
    wanted: usize,
) -> Result<Vec<ScaledReal>> {
    let points = values.len();
    if points == 0 {
        return Err(Error::InvalidParameter("no samples to invert".into()));
    }
    if wanted > points {
        return Err(Error::InvalidParameter(format!(
            "cannot recover {wanted} coefficients from {points} samples"
        )));
    }
    let exponent = values
        .iter()
        .filter(|v| !v.is_zero())
        .map(|v| v.exponent())
        .max()
        .unwrap_or(0);
    let plain: Vec<Complex64> = values.iter().map(|v| v.rescaled(exponent)).collect();
    let roots = roots_of_unity(points);
    let scale = 1.0 / points as f64;
    let raw: Vec<Complex64> = (0..points)
        .map(|b| {
            let sum = plain
                .iter()
                .enumerate()
                .fold(Complex64::new(0.0, 0.0), |acc, (t, c)| {
                    // conj(root) = exp(+2 pi i t b / P)
                    acc + c * roots[(t * b) % points].conj()
                });
            sum * scale
        })
        .collect();
    let largest = raw.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let floor = IMAG_ABSOLUTE_TOL * largest;
    raw.iter()
        .take(wanted)
        .enumerate()
        .map(|(b, c)| {
            if c.im.abs() > IMAG_RELATIVE_TOL * c.re.abs() + floor {
                return Err(Error::Conditioning(format!(
                    "coefficient {b} has imaginary residue {:.3e} against real part {:.3e}",
                    c.im, c.re
                )));
            }
            if c.re < -floor {
                return Err(Error::Conditioning(format!(
                    "coefficient {b} is negative ({:.3e}) beyond the noise floor",
                    c.re
                )));
            }
            Ok(ScaledReal::from_parts(c.re.max(0.0), exponent))
        })
        .collect()
}

/// Expected number of transmitters when every factor is tilted by `radius`,
/// i.e. `sum_j s_j r / (c_j + s_j r)`.
fn tilted_mean(factors: &[AffineFactor], log_radius: f64) -> f64 {
    factors
        .iter()
        .filter(|f| f.slope > 0.0)
        .map(|f| {
            // s r / (c + s r) = 1 / (1 + exp(ln c - ln s - ln r)), stable for any r
            let log_odds = f.constant.ln() - f.slope.ln() - log_radius;
            1.0 / (1.0 + log_odds.exp())
        })
        .sum()
}

/// Radius at which the tilted mean equals `target`; the mean is increasing in
/// the radius so bisection on `ln r` suffices.
fn saddle_radius(factors: &[AffineFactor], target: f64) -> f64 {
    let log_ratios = factors
        .iter()
        .filter(|f| f.slope > 0.0)
        .map(|f| f.constant.ln() - f.slope.ln());
    let (mut lo, mut hi) = log_ratios.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    });
    lo -= 50.0;
    hi += 50.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tilted_mean(factors, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// First `wanted` coefficients of `prod_j (constant_j + slope_j z)`, each
/// accurate to a small multiple of machine precision relative to itself.
///
/// Uses `factors.len() + 1` sample points per circle. Coefficients above the
/// polynomial's degree are exactly zero.
pub fn polynomial_coefficients(factors: &[AffineFactor], wanted: usize) -> Result<Vec<ScaledReal>> {
    for f in factors {
        if !(f.constant.is_finite() && f.slope.is_finite() && f.constant > 0.0 && f.slope >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "affine factor ({}, {}) needs a positive constant and nonnegative slope",
                f.constant, f.slope
            )));
        }
    }
    let points = factors.len() + 1;
    let degree = factors.iter().filter(|f| f.slope > 0.0).count();
    let mut found: Vec<Option<ScaledReal>> = vec![None; wanted];
    for slot in found.iter_mut().skip(degree + 1) {
        *slot = Some(ScaledReal::ZERO);
    }
    if degree == 0 {
        if let Some(first) = found.first_mut() {
            *first = Some(
                factors
                    .iter()
                    .map(|f| ScaledReal::from_f64(f.constant))
                    .fold(ScaledReal::ONE, |a, b| a * b),
            );
        }
        return Ok(found.into_iter().map(|c| c.expect("filled")).collect());
    }
    while let Some(next) = found.iter().position(Option::is_none) {
        let target = (next as f64).clamp(0.5, degree as f64 - 0.5);
        let radius = saddle_radius(factors, target);
        let tilted =
            inverse_dft_coefficients(&evaluate_on_circle(factors, points, radius), points)?;
        let peak = tilted
            .iter()
            .copied()
            .fold(ScaledReal::ZERO, |a, b| if b > a { b } else { a });
        let threshold = peak * ACCEPT_FRACTION;
        let radius = ScaledReal::from_f64(radius);
        for (b, slot) in found.iter_mut().enumerate().skip(next) {
            if slot.is_none() && (b == next || tilted[b] >= threshold) {
                *slot = Some(tilted[b] / radius.powi(b as u32));
            }
        }
    }
    Ok(found.into_iter().map(|c| c.expect("filled")).collect())
}

/// Coefficients by repeated convolution, one factor at a time. Independent of
/// the transform path; used to check it.
pub fn convolution_expand(factors: &[AffineFactor]) -> Result<Vec<ScaledReal>> {
    convolution_expand_with_limit(factors, CONVOLUTION_LIMIT)
}

pub fn convolution_expand_with_limit(
    factors: &[AffineFactor],
    limit: usize,
) -> Result<Vec<ScaledReal>> {
    if factors.len() > limit {
        return Err(Error::OracleScope {
            what: "factor count",
            estimate: factors.len() as f64,
            limit,
        });
    }
    let mut coeffs = vec![ScaledReal::ONE];
    for f in factors {
        let constant = ScaledReal::from_f64(f.constant);
        let slope = ScaledReal::from_f64(f.slope);
        let mut next = vec![ScaledReal::ZERO; coeffs.len() + 1];
        for (b, &c) in coeffs.iter().enumerate() {
            next[b] += c * constant;
            next[b + 1] += c * slope;
        }
        coeffs = next;
    }
    Ok(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() <= 1e-12 * b.norm().max(1.0)
    }

    fn to_f64(v: &[ScaledReal]) -> Vec<f64> {
        v.iter().map(|c| c.to_f64()).collect()
    }

    fn rel_err(a: ScaledReal, b: ScaledReal) -> f64 {
        if b.is_zero() {
            return a.to_f64().abs();
        }
        (a.ratio(b) - 1.0).abs()
    }

    #[test]
    fn empty_product_is_one() {
        let v = evaluate_at_roots(&[], 4);
        assert_eq!(v.len(), 4);
        assert!(v.iter().all(|c| c.to_complex() == Complex64::new(1.0, 0.0)));
        assert_eq!(
            to_f64(&inverse_dft_coefficients(&v[..], 1).unwrap()),
            vec![1.0]
        );
        assert_eq!(to_f64(&convolution_expand(&[]).unwrap()), vec![1.0]);
        assert_eq!(to_f64(&polynomial_coefficients(&[], 1).unwrap()), vec![1.0]);
    }

    #[test]
    fn single_factor_samples() {
        let v = evaluate_at_roots(&[AffineFactor::new(2.0, 0.5)], 2);
        assert!(close(v[0].to_complex(), Complex64::new(2.5, 0.0)));
        assert!(close(v[1].to_complex(), Complex64::new(1.5, 0.0)));
    }

    #[test]
    fn cube_samples_and_coefficients() {
        let factors = [AffineFactor::new(2.0, 0.5); 3];
        let v = evaluate_at_roots(&factors, 4);
        // (2 + 0.5 z)^3 = 8 + 6z + 1.5z^2 + 0.125z^3
        let poly = |z: Complex64| 8.0 + z * 6.0 + z * z * 1.5 + z * z * z * 0.125;
        let points = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        for (got, z) in v.iter().zip(points) {
            assert!(close(got.to_complex(), poly(z)), "{got:?} vs {}", poly(z));
        }
        assert_relative_eq!(v[0].to_complex().re, 15.625, epsilon = 1e-12);
        assert_relative_eq!(v[2].to_complex().re, 3.375, epsilon = 1e-12);

        let expected = [8.0, 6.0, 1.5, 0.125];
        for (got, want) in inverse_dft_coefficients(&v, 4)
            .unwrap()
            .iter()
            .zip(expected)
        {
            assert_relative_eq!(got.to_f64(), want, max_relative = 1e-13);
        }
        assert_eq!(
            to_f64(&convolution_expand(&factors).unwrap()),
            expected.to_vec()
        );
        for (got, want) in polynomial_coefficients(&factors, 4)
            .unwrap()
            .iter()
            .zip(expected)
        {
            assert_relative_eq!(got.to_f64(), want, max_relative = 1e-13);
        }
    }

    #[test]
    fn single_user_coefficients() {
        let user = PersistentUser {
            alpha: 1.0,
            beta: 1.0,
            u: 5.0,
            v: 10.0,
        };
        let f = AffineFactor::for_user(&user);
        assert_eq!(f, AffineFactor::new(2.0, 0.5));
        let c = inverse_dft_coefficients(&evaluate_at_roots(&[f], 2), 2).unwrap();
        assert_relative_eq!(c[0].to_f64(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(c[1].to_f64(), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn binomial_square() {
        let c = convolution_expand(&[AffineFactor::new(1.0, 1.0); 2]).unwrap();
        assert_eq!(to_f64(&c), vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn wanted_beyond_points_rejected() {
        let v = evaluate_at_roots(&[AffineFactor::new(1.0, 1.0)], 2);
        assert!(inverse_dft_coefficients(&v, 3).is_err());
    }

    #[test]
    fn complex_samples_trip_conditioning() {
        // samples of i + z, not a real polynomial
        let v: Vec<_> = roots_of_unity(2)
            .into_iter()
            .map(|w| ScaledComplex::from_complex(Complex64::new(0.0, 1.0) + w))
            .collect();
        assert!(matches!(
            inverse_dft_coefficients(&v, 2),
            Err(Error::Conditioning(_))
        ));
        // samples of 1 - z: negative coefficient
        let v: Vec<_> = roots_of_unity(2)
            .into_iter()
            .map(|w| ScaledComplex::from_complex(Complex64::new(1.0, 0.0) - w))
            .collect();
        assert!(matches!(
            inverse_dft_coefficients(&v, 2),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn convolution_limit() {
        let factors = vec![AffineFactor::new(1.0, 1.0); 65];
        assert!(matches!(
            convolution_expand(&factors),
            Err(Error::OracleScope { .. })
        ));
        assert!(convolution_expand_with_limit(&factors, 100).is_ok());
    }

    #[test]
    fn zero_slopes_lower_the_degree() {
        let factors = [AffineFactor::new(2.0, 0.0), AffineFactor::new(1.0, 3.0)];
        let c = polynomial_coefficients(&factors, 3).unwrap();
        assert_eq!(to_f64(&c)[2], 0.0);
        assert_relative_eq!(c[0].to_f64(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(c[1].to_f64(), 6.0, max_relative = 1e-14);
        let c = polynomial_coefficients(&[AffineFactor::new(2.0, 0.0)], 2).unwrap();
        assert_eq!(to_f64(&c), vec![2.0, 0.0]);
    }

    #[test]
    fn large_populations_do_not_overflow() {
        // f(1) = 1001^3000, far outside f64
        let factors = vec![AffineFactor::new(1.0 + 500.0, 500.0); 3000];
        let v = evaluate_at_roots(&factors, 8);
        assert_relative_eq!(
            v[0].norm().ln(),
            3000.0 * 1001f64.ln(),
            max_relative = 1e-12
        );
        let c = polynomial_coefficients(&factors[..400], 401).unwrap();
        // binomial: c_b = C(400, b) 501^(400-b) 500^b
        let log_c = |b: usize| {
            let mut l = 0.0;
            for i in 0..b {
                l += ((400 - i) as f64).ln() - ((i + 1) as f64).ln();
            }
            l + (400 - b) as f64 * 501f64.ln() + b as f64 * 500f64.ln()
        };
        for b in [0, 1, 37, 200, 399, 400] {
            assert_relative_eq!(c[b].ln(), log_c(b), max_relative = 1e-12);
        }
    }

    fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
        (lo.ln()..hi.ln()).prop_map(f64::exp)
    }

    fn user_factors(max: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<AffineFactor>> {
        prop::collection::vec(
            (
                log_uniform(lo, hi),
                log_uniform(lo, hi),
                log_uniform(lo, hi),
                log_uniform(lo, hi),
            ),
            0..=max,
        )
        .prop_map(|v| {
            v.into_iter()
                .map(|(alpha, beta, u, v)| {
                    AffineFactor::for_user(&PersistentUser { alpha, beta, u, v })
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn tilted_extraction_matches_convolution(factors in user_factors(20, 1e-3, 1e3)) {
            let n = factors.len();
            let fast = polynomial_coefficients(&factors, n + 1).unwrap();
            let slow = convolution_expand(&factors).unwrap();
            for (b, (x, y)) in fast.iter().zip(&slow).enumerate() {
                prop_assert!(rel_err(*x, *y) <= 1e-9, "b={} {} vs {}", b, x, y);
                prop_assert!(x.mantissa() >= 0.0);
            }
            // coefficients sum to f(1)
            let total: ScaledReal = fast.iter().copied().sum();
            let at_one = factors
                .iter()
                .fold(ScaledReal::ONE, |acc, f| acc * ScaledReal::from_f64(f.constant + f.slope));
            prop_assert!(rel_err(total, at_one) <= 1e-12);
        }

        #[test]
        fn unit_circle_matches_convolution_for_moderate_spread(
            factors in prop::collection::vec((1.0f64..2.0, 0.5f64..2.0), 0..=12)
                .prop_map(|v| v.into_iter().map(|(c, s)| AffineFactor::new(c, s)).collect::<Vec<_>>())
        ) {
            let n = factors.len();
            let fast = inverse_dft_coefficients(&evaluate_at_roots(&factors, n + 1), n + 1).unwrap();
            let slow = convolution_expand(&factors).unwrap();
            for (x, y) in fast.iter().zip(&slow) {
                prop_assert!(rel_err(*x, *y) <= 1e-9, "{} vs {}", x, y);
            }
        }
    }
}
