//! Seeded random inputs for the property suites.

use rand::Rng;

use crate::fields::{ScalarField, VectorField};
use crate::forms::BilinearForm;
use crate::numerics::{self, Matrix, Vector};

/// Entries drawn from `U(-1, 1)`.
pub fn uniform_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn uniform_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, half_width: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-half_width..half_width))
}

/// `count` points in the cube `[-half_width, half_width]^n`.
pub fn sample_points<R: Rng + ?Sized>(rng: &mut R, n: usize, count: usize, half_width: f64) -> Vec<Vector> {
    (0..count).map(|_| uniform_vector(rng, n, half_width)).collect()
}

/// Random form with `U(-1, 1)` entries, resampled until
/// `sigma_min > min_ratio * sigma_max`.
pub fn random_form<R: Rng + ?Sized>(rng: &mut R, n: usize, min_ratio: f64) -> BilinearForm {
    loop {
        let m = uniform_matrix(rng, n, n);
        let sv = numerics::singular_values(&m);
        if sv[n - 1] > min_ratio * sv[0] {
            return BilinearForm::from_matrix(m, numerics::tol::NON_DEGENERATE)
                .expect("conditioned sample is non-degenerate");
        }
    }
}

/// Operator of rank at most `r`, as an `n x r` times `r x n` product.
pub fn rank_deficient<R: Rng + ?Sized>(rng: &mut R, n: usize, r: usize) -> Matrix {
    uniform_matrix(rng, n, r) * uniform_matrix(rng, r, n)
}

/// Splits a base seed into independent per-task seeds (SplitMix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn coefficient<R: Rng + ?Sized>(rng: &mut R) -> String {
    let c: f64 = rng.random_range(-1.0..1.0);
    format!("({c:.3})")
}

/// Random polynomial with up to `max_terms` monomials of degree at most
/// `max_degree` and coefficients in `(-1, 1)`, built as source text and
/// parsed.
pub fn random_polynomial<R: Rng + ?Sized>(rng: &mut R, nvars: usize, max_degree: u32, max_terms: usize) -> ScalarField {
    let terms = rng.random_range(1..=max_terms.max(1));
    let mut parts = Vec::with_capacity(terms);
    for _ in 0..terms {
        let degree = rng.random_range(0..=max_degree);
        let mut powers = vec![0u32; nvars];
        for _ in 0..degree {
            powers[rng.random_range(0..nvars)] += 1;
        }
        let mut factors = vec![coefficient(rng)];
        for (i, &p) in powers.iter().enumerate() {
            match p {
                0 => {}
                1 => factors.push(format!("x{}", i + 1)),
                _ => factors.push(format!("x{}^{p}", i + 1)),
            }
        }
        parts.push(factors.join("*"));
    }
    ScalarField::parse(&parts.join(" + "), nvars).expect("generated polynomial parses")
}

/// Random smooth non-polynomial field mixing `sin`, `cos` and `exp`.
pub fn random_trig_field<R: Rng + ?Sized>(rng: &mut R, nvars: usize) -> ScalarField {
    let mut var = || format!("x{}", rng.random_range(1..=nvars));
    let (i, j, k, l) = (var(), var(), var(), var());
    let text = format!(
        "{}*sin({}*{i} + {}*{j}) + {}*cos({}*{k})*{l} + {}*exp({}*{i})",
        coefficient(rng),
        coefficient(rng),
        coefficient(rng),
        coefficient(rng),
        coefficient(rng),
        coefficient(rng),
        coefficient(rng),
    );
    ScalarField::parse(&text, nvars).expect("generated field parses")
}

/// `count` fields: polynomials of degree at most 4 with every fourth one
/// replaced by a trigonometric field.
pub fn field_corpus<R: Rng + ?Sized>(rng: &mut R, nvars: usize, count: usize) -> Vec<ScalarField> {
    (0..count)
        .map(|i| if i % 4 == 3 { random_trig_field(rng, nvars) } else { random_polynomial(rng, nvars, 4, 4) })
        .collect()
}

/// Vector field on `R^n` with random polynomial components.
pub fn random_vector_field<R: Rng + ?Sized>(rng: &mut R, n: usize, max_degree: u32) -> VectorField {
    VectorField::from_components((0..n).map(|_| random_polynomial(rng, n, max_degree, 3)).collect())
        .expect("components share the same variables")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::PointField;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_fields_are_well_formed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for f in field_corpus(&mut rng, 3, 12) {
            assert_eq!(f.nvars(), 3);
            assert!(f.eval(&[0.5, -1.0, 2.0]).is_ok());
        }
        let p = random_polynomial(&mut rng, 2, 0, 1);
        assert!(p.partials().iter().all(|d| d.eval(&[1.0, 1.0]).unwrap() == 0.0));
        let v = random_vector_field(&mut rng, 4, 2);
        assert_eq!((v.nvars(), v.dim()), (4, 4));
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = field_corpus(&mut ChaCha8Rng::seed_from_u64(9), 4, 8);
        let b = field_corpus(&mut ChaCha8Rng::seed_from_u64(9), 4, 8);
        assert_eq!(a, b);
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
    }
}
