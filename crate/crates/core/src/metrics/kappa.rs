use std::collections::BTreeSet;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use super::{ratio, MetricsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    None,
    /// Disagreement weighted by distance on the ordered label scale.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementResult {
    pub kappa: f64,
    pub weighting: Weighting,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub n_items: usize,
}

/// Cohen's kappa over the sorted union of the observed labels.
pub fn cohens_kappa<T: Ord + Clone + Debug>(a: &[T], b: &[T], weighting: Weighting) -> Result<AgreementResult, MetricsError> {
    let scale: Vec<T> = a.iter().chain(b).cloned().collect::<BTreeSet<_>>().into_iter().collect();
    cohens_kappa_on_scale(a, b, &scale, weighting)
}

/// Cohen's kappa with an explicit ordered label scale. Labels missing from
/// `scale` are an error. When chance agreement is 1 (both raters constant
/// and equal) kappa is defined as 1.
pub fn cohens_kappa_on_scale<T: PartialEq + Debug>(
    a: &[T],
    b: &[T],
    scale: &[T],
    weighting: Weighting,
) -> Result<AgreementResult, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(MetricsError::Empty(" for kappa".into()));
    }
    let k = scale.len();
    let position = |x: &T| {
        scale
            .iter()
            .position(|s| s == x)
            .ok_or_else(|| MetricsError::UnknownLabel(format!("{x:?}")))
    };
    let mut confusion = vec![vec![0i128; k]; k];
    for (x, y) in a.iter().zip(b) {
        confusion[position(x)?][position(y)?] += 1;
    }
    let n = a.len() as i128;
    let rows: Vec<i128> = confusion.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<i128> = (0..k).map(|j| confusion.iter().map(|r| r[j]).sum()).collect();

    // integer agreement weights scaled by w_max: identity or (k-1) - |i-j|
    let w_max = match weighting {
        Weighting::None => 1,
        Weighting::Linear => (k as i128 - 1).max(1),
    };
    let w = |i: usize, j: usize| match weighting {
        Weighting::None => i128::from(i == j) * w_max,
        Weighting::Linear => w_max - (i as i128 - j as i128).abs(),
    };
    let (mut observed, mut expected) = (0i128, 0i128);
    for i in 0..k {
        for j in 0..k {
            observed += w(i, j) * confusion[i][j];
            expected += w(i, j) * rows[i] * cols[j];
        }
    }
    // p_o = observed / (w_max n), p_e = expected / (w_max n²)
    let den = w_max * n * n - expected;
    let kappa = if den == 0 { 1.0 } else { ratio(n * observed - expected, den) };
    Ok(AgreementResult {
        kappa,
        weighting,
        observed_agreement: ratio(observed, w_max * n),
        expected_agreement: ratio(expected, w_max * n * n),
        n_items: a.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Expands a confusion matrix into paired rating vectors.
    fn from_confusion(m: &[[usize; 2]; 2]) -> (Vec<u8>, Vec<u8>) {
        let (mut a, mut b) = (vec![], vec![]);
        for (i, row) in m.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                a.extend(std::iter::repeat_n(i as u8, c));
                b.extend(std::iter::repeat_n(j as u8, c));
            }
        }
        (a, b)
    }

    #[test]
    fn sixty_item_matrix() {
        // rows 25/35, cols 30/30: p_o = 45/60, p_e = (25·30 + 35·30)/3600 = 0.5
        let (a, b) = from_confusion(&[[20, 5], [10, 25]]);
        let r = cohens_kappa(&a, &b, Weighting::None).unwrap();
        assert_eq!(r.n_items, 60);
        assert_eq!(r.observed_agreement, 0.75);
        assert_eq!(r.expected_agreement, 0.5);
        assert_eq!(r.kappa, 0.5);
    }

    #[test]
    fn constant_equal_raters() {
        let r = cohens_kappa(&[2, 2, 2], &[2, 2, 2], Weighting::None).unwrap();
        assert_eq!(r.kappa, 1.0);
        assert_eq!(r.expected_agreement, 1.0);
        let r = cohens_kappa(&[2, 2, 2], &[2, 2, 2], Weighting::Linear).unwrap();
        assert_eq!(r.kappa, 1.0);
    }

    #[test]
    fn errors() {
        assert_eq!(cohens_kappa(&[1, 2], &[1], Weighting::None), Err(MetricsError::LengthMismatch(2, 1)));
        assert!(cohens_kappa::<u8>(&[], &[], Weighting::None).is_err());
        assert!(matches!(
            cohens_kappa_on_scale(&[0, 1], &[0, 5], &[0, 1, 2], Weighting::None),
            Err(MetricsError::UnknownLabel(_))
        ));
    }

    #[test]
    fn linear_weights_partial_credit() {
        // 3-level scale, one adjacent and one distant disagreement
        let a = [0, 1, 2, 2];
        let b = [0, 2, 2, 0];
        let none = cohens_kappa_on_scale(&a, &b, &[0, 1, 2], Weighting::None).unwrap();
        let lin = cohens_kappa_on_scale(&a, &b, &[0, 1, 2], Weighting::Linear).unwrap();
        // hand count: w = 1 - |i-j|/2; observed = (1 + 0.5 + 1 + 0) / 4 = 0.625
        assert_eq!(lin.observed_agreement, 0.625);
        assert_eq!(none.observed_agreement, 0.5);
        // rows (1,1,2), cols (2,0,2); Σ w·r·c by row: 2 + (1 + 1) + 4 = 8, over 16
        assert_eq!(lin.expected_agreement, 0.5);
        assert_eq!(lin.kappa, 0.25);
    }

    #[test]
    fn independent_ratings_near_zero() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let a: Vec<u8> = (0..20000).map(|_| rng.random_range(0..3)).collect();
        let b: Vec<u8> = (0..20000).map(|_| rng.random_range(0..3)).collect();
        assert!(cohens_kappa(&a, &b, Weighting::None).unwrap().kappa.abs() < 0.03);
    }

    proptest! {
        #[test]
        fn self_agreement_and_symmetry(a in proptest::collection::vec(0u8..3, 2..80), b_seed in proptest::collection::vec(0u8..3, 80)) {
            prop_assume!(a.iter().any(|&x| x != a[0]));
            let b = &b_seed[..a.len()];
            for w in [Weighting::None, Weighting::Linear] {
                prop_assert_eq!(cohens_kappa(&a, &a, w).unwrap().kappa, 1.0);
                let ab = cohens_kappa_on_scale(&a, b, &[0, 1, 2], w).unwrap();
                let ba = cohens_kappa_on_scale(b, &a, &[0, 1, 2], w).unwrap();
                prop_assert_eq!(ab.kappa.to_bits(), ba.kappa.to_bits());
                prop_assert!((-1.0..=1.0).contains(&ab.kappa));
            }
        }
    }
}
