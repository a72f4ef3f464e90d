//! Seeded random polynomials. Every draw gets its own ChaCha8 stream so that
//! draw `i` of seed `s` is the same no matter how many draws run or in what
//! order they are evaluated.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::indexsets::{IndexSet, MultiIndex};
use crate::scalar::Real;
use crate::spectral::TrigPoly;

/// Generator for draw `index` under `seed`.
pub fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Independent complex Gaussian coefficients on `set`.
pub fn random_poly_on<T: Real, R: Rng + ?Sized>(set: &IndexSet, rng: &mut R) -> Result<TrigPoly<T>> {
    if set.is_empty() {
        return Err(Error::InvalidParameter("cannot draw on an empty index set".into()));
    }
    let terms: Vec<(MultiIndex, Complex<T>)> =
        set.iter().map(|k| (*k, Complex::new(normal(rng), normal(rng)))).collect();
    TrigPoly::from_terms(set.dim(), terms)
}

/// Real-valued polynomial on a sign-symmetric `set` (`c_{-k} = conj(c_k)`).
pub fn random_real_poly_on<T: Real, R: Rng + ?Sized>(set: &IndexSet, rng: &mut R) -> Result<TrigPoly<T>> {
    if set.is_empty() {
        return Err(Error::InvalidParameter("cannot draw on an empty index set".into()));
    }
    let mut terms = Vec::with_capacity(set.len());
    for k in set.iter() {
        let nk = k.neg();
        if *k < nk {
            let c = Complex::new(normal(rng), normal(rng));
            terms.push((*k, c));
            terms.push((nk, c.conj()));
        } else if *k == nk {
            terms.push((*k, Complex::new(normal(rng), T::zero())));
        }
    }
    TrigPoly::from_terms(set.dim(), terms)
}

/// Univariate polynomial with `terms` distinct random frequencies in `[-max_freq, max_freq]`.
pub fn random_sparse_1d<T: Real, R: Rng + ?Sized>(terms: usize, max_freq: i64, rng: &mut R) -> Result<TrigPoly<T>> {
    if terms == 0 || terms as i64 > 2 * max_freq + 1 {
        return Err(Error::InvalidParameter(format!("cannot place {terms} frequencies in |k| <= {max_freq}")));
    }
    let mut freqs = std::collections::BTreeSet::new();
    while freqs.len() < terms {
        freqs.insert(rng.random_range(-max_freq..=max_freq));
    }
    Ok(TrigPoly::from_terms(
        1,
        freqs.into_iter().map(|k| (MultiIndex::one_dim(k as i32), Complex::new(normal(rng), normal(rng)))).collect::<Vec<_>>(),
    )?)
}

/// Lacunary polynomial: one Gaussian coefficient at each of `terms` frequencies `±2^j`.
pub fn random_lacunary_1d<T: Real, R: Rng + ?Sized>(terms: usize, rng: &mut R) -> Result<TrigPoly<T>> {
    if terms == 0 || terms > 24 {
        return Err(Error::InvalidParameter(format!("lacunary term count {terms} outside 1..=24")));
    }
    let mut out = TrigPoly::zero(1);
    for j in 0..terms {
        let sign = if rng.random::<bool>() { 1 } else { -1 };
        out.add_term(MultiIndex::one_dim(sign << j), Complex::new(normal(rng), normal(rng)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexsets::hyperbolic_cross;

    #[test]
    fn draws_are_independent_of_order() {
        let set = hyperbolic_cross(8, 2).unwrap();
        let a: TrigPoly<f64> = random_poly_on(&set, &mut draw_rng(7, 3)).unwrap();
        let _ = random_poly_on::<f64, _>(&set, &mut draw_rng(7, 2)).unwrap();
        let b: TrigPoly<f64> = random_poly_on(&set, &mut draw_rng(7, 3)).unwrap();
        assert_eq!(a, b);
        let c: TrigPoly<f64> = random_poly_on(&set, &mut draw_rng(7, 4)).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.support().members(), set.members());
    }

    #[test]
    fn real_draws_are_real() {
        let set = hyperbolic_cross(6, 2).unwrap();
        let f: TrigPoly<f64> = random_real_poly_on(&set, &mut draw_rng(1, 0)).unwrap();
        assert!(f.is_real_valued(1e-15));
        assert!(f.eval(&[0.3, 1.1]).im.abs() < 1e-12);
    }

    #[test]
    fn sparse_and_lacunary_shapes() {
        let mut rng = draw_rng(5, 0);
        let f: TrigPoly<f64> = random_sparse_1d(6, 20, &mut rng).unwrap();
        assert_eq!(f.len(), 6);
        let g: TrigPoly<f64> = random_lacunary_1d(8, &mut rng).unwrap();
        assert_eq!(g.len(), 8);
        assert!(g.iter().all(|(k, _)| (k.get(0).unsigned_abs()).is_power_of_two()));
        assert!(random_sparse_1d::<f64, _>(10, 2, &mut rng).is_err());
    }
}
