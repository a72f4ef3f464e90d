use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::indexsets::{IndexSet, IndexSetLabel, MultiIndex, MAX_DIM};
use crate::scalar::Real;

/// Coefficients with modulus at or below this are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// Default cap on the support size produced by [`TrigPoly::multiply`].
pub const DEFAULT_SUPPORT_CAP: usize = 1 << 24;

/// Sparse trigonometric polynomial `f(x) = sum_k c_k e^{i(k,x)}` on `T^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly<T> {
    dim: usize,
    coeffs: BTreeMap<MultiIndex, Complex<T>>,
}

#[inline]
fn negligible<T: Real>(c: &Complex<T>) -> bool {
    c.norm() <= T::lit(PRUNE_THRESHOLD)
}

impl<T: Real> TrigPoly<T> {
    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        Self { dim, coeffs: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: Complex<T>) -> Self {
        Self::monomial(MultiIndex::zero(dim), c)
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, Complex::new(T::one(), T::zero()))
    }

    /// `c e^{i(k,x)}`.
    pub fn monomial(k: MultiIndex, c: Complex<T>) -> Self {
        let mut p = Self::zero(k.dim());
        p.add_term(k, c);
        p
    }

    /// Builds from `(k, c)` pairs; repeated keys are summed.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Complex<T>)>,
    {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut p = Self::zero(dim);
        for (k, c) in terms {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch(dim, k.dim()));
            }
            *p.coeffs.entry(k).or_insert_with(Complex::default) += c;
        }
        p.prune();
        Ok(p)
    }

    /// Univariate polynomial from real coefficients indexed by `k`.
    pub fn from_real_1d<I: IntoIterator<Item = (i64, T)>>(terms: I) -> Self {
        let mut p = Self::zero(1);
        for (k, c) in terms {
            p.add_term(MultiIndex::one_dim(k as i32), Complex::new(c, T::zero()));
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: &MultiIndex) -> Complex<T> {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Complex<T>)> {
        self.coeffs.iter()
    }

    pub fn support(&self) -> IndexSet {
        IndexSet::from_members(self.dim, self.coeffs.keys().copied(), IndexSetLabel::Custom("support".into()))
            .expect("support shares the polynomial dimension")
    }

    /// Adds `c` to the coefficient at `k`, pruning the entry if it cancels.
    pub fn add_term(&mut self, k: MultiIndex, c: Complex<T>) {
        assert_eq!(k.dim(), self.dim, "index dimension mismatch");
        let entry = self.coeffs.entry(k).or_insert_with(Complex::default);
        *entry += c;
        if negligible(entry) {
            self.coeffs.remove(&k);
        }
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| !negligible(c));
    }

    /// Largest `|k_axis|` in the support.
    pub fn max_degree(&self, axis: usize) -> i64 {
        self.coeffs.keys().map(|k| (k.get(axis) as i64).abs()).max().unwrap_or(0)
    }

    pub fn degrees(&self) -> Vec<i64> {
        (0..self.dim).map(|a| self.max_degree(a)).collect()
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut out = Self { dim: self.dim, coeffs: self.coeffs.iter().map(|(k, c)| (*k, *c * s)).collect() };
        out.prune();
        out
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(Complex::new(s, T::zero()))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(Complex::new(T::one(), T::zero()), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(Complex::new(-T::one(), T::zero()), other)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: Complex<T>, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = self.clone();
        for (k, c) in &other.coeffs {
            *out.coeffs.entry(*k).or_insert_with(Complex::default) += a * c;
        }
        out.prune();
        out
    }

    /// Normalized convolution `(2 pi)^{-d} int f(u) K(x - u) du`: coefficientwise product.
    pub fn convolve(&self, kernel: &Self) -> Result<Self> {
        if self.dim != kernel.dim {
            return Err(Error::DimensionMismatch(self.dim, kernel.dim));
        }
        let (small, large) = if self.len() <= kernel.len() { (self, kernel) } else { (kernel, self) };
        let mut out = Self::zero(self.dim);
        for (k, c) in &small.coeffs {
            if let Some(d) = large.coeffs.get(k) {
                let v = *c * d;
                if !negligible(&v) {
                    out.coeffs.insert(*k, v);
                }
            }
        }
        Ok(out)
    }

    /// Pointwise product with the default support cap.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.multiply_capped(other, DEFAULT_SUPPORT_CAP)
    }

    /// Pointwise product; fails once the result support exceeds `cap`.
    pub fn multiply_capped(&self, other: &Self, cap: usize) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let mut acc: HashMap<MultiIndex, Complex<T>> = HashMap::new();
        for (k, c) in &self.coeffs {
            for (l, d) in &other.coeffs {
                *acc.entry(k.add(l)).or_insert_with(Complex::default) += *c * d;
                if acc.len() > cap {
                    return Err(Error::SupportCap { size: acc.len(), cap });
                }
            }
        }
        let mut out = Self { dim: self.dim, coeffs: acc.into_iter().collect() };
        out.prune();
        Ok(out)
    }

    /// `f(x_1) g(x_2) ...` from univariate factors.
    pub fn tensor(factors: &[&TrigPoly<T>]) -> Result<Self> {
        let d = factors.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::UnsupportedDimension(d));
        }
        if let Some(f) = factors.iter().find(|f| f.dim != 1) {
            return Err(Error::DimensionMismatch(1, f.dim));
        }
        let mut terms: Vec<(Vec<i32>, Complex<T>)> = vec![(Vec::new(), Complex::new(T::one(), T::zero()))];
        for f in factors {
            let mut next = Vec::with_capacity(terms.len() * f.len());
            for (prefix, c) in &terms {
                for (k, v) in &f.coeffs {
                    let mut p = prefix.clone();
                    p.push(k.get(0));
                    next.push((p, *c * v));
                }
            }
            terms = next;
        }
        Self::from_terms(d, terms.into_iter().map(|(k, c)| (MultiIndex::from_slice(&k), c)))
    }

    /// Keeps only the coefficients indexed by `set`.
    pub fn restrict(&self, set: &IndexSet) -> Self {
        Self {
            dim: self.dim,
            coeffs: self.coeffs.iter().filter(|(k, _)| set.contains(k)).map(|(k, c)| (*k, *c)).collect(),
        }
    }

    /// `f(x - y)`: multiplies `c_k` by `e^{-i(k,y)}`.
    pub fn shift(&self, y: &[T]) -> Self {
        assert_eq!(y.len(), self.dim);
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| {
                let phase = k.components().iter().zip(y).fold(T::zero(), |acc, (&kj, &yj)| acc + T::of_i64(kj as i64) * yj);
                (*k, *c * Complex::from_polar(T::one(), -phase))
            })
            .collect();
        Self { dim: self.dim, coeffs }
    }

    /// True when `c_{-k} = conj(c_k)` up to `tol`, i.e. the function is real-valued.
    pub fn is_real_valued(&self, tol: T) -> bool {
        self.coeffs.iter().all(|(k, c)| (self.coeff(&k.neg()).conj() - c).norm() <= tol)
    }

    /// True when `c_{-k} = c_k` up to `tol` (even in every variable jointly).
    pub fn is_even(&self, tol: T) -> bool {
        self.coeffs.iter().all(|(k, c)| (self.coeff(&k.neg()) - c).norm() <= tol)
    }

    /// `sum_k |c_k|^2`, the squared `L_2` norm under normalized measure.
    pub fn parseval_sq(&self) -> T {
        let mut s = crate::scalar::CompensatedSum::new();
        for c in self.coeffs.values() {
            s.add(c.norm_sqr());
        }
        s.value()
    }

    /// Largest coefficient difference in modulus over the union of supports.
    pub fn max_coeff_diff(&self, other: &Self) -> T {
        let mut m = T::zero();
        for (k, c) in &self.coeffs {
            m = m.max((*c - other.coeff(k)).norm());
        }
        for (k, c) in &other.coeffs {
            if !self.coeffs.contains_key(k) {
                m = m.max(c.norm());
            }
        }
        m
    }

    /// Value at a single point by direct summation.
    pub fn eval(&self, x: &[T]) -> Complex<T> {
        PointEvaluator::new(self).eval(x)
    }

    /// Writes `k_1 ... k_d re im` lines in lexicographic order.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (k, c) in &self.coeffs {
            for kj in k.components() {
                write!(out, "{kj} ")?;
            }
            writeln!(out, "{:e} {:e}", c.re, c.im)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R, dim: usize) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks.len() != dim + 2 {
                return Err(Error::Parse(format!("line {}: expected {} fields", lineno + 1, dim + 2)));
            }
            let bad = |e: String| Error::Parse(format!("line {}: {e}", lineno + 1));
            let k = toks[..dim]
                .iter()
                .map(|t| t.parse::<i32>().map_err(|e| bad(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let re: f64 = toks[dim].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
            let im: f64 = toks[dim + 1].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
            terms.push((MultiIndex::new(&k)?, Complex::new(T::lit(re), T::lit(im))));
        }
        Self::from_terms(dim, terms)
    }
}

/// Direct evaluation at arbitrary points with per-axis phase tables.
pub struct PointEvaluator<'a, T> {
    poly: &'a TrigPoly<T>,
    degrees: Vec<i64>,
}

impl<'a, T: Real> PointEvaluator<'a, T> {
    pub fn new(poly: &'a TrigPoly<T>) -> Self {
        Self { poly, degrees: poly.degrees() }
    }

    pub fn eval(&self, x: &[T]) -> Complex<T> {
        assert_eq!(x.len(), self.poly.dim, "point dimension mismatch");
        let tables: Vec<Vec<Complex<T>>> = self
            .degrees
            .iter()
            .zip(x)
            .map(|(&deg, &xa)| {
                let xa = xa.to_f64_lossy();
                (-deg..=deg)
                    .map(|k| {
                        let (s, c) = (k as f64 * xa).sin_cos();
                        Complex::new(T::lit(c), T::lit(s))
                    })
                    .collect()
            })
            .collect();
        let mut re = crate::scalar::CompensatedSum::new();
        let mut im = crate::scalar::CompensatedSum::new();
        for (k, c) in &self.poly.coeffs {
            let mut v = *c;
            for (a, &kj) in k.components().iter().enumerate() {
                v = v * tables[a][(kj as i64 + self.degrees[a]) as usize];
            }
            re.add(v.re);
            im.add(v.im);
        }
        Complex::new(re.value(), im.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    fn two_cos() -> TrigPoly<f64> {
        TrigPoly::from_real_1d([(-1, 1.0), (1, 1.0)])
    }

    #[test]
    fn multiply_examples() {
        let f = two_cos();
        let one = TrigPoly::<f64>::one(1);
        assert_eq!(one.multiply(&f).unwrap(), f);
        let e1 = TrigPoly::monomial(MultiIndex::one_dim(1), c(1.0));
        let e2 = TrigPoly::monomial(MultiIndex::one_dim(2), c(1.0));
        assert_eq!(e1.multiply(&e1).unwrap(), e2);
        let sq = f.multiply(&f).unwrap();
        let expected = TrigPoly::from_real_1d([(-2, 1.0), (0, 2.0), (2, 1.0)]);
        assert_eq!(sq, expected);
    }

    #[test]
    fn multiply_respects_cap() {
        let f = TrigPoly::from_real_1d((-10..=10).map(|k| (k, 1.0)));
        assert!(matches!(f.multiply_capped(&f, 5), Err(Error::SupportCap { .. })));
    }

    #[test]
    fn convolve_examples() {
        let f = TrigPoly::from_real_1d([(-2, 0.5), (0, 3.0), (1, -1.0)]);
        let one = TrigPoly::<f64>::one(1);
        assert_eq!(f.convolve(&one).unwrap(), TrigPoly::from_real_1d([(0, 3.0)]));
        let g = TrigPoly::from_real_1d([(5, 1.0)]);
        assert!(f.convolve(&g).unwrap().is_zero());
    }

    #[test]
    fn cancellation_prunes() {
        let f = two_cos();
        assert!(f.sub(&f).is_zero());
        let mut g = TrigPoly::<f64>::zero(2);
        g.add_term(MultiIndex::from_slice(&[1, 1]), c(1.0));
        g.add_term(MultiIndex::from_slice(&[1, 1]), c(-1.0 + 1e-17));
        assert!(g.is_zero());
    }

    #[test]
    fn point_evaluation() {
        let f = two_cos();
        for x in [0.0, 0.3, 1.0, 2.5] {
            assert!((f.eval(&[x]).re - 2.0 * f64::cos(x)).abs() < 1e-14);
        }
        let t = TrigPoly::tensor(&[&f, &f]).unwrap();
        let v = t.eval(&[0.4, 1.3]);
        assert!((v.re - 4.0 * 0.4f64.cos() * 1.3f64.cos()).abs() < 1e-13);
    }

    #[test]
    fn shift_matches_translation() {
        let f = TrigPoly::from_terms(
            2,
            [
                (MultiIndex::from_slice(&[1, -2]), Complex::new(0.5, 0.25)),
                (MultiIndex::from_slice(&[0, 3]), Complex::new(-1.0, 0.0)),
            ],
        )
        .unwrap();
        let y = [0.7, -0.2];
        let x = [1.1, 0.4];
        let lhs = f.shift(&y).eval(&x);
        let rhs = f.eval(&[x[0] - y[0], x[1] - y[1]]);
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn text_round_trip() {
        let f = TrigPoly::from_terms(
            2,
            [
                (MultiIndex::from_slice(&[1, -2]), Complex::new(0.5, 0.25)),
                (MultiIndex::from_slice(&[-3, 0]), Complex::new(-1.0e-3, 7.0)),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        f.write_text(&mut buf).unwrap();
        let back = TrigPoly::<f64>::read_text(buf.as_slice(), 2).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn real_and_even_detection() {
        assert!(two_cos().is_real_valued(0.0));
        assert!(two_cos().is_even(0.0));
        let sin_like = TrigPoly::from_terms(1, [
            (MultiIndex::one_dim(1), Complex::new(0.0, -0.5)),
            (MultiIndex::one_dim(-1), Complex::new(0.0, 0.5)),
        ])
        .unwrap();
        assert!(sin_like.is_real_valued(0.0));
        assert!(!sin_like.is_even(0.0));
    }
}
