//! Multivariate polynomials and rational functions over named indeterminates.
//!
//! Coefficients are generic so the same term-map machinery carries plain
//! `f64` polynomials (kinematics, evaluated certificates) and polynomials
//! whose coefficients are affine expressions in SDP decision variables
//! (see [`crate::soscomp::LinExpr`]).
//!
//! Monomials are ordered graded-lexicographically with lower variable ids
//! more significant, which makes every basis and every compiled program
//! deterministic.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::Error;

/// Default absolute tolerance below which assembled coefficients are dropped.
pub const DEFAULT_DROP_TOL: f64 = 1e-12;

/// Default cap on the number of monomials a generated basis may hold.
pub const DEFAULT_BASIS_CAP: usize = 1 << 16;

/// An indeterminate, identified by a dense id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var(pub u32);

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// A power product. Entries are sorted by variable and never hold a zero
/// exponent, so structural equality is monomial equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Monomial {
    exps: SmallVec<[(Var, u32); 4]>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(v: Var) -> Self {
        Self::from_pairs([(v, 1)])
    }

    pub fn from_pairs<I: IntoIterator<Item = (Var, u32)>>(pairs: I) -> Self {
        let mut map: BTreeMap<Var, u32> = BTreeMap::new();
        for (v, e) in pairs {
            *map.entry(v).or_default() += e;
        }
        Self {
            exps: map.into_iter().filter(|&(_, e)| e > 0).collect(),
        }
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.exps.iter().map(|&(_, e)| e).sum()
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.exps
            .iter()
            .find(|&&(w, _)| w == v)
            .map_or(0, |&(_, e)| e)
    }

    /// Largest per-variable exponent.
    pub fn coordinate_degree(&self) -> u32 {
        self.exps.iter().map(|&(_, e)| e).max().unwrap_or(0)
    }

    pub fn exponents(&self) -> &[(Var, u32)] {
        &self.exps
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.exps.iter().map(|&(v, _)| v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out: SmallVec<[(Var, u32); 4]> = SmallVec::new();
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.exps, &other.exps);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial { exps: out }
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = self.exps.clone();
        for &(v, e) in other.exps.iter() {
            let pos = out.iter().position(|&(w, _)| w == v)?;
            if out[pos].1 < e {
                return None;
            }
            out[pos].1 -= e;
        }
        out.retain(|&mut (_, e)| e > 0);
        Some(Monomial { exps: out })
    }

    /// Drops the factor in `v`, returning the exponent removed.
    fn split_off(&self, v: Var) -> (Monomial, u32) {
        let mut rest = self.exps.clone();
        let mut removed = 0;
        rest.retain(|&mut (w, e)| {
            if w == v {
                removed = e;
                false
            } else {
                true
            }
        });
        (Monomial { exps: rest }, removed)
    }

    pub fn eval(&self, point: &dyn Fn(Var) -> f64) -> f64 {
        self.exps
            .iter()
            .map(|&(v, e)| point(v).powi(e as i32))
            .product()
    }

    /// Exponent vector over an explicit variable list.
    pub fn exponent_vector(&self, vars: &[Var]) -> Vec<u32> {
        vars.iter().map(|&v| self.degree_in(v)).collect()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.total_degree().cmp(&other.total_degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (a, b) = (&self.exps, &other.exps);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                    // `self` has a positive exponent on a more significant variable.
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(&eb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exps.is_empty() {
            return write!(f, "1");
        }
        for (k, &(v, e)) in self.exps.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Coefficient ring for [`Poly`]. Only the operations polynomial arithmetic
/// needs: accumulation and scaling by reals.
pub trait Coefficient: Clone + fmt::Debug + From<f64> {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign(&mut self, other: &Self);
    fn scaled(&self, k: f64) -> Self;
}

impl Coefficient for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add_assign(&mut self, other: &Self) {
        *self += *other;
    }
    fn scaled(&self, k: f64) -> Self {
        *self * k
    }
}

/// Sparse polynomial: a term map with no zero coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly<C = f64> {
    #[serde(with = "term_list")]
    #[serde(bound(serialize = "C: Serialize", deserialize = "C: Deserialize<'de>"))]
    terms: BTreeMap<Monomial, C>,
}

/// Terms as a list of `[monomial, coefficient]` pairs, since JSON object
/// keys must be strings.
mod term_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Monomial;

    pub fn serialize<C: Serialize, S: Serializer>(terms: &BTreeMap<Monomial, C>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(terms.iter())
    }

    pub fn deserialize<'de, C: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Monomial, C>, D::Error> {
        Ok(Vec::<(Monomial, C)>::deserialize(d)?.into_iter().collect())
    }
}

/// Polynomial with real coefficients.
pub type Polynomial = Poly<f64>;

impl<C: Coefficient> Default for Poly<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coefficient> Poly<C> {
    pub fn zero() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, C)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, &c);
        }
        p
    }

    pub fn monomial_term(m: Monomial, c: C) -> Self {
        Self::from_terms([(m, c)])
    }

    pub fn constant_term(c: C) -> Self {
        Self::monomial_term(Monomial::one(), c)
    }

    pub fn add_term(&mut self, m: Monomial, c: &C) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(slot) => {
                if !c.is_zero() {
                    slot.insert(c.clone());
                }
            }
            Entry::Occupied(mut slot) => {
                slot.get_mut().add_assign(c);
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Option<&C> {
        self.terms.get(m)
    }

    pub fn support(&self) -> Vec<Monomial> {
        self.terms.keys().cloned().collect()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::total_degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.degree_in(v)).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), c.scaled(k))))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (m, c) in other.terms.iter() {
            self.add_term(m.clone(), c);
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Product with a real polynomial.
    pub fn mul_real(&self, other: &Polynomial) -> Self {
        let mut out = Self::zero();
        for (ma, ca) in self.terms.iter() {
            for (mb, cb) in other.terms.iter() {
                out.add_term(ma.mul(mb), &ca.scaled(*cb));
            }
        }
        out
    }

    /// Multiplies every term by a monomial.
    pub fn mul_monomial(&self, m: &Monomial) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.mul(m), c.clone()))
                .collect(),
        }
    }

    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        Poly::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    /// Replaces `v` by a real polynomial.
    pub fn substitute(&self, v: Var, q: &Polynomial) -> Self {
        let max_e = self.degree_in(v);
        let mut powers = vec![Polynomial::one()];
        for k in 1..=max_e as usize {
            let next = powers[k - 1].mul_real(q);
            powers.push(next);
        }
        let mut out = Self::zero();
        for (m, c) in self.terms.iter() {
            let (rest, e) = m.split_off(v);
            let term = Poly::monomial_term(rest, c.clone());
            out.add_assign(&term.mul_real(&powers[e as usize]));
        }
        out
    }
}

impl Polynomial {
    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::constant_term(c)
    }

    pub fn var(v: Var) -> Self {
        Self::monomial_term(Monomial::var(v), 1.0)
    }

    /// `c0 + sum_i c_i v_i`.
    pub fn affine(c0: f64, lin: &[(Var, f64)]) -> Self {
        let mut p = Self::constant(c0);
        for &(v, c) in lin {
            p.add_term(Monomial::var(v), &c);
        }
        p
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        self.mul_real(other)
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut out = Polynomial::one();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn eval(&self, point: &dyn Fn(Var) -> f64) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.eval(point)).sum()
    }

    /// Evaluates with `values[v.0]` as the value of `v`.
    pub fn eval_slice(&self, values: &[f64]) -> f64 {
        self.eval(&|v: Var| values[v.0 as usize])
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// Removes terms with `|c| < tol`.
    pub fn dropped(&self, tol: f64) -> Polynomial {
        Polynomial::from_terms(
            self.terms
                .iter()
                .filter(|(_, c)| c.abs() >= tol)
                .map(|(m, c)| (m.clone(), *c)),
        )
    }

    /// Replaces `v` by a rational function; the result carries the
    /// denominator `den^deg_v(self)`.
    pub fn substitute_rational(&self, v: Var, r: &RationalFn) -> RationalFn {
        let k = self.degree_in(v);
        let mut num_pows = vec![Polynomial::one()];
        let mut den_pows = vec![Polynomial::one()];
        for i in 1..=k as usize {
            num_pows.push(num_pows[i - 1].mul(&r.num));
            den_pows.push(den_pows[i - 1].mul(&r.den));
        }
        let mut num = Polynomial::zero();
        for (m, c) in self.terms.iter() {
            let (rest, e) = m.split_off(v);
            let factor = num_pows[e as usize].mul(&den_pows[(k - e) as usize]);
            num.add_assign(&Polynomial::monomial_term(rest, *c).mul(&factor));
        }
        RationalFn::new(num, den_pows[k as usize].clone())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}*{m}")?;
            }
        }
        Ok(())
    }
}

impl<C: Coefficient> Add for &Poly<C> {
    type Output = Poly<C>;
    fn add(self, rhs: Self) -> Poly<C> {
        Poly::add(self, rhs)
    }
}

impl<C: Coefficient> Sub for &Poly<C> {
    type Output = Poly<C>;
    fn sub(self, rhs: Self) -> Poly<C> {
        Poly::sub(self, rhs)
    }
}

impl<C: Coefficient> Mul<&Polynomial> for &Poly<C> {
    type Output = Poly<C>;
    fn mul(self, rhs: &Polynomial) -> Poly<C> {
        self.mul_real(rhs)
    }
}

impl<C: Coefficient> Mul<f64> for &Poly<C> {
    type Output = Poly<C>;
    fn mul(self, rhs: f64) -> Poly<C> {
        self.scale(rhs)
    }
}

impl<C: Coefficient> Neg for &Poly<C> {
    type Output = Poly<C>;
    fn neg(self) -> Poly<C> {
        self.scale(-1.0)
    }
}

/// Quotient of polynomials with a denominator positive on the domain of
/// interest. No cancellation is ever attempted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalFn {
    pub num: Polynomial,
    pub den: Polynomial,
}

impl RationalFn {
    pub fn new(num: Polynomial, den: Polynomial) -> Self {
        Self { num, den }
    }

    pub fn from_poly(p: Polynomial) -> Self {
        Self::new(p, Polynomial::one())
    }

    pub fn zero() -> Self {
        Self::from_poly(Polynomial::zero())
    }

    pub fn add(&self, other: &RationalFn) -> RationalFn {
        if self.den == other.den {
            return RationalFn::new(self.num.add(&other.num), self.den.clone());
        }
        RationalFn::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn mul(&self, other: &RationalFn) -> RationalFn {
        RationalFn::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn scale(&self, k: f64) -> RationalFn {
        RationalFn::new(self.num.scale(k), self.den.clone())
    }

    pub fn eval(&self, point: &dyn Fn(Var) -> f64) -> f64 {
        self.num.eval(point) / self.den.eval(point)
    }

    pub fn eval_slice(&self, values: &[f64]) -> f64 {
        self.num.eval_slice(values) / self.den.eval_slice(values)
    }
}

/// Indeterminates of a basis, sorted.
fn sorted_vars(vars: &[Var]) -> Vec<Var> {
    let set: BTreeSet<Var> = vars.iter().copied().collect();
    set.into_iter().collect()
}

/// All monomials in `vars` whose exponent in every variable is at most
/// `max_coord_deg`, sorted graded-lex ascending.
pub fn coordinate_degree_basis(vars: &[Var], max_coord_deg: u32) -> Result<Vec<Monomial>, Error> {
    coordinate_degree_basis_capped(vars, max_coord_deg, DEFAULT_BASIS_CAP)
}

pub fn coordinate_degree_basis_capped(
    vars: &[Var],
    max_coord_deg: u32,
    cap: usize,
) -> Result<Vec<Monomial>, Error> {
    let vars = sorted_vars(vars);
    let base = max_coord_deg as usize + 1;
    let size = (0..vars.len()).try_fold(1usize, |acc, _| acc.checked_mul(base));
    match size {
        Some(n) if n <= cap => {}
        _ => {
            return Err(Error::BasisTooLarge {
                vars: vars.len(),
                degree: max_coord_deg,
                cap,
            })
        }
    }
    let mut out = vec![Monomial::one()];
    for &v in &vars {
        let mut next = Vec::with_capacity(out.len() * base);
        for m in &out {
            for e in 0..=max_coord_deg {
                next.push(m.mul(&Monomial::from_pairs([(v, e)])));
            }
        }
        out = next;
    }
    out.sort();
    Ok(out)
}

/// All monomials in `vars` of total degree at most `max_deg`, graded-lex.
pub fn total_degree_basis(vars: &[Var], max_deg: u32) -> Vec<Monomial> {
    let vars = sorted_vars(vars);
    let mut out = vec![Monomial::one()];
    let mut frontier = vec![Monomial::one()];
    for _ in 0..max_deg {
        let mut next = BTreeSet::new();
        for m in &frontier {
            for &v in &vars {
                next.insert(m.mul(&Monomial::var(v)));
            }
        }
        frontier = next.into_iter().collect();
        out.extend(frontier.iter().cloned());
    }
    out.sort();
    out
}

/// Deduplicated pairwise products of two bases, graded-lex.
pub fn product_basis(eta: &[Monomial], nu: &[Monomial]) -> Vec<Monomial> {
    let set: BTreeSet<Monomial> = eta
        .iter()
        .flat_map(|a| nu.iter().map(move |b| a.mul(b)))
        .collect();
    set.into_iter().collect()
}

/// Whether every monomial of `gamma` is the product of a monomial of `rho`
/// and a monomial of `l`, i.e. `gamma` lies in the exponent-set Minkowski
/// sum of `rho` and `l`. For the dense, box-shaped bases used here this
/// coincides with Newton-polytope containment.
pub fn newton_basis_check(gamma: &[Monomial], rho: &[Monomial], l: &[Monomial]) -> bool {
    let l_set: HashSet<&Monomial> = l.iter().collect();
    gamma.iter().all(|g| {
        rho.iter()
            .any(|r| g.div(r).is_some_and(|q| l_set.contains(&q)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const S1: Var = Var(0);
    const S2: Var = Var(1);

    fn m(pairs: &[(Var, u32)]) -> Monomial {
        Monomial::from_pairs(pairs.iter().copied())
    }

    fn random_poly(rng: &mut ChaCha8Rng, vars: &[Var], max_deg: u32, n_terms: usize) -> Polynomial {
        let basis = total_degree_basis(vars, max_deg);
        Polynomial::from_terms((0..n_terms).map(|_| {
            let k = rng.random_range(0..basis.len());
            (basis[k].clone(), rng.random_range(-3..=3) as f64)
        }))
    }

    #[test]
    fn difference_of_squares() {
        let a = Polynomial::affine(1.0, &[(S1, 1.0)]);
        let b = Polynomial::affine(-1.0, &[(S1, 1.0)]);
        let expected = Polynomial::from_terms([(m(&[(S1, 2)]), 1.0), (Monomial::one(), -1.0)]);
        assert_eq!(a.mul(&b), expected);
    }

    #[test]
    fn zero_is_additive_identity() {
        let p = Polynomial::affine(2.0, &[(S1, -1.5), (S2, 4.0)]);
        assert_eq!(p.add(&Polynomial::zero()), p);
        assert!(p.sub(&p).is_zero());
    }

    #[test]
    fn stereographic_substitution_matches_trig() {
        // c*s with c = cos(theta), s = sin(theta) as separate indeterminates.
        let c = Var(10);
        let s = Var(11);
        let t = Var(0);
        let p = Polynomial::from_terms([
            (m(&[(c, 1), (s, 1)]), 1.0),
            (m(&[(c, 1)]), 2.0),
            (m(&[(s, 1)]), -0.5),
        ]);
        let one_plus = Polynomial::affine(1.0, &[]).add(&Polynomial::var(t).pow(2));
        let cos_r = RationalFn::new(Polynomial::one().sub(&Polynomial::var(t).pow(2)), one_plus.clone());
        let sin_r = RationalFn::new(Polynomial::var(t).scale(2.0), one_plus);
        let after_c = p.substitute_rational(c, &cos_r);
        // Substituting the second variable into numerator and denominator.
        let num = after_c.num.substitute_rational(s, &sin_r);
        let den = after_c.den.substitute_rational(s, &sin_r);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let theta: f64 = rng.random_range(-3.0..3.0);
            let tv = (theta / 2.0).tan();
            let val = (num.num.eval_slice(&[tv]) / num.den.eval_slice(&[tv]))
                / (den.num.eval_slice(&[tv]) / den.den.eval_slice(&[tv]));
            let truth = theta.cos() * theta.sin() + 2.0 * theta.cos() - 0.5 * theta.sin();
            worst = worst.max((val - truth).abs());
        }
        assert!(worst <= 1e-12, "max error {worst}");
    }

    #[test]
    fn coordinate_basis_small_cases() {
        assert_eq!(
            coordinate_degree_basis(&[S1], 2).unwrap(),
            vec![Monomial::one(), m(&[(S1, 1)]), m(&[(S1, 2)])]
        );
        assert_eq!(coordinate_degree_basis(&[], 2).unwrap(), vec![Monomial::one()]);
        let nu = coordinate_degree_basis(&[S1, S2], 2).unwrap();
        let expected: BTreeSet<Monomial> = [
            m(&[]),
            m(&[(S1, 1)]),
            m(&[(S1, 2)]),
            m(&[(S2, 1)]),
            m(&[(S2, 2)]),
            m(&[(S1, 1), (S2, 1)]),
            m(&[(S1, 2), (S2, 1)]),
            m(&[(S1, 1), (S2, 2)]),
            m(&[(S1, 2), (S2, 2)]),
        ]
        .into_iter()
        .collect();
        assert_eq!(nu.len(), 9);
        assert_eq!(nu.iter().cloned().collect::<BTreeSet<_>>(), expected);
    }

    #[test]
    fn coordinate_basis_cap() {
        let vars: Vec<Var> = (0..20).map(Var).collect();
        assert!(matches!(
            coordinate_degree_basis_capped(&vars, 2, 1000),
            Err(Error::BasisTooLarge { .. })
        ));
    }

    #[test]
    fn product_basis_matches_example() {
        let eta = vec![Monomial::one(), m(&[(S1, 1)]), m(&[(S2, 1)])];
        let nu = coordinate_degree_basis(&[S1, S2], 2).unwrap();
        let gamma = product_basis(&eta, &nu);
        assert_eq!(gamma.len(), 15);
        for g in &gamma {
            assert!(g.coordinate_degree() <= 3);
            let threes = [S1, S2].iter().filter(|&&v| g.degree_in(v) == 3).count();
            assert!(threes <= 1, "{g}");
        }
        assert!(!gamma.contains(&m(&[(S1, 3), (S2, 3)])));
        assert_eq!(product_basis(&[Monomial::one()], &nu), nu);
    }

    #[test]
    fn newton_check_examples() {
        let eta = total_degree_basis(&[S1, S2], 1);
        let nu = coordinate_degree_basis(&[S1, S2], 2).unwrap();
        let gamma = product_basis(&eta, &nu);
        assert!(newton_basis_check(&gamma, &nu, &eta));
        assert!(!newton_basis_check(&[m(&[(S1, 2)])], &[Monomial::one()], &eta));
    }

    /// Brute-force oracle: enumerate the full Minkowski sum of exponent sets.
    fn minkowski_oracle(gamma: &[Monomial], rho: &[Monomial], l: &[Monomial]) -> bool {
        let sums: HashSet<Monomial> = rho.iter().flat_map(|r| l.iter().map(move |x| r.mul(x))).collect();
        gamma.iter().all(|g| sums.contains(g))
    }

    #[test]
    fn newton_check_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let all = coordinate_degree_basis(&[S1, S2], 3).unwrap();
        let l = total_degree_basis(&[S1, S2], 1);
        for _ in 0..200 {
            let pick = |rng: &mut ChaCha8Rng, k: usize| -> Vec<Monomial> {
                let mut v: Vec<Monomial> = (0..k).map(|_| all[rng.random_range(0..all.len())].clone()).collect();
                v.sort();
                v.dedup();
                v
            };
            let gamma = pick(&mut rng, 4);
            let rho = pick(&mut rng, 6);
            assert_eq!(
                newton_basis_check(&gamma, &rho, &l),
                minkowski_oracle(&gamma, &rho, &l)
            );
        }
    }

    #[test]
    fn product_basis_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let all = total_degree_basis(&[S1, S2, Var(2)], 2);
        for _ in 0..50 {
            let a: Vec<Monomial> = (0..4).map(|_| all[rng.random_range(0..all.len())].clone()).collect();
            let b: Vec<Monomial> = (0..5).map(|_| all[rng.random_range(0..all.len())].clone()).collect();
            let mut brute = Vec::new();
            for x in &a {
                for y in &b {
                    let p = x.mul(y);
                    if !brute.contains(&p) {
                        brute.push(p);
                    }
                }
            }
            brute.sort();
            assert_eq!(product_basis(&a, &b), brute);
        }
    }

    #[test]
    fn pythagorean_identity() {
        let t = Polynomial::var(S1);
        let den = Polynomial::one().add(&t.pow(2));
        let sin = RationalFn::new(t.scale(2.0), den.clone());
        let cos = RationalFn::new(Polynomial::one().sub(&t.pow(2)), den);
        let sum = sin.mul(&sin).add(&cos.mul(&cos));
        assert!(sum.num.sub(&sum.den).is_zero());
    }

    #[test]
    fn rational_add_identity_and_numeric() {
        let a = RationalFn::new(Polynomial::affine(1.0, &[(S1, 2.0)]), Polynomial::affine(1.0, &[]).add(&Polynomial::var(S2).pow(2)));
        assert_eq!(a.add(&RationalFn::zero()).eval_slice(&[0.3, 0.2]), a.eval_slice(&[0.3, 0.2]));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let pos = |rng: &mut ChaCha8Rng| {
                let q = random_poly(rng, &[S1, S2], 1, 3);
                q.mul(&q).add(&Polynomial::constant(1.0))
            };
            let x = RationalFn::new(random_poly(&mut rng, &[S1, S2], 2, 4), pos(&mut rng));
            let y = RationalFn::new(random_poly(&mut rng, &[S1, S2], 2, 4), pos(&mut rng));
            let sum = x.add(&y);
            for _ in 0..5 {
                let pt = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
                let lhs = sum.eval_slice(&pt);
                let rhs = x.eval_slice(&pt) + y.eval_slice(&pt);
                assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
                assert!(sum.den.eval_slice(&pt) > 0.0);
            }
        }
    }

    #[test]
    fn ordering_is_graded() {
        assert!(m(&[(S1, 1)]) > m(&[(S2, 1)]));
        assert!(m(&[(S2, 2)]) > m(&[(S1, 1)]));
        assert!(m(&[(S1, 1), (S2, 1)]) < m(&[(S1, 2)]));
        assert!(Monomial::one() < m(&[(S2, 1)]));
    }

    #[test]
    fn deterministic_basis_order() {
        let a = coordinate_degree_basis(&[S2, S1, Var(4)], 2).unwrap();
        let b = coordinate_degree_basis(&[S1, Var(4), S2], 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 27);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn poly_strategy() -> impl Strategy<Value = Polynomial> {
            prop::collection::vec((0u32..3, 0u32..3, -4i32..=4), 0..6).prop_map(|terms| {
                Polynomial::from_terms(
                    terms
                        .into_iter()
                        .map(|(a, b, c)| (Monomial::from_pairs([(S1, a), (S2, b)]), c as f64)),
                )
            })
        }

        proptest! {
            #[test]
            fn ring_axioms(a in poly_strategy(), b in poly_strategy(), c in poly_strategy()) {
                prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
                prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
                prop_assert_eq!(a.add(&b), b.add(&a));
                prop_assert_eq!(a.mul(&b), b.mul(&a));
            }

            #[test]
            fn coordinate_basis_size(n in 0usize..5) {
                let vars: Vec<Var> = (0..n as u32).map(Var).collect();
                prop_assert_eq!(coordinate_degree_basis(&vars, 2).unwrap().len(), 3usize.pow(n as u32));
            }
        }
    }
}
