//! Free super-commutative polynomial algebra on symplectic coordinates
//! p_1..p_n, q_1..q_n (even) and x_1..x_m (odd), with its graded Poisson
//! bracket and the action of the quadratic (orthosymplectic) subalgebra.
//!
//! Derivatives act from the left: passing an odd factor costs a sign.

use crate::exact::Rational;
use num_traits::Zero;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SuperError {
    #[error("variable {var} out of range for dimension (2n|m) = (2*{n}|{m})")]
    VarOutOfRange { var: String, n: u16, m: u16 },
    #[error("expected a purely quadratic element, found a term of order {order}")]
    NotQuadratic { order: usize },
}

/// Number of even coordinate pairs (n) and odd coordinates (m).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct SuperDim {
    pub n: u16,
    pub m: u16,
}

impl SuperDim {
    pub fn new(n: u16, m: u16) -> Self {
        SuperDim { n, m }
    }

    /// Dimension of the linear coordinate space, 2n + m.
    pub fn linear_dim(&self) -> usize {
        2 * self.n as usize + self.m as usize
    }

    /// All coordinate vectors in canonical order: p's, then q's, then x's,
    /// each with ascending index.
    pub fn basis(&self) -> Vec<BasisVector> {
        let mut out = Vec::with_capacity(self.linear_dim());
        out.extend((1..=self.n).map(BasisVector::p));
        out.extend((1..=self.n).map(BasisVector::q));
        out.extend((1..=self.m).map(BasisVector::x));
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum VarKind {
    P,
    Q,
    X,
}

/// A single coordinate, 1-indexed. The derived order (p's, then q's, then
/// x's, ascending index) is the normalized variable order used everywhere.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BasisVector {
    pub kind: VarKind,
    pub index: u16,
}

impl BasisVector {
    pub fn p(index: u16) -> Self {
        BasisVector { kind: VarKind::P, index }
    }

    pub fn q(index: u16) -> Self {
        BasisVector { kind: VarKind::Q, index }
    }

    pub fn x(index: u16) -> Self {
        BasisVector { kind: VarKind::X, index }
    }

    /// 0 for even (p, q), 1 for odd (x).
    pub fn parity(&self) -> u8 {
        match self.kind {
            VarKind::X => 1,
            _ => 0,
        }
    }

    pub fn in_range(&self, d: SuperDim) -> bool {
        self.index >= 1
            && match self.kind {
                VarKind::X => self.index <= d.m,
                _ => self.index <= d.n,
            }
    }

    fn check(&self, d: SuperDim) -> Result<(), SuperError> {
        if self.in_range(d) {
            Ok(())
        } else {
            Err(SuperError::VarOutOfRange {
                var: self.to_string(),
                n: d.n,
                m: d.m,
            })
        }
    }
}

impl fmt::Display for BasisVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            VarKind::P => 'p',
            VarKind::Q => 'q',
            VarKind::X => 'x',
        };
        write!(f, "{}{}", k, self.index)
    }
}

/// The even symplectic / odd symmetric pairing on coordinates:
/// <p_i, q_j> = delta_ij, <q_j, p_i> = -delta_ij, <x_i, x_j> = delta_ij,
/// all other pairings zero.
pub fn symplectic_form(a: BasisVector, b: BasisVector) -> i64 {
    use VarKind::*;
    match (a.kind, b.kind) {
        (P, Q) if a.index == b.index => 1,
        (Q, P) if a.index == b.index => -1,
        (X, X) if a.index == b.index => 1,
        _ => 0,
    }
}

/// Normalized monomial: even variables with positive exponents in variable
/// order, odd variables as a strictly increasing list (each squares to zero).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial {
    evens: Vec<(BasisVector, u32)>,
    odds: Vec<u16>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial {
            evens: Vec::new(),
            odds: Vec::new(),
        }
    }

    pub fn var(v: BasisVector) -> Self {
        match v.kind {
            VarKind::X => Monomial {
                evens: Vec::new(),
                odds: vec![v.index],
            },
            _ => Monomial {
                evens: vec![(v, 1)],
                odds: Vec::new(),
            },
        }
    }

    /// Multiplies an arbitrary list of coordinates into normalized form.
    /// Returns None when an odd coordinate repeats. The sign is the Koszul
    /// sign of sorting the odd factors.
    pub fn from_factors(factors: &[BasisVector]) -> Option<(i8, Monomial)> {
        let mut sign = 1i8;
        let mut out = Monomial::one();
        for &v in factors {
            let (s, next) = out.mul(&Monomial::var(v))?;
            sign *= s;
            out = next;
        }
        Some((sign, out))
    }

    pub fn is_one(&self) -> bool {
        self.evens.is_empty() && self.odds.is_empty()
    }

    /// Total polynomial order (degree), counting even exponents and odd factors.
    pub fn order(&self) -> usize {
        let even: u32 = self.evens.iter().map(|(_, e)| *e).sum();
        even as usize + self.odds.len()
    }

    pub fn parity(&self) -> u8 {
        (self.odds.len() % 2) as u8
    }

    pub fn even_exponents(&self) -> &[(BasisVector, u32)] {
        &self.evens
    }

    pub fn odd_factors(&self) -> impl Iterator<Item = BasisVector> + '_ {
        self.odds.iter().map(|&i| BasisVector::x(i))
    }

    pub fn validate(&self, d: SuperDim) -> Result<(), SuperError> {
        for (v, _) in &self.evens {
            v.check(d)?;
        }
        for v in self.odd_factors() {
            v.check(d)?;
        }
        Ok(())
    }

    /// Net q-minus-p degree per even index; the action of p_i q_i scales a
    /// monomial by its i-th weight.
    pub fn weight(&self, n: u16) -> Vec<i32> {
        let mut w = vec![0i32; n as usize];
        for (v, e) in &self.evens {
            let slot = (v.index - 1) as usize;
            match v.kind {
                VarKind::P => w[slot] -= *e as i32,
                VarKind::Q => w[slot] += *e as i32,
                VarKind::X => unreachable!("odd variable among even exponents"),
            }
        }
        w
    }

    /// Expansion into single coordinates in normalized variable order, e.g.
    /// p1^2 q2 x1x3 -> [p1, p1, q2, x1, x3].
    pub fn expanded_factors(&self) -> Vec<BasisVector> {
        let mut out = Vec::with_capacity(self.order());
        for (v, e) in &self.evens {
            out.extend(std::iter::repeat(*v).take(*e as usize));
        }
        out.extend(self.odd_factors());
        out
    }

    /// Super-commutative product. None when an odd factor repeats; otherwise
    /// the Koszul sign of interleaving the odd factor lists.
    pub fn mul(&self, other: &Monomial) -> Option<(i8, Monomial)> {
        let mut evens = Vec::with_capacity(self.evens.len() + other.evens.len());
        let (mut i, mut j) = (0, 0);
        while i < self.evens.len() || j < other.evens.len() {
            if j >= other.evens.len()
                || (i < self.evens.len() && self.evens[i].0 < other.evens[j].0)
            {
                evens.push(self.evens[i]);
                i += 1;
            } else if i >= self.evens.len() || other.evens[j].0 < self.evens[i].0 {
                evens.push(other.evens[j]);
                j += 1;
            } else {
                evens.push((self.evens[i].0, self.evens[i].1 + other.evens[j].1));
                i += 1;
                j += 1;
            }
        }
        let mut odds = Vec::with_capacity(self.odds.len() + other.odds.len());
        let mut inversions = 0usize;
        let (mut i, mut j) = (0, 0);
        while i < self.odds.len() || j < other.odds.len() {
            if j >= other.odds.len() {
                odds.push(self.odds[i]);
                i += 1;
            } else if i >= self.odds.len() {
                odds.push(other.odds[j]);
                j += 1;
            } else if self.odds[i] < other.odds[j] {
                odds.push(self.odds[i]);
                i += 1;
            } else if self.odds[i] > other.odds[j] {
                // other.odds[j] moves left past the remaining odds of self
                inversions += self.odds.len() - i;
                odds.push(other.odds[j]);
                j += 1;
            } else {
                return None;
            }
        }
        let sign = if inversions % 2 == 0 { 1 } else { -1 };
        Some((sign, Monomial { evens, odds }))
    }

    /// Left partial derivative by a single coordinate. None when the
    /// coordinate is absent. For an odd coordinate the sign is (-1)^(number
    /// of odd factors preceding it).
    pub fn derivative(&self, v: BasisVector) -> Option<(i64, Monomial)> {
        match v.kind {
            VarKind::X => {
                let t = self.odds.iter().position(|&i| i == v.index)?;
                let mut odds = self.odds.clone();
                odds.remove(t);
                let sign = if t % 2 == 0 { 1 } else { -1 };
                Some((
                    sign,
                    Monomial {
                        evens: self.evens.clone(),
                        odds,
                    },
                ))
            }
            _ => {
                let t = self.evens.iter().position(|(u, _)| *u == v)?;
                let mut evens = self.evens.clone();
                let e = evens[t].1;
                if e == 1 {
                    evens.remove(t);
                } else {
                    evens[t].1 = e - 1;
                }
                Some((
                    e as i64,
                    Monomial {
                        evens,
                        odds: self.odds.clone(),
                    },
                ))
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.evens.cmp(&other.evens))
            .then_with(|| self.odds.cmp(&other.odds))
    }
}

impl fmt::Display for Monomial {
    /// Text form like "p1^2 q2 x1x3": even factors space-separated with
    /// exponents, odd factors concatenated as a final token.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut tokens: Vec<String> = self
            .evens
            .iter()
            .map(|(v, e)| {
                if *e == 1 {
                    v.to_string()
                } else {
                    format!("{v}^{e}")
                }
            })
            .collect();
        if !self.odds.is_empty() {
            tokens.push(
                self.odds
                    .iter()
                    .map(|i| format!("x{i}"))
                    .collect::<Vec<_>>()
                    .join(""),
            );
        }
        write!(f, "{}", tokens.join(" "))
    }
}

/// Rational linear combination of monomials.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn monomial(m: Monomial, c: Rational) -> Self {
        let mut p = Polynomial::zero();
        p.add_term(m, c);
        p
    }

    pub fn var(v: BasisVector) -> Self {
        Polynomial::monomial(Monomial::var(v), Rational::from_integer(1.into()))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            // remove the key we just zeroed
            let dead: Vec<Monomial> = self
                .terms
                .iter()
                .filter(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone())
                .collect();
            for k in dead {
                self.terms.remove(&k);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                if let Some((sign, m)) = ma.mul(mb) {
                    out.add_term(m, ca * cb * Rational::from_integer(sign.into()));
                }
            }
        }
        out
    }

    /// Parity if all terms agree, else None. The zero polynomial is even.
    pub fn parity(&self) -> Option<u8> {
        let mut it = self.terms.keys().map(|m| m.parity());
        let first = match it.next() {
            None => return Some(0),
            Some(p) => p,
        };
        it.all(|p| p == first).then_some(first)
    }

    pub fn validate(&self, d: SuperDim) -> Result<(), SuperError> {
        for m in self.terms.keys() {
            m.validate(d)?;
        }
        Ok(())
    }
}

/// Poisson bracket of two monomials:
/// {a, b} = sum_i [da/dp_i db/dq_i - da/dq_i db/dp_i]
///          - (-1)^|a| sum_i da/dx_i db/dx_i.
pub fn bracket_monomials(a: &Monomial, b: &Monomial) -> Polynomial {
    let mut out = Polynomial::zero();
    let mut emit = |da: Option<(i64, Monomial)>, db: Option<(i64, Monomial)>, outer: i64| {
        let (Some((ca, ma)), Some((cb, mb))) = (da, db) else {
            return;
        };
        if let Some((sign, m)) = ma.mul(&mb) {
            out.add_term(
                m,
                Rational::from_integer((outer * ca * cb * sign as i64).into()),
            );
        }
    };
    for (v, _) in &a.evens {
        let i = v.index;
        match v.kind {
            VarKind::P => emit(
                a.derivative(BasisVector::p(i)),
                b.derivative(BasisVector::q(i)),
                1,
            ),
            VarKind::Q => emit(
                a.derivative(BasisVector::q(i)),
                b.derivative(BasisVector::p(i)),
                -1,
            ),
            VarKind::X => unreachable!(),
        }
    }
    let odd_sign = if a.parity() == 0 { -1 } else { 1 };
    for &i in &a.odds {
        emit(
            a.derivative(BasisVector::x(i)),
            b.derivative(BasisVector::x(i)),
            odd_sign,
        );
    }
    out
}

/// Poisson bracket, extended bilinearly.
pub fn poisson_bracket(a: &Polynomial, b: &Polynomial) -> Polynomial {
    let mut out = Polynomial::zero();
    for (ma, ca) in a.terms() {
        for (mb, cb) in b.terms() {
            let part = bracket_monomials(ma, mb);
            for (m, c) in part.terms() {
                out.add_term(m.clone(), c * ca * cb);
            }
        }
    }
    out
}

/// All normalized monomials of the given order, sorted.
pub fn monomials_of_order(d: SuperDim, order: usize) -> Vec<Monomial> {
    let vars = d.basis();
    let mut out = Vec::new();
    let mut current: Vec<(BasisVector, u32)> = Vec::new();
    fn rec(
        vars: &[BasisVector],
        pos: usize,
        remaining: usize,
        current: &mut Vec<(BasisVector, u32)>,
        out: &mut Vec<Monomial>,
    ) {
        if remaining == 0 {
            let evens = current
                .iter()
                .filter(|(v, _)| v.kind != VarKind::X)
                .cloned()
                .collect();
            let odds = current
                .iter()
                .filter(|(v, _)| v.kind == VarKind::X)
                .map(|(v, _)| v.index)
                .collect();
            out.push(Monomial { evens, odds });
            return;
        }
        if pos >= vars.len() {
            return;
        }
        let v = vars[pos];
        let max = if v.kind == VarKind::X {
            remaining.min(1)
        } else {
            remaining
        };
        for e in (0..=max).rev() {
            if e > 0 {
                current.push((v, e as u32));
            }
            rec(vars, pos + 1, remaining - e, current, out);
            if e > 0 {
                current.pop();
            }
        }
    }
    rec(&vars, 0, order, &mut current, &mut out);
    out.sort();
    out
}

/// Monomial basis of the quadratic subalgebra; its dimension is
/// 2n^2 + n + m(m-1)/2 + 2nm.
pub fn osp_basis(d: SuperDim) -> Vec<Monomial> {
    monomials_of_order(d, 2)
}

/// Adjoint action of a purely quadratic element: act(xi, f) = {xi, f}.
pub fn act(xi: &Polynomial, target: &Polynomial) -> Result<Polynomial, SuperError> {
    for (m, _) in xi.terms() {
        if m.order() != 2 {
            return Err(SuperError::NotQuadratic { order: m.order() });
        }
    }
    Ok(poisson_bracket(xi, target))
}

/// Action of a quadratic monomial on a single coordinate, as a list of
/// (coordinate, integer coefficient) pairs.
pub fn act_on_vector(xi: &Monomial, v: BasisVector) -> Vec<(BasisVector, i64)> {
    debug_assert_eq!(xi.order(), 2);
    let poly = bracket_monomials(xi, &Monomial::var(v));
    poly.terms()
        .map(|(m, c)| {
            debug_assert_eq!(m.order(), 1);
            debug_assert!(c.denom() == &num_bigint::BigInt::from(1));
            let factors = m.expanded_factors();
            let n: i64 = num_traits::ToPrimitive::to_i64(c.numer()).expect("small coefficient");
            (factors[0], n)
        })
        .collect()
}

/// Decomposable tensor on the coordinate space: ordered single-coordinate
/// factors with a rational coefficient.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TensorWord {
    pub coeff: Rational,
    pub factors: Vec<BasisVector>,
}

impl TensorWord {
    pub fn new(factors: Vec<BasisVector>) -> Self {
        TensorWord {
            coeff: Rational::from_integer(1.into()),
            factors,
        }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn parity(&self) -> u8 {
        (self.factors.iter().filter(|v| v.parity() == 1).count() % 2) as u8
    }
}

/// Derivation extension of a quadratic Hamiltonian to tensor words, one slot
/// at a time with the Koszul sign for sliding xi past earlier odd factors.
pub fn act_tensor(xi: &Monomial, t: &TensorWord) -> Vec<TensorWord> {
    debug_assert_eq!(xi.order(), 2);
    let mut out = Vec::new();
    let mut prefix_parity = 0u8;
    for k in 0..t.factors.len() {
        let flip = xi.parity() == 1 && prefix_parity == 1;
        for (image, c) in act_on_vector(xi, t.factors[k]) {
            let mut coeff = &t.coeff * Rational::from_integer(c.into());
            if flip {
                coeff = -coeff;
            }
            let mut factors = t.factors.clone();
            factors[k] = image;
            out.push(TensorWord { coeff, factors });
        }
        prefix_parity ^= t.factors[k].parity();
    }
    out
}

/// Applies a permutation to the tensor slots: the factor in slot i moves to
/// slot sigma[i] (0-indexed). The Koszul sign is (-1)^(number of inversions
/// of sigma restricted to odd-parity factors).
pub fn permute_tensor(sigma: &[usize], t: &TensorWord) -> TensorWord {
    assert_eq!(sigma.len(), t.factors.len(), "permutation length mismatch");
    let mut factors = vec![None; t.factors.len()];
    for (i, &dst) in sigma.iter().enumerate() {
        assert!(factors[dst].is_none(), "not a permutation");
        factors[dst] = Some(t.factors[i]);
    }
    let mut inversions = 0usize;
    for i in 0..sigma.len() {
        if t.factors[i].parity() == 0 {
            continue;
        }
        for j in (i + 1)..sigma.len() {
            if t.factors[j].parity() == 1 && sigma[i] > sigma[j] {
                inversions += 1;
            }
        }
    }
    let mut coeff = t.coeff.clone();
    if inversions % 2 == 1 {
        coeff = -coeff;
    }
    TensorWord {
        coeff,
        factors: factors.into_iter().map(|f| f.expect("bijection")).collect(),
    }
}
