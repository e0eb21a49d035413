//! Exterior complex on the Hamiltonians of cubic and higher order: wedge
//! words, the homology differential, and the quotient by the span of the
//! quadratic (orthosymplectic) action, which realizes the relative complex.
//!
//! Heavy quotients are organized by the symplectic weight grading. A word
//! with weight mu has mu_i = deg q_i - deg p_i summed over its factors; the
//! diagonal quadratics p_i q_i scale such a word by mu_i, so every word of
//! nonzero weight already lies in the action span and the quotient is
//! carried entirely by the weight-zero (balanced) block. The action and the
//! differential both preserve weight, which keeps every matrix block-sized.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use num_integer::Integer;

use crate::exact::{Echelon, QuotientBasis, Rational, SparseMatrix, SparseVec};
use crate::poisson::{
    act_on_vector, bracket_monomials, monomials_of_order, osp_basis, BasisVector, Monomial,
    SuperDim,
};

/// Normal-form wedge word: factors of order >= 3, sorted by the monomial
/// order, with a repeated factor permitted only when its parity is odd.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WedgeWord {
    factors: Vec<Monomial>,
}

impl WedgeWord {
    /// Sorts the factors into normal form, returning the Koszul sign of the
    /// sorting permutation, or None when the word vanishes (a repeated
    /// even-parity factor).
    pub fn normalize(mut factors: Vec<Monomial>) -> Option<(i8, WedgeWord)> {
        let mut sign = 1i8;
        for i in 1..factors.len() {
            let mut k = i;
            while k > 0 && factors[k] < factors[k - 1] {
                if !(factors[k].parity() == 1 && factors[k - 1].parity() == 1) {
                    sign = -sign;
                }
                factors.swap(k - 1, k);
                k -= 1;
            }
        }
        for pair in factors.windows(2) {
            if pair[0] == pair[1] && pair[0].parity() == 0 {
                return None;
            }
        }
        Some((sign, WedgeWord { factors }))
    }

    pub fn factors(&self) -> &[Monomial] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn order(&self) -> usize {
        self.factors.iter().map(|f| f.order()).sum()
    }

    pub fn parity(&self) -> u8 {
        (self.factors.iter().map(|f| f.parity() as usize).sum::<usize>() % 2) as u8
    }

    pub fn weight(&self, n: u16) -> Vec<i32> {
        let mut wt = vec![0i32; n as usize];
        for f in &self.factors {
            for (i, w) in f.weight(n).into_iter().enumerate() {
                wt[i] += w;
            }
        }
        wt
    }
}

impl std::fmt::Display for WedgeWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.factors.iter().map(|m| m.to_string()).collect();
        write!(f, "{}", parts.join(" ∧ "))
    }
}

/// Formal rational combination of wedge words. Zero coefficients are never
/// stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CEChain {
    terms: BTreeMap<WedgeWord, Rational>,
}

impl CEChain {
    pub fn zero() -> CEChain {
        CEChain::default()
    }

    /// Chain with a single (possibly unsorted) factor list.
    pub fn from_factors(factors: Vec<Monomial>, coeff: Rational) -> CEChain {
        let mut chain = CEChain::zero();
        if let Some((sign, word)) = WedgeWord::normalize(factors) {
            chain.add_term(word, coeff * Rational::from_integer(sign.into()));
        }
        chain
    }

    pub fn add_term(&mut self, word: WedgeWord, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(word).or_insert_with(Rational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&WedgeWord, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, word: &WedgeWord) -> Rational {
        self.terms.get(word).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn scaled(&self, factor: &Rational) -> CEChain {
        if factor.is_zero() {
            return CEChain::zero();
        }
        CEChain {
            terms: self.terms.iter().map(|(w, c)| (w.clone(), c * factor)).collect(),
        }
    }

    pub fn add(&self, other: &CEChain) -> CEChain {
        let mut out = self.clone();
        for (w, c) in other.terms() {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &CEChain) -> CEChain {
        let mut out = self.clone();
        for (w, c) in other.terms() {
            out.add_term(w.clone(), -c.clone());
        }
        out
    }
}

/// Exponent of -1 for pulling the factors at 0-based positions a < b to the
/// front of the word: |g_a| and |g_b| each collect the parities they pass,
/// plus the cross term and the positional term (a+1) + (b+1) - 1.
fn pair_sign(parities: &[u8], a: usize, b: usize) -> i8 {
    let before_a: u32 = parities[..a].iter().map(|&p| p as u32).sum();
    let before_b: u32 = parities[..b].iter().map(|&p| p as u32).sum();
    let exponent = parities[a] as u32 * before_a
        + parities[b] as u32 * before_b
        + parities[a] as u32 * parities[b] as u32
        + a as u32
        + b as u32
        + 1;
    if exponent % 2 == 0 {
        1
    } else {
        -1
    }
}

fn ce_differential_impl(chain: &CEChain, defect: bool) -> CEChain {
    let mut out = CEChain::zero();
    for (word, coeff) in chain.terms() {
        let fs = word.factors();
        let parities: Vec<u8> = fs.iter().map(|f| f.parity()).collect();
        for a in 0..fs.len() {
            for b in (a + 1)..fs.len() {
                let mut sign = pair_sign(&parities, a, b);
                if defect && a == 0 && b == 1 {
                    sign = -sign;
                }
                let bracket = bracket_monomials(&fs[a], &fs[b]);
                let rest: Vec<Monomial> = fs
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != a && k != b)
                    .map(|(_, f)| f.clone())
                    .collect();
                for (m, c) in bracket.terms() {
                    let mut factors = Vec::with_capacity(rest.len() + 1);
                    factors.push(m.clone());
                    factors.extend(rest.iter().cloned());
                    if let Some((s2, w2)) = WedgeWord::normalize(factors) {
                        out.add_term(
                            w2,
                            coeff * c * Rational::from_integer((sign * s2).into()),
                        );
                    }
                }
            }
        }
    }
    out
}

/// Homology differential: sum over factor pairs of the signed bracket
/// wedged with the remaining factors; bidegree (-1, -2) on (length, order).
pub fn ce_differential(chain: &CEChain) -> CEChain {
    ce_differential_impl(chain, false)
}

/// Differential with the sign of the leading factor pair deliberately
/// flipped. Exists so the verification harness can demonstrate that the
/// identity checks catch a single wrong sign.
pub fn ce_differential_defective(chain: &CEChain) -> CEChain {
    ce_differential_impl(chain, true)
}

/// Derivation extension of a quadratic Hamiltonian to wedge words.
pub fn osp_act_chain(xi: &Monomial, chain: &CEChain) -> CEChain {
    debug_assert_eq!(xi.order(), 2);
    let mut out = CEChain::zero();
    for (word, coeff) in chain.terms() {
        let fs = word.factors();
        let mut prefix_parity = 0u8;
        for k in 0..fs.len() {
            let flip = xi.parity() == 1 && prefix_parity == 1;
            let acted = bracket_monomials(xi, &fs[k]);
            for (m, c) in acted.terms() {
                let mut factors = fs.to_vec();
                factors[k] = m.clone();
                if let Some((s, w2)) = WedgeWord::normalize(factors) {
                    let mut term = coeff * c * Rational::from_integer(s.into());
                    if flip {
                        term = -term;
                    }
                    out.add_term(w2, term);
                }
            }
            prefix_parity ^= fs[k].parity();
        }
    }
    out
}

/// Pool of admissible wedge factors: all monomials of order 3 up to
/// max_order, in monomial order, so pool ids increase with the order.
struct FactorPool {
    d: SuperDim,
    monos: Vec<Monomial>,
    order: Vec<u32>,
    parity: Vec<u8>,
    weight: Vec<Vec<i32>>,
    max_order: usize,
}

impl FactorPool {
    fn new(d: SuperDim, max_order: usize) -> FactorPool {
        let mut monos = Vec::new();
        for o in 3..=max_order.max(2) {
            monos.extend(monomials_of_order(d, o));
        }
        let order = monos.iter().map(|m| m.order() as u32).collect();
        let parity = monos.iter().map(|m| m.parity()).collect();
        let weight = monos.iter().map(|m| m.weight(d.n)).collect();
        FactorPool {
            d,
            monos,
            order,
            parity,
            weight,
            max_order,
        }
    }

    fn id_of(&self, m: &Monomial) -> Option<u32> {
        self.monos.binary_search(m).ok().map(|i| i as u32)
    }

    fn both_odd(&self, a: u32, b: u32) -> bool {
        self.parity[a as usize] == 1 && self.parity[b as usize] == 1
    }
}

/// Visits every normal-form word of the given length and total order once,
/// in lexicographic pool-id order, with its weight.
fn scan_words(
    pool: &FactorPool,
    len: usize,
    order: usize,
    leaf: &mut impl FnMut(&[u32], &[i32]),
) {
    let n = pool.d.n as usize;
    let mut stack: Vec<u32> = Vec::with_capacity(len);
    let mut wt = vec![0i32; n];
    rec_scan(pool, 0, len, order, &mut stack, &mut wt, leaf);
}

fn rec_scan(
    pool: &FactorPool,
    start: usize,
    slots: usize,
    order_left: usize,
    stack: &mut Vec<u32>,
    wt: &mut Vec<i32>,
    leaf: &mut impl FnMut(&[u32], &[i32]),
) {
    if slots == 0 {
        if order_left == 0 {
            leaf(stack, wt);
        }
        return;
    }
    for idx in start..pool.monos.len() {
        let o = pool.order[idx] as usize;
        if o + 3 * (slots - 1) > order_left {
            break;
        }
        if order_left - o > (slots - 1) * pool.max_order {
            continue;
        }
        for (i, w) in pool.weight[idx].iter().enumerate() {
            wt[i] += w;
        }
        stack.push(idx as u32);
        let next = if pool.parity[idx] == 1 { idx } else { idx + 1 };
        rec_scan(pool, next, slots - 1, order_left - o, stack, wt, leaf);
        stack.pop();
        for (i, w) in pool.weight[idx].iter().enumerate() {
            wt[i] -= w;
        }
    }
}

/// Every normal-form wedge word of the given length and total order, in a
/// fixed deterministic order. Materializes the full ambient basis; intended
/// for moderate bidegrees.
pub fn wedge_basis(d: SuperDim, len: usize, order: usize) -> Vec<WedgeWord> {
    let max_factor = max_factor_order(len, order);
    let pool = FactorPool::new(d, max_factor);
    let mut out = Vec::new();
    scan_words(&pool, len, order, &mut |ids, _| {
        out.push(WedgeWord {
            factors: ids.iter().map(|&i| pool.monos[i as usize].clone()).collect(),
        });
    });
    out
}

fn max_factor_order(len: usize, order: usize) -> usize {
    if len == 0 {
        0
    } else {
        order.saturating_sub(3 * (len - 1))
    }
}

/// Moves the factor at position k (just replaced) back into sorted position,
/// tracking the Koszul sign; None when the word dies on a repeated even
/// factor.
fn reposition(pool: &FactorPool, word: &[u32], k: usize, replacement: u32) -> Option<(i64, Vec<u32>)> {
    let mut v = word.to_vec();
    v[k] = replacement;
    let mut k = k;
    let mut sign = 1i64;
    while k > 0 && v[k] < v[k - 1] {
        if !pool.both_odd(v[k], v[k - 1]) {
            sign = -sign;
        }
        v.swap(k - 1, k);
        k -= 1;
    }
    while k + 1 < v.len() && v[k] > v[k + 1] {
        if !pool.both_odd(v[k], v[k + 1]) {
            sign = -sign;
        }
        v.swap(k, k + 1);
        k += 1;
    }
    let even = pool.parity[v[k] as usize] == 0;
    if even && ((k > 0 && v[k - 1] == v[k]) || (k + 1 < v.len() && v[k] == v[k + 1])) {
        return None;
    }
    Some((sign, v))
}

/// Prepends a factor and bubbles it into sorted position.
fn insert_front(pool: &FactorPool, rest: &[u32], front: u32) -> Option<(i64, Vec<u32>)> {
    let mut v = Vec::with_capacity(rest.len() + 1);
    v.push(front);
    v.extend_from_slice(rest);
    reposition(pool, &v.clone(), 0, front)
}

fn negated(wt: &[i32]) -> Vec<i32> {
    wt.iter().map(|&w| -w).collect()
}

/// Signed substitutions from the finite normalizer of the diagonal inside
/// the identity component of the isometry group: permutations of the
/// symplectic pairs, the per-pair rotation (p, q) -> (q, -p), and for
/// exactly two odd variables the quarter turn (x1, x2) -> (x2, -x1). Every
/// such g is connected to the identity, so w - g(w) already lies in the
/// quadratic action span and folding by these relations is exact.
fn fold_elements(d: SuperDim) -> Vec<Vec<(i8, BasisVector)>> {
    let n = d.n as usize;
    let mut perms: Vec<Vec<u16>> = Vec::new();
    let mut perm: Vec<u16> = (1..=d.n).collect();
    heap_permutations(&mut perm, n, &mut perms);
    if perms.is_empty() {
        perms.push(Vec::new());
    }

    let odd_turns: Vec<Vec<(i8, BasisVector)>> = if d.m == 2 {
        let mut turns = Vec::with_capacity(4);
        let mut x1 = (1i8, BasisVector::x(1));
        let mut x2 = (1i8, BasisVector::x(2));
        for _ in 0..4 {
            turns.push(vec![x1, x2]);
            let next_x1 = (x1.0, BasisVector::x(3 - x1.1.index));
            let next_x2 = (x2.0, BasisVector::x(3 - x2.1.index));
            x1 = if next_x1.1.index == 1 { (-next_x1.0, next_x1.1) } else { next_x1 };
            x2 = if next_x2.1.index == 1 { (-next_x2.0, next_x2.1) } else { next_x2 };
        }
        turns
    } else {
        vec![(1..=d.m).map(|k| (1i8, BasisVector::x(k))).collect()]
    };

    let mut out = Vec::new();
    for perm in &perms {
        for mask in 0..(1u32 << n) {
            for turn in &odd_turns {
                let mut sub: Vec<(i8, BasisVector)> = Vec::with_capacity(d.linear_dim());
                for i in 1..=d.n {
                    let target = perm[(i - 1) as usize];
                    if mask & (1 << (i - 1)) != 0 {
                        sub.push((1, BasisVector::q(target)));
                    } else {
                        sub.push((1, BasisVector::p(target)));
                    }
                }
                for i in 1..=d.n {
                    let target = perm[(i - 1) as usize];
                    if mask & (1 << (i - 1)) != 0 {
                        sub.push((-1, BasisVector::p(target)));
                    } else {
                        sub.push((1, BasisVector::q(target)));
                    }
                }
                sub.extend(turn.iter().copied());
                out.push(sub);
            }
        }
    }
    out
}

fn heap_permutations(perm: &mut Vec<u16>, k: usize, out: &mut Vec<Vec<u16>>) {
    if k <= 1 {
        out.push(perm.clone());
        return;
    }
    for i in 0..k {
        heap_permutations(perm, k - 1, out);
        if k % 2 == 0 {
            perm.swap(i, k - 1);
        } else {
            perm.swap(0, k - 1);
        }
    }
}

/// Applies a signed variable substitution to a monomial.
fn substitute_monomial(
    sub: &[(i8, BasisVector)],
    index_of: &BTreeMap<BasisVector, usize>,
    m: &Monomial,
) -> (i8, Monomial) {
    let mut sign = 1i8;
    let mut mapped = Vec::with_capacity(m.order());
    for v in m.expanded_factors() {
        let (s, image) = sub[index_of[&v]];
        sign *= s;
        mapped.push(image);
    }
    let (s2, mono) =
        Monomial::from_factors(&mapped).expect("a bijective substitution keeps factors distinct");
    (sign * s2, mono)
}

/// Sorts pool ids into wedge normal form with the Koszul sign; None when a
/// repeated even factor kills the word.
fn sort_ids(pool: &FactorPool, mut v: Vec<u32>) -> Option<(i64, Vec<u32>)> {
    let mut sign = 1i64;
    for i in 1..v.len() {
        let mut k = i;
        while k > 0 && v[k] < v[k - 1] {
            if !pool.both_odd(v[k], v[k - 1]) {
                sign = -sign;
            }
            v.swap(k - 1, k);
            k -= 1;
        }
    }
    for w in v.windows(2) {
        if w[0] == w[1] && pool.parity[w[0] as usize] == 0 {
            return None;
        }
    }
    Some((sign, v))
}

/// Per group element, the signed image of each pool monomial.
fn fold_tables(d: SuperDim, pool: &FactorPool) -> Vec<Vec<(i8, u32)>> {
    let index_of: BTreeMap<BasisVector, usize> =
        d.basis().into_iter().enumerate().map(|(i, v)| (v, i)).collect();
    fold_elements(d)
        .par_iter()
        .map(|sub| {
            pool.monos
                .iter()
                .map(|m| {
                    let (s, image) = substitute_monomial(sub, &index_of, m);
                    (s, pool.id_of(&image).expect("substitution preserves the order"))
                })
                .collect()
        })
        .collect()
}

/// For every balanced word, the index of the minimal word in its signed
/// orbit together with the relative sign; sign zero marks orbits killed by
/// a sign-reversing stabilizer.
fn fold_orbits(pool: &FactorPool, tables: &[Vec<(i8, u32)>], balanced: &[Box<[u32]>]) -> Vec<(u32, i8)> {
    balanced
        .par_iter()
        .map(|word| {
            let mut best_idx = usize::MAX;
            let mut best_sign = 0i8;
            let mut killed = false;
            for table in tables {
                let mut sign = 1i64;
                let mut mapped = Vec::with_capacity(word.len());
                for &id in word.iter() {
                    let (s, image) = table[id as usize];
                    sign *= s as i64;
                    mapped.push(image);
                }
                let (s2, sorted) =
                    sort_ids(pool, mapped).expect("a bijective substitution keeps factors distinct");
                sign *= s2;
                let idx = balanced
                    .binary_search_by(|probe| probe.as_ref().cmp(sorted.as_slice()))
                    .expect("the group preserves the balanced block");
                if idx < best_idx {
                    best_idx = idx;
                    best_sign = sign as i8;
                    killed = false;
                } else if idx == best_idx && sign as i8 != best_sign {
                    killed = true;
                }
            }
            if killed {
                (best_idx as u32, 0)
            } else {
                (best_idx as u32, best_sign)
            }
        })
        .collect()
}

/// Primitive, sign-normalized copy of an integer row; None when zero.
fn normalized_row(row: Vec<(usize, i64)>) -> Option<Vec<(usize, i64)>> {
    let mut row: Vec<(usize, i64)> = row.into_iter().filter(|&(_, v)| v != 0).collect();
    if row.is_empty() {
        return None;
    }
    let mut g: i64 = 0;
    for &(_, v) in &row {
        g = g.gcd(&v);
    }
    let flip = row[0].1 < 0;
    for e in &mut row {
        e.1 /= g;
        if flip {
            e.1 = -e.1;
        }
    }
    Some(row)
}

/// Basis data for one bidegree of the quotient complex: the balanced block,
/// its signed-orbit folding, the quotient by the action span, and the
/// ambient dimension for reports.
pub struct RelativeBasis {
    d: SuperDim,
    word_length: usize,
    order: usize,
    ambient_dim: usize,
    pool: FactorPool,
    balanced: Vec<Box<[u32]>>,
    /// balanced index -> (orbit representative index, sign); sign zero for
    /// orbits equal to their own negative.
    fold: Vec<(u32, i8)>,
    /// Live representative indices, ascending; column c of the quotient
    /// machinery is the balanced word rep_cols[c].
    rep_cols: Vec<u32>,
    quotient: QuotientBasis,
}

/// Quotient of the degree-(len, order) wedge space by the span of the
/// quadratic action, computed on the weight-balanced block.
pub fn coinvariant_quotient(d: SuperDim, len: usize, order: usize) -> RelativeBasis {
    let pool = FactorPool::new(d, max_factor_order(len, order));
    let generators = osp_basis(d);
    let zero_wt = vec![0i32; d.n as usize];

    let mut wanted: BTreeSet<Vec<i32>> = BTreeSet::new();
    wanted.insert(zero_wt.clone());
    for g in &generators {
        wanted.insert(negated(&g.weight(d.n)));
    }
    let mut blocks: BTreeMap<Vec<i32>, Vec<Box<[u32]>>> =
        wanted.iter().map(|w| (w.clone(), Vec::new())).collect();
    let mut ambient_dim = 0usize;
    scan_words(&pool, len, order, &mut |ids, wt| {
        ambient_dim += 1;
        if let Some(block) = blocks.get_mut(wt) {
            block.push(ids.to_vec().into_boxed_slice());
        }
    });
    let balanced = blocks.remove(&zero_wt).expect("balanced block allocated");

    let tables = fold_tables(d, &pool);
    let fold = fold_orbits(&pool, &tables, &balanced);
    let rep_cols: Vec<u32> = fold
        .iter()
        .enumerate()
        .filter(|&(t, &(rep, s))| s == 1 && rep as usize == t)
        .map(|(t, _)| t as u32)
        .collect();

    let mut echelon = Echelon::new();
    let mut seen: BTreeSet<Vec<(usize, i64)>> = BTreeSet::new();
    for g in &generators {
        let g_weight = g.weight(d.n);
        let source: &[Box<[u32]>] = if g_weight == zero_wt {
            &balanced
        } else {
            match blocks.get(&negated(&g_weight)) {
                Some(b) => b,
                None => continue,
            }
        };
        if source.is_empty() {
            continue;
        }
        // One bracket table per generator: acting preserves factor order, so
        // every image is again a pool monomial.
        let table: Vec<Vec<(i64, u32)>> = pool
            .monos
            .par_iter()
            .map(|m| {
                bracket_monomials(g, m)
                    .terms()
                    .map(|(rm, rc)| {
                        debug_assert!(rc.denom() == &BigInt::from(1));
                        let c = rc.numer().to_i64().expect("small coefficient");
                        (c, pool.id_of(rm).expect("action preserves the pool"))
                    })
                    .collect()
            })
            .collect();
        let rows: Vec<Vec<(usize, i64)>> = source
            .par_iter()
            .map(|word| action_row(&pool, g.parity(), &table, word, &balanced, &fold, &rep_cols))
            .collect();
        // Whole families of rows are group translates of each other and fold
        // to the same normalized row; insert each once.
        for row in rows {
            if let Some(norm) = normalized_row(row) {
                if seen.insert(norm.clone()) {
                    echelon.insert_int(
                        norm.into_iter().map(|(c, v)| (c, BigInt::from(v))).collect(),
                    );
                }
            }
        }
    }
    let quotient = QuotientBasis::from_echelon(rep_cols.len(), echelon);
    RelativeBasis {
        d,
        word_length: len,
        order,
        ambient_dim,
        pool,
        balanced,
        fold,
        rep_cols,
        quotient,
    }
}

/// Row of act(g, word) in folded balanced-block coordinates.
fn action_row(
    pool: &FactorPool,
    g_parity: u8,
    table: &[Vec<(i64, u32)>],
    word: &[u32],
    balanced: &[Box<[u32]>],
    fold: &[(u32, i8)],
    rep_cols: &[u32],
) -> Vec<(usize, i64)> {
    let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
    let mut prefix_parity = 0u8;
    for k in 0..word.len() {
        let koszul: i64 = if g_parity == 1 && prefix_parity == 1 {
            -1
        } else {
            1
        };
        for &(c, image) in &table[word[k] as usize] {
            if let Some((s, v)) = reposition(pool, word, k, image) {
                let col = balanced
                    .binary_search_by(|probe| probe.as_ref().cmp(v.as_slice()))
                    .expect("action preserves weight");
                let (rep, fs) = fold[col];
                if fs == 0 {
                    continue;
                }
                let folded_col = rep_cols
                    .binary_search(&rep)
                    .expect("orbit representative is a live column");
                *acc.entry(folded_col).or_insert(0) += koszul * c * s * fs as i64;
            }
        }
        prefix_parity ^= pool.parity[word[k] as usize];
    }
    acc.into_iter().filter(|&(_, v)| v != 0).collect()
}

impl RelativeBasis {
    pub fn d(&self) -> SuperDim {
        self.d
    }

    pub fn word_length(&self) -> usize {
        self.word_length
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.quotient.dim()
    }

    fn word_at(&self, balanced_index: usize) -> WedgeWord {
        WedgeWord {
            factors: self.balanced[balanced_index]
                .iter()
                .map(|&i| self.pool.monos[i as usize].clone())
                .collect(),
        }
    }

    /// The quotient basis, as representatives from the balanced block.
    pub fn selected_words(&self) -> Vec<WedgeWord> {
        self.quotient
            .selected()
            .iter()
            .map(|&c| self.word_at(self.rep_cols[c] as usize))
            .collect()
    }

    /// Folds a vector over balanced indices into live orbit columns.
    fn fold_sparse(&self, v: SparseVec) -> SparseVec {
        let mut acc: BTreeMap<usize, Rational> = BTreeMap::new();
        for (col, val) in v {
            let (rep, s) = self.fold[col];
            if s == 0 {
                continue;
            }
            let folded_col = self
                .rep_cols
                .binary_search(&rep)
                .expect("orbit representative is a live column");
            let signed = if s == 1 { val } else { -val };
            *acc.entry(folded_col).or_insert_with(Rational::zero) += signed;
        }
        acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
    }

    fn balanced_index(&self, word: &WedgeWord) -> Option<usize> {
        let ids: Option<Vec<u32>> = word.factors().iter().map(|m| self.pool.id_of(m)).collect();
        let ids = ids?;
        self.balanced
            .binary_search_by(|probe| probe.as_ref().cmp(ids.as_slice()))
            .ok()
    }

    /// Coordinates of a chain's class in the quotient basis. Words of
    /// nonzero weight are in the action span and contribute nothing.
    pub fn project_chain(&self, chain: &CEChain) -> Vec<Rational> {
        let zero_wt = vec![0i32; self.d.n as usize];
        let mut ambient: BTreeMap<usize, Rational> = BTreeMap::new();
        for (word, coeff) in chain.terms() {
            debug_assert_eq!(word.len(), self.word_length);
            debug_assert_eq!(word.order(), self.order);
            if word.weight(self.d.n) != zero_wt {
                continue;
            }
            let col = self
                .balanced_index(word)
                .expect("balanced word of matching bidegree");
            *ambient.entry(col).or_insert_with(Rational::zero) += coeff;
        }
        let sparse: SparseVec = ambient.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        self.quotient.project(&self.fold_sparse(sparse))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.d.n,
            "m": self.d.m,
            "i": self.word_length,
            "order": self.order,
            "ambient_dim": self.ambient_dim,
            "dim": self.dim(),
            "selected": self.selected_words().iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        })
    }
}

/// Matrix of the differential between two quotient bases (source at
/// (len, order), target at (len-1, order-2)): lift, differentiate, project.
pub fn relative_differential_matrix(source: &RelativeBasis, target: &RelativeBasis) -> SparseMatrix {
    assert_eq!(source.d, target.d, "mismatched superdimensions");
    assert_eq!(source.word_length, target.word_length + 1, "length step");
    assert_eq!(source.order, target.order + 2, "order step");
    debug_assert!(target.pool.max_order >= source.pool.max_order || source.dim() == 0);
    let columns: Vec<SparseVec> = source
        .quotient
        .selected()
        .par_iter()
        .map(|&sel| {
            let word = &source.balanced[source.rep_cols[sel] as usize];
            let parities: Vec<u8> = word
                .iter()
                .map(|&id| source.pool.parity[id as usize])
                .collect();
            let mut acc: BTreeMap<usize, Rational> = BTreeMap::new();
            for a in 0..word.len() {
                for b in (a + 1)..word.len() {
                    let sign = pair_sign(&parities, a, b);
                    // Source pool ids remain valid in the larger target pool
                    // because both list the same monomials in the same order.
                    let rest: Vec<u32> = word
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != a && k != b)
                        .map(|(_, &id)| id)
                        .collect();
                    let bracket = bracket_monomials(
                        &source.pool.monos[word[a] as usize],
                        &source.pool.monos[word[b] as usize],
                    );
                    for (m, c) in bracket.terms() {
                        let front = target.pool.id_of(m).expect("bracket stays in the pool");
                        if let Some((s, v)) = insert_front(&target.pool, &rest, front) {
                            let col = target
                                .balanced
                                .binary_search_by(|probe| probe.as_ref().cmp(v.as_slice()))
                                .expect("differential preserves weight");
                            let term = c * Rational::from_integer((sign as i64 * s).into());
                            *acc.entry(col).or_insert_with(Rational::zero) += term;
                        }
                    }
                }
            }
            let sparse: SparseVec = acc.into_iter().filter(|(_, v)| !v.is_zero()).collect();
            let dense = target.quotient.project(&target.fold_sparse(sparse));
            dense
                .into_iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .collect()
        })
        .collect();
    SparseMatrix::from_columns(target.dim(), &columns)
}

/// Dimension of the quotient of the full tensor power of the coordinate
/// space by the quadratic action, computed on the weight-balanced block.
pub fn tensor_coinvariant_dim(d: SuperDim, len: usize) -> usize {
    let basis = d.basis();
    let nvars = basis.len();
    let var_weight: Vec<Vec<i32>> = basis.iter().map(|v| Monomial::var(*v).weight(d.n)).collect();
    let var_parity: Vec<u8> = basis.iter().map(|v| v.parity()).collect();
    let index_of: BTreeMap<_, _> = basis.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let generators = osp_basis(d);
    let zero_wt = vec![0i32; d.n as usize];

    let mut wanted: BTreeSet<Vec<i32>> = BTreeSet::new();
    wanted.insert(zero_wt.clone());
    for g in &generators {
        wanted.insert(negated(&g.weight(d.n)));
    }
    let mut blocks: BTreeMap<Vec<i32>, Vec<Box<[u16]>>> =
        wanted.iter().map(|w| (w.clone(), Vec::new())).collect();

    // Odometer over all length-len tuples, ascending, bucketing the needed
    // weight blocks.
    let mut word = vec![0u16; len];
    loop {
        let mut wt = vec![0i32; d.n as usize];
        for &v in &word {
            for (i, w) in var_weight[v as usize].iter().enumerate() {
                wt[i] += w;
            }
        }
        if let Some(block) = blocks.get_mut(&wt) {
            block.push(word.clone().into_boxed_slice());
        }
        let mut pos = len;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            word[pos] += 1;
            if (word[pos] as usize) < nvars {
                break;
            }
            word[pos] = 0;
        }
        if pos == 0 && word[0] == 0 {
            break;
        }
        if len == 0 {
            break;
        }
    }
    let balanced = blocks.remove(&zero_wt).expect("balanced block allocated");

    // Fold the balanced block along the finite normalizer. Group elements
    // act letter by letter with slots fixed, so an orbit is just a signed
    // relabeling of the word.
    let letter_tables: Vec<Vec<(i8, u16)>> = fold_elements(d)
        .iter()
        .map(|sub| {
            basis
                .iter()
                .map(|v| {
                    let (s, image) = sub[index_of[v]];
                    (s, index_of[&image] as u16)
                })
                .collect()
        })
        .collect();
    let fold: Vec<(u32, i8)> = balanced
        .par_iter()
        .map(|word| {
            let mut best_idx = usize::MAX;
            let mut best_sign = 0i8;
            let mut killed = false;
            for table in &letter_tables {
                let mut sign = 1i8;
                let mapped: Vec<u16> = word
                    .iter()
                    .map(|&v| {
                        let (s, image) = table[v as usize];
                        sign *= s;
                        image
                    })
                    .collect();
                let idx = balanced
                    .binary_search_by(|probe| probe.as_ref().cmp(mapped.as_slice()))
                    .expect("the group preserves the balanced block");
                if idx < best_idx {
                    best_idx = idx;
                    best_sign = sign;
                    killed = false;
                } else if idx == best_idx && sign != best_sign {
                    killed = true;
                }
            }
            if killed {
                (best_idx as u32, 0)
            } else {
                (best_idx as u32, best_sign)
            }
        })
        .collect();
    let rep_cols: Vec<u32> = fold
        .iter()
        .enumerate()
        .filter(|&(t, &(rep, s))| s == 1 && rep as usize == t)
        .map(|(t, _)| t as u32)
        .collect();

    let mut echelon = Echelon::new();
    let mut seen: BTreeSet<Vec<(usize, i64)>> = BTreeSet::new();
    for g in &generators {
        let g_weight = g.weight(d.n);
        let source: &[Box<[u16]>] = if g_weight == zero_wt {
            &balanced
        } else {
            match blocks.get(&negated(&g_weight)) {
                Some(b) => b,
                None => continue,
            }
        };
        let table: Vec<Vec<(i64, u16)>> = basis
            .iter()
            .map(|v| {
                act_on_vector(g, *v)
                    .into_iter()
                    .map(|(image, c)| (c, index_of[&image] as u16))
                    .collect()
            })
            .collect();
        let g_parity = g.parity();
        let rows: Vec<Vec<(usize, i64)>> = source
            .par_iter()
            .map(|word| {
                let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
                let mut prefix_parity = 0u8;
                for k in 0..word.len() {
                    let koszul: i64 = if g_parity == 1 && prefix_parity == 1 {
                        -1
                    } else {
                        1
                    };
                    for &(c, image) in &table[word[k] as usize] {
                        let mut v = word.to_vec();
                        v[k] = image;
                        let col = balanced
                            .binary_search_by(|probe| probe.as_ref().cmp(v.as_slice()))
                            .expect("action preserves weight");
                        let (rep, fs) = fold[col];
                        if fs == 0 {
                            continue;
                        }
                        let folded_col = rep_cols
                            .binary_search(&rep)
                            .expect("orbit representative is a live column");
                        *acc.entry(folded_col).or_insert(0) += koszul * c * fs as i64;
                    }
                    prefix_parity ^= var_parity[word[k] as usize];
                }
                acc.into_iter().filter(|&(_, v)| v != 0).collect()
            })
            .collect();
        for row in rows {
            if let Some(norm) = normalized_row(row) {
                if seen.insert(norm.clone()) {
                    echelon.insert_int(
                        norm.into_iter().map(|(c, v)| (c, BigInt::from(v))).collect(),
                    );
                }
            }
        }
    }
    rep_cols.len() - echelon.rank()
}
