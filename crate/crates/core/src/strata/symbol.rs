use std::cmp::Ordering;
use std::fmt;

use crate::algebra::{Coeff, Rat, U_WEIGHTS};

const BITS: u32 = 5;
const MASK: u32 = (1 << BITS) - 1;

/// σ-derivative symbol σ_I for a multiset I over {1..6}, stored as index counts.
///
/// The derived order is the solving order: fewer indices first; for equal
/// counts the ascending index tuples compare from their last entry, so a
/// symbol with more high indices is larger and is eliminated first.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Sym {
    // count of index i sits at bits 5(i-1)..5i, so index 6 is most significant
    packed: u32,
    n: u8,
}

impl Sym {
    /// σ itself (no derivatives).
    pub const SIGMA: Sym = Sym { packed: 0, n: 0 };

    pub fn from_indices(idx: &[u8]) -> Sym {
        let mut s = Sym::SIGMA;
        for &i in idx {
            s = s.with(i);
        }
        s
    }

    pub fn from_counts(c: [u8; 6]) -> Sym {
        let mut s = Sym::SIGMA;
        for (k, &m) in c.iter().enumerate() {
            for _ in 0..m {
                s = s.with(k as u8 + 1);
            }
        }
        s
    }

    /// Appends one index in 1..=6.
    pub fn with(self, i: u8) -> Sym {
        assert!((1..=6).contains(&i), "σ index out of range: {i}");
        let sh = BITS * (i as u32 - 1);
        assert!((self.packed >> sh) & MASK < MASK, "index multiplicity overflow");
        Sym { packed: self.packed + (1 << sh), n: self.n + 1 }
    }

    /// Multiset union.
    pub fn join(self, o: Sym) -> Sym {
        let mut s = self;
        for i in 1..=6u8 {
            for _ in 0..o.count(i) {
                s = s.with(i);
            }
        }
        s
    }

    pub fn count(self, i: u8) -> u8 {
        ((self.packed >> (BITS * (i as u32 - 1))) & MASK) as u8
    }

    pub fn counts(self) -> [u8; 6] {
        std::array::from_fn(|k| self.count(k as u8 + 1))
    }

    pub fn n_indices(self) -> usize {
        self.n as usize
    }

    /// Ascending index list.
    pub fn indices(self) -> Vec<u8> {
        let mut v = Vec::with_capacity(self.n as usize);
        for i in 1..=6u8 {
            for _ in 0..self.count(i) {
                v.push(i);
            }
        }
        v
    }

    /// Sum of the u-weights of the indices.
    pub fn index_weight(self) -> i32 {
        (1..=6u8).map(|i| self.count(i) as i32 * U_WEIGHTS[i as usize - 1]).sum()
    }

    /// Sato weight `15 - Σ w(i)`.
    pub fn weight(self) -> i32 {
        15 - self.index_weight()
    }

    /// Removes one copy of index i, if present.
    pub fn without(self, i: u8) -> Option<Sym> {
        if self.count(i) == 0 {
            return None;
        }
        Some(Sym { packed: self.packed - (1 << (BITS * (i as u32 - 1))), n: self.n - 1 })
    }

    /// Parity of σ_I under `u ↦ -u` for odd σ: `(-1)^{|I|+1}`.
    pub fn parity_sign(self) -> i64 {
        if self.n % 2 == 0 {
            -1
        } else {
            1
        }
    }

    /// Multiplicative factor of σ_I under the cyclic action on u (index i picks up the inverse factor of u_i).
    pub fn cyclic_factor(self) -> Coeff {
        // σ(Φu) = ε σ(u); differentiating, σ_I at Φu times Π φ_i = ε σ_I(u)
        let f = crate::curve::cyclic_factors();
        let mut c = Coeff::one();
        for i in 1..=6u8 {
            for _ in 0..self.count(i) {
                c = &c * &f[i as usize - 1];
            }
        }
        c
    }

    /// Parses `sigma236`, `s236`, `[2,3,6]` or `σ236`; `sigma`/`[]` is σ itself.
    pub fn parse(text: &str) -> Option<Sym> {
        let t = text.trim();
        let body = if let Some(r) = t.strip_prefix('[') {
            r.strip_suffix(']')?.split(',').map(|x| x.trim()).filter(|x| !x.is_empty()).collect::<String>()
        } else {
            t.trim_start_matches("sigma").trim_start_matches('σ').trim_start_matches('s').trim_start_matches('_').to_string()
        };
        let mut s = Sym::SIGMA;
        for ch in body.chars() {
            let d = ch.to_digit(10)? as u8;
            if !(1..=6).contains(&d) {
                return None;
            }
            s = s.with(d);
        }
        Some(s)
    }

    /// Bracketed index list, the serialization form.
    pub fn to_list(self) -> String {
        let v: Vec<String> = self.indices().iter().map(|i| i.to_string()).collect();
        format!("[{}]", v.join(","))
    }
}

impl PartialOrd for Sym {
    fn partial_cmp(&self, o: &Sym) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Sym {
    fn cmp(&self, o: &Sym) -> Ordering {
        self.n.cmp(&o.n).then(self.packed.cmp(&o.packed))
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sigma")?;
        for i in self.indices() {
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Linear form `Σ c_S σ_S` with terms sorted by descending symbol, so the
/// first term is the leading one.
#[derive(Clone, PartialEq, Eq, Default, Hash)]
pub struct LinForm {
    terms: Vec<(Sym, Coeff)>,
}

impl LinForm {
    pub fn zero() -> LinForm {
        LinForm::default()
    }

    pub fn sym(s: Sym) -> LinForm {
        LinForm { terms: vec![(s, Coeff::one())] }
    }

    pub fn term(s: Sym, c: Coeff) -> LinForm {
        if c.is_zero() {
            return LinForm::zero();
        }
        LinForm { terms: vec![(s, c)] }
    }

    pub fn from_terms<I: IntoIterator<Item = (Sym, Coeff)>>(it: I) -> LinForm {
        let mut v: Vec<(Sym, Coeff)> = it.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        v.sort_by(|a, b| b.0.cmp(&a.0));
        let mut out: Vec<(Sym, Coeff)> = Vec::with_capacity(v.len());
        for (s, c) in v {
            match out.last_mut() {
                Some(l) if l.0 == s => l.1 = &l.1 + &c,
                _ => out.push((s, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        LinForm { terms: out }
    }

    pub fn terms(&self) -> &[(Sym, Coeff)] {
        &self.terms
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

    pub fn leading(&self) -> Option<&(Sym, Coeff)> {
        self.terms.first()
    }

    pub fn coeff(&self, s: Sym) -> Coeff {
        match self.terms.binary_search_by(|(x, _)| s.cmp(x)) {
            Ok(k) => self.terms[k].1.clone(),
            Err(_) => Coeff::zero(),
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = Sym> + '_ {
        self.terms.iter().map(|(s, _)| *s)
    }

    /// `self + c·o`.
    pub fn add_scaled(&self, o: &LinForm, c: &Coeff) -> LinForm {
        if c.is_zero() || o.is_zero() {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.terms.len() + o.terms.len());
        let (a, b) = (&self.terms, &o.terms);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let ord = if i == a.len() {
                Ordering::Less
            } else if j == b.len() {
                Ordering::Greater
            } else {
                a[i].0.cmp(&b[j].0)
            };
            match ord {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push((b[j].0, &b[j].1 * c));
                    j += 1;
                }
                Ordering::Equal => {
                    let v = &a[i].1 + &(&b[j].1 * c);
                    if !v.is_zero() {
                        out.push((a[i].0, v));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        LinForm { terms: out }
    }

    pub fn add(&self, o: &LinForm) -> LinForm {
        self.add_scaled(o, &Coeff::one())
    }

    pub fn sub(&self, o: &LinForm) -> LinForm {
        self.add_scaled(o, &Coeff::int(-1))
    }

    pub fn scale(&self, c: &Coeff) -> LinForm {
        if c.is_zero() {
            return LinForm::zero();
        }
        LinForm::from_terms(self.terms.iter().map(|(s, x)| (*s, x * c)))
    }

    pub fn scale_rat(&self, r: &Rat) -> LinForm {
        self.scale(&Coeff::from_rat(r.clone()))
    }

    pub fn map_coeffs(&self, f: impl Fn(Sym, &Coeff) -> Coeff) -> LinForm {
        LinForm::from_terms(self.terms.iter().map(|(s, c)| (*s, f(*s, c))))
    }

    /// Weight of the relation `self = 0`: common value of `weight(c) + weight(σ_S)`.
    pub fn weight(&self) -> Result<Option<i32>, (Sym, Sym)> {
        let mut w: Option<(i32, Sym)> = None;
        for (s, c) in &self.terms {
            let cw = c.weight().map_err(|_| (*s, *s))?.unwrap_or(0);
            let tw = cw + s.weight();
            match w {
                None => w = Some((tw, *s)),
                Some((x, s0)) if x != tw => return Err((s0, *s)),
                _ => {}
            }
        }
        Ok(w.map(|x| x.0))
    }

    /// Appends `base` to every symbol (index shift).
    pub fn shift(&self, base: Sym) -> LinForm {
        LinForm::from_terms(self.terms.iter().map(|(s, c)| (s.join(base), c.clone())))
    }

    /// Splits into the part on symbols of exactly weight w and the rest.
    pub fn split_weight(&self, w: i32) -> (LinForm, LinForm) {
        let (a, b): (Vec<_>, Vec<_>) = self.terms.iter().cloned().partition(|(s, _)| s.weight() == w);
        (LinForm { terms: a }, LinForm { terms: b })
    }
}

impl fmt::Display for LinForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (s, c)) in self.terms.iter().enumerate() {
            let single = c.len() == 1;
            if let (true, Some(r)) = (single, c.as_rat()) {
                let neg = r.is_negative();
                let mag = r.abs();
                if k > 0 {
                    write!(f, " {} ", if neg { "-" } else { "+" })?;
                } else if neg {
                    write!(f, "-")?;
                }
                if mag.is_one() {
                    write!(f, "{s}")?;
                } else {
                    write!(f, "{mag}*{s}")?;
                }
                continue;
            }
            if single {
                let (m, r) = c.as_single_term().unwrap();
                let neg = r.is_negative();
                let mag = r.abs();
                if k > 0 {
                    write!(f, " {} ", if neg { "-" } else { "+" })?;
                } else if neg {
                    write!(f, "-")?;
                }
                if mag.is_one() {
                    write!(f, "{m}*{s}")?;
                } else {
                    write!(f, "{mag}*{m}*{s}")?;
                }
                continue;
            }
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})*{s}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for LinForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_and_indices() {
        let s = Sym::from_indices(&[6, 2, 3]);
        assert_eq!(s.indices(), vec![2, 3, 6]);
        assert_eq!(s.weight(), 1);
        assert_eq!(Sym::SIGMA.weight(), 15);
        assert_eq!(s.to_list(), "[2,3,6]");
        assert_eq!(Sym::parse("sigma236"), Some(s));
        assert_eq!(Sym::parse("[2, 3, 6]"), Some(s));
    }

    #[test]
    fn solving_order() {
        let p = |t: &str| Sym::parse(t).unwrap();
        assert!(p("s11") > p("s6"));
        assert!(p("s66") > p("s56"));
        assert!(p("s16") > p("s55"));
        assert!(p("s1144") > p("s1224"));
        assert!(p("s666") > p("s156"));
        assert!(p("s2566") > p("s3466"));
    }

    #[test]
    fn linform_arithmetic() {
        let a = LinForm::from_terms([(Sym::parse("s6").unwrap(), Coeff::int(2)), (Sym::parse("s66").unwrap(), Coeff::one())]);
        assert_eq!(a.leading().unwrap().0, Sym::parse("s66").unwrap());
        let z = a.sub(&a);
        assert!(z.is_zero());
        assert_eq!(a.to_string(), "sigma66 + 2*sigma6");
    }
}
