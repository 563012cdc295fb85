//! Families of promise problems and the machines that solve them.

use std::sync::Arc;

use serde::Serialize;

use crate::machine::{
    CounterOp, Guard, MachineSpec, Mode, Move, StackOp, StateTable, TapeSymbol, TransitionRule,
};
use crate::oracle::strings_up_to;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Positive,
    Negative,
    Outside,
}

impl Membership {
    pub fn is_promised(self) -> bool {
        self != Membership::Outside
    }
}

/// An indexed family `{(L_n⁺, L_n⁻)}` with disjoint halves.
pub trait PromiseFamily {
    fn name(&self) -> String;
    fn alphabet(&self) -> Vec<char>;
    fn classify(&self, n: usize, x: &str) -> Membership;

    /// All promised strings of index `n` and length at most `max_len`, in
    /// length-lexicographic order.
    fn promised(&self, n: usize, max_len: usize) -> Vec<String> {
        strings_up_to(&self.alphabet(), max_len)
            .into_iter()
            .filter(|x| self.classify(n, x).is_promised())
            .collect()
    }

    fn positive(&self, n: usize, max_len: usize) -> Vec<String> {
        self.promised(n, max_len)
            .into_iter()
            .filter(|x| self.classify(n, x) == Membership::Positive)
            .collect()
    }
}

/// Size parameter: a total map from strings to naturals.
#[derive(Clone)]
pub struct SizeParameter(Arc<dyn Fn(&str) -> usize + Send + Sync>);

impl SizeParameter {
    pub fn new(f: impl Fn(&str) -> usize + Send + Sync + 'static) -> Self {
        SizeParameter(Arc::new(f))
    }

    /// `m(x) = |x|`.
    pub fn length() -> Self {
        Self::new(|x| x.chars().count())
    }

    pub fn eval(&self, x: &str) -> usize {
        (self.0)(x)
    }
}

impl std::fmt::Debug for SizeParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SizeParameter(..)")
    }
}

/// `L_n⁺ = {w#w : w ∈ {0,1}^{m(n)}}`, with `L_n⁻` the other strings over
/// `{0,1,#}` of length `2m(n)+1`.
#[derive(Clone)]
pub struct LeqFamily {
    m: Arc<dyn Fn(usize) -> usize + Send + Sync>,
}

pub fn leq_family(m_fn: impl Fn(usize) -> usize + Send + Sync + 'static) -> LeqFamily {
    LeqFamily { m: Arc::new(m_fn) }
}

/// The desk-scale family with `m(n) = n`.
pub fn leq_scaled() -> LeqFamily {
    leq_family(|n| n)
}

impl LeqFamily {
    pub fn m(&self, n: usize) -> usize {
        (self.m)(n)
    }

    pub fn is_positive(&self, n: usize, x: &str) -> bool {
        let m = self.m(n);
        let chars: Vec<char> = x.chars().collect();
        chars.len() == 2 * m + 1
            && chars[m] == '#'
            && chars[..m].iter().all(|&c| c == '0' || c == '1')
            && chars[..m] == chars[m + 1..]
    }
}

impl PromiseFamily for LeqFamily {
    fn name(&self) -> String {
        "leq".into()
    }

    fn alphabet(&self) -> Vec<char> {
        vec!['0', '1', '#']
    }

    fn classify(&self, n: usize, x: &str) -> Membership {
        if x.chars().count() != 2 * self.m(n) + 1
            || !x.chars().all(|c| matches!(c, '0' | '1' | '#'))
        {
            Membership::Outside
        } else if self.is_positive(n, x) {
            Membership::Positive
        } else {
            Membership::Negative
        }
    }

    fn promised(&self, n: usize, max_len: usize) -> Vec<String> {
        let len = 2 * self.m(n) + 1;
        if len > max_len {
            return Vec::new();
        }
        strings_of_length(&self.alphabet(), len)
    }
}

/// Every string over `alphabet` of exactly length `len`, lexicographic.
pub fn strings_of_length(alphabet: &[char], len: usize) -> Vec<String> {
    let mut layer = vec![String::new()];
    for _ in 0..len {
        layer = layer
            .iter()
            .flat_map(|s| {
                alphabet.iter().map(move |&c| {
                    let mut t = s.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
    }
    layer
}

/// Swaps the positive and negative halves of a family.
pub struct Complement<F>(pub F);

impl<F: PromiseFamily> PromiseFamily for Complement<F> {
    fn name(&self) -> String {
        format!("co-{}", self.0.name())
    }

    fn alphabet(&self) -> Vec<char> {
        self.0.alphabet()
    }

    fn classify(&self, n: usize, x: &str) -> Membership {
        match self.0.classify(n, x) {
            Membership::Positive => Membership::Negative,
            Membership::Negative => Membership::Positive,
            Membership::Outside => Membership::Outside,
        }
    }

    fn promised(&self, n: usize, max_len: usize) -> Vec<String> {
        self.0.promised(n, max_len)
    }
}

/// The family with nothing promised.
pub struct EmptyFamily(pub Vec<char>);

impl PromiseFamily for EmptyFamily {
    fn name(&self) -> String {
        "empty".into()
    }

    fn alphabet(&self) -> Vec<char> {
        self.0.clone()
    }

    fn classify(&self, _: usize, _: &str) -> Membership {
        Membership::Outside
    }

    fn promised(&self, _: usize, _: usize) -> Vec<String> {
        Vec::new()
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FamilyError {
    #[error("separator '{0}' occurs in the family alphabet")]
    SeparatorInAlphabet(char),
    #[error("unknown family \"{0}\"")]
    Unknown(String),
}

/// The size-incorporated family `K_n⁺ = {1ⁿ#x : x ∈ P_n⁺}`,
/// `K_n⁻ = {1ⁿ#x : x ∉ P_n⁺} ∪ S_n`, with `#` played by `separator`.
pub struct SizeIncorporated<P> {
    inner: P,
    sep: char,
}

pub fn incorporate_size<P: PromiseFamily>(
    inner: P,
    separator: char,
) -> Result<SizeIncorporated<P>, FamilyError> {
    if inner.alphabet().contains(&separator) {
        return Err(FamilyError::SeparatorInAlphabet(separator));
    }
    Ok(SizeIncorporated {
        inner,
        sep: separator,
    })
}

impl<P: PromiseFamily> SizeIncorporated<P> {
    pub fn separator(&self) -> char {
        self.sep
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    /// Splits `1ⁿ#x` into `(n, x)` when the prefix is all ones and `x` has no separator.
    fn split<'w>(&self, w: &'w str) -> Option<(usize, &'w str)> {
        let (z, x) = w.split_once(self.sep)?;
        if x.contains(self.sep) || !z.chars().all(|c| c == '1') {
            return None;
        }
        Some((z.chars().count(), x))
    }

    /// Membership in `K = ⋃ K_n⁺`.
    pub fn contains(&self, w: &str) -> bool {
        self.split(w)
            .is_some_and(|(n, x)| self.inner.classify(n, x) == Membership::Positive)
    }

    /// `m(1ⁿ#x) = n` for promised `x`, and `|w|` otherwise.
    pub fn size(&self, w: &str) -> usize {
        match self.split(w) {
            Some((n, x)) if self.inner.classify(n, x).is_promised() => n,
            _ => w.chars().count(),
        }
    }

    pub fn size_parameter(self: &Arc<Self>) -> SizeParameter
    where
        P: Send + Sync + 'static,
    {
        let me = Arc::clone(self);
        SizeParameter::new(move |w| me.size(w))
    }

    fn in_s(&self, n: usize, w: &str) -> bool {
        let sigma = self.inner.alphabet();
        let seps = w.chars().filter(|&c| c == self.sep).count();
        let len = w.chars().count();
        match seps {
            0 => len == n && w.chars().all(|c| sigma.contains(&c)),
            1 => {
                let (z, x) = w.split_once(self.sep).unwrap();
                z.chars().count() == n
                    && z.chars().all(|c| sigma.contains(&c))
                    && !z.chars().all(|c| c == '1')
                    && x.chars().all(|c| sigma.contains(&c))
            }
            _ => len == n,
        }
    }
}

impl<P: PromiseFamily> PromiseFamily for SizeIncorporated<P> {
    fn name(&self) -> String {
        format!("size-incorporated-{}", self.inner.name())
    }

    fn alphabet(&self) -> Vec<char> {
        let mut a = self.inner.alphabet();
        if !a.contains(&'1') {
            a.push('1');
        }
        a.push(self.sep);
        a
    }

    fn classify(&self, n: usize, w: &str) -> Membership {
        let sigma = self.inner.alphabet();
        if let Some(x) = w
            .strip_prefix(&"1".repeat(n))
            .and_then(|r| r.strip_prefix(self.sep))
        {
            if x.chars().all(|c| sigma.contains(&c)) {
                return if self.inner.classify(n, x) == Membership::Positive {
                    Membership::Positive
                } else {
                    Membership::Negative
                };
            }
        }
        if self.in_s(n, w) {
            Membership::Negative
        } else {
            Membership::Outside
        }
    }
}

/// `P_n⁺ = L ∩ Σ_(n)` and `P_n⁻ = L̄ ∩ Σ_(n)` with `Σ_(n) = {x : m(x) = n}`.
#[derive(Clone)]
pub struct InducedFamily {
    language: Arc<dyn Fn(&str) -> bool + Send + Sync>,
    size: SizeParameter,
    alphabet: Vec<char>,
}

pub fn induced_family(
    language: impl Fn(&str) -> bool + Send + Sync + 'static,
    size: SizeParameter,
    alphabet: Vec<char>,
) -> InducedFamily {
    InducedFamily {
        language: Arc::new(language),
        size,
        alphabet,
    }
}

impl PromiseFamily for InducedFamily {
    fn name(&self) -> String {
        "induced".into()
    }

    fn alphabet(&self) -> Vec<char> {
        self.alphabet.clone()
    }

    fn classify(&self, n: usize, x: &str) -> Membership {
        if self.size.eval(x) != n {
            Membership::Outside
        } else if (self.language)(x) {
            Membership::Positive
        } else {
            Membership::Negative
        }
    }
}

/// A polynomial with natural coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Polynomial(pub Vec<u64>);

impl Polynomial {
    pub fn eval(&self, n: u64) -> u64 {
        self.0
            .iter()
            .rev()
            .fold(0u64, |acc, &c| acc.saturating_mul(n).saturating_add(c))
    }
}

/// True iff every promised string of index `n ≤ n_max` (among those of length
/// at most `max_len`) has length at most `p(n)`.
pub fn check_ceiling(
    family: &dyn PromiseFamily,
    p: &Polynomial,
    n_max: usize,
    max_len: usize,
) -> bool {
    (0..=n_max).all(|n| {
        family
            .promised(n, max_len)
            .iter()
            .all(|x| x.chars().count() as u64 <= p.eval(n as u64))
    })
}

/// Looks up a family by its CLI name.
pub fn by_name(name: &str) -> Result<Box<dyn PromiseFamily>, FamilyError> {
    match name {
        "leq" => Ok(Box::new(leq_scaled())),
        "neq" | "co-leq" => Ok(Box::new(Complement(leq_scaled()))),
        other => Err(FamilyError::Unknown(other.to_string())),
    }
}

struct Builder {
    table: StateTable,
    rules: Vec<TransitionRule>,
}

impl Builder {
    fn state(&mut self, name: &str) -> u32 {
        self.table.fresh(name)
    }

    fn rule(&mut self, from: u32, read: char, guard: Guard, to: u32, mv: Move, op: CounterOp) {
        self.rules.push(TransitionRule {
            from,
            read: TapeSymbol::from_char(read),
            guards: vec![guard],
            stack_top: None,
            to,
            movement: mv,
            counter_ops: vec![op],
            stack_op: StackOp::None,
        });
    }
}

/// The deterministic one-counter machine that checks `w#w` position by
/// position, keeping the current position in its counter. It works for every
/// `m` at once, so `n` only names the instance.
pub fn build_leq_2dcta(n: usize) -> MachineSpec {
    let _ = n;
    use CounterOp::{Dec, Inc, Noop};
    use Guard::{Any, Nonzero, Zero};
    use Move::{Left, Right, Stay};
    let mut b = Builder {
        table: StateTable::default(),
        rules: Vec::new(),
    };
    let push = b.state("push");
    let seek = b.state("seek");
    let back: Vec<u32> = ["back0", "back1", "backH"]
        .iter()
        .map(|s| b.state(s))
        .collect();
    let find: Vec<u32> = ["find0", "find1", "findH"]
        .iter()
        .map(|s| b.state(s))
        .collect();
    let checklen = b.state("checklen");
    let skip: Vec<u32> = ["skip0", "skip1"].iter().map(|s| b.state(s)).collect();
    let ret = b.state("ret");
    let home = b.state("home");
    let acc = b.state("acc");
    let rej = b.state("rej");
    let symbols = ['0', '1', '#'];

    b.rule(push, '>', Any, seek, Stay, Inc);

    b.rule(seek, '>', Nonzero, seek, Right, Dec);
    for (i, &a) in symbols.iter().enumerate() {
        b.rule(seek, a, Nonzero, seek, Right, Dec);
        b.rule(seek, a, Zero, back[i], Stay, Noop);
    }
    b.rule(seek, '<', Any, rej, Stay, Noop);

    for i in 0..3 {
        for &a in &symbols {
            b.rule(back[i], a, Any, back[i], Left, Inc);
        }
        b.rule(back[i], '>', Any, find[i], Right, Noop);
        b.rule(find[i], '0', Any, find[i], Right, Noop);
        b.rule(find[i], '1', Any, find[i], Right, Noop);
        let target = if i == 2 { checklen } else { skip[i] };
        b.rule(find[i], '#', Any, target, Stay, Noop);
        b.rule(find[i], '<', Any, rej, Stay, Noop);
    }

    for &a in &symbols {
        b.rule(checklen, a, Nonzero, checklen, Right, Dec);
        b.rule(checklen, a, Zero, rej, Stay, Noop);
    }
    b.rule(checklen, '<', Zero, acc, Stay, Noop);
    b.rule(checklen, '<', Nonzero, rej, Stay, Noop);

    for (i, &a) in ['0', '1'].iter().enumerate() {
        for &c in &symbols {
            b.rule(skip[i], c, Nonzero, skip[i], Right, Dec);
            let to = if c == a { ret } else { rej };
            b.rule(skip[i], c, Zero, to, Stay, Noop);
        }
        b.rule(skip[i], '<', Any, rej, Stay, Noop);
    }

    b.rule(ret, '0', Any, ret, Left, Inc);
    b.rule(ret, '1', Any, ret, Left, Inc);
    b.rule(ret, '#', Any, home, Left, Noop);
    b.rule(home, '0', Any, home, Left, Noop);
    b.rule(home, '1', Any, home, Left, Noop);
    b.rule(home, '>', Any, push, Stay, Noop);

    let spec = MachineSpec {
        name: "leq_2dcta".into(),
        mode: Mode::Deterministic,
        states: b.table.into_names(),
        alphabet: symbols.to_vec(),
        counters: 1,
        stack: None,
        initial: push,
        accepting: vec![acc],
        rejecting: vec![rej],
        transitions: b.rules,
        provenance: None,
    };
    debug_assert!(spec.validate().is_ok(), "{:?}", spec.validate());
    spec
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leq_membership() {
        let f = leq_scaled();
        assert_eq!(f.classify(1, "0#0"), Membership::Positive);
        assert_eq!(f.classify(1, "0#1"), Membership::Negative);
        assert_eq!(f.classify(1, "0#"), Membership::Outside);
        assert_eq!(f.positive(2, 5).len(), 4);
    }

    #[test]
    fn leq_machine_is_valid_and_deterministic() {
        let m = build_leq_2dcta(2);
        m.validate().unwrap();
        assert_eq!(m.states.len(), 15);
        assert_eq!(m.mode, Mode::Deterministic);
    }

    #[test]
    fn separator_clash() {
        assert_eq!(
            incorporate_size(leq_scaled(), '#').err(),
            Some(FamilyError::SeparatorInAlphabet('#'))
        );
    }

    #[test]
    fn size_incorporation_clauses() {
        let k = incorporate_size(leq_scaled(), '$').unwrap();
        assert!(k.contains("11$01#01"));
        assert_eq!(k.classify(2, "11$01#01"), Membership::Positive);
        assert_eq!(k.classify(2, "11$01#00"), Membership::Negative);
        assert_eq!(k.classify(2, "01$0"), Membership::Negative);
        assert_eq!(k.classify(2, "01"), Membership::Negative);
        assert_eq!(k.classify(2, "$$"), Membership::Negative);
        assert_eq!(k.size("11$01#01"), 2);
        assert_eq!(k.size("0$"), 2);
    }

    #[test]
    fn ceilings() {
        let f = leq_scaled();
        assert!(check_ceiling(&f, &Polynomial(vec![1, 2]), 3, 7));
        assert!(!check_ceiling(&f, &Polynomial(vec![0, 1]), 3, 7));
        assert!(check_ceiling(
            &EmptyFamily(vec!['a']),
            &Polynomial(vec![0]),
            3,
            5
        ));
    }
}
