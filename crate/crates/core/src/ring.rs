//! Graded cohomology rings of the targets, with exact rational coefficients.
//!
//! A target's ring is given by an ordered homogeneous basis (index 0 is the
//! fundamental class, the last class is the point class) and a dense table of
//! basis products. Two constructors exist: [`build_blowup_point_ring`] for
//! projective space blown up at points, and [`parse_ring_file`] for rings
//! declared in the line-oriented ring-file format.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use sha2::{Digest, Sha256};

use crate::error::{GwError, Result};
use crate::homology::CurveClass;
use crate::wdvv::Insertions;

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// What a basis class is, geometrically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassKind {
    /// Pull-back of `H^k` from the ambient projective space (`k = 0` is the
    /// fundamental class, `k = dim` the point class).
    Ambient(usize),
    /// `E_point^power` for a blown-up point (points are numbered from 1).
    Exceptional { point: usize, power: usize },
    /// Any other class of a loaded ring (supported on the exceptional locus).
    Custom,
}

impl ClassKind {
    pub fn is_ambient(self) -> bool {
        matches!(self, ClassKind::Ambient(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisClass {
    pub index: usize,
    pub codim: usize,
    pub kind: ClassKind,
    pub name: String,
}

/// Sparse rational combination of basis classes; zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CohClass {
    coeffs: BTreeMap<usize, Rational>,
}

impl CohClass {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(index: usize) -> Self {
        let mut c = Self::zero();
        c.add_term(index, Rational::one());
        c
    }

    pub fn from_terms<I: IntoIterator<Item = (usize, Rational)>>(terms: I) -> Self {
        let mut c = Self::zero();
        for (i, q) in terms {
            c.add_term(i, q);
        }
        c
    }

    pub fn add_term(&mut self, index: usize, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(index).or_insert_with(Rational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.coeffs.remove(&index);
        }
    }

    pub fn coeff(&self, index: usize) -> Rational {
        self.coeffs.get(&index).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &Rational)> {
        self.coeffs.iter().map(|(&i, q)| (i, q))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scaled(&self, factor: &Rational) -> Self {
        Self::from_terms(self.terms().map(|(i, q)| (i, q * factor)))
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, q) in other.terms() {
            out.add_term(i, q.clone());
        }
        out
    }

    /// The part of `self` living in codimension `codim`.
    pub fn homogeneous_part(&self, target: &TargetData, codim: usize) -> Self {
        Self::from_terms(
            self.terms()
                .filter(|(i, _)| target.codim(*i) == codim)
                .map(|(i, q)| (i, q.clone())),
        )
    }

    /// `Some(codim)` when every stored term has the same codimension.
    pub fn homogeneous_codim(&self, target: &TargetData) -> Option<usize> {
        let mut codims = self.terms().map(|(i, _)| target.codim(i));
        let first = codims.next()?;
        codims.all(|c| c == first).then_some(first)
    }
}

/// How invariants of a target are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Projective,
    PointBlowup,
    CurveSecant,
    AbelianSurface,
}

impl Strategy {
    pub fn tag(self) -> &'static str {
        match self {
            Strategy::Projective => "projective",
            Strategy::PointBlowup => "point-blowup",
            Strategy::CurveSecant => "curve-secant",
            Strategy::AbelianSurface => "abelian-surface",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "projective" => Strategy::Projective,
            "point-blowup" => Strategy::PointBlowup,
            "curve-secant" => Strategy::CurveSecant,
            "abelian-surface" => Strategy::AbelianSurface,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Seed {
    pub beta: CurveClass,
    pub classes: Insertions,
    pub value: Rational,
}

/// Everything the engine needs to know about one target variety.
#[derive(Clone, Debug)]
pub struct TargetData {
    pub name: String,
    pub dim: usize,
    /// Number of blown-up points (0 for projective space and loaded rings).
    pub points: usize,
    pub basis: Vec<BasisClass>,
    products: Vec<CohClass>,
    pub pairing: Vec<Vec<Rational>>,
    pub pairing_inverse: Vec<Vec<Rational>>,
    dual: Vec<Vec<(usize, Rational)>>,
    pub canonical: CohClass,
    pub curve_basis: Vec<String>,
    /// `D · β'` for every basis class `D` (rows of non-divisors are zero)
    /// against every curve-basis generator `β'`.
    pub divisor_pairing: Vec<Vec<i64>>,
    pub strategy: Option<Strategy>,
    pub seeds: Vec<Seed>,
    /// For loaded rings: `aH' + bE'` with `a > 0` is a candidate class only
    /// when `b >= -secant_bound * a`.
    pub secant_bound: i64,
    /// Basis indices of the divisor classes.
    pub divisors: Vec<usize>,
    id: u64,
}

impl TargetData {
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Hex digest identifying the ring, used by the cache header.
    pub fn basis_hash(&self) -> String {
        format!("{:016x}", self.id)
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn codim(&self, index: usize) -> usize {
        self.basis[index].codim
    }

    pub fn kind(&self, index: usize) -> ClassKind {
        self.basis[index].kind
    }

    pub fn one_index(&self) -> usize {
        0
    }

    pub fn pt_index(&self) -> usize {
        self.basis.len() - 1
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.basis.iter().position(|b| b.name == name)
    }

    pub fn ambient_index(&self, power: usize) -> Option<usize> {
        self.basis
            .iter()
            .position(|b| b.kind == ClassKind::Ambient(power))
    }

    pub fn exceptional_index(&self, point: usize, power: usize) -> Option<usize> {
        self.basis
            .iter()
            .position(|b| b.kind == ClassKind::Exceptional { point, power })
    }

    /// Basis classes `j` with `g^{ij} != 0`, together with `g^{ij}`.
    pub fn dual(&self, index: usize) -> &[(usize, Rational)] {
        &self.dual[index]
    }

    pub fn product_basis(&self, a: usize, b: usize) -> &CohClass {
        &self.products[a * self.basis.len() + b]
    }

    pub fn product(&self, a: &CohClass, b: &CohClass) -> CohClass {
        let mut out = CohClass::zero();
        for (i, p) in a.terms() {
            for (j, q) in b.terms() {
                for (k, c) in self.product_basis(i, j).terms() {
                    out.add_term(k, p * q * c);
                }
            }
        }
        out
    }

    /// Degree of `a · b · c`: the coefficient of the point class.
    pub fn triple_product(&self, a: &CohClass, b: &CohClass, c: &CohClass) -> Rational {
        self.product(&self.product(a, b), c).coeff(self.pt_index())
    }

    pub fn triple_product_basis(&self, a: usize, b: usize, c: usize) -> Rational {
        if self.codim(a) + self.codim(b) + self.codim(c) != self.dim {
            return Rational::zero();
        }
        let pt = self.pt_index();
        let mut out = Rational::zero();
        for (k, q) in self.product_basis(a, b).terms() {
            out += q * self.product_basis(k, c).coeff(pt);
        }
        out
    }

    pub fn class_name(&self, index: usize) -> &str {
        &self.basis[index].name
    }

    /// Resolve a class token. Accepts basis names plus the grammar
    /// `one`, `pt`, `H`, `H<k>`, `E<i>.<k>` (and `E<i>` for `E<i>.1`).
    pub fn resolve_class(&self, token: &str) -> Result<usize> {
        if let Some(i) = self.index_of(token) {
            return Ok(i);
        }
        let unknown = || GwError::UnknownClass(token.to_string());
        if let Some(rest) = token.strip_prefix('H') {
            let k: usize = rest.parse().map_err(|_| unknown())?;
            return self.ambient_index(k).ok_or_else(unknown);
        }
        if let Some(rest) = token.strip_prefix('E') {
            let (i, k) = match rest.split_once('.') {
                Some((i, k)) => (i, k),
                None => (rest, "1"),
            };
            let i: usize = i.parse().map_err(|_| unknown())?;
            let k: usize = k.parse().map_err(|_| unknown())?;
            if k == self.dim && self.exceptional_index(i, 1).is_some() {
                // E_i^r = (-1)^{r-1} pt is not a basis class of its own.
                return Err(unknown());
            }
            return self.exceptional_index(i, k).ok_or_else(unknown);
        }
        Err(unknown())
    }

    /// Parse a class multiset such as `pt^6,H2^1,E1.2^3`; a missing `^m` means 1.
    pub fn parse_classes(&self, text: &str) -> Result<Insertions> {
        let mut out = Insertions::new();
        for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (name, mult) = match tok.split_once('^') {
                Some((c, m)) => (
                    c,
                    m.parse::<u32>()
                        .map_err(|_| GwError::UnknownClass(tok.to_string()))?,
                ),
                None => (tok, 1),
            };
            out.add(self.resolve_class(name)?, mult);
        }
        Ok(out)
    }

    fn finish(mut self) -> Result<Self> {
        let n = self.basis.len();
        let pt = n - 1;
        let mut g = vec![vec![Rational::zero(); n]; n];
        for a in 0..n {
            for b in 0..n {
                if self.codim(a) + self.codim(b) == self.dim {
                    g[a][b] = self.product_basis(a, b).coeff(pt);
                }
            }
        }
        let inv = invert(&g).ok_or_else(|| {
            GwError::Inconsistent("intersection pairing is singular".to_string())
        })?;
        self.dual = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| !inv[i][j].is_zero())
                    .map(|j| (j, inv[i][j].clone()))
                    .collect()
            })
            .collect();
        self.pairing = g;
        self.pairing_inverse = inv;
        self.divisors = (0..n).filter(|&i| self.codim(i) == 1).collect();
        self.id = self.fingerprint();
        Ok(self)
    }

    fn fingerprint(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(format!("dim={} points={};", self.dim, self.points));
        for b in &self.basis {
            h.update(format!("{}:{}:{:?};", b.name, b.codim, b.kind));
        }
        for (k, p) in self.products.iter().enumerate() {
            if !p.is_zero() {
                h.update(format!("{k}="));
                for (i, q) in p.terms() {
                    h.update(format!("{i}*{q},"));
                }
            }
        }
        h.update(format!("K={:?};", self.canonical.terms().collect::<Vec<_>>()));
        h.update(format!("curves={:?};", self.curve_basis));
        h.update(format!("pair={:?};", self.divisor_pairing));
        h.update(format!(
            "strategy={:?};bound={};",
            self.strategy.map(Strategy::tag),
            self.secant_bound
        ));
        for s in &self.seeds {
            h.update(format!("seed {}|{}|{};", s.beta, s.classes, s.value));
        }
        let digest = h.finalize();
        u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
    }
}

impl fmt::Display for TargetData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Gauss-Jordan inverse over the rationals; `None` if singular.
pub fn invert(m: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let mut inv: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] /= &p;
            inv[col][j] /= &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..n {
                    let (x, y) = (&a[col][j] * &f, &inv[col][j] * &f);
                    a[r][j] -= x;
                    inv[r][j] -= y;
                }
            }
        }
    }
    Some(inv)
}

fn ambient_name(power: usize, dim: usize) -> String {
    match power {
        0 => "one".to_string(),
        1 => "H".to_string(),
        p if p == dim => "pt".to_string(),
        p => format!("H{p}"),
    }
}

/// The ring of `P^r` blown up at `s` points (`s = 0` gives `P^r` itself).
///
/// Basis order: by codimension, ambient power first, then `E_1^k, ..., E_s^k`.
pub fn build_blowup_point_ring(r: usize, s: usize) -> TargetData {
    assert!(r >= 2, "dimension must be at least 2");
    let mut basis = Vec::new();
    for codim in 0..=r {
        basis.push(BasisClass {
            index: basis.len(),
            codim,
            kind: ClassKind::Ambient(codim),
            name: ambient_name(codim, r),
        });
        if (1..r).contains(&codim) {
            for point in 1..=s {
                basis.push(BasisClass {
                    index: basis.len(),
                    codim,
                    kind: ClassKind::Exceptional {
                        point,
                        power: codim,
                    },
                    name: format!("E{point}.{codim}"),
                });
            }
        }
    }
    let n = basis.len();
    let find = |kind: ClassKind| basis.iter().position(|b| b.kind == kind);
    let pt = n - 1;
    let sign = if (r - 1).is_multiple_of(2) { rat(1) } else { rat(-1) };
    let mut products = vec![CohClass::zero(); n * n];
    for a in 0..n {
        for b in 0..n {
            let prod = match (basis[a].kind, basis[b].kind) {
                (ClassKind::Ambient(i), ClassKind::Ambient(j)) => find(ClassKind::Ambient(i + j))
                    .map(CohClass::basis)
                    .unwrap_or_default(),
                (ClassKind::Ambient(0), _) => CohClass::basis(b),
                (_, ClassKind::Ambient(0)) => CohClass::basis(a),
                (ClassKind::Ambient(_), _) | (_, ClassKind::Ambient(_)) => CohClass::zero(),
                (
                    ClassKind::Exceptional { point: i, power: k },
                    ClassKind::Exceptional { point: j, power: l },
                ) => {
                    if i != j || k + l > r {
                        CohClass::zero()
                    } else if k + l == r {
                        CohClass::from_terms([(pt, sign.clone())])
                    } else {
                        CohClass::basis(find(ClassKind::Exceptional { point: i, power: k + l }).unwrap())
                    }
                }
                _ => unreachable!("point blow-up rings have no custom classes"),
            };
            products[a * n + b] = prod;
        }
    }
    let h = find(ClassKind::Ambient(1)).unwrap();
    let mut canonical = CohClass::from_terms([(h, rat(-(r as i64) - 1))]);
    let mut curve_basis = vec!["H'".to_string()];
    let mut divisor_pairing = vec![vec![0i64; s + 1]; n];
    divisor_pairing[h][0] = 1;
    for point in 1..=s {
        let e = find(ClassKind::Exceptional { point, power: 1 }).unwrap();
        canonical.add_term(e, rat(r as i64 - 1));
        curve_basis.push(format!("E'{point}"));
        divisor_pairing[e][point] = -1;
    }
    let target = TargetData {
        name: if s == 0 {
            format!("P^{r}")
        } else {
            format!("P^{r}({s})")
        },
        dim: r,
        points: s,
        basis,
        products,
        pairing: Vec::new(),
        pairing_inverse: Vec::new(),
        dual: Vec::new(),
        canonical,
        curve_basis,
        divisor_pairing,
        strategy: Some(if s == 0 {
            Strategy::Projective
        } else {
            Strategy::PointBlowup
        }),
        seeds: Vec::new(),
        secant_bound: 0,
        divisors: Vec::new(),
        id: 0,
    };
    target
        .finish()
        .expect("point blow-up rings have a unimodular pairing")
}

// ---------------------------------------------------------------------------
// Ring files
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Sym(char),
}

fn tokenize(s: &str) -> std::result::Result<Vec<Tok>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Tok::Num(text.parse().map_err(|_| format!("bad number `{text}`"))?));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | '.' | '\''))
            {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/()".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

/// Parser for coefficient expressions and linear combinations of classes.
struct ExprParser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    params: &'a HashMap<String, Rational>,
    classes: &'a HashMap<String, usize>,
}

enum Unit {
    Scalar(Rational),
    Class(usize),
}

impl<'a> ExprParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn scalar_expr(&mut self) -> std::result::Result<Rational, String> {
        let mut acc = self.scalar_term()?;
        while let Some(Tok::Sym(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let t = self.scalar_term()?;
            if c == '+' {
                acc += t;
            } else {
                acc -= t;
            }
        }
        Ok(acc)
    }

    fn scalar_term(&mut self) -> std::result::Result<Rational, String> {
        let mut acc = self.scalar_factor()?;
        while let Some(Tok::Sym(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let f = self.scalar_factor()?;
            if c == '*' {
                acc *= f;
            } else {
                if f.is_zero() {
                    return Err("division by zero".to_string());
                }
                acc /= f;
            }
        }
        Ok(acc)
    }

    fn scalar_factor(&mut self) -> std::result::Result<Rational, String> {
        match self.next() {
            Some(Tok::Num(n)) => Ok(Rational::from_integer(n)),
            Some(Tok::Sym('-')) => Ok(-self.scalar_factor()?),
            Some(Tok::Sym('(')) => {
                let v = self.scalar_expr()?;
                match self.next() {
                    Some(Tok::Sym(')')) => Ok(v),
                    _ => Err("missing `)`".to_string()),
                }
            }
            Some(Tok::Ident(name)) => self
                .params
                .get(&name)
                .cloned()
                .ok_or_else(|| format!("unknown parameter `{name}`")),
            other => Err(format!("unexpected token {other:?}")),
        }
    }

    fn unit(&mut self) -> std::result::Result<Unit, String> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) if self.classes.contains_key(&name) => {
                self.pos += 1;
                Ok(Unit::Class(self.classes[&name]))
            }
            _ => Ok(Unit::Scalar(self.scalar_factor()?)),
        }
    }

    /// `[-] mono ((+|-) mono)*` where a monomial is a product of scalar
    /// factors and exactly one class name; the literal `0` is the zero class.
    fn combination(&mut self) -> std::result::Result<CohClass, String> {
        if self.toks == [Tok::Num(BigInt::zero())] {
            self.pos = 1;
            return Ok(CohClass::zero());
        }
        let mut out = CohClass::zero();
        let mut sign = Rational::one();
        if let Some(Tok::Sym('-')) = self.peek() {
            self.pos += 1;
            sign = -sign;
        }
        loop {
            let (coeff, class) = self.monomial()?;
            out.add_term(class, coeff * &sign);
            match self.peek() {
                None => break,
                Some(Tok::Sym('+')) => sign = Rational::one(),
                Some(Tok::Sym('-')) => sign = -Rational::one(),
                Some(t) => return Err(format!("unexpected token {t:?}")),
            }
            self.pos += 1;
        }
        Ok(out)
    }

    fn monomial(&mut self) -> std::result::Result<(Rational, usize), String> {
        let mut coeff = Rational::one();
        let mut class = None;
        let mut divide = false;
        loop {
            match self.unit()? {
                Unit::Class(c) => {
                    if class.replace(c).is_some() || divide {
                        return Err("a term must contain exactly one class".to_string());
                    }
                }
                Unit::Scalar(q) => {
                    if divide {
                        if q.is_zero() {
                            return Err("division by zero".to_string());
                        }
                        coeff /= q;
                    } else {
                        coeff *= q;
                    }
                }
            }
            match self.peek() {
                Some(Tok::Sym('*')) => divide = false,
                Some(Tok::Sym('/')) => divide = true,
                _ => break,
            }
            self.pos += 1;
        }
        class
            .map(|c| (coeff, c))
            .ok_or_else(|| "term has no class".to_string())
    }
}

fn parse_scalar(
    text: &str,
    params: &HashMap<String, Rational>,
) -> std::result::Result<Rational, String> {
    let classes = HashMap::new();
    let mut p = ExprParser {
        toks: tokenize(text)?,
        pos: 0,
        params,
        classes: &classes,
    };
    let v = p.scalar_expr()?;
    if !p.at_end() {
        return Err(format!("trailing input in `{text}`"));
    }
    Ok(v)
}

fn parse_combination(
    text: &str,
    params: &HashMap<String, Rational>,
    classes: &HashMap<String, usize>,
) -> std::result::Result<CohClass, String> {
    let mut p = ExprParser {
        toks: tokenize(text)?,
        pos: 0,
        params,
        classes,
    };
    p.combination()
}

fn to_integer(q: &Rational) -> std::result::Result<i64, String> {
    if !q.is_integer() {
        return Err(format!("expected an integer, got {q}"));
    }
    q.to_integer()
        .to_i64()
        .ok_or_else(|| format!("integer {q} out of range"))
}

/// Parse a ring file with no template parameters.
pub fn parse_ring_file(text: &str) -> Result<TargetData> {
    parse_ring_file_with(text, &[])
}

/// Parse a ring file, binding the template parameters it declares with `PARAM`.
pub fn parse_ring_file_with(text: &str, params: &[(&str, i64)]) -> Result<TargetData> {
    let supplied: HashMap<String, Rational> =
        params.iter().map(|(k, v)| (k.to_string(), rat(*v))).collect();
    let mut bound_params: HashMap<String, Rational> = HashMap::new();

    let mut name = "custom".to_string();
    let mut dim: Option<usize> = None;
    let mut basis: Vec<BasisClass> = Vec::new();
    let mut class_ids: HashMap<String, usize> = HashMap::new();
    let mut declared: HashMap<(usize, usize), (usize, CohClass)> = HashMap::new();
    let mut canonical: Option<CohClass> = None;
    let mut curve_basis: Vec<String> = Vec::new();
    let mut pairs: Vec<(usize, usize, usize, i64)> = Vec::new();
    let mut seed_lines: Vec<(usize, String)> = Vec::new();
    let mut strategy = None;
    let mut secant_bound = 0i64;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |message: String| GwError::Parse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (keyword, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line, ""),
        };
        match keyword {
            "NAME" => name = rest.to_string(),
            "PARAM" => {
                for p in rest.split_whitespace() {
                    let v = supplied
                        .get(p)
                        .ok_or_else(|| err(format!("parameter `{p}` was not supplied")))?;
                    bound_params.insert(p.to_string(), v.clone());
                }
            }
            "DIM" => {
                let r: usize = rest.parse().map_err(|_| err(format!("bad DIM `{rest}`")))?;
                if r < 2 {
                    return Err(err("DIM must be at least 2".into()));
                }
                dim = Some(r);
            }
            "BASIS" => {
                let r = dim.ok_or_else(|| err("BASIS before DIM".into()))?;
                let mut it = rest.split_whitespace();
                let (cname, codim) = match (it.next(), it.next(), it.next()) {
                    (Some(n), Some(c), None) => (n, c),
                    _ => return Err(err("expected `BASIS <name> <codim>`".into())),
                };
                let codim: usize = codim
                    .parse()
                    .map_err(|_| err(format!("bad codimension `{codim}`")))?;
                if codim > r {
                    return Err(err(format!("codimension {codim} exceeds DIM {r}")));
                }
                if let Some(prev) = basis.last() {
                    if prev.codim > codim {
                        return Err(err("basis must be sorted by codimension".into()));
                    }
                } else if cname != "one" || codim != 0 {
                    return Err(err("first basis class must be `one 0`".into()));
                }
                if class_ids.contains_key(cname) {
                    return Err(err(format!("duplicate class `{cname}`")));
                }
                let kind = match cname {
                    "one" => ClassKind::Ambient(0),
                    "pt" => ClassKind::Ambient(r),
                    "H" => ClassKind::Ambient(1),
                    _ => match cname.strip_prefix('H').and_then(|k| k.parse::<usize>().ok()) {
                        Some(k) => ClassKind::Ambient(k),
                        None => ClassKind::Custom,
                    },
                };
                if let ClassKind::Ambient(k) = kind {
                    if k != codim {
                        return Err(err(format!("`{cname}` must have codimension {k}")));
                    }
                }
                class_ids.insert(cname.to_string(), basis.len());
                basis.push(BasisClass {
                    index: basis.len(),
                    codim,
                    kind,
                    name: cname.to_string(),
                });
            }
            "PRODUCT" => {
                let (lhs, rhs) = rest
                    .split_once('=')
                    .ok_or_else(|| err("expected `PRODUCT <a> <b> = ...`".into()))?;
                let names: Vec<&str> = lhs.split_whitespace().collect();
                if names.len() != 2 {
                    return Err(err("expected two factors".into()));
                }
                let a = *class_ids
                    .get(names[0])
                    .ok_or_else(|| err(format!("unknown class `{}`", names[0])))?;
                let b = *class_ids
                    .get(names[1])
                    .ok_or_else(|| err(format!("unknown class `{}`", names[1])))?;
                let value = parse_combination(rhs, &bound_params, &class_ids).map_err(err)?;
                for (x, y) in [(a, b), (b, a)] {
                    if let Some((prev_line, prev)) = declared.get(&(x, y)) {
                        if *prev != value {
                            return Err(GwError::Inconsistent(format!(
                                "product {} * {} declared differently on lines {} and {}",
                                names[0], names[1], prev_line, line_no
                            )));
                        }
                    }
                    declared.insert((x, y), (line_no, value.clone()));
                }
            }
            "CANONICAL" => {
                let rhs = rest
                    .strip_prefix('=')
                    .ok_or_else(|| err("expected `CANONICAL = ...`".into()))?;
                canonical =
                    Some(parse_combination(rhs, &bound_params, &class_ids).map_err(err)?);
            }
            "CURVEBASIS" => curve_basis = rest.split_whitespace().map(str::to_string).collect(),
            "PAIR" => {
                let (lhs, rhs) = rest
                    .split_once('=')
                    .ok_or_else(|| err("expected `PAIR <divisor> <curve> = <n>`".into()))?;
                let names: Vec<&str> = lhs.split_whitespace().collect();
                if names.len() != 2 {
                    return Err(err("expected a divisor and a curve".into()));
                }
                let d = *class_ids
                    .get(names[0])
                    .ok_or_else(|| err(format!("unknown class `{}`", names[0])))?;
                let c = curve_basis
                    .iter()
                    .position(|n| n == names[1])
                    .ok_or_else(|| err(format!("unknown curve `{}`", names[1])))?;
                let v = parse_scalar(rhs, &bound_params)
                    .and_then(|q| to_integer(&q))
                    .map_err(err)?;
                pairs.push((line_no, d, c, v));
            }
            "SEED" => seed_lines.push((line_no, rest.to_string())),
            "STRATEGY" => {
                strategy = Some(
                    Strategy::from_tag(rest)
                        .ok_or_else(|| err(format!("unknown strategy `{rest}`")))?,
                );
            }
            "SECANTBOUND" => {
                secant_bound = parse_scalar(rest, &bound_params)
                    .and_then(|q| to_integer(&q))
                    .map_err(err)?;
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }

    let eof = text.lines().count().max(1);
    let missing = |what: &str| GwError::Parse {
        line: eof,
        message: format!("missing {what}"),
    };
    let r = dim.ok_or_else(|| missing("DIM"))?;
    if basis.is_empty() {
        return Err(missing("BASIS"));
    }
    let last = basis.last().unwrap();
    if last.name != "pt" || last.codim != r {
        return Err(missing("final `BASIS pt <dim>`"));
    }
    if declared.is_empty() {
        return Err(missing("PRODUCT section"));
    }
    let canonical = canonical.ok_or_else(|| missing("CANONICAL"))?;
    if curve_basis.is_empty() {
        return Err(missing("CURVEBASIS"));
    }

    let n = basis.len();
    let mut products = vec![CohClass::zero(); n * n];
    for a in 0..n {
        for b in 0..n {
            let value = if let Some((_, v)) = declared.get(&(a, b)) {
                v.clone()
            } else {
                match (basis[a].kind, basis[b].kind) {
                    (ClassKind::Ambient(0), _) => CohClass::basis(b),
                    (_, ClassKind::Ambient(0)) => CohClass::basis(a),
                    (ClassKind::Ambient(i), ClassKind::Ambient(j)) if i + j <= r => {
                        let k = basis
                            .iter()
                            .position(|c| c.kind == ClassKind::Ambient(i + j))
                            .ok_or_else(|| {
                                GwError::Inconsistent(format!("basis lacks H^{}", i + j))
                            })?;
                        CohClass::basis(k)
                    }
                    _ => CohClass::zero(),
                }
            };
            for (k, _) in value.terms() {
                if basis[k].codim != basis[a].codim + basis[b].codim {
                    return Err(GwError::Inconsistent(format!(
                        "product {} * {} has a term {} of the wrong codimension",
                        basis[a].name, basis[b].name, basis[k].name
                    )));
                }
            }
            products[a * n + b] = value;
        }
    }
    for (i, q) in canonical.terms() {
        if basis[i].codim != 1 {
            return Err(GwError::Inconsistent(format!(
                "canonical divisor has a term {} of codimension {}",
                basis[i].name, basis[i].codim
            )));
        }
        let _ = q;
    }
    let mut divisor_pairing = vec![vec![0i64; curve_basis.len()]; n];
    for (line, d, c, v) in pairs {
        if basis[d].codim != 1 {
            return Err(GwError::Parse {
                line,
                message: format!("`{}` is not a divisor", basis[d].name),
            });
        }
        divisor_pairing[d][c] = v;
    }
    let mut seeds = Vec::new();
    for (line, text) in seed_lines {
        seeds.push(
            parse_seed(&text, &bound_params, &class_ids, curve_basis.len())
                .map_err(|message| GwError::Parse { line, message })?,
        );
    }

    let mut target = TargetData {
        name,
        dim: r,
        points: 0,
        basis,
        products,
        pairing: Vec::new(),
        pairing_inverse: Vec::new(),
        dual: Vec::new(),
        canonical,
        curve_basis,
        divisor_pairing,
        strategy,
        seeds,
        secant_bound,
        divisors: Vec::new(),
        id: 0,
    };
    check_associative(&target)?;
    target = target.finish()?;
    Ok(target)
}

fn parse_seed(
    text: &str,
    params: &HashMap<String, Rational>,
    classes: &HashMap<String, usize>,
    curve_rank: usize,
) -> std::result::Result<Seed, String> {
    let mut beta = None;
    let mut ins = None;
    let mut value = None;
    for field in text.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| format!("malformed seed field `{field}`"))?;
        match k {
            "beta" => {
                let coeffs = v
                    .split(',')
                    .map(|c| c.trim().parse::<i64>().map_err(|_| format!("bad beta `{v}`")))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                if coeffs.len() != curve_rank {
                    return Err(format!("beta `{v}` needs {curve_rank} coefficients"));
                }
                beta = Some(CurveClass::new(coeffs));
            }
            "classes" => {
                let mut out = Insertions::new();
                for tok in v.split(',').filter(|t| !t.is_empty()) {
                    let (cname, mult) = match tok.split_once('^') {
                        Some((c, m)) => (c, m.parse::<u32>().map_err(|_| format!("bad `{tok}`"))?),
                        None => (tok, 1),
                    };
                    let idx = classes
                        .get(cname)
                        .ok_or_else(|| format!("unknown class `{cname}`"))?;
                    out.add(*idx, mult);
                }
                ins = Some(out);
            }
            "value" => value = Some(parse_scalar(v, params)?),
            other => return Err(format!("unknown seed field `{other}`")),
        }
    }
    Ok(Seed {
        beta: beta.ok_or("seed lacks beta")?,
        classes: ins.unwrap_or_default(),
        value: value.ok_or("seed lacks value")?,
    })
}

fn check_associative(t: &TargetData) -> Result<()> {
    let n = t.basis.len();
    for a in 0..n {
        for b in a..n {
            for c in 0..n {
                let left = t.product(t.product_basis(a, b), &CohClass::basis(c));
                let right = t.product(&CohClass::basis(a), t.product_basis(b, c));
                if left != right {
                    return Err(GwError::Inconsistent(format!(
                        "products are not associative on ({}, {}, {})",
                        t.basis[a].name, t.basis[b].name, t.basis[c].name
                    )));
                }
            }
        }
    }
    Ok(())
}

const CURVE_SECANT_RING: &str = include_str!("../data/curve_secant.ring");
const ABELIAN_SURFACE_RING: &str = include_str!("../data/abelian_surface.ring");

/// `P^3` blown up along a smooth curve of degree `d` and genus `g`.
pub fn curve_secant_ring(d: i64, g: i64) -> TargetData {
    // Lines meeting the curve up to four times stay in the candidate set even
    // for d = 3, so quadrisecant classes are computed rather than filtered.
    let bound = d.max(4);
    parse_ring_file_with(CURVE_SECANT_RING, &[("d", d), ("g", g), ("bound", bound)])
        .expect("bundled curve ring is well-formed")
}

/// `P^4` blown up along a generic abelian surface of degree 10.
pub fn abelian_surface_ring() -> TargetData {
    parse_ring_file(ABELIAN_SURFACE_RING).expect("bundled abelian surface ring is well-formed")
}

pub fn curve_secant_ring_text() -> &'static str {
    CURVE_SECANT_RING
}

pub fn abelian_surface_ring_text() -> &'static str {
    ABELIAN_SURFACE_RING
}

impl fmt::Display for CohClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (n, (i, q)) in self.terms().enumerate() {
            if n > 0 {
                f.write_str(if q.is_negative() { " - " } else { " + " })?;
            } else if q.is_negative() {
                f.write_str("-")?;
            }
            write!(f, "{}*#{}", q.abs(), i)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class(t: &TargetData, name: &str) -> CohClass {
        CohClass::basis(t.resolve_class(name).unwrap())
    }

    #[test]
    fn exceptional_square_on_plane_is_minus_point() {
        let t = build_blowup_point_ring(2, 1);
        let e = class(&t, "E1.1");
        let sq = t.product(&e, &e);
        assert_eq!(sq, CohClass::from_terms([(t.pt_index(), rat(-1))]));
    }

    #[test]
    fn distinct_exceptional_divisors_are_orthogonal() {
        let t = build_blowup_point_ring(3, 2);
        assert!(t.product(&class(&t, "E1"), &class(&t, "E2")).is_zero());
    }

    #[test]
    fn exceptional_cube_in_threefold_is_point() {
        let t = build_blowup_point_ring(3, 1);
        let e = class(&t, "E1.1");
        let e2 = class(&t, "E1.2");
        assert_eq!(t.product(&e, &e2), CohClass::basis(t.pt_index()));
        assert_eq!(t.triple_product(&e, &e, &e), rat(1));
    }

    #[test]
    fn exceptional_divisor_pairs_to_minus_one_with_exceptional_line() {
        for r in 2..=5 {
            let t = build_blowup_point_ring(r, 1);
            let e = t.resolve_class("E1.1").unwrap();
            assert_eq!(t.divisor_pairing[e][1], -1);
        }
    }

    #[test]
    fn triple_products() {
        let t = build_blowup_point_ring(2, 1);
        let (one, h, e) = (class(&t, "one"), class(&t, "H"), class(&t, "E1"));
        assert_eq!(t.triple_product(&h, &h, &one), rat(1));
        assert_eq!(t.triple_product(&h, &e, &one), rat(0));
    }

    #[test]
    fn identity_and_grading() {
        for (r, s) in [(2, 2), (3, 2), (4, 2)] {
            let t = build_blowup_point_ring(r, s);
            for a in 0..t.len() {
                assert_eq!(t.product_basis(a, 0), &CohClass::basis(a));
                for b in 0..t.len() {
                    for (k, _) in t.product_basis(a, b).terms() {
                        assert_eq!(t.codim(k), t.codim(a) + t.codim(b));
                    }
                }
            }
        }
    }

    #[test]
    fn pairing_inverse_is_exact() {
        for (r, s) in [(2, 1), (3, 2), (4, 2)] {
            let t = build_blowup_point_ring(r, s);
            let n = t.len();
            for i in 0..n {
                for j in 0..n {
                    let mut acc = Rational::zero();
                    for k in 0..n {
                        acc += &t.pairing[i][k] * &t.pairing_inverse[k][j];
                    }
                    assert_eq!(acc, if i == j { rat(1) } else { rat(0) });
                }
            }
        }
    }

    #[test]
    fn ambient_powers_and_mixed_products() {
        let t = build_blowup_point_ring(4, 2);
        for a in 0..=4usize {
            for b in 0..=4usize {
                let p = t.product(&class(&t, &format!("H{a}")), &class(&t, &format!("H{b}")));
                if a + b <= 4 {
                    assert_eq!(p, class(&t, &format!("H{}", a + b)));
                } else {
                    assert!(p.is_zero());
                }
            }
        }
        for a in 1..=4usize {
            for k in 1..4usize {
                let p = t.product(&class(&t, &format!("H{a}")), &class(&t, &format!("E2.{k}")));
                assert!(p.is_zero());
            }
        }
    }

    #[test]
    fn curve_ring_products() {
        let t = curve_secant_ring(4, 0);
        let e = class(&t, "E");
        assert_eq!(
            t.product(&e, &e),
            CohClass::from_terms([
                (t.index_of("F").unwrap(), rat(14)),
                (t.index_of("H2").unwrap(), rat(-4))
            ])
        );
        let t = curve_secant_ring(5, 1);
        assert_eq!(
            t.product(&class(&t, "E"), &class(&t, "H")),
            CohClass::from_terms([(t.index_of("F").unwrap(), rat(5))])
        );
        assert_eq!(t.triple_product(&class(&t, "E"), &class(&t, "F"), &class(&t, "one")), rat(-1));
    }

    #[test]
    fn abelian_ring_products() {
        let t = abelian_surface_ring();
        let prod = t.product(&class(&t, "E"), &class(&t, "gamma"));
        assert_eq!(
            prod,
            CohClass::from_terms([
                (t.index_of("F").unwrap(), rat(50)),
                (t.index_of("H3").unwrap(), rat(-10))
            ])
        );
    }

    #[test]
    fn missing_products_is_a_parse_error() {
        let text = "DIM 2\nBASIS one 0\nBASIS H 1\nBASIS pt 2\nCANONICAL = -3*H\nCURVEBASIS L\nPAIR H L = 1\n";
        match parse_ring_file(text) {
            Err(GwError::Parse { message, .. }) => assert!(message.contains("PRODUCT")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "DIM 2\nBASIS one 0\nBASIS H 1\nBOGUS x\n";
        assert!(matches!(parse_ring_file(text), Err(GwError::Parse { line: 4, .. })));
    }

    #[test]
    fn conflicting_products_are_rejected() {
        let text = "DIM 2\nBASIS one 0\nBASIS H 1\nBASIS X 1\nBASIS pt 2\n\
                    PRODUCT X H = 0\nPRODUCT H X = 1*pt\nPRODUCT X X = -1*pt\n\
                    CANONICAL = -3*H\nCURVEBASIS L\nPAIR H L = 1\n";
        assert!(matches!(parse_ring_file(text), Err(GwError::Inconsistent(_))));
    }

    #[test]
    fn singular_pairing_is_rejected() {
        let text = "DIM 2\nBASIS one 0\nBASIS H 1\nBASIS X 1\nBASIS pt 2\n\
                    PRODUCT X X = 0\nPRODUCT X H = 0\n\
                    CANONICAL = -3*H\nCURVEBASIS L\nPAIR H L = 1\n";
        assert!(matches!(parse_ring_file(text), Err(GwError::Inconsistent(_))));
    }

    #[test]
    fn non_associative_products_are_rejected() {
        let text = "DIM 3\nBASIS one 0\nBASIS H 1\nBASIS X 1\nBASIS H2 2\nBASIS pt 3\n\
                    PRODUCT X H = 1*H2\nPRODUCT X X = 0\n\
                    CANONICAL = -4*H\nCURVEBASIS L\nPAIR H L = 1\n";
        // (X*H)*H = H2*H = pt but X*(H*H) = X*H2 = 0
        assert!(matches!(parse_ring_file(text), Err(GwError::Inconsistent(_))));
    }

    #[test]
    fn rational_and_parametric_coefficients() {
        let text = "PARAM k\nDIM 2\nBASIS one 0\nBASIS H 1\nBASIS X 1\nBASIS pt 2\n\
                    PRODUCT X X = -(2*k-1)/3*pt\n\
                    CANONICAL = -3*H + 1/2*X\nCURVEBASIS L f\nPAIR H L = 1\nPAIR X f = k - 3\n";
        let t = parse_ring_file_with(text, &[("k", 5)]).unwrap();
        let x = t.index_of("X").unwrap();
        assert_eq!(t.product_basis(x, x), &CohClass::from_terms([(3, ratio(-3, 1))]));
        assert_eq!(t.canonical.coeff(x), ratio(1, 2));
        assert_eq!(t.divisor_pairing[x][1], 2);
    }
}
