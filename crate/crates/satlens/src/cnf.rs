//! Formula representation and DIMACS I/O.
//!
//! Variables are `0`-based internally; the DIMACS surface is `1`-based with sign for
//! polarity. Parsing normalizes clauses: duplicate literals are dropped and tautological
//! clauses removed, with both counts surfaced in the parse report.

use std::fmt;

use thiserror::Error;

/// Internal variable index, `0`-based.
pub type Var = u32;

/// A literal packed as `var << 1 | sign`, sign bit set for negative polarity.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        Lit(var << 1 | (!positive) as u32)
    }

    pub fn var(self) -> Var {
        self.0 >> 1
    }

    pub fn is_pos(self) -> bool {
        self.0 & 1 == 0
    }

    /// Index usable for watch lists and other per-literal tables.
    pub fn code(self) -> usize {
        self.0 as usize
    }

    /// Parses a nonzero DIMACS literal against a variable count.
    pub fn from_dimacs(lit: i64, num_vars: usize) -> Result<Lit, ParseError> {
        let var = lit.unsigned_abs();
        if lit == 0 || var > num_vars as u64 {
            return Err(ParseError::LiteralOutOfRange { lit, num_vars });
        }
        Ok(Lit::new((var - 1) as Var, lit > 0))
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_pos() {
            v
        } else {
            -v
        }
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

pub type Clause = Vec<Lit>;

/// A CNF formula over variables `0..num_vars`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Clause>,
}

impl Cnf {
    pub fn new(num_vars: usize) -> Cnf {
        Cnf { num_vars, clauses: Vec::new() }
    }

    pub fn add_clause(&mut self, lits: impl IntoIterator<Item = Lit>) {
        let clause: Clause = lits.into_iter().collect();
        debug_assert!(clause.iter().all(|l| (l.var() as usize) < self.num_vars));
        self.clauses.push(clause);
    }
}

/// Sorted, duplicate-free set of variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarSet(Vec<Var>);

impl VarSet {
    pub fn new() -> VarSet {
        VarSet(Vec::new())
    }

    pub fn from_vec(mut vars: Vec<Var>) -> VarSet {
        vars.sort_unstable();
        vars.dedup();
        VarSet(vars)
    }

    pub fn insert(&mut self, v: Var) {
        if let Err(pos) = self.0.binary_search(&v) {
            self.0.insert(pos, v);
        }
    }

    pub fn contains(&self, v: Var) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        let mut merged = Vec::with_capacity(self.0.len() + other.0.len());
        merged.extend_from_slice(&self.0);
        merged.extend_from_slice(&other.0);
        VarSet::from_vec(merged)
    }

    pub fn is_subset_of(&self, other: &VarSet) -> bool {
        self.0.iter().all(|&v| other.contains(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Var> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[Var] {
        &self.0
    }
}

impl FromIterator<Var> for VarSet {
    fn from_iter<I: IntoIterator<Item = Var>>(iter: I) -> VarSet {
        VarSet::from_vec(iter.into_iter().collect())
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("input contains no DIMACS header")]
    MissingHeader,
    #[error("malformed header line: {0:?}")]
    BadHeader(String),
    #[error("second header line: {0:?}")]
    DuplicateHeader(String),
    #[error("unreadable token {0:?}")]
    BadToken(String),
    #[error("literal {lit} out of range for {num_vars} variables")]
    LiteralOutOfRange { lit: i64, num_vars: usize },
    #[error("last clause is missing its terminating 0")]
    UnterminatedClause,
}

/// What normalization did to the raw clause list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParseReport {
    /// Clauses dropped for containing a literal and its negation.
    pub tautologies_dropped: usize,
    /// Repeated literals removed within clauses.
    pub duplicate_literals_removed: usize,
    /// `(declared, found)` when the header count disagrees with the clauses read,
    /// counted before tautology drops.
    pub header_clause_mismatch: Option<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct ParsedDimacs {
    pub cnf: Cnf,
    pub report: ParseReport,
}

/// Parses DIMACS CNF text. Comment lines start with `c`; a line starting with `%`
/// ends the clause section (some benchmark archives carry a `%` / `0` trailer).
pub fn parse_dimacs(input: &str) -> Result<ParsedDimacs, ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut report = ParseReport::default();
    let mut cnf = Cnf::default();
    let mut clauses_read = 0usize;
    let mut current: Clause = Vec::new();
    let mut tautology = false;

    'lines: for line in input.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(ParseError::DuplicateHeader(line.to_string()));
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let counts = match fields.as_slice() {
                ["p", "cnf", vars, clauses] => {
                    vars.parse::<usize>().ok().zip(clauses.parse::<usize>().ok())
                }
                _ => None,
            };
            match counts {
                Some((v, c)) => {
                    header = Some((v, c));
                    cnf.num_vars = v;
                }
                None => return Err(ParseError::BadHeader(line.to_string())),
            }
            continue;
        }
        for token in trimmed.split_whitespace() {
            if token.starts_with('%') {
                break 'lines;
            }
            let num: i64 = token
                .parse()
                .map_err(|_| ParseError::BadToken(token.to_string()))?;
            let (num_vars, _) = header.ok_or(ParseError::MissingHeader)?;
            if num == 0 {
                clauses_read += 1;
                if tautology {
                    report.tautologies_dropped += 1;
                } else {
                    cnf.clauses.push(std::mem::take(&mut current));
                }
                current.clear();
                tautology = false;
                continue;
            }
            let lit = Lit::from_dimacs(num, num_vars)?;
            if current.contains(&!lit) {
                tautology = true;
            }
            if current.contains(&lit) {
                report.duplicate_literals_removed += 1;
            } else {
                current.push(lit);
            }
        }
    }

    let (_, declared) = header.ok_or(ParseError::MissingHeader)?;
    if !current.is_empty() {
        return Err(ParseError::UnterminatedClause);
    }
    if declared != clauses_read {
        report.header_clause_mismatch = Some((declared, clauses_read));
    }
    Ok(ParsedDimacs { cnf, report })
}

/// Writes DIMACS CNF text, with any `comments` emitted as leading `c` lines.
pub fn write_dimacs(cnf: &Cnf, comments: &[String]) -> String {
    let mut out = String::new();
    for comment in comments {
        out.push_str("c ");
        out.push_str(comment);
        out.push('\n');
    }
    out.push_str(&format!("p cnf {} {}\n", cnf.num_vars, cnf.clauses.len()));
    for clause in &cnf.clauses {
        for lit in clause {
            out.push_str(&lit.to_dimacs().to_string());
            out.push(' ');
        }
        out.push_str("0\n");
    }
    out
}
