//! Classical modular polynomials Φ_m(X, Y): loading, validation, reduction.
//!
//! Files hold one coefficient per line as `[i j] c` with `i >= j`; the entry
//! stands for `c*(X^i Y^j + X^j Y^i)` when `i > j` and `c*X^i Y^i` otherwise.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::algebra::{FieldParams, Fp2, Poly};
use crate::error::{Error, Result};

/// Data files compiled into the library.
const SHIPPED: &[(u32, &str)] = &[
    (2, include_str!("../data/modpoly/phi_2.txt")),
    (3, include_str!("../data/modpoly/phi_3.txt")),
    (5, include_str!("../data/modpoly/phi_5.txt")),
    (7, include_str!("../data/modpoly/phi_7.txt")),
    (11, include_str!("../data/modpoly/phi_11.txt")),
    (13, include_str!("../data/modpoly/phi_13.txt")),
    (17, include_str!("../data/modpoly/phi_17.txt")),
    (19, include_str!("../data/modpoly/phi_19.txt")),
];

/// Sparse integer coefficient table of one Φ_m, keyed by (i, j) with i >= j.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModPolyTable {
    level: u32,
    coeffs: BTreeMap<(u32, u32), BigInt>,
}

impl ModPolyTable {
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Coefficient of X^i Y^j (zero when absent).
    pub fn coeff(&self, i: u32, j: u32) -> BigInt {
        let key = if i >= j { (i, j) } else { (j, i) };
        self.coeffs.get(&key).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Parses the text of one file. The level is `m` when given, otherwise the
    /// largest exponent minus one.
    pub fn parse(text: &str, level: Option<u32>) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let (key, c) = parse_line(content, line)?;
            if coeffs.insert(key, c).is_some() {
                return Err(Error::Parse {
                    line,
                    column: 1,
                    message: format!("duplicate entry [{} {}]", key.0, key.1),
                });
            }
        }
        let inferred = coeffs.keys().map(|&(i, _)| i).max();
        let level = match (level, inferred) {
            (Some(m), Some(_)) => m,
            (Some(m), None) => return Err(Error::MissingLevel(m)),
            (None, Some(top)) if top >= 2 => top - 1,
            (None, _) => return Err(Error::MissingLevel(0)),
        };
        let table = ModPolyTable { level, coeffs };
        table.validate()?;
        Ok(table)
    }

    /// Structural checks plus, for prime m, the Kronecker congruence
    /// Φ_m(X, Y) ≡ (X^m - Y)(X - Y^m) mod m, tested coefficient by coefficient.
    pub fn validate(&self) -> Result<()> {
        let m = self.level;
        let top = m + 1;
        if let Some(&(i, j)) = self.coeffs.keys().find(|&&(i, _)| i > top) {
            return Err(Error::ValidationFailed(format!(
                "Phi_{m}: entry [{i} {j}] exceeds degree {top}"
            )));
        }
        if self.coeff(top, 0) != BigInt::one() {
            return Err(Error::ValidationFailed(format!(
                "Phi_{m}: coefficient of X^{top} is not 1"
            )));
        }
        if self.coeff(top, top) != BigInt::zero() || (1..=top).any(|j| !self.coeff(top, j).is_zero())
        {
            return Err(Error::ValidationFailed(format!(
                "Phi_{m}: degree in X exceeds {top} once Y is present"
            )));
        }
        if !crate::algebra::int::is_prime(m as u64) {
            return Ok(());
        }
        let modulus = BigInt::from(m);
        let expected = |i: u32, j: u32| -> i64 {
            match (i, j) {
                (a, 0) if a == top => 1,
                (a, b) if a == m && b == m => -1,
                (1, 1) => -1,
                _ => 0,
            }
        };
        for i in 0..=top {
            for j in 0..=i {
                let got = self.coeff(i, j) - BigInt::from(expected(i, j));
                if !(got % &modulus).is_zero() {
                    return Err(Error::ValidationFailed(format!(
                        "Phi_{m}: Kronecker congruence fails at [{i} {j}]"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn parse_line(content: &str, line: usize) -> Result<((u32, u32), BigInt)> {
    let err = |column: usize, message: &str| Error::Parse {
        line,
        column,
        message: message.to_string(),
    };
    let col_of = |s: &str| s.as_ptr() as usize - content.as_ptr() as usize + 1;

    let rest = content.trim_start();
    let rest = rest
        .strip_prefix('[')
        .ok_or_else(|| err(col_of(rest), "expected '['"))?;
    let close = rest
        .find(']')
        .ok_or_else(|| err(col_of(rest), "expected ']'"))?;
    let inner = &rest[..close];
    let mut nums = Vec::new();
    let mut cursor = inner;
    loop {
        let trimmed = cursor.trim_start();
        if trimmed.is_empty() {
            break;
        }
        let end = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let tok = &trimmed[..end];
        let v: u32 = tok
            .parse()
            .map_err(|_| err(col_of(trimmed), "exponent is not a non-negative integer"))?;
        nums.push((v, col_of(trimmed)));
        cursor = &trimmed[end..];
    }
    if nums.len() != 2 {
        return Err(err(col_of(rest), "expected two exponents"));
    }
    let (i, j) = (nums[0].0, nums[1].0);
    if i < j {
        return Err(err(nums[0].1, "exponents must satisfy i >= j"));
    }
    let after = &rest[close + 1..];
    let coeff_str = after.trim();
    if coeff_str.is_empty() {
        return Err(err(col_of(after), "missing coefficient"));
    }
    let c: BigInt = coeff_str
        .parse()
        .map_err(|_| err(col_of(after.trim_start()), "coefficient is not an integer"))?;
    Ok(((i, j), c))
}

/// Collection of modular polynomial tables by level.
#[derive(Clone, Debug, Default)]
pub struct ModPolyDb {
    tables: BTreeMap<u32, ModPolyTable>,
}

impl ModPolyDb {
    /// The tables compiled into the library.
    pub fn shipped() -> Self {
        let tables = SHIPPED
            .iter()
            .map(|&(m, text)| {
                let t = ModPolyTable::parse(text, Some(m)).expect("shipped data is valid");
                (m, t)
            })
            .collect();
        ModPolyDb { tables }
    }

    /// Loads a single `phi_m.txt` file or every `phi_*.txt` in a directory.
    pub fn load(path: &Path) -> Result<Self> {
        let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
        let mut db = ModPolyDb::default();
        if path.is_dir() {
            let mut entries: Vec<_> = fs::read_dir(path)
                .map_err(io)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| level_from_name(p).is_some())
                .collect();
            entries.sort();
            for p in entries {
                db.add_file(&p)?;
            }
        } else {
            db.add_file(path)?;
        }
        Ok(db)
    }

    /// Loads `path` and checks that every level in `levels` is present.
    pub fn load_levels(path: &Path, levels: &[u32]) -> Result<Self> {
        let db = Self::load(path)?;
        for &m in levels {
            db.table(m)?;
        }
        Ok(db)
    }

    fn add_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let table = ModPolyTable::parse(&text, level_from_name(path))?;
        self.tables.insert(table.level, table);
        Ok(())
    }

    pub fn insert(&mut self, table: ModPolyTable) {
        self.tables.insert(table.level, table);
    }

    pub fn levels(&self) -> Vec<u32> {
        self.tables.keys().copied().collect()
    }

    pub fn table(&self, m: u32) -> Result<&ModPolyTable> {
        self.tables.get(&m).ok_or(Error::MissingLevel(m))
    }

    /// Reduces every table modulo p.
    pub fn reduce(&self, field: &FieldParams) -> ModularSystem {
        let levels = self
            .tables
            .values()
            .map(|t| (t.level, reduce_table(t, field)))
            .collect();
        ModularSystem {
            field: *field,
            levels,
        }
    }
}

fn level_from_name(path: &Path) -> Option<u32> {
    let name = path.file_name()?.to_str()?;
    name.strip_prefix("phi_")?.strip_suffix(".txt")?.parse().ok()
}

fn reduce_table(t: &ModPolyTable, field: &FieldParams) -> Vec<Vec<Fp2>> {
    let n = t.level as usize + 2;
    let p = BigInt::from(field.p());
    let mut dense = vec![vec![Fp2::ZERO; n]; n];
    for (&(i, j), c) in &t.coeffs {
        let r = ((c % &p) + &p) % &p;
        let v = field.from_u64(r.to_u64().expect("reduced below p"));
        dense[i as usize][j as usize] = v;
        dense[j as usize][i as usize] = v;
    }
    dense
}

/// Modular polynomials reduced into a fixed F_{p^2}; the working object for
/// every j-level computation.
#[derive(Clone, Debug)]
pub struct ModularSystem {
    field: FieldParams,
    levels: BTreeMap<u32, Vec<Vec<Fp2>>>,
}

impl ModularSystem {
    /// Shipped tables reduced modulo p.
    pub fn shipped(field: &FieldParams) -> Self {
        ModPolyDb::shipped().reduce(field)
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    pub fn has_level(&self, m: u32) -> bool {
        self.levels.contains_key(&m)
    }

    fn dense(&self, m: u32) -> Result<&Vec<Vec<Fp2>>> {
        self.levels.get(&m).ok_or(Error::MissingLevel(m))
    }

    /// Φ_m(j, Y) as a polynomial in Y of degree m + 1.
    pub fn instantiate(&self, m: u32, j: Fp2) -> Result<Poly> {
        let table = self.dense(m)?;
        let f = &self.field;
        let n = table.len();
        let mut powers = Vec::with_capacity(n);
        let mut acc = Fp2::ONE;
        for _ in 0..n {
            powers.push(acc);
            acc = f.mul(acc, j);
        }
        let coeffs = (0..n)
            .map(|k| {
                (0..n).fold(Fp2::ZERO, |s, i| {
                    let c = table[i][k];
                    if c.is_zero() {
                        s
                    } else {
                        f.add(s, f.mul(c, powers[i]))
                    }
                })
            })
            .collect();
        Ok(Poly::from_coeffs(coeffs))
    }

    /// Φ_m(j1, j2).
    pub fn eval_pair(&self, m: u32, j1: Fp2, j2: Fp2) -> Result<Fp2> {
        Ok(self.instantiate(m, j1)?.eval(&self.field, j2))
    }

    pub fn is_adjacent(&self, m: u32, j1: Fp2, j2: Fp2) -> Result<bool> {
        Ok(self.eval_pair(m, j1, j2)?.is_zero())
    }
}
