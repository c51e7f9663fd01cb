//! Sign patterns, bad 2×2 submatrices, and the combinatorial sign status of
//! `AAᵗ` and of the reaction Jacobian `S v'(x)`.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::kinetics::MassActionSystem;
use crate::matrix::Matrix;
use crate::model::Network;
use crate::random::log_uniform;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignCheckError {
    #[error("species {species} occurs on both sides of reaction {reaction}; sign analysis does not apply")]
    NotReactionForm { species: usize, reaction: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
    Zero,
}

impl Sign {
    pub fn of<T: Scalar>(v: &T) -> Sign {
        if v.is_positive() {
            Sign::Plus
        } else if v.is_negative() {
            Sign::Minus
        } else {
            Sign::Zero
        }
    }

    fn times(self, other: Sign) -> Sign {
        match (self, other) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Plus,
            _ => Sign::Minus,
        }
    }
}

/// Per-entry sign of a symbolic matrix expression over positive variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignStatus {
    Plus,
    Minus,
    Zero,
    Ambiguous,
}

impl SignStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SignStatus::Plus => "+",
            SignStatus::Minus => "-",
            SignStatus::Zero => "0",
            SignStatus::Ambiguous => "?",
        }
    }

    fn from_terms(plus: bool, minus: bool) -> SignStatus {
        match (plus, minus) {
            (true, true) => SignStatus::Ambiguous,
            (true, false) => SignStatus::Plus,
            (false, true) => SignStatus::Minus,
            (false, false) => SignStatus::Zero,
        }
    }
}

impl fmt::Display for SignStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for SignStatus {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignPattern {
    rows: Vec<Vec<Sign>>,
}

impl SignPattern {
    pub fn get(&self, i: usize, j: usize) -> Sign {
        self.rows[i][j]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.rows.first().map_or(0, Vec::len))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct SignStatusMatrix {
    entries: Vec<Vec<SignStatus>>,
}

impl SignStatusMatrix {
    pub fn get(&self, i: usize, j: usize) -> SignStatus {
        self.entries[i][j]
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn ambiguous_entries(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.entries.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                if *s == SignStatus::Ambiguous {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn respects_sign_pattern(&self) -> bool {
        self.ambiguous_entries().is_empty()
    }

    pub fn to_strings(&self) -> Vec<Vec<&'static str>> {
        self.entries
            .iter()
            .map(|r| r.iter().map(|s| s.as_str()).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BadSubmatrix {
    /// Species (row) indices, ascending.
    pub rows: (usize, usize),
    /// Reaction (column) indices, ascending.
    pub cols: (usize, usize),
    /// (row, col) of the single positive entry.
    pub positive_at: (usize, usize),
}

/// Bad submatrices sharing one positive entry of `S`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BadClass {
    pub positive_entry: (usize, usize),
    pub members: Vec<BadSubmatrix>,
}

pub fn sign_pattern<T: Scalar>(m: &Matrix<T>) -> SignPattern {
    SignPattern {
        rows: (0..m.rows())
            .map(|i| m.row(i).iter().map(Sign::of).collect())
            .collect(),
    }
}

/// Status of each entry of `AAᵗ`: `(i, j)` is ambiguous iff some column has
/// equal nonzero signs in rows i and j and another has opposite ones.
pub fn hermitian_square_status(a: &SignPattern) -> SignStatusMatrix {
    let (rows, cols) = a.shape();
    let entries = (0..rows)
        .map(|i| {
            (0..rows)
                .map(|j| {
                    let mut plus = false;
                    let mut minus = false;
                    for k in 0..cols {
                        match a.get(i, k).times(a.get(j, k)) {
                            Sign::Plus => plus = true,
                            Sign::Minus => minus = true,
                            Sign::Zero => {}
                        }
                    }
                    SignStatus::from_terms(plus, minus)
                })
                .collect()
        })
        .collect();
    SignStatusMatrix { entries }
}

/// Every 2×2 submatrix with four nonzero entries of which exactly one is
/// positive, grouped by that positive entry. Classes are ordered by the
/// positive entry's column, then row.
pub fn find_bad_submatrices<T: Scalar>(s: &Matrix<T>) -> Vec<BadClass> {
    let (d, dp) = s.shape();
    let sp = sign_pattern(s);
    let mut classes: BTreeMap<(usize, usize), Vec<BadSubmatrix>> = BTreeMap::new();
    for i in 0..d {
        for j in i + 1..d {
            for k in 0..dp {
                for l in k + 1..dp {
                    let cells = [(i, k), (i, l), (j, k), (j, l)];
                    let signs = cells.map(|(r, c)| sp.get(r, c));
                    if signs.contains(&Sign::Zero) {
                        continue;
                    }
                    let mut pos = cells.iter().zip(signs).filter(|(_, s)| *s == Sign::Plus);
                    let (Some((&at, _)), None) = (pos.next(), pos.next()) else {
                        continue;
                    };
                    classes.entry((at.1, at.0)).or_default().push(BadSubmatrix {
                        rows: (i, j),
                        cols: (k, l),
                        positive_at: at,
                    });
                }
            }
        }
    }
    classes
        .into_iter()
        .map(|((c, r), members)| BadClass {
            positive_entry: (r, c),
            members,
        })
        .collect()
}

/// Jacobian status from the stoichiometric matrix alone, assuming reaction
/// form: term k of entry (i, j) is present iff `S_jk < 0` and carries the sign of `S_ik`.
pub fn jacobian_sign_status_of<T: Scalar>(s: &Matrix<T>) -> SignStatusMatrix {
    let (d, dp) = s.shape();
    let entries = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let mut plus = false;
                    let mut minus = false;
                    for k in 0..dp {
                        if !s[(j, k)].is_negative() {
                            continue;
                        }
                        match Sign::of(&s[(i, k)]) {
                            Sign::Plus => plus = true,
                            Sign::Minus => minus = true,
                            Sign::Zero => {}
                        }
                    }
                    SignStatus::from_terms(plus, minus)
                })
                .collect()
        })
        .collect();
    SignStatusMatrix { entries }
}

/// Sign status of `S v'(x)` valid for every monotone nondecreasing flux in reaction form.
pub fn jacobian_sign_status(net: &Network) -> Result<SignStatusMatrix, SignCheckError> {
    if let Some(v) = net.validate_reaction_form().first() {
        return Err(SignCheckError::NotReactionForm {
            species: v.species,
            reaction: v.reaction,
        });
    }
    let s = net.stoichiometric_matrix();
    let status = jacobian_sign_status_of(&s);
    debug_assert_eq!(
        status.respects_sign_pattern(),
        find_bad_submatrices(&s).is_empty()
    );
    Ok(status)
}

/// Signs seen for each Jacobian entry over random mass-action instances
/// sharing the sign pattern of `S`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledSigns {
    pub samples: usize,
    /// For each entry: (positive seen, negative seen).
    pub observed: Vec<Vec<(bool, bool)>>,
}

impl SampledSigns {
    pub fn both_signs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.observed.iter().enumerate() {
            for (j, &(p, m)) in row.iter().enumerate() {
                if p && m {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Draw `samples` random magnitude assignments (entries of `S`, rates and
/// concentrations, each log-uniform over two decades) and record the sign of
/// every mass-action Jacobian entry.
pub fn sample_jacobian_signs(
    net: &Network,
    samples: usize,
    seed: u64,
) -> Result<SampledSigns, SignCheckError> {
    let status = jacobian_sign_status(net)?;
    let s = net.stoichiometric_matrix();
    let (d, dp) = s.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observed = vec![vec![(false, false); d]; d];
    for _ in 0..samples {
        let mags = log_uniform(&mut rng, d * dp, 0.1, 10.0);
        let sf = Matrix::from_fn(d, dp, |i, j| match Sign::of(&s[(i, j)]) {
            Sign::Plus => mags[i * dp + j],
            Sign::Minus => -mags[i * dp + j],
            Sign::Zero => 0.0,
        });
        let rates = log_uniform(&mut rng, dp, 0.1, 10.0);
        let x = log_uniform(&mut rng, d, 0.1, 10.0);
        let sys = MassActionSystem::from_matrix(sf, rates).expect("positive rates");
        let j = sys.jacobian(&x).expect("positive point");
        let scale = 1e-12 * (1.0 + j.max_abs());
        for (a, row) in observed.iter_mut().enumerate() {
            for (b, seen) in row.iter_mut().enumerate() {
                let v = j[(a, b)];
                if v > scale {
                    seen.0 = true;
                } else if v < -scale {
                    seen.1 = true;
                }
            }
        }
    }
    debug_assert!(status.rows() == d);
    Ok(SampledSigns { samples, observed })
}
