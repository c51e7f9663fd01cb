//! Sign fixing: split the production of a species through a fresh
//! intermediate so that a bad class disappears, repeated until none remain.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exactla::{is_conserving, kernel_basis, Side};
use crate::model::{Complex, Network, Reaction, Species};
use crate::signcheck::{find_bad_submatrices, BadClass};
use crate::{Rational, RationalMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignFixError {
    #[error("species {species} occurs on both sides of reaction {reaction}")]
    NotReactionForm { species: usize, reaction: usize },
    #[error("no current bad class has its positive entry at ({row}, {col})")]
    StaleClass { row: usize, col: usize },
    #[error("invalid class order: {0}")]
    BadOrder(String),
    #[error("rate constant must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("expected {expected} rates for the added reactions, got {got}")]
    RateCount { expected: usize, got: usize },
    #[error("reports do not fix the same network")]
    DifferentOriginals,
    #[error("no permutation relates the two sign-fixed matrices")]
    NoPermutation,
    #[error("bad class count did not decrease after fixing ({row}, {col})")]
    NotDecreasing { row: usize, col: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixStep {
    pub target_class: BadClass,
    /// Reaction ℓ whose product loses its `p₂B` term.
    pub modified_column: usize,
    /// Species q = B.
    pub zeroed_species: usize,
    /// p₂ = S[q, ℓ] before the step.
    pub zeroed_value: Rational,
    pub added_species: String,
    pub added_species_index: usize,
    pub added_reaction_index: usize,
    pub added_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixReport {
    pub steps: Vec<FixStep>,
    /// Indices into `classes`, in the order they were fixed.
    pub order: Vec<usize>,
    /// Bad classes of the original network.
    pub classes: Vec<BadClass>,
    /// Network before step 0, after step 0, ..., after the last step.
    pub stages: Vec<Network>,
}

impl FixReport {
    pub fn original(&self) -> &Network {
        &self.stages[0]
    }

    pub fn result(&self) -> &Network {
        self.stages.last().expect("at least the original stage")
    }

    pub fn is_identity(&self) -> bool {
        self.steps.is_empty()
    }

    /// Rates of `stage(i)` given the original network's rates.
    pub fn stage_rates(&self, original_rates: &[f64], stage: usize) -> Vec<f64> {
        let mut r = original_rates.to_vec();
        r.extend(self.steps[..stage].iter().map(|s| s.added_rate));
        r
    }

    pub fn result_rates(&self, original_rates: &[f64]) -> Vec<f64> {
        self.stage_rates(original_rates, self.steps.len())
    }
}

fn check_rate(k: f64) -> Result<(), SignFixError> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(SignFixError::InvalidRate(k))
    }
}

fn check_reaction_form(net: &Network) -> Result<(), SignFixError> {
    match net.validate_reaction_form().first() {
        Some(v) => Err(SignFixError::NotReactionForm {
            species: v.species,
            reaction: v.reaction,
        }),
        None => Ok(()),
    }
}

/// `B'`, `B''`, ... by how often B was split before; `B_fix<i>` on collision.
fn added_name(net: &Network, base: usize, primes: usize, step_no: usize) -> String {
    let base = &net.species()[base].name;
    let primed = format!("{base}{}", "'".repeat(primes));
    if net.species_index(&primed).is_none() {
        return primed;
    }
    let mut i = step_no;
    loop {
        let name = format!("{base}_fix{i}");
        if net.species_index(&name).is_none() {
            return name;
        }
        i += 1;
    }
}

fn apply_step(
    net: &Network,
    cls: &BadClass,
    rate: f64,
    name: String,
) -> Result<(Network, FixStep), SignFixError> {
    check_rate(rate)?;
    check_reaction_form(net)?;
    let (q, l) = cls.positive_entry;
    let current = find_bad_submatrices(&net.stoichiometric_matrix());
    if !current.iter().any(|c| c.positive_entry == (q, l)) {
        return Err(SignFixError::StaleClass { row: q, col: l });
    }
    let p2 = net.reactions()[l].product.coefficient(q);
    let d = net.species_count();
    let dp = net.reaction_count();

    let mut species = net.species().to_vec();
    species.push(Species {
        name: name.clone(),
        index: d,
        origin: Some(q),
    });
    let mut reactions = net.reactions().to_vec();
    reactions[l].product = reactions[l].product.without(q).with_term(d, Rational::one());
    reactions.push(Reaction {
        reactant: Complex::single(d, Rational::one()),
        product: Complex::single(q, p2.clone()),
        rate: Some(rate),
        label: None,
    });
    let pairs = net
        .reversible_pairs()
        .iter()
        .copied()
        .filter(|&(f, b)| f != l && b != l)
        .collect();
    let out = Network::from_parts(species, reactions, pairs, net.is_permissive());
    let step = FixStep {
        target_class: cls.clone(),
        modified_column: l,
        zeroed_species: q,
        zeroed_value: p2,
        added_species: name,
        added_species_index: d,
        added_reaction_index: dp,
        added_rate: rate,
    };
    Ok((out, step))
}

/// One step of the algorithm on class `cls`; the added reaction `B' → p₂B` gets rate `rate`.
pub fn fix_one(net: &Network, cls: &BadClass, rate: f64) -> Result<(Network, FixStep), SignFixError> {
    let (q, l) = cls.positive_entry;
    if q >= net.species_count() || l >= net.reaction_count() {
        return Err(SignFixError::StaleClass { row: q, col: l });
    }
    let primes = 1 + net.species().iter().filter(|s| s.origin == Some(q)).count();
    let name = added_name(net, q, primes, 1);
    apply_step(net, cls, rate, name)
}

/// Report for a single step on the class with index `class` in the
/// original class list, leaving the other classes in place.
pub fn single_step_report(net: &Network, class: usize, rate: f64) -> Result<FixReport, SignFixError> {
    let classes = find_bad_submatrices(&net.stoichiometric_matrix());
    let Some(target) = classes.get(class) else {
        return Err(SignFixError::BadOrder(format!(
            "class {class} out of range 0..{}",
            classes.len()
        )));
    };
    let (next, step) = fix_one(net, target, rate)?;
    Ok(FixReport {
        steps: vec![step],
        order: vec![class],
        stages: vec![net.clone(), next],
        classes,
    })
}

/// Fix every bad class with the same added rate.
pub fn sign_fix(net: &Network, order: Option<&[usize]>, rate: f64) -> Result<FixReport, SignFixError> {
    check_rate(rate)?;
    let n = find_bad_submatrices(&net.stoichiometric_matrix()).len();
    sign_fix_with_rates(net, order, &vec![rate; n])
}

/// Fix every bad class; `order[i]` is the index (into the original class
/// list) of the class fixed at step i and `rates[i]` that step's added rate.
pub fn sign_fix_with_rates(
    net: &Network,
    order: Option<&[usize]>,
    rates: &[f64],
) -> Result<FixReport, SignFixError> {
    check_reaction_form(net)?;
    let classes = find_bad_submatrices(&net.stoichiometric_matrix());
    let n = classes.len();
    let order: Vec<usize> = match order {
        Some(o) => o.to_vec(),
        None => (0..n).collect(),
    };
    let mut sorted = order.clone();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(SignFixError::BadOrder(format!(
            "expected a permutation of 0..{n}, got {order:?}"
        )));
    }
    if rates.len() != n {
        return Err(SignFixError::RateCount {
            expected: n,
            got: rates.len(),
        });
    }
    let mut stages = vec![net.clone()];
    let mut steps: Vec<FixStep> = Vec::with_capacity(n);
    let mut remaining = n;
    for (i, (&c, &k)) in order.iter().zip(rates).enumerate() {
        let cur = stages.last().expect("nonempty");
        let target = &classes[c];
        let q = target.positive_entry.0;
        let primes = 1 + steps.iter().filter(|s| s.zeroed_species == q).count();
        let name = added_name(cur, q, primes, i + 1);
        let (next, step) = apply_step(cur, target, k, name)?;
        let left = find_bad_submatrices(&next.stoichiometric_matrix()).len();
        if left >= remaining {
            return Err(SignFixError::NotDecreasing {
                row: q,
                col: target.positive_entry.1,
            });
        }
        remaining = left;
        stages.push(next);
        steps.push(step);
    }
    debug_assert_eq!(remaining, 0);
    Ok(FixReport {
        steps,
        order,
        classes,
        stages,
    })
}

/// The permutation `P` with `Ŝ_a = diag(I, P) Ŝ_b diag(I, P)ᵗ`, checked by exact multiplication.
pub fn verify_permutation_relation(
    a: &FixReport,
    b: &FixReport,
) -> Result<RationalMatrix, SignFixError> {
    let s0 = a.original().stoichiometric_matrix();
    if s0 != b.original().stoichiometric_matrix() || a.classes != b.classes {
        return Err(SignFixError::DifferentOriginals);
    }
    let n = a.steps.len();
    if n != b.steps.len() {
        return Err(SignFixError::NoPermutation);
    }
    let (d, dp) = s0.shape();
    let sa = a.result().stoichiometric_matrix();
    let sb = b.result().stoichiometric_matrix();
    if n == 0 {
        return if sa == sb {
            Ok(RationalMatrix::identity(1))
        } else {
            Err(SignFixError::NoPermutation)
        };
    }
    let mut p = RationalMatrix::zeros(n, n);
    for (i, ci) in a.order.iter().enumerate() {
        let j = b
            .order
            .iter()
            .position(|cj| cj == ci)
            .ok_or(SignFixError::NoPermutation)?;
        p[(i, j)] = Rational::one();
    }
    let left = RationalMatrix::identity(d).block_diag(&p);
    let right = RationalMatrix::identity(dp).block_diag(&p);
    if left.matmul(&sb).matmul(&right.transpose()) == sa {
        Ok(p)
    } else {
        Err(SignFixError::NoPermutation)
    }
}

/// Single-step construction that removes every bad class at once with one
/// extra row and column. It does not preserve kernel dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct AltFix {
    pub s: RationalMatrix,
    pub s_tilde: RationalMatrix,
    /// Positive entries moved into the new column.
    pub moved: Vec<(usize, usize)>,
    /// No bad classes: the border is all zero.
    pub degenerate: bool,
    pub dim_ker_s: usize,
    pub dim_ker_s_tilde: usize,
    pub dim_left_ker_s: usize,
    pub dim_left_ker_s_tilde: usize,
    pub s_conserving: bool,
    pub s_tilde_conserving: bool,
}

impl AltFix {
    pub fn kernel_dims_preserved(&self) -> bool {
        self.dim_ker_s == self.dim_ker_s_tilde && self.dim_left_ker_s == self.dim_left_ker_s_tilde
    }
}

pub fn altfix_matrix(s: &RationalMatrix) -> AltFix {
    let (d, dp) = s.shape();
    let classes = find_bad_submatrices(s);
    let mut t = RationalMatrix::zeros(d + 1, dp + 1);
    for i in 0..d {
        for j in 0..dp {
            t[(i, j)] = s[(i, j)].clone();
        }
    }
    let mut moved = Vec::new();
    for c in &classes {
        let (p, l) = c.positive_entry;
        let v = std::mem::replace(&mut t[(p, l)], Rational::zero());
        t[(d, l)] = Rational::one();
        t[(p, dp)] += v;
        moved.push((p, l));
    }
    let row_sum: Rational = (0..dp).map(|j| t[(d, j)].clone()).sum();
    t[(d, dp)] = -row_sum;
    AltFix {
        dim_ker_s: kernel_basis(s, Side::Right).dim(),
        dim_ker_s_tilde: kernel_basis(&t, Side::Right).dim(),
        dim_left_ker_s: kernel_basis(s, Side::Left).dim(),
        dim_left_ker_s_tilde: kernel_basis(&t, Side::Left).dim(),
        s_conserving: is_conserving(s).conserving,
        s_tilde_conserving: is_conserving(&t).conserving,
        degenerate: classes.is_empty(),
        s: s.clone(),
        s_tilde: t,
        moved,
    }
}

pub fn altfix(net: &Network) -> AltFix {
    altfix_matrix(&net.stoichiometric_matrix())
}
