//! Species, complexes, reactions and networks, plus their exact stoichiometry.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::{Rational, RationalMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid species name `{0}`")]
    InvalidName(String),
    #[error("species `{0}` declared twice")]
    DuplicateSpecies(String),
    #[error("species `{0}` is not used by any reaction")]
    UnreferencedSpecies(String),
    #[error("coefficient of `{species}` must be positive, got {value}")]
    NonPositiveCoefficient { species: String, value: Rational },
    #[error("reaction {reaction} has identical reactant and product complexes")]
    IdenticalSides { reaction: usize },
    #[error("species `{species}` occurs on both sides of reaction {reaction}")]
    ReactionForm { species: String, reaction: usize },
    #[error("rate constant must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("network has no reactions")]
    Empty,
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
    #[error("species order must list every species exactly once")]
    BadOrder,
}

/// `[A-Za-z_][A-Za-z0-9_']*`
pub fn is_valid_species_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

#[derive(Debug, Clone)]
pub struct Species {
    pub name: String,
    pub index: usize,
    /// Set for species introduced by sign fixing: the species whose production was split off.
    pub origin: Option<usize>,
}

impl PartialEq for Species {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.index == other.index
    }
}

/// A formal combination of species with strictly positive coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Complex {
    terms: BTreeMap<usize, Rational>,
}

impl Complex {
    pub fn zero() -> Self {
        Complex::default()
    }

    /// Repeated species are summed.
    pub fn from_terms(
        terms: impl IntoIterator<Item = (usize, Rational)>,
    ) -> Result<Self, (usize, Rational)> {
        let mut map: BTreeMap<usize, Rational> = BTreeMap::new();
        for (s, c) in terms {
            if !c.is_positive() {
                return Err((s, c));
            }
            *map.entry(s).or_insert_with(Rational::zero) += c;
        }
        Ok(Complex { terms: map })
    }

    pub fn single(species: usize, coeff: Rational) -> Self {
        Complex::from_terms([(species, coeff)]).expect("positive coefficient")
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, species: usize) -> Rational {
        self.terms.get(&species).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn contains(&self, species: usize) -> bool {
        self.terms.contains_key(&species)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &Rational)> {
        self.terms.iter().map(|(&s, c)| (s, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn without(&self, species: usize) -> Complex {
        let mut c = self.clone();
        c.terms.remove(&species);
        c
    }

    pub(crate) fn with_term(&self, species: usize, coeff: Rational) -> Complex {
        let mut c = self.clone();
        *c.terms.entry(species).or_insert_with(Rational::zero) += coeff;
        c
    }

    pub(crate) fn remap(&self, map: &[usize]) -> Complex {
        Complex {
            terms: self.terms.iter().map(|(&s, c)| (map[s], c.clone())).collect(),
        }
    }

    /// Human-readable form such as `3B+C` or `0`.
    pub fn display<'a>(&'a self, species: &'a [Species]) -> ComplexDisplay<'a> {
        ComplexDisplay {
            complex: self,
            species,
            spaced: false,
        }
    }

    pub(crate) fn display_spaced<'a>(&'a self, species: &'a [Species]) -> ComplexDisplay<'a> {
        ComplexDisplay {
            complex: self,
            species,
            spaced: true,
        }
    }
}

pub struct ComplexDisplay<'a> {
    complex: &'a Complex,
    species: &'a [Species],
    spaced: bool,
}

impl fmt::Display for ComplexDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.complex.is_zero() {
            return write!(f, "0");
        }
        for (n, (s, c)) in self.complex.terms().enumerate() {
            if n > 0 {
                write!(f, "{}", if self.spaced { " + " } else { "+" })?;
            }
            if !c.is_one() {
                write!(f, "{}", c)?;
                if self.spaced {
                    write!(f, " ")?;
                }
            }
            write!(f, "{}", self.species[s].name)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub reactant: Complex,
    pub product: Complex,
    pub rate: Option<f64>,
    pub label: Option<String>,
}

/// A (species, reaction) pair where the species sits on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReactionFormViolation {
    pub species: usize,
    pub reaction: usize,
}

/// Immutable chemical reaction network. Species and reaction order define
/// row and column order of every derived matrix.
#[derive(Debug, Clone)]
pub struct Network {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
    /// (forward, reverse) reaction indices of reversible input reactions.
    reversible_pairs: Vec<(usize, usize)>,
    permissive: bool,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.species == other.species
            && self.reactions == other.reactions
            && self.reversible_pairs == other.reversible_pairs
    }
}

impl Network {
    pub fn builder() -> NetworkBuilder {
        NetworkBuilder::default()
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn reaction_count(&self) -> usize {
        self.reactions.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn species_names(&self) -> Vec<String> {
        self.species.iter().map(|s| s.name.clone()).collect()
    }

    pub fn reversible_pairs(&self) -> &[(usize, usize)] {
        &self.reversible_pairs
    }

    /// Built with the permissive flag: reaction-form violations were stored
    /// instead of rejected.
    pub fn is_permissive(&self) -> bool {
        self.permissive
    }

    /// Rate constants, if every reaction carries one.
    pub fn rates(&self) -> Option<Vec<f64>> {
        self.reactions.iter().map(|r| r.rate).collect()
    }

    pub fn with_rates(&self, rates: &[f64]) -> Result<Network, ModelError> {
        assert_eq!(rates.len(), self.reactions.len(), "one rate per reaction");
        let mut out = self.clone();
        for (r, &k) in out.reactions.iter_mut().zip(rates) {
            if !(k.is_finite() && k > 0.0) {
                return Err(ModelError::InvalidRate(k));
            }
            r.rate = Some(k);
        }
        Ok(out)
    }

    /// Entry (i, j) is the product minus reactant coefficient of species i in reaction j.
    pub fn stoichiometric_matrix(&self) -> RationalMatrix {
        let mut s = RationalMatrix::zeros(self.species.len(), self.reactions.len());
        for (j, r) in self.reactions.iter().enumerate() {
            for (i, c) in r.product.terms() {
                s[(i, j)] += c;
            }
            for (i, c) in r.reactant.terms() {
                s[(i, j)] -= c;
            }
        }
        s
    }

    /// Every species that appears on both sides of one reaction.
    pub fn validate_reaction_form(&self) -> Vec<ReactionFormViolation> {
        let mut out = Vec::new();
        for (j, r) in self.reactions.iter().enumerate() {
            for (i, _) in r.reactant.terms() {
                if r.product.contains(i) {
                    out.push(ReactionFormViolation {
                        species: i,
                        reaction: j,
                    });
                }
            }
        }
        out
    }

    pub fn is_reaction_form(&self) -> bool {
        self.validate_reaction_form().is_empty()
    }

    /// Same network with rows permuted into the given species order.
    pub fn reorder_species<S: AsRef<str>>(&self, order: &[S]) -> Result<Network, ModelError> {
        if order.len() != self.species.len() {
            return Err(ModelError::BadOrder);
        }
        let mut map = vec![usize::MAX; self.species.len()];
        for (new, name) in order.iter().enumerate() {
            let old = self
                .species_index(name.as_ref())
                .ok_or_else(|| ModelError::UnknownSpecies(name.as_ref().to_string()))?;
            if map[old] != usize::MAX {
                return Err(ModelError::BadOrder);
            }
            map[old] = new;
        }
        let mut species: Vec<Species> = self.species.clone();
        species.sort_by_key(|s| map[s.index]);
        for (i, s) in species.iter_mut().enumerate() {
            s.index = i;
            s.origin = s.origin.map(|o| map[o]);
        }
        let reactions = self
            .reactions
            .iter()
            .map(|r| Reaction {
                reactant: r.reactant.remap(&map),
                product: r.product.remap(&map),
                rate: r.rate,
                label: r.label.clone(),
            })
            .collect();
        Ok(Network {
            species,
            reactions,
            reversible_pairs: self.reversible_pairs.clone(),
            permissive: self.permissive,
        })
    }

    /// Species sorted by name.
    pub fn sorted_species(&self) -> Network {
        let mut names = self.species_names();
        names.sort();
        self.reorder_species(&names).expect("permutation of own species")
    }

    /// Network whose reaction j consumes the negative part and produces the
    /// positive part of column j. Species are named `X1..Xd` unless names are given.
    pub fn from_stoichiometry(
        s: &RationalMatrix,
        names: Option<&[&str]>,
    ) -> Result<Network, ModelError> {
        let mut b = Network::builder();
        let names: Vec<String> = match names {
            Some(n) => n.iter().map(|s| s.to_string()).collect(),
            None => (1..=s.rows()).map(|i| format!("X{i}")).collect(),
        };
        if names.len() != s.rows() {
            return Err(ModelError::BadOrder);
        }
        b.declare_species(&names)?;
        for j in 0..s.cols() {
            let mut reactant = Vec::new();
            let mut product = Vec::new();
            for (i, name) in names.iter().enumerate() {
                let v = &s[(i, j)];
                if v.is_negative() {
                    reactant.push((name.clone(), -v.clone()));
                } else if v.is_positive() {
                    product.push((name.clone(), v.clone()));
                }
            }
            b.add_reaction(&reactant, &product, None, None)?;
        }
        b.build()
    }

    /// Union of two networks with disjoint species; `other`'s species get `suffix` appended.
    pub fn disjoint_union(&self, other: &Network, suffix: &str) -> Result<Network, ModelError> {
        let mut species = self.species.clone();
        let offset = species.len();
        for s in &other.species {
            let name = format!("{}{}", s.name, suffix);
            if species.iter().any(|t| t.name == name) {
                return Err(ModelError::DuplicateSpecies(name));
            }
            species.push(Species {
                name,
                index: s.index + offset,
                origin: s.origin.map(|o| o + offset),
            });
        }
        let map: Vec<usize> = (offset..offset + other.species.len()).collect();
        let roff = self.reactions.len();
        let mut reactions = self.reactions.clone();
        reactions.extend(other.reactions.iter().map(|r| Reaction {
            reactant: r.reactant.remap(&map),
            product: r.product.remap(&map),
            rate: r.rate,
            label: r.label.clone(),
        }));
        let mut pairs = self.reversible_pairs.clone();
        pairs.extend(other.reversible_pairs.iter().map(|&(a, b)| (a + roff, b + roff)));
        Ok(Network {
            species,
            reactions,
            reversible_pairs: pairs,
            permissive: self.permissive || other.permissive,
        })
    }

    pub fn reaction_display(&self, j: usize) -> String {
        let r = &self.reactions[j];
        format!(
            "{} -> {}",
            r.reactant.display(&self.species),
            r.product.display(&self.species)
        )
    }

    pub(crate) fn from_parts(
        species: Vec<Species>,
        reactions: Vec<Reaction>,
        reversible_pairs: Vec<(usize, usize)>,
        permissive: bool,
    ) -> Network {
        Network {
            species,
            reactions,
            reversible_pairs,
            permissive,
        }
    }
}

/// Incremental construction of a [`Network`]; species order is order of first mention.
#[derive(Debug, Default, Clone)]
pub struct NetworkBuilder {
    species: Vec<Species>,
    by_name: HashMap<String, usize>,
    reactions: Vec<Reaction>,
    pairs: Vec<(usize, usize)>,
    permissive: bool,
}

impl NetworkBuilder {
    /// Store reactions whose sides share species instead of rejecting them.
    pub fn permissive(mut self, yes: bool) -> Self {
        self.permissive = yes;
        self
    }

    pub fn set_permissive(&mut self, yes: bool) {
        self.permissive = yes;
    }

    pub fn species_id(&mut self, name: &str) -> Result<usize, ModelError> {
        if let Some(&i) = self.by_name.get(name) {
            return Ok(i);
        }
        if !is_valid_species_name(name) {
            return Err(ModelError::InvalidName(name.to_string()));
        }
        let i = self.species.len();
        self.species.push(Species {
            name: name.to_string(),
            index: i,
            origin: None,
        });
        self.by_name.insert(name.to_string(), i);
        Ok(i)
    }

    /// Fix the leading part of the species order up front.
    pub fn declare_species<S: AsRef<str>>(&mut self, names: &[S]) -> Result<(), ModelError> {
        for n in names {
            if self.by_name.contains_key(n.as_ref()) {
                return Err(ModelError::DuplicateSpecies(n.as_ref().to_string()));
            }
            self.species_id(n.as_ref())?;
        }
        Ok(())
    }

    fn complex<S: AsRef<str>>(&mut self, terms: &[(S, Rational)]) -> Result<Complex, ModelError> {
        let mut ids = Vec::with_capacity(terms.len());
        for (name, c) in terms {
            let id = self.species_id(name.as_ref())?;
            ids.push((id, c.clone()));
        }
        Complex::from_terms(ids).map_err(|(s, value)| ModelError::NonPositiveCoefficient {
            species: self.species[s].name.clone(),
            value,
        })
    }

    pub fn add_reaction<S: AsRef<str>>(
        &mut self,
        reactant: &[(S, Rational)],
        product: &[(S, Rational)],
        rate: Option<f64>,
        label: Option<String>,
    ) -> Result<usize, ModelError> {
        let reactant = self.complex(reactant)?;
        let product = self.complex(product)?;
        self.push(reactant, product, rate, label)
    }

    /// Stored as forward then reverse; returns both indices.
    pub fn add_reversible<S: AsRef<str>>(
        &mut self,
        left: &[(S, Rational)],
        right: &[(S, Rational)],
        rates: Option<(f64, f64)>,
        label: Option<String>,
    ) -> Result<(usize, usize), ModelError> {
        let l = self.complex(left)?;
        let r = self.complex(right)?;
        let f = self.push(l.clone(), r.clone(), rates.map(|p| p.0), label.clone())?;
        let b = self.push(r, l, rates.map(|p| p.1), label)?;
        self.pairs.push((f, b));
        Ok((f, b))
    }

    /// Integer-coefficient shorthand, mainly for tests: `("A", 2)`.
    pub fn reaction(
        &mut self,
        reactant: &[(&str, i64)],
        product: &[(&str, i64)],
    ) -> Result<usize, ModelError> {
        let conv = |v: &[(&str, i64)]| -> Vec<(String, Rational)> {
            v.iter()
                .map(|&(n, c)| (n.to_string(), Rational::from_integer(c.into())))
                .collect()
        };
        self.add_reaction(&conv(reactant), &conv(product), None, None)
    }

    fn push(
        &mut self,
        reactant: Complex,
        product: Complex,
        rate: Option<f64>,
        label: Option<String>,
    ) -> Result<usize, ModelError> {
        let j = self.reactions.len();
        if reactant == product {
            return Err(ModelError::IdenticalSides { reaction: j });
        }
        if let Some(k) = rate {
            if !(k.is_finite() && k > 0.0) {
                return Err(ModelError::InvalidRate(k));
            }
        }
        if !self.permissive {
            if let Some((s, _)) = reactant.terms().find(|(s, _)| product.contains(*s)) {
                return Err(ModelError::ReactionForm {
                    species: self.species[s].name.clone(),
                    reaction: j,
                });
            }
        }
        self.reactions.push(Reaction {
            reactant,
            product,
            rate,
            label,
        });
        Ok(j)
    }

    pub fn reaction_count(&self) -> usize {
        self.reactions.len()
    }

    pub fn build(self) -> Result<Network, ModelError> {
        if self.reactions.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut used = vec![false; self.species.len()];
        for r in &self.reactions {
            for (s, _) in r.reactant.terms().chain(r.product.terms()) {
                used[s] = true;
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(ModelError::UnreferencedSpecies(self.species[i].name.clone()));
        }
        Ok(Network {
            species: self.species,
            reactions: self.reactions,
            reversible_pairs: self.pairs,
            permissive: self.permissive,
        })
    }
}

pub(crate) fn rational_int(v: i64) -> Rational {
    Rational::from_integer(v.into())
}
