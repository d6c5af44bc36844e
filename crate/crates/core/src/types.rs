//! Domain types shared across the pipeline.

use std::fmt;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};

/// Number of modelled species.
pub const N_SPECIES: usize = 9;

/// Upper bound of the fishing-mortality box `[0, F_MAX]`.
pub const F_MAX: f64 = 2.0;

/// Canonical species keys, in catalog order.
pub const SPECIES: [&str; N_SPECIES] = [
    "sandeel",
    "norway_pout",
    "herring",
    "whiting",
    "sole",
    "plaice",
    "haddock",
    "cod",
    "saithe",
];

/// Index (0-based) of sole, the species one built-in simulator leaves out.
pub const SOLE: usize = 4;

/// Maps free-form species names ("N. pout", "Norway pout", "norway_pout") to
/// the 0-based catalog index.
pub fn species_index(name: &str) -> Option<usize> {
    let key: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    let key = match key.as_str() {
        "npout" | "norwaypout" | "pout" => "norwaypout",
        "sandeels" => "sandeel",
        other => other,
    };
    SPECIES.iter().position(|s| s.replace('_', "") == key)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OutputKind {
    Yield,
    Ssb,
}

impl OutputKind {
    pub const ALL: [OutputKind; 2] = [OutputKind::Yield, OutputKind::Ssb];

    pub fn as_str(self) -> &'static str {
        match self {
            OutputKind::Yield => "yield",
            OutputKind::Ssb => "ssb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yield" | "1" => Some(OutputKind::Yield),
            "ssb" | "2" => Some(OutputKind::Ssb),
            _ => None,
        }
    }

    /// Position in `ALL` (0 for yield, 1 for SSB).
    pub fn index(self) -> usize {
        match self {
            OutputKind::Yield => 0,
            OutputKind::Ssb => 1,
        }
    }
}

impl fmt::Display for OutputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inclusive calendar-year span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct YearRange {
    pub first: i32,
    pub last: i32,
}

impl YearRange {
    pub fn new(first: i32, last: i32) -> Result<Self> {
        if last < first {
            return Err(Error::Parameter(format!(
                "year range {first}..={last} is empty"
            )));
        }
        Ok(Self { first, last })
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.first..=self.last).contains(&year)
    }

    pub fn offset(&self, year: i32) -> Option<usize> {
        self.contains(year).then(|| (year - self.first) as usize)
    }

    pub fn years(&self) -> RangeInclusive<i32> {
        self.first..=self.last
    }
}

/// A vector of fishing mortalities (1/year), one per species, each in `[0, 2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FishingScenario(Vec<f64>);

impl FishingScenario {
    pub fn new(f: Vec<f64>) -> Result<Self> {
        if f.len() != N_SPECIES {
            return Err(Error::Dimension(format!(
                "fishing scenario needs {N_SPECIES} mortalities, got {}",
                f.len()
            )));
        }
        Self::with_len(f)
    }

    /// Scenario of arbitrary species count (used by reduced games).
    pub fn with_len(f: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = f
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=F_MAX).contains(*v)))
        {
            return Err(Error::Domain(format!(
                "F{} = {v} outside [0, {F_MAX}]",
                i + 1
            )));
        }
        Ok(Self(f))
    }

    pub fn uniform(f: f64) -> Result<Self> {
        Self::new(vec![f; N_SPECIES])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for FishingScenario {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Species-by-year matrix of natural-log tonnes.
///
/// Cells are `None` where the species is not modelled or the year is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesSeries {
    kind: OutputKind,
    years: YearRange,
    present: Vec<bool>,
    cells: Vec<Option<f64>>,
}

impl SpeciesSeries {
    /// An all-missing series over `years` for `n_species` species.
    pub fn empty(kind: OutputKind, years: YearRange, n_species: usize) -> Self {
        Self {
            kind,
            years,
            present: vec![true; n_species],
            cells: vec![None; n_species * years.len()],
        }
    }

    pub fn kind(&self) -> OutputKind {
        self.kind
    }

    pub fn years(&self) -> YearRange {
        self.years
    }

    pub fn n_species(&self) -> usize {
        self.present.len()
    }

    pub fn is_present(&self, species: usize) -> bool {
        self.present[species]
    }

    pub fn presence(&self) -> &[bool] {
        &self.present
    }

    /// Marks a species as not modelled and clears its cells.
    pub fn set_absent(&mut self, species: usize) {
        self.present[species] = false;
        let n = self.years.len();
        for c in &mut self.cells[species * n..(species + 1) * n] {
            *c = None;
        }
    }

    pub fn get(&self, species: usize, year: i32) -> Option<f64> {
        let t = self.years.offset(year)?;
        self.cells[species * self.years.len() + t]
    }

    pub fn set(&mut self, species: usize, year: i32, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite value {value} for species {species}, year {year}"
            )));
        }
        if !self.present[species] {
            return Err(Error::Dimension(format!(
                "species {species} is masked out of this series"
            )));
        }
        let t = self
            .years
            .offset(year)
            .ok_or_else(|| Error::Dimension(format!("year {year} outside {:?}", self.years)))?;
        let n = self.years.len();
        self.cells[species * n + t] = Some(value);
        Ok(())
    }

    pub fn clear(&mut self, species: usize, year: i32) {
        if let Some(t) = self.years.offset(year) {
            let n = self.years.len();
            self.cells[species * n + t] = None;
        }
    }

    /// Number of observed cells.
    pub fn count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Restricts the series to a sub-range of years.
    pub fn restrict(&self, years: YearRange) -> Self {
        let mut out = Self {
            kind: self.kind,
            years,
            present: self.present.clone(),
            cells: vec![None; self.present.len() * years.len()],
        };
        for s in 0..self.n_species() {
            for y in years.years() {
                if let Some(v) = self.get(s, y) {
                    let t = years.offset(y).unwrap();
                    out.cells[s * years.len() + t] = Some(v);
                }
            }
        }
        out
    }
}

/// One row of the species catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    /// 1-based catalog index.
    pub index: usize,
    pub name: String,
    pub b_lim_tonnes: f64,
    pub price_per_tonne: f64,
    pub ss_fmsy: Option<f64>,
}

impl CatalogEntry {
    pub fn log_b_lim(&self) -> f64 {
        self.b_lim_tonnes.ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesCatalog {
    entries: Vec<CatalogEntry>,
}

impl SpeciesCatalog {
    /// Validates contiguous 1..=n indices, positive limits and non-negative prices.
    pub fn new(mut entries: Vec<CatalogEntry>) -> Result<Self> {
        entries.sort_by_key(|e| e.index);
        for (k, e) in entries.iter().enumerate() {
            if e.index != k + 1 {
                return Err(Error::Domain(format!(
                    "catalog indices must be contiguous from 1; found {} at position {}",
                    e.index,
                    k + 1
                )));
            }
            if !(e.b_lim_tonnes.is_finite() && e.b_lim_tonnes > 0.0) {
                return Err(Error::Domain(format!(
                    "{}: B_lim must be positive, got {}",
                    e.name, e.b_lim_tonnes
                )));
            }
            if !(e.price_per_tonne.is_finite() && e.price_per_tonne >= 0.0) {
                return Err(Error::Domain(format!(
                    "{}: price must be non-negative, got {}",
                    e.name, e.price_per_tonne
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, species: usize) -> &CatalogEntry {
        &self.entries[species]
    }

    pub fn by_name(&self, name: &str) -> Option<&CatalogEntry> {
        let idx = species_index(name)?;
        self.entries.get(idx)
    }

    /// `ln B_lim` for every species, in catalog order.
    pub fn log_b_lims(&self) -> Vec<f64> {
        self.entries.iter().map(CatalogEntry::log_b_lim).collect()
    }
}
