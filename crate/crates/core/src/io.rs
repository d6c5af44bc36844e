//! CSV readers and writers for the pipeline's file formats.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{
    species_index, CatalogEntry, FishingScenario, OutputKind, SpeciesCatalog, SpeciesSeries,
    YearRange, N_SPECIES, SPECIES,
};

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r)
}

fn check_header(path: &Path, headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    if got.len() != expected.len() || got.iter().zip(expected).any(|(g, e)| g != e) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!(
                "expected header `{}`, got `{}`",
                expected.join(","),
                got.join(",")
            ),
        });
    }
    Ok(())
}

struct Rows<'a> {
    path: &'a Path,
}

impl Rows<'_> {
    fn err(&self, rec: &csv::StringRecord, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: rec.position().map_or(0, |p| p.line()),
            message: message.into(),
        }
    }

    fn field<'r>(&self, rec: &'r csv::StringRecord, i: usize, name: &str) -> Result<&'r str> {
        rec.get(i)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| self.err(rec, format!("missing `{name}`")))
    }

    fn f64(&self, rec: &csv::StringRecord, i: usize, name: &str) -> Result<f64> {
        let s = self.field(rec, i, name)?;
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(rec, format!("`{name}` is not a finite number: `{s}`")))
    }

    fn i32(&self, rec: &csv::StringRecord, i: usize, name: &str) -> Result<i32> {
        let s = self.field(rec, i, name)?;
        s.parse::<i32>()
            .map_err(|_| self.err(rec, format!("`{name}` is not an integer: `{s}`")))
    }

    fn species(&self, rec: &csv::StringRecord, i: usize) -> Result<usize> {
        let s = self.field(rec, i, "species")?;
        species_index(s).ok_or_else(|| self.err(rec, format!("unknown species `{s}`")))
    }
}

fn records<R: Read>(path: &Path, rdr: &mut csv::Reader<R>) -> Result<Vec<csv::StringRecord>> {
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Reads `year,species,tonnes` observations and log-transforms them.
///
/// Rows outside `years` are ignored; cells with no row stay missing.
pub fn load_observations(path: &Path, kind: OutputKind, years: YearRange) -> Result<SpeciesSeries> {
    let file = std::fs::File::open(path)?;
    read_observations(path, file, kind, years)
}

pub fn read_observations<R: Read>(
    path: &Path,
    input: R,
    kind: OutputKind,
    years: YearRange,
) -> Result<SpeciesSeries> {
    let mut rdr = reader(input);
    if rdr.headers().map(|h| h.is_empty()).unwrap_or(true) {
        return Err(Error::NoRecords {
            path: path.to_path_buf(),
        });
    }
    check_header(path, rdr.headers()?, &["year", "species", "tonnes"])?;
    let rows = Rows { path };
    let recs = records(path, &mut rdr)?;
    if recs.is_empty() {
        return Err(Error::NoRecords {
            path: path.to_path_buf(),
        });
    }
    let mut series = SpeciesSeries::empty(kind, years, N_SPECIES);
    for rec in &recs {
        let year = rows.i32(rec, 0, "year")?;
        let species = rows.species(rec, 1)?;
        let tonnes = rows.f64(rec, 2, "tonnes")?;
        if tonnes <= 0.0 {
            return Err(Error::Domain(format!(
                "{}: line {}: non-positive tonnage {tonnes} has no logarithm",
                path.display(),
                rec.position().map_or(0, |p| p.line())
            )));
        }
        if years.contains(year) {
            series.set(species, year, tonnes.ln())?;
        } else {
            log::debug!("{}: skipping year {year} outside {years:?}", path.display());
        }
    }
    Ok(series)
}

/// Reads the `index,species,b_lim_tonnes,price_per_tonne,ss_fmsy` catalog.
pub fn load_catalog(path: &Path) -> Result<SpeciesCatalog> {
    let file = std::fs::File::open(path)?;
    read_catalog(path, file)
}

pub fn read_catalog<R: Read>(path: &Path, input: R) -> Result<SpeciesCatalog> {
    let mut rdr = reader(input);
    check_header(
        path,
        rdr.headers()?,
        &[
            "index",
            "species",
            "b_lim_tonnes",
            "price_per_tonne",
            "ss_fmsy",
        ],
    )?;
    let rows = Rows { path };
    let recs = records(path, &mut rdr)?;
    if recs.is_empty() {
        return Err(Error::NoRecords {
            path: path.to_path_buf(),
        });
    }
    let mut seen = BTreeMap::new();
    let mut entries = Vec::new();
    for rec in &recs {
        let index: usize = rows
            .field(rec, 0, "index")?
            .parse()
            .map_err(|_| rows.err(rec, "`index` is not a positive integer"))?;
        let name = rows.field(rec, 1, "species")?.to_string();
        let canon = rows.species(rec, 1)?;
        if let Some(prev) = seen.insert(canon, index) {
            return Err(rows.err(
                rec,
                format!("duplicate species `{name}` (also index {prev})"),
            ));
        }
        if canon + 1 != index {
            return Err(rows.err(
                rec,
                format!(
                    "species `{name}` must have index {}, got {index}",
                    canon + 1
                ),
            ));
        }
        let b_lim = rows
            .field(rec, 2, "b_lim_tonnes")
            .map_err(|_| rows.err(rec, format!("missing B_lim for `{name}`")))?;
        let b_lim: f64 = b_lim
            .parse()
            .map_err(|_| rows.err(rec, format!("B_lim for `{name}` is not a number")))?;
        let price = rows.f64(rec, 3, "price_per_tonne")?;
        let ss = rows.field(rec, 4, "ss_fmsy")?;
        let ss_fmsy = if ss.eq_ignore_ascii_case("na") {
            None
        } else {
            Some(
                ss.parse::<f64>()
                    .map_err(|_| rows.err(rec, "`ss_fmsy` must be a number or NA"))?,
            )
        };
        entries.push(CatalogEntry {
            index,
            name,
            b_lim_tonnes: b_lim,
            price_per_tonne: price,
            ss_fmsy,
        });
    }
    if entries.len() != N_SPECIES {
        return Err(Error::Domain(format!(
            "{}: catalog needs {N_SPECIES} species, found {}",
            path.display(),
            entries.len()
        )));
    }
    SpeciesCatalog::new(entries)
}

pub fn write_catalog<W: Write>(out: W, catalog: &SpeciesCatalog) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "index",
        "species",
        "b_lim_tonnes",
        "price_per_tonne",
        "ss_fmsy",
    ])?;
    for e in catalog.entries() {
        w.write_record([
            e.index.to_string(),
            e.name.clone(),
            e.b_lim_tonnes.to_string(),
            e.price_per_tonne.to_string(),
            e.ss_fmsy
                .map_or_else(|| "NA".to_string(), |v| v.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes tonnes (exponentiated) in the observation format.
pub fn write_observations<W: Write>(out: W, series: &SpeciesSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["year", "species", "tonnes"])?;
    for year in series.years().years() {
        for s in 0..series.n_species() {
            if let Some(v) = series.get(s, year) {
                w.write_record([
                    year.to_string(),
                    SPECIES[s].to_string(),
                    v.exp().to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Log-tonne series rows, `scenario_id,year,species,log_tonnes`.
///
/// Values are written with shortest round-trip formatting, so reading back
/// reproduces every bit.
pub fn write_log_series<W: Write>(
    w: &mut csv::Writer<W>,
    scenario_id: usize,
    series: &SpeciesSeries,
) -> Result<()> {
    for year in series.years().years() {
        for s in 0..series.n_species() {
            if let Some(v) = series.get(s, year) {
                w.write_record([
                    scenario_id.to_string(),
                    year.to_string(),
                    SPECIES[s].to_string(),
                    v.to_string(),
                ])?;
            }
        }
    }
    Ok(())
}

pub const LOG_SERIES_HEADER: [&str; 4] = ["scenario_id", "year", "species", "log_tonnes"];

/// Reads a log-tonne series file into one series per scenario id.
///
/// Species with no rows at all are marked absent.
pub fn read_log_series<R: Read>(
    path: &Path,
    input: R,
    kind: OutputKind,
    years: YearRange,
) -> Result<BTreeMap<usize, SpeciesSeries>> {
    let mut rdr = reader(input);
    check_header(path, rdr.headers()?, &LOG_SERIES_HEADER)?;
    let rows = Rows { path };
    let mut out: BTreeMap<usize, SpeciesSeries> = BTreeMap::new();
    for rec in &records(path, &mut rdr)? {
        let id: usize = rows
            .field(rec, 0, "scenario_id")?
            .parse()
            .map_err(|_| rows.err(rec, "`scenario_id` is not a non-negative integer"))?;
        let year = rows.i32(rec, 1, "year")?;
        let species = rows.species(rec, 2)?;
        let v = rows.f64(rec, 3, "log_tonnes")?;
        let series = out
            .entry(id)
            .or_insert_with(|| SpeciesSeries::empty(kind, years, N_SPECIES));
        if years.contains(year) {
            series.set(species, year, v)?;
        }
    }
    for series in out.values_mut() {
        for s in 0..N_SPECIES {
            if years.years().all(|y| series.get(s, y).is_none()) {
                series.set_absent(s);
            }
        }
    }
    Ok(out)
}

/// Scenario batch, `scenario_id,F1,...,F9`.
pub fn read_scenarios<R: Read>(path: &Path, input: R) -> Result<Vec<(usize, FishingScenario)>> {
    let mut rdr = reader(input);
    let mut expected = vec!["scenario_id".to_string()];
    expected.extend((1..=N_SPECIES).map(|i| format!("f{i}")));
    let exp: Vec<&str> = expected.iter().map(String::as_str).collect();
    check_header(path, rdr.headers()?, &exp)?;
    let rows = Rows { path };
    let mut out = Vec::new();
    for rec in &records(path, &mut rdr)? {
        let id_s = rows.field(rec, 0, "scenario_id")?;
        let id: usize = id_s
            .parse()
            .map_err(|_| rows.err(rec, "`scenario_id` is not a non-negative integer"))?;
        let f = (0..N_SPECIES)
            .map(|i| rows.f64(rec, i + 1, &format!("F{}", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        let scenario =
            FishingScenario::new(f).map_err(|e| rows.err(rec, format!("scenario {id}: {e}")))?;
        out.push((id, scenario));
    }
    Ok(out)
}

pub fn load_scenarios(path: &Path) -> Result<Vec<(usize, FishingScenario)>> {
    read_scenarios(path, std::fs::File::open(path)?)
}

pub fn write_scenarios<W: Write>(out: W, scenarios: &[(usize, FishingScenario)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["scenario_id".to_string()];
    header.extend((1..=N_SPECIES).map(|i| format!("F{i}")));
    w.write_record(&header)?;
    for (id, s) in scenarios {
        let mut row = vec![id.to_string()];
        row.extend(s.as_slice().iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Historical fishing mortality, `year,species,f`, as a year-major table.
#[derive(Debug, Clone, PartialEq)]
pub struct FishingHistory {
    pub years: YearRange,
    /// `f[t][species]`
    pub f: Vec<Vec<f64>>,
}

impl FishingHistory {
    pub fn constant(years: YearRange, f: &[f64]) -> Self {
        Self {
            years,
            f: vec![f.to_vec(); years.len()],
        }
    }

    pub fn at(&self, year: i32) -> Option<&[f64]> {
        self.years.offset(year).map(|t| self.f[t].as_slice())
    }
}

pub fn read_history<R: Read>(path: &Path, input: R, years: YearRange) -> Result<FishingHistory> {
    let mut rdr = reader(input);
    check_header(path, rdr.headers()?, &["year", "species", "f"])?;
    let rows = Rows { path };
    let mut f = vec![vec![f64::NAN; N_SPECIES]; years.len()];
    for rec in &records(path, &mut rdr)? {
        let year = rows.i32(rec, 0, "year")?;
        let s = rows.species(rec, 1)?;
        let v = rows.f64(rec, 2, "f")?;
        if v < 0.0 {
            return Err(Error::Domain(format!(
                "{}: negative fishing mortality {v} in {year}",
                path.display()
            )));
        }
        if let Some(t) = years.offset(year) {
            f[t][s] = v;
        }
    }
    for (t, row) in f.iter().enumerate() {
        if let Some(s) = row.iter().position(|v| v.is_nan()) {
            return Err(Error::Domain(format!(
                "{}: history lacks {} in {}",
                path.display(),
                SPECIES[s],
                years.first + t as i32
            )));
        }
    }
    Ok(FishingHistory { years, f })
}

pub fn load_history(path: &Path, years: YearRange) -> Result<FishingHistory> {
    read_history(path, std::fs::File::open(path)?, years)
}

pub fn write_history<W: Write>(out: W, history: &FishingHistory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["year", "species", "f"])?;
    for (t, row) in history.f.iter().enumerate() {
        for (s, v) in row.iter().enumerate() {
            w.write_record([
                (history.years.first + t as i32).to_string(),
                SPECIES[s].to_string(),
                v.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Annual prices, `year,species,price_per_tonne`; one series per species.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub first_year: i32,
    /// `series[species][t]`
    pub series: Vec<Vec<f64>>,
}

pub const PRICE_HEADER: [&str; 3] = ["year", "species", "price_per_tonne"];

pub fn read_prices<R: Read>(path: &Path, input: R) -> Result<PriceTable> {
    let mut rdr = reader(input);
    check_header(path, rdr.headers()?, &PRICE_HEADER)?;
    let rows = Rows { path };
    let recs = records(path, &mut rdr)?;
    if recs.is_empty() {
        return Err(Error::NoRecords {
            path: path.to_path_buf(),
        });
    }
    let mut by_species: Vec<BTreeMap<i32, f64>> = vec![BTreeMap::new(); N_SPECIES];
    for rec in &recs {
        let year = rows.i32(rec, 0, "year")?;
        let s = rows.species(rec, 1)?;
        let p = rows.f64(rec, 2, "price_per_tonne")?;
        if p < 0.0 {
            return Err(rows.err(rec, "negative price"));
        }
        by_species[s].insert(year, p);
    }
    let first = by_species
        .iter()
        .filter_map(|m| m.keys().next().copied())
        .min()
        .unwrap();
    let mut series = Vec::with_capacity(N_SPECIES);
    for (s, m) in by_species.iter().enumerate() {
        let Some((&lo, _)) = m.iter().next() else {
            return Err(Error::Domain(format!(
                "{}: no prices for {}",
                path.display(),
                SPECIES[s]
            )));
        };
        let hi = *m.keys().next_back().unwrap();
        if lo != first || (hi - lo + 1) as usize != m.len() {
            return Err(Error::Domain(format!(
                "{}: prices for {} must be annual and start in {first}",
                path.display(),
                SPECIES[s]
            )));
        }
        series.push(m.values().copied().collect());
    }
    Ok(PriceTable {
        first_year: first,
        series,
    })
}

pub fn load_prices(path: &Path) -> Result<PriceTable> {
    read_prices(path, std::fs::File::open(path)?)
}

pub fn write_prices<W: Write>(out: W, table: &PriceTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PRICE_HEADER)?;
    let n = table.series.iter().map(Vec::len).max().unwrap_or(0);
    for t in 0..n {
        for (s, xs) in table.series.iter().enumerate() {
            if let Some(p) = xs.get(t) {
                w.write_record([
                    (table.first_year + t as i32).to_string(),
                    SPECIES[s].to_string(),
                    p.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
