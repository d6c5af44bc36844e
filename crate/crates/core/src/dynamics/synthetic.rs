//! The bundled synthetic dataset: fishing history, catalog, observations and
//! prices generated from a hidden operating model.
//!
//! Prices and single-species F_MSY values are the published North Sea figures;
//! B_lim values are synthetic (about 20% of the hidden model's unfished SSB).

use rand_distr::{Distribution, Normal};

use super::{run_scenario, truth_model, SimulatorPort};
use crate::error::Result;
use crate::io::{FishingHistory, PriceTable};
use crate::seeds;
use crate::types::{
    CatalogEntry, OutputKind, SpeciesCatalog, SpeciesSeries, YearRange, N_SPECIES, SPECIES,
};

pub const HISTORY_YEARS: YearRange = YearRange {
    first: 1984,
    last: 2017,
};

pub const PRICE_YEARS: YearRange = YearRange {
    first: 1970,
    last: 2018,
};

/// Price per tonne (GBP) and single-species F_MSY for each species.
pub const PRICE_PER_TONNE: [f64; N_SPECIES] = [
    1314.59, 151.96, 528.34, 785.30, 8387.12, 1718.21, 1346.99, 1745.22, 855.33,
];

pub const SS_FMSY: [Option<f64>; N_SPECIES] = [
    None,
    None,
    Some(0.33),
    Some(0.15),
    Some(0.20),
    Some(0.21),
    Some(0.19),
    Some(0.31),
    Some(0.36),
];

pub const DISPLAY_NAMES: [&str; N_SPECIES] = [
    "Sandeel",
    "Norway pout",
    "Herring",
    "Whiting",
    "Sole",
    "Plaice",
    "Haddock",
    "Cod",
    "Saithe",
];

/// Synthetic limit reference points, tonnes of SSB.
pub const B_LIM: [f64; N_SPECIES] = [
    45_000.0, 11_000.0, 70_000.0, 45_000.0, 15_000.0, 110_000.0, 55_000.0, 60_000.0, 75_000.0,
];

/// F at the start and end of the historical period, interpolated linearly.
const F_1984: [f64; N_SPECIES] = [0.5, 0.6, 0.6, 0.6, 0.5, 0.6, 0.7, 0.75, 0.6];
const F_2017: [f64; N_SPECIES] = [0.3, 0.3, 0.25, 0.2, 0.2, 0.2, 0.25, 0.35, 0.3];

pub fn bundled_history() -> FishingHistory {
    let years = HISTORY_YEARS;
    let span = f64::from(years.last - years.first);
    let f = years
        .years()
        .map(|y| {
            let w = f64::from(y - years.first) / span;
            (0..N_SPECIES)
                .map(|s| F_1984[s] + w * (F_2017[s] - F_1984[s]))
                .collect()
        })
        .collect();
    FishingHistory { years, f }
}

pub fn bundled_catalog() -> SpeciesCatalog {
    let entries = (0..N_SPECIES)
        .map(|s| CatalogEntry {
            index: s + 1,
            name: SPECIES[s].to_string(),
            b_lim_tonnes: B_LIM[s],
            price_per_tonne: PRICE_PER_TONNE[s],
            ss_fmsy: SS_FMSY[s],
        })
        .collect();
    SpeciesCatalog::new(entries).expect("bundled catalog is valid")
}

/// Noisy log-scale observations of the hidden model's yield and SSB.
///
/// A few cells are left missing (sandeel SSB before 1990, sole yield 1999).
pub fn bundled_observations(seed: u64) -> Result<(SpeciesSeries, SpeciesSeries)> {
    let model = truth_model(seed)?;
    let history = bundled_history();
    let port = SimulatorPort::full(0, "truth", HISTORY_YEARS, N_SPECIES);
    let last = history.at(HISTORY_YEARS.last).unwrap().to_vec();
    let out = run_scenario(&model, &port, &history, &last, HISTORY_YEARS.last, -20.0)?;
    let mut rng = seeds::rng(seed, "observation-noise", &[]);
    let noise = Normal::new(0.0, 0.1).expect("valid sd");
    let mut yield_ = SpeciesSeries::empty(OutputKind::Yield, HISTORY_YEARS, N_SPECIES);
    let mut ssb = SpeciesSeries::empty(OutputKind::Ssb, HISTORY_YEARS, N_SPECIES);
    for y in HISTORY_YEARS.years() {
        for s in 0..N_SPECIES {
            yield_.set(s, y, out.yield_.get(s, y).unwrap() + noise.sample(&mut rng))?;
            ssb.set(s, y, out.ssb.get(s, y).unwrap() + noise.sample(&mut rng))?;
        }
    }
    for y in 1984..1990 {
        ssb.clear(0, y);
    }
    yield_.clear(4, 1999);
    Ok((yield_, ssb))
}

/// Deflated annual prices: a stationary AR(1) around each species' price.
pub fn bundled_prices(seed: u64) -> PriceTable {
    let mut rng = seeds::rng(seed, "prices", &[]);
    let noise = Normal::new(0.0, 0.08).expect("valid sd");
    let series = PRICE_PER_TONNE
        .iter()
        .map(|&p| {
            let mut x = 0.0f64;
            PRICE_YEARS
                .years()
                .map(|_| {
                    x = 0.6 * x + noise.sample(&mut rng);
                    p * x.exp()
                })
                .collect()
        })
        .collect();
    PriceTable {
        first_year: PRICE_YEARS.first,
        series,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_endpoints() {
        let h = bundled_history();
        assert_eq!(h.f.len(), 34);
        assert_eq!(h.at(1984).unwrap()[7], 0.75);
        assert!((h.at(2017).unwrap()[7] - 0.35).abs() < 1e-12);
    }

    #[test]
    fn catalog_prices() {
        let c = bundled_catalog();
        assert_eq!(c.get(4).price_per_tonne, 8387.12);
        assert_eq!(c.get(7).ss_fmsy, Some(0.31));
        assert_eq!(c.get(0).ss_fmsy, None);
    }

    #[test]
    fn observations_have_gaps() {
        let (y, s) = bundled_observations(1).unwrap();
        assert_eq!(y.count(), 34 * 9 - 1);
        assert_eq!(s.count(), 34 * 9 - 6);
        assert_eq!(s.get(0, 1985), None);
    }
}
