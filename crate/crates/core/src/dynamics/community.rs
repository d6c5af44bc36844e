use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::{OperatingModel, Simulator, SimulatorPort, Variant};
use crate::error::Result;
use crate::seeds;
use crate::types::{YearRange, N_SPECIES, SOLE};

/// Growth rates (1/year) of the nine-species community.
const GROWTH: [f64; N_SPECIES] = [1.2, 1.4, 0.9, 0.9, 0.8, 0.8, 1.0, 0.9, 0.8];

/// Carrying capacities, tonnes.
const CAPACITY: [f64; N_SPECIES] = [
    2.0e6, 6.0e5, 3.0e6, 5.0e5, 1.2e5, 9.0e5, 5.0e5, 6.0e5, 6.0e5,
];

const SSB_FRACTION: [f64; N_SPECIES] = [0.55, 0.5, 0.6, 0.55, 0.65, 0.6, 0.55, 0.5, 0.5];

const FORAGE: [usize; 3] = [0, 1, 2];
const PREDATORS: [usize; 4] = [3, 6, 7, 8];

/// Dimensionless interaction coefficients: forage fish compete, roundfish
/// predators eat forage fish (and cod/saithe eat whiting), flatfish compete
/// weakly.
fn base_alpha(predation: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(N_SPECIES, N_SPECIES);
    for &i in &FORAGE {
        for &j in &FORAGE {
            if i != j {
                a[(i, j)] = -0.1;
            }
        }
    }
    for &p in &PREDATORS {
        for &q in &FORAGE {
            a[(p, q)] = 0.12 * predation;
            a[(q, p)] = -0.15 * predation;
        }
    }
    for p in [7, 8] {
        a[(p, 3)] = 0.08 * predation;
        a[(3, p)] = -0.1 * predation;
    }
    a[(4, 5)] = -0.05;
    a[(5, 4)] = -0.05;
    a[(6, 7)] = -0.05;
    a[(7, 6)] = -0.05;
    a
}

/// The unperturbed nine-species community under a given step scheme.
pub fn community_base(variant: Variant) -> Result<OperatingModel> {
    OperatingModel::from_alpha(
        "community",
        GROWTH.to_vec(),
        CAPACITY.to_vec(),
        &base_alpha(1.0),
        SSB_FRACTION.to_vec(),
        variant,
    )
}

fn jittered(
    name: &str,
    seed: u64,
    predation: f64,
    spread: f64,
    variant: Variant,
) -> Result<OperatingModel> {
    let mut rng = seeds::rng(seed, name, &[]);
    let noise = Normal::new(0.0, spread).expect("finite spread");
    let growth: Vec<f64> = GROWTH
        .iter()
        .map(|r| r * noise.sample(&mut rng).exp())
        .collect();
    let capacity: Vec<f64> = CAPACITY
        .iter()
        .map(|k| k * noise.sample(&mut rng).exp())
        .collect();
    let mut alpha = base_alpha(predation);
    for x in alpha.iter_mut() {
        *x *= 1.0 + rng.gen_range(-spread..spread);
    }
    let ssb: Vec<f64> = SSB_FRACTION
        .iter()
        .map(|p| (p * (1.0 + rng.gen_range(-spread..spread))).clamp(0.05, 0.95))
        .collect();
    OperatingModel::from_alpha(name, growth, capacity, &alpha, ssb, variant)
}

/// Four structurally distinct simulators. The fourth does not report sole.
///
/// Year coverage mirrors a mixed ensemble: 1991-, 1986-, 1984- and 1984-2050.
pub fn builtin_ensemble(seed: u64) -> Result<Vec<Simulator>> {
    let specs: [(&str, f64, Variant, i32); 4] = [
        ("ricker", 1.0, Variant::Ricker, 1991),
        ("lagged", 0.9, Variant::LaggedInteractions { lag: 1 }, 1986),
        ("predation", 1.5, Variant::Ricker, 1984),
        ("compensatory", 1.1, Variant::BevertonHolt, 1984),
    ];
    specs
        .iter()
        .enumerate()
        .map(|(k, &(name, predation, variant, first))| {
            let model = jittered(name, seed, predation, 0.12, variant)?;
            let years = YearRange::new(first, 2050)?;
            let species: Vec<usize> = if k == 3 {
                (0..N_SPECIES).filter(|&s| s != SOLE).collect()
            } else {
                (0..N_SPECIES).collect()
            };
            let port = SimulatorPort::new(k + 1, name, species, years, N_SPECIES)?;
            Ok(Simulator { model, port })
        })
        .collect()
}

/// The hidden system used to synthesise observations for the bundled dataset.
pub fn truth_model(seed: u64) -> Result<OperatingModel> {
    jittered("truth", seed, 1.2, 0.08, Variant::Ricker)
}

/// Two competing species with a closed-form interior equilibrium
/// `B = -A^{-1} (r - F)`, so long-term yields `F_i B_i` are quadratic in `F`.
pub fn two_species_competition() -> Result<OperatingModel> {
    let alpha = DMatrix::from_row_slice(2, 2, &[0.0, -0.4, -0.3, 0.0]);
    OperatingModel::from_alpha(
        "two-species",
        vec![1.6, 1.2],
        vec![1000.0, 800.0],
        &alpha,
        vec![0.5, 0.5],
        Variant::Ricker,
    )
}
