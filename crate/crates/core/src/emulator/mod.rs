//! Gaussian-process emulators of long-term yield and SSB percentiles over the
//! fishing-mortality box.

mod gp;
pub mod kernel;
pub mod mean;
pub mod optim;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

pub use gp::{FitOptions, GpSurface, Hyperparameters, Slice};
pub use kernel::{matern52, Kernel};
pub use mean::{default_term_lists, term_list, BasisTerm, MeanModel, MeanSpec};

use crate::config::HyperSharing;
use crate::error::Result;
use crate::types::{OutputKind, SPECIES};

/// Fits one surface per target set (posterior draw) for a single output.
pub fn fit_outputs(
    design: &[Vec<f64>],
    targets: &[Vec<f64>],
    spec: &MeanSpec,
    options: &FitOptions,
    sharing: HyperSharing,
    warm: Option<&Hyperparameters<f64>>,
) -> Result<Vec<GpSurface<f64>>> {
    match sharing {
        HyperSharing::PerOutput => GpSurface::fit_shared(design, targets, spec, options, warm),
        HyperSharing::PerDraw => targets
            .par_iter()
            .map(|t| GpSurface::fit(design, t, spec, options, warm))
            .collect(),
    }
}

/// One archived surface.
pub struct ArchiveEntry<'a> {
    pub kind: OutputKind,
    pub species: usize,
    pub draw: usize,
    pub surface: &'a GpSurface<f64>,
}

/// Writes hyperparameters and mean coefficients as `kind,species,draw,param,value`
/// rows. Training inputs are not repeated here; they are the scenarios listed
/// alongside the archive.
pub fn write_archive(path: &Path, entries: &[ArchiveEntry<'_>]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "kind,species,draw,param,value")?;
    for e in entries {
        let s = e.surface;
        let mut rows: Vec<(String, f64)> = vec![
            ("sigma2".into(), s.kernel().sigma2),
            ("nugget".into(), s.nugget()),
            ("log_likelihood".into(), s.log_likelihood()),
            ("converged".into(), if s.converged() { 1.0 } else { 0.0 }),
        ];
        rows.extend(
            s.kernel()
                .rho
                .iter()
                .enumerate()
                .map(|(d, r)| (format!("rho.{}", d + 1), *r)),
        );
        let m = s.mean_model();
        rows.extend(
            m.terms
                .iter()
                .zip(&m.beta)
                .map(|(t, b)| (format!("beta.{}", t.label()), *b)),
        );
        let name = SPECIES[e.species];
        for (param, value) in rows {
            writeln!(out, "{},{name},{},{param},{value}", e.kind, e.draw)?;
        }
    }
    out.flush()?;
    Ok(())
}
