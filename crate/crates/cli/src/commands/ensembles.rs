//! `latgas ensembles`: tabulates the thermodynamic maps as CSV.

use super::{ensure_out_dir, model_meta};
use crate::config::RunConfig;
use crate::io::write_table_csv;
use crate::{CliError, Result};
use latgas_core::ensembles::EnsembleTable;
use std::path::{Path, PathBuf};

pub struct EnsemblesOutputs {
    pub rho_table: PathBuf,
    pub lambda_table: PathBuf,
}

pub fn run(config: &RunConfig, out_dir: &Path) -> Result<EnsemblesOutputs> {
    let params = config.model.params()?;
    let table = EnsembleTable::from_params(&params);
    let grid = &config.ensembles;
    ensure_out_dir(out_dir)?;

    let mut rho_rows = Vec::new();
    let mut rho = grid.rho_min;
    while rho <= grid.rho_max + 1e-12 {
        let lm = table.lambda_minus(rho).map_err(CliError::runtime)?;
        let lp = table.lambda_plus(rho).map_err(CliError::runtime)?;
        let phi = table.phi(rho).map_err(CliError::runtime)?;
        let qm = table.q_minus(rho).map_err(CliError::runtime)?;
        let qp = table.q_plus(rho).map_err(CliError::runtime)?;
        rho_rows.push(vec![rho, lm, lp, phi, qm, qp]);
        rho += grid.rho_step;
    }

    let mut lambda_rows = Vec::new();
    let mut lam = grid.lambda_min;
    while lam <= grid.lambda_max + 1e-12 {
        lambda_rows.push(vec![
            lam,
            table.p_minus(lam),
            table.p_plus(lam),
            table.rho_minus(lam),
            table.rho_plus(lam),
        ]);
        lam += grid.lambda_step;
    }

    let meta = model_meta(&config.model, params.q());
    let rho_table = out_dir.join("ensembles_rho.csv");
    write_table_csv(
        &rho_table,
        &meta,
        "rho,lambda_minus,lambda_plus,phi,q_minus,q_plus",
        rho_rows.into_iter(),
    )?;
    let lambda_table = out_dir.join("ensembles_lambda.csv");
    write_table_csv(
        &lambda_table,
        &meta,
        "lambda,p_minus,p_plus,rho_minus,rho_plus",
        lambda_rows.into_iter(),
    )?;
    Ok(EnsemblesOutputs { rho_table, lambda_table })
}
