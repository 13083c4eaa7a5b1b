//! Report emission: config hashing, machine-readable JSON, CSV artifacts.

use std::path::Path;

use anyhow::{Context, Result};
use domcheck_core::pomdp::ValueGrid;
use domcheck_core::verify::PsiCurve;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Cli;

#[derive(Serialize)]
pub struct RunReport<T: Serialize> {
    pub command: String,
    /// SHA-256 over the subcommand, model bytes, seed, and tolerance.
    /// Thread count is excluded: it must never affect results.
    pub config_hash: String,
    pub seed: u64,
    pub tol: f64,
    pub payload: T,
}

impl<T: Serialize> RunReport<T> {
    pub fn new(command: &str, cli: &Cli, input_bytes: &[u8], payload: T) -> Self {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update(input_bytes);
        h.update(cli.seed.to_le_bytes());
        h.update(cli.tol.to_le_bytes());
        RunReport {
            command: command.to_string(),
            config_hash: format!("{:x}", h.finalize()),
            seed: cli.seed,
            tol: cli.tol,
            payload,
        }
    }

    /// Writes pretty JSON to `out`, or prints it to stdout when no path was
    /// given.
    pub fn emit(&self, out: Option<&Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        emit_text(out, &json)
    }
}

pub fn emit_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text)
                .with_context(|| format!("cannot write {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

/// `{}` on f64 prints the shortest representation that round-trips exactly.
pub fn psi_csv(curve: &PsiCurve) -> String {
    let mut s = String::from("lambda,psi\n");
    for (l, v) in curve.lambdas.iter().zip(&curve.psi) {
        s.push_str(&format!("{l},{v}\n"));
    }
    s
}

pub fn pomdp_csv(vg: &ValueGrid) -> String {
    let nu = vg.rewards.len();
    let mut s = String::from("p,V");
    for u in 1..=nu {
        s.push_str(&format!(",Q_{u}"));
    }
    s.push_str(",mu_star,mu_myopic\n");
    for i in 0..vg.grid.len() {
        s.push_str(&format!("{},{}", vg.grid[i], vg.v[i]));
        for u in 0..nu {
            s.push_str(&format!(",{}", vg.q[i][u]));
        }
        s.push_str(&format!(",{},{}\n", vg.policy[i] + 1, vg.myopic[i] + 1));
    }
    s
}
