//! Dickman's `rho` and Buchstab's `omega`.
//!
//! Both delay equations only look one unit back, so each unit interval
//! `[k, k+1]` is solved from the previous one and stored as a Chebyshev
//! interpolant, with integrals done by Gauss–Legendre quadrature.
//!
//! `rho` uses `u rho(u) = int_{u-1}^u rho(v) dv`. Its integrand is positive,
//! whereas the differentiated form subtracts nearly equal numbers and loses
//! about `log10(k ln k)` digits per interval. `rho` decays super-exponentially,
//! so its pieces are stored relative to `rho(k)` with `ln rho(k)` kept
//! separately.

use std::sync::OnceLock;

use super::quadrature::{Chebyshev, GaussRule};
use crate::error::{Error, Result};
use crate::EULER_GAMMA;

/// Largest argument accepted by [`dickman_rho`].
pub const DICKMAN_MAX_U: f64 = 500.0;

/// Past this point `omega(u)` equals `e^{-gamma}` to far below double precision.
const BUCHSTAB_TABLE_END: usize = 100;

const CHEB_POINTS: usize = 28;
const GAUSS_POINTS: usize = 28;

struct DickmanTable {
    /// `ln rho(k)` for `k = 0..=pieces.len()`.
    ln_at_integer: Vec<f64>,
    /// Piece `k` holds `rho(u) / rho(k)` on `[k, k+1]`; piece 0 is unused.
    pieces: Vec<Chebyshev>,
}

impl DickmanTable {
    fn build(last: usize) -> Self {
        let rule = GaussRule::new(GAUSS_POINTS);
        let mut ln_at_integer: Vec<f64> = vec![0.0, 0.0];
        let mut pieces = vec![Chebyshev::from_values(0.0, 1.0, &[1.0])];
        for k in 1..=last {
            let lo = k as f64;
            let prev = &pieces[k - 1];
            // rho(k-1) / rho(k)
            let ratio = (ln_at_integer[k - 1] - ln_at_integer[k]).exp();
            let nodes = Chebyshev::nodes(lo, lo + 1.0, CHEB_POINTS);
            // part of int_{x-1}^x rho(v) dv / rho(k) lying left of k
            let tail = |x: f64| ratio * rule.integrate(x - 1.0, lo, |v| prev.eval(v));
            let tails: Vec<f64> = nodes.iter().map(|&x| tail(x)).collect();
            let end_tail = tail(lo + 1.0);
            // x f(x) = tail(x) + int_k^x f: a contraction with factor below 1/k
            let mut values = vec![1.0; CHEB_POINTS];
            let mut current = Chebyshev::from_values(lo, lo + 1.0, &values);
            for _ in 0..200 {
                let next: Vec<f64> = nodes
                    .iter()
                    .zip(&tails)
                    .map(|(&x, &t)| (t + rule.integrate(lo, x, |v| current.eval(v))) / x)
                    .collect();
                let change = next
                    .iter()
                    .zip(&values)
                    .map(|(a, b)| ((a - b) / a).abs())
                    .fold(0.0, f64::max);
                values = next;
                current = Chebyshev::from_values(lo, lo + 1.0, &values);
                if change < 1e-16 {
                    break;
                }
            }
            let end = (end_tail + rule.integrate(lo, lo + 1.0, |v| current.eval(v))) / (lo + 1.0);
            ln_at_integer.push(ln_at_integer[k] + end.ln());
            pieces.push(current);
        }
        DickmanTable {
            ln_at_integer,
            pieces,
        }
    }

    fn ln_rho(&self, u: f64) -> f64 {
        if u <= 1.0 {
            return 0.0;
        }
        let k = (u.floor() as usize).min(self.pieces.len() - 1);
        self.ln_at_integer[k] + self.pieces[k].eval(u).ln()
    }
}

fn dickman_table() -> &'static DickmanTable {
    static TABLE: OnceLock<DickmanTable> = OnceLock::new();
    TABLE.get_or_init(|| DickmanTable::build(DICKMAN_MAX_U as usize))
}

fn check_dickman_arg(u: f64) -> Result<()> {
    if !(u >= 0.0) {
        return Err(Error::invalid("u", "must be nonnegative"));
    }
    if u > DICKMAN_MAX_U {
        return Err(Error::invalid("u", format!("must not exceed {DICKMAN_MAX_U}")));
    }
    Ok(())
}

/// `ln rho(u)` for `0 <= u <= 500`; finite even where `rho` underflows.
pub fn ln_dickman_rho(u: f64) -> Result<f64> {
    check_dickman_arg(u)?;
    Ok(dickman_table().ln_rho(u))
}

/// Dickman's function: `rho = 1` on `[0, 1]`, `u rho'(u) + rho(u - 1) = 0`.
///
/// Underflows to 0 beyond `u ~ 140`; use [`ln_dickman_rho`] there.
pub fn dickman_rho(u: f64) -> Result<f64> {
    ln_dickman_rho(u).map(f64::exp)
}

struct BuchstabTable {
    /// Piece `k` holds `u omega(u)` on `[k, k+1]`; pieces 0 and 1 are unused.
    pieces: Vec<Chebyshev>,
}

impl BuchstabTable {
    fn build(last: usize) -> Self {
        let rule = GaussRule::new(GAUSS_POINTS);
        let one = Chebyshev::from_values(1.0, 2.0, &[1.0]);
        let mut pieces = vec![one.clone(), one];
        let mut at_integer = 1.0; // 2 omega(2)
        for k in 2..=last {
            let lo = k as f64;
            let prev = &pieces[k - 1];
            let scaled = |x: f64| -> f64 {
                at_integer + rule.integrate(lo, x, |v| prev.eval(v - 1.0) / (v - 1.0))
            };
            let values: Vec<f64> = Chebyshev::nodes(lo, lo + 1.0, CHEB_POINTS)
                .into_iter()
                .map(scaled)
                .collect();
            at_integer = scaled(lo + 1.0);
            pieces.push(Chebyshev::from_values(lo, lo + 1.0, &values));
        }
        BuchstabTable { pieces }
    }
}

fn buchstab_table() -> &'static BuchstabTable {
    static TABLE: OnceLock<BuchstabTable> = OnceLock::new();
    TABLE.get_or_init(|| BuchstabTable::build(BUCHSTAB_TABLE_END))
}

/// Buchstab's function: `omega(u) = 1/u` on `[1, 2]`,
/// `(u omega(u))' = omega(u - 1)` beyond; tends to `e^{-gamma}`.
pub fn buchstab_omega(u: f64) -> Result<f64> {
    if !(u >= 1.0) {
        return Err(Error::invalid("u", "must be at least 1"));
    }
    if u <= 2.0 {
        return Ok(1.0 / u);
    }
    if u >= BUCHSTAB_TABLE_END as f64 {
        return Ok((-EULER_GAMMA).exp());
    }
    let table = buchstab_table();
    let k = u.floor() as usize;
    Ok(table.pieces[k].eval(u) / u)
}
