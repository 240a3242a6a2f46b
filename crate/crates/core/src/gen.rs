//! Seeded random instances with uncorrelated, weakly or strongly correlated
//! revenue coefficients.
//!
//! Reproducibility contract:
//!
//! * Stream: `ChaCha8Rng::seed_from_u64(seed)`. A uniform draw on `[a, b]` is
//!   `a + (b - a) * u` with `u = (next_u64 >> 11) * 2^-53`.
//! * Every draw is rounded half-up to two decimals, `floor(100 v + 0.5) / 100`,
//!   before anything is derived from it. `delta_i = round2(eps * s_i)`.
//! * Per activity the draw order is `l, u, s, tau, gamma`, then the class
//!   coefficients (`theta, phi, psi`; none for the strong class). `zeta` and
//!   `eta` follow the last activity.
//! * `m = floor(xi * n + 0.5)`.
//! * Batch seeds: `mix(mix(mix(base) ^ cell) ^ replicate)` where `mix` is the
//!   SplitMix64 finalizer applied after adding its increment.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::instance::{Activity, Instance, LinearConstraint, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    Uncorrelated,
    Weak,
    Strong,
}

impl Correlation {
    pub const ALL: [Correlation; 3] = [
        Correlation::Uncorrelated,
        Correlation::Weak,
        Correlation::Strong,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Correlation::Uncorrelated => "uncorrelated",
            Correlation::Weak => "weak",
            Correlation::Strong => "strong",
        }
    }
}

impl fmt::Display for Correlation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Correlation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uncorrelated" | "uncorr" | "none" => Ok(Correlation::Uncorrelated),
            "weak" | "weakly" => Ok(Correlation::Weak),
            "strong" | "strongly" => Ok(Correlation::Strong),
            other => Err(format!(
                "unknown correlation class `{other}` (uncorrelated, weak, strong)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub correlation: Correlation,
    pub n: usize,
    /// Minimum change as a fraction of baseline spend.
    pub epsilon: f64,
    /// Cardinality cap as a fraction of `n`.
    pub xi: f64,
    pub seed: u64,
    pub rho: f64,
}

impl GenConfig {
    pub fn new(correlation: Correlation, n: usize, epsilon: f64, xi: f64, seed: u64) -> Self {
        Self {
            correlation,
            n,
            epsilon,
            xi,
            seed,
            rho: 1.01,
        }
    }

    pub fn m(&self) -> usize {
        (self.xi * self.n as f64 + 0.5).floor() as usize
    }
}

pub fn round2(v: f64) -> f64 {
    (v * 100.0 + 0.5).floor() / 100.0
}

struct Draws(ChaCha8Rng);

impl Draws {
    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn uniform(&mut self, a: f64, b: f64) -> f64 {
        round2(a + (b - a) * self.unit())
    }
}

/// `(theta, phi, psi)` for one activity.
fn coefficients(corr: Correlation, tau: f64, gamma: f64, d: &mut Draws) -> (f64, f64, f64) {
    let c = (tau + gamma) / 2.0;
    match corr {
        Correlation::Uncorrelated => (
            d.uniform(-10.0, -1.0),
            d.uniform(1.0, 10.0),
            d.uniform(1.0, 10.0),
        ),
        Correlation::Weak => (
            d.uniform(-(c + 1.0), -(c - 1.0)),
            d.uniform(c - 1.0, c + 1.0),
            d.uniform(c - 1.0, c + 1.0),
        ),
        Correlation::Strong => {
            let k = round2(c + 1.0);
            (-k, k, k)
        }
    }
}

fn id_width(n: usize) -> usize {
    n.to_string().len().max(4)
}

pub fn generate(cfg: &GenConfig) -> Instance {
    assert!(cfg.n >= 1, "n must be positive");
    assert!(
        cfg.epsilon >= 0.0 && (0.0..=1.0).contains(&cfg.xi),
        "invalid generator fractions"
    );
    let mut d = Draws(ChaCha8Rng::seed_from_u64(cfg.seed));
    let width = id_width(cfg.n);
    let mut activities = Vec::with_capacity(cfg.n);
    let mut taus = Vec::with_capacity(cfg.n);
    let mut gammas = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let l = d.uniform(1.0, 5.0);
        let u = d.uniform(5.0, 10.0);
        let s = d.uniform(l, u);
        let tau = d.uniform(1.0, 10.0);
        let gamma = d.uniform(1.0, 10.0);
        let (theta, phi, psi) = coefficients(cfg.correlation, tau, gamma, &mut d);
        activities.push(Activity {
            id: format!("a{:0width$}", i + 1),
            s,
            l,
            u,
            delta: round2(cfg.epsilon * s),
            theta,
            phi,
            psi,
        });
        taus.push(tau);
        gammas.push(gamma);
    }
    let zeta = d.uniform(0.90, 1.00);
    let eta = d.uniform(1.00, 1.10);
    let weighted = |w: &[f64]| -> f64 { w.iter().zip(&activities).map(|(w, a)| w * a.s).sum() };
    let extras = vec![
        LinearConstraint {
            rhs: (zeta - 1.0) * weighted(&taus),
            coeffs: taus.clone(),
            sense: Sense::Le,
        },
        LinearConstraint {
            rhs: (eta - 1.0) * weighted(&gammas),
            coeffs: gammas.clone(),
            sense: Sense::Ge,
        },
    ];
    Instance::new(activities, cfg.rho, cfg.m(), extras).expect("generated instances are valid")
}

/// Parameter grid; cells are the Cartesian product in field order.
#[derive(Debug, Clone, PartialEq)]
pub struct GenGrid {
    pub correlations: Vec<Correlation>,
    pub ns: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub xis: Vec<f64>,
    pub base_seed: u64,
    pub rho: f64,
}

impl GenGrid {
    /// Three classes, `n` in {500, 750, 1000}, `eps` in {5%, 10%, 20%},
    /// `xi` in {50%, 75%, 100%}.
    pub fn published(base_seed: u64) -> Self {
        Self {
            correlations: Correlation::ALL.to_vec(),
            ns: vec![500, 750, 1000],
            epsilons: vec![0.05, 0.10, 0.20],
            xis: vec![0.50, 0.75, 1.00],
            base_seed,
            rho: 1.01,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.correlations.len() * self.ns.len() * self.epsilons.len() * self.xis.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub replicate: usize,
    pub config: GenConfig,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn cell_seed(base: u64, cell: usize, replicate: usize) -> u64 {
    splitmix(splitmix(splitmix(base) ^ cell as u64) ^ replicate as u64)
}

/// Cell configurations in deterministic order, `per_cell` replicates each.
pub fn batch_configs(grid: &GenGrid, per_cell: usize) -> Vec<Cell> {
    let mut out = Vec::with_capacity(grid.cell_count() * per_cell);
    let mut index = 0;
    for &correlation in &grid.correlations {
        for &n in &grid.ns {
            for &epsilon in &grid.epsilons {
                for &xi in &grid.xis {
                    for replicate in 0..per_cell {
                        let seed = cell_seed(grid.base_seed, index, replicate);
                        let config = GenConfig {
                            correlation,
                            n,
                            epsilon,
                            xi,
                            seed,
                            rho: grid.rho,
                        };
                        out.push(Cell {
                            index,
                            replicate,
                            config,
                        });
                    }
                    index += 1;
                }
            }
        }
    }
    out
}

pub fn batch(grid: &GenGrid, per_cell: usize) -> Vec<(Cell, Instance)> {
    batch_configs(grid, per_cell)
        .into_iter()
        .map(|c| {
            let inst = generate(&c.config);
            (c, inst)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{save_json, validate};

    #[test]
    fn strong_example() {
        let mut d = Draws(ChaCha8Rng::seed_from_u64(0));
        assert_eq!(
            coefficients(Correlation::Strong, 4.0, 6.0, &mut d),
            (-6.0, 6.0, 6.0)
        );
    }

    #[test]
    fn delta_example() {
        assert_eq!(round2(0.10 * 5.00), 0.5);
        assert_eq!(round2(0.125), 0.13);
        assert_eq!(round2(-1.005 + 1e-12), -1.0);
    }

    #[test]
    fn cap_rounds_half_up() {
        assert_eq!(GenConfig::new(Correlation::Weak, 5, 0.1, 0.5, 0).m(), 3);
        assert_eq!(GenConfig::new(Correlation::Weak, 12, 0.1, 0.75, 0).m(), 9);
    }

    #[test]
    fn ids_are_padded_and_sorted() {
        let inst = generate(&GenConfig::new(Correlation::Uncorrelated, 12, 0.1, 0.5, 3));
        assert_eq!(inst.activity(0).id, "a0001");
        assert_eq!(inst.activity(11).id, "a0012");
        assert_eq!(id_width(12345), 5);
    }

    #[test]
    fn same_seed_same_bytes() {
        let cfg = GenConfig::new(Correlation::Weak, 20, 0.2, 0.75, 99);
        assert_eq!(save_json(&generate(&cfg)), save_json(&generate(&cfg)));
        let other = GenConfig {
            seed: 100,
            ..cfg.clone()
        };
        assert_ne!(save_json(&generate(&cfg)), save_json(&generate(&other)));
    }

    #[test]
    fn generated_documents_validate() {
        for corr in Correlation::ALL {
            let inst = generate(&GenConfig::new(corr, 30, 0.2, 0.5, 11));
            assert!(validate(&inst.to_doc()).is_valid());
            assert_eq!(inst.extras().len(), 2);
            assert_eq!(inst.extras()[1].sense, Sense::Ge);
        }
    }

    #[test]
    fn batch_counts() {
        let grid = GenGrid {
            correlations: vec![Correlation::Strong],
            ns: vec![8],
            epsilons: vec![0.2],
            xis: vec![0.5],
            base_seed: 1,
            rho: 1.01,
        };
        let b = batch(&grid, 3);
        assert_eq!(b.len(), 3);
        assert_ne!(b[0].0.config.seed, b[1].0.config.seed);
        assert!(batch(&grid, 0).is_empty());

        let mut grid = GenGrid::published(1);
        grid.ns = vec![8, 10, 12];
        assert_eq!(batch_configs(&grid, 5).len(), 405);
        grid.ns = vec![10];
        assert_eq!(grid.cell_count(), 27);
    }
}
