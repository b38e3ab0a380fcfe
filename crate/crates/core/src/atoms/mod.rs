//! Atoms, subatoms and atomic blocks with checkable certificates.
//!
//! A block is stored with every coefficient, level and support set, so its
//! validity and cost can be re-derived by [`validate_block`] without trusting
//! the code that built it.

mod decompose;
mod lp;
mod step2;

pub use decompose::{davis_split, decompose_h1_to_blocks, h1_atomic_decompose, AtomSum};
pub use lp::{atb_norm_lp, atb_norm_lp_with_certificate, LpSolution, LP_MAX_POINTS};
pub use step2::{decompose_delta_function, decompose_delta_indicator};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::norms::{bmo_norm, conjugate};
use crate::prob::{Filtration, MartingaleView, Rv, EQ_TOL};

/// Relative slack allowed on norm bounds.
pub const BOUND_TOL: f64 = 1e-10;

/// Which family of blocks a certificate is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BlockRule {
    /// `p`-subatoms: `‖a‖_p ≤ μ(A)^{-1/p'} / (k_j - k + 1)`, first-level cost `‖b‖_1`.
    Hardy { p: f64 },
    /// `(p0, q)`-subatoms: `‖a‖_q ≤ μ(A)^{1/q - 1/p0} / (k_j - k + 1)`, first-level cost `‖b‖_{p0}`.
    Quasi { p0: f64, q: f64 },
}

impl BlockRule {
    pub fn hardy(p: f64) -> Self {
        BlockRule::Hardy { p }
    }

    /// Exponent of the norm applied to subatoms.
    pub fn norm_exponent(&self) -> f64 {
        match *self {
            BlockRule::Hardy { p } => p,
            BlockRule::Quasi { q, .. } => q,
        }
    }

    /// Bound on a subatom's norm before the `1/(k_j - k + 1)` damping.
    pub fn size_bound(&self, mass: f64) -> f64 {
        match *self {
            BlockRule::Hardy { p } => mass.powf(-1.0 / conjugate(p)),
            BlockRule::Quasi { p0, q } => mass.powf(1.0 / q - 1.0 / p0),
        }
    }

    pub fn first_level_cost(&self, filt: &Filtration, values: &[f64]) -> f64 {
        match *self {
            BlockRule::Hardy { .. } => filt.space().lp_norm(values, 1.0),
            BlockRule::Quasi { p0, .. } => filt.space().lp_norm(values, p0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subatom {
    /// The level `k_j` at which `set` is measurable.
    pub level: usize,
    pub set: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub lambda: f64,
    pub atom: Subatom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AtomicBlock {
    FirstLevel { values: Vec<f64> },
    Cancel { level: usize, terms: Vec<Term> },
}

impl AtomicBlock {
    pub fn empty(level: usize) -> Self {
        AtomicBlock::Cancel {
            level,
            terms: Vec::new(),
        }
    }

    /// The function the block represents.
    pub fn values(&self, n: usize) -> Vec<f64> {
        match self {
            AtomicBlock::FirstLevel { values } => values.clone(),
            AtomicBlock::Cancel { terms, .. } => {
                let mut out = vec![0.0; n];
                for t in terms {
                    for (o, v) in out.iter_mut().zip(&t.atom.values) {
                        *o += t.lambda * v;
                    }
                }
                out
            }
        }
    }

    /// Coefficient mass `Σ|λ_j|` of a cancellation block.
    pub fn lambda_mass(&self) -> f64 {
        match self {
            AtomicBlock::FirstLevel { .. } => 0.0,
            AtomicBlock::Cancel { terms, .. } => terms.iter().fold(0.0, |s, t| s + t.lambda.abs()),
        }
    }

    pub fn terms(&self) -> &[Term] {
        match self {
            AtomicBlock::FirstLevel { .. } => &[],
            AtomicBlock::Cancel { terms, .. } => terms,
        }
    }
}

/// A single atom: cancellation at `level` on a level-measurable `set`, or a
/// first-level atom with `‖a‖_1 = 1` when `level == 1` and the values are
/// first-level measurable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PAtom {
    pub level: usize,
    pub set: Vec<usize>,
    pub values: Vec<f64>,
}

impl PAtom {
    /// The atom viewed as a block carrying coefficient `lambda`.
    pub fn into_block(self, lambda: f64, filt: &Filtration) -> AtomicBlock {
        let scale = max_abs(&self.values).max(1.0);
        let cancels = max_abs(&filt.average(&self.values, self.level)) <= EQ_TOL * scale;
        if !cancels {
            let values = self.values.iter().map(|v| lambda * v).collect();
            return AtomicBlock::FirstLevel { values };
        }
        AtomicBlock::Cancel {
            level: self.level,
            terms: vec![Term {
                lambda,
                atom: Subatom {
                    level: self.level,
                    set: self.set,
                    values: self.values,
                },
            }],
        }
    }
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn check_subatom(
    t: usize,
    atom: &Subatom,
    block_level: usize,
    filt: &Filtration,
    rule: BlockRule,
    multiplier: f64,
) -> std::result::Result<(), Violation> {
    let n = filt.len();
    if atom.values.len() != n || atom.set.iter().any(|&i| i >= n) {
        return Err(Violation::Shape);
    }
    if atom.values.iter().any(|v| !v.is_finite()) {
        return Err(Violation::NonFinite);
    }
    if atom.level < block_level || atom.level > filt.depth() {
        return Err(Violation::Level {
            term: t,
            level: atom.level,
            min: block_level,
            max: filt.depth(),
        });
    }
    if atom.set.is_empty() {
        return Err(Violation::EmptySet { term: t });
    }
    if !filt.is_set_measurable(&atom.set, atom.level) {
        return Err(Violation::Measurability {
            term: t,
            level: atom.level,
        });
    }
    let mut inside = vec![false; n];
    for &i in &atom.set {
        inside[i] = true;
    }
    let scale = max_abs(&atom.values).max(1.0);
    if (0..n).any(|i| !inside[i] && atom.values[i].abs() > 1e-12 * scale) {
        return Err(Violation::Support { term: t });
    }
    let norm = filt.space().lp_norm(&atom.values, rule.norm_exponent());
    let damping = (atom.level - block_level + 1) as f64;
    let bound = multiplier * rule.size_bound(filt.mass(&atom.set)) / damping;
    if norm > bound + BOUND_TOL * bound.max(1.0) {
        return Err(Violation::NormBound {
            term: t,
            norm,
            bound,
        });
    }
    Ok(())
}

fn check_cancellation(
    values: &[f64],
    level: usize,
    scale: f64,
    filt: &Filtration,
) -> std::result::Result<(), Violation> {
    let avg = filt.average(values, level);
    let defect = max_abs(&avg);
    if defect > EQ_TOL * scale.max(1.0) {
        return Err(Violation::Cancellation { level, defect });
    }
    Ok(())
}

/// Checks every condition of a block certificate and returns its cost.
pub fn validate_block(
    block: &AtomicBlock,
    filt: &Filtration,
    rule: BlockRule,
) -> std::result::Result<f64, Violation> {
    validate_block_scaled(block, filt, rule, 1.0)
}

/// As [`validate_block`], with subatom bounds enlarged by `multiplier`.
pub fn validate_block_scaled(
    block: &AtomicBlock,
    filt: &Filtration,
    rule: BlockRule,
    multiplier: f64,
) -> std::result::Result<f64, Violation> {
    match block {
        AtomicBlock::FirstLevel { values } => {
            if values.len() != filt.len() {
                return Err(Violation::Shape);
            }
            if !filt.is_measurable(values, 1, EQ_TOL * max_abs(values).max(1.0)) {
                return Err(Violation::NotFirstLevel);
            }
            Ok(rule.first_level_cost(filt, values))
        }
        AtomicBlock::Cancel { level, terms } => {
            if *level == 0 || *level > filt.depth() {
                return Err(Violation::Level {
                    term: 0,
                    level: *level,
                    min: 1,
                    max: filt.depth(),
                });
            }
            for (t, term) in terms.iter().enumerate() {
                if !term.lambda.is_finite() {
                    return Err(Violation::NonFinite);
                }
                check_subatom(t, &term.atom, *level, filt, rule, multiplier)?;
            }
            let scale: f64 = terms
                .iter()
                .map(|t| t.lambda.abs() * max_abs(&t.atom.values))
                .sum();
            check_cancellation(&block.values(filt.len()), *level, scale, filt)?;
            Ok(block.lambda_mass())
        }
    }
}

/// Checks the defining conditions of a `p`-atom.
pub fn validate_atom(
    atom: &PAtom,
    filt: &Filtration,
    p: f64,
) -> std::result::Result<(), Violation> {
    if atom.values.len() != filt.len() {
        return Err(Violation::Shape);
    }
    let cancel = || -> std::result::Result<(), Violation> {
        if atom.level == 0 || atom.level > filt.depth() {
            return Err(Violation::Level {
                term: 0,
                level: atom.level,
                min: 1,
                max: filt.depth(),
            });
        }
        let sub = Subatom {
            level: atom.level,
            set: atom.set.clone(),
            values: atom.values.clone(),
        };
        check_subatom(0, &sub, atom.level, filt, BlockRule::hardy(p), 1.0)?;
        check_cancellation(&atom.values, atom.level, max_abs(&atom.values), filt)
    };
    match cancel() {
        Ok(()) => Ok(()),
        Err(e) => {
            if filt.is_measurable(&atom.values, 1, EQ_TOL) {
                let l1 = filt.space().lp_norm(&atom.values, 1.0);
                if (l1 - 1.0).abs() <= EQ_TOL {
                    return Ok(());
                }
                if matches!(e, Violation::Cancellation { .. }) {
                    return Err(Violation::FirstLevelNorm(l1));
                }
            }
            Err(e)
        }
    }
}

/// Verifies `‖a‖_1 ≤ 1/(k_j - k + 1)` for a subatom of a block at `block_level`.
pub fn subatom_l1_bound_check(atom: &Subatom, block_level: usize, filt: &Filtration) -> bool {
    let l1 = filt.space().lp_norm(&atom.values, 1.0);
    let bound = 1.0 / (atom.level + 1 - block_level.min(atom.level)) as f64;
    l1 <= bound + BOUND_TOL
}

/// A sum of atomic blocks with its certified cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// Subatom exponent; `None` means `p = ∞`.
    pub p: Option<f64>,
    pub blocks: Vec<AtomicBlock>,
    pub block_costs: Vec<f64>,
    pub cost: f64,
    pub residual: Vec<f64>,
}

impl DecompositionReport {
    /// Validates every block and records the residual `target - Σ b_i`.
    pub fn certify(
        target: &Rv,
        blocks: Vec<AtomicBlock>,
        filt: &Filtration,
        p: f64,
    ) -> Result<Self> {
        let n = filt.len();
        let mut block_costs = Vec::with_capacity(blocks.len());
        let mut residual = target.values().to_vec();
        for b in &blocks {
            block_costs.push(validate_block(b, filt, BlockRule::hardy(p))?);
            for (r, v) in residual.iter_mut().zip(b.values(n)) {
                *r -= v;
            }
        }
        let res = max_abs(&residual);
        if res > 1e-9 * max_abs(target.values()).max(1.0) {
            return Err(Error::Reconstruction { residual: res });
        }
        Ok(Self {
            p: p.is_finite().then_some(p),
            cost: block_costs.iter().fold(0.0, |s, c| s + c),
            block_costs,
            blocks,
            residual,
        })
    }

    pub fn exponent(&self) -> f64 {
        self.p.unwrap_or(f64::INFINITY)
    }

    /// Re-runs every check against a filtration and target.
    pub fn revalidate(&self, target: &Rv, filt: &Filtration) -> Result<f64> {
        Ok(Self::certify(target, self.blocks.clone(), filt, self.exponent())?.cost)
    }
}

/// `∫ f g dμ`.
pub fn pairing(f: &Rv, g: &Rv) -> Result<f64> {
    if f.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: f.len(),
            got: g.len(),
        });
    }
    Ok(f.space().integral(&(f * g).into_values()))
}

/// The two sides of `|⟨b, φ⟩| ≤ |b|·(‖φ‖_bmo + sup_k ‖dφ_k‖_∞)` for a block valid at `p = 2`.
///
/// First-level blocks use `‖b‖_1 ‖E_1 φ‖_∞` instead.
pub fn duality_bound_check_p2(
    block: &AtomicBlock,
    phi: &Rv,
    filt: &Filtration,
) -> Result<(f64, f64)> {
    let cost = validate_block(block, filt, BlockRule::hardy(2.0))?;
    let b = filt.rv(block.values(filt.len()))?;
    let lhs = pairing(&b, phi)?.abs();
    let rhs = match block {
        AtomicBlock::FirstLevel { .. } => {
            cost * filt
                .average(phi.values(), 1)
                .iter()
                .fold(0.0, |m: f64, v| m.max(v.abs()))
        }
        AtomicBlock::Cancel { .. } => {
            let view = MartingaleView::new(phi.clone(), filt)?;
            cost * (bmo_norm(phi, filt, 2.0)? + view.max_diff())
        }
    };
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::omega4;

    fn sub(level: usize, set: &[usize], values: &[f64]) -> Subatom {
        Subatom {
            level,
            set: set.to_vec(),
            values: values.to_vec(),
        }
    }

    #[test]
    fn atom_conditions() {
        let f4 = omega4();
        let inf = f64::INFINITY;
        let a = PAtom {
            level: 2,
            set: vec![0, 1],
            values: vec![2.0, -2.0, 0.0, 0.0],
        };
        assert!(validate_atom(&a, &f4, inf).is_ok());
        let a = PAtom {
            level: 2,
            set: vec![0],
            values: vec![2.0, -2.0, 0.0, 0.0],
        };
        assert!(matches!(
            validate_atom(&a, &f4, inf),
            Err(Violation::Measurability { .. } | Violation::Support { .. })
        ));
        let a = PAtom {
            level: 2,
            set: vec![0, 1],
            values: vec![3.0, -3.0, 0.0, 0.0],
        };
        assert!(matches!(
            validate_atom(&a, &f4, inf),
            Err(Violation::NormBound { .. })
        ));
        let a = PAtom {
            level: 1,
            set: vec![0, 1, 2, 3],
            values: vec![1.0; 4],
        };
        assert!(validate_atom(&a, &f4, 2.0).is_ok());
    }

    #[test]
    fn block_validation() {
        let f4 = omega4();
        let one = AtomicBlock::FirstLevel {
            values: vec![1.0; 4],
        };
        assert_eq!(validate_block(&one, &f4, BlockRule::hardy(2.0)), Ok(1.0));
        let bad = AtomicBlock::Cancel {
            level: 2,
            terms: vec![Term {
                lambda: 0.25,
                atom: sub(2, &[0, 1], &[2.0, 0.0, 0.0, 0.0]),
            }],
        };
        assert!(matches!(
            validate_block(&bad, &f4, BlockRule::hardy(f64::INFINITY)),
            Err(Violation::Cancellation { .. })
        ));
        let damped = AtomicBlock::Cancel {
            level: 2,
            terms: vec![Term {
                lambda: 1.0,
                atom: sub(3, &[0], &[2.0, 0.0, 0.0, 0.0]),
            }],
        };
        assert!(matches!(
            validate_block(&damped, &f4, BlockRule::hardy(f64::INFINITY)),
            Err(Violation::NormBound { .. } | Violation::Cancellation { .. })
        ));
    }

    #[test]
    fn l1_bound_of_subatoms() {
        let f4 = omega4();
        assert!(subatom_l1_bound_check(
            &sub(2, &[0, 1], &[2.0, -2.0, 0.0, 0.0]),
            2,
            &f4
        ));
        assert!(subatom_l1_bound_check(
            &sub(3, &[0, 1], &[1.0, -1.0, 0.0, 0.0]),
            2,
            &f4
        ));
        assert!(subatom_l1_bound_check(&sub(2, &[0], &[0.0; 4]), 2, &f4));
        assert!(!subatom_l1_bound_check(
            &sub(3, &[0, 1], &[2.0, -2.0, 0.0, 0.0]),
            2,
            &f4
        ));
    }

    #[test]
    fn pairing_basics() {
        let f4 = omega4();
        let f = f4.rv(vec![1.0, -1.0, 0.0, 0.0]).unwrap();
        let g = f4.rv(vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(pairing(&f, &g).unwrap(), 0.0);
        assert!((pairing(&g, &g).unwrap() - 0.5).abs() < 1e-15);
    }
}
