//! Lowering of [`ConicProblem`] to the primal standard form
//! `min <C,X> s.t. <A_i,X> = b_i, X >= 0`, where `X` is block diagonal with
//! Hermitian PSD blocks followed by one nonnegative orthant block.

use crate::problem::{ConicProblem, HermitianTerm, Relation, ScalarKind};

#[derive(Debug, Clone)]
pub(crate) struct StdRow {
    pub blocks: Vec<(usize, HermitianTerm)>,
    pub lp: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum ScalarSlot {
    NonNeg(usize),
    Free { plus: usize, minus: usize },
}

#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    pub blocks: Vec<usize>,
    pub n_lp: usize,
    pub rows: Vec<StdRow>,
    pub c_blocks: Vec<HermitianTerm>,
    pub c_lp: Vec<f64>,
    pub scalar_slots: Vec<ScalarSlot>,
}

impl StandardForm {
    pub fn from_problem(p: &ConicProblem) -> Self {
        let mut n_lp = 0;
        let scalar_slots: Vec<ScalarSlot> = p
            .scalars
            .iter()
            .map(|kind| match kind {
                ScalarKind::NonNeg => {
                    n_lp += 1;
                    ScalarSlot::NonNeg(n_lp - 1)
                }
                ScalarKind::Free => {
                    n_lp += 2;
                    ScalarSlot::Free {
                        plus: n_lp - 2,
                        minus: n_lp - 1,
                    }
                }
            })
            .collect();

        let lp_terms = |scalars: &[(usize, f64)]| -> Vec<(usize, f64)> {
            let mut out = Vec::with_capacity(scalars.len());
            for &(k, a) in scalars {
                match scalar_slots[k] {
                    ScalarSlot::NonNeg(j) => out.push((j, a)),
                    ScalarSlot::Free { plus, minus } => {
                        out.push((plus, a));
                        out.push((minus, -a));
                    }
                }
            }
            out
        };

        let mut rows = Vec::with_capacity(p.constraints.len());
        for c in &p.constraints {
            let mut lp = lp_terms(&c.func.scalars);
            match c.relation {
                Relation::Eq => {}
                Relation::Le => {
                    lp.push((n_lp, 1.0));
                    n_lp += 1;
                }
                Relation::Ge => {
                    lp.push((n_lp, -1.0));
                    n_lp += 1;
                }
            }
            rows.push(StdRow {
                blocks: c.func.blocks.clone(),
                lp,
                rhs: c.rhs,
            });
        }

        let mut c_blocks: Vec<HermitianTerm> = p
            .psd_blocks
            .iter()
            .map(|&n| HermitianTerm::zero(n))
            .collect();
        for (b, term) in &p.objective.blocks {
            c_blocks[*b].extend(term, -1.0);
        }
        let mut c_lp = vec![0.0; n_lp];
        for (j, a) in lp_terms(&p.objective.scalars) {
            c_lp[j] -= a;
        }

        Self {
            blocks: p.psd_blocks.clone(),
            n_lp,
            rows,
            c_blocks,
            c_lp,
            scalar_slots,
        }
    }

    pub fn scalar_values(&self, x_lp: &[f64]) -> Vec<f64> {
        self.scalar_slots
            .iter()
            .map(|slot| match *slot {
                ScalarSlot::NonNeg(j) => x_lp[j],
                ScalarSlot::Free { plus, minus } => x_lp[plus] - x_lp[minus],
            })
            .collect()
    }
}
