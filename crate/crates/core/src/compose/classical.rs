use super::Composable;
use crate::algebra::{PhasePoly, PhaseSpaceAlgebra};
use crate::error::{shape_err, Result};

/// Classical⊗classical: a polynomial over the disjoint union of both pair sets.
impl Composable<PhaseSpaceAlgebra> for PhaseSpaceAlgebra {
    type Tensor = PhasePoly;

    fn tensor(&self, _right: &PhaseSpaceAlgebra, f: &PhasePoly, g: &PhasePoly) -> PhasePoly {
        f.tensor(g)
    }

    fn decompose(&self, _right: &PhaseSpaceAlgebra, u: &PhasePoly) -> Vec<(PhasePoly, PhasePoly)> {
        u.split_terms(self.num_pairs())
    }

    fn tensor_zero(&self, right: &PhaseSpaceAlgebra) -> PhasePoly {
        PhasePoly::zero(self.num_pairs() + right.num_pairs())
    }

    fn check_tensor(&self, right: &PhaseSpaceAlgebra, u: &PhasePoly) -> Result<()> {
        let expected = self.num_pairs() + right.num_pairs();
        if u.num_pairs() != expected {
            return Err(shape_err("joint pair count", u.num_pairs(), expected));
        }
        Ok(())
    }
}
