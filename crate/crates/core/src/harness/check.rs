use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CheckRecord, InstanceDescriptor, VerificationReport};
use crate::decompose::{bmo_decompose, duality_witness, maximal_dual};
use crate::error::{Error, Result};
use crate::function::{same_lattice, CoefSequence, StepFunction};
use crate::io::{worst_stage_decay, CoefDoc};
use crate::lattice::{Lattice, LatticeSpec};
use crate::operators::{
    balayage, bmo_c1_by_variance, bmo_norm, carleson_constant, integral, interval_averages, martingale_decompose,
    maximal, square,
};

/// A self-contained verification input; serializes to a replayable JSON
/// artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(default)]
    pub descriptor: InstanceDescriptor,
    pub lattice: LatticeSpec,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub coeffs: CoefDoc,
}

impl Instance {
    pub fn new(descriptor: InstanceDescriptor, f: &StepFunction, g: &StepFunction, a: &CoefSequence) -> Self {
        Instance {
            descriptor,
            lattice: LatticeSpec::from(&**f.lattice()),
            f: f.values().to_vec(),
            g: g.values().to_vec(),
            coeffs: CoefDoc::from_sequence(a),
        }
    }

    pub fn materialize(&self) -> Result<(Arc<Lattice>, StepFunction, StepFunction, CoefSequence)> {
        let lattice = Arc::new(Lattice::try_from(self.lattice.clone())?);
        let f = StepFunction::new(lattice.clone(), self.f.clone())?;
        let g = StepFunction::new(lattice.clone(), self.g.clone())?;
        let a = self.coeffs.to_sequence(&lattice)?;
        Ok((lattice, f, g, a))
    }

    pub fn check(&self, tol: f64) -> Result<VerificationReport> {
        let (lattice, f, g, a) = self.materialize()?;
        check_instance(&lattice, &f, &g, &a, self.descriptor.clone(), tol)
    }
}

/// Subtracts the average over each root.
fn root_normalized(g: &StepFunction) -> StepFunction {
    let lattice = g.lattice();
    let averages = interval_averages(g);
    let mut values = g.values().to_vec();
    for &root in lattice.roots() {
        for pos in lattice.leaf_range(root) {
            values[pos] -= averages[root.index()];
        }
    }
    StepFunction::new(lattice.clone(), values).expect("finite values")
}

fn pairing(f: &StepFunction, a: &CoefSequence) -> f64 {
    let averages = interval_averages(f);
    a.iter().map(|(id, v)| averages[id.index()] * v).sum()
}

/// Evaluates every inequality on one instance with its exact constant.
///
/// `a` may carry signs; the Carleson constants are those of `|a|`. The
/// Fefferman check uses `g` with its root averages removed, and the
/// five-constant route uses the bounded and balayage parts of `g`.
pub fn check_instance(
    lattice: &Arc<Lattice>,
    f: &StepFunction,
    g: &StepFunction,
    a: &CoefSequence,
    descriptor: InstanceDescriptor,
    tol: f64,
) -> Result<VerificationReport> {
    for l in [f.lattice(), g.lattice(), a.lattice()] {
        if !same_lattice(lattice, l) {
            return Err(Error::LatticeMismatch);
        }
    }
    let mut checks = Vec::new();
    let mut push = |name: &str, lhs: f64, rhs: f64, constant: f64, scale: f64| {
        checks.push(CheckRecord::new(name, lhs, rhs, constant, scale, tol));
    };

    // martingale reconstruction
    let rebuilt = martingale_decompose(f).reconstruct();
    let err = rebuilt.sub(f)?.max_abs();
    push("reconstruction", err, 0.0, 0.0, f.max_abs());

    // the two evaluations of c1
    let g_norm = bmo_norm(g);
    let c1_var = bmo_c1_by_variance(g);
    push(
        "bmo_identity",
        (g_norm.c1 - c1_var).abs(),
        0.0,
        0.0,
        g_norm.c1.max(c1_var),
    );

    let mf = maximal(f).function;
    let sf = square(f);
    let int_m = integral(&mf);
    let int_s = integral(&sf);
    push("maximal_vs_square", int_m, 4.0 * int_s, 4.0, int_m);

    // Fefferman with root-normalized g
    let g0 = root_normalized(g);
    let g0_norm = bmo_norm(&g0).value;
    let fg0 = integral(&f.mul(&g0)?).abs();
    push("fefferman", fg0, 2.0 * int_s * g0_norm, 2.0, fg0);

    // Carleson embedding
    let carl = carleson_constant(a).value;
    let pair = pairing(f, a).abs();
    push("carleson_embedding", pair, int_m * carl, 1.0, pair);

    // balayage bound, for |a| and for a itself
    let abs_bmo = bmo_norm(&balayage(&a.abs())).value;
    push("balayage_abs", abs_bmo, 2.0 * carl, 2.0, abs_bmo);
    let signed_bmo = bmo_norm(&balayage(a)).value;
    push("balayage_signed", signed_bmo, 2.0 * carl, 2.0, signed_bmo);

    // decomposition of g
    let dec = bmo_decompose(g);
    let b = dec.norm.value;
    let residual = dec.recombine().sub(g)?.max_abs();
    push("bmo_decomposition_identity", residual, 0.0, 0.0, g.max_abs());
    let phi_sup = dec.phi.max_abs();
    push("bmo_decomposition_phi", phi_sup, 2.0 * b, 2.0, phi_sup);
    let dec_carl = carleson_constant(&dec.coeffs).value;
    push("bmo_decomposition_carleson", dec_carl, 3.0 * b, 3.0, dec_carl);
    push("bmo_decomposition_decay", worst_stage_decay(&dec), 1.0, 0.5, 1.0);

    // the Carleson sequence dual to Mf
    let md = maximal_dual(f);
    push(
        "maximal_dual_pairing",
        (md.pairing - int_m).abs(),
        0.0,
        0.0,
        int_m.abs().max(md.pairing.abs()),
    );
    let md_carl = carleson_constant(&md.coeffs).value;
    push("maximal_dual_carleson", md_carl, 1.0, 1.0, 1.0);
    let md_bmo = bmo_norm(&balayage(&md.coeffs)).value;
    push("maximal_dual_balayage_bmo", md_bmo, 2.0, 2.0, md_bmo);

    // duality witness for ∫Sf
    let w = duality_witness(f);
    let fw = integral(&f.mul(&w)?);
    push(
        "duality_identity",
        (int_s - fw).abs(),
        0.0,
        0.0,
        int_s.abs().max(fw.abs()),
    );
    let w_diff = bmo_norm(&w).c2;
    push("duality_difference_bound", w_diff, 2.0, 2.0, w_diff);

    // |∫ f (phi + balayage)| ≤ ‖Mf‖₁ (‖phi‖∞ + Carl) ≤ 5 ‖Mf‖₁ ‖g‖_BMO
    let osc = dec.oscillating_part();
    let f_osc = integral(&f.mul(&osc)?).abs();
    push("five_constant_route", f_osc, 5.0 * int_m * b, 5.0, f_osc);

    Ok(VerificationReport::new(descriptor, checks))
}
