use crate::geometry::Coupling;
use crate::grid::{normal_derivative_at_interface, Carrier, CoupledField, NodeKind, Side, TraceField};

/// `(∂ₙu⁺)ᵀ − (DΦ⁺(u⁺))ᵗ(∂ₙu⁻)ᵀ` at every free interface node, in `Tan(u⁺, M⁺)`.
///
/// Both normal derivatives are one-sided second-order differences in `xₙ`. The residual
/// vanishes for critical points of the energy in the admissible class.
pub fn flux_residual(coupling: &Coupling, u: &CoupledField) -> TraceField {
    let sg = u.grid().side(Side::Plus);
    let dplus = normal_derivative_at_interface(u, Side::Plus);
    let dminus = normal_derivative_at_interface(u, Side::Minus);
    let mut out = TraceField {
        carrier: Carrier::Interface(Side::Plus),
        nodes: Vec::new(),
        points: Vec::new(),
        sides: Vec::new(),
        values: Vec::new(),
    };
    for (k, &i) in dplus.nodes.iter().enumerate() {
        if sg.kind(i) != NodeKind::Interface {
            continue;
        }
        let a = u.value(Side::Plus, i);
        let tp = coupling.plus.inner.tangent_project(&a, &dplus.values[k]);
        let r = tp - coupling.flux_transfer(&a, &dminus.values[k]);
        out.nodes.push(i);
        out.points.push(dplus.points[k]);
        out.sides.push(Side::Plus);
        out.values.push(r);
    }
    out
}
