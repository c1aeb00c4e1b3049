use super::problem::AdmissibleProblem;
use crate::error::{Error, Result};
use crate::geometry::{project_to_manifold, Manifold, Vec3};
use crate::grid::{Adjacency, CoupledField, NodeKind, Side};
use crate::linalg::harmonic_fill;

pub(crate) fn projection_failure(side: Side, node: usize, source: Error) -> Error {
    Error::ProjectionFailure {
        side: side.tag(),
        node,
        source: Box::new(source),
    }
}

pub(crate) fn project_nodes(
    values: &mut [Vec3],
    nodes: impl Iterator<Item = usize>,
    m: &dyn Manifold,
    side: Side,
) -> Result<()> {
    for i in nodes {
        values[i] = project_to_manifold(&values[i], m).map_err(|e| projection_failure(side, i, e))?;
    }
    Ok(())
}

/// Builds a field in the admissible class from the boundary data alone.
///
/// The plus trace is the harmonic extension of `g⁺|∂Γ` along `Γ`, projected to `M⁺`; the minus
/// trace is its image under `Φ⁺`. Each side is then filled harmonically and projected to `N±`.
/// With `n = 1`, where `Γ` is a point, the trace starts from the mean of `g⁺`.
pub fn initialize_admissible(problem: &AdmissibleProblem) -> Result<CoupledField> {
    problem.check_compatible()?;
    let grid = problem.grid;
    let coupling = &problem.coupling;
    let mut u = CoupledField::constant(grid, Vec3::zeros(), Vec3::zeros());
    problem.impose_boundary(&mut u);

    let sg = grid.side(Side::Plus);
    let layer = sg.interface_nodes();
    let depth = sg.depth_axis();
    let plus = u.side_mut(Side::Plus);
    if grid.dim() == 1 {
        let data = problem.boundary_data(Side::Plus);
        let mean = data.values.iter().sum::<Vec3>() / data.values.len() as f64;
        plus[layer[0]] = mean;
    } else {
        let edges: Vec<_> = sg
            .edges()
            .into_iter()
            .filter(|&(a, b, _)| sg.multi(a)[depth] == 0 && sg.multi(b)[depth] == 0)
            .collect();
        let adj = Adjacency::from_edges(sg.len(), &edges);
        let fixed: Vec<bool> = (0..sg.len())
            .map(|i| sg.multi(i)[depth] != 0 || sg.kind(i) == NodeKind::InterfaceEdge)
            .collect();
        harmonic_fill(&adj, &fixed, plus)?;
    }
    let free_trace = || layer.iter().copied().filter(|&i| sg.kind(i) == NodeKind::Interface);
    project_nodes(plus, free_trace(), coupling.plus.inner.as_ref(), Side::Plus)?;
    let trace: Vec<Vec3> = layer.iter().map(|&i| plus[i]).collect();
    let minus = u.side_mut(Side::Minus);
    for (k, &i) in layer.iter().enumerate() {
        if sg.kind(i) == NodeKind::Interface {
            minus[i] = coupling.map.forward(&trace[k]);
        }
    }

    for s in Side::BOTH {
        let side = grid.side(s);
        let fixed: Vec<bool> = (0..side.len()).map(|i| side.kind(i) != NodeKind::Interior).collect();
        let values = u.side_mut(s);
        harmonic_fill(&side.adjacency(), &fixed, values)?;
        let target = match s {
            Side::Plus => coupling.plus.ambient.as_ref(),
            Side::Minus => coupling.minus.ambient.as_ref(),
        };
        project_nodes(
            values,
            (0..side.len()).filter(|&i| side.kind(i) == NodeKind::Interior),
            target,
            s,
        )?;
    }
    Ok(u)
}
