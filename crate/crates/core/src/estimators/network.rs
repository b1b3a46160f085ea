use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::bilinear_gradient;
use crate::dense::DenseSpectral;
use crate::error::{Error, Result};
use crate::gradient::{rank_one_contraction, sensitivity_matrix};
use crate::lanczos::{LanczosConfig, lanczos_factorize};
use crate::operator::{GraphDirection, ParamOperator, SparseGraphOperator};
use crate::spectral::RealFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivityKind {
    /// Total network communicability, direction `𝟏𝟏ᵀ`.
    TotalCommunicability,
    /// Subgraph centrality of node `ℓ`, direction `e_ℓ e_ℓᵀ`.
    SubgraphCentrality,
}

/// Entry `(i, j)` of `L_exp(A, r sᵀ)` for the direction selected by `kind`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensitivityQuery {
    pub kind: SensitivityKind,
    pub i: usize,
    pub j: usize,
    /// Center node; only read for subgraph centrality.
    pub ell: usize,
}

impl SensitivityQuery {
    pub fn total(i: usize, j: usize) -> Self {
        Self {
            kind: SensitivityKind::TotalCommunicability,
            i,
            j,
            ell: 0,
        }
    }

    pub fn subgraph(i: usize, j: usize, ell: usize) -> Self {
        Self {
            kind: SensitivityKind::SubgraphCentrality,
            i,
            j,
            ell,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        for (name, idx) in [("i", self.i), ("j", self.j), ("ell", self.ell)] {
            if idx >= n {
                return Err(Error::input(format!(
                    "node index {name} = {idx} out of range for {n} nodes"
                )));
            }
        }
        Ok(())
    }

    /// The direction vector `r = s`.
    pub fn direction(&self, n: usize) -> Vec<f64> {
        match self.kind {
            SensitivityKind::TotalCommunicability => vec![1.0; n],
            SensitivityKind::SubgraphCentrality => {
                let mut e = vec![0.0; n];
                e[self.ell] = 1.0;
                e
            }
        }
    }
}

fn unit(n: usize, k: usize, sign: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[k] = sign;
    e
}

fn polarization_vectors(n: usize, i: usize, j: usize) -> [(f64, Vec<f64>); 2] {
    let mut plus = unit(n, i, 1.0);
    plus[j] += 1.0;
    let mut minus = unit(n, i, 1.0);
    minus[j] -= 1.0;
    [(0.25, plus), (-0.25, minus)]
}

/// `e_iᵀ L_exp(A, r sᵀ) e_j` from two Lanczos runs on `A` (started at
/// `e_i ± e_j`) and the rank-one contraction `(Vᵀs)ᵀ G (Vᵀr)`.
///
/// Parameter directions attached to `graph` are held at zero.
pub fn network_sensitivity(
    graph: &SparseGraphOperator,
    query: &SensitivityQuery,
    steps: usize,
) -> Result<f64> {
    network_sensitivity_with_config(graph, query, &LanczosConfig::new(steps))
}

/// [`network_sensitivity`] with an explicit Lanczos configuration.
pub fn network_sensitivity_with_config(
    graph: &SparseGraphOperator,
    query: &SensitivityQuery,
    cfg: &LanczosConfig,
) -> Result<f64> {
    let n = graph.dim();
    query.validate(n)?;
    let r = query.direction(n);
    let theta = vec![0.0; graph.num_params()];
    let mut acc = 0.0;
    for (w, z) in polarization_vectors(n, query.i, query.j) {
        if z.iter().all(|&x| x == 0.0) {
            continue;
        }
        let fac = lanczos_factorize(graph, &theta, &z, cfg)?;
        let eig = fac.eigen()?;
        let g = sensitivity_matrix(&eig, fac.u_norm() * fac.u_norm(), &RealFunction::Exp)?;
        acc += w * rank_one_contraction(&fac, &g, &r, &r)?;
    }
    Ok(acc)
}

/// Same quantity through the generic parameter path: `A(θ) = A + θ r sᵀ`
/// and the forward-only gradient of the bilinear form `e_iᵀ exp(A(θ)) e_j`.
pub fn network_sensitivity_affine(
    graph: &SparseGraphOperator,
    query: &SensitivityQuery,
    steps: usize,
) -> Result<f64> {
    let n = graph.dim();
    query.validate(n)?;
    let r = query.direction(n);
    let param = graph.clone().with_directions(vec![GraphDirection::RankOne {
        a: r.clone(),
        b: r,
    }])?;
    let report = bilinear_gradient(
        &param,
        &[0.0],
        &RealFunction::Exp,
        &unit(n, query.i, 1.0),
        &unit(n, query.j, 1.0),
        &LanczosConfig::new(steps),
    )?;
    Ok(report.grad[0].re)
}

/// Dense reference `e_iᵀ Q (F ∘ (Qᵀ r sᵀ Q)) Qᵀ e_j`.
pub fn dense_network_sensitivity(
    graph: &SparseGraphOperator,
    query: &SensitivityQuery,
) -> Result<f64> {
    let spectral = DenseSpectral::new(&graph.to_dense())?;
    dense_network_sensitivity_with(&spectral, query)
}

/// [`dense_network_sensitivity`] reusing an eigendecomposition of `A`.
pub fn dense_network_sensitivity_with(
    spectral: &DenseSpectral<f64>,
    query: &SensitivityQuery,
) -> Result<f64> {
    let n = spectral.dim();
    query.validate(n)?;
    let r = query.direction(n);
    let e = DMatrix::from_fn(n, n, |a, b| r[a] * r[b]);
    let val = spectral.frechet_bilinear(
        &unit(n, query.i, 1.0),
        &unit(n, query.j, 1.0),
        &e,
        &RealFunction::Exp,
    )?;
    Ok(val.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_total_sensitivity_is_one() {
        let g = SparseGraphOperator::from_edges(4, &[]).unwrap();
        let q = SensitivityQuery::total(0, 2);
        assert!((network_sensitivity(&g, &q, 4).unwrap() - 1.0).abs() < 1e-14);
        assert!((dense_network_sensitivity(&g, &q).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn path_graph_matches_dense() {
        let g = SparseGraphOperator::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        for q in [
            SensitivityQuery::total(0, 2),
            SensitivityQuery::subgraph(0, 2, 1),
            SensitivityQuery::subgraph(1, 1, 1),
        ] {
            let approx = network_sensitivity(&g, &q, 3).unwrap();
            let exact = dense_network_sensitivity(&g, &q).unwrap();
            assert!((approx - exact).abs() <= 1e-12 * exact.abs(), "{q:?}: {approx} vs {exact}");
        }
    }

    #[test]
    fn out_of_range_node() {
        let g = SparseGraphOperator::from_edges(3, &[(0, 1)]).unwrap();
        assert!(network_sensitivity(&g, &SensitivityQuery::subgraph(0, 1, 3), 3).is_err());
    }
}
