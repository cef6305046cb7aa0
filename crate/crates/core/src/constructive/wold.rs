//! Wold expansion `H² = K_φ ⊕ φK_φ ⊕ φ²K_φ ⊕ …` for finite Blaschke φ.

use nalgebra::DVector;

use crate::blaschke::BlaschkeProduct;
use crate::error::{Error, Result};
use crate::hardy::{derivative_kernel, derivative_kernel_gram, HardyFunction, TruncationConfig};
use crate::linalg::CMatrix;
use crate::operators::{toeplitz_matrix, OperatorMatrix};
use crate::symbol::{InnerSymbol, SymbolSpec};
use crate::C64;

/// Exact projection onto the model space `K_B`, expressed in the basis of
/// (derivative) reproducing kernels at the zeros of `B`.
#[derive(Debug, Clone)]
pub struct ModelProjector {
    labels: Vec<(C64, usize)>,
    generators: Vec<HardyFunction>,
    gram: CMatrix,
    gram_lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl ModelProjector {
    pub fn new(b: &BlaschkeProduct, cfg: &TruncationConfig) -> Result<Self> {
        let labels: Vec<(C64, usize)> = b
            .distinct_zeros()
            .into_iter()
            .flat_map(|(w, m)| (0..m).map(move |o| (w, o)))
            .collect();
        let k = labels.len();
        let gram = CMatrix::from_fn(k, k, |i, j| {
            let (wi, oi) = labels[i];
            let (wj, oj) = labels[j];
            derivative_kernel_gram(wj, oj, wi, oi)
        });
        let generators = labels
            .iter()
            .map(|&(w, o)| derivative_kernel(w, o, cfg))
            .collect::<Result<Vec<_>>>()?;
        let gram_lu = gram.clone().lu();
        if !gram_lu.is_invertible() {
            return Err(Error::Degenerate(
                "model-space Gram matrix is singular".into(),
            ));
        }
        Ok(Self {
            labels,
            generators,
            gram,
            gram_lu,
        })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Coordinates `α` with `P_K g = Σ α_j e_j` for a polynomial `g`.
    pub fn coords(&self, g: &HardyFunction) -> Result<DVector<C64>> {
        let b = DVector::from_iterator(
            self.dim(),
            self.generators
                .iter()
                .map(|e| g.inner_product(e))
                .collect::<Result<Vec<_>>>()?,
        );
        self.solve(&b)
    }

    /// `G^{-1} b` for the moment vector `b_j = ⟨g, e_j⟩`.
    pub fn solve(&self, b: &DVector<C64>) -> Result<DVector<C64>> {
        self.gram_lu
            .solve(b)
            .ok_or_else(|| Error::Degenerate("model-space Gram solve failed".into()))
    }

    /// Truncated generators as columns.
    pub fn generator_matrix(&self) -> CMatrix {
        crate::linalg::columns(&self.generators, self.generators[0].degree() + 1)
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    /// Exact `‖Σ α_j e_j‖²`.
    pub fn norm_squared(&self, alpha: &DVector<C64>) -> f64 {
        (alpha.adjoint() * &self.gram * alpha)[(0, 0)].re.max(0.0)
    }

    /// Coefficients of `Σ α_j e_j` up to `z^N`.
    pub fn truncated(&self, alpha: &DVector<C64>) -> HardyFunction {
        let degree = self.generators[0].degree();
        let mut out = HardyFunction::zero(degree);
        for (a, e) in alpha.iter().zip(&self.generators) {
            out.axpy(*a, e)
                .expect("generators share the ambient degree");
        }
        out
    }
}

/// An inner symbol `φ` together with the data needed to peel Wold layers.
#[derive(Debug, Clone)]
pub struct WoldFrame {
    pub inner: InnerSymbol,
    /// `φ` modulo `z^{N+1}`.
    pub series: HardyFunction,
    /// `T_φ^*` on the truncated space (exact on polynomials).
    pub adjoint: OperatorMatrix,
    pub model: ModelProjector,
}

impl WoldFrame {
    pub fn new(phi: &SymbolSpec, cfg: &TruncationConfig) -> Result<Self> {
        let inner = phi.as_inner().ok_or_else(|| {
            Error::Precondition(format!("symbol {phi:?} is not a finite Blaschke product"))
        })?;
        let series = inner.series(cfg);
        let adjoint = toeplitz_matrix(phi, cfg).adjoint();
        let model = ModelProjector::new(&inner.blaschke, cfg)?;
        Ok(Self {
            inner,
            series,
            adjoint,
            model,
        })
    }

    pub fn degree(&self) -> usize {
        self.series.degree()
    }

    /// `φ^j` modulo `z^{N+1}` for `j = 0..count`.
    pub fn powers(&self, count: usize) -> Vec<HardyFunction> {
        let mut out = Vec::with_capacity(count);
        let mut p = HardyFunction::one(self.degree());
        for _ in 0..count {
            out.push(p.clone());
            p = p.multiply(&self.series).expect("same ambient");
        }
        out
    }

    /// Splits a polynomial `g` as `g = φ·l + c` with `l = T_φ^* g` and
    /// `c = P_{K_φ} g`. The returned `c` is truncated; `c_norm` is exact.
    pub fn peel(&self, g: &HardyFunction) -> Result<Layer> {
        let l = self.adjoint.apply(g)?;
        let c = g.sub(&l.multiply(&self.series)?)?;
        let c_norm_sq = (g.norm_squared() - l.norm_squared()).max(0.0);
        let alpha = self.model.coords(g)?;
        let gram_norm_sq = self.model.norm_squared(&alpha);
        let kernel_route = self.model.truncated(&alpha);
        let route_gap = c.sub(&kernel_route)?.norm();
        Ok(Layer {
            l,
            c,
            c_norm_sq,
            gram_norm_sq,
            route_gap,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub l: HardyFunction,
    pub c: HardyFunction,
    pub c_norm_sq: f64,
    /// `‖P_K g‖²` from the kernel Gram matrix.
    pub gram_norm_sq: f64,
    /// Distance between the two truncated routes to `P_K g`.
    pub route_gap: f64,
}

#[derive(Debug, Clone)]
pub struct WoldExpansion {
    /// `c_j ∈ K_φ` modulo `z^{N+1}`.
    pub components: Vec<HardyFunction>,
    /// Exact `‖c_j‖`.
    pub component_norms: Vec<f64>,
    /// `‖f − Σ φ^j c_j‖` modulo `z^{N+1}`.
    pub reconstruction_residual: f64,
    /// `|‖f‖² − Σ ‖c_j‖²|`.
    pub parseval_gap: f64,
    /// Largest disagreement between the two computations of each `c_j`.
    pub projection_residual: f64,
    /// Norm of what is left after the last layer.
    pub remainder: f64,
}

/// Expands `f` in Wold layers of `φ` until the remainder is at most
/// `eps_residual · ‖f‖` or `N + 1` layers have been peeled.
pub fn wold_expand(
    f: &HardyFunction,
    phi: &SymbolSpec,
    cfg: &TruncationConfig,
) -> Result<WoldExpansion> {
    let frame = WoldFrame::new(phi, cfg)?;
    if f.degree() != cfg.degree {
        return Err(Error::DimensionMismatch {
            expected: cfg.degree,
            found: f.degree(),
        });
    }
    let tol = cfg.eps_residual * f.norm();
    let mut rest = f.clone();
    let mut components = Vec::new();
    let mut component_norms = Vec::new();
    let mut projection_residual: f64 = 0.0;
    for _ in 0..=cfg.degree {
        if rest.norm() <= tol || rest.norm() == 0.0 {
            break;
        }
        let layer = frame.peel(&rest)?;
        projection_residual = projection_residual
            .max(layer.route_gap)
            .max((layer.c_norm_sq.sqrt() - layer.gram_norm_sq.sqrt()).abs());
        components.push(layer.c);
        component_norms.push(layer.c_norm_sq.sqrt());
        rest = layer.l;
    }
    let powers = frame.powers(components.len());
    let mut rebuilt = HardyFunction::zero(cfg.degree);
    for (c, p) in components.iter().zip(&powers) {
        rebuilt = rebuilt.add(&c.multiply(p)?)?;
    }
    let total: f64 = component_norms.iter().map(|x| x * x).sum();
    Ok(WoldExpansion {
        reconstruction_residual: f.sub(&rebuilt)?.norm(),
        parseval_gap: (f.norm_squared() - total).abs(),
        projection_residual,
        remainder: rest.norm(),
        components,
        component_norms,
    })
}
