//! Offline design: decomposition, Sylvester transform and Jordan transform,
//! bundled with their certificates.

use serde::{Deserialize, Serialize};

use crate::decomp::{decompose, verify_decomposition, BasisStrategy, CertificateReport, ObservabilityDecomposition};
use crate::error::Result;
use crate::jordan::{build_transform, Block, JordanTransform, DEFAULT_COND_MAX};
use crate::linalg::{to_rows, Matrix, DEFAULT_RANK_TOL};
use crate::model::{LtiSystem, TimeDomain};
use crate::observer::{assemble_direct, CascadeObserver, DirectObserver};
use crate::sylvester::{self, SylvesterDesign};

/// Tolerance on the relative Sylvester residual.
pub const SYLVESTER_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DesignOptions {
    pub rank_tol: f64,
    pub strategy: BasisStrategy,
    pub a_o: Option<Matrix>,
    pub b_o: Option<Matrix>,
    pub seed: u64,
    pub cond_max: f64,
    pub certificate_tol: f64,
    /// Test hook: add this (relative) offset to `T[0,0]` after solving.
    pub t_perturbation: Option<f64>,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions {
            rank_tol: DEFAULT_RANK_TOL,
            strategy: BasisStrategy::Pivot,
            a_o: None,
            b_o: None,
            seed: 0,
            cond_max: DEFAULT_COND_MAX,
            certificate_tol: 1e-10,
            t_perturbation: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DesignBundle {
    pub domain: TimeDomain,
    pub dec: ObservabilityDecomposition,
    pub design: SylvesterDesign,
    pub jt: JordanTransform,
    pub certificate: CertificateReport,
}

impl DesignBundle {
    /// Offline steps: observability analysis, basis, transformed blocks, `T`, `(Λ, P_t)`.
    pub fn build(sys: &LtiSystem, opts: &DesignOptions) -> Result<Self> {
        let dec = decompose(sys, opts.rank_tol, opts.strategy)?;
        let certificate = verify_decomposition(&dec, &sys.f, &sys.h, opts.certificate_tol);
        let mut design = sylvester::design_observable_part(
            &dec,
            &sys.w,
            opts.a_o.as_ref(),
            opts.b_o.as_ref(),
            opts.seed,
        )?;
        if let Some(delta) = opts.t_perturbation {
            let mut t = design.t.clone();
            t[(0, 0)] += delta * t[(0, 0)].abs().max(1.0);
            design = sylvester::from_transform(&dec, &design.a_o, &design.b_o, &sys.w, t)?;
        }
        let jt = build_transform(&dec.f_no, sys.domain, opts.cond_max)?;
        Ok(DesignBundle {
            domain: sys.domain,
            dec,
            design,
            jt,
            certificate,
        })
    }

    pub fn cascade(&self) -> CascadeObserver<'_> {
        CascadeObserver {
            dec: &self.dec,
            design: &self.design,
            jt: &self.jt,
        }
    }

    pub fn direct(&self) -> DirectObserver {
        assemble_direct(&self.dec, &self.design, &self.jt)
    }

    pub fn sylvester_ok(&self) -> bool {
        self.design.relative_residual(&self.dec) <= SYLVESTER_TOL
            && self.design.t_rcond >= sylvester::T_RCOND_MIN
    }

    /// `Λ` (and `A_o`) cooperative and stable in the design's time domain.
    pub fn cooperative_ok(&self) -> bool {
        let d = self.domain;
        let lambda_ok = self.dec.n_no == 0 || (d.is_cooperative(&self.jt.lambda) && d.is_stable(&self.jt.lambda, 0.0));
        lambda_ok && d.is_cooperative(&self.design.a_o) && d.is_stable(&self.design.a_o, 0.0)
    }

    pub fn certificates_pass(&self) -> bool {
        self.certificate.passed() && self.sylvester_ok() && self.cooperative_ok()
    }

    pub fn to_document(&self) -> DesignDocument {
        let dec = &self.dec;
        DesignDocument {
            domain: self.domain,
            strategy: dec.strategy,
            rank_obsv: dec.n_o,
            n_o: dec.n_o,
            n_no: dec.n_no,
            obsv: to_rows(&dec.obsv),
            basis_o: to_rows(&dec.basis_o),
            basis_no: to_rows(&dec.basis_no),
            proj_o: to_rows(&dec.proj_o),
            proj_no: to_rows(&dec.proj_no),
            f_o: to_rows(&dec.f_o),
            f_noo: to_rows(&dec.f_noo),
            f_no: to_rows(&dec.f_no),
            d_o: to_rows(&dec.d_o),
            d_no: to_rows(&dec.d_no),
            h_o: to_rows(&dec.h_o),
            a_o: to_rows(&self.design.a_o),
            b_o: to_rows(&self.design.b_o),
            t: to_rows(&self.design.t),
            t_inv: to_rows(&self.design.t_inv),
            lambda: to_rows(&self.jt.lambda),
            blocks: self.jt.blocks.clone(),
            sigma: self.jt.sigma,
            certificates: Certificates {
                decomposition: self.certificate.clone(),
                sylvester_relative_residual: self.design.relative_residual(dec),
                t_rcond: self.design.t_rcond,
                jordan_reconstruction_residual: self.jt.reconstruction_residual,
                eigvec_cond: self.jt.eigvec_cond,
                sylvester_ok: self.sylvester_ok(),
                cooperative_ok: self.cooperative_ok(),
                all_passed: self.certificates_pass(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificates {
    pub decomposition: CertificateReport,
    pub sylvester_relative_residual: f64,
    pub t_rcond: f64,
    pub jordan_reconstruction_residual: f64,
    pub eigvec_cond: f64,
    pub sylvester_ok: bool,
    pub cooperative_ok: bool,
    pub all_passed: bool,
}

/// Serializable summary of a design (written by `ivobs design`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignDocument {
    pub domain: TimeDomain,
    pub strategy: BasisStrategy,
    pub rank_obsv: usize,
    pub n_o: usize,
    pub n_no: usize,
    pub obsv: Vec<Vec<f64>>,
    pub basis_o: Vec<Vec<f64>>,
    pub basis_no: Vec<Vec<f64>>,
    pub proj_o: Vec<Vec<f64>>,
    pub proj_no: Vec<Vec<f64>>,
    pub f_o: Vec<Vec<f64>>,
    pub f_noo: Vec<Vec<f64>>,
    pub f_no: Vec<Vec<f64>>,
    pub d_o: Vec<Vec<f64>>,
    pub d_no: Vec<Vec<f64>>,
    pub h_o: Vec<Vec<f64>>,
    pub a_o: Vec<Vec<f64>>,
    pub b_o: Vec<Vec<f64>>,
    pub t: Vec<Vec<f64>>,
    pub t_inv: Vec<Vec<f64>>,
    pub lambda: Vec<Vec<f64>>,
    pub blocks: Vec<Block>,
    pub sigma: f64,
    pub certificates: Certificates,
}
