//! Sparse dictionary learning with an ℓ0 penalty:
//!
//! `min ½‖I - D Wᵀ‖² + λ‖W‖₀` over unit-norm dictionary columns and an
//! optional box `‖W‖_∞ ≤ U_b`.
//!
//! As a two-block problem the codes `W` (p×m) are the `x` block, with
//! `f = λ‖·‖₀ + box`, and the dictionary `D` (n×m) is the `y` block, with
//! `g` the unit-column indicator.

use std::sync::{Arc, Mutex};

use crate::error::{IpadError, Result};
use crate::framework::{BlockPoint, NnpProblem};
use crate::inner::{project_unit_columns, prox_hard_threshold};
use crate::linalg::{
    dot_sparse_of, dot_sparse_t_of, frob, gram_of, nnz, sparse_left_dot_of, spectral_norm, Mat,
    SparseRows,
};

/// Relative accuracy of the power iterations behind the Lipschitz bounds.
const SPECTRAL_TOL: f64 = 1e-4;
/// Slack on the unit-norm and box tests of the indicator functions.
const FEASIBILITY_TOL: f64 = 1e-9;

/// Quantities that depend only on the dictionary.
#[derive(Debug)]
pub struct DictProducts {
    /// `DᵀD`
    pub dtd: Mat,
    /// `IᵀD`
    pub itd: Mat,
    /// `‖DᵀD‖₂`
    pub gram_norm: f64,
}

/// Quantities that depend only on the codes.
#[derive(Debug)]
pub struct CodeProducts {
    /// `WᵀW`
    pub wtw: Mat,
    /// `‖WᵀW‖₂`
    pub gram_norm: f64,
}

#[derive(Debug, Default)]
struct Cache {
    dict: Option<(Mat, Arc<DictProducts>)>,
    code: Option<(Mat, Arc<CodeProducts>)>,
    pattern: Option<(Mat, Arc<SparseRows>)>,
}

/// Data and penalty of one dictionary learning problem.
///
/// Products that depend on a single block are cached against the last block
/// seen; a cache hit requires an exactly equal matrix, so cached and fresh
/// results are identical.
#[derive(Debug)]
pub struct SdlInstance {
    data: Mat,
    atoms: usize,
    lambda: f64,
    bound: Option<f64>,
    cache: Mutex<Cache>,
}

impl Clone for SdlInstance {
    fn clone(&self) -> Self {
        Self {
            data: self.data.clone(),
            atoms: self.atoms,
            lambda: self.lambda,
            bound: self.bound,
            cache: Mutex::new(Cache::default()),
        }
    }
}

impl SdlInstance {
    /// `data` is n×p (one signal per column); `atoms` is the dictionary size m.
    pub fn new(data: Mat, atoms: usize, lambda: f64, bound: Option<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 || atoms == 0 {
            return Err(IpadError::Config(format!(
                "dimensions must be positive (n = {}, p = {}, m = {atoms})",
                data.nrows(),
                data.ncols()
            )));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(IpadError::Config(format!("lambda must be nonnegative, got {lambda}")));
        }
        if let Some(b) = bound {
            if !(b > 0.0) {
                return Err(IpadError::Config(format!("box bound must be positive, got {b}")));
            }
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(IpadError::NonFinite { oracle: "data matrix" });
        }
        Ok(Self { data, atoms, lambda, bound, cache: Mutex::new(Cache::default()) })
    }

    pub fn data(&self) -> &Mat {
        &self.data
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn m(&self) -> usize {
        self.atoms
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn check_dictionary(&self, d: &Mat) -> Result<()> {
        if d.dim() != (self.n(), self.m()) {
            return Err(IpadError::Shape(format!(
                "dictionary is {:?}, expected {:?}",
                d.dim(),
                (self.n(), self.m())
            )));
        }
        Ok(())
    }

    pub fn check_codes(&self, w: &Mat) -> Result<()> {
        if w.dim() != (self.p(), self.m()) {
            return Err(IpadError::Shape(format!(
                "code matrix is {:?}, expected {:?}",
                w.dim(),
                (self.p(), self.m())
            )));
        }
        Ok(())
    }

    pub fn dict_products(&self, d: &Mat) -> Arc<DictProducts> {
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((key, val)) = &cache.dict {
            if key == d {
                return Arc::clone(val);
            }
        }
        let dtd = d.t().dot(d);
        let itd = self.data.t().dot(d);
        let sigma = spectral_norm(&d.view(), SPECTRAL_TOL).value;
        let val = Arc::new(DictProducts { dtd, itd, gram_norm: sigma * sigma });
        cache.dict = Some((d.clone(), Arc::clone(&val)));
        val
    }

    /// Compressed copy of the codes, shared by the sparse products.
    pub fn code_pattern(&self, w: &Mat) -> Arc<SparseRows> {
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((key, val)) = &cache.pattern {
            if key == w {
                return Arc::clone(val);
            }
        }
        let val = Arc::new(SparseRows::from_dense(&w.view()));
        cache.pattern = Some((w.clone(), Arc::clone(&val)));
        val
    }

    pub fn code_products(&self, w: &Mat) -> Arc<CodeProducts> {
        {
            let cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
            if let Some((key, val)) = &cache.code {
                if key == w {
                    return Arc::clone(val);
                }
            }
        }
        let pattern = self.code_pattern(w);
        let wtw = gram_of(&w.view(), &pattern);
        // WᵀW is symmetric PSD, so its top singular value is ‖W‖₂².
        let gram_norm = spectral_norm(&wtw.view(), SPECTRAL_TOL).value;
        let val = Arc::new(CodeProducts { wtw, gram_norm });
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        cache.code = Some((w.clone(), Arc::clone(&val)));
        val
    }

    /// `D Wᵀ - I`.
    pub fn residual(&self, w: &Mat, d: &Mat) -> Mat {
        dot_sparse_t_of(&d.view(), &w.view(), &self.code_pattern(w)) - &self.data
    }

    pub fn penalty(&self, w: &Mat) -> f64 {
        if let Some(b) = self.bound {
            let limit = b * (1.0 + FEASIBILITY_TOL);
            if w.iter().any(|v| v.abs() > limit) {
                return f64::INFINITY;
            }
        }
        self.lambda * nnz(&w.view()) as f64
    }

    pub fn dictionary_indicator(&self, d: &Mat) -> f64 {
        let feasible = d.columns().into_iter().all(|c| {
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            (norm - 1.0).abs() <= FEASIBILITY_TOL
        });
        if feasible {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// `½‖I - D Wᵀ‖² + λ‖W‖₀`, or `+∞` when `D` or `W` leaves its constraint set.
pub fn sdl_objective(inst: &SdlInstance, d: &Mat, w: &Mat) -> Result<f64> {
    inst.check_dictionary(d)?;
    inst.check_codes(w)?;
    Ok(inst.psi(&BlockPoint::new(w.clone(), d.clone())))
}

/// `W (DᵀD) - IᵀD`.
pub fn grad_h_w(inst: &SdlInstance, d: &Mat, w: &Mat) -> Result<Mat> {
    inst.check_dictionary(d)?;
    inst.check_codes(w)?;
    Ok(inst.grad_h_x(w, d))
}

/// `(D Wᵀ - I) W`.
pub fn grad_h_d(inst: &SdlInstance, d: &Mat, w: &Mat) -> Result<Mat> {
    inst.check_dictionary(d)?;
    inst.check_codes(w)?;
    Ok(inst.grad_h_y(w, d))
}

/// The instance seen through the generic two-block oracle interface.
pub fn as_nnp(inst: &SdlInstance) -> &dyn NnpProblem {
    inst
}

impl NnpProblem for SdlInstance {
    fn f_value(&self, w: &Mat) -> f64 {
        self.penalty(w)
    }

    fn g_value(&self, d: &Mat) -> f64 {
        self.dictionary_indicator(d)
    }

    fn h_value(&self, w: &Mat, d: &Mat) -> f64 {
        let r = self.residual(w, d);
        0.5 * r.iter().map(|v| v * v).sum::<f64>()
    }

    fn grad_h_x(&self, w: &Mat, d: &Mat) -> Mat {
        let dp = self.dict_products(d);
        let (p, m) = w.dim();
        let n = d.nrows();
        let pattern = self.code_pattern(w);
        let fill = pattern.nnz();
        // W (DᵀD) either directly or as (W Dᵀ) D, whichever is cheaper.
        let direct = fill * m;
        let through_data = fill * n + p * n * m;
        let wg = if direct <= through_data {
            sparse_left_dot_of(&w.view(), &pattern, &dp.dtd.view())
        } else {
            sparse_left_dot_of(&w.view(), &pattern, &d.t()).dot(d)
        };
        wg - &dp.itd
    }

    fn grad_h_y(&self, w: &Mat, d: &Mat) -> Mat {
        let r = self.residual(w, d);
        dot_sparse_of(&r.view(), &w.view(), &self.code_pattern(w))
    }

    fn prox_f(&self, v: &Mat, tau: f64) -> Mat {
        prox_hard_threshold(v, tau, self.lambda, self.bound)
    }

    fn prox_g(&self, v: &Mat, _tau: f64) -> Mat {
        project_unit_columns(v)
    }

    fn lipschitz_x(&self, d: &Mat) -> Option<f64> {
        Some(self.dict_products(d).gram_norm)
    }

    fn lipschitz_y(&self, w: &Mat) -> Option<f64> {
        Some(self.code_products(w).gram_norm)
    }

    /// `(‖D‖₂ + ‖W‖₂)² + ‖I - D Wᵀ‖`, a bound on the Hessian of `H` at `z`.
    fn lipschitz_joint(&self, z: &BlockPoint) -> Option<f64> {
        let sd = self.dict_products(&z.y).gram_norm.sqrt();
        let sw = self.code_products(&z.x).gram_norm.sqrt();
        let r = self.residual(&z.x, &z.y);
        Some((sd + sw) * (sd + sw) + frob(&r.view()))
    }
}

/// Unit-norm dictionary (n×m).
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary(Mat);

impl Dictionary {
    pub fn new(d: Mat) -> Result<Self> {
        for (j, c) in d.columns().into_iter().enumerate() {
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > FEASIBILITY_TOL {
                return Err(IpadError::Config(format!("dictionary column {j} has norm {norm}")));
            }
        }
        Ok(Self(d))
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_inner(self) -> Mat {
        self.0
    }
}

/// Code matrix (p×m), optionally box-bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeMatrix(Mat);

impl CodeMatrix {
    pub fn new(w: Mat, bound: Option<f64>) -> Result<Self> {
        if let Some(b) = bound {
            if let Some(v) = w.iter().find(|v| v.abs() > b) {
                return Err(IpadError::Config(format!("code entry {v} exceeds the box {b}")));
            }
        }
        Ok(Self(w))
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_inner(self) -> Mat {
        self.0
    }
}
