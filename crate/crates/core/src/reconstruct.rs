//! Online error-accumulation-minimization reconstruction.
//!
//! Calibration statistics are folded into two running sums, so memory stays
//! `O(n^2 + mn)` no matter how many samples are seen:
//!
//! * `xxt  = sum x_u x_u^T`
//! * `ytxt = sum (lambda W x_o + (1 - lambda) W x_u) x_u^T`
//!
//! where `x_o` is the dense-flow input and `x_u` the compressed-flow input of
//! the layer. The reconstruction target `Y_t` mixes the two flows' outputs.

use serde::{Deserialize, Serialize};

use crate::decomp::{condition_number, singular_threshold, solve_linear};
use crate::error::{Error, Result};
use crate::lowrank::LowRankFactors;
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    /// Mix ratio of the dense-flow output in the target.
    pub lambda: f64,
    /// Ridge weight for the `V^T` update only.
    pub alpha: f64,
    pub update_u: bool,
    pub update_v: bool,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            lambda: 0.25,
            alpha: 0.001,
            update_u: true,
            update_v: true,
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if self.alpha.is_nan() || self.alpha < 0.0 || !self.alpha.is_finite() {
            return Err(Error::Invalid(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if !self.update_u && !self.update_v {
            return Err(Error::Invalid("reconstruction must update U, V, or both".into()));
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Invalid(format!(
            "mix ratio lambda must lie in [0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// Running calibration sums for one `m x n` layer.
#[derive(Clone, Debug)]
pub struct CalibrationAccumulator<T> {
    xxt: DenseMatrix<T>,
    ytxt: DenseMatrix<T>,
    samples: usize,
    lambda: T,
}

impl<T: Scalar> CalibrationAccumulator<T> {
    pub fn new(m: usize, n: usize, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            xxt: DenseMatrix::zeros(n, n),
            ytxt: DenseMatrix::zeros(m, n),
            samples: 0,
            lambda: T::of(lambda),
        })
    }

    /// Folds in the columns of `x_o` (dense flow) and `x_u` (compressed flow).
    pub fn accumulate(&mut self, w: &DenseMatrix<T>, x_o: &DenseMatrix<T>, x_u: &DenseMatrix<T>) -> Result<()> {
        let (m, n) = self.ytxt.shape();
        if w.shape() != (m, n) || x_o.rows() != n || x_u.rows() != n || x_o.cols() != x_u.cols() {
            return Err(Error::shape(
                "accumulate",
                format!(
                    "accumulator {m}x{n}, weight {:?}, x_o {:?}, x_u {:?}",
                    w.shape(),
                    x_o.shape(),
                    x_u.shape()
                ),
            ));
        }
        let lam = self.lambda;
        let mut mixed = x_o.scale(lam);
        mixed.axpy(T::one() - lam, x_u)?;
        let y_t = w.matmul(&mixed)?;
        let x_ut = x_u.transpose();
        self.ytxt = self.ytxt.add(&y_t.matmul(&x_ut)?)?;
        self.xxt = self.xxt.add(&x_u.gram())?;
        self.samples += x_u.cols();
        Ok(())
    }

    pub fn xxt(&self) -> &DenseMatrix<T> {
        &self.xxt
    }

    pub fn ytxt(&self) -> &DenseMatrix<T> {
        &self.ytxt
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn m(&self) -> usize {
        self.ytxt.rows()
    }

    pub fn n(&self) -> usize {
        self.xxt.rows()
    }

    /// Heap bytes held by the two running sums.
    pub fn allocated_bytes(&self) -> usize {
        self.xxt.allocated_bytes() + self.ytxt.allocated_bytes()
    }
}

fn symmetrize<T: Scalar>(a: &DenseMatrix<T>) -> DenseMatrix<T> {
    let half = T::of(0.5);
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| half * (a.get(i, j) + a.get(j, i)))
}

fn inner_system<T: Scalar>(acc: &CalibrationAccumulator<T>, vt: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if vt.cols() != acc.n() {
        return Err(Error::shape(
            "reconstruct_u",
            format!("V^T has {} columns, layer input is {}", vt.cols(), acc.n()),
        ));
    }
    Ok(symmetrize(&vt.matmul(acc.xxt())?.matmul(&vt.transpose())?))
}

/// `U_r = (Y_t X^T) V (V^T (X X^T) V)^{-1}`.
pub fn reconstruct_u<T: Scalar>(acc: &CalibrationAccumulator<T>, vt: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if acc.samples() == 0 {
        return Err(Error::Invalid(
            "reconstruct_u needs at least one calibration sample".into(),
        ));
    }
    let inner = inner_system(acc, vt)?;
    let cond = condition_number(&inner)?;
    if cond > singular_threshold::<T>(inner.rows()) {
        return Err(Error::Singular {
            op: "reconstruct_u",
            condition: cond.as_f64(),
            hint: "",
        });
    }
    let rhs = acc.ytxt().matmul(&vt.transpose())?;
    Ok(solve_linear(&inner, &rhs.transpose())?.transpose())
}

fn check_v_inputs<T: Scalar>(
    acc: &CalibrationAccumulator<T>,
    u: &DenseMatrix<T>,
    w: &DenseMatrix<T>,
    alpha: T,
) -> Result<()> {
    if u.rows() != acc.m() || w.shape() != (acc.m(), acc.n()) {
        return Err(Error::shape(
            "reconstruct_v",
            format!("U {:?}, W {:?}, layer {}x{}", u.shape(), w.shape(), acc.m(), acc.n()),
        ));
    }
    if alpha.is_nan() || alpha < T::zero() {
        return Err(Error::Invalid(format!("alpha must be >= 0, got {alpha}")));
    }
    Ok(())
}

/// `X X^T + alpha I`, rejected when singular.
fn regularized_gram<T: Scalar>(acc: &CalibrationAccumulator<T>, alpha: T) -> Result<DenseMatrix<T>> {
    let k = acc.xxt().add_diag(alpha);
    let cond = condition_number(&k)?;
    if cond > singular_threshold::<T>(k.rows()) {
        return Err(Error::Singular {
            op: "reconstruct_v",
            condition: cond.as_f64(),
            hint: if alpha == T::zero() {
                "; X X^T is singular, use alpha > 0"
            } else {
                ""
            },
        });
    }
    Ok(k)
}

/// `V_r^T = (U^T U)^{-1} U^T (Y_t X^T + alpha W) (X X^T + alpha I)^{-1}`.
///
/// `alpha = 0` is the unregularized closed form.
pub fn reconstruct_v<T: Scalar>(
    acc: &CalibrationAccumulator<T>,
    u: &DenseMatrix<T>,
    w: &DenseMatrix<T>,
    alpha: T,
) -> Result<DenseMatrix<T>> {
    check_v_inputs(acc, u, w, alpha)?;
    let k = regularized_gram(acc, alpha)?;
    let ut = u.transpose();
    let mut target = acc.ytxt().clone();
    target.axpy(alpha, w)?;
    let projected = solve_linear(&ut.matmul(u)?, &ut.matmul(&target)?)?;
    Ok(solve_linear(&k, &projected.transpose())?.transpose())
}

/// Same minimizer computed the long way round: first the unconstrained
/// least-squares weight `W* = (Y_t X^T + alpha W)(X X^T + alpha I)^{-1}`,
/// then its projection `(U^T U)^{-1} U^T W*`.
pub fn reconstruct_v_two_step<T: Scalar>(
    acc: &CalibrationAccumulator<T>,
    u: &DenseMatrix<T>,
    w: &DenseMatrix<T>,
    alpha: T,
) -> Result<DenseMatrix<T>> {
    check_v_inputs(acc, u, w, alpha)?;
    let k = regularized_gram(acc, alpha)?;
    let mut target = acc.ytxt().clone();
    target.axpy(alpha, w)?;
    let w_star = solve_linear(&k, &target.transpose())?.transpose();
    let ut = u.transpose();
    solve_linear(&ut.matmul(u)?, &ut.matmul(&w_star)?)
}

/// Condition numbers of the systems the closed forms invert. Infinite
/// values (exactly singular) serialize as `null`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub samples: usize,
    /// `cond(V^T (X X^T) V)`, the `U` update's system.
    #[serde(with = "infinite_as_null")]
    pub inner_u: f64,
    /// `cond(X X^T)`.
    #[serde(with = "infinite_as_null")]
    pub gram: f64,
    /// `cond(X X^T + alpha I)`, the system the `V^T` update actually solves.
    #[serde(with = "infinite_as_null")]
    pub gram_regularized: f64,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

pub fn condition_report<T: Scalar>(
    acc: &CalibrationAccumulator<T>,
    vt: &DenseMatrix<T>,
    alpha: T,
) -> Result<ConditionReport> {
    Ok(ConditionReport {
        samples: acc.samples(),
        inner_u: condition_number(&inner_system(acc, vt)?)?.as_f64(),
        gram: condition_number(acc.xxt())?.as_f64(),
        gram_regularized: condition_number(&acc.xxt().add_diag(alpha))?.as_f64(),
    })
}

#[derive(Clone, Debug)]
pub struct Reconstruction<T> {
    pub factors: LowRankFactors<T>,
    /// Diagnostics for the systems actually solved (taken against the
    /// incoming `V^T`, before any update).
    pub conditions: ConditionReport,
}

/// `U` first, then `V^T` against the updated `U`, reusing the same sums.
pub fn reconstruct_pair<T: Scalar>(
    acc: &CalibrationAccumulator<T>,
    factors: &LowRankFactors<T>,
    w: &DenseMatrix<T>,
    cfg: &ReconstructionConfig,
) -> Result<Reconstruction<T>> {
    cfg.validate()?;
    let alpha = T::of(cfg.alpha);
    let conditions = condition_report(acc, factors.vt(), alpha)?;
    let u = if cfg.update_u {
        reconstruct_u(acc, factors.vt())?
    } else {
        factors.u().clone()
    };
    let vt = if cfg.update_v {
        reconstruct_v(acc, &u, w, alpha)?
    } else {
        factors.vt().clone()
    };
    Ok(Reconstruction {
        factors: LowRankFactors::new(u, vt)?,
        conditions,
    })
}

/// `||Y_t - U V^T X_u||_F` evaluated on explicit calibration columns.
pub fn reconstruction_objective<T: Scalar>(
    w: &DenseMatrix<T>,
    factors: &LowRankFactors<T>,
    x_o: &DenseMatrix<T>,
    x_u: &DenseMatrix<T>,
    lambda: f64,
) -> Result<T> {
    let lam = T::of(lambda);
    let mut mixed = x_o.scale(lam);
    mixed.axpy(T::one() - lam, x_u)?;
    let target = w.matmul(&mixed)?;
    Ok(target.sub(&factors.forward(x_u)?)?.frobenius_norm())
}
