use alloc::string::{String, ToString};

use super::params::{Grads, ParamStore};
use super::tape::{Tape, Var};
use crate::error::{Error, Result};

/// Denominator floor of the relative error. Central differences at step
/// 1e-5 carry rounding noise near 1e-10 on O(10) losses, so a true zero
/// gradient would otherwise score as a large relative error.
pub const REL_ERR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Parameter name and flat index of the worst element.
    pub worst: Option<(String, usize)>,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR);
    (analytic - numeric).abs() / denom
}

fn eval<F>(store: &ParamStore<f64>, f: &F) -> Result<f64>
where
    F: Fn(&mut Tape<'_, f64>) -> Result<Var>,
{
    let mut tape = Tape::new(store);
    let out = f(&mut tape)?;
    let v = tape.scalar(out);
    if !v.is_finite() {
        return Err(Error::NonFinite {
            op: tape.first_non_finite().unwrap_or("unknown"),
        });
    }
    Ok(v)
}

/// Compares reverse-mode gradients of the scalar built by `f` against central
/// differences with step `eps`, over every element of every parameter in
/// `store`. Returns the maximum relative error.
pub fn gradcheck<F>(store: &mut ParamStore<f64>, eps: f64, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<'_, f64>) -> Result<Var>,
{
    gradcheck_where(store, eps, |_| true, f)
}

/// [`gradcheck`] restricted to parameters whose name satisfies `select`.
pub fn gradcheck_where<S, F>(
    store: &mut ParamStore<f64>,
    eps: f64,
    select: S,
    f: F,
) -> Result<GradCheckReport>
where
    S: Fn(&str) -> bool,
    F: Fn(&mut Tape<'_, f64>) -> Result<Var>,
{
    let mut grads = Grads::zeros_like(store);
    {
        let mut tape = Tape::new(store);
        let out = f(&mut tape)?;
        tape.check_finite()?;
        tape.backward(out, &mut grads)?;
    }
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: None,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    let ids: alloc::vec::Vec<_> = store.ids().filter(|&id| select(store.name(id))).collect();
    for id in ids {
        for k in 0..store.get(id).len() {
            let orig = store.get(id).data()[k];
            store.get_mut(id).data_mut()[k] = orig + eps;
            let plus = eval(store, &f);
            store.get_mut(id).data_mut()[k] = orig - eps;
            let minus = eval(store, &f);
            store.get_mut(id).data_mut()[k] = orig;
            let numeric = (plus? - minus?) / (2.0 * eps);
            let analytic = grads.get(id).data()[k];
            let err = rel_err(analytic, numeric);
            report.checked += 1;
            if err > report.max_rel_err || report.worst.is_none() {
                report.max_rel_err = err;
                report.worst = Some((store.name(id).to_string(), k));
                report.analytic = analytic;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}
