use nalgebra::{DMatrix, DVector};

use super::design::DesignMatrix;
use super::{FitDiagnostics, FittedModel, Link};
use crate::error::{Error, Result};

/// Relative size below which the part of a column orthogonal to the
/// columns before it counts as zero.
const ALIAS_TOL: f64 = 1e-7;

pub const IRLS_MAX_ITER: usize = 25;
pub const IRLS_TOL: f64 = 1e-8;
const MAX_HALVINGS: usize = 30;

fn centered(x: &DMatrix<f64>, means: &[f64]) -> DMatrix<f64> {
    let mut c = x.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    c
}

/// Solves `min ||a - Q R b||` for the upper-triangular system, reporting
/// aliased columns by name.
fn qr_solve(a: DMatrix<f64>, rhs: &DVector<f64>, names: &[String]) -> Result<DVector<f64>> {
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let qr = a.qr();
    let r = qr.r();
    let aliased: Vec<String> = (0..r.ncols())
        .filter(|&j| r[(j, j)].abs() <= ALIAS_TOL * norms[j] || norms[j] == 0.0)
        .map(|j| names[j].clone())
        .collect();
    if !aliased.is_empty() {
        return Err(Error::RankDeficient(aliased));
    }
    let qtb = qr.q().transpose() * rhs;
    r.solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))
}

fn column_names(x: &DesignMatrix) -> Vec<String> {
    x.columns.iter().map(|c| c.name.clone()).collect()
}

fn check_size(x: &DesignMatrix) -> Result<()> {
    let (n, k) = (x.n_rows(), x.n_cols());
    if n <= k + 1 {
        return Err(Error::Underdetermined { n, k });
    }
    Ok(())
}

fn model_from(x: &DesignMatrix, link: Link, intercept: f64, coef: Vec<f64>, diag: FitDiagnostics) -> FittedModel {
    FittedModel {
        link,
        response: x.response.clone(),
        intercept,
        terms: x.terms.clone(),
        coefficients: coef,
        train_means: x.column_means(),
        diagnostics: diag,
    }
}

/// Least squares with an intercept, solved by QR of the column-centered
/// design.
pub fn fit_ols(x: &DesignMatrix, y: &[f64]) -> Result<FittedModel> {
    check_size(x)?;
    let means = x.column_means();
    let n = y.len() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let yc = DVector::from_iterator(y.len(), y.iter().map(|v| v - y_mean));
    let b = qr_solve(centered(&x.values, &means), &yc, &column_names(x))?;
    let intercept = y_mean - b.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    let diag = FitDiagnostics { iterations: 1, converged: true, n_obs: y.len(), deviance: None };
    Ok(model_from(x, Link::Identity, intercept, b.iter().copied().collect(), diag))
}

fn logistic(eta: f64) -> f64 {
    super::inverse_logit(eta)
}

/// Bernoulli deviance, -2 log-likelihood.
pub fn binomial_deviance(y: &[f64], eta: &[f64]) -> f64 {
    y.iter()
        .zip(eta)
        .map(|(&y, &e)| {
            // log(1 + exp(-|e|)) + max(e, 0) - y e  is  -loglik for one case
            let softplus = (-e.abs()).exp().ln_1p() + e.max(0.0);
            2.0 * (softplus - y * e)
        })
        .sum()
}

/// Logistic regression by iteratively reweighted least squares, started
/// from the intercept-only fit. Steps that raise the deviance are halved.
pub fn fit_logistic(x: &DesignMatrix, y: &[f64]) -> Result<FittedModel> {
    let name = &x.response.column;
    for &v in y {
        if v != 0.0 && v != 1.0 {
            return Err(Error::NotBinary { column: name.clone(), value: v });
        }
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == y.len() {
        return Err(Error::OneClass(name.clone()));
    }
    check_size(x)?;
    let names = column_names(x);
    let means = x.column_means();
    // rank check on the unweighted centered design
    qr_solve(centered(&x.values, &means), &DVector::zeros(x.n_rows()), &names)?;

    let n = x.n_rows();
    let k = x.n_cols();
    let mut z_mat = DMatrix::from_element(n, k + 1, 1.0);
    z_mat.columns_mut(1, k).copy_from(&x.values);
    let mut all_names = vec!["(Intercept)".to_string()];
    all_names.extend(names);

    let p = ones as f64 / n as f64;
    let mut beta = DVector::zeros(k + 1);
    beta[0] = (p / (1.0 - p)).ln();
    let mut eta: Vec<f64> = (&z_mat * &beta).iter().copied().collect();
    let mut dev = binomial_deviance(y, &eta);

    let mut converged = false;
    let mut polish = false;
    let mut iterations = 0;
    while iterations < IRLS_MAX_ITER {
        iterations += 1;
        let mut wz = z_mat.clone();
        let mut rhs = DVector::zeros(n);
        for i in 0..n {
            let mu = logistic(eta[i]);
            let w = (mu * (1.0 - mu)).max(f64::MIN_POSITIVE);
            let sw = w.sqrt();
            wz.row_mut(i).scale_mut(sw);
            rhs[i] = sw * (eta[i] + (y[i] - mu) / w);
        }
        let mut next = qr_solve(wz, &rhs, &all_names)?;
        // step halving while the deviance goes up
        let mut halvings = 0;
        let (next_eta, new_dev) = loop {
            let e: Vec<f64> = (&z_mat * &next).iter().copied().collect();
            let d = binomial_deviance(y, &e);
            if d.is_finite() && d - dev <= 1e-10 * (dev.abs() + 0.1) {
                break (e, d);
            }
            if halvings == MAX_HALVINGS {
                break (eta.clone(), dev);
            }
            halvings += 1;
            next = (&next + &beta) * 0.5;
        };
        if halvings == MAX_HALVINGS {
            converged = polish;
            break;
        }
        let step = (&next - &beta).amax();
        let dev_change = (new_dev - dev).abs() / (new_dev.abs() + 0.1);
        beta = next;
        eta = next_eta;
        dev = new_dev;
        if polish || step < IRLS_TOL {
            converged = true;
            break;
        }
        // one more Newton step once the deviance has settled
        polish = dev_change < IRLS_TOL;
    }
    converged |= polish;
    if !converged {
        eprintln!(
            "warning: logistic fit did not converge in {IRLS_MAX_ITER} iterations; \
             the classes may be (quasi-)separated"
        );
    }
    let diag = FitDiagnostics { iterations, converged, n_obs: n, deviance: Some(dev) };
    let coef = beta.iter().skip(1).copied().collect();
    Ok(model_from(x, Link::Logit, beta[0], coef, diag))
}
