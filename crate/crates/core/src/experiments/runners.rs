use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{fit_rate, trimmed_window, Cell, Dataset, ExperimentConfig, RateEstimate};
use crate::asc::{distance_curve, source_problem, theoretical_exponents, DistanceCurve, Regime};
use crate::choice::{alpha_apriori, alpha_discrepancy, alpha_oracle, Method, Rule};
use crate::error::{Error, Result};
use crate::grid::log_space;
use crate::problems::{
    add_noise, beta_for_mu, hilbert_norm, make_deriv2, make_diagonal_model,
    make_hilbert_scale_model, midpoints, Deriv2Solution, InverseProblem,
};
use crate::regularizers::{
    geometric_checkpoints, landweber_at, tikhonov, ProjectedData, RegularizedSolution,
};

pub(super) type Output = (
    Vec<Dataset>,
    BTreeMap<String, RateEstimate>,
    BTreeMap<String, f64>,
);

const DEFECT_KEY: &str = "max_range_defect";

fn max_defect<'a>(sols: impl IntoIterator<Item = &'a RegularizedSolution>) -> f64 {
    sols.into_iter()
        .filter_map(|s| s.range_defect)
        .fold(0.0, f64::max)
}

fn replicate(seed: u64, j: usize) -> u64 {
    seed.wrapping_add(j as u64)
}

fn tag(v: f64) -> String {
    format!("{v:?}")
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn boundary_ratio(x: &[f64]) -> f64 {
    let peak = max_abs(x);
    if peak == 0.0 {
        0.0
    } else {
        x[0].abs().max(x[x.len() - 1].abs()) / peak
    }
}

pub(super) fn boundary_effect(cfg: &ExperimentConfig) -> Result<Output> {
    let n = cfg.int("n");
    let solution = match cfg.text("solution") {
        "linear_t" => Deriv2Solution::LinearT,
        _ => Deriv2Solution::ConstantOne,
    };
    let problem = make_deriv2(n, solution, cfg.flag("normalize"))?;
    let grid = log_space(
        cfg.real("alpha-min"),
        cfg.real("alpha-max"),
        cfg.int("alpha-count"),
    );
    let t = midpoints(n);
    let mut metrics = BTreeMap::new();
    let mut defect = 0.0f64;

    let deltas = cfg.reals("deltas");
    let mut by_delta = Dataset::new(
        "boundary_effect",
        ["t".to_string(), "x_true".to_string()]
            .into_iter()
            .chain(deltas.iter().map(|d| format!("x_rec_delta_{}", tag(*d)))),
    );
    let mut columns = Vec::new();
    for &d in deltas {
        let sample = add_noise(&problem, d, cfg.seed)?;
        let choice = alpha_oracle(&problem, &sample.y_delta, Method::Classical, &grid)?;
        let sol = tikhonov(&problem, &sample.y_delta, choice.alpha, 0)?;
        defect = defect.max(max_defect([&sol]));
        let x = sol.native(&problem);
        metrics.insert(
            format!("boundary_ratio_delta_{}", tag(d)),
            boundary_ratio(&x),
        );
        metrics.insert(format!("oracle_alpha_delta_{}", tag(d)), choice.alpha);
        metrics.insert(
            format!("error_delta_{}", tag(d)),
            sol.error_norm.unwrap_or(f64::NAN),
        );
        columns.push(x);
    }
    for i in 0..n {
        let mut row: Vec<Cell> = vec![t[i].into(), problem.x_true()[i].into()];
        row.extend(columns.iter().map(|c| Cell::Num(c[i])));
        by_delta.push(row);
    }

    let alphas = cfg.reals("alphas");
    let fixed = add_noise(&problem, cfg.real("fixed-delta"), cfg.seed)?;
    let mut by_alpha = Dataset::new(
        "boundary_effect_alpha",
        ["t".to_string(), "x_true".to_string()]
            .into_iter()
            .chain(alphas.iter().map(|a| format!("x_rec_alpha_{}", tag(*a)))),
    );
    let mut columns = Vec::new();
    for &a in alphas {
        let sol = tikhonov(&problem, &fixed.y_delta, a, 0)?;
        defect = defect.max(max_defect([&sol]));
        let x = sol.native(&problem);
        metrics.insert(
            format!("boundary_ratio_alpha_{}", tag(a)),
            boundary_ratio(&x),
        );
        columns.push(x);
    }
    for i in 0..n {
        let mut row: Vec<Cell> = vec![t[i].into(), problem.x_true()[i].into()];
        row.extend(columns.iter().map(|c| Cell::Num(c[i])));
        by_alpha.push(row);
    }
    metrics.insert(DEFECT_KEY.into(), defect);
    Ok((vec![by_delta, by_alpha], BTreeMap::new(), metrics))
}

fn curve_dataset(name: &str, curve: &DistanceCurve) -> Dataset {
    let mut d = Dataset::new(name, ["R", "d", "lambda", "regime_flag"]);
    for p in &curve.points {
        d.push(vec![
            p.r.into(),
            p.d.into(),
            p.lambda.into(),
            p.regime.as_str().into(),
        ]);
    }
    d
}

/// Fit over the fittable points of a curve after trimming both ends.
fn fit_curve(curve: &DistanceCurve, trim: f64, regime: Option<Regime>) -> Option<RateEstimate> {
    let pts: Vec<(f64, f64)> = curve
        .fittable()
        .filter(|p| regime.is_none_or(|r| p.regime == r))
        .map(|p| (p.r, p.d))
        .collect();
    let window = trimmed_window(pts.len(), trim);
    fit_rate(&pts, Some(window)).ok()
}

pub(super) fn asc_curves(cfg: &ExperimentConfig) -> Result<Output> {
    let n = cfg.int("n");
    let (eta, beta) = (cfg.real("eta"), cfg.real("beta"));
    let grid = log_space(cfg.real("r-min"), cfg.real("r-max"), cfg.int("points"));
    let trim = cfg.real("trim");
    let mut datasets = Vec::new();
    let mut fits = BTreeMap::new();
    let mut metrics = BTreeMap::new();
    let mut curves = BTreeMap::new();
    for (variant, lead) in [("plain", 0), ("lead", cfg.int("leading-ones"))] {
        let p = make_diagonal_model(n, eta, beta, lead)?;
        for nu in [0.0, 0.5] {
            let curve = distance_curve(p.op(), p.x_true(), nu, 0.5, &grid)?;
            let key = format!("{variant}_nu_{}", tag(nu));
            if let Some(f) = fit_curve(&curve, trim, None) {
                fits.insert(key.clone(), f);
            }
            datasets.push(curve_dataset(&format!("asc_curves_{key}"), &curve));
            curves.insert(key, curve);
        }
        if variant == "plain" {
            let mu = p.mu_nominal().unwrap_or(f64::NAN);
            for nu in [0.0, 0.5] {
                if let Ok(e) = theoretical_exponents(mu, nu, 0.5, Method::Classical) {
                    metrics.insert(format!("theory_nu_{}", tag(nu)), e.distance_exponent);
                }
            }
        }
    }
    for nu in ["0.0", "0.5"] {
        let plain = &curves[&format!("plain_nu_{nu}")];
        let lead = &curves[&format!("lead_nu_{nu}")];
        let quarter = (plain.points.len() / 4).max(1);
        let dev = plain.points[..quarter]
            .iter()
            .zip(&lead.points[..quarter])
            .map(|(a, b)| (b.d / a.d - 1.0).abs())
            .fold(0.0, f64::max);
        metrics.insert(format!("small_r_deviation_nu_{nu}"), dev);
    }
    Ok((datasets, fits, metrics))
}

pub(super) fn discrete_asc(cfg: &ExperimentConfig) -> Result<Output> {
    let (eta, beta) = (cfg.real("eta"), cfg.real("beta"));
    let lambdas = log_space(
        cfg.real("lambda-max"),
        cfg.real("lambda-min"),
        cfg.int("points"),
    );
    let mut table = Dataset::new("discrete_asc", ["n", "R", "d", "lambda", "regime_flag"]);
    let mut fits = BTreeMap::new();
    let mut metrics = BTreeMap::new();
    for n in cfg.ints("sizes") {
        let p = make_diagonal_model(n, eta, beta, 0)?;
        let lp = source_problem(p.op(), p.x_true(), 0.0, 0.5)?;
        let w_norm = lp.radius_sup();
        let mut radii: Vec<f64> = lambdas.iter().map(|&l| lp.radius(l)).collect();
        radii.extend([w_norm, 2.0 * w_norm, 4.0 * w_norm]);
        radii.sort_by(f64::total_cmp);
        radii.dedup_by(|a, b| *a <= *b * (1.0 + 1e-12));
        let curve = distance_curve(p.op(), p.x_true(), 0.0, 0.5, &radii)?;
        for q in &curve.points {
            table.push(vec![
                n.into(),
                q.r.into(),
                q.d.into(),
                q.lambda.into(),
                q.regime.as_str().into(),
            ]);
        }
        for regime in [Regime::Continuum, Regime::Discrete] {
            if let Some(f) = fit_curve(&curve, 0.0, Some(regime)) {
                fits.insert(format!("n_{n}_{}", regime.as_str()), f);
            }
        }
        let x_norm = p.x_true().norm();
        let beyond = curve
            .points
            .iter()
            .filter(|q| q.r >= w_norm)
            .map(|q| q.d.abs() / x_norm)
            .fold(0.0, f64::max);
        metrics.insert(format!("n_{n}_w_norm"), w_norm);
        metrics.insert(format!("n_{n}_max_rel_d_beyond_w"), beyond);
        let floor_hits = curve
            .points
            .iter()
            .filter(|q| matches!(q.regime, Regime::Floor | Regime::Saturated))
            .count();
        metrics.insert(format!("n_{n}_floor_points"), floor_hits as f64);
    }
    Ok((vec![table], fits, metrics))
}

pub(super) fn source_growth(cfg: &ExperimentConfig) -> Result<Output> {
    let p = make_diagonal_model(cfg.int("n"), cfg.real("eta"), cfg.real("beta"), 0)?;
    let grid = log_space(
        cfg.real("alpha-min"),
        cfg.real("alpha-max"),
        cfg.int("alpha-count"),
    );
    let sols: Vec<RegularizedSolution> = grid
        .par_iter()
        .map(|&a| tikhonov(&p, p.y_exact(), a, 0))
        .collect::<Result<_>>()?;
    let mut table = Dataset::new("source_growth", ["alpha", "xi_norm", "residual", "error"]);
    for s in &sols {
        table.push(vec![
            s.alpha.unwrap_or(f64::NAN).into(),
            s.source_norm_half.unwrap_or(f64::NAN).into(),
            s.residual_norm.into(),
            s.error_norm.unwrap_or(f64::NAN).into(),
        ]);
    }
    let sigma_n = *p.op().sigmas().last().expect("nonempty spectrum");
    let knee = sigma_n * sigma_n;
    let pts: Vec<(f64, f64)> = sols
        .iter()
        .map(|s| {
            (
                s.alpha.unwrap_or(f64::NAN),
                s.source_norm_half.unwrap_or(f64::NAN),
            )
        })
        .collect();
    let select = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
        pts.iter()
            .copied()
            .filter(|(a, _)| *a >= lo && *a <= hi)
            .collect()
    };
    let mut fits = BTreeMap::new();
    if let Ok(f) = fit_rate(&select(1e3 * knee, 1e-2), None) {
        fits.insert("pre_saturation".into(), f);
    }
    if let Ok(f) = fit_rate(&select(0.0, 1e-3 * knee), None) {
        fits.insert("plateau".into(), f);
    }
    let mut metrics = BTreeMap::new();
    metrics.insert("saturation_alpha".into(), knee);
    if let Some(mu) = p.mu_nominal() {
        metrics.insert("theory_pre_saturation".into(), mu - 0.5);
    }
    metrics.insert(DEFECT_KEY.into(), max_defect(&sols));
    Ok((vec![table], fits, metrics))
}

struct Trial {
    delta: f64,
    seed: u64,
    alpha: f64,
    sol: RegularizedSolution,
}

/// Runs `choose` for every (delta, replicate) pair in parallel, in order.
fn sweep<F>(
    problem: &InverseProblem,
    cfg: &ExperimentConfig,
    method: Method,
    choose: F,
) -> Result<Vec<Trial>>
where
    F: Fn(&InverseProblem, &crate::ops::CoefVector, f64) -> Result<f64> + Sync,
{
    let seeds = cfg.int("seeds");
    let tasks: Vec<(f64, u64)> = cfg
        .reals("deltas")
        .iter()
        .flat_map(|&d| (0..seeds).map(move |j| (d, replicate(cfg.seed, j))))
        .collect();
    tasks
        .par_iter()
        .map(|&(delta, seed)| {
            let sample = add_noise(problem, delta, seed)?;
            let alpha = choose(problem, &sample.y_delta, sample.delta_abs)?;
            let proj = ProjectedData::new(problem, &sample.y_delta)?;
            let sol = method.solve(problem, &proj, alpha)?;
            Ok(Trial {
                delta,
                seed,
                alpha,
                sol,
            })
        })
        .collect()
}

/// Geometric means per noise level, in first-seen order.
fn log_means(trials: &[Trial], value: impl Fn(&Trial) -> f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for t in trials {
        let v = value(t).ln();
        match out.iter_mut().find(|(d, _, _)| *d == t.delta) {
            Some(e) => {
                e.1 += v;
                e.2 += 1;
            }
            None => out.push((t.delta, v, 1)),
        }
    }
    out.into_iter()
        .map(|(d, s, c)| (d, (s / c as f64).exp()))
        .collect()
}

fn push_trials(table: &mut Dataset, trials: &[Trial], rule: Rule, extra: &[Cell]) {
    for t in trials {
        let mut row: Vec<Cell> = vec![
            t.delta.into(),
            t.alpha.into(),
            t.sol.error_norm.unwrap_or(f64::NAN).into(),
            t.sol.residual_norm.into(),
            rule.as_str().into(),
            t.seed.into(),
        ];
        row.extend_from_slice(extra);
        table.push(row);
    }
}

fn insert_fit(
    fits: &mut BTreeMap<String, RateEstimate>,
    key: String,
    pts: &[(f64, f64)],
) -> Result<()> {
    fits.insert(key, fit_rate(pts, None)?);
    Ok(())
}

pub(super) fn rate_table(cfg: &ExperimentConfig) -> Result<Output> {
    let (eta, mu) = (cfg.real("eta"), cfg.real("mu"));
    let p = make_diagonal_model(cfg.int("n"), eta, beta_for_mu(mu, eta), 0)?;
    let (c, tau) = (cfg.real("c"), cfg.real("tau"));
    let interval = (cfg.real("alpha-min"), cfg.real("alpha-max"));
    let apriori = sweep(&p, cfg, Method::Classical, |_, _, d| {
        Ok(alpha_apriori(d, mu, Method::Classical, c)?.alpha)
    })?;
    let discrepancy = sweep(&p, cfg, Method::Classical, |pr, y, d| {
        Ok(alpha_discrepancy(pr, y, d, tau, Method::Classical, interval)?.alpha)
    })?;
    let mut table = Dataset::new(
        "rate_table",
        ["delta", "alpha", "error", "residual", "rule", "seed"],
    );
    push_trials(&mut table, &apriori, Rule::Apriori, &[]);
    push_trials(&mut table, &discrepancy, Rule::Discrepancy, &[]);

    let mut fits = BTreeMap::new();
    for (rule, trials) in [(Rule::Apriori, &apriori), (Rule::Discrepancy, &discrepancy)] {
        let name = rule.as_str();
        insert_fit(
            &mut fits,
            format!("error_{name}"),
            &log_means(trials, |t| t.sol.error_norm.unwrap_or(f64::NAN)),
        )?;
        insert_fit(
            &mut fits,
            format!("alpha_{name}"),
            &log_means(trials, |t| t.alpha),
        )?;
        insert_fit(
            &mut fits,
            format!("residual_{name}"),
            &log_means(trials, |t| t.sol.residual_norm),
        )?;
    }
    let mut metrics = BTreeMap::new();
    let e = theoretical_exponents(mu, 0.0, 0.5, Method::Classical);
    if let Ok(e) = e {
        metrics.insert("theory_error".into(), e.rate_exponent);
        metrics.insert("theory_alpha".into(), e.apriori_exponent);
    }
    metrics.insert(
        DEFECT_KEY.into(),
        max_defect(apriori.iter().chain(&discrepancy).map(|t| &t.sol)),
    );
    Ok((vec![table], fits, metrics))
}

pub(super) fn high_order_saturation(cfg: &ExperimentConfig) -> Result<Output> {
    let eta = cfg.real("eta");
    let kappa_order = cfg.int("kappa-order") as u32;
    let method = Method::HighOrder { kappa_order };
    let tau = cfg.real("tau");
    let interval = (cfg.real("alpha-min"), cfg.real("alpha-max"));
    let mut table = Dataset::new(
        "high_order_saturation",
        ["delta", "alpha", "error", "residual", "rule", "seed", "mu"],
    );
    let mut fits = BTreeMap::new();
    let mut metrics = BTreeMap::new();
    let mut defect = 0.0f64;
    for &mu in cfg.reals("mus") {
        let p = make_diagonal_model(cfg.int("n"), eta, beta_for_mu(mu, eta), 0)?;
        let trials = sweep(&p, cfg, method, |pr, y, d| {
            Ok(alpha_discrepancy(pr, y, d, tau, method, interval)?.alpha)
        })?;
        push_trials(&mut table, &trials, Rule::Discrepancy, &[mu.into()]);
        let key = tag(mu);
        insert_fit(
            &mut fits,
            format!("error_mu_{key}"),
            &log_means(&trials, |t| t.sol.error_norm.unwrap_or(f64::NAN)),
        )?;
        insert_fit(
            &mut fits,
            format!("alpha_mu_{key}"),
            &log_means(&trials, |t| t.alpha),
        )?;
        metrics.insert(format!("theory_mu_{key}"), 2.0 * mu / (2.0 * mu + 1.0));
        defect = defect.max(max_defect(trials.iter().map(|t| &t.sol)));
    }
    metrics.insert(DEFECT_KEY.into(), defect);
    Ok((vec![table], fits, metrics))
}

pub(super) fn oversmoothing_rate(cfg: &ExperimentConfig) -> Result<Output> {
    let n = cfg.int("n");
    let (a, p_idx, s) = (cfg.real("a"), cfg.real("p"), cfg.real("s"));
    let method = Method::Hilbert { a, p: p_idx, s };
    method
        .check_admissible(p_idx / (2.0 * a))
        .map_err(|e| Error::Configuration(e.to_string()))?;
    let problem = make_hilbert_scale_model(n, a, p_idx, s)?;
    let c = cfg.real("c");
    let mu = p_idx / (2.0 * a);
    let trials = sweep(&problem, cfg, method, |_, _, d| {
        Ok(alpha_apriori(d, mu, method, c)?.alpha)
    })?;
    let mut table = Dataset::new(
        "oversmoothing_rate",
        ["delta", "alpha", "error", "residual", "rule", "seed"],
    );
    push_trials(&mut table, &trials, Rule::Apriori, &[]);
    let mut fits = BTreeMap::new();
    insert_fit(
        &mut fits,
        "error".into(),
        &log_means(&trials, |t| t.sol.error_norm.unwrap_or(f64::NAN)),
    )?;
    insert_fit(&mut fits, "alpha".into(), &log_means(&trials, |t| t.alpha))?;

    let mut metrics = BTreeMap::new();
    let weights = problem
        .hilbert_weights()
        .expect("Hilbert-scale model has weights");
    let half = (n / 2).max(1);
    let true_full = hilbert_norm(weights, problem.x_true(), s);
    let true_half = hilbert_norm(&weights[..half], &problem.x_true()[..half], s);
    metrics.insert("penalty_growth_true".into(), true_full / true_half);
    if let Some(t) = trials.last() {
        let full = hilbert_norm(weights, &t.sol.coefs, s);
        let part = hilbert_norm(&weights[..half], &t.sol.coefs[..half], s);
        metrics.insert("penalty_growth_solution".into(), full / part);
    }
    metrics.insert("theory_error".into(), p_idx / (a + p_idx));
    metrics.insert(DEFECT_KEY.into(), max_defect(trials.iter().map(|t| &t.sol)));
    Ok((vec![table], fits, metrics))
}

/// Piecewise-linear interpolation of `log y` over `log x`; `xs` increasing.
fn interp_loglog(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let lx = x.ln();
    let j = xs.partition_point(|v| *v < x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[j - 1].ln(), xs[j].ln());
    let (y0, y1) = (ys[j - 1].ln(), ys[j].ln());
    if x1 == x0 {
        return ys[j].max(ys[j - 1]);
    }
    (y0 + (lx - x0) / (x1 - x0) * (y1 - y0)).exp()
}

/// Sorted `(w, value)` curve with nonpositive entries dropped.
fn sorted_curve(points: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(w, v)| *w > 0.0 && *v > 0.0)
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.into_iter().unzip()
}

/// Largest `|a - b| / b` between two curves over their common abscissa range,
/// checked at every sample point of either curve inside it.
pub(crate) fn sup_relative_deviation(a: &[(f64, f64)], b: &[(f64, f64)]) -> Option<f64> {
    let (ax, ay) = sorted_curve(a);
    let (bx, by) = sorted_curve(b);
    if ax.len() < 2 || bx.len() < 2 {
        return None;
    }
    let lo = ax[0].max(bx[0]);
    let hi = ax[ax.len() - 1].min(bx[bx.len() - 1]);
    if lo >= hi {
        return None;
    }
    ax.iter()
        .chain(&bx)
        .copied()
        .filter(|w| *w >= lo && *w <= hi)
        .map(|w| {
            let va = interp_loglog(&ax, &ay, w);
            let vb = interp_loglog(&bx, &by, w);
            (va - vb).abs() / vb
        })
        .reduce(f64::max)
}

pub(super) fn landweber_vs_tikhonov(cfg: &ExperimentConfig) -> Result<Output> {
    let p = make_diagonal_model(cfg.int("n"), cfg.real("eta"), cfg.real("beta"), 0)?;
    let step = cfg.real("step");
    let sigma1 = p.op().sigmas()[0];
    if step >= 2.0 / (sigma1 * sigma1) {
        return Err(Error::Configuration(format!(
            "--step must be below {}",
            2.0 / (sigma1 * sigma1)
        )));
    }
    let alphas: Vec<f64> = (1..=cfg.int("alpha-count"))
        .map(|j| cfg.real("alpha-base").powi(j as i32))
        .collect();
    let checkpoints = geometric_checkpoints(cfg.int("k-max"), cfg.int("per-octave"));
    let mut table = Dataset::new(
        "landweber_vs_tikhonov",
        [
            "method",
            "w_norm",
            "error",
            "residual",
            "alpha_or_k",
            "delta",
        ],
    );
    let mut metrics = BTreeMap::new();
    let mut defect = 0.0f64;
    for &delta in cfg.reals("deltas") {
        let sample = add_noise(&p, delta, cfg.seed)?;
        let proj = ProjectedData::new(&p, &sample.y_delta)?;
        let tik: Vec<RegularizedSolution> = alphas
            .par_iter()
            .map(|&a| Method::Classical.solve(&p, &proj, a))
            .collect::<Result<_>>()?;
        defect = defect.max(max_defect(&tik));
        let lw = landweber_at(&p, &sample.y_delta, step, &checkpoints, None, true)?;
        for s in &tik {
            table.push(vec![
                "tikhonov".into(),
                s.source_norm_half.unwrap_or(f64::NAN).into(),
                s.error_norm.unwrap_or(f64::NAN).into(),
                s.residual_norm.into(),
                s.alpha.unwrap_or(f64::NAN).into(),
                delta.into(),
            ]);
        }
        for s in &lw {
            table.push(vec![
                "landweber".into(),
                s.source_norm_half.unwrap_or(f64::NAN).into(),
                s.error_norm.unwrap_or(f64::NAN).into(),
                s.residual_norm.into(),
                (s.iteration.unwrap_or(0) as f64).into(),
                delta.into(),
            ]);
        }
        let curve = |sols: &[RegularizedSolution],
                     f: &dyn Fn(&RegularizedSolution) -> f64|
         -> Vec<(f64, f64)> {
            sols.iter()
                .map(|s| (s.source_norm_half.unwrap_or(f64::NAN), f(s)))
                .collect()
        };
        let err = |s: &RegularizedSolution| s.error_norm.unwrap_or(f64::NAN);
        let res = |s: &RegularizedSolution| s.residual_norm;
        if let Some(dev) = sup_relative_deviation(&curve(&tik, &err), &curve(&lw, &err)) {
            metrics.insert(format!("sup_error_deviation_delta_{}", tag(delta)), dev);
        }
        if let Some(dev) = sup_relative_deviation(&curve(&tik, &res), &curve(&lw, &res)) {
            metrics.insert(format!("sup_residual_deviation_delta_{}", tag(delta)), dev);
        }
        let w_max = |sols: &[RegularizedSolution]| {
            sols.iter()
                .filter_map(|s| s.source_norm_half)
                .fold(0.0, f64::max)
        };
        metrics.insert(format!("tikhonov_w_max_delta_{}", tag(delta)), w_max(&tik));
        metrics.insert(format!("landweber_w_max_delta_{}", tag(delta)), w_max(&lw));
    }
    metrics.insert(DEFECT_KEY.into(), defect);
    Ok((vec![table], BTreeMap::new(), metrics))
}
