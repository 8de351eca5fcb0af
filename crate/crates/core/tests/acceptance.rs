//! Acceptance criteria, one line per criterion.
//!
//! Runs with `cargo test -p fsg-core --test acceptance`. Red criteria are
//! printed as `[FAIL]` but do not abort the run; set
//! `FSG_ACCEPTANCE_STRICT=1` to turn any red line into a non-zero exit.

use fsg_core::fsg::{
    blocks_from_params, optimal_precision_blocks, thermal_floor, tmsv_blocks, FsgBlocks, FsgParams,
};
use fsg_core::homodyne::{
    homodyne_cov, homodyne_cov_derivatives, homodyne_precision_ratio, mc_estimate,
    optimize_homodyne_angle, McConfig,
};
use fsg_core::metrology::{
    closed_form_privacy_of_optimum, fim_inverse, phase_generators, precision, privacy,
    qfim_fsg, qfim_fsg_with, qfim_general_gaussian, weight_matrix_spectrum, QfimModel,
    StructuredFim, WeightVector,
};
use fsg_core::optimizer::{maximize_precision, maximize_privacy, Objective, Problem};
use fsg_core::symplectic::{
    assemble_covariance, fsg_determinant, fsg_symplectic_eigenvalues, symplectic_spectrum_numeric,
};
use fsg_core::search::linspace;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn c1_closed_form_optimum() -> Line {
    let mut worst_xi = 0.0f64;
    let mut worst_p = 0.0f64;
    for m in 2..=6 {
        for n in [0.5, 1.0, 2.0, 10.0, 100.0] {
            let b = optimal_precision_blocks(m, n).unwrap();
            let f = qfim_fsg(&b).unwrap();
            let w = WeightVector::mean(m);
            worst_xi = worst_xi.max(rel(precision(&f, &w).unwrap(), 8.0 * n * (n + 1.0)));
            worst_p = worst_p.max((privacy(&f, &w).unwrap() - closed_form_privacy_of_optimum(m, n)).abs());
        }
    }
    Line {
        id: "1 closed-form optimum",
        pass: worst_xi <= 1e-8 && worst_p <= 1e-10,
        detail: format!("max rel err xi {worst_xi:.2e} (tol 1e-8), max |dP| {worst_p:.2e} (tol 1e-10)"),
    }
}

fn c2_tmsv() -> Line {
    let mut worst_xi = 0.0f64;
    let mut worst_p = 0.0f64;
    for n in [0.5, 1.0, 10.0, 100.0] {
        let f = qfim_fsg(&tmsv_blocks(n).unwrap()).unwrap();
        let w = WeightVector::mean(2);
        worst_xi = worst_xi.max(rel(precision(&f, &w).unwrap(), 4.0 * n * (n + 2.0)));
        worst_p = worst_p.max((privacy(&f, &w).unwrap() - 1.0).abs());
    }
    Line {
        id: "2 TMSV",
        pass: worst_xi <= 1e-10 && worst_p <= 1e-12,
        detail: format!("max rel err xi {worst_xi:.2e} (tol 1e-10), max |P-1| {worst_p:.2e} (tol 1e-12)"),
    }
}

fn c3_privacy_anchor() -> Line {
    let r = maximize_privacy(4, 0.0, 100.0).unwrap();
    let deficit = r.privacy_deficit.unwrap();
    let log_opt = deficit.log10();
    let log_plain = (1.0 - closed_form_privacy_of_optimum(4, 100.0)).log10();
    let pass = (log_opt + 2.42).abs() <= 0.05
        && (3e-3..=5e-3).contains(&deficit)
        && (log_plain + 1.83).abs() <= 0.01;
    Line {
        id: "3 privacy anchor M=4 N=100",
        pass,
        detail: format!(
            "log10(1-P) = {log_opt:.4} (want -2.42 +- 0.05), 1-P = {deficit:.3e} (want [3e-3, 5e-3]), \
             unoptimized log10(1-P) = {log_plain:.4} (want -1.83 +- 0.01)"
        ),
    }
}

fn loss_ratio(m: usize, n_th: f64, n: f64) -> f64 {
    maximize_privacy(m, n_th, n).unwrap().xi / maximize_precision(m, n_th, n).unwrap().xi
}

fn c4_precision_loss() -> Vec<Line> {
    let two: Vec<(f64, f64)> = [10.0, 100.0, 1000.0].iter().map(|&n| (n, loss_ratio(2, 0.0, n))).collect();
    let mut out = vec![Line {
        id: "4a loss ratio M=2",
        pass: two.iter().all(|&(_, r)| (0.45..=0.55).contains(&r)),
        detail: format!(
            "R = {} (want [0.45, 0.55])",
            two.iter().map(|(n, r)| format!("{r:.4}@N={n}")).collect::<Vec<_>>().join(", ")
        ),
    }];
    let mut cells = Vec::new();
    let mut pass = true;
    for m in 3..=6 {
        for n_th in [0.0, 1.0, 5.0] {
            if 100.0 < thermal_floor(m, n_th) {
                cells.push(format!("M={m},nth={n_th}: infeasible"));
                continue;
            }
            let r = loss_ratio(m, n_th, 100.0);
            pass &= r >= 0.9;
            cells.push(format!("M={m},nth={n_th}: {r:.4}{}", if r >= 0.9 { "" } else { " <0.9" }));
        }
    }
    out.push(Line { id: "4b loss ratio M=3..6 N=100", pass, detail: cells.join("; ") });
    out
}

fn c5_homodyne() -> Vec<Line> {
    let n = 100.0;
    let state = maximize_privacy(4, 0.0, n).unwrap();
    let hd = optimize_homodyne_angle(&state.blocks, &WeightVector::mean(4)).unwrap();
    let limit = 8.0 * n * (n + 1.0);
    let a = Line {
        id: "5a homodyne M=4 N=100",
        pass: hd.xi_hd >= 0.99 * limit,
        detail: format!(
            "xi_HD = {:.2} = {:.4} x 8N(N+1) (want >= 0.99); xi_HD / xi_QFIM(same state) = {:.4}",
            hd.xi_hd,
            hd.xi_hd / limit,
            hd.xi_hd / state.xi
        ),
    };
    let r = homodyne_precision_ratio(2, 0.0, 10.0).unwrap();
    let b = Line {
        id: "5b homodyne M=2 N=10",
        pass: (0.45..=0.55).contains(&r.r_hd),
        detail: format!("R_HD = {:.4} at theta_HD = {:.6} (want [0.45, 0.55])", r.r_hd, r.angle.theta_star),
    };
    vec![a, b]
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn c6_scaling() -> Line {
    let grid: Vec<f64> = linspace(1.0, 3.0, 25).into_iter().map(|e| 10f64.powf(e)).collect();
    let mut pass = true;
    let mut cells = Vec::new();
    for m in [2, 4, 6] {
        for n_th in [0.0, 1.0, 5.0] {
            // at the floor the state is thermal and carries no phase information
            let pts: Vec<(f64, f64)> = grid
                .iter()
                .filter(|&&n| n >= thermal_floor(m, n_th))
                .map(|&n| (n, maximize_precision(m, n_th, n).unwrap().xi))
                .filter(|&(_, xi)| xi > 0.0)
                .map(|(n, xi)| (n.ln(), xi.ln()))
                .collect();
            let skipped = grid.len() - pts.len();
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let k = slope(&xs, &ys);
            let ok = (k - 2.0).abs() <= 0.05 && skipped == 0;
            pass &= ok;
            let note = if skipped > 0 { format!(" ({skipped} pts at or below floor)") } else { String::new() };
            cells.push(format!("M={m},nth={n_th}: {k:.3}{note}{}", if ok { "" } else { " X" }));
        }
    }
    Line { id: "6 scaling slope", pass, detail: format!("{} (want 2.00 +- 0.05)", cells.join("; ")) }
}

fn random_state(rng: &mut ChaCha8Rng) -> FsgBlocks {
    let m = rng.random_range(2..=6);
    let n_th = rng.random_range(0.0..5.0);
    let s = rng.random_range(-1.5..1.5);
    let t = rng.random_range(-1.5..1.5);
    blocks_from_params(&FsgParams::new(m, n_th, s, t).unwrap())
}

fn c7_oracles() -> Vec<Line> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let states: Vec<FsgBlocks> = (0..1000).map(|_| random_state(&mut rng)).collect();

    let (mut spec_err, mut det_err, mut inv_err) = (0.0f64, 0.0f64, 0.0f64);
    for b in &states {
        let st = assemble_covariance(b).unwrap();
        let (lo, hi) = fsg_symplectic_eigenvalues(b).unwrap();
        let num = symplectic_spectrum_numeric(&st).unwrap();
        let mut want = vec![lo; b.modes - 1];
        want.push(hi);
        want.sort_by(f64::total_cmp);
        for (x, y) in num.iter().zip(&want) {
            spec_err = spec_err.max((x - y).abs() / y.max(1.0));
        }
        det_err = det_err.max(rel(fsg_determinant(b), st.determinant()));

        let f = qfim_fsg(b).unwrap();
        if f.transverse_eigenvalue() > 1e-6 && f.symmetric_eigenvalue() > 1e-6 {
            let dense = f.dense();
            let inv = dense.clone().lu().try_inverse().unwrap();
            let ours = fim_inverse(&f).unwrap().dense();
            inv_err = inv_err.max((ours - &inv).norm() / inv.norm());
        }
    }

    // rank-one inputs against the four Penrose conditions
    let mut mp_err = 0.0f64;
    for m in 2..=6 {
        for b in [0.3, 2.0, 17.0] {
            let a = StructuredFim::new(m, 0.0, b).dense();
            let x = fim_inverse(&StructuredFim::new(m, 0.0, b)).unwrap().dense();
            let (ax, xa) = (&a * &x, &x * &a);
            let residuals = [
                (&ax * &a - &a).norm() / a.norm(),
                (&xa * &x - &x).norm() / x.norm(),
                (&ax - ax.transpose()).norm() / ax.norm(),
                (&xa - xa.transpose()).norm() / xa.norm(),
            ];
            mp_err = residuals.iter().copied().fold(mp_err, f64::max);
        }
    }

    let mut qfim_err = 0.0f64;
    let mut literal_err = 0.0f64;
    let mut qrng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let m = qrng.random_range(2..=4);
        let n_th = if qrng.random_bool(0.5) { 1.0 } else { 5.0 };
        let p = FsgParams::new(m, n_th, qrng.random_range(-1.2..1.2), qrng.random_range(-1.2..1.2)).unwrap();
        let b = blocks_from_params(&p);
        let st = assemble_covariance(&b).unwrap();
        let oracle = qfim_general_gaussian(&st, &phase_generators(&st)).unwrap();
        let scale = oracle.amax();
        let ours = qfim_fsg(&b).unwrap().dense();
        qfim_err = qfim_err.max((ours - &oracle).amax() / scale);
        let literal = qfim_fsg_with(&b, QfimModel::PureStateFormula).unwrap().dense();
        literal_err = literal_err.max((literal - &oracle).amax() / scale);
    }

    let mut fd_err = 0.0f64;
    for b in states.iter().take(200) {
        let m = b.modes;
        let th = rng.random_range(0.0..std::f64::consts::PI);
        let h = 1e-6;
        for (j, d) in homodyne_cov_derivatives(b, th).iter().enumerate() {
            let mut plus = vec![0.0; m];
            let mut minus = vec![0.0; m];
            plus[j] = h;
            minus[j] = -h;
            let fd: DMatrix<f64> = (homodyne_cov(b, th, &plus).unwrap() - homodyne_cov(b, th, &minus).unwrap())
                / (2.0 * h);
            fd_err = fd_err.max((fd - d).amax() / d.amax().max(1.0));
        }
    }

    vec![
        Line { id: "7a symplectic spectrum", pass: spec_err <= 1e-9, detail: format!("max err {spec_err:.2e} over 1000 states (tol 1e-9)") },
        Line { id: "7b determinant", pass: det_err <= 1e-9, detail: format!("max rel err {det_err:.2e} (tol 1e-9)") },
        Line { id: "7c structured inverse", pass: inv_err <= 1e-9, detail: format!("max rel err {inv_err:.2e} (tol 1e-9)") },
        Line { id: "7d rank-one pseudo-inverse", pass: mp_err <= 1e-9, detail: format!("max rel err {mp_err:.2e} (tol 1e-9)") },
        Line {
            id: "7e closed-form QFIM vs Gaussian oracle",
            pass: qfim_err <= 1e-6,
            detail: format!(
                "isothermal closed form max rel err {qfim_err:.2e} (tol 1e-6) for n_th in {{1,5}}; \
                 pure-state formula applied to these mixed states is off by {literal_err:.2e}"
            ),
        },
        Line { id: "7f homodyne derivative", pass: fd_err <= 1e-6, detail: format!("max err {fd_err:.2e} (tol 1e-6)") },
    ]
}

fn c8_weight_spectrum() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_principal = 0.0f64;
    let mut worst_null = 0.0f64;
    let mut counts_ok = true;
    for _ in 0..100 {
        let m = rng.random_range(2..=8);
        let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let w = WeightVector::new(raw.iter().map(|x| x / total).collect()).unwrap();
        let spec = weight_matrix_spectrum(&w);
        worst_principal = worst_principal.max((spec.principal - w.norm2_sq()).abs());
        let mut rest: Vec<f64> = spec.eigenvalues.iter().map(|l| l.abs()).collect();
        rest.sort_by(f64::total_cmp);
        rest.pop();
        worst_null = worst_null.max(rest.iter().copied().fold(0.0, f64::max));
        counts_ok &= spec.nulls == m - 1;
    }
    Line {
        id: "8 weight-matrix spectrum",
        pass: worst_principal <= 1e-12 && worst_null <= 1e-12 && counts_ok,
        detail: format!("max |lambda - |w|^2| {worst_principal:.2e}, max null |lambda| {worst_null:.2e} (tol 1e-12)"),
    }
}

fn c9_monte_carlo() -> Vec<Line> {
    let b = tmsv_blocks(1.0).unwrap();
    let theta = optimize_homodyne_angle(&b, &WeightVector::mean(2)).unwrap().theta_star;
    let seed = 20_241_015;
    let r1 = mc_estimate(&b, theta, &McConfig::new(10_000, 300, seed).unwrap()).unwrap();
    let r2 = mc_estimate(&b, theta, &McConfig::new(20_000, 300, seed + 1).unwrap()).unwrap();
    let a = Line {
        id: "9a CRB saturation",
        pass: (0.9..=1.1).contains(&r1.ratio),
        detail: format!(
            "var/CRB = {:.4} (want [0.9, 1.1]); var = {:.4e}, CRB = {:.4e}, 95% CI [{:.4e}, {:.4e}]",
            r1.ratio, r1.empirical_var, r1.crb, r1.ci95.0, r1.ci95.1
        ),
    };
    // the doubled-n interval, scaled by 2, must overlap the baseline interval
    let (lo, hi) = (2.0 * r2.ci95.0, 2.0 * r2.ci95.1);
    let b = Line {
        id: "9b variance halves with doubled n",
        pass: lo <= r1.ci95.1 && r1.ci95.0 <= hi,
        detail: format!(
            "var(n)/var(2n) = {:.4}; 2x CI(2n) = [{lo:.4e}, {hi:.4e}] vs CI(n) = [{:.4e}, {:.4e}]",
            r1.empirical_var / r2.empirical_var,
            r1.ci95.0,
            r1.ci95.1
        ),
    };
    vec![a, b]
}

fn main() {
    let mut lines = vec![c1_closed_form_optimum(), c2_tmsv(), c3_privacy_anchor()];
    lines.extend(c4_precision_loss());
    lines.extend(c5_homodyne());
    lines.push(c6_scaling());
    lines.extend(c7_oracles());
    lines.push(c8_weight_spectrum());
    lines.extend(c9_monte_carlo());

    for l in &lines {
        println!("[{}] {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.detail);
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);

    // informational: the same privacy-optimal search under the pure-state QFIM formula
    let p = Problem::new(4, 0.0, 100.0).unwrap().with_model(QfimModel::PureStateFormula);
    let r = fsg_core::optimizer::optimize(&p, Objective::Privacy).unwrap();
    println!("info: pure-state formula, M=4 N=100 privacy optimum 1-P = {:.3e}", r.privacy_deficit.unwrap());

    if failed > 0 && std::env::var("FSG_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
