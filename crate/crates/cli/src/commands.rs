use std::path::PathBuf;

use jcm_rg::branch_id::BranchIdRequest;
use jcm_rg::continuation::{
    bifurcation_scan, contour_grid, solve_flow, ContinuationBranch, FlowSummary,
};
use jcm_rg::coupling::{beta_branch, beta_one_loop, spectra};
use jcm_rg::flow::{c_function, flow_integrate, one_loop_flow, FlowOptions};
use jcm_rg::operators::{build_operators, BasisLabel, ModelParams};
use serde_json::json;

use crate::config::{Format, Job, RunConfig};
use crate::error::CliError;
use crate::output::{companion, num, write_csv, write_json};

/// Files written and the one-line summary for stdout.
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    let out = &config.output;
    let csv = config.format == Format::Csv;
    let mut files = vec![out.clone()];
    let summary = match &config.job {
        &Job::Spectrum {
            p_obs,
            n_max,
            j_max,
        } => {
            let tables = spectra(p_obs, n_max, j_max)?;
            if csv {
                let mut header = vec!["n".to_string(), "sign".into(), "g0".into()];
                header.extend((0..=j_max).map(|j| format!("P_{j}")));
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                write_csv(
                    out,
                    &header,
                    tables.iter().map(|t| {
                        let mut row =
                            vec![t.branch.n.to_string(), t.branch.sign.to_string(), num(t.g0)];
                        row.extend(t.probabilities.iter().map(|&p| num(p)));
                        row
                    }),
                )?;
            } else {
                write_json(out, &tables)?;
            }
            format!("{} branches, j = 0..{j_max}", tables.len())
        }

        &Job::Beta { n_max, points } => {
            let mut rows = Vec::new();
            for i in 0..points {
                let g = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
                for n in 0..=n_max {
                    rows.push((g, n, beta_branch(n, g)?, beta_one_loop(g)));
                }
            }
            if csv {
                write_csv(
                    out,
                    &["g_r", "branch", "beta_exact", "beta_one_loop"],
                    rows.iter()
                        .map(|&(g, n, b, b1)| vec![num(g), n.to_string(), num(b), num(b1)]),
                )?;
            } else {
                let json: Vec<_> = rows
                    .iter()
                    .map(|&(g, n, b, b1)| json!({"g_r": g, "branch": n, "beta_exact": b, "beta_one_loop": b1}))
                    .collect();
                write_json(out, &json)?;
            }
            format!("{} rows, branches 0..{n_max}", rows.len())
        }

        &Job::Flow {
            g0,
            t0,
            t1,
            tol,
            one_loop,
        } => {
            let mut options = FlowOptions::with_tolerance(tol);
            if t0 < 0.0 && 0.0 < t1 {
                options = options.checkpoint(0.0);
            }
            let trajectory = flow_integrate(g0, (t0, t1), &options)?;
            let c = c_function(&trajectory);
            let reference = if one_loop {
                let anchor = (g0 * t0.exp()).sin();
                Some(one_loop_flow(t0, anchor, (t0, t1), tol)?)
            } else {
                None
            };
            let turns =
                trajectory.last().map_or(0, |s| s.branch_count) - trajectory[0].branch_count;
            if csv {
                write_csv(
                    out,
                    &["t", "g_r", "branch_count", "beta", "c"],
                    trajectory.iter().zip(&c).map(|(s, &(_, c))| {
                        vec![
                            num(s.t),
                            num(s.g_r),
                            s.branch_count.to_string(),
                            num(s.beta()),
                            num(c),
                        ]
                    }),
                )?;
                if let Some(reference) = &reference {
                    let path = companion(out, "one_loop", "csv");
                    write_csv(
                        &path,
                        &["t", "g_r"],
                        reference.iter().map(|s| vec![num(s.t), num(s.g_r)]),
                    )?;
                    files.push(path);
                }
            } else {
                let rows: Vec<_> = trajectory
                    .iter()
                    .zip(&c)
                    .map(|(s, &(_, c))| {
                        json!({"t": s.t, "g_r": s.g_r, "branch_count": s.branch_count, "beta": s.beta(), "c": c})
                    })
                    .collect();
                write_json(out, &json!({"trajectory": rows, "one_loop": reference}))?;
            }
            format!("{} samples, {turns} turning points", trajectory.len())
        }

        &Job::EffectiveFlow {
            g_r,
            k_min,
            k_max,
            e_max,
            points,
            contours,
        } => {
            let grid = k_grid(k_min, k_max, points);
            let branches = solve_flow(g_r, &grid, e_max)?;
            let births = bifurcation_scan(g_r, (k_min, k_max), e_max)?;
            let summary =
                FlowSummary::new(g_r, *grid.last().expect("points >= 2"), &branches, &births);
            if csv {
                write_csv(
                    out,
                    &["k", "e_k", "branch_id", "ir_branch_n"],
                    branch_rows(&branches),
                )?;
                let path = companion(out, "summary", "json");
                write_json(&path, &summary)?;
                files.push(path);
            } else {
                write_json(out, &json!({"summary": summary, "branches": branches}))?;
            }
            if contours {
                let e_values: Vec<f64> = (0..=points)
                    .map(|i| e_max * i as f64 / points as f64)
                    .collect();
                let path = companion(out, "contours", "csv");
                write_csv(
                    &path,
                    &["k", "e", "rhs"],
                    contour_grid(&grid, &e_values)
                        .into_iter()
                        .map(|(k, e, r)| vec![num(k), num(e), num(r)]),
                )?;
                files.push(path);
            }
            let reached = summary.branches.iter().filter(|b| b.k_min_reached).count();
            format!(
                "{} branches ({reached} reach k_min), {} births",
                branches.len(),
                summary.births.len()
            )
        }

        &Job::Bifurcations {
            g_r,
            k_min,
            k_max,
            e_max,
        } => {
            let events = bifurcation_scan(g_r, (k_min, k_max), e_max)?;
            if csv {
                write_csv(
                    out,
                    &["birth_k", "e_at_birth", "kind"],
                    events.iter().map(|b| {
                        let kind = serde_json::to_value(b.kind).expect("unit enum");
                        vec![
                            num(b.k),
                            num(b.e),
                            kind.as_str().unwrap_or_default().to_string(),
                        ]
                    }),
                )?;
            } else {
                write_json(out, &events)?;
            }
            format!("{} births detected", events.len())
        }

        Job::BranchId {
            measurements,
            n_max,
        } => {
            let response = BranchIdRequest {
                measurements: measurements.clone(),
                n_max: *n_max,
            }
            .evaluate()?;
            if csv {
                write_csv(
                    out,
                    &["n", "sign", "g0"],
                    response
                        .consistent
                        .iter()
                        .map(|b| vec![b.n.to_string(), b.sign.to_string(), num(b.g0)]),
                )?;
            } else {
                write_json(out, &response)?;
            }
            format!("{} consistent branches", response.consistent.len())
        }

        &Job::DumpOperator {
            operator,
            lambda_cutoff,
            delta,
            omega,
        } => {
            let params = ModelParams::new(1.0, delta, lambda_cutoff)?.with_mode_frequency(omega)?;
            let ops = build_operators(&params)?;
            let matrix = ops.get(operator);
            if csv {
                let dim = matrix.dim();
                write_csv(
                    out,
                    &["row", "col", "re", "im"],
                    (0..dim)
                        .flat_map(|r| (0..dim).map(move |c| (r, c)))
                        .map(|(r, c)| {
                            let z = matrix
                                .element(BasisLabel::from_index(r), BasisLabel::from_index(c));
                            vec![r.to_string(), c.to_string(), num(z.re), num(z.im)]
                        }),
                )?;
            } else {
                write_json(out, &matrix.to_dump())?;
            }
            format!("{operator} on {} basis states", matrix.dim())
        }
    };
    Ok(Report { files, summary })
}

/// Descending, log-spaced `k` values from `k_max` to `k_min`; `k_min = 0` is
/// appended after a log-spaced run down to `k_max · 1e-6`.
fn k_grid(k_min: f64, k_max: f64, points: usize) -> Vec<f64> {
    let (floor, extra) = if k_min > 0.0 {
        (k_min, 0)
    } else {
        (k_max * 1e-6, 1)
    };
    let n = points - extra;
    let mut grid: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 == n {
                floor
            } else {
                k_max * (floor / k_max).powf(i as f64 / (n - 1).max(1) as f64)
            }
        })
        .collect();
    if extra == 1 {
        grid.push(0.0);
    }
    grid
}

fn branch_rows(branches: &[ContinuationBranch]) -> impl Iterator<Item = Vec<String>> + '_ {
    branches.iter().enumerate().flat_map(|(id, b)| {
        let label = b.ir_branch_n.map(|n| n.to_string()).unwrap_or_default();
        b.samples
            .iter()
            .map(move |&(k, e)| vec![num(k), num(e), id.to_string(), label.clone()])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = k_grid(1e-3, 10.0, 5);
        assert_eq!(g.len(), 5);
        assert_eq!((g[0], g[4]), (10.0, 1e-3));
        assert!(g.windows(2).all(|w| w[0] > w[1]));
        let g = k_grid(0.0, 10.0, 4);
        let expected = [10.0, 1e-2, 1e-5, 0.0];
        assert_eq!(g.len(), expected.len());
        assert!(g
            .iter()
            .zip(expected)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * b));
    }
}
