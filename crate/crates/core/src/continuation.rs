//! Numerical continuation of the flow renormalisation condition in `k`.
//!
//! At fixed `k` every root of the residual in `[0, e_max]` is bracketed on a
//! uniform mesh. Cells where `|R|` dips towards zero without a sign change are
//! subdivided, so that root pairs which have only just appeared are not lost.
//! Roots are then threaded across the `k` grid in order of `e`.

use serde::{Deserialize, Serialize};

use crate::coupling::arcsin_n;
use crate::effective::{renorm_condition_rhs, renorm_condition_slope};
use crate::error::{ensure, Error, Result};

/// Largest IR branch covered by the default search window.
pub const DEFAULT_N_MAX: u32 = 4;
/// Default number of mesh intervals over `[0, e_max]`.
pub const DEFAULT_MESH_POINTS: usize = 4000;
/// Default bisection width for roots in `e`.
pub const DEFAULT_ROOT_TOLERANCE: f64 = 1e-12;
/// Smallest `k` cell the bifurcation scan will split.
pub const BIFURCATION_RESOLUTION: f64 = 1e-9;

const SUBDIVISIONS: usize = 64;
const MAX_DEPTH: u32 = 5;
const JUMP_GUARD: f64 = 5.0;
const IR_LABEL_TOLERANCE: f64 = 0.05;
const FOLD_CHECK: f64 = 1e-6;

/// `(n_max + 1) π`.
pub fn default_e_max(n_max: u32) -> f64 {
    (n_max as f64 + 1.0) * std::f64::consts::PI
}

/// Settings of the fixed-`k` root scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootScan {
    pub mesh_points: usize,
    pub tolerance: f64,
}

impl Default for RootScan {
    fn default() -> Self {
        Self {
            mesh_points: DEFAULT_MESH_POINTS,
            tolerance: DEFAULT_ROOT_TOLERANCE,
        }
    }
}

/// A solution curve `e_k(k)` of the flow renormalisation condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationBranch {
    /// `(k, e_k)` in order of descending `k`.
    pub samples: Vec<(f64, f64)>,
    /// `k` at which the pair containing this branch appears.
    pub birth_k: Option<f64>,
    /// `n` of the `arcsin_n(g_r)` this branch reaches at the smallest `k`.
    pub ir_branch_n: Option<u32>,
}

impl ContinuationBranch {
    pub fn last(&self) -> (f64, f64) {
        *self.samples.last().expect("branches are never empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldKind {
    /// A root pair exists below `k` and not above.
    Birth,
    /// A root pair exists above `k` and not below.
    Annihilation,
}

/// Fold point of the residual: `R = ∂R/∂e = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bifurcation {
    pub k: f64,
    pub e: f64,
    pub kind: FoldKind,
}

fn check_inputs(g_r: f64, e_max: f64) -> Result<()> {
    ensure(
        g_r.is_finite() && g_r >= 0.0,
        "g_r",
        "must be finite and >= 0",
        g_r,
    )?;
    ensure(
        e_max.is_finite() && e_max > 0.0,
        "e_max",
        "must be finite and > 0",
        e_max,
    )
}

fn check_scan(scan: &RootScan) -> Result<()> {
    ensure(
        scan.mesh_points >= 2,
        "mesh_points",
        "must be >= 2",
        scan.mesh_points as f64,
    )?;
    ensure(
        scan.tolerance.is_finite() && scan.tolerance > 0.0,
        "tolerance",
        "must be finite and > 0",
        scan.tolerance,
    )
}

/// A dip of `|R|` predicted to cross zero that subdivision could not split.
#[derive(Debug)]
struct Unresolved;

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, f_lo: f64, tolerance: f64) -> f64 {
    let lo_negative = f_lo < 0.0;
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if (v < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Scans the open interval `(lo, hi)` on `cells` intervals. Endpoint values
/// are supplied by the caller and never reported as roots here.
#[allow(clippy::too_many_arguments)]
fn scan_interval<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    ends: (f64, f64),
    cells: usize,
    depth: u32,
    tolerance: f64,
    roots: &mut Vec<f64>,
) -> std::result::Result<(), Unresolved> {
    let h = (hi - lo) / cells as f64;
    let x = |i: usize| if i == cells { hi } else { lo + h * i as f64 };
    let mut v = Vec::with_capacity(cells + 1);
    v.push(ends.0);
    for i in 1..cells {
        v.push(f(x(i)));
    }
    v.push(ends.1);

    for i in 0..=cells {
        if i > 0 && i < cells && v[i] == 0.0 {
            roots.push(x(i));
        }
        if i < cells && v[i] * v[i + 1] < 0.0 {
            roots.push(bisect(f, x(i), x(i + 1), v[i], tolerance));
        }
        if i == 0 || i == cells {
            continue;
        }
        let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
        let same_sign = (a > 0.0 && b > 0.0 && c > 0.0) || (a < 0.0 && b < 0.0 && c < 0.0);
        if !same_sign || b.abs() >= a.abs() || b.abs() > c.abs() {
            continue;
        }
        let q = 0.5 * (a - 2.0 * b + c);
        let p = 0.5 * (c - a);
        let vertex = b - p * p / (4.0 * q);
        // The vertex estimate is only as good as the parabola, so shallow
        // dips that come close to zero are refined as well.
        let crossing = vertex.signum() != b.signum();
        if !crossing && vertex.abs() > q.abs() {
            continue;
        }
        if depth >= MAX_DEPTH {
            // Below this scale the dip is indistinguishable from a double root.
            if crossing && vertex.abs() > 1e-10 * (1.0 + b.abs()) {
                return Err(Unresolved);
            }
            continue;
        }
        scan_interval(
            f,
            x(i - 1),
            x(i + 1),
            (a, c),
            SUBDIVISIONS,
            depth + 1,
            tolerance,
            roots,
        )?;
    }
    Ok(())
}

fn roots_at(
    g_r: f64,
    k: f64,
    e_max: f64,
    scan: &RootScan,
) -> std::result::Result<Vec<f64>, Unresolved> {
    if k == 0.0 {
        return Ok(infrared_roots(g_r, e_max));
    }
    let f = |e: f64| renorm_condition_rhs(e, k) - g_r;
    let (f0, f1) = (f(0.0), f(e_max));
    let mut roots = Vec::new();
    if f0 == 0.0 {
        roots.push(0.0);
    }
    scan_interval(
        &f,
        0.0,
        e_max,
        (f0, f1),
        scan.mesh_points,
        0,
        scan.tolerance,
        &mut roots,
    )?;
    if f1 == 0.0 {
        roots.push(e_max);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= scan.tolerance);
    Ok(roots)
}

/// Roots at `k = 0`: `sin e = g_r`, i.e. `e = arcsin_n(g_r)`.
fn infrared_roots(g_r: f64, e_max: f64) -> Vec<f64> {
    if g_r > 1.0 {
        return Vec::new();
    }
    let mut roots: Vec<f64> = Vec::new();
    for n in 0.. {
        let e = arcsin_n(n, g_r);
        if e > e_max {
            break;
        }
        if e >= 0.0 && roots.last().is_none_or(|&last| e - last > 1e-12) {
            roots.push(e);
        }
    }
    roots
}

/// All roots of the residual at fixed `k` in `[0, e_max]`, ascending.
pub fn find_roots(g_r: f64, k: f64, e_max: f64, scan: &RootScan) -> Result<Vec<f64>> {
    check_inputs(g_r, e_max)?;
    check_scan(scan)?;
    ensure(k.is_finite() && k >= 0.0, "k", "must be finite and >= 0", k)?;
    roots_at(g_r, k, e_max, scan).map_err(|_| Error::MeshTooCoarse { k_lo: k, k_hi: k })
}

/// Order-preserving assignment with as many matches as possible and least
/// total displacement. Returns, for each previous position, the matched new
/// index.
fn align(previous: &[f64], current: &[f64]) -> Vec<Option<usize>> {
    let (a, b) = (previous.len(), current.len());
    if a == 0 || b == 0 {
        return vec![None; a];
    }
    // Orient so that every element of the shorter list is matched.
    let (short, long, flipped) = if a <= b {
        (previous, current, false)
    } else {
        (current, previous, true)
    };
    let (s, l) = (short.len(), long.len());
    let inf = f64::INFINITY;
    let mut cost = vec![vec![inf; l + 1]; s + 1];
    cost[0].fill(0.0);
    for i in 1..=s {
        for j in i..=l {
            let skip = cost[i][j - 1];
            let take = cost[i - 1][j - 1] + (short[i - 1] - long[j - 1]).abs();
            cost[i][j] = skip.min(take);
        }
    }
    let mut pairs = vec![0usize; s];
    let (mut i, mut j) = (s, l);
    while i > 0 {
        let take = cost[i - 1][j - 1] + (short[i - 1] - long[j - 1]).abs();
        if j > i && cost[i][j - 1] <= take {
            j -= 1;
        } else {
            pairs[i - 1] = j - 1;
            i -= 1;
            j -= 1;
        }
    }
    let mut out = vec![None; a];
    for (si, &lj) in pairs.iter().enumerate() {
        if flipped {
            out[lj] = Some(si);
        } else {
            out[si] = Some(lj);
        }
    }
    out
}

fn slope_root_between(k: f64, lo: f64, hi: f64) -> Option<f64> {
    let s = |e: f64| renorm_condition_slope(e, k);
    let (s_lo, s_hi) = (s(lo), s(hi));
    if s_lo == 0.0 {
        return Some(lo);
    }
    if s_lo * s_hi > 0.0 {
        return None;
    }
    Some(bisect(&s, lo, hi, s_lo, 1e-15 * hi.abs().max(1.0)))
}

/// Extremum of the residual in `e` nearest to `guess`.
fn extremum_near(k: f64, guess: f64, width: f64) -> Option<f64> {
    let mut w = width.max(1e-9);
    for _ in 0..40 {
        let lo = (guess - w).max(0.0);
        let hi = guess + w;
        // Scan so that a neighbouring extremum is not picked up first.
        let cells = 16;
        let h = (hi - lo) / cells as f64;
        let mut best: Option<f64> = None;
        for c in 0..cells {
            let a = lo + h * c as f64;
            if let Some(e) = slope_root_between(k, a, a + h) {
                if best.is_none_or(|b| (e - guess).abs() < (b - guess).abs()) {
                    best = Some(e);
                }
            }
        }
        if best.is_some() {
            return best;
        }
        w *= 2.0;
    }
    None
}

/// Locates the fold between `k_pair` (where the pair `(e1, e2)` exists) and
/// `k_none` (where it does not).
fn polish_fold(g_r: f64, k_pair: f64, k_none: f64, pair: (f64, f64)) -> Result<(f64, f64)> {
    let coarse = Error::MeshTooCoarse {
        k_lo: k_pair.min(k_none),
        k_hi: k_pair.max(k_none),
    };
    let residual = |e: f64, k: f64| renorm_condition_rhs(e, k) - g_r;
    let mut e_star = slope_root_between(k_pair, pair.0, pair.1).ok_or(coarse.clone())?;
    let sign_pair = residual(e_star, k_pair).signum();
    let width = (pair.1 - pair.0).max(1e-6);

    let mut guess = e_star;
    let e_none = extremum_near(k_none, guess, width).ok_or(coarse.clone())?;
    if residual(e_none, k_none).signum() == sign_pair {
        return Err(coarse);
    }
    let (mut k_in, mut k_out) = (k_pair, k_none);
    let target = 1e-14 * k_pair.abs().max(1.0);
    while (k_out - k_in).abs() > target {
        let k_mid = 0.5 * (k_in + k_out);
        if k_mid == k_in || k_mid == k_out {
            break;
        }
        let e_mid = extremum_near(k_mid, guess, width).ok_or(coarse.clone())?;
        guess = e_mid;
        if residual(e_mid, k_mid).signum() == sign_pair {
            k_in = k_mid;
            e_star = e_mid;
        } else {
            k_out = k_mid;
        }
    }
    let slope = renorm_condition_slope(e_star, k_in).abs();
    let value = residual(e_star, k_in).abs();
    if slope > FOLD_CHECK || value > FOLD_CHECK {
        return Err(Error::UnresolvedBifurcation {
            k: k_in,
            resolution: (k_out - k_in).abs(),
        });
    }
    Ok((k_in, e_star))
}

struct Track {
    branch: ContinuationBranch,
    last_shift: Option<f64>,
}

/// Traces every root of the flow renormalisation condition along a
/// descending `k` grid.
pub fn solve_flow(g_r: f64, k_grid: &[f64], e_max: f64) -> Result<Vec<ContinuationBranch>> {
    solve_flow_with(g_r, k_grid, e_max, &RootScan::default())
}

pub fn solve_flow_with(
    g_r: f64,
    k_grid: &[f64],
    e_max: f64,
    scan: &RootScan,
) -> Result<Vec<ContinuationBranch>> {
    check_inputs(g_r, e_max)?;
    check_scan(scan)?;
    ensure(!k_grid.is_empty(), "k_grid", "must not be empty", 0.0)?;
    for (i, &k) in k_grid.iter().enumerate() {
        ensure(
            k.is_finite() && k >= 0.0,
            "k_grid",
            "entries must be finite and >= 0",
            k,
        )?;
        if i > 0 {
            ensure(
                k < k_grid[i - 1],
                "k_grid",
                "must be strictly descending",
                k,
            )?;
        }
    }
    let mesh = e_max / scan.mesh_points as f64;

    let mut open: Vec<Track> = Vec::new();
    let mut closed: Vec<ContinuationBranch> = Vec::new();
    for (step, &k) in k_grid.iter().enumerate() {
        let k_prev = if step > 0 { k_grid[step - 1] } else { k };
        let roots = roots_at(g_r, k, e_max, scan).map_err(|_| Error::MeshTooCoarse {
            k_lo: k,
            k_hi: k_prev,
        })?;
        let previous: Vec<f64> = open.iter().map(|t| t.branch.last().1).collect();
        let matches = align(&previous, &roots);

        let mut taken = vec![false; roots.len()];
        let mut next: Vec<Track> = Vec::with_capacity(roots.len());
        for (mut track, matched) in open.drain(..).zip(matches) {
            let accepted = matched.filter(|&j| {
                let jump = (roots[j] - track.branch.last().1).abs();
                match track.last_shift {
                    Some(shift) => jump <= JUMP_GUARD * mesh.max(shift),
                    None => true,
                }
            });
            match accepted {
                Some(j) => {
                    taken[j] = true;
                    track.last_shift = Some((roots[j] - track.branch.last().1).abs());
                    track.branch.samples.push((k, roots[j]));
                    next.push(track);
                }
                None => closed.push(track.branch),
            }
        }

        // Unmatched roots: adjacent pairs are births, singles enter through
        // the window edge or follow a rejected jump.
        let fresh: Vec<usize> = (0..roots.len()).filter(|&j| !taken[j]).collect();
        let mut idx = 0;
        while idx < fresh.len() {
            let j = fresh[idx];
            let paired = step > 0 && idx + 1 < fresh.len() && fresh[idx + 1] == j + 1;
            if paired {
                let pair = (roots[j], roots[j + 1]);
                let (k_birth, _) = polish_fold(g_r, k, k_prev, pair)?;
                for e in [pair.0, pair.1] {
                    next.push(Track {
                        branch: ContinuationBranch {
                            samples: vec![(k, e)],
                            birth_k: Some(k_birth),
                            ir_branch_n: None,
                        },
                        last_shift: None,
                    });
                }
                idx += 2;
            } else {
                next.push(Track {
                    branch: ContinuationBranch {
                        samples: vec![(k, roots[j])],
                        birth_k: None,
                        ir_branch_n: None,
                    },
                    last_shift: None,
                });
                idx += 1;
            }
        }
        next.sort_by(|a, b| a.branch.last().1.total_cmp(&b.branch.last().1));
        open = next;
    }

    for track in &mut open {
        track.branch.ir_branch_n = ir_label(g_r, track.branch.last().1);
    }
    let k_min = *k_grid.last().expect("non-empty grid");
    let mut all: Vec<ContinuationBranch> = closed
        .into_iter()
        .chain(open.into_iter().map(|t| t.branch))
        .collect();
    all.sort_by(|a, b| {
        let reach = |x: &ContinuationBranch| x.last().0 == k_min;
        reach(b)
            .cmp(&reach(a))
            .then(a.last().1.total_cmp(&b.last().1))
    });
    Ok(all)
}

fn ir_label(g_r: f64, e: f64) -> Option<u32> {
    if g_r > 1.0 {
        return None;
    }
    let pi = std::f64::consts::PI;
    let centre = (e / pi).round().max(0.0) as u32;
    (centre.saturating_sub(1)..=centre + 1)
        .map(|n| (n, (arcsin_n(n, g_r) - e).abs()))
        .filter(|&(_, d)| d <= IR_LABEL_TOLERANCE)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(n, _)| n)
}

/// Locates every `k` in `k_range` where the number of roots in `[0, e_max]`
/// changes by two, ordered by descending `k`.
pub fn bifurcation_scan(g_r: f64, k_range: (f64, f64), e_max: f64) -> Result<Vec<Bifurcation>> {
    bifurcation_scan_with(g_r, k_range, e_max, &RootScan::default(), 512)
}

pub fn bifurcation_scan_with(
    g_r: f64,
    k_range: (f64, f64),
    e_max: f64,
    scan: &RootScan,
    coarse_cells: usize,
) -> Result<Vec<Bifurcation>> {
    check_inputs(g_r, e_max)?;
    check_scan(scan)?;
    let (k_lo, k_hi) = k_range;
    ensure(
        k_lo.is_finite() && k_lo >= 0.0,
        "k_lo",
        "must be finite and >= 0",
        k_lo,
    )?;
    ensure(
        k_hi.is_finite() && k_lo < k_hi,
        "k_range",
        "k_lo < k_hi",
        k_hi,
    )?;
    ensure(
        coarse_cells >= 1,
        "coarse_cells",
        "must be >= 1",
        coarse_cells as f64,
    )?;

    let roots = |k: f64| {
        roots_at(g_r, k, e_max, scan).map_err(|_| Error::MeshTooCoarse { k_lo: k, k_hi: k })
    };
    let grid: Vec<f64> = (0..=coarse_cells)
        .map(|i| {
            let s = i as f64 / coarse_cells as f64;
            if i == coarse_cells {
                k_hi
            } else if k_lo > 0.0 {
                k_lo * (k_hi / k_lo).powf(s)
            } else {
                k_lo + (k_hi - k_lo) * s
            }
        })
        .collect();

    let mut events = Vec::new();
    let mut lower = (grid[0], roots(grid[0])?);
    for &k in &grid[1..] {
        let upper = (k, roots(k)?);
        if lower.1.len() != upper.1.len() {
            refine_cell(g_r, &lower, &upper, &roots, &mut events)?;
        }
        lower = upper;
    }
    events.sort_by(|a: &Bifurcation, b| b.k.total_cmp(&a.k));
    Ok(events)
}

type Sample = (f64, Vec<f64>);

fn refine_cell<F: Fn(f64) -> Result<Vec<f64>>>(
    g_r: f64,
    lower: &Sample,
    upper: &Sample,
    roots: &F,
    events: &mut Vec<Bifurcation>,
) -> Result<()> {
    let (k_a, k_b) = (lower.0, upper.0);
    if k_b - k_a > BIFURCATION_RESOLUTION * k_b.max(1.0) {
        let k_mid = 0.5 * (k_a + k_b);
        let mid = (k_mid, roots(k_mid)?);
        if lower.1.len() != mid.1.len() {
            refine_cell(g_r, lower, &mid, roots, events)?;
        }
        if mid.1.len() != upper.1.len() {
            refine_cell(g_r, &mid, upper, roots, events)?;
        }
        return Ok(());
    }

    let diff = lower.1.len() as i64 - upper.1.len() as i64;
    let unresolved = Error::UnresolvedBifurcation {
        k: k_a,
        resolution: k_b - k_a,
    };
    match diff {
        // A root crossing the window edge.
        1 | -1 => Ok(()),
        2 | -2 => {
            let (with, without, kind) = if diff == 2 {
                (lower, upper, FoldKind::Birth)
            } else {
                (upper, lower, FoldKind::Annihilation)
            };
            let pair = unmatched_pair(&without.1, &with.1).ok_or(unresolved)?;
            let (k, e) = polish_fold(g_r, with.0, without.0, pair)?;
            events.push(Bifurcation { k, e, kind });
            Ok(())
        }
        _ => Err(unresolved),
    }
}

/// The two adjacent roots of `with` left over after aligning `without`.
fn unmatched_pair(without: &[f64], with: &[f64]) -> Option<(f64, f64)> {
    let mut taken = vec![false; with.len()];
    for j in align(without, with).into_iter().flatten() {
        taken[j] = true;
    }
    let fresh: Vec<usize> = (0..with.len()).filter(|&j| !taken[j]).collect();
    match fresh[..] {
        [a, b] if b == a + 1 => Some((with[a], with[b])),
        _ => None,
    }
}

/// Residual on a `(k, e)` grid, one row per `k`: `(k, e, RHS(e, k))`.
/// Level sets `RHS = g_r` with `g_r > 1` are the curves that never reach `k = 0`.
pub fn contour_grid(k_values: &[f64], e_values: &[f64]) -> Vec<(f64, f64, f64)> {
    k_values
        .iter()
        .flat_map(|&k| {
            e_values
                .iter()
                .map(move |&e| (k, e, renorm_condition_rhs(e, k)))
        })
        .collect()
}

/// JSON summary of a continuation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub g_r: f64,
    pub births: Vec<BirthRecord>,
    pub branches: Vec<BranchRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirthRecord {
    pub k: f64,
    pub e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub ir_n: Option<u32>,
    pub k_min_reached: bool,
}

impl FlowSummary {
    pub fn new(
        g_r: f64,
        k_min: f64,
        branches: &[ContinuationBranch],
        births: &[Bifurcation],
    ) -> Self {
        Self {
            g_r,
            births: births
                .iter()
                .filter(|b| b.kind == FoldKind::Birth)
                .map(|b| BirthRecord { k: b.k, e: b.e })
                .collect(),
            branches: branches
                .iter()
                .map(|b| BranchRecord {
                    ir_n: b.ir_branch_n,
                    k_min_reached: b.last().0 == k_min,
                })
                .collect(),
        }
    }
}
