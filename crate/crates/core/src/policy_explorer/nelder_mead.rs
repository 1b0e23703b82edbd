//! Bounded Nelder-Mead simplex search.
//!
//! Candidate points are clamped into `[lower, upper]` before evaluation, so
//! every iterate is feasible. Seed vertices may carry an already known value
//! (e.g. a memory episode whose outcome was observed), in which case building
//! the initial simplex does not spend any evaluation on them.

use crate::error::{Error, Result};

/// Reflection, expansion, contraction and shrink coefficients.
pub const REFLECTION: f64 = 1.0;
pub const EXPANSION: f64 = 2.0;
pub const CONTRACTION: f64 = 0.5;
pub const SHRINK: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Maximum number of objective evaluations (known seed values are free).
    pub max_evals: usize,
    /// Stop as soon as the best value drops below this.
    pub tol: f64,
    /// Step used for padding vertices `init + pad_step * e_i`.
    pub pad_step: f64,
    /// Order in which coordinate axes are used for padding vertices.
    /// `None` means `0, 1, ..., n-1`.
    pub pad_axes: Option<Vec<usize>>,
    pub lower: f64,
    pub upper: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 500,
            tol: 0.0,
            pad_step: 0.05,
            pad_axes: None,
            lower: 0.0,
            upper: 1.0,
        }
    }
}

/// A starting vertex, optionally with its objective value already known.
#[derive(Debug, Clone)]
pub struct Seed {
    pub point: Vec<f64>,
    pub value: Option<f64>,
}

impl Seed {
    pub fn unknown(point: Vec<f64>) -> Self {
        Self { point, value: None }
    }

    pub fn known(point: Vec<f64>, value: f64) -> Self {
        Self {
            point,
            value: Some(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub best: Vertex,
    pub evals: usize,
    pub iterations: usize,
    /// Best value after simplex construction and after every iteration.
    pub best_history: Vec<f64>,
    /// Every evaluated (clamped) point in evaluation order.
    pub evaluated: Vec<Vertex>,
    pub converged: bool,
}

struct Evaluator<'a, F> {
    objective: &'a mut F,
    evals: usize,
    max_evals: usize,
    evaluated: Vec<Vertex>,
}

impl<F: FnMut(&[f64]) -> f64> Evaluator<'_, F> {
    /// `Ok(None)` once the budget is spent.
    fn eval(&mut self, point: &[f64]) -> Result<Option<f64>> {
        if self.evals >= self.max_evals {
            return Ok(None);
        }
        self.evals += 1;
        let mut value = (self.objective)(point);
        if !value.is_finite() {
            // One resample, then give up.
            if self.evals >= self.max_evals {
                return Err(Error::NonFiniteObjective);
            }
            self.evals += 1;
            value = (self.objective)(point);
            if !value.is_finite() {
                return Err(Error::NonFiniteObjective);
            }
        }
        self.evaluated.push(Vertex {
            point: point.to_vec(),
            value,
        });
        Ok(Some(value))
    }
}

fn clamp_into(point: &mut [f64], lower: f64, upper: f64) {
    for v in point.iter_mut() {
        *v = v.clamp(lower, upper);
    }
}

fn sort_simplex(simplex: &mut [Vertex]) {
    simplex.sort_by(|a, b| a.value.total_cmp(&b.value));
}

fn best_of(simplex: &[Vertex]) -> Vertex {
    simplex
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .cloned()
        .expect("simplex is never empty")
}

/// Minimizes `objective` starting from `init`.
///
/// The initial simplex is `init` followed by up to `n` vertices taken from
/// `seeds` in order; missing vertices are padded with `init + pad_step * e_i`
/// (stepping downwards when the upward step would leave the box).
pub fn nelder_mead<F>(
    mut objective: F,
    init: Seed,
    seeds: &[Seed],
    opts: &NelderMeadOptions,
) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = init.point.len();
    if n == 0 {
        return Err(Error::Config("Nelder-Mead needs at least one dimension".into()));
    }
    let mut ev = Evaluator {
        objective: &mut objective,
        evals: 0,
        max_evals: opts.max_evals,
        evaluated: Vec::new(),
    };
    let mut history = Vec::new();
    let mut simplex: Vec<Vertex> = Vec::with_capacity(n + 1);

    let push_seed = |seed: &Seed, ev: &mut Evaluator<'_, F>, simplex: &mut Vec<Vertex>| -> Result<bool> {
        let mut p = seed.point.clone();
        clamp_into(&mut p, opts.lower, opts.upper);
        let value = match seed.value {
            Some(v) if v.is_finite() => v,
            _ => match ev.eval(&p)? {
                Some(v) => v,
                None => return Ok(false),
            },
        };
        simplex.push(Vertex { point: p, value });
        Ok(true)
    };

    if !push_seed(&init, &mut ev, &mut simplex)? {
        return Err(Error::Config("no evaluation budget for the initial vertex".into()));
    }
    let stop = |simplex: &[Vertex]| best_of(simplex).value < opts.tol;

    for seed in seeds.iter().filter(|s| s.point.len() == n).take(n) {
        if stop(&simplex) || !push_seed(seed, &mut ev, &mut simplex)? {
            history.push(best_of(&simplex).value);
            return Ok(finish(&simplex, ev, history, 0, opts.tol));
        }
    }
    let axes: Vec<usize> = opts.pad_axes.clone().unwrap_or_else(|| (0..n).collect());
    let mut axis_iter = axes.into_iter();
    while simplex.len() < n + 1 {
        if stop(&simplex) {
            history.push(best_of(&simplex).value);
            return Ok(finish(&simplex, ev, history, 0, opts.tol));
        }
        let Some(axis) = axis_iter.next() else { break };
        let mut p = simplex[0].point.clone();
        let up = p[axis] + opts.pad_step;
        p[axis] = if up <= opts.upper { up } else { p[axis] - opts.pad_step };
        match ev.eval(&clamped(&p, opts))? {
            Some(v) => simplex.push(Vertex { point: clamped(&p, opts), value: v }),
            None => {
                history.push(best_of(&simplex).value);
                return Ok(finish(&simplex, ev, history, 0, opts.tol));
            }
        }
    }
    sort_simplex(&mut simplex);
    history.push(simplex[0].value);

    let mut iterations = 0;
    'outer: while simplex[0].value >= opts.tol && ev.evals < ev.max_evals && simplex.len() > 1 {
        iterations += 1;
        let last = simplex.len() - 1;
        let mut centroid = vec![0.0; n];
        for v in &simplex[..last] {
            for (c, x) in centroid.iter_mut().zip(&v.point) {
                *c += x;
            }
        }
        let k = last as f64;
        centroid.iter_mut().for_each(|c| *c /= k);
        let worst = simplex[last].clone();
        let along = |t: f64| -> Vec<f64> {
            let p: Vec<f64> = centroid
                .iter()
                .zip(&worst.point)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamped(&p, opts)
        };

        let xr = along(REFLECTION);
        let Some(fr) = ev.eval(&xr)? else { break };
        if fr < simplex[0].value {
            let xe = along(REFLECTION * EXPANSION);
            match ev.eval(&xe)? {
                Some(fe) if fe < fr => simplex[last] = Vertex { point: xe, value: fe },
                Some(_) => simplex[last] = Vertex { point: xr, value: fr },
                None => {
                    simplex[last] = Vertex { point: xr, value: fr };
                    sort_simplex(&mut simplex);
                    history.push(simplex[0].value);
                    break;
                }
            }
        } else if fr < simplex[last - 1].value {
            simplex[last] = Vertex { point: xr, value: fr };
        } else {
            let outside = fr < worst.value;
            let xc = if outside {
                along(REFLECTION * CONTRACTION)
            } else {
                along(-CONTRACTION)
            };
            let Some(fc) = ev.eval(&xc)? else {
                if outside {
                    simplex[last] = Vertex { point: xr, value: fr };
                }
                sort_simplex(&mut simplex);
                history.push(simplex[0].value);
                break;
            };
            let accept = if outside { fc <= fr } else { fc < worst.value };
            if accept {
                simplex[last] = Vertex { point: xc, value: fc };
            } else {
                let best = simplex[0].point.clone();
                for i in 1..simplex.len() {
                    let p: Vec<f64> = best
                        .iter()
                        .zip(&simplex[i].point)
                        .map(|(b, x)| b + SHRINK * (x - b))
                        .collect();
                    let p = clamped(&p, opts);
                    match ev.eval(&p)? {
                        Some(v) => simplex[i] = Vertex { point: p, value: v },
                        None => {
                            sort_simplex(&mut simplex);
                            history.push(simplex[0].value);
                            break 'outer;
                        }
                    }
                }
            }
        }
        sort_simplex(&mut simplex);
        history.push(simplex[0].value);
    }
    Ok(finish(&simplex, ev, history, iterations, opts.tol))
}

fn finish<F>(
    simplex: &[Vertex],
    ev: Evaluator<'_, F>,
    best_history: Vec<f64>,
    iterations: usize,
    tol: f64,
) -> NelderMeadResult {
    let best = best_of(simplex);
    let converged = best.value < tol;
    NelderMeadResult {
        best,
        evals: ev.evals,
        iterations,
        best_history,
        evaluated: ev.evaluated,
        converged,
    }
}

fn clamped(p: &[f64], opts: &NelderMeadOptions) -> Vec<f64> {
    let mut p = p.to_vec();
    clamp_into(&mut p, opts.lower, opts.upper);
    p
}
