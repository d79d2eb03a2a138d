//! Nelder-Mead downhill simplex.

/// Reflection, expansion, contraction and shrink coefficients.
const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop when `max f - min f` over the simplex falls below this.
    pub tol: f64,
    /// Edge length of the initial simplex along each coordinate.
    pub initial_step: f64,
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value after every iteration; never increases.
    pub history: Vec<f64>,
}

struct Simplex {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Simplex {
    fn around<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: &[f64], step: f64, evals: &mut usize) -> Self {
        let mut points = vec![x0.to_vec()];
        for i in 0..x0.len() {
            let mut p = x0.to_vec();
            p[i] += step;
            points.push(p);
        }
        let values = points.iter().map(|p| eval(f, p, evals)).collect();
        let mut s = Self { points, values };
        s.sort();
        s
    }

    /// Best first; stable so equal values keep insertion order.
    fn sort(&mut self) {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.points = idx.iter().map(|&i| self.points[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }

    fn spread(&self) -> f64 {
        self.values[self.values.len() - 1] - self.values[0]
    }

    fn centroid(&self) -> Vec<f64> {
        let n = self.points.len() - 1;
        let mut c = vec![0.0; self.points[0].len()];
        for p in &self.points[..n] {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi / n as f64;
            }
        }
        c
    }

    fn replace_worst(&mut self, x: Vec<f64>, v: f64) {
        let last = self.points.len() - 1;
        self.points[last] = x;
        self.values[last] = v;
        self.sort();
    }
}

fn eval<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], evals: &mut usize) -> f64 {
    *evals += 1;
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// `c + t (x - c)`.
fn along(c: &[f64], x: &[f64], t: f64) -> Vec<f64> {
    c.iter().zip(x).map(|(ci, xi)| ci + t * (xi - ci)).collect()
}

/// Minimizes `f` from the axis-aligned simplex at `x0`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> Minimum {
    let mut evals = 0;
    let mut s = Simplex::around(&mut f, x0, opts.initial_step, &mut evals);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = s.spread() < opts.tol;
    let n = s.points.len() - 1;

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let c = s.centroid();
        let worst = s.points[n].clone();
        let (f_best, f_second, f_worst) = (s.values[0], s.values[n - 1], s.values[n]);

        let xr = along(&c, &worst, -ALPHA);
        let fr = eval(&mut f, &xr, &mut evals);
        if fr < f_best {
            let xe = along(&c, &xr, GAMMA);
            let fe = eval(&mut f, &xe, &mut evals);
            if fe < fr {
                s.replace_worst(xe, fe);
            } else {
                s.replace_worst(xr, fr);
            }
        } else if fr < f_second {
            s.replace_worst(xr, fr);
        } else {
            let (xc, fc, accept) = if fr < f_worst {
                let xc = along(&c, &xr, RHO);
                let fc = eval(&mut f, &xc, &mut evals);
                let ok = fc <= fr;
                (xc, fc, ok)
            } else {
                let xc = along(&c, &worst, RHO);
                let fc = eval(&mut f, &xc, &mut evals);
                let ok = fc < f_worst;
                (xc, fc, ok)
            };
            if accept {
                s.replace_worst(xc, fc);
            } else {
                let best = s.points[0].clone();
                for i in 1..=n {
                    s.points[i] = along(&best, &s.points[i], SIGMA);
                    s.values[i] = eval(&mut f, &s.points[i], &mut evals);
                }
                s.sort();
            }
        }
        history.push(s.values[0]);
        converged = s.spread() < opts.tol;
    }

    Minimum {
        x: s.points[0].clone(),
        value: s.values[0],
        iterations,
        evaluations: evals,
        converged,
        history,
    }
}
