use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nalgebra::{DMatrix, DMatrixView, DVector, DVectorView, SymmetricEigen};
use super::{Spectrum, SymmetricOperator};
use crate::error::{invalid, Error, Result};

/// Settings for [`lanczos_lowest`].
#[derive(Debug, Clone)]
pub struct LanczosOptions {
    pub k: usize,
    /// Ritz pairs are accepted once `|β s_last| ≤ tol · max(1, |θ|)`.
    pub tol: f64,
    pub seed: u64,
    /// Budget of operator applications.
    pub max_iter: usize,
    /// Krylov basis size before a thick restart; defaults to `max(3k + 60, 200)`.
    pub max_basis: Option<usize>,
    pub check_every: usize,
}

impl LanczosOptions {
    pub fn new(k: usize) -> Self {
        Self { k, tol: 1e-10, seed: 0, max_iter: 100_000, max_basis: None, check_every: 20 }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn max_basis(mut self, size: usize) -> Self {
        self.max_basis = Some(size);
        self
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Spot-checks `⟨Ax, y⟩ = ⟨x, Ay⟩` on three random pairs.
pub fn check_symmetry(op: &dyn SymmetricOperator, seed: u64) -> Result<()> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
    let mut ax = vec![0.0; n];
    let mut ay = vec![0.0; n];
    for _ in 0..3 {
        let x = random_vector(&mut rng, n);
        let y = random_vector(&mut rng, n);
        op.apply(&x, &mut ax);
        op.apply(&y, &mut ay);
        let (a, b) = (dot(&ax, &y), dot(&x, &ay));
        let scale = norm(&ax) * norm(&y) + norm(&x) * norm(&ay);
        if (a - b).abs() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(invalid(format!("operator is not symmetric: {a} vs {b}")));
        }
    }
    Ok(())
}

struct Locked {
    value: f64,
    residual: f64,
}

/// Column-major `n × len` block of vectors.
struct Block {
    n: usize,
    data: Vec<f64>,
}

impl Block {
    fn new(n: usize) -> Self {
        Self { n, data: Vec::new() }
    }

    fn len(&self) -> usize {
        self.data.len() / self.n
    }

    fn view(&self, cols: usize) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data[..cols * self.n], self.n, cols)
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    /// Removes from `w` its components along the first `cols` columns;
    /// returns the coefficients.
    fn project_out(&self, cols: usize, w: &mut [f64]) -> DVector<f64> {
        if cols == 0 {
            return DVector::zeros(0);
        }
        let v = self.view(cols);
        let c = v.tr_mul(&DVectorView::from_slice(w, self.n));
        let u = v * &c;
        w.iter_mut().zip(u.iter()).for_each(|(a, b)| *a -= b);
        c
    }
}

struct Solver<'a> {
    op: &'a dyn SymmetricOperator,
    opts: &'a LanczosOptions,
    locked: Vec<Locked>,
    locked_vectors: Block,
    iterations: usize,
}

enum RunEnd {
    /// The lowest requested Ritz pairs converged.
    Converged,
    /// Verification found nothing below the current `k`-th value.
    Verified,
    /// Invariant subspace, budget exhausted, or new pairs locked during
    /// verification; continue from a fresh vector.
    Restart,
}

/// Eigenpairs of the leading `m × m` block of `h`, ascending.
fn ritz(h: &DMatrix<f64>, m: usize) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h.view((0, 0), (m, m)).into_owned());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

impl Solver<'_> {
    fn converged(&self, theta: f64, estimate: f64) -> bool {
        estimate <= self.opts.tol * theta.abs().max(1.0)
    }

    fn kth_locked(&self) -> f64 {
        let mut vals: Vec<f64> = self.locked.iter().map(|l| l.value).collect();
        vals.sort_by(f64::total_cmp);
        vals[self.opts.k - 1]
    }

    fn orthogonalize(&self, basis: &Block, cols: usize, w: &mut [f64]) -> DVector<f64> {
        let locked = self.locked_vectors.len();
        self.locked_vectors.project_out(locked, w);
        let mut c = basis.project_out(cols, w);
        self.locked_vectors.project_out(locked, w);
        c += basis.project_out(cols, w);
        c
    }

    /// Forms Ritz vectors `V y` for the selected columns of `ys` and locks
    /// those that survive orthogonalisation against the locked set.
    fn lock(&mut self, basis: &Block, m: usize, ys: &DMatrix<f64>, select: &[usize]) {
        if select.is_empty() {
            return;
        }
        let n = self.op.dim();
        let y = DMatrix::from_fn(m, select.len(), |r, c| ys[(r, select[c])]);
        let xs = basis.view(m) * y;
        let mut ax = vec![0.0; n];
        for c in 0..select.len() {
            let mut x: Vec<f64> = xs.column(c).iter().copied().collect();
            let locked = self.locked_vectors.len();
            self.locked_vectors.project_out(locked, &mut x);
            self.locked_vectors.project_out(locked, &mut x);
            let len = norm(&x);
            if len < 1e-6 {
                continue;
            }
            x.iter_mut().for_each(|v| *v /= len);
            self.op.apply(&x, &mut ax);
            self.iterations += 1;
            let value = dot(&x, &ax);
            axpy(-value, &x, &mut ax);
            let residual = norm(&ax);
            self.locked_vectors.data.extend_from_slice(&x);
            self.locked.push(Locked { value, residual });
        }
    }

    fn run(&mut self, start: Vec<f64>, verifying: bool) -> Result<RunEnd> {
        let n = self.op.dim();
        let k = self.opts.k;
        let mut need = if verifying { 1 } else { k - self.locked.len() };
        let default_cap = if verifying { 100 } else { (3 * k + 60).max(200) };
        let cap = self.opts.max_basis.unwrap_or(default_cap).min(n - self.locked.len()).max(1);
        let threshold = if verifying { self.kth_locked() } else { f64::INFINITY };
        let mut basis = Block::new(n);
        basis.data.reserve(n * (cap + 1));
        basis.data.extend_from_slice(&start);
        let mut h = DMatrix::<f64>::zeros(cap, cap);
        let mut m = 0;
        let mut anorm: f64 = 0.0;
        let mut w = vec![0.0; n];
        loop {
            let j = m;
            self.op.apply(basis.col(j), &mut w);
            self.iterations += 1;
            let c = self.orthogonalize(&basis, j + 1, &mut w);
            for i in 0..=j {
                h[(i, j)] = c[i];
                h[(j, i)] = c[i];
            }
            let b = norm(&w);
            m = j + 1;
            anorm = anorm.max(c.iter().map(|v| v.abs()).sum::<f64>() + b);
            let invariant = b <= 1e3 * f64::EPSILON * anorm.max(f64::MIN_POSITIVE);
            let out_of_budget = self.iterations >= self.opts.max_iter;
            let full = m >= cap;
            let forced = full || invariant || out_of_budget;
            let periodic = m % self.opts.check_every == 0 && m <= 120;
            if !(forced || periodic) {
                basis.data.extend(w.iter().map(|v| v / b));
                continue;
            }
            let (thetas, ys) = ritz(&h, m);
            let ok: Vec<bool> = (0..m)
                .map(|i| invariant || self.converged(thetas[i], (b * ys[(m - 1, i)]).abs()))
                .collect();
            let want = need.min(m);
            if verifying {
                if ok[0] && thetas[0] >= threshold - self.opts.tol * threshold.abs().max(1.0) {
                    return Ok(RunEnd::Verified);
                }
                let below: Vec<usize> = (0..m).take_while(|&i| ok[i] && thetas[i] < threshold).collect();
                if !below.is_empty() {
                    self.lock(&basis, m, &ys, &below);
                    return Ok(RunEnd::Restart);
                }
            } else if m >= need && ok[..need].iter().all(|c| *c) {
                self.lock(&basis, m, &ys, &(0..need).collect::<Vec<_>>());
                return Ok(RunEnd::Converged);
            }
            if invariant || out_of_budget {
                let done: Vec<usize> = (0..want).filter(|&i| ok[i]).collect();
                if !verifying {
                    self.lock(&basis, m, &ys, &done);
                }
                return Ok(RunEnd::Restart);
            }
            if !full {
                basis.data.extend(w.iter().map(|v| v / b));
                continue;
            }
            // thick restart: lock what converged, keep the lowest pending Ritz vectors
            let done: Vec<usize> = if verifying { Vec::new() } else { (0..want).filter(|&i| ok[i]).collect() };
            self.lock(&basis, m, &ys, &done);
            need -= done.len();
            let pending: Vec<usize> = (0..m).filter(|i| !done.contains(i)).collect();
            let keep = (need + (cap - need) / 3).clamp(1, cap.saturating_sub(10).max(1)).min(pending.len());
            let sel = &pending[..keep];
            let y = DMatrix::from_fn(m, keep, |r, c| ys[(r, sel[c])]);
            let xs = basis.view(m) * y;
            basis.data.clear();
            basis.data.extend_from_slice(xs.as_slice());
            basis.data.extend(w.iter().map(|v| v / b));
            h.fill(0.0);
            for (i, &s) in sel.iter().enumerate() {
                h[(i, i)] = thetas[s];
            }
            m = keep;
        }
    }
}

/// Lowest `k` eigenvalues of a symmetric operator by thick-restart Lanczos
/// with full reorthogonalisation. Converged pairs are locked and the
/// iteration continues in their orthogonal complement; once `k` pairs are locked a
/// fresh random run confirms that no eigenvalue was missed below the
/// `k`-th (this is what recovers multiple eigenvalues).
pub fn lanczos_lowest(op: &dyn SymmetricOperator, opts: &LanczosOptions) -> Result<Spectrum> {
    let n = op.dim();
    if opts.k == 0 || opts.k >= n {
        return Err(invalid(format!("need 0 < k < dim, got k = {} for dim {n}", opts.k)));
    }
    if !(opts.tol > 0.0) || opts.check_every == 0 {
        return Err(invalid("tolerance and check interval must be positive"));
    }
    check_symmetry(op, opts.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut solver = Solver { op, opts, locked: Vec::new(), locked_vectors: Block::new(n), iterations: 0 };
    let mut failures = 0;
    loop {
        if solver.locked.len() >= n {
            break;
        }
        if solver.iterations >= opts.max_iter {
            let partial = finish(solver.locked, opts, solver.iterations);
            return Err(Error::NoConvergence {
                converged: partial.len(),
                requested: opts.k,
                iterations: solver.iterations,
                partial: Box::new(partial),
            });
        }
        let mut start = random_vector(&mut rng, n);
        let locked = solver.locked_vectors.len();
        solver.locked_vectors.project_out(locked, &mut start);
        solver.locked_vectors.project_out(locked, &mut start);
        let len = norm(&start);
        if len < 1e-8 {
            failures += 1;
            if failures >= 3 {
                return Err(Error::BreakdownDetected { attempts: failures });
            }
            continue;
        }
        failures = 0;
        start.iter_mut().for_each(|v| *v /= len);
        let verifying = solver.locked.len() >= opts.k;
        match solver.run(start, verifying)? {
            RunEnd::Verified => break,
            RunEnd::Converged | RunEnd::Restart => {}
        }
    }
    Ok(finish(solver.locked, opts, solver.iterations))
}

fn finish(mut locked: Vec<Locked>, opts: &LanczosOptions, iterations: usize) -> Spectrum {
    locked.sort_by(|a, b| a.value.total_cmp(&b.value));
    locked.truncate(opts.k);
    Spectrum {
        eigenvalues: locked.iter().map(|l| l.value).collect(),
        residuals: locked.iter().map(|l| l.residual).collect(),
        iterations,
        solver: "lanczos".into(),
        seed: Some(opts.seed),
        tolerance: opts.tol,
        problem_digest: String::new(),
    }
}
