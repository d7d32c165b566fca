//! L2-regularized logistic regression fitted on the prototype bank.
//!
//! The default objective is one-vs-rest: for every subclass `s`,
//!
//! ```text
//! min_w  ½‖w‖² + C · Σ_r log(1 + exp(−y_r · w·x̃_r)),   y_r = +1 if row r ∈ s else −1
//! ```
//!
//! where `x̃_r = [x_r, B]` appends a constant bias feature `B` (default 10) and
//! the fitted bias is `b = B · w_D`. Each problem is solved by Newton's method
//! with Armijo backtracking until the gradient sup-norm is at most `1e-8`.
//!
//! Newton systems `(I + C·X̃ᵀΛX̃) p = −g` are solved through the
//! Woodbury identity, which reduces them to an `N × N` system over bank rows
//! (`N` ≪ `D` for prototype banks).
//!
//! A softmax (multinomial) objective is also available; it is solved by
//! truncated Newton with conjugate-gradient inner solves.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linalg::{cholesky, cholesky_solve, dot as dot64, sigmoid, softplus, sup_norm};
use super::{ClassifyError, ScoredLabels};
use crate::error::{Error, Result};
use crate::prototype_bank::PrototypeBank;
use crate::tensor_io::{read_feature_matrix, write_feature_matrix, FeatureMatrix};

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_BIAS_SCALE: f64 = 10.0;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrObjective {
    #[default]
    OneVsRest,
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrOptions {
    pub c: f64,
    pub objective: LrObjective,
    pub bias_scale: f64,
    /// Stop once the gradient sup-norm is at or below this value.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LrOptions {
    fn default() -> Self {
        LrOptions {
            c: DEFAULT_C,
            objective: LrObjective::OneVsRest,
            bias_scale: DEFAULT_BIAS_SCALE,
            tolerance: 1e-8,
            max_iterations: 100,
        }
    }
}

/// Objective values seen by one solver run: `objective[0]` at the zero
/// start, then one entry per accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub problem: String,
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub traces: Vec<SolverTrace>,
}

/// One weight row and bias per subclass; predicts the arg-max decision value.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    dims: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
    class_of_subclass: Vec<usize>,
    subclass_names: Vec<String>,
    class_names: Vec<String>,
    ignore_id: u32,
    c: f64,
    objective: LrObjective,
    bias_scale: f64,
}

impl LinearClassifier {
    /// `weights` is `S × dims` row-major.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dims: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        class_of_subclass: Vec<usize>,
        subclass_names: Vec<String>,
        class_names: Vec<String>,
        ignore_id: u32,
        c: f64,
        objective: LrObjective,
        bias_scale: f64,
    ) -> Result<Self, ClassifyError> {
        let s = biases.len();
        if weights.len() != s * dims || class_of_subclass.len() != s || subclass_names.len() != s {
            return Err(ClassifyError::InvalidModel(format!(
                "{} weights, {} biases, {} class map entries for {dims} dims",
                weights.len(),
                s,
                class_of_subclass.len()
            )));
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(ClassifyError::InvalidModel("non-finite weight".into()));
        }
        if class_of_subclass.iter().any(|&c| c >= class_names.len()) {
            return Err(ClassifyError::InvalidModel("subclass mapped to unknown class".into()));
        }
        Ok(LinearClassifier {
            dims,
            weights,
            biases,
            class_of_subclass,
            subclass_names,
            class_names,
            ignore_id,
            c,
            objective,
            bias_scale,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn num_subclasses(&self) -> usize {
        self.biases.len()
    }

    pub fn weights(&self, subclass: usize) -> &[f64] {
        &self.weights[subclass * self.dims..(subclass + 1) * self.dims]
    }

    pub fn bias(&self, subclass: usize) -> f64 {
        self.biases[subclass]
    }

    pub fn class_of_subclass(&self) -> &[usize] {
        &self.class_of_subclass
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn ignore_id(&self) -> u32 {
        self.ignore_id
    }

    pub fn regularization(&self) -> f64 {
        self.c
    }

    pub fn objective(&self) -> LrObjective {
        self.objective
    }

    /// `w_s·x + b_s` for one subclass.
    pub fn decision(&self, x: &[f32], subclass: usize) -> f64 {
        let w = self.weights(subclass);
        let mut acc = 0.0f64;
        for (a, b) in x.iter().zip(w) {
            acc += (*a as f64) * b;
        }
        acc + self.biases[subclass]
    }

    pub fn decision_values(&self, x: &[f32]) -> Vec<f64> {
        (0..self.num_subclasses()).map(|s| self.decision(x, s)).collect()
    }

    /// Writes `[w | b]` as an `S × (D+1)` `.igft` at `path` and the metadata to
    /// `path` with a `.json` extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut data = Vec::with_capacity(self.num_subclasses() * (self.dims + 1));
        for s in 0..self.num_subclasses() {
            data.extend(self.weights(s).iter().map(|&v| v as f32));
            data.push(self.biases[s] as f32);
        }
        let matrix = FeatureMatrix::new(self.num_subclasses(), self.dims + 1, data)
            .map_err(|e| ClassifyError::InvalidModel(e.to_string()))?;
        write_feature_matrix(&matrix, path)?;
        let meta = ModelFile {
            format: MODEL_FORMAT.into(),
            version: 1,
            weights: path.file_name().map(PathBuf::from).unwrap_or_else(|| path.to_path_buf()),
            objective: self.objective,
            c: self.c,
            bias_scale: self.bias_scale,
            dims: self.dims,
            classes: self.class_names.clone(),
            ignore_id: self.ignore_id,
            subclasses: self
                .subclass_names
                .iter()
                .zip(&self.class_of_subclass)
                .map(|(name, &class)| ModelSubclass { name: name.clone(), class })
                .collect(),
        };
        let meta_path = path.with_extension("json");
        let text = serde_json::to_string_pretty(&meta).expect("model metadata serializes") + "\n";
        std::fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))
    }

    /// Loads a model written by [`save`](Self::save); `path` is the `.igft` file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let meta_path = path.with_extension("json");
        let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: ModelFile = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: meta_path.clone(),
            source,
        })?;
        if meta.format != MODEL_FORMAT || meta.version != 1 {
            return Err(ClassifyError::InvalidModel(format!("unsupported model format {} v{}", meta.format, meta.version)).into());
        }
        let matrix = read_feature_matrix(path)?;
        if matrix.dims() != meta.dims + 1 || matrix.rows() != meta.subclasses.len() {
            return Err(ClassifyError::InvalidModel(format!(
                "weight matrix is {}x{}, metadata expects {}x{}",
                matrix.rows(),
                matrix.dims(),
                meta.subclasses.len(),
                meta.dims + 1
            ))
            .into());
        }
        let mut weights = Vec::with_capacity(matrix.rows() * meta.dims);
        let mut biases = Vec::with_capacity(matrix.rows());
        for row in matrix.iter_rows() {
            weights.extend(row[..meta.dims].iter().map(|&v| v as f64));
            biases.push(row[meta.dims] as f64);
        }
        let (subclass_names, class_of_subclass) = meta.subclasses.into_iter().map(|s| (s.name, s.class)).unzip();
        Ok(LinearClassifier::new(
            meta.dims,
            weights,
            biases,
            class_of_subclass,
            subclass_names,
            meta.classes,
            meta.ignore_id,
            meta.c,
            meta.objective,
            meta.bias_scale,
        )?)
    }
}

const MODEL_FORMAT: &str = "protoseg-linear";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    weights: PathBuf,
    objective: LrObjective,
    c: f64,
    bias_scale: f64,
    dims: usize,
    classes: Vec<String>,
    ignore_id: u32,
    subclasses: Vec<ModelSubclass>,
}

#[derive(Serialize, Deserialize)]
struct ModelSubclass {
    name: String,
    class: usize,
}

/// Bank rows in `f64` with the constant bias feature appended, plus their Gram matrix.
struct Design {
    n: usize,
    d1: usize,
    x: Vec<f64>,
    gram: Vec<f64>,
}

impl Design {
    fn new(bank: &PrototypeBank, bias_scale: f64) -> Self {
        let n = bank.len();
        let d1 = bank.dims() + 1;
        let mut x = Vec::with_capacity(n * d1);
        for row in bank.prototypes().iter_rows() {
            x.extend(row.iter().map(|&v| v as f64));
            x.push(bias_scale);
        }
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = dot64(&x[i * d1..(i + 1) * d1], &x[j * d1..(j + 1) * d1]);
                gram[i * n + j] = v;
                gram[j * n + i] = v;
            }
        }
        Design { n, d1, x, gram }
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.x[r * self.d1..(r + 1) * self.d1]
    }

    /// `X̃ w`
    fn apply(&self, w: &[f64]) -> Vec<f64> {
        (0..self.n).map(|r| dot64(self.row(r), w)).collect()
    }

    /// `out += X̃ᵀ v`
    fn apply_transpose_add(&self, v: &[f64], out: &mut [f64]) {
        for (r, &vr) in v.iter().enumerate() {
            if vr != 0.0 {
                for (o, x) in out.iter_mut().zip(self.row(r)) {
                    *o += vr * x;
                }
            }
        }
    }
}

fn validate(bank: &PrototypeBank, opts: &LrOptions) -> Result<(), ClassifyError> {
    if !(opts.c > 0.0 && opts.c.is_finite()) {
        return Err(ClassifyError::InvalidRegularization(opts.c));
    }
    if bank.is_empty() {
        return Err(ClassifyError::EmptyBank);
    }
    let s = bank.num_subclasses();
    if s < 2 {
        return Err(ClassifyError::SingleSubclass(s));
    }
    let mut counts = vec![0usize; s];
    for &sub in bank.subclass_of() {
        counts[sub] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(ClassifyError::EmptySubclass(empty));
    }
    Ok(())
}

/// Fits the one-vs-rest probe with the given regularization and all other options at defaults.
pub fn fit_lr(bank: &PrototypeBank, c: f64) -> Result<LinearClassifier, ClassifyError> {
    fit_lr_with(bank, &LrOptions { c, ..LrOptions::default() }).map(|(model, _)| model)
}

/// Fits on subclass labels of the bank rows. Independent one-vs-rest problems
/// are solved in parallel; the result does not depend on the thread count.
pub fn fit_lr_with(bank: &PrototypeBank, opts: &LrOptions) -> Result<(LinearClassifier, FitReport), ClassifyError> {
    validate(bank, opts)?;
    let design = Design::new(bank, opts.bias_scale);
    let s = bank.num_subclasses();
    let dims = bank.dims();
    let (aug_weights, traces): (Vec<Vec<f64>>, Vec<SolverTrace>) = match opts.objective {
        LrObjective::OneVsRest => {
            let solved = (0..s)
                .into_par_iter()
                .map(|sub| {
                    let y: Vec<f64> = bank.subclass_of().iter().map(|&r| if r == sub { 1.0 } else { -1.0 }).collect();
                    solve_binary(&design, &y, opts, format!("subclass {sub} vs rest"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            solved.into_iter().unzip()
        }
        LrObjective::Softmax => {
            let (w, trace) = solve_softmax(&design, bank.subclass_of(), s, opts)?;
            (w.chunks(design.d1).map(<[f64]>::to_vec).collect(), vec![trace])
        }
    };
    for t in &traces {
        log::debug!("{}: {} iterations, gradient sup-norm {:e}", t.problem, t.iterations, t.grad_norm);
    }
    let mut weights = Vec::with_capacity(s * dims);
    let mut biases = Vec::with_capacity(s);
    for w in &aug_weights {
        weights.extend_from_slice(&w[..dims]);
        biases.push(w[dims] * opts.bias_scale);
    }
    let model = LinearClassifier::new(
        dims,
        weights,
        biases,
        bank.class_of_subclass().to_vec(),
        bank.subclass_names().to_vec(),
        bank.class_names().to_vec(),
        bank.ignore_id(),
        opts.c,
        opts.objective,
        opts.bias_scale,
    )?;
    Ok((model, FitReport { traces }))
}

fn binary_objective(w: &[f64], z: &[f64], y: &[f64], c: f64) -> f64 {
    let loss: f64 = z.iter().zip(y).map(|(zr, yr)| softplus(-yr * zr)).sum();
    0.5 * dot64(w, w) + c * loss
}

/// Accepts `f_new` if it satisfies Armijo up to a few ulps of `f`.
fn sufficient_decrease(f_new: f64, f: f64, t: f64, slope: f64) -> bool {
    f_new <= f + ARMIJO * t * slope + 4.0 * f64::EPSILON * f.abs()
}

fn solve_binary(design: &Design, y: &[f64], opts: &LrOptions, problem: String) -> Result<(Vec<f64>, SolverTrace), ClassifyError> {
    let (n, d1, c) = (design.n, design.d1, opts.c);
    let mut w = vec![0.0; d1];
    let mut z = vec![0.0; n];
    let mut f = binary_objective(&w, &z, y, c);
    let mut trace = vec![f];
    let mut m = vec![0.0; n * n];
    let mut iter = 0usize;
    loop {
        let coef: Vec<f64> = z.iter().zip(y).map(|(zr, yr)| -c * yr * (1.0 - sigmoid(yr * zr))).collect();
        let mut g = w.clone();
        design.apply_transpose_add(&coef, &mut g);
        let grad_norm = sup_norm(&g);
        if grad_norm <= opts.tolerance {
            return Ok((w, SolverTrace { problem, objective: trace, iterations: iter, grad_norm }));
        }
        let not_converged = || ClassifyError::NotConverged { problem: problem.clone(), iterations: iter, grad_norm };
        if iter >= opts.max_iterations {
            return Err(not_converged());
        }

        // (I + C X̃ᵀΛX̃)⁻¹ g = g − C X̃ᵀ A (I + C A K A)⁻¹ A X̃ g, with A = Λ^½
        let a: Vec<f64> = z
            .iter()
            .map(|&zr| {
                let p = sigmoid(zr);
                (p * (1.0 - p)).sqrt()
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = c * a[i] * a[j] * design.gram[i * n + j] + if i == j { 1.0 } else { 0.0 };
            }
        }
        if !cholesky(&mut m, n) {
            return Err(not_converged());
        }
        let mut q: Vec<f64> = design.apply(&g).iter().zip(&a).map(|(v, ar)| v * ar).collect();
        cholesky_solve(&m, n, &mut q);
        let s: Vec<f64> = q.iter().zip(&a).map(|(qr, ar)| -c * ar * qr).collect();
        let mut step = g.clone();
        design.apply_transpose_add(&s, &mut step);
        let p: Vec<f64> = step.iter().map(|v| -v).collect();

        let u = design.apply(&p);
        let slope = dot64(&g, &p);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let w_t: Vec<f64> = w.iter().zip(&p).map(|(wi, pi)| wi + t * pi).collect();
            let z_t: Vec<f64> = z.iter().zip(&u).map(|(zi, ui)| zi + t * ui).collect();
            let f_t = binary_objective(&w_t, &z_t, y, c);
            if sufficient_decrease(f_t, f, t, slope) {
                w = w_t;
                z = z_t;
                f = f_t;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(not_converged());
        }
        trace.push(f);
        iter += 1;
    }
}

/// Row-wise softmax probabilities and the summed cross-entropy for logits `z` (`n × s`).
fn softmax_rows(z: &[f64], labels: &[usize], s: usize) -> (Vec<f64>, f64) {
    let mut probs = vec![0.0; z.len()];
    let mut loss = 0.0;
    for (r, (zr, pr)) in z.chunks(s).zip(probs.chunks_mut(s)).enumerate() {
        let max = zr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (p, &v) in pr.iter_mut().zip(zr) {
            *p = (v - max).exp();
            sum += *p;
        }
        for p in pr.iter_mut() {
            *p /= sum;
        }
        loss += max + sum.ln() - zr[labels[r]];
    }
    (probs, loss)
}

fn solve_softmax(design: &Design, labels: &[usize], s: usize, opts: &LrOptions) -> Result<(Vec<f64>, SolverTrace), ClassifyError> {
    let (n, d1, c) = (design.n, design.d1, opts.c);
    let problem = "softmax".to_string();
    // logits for parameters `v` (s × d1): n × s
    let logits = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n * s];
        for r in 0..n {
            let x = design.row(r);
            for k in 0..s {
                out[r * s + k] = dot64(x, &v[k * d1..(k + 1) * d1]);
            }
        }
        out
    };
    // out (s × d1) += Mᵀ X̃ for m (n × s)
    let accumulate = |m: &[f64], out: &mut [f64]| {
        for r in 0..n {
            let x = design.row(r);
            for k in 0..s {
                let coef = m[r * s + k];
                if coef != 0.0 {
                    for (o, xv) in out[k * d1..(k + 1) * d1].iter_mut().zip(x) {
                        *o += coef * xv;
                    }
                }
            }
        }
    };

    let mut w = vec![0.0; s * d1];
    let mut z = vec![0.0; n * s];
    let (mut probs, loss) = softmax_rows(&z, labels, s);
    let mut f = 0.5 * dot64(&w, &w) + c * loss;
    let mut trace = vec![f];
    let mut iter = 0usize;
    loop {
        let mut resid = probs.clone();
        for (r, &l) in labels.iter().enumerate() {
            resid[r * s + l] -= 1.0;
        }
        for v in &mut resid {
            *v *= c;
        }
        let mut g = w.clone();
        accumulate(&resid, &mut g);
        let grad_norm = sup_norm(&g);
        if grad_norm <= opts.tolerance {
            return Ok((w, SolverTrace { problem, objective: trace, iterations: iter, grad_norm }));
        }
        let not_converged = || ClassifyError::NotConverged { problem: problem.clone(), iterations: iter, grad_norm };
        if iter >= opts.max_iterations {
            return Err(not_converged());
        }

        let hess_vec = |v: &[f64]| -> Vec<f64> {
            let u = logits(v);
            let mut m = vec![0.0; n * s];
            for r in 0..n {
                let pr = &probs[r * s..(r + 1) * s];
                let ur = &u[r * s..(r + 1) * s];
                let mean = dot64(pr, ur);
                for k in 0..s {
                    m[r * s + k] = c * pr[k] * (ur[k] - mean);
                }
            }
            let mut out = v.to_vec();
            accumulate(&m, &mut out);
            out
        };

        // conjugate gradient on H p = −g
        let g_norm2 = dot64(&g, &g);
        let cg_tol = (0.5f64).min(g_norm2.sqrt().sqrt()) * g_norm2.sqrt();
        let mut p = vec![0.0; s * d1];
        let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut dir = r.clone();
        let mut rr = g_norm2;
        for _ in 0..(s * d1).min(1000) {
            if rr.sqrt() <= cg_tol {
                break;
            }
            let hd = hess_vec(&dir);
            let alpha = rr / dot64(&dir, &hd);
            for i in 0..p.len() {
                p[i] += alpha * dir[i];
                r[i] -= alpha * hd[i];
            }
            let rr_new = dot64(&r, &r);
            let beta = rr_new / rr;
            for i in 0..dir.len() {
                dir[i] = r[i] + beta * dir[i];
            }
            rr = rr_new;
        }

        let u = logits(&p);
        let slope = dot64(&g, &p);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let w_t: Vec<f64> = w.iter().zip(&p).map(|(wi, pi)| wi + t * pi).collect();
            let z_t: Vec<f64> = z.iter().zip(&u).map(|(zi, ui)| zi + t * ui).collect();
            let (probs_t, loss_t) = softmax_rows(&z_t, labels, s);
            let f_t = 0.5 * dot64(&w_t, &w_t) + c * loss_t;
            if sufficient_decrease(f_t, f, t, slope) {
                w = w_t;
                z = z_t;
                probs = probs_t;
                f = f_t;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(not_converged());
        }
        trace.push(f);
        iter += 1;
    }
}

/// Assigns each point the subclass with the largest decision value.
pub fn lr_classify(points: &FeatureMatrix, model: &LinearClassifier) -> Result<ScoredLabels, ClassifyError> {
    if points.dims() != model.dims() {
        return Err(ClassifyError::DimensionMismatch {
            expected: model.dims(),
            found: points.dims(),
        });
    }
    let winners: Vec<(usize, f64)> = (0..points.rows())
        .into_par_iter()
        .map(|i| {
            let x = points.row(i);
            let mut best = (0, f64::NEG_INFINITY);
            for s in 0..model.num_subclasses() {
                let d = model.decision(x, s);
                if d > best.1 {
                    best = (s, d);
                }
            }
            best
        })
        .collect();
    Ok(ScoredLabels::from_winners(winners, model.class_of_subclass()))
}
