//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;

use m2no_core::io::{self, Record};
use m2no_core::krylov::{self, GmresOptions, PrecondSpec};
use m2no_core::m2no::{self, ModelParams};
use m2no_core::multigrid::{self, CoarseSolve, MgConfig, MgHierarchy, Smoother};
use m2no_core::mwtransform;
use m2no_core::pdegrid::{self, poisson_operator, DatasetKind, DatasetSpec, Field, Sample};
use m2no_core::polywavelet::derive_filter_bank;
use m2no_core::spectral;

use crate::config::TrainFile;
use crate::error::{CliError, CliResult};
use crate::{DatasetArgs, EvalArgs, GmresArgs, SolveArgs, TransformArgs};

/// The output directory; every write goes through it.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn create(dir: PathBuf) -> CliResult<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn text(&self, name: &str, text: &str) -> CliResult<PathBuf> {
        let p = self.path(name);
        io::write_atomic(&p, text.as_bytes())?;
        Ok(p)
    }

    fn records(&self, name: &str, records: &[Record]) -> CliResult<PathBuf> {
        let p = self.path(name);
        io::write_records(&p, records)?;
        Ok(p)
    }
}

pub fn filters(out: &Output, k: usize) -> CliResult<()> {
    let bank = derive_filter_bank(k)?;
    let p = out.text(&format!("filters_k{k}.csv"), &bank.to_csv())?;
    println!("wrote {} max_residual={:e}", p.display(), bank.residuals().max());
    Ok(())
}

pub fn transform(out: &Output, a: &TransformArgs) -> CliResult<()> {
    let bank = derive_filter_bank(a.k)?;
    if a.inverse {
        let pyramid = io::pyramid_from_records(&io::read_records(&a.input)?)?;
        if pyramid.k != a.k {
            return Err(CliError::config(format!("coefficients have k={}, --k is {}", pyramid.k, a.k)));
        }
        let field = mwtransform::reconstruct(&pyramid, &bank)?;
        let p = out.records("reconstruction.m2no", &[Record::new("field", field)])?;
        println!("wrote {}", p.display());
    } else {
        let field = io::read_field(&a.input)?;
        let pyramid = mwtransform::decompose(&field, &bank, a.levels)?;
        let p = out.records("coefficients.m2no", &io::pyramid_to_records(&pyramid))?;
        println!("wrote {} levels={} energy={:e}", p.display(), a.levels, pyramid.energy());
    }
    Ok(())
}

fn poisson_rhs(dim: usize, n: usize, seed: u64) -> CliResult<Field> {
    let spec = DatasetSpec::new(DatasetKind::PoissonRhs, dim, n, 1, seed);
    Ok(pdegrid::make_sample(&spec, 0)?.input)
}

pub fn solve(out: &Output, a: &SolveArgs) -> CliResult<()> {
    let cfg = MgConfig {
        depth: a.depth,
        pre: a.pre,
        post: a.post,
        smoother: Smoother::parse(&a.smoother, a.omega)?,
        coarse_steps: MgConfig::default().coarse_steps,
        coarse: CoarseSolve::Auto,
    };
    let op = poisson_operator(a.dim, a.n)?;
    let hier = MgHierarchy::from_stencil(&op, derive_filter_bank(a.k)?, &cfg)?;
    let f = poisson_rhs(a.dim, a.n, a.seed)?;
    let sol = multigrid::solve(&hier, &f, a.tol, a.max_cycles)?;
    out.text("solve_trace.csv", &sol.trace.to_csv("cycle"))?;
    out.records("solution.m2no", &[Record::new("u", sol.u)])?;
    let factor = multigrid::mean_reduction_factor(&sol.trace).unwrap_or(f64::NAN);
    println!(
        "converged={} cycles={} relative_residual={:e} mean_reduction={factor:.4}",
        sol.trace.converged,
        sol.trace.iterations(),
        sol.trace.last_residual().unwrap_or(f64::NAN)
    );
    if !sol.trace.converged {
        return Err(CliError::numerical(format!("no convergence to {:e} within {} cycles", a.tol, a.max_cycles)));
    }
    Ok(())
}

pub fn gmres(out: &Output, a: &GmresArgs) -> CliResult<()> {
    let op = poisson_operator(a.dim, a.n)?.to_sparse();
    let shape = vec![a.n; a.dim];
    let spec = if a.precond == "learned" {
        let path = a.model.as_ref().ok_or_else(|| CliError::config("--precond learned needs --model"))?;
        let params = ModelParams::from_records(&io::read_records(path)?)?;
        m2no::precondition_with_model(&params, &shape)?
    } else {
        a.precond.parse::<PrecondSpec>()?
    };
    let pre = krylov::make_preconditioner(&spec, &op, &shape)?;
    let mut rng = pdegrid::sample_rng(a.seed, 0);
    let b = Field::from_data(&shape, (0..op.nrows()).map(|_| rng.random_range(-1.0..1.0)).collect())?;
    let opts = GmresOptions { tol: a.tol, restart: a.restart, max_iter: a.max_iter };
    let res = krylov::gmres(&op, &b, &pre, &opts)?;
    out.text("gmres_trace.csv", &res.trace.to_csv("iteration"))?;
    out.records("solution.m2no", &[Record::new("x", res.x)])?;
    println!(
        "precond={} converged={} iterations={} relative_residual={:e}",
        pre.name(),
        res.trace.converged,
        res.trace.iterations(),
        res.trace.last_residual().unwrap_or(f64::NAN)
    );
    if !res.trace.converged {
        return Err(CliError::numerical(format!("no convergence to {:e} within {} iterations", a.tol, a.max_iter)));
    }
    Ok(())
}

pub fn dataset(out: &Output, a: &DatasetArgs) -> CliResult<()> {
    let spec = DatasetSpec::new(a.kind.parse()?, a.dim, a.n, a.count, a.seed);
    let samples = pdegrid::make_dataset(&spec)?;
    let mut manifest = String::from("index,input_path,target_path,seed\n");
    for (i, s) in samples.iter().enumerate() {
        let (inp, tgt) = (format!("sample_{i:05}_input.m2no"), format!("sample_{i:05}_target.m2no"));
        out.records(&inp, &[Record::new("input", s.input.clone())])?;
        out.records(&tgt, &[Record::new("target", s.target.clone())])?;
        writeln!(manifest, "{i},{inp},{tgt},{}", a.seed).unwrap();
    }
    let p = out.text("manifest.csv", &manifest)?;
    println!("wrote {} samples, manifest {}", samples.len(), p.display());
    Ok(())
}

/// Reads a manifest; paths are relative to the manifest's directory.
fn read_manifest(path: &Path) -> CliResult<Vec<Sample>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut lines = text.lines();
    if lines.next() != Some("index,input_path,target_path,seed") {
        return Err(CliError::io(format!("{}: not a dataset manifest", path.display())));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() != 4 {
                return Err(CliError::io(format!("malformed manifest row `{l}`")));
            }
            Ok(Sample { input: io::read_field(&base.join(cols[1]))?, target: io::read_field(&base.join(cols[2]))? })
        })
        .collect()
}

pub fn train(out: &Output, config: &Path) -> CliResult<()> {
    let file = TrainFile::load(config)?;
    let model_cfg = file.model_config()?;
    let kind = file.kind()?;
    let d = &file.data;
    let spec = DatasetSpec::new(kind, d.dim, d.n, d.train + d.valid, file.seed);
    let mut samples = pdegrid::make_dataset(&spec)?;
    let valid = samples.split_off(d.train);
    let mut params = ModelParams::init(model_cfg, file.seed)?;
    params.fit_normalization(&samples)?;
    let hist = m2no::train(&mut params, &samples, &valid, &file.train_config(), &mut |epoch, loss, v| {
        eprintln!("epoch {epoch} loss {loss:.6e} valid {}", v.map_or("-".into(), |v| format!("{v:.6e}")));
    })?;
    let mut csv = String::from("epoch,train_loss,valid_rel_l2\n");
    for (e, l) in hist.train_loss.iter().enumerate() {
        let v = hist.valid_rel_l2.get(e).map_or(String::new(), |v| v.to_string());
        writeln!(csv, "{e},{l},{v}").unwrap();
    }
    out.text("history.csv", &csv)?;
    let p = out.records("model.m2no", &params.to_records())?;
    println!(
        "wrote {} parameters={} initial_valid={} final_valid={}",
        p.display(),
        params.parameter_count(),
        hist.initial_valid_rel_l2.map_or("-".into(), |v| format!("{v:.6e}")),
        hist.valid_rel_l2.last().map_or("-".into(), |v| format!("{v:.6e}"))
    );
    Ok(())
}

pub fn eval(out: &Output, a: &EvalArgs) -> CliResult<()> {
    let params = ModelParams::from_records(&io::read_records(&a.model)?)?;
    let samples = read_manifest(&a.data)?;
    if let (Some(f), Some(s)) = (a.superres_factor, samples.first()) {
        let expect = params.config.resolution * f;
        if s.input.shape().iter().any(|&n| n != expect) {
            return Err(CliError::config(format!(
                "data resolution {:?} is not {} × {f}",
                s.input.shape(),
                params.config.resolution
            )));
        }
    }
    let mut csv = String::from("index,relative_l2\n");
    let (mut preds, mut targets) = (Vec::new(), Vec::new());
    let mut total = 0.0;
    for (i, s) in samples.iter().enumerate() {
        let pred = m2no::evaluate_superres(&params, &s.input)?;
        let err = m2no::relative_l2(&pred, &s.target)?;
        total += err;
        writeln!(csv, "{i},{err}").unwrap();
        preds.push(Record::new(format!("pred{i}"), pred));
        targets.push(Record::new(format!("target{i}"), s.target.clone()));
    }
    out.text("eval.csv", &csv)?;
    out.records("predictions.m2no", &preds)?;
    out.records("targets.m2no", &targets)?;
    println!("samples={} mean_relative_l2={:e}", samples.len(), total / samples.len().max(1) as f64);
    Ok(())
}

pub fn spectrum(out: &Output, pred: &Path, target: &Path) -> CliResult<()> {
    let (p, t) = (io::read_records(pred)?, io::read_records(target)?);
    if p.len() != t.len() {
        return Err(CliError::config(format!("{} predictions but {} targets", p.len(), t.len())));
    }
    let errors = p.iter().zip(&t).map(|(p, t)| p.field.sub(&t.field)).collect::<Result<Vec<_>, _>>()?;
    let spec = spectral::mean_radial_spectrum(&errors)?;
    let path = out.text("spectrum.csv", &spec.to_csv())?;
    println!("wrote {} bins={} total_energy={:e}", path.display(), spec.bins.len(), spec.total_energy());
    Ok(())
}
