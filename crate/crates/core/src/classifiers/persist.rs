//! Versioned plain-text model files.
//!
//! Line-oriented `key [index] value…` records; every float is written with
//! 17 fractional digits of scientific notation, which round-trips `f64`
//! exactly. Cached quantities (precision matrices, log-determinants,
//! coupled normalizers) are rebuilt on load from the stored covariance and
//! base statistics.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{
    CoupledFusionModel, CovarianceMode, GaussianNBModel, ModelKind, MultivariateGaussianModel,
    ShrinkageTarget, VarianceMode,
};
use crate::algebra::Coupling;
use crate::error::{Error, Result};

const FORMAT_LINE: &str = "format coupled-fusion-model v1";

/// Any of the three fitted models, as stored on disk.
#[derive(Debug, Clone)]
pub enum Model {
    NaiveBayes(GaussianNBModel),
    Coupled(CoupledFusionModel),
    Multivariate(MultivariateGaussianModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::NaiveBayes(_) => ModelKind::NaiveBayes,
            Model::Coupled(_) => ModelKind::Coupled,
            Model::Multivariate(_) => ModelKind::Multivariate,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::NaiveBayes(m) => m.dim(),
            Model::Coupled(m) => m.base().dim(),
            Model::Multivariate(m) => m.dim(),
        }
    }

    pub fn class_count(&self) -> usize {
        match self {
            Model::NaiveBayes(m) => m.class_count(),
            Model::Coupled(m) => m.base().class_count(),
            Model::Multivariate(m) => m.class_count(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<super::Posterior> {
        match self {
            Model::NaiveBayes(m) => super::predict_naive_bayes(m, x),
            Model::Coupled(m) => super::predict_coupled(m, x),
            Model::Multivariate(m) => super::predict_multivariate(m, x),
        }
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.17e}")
}

fn push_vec(out: &mut String, key: &str, idx: usize, values: &[f64]) {
    let _ = write!(out, "{key} {idx}");
    for v in values {
        let _ = write!(out, " {}", fmt_f(*v));
    }
    out.push('\n');
}

fn nb_body(m: &GaussianNBModel, out: &mut String) {
    let _ = writeln!(out, "classes {}", m.class_count);
    let _ = writeln!(out, "features {}", m.dim);
    let mode = match m.variance_mode {
        VarianceMode::PerClass => "per-class",
        VarianceMode::Pooled => "pooled",
    };
    let _ = writeln!(out, "variance-mode {mode}");
    let _ = writeln!(out, "variance-floor {}", fmt_f(m.variance_floor));
    for c in 0..m.class_count {
        let _ = writeln!(out, "prior {c} {}", fmt_f(m.priors[c]));
    }
    for c in 0..m.class_count {
        push_vec(out, "mean", c, m.mean(c));
    }
    for c in 0..m.class_count {
        push_vec(out, "variance", c, m.variance(c));
    }
}

/// Serializes a model to its text form.
pub fn model_to_string(model: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_LINE}");
    let _ = writeln!(out, "kind {}", model.kind());
    match model {
        Model::NaiveBayes(m) => nb_body(m, &mut out),
        Model::Coupled(m) => {
            let _ = writeln!(out, "kappa {}", fmt_f(m.kappa.get()));
            nb_body(&m.base, &mut out);
        }
        Model::Multivariate(m) => {
            let _ = writeln!(out, "classes {}", m.class_count);
            let _ = writeln!(out, "features {}", m.dim);
            let mode = match m.covariance_mode {
                CovarianceMode::PerClass => "per-class",
                CovarianceMode::Pooled => "pooled",
            };
            let _ = writeln!(out, "covariance-mode {mode}");
            match m.shrink_target {
                ShrinkageTarget::ScaledIdentity => {
                    let _ = writeln!(out, "shrink-target scaled-identity");
                }
                ShrinkageTarget::Diagonal { floor } => {
                    let _ = writeln!(out, "shrink-target diagonal {}", fmt_f(floor));
                }
            }
            let _ = writeln!(out, "shrinkage {}", fmt_f(m.shrinkage));
            for c in 0..m.class_count {
                let _ = writeln!(out, "prior {c} {}", fmt_f(m.priors[c]));
            }
            for c in 0..m.class_count {
                push_vec(&mut out, "mean", c, m.means[c].as_slice());
            }
            for (i, cov) in m.covariances.iter().enumerate() {
                for r in 0..m.dim {
                    let _ = write!(out, "cov {i} {r}");
                    for col in 0..m.dim {
                        let _ = write!(out, " {}", fmt_f(cov[(r, col)]));
                    }
                    out.push('\n');
                }
            }
        }
    }
    out
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

struct Parser<'a> {
    lines: std::iter::Peekable<std::str::Lines<'a>>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            lines: text.lines().peekable(),
        }
    }

    fn next_tokens(&mut self) -> Option<Vec<&'a str>> {
        for line in self.lines.by_ref() {
            let line = line.trim();
            if !line.is_empty() {
                return Some(line.split_whitespace().collect());
            }
        }
        None
    }

    fn expect(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let toks = self
            .next_tokens()
            .ok_or_else(|| Error::ModelFormat(format!("missing {key:?}")))?;
        if toks[0] != key {
            return Err(Error::ModelFormat(format!("expected {key:?}, found {:?}", toks[0])));
        }
        Ok(toks[1..].to_vec())
    }
}

fn parse_f(tok: &str) -> Result<f64> {
    tok.parse()
        .map_err(|_| Error::ModelFormat(format!("bad float {tok:?}")))
}

fn parse_usize(tok: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::ModelFormat(format!("bad integer {tok:?}")))
}

fn parse_indexed_vec(p: &mut Parser, key: &str, idx: usize, dim: usize) -> Result<Vec<f64>> {
    let toks = p.expect(key)?;
    if toks.len() != dim + 1 || parse_usize(toks[0])? != idx {
        return Err(Error::ModelFormat(format!("malformed {key} record {idx}")));
    }
    toks[1..].iter().map(|t| parse_f(t)).collect()
}

fn parse_nb_body(p: &mut Parser) -> Result<GaussianNBModel> {
    let classes = parse_usize(p.expect("classes")?[0])?;
    let dim = parse_usize(p.expect("features")?[0])?;
    if classes == 0 || dim == 0 {
        return Err(Error::ModelFormat("empty model".into()));
    }
    let variance_mode = match p.expect("variance-mode")?[0] {
        "per-class" => VarianceMode::PerClass,
        "pooled" => VarianceMode::Pooled,
        other => return Err(Error::ModelFormat(format!("unknown variance mode {other:?}"))),
    };
    let variance_floor = parse_f(p.expect("variance-floor")?[0])?;
    let mut priors = Vec::with_capacity(classes);
    for c in 0..classes {
        let toks = p.expect("prior")?;
        if parse_usize(toks[0])? != c {
            return Err(Error::ModelFormat("prior records out of order".into()));
        }
        priors.push(parse_f(toks[1])?);
    }
    let mut means = Vec::with_capacity(classes * dim);
    for c in 0..classes {
        means.extend(parse_indexed_vec(p, "mean", c, dim)?);
    }
    let mut variances = Vec::with_capacity(classes * dim);
    for c in 0..classes {
        variances.extend(parse_indexed_vec(p, "variance", c, dim)?);
    }
    Ok(GaussianNBModel {
        class_count: classes,
        dim,
        means,
        variances,
        priors,
        variance_floor,
        variance_mode,
    })
}

/// Parses the text form produced by [`model_to_string`].
pub fn model_from_str(text: &str) -> Result<Model> {
    let mut p = Parser::new(text);
    let header = p
        .next_tokens()
        .ok_or_else(|| Error::ModelFormat("empty model file".into()))?;
    if header.join(" ") != FORMAT_LINE {
        return Err(Error::ModelFormat(format!(
            "unsupported format line {:?}",
            header.join(" ")
        )));
    }
    let kind = p.expect("kind")?[0].to_string();
    match kind.as_str() {
        "naive-bayes" => Ok(Model::NaiveBayes(parse_nb_body(&mut p)?)),
        "coupled" => {
            let kappa = Coupling::new(parse_f(p.expect("kappa")?[0])?)?;
            let base = parse_nb_body(&mut p)?;
            Ok(Model::Coupled(CoupledFusionModel::new(base, kappa)?))
        }
        "multivariate" => {
            let classes = parse_usize(p.expect("classes")?[0])?;
            let dim = parse_usize(p.expect("features")?[0])?;
            let covariance_mode = match p.expect("covariance-mode")?[0] {
                "per-class" => CovarianceMode::PerClass,
                "pooled" => CovarianceMode::Pooled,
                other => {
                    return Err(Error::ModelFormat(format!("unknown covariance mode {other:?}")))
                }
            };
            let target_toks = p.expect("shrink-target")?;
            let shrink_target = match target_toks[0] {
                "scaled-identity" => ShrinkageTarget::ScaledIdentity,
                "diagonal" => ShrinkageTarget::Diagonal {
                    floor: parse_f(target_toks[1])?,
                },
                other => return Err(Error::ModelFormat(format!("unknown shrink target {other:?}"))),
            };
            let shrinkage = parse_f(p.expect("shrinkage")?[0])?;
            let mut priors = Vec::with_capacity(classes);
            for c in 0..classes {
                let toks = p.expect("prior")?;
                if parse_usize(toks[0])? != c {
                    return Err(Error::ModelFormat("prior records out of order".into()));
                }
                priors.push(parse_f(toks[1])?);
            }
            let mut means = Vec::with_capacity(classes);
            for c in 0..classes {
                means.push(DVector::from_vec(parse_indexed_vec(&mut p, "mean", c, dim)?));
            }
            let cov_count = match covariance_mode {
                CovarianceMode::Pooled => 1,
                CovarianceMode::PerClass => classes,
            };
            let mut covariances = Vec::with_capacity(cov_count);
            for i in 0..cov_count {
                let mut cov = DMatrix::zeros(dim, dim);
                for r in 0..dim {
                    let toks = p.expect("cov")?;
                    if toks.len() != dim + 2
                        || parse_usize(toks[0])? != i
                        || parse_usize(toks[1])? != r
                    {
                        return Err(Error::ModelFormat(format!("malformed cov record {i} {r}")));
                    }
                    for (col, tok) in toks[2..].iter().enumerate() {
                        cov[(r, col)] = parse_f(tok)?;
                    }
                }
                covariances.push(cov);
            }
            Ok(Model::Multivariate(MultivariateGaussianModel::from_covariances(
                classes,
                dim,
                means,
                priors,
                shrinkage,
                covariance_mode,
                shrink_target,
                covariances,
            )?))
        }
        other => Err(Error::ModelFormat(format!("unknown model kind {other:?}"))),
    }
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}
