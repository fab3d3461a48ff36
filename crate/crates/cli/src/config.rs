//! Run configuration: a JSON file patched by command-line overrides, then
//! validated into solver inputs.

use std::path::{Path, PathBuf};

use morrey_core::extremal::ExtremalOptions;
use morrey_core::geometry::{DomainSpec, Point};
use morrey_core::plaplace::SolverConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const OUTPUT_DIR_ENV: &str = "MORREY_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "morrey-out";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Path to a domain JSON file (relative to the config file), a builtin
    /// name such as `"builtin:unit_disk"` or `"builtin:bowtie:0.1"`, or an
    /// inline domain object.
    #[serde(default)]
    pub domain: Option<Value>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    /// Pole grid spacing `g` of the sweep (default `4 sweep_h`).
    #[serde(default)]
    pub sweep_spacing: Option<f64>,
    /// Mesh size of the sweep solves (default `h`).
    #[serde(default)]
    pub sweep_h: Option<f64>,
    /// Simplex size at which the refinement stops (default `h / 4`).
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_evals: Option<usize>,
    #[serde(default)]
    pub solver: SolverKeys,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub symmetry: SymmetryOptions,
    #[serde(default)]
    pub verify: VerifyOptions,
    #[serde(default)]
    pub export: ExportOptions,
}

fn default_p() -> f64 {
    3.0
}

fn default_h() -> f64 {
    0.04
}

/// Solver knobs; unset keys keep the solver defaults. `p` lives at the top
/// level.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverKeys {
    pub eps_schedule: Option<Vec<f64>>,
    pub grad_tol: Option<f64>,
    pub stage_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub armijo: Option<f64>,
    pub backtrack: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymmetryOptions {
    /// Largest accepted `max |u o g - u|`.
    pub tol: f64,
}

impl Default for SymmetryOptions {
    fn default() -> Self {
        Self { tol: 2e-2 }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyOptions {
    /// Checks to run; all when unset.
    pub checks: Option<Vec<String>>,
    pub tolerances: Tolerances,
}

/// One tolerance per verification check.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Absolute error of the closed-form ball constants.
    pub ball_formulas: f64,
    /// Relative error of the computed disk constant.
    pub ball_solve: f64,
    /// Relative gap between `max G(y,y)` and `(min lambda)^(-1/(p-1))`.
    pub green_duality: f64,
    /// Slack of the two-sided cusp bound.
    pub sandwich: f64,
    /// Relative error of the fitted cusp exponent.
    pub rates: f64,
    /// Allowed relative energy increase under rearrangement.
    pub polya_szego: f64,
    /// Allowed `|x0|` in units of `h`.
    pub steiner_argmax: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ball_formulas: 1e-12,
            ball_solve: 0.05,
            green_duality: 1e-12,
            sandwich: 2e-2,
            rates: 0.05,
            polya_szego: 0.01,
            steiner_argmax: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportOptions {
    /// Legacy VTK field to convert; when unset the potential at `pole` is
    /// solved.
    pub from: Option<PathBuf>,
    pub pole: Option<Point>,
    /// Cell size of the additional grid CSV export.
    pub grid_cell: Option<f64>,
}

/// A loaded config: the effective JSON (for the input echo), the typed
/// view and the directory relative paths resolve against.
#[derive(Debug)]
pub struct Loaded {
    pub echo: Value,
    pub config: RunConfig,
    pub base: PathBuf,
}

/// Reads `path` (or starts from `{}`), applies `overrides` (dotted key paths
/// to JSON values) and deserializes, reporting the offending key on error.
pub fn load(path: Option<&Path>, overrides: &[(String, Value)]) -> Result<Loaded, CliError> {
    let (mut root, base) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("malformed config {}: {e}", p.display())))?;
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (v, base)
        }
        None => (Value::Object(Map::new()), PathBuf::new()),
    };
    if !root.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    for (key, value) in overrides {
        set_path(&mut root, key, value.clone())?;
    }
    let config: RunConfig = serde_path_to_error::deserialize(root.clone()).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            CliError::Config(e.inner().to_string())
        } else {
            CliError::Config(format!("at `{path}`: {}", e.inner()))
        }
    })?;
    Ok(Loaded { echo: root, config, base })
}

/// Parses a `key=value` override; values that are not valid JSON are taken
/// as strings.
pub fn parse_override(s: &str) -> Result<(String, Value), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    if k.is_empty() {
        return Err(format!("empty key in `{s}`"));
    }
    let v = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.to_string(), v))
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("at `{}`: not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("split yields at least one part")
}

impl Loaded {
    pub fn domain(&self) -> Result<DomainSpec, CliError> {
        match &self.config.domain {
            Some(d) => resolve_domain(d, &self.base),
            None => Err(CliError::Config("missing key `domain`".into())),
        }
    }

    pub fn solver(&self) -> Result<SolverConfig, CliError> {
        let k = &self.config.solver;
        let mut c = SolverConfig::with_p(self.config.p);
        if let Some(v) = &k.eps_schedule {
            c.eps_schedule = v.clone();
        }
        c.grad_tol = k.grad_tol.unwrap_or(c.grad_tol);
        c.stage_tol = k.stage_tol.unwrap_or(c.stage_tol);
        c.max_iter = k.max_iter.unwrap_or(c.max_iter);
        c.armijo = k.armijo.unwrap_or(c.armijo);
        c.backtrack = k.backtrack.unwrap_or(c.backtrack);
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn extremal_options(&self) -> Result<ExtremalOptions, CliError> {
        let c = &self.config;
        let mut o = ExtremalOptions::new(c.h);
        o.sweep_h = c.sweep_h;
        o.sweep_spacing = c.sweep_spacing;
        o.tol = c.tol;
        if let Some(m) = c.max_evals {
            o.max_evals = m;
        }
        o.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(o)
    }

    /// Flag, then environment, then config file, then the default.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(f) = flag {
            return f.to_path_buf();
        }
        if let Some(env) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(env);
        }
        match &self.config.output_dir {
            Some(d) if d.is_relative() => self.base.join(d),
            Some(d) => d.clone(),
            None => PathBuf::from(DEFAULT_OUTPUT_DIR),
        }
    }
}

fn resolve_domain(v: &Value, base: &Path) -> Result<DomainSpec, CliError> {
    let cfg = |e: morrey_core::Error| CliError::Config(format!("domain: {e}"));
    match v {
        Value::String(s) => match s.strip_prefix("builtin:") {
            Some(name) => DomainSpec::builtin(name).map_err(|e| CliError::Config(format!("at `domain`: {e}"))),
            None => {
                let path = base.join(s);
                if !path.is_file() {
                    return Err(CliError::Config(format!("domain file {} does not exist", path.display())));
                }
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                DomainSpec::from_json_str(&text)
                    .map_err(|e| CliError::Config(format!("domain file {}: {e}", path.display())))
            }
        },
        Value::Object(_) => DomainSpec::from_json_str(&v.to_string()).map_err(cfg),
        _ => Err(CliError::Config("at `domain`: expected a path, builtin name or object".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(s: &str) -> (String, Value) {
        parse_override(s).unwrap()
    }

    #[test]
    fn overrides_patch_nested_keys() {
        let l = load(None, &[ov("domain=builtin:unit_disk"), ov("solver.grad_tol=1e-7"), ov("p=4")]).unwrap();
        assert_eq!(l.config.p, 4.0);
        assert_eq!(l.solver().unwrap().grad_tol, 1e-7);
        assert_eq!(l.echo["domain"], Value::String("builtin:unit_disk".into()));
    }

    #[test]
    fn errors_name_the_key() {
        let err = load(None, &[ov("domain=builtin:unit_disk"), ov("solver.grad_tol=fast")]).unwrap_err();
        assert!(err.to_string().contains("solver.grad_tol"), "{err}");
        let err = load(None, &[ov("domain=builtin:unit_disk"), ov("solver.p=4")]).unwrap_err();
        assert!(err.to_string().contains("`p`"), "{err}");
        let err = load(None, &[]).unwrap().domain().unwrap_err();
        assert!(err.to_string().contains("domain"), "{err}");
    }

    #[test]
    fn regime_and_sizes_are_validated() {
        let l = load(None, &[ov("domain=builtin:unit_disk"), ov("p=2")]).unwrap();
        assert!(l.solver().is_err());
        let l = load(None, &[ov("domain=builtin:unit_disk"), ov("h=-1")]).unwrap();
        assert!(l.extremal_options().is_err());
    }

    #[test]
    fn builtins_and_inline_domains() {
        let err = resolve_domain(&Value::String("builtin:nope".into()), Path::new("")).unwrap_err();
        assert!(err.to_string().contains("`domain`"), "{err}");
        let inline = serde_json::json!({"kind": "disk", "params": {"radus": 1.0}});
        let err = resolve_domain(&inline, Path::new("")).unwrap_err();
        assert!(err.to_string().contains("radus"), "{err}");
        let err = resolve_domain(&Value::String("missing.json".into()), Path::new("/nonexistent")).unwrap_err();
        assert!(err.to_string().contains("does not exist"), "{err}");
    }
}
