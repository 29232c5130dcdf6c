//! Command-line frontend. Every command reads a JSON instance and writes a
//! JSON document to stdout; failures go to stderr as
//! `{"error":…, "message":…, "flags":[…]}`.
//!
//! Exit codes: 0 success, 2 input error, 3 precondition or degeneracy.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::exact_linalg::{ratio, Rational};
use crate::hulsbergen::{
    corank_at, is_jumping, splitting_type, validate, HulsbergenData, HulsbergenError,
    HulsbergenJson, ValidationFlag,
};
use crate::jump_surface::{
    closed_form, cone_data, jumping_polynomial, triple_plane_singularities, ConeJson, SurfaceError,
    SurfaceJson,
};
use crate::poncelet::{
    base_plane, poncelet_report, PonceletError, PonceletJson, DEFAULT_CLOSURE_STARTS,
    DEFAULT_CLOSURE_TOL,
};
use crate::quadric_geom::{conic_section, ConicSection, Plane, QuadricPoint, QuadricPointJson};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "jumpcon",
    version,
    about = "Jumping conics of rank-2 bundles on the smooth quadric"
)]
pub struct Cli {
    /// Output rendering; json is the stable contract.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Equation and degree of the jumping surface.
    Surface {
        #[arg(long)]
        input: PathBuf,
        /// Compare the determinant with the closed-form sum.
        #[arg(long)]
        check_closed_form: bool,
    },
    /// Corank, jumping flag and splitting type at one plane.
    Plane {
        #[arg(long)]
        input: PathBuf,
        /// Plane coordinates "a,b,c,d".
        #[arg(long, allow_hyphen_values = true)]
        plane: String,
    },
    /// Singularity verdicts at the planes spanned by triples of points.
    Singular {
        #[arg(long)]
        input: PathBuf,
    },
    /// The quadric cone of a k = 3 instance.
    Cone {
        #[arg(long)]
        input: PathBuf,
    },
    /// Poncelet certificates of a k = 3 instance.
    Poncelet {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CLOSURE_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_CLOSURE_STARTS)]
        starts: usize,
    },
    /// Deterministic pseudorandom instance.
    Random {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
        /// Resample until no validation flag is raised.
        #[arg(long)]
        avoid_rulings: bool,
    },
}

/// Instance file: the bundle datum plus optional generator metadata.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub points: Vec<QuadricPointJson>,
    pub coeffs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub avoid_rulings: bool,
}

impl InstanceFile {
    pub fn data(&self) -> Result<HulsbergenData, HulsbergenError> {
        HulsbergenData::from_json(&HulsbergenJson {
            points: self.points.clone(),
            coeffs: self.coeffs.clone(),
        })
    }
}

/// Structured failure carrying its exit code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    pub flags: Vec<String>,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            kind: "invalid_input",
            message: message.into(),
            flags: vec![],
        }
    }

    fn degenerate(message: impl Into<String>, flags: &[ValidationFlag]) -> Self {
        Self {
            code: EXIT_DEGENERATE,
            kind: "degenerate",
            message: message.into(),
            flags: flags.iter().map(ToString::to_string).collect(),
        }
    }

    fn to_json(&self) -> Value {
        json!({ "error": self.kind, "message": self.message, "flags": self.flags })
    }
}

impl From<HulsbergenError> for CliError {
    fn from(e: HulsbergenError) -> Self {
        match e {
            HulsbergenError::TangentSection(_) => Self::degenerate(e.to_string(), &[]),
            _ => Self::input(e.to_string()),
        }
    }
}

impl From<SurfaceError> for CliError {
    fn from(e: SurfaceError) -> Self {
        match e {
            SurfaceError::Hulsbergen(inner) => inner.into(),
            _ => Self::degenerate(e.to_string(), e.flags()),
        }
    }
}

impl From<PonceletError> for CliError {
    fn from(e: PonceletError) -> Self {
        match e {
            PonceletError::Surface(inner) => inner.into(),
            _ => Self::degenerate(e.to_string(), e.flags()),
        }
    }
}

/// Result of one invocation, captured for the binary and for tests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    match execute(&cli.command) {
        Ok(v) => Outcome {
            code: EXIT_OK,
            stdout: render(&v, cli.format),
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: e.code,
            stdout: String::new(),
            stderr: render(&e.to_json(), cli.format),
        },
    }
}

pub fn execute(cmd: &Command) -> Result<Value, CliError> {
    match cmd {
        Command::Surface {
            input,
            check_closed_form,
        } => cmd_surface(&load(input)?, *check_closed_form),
        Command::Plane { input, plane } => {
            let h = Plane::parse(plane).map_err(|e| CliError::input(format!("--plane: {e}")))?;
            cmd_plane(&load(input)?, &h)
        }
        Command::Singular { input } => cmd_singular(&load(input)?),
        Command::Cone { input } => cmd_cone(&load(input)?),
        Command::Poncelet { input, tol, starts } => {
            if !(tol.is_finite() && *tol > 0.0) {
                return Err(CliError::input("--tol must be a positive number"));
            }
            if *starts == 0 {
                return Err(CliError::input("--starts must be at least 1"));
            }
            cmd_poncelet(&load(input)?, *starts, *tol)
        }
        Command::Random {
            k,
            seed,
            avoid_rulings,
        } => {
            if *k == 0 {
                return Err(CliError::input("--k must be at least 1"));
            }
            let file = random_instance(*k, *seed, *avoid_rulings);
            Ok(serde_json::to_value(file).expect("serializable"))
        }
    }
}

/// Reads and validates an instance file.
pub fn load(path: &Path) -> Result<HulsbergenData, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError {
        kind: "io",
        ..CliError::input(format!("{}: {e}", path.display()))
    })?;
    parse_instance(&text).map_err(|e| CliError {
        message: format!("{}: {}", path.display(), e.message),
        ..e
    })
}

pub fn parse_instance(text: &str) -> Result<HulsbergenData, CliError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| CliError {
        kind: "parse",
        ..CliError::input(e.to_string())
    })?;
    Ok(file.data()?)
}

pub fn cmd_surface(d: &HulsbergenData, check_closed_form: bool) -> Result<Value, CliError> {
    let s = jumping_polynomial(d)?;
    let mut out = serde_json::to_value(SurfaceJson::new(&s, None)).expect("serializable");
    out["flags"] = json!(validate(d).to_strings());
    if check_closed_form {
        let cf = closed_form(d)?;
        out["closed_form_proportional"] = json!(cf.proportional(s.equation()));
    }
    Ok(out)
}

pub fn cmd_plane(d: &HulsbergenData, h: &Plane) -> Result<Value, CliError> {
    let mut out = json!({
        "plane": h.to_strings(),
        "jumping": is_jumping(d, h),
        "corank": corank_at(d, h),
    });
    match conic_section(h) {
        ConicSection::Smooth => {
            let (a, b) = splitting_type(d, h)?;
            out["section"] = json!("smooth");
            out["splitting_type"] = json!([a, b]);
        }
        ConicSection::LinePair { vertex } => {
            out["section"] = json!("line_pair");
            out["section_vertex"] = json!(QuadricPointJson::from(vertex.as_ref()));
        }
    }
    Ok(out)
}

pub fn cmd_singular(d: &HulsbergenData) -> Result<Value, CliError> {
    let triples = triple_plane_singularities(d)?;
    let entries: Vec<Value> = triples
        .iter()
        .map(|t| json!({ "triple": t.triple, "plane": t.plane.to_strings(), "singular": t.singular }))
        .collect();
    Ok(json!({
        "k": d.k(),
        "count": triples.len(),
        "singular_count": triples.iter().filter(|t| t.singular).count(),
        "triples": entries,
    }))
}

pub fn cmd_cone(d: &HulsbergenData) -> Result<Value, CliError> {
    base_plane(d)?;
    let cone = cone_data(d)?;
    let s = jumping_polynomial(d)?;
    Ok(serde_json::to_value(SurfaceJson::new(&s, Some(&cone))).expect("serializable"))
}

pub fn cmd_poncelet(d: &HulsbergenData, starts: usize, tol: f64) -> Result<Value, CliError> {
    let r = poncelet_report(d, starts, tol)?;
    Ok(json!({
        "cone": ConeJson::from(&r.cone),
        "frame_id": r.frame.label(),
        "poncelet": PonceletJson::from(&r),
    }))
}

fn small_rational(rng: &mut ChaCha8Rng, num: i64, den: i64) -> Rational {
    ratio(rng.random_range(-num..=num), rng.random_range(1..=den))
}

fn random_factor(rng: &mut ChaCha8Rng) -> [Rational; 2] {
    if rng.random_range(0..16) == 0 {
        [ratio(0, 1), ratio(1, 1)]
    } else {
        [ratio(1, 1), small_rational(rng, 6, 4)]
    }
}

/// Pseudorandom instance with small-height points `([1:a],[1:b])` and
/// coefficients. Points are distinct and coefficients not all zero; with
/// `avoid_rulings` the whole instance is resampled until [`validate`] is
/// clean.
pub fn random_data(k: usize, seed: u64, avoid_rulings: bool) -> HulsbergenData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let points: Vec<QuadricPoint> = (0..k)
            .map(|_| {
                QuadricPoint::new(random_factor(&mut rng), random_factor(&mut rng))
                    .expect("nonzero factors")
            })
            .collect();
        let coeffs: Vec<Rational> = (0..k).map(|_| small_rational(&mut rng, 5, 3)).collect();
        let Ok(d) = HulsbergenData::new(points, coeffs) else {
            continue;
        };
        if !avoid_rulings || validate(&d).is_clean() {
            return d;
        }
    }
}

pub fn random_instance(k: usize, seed: u64, avoid_rulings: bool) -> InstanceFile {
    let d = random_data(k, seed, avoid_rulings);
    let j = d.to_json();
    InstanceFile {
        points: j.points,
        coeffs: j.coeffs,
        provenance: Some(Provenance {
            seed,
            avoid_rulings,
        }),
    }
}

/// JSON pretty-printed, or an indented `key: value` listing of the same data.
pub fn render(v: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(v).expect("serializable") + "\n",
        Format::Text => {
            let mut out = String::new();
            render_text(v, 0, &mut out);
            out
        }
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Array(items) if items.iter().all(|x| !x.is_object() && !x.is_array()) => {
            Some(format!(
                "[{}]",
                items
                    .iter()
                    .filter_map(scalar)
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        }
        Value::Array(_) | Value::Object(_) => None,
        other => Some(other.to_string()),
    }
}

fn render_text(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (key, val) in map {
                match scalar(val) {
                    Some(s) => writeln!(out, "{pad}{key}: {s}").unwrap(),
                    None => {
                        writeln!(out, "{pad}{key}:").unwrap();
                        render_text(val, indent + 1, out);
                    }
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match scalar(item) {
                    Some(s) => writeln!(out, "{pad}- {s}").unwrap(),
                    None => {
                        writeln!(out, "{pad}-").unwrap();
                        render_text(item, indent + 1, out);
                    }
                }
            }
        }
        other => writeln!(out, "{pad}{}", scalar(other).unwrap_or_default()).unwrap(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T1: &str = r#"{"points":[{"u":["1","0"],"v":["1","0"]},{"u":["0","1"],"v":["0","1"]},
        {"u":["1","1"],"v":["1","1"]}],"coeffs":["1","1","1"]}"#;

    fn t1() -> HulsbergenData {
        parse_instance(T1).unwrap()
    }

    #[test]
    fn surface_t1() {
        let v = cmd_surface(&t1(), true).unwrap();
        assert_eq!(v["degree"], 2);
        assert_eq!(v["equation"].as_array().unwrap().len(), 7);
        assert_eq!(v["closed_form_proportional"], true);
        assert_eq!(v["flags"], json!([]));
    }

    #[test]
    fn plane_examples() {
        let p = |s: &str| cmd_plane(&t1(), &Plane::parse(s).unwrap()).unwrap();
        let v = p("1,2,3,4");
        assert_eq!(
            (v["jumping"].clone(), v["corank"].clone()),
            (json!(false), json!(0))
        );
        assert_eq!(v["splitting_type"], json!([-1, -1]));
        let v = p("1,1,1,1");
        assert_eq!(
            (v["jumping"].clone(), v["corank"].clone()),
            (json!(false), json!(0))
        );
        assert_eq!(v["section"], "line_pair");
        let v = p("0,1,−1,0");
        assert_eq!(
            (v["jumping"].clone(), v["corank"].clone()),
            (json!(true), json!(2))
        );
        assert_eq!(v["splitting_type"], json!([1, -3]));
        let v = p("0,1,2,0");
        assert_eq!(v["splitting_type"], json!([0, -2]));
        let v = p("0,1,0,0");
        assert_eq!(
            (v["jumping"].clone(), v["corank"].clone()),
            (json!(true), json!(1))
        );
        assert_eq!(v["section"], "line_pair");
        assert!(v.get("splitting_type").is_none());
    }

    #[test]
    fn parse_errors_carry_context() {
        let e = parse_instance("{\"points\": [\n  {\"u\": [\"1\"]}\n]}").unwrap_err();
        assert_eq!(e.code, EXIT_INPUT);
        assert!(e.message.contains("line 2"), "{}", e.message);
        let e = parse_instance(r#"{"points":[{"u":["1","x"],"v":["1","0"]}],"coeffs":["1"]}"#)
            .unwrap_err();
        assert!(e.message.contains("points[0]"), "{}", e.message);
        let e = parse_instance(r#"{"points":[{"u":["1","0"],"v":["1","0"]}],"coeffs":["1/0"]}"#)
            .unwrap_err();
        assert!(e.message.contains("coeffs[0]"), "{}", e.message);
        let dup = r#"{"points":[{"u":["1","0"],"v":["1","0"]},{"u":["2","0"],"v":["3","0"]}],"coeffs":["1","1"]}"#;
        assert_eq!(parse_instance(dup).unwrap_err().code, EXIT_INPUT);
    }

    #[test]
    fn k_preconditions() {
        let d = random_data(2, 3, true);
        let e = cmd_singular(&d).unwrap_err();
        assert_eq!(e.code, EXIT_DEGENERATE);
        assert!(e.message.contains("requires k ≥ 3"));
        assert_eq!(cmd_cone(&d).unwrap_err().code, EXIT_DEGENERATE);
        assert_eq!(cmd_poncelet(&d, 4, 1e-9).unwrap_err().code, EXIT_DEGENERATE);
    }

    #[test]
    fn collinear_pair_rejected() {
        let text = r#"{"points":[{"u":["1","0"],"v":["1","0"]},{"u":["1","0"],"v":["0","1"]},
            {"u":["1","1"],"v":["1","0"]}],"coeffs":["1","2","3"]}"#;
        let d = parse_instance(text).unwrap();
        for e in [
            cmd_cone(&d).unwrap_err(),
            cmd_poncelet(&d, 4, 1e-9).unwrap_err(),
        ] {
            assert_eq!(e.code, EXIT_DEGENERATE);
            assert!(e.flags.contains(&"collinear_pair(1,2)".to_string()));
            assert!(e.message.contains("not containing the vertex"));
        }
    }

    #[test]
    fn random_is_deterministic() {
        assert_eq!(random_instance(3, 7, false), random_instance(3, 7, false));
        assert_ne!(random_instance(3, 7, false), random_instance(3, 8, false));
        let d = random_data(5, 1, true);
        assert!(validate(&d).is_clean());
        assert_eq!(random_data(1, 99, false).k(), 1);
    }

    #[test]
    fn run_exit_codes() {
        let out = run(["jumpcon", "random", "--k", "0", "--seed", "1"]);
        assert_eq!(out.code, EXIT_INPUT);
        let err: Value = serde_json::from_str(&out.stderr).unwrap();
        assert_eq!(err["error"], "invalid_input");
        assert_eq!(run(["jumpcon", "bogus"]).code, EXIT_INPUT);
        assert_eq!(
            run(["jumpcon", "surface", "--input", "/nonexistent.json"]).code,
            EXIT_INPUT
        );
        let out = run([
            "jumpcon", "--format", "text", "random", "--k", "1", "--seed", "5",
        ]);
        assert_eq!(out.code, EXIT_OK);
        assert!(out.stdout.contains("coeffs:"));
    }
}
