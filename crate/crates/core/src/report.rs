//! JSON schemas and deterministic serialization. Matrices are row-major
//! lists of [re, im] pairs; algebras are block lists; floats are rendered
//! with fixed 17-significant-digit scientific notation so identical runs
//! produce byte-identical reports. Infinite values (the lower-bound constant
//! when a kernel exists) serialize as null.

use std::io;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::{AlgebraDescriptor, CMat, Operator};
use crate::battery::BatteryReport;
use crate::extension::{CertificateReport, ExtensionProblem, ExtensionResult};
use crate::generators::InstanceBundle;
use crate::linmap::LinearMapMatrix;
use crate::surjectivity::SurjectivityReport;
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
pub struct BlockJson {
    pub dim: usize,
    pub weight: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub blocks: Vec<BlockJson>,
}

/// Row-major complex matrix: rows of [re, im] entries.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Serialize, Deserialize)]
pub struct OperatorJson {
    pub blocks: Vec<MatrixJson>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LinearMapJson {
    pub domain: AlgebraJson,
    pub codomain: AlgebraJson,
    pub matrix: MatrixJson,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CheckJson {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BatteryJson {
    pub checks: Vec<CheckJson>,
    pub overall: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CertificateJson {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub context: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProblemJson {
    pub source: AlgebraJson,
    pub target: AlgebraJson,
    pub u_map: LinearMapJson,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceJson {
    pub source: AlgebraJson,
    pub target: AlgebraJson,
    pub u_map: LinearMapJson,
    pub ground_truth: LinearMapJson,
    pub h: OperatorJson,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExtensionResultJson {
    pub phi: LinearMapJson,
    pub certificates: Vec<CertificateJson>,
    pub hypothesis_report: BatteryJson,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SurjectivityJson {
    pub unital: bool,
    pub isometric_sa: bool,
    /// null encodes an infinite constant (kernel found).
    pub lower_bound_k: Option<f64>,
    pub corner_inclusion: bool,
    pub corner_residual: f64,
    pub range_rank: usize,
    pub codomain_dim: usize,
    pub verdict: String,
}

fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn matrix_from_json(j: &MatrixJson, rows: usize, cols: usize, path: &str) -> Result<CMat> {
    if j.len() != rows || j.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse {
            path: path.into(),
            message: format!("expected a {rows}x{cols} matrix"),
        });
    }
    Ok(CMat::from_fn(rows, cols, |i, k| {
        Complex64::new(j[i][k][0], j[i][k][1])
    }))
}

pub fn algebra_to_json(alg: &AlgebraDescriptor) -> AlgebraJson {
    AlgebraJson {
        blocks: alg
            .blocks()
            .iter()
            .map(|b| BlockJson {
                dim: b.dim,
                weight: b.weight,
            })
            .collect(),
    }
}

pub fn algebra_from_json(j: &AlgebraJson, path: &str) -> Result<Arc<AlgebraDescriptor>> {
    AlgebraDescriptor::new(j.blocks.iter().map(|b| (b.dim, b.weight)).collect()).map_err(|e| {
        Error::Parse {
            path: path.into(),
            message: e.to_string(),
        }
    })
}

pub fn operator_to_json(x: &Operator) -> OperatorJson {
    OperatorJson {
        blocks: x.blocks().iter().map(matrix_to_json).collect(),
    }
}

pub fn operator_from_json(
    j: &OperatorJson,
    alg: &Arc<AlgebraDescriptor>,
    path: &str,
) -> Result<Operator> {
    if j.blocks.len() != alg.num_blocks() {
        return Err(Error::Parse {
            path: path.into(),
            message: format!(
                "operator has {} blocks, algebra has {}",
                j.blocks.len(),
                alg.num_blocks()
            ),
        });
    }
    let blocks = j
        .blocks
        .iter()
        .zip(alg.blocks())
        .enumerate()
        .map(|(k, (m, b))| matrix_from_json(m, b.dim, b.dim, &format!("{path}.blocks[{k}]")))
        .collect::<Result<Vec<_>>>()?;
    Operator::new(alg.clone(), blocks)
}

pub fn linmap_to_json(m: &LinearMapMatrix) -> LinearMapJson {
    LinearMapJson {
        domain: algebra_to_json(m.domain()),
        codomain: algebra_to_json(m.codomain()),
        matrix: matrix_to_json(m.matrix()),
    }
}

pub fn linmap_from_json(j: &LinearMapJson, path: &str) -> Result<LinearMapMatrix> {
    let domain = algebra_from_json(&j.domain, &format!("{path}.domain"))?;
    let codomain = algebra_from_json(&j.codomain, &format!("{path}.codomain"))?;
    let matrix = matrix_from_json(
        &j.matrix,
        codomain.total_dim(),
        domain.total_dim(),
        &format!("{path}.matrix"),
    )?;
    LinearMapMatrix::new(domain, codomain, matrix)
}

pub fn battery_to_json(b: &BatteryReport) -> BatteryJson {
    BatteryJson {
        checks: b
            .checks
            .iter()
            .map(|c| CheckJson {
                name: c.name.clone(),
                residual: c.residual,
                tolerance: c.tolerance,
                passed: c.passed,
            })
            .collect(),
        overall: b.overall,
    }
}

pub fn certificate_to_json(c: &CertificateReport) -> CertificateJson {
    CertificateJson {
        name: c.name.clone(),
        residual: c.residual,
        tolerance: c.tolerance,
        passed: c.passed,
        context: c.context.clone(),
    }
}

pub fn problem_to_json(p: &ExtensionProblem) -> ProblemJson {
    ProblemJson {
        source: algebra_to_json(p.source()),
        target: algebra_to_json(p.target()),
        u_map: linmap_to_json(p.u_map()),
    }
}

pub fn problem_from_json(j: &ProblemJson, path: &str) -> Result<ExtensionProblem> {
    let source = algebra_from_json(&j.source, &format!("{path}.source"))?;
    let target = algebra_from_json(&j.target, &format!("{path}.target"))?;
    let u_map = linmap_from_json(&j.u_map, &format!("{path}.u_map"))?;
    ExtensionProblem::new(source, target, u_map)
}

pub fn instance_to_json(b: &InstanceBundle) -> InstanceJson {
    InstanceJson {
        source: algebra_to_json(b.problem.source()),
        target: algebra_to_json(b.problem.target()),
        u_map: linmap_to_json(b.problem.u_map()),
        ground_truth: linmap_to_json(&b.ground_truth),
        h: operator_to_json(&b.commutant_weight),
    }
}

pub fn instance_from_json(j: &InstanceJson, path: &str) -> Result<InstanceBundle> {
    let source = algebra_from_json(&j.source, &format!("{path}.source"))?;
    let target = algebra_from_json(&j.target, &format!("{path}.target"))?;
    let u_map = linmap_from_json(&j.u_map, &format!("{path}.u_map"))?;
    let ground_truth = linmap_from_json(&j.ground_truth, &format!("{path}.ground_truth"))?;
    let h = operator_from_json(&j.h, &target, &format!("{path}.h"))?;
    Ok(InstanceBundle {
        problem: ExtensionProblem::new(source, target, u_map)?,
        ground_truth,
        commutant_weight: h,
    })
}

pub fn extension_result_to_json(r: &ExtensionResult) -> ExtensionResultJson {
    ExtensionResultJson {
        phi: linmap_to_json(&r.phi),
        certificates: r.certificates.iter().map(certificate_to_json).collect(),
        hypothesis_report: battery_to_json(&r.hypothesis_report),
    }
}

pub fn surjectivity_to_json(r: &SurjectivityReport) -> SurjectivityJson {
    SurjectivityJson {
        unital: r.unital,
        isometric_sa: r.isometric_sa,
        lower_bound_k: if r.lower_bound_k.is_finite() {
            Some(r.lower_bound_k)
        } else {
            None
        },
        corner_inclusion: r.corner_inclusion,
        corner_residual: r.corner_residual,
        range_rank: r.range_rank,
        codomain_dim: r.codomain_dim,
        verdict: r.verdict.as_str().into(),
    }
}

/// Formatter printing every float with 17 significant digits in scientific
/// notation, so serialization is byte-stable across runs and platforms.
struct Digits17(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Renders any serializable value with the deterministic float format.
pub fn render_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let fmt = Digits17(serde_json::ser::PrettyFormatter::new());
    let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
    value.serialize(&mut ser).map_err(|e| Error::Parse {
        path: "<output>".into(),
        message: e.to_string(),
    })?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::Parse {
        path: "<output>".into(),
        message: e.to_string(),
    })
}

/// Parses a JSON file into a value, reporting the path on failure.
pub fn parse_value(text: &str, path: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.into(),
        message: e.to_string(),
    })
}

pub fn from_value<T: for<'de> Deserialize<'de>>(v: Value, path: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Parse {
        path: path.into(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::tol::Tolerances;

    #[test]
    fn algebra_round_trip() {
        let alg = AlgebraDescriptor::new(vec![(2, 1.0), (3, 0.25)]).unwrap();
        let j = algebra_to_json(&alg);
        let back = algebra_from_json(&j, "alg").unwrap();
        assert_eq!(alg, back);
    }

    #[test]
    fn instance_round_trip() {
        let bundle = generators::random_instance(3).unwrap();
        let j = instance_to_json(&bundle);
        let text = render_json(&j).unwrap();
        let v = parse_value(&text, "inst").unwrap();
        let parsed: InstanceJson = from_value(v, "inst").unwrap();
        let back = instance_from_json(&parsed, "inst").unwrap();
        assert_eq!(
            bundle.problem.u_map().matrix(),
            back.problem.u_map().matrix()
        );
        assert_eq!(bundle.ground_truth.matrix(), back.ground_truth.matrix());
        assert_eq!(bundle.commutant_weight, back.commutant_weight);
    }

    #[test]
    fn deterministic_rendering() {
        let bundle = generators::random_instance(4).unwrap();
        let a = render_json(&instance_to_json(&bundle)).unwrap();
        let b = render_json(&instance_to_json(&bundle)).unwrap();
        assert_eq!(a, b);
        // 17 significant digits, scientific notation
        let text = render_json(&vec![0.1f64 + 0.2]).unwrap();
        assert!(text.contains("3.0000000000000004e-1"), "{text}");
    }

    #[test]
    fn infinite_lower_bound_serializes_as_null() {
        let t = Tolerances::default();
        let phi = generators::build_jordan(&generators::killing_spec()).unwrap();
        let rep = crate::surjectivity::certify_jordan_isomorphism(&phi, 20, 1, &t).unwrap();
        let j = surjectivity_to_json(&rep);
        assert!(j.lower_bound_k.is_none());
        let text = render_json(&j).unwrap();
        assert!(text.contains("\"lower_bound_k\": null"));
        assert!(text.contains("\"verdict\": \"not_injective\""));
    }

    #[test]
    fn parse_errors_name_the_path() {
        let bad = AlgebraJson { blocks: vec![] };
        let err = algebra_from_json(&bad, "doc.source").unwrap_err();
        assert!(err.to_string().contains("doc.source"));

        let err = parse_value("{not json", "file.json").unwrap_err();
        assert!(err.to_string().contains("file.json"));
    }

    #[test]
    fn operator_shape_validation() {
        let alg = AlgebraDescriptor::new(vec![(2, 1.0)]).unwrap();
        let bad = OperatorJson {
            blocks: vec![vec![vec![[1.0, 0.0]]]],
        };
        assert!(operator_from_json(&bad, &alg, "h").is_err());
    }
}
