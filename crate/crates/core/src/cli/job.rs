//! Job documents: a foliation, crystal or function on 𝔸ⁿ plus cutoffs.

use std::path::Path;

use serde_json::{json, Map, Value};

use super::wire::{form_json, poly_json, read_form, read_poly, Node};
use crate::crystal::Crystal;
use crate::error::{Error, Result};
use crate::foliation::FoliationPresentation;
use crate::forms::{FormMatrix, PolyForm};
use crate::poly::MultiPoly;
use crate::Cutoffs;

pub const SCHEMA_VERSION: &str = "1";

pub const KINDS: [&str; 7] = [
    "pfaffian",
    "integrable",
    "lie_algebroid",
    "de_rham",
    "punctual",
    "crystal",
    "singularity",
];

/// Kind-specific content of a job document.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    DeRham,
    Punctual,
    Pfaffian {
        forms: Vec<PolyForm>,
        /// `connection[i][j]` is the 1-form `w_ij`; `None` means `W = 0`.
        connection: Option<Vec<Vec<PolyForm>>>,
    },
    Integrable {
        functions: Vec<MultiPoly>,
    },
    LieAlgebroid {
        /// Row `a` is the vector field `ρ(e_a)`.
        anchor: Vec<Vec<MultiPoly>>,
        /// `brackets[i][j][l]`: coefficient of `e_l` in `[e_i, e_j]`.
        brackets: Vec<Vec<Vec<MultiPoly>>>,
    },
    Crystal {
        foliation: Box<Payload>,
        rank: usize,
        /// One `rank × rank` matrix per letter of the foliation.
        connection: Vec<Vec<Vec<MultiPoly>>>,
    },
    Singularity {
        function: MultiPoly,
    },
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::DeRham => "de_rham",
            Payload::Punctual => "punctual",
            Payload::Pfaffian { .. } => "pfaffian",
            Payload::Integrable { .. } => "integrable",
            Payload::LieAlgebroid { .. } => "lie_algebroid",
            Payload::Crystal { .. } => "crystal",
            Payload::Singularity { .. } => "singularity",
        }
    }

    pub fn is_foliation(&self) -> bool {
        !matches!(self, Payload::Crystal { .. } | Payload::Singularity { .. })
    }
}

/// A validated job document.
#[derive(Clone, Debug, PartialEq)]
pub struct JobDocument {
    pub variables: Vec<String>,
    /// Positive weights for `x_k` and `dx_k`; standard grading when absent.
    pub weights: Option<Vec<u32>>,
    pub payload: Payload,
    pub cutoffs: Option<Cutoffs>,
}

pub fn parse_job(path: &Path) -> Result<JobDocument> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes).map_err(|_| Error::Parse(format!("{}: not UTF-8", path.display())))?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<JobDocument> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    parse_value(&value)
}

pub fn parse_value(value: &Value) -> Result<JobDocument> {
    let root = Node::root(value);
    root.only_keys(&["schema_version", "kind", "variables", "weights", "payload", "cutoffs"])?;
    let version = root.get("schema_version")?;
    if version.node().string()? != SCHEMA_VERSION {
        return Err(version
            .node()
            .error(format!("unrecognized schema version (expected {SCHEMA_VERSION:?})")));
    }
    let kind = root.get("kind")?;
    let kind_name = read_kind(kind.node(), &KINDS)?;

    let vars_node = root.get("variables")?;
    let mut variables: Vec<String> = Vec::new();
    for v in vars_node.node().items()? {
        let name = v.node().string()?;
        if name.is_empty() || variables.contains(&name) {
            return Err(v.node().error("variable names must be nonempty and distinct"));
        }
        variables.push(name);
    }
    let n = variables.len();

    let weights = match root.get_opt("weights")? {
        Some(w) => {
            let items = w.node().items()?;
            if items.len() != n {
                return Err(w.node().error(format!("expected {n} weights")));
            }
            let ws = items
                .iter()
                .map(|i| match i.node().unsigned()? {
                    v @ 1..=1024 => Ok(v as u32),
                    _ => Err(i.node().error("weights must be positive")),
                })
                .collect::<Result<Vec<u32>>>()?;
            Some(ws)
        }
        None => None,
    };

    let payload_node = root.get("payload")?;
    let payload = read_payload(payload_node.node(), &kind_name, &variables)?;

    let cutoffs = match root.get_opt("cutoffs")? {
        Some(c) => Some(read_cutoffs(c.node())?),
        None => None,
    };

    Ok(JobDocument {
        variables,
        weights,
        payload,
        cutoffs,
    })
}

fn read_kind(node: Node<'_>, allowed: &[&str]) -> Result<String> {
    let kind = node.string()?;
    if !allowed.contains(&kind.as_str()) {
        return Err(node.error(format!("unknown kind {kind:?} (expected one of {})", allowed.join(", "))));
    }
    Ok(kind)
}

fn read_cutoffs(node: Node<'_>) -> Result<Cutoffs> {
    node.only_keys(&["weight", "poly_degree", "jet_bound"])?;
    let mut c = Cutoffs::default();
    if let Some(w) = node.get_opt("weight")? {
        c.weight = w.node().unsigned()? as usize;
    }
    if let Some(d) = node.get_opt("poly_degree")? {
        c.poly_degree = d.node().integer()?;
        if c.poly_degree < 0 {
            return Err(d.node().error("poly_degree must be non-negative"));
        }
    }
    if let Some(j) = node.get_opt("jet_bound")? {
        c.jet_bound = u32::try_from(j.node().unsigned()?).map_err(|_| j.node().error("jet_bound too large"))?;
    }
    Ok(c)
}

fn poly_list(node: Node<'_>, n: usize) -> Result<Vec<MultiPoly>> {
    node.items()?.iter().map(|p| read_poly(p.node(), n)).collect()
}

fn poly_matrix(node: Node<'_>, n: usize, rows: usize, cols: usize) -> Result<Vec<Vec<MultiPoly>>> {
    let items = node.items()?;
    if items.len() != rows {
        return Err(node.error(format!("expected {rows} rows")));
    }
    items
        .iter()
        .map(|row| {
            let entries = poly_list(row.node(), n)?;
            if entries.len() != cols {
                return Err(row.node().error(format!("expected {cols} entries")));
            }
            Ok(entries)
        })
        .collect()
}

fn read_payload(node: Node<'_>, kind: &str, names: &[String]) -> Result<Payload> {
    let n = names.len();
    match kind {
        "de_rham" | "punctual" => {
            node.only_keys(&[])?;
            Ok(if kind == "de_rham" { Payload::DeRham } else { Payload::Punctual })
        }
        "pfaffian" => {
            node.only_keys(&["forms", "connection"])?;
            let forms = node
                .get("forms")?
                .node()
                .items()?
                .iter()
                .map(|w| read_form(w.node(), names, 1))
                .collect::<Result<Vec<_>>>()?;
            let k = forms.len();
            let connection = match node.get_opt("connection")? {
                Some(c) => {
                    let rows = c.node().items()?;
                    if rows.len() != k {
                        return Err(c.node().error(format!("expected a {k}x{k} matrix of 1-forms")));
                    }
                    let m = rows
                        .iter()
                        .map(|row| {
                            let entries = row.node().items()?;
                            if entries.len() != k {
                                return Err(row.node().error(format!("expected {k} entries")));
                            }
                            entries.iter().map(|w| read_form(w.node(), names, 1)).collect()
                        })
                        .collect::<Result<Vec<Vec<PolyForm>>>>()?;
                    Some(m)
                }
                None => None,
            };
            Ok(Payload::Pfaffian { forms, connection })
        }
        "integrable" => {
            node.only_keys(&["functions"])?;
            Ok(Payload::Integrable {
                functions: poly_list(node.get("functions")?.node(), n)?,
            })
        }
        "lie_algebroid" => {
            node.only_keys(&["anchor", "brackets"])?;
            let anchor_node = node.get("anchor")?;
            let r = anchor_node.node().items()?.len();
            let anchor = poly_matrix(anchor_node.node(), n, r, n)?;
            let brackets_node = node.get("brackets")?;
            let slabs = brackets_node.node().items()?;
            if slabs.len() != r {
                return Err(brackets_node.node().error(format!("expected {r}x{r}x{r} structure functions")));
            }
            let brackets = slabs
                .iter()
                .map(|s| {
                    let rows = s.node().items()?;
                    if rows.len() != r {
                        return Err(s.node().error(format!("expected {r} rows")));
                    }
                    rows.iter()
                        .map(|row| {
                            let v = poly_list(row.node(), n)?;
                            if v.len() != r {
                                return Err(row.node().error(format!("expected {r} entries")));
                            }
                            Ok(v)
                        })
                        .collect()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Payload::LieAlgebroid { anchor, brackets })
        }
        "crystal" => {
            node.only_keys(&["foliation", "rank", "connection"])?;
            let fol = node.get("foliation")?;
            fol.node().only_keys(&["kind", "payload"])?;
            let inner_kind = read_kind(fol.node().get("kind")?.node(), &KINDS[..5])?;
            let inner = read_payload(fol.node().get("payload")?.node(), &inner_kind, names)?;
            let rank_node = node.get("rank")?;
            let rank = rank_node.node().unsigned()? as usize;
            if rank == 0 {
                return Err(rank_node.node().error("rank must be positive"));
            }
            let conn_node = node.get("connection")?;
            let connection = conn_node
                .node()
                .items()?
                .iter()
                .map(|m| poly_matrix(m.node(), n, rank, rank))
                .collect::<Result<Vec<_>>>()?;
            Ok(Payload::Crystal {
                foliation: Box::new(inner),
                rank,
                connection,
            })
        }
        "singularity" => {
            node.only_keys(&["function"])?;
            Ok(Payload::Singularity {
                function: read_poly(node.get("function")?.node(), n)?,
            })
        }
        _ => unreachable!("kind validated against KINDS"),
    }
}

fn payload_json(p: &Payload, names: &[String]) -> Value {
    let polys = |v: &[MultiPoly]| Value::Array(v.iter().map(poly_json).collect());
    let matrix = |m: &[Vec<MultiPoly>]| Value::Array(m.iter().map(|r| polys(r)).collect());
    match p {
        Payload::DeRham | Payload::Punctual => json!({}),
        Payload::Pfaffian { forms, connection } => {
            let mut o = Map::new();
            o.insert(
                "forms".into(),
                Value::Array(forms.iter().map(|w| form_json(w, names)).collect()),
            );
            if let Some(c) = connection {
                o.insert(
                    "connection".into(),
                    Value::Array(
                        c.iter()
                            .map(|row| Value::Array(row.iter().map(|w| form_json(w, names)).collect()))
                            .collect(),
                    ),
                );
            }
            Value::Object(o)
        }
        Payload::Integrable { functions } => json!({ "functions": polys(functions) }),
        Payload::LieAlgebroid { anchor, brackets } => json!({
            "anchor": matrix(anchor),
            "brackets": Value::Array(brackets.iter().map(|s| matrix(s)).collect()),
        }),
        Payload::Crystal {
            foliation,
            rank,
            connection,
        } => json!({
            "foliation": { "kind": foliation.kind(), "payload": payload_json(foliation, names) },
            "rank": rank,
            "connection": Value::Array(connection.iter().map(|m| matrix(m)).collect()),
        }),
        Payload::Singularity { function } => json!({ "function": poly_json(function) }),
    }
}

impl JobDocument {
    pub fn kind(&self) -> &'static str {
        self.payload.kind()
    }

    pub fn n(&self) -> usize {
        self.variables.len()
    }

    /// Canonical serialization; `parse_value(&doc.to_json())` returns `doc`.
    pub fn to_json(&self) -> Value {
        let mut o = Map::new();
        o.insert("schema_version".into(), json!(SCHEMA_VERSION));
        o.insert("kind".into(), json!(self.kind()));
        o.insert("variables".into(), json!(self.variables));
        if let Some(w) = &self.weights {
            o.insert("weights".into(), json!(w));
        }
        o.insert("payload".into(), payload_json(&self.payload, &self.variables));
        if let Some(c) = &self.cutoffs {
            o.insert("cutoffs".into(), json!(c));
        }
        Value::Object(o)
    }

    /// Cutoffs from the document, with defaults filled in.
    pub fn effective_cutoffs(&self) -> Cutoffs {
        self.cutoffs.unwrap_or_default()
    }

    /// Builds the foliation, validating its structure. For a crystal this is
    /// the underlying foliation; a singularity `f` gives the fibers of `f`.
    pub fn foliation(&self) -> Result<FoliationPresentation> {
        let fol = match &self.payload {
            Payload::Crystal { foliation, .. } => build_foliation(foliation, self.n())?,
            Payload::Singularity { function } => FoliationPresentation::integrable(self.n(), vec![function.clone()])?,
            p => build_foliation(p, self.n())?,
        };
        match &self.weights {
            Some(w) => fol.with_weights(w.clone()),
            None => Ok(fol),
        }
    }

    /// The crystal of the document; a plain foliation gives its unit crystal.
    pub fn crystal(&self) -> Result<Crystal> {
        let fol = self.foliation()?;
        match &self.payload {
            Payload::Crystal { rank, connection, .. } => Crystal::new(fol, *rank, connection.clone()),
            Payload::Singularity { .. } => Err(Error::Unsupported(
                "a singularity job has no crystal; use the compare or singularity command".into(),
            )),
            _ => Ok(Crystal::trivial(fol)),
        }
    }
}

fn build_foliation(p: &Payload, n: usize) -> Result<FoliationPresentation> {
    match p {
        Payload::DeRham => Ok(FoliationPresentation::de_rham(n)),
        Payload::Punctual => Ok(FoliationPresentation::punctual(n)),
        Payload::Pfaffian { forms, connection } => {
            let k = forms.len();
            let w = match connection {
                Some(c) if k > 0 => FormMatrix::new(n, 1, c.clone())?,
                _ => FormMatrix::zero(n, k, k, 1),
            };
            FoliationPresentation::pfaffian(n, forms.clone(), w)
        }
        Payload::Integrable { functions } => FoliationPresentation::integrable(n, functions.clone()),
        Payload::LieAlgebroid { anchor, brackets } => {
            FoliationPresentation::lie_algebroid(n, anchor.clone(), brackets.clone())
        }
        Payload::Crystal { .. } | Payload::Singularity { .. } => {
            Err(Error::InvalidInput(format!("{} is not a foliation kind", p.kind())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contact_doc() -> Value {
        json!({
            "schema_version": "1",
            "kind": "pfaffian",
            "variables": ["x", "y", "z"],
            "payload": { "forms": [[
                { "wedge": ["x"], "coefficient": [{ "exponents": [0, 0, 0], "numerator": 1 }] },
                { "wedge": ["z"], "coefficient": [{ "exponents": [0, 1, 0], "numerator": -1 }] }
            ]] }
        })
    }

    #[test]
    fn parses_pfaffian() {
        let doc = json!({
            "schema_version": "1",
            "kind": "pfaffian",
            "variables": ["x", "y"],
            "payload": { "forms": [[
                { "wedge": ["y"], "coefficient": [{ "exponents": [1, 0], "numerator": 1, "denominator": 1 }] },
                { "wedge": ["x"], "coefficient": [{ "exponents": [0, 1], "numerator": 1 }] }
            ]] }
        });
        let job = parse_value(&doc).unwrap();
        assert_eq!(job.kind(), "pfaffian");
        assert!(job.foliation().is_ok());
        assert_eq!(job.effective_cutoffs(), Cutoffs::default());
    }

    #[test]
    fn contact_form_fails_validation_not_parsing() {
        let job = parse_value(&contact_doc()).unwrap();
        assert!(matches!(job.foliation(), Err(Error::NotDifferentialIdeal { .. })));
    }

    #[test]
    fn schema_errors_name_the_field() {
        let mut doc = contact_doc();
        doc["kind"] = json!("bogus");
        match parse_value(&doc) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "/kind"),
            other => panic!("{other:?}"),
        }
        let mut doc = contact_doc();
        doc["payload"]["forms"][0][1]["coefficient"][0]["exponents"] = json!([0, 1]);
        match parse_value(&doc) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "/payload/forms/0/1/coefficient/0/exponents"),
            other => panic!("{other:?}"),
        }
        let mut doc = contact_doc();
        doc["schema_version"] = json!("2");
        assert!(matches!(parse_value(&doc), Err(Error::Schema { path, .. }) if path == "/schema_version"));
        assert!(matches!(parse_str("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn canonical_round_trip() {
        let job = parse_value(&contact_doc()).unwrap();
        let canon = job.to_json();
        let again = parse_value(&canon).unwrap();
        assert_eq!(again, job);
        assert_eq!(again.to_json(), canon);
    }
}
