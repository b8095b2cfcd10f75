//! JSON encoding of rationals, polynomials and forms, and a cursor that
//! reports schema errors by JSON pointer.
//!
//! A polynomial is a list of terms `{"exponents": [..], "numerator": n,
//! "denominator": d}`; numerators and denominators are JSON integers or
//! decimal strings. A form is a list of `{"wedge": [names], "coefficient": poly}`.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::forms::PolyForm;
use crate::linalg::Rational;
use crate::poly::MultiPoly;

/// A JSON value together with its pointer path.
#[derive(Clone, Copy)]
pub struct Node<'a> {
    value: &'a Value,
    path: &'a str,
}

/// Owned pointer paths let children outlive the parent borrow.
pub struct Owned<'a> {
    value: &'a Value,
    path: String,
}

impl<'a> Owned<'a> {
    pub fn node(&self) -> Node<'_> {
        Node {
            value: self.value,
            path: &self.path,
        }
    }
}

fn escape(segment: &str) -> String {
    segment.replace('~', "~0").replace('/', "~1")
}

impl<'a> Node<'a> {
    pub fn root(value: &'a Value) -> Self {
        Node { value, path: "" }
    }

    pub fn path(&self) -> String {
        if self.path.is_empty() {
            "/".into()
        } else {
            self.path.to_string()
        }
    }

    pub fn value(&self) -> &'a Value {
        self.value
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        Error::Schema {
            path: self.path(),
            message: message.into(),
        }
    }

    fn object(&self) -> Result<&'a Map<String, Value>> {
        self.value.as_object().ok_or_else(|| self.error("expected an object"))
    }

    /// Rejects keys outside `allowed`.
    pub fn only_keys(&self, allowed: &[&str]) -> Result<()> {
        for key in self.object()?.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Schema {
                    path: format!("{}/{}", self.path, escape(key)),
                    message: "unknown field".into(),
                });
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Result<Owned<'a>> {
        let path = format!("{}/{}", self.path, escape(key));
        match self.object()?.get(key) {
            Some(v) if !v.is_null() => Ok(Owned { value: v, path }),
            _ => Err(Error::Schema {
                path,
                message: "missing field".into(),
            }),
        }
    }

    pub fn get_opt(&self, key: &str) -> Result<Option<Owned<'a>>> {
        match self.object()?.get(key) {
            Some(v) if !v.is_null() => Ok(Some(Owned {
                value: v,
                path: format!("{}/{}", self.path, escape(key)),
            })),
            _ => Ok(None),
        }
    }

    pub fn items(&self) -> Result<Vec<Owned<'a>>> {
        let arr = self.value.as_array().ok_or_else(|| self.error("expected an array"))?;
        Ok(arr
            .iter()
            .enumerate()
            .map(|(i, v)| Owned {
                value: v,
                path: format!("{}/{}", self.path, i),
            })
            .collect())
    }

    pub fn string(&self) -> Result<String> {
        self.value
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| self.error("expected a string"))
    }

    pub fn unsigned(&self) -> Result<u64> {
        self.value
            .as_u64()
            .ok_or_else(|| self.error("expected a non-negative integer"))
    }

    pub fn integer(&self) -> Result<i64> {
        self.value.as_i64().ok_or_else(|| self.error("expected an integer"))
    }

    pub fn big_integer(&self) -> Result<BigInt> {
        match self.value {
            Value::Number(n) => n
                .as_i64()
                .map(BigInt::from)
                .ok_or_else(|| self.error("expected an integer (use a string for large values)")),
            Value::String(s) => s
                .trim()
                .parse::<BigInt>()
                .map_err(|_| self.error(format!("not an integer: {s:?}"))),
            _ => Err(self.error("expected an integer or a decimal string")),
        }
    }
}

pub fn read_rational(node: Node<'_>) -> Result<Rational> {
    node.only_keys(&["numerator", "denominator"])?;
    let num = node.get("numerator")?.node().big_integer()?;
    let den = match node.get_opt("denominator")? {
        Some(d) => {
            let v = d.node().big_integer()?;
            if v.is_zero() {
                return Err(d.node().error("denominator must be nonzero"));
            }
            v
        }
        None => BigInt::from(1),
    };
    Ok(Rational::new(num, den))
}

pub fn read_poly(node: Node<'_>, num_vars: usize) -> Result<MultiPoly> {
    let mut p = MultiPoly::zero(num_vars);
    for term in node.items()? {
        let t = term.node();
        t.only_keys(&["exponents", "numerator", "denominator"])?;
        let exps_node = t.get("exponents")?;
        let exps = exps_node
            .node()
            .items()?
            .iter()
            .map(|e| {
                let v = e.node().unsigned()?;
                u32::try_from(v).map_err(|_| e.node().error("exponent too large"))
            })
            .collect::<Result<Vec<u32>>>()?;
        if exps.len() != num_vars {
            return Err(exps_node.node().error(format!(
                "exponent vector has length {}, expected {num_vars}",
                exps.len()
            )));
        }
        let num = t.get("numerator")?.node().big_integer()?;
        let den = match t.get_opt("denominator")? {
            Some(d) => {
                let v = d.node().big_integer()?;
                if v.is_zero() {
                    return Err(d.node().error("denominator must be nonzero"));
                }
                v
            }
            None => BigInt::from(1),
        };
        p.add_term(exps, Rational::new(num, den));
    }
    Ok(p)
}

/// Reads a form of the given degree; `wedge` lists variable names.
pub fn read_form(node: Node<'_>, names: &[String], degree: usize) -> Result<PolyForm> {
    let n = names.len();
    let mut w = PolyForm::zero(n, degree);
    for term in node.items()? {
        let t = term.node();
        t.only_keys(&["wedge", "coefficient"])?;
        let wedge_node = t.get("wedge")?;
        let mut idx = Vec::new();
        for name in wedge_node.node().items()? {
            let s = name.node().string()?;
            let i = names
                .iter()
                .position(|v| *v == s)
                .ok_or_else(|| name.node().error(format!("unknown variable {s:?}")))?;
            idx.push(i);
        }
        if idx.len() != degree {
            return Err(wedge_node
                .node()
                .error(format!("expected a {degree}-form term, got {} differentials", idx.len())));
        }
        let coeff = read_poly(t.get("coefficient")?.node(), n)?;
        w = w.add(&PolyForm::term(idx, coeff));
    }
    Ok(w)
}

pub fn rational_json(r: &Rational) -> Value {
    let int = |b: &BigInt| match b.to_i64() {
        Some(v) => json!(v),
        None => json!(b.to_string()),
    };
    json!({ "numerator": int(r.numer()), "denominator": int(r.denom()) })
}

pub fn poly_json(p: &MultiPoly) -> Value {
    Value::Array(
        p.sorted_terms()
            .into_iter()
            .map(|(e, c)| {
                let mut t = rational_json(c);
                t["exponents"] = json!(e);
                t
            })
            .collect(),
    )
}

pub fn form_json(w: &PolyForm, names: &[String]) -> Value {
    Value::Array(
        w.terms()
            .iter()
            .map(|(s, g)| {
                json!({
                    "wedge": s.iter().map(|&i| names[i].clone()).collect::<Vec<_>>(),
                    "coefficient": poly_json(g),
                })
            })
            .collect(),
    )
}

/// A polynomial with a human-readable rendering alongside its terms.
pub fn poly_witness(p: &MultiPoly, names: &[String]) -> Value {
    json!({ "display": p.fmt_with(names), "terms": poly_json(p) })
}

pub fn form_witness(w: &PolyForm, names: &[String]) -> Value {
    json!({ "display": w.fmt_with(names), "terms": form_json(w, names) })
}
