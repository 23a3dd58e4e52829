use super::DriftField;
use crate::error::{Error, Result};

fn numbers(body: &str) -> Result<Vec<f64>> {
    body.split([',', ';'])
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number `{}` in drift parameters", s.trim())))
        })
        .collect()
}

/// Splits `name(a, b; c)` into the name and its numeric arguments.
pub(crate) fn parse_call(text: &str) -> Result<(String, Vec<f64>)> {
    let text = text.trim();
    let (name, body) = match text.find('(') {
        Some(open) => {
            let body = text[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::Parse(format!("unbalanced parentheses in `{text}`")))?;
            (text[..open].trim(), Some(body))
        }
        None => (text, None),
    };
    let args = body.map(numbers).transpose()?.unwrap_or_default();
    Ok((name.to_string(), args))
}

/// Built-in drift by name: `zero`, `trig(A,w)`, `counterexample(gamma,R)`,
/// `linear(a11,a12;a21,a22)` (rows separated by `;`). `dim` is used by
/// `zero` and `trig`.
pub fn parse_field(text: &str, dim: usize) -> Result<DriftField> {
    let (name, args) = parse_call(text)?;
    let name = name.as_str();
    let want = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::Parse(format!("`{name}` takes {n} parameters, got {}", args.len())))
        }
    };
    match name {
        "zero" => {
            want(0)?;
            Ok(DriftField::zero(dim))
        }
        "trig" => {
            want(2)?;
            Ok(DriftField::trig(dim, args[0], args[1]))
        }
        "counterexample" => {
            want(2)?;
            if dim != 1 {
                return Err(Error::InvalidSpec("counterexample drift is one-dimensional".into()));
            }
            DriftField::counterexample(args[0], args[1])
        }
        "linear" => {
            let field = DriftField::linear(args)?;
            if field.dim() != dim {
                return Err(Error::InvalidSpec(format!(
                    "linear drift has dimension {}, expected {dim}",
                    field.dim()
                )));
            }
            Ok(field)
        }
        other => Err(Error::Parse(format!("unknown drift `{other}`"))),
    }
}
