//! Builtin class specifiers: `proj:d`, `proj-mixed:d` (`proj:d` on the
//! points where its concepts disagree), `halflines`, `maj3:seed:d`,
//! `margin:n:gamma`. Anything else is read as a class JSON file.

use convexred::classes::{projection_class, Entry, FiniteConceptClass, Halfspace, Majority3Classifier};
use convexred::rng;
use convexred::Label;

use crate::error::{CliError, CliResult};

fn invalid(field: &'static str, message: impl Into<String>) -> CliError {
    CliError::Invalid {
        field,
        message: message.into(),
    }
}

fn parts<'a>(spec: &'a str, prefix: &str, n: usize) -> Option<Vec<&'a str>> {
    let rest = spec.strip_prefix(prefix)?.strip_prefix(':')?;
    let v: Vec<&str> = rest.split(':').collect();
    (v.len() == n).then_some(v)
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<T> {
    s.parse()
        .map_err(|_| invalid("class", format!("{what} must be a number, got {s:?}")))
}

/// Two opposite half-lines on four points of the real line.
pub fn halflines() -> FiniteConceptClass {
    let points = vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]];
    let table = [1.0, -1.0]
        .iter()
        .map(|s| {
            points
                .iter()
                .map(|x| Entry::from_label(Label::from_sign(s * x[0])))
                .collect()
        })
        .collect();
    FiniteConceptClass::new(points, table, None).expect("valid builtin")
}

pub fn finite_class(spec: &str) -> CliResult<FiniteConceptClass> {
    if let Some(p) = parts(spec, "proj", 1) {
        return Ok(projection_class(num(p[0], "d")?)?);
    }
    if let Some(p) = parts(spec, "proj-mixed", 1) {
        return Ok(projection_class(num(p[0], "d")?)?.disagreement_restriction()?);
    }
    if spec == "halflines" {
        return Ok(halflines());
    }
    if spec.starts_with("maj3:") || spec.starts_with("margin:") {
        return Err(invalid("class", format!("{spec} is not a finite class")));
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| invalid("class", format!("not a builtin and not a readable file ({spec}): {e}")))?;
    Ok(FiniteConceptClass::from_json(&text)?)
}

/// `maj3:seed:d`: majority of three Gaussian homogeneous half-spaces in `R^d`.
pub fn majority3(spec: &str) -> CliResult<Majority3Classifier> {
    let p = parts(spec, "maj3", 2).ok_or_else(|| invalid("class", format!("expected maj3:seed:d, got {spec:?}")))?;
    let seed: u64 = num(p[0], "seed")?;
    let d: usize = num(p[1], "d")?;
    if d == 0 {
        return Err(invalid("class", "d must be positive"));
    }
    let mut r = rng::seeded(seed);
    let mut h = || Halfspace::homogeneous(rng::gaussian_vec(&mut r, d));
    Ok(Majority3Classifier::new(h()?, h()?, h()?)?)
}

/// `margin:n:gamma`: margin half-spaces on `S^n` with margin `gamma`.
pub fn margin(spec: &str) -> CliResult<(usize, f64)> {
    let p = parts(spec, "margin", 2)
        .ok_or_else(|| invalid("class", format!("expected margin:n:gamma, got {spec:?}")))?;
    Ok((num(p[0], "n")?, num(p[1], "gamma")?))
}
