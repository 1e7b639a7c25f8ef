use super::*;
use crate::labels::{resolve_assertion, AssertionPath, Label, SolverName};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("{0}")]
    Parse(ParseError),
    #[error("no assertion at `{0}`")]
    UnknownAssertion(String),
}

/// Records `label: solver` in the hint block of the assertion at `path`,
/// replacing an existing entry for the same label. Only the hint block is
/// touched; the rest of the source is preserved byte for byte.
pub fn rewrite_hint(source: &str, path: &AssertionPath, label: &Label, solver: SolverName) -> Result<String, RewriteError> {
    let file = parse(source).map_err(RewriteError::Parse)?;
    let assertion = resolve_assertion(&file, path).ok_or_else(|| RewriteError::UnknownAssertion(path.to_string()))?;
    let mut hints = assertion.hints.clone();
    match hints.iter_mut().find(|h| &h.label == label) {
        Some(h) => h.solver = solver,
        None => hints.push(Hint { label: label.clone(), solver }),
    }
    let block = format!(
        "{{{{{}}}}}",
        hints.iter().map(|h| format!("{}: {}", h.label.hint_text(), h.solver)).collect::<Vec<_>>().join(", ")
    );
    let mut out = String::with_capacity(source.len() + block.len() + 1);
    match assertion.hints_span {
        Some(sp) => {
            out.push_str(&source[..sp.start]);
            out.push_str(&block);
            out.push_str(&source[sp.end..]);
        }
        None => {
            out.push_str(&source[..assertion.insert_at]);
            out.push(' ');
            out.push_str(&block);
            out.push_str(&source[assertion.insert_at..]);
        }
    }
    Ok(out)
}
