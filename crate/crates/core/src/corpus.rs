//! Bundled example programs.

pub const CORPUS: &[(&str, &str)] = &[
    ("bc", include_str!("../corpus/bc.hhl")),
    ("choices8", include_str!("../corpus/choices8.hhl")),
    ("cruise", include_str!("../corpus/cruise.hhl")),
    ("dbx_eq", include_str!("../corpus/dbx_eq.hhl")),
    ("dbx_ineq", include_str!("../corpus/dbx_ineq.hhl")),
    ("dc", include_str!("../corpus/dc.hhl")),
    ("dg", include_str!("../corpus/dg.hhl")),
    ("dw_inside", include_str!("../corpus/dw_inside.hhl")),
    ("dw_invariant", include_str!("../corpus/dw_invariant.hhl")),
    ("dw_mixed", include_str!("../corpus/dw_mixed.hhl")),
    ("dw_outside", include_str!("../corpus/dw_outside.hhl")),
    ("ex1", include_str!("../corpus/ex1.hhl")),
    ("ex1_broken", include_str!("../corpus/ex1_broken.hhl")),
    ("ex2", include_str!("../corpus/ex2.hhl")),
    ("ex3", include_str!("../corpus/ex3.hhl")),
    ("highlight", include_str!("../corpus/highlight.hhl")),
    ("labels", include_str!("../corpus/labels.hhl")),
    ("sawtooth", include_str!("../corpus/sawtooth.hhl")),
    ("sln", include_str!("../corpus/sln.hhl")),
];

pub fn get(name: &str) -> Option<&'static str> {
    CORPUS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_file_parses_and_generates() {
        for (name, src) in CORPUS {
            let file = crate::parser::parse(src).unwrap_or_else(|e| panic!("{name}: {e}"));
            crate::vcgen::generate(&file).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}
