//! Browser bindings: a noisy-copy slider, a GL prover and a report runner.

use wasm_bindgen::prelude::*;

use dtlab::problems::{builtin_named, noisy_copy_pd, parse_problem};
use dtlab::provability::{enumerate_proofs, is_provable, modal_depth, parse_definitions, parse_formula, ProofSearch};
use dtlab::report::{evaluate_matrix, render_report, Format};
use dtlab::theories::{prescribe, Settings, TheoryId};
use dtlab::Rational;

fn fail(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Markdown table of every theory on a noisy copy PD where the copy
/// matches with probability `percent / 100`.
#[wasm_bindgen]
pub fn noisy_copy(percent: u32) -> Result<String, JsError> {
    if percent > 100 {
        return Err(fail("percent must be between 0 and 100"));
    }
    let p = noisy_copy_pd(Rational::new(percent.into(), 100));
    let mut out = String::from("| theory | chosen | EU(Cooperate) | EU(Defect) |\n|---|---|---|---|\n");
    for t in [TheoryId::Edt, TheoryId::Cdt, TheoryId::UCdt, TheoryId::GUdt] {
        let r = prescribe(&p, t, &Settings::default()).map_err(fail)?;
        let eu = |a: &str| {
            r.scores
                .iter()
                .find(|s| s.alternative == a)
                .and_then(|s| s.value.as_ref())
                .map(ToString::to_string)
                .unwrap_or_default()
        };
        out.push_str(&format!("| {} | {} | {} | {} |\n", t.name(), r.chosen, eu("Cooperate"), eu("Defect")));
    }
    Ok(out)
}

/// GL verdict for `formula` under `definitions` (one `atom := formula`
/// per line), plus a Hilbert proof when one turns up within `rounds`.
#[wasm_bindgen]
pub fn prove(definitions: &str, formula: &str, rounds: usize) -> Result<String, JsError> {
    let system = parse_definitions(definitions).map_err(fail)?;
    let f = parse_formula(formula).map_err(fail)?;
    let depth = modal_depth(&f, &system).map_err(fail)?;
    let verdict = is_provable(&f, &system).map_err(fail)?;
    let mut out = format!("formula: {f}\ndepth: {depth}\nprovable: {verdict}\n");
    if rounds > 0 {
        match enumerate_proofs(&f, &system, rounds) {
            Ok(ProofSearch::Found(proof)) => out.push_str(&format!("proof:\n{proof}")),
            Ok(ProofSearch::NotFound { .. }) => out.push_str("proof: none in the search space\n"),
            Err(e) => out.push_str(&format!("proof search skipped: {e}\n")),
        }
    }
    Ok(out)
}

/// Evaluate every theory on a builtin name or `.dtp` source text and render
/// the report as `json`, `csv` or `md`.
#[wasm_bindgen]
pub fn run_report(problem: &str, format: &str) -> Result<String, JsError> {
    let format: Format = format.parse().map_err(fail)?;
    let p = if problem.trim_start().starts_with("version") {
        parse_problem(problem).map_err(fail)?
    } else {
        builtin_named(problem.trim()).map_err(fail)?
    };
    let report = evaluate_matrix(&[p], &TheoryId::ALL, &Settings::default());
    let bytes = render_report(&report, format).map_err(fail)?;
    String::from_utf8(bytes).map_err(fail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slider_endpoints() {
        let t = noisy_copy(80).unwrap();
        assert!(t.contains("| G-UDT | Cooperate | 8/5 | 7/5 |"));
        assert!(t.contains("| CDT | Defect |"));
        let t = noisy_copy(50).unwrap();
        assert!(t.contains("| G-UDT | Defect | 1 | 2 |"));
    }

    #[test]
    fn report_accepts_names_and_source() {
        let md = run_report("retro-blackmail", "md").unwrap();
        assert!(md.contains("| retro-blackmail | P-UDT | Refuse |"));
        let src = dtlab::problems::round_trip(&dtlab::problems::builtin(dtlab::problems::BuiltinId::CopyPd));
        assert!(run_report(&src, "csv").unwrap().contains("copy-pd,CDT,Defect,2,,"));
    }

    #[test]
    fn prover_text() {
        let out = prove("g := ![]g", "g -> ![]false", 0).unwrap();
        assert!(out.contains("provable: true"));
    }
}
