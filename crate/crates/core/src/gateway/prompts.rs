//! Versioned prompt templates with named `{placeholder}` substitution, plus
//! the grid-to-text serialization used inside prompts (rows of digits,
//! `Input:`/`Output:` labels).

use crate::grid::{Grid, GridPair};
use std::io;
use std::path::Path;

/// The three templates the engine renders. Bundled copies ship in the repo's
/// `prompts/` directory; an alternate directory can be loaded at run time.
#[derive(Debug, Clone)]
pub struct PromptSet {
    pub program_gen: String,
    pub describe: String,
    pub goal_hypothesis: String,
}

impl PromptSet {
    /// The templates compiled into the binary (the repo's `prompts/` files).
    pub fn bundled() -> Self {
        PromptSet {
            program_gen: include_str!("../../../../prompts/program_gen.txt").to_string(),
            describe: include_str!("../../../../prompts/describe.txt").to_string(),
            goal_hypothesis: include_str!("../../../../prompts/goal_hypothesis.txt").to_string(),
        }
    }

    /// Load `program_gen.txt`, `describe.txt`, `goal_hypothesis.txt` from a
    /// directory.
    pub fn load_dir(dir: &Path) -> io::Result<Self> {
        Ok(PromptSet {
            program_gen: std::fs::read_to_string(dir.join("program_gen.txt"))?,
            describe: std::fs::read_to_string(dir.join("describe.txt"))?,
            goal_hypothesis: std::fs::read_to_string(dir.join("goal_hypothesis.txt"))?,
        })
    }
}

/// Substitute `{name}` placeholders. Unknown placeholders are left verbatim;
/// braces not wrapping an identifier pass through.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let bytes = template.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(end) = template[i + 1..].find('}') {
                let name = &template[i + 1..i + 1 + end];
                let is_ident = !name.is_empty()
                    && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_');
                if is_ident {
                    if let Some((_, value)) = vars.iter().find(|(k, _)| *k == name) {
                        out.push_str(value);
                        i += end + 2;
                        continue;
                    }
                }
            }
        }
        let ch = template[i..].chars().next().unwrap();
        out.push(ch);
        i += ch.len_utf8();
    }
    out
}

/// One grid as labeled digit rows.
pub fn format_grid(label: &str, grid: &Grid) -> String {
    format!("{label}:\n{}\n", grid.to_digit_lines())
}

/// Numbered input/output examples.
pub fn format_demo_pairs(pairs: &[GridPair]) -> String {
    let mut out = String::new();
    for (i, (input, output)) in pairs.iter().enumerate() {
        out.push_str(&format!("Example {}\n", i + 1));
        out.push_str(&format_grid("Input", input));
        out.push_str(&format_grid("Output", output));
    }
    out
}

/// Numbered grids (inputs only, or realized outputs).
pub fn format_grids(label: &str, grids: &[Grid]) -> String {
    let mut out = String::new();
    for (i, g) in grids.iter().enumerate() {
        out.push_str(&format_grid(&format!("{label} {}", i + 1), g));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_substitutes_and_preserves_unknowns() {
        let got = render("a {x} b {missing} c {x}", &[("x", "1")]);
        assert_eq!(got, "a 1 b {missing} c 1");
    }

    #[test]
    fn render_ignores_non_identifier_braces() {
        assert_eq!(render("set {a b} {}", &[("a", "1")]), "set {a b} {}");
    }

    #[test]
    fn bundled_templates_have_placeholders() {
        let set = PromptSet::bundled();
        for key in ["{dsl_docs}", "{parent1}", "{score1}", "{demo_inputs}", "{feedback}", "{candidates}"] {
            assert!(set.program_gen.contains(key), "program_gen missing {key}");
        }
        assert!(set.describe.contains("{program}"));
        assert!(set.goal_hypothesis.contains("{task_demos}"));
    }

    #[test]
    fn grid_formatting() {
        let g = Grid::from_rows(&[vec![1, 2], vec![3, 4]]).unwrap();
        assert_eq!(format_grid("Input", &g), "Input:\n12\n34\n");
    }
}
