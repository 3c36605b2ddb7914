//! Prompt templates for the agent stages.
//!
//! Templates are plain text files with `{task}`, `{graph}`, `{scene}`, and
//! `{table}` placeholders. A versioned default set ships inside the binary;
//! a directory of same-named `.txt` files can replace it.

use std::path::Path;

use crate::agent::AgentError;

macro_rules! template_fields {
    ($($field:ident),+ $(,)?) => {
        /// One template per (stage, scene-input) combination.
        #[derive(Debug, Clone)]
        pub struct PromptSet {
            $(pub $field: String),+
        }

        impl PromptSet {
            /// The in-repo default templates.
            pub fn bundled() -> PromptSet {
                PromptSet {
                    $($field: include_str!(concat!(
                        "../../resources/prompts/",
                        stringify!($field),
                        ".txt"
                    ))
                    .to_string()),+
                }
            }

            /// Loads `<name>.txt` for every template from one directory.
            pub fn from_dir(dir: &Path) -> Result<PromptSet, AgentError> {
                Ok(PromptSet {
                    $($field: read_template(dir, stringify!($field))?),+
                })
            }
        }
    };
}

template_fields!(
    skm_system,
    skm_user_image,
    skm_user_table,
    gkm_system,
    gkm_user_image,
    gkm_user_table,
    planner_system,
    planner_user,
    single_system,
    single_user_image,
    single_user_table,
);

fn read_template(dir: &Path, name: &str) -> Result<String, AgentError> {
    let path = dir.join(format!("{name}.txt"));
    std::fs::read_to_string(&path)
        .map_err(|e| AgentError::InvalidInput(format!("prompt template {}: {e}", path.display())))
}

/// Substitutes `{key}` placeholders; unknown placeholders are left intact.
pub fn render(template: &str, substitutions: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in substitutions {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}
