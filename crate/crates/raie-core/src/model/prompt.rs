//! The natural-language prompt surface for history-conditioned
//! recommendation, plus its inverse parser. The desk backbone never
//! consumes these strings; they exist so exported examples stay
//! compatible with text-prompted backbones.

use crate::error::ModelError;

const PREFIX: &str = "Here is the purchase history of user_";
const MID: &str = ": item ";
const SUFFIX: &str = ". I wonder what is the next recommended item for the user. Answer:";

/// Fills the template with a user id and a comma-joined item history.
pub fn build_prompt(user_id: &str, history: &[String]) -> Result<String, ModelError> {
    if history.is_empty() {
        return Err(ModelError::EmptyHistory);
    }
    Ok(format!(
        "{PREFIX}{user_id}{MID}{}{SUFFIX}",
        history.join(", ")
    ))
}

/// Recovers (user id, history) from a prompt. Exact inverse of
/// [`build_prompt`] as long as the user id does not contain `": item "`
/// and no item id contains `", "`.
pub fn parse_prompt(text: &str) -> Result<(String, Vec<String>), ModelError> {
    let rest = text.strip_prefix(PREFIX).ok_or(ModelError::PromptMismatch)?;
    let rest = rest.strip_suffix(SUFFIX).ok_or(ModelError::PromptMismatch)?;
    let mid = rest.find(MID).ok_or(ModelError::PromptMismatch)?;
    let user_id = &rest[..mid];
    let history_str = &rest[mid + MID.len()..];
    if history_str.is_empty() {
        return Err(ModelError::PromptMismatch);
    }
    let history: Vec<String> = history_str.split(", ").map(str::to_string).collect();
    if history.iter().any(String::is_empty) {
        return Err(ModelError::PromptMismatch);
    }
    Ok((user_id.to_string(), history))
}
