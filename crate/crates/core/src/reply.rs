//! Reply grammars shared by the generation and annotation stages.

use crate::gateway::{bindings, ChatRequest, Gateway, GatewayError};
use crate::prompts::ids;

/// Reads a YES/NO verdict from the first token of the first non-empty line.
pub fn parse_yes_no(reply: &str) -> Option<bool> {
    let line = reply.lines().map(str::trim).find(|l| !l.is_empty())?;
    let token: String = line
        .split_whitespace()
        .next()?
        .chars()
        .filter(|c| c.is_ascii_alphabetic())
        .collect();
    match token.to_ascii_lowercase().as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

/// Sends `request`; if the reply does not parse, asks once more with a
/// format reminder. `Ok(None)` means both replies failed to parse.
pub(crate) fn complete_parsed<T>(
    gateway: &Gateway,
    request: &ChatRequest,
    expected: &str,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Option<T>, GatewayError> {
    let first = gateway.complete(request)?;
    if let Some(value) = parse(&first) {
        return Ok(Some(value));
    }
    let correction = gateway.render_prompt(ids::REASK, &bindings([("expected", expected)]))?;
    let second = gateway.complete(&request.followed_by(&first, &correction))?;
    Ok(parse(&second))
}

pub(crate) const YES_NO_FORMAT: &str = "Answer with a single word on the first line: YES or NO.";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yes_no_grammar() {
        assert_eq!(parse_yes_no("YES"), Some(true));
        assert_eq!(parse_yes_no("  no.\nbecause"), Some(false));
        assert_eq!(parse_yes_no("\n\nYes, it does"), Some(true));
        assert_eq!(parse_yes_no("**NO**"), Some(false));
        assert_eq!(parse_yes_no("maybe"), None);
        assert_eq!(parse_yes_no(""), None);
        assert_eq!(parse_yes_no("The answer is yes"), None);
    }
}
