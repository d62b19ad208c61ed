//! Plaintext screenplay parsing.
//!
//! Scripts follow a line-oriented convention close to Fountain. Each line is
//! classified after trailing whitespace is removed:
//!
//! 1. a line starting with `INT.`, `EXT.` or `INT/EXT` (any case) is a scene heading;
//! 2. a line made only of uppercase letters, spaces, periods and parentheses,
//!    at most 40 characters long and followed by a non-blank line, is a
//!    character cue; the non-blank lines after it, up to the next blank line,
//!    form one dialogue element;
//! 3. any other non-blank line is action.
//!
//! Blank lines terminate elements, so consecutive action lines form one
//! action element.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const MAX_CUE_LEN: usize = 40;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("document contains no tokens")]
    EmptyDocument,
    #[error("document is not valid UTF-8 (first bad byte at offset {0})")]
    MalformedEncoding(usize),
    #[error("screenplay has no dialogue")]
    NoDialogue,
    #[error("k must be at least 1")]
    InvalidK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementKind {
    SceneHeading,
    Action,
    Dialogue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenplayElement {
    pub kind: ElementKind,
    /// Canonical speaker name, set only for dialogue.
    pub character: Option<String>,
    pub text: String,
    pub ordinal: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub element: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Screenplay {
    pub id: String,
    pub title: String,
    pub elements: Vec<ScreenplayElement>,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub element: usize,
    /// Index of the utterance's first token in the document token stream.
    pub start_token: usize,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterProfile {
    pub name: String,
    pub utterances: Vec<Utterance>,
    pub total_tokens: usize,
}

impl CharacterProfile {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.utterances.iter().flat_map(|u| u.tokens.iter().map(String::as_str))
    }
}

/// Lowercases `text` and splits it on every maximal run of non-alphanumeric
/// characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|s| !s.is_empty()).map(str::to_lowercase).collect()
}

fn is_scene_heading(line: &str) -> bool {
    let head: String = line.chars().take(7).collect::<String>().to_uppercase();
    head.starts_with("INT.") || head.starts_with("EXT.") || head.starts_with("INT/EXT")
}

fn looks_like_cue(line: &str) -> bool {
    line.chars().count() <= MAX_CUE_LEN
        && line.chars().any(char::is_uppercase)
        && line.chars().all(|c| c.is_uppercase() || matches!(c, ' ' | '.' | '(' | ')'))
}

/// Uppercases a cue and strips trailing parentheticals such as `(V.O.)`.
pub fn canonical_character(cue: &str) -> String {
    let mut name = cue.trim().to_uppercase();
    while name.ends_with(')') {
        match name.rfind('(') {
            Some(open) => name = name[..open].trim_end().to_string(),
            None => break,
        }
    }
    name
}

/// Parses raw bytes, rejecting input that is not UTF-8.
pub fn parse_screenplay_bytes(raw: &[u8], id: &str) -> Result<Screenplay, ParseError> {
    let text = std::str::from_utf8(raw).map_err(|e| ParseError::MalformedEncoding(e.valid_up_to()))?;
    parse_screenplay(text, id)
}

pub fn parse_screenplay(raw: &str, id: &str) -> Result<Screenplay, ParseError> {
    let lines: Vec<&str> = raw.lines().map(|l| l.trim_end()).collect();
    let mut elements: Vec<ScreenplayElement> = Vec::new();
    let mut action: Vec<&str> = Vec::new();

    fn push(elements: &mut Vec<ScreenplayElement>, kind: ElementKind, character: Option<String>, text: String) {
        let ordinal = elements.len();
        elements.push(ScreenplayElement { kind, character, text, ordinal });
    }
    fn flush_action(elements: &mut Vec<ScreenplayElement>, action: &mut Vec<&str>) {
        if !action.is_empty() {
            push(elements, ElementKind::Action, None, action.join(" "));
            action.clear();
        }
    }

    let mut i = 0;
    while i < lines.len() {
        let line = lines[i].trim_start();
        if line.is_empty() {
            flush_action(&mut elements, &mut action);
            i += 1;
            continue;
        }
        if is_scene_heading(line) {
            flush_action(&mut elements, &mut action);
            push(&mut elements, ElementKind::SceneHeading, None, line.to_string());
            i += 1;
            continue;
        }
        let next_non_blank = lines.get(i + 1).is_some_and(|l| !l.trim().is_empty());
        let name = canonical_character(line);
        if next_non_blank && looks_like_cue(line) && !name.is_empty() {
            flush_action(&mut elements, &mut action);
            let mut speech = Vec::new();
            i += 1;
            while i < lines.len() && !lines[i].trim().is_empty() {
                speech.push(lines[i].trim());
                i += 1;
            }
            push(&mut elements, ElementKind::Dialogue, Some(name), speech.join(" "));
            continue;
        }
        action.push(line);
        i += 1;
    }
    flush_action(&mut elements, &mut action);

    let tokens: Vec<Token> = elements
        .iter()
        .flat_map(|e| tokenize(&e.text).into_iter().map(move |text| Token { text, element: e.ordinal }))
        .collect();
    if tokens.is_empty() {
        return Err(ParseError::EmptyDocument);
    }
    Ok(Screenplay { id: id.to_string(), title: id.to_string(), elements, tokens })
}

impl Screenplay {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Offset of each element's first token in the token stream.
    pub fn element_offsets(&self) -> Vec<usize> {
        let mut offsets = vec![0; self.elements.len() + 1];
        for t in &self.tokens {
            offsets[t.element + 1] += 1;
        }
        for i in 1..offsets.len() {
            offsets[i] += offsets[i - 1];
        }
        offsets.truncate(self.elements.len());
        offsets
    }

    pub fn dialogue_count(&self) -> usize {
        self.elements.iter().filter(|e| e.kind == ElementKind::Dialogue).count()
    }

    /// Every speaking character, in name order.
    pub fn character_profiles(&self) -> Vec<CharacterProfile> {
        let offsets = self.element_offsets();
        let mut by_name: BTreeMap<&str, CharacterProfile> = BTreeMap::new();
        for e in &self.elements {
            let Some(name) = e.character.as_deref() else { continue };
            let start = offsets[e.ordinal];
            let tokens: Vec<String> =
                self.tokens[start..].iter().take_while(|t| t.element == e.ordinal).map(|t| t.text.clone()).collect();
            let profile = by_name.entry(name).or_insert_with(|| CharacterProfile {
                name: name.to_string(),
                utterances: Vec::new(),
                total_tokens: 0,
            });
            profile.total_tokens += tokens.len();
            profile.utterances.push(Utterance { element: e.ordinal, start_token: start, tokens });
        }
        by_name.into_values().collect()
    }
}

/// The `k` characters with the most dialogue tokens; ties go to the
/// lexicographically smaller name.
pub fn top_speaking_characters(s: &Screenplay, k: usize) -> Result<Vec<CharacterProfile>, ParseError> {
    if k == 0 {
        return Err(ParseError::InvalidK);
    }
    if s.dialogue_count() == 0 {
        return Err(ParseError::NoDialogue);
    }
    let mut profiles = s.character_profiles();
    profiles.sort_by(|a, b| b.total_tokens.cmp(&a.total_tokens).then_with(|| a.name.cmp(&b.name)));
    profiles.truncate(k);
    Ok(profiles)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn heading_and_dialogue() {
        let s = parse_screenplay("INT. HOUSE - DAY\nJOHN\nHello there.\n", "x").unwrap();
        assert_eq!(s.elements.len(), 2);
        assert_eq!(s.elements[0].kind, ElementKind::SceneHeading);
        assert_eq!(s.elements[0].text, "INT. HOUSE - DAY");
        assert_eq!(s.elements[1].kind, ElementKind::Dialogue);
        assert_eq!(s.elements[1].character.as_deref(), Some("JOHN"));
        assert_eq!(s.elements[1].text, "Hello there.");
        assert_eq!(words(&s.tokens), ["int", "house", "day", "hello", "there"]);
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_screenplay("", "x"), Err(ParseError::EmptyDocument));
        assert_eq!(parse_screenplay("\n  \n...\n", "x"), Err(ParseError::EmptyDocument));
    }

    #[test]
    fn single_action_line() {
        let s = parse_screenplay("He walks away.\n", "x").unwrap();
        assert_eq!(s.elements.len(), 1);
        assert_eq!(s.elements[0].kind, ElementKind::Action);
        assert_eq!(words(&s.tokens), ["he", "walks", "away"]);
    }

    #[test]
    fn invalid_utf8() {
        assert_eq!(parse_screenplay_bytes(b"ok \xff\xfe", "x"), Err(ParseError::MalformedEncoding(3)));
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(tokenize("Hello, there!"), ["hello", "there"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("don't stop"), ["don", "t", "stop"]);
    }

    #[test]
    fn cue_rules() {
        // Uppercase line followed by a blank line is action.
        let s = parse_screenplay("BOOM.\n\nJOHN (V.O.)\nWho's there?\n(beat)\nHello?\n", "x").unwrap();
        assert_eq!(s.elements[0].kind, ElementKind::Action);
        assert_eq!(s.elements[1].character.as_deref(), Some("JOHN"));
        assert_eq!(s.elements[1].text, "Who's there? (beat) Hello?");
        // Colon is not allowed in a cue.
        let s = parse_screenplay("CUT TO:\nThe street.\n", "x").unwrap();
        assert_eq!(s.elements.len(), 1);
        assert_eq!(s.elements[0].kind, ElementKind::Action);
        // Too long for a cue.
        let long = "A".repeat(41);
        let s = parse_screenplay(&format!("{long}\nsomething\n"), "x").unwrap();
        assert_eq!(s.elements[0].kind, ElementKind::Action);
    }

    #[test]
    fn action_lines_merge_until_blank() {
        let s = parse_screenplay("ext. road - night\nA car.\nIt stops.\n\nRain.\n", "x").unwrap();
        let kinds: Vec<_> = s.elements.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, [ElementKind::SceneHeading, ElementKind::Action, ElementKind::Action]);
        assert_eq!(s.elements[1].text, "A car. It stops.");
    }

    #[test]
    fn canonical_names() {
        assert_eq!(canonical_character("JOHN (V.O.)"), "JOHN");
        assert_eq!(canonical_character("MARY (O.S.) (CONT.)"), "MARY");
        assert_eq!(canonical_character("(BEAT)"), "");
    }

    fn two_speakers(john: usize, mary: usize) -> Screenplay {
        let line = |n: usize| vec!["word"; n].join(" ");
        let raw = format!("JOHN\n{}\n\nMARY\n{}\n", line(john), line(mary));
        parse_screenplay(&raw, "x").unwrap()
    }

    #[test]
    fn top_speakers_by_count() {
        let top = top_speaking_characters(&two_speakers(10, 20), 2).unwrap();
        let names: Vec<_> = top.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["MARY", "JOHN"]);
        assert_eq!(top[0].total_tokens, 20);
    }

    #[test]
    fn top_speakers_tie_break() {
        let top = top_speaking_characters(&two_speakers(10, 10), 2).unwrap();
        let names: Vec<_> = top.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["JOHN", "MARY"]);
    }

    #[test]
    fn top_speakers_without_dialogue() {
        let s = parse_screenplay("INT. ROOM - DAY\n\nNothing happens.\n", "x").unwrap();
        assert_eq!(top_speaking_characters(&s, 2), Err(ParseError::NoDialogue));
    }

    #[test]
    fn utterance_offsets() {
        let s = parse_screenplay("INT. A - DAY\n\nJOHN\nHi you.\n\nMARY\nHey.\n\nJOHN\nBye.\n", "x").unwrap();
        let john = top_speaking_characters(&s, 1).unwrap().remove(0);
        assert_eq!(john.name, "JOHN");
        assert_eq!(john.utterances.len(), 2);
        assert_eq!(john.utterances[0].start_token, 3);
        assert_eq!(john.utterances[1].start_token, 6);
        assert_eq!(john.total_tokens, 3);
    }
}
