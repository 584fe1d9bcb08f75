//! Tolerant XHTML-to-text flattening.
//!
//! This is a small state machine, not a validating parser: unclosed tags,
//! stray `<` and unknown entities are all accepted.

/// Elements whose closing tag (or, for `br`, the tag itself) ends a line.
const BLOCK_ELEMENTS: [&str; 12] =
    ["p", "div", "h1", "h2", "h3", "h4", "h5", "h6", "li", "tr", "br", "section"];

/// Elements whose whole content is dropped.
const OPAQUE_ELEMENTS: [&str; 3] = ["script", "style", "head"];

/// UTF-8 decode with U+FFFD replacement and BOM removal.
pub fn decode_lossy(bytes: &[u8]) -> String {
    let text = String::from_utf8_lossy(bytes);
    match text.strip_prefix('\u{FEFF}') {
        Some(rest) => rest.to_string(),
        None => text.into_owned(),
    }
}

struct Output(String);

impl Output {
    // A decoded or literal '<' must never start something tag-shaped.
    fn push(&mut self, c: char) {
        if self.0.ends_with('<') && (c.is_ascii_alphabetic() || c == '/' || c == '!') {
            self.0.push(' ');
        }
        self.0.push(c);
    }

    fn push_str(&mut self, s: &str) {
        s.chars().for_each(|c| self.push(c));
    }
}

/// Strips markup from an XHTML document, keeping text content.
pub fn flatten_xhtml(doc: &str) -> String {
    let bytes = doc.as_bytes();
    let mut out = Output(String::with_capacity(doc.len() / 2));
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'<' => i = markup(doc, i, &mut out),
            b'&' => {
                let (decoded, next) = entity(doc, i);
                match decoded {
                    Some(c) => out.push(c),
                    None => out.push('&'),
                }
                i = next;
            }
            _ => {
                let end = doc[i..].find(['<', '&']).map_or(doc.len(), |off| i + off);
                out.push_str(&doc[i..end]);
                i = end;
            }
        }
    }
    out.0
}

/// Handles markup starting at `start` (which holds '<'); returns the index to resume at.
fn markup(doc: &str, start: usize, out: &mut Output) -> usize {
    let rest = &doc[start..];
    let next = rest.as_bytes().get(1).copied();
    match next {
        Some(b'!') => {
            if rest.starts_with("<!--") {
                return skip_past(doc, start + 4, "-->");
            }
            if let Some(body) = rest.strip_prefix("<![CDATA[") {
                let end = body.find("]]>").unwrap_or(body.len());
                out.push_str(&body[..end]);
                return (start + 9 + end + 3).min(doc.len());
            }
            skip_past(doc, start + 2, ">")
        }
        Some(b'?') if rest.contains("?>") => skip_past(doc, start + 2, "?>"),
        Some(c) if c.is_ascii_alphabetic() || c == b'/' => tag(doc, start, out),
        _ => {
            out.push('<');
            start + 1
        }
    }
}

fn tag(doc: &str, start: usize, out: &mut Output) -> usize {
    let bytes = doc.as_bytes();
    let mut i = start + 1;
    let closing = bytes[i] == b'/';
    if closing {
        i += 1;
    }
    let name_start = i;
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b':' | b'-' | b'_')) {
        i += 1;
    }
    let qualified = doc[name_start..i].to_ascii_lowercase();
    let name = qualified.rsplit(':').next().unwrap_or("").to_string();

    // Scan to the closing '>' outside quoted attribute values.
    let mut quote: Option<u8> = None;
    let mut self_closing = false;
    let mut end = None;
    while i < bytes.len() {
        let b = bytes[i];
        match quote {
            Some(q) if b == q => quote = None,
            Some(_) => {}
            None => match b {
                b'"' | b'\'' => quote = Some(b),
                b'>' => {
                    self_closing = i > start && bytes[i - 1] == b'/';
                    end = Some(i + 1);
                    break;
                }
                _ => {}
            },
        }
        i += 1;
    }
    let Some(after) = end else {
        // Unterminated tag: drop the remainder.
        return doc.len();
    };

    if !closing && !self_closing && OPAQUE_ELEMENTS.contains(&name.as_str()) {
        return skip_to_close(doc, after, &qualified);
    }
    if BLOCK_ELEMENTS.contains(&name.as_str()) {
        if name == "br" {
            if !closing {
                out.push('\n');
            }
        } else if closing || self_closing {
            out.push('\n');
        }
    }
    after
}

/// Skips to just past `</name ...>`, case-insensitively; end of input if absent.
fn skip_to_close(doc: &str, from: usize, name: &str) -> usize {
    let needle = format!("</{name}");
    let haystack = doc[from..].to_ascii_lowercase();
    match haystack.find(&needle) {
        Some(off) => skip_past(doc, from + off + needle.len(), ">"),
        None => doc.len(),
    }
}

fn skip_past(doc: &str, from: usize, needle: &str) -> usize {
    match doc.get(from..).and_then(|s| s.find(needle)) {
        Some(off) => from + off + needle.len(),
        None => doc.len(),
    }
}

/// Decodes the entity at `start` ('&'). Returns the character (if recognised)
/// and the index to resume at; unrecognised entities resume right after '&'.
fn entity(doc: &str, start: usize) -> (Option<char>, usize) {
    let rest = &doc[start + 1..];
    let Some(semi) = rest.bytes().take(32).position(|b| b == b';') else {
        return (None, start + 1);
    };
    let name = &rest[..semi];
    let decoded = match name {
        "amp" => Some('&'),
        "lt" => Some('<'),
        "gt" => Some('>'),
        "quot" => Some('"'),
        "apos" => Some('\''),
        "nbsp" => Some('\u{00A0}'),
        _ => numeric_entity(name),
    };
    match decoded {
        Some(c) => (Some(c), start + 1 + semi + 1),
        None => (None, start + 1),
    }
}

fn numeric_entity(name: &str) -> Option<char> {
    let digits = name.strip_prefix('#')?;
    let code = match digits.strip_prefix(['x', 'X']) {
        Some(hex) => u32::from_str_radix(hex, 16).ok()?,
        None => digits.parse::<u32>().ok()?,
    };
    char::from_u32(code)
}
