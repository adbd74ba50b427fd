//! Minimal HTML to visible-text conversion.

const SKIPPED: &[&str] = &["script", "style", "noscript", "template", "svg", "head"];

const BLOCKS: &[&str] = &[
    "address", "article", "aside", "blockquote", "br", "dd", "div", "dl", "dt", "fieldset", "figcaption", "figure",
    "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "li", "main", "nav", "ol", "p", "pre",
    "section", "table", "td", "th", "title", "tr", "ul",
];

fn tag_name(tag: &str) -> String {
    tag.trim_start_matches('/')
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

fn decode_entity(rest: &str) -> Option<(char, usize)> {
    let end = rest.bytes().take(12).position(|b| b == b';')?;
    let body = &rest[1..end];
    let c = if let Some(num) = body.strip_prefix('#') {
        let code = match num.strip_prefix(['x', 'X']) {
            Some(hex) => u32::from_str_radix(hex, 16).ok()?,
            None => num.parse().ok()?,
        };
        char::from_u32(code)?
    } else {
        match body {
            "amp" => '&',
            "lt" => '<',
            "gt" => '>',
            "quot" => '"',
            "apos" => '\'',
            "nbsp" => ' ',
            "ndash" => '\u{2013}',
            "mdash" => '\u{2014}',
            "lsquo" => '\u{2018}',
            "rsquo" => '\u{2019}',
            "ldquo" => '\u{201c}',
            "rdquo" => '\u{201d}',
            "hellip" => '\u{2026}',
            "copy" => '\u{a9}',
            _ => return None,
        }
    };
    Some((c, end + 1))
}

/// Collapses horizontal whitespace runs to one space, trims each line and
/// drops empty lines.
pub fn collapse_whitespace(text: &str) -> String {
    text.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Drops scripts, styles, comments and tags; block elements become line
/// breaks; character references are decoded.
pub fn strip_html(html: &str) -> String {
    let mut out = String::with_capacity(html.len());
    let mut i = 0;
    let lower = html.to_ascii_lowercase();

    while i < html.len() {
        let rest = &html[i..];
        if rest.starts_with("<!--") {
            i += rest.find("-->").map_or(rest.len(), |e| e + 3);
            continue;
        }
        let opens_tag = rest.starts_with('<')
            && rest[1..]
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '/' || c == '!' || c == '?');
        if opens_tag {
            let Some(close) = rest.find('>') else {
                out.push_str(rest);
                break;
            };
            let inner = &rest[1..close];
            let name = tag_name(inner);
            i += close + 1;
            if !inner.starts_with('/') && !inner.ends_with('/') && SKIPPED.contains(&name.as_str()) {
                let closing = format!("</{name}");
                i = lower[i..].find(&closing).map_or(html.len(), |p| {
                    let after = i + p;
                    after + html[after..].find('>').map_or(html.len() - after, |e| e + 1)
                });
                continue;
            }
            if BLOCKS.contains(&name.as_str()) {
                out.push('\n');
            } else {
                out.push(' ');
            }
            continue;
        }
        if rest.starts_with('&') {
            if let Some((c, used)) = decode_entity(rest) {
                out.push(c);
                i += used;
                continue;
            }
        }
        let c = rest.chars().next().expect("non-empty rest");
        out.push(c);
        i += c.len_utf8();
    }
    collapse_inline_gaps(&collapse_whitespace(&out))
}

// Inline tags become spaces, which can leave "word ," gaps; tidy the common case.
fn collapse_inline_gaps(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == ' ' && chars.peek().is_some_and(|n| matches!(n, ',' | '.' | ';' | ':' | '!' | '?')) {
            continue;
        }
        out.push(c);
    }
    out
}

/// Heuristic check used when a fetcher gets no content type.
pub fn looks_like_html(body: &str) -> bool {
    let head: String = body.trim_start().chars().take(512).collect::<String>().to_ascii_lowercase();
    head.starts_with("<!doctype html") || head.contains("<html") || head.contains("<body") || head.contains("<p")
}
