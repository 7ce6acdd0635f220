//! Markdown emphasis rendered with Unicode mathematical alphanumerics, so
//! that plain-text clients still show bold, italic and monospace runs.
//! Fenced code blocks pass through verbatim, fences removed.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Style {
    Bold,
    Italic,
    BoldItalic,
    Mono,
}

fn map_char(c: char, style: Style) -> char {
    let (upper, lower, digit) = match style {
        Style::Bold => (0x1D400, 0x1D41A, Some(0x1D7CE)),
        Style::Italic => (0x1D434, 0x1D44E, None),
        Style::BoldItalic => (0x1D468, 0x1D482, Some(0x1D7CE)),
        Style::Mono => (0x1D670, 0x1D68A, Some(0x1D7F6)),
    };
    if style == Style::Italic && c == 'h' {
        return '\u{210E}';
    }
    let code = match c {
        'A'..='Z' => upper + (c as u32 - 'A' as u32),
        'a'..='z' => lower + (c as u32 - 'a' as u32),
        '0'..='9' => match digit {
            Some(d) => d + (c as u32 - '0' as u32),
            None => return c,
        },
        _ => return c,
    };
    char::from_u32(code).unwrap_or(c)
}

fn styled(text: &str, style: Style) -> String {
    text.chars().map(|c| map_char(c, style)).collect()
}

fn find_closing(chars: &[char], from: usize, marker: &[char]) -> Option<usize> {
    let n = marker.len();
    (from..chars.len().saturating_sub(n - 1))
        .find(|&i| chars[i..i + n] == *marker && i > from && !chars[i - 1].is_whitespace())
}

fn inline(line: &str) -> String {
    let chars: Vec<char> = line.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '`' {
            if let Some(end) = chars[i + 1..].iter().position(|&d| d == '`') {
                let inner: String = chars[i + 1..i + 1 + end].iter().collect();
                out.push_str(&styled(&inner, Style::Mono));
                i += end + 2;
                continue;
            }
        }
        let markers: [(&[char], Style); 5] = [
            (&['*', '*', '*'], Style::BoldItalic),
            (&['*', '*'], Style::Bold),
            (&['_', '_'], Style::Bold),
            (&['*'], Style::Italic),
            (&['_'], Style::Italic),
        ];
        let mut matched = false;
        for (marker, style) in markers {
            let n = marker.len();
            let opens = chars[i..].starts_with(marker)
                && chars.get(i + n).is_some_and(|c| !c.is_whitespace())
                && (marker[0] != '_' || i == 0 || !chars[i - 1].is_alphanumeric());
            if !opens {
                continue;
            }
            if let Some(end) = find_closing(&chars, i + n, marker) {
                let inner: String = chars[i + n..end].iter().collect();
                out.push_str(&styled(&inline(&inner), style));
                i = end + n;
                matched = true;
                break;
            }
        }
        if !matched {
            out.push(c);
            i += 1;
        }
    }
    out
}

/// Converts Markdown emphasis, headings and inline code to Unicode.
pub fn markdown_to_unicode(text: &str) -> String {
    let mut out = Vec::new();
    let mut fenced = false;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            fenced = !fenced;
            continue;
        }
        if fenced {
            out.push(line.to_owned());
            continue;
        }
        let trimmed = line.trim_start();
        let hashes = trimmed.chars().take_while(|&c| c == '#').count();
        if hashes > 0 && trimmed[hashes..].starts_with(' ') {
            out.push(styled(&inline(trimmed[hashes..].trim()), Style::Bold));
        } else {
            out.push(inline(line));
        }
    }
    out.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emphasis() {
        assert_eq!(markdown_to_unicode("**Ab1**"), "𝐀𝐛𝟏");
        assert_eq!(markdown_to_unicode("*hi*"), "ℎ𝑖");
        assert_eq!(markdown_to_unicode("a `x1` b"), "a 𝚡𝟷 b");
        assert_eq!(markdown_to_unicode("***A***"), "𝑨");
    }

    #[test]
    fn leaves_plain_text_and_code_blocks() {
        assert_eq!(markdown_to_unicode("2 * 3 * 4"), "2 * 3 * 4");
        assert_eq!(markdown_to_unicode("snake_case_name"), "snake_case_name");
        let src = "Query:\n```sql\nSELECT *\nFROM t\n```\nDone.";
        assert_eq!(markdown_to_unicode(src), "Query:\nSELECT *\nFROM t\nDone.");
    }

    #[test]
    fn headings_become_bold() {
        assert_eq!(markdown_to_unicode("## Go"), "𝐆𝐨");
    }
}
