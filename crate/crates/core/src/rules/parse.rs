use thiserror::Error;

use super::{FrameTypeSel, Match, MatchKind, Rule, RssDirection, RuleChain, Verdict};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("column {column}: {message}")]
pub struct ParseError {
    /// 1-based character column of the offending token.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {source}")]
pub struct RulesFileError {
    pub line: usize,
    #[source]
    pub source: ParseError,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(Token {
                    text: &line[s..i],
                    column: col_of(line, s),
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &line[s..],
            column: col_of(line, s),
        });
    }
    tokens
}

fn col_of(line: &str, byte_idx: usize) -> usize {
    line[..byte_idx].chars().count() + 1
}

struct Cursor<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    end_column: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<Token<'a>> {
        self.tokens.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, column: usize, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            column,
            message: message.into(),
        })
    }

    fn expect_value(&mut self, after: Token<'a>) -> Result<Token<'a>, ParseError> {
        match self.next() {
            Some(t) if !t.text.starts_with("--") && t.text != "-m" && t.text != "-j" => Ok(t),
            Some(t) => self.err(t.column, format!("expected a value after `{}`", after.text)),
            None => self.err(self.end_column, format!("expected a value after `{}`", after.text)),
        }
    }

    /// True while the next token is an option of the current match.
    fn at_option(&self) -> bool {
        matches!(self.peek(), Some(t) if t.text != "-m" && t.text != "-j")
    }
}

fn parse_int(tok: Token<'_>, max: u64) -> Result<u64, ParseError> {
    let t = tok.text;
    let parsed = if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        if hex.is_empty() || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(ParseError {
                column: tok.column,
                message: format!("malformed hex literal `{t}`"),
            });
        }
        u64::from_str_radix(hex, 16).ok()
    } else {
        t.parse::<u64>().ok()
    };
    match parsed {
        Some(v) if v <= max => Ok(v),
        Some(_) => Err(ParseError {
            column: tok.column,
            message: format!("literal `{t}` exceeds 0x{max:X}"),
        }),
        None => Err(ParseError {
            column: tok.column,
            message: format!("malformed numeric literal `{t}`"),
        }),
    }
}

fn parse_dbm(tok: Token<'_>) -> Result<f64, ParseError> {
    match tok.text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ParseError {
            column: tok.column,
            message: format!("malformed dBm value `{}`", tok.text),
        }),
    }
}

fn parse_match(c: &mut Cursor<'_>, kind_tok: Token<'_>) -> Result<Match, ParseError> {
    let kind_name = kind_tok.text.to_ascii_lowercase();
    let mut tolerance: Option<u32> = None;
    let mut addr = None;
    let mut pan = None;
    let mut type_sel = None;
    let mut rss = None;
    let mut value: Option<u64> = None;
    let mut offset: Option<usize> = None;

    let with_addr = matches!(kind_name.as_str(), "src" | "dst");
    let max_value = match kind_name.as_str() {
        "nw_ctrl" => 0xFFFF,
        "asl_cmd" | "raw_byte" => 0xFF,
        "src" | "dst" | "type" | "rss" => 0,
        _ => {
            return c.err(
                kind_tok.column,
                format!("unknown match kind `{}`", kind_tok.text),
            )
        }
    };

    while c.at_option() {
        let opt = c.next().expect("at_option");
        match opt.text {
            "--tolerance" | "--hamming" => {
                let v = c.expect_value(opt)?;
                tolerance = Some(parse_int(v, 64)? as u32);
            }
            "--addr" if with_addr => addr = Some(parse_int(c.expect_value(opt)?, 0xFFFF)? as u16),
            "--pan" if with_addr => pan = Some(parse_int(c.expect_value(opt)?, 0xFFFF)? as u16),
            "--ctrl" | "--control" | "--data" | "--beacon" | "--ack" if kind_name == "type" => {
                if type_sel.is_some() {
                    return c.err(opt.column, "more than one frame type selector");
                }
                type_sel = Some(match opt.text {
                    "--ctrl" | "--control" => FrameTypeSel::Control,
                    "--data" => FrameTypeSel::Data,
                    "--beacon" => FrameTypeSel::Beacon,
                    _ => FrameTypeSel::Ack,
                });
            }
            "--above" | "--below" if kind_name == "rss" => {
                let dir = if opt.text == "--above" {
                    RssDirection::Above
                } else {
                    RssDirection::Below
                };
                rss = Some((parse_dbm(c.expect_value(opt)?)?, dir));
            }
            "--value" if max_value > 0 => value = Some(parse_int(c.expect_value(opt)?, max_value)?),
            "--offset" if kind_name == "raw_byte" => {
                offset = Some(parse_int(c.expect_value(opt)?, 126)? as usize)
            }
            t if !t.starts_with('-') && max_value > 0 && value.is_none() => {
                value = Some(parse_int(opt, max_value)?);
            }
            t => {
                return c.err(
                    opt.column,
                    format!("unexpected `{t}` in `{}` match", kind_tok.text),
                )
            }
        }
    }

    let missing = |what: &str| ParseError {
        column: kind_tok.column,
        message: format!("`{}` match needs {what}", kind_tok.text),
    };
    let kind = match kind_name.as_str() {
        "src" | "dst" => {
            if addr.is_none() && pan.is_none() {
                return Err(missing("--addr and/or --pan"));
            }
            if kind_name == "src" {
                MatchKind::Src { addr, pan }
            } else {
                MatchKind::Dst { addr, pan }
            }
        }
        "type" => MatchKind::Type(type_sel.ok_or_else(|| missing("a frame type selector"))?),
        "rss" => {
            let (threshold_dbm, direction) = rss.ok_or_else(|| missing("--above or --below"))?;
            MatchKind::Rss {
                threshold_dbm,
                direction,
            }
        }
        "nw_ctrl" => MatchKind::NwCtrl(value.ok_or_else(|| missing("a value"))? as u16),
        "asl_cmd" => MatchKind::AslCmd(value.ok_or_else(|| missing("a value"))? as u8),
        "raw_byte" => MatchKind::RawByte {
            offset: offset.ok_or_else(|| missing("--offset"))?,
            value: value.ok_or_else(|| missing("--value"))? as u8,
        },
        _ => unreachable!("kind validated above"),
    };
    let m = Match {
        kind,
        hamming_tolerance: tolerance.unwrap_or(0),
    };
    if m.hamming_tolerance > 0 && m.hamming_tolerance >= m.bit_width().max(1) {
        return c.err(
            kind_tok.column,
            format!(
                "tolerance {} must be below the {}-bit field width",
                m.hamming_tolerance,
                m.bit_width()
            ),
        );
    }
    Ok(m)
}

/// Parses one `gtables -A ...` command line.
pub fn parse_rule_line(text: &str) -> Result<Rule, ParseError> {
    let mut c = Cursor {
        tokens: tokenize(text),
        pos: 0,
        end_column: text.chars().count() + 1,
    };
    match c.next() {
        Some(t) if t.text == "gtables" => {}
        Some(t) => return c.err(t.column, "expected `gtables`"),
        None => return c.err(1, "empty rule"),
    }
    match c.next() {
        Some(t) if t.text == "-A" => {}
        Some(t) => return c.err(t.column, "expected `-A`"),
        None => return c.err(c.end_column, "expected `-A`"),
    }
    let mut matches = Vec::new();
    loop {
        match c.next() {
            Some(t) if t.text == "-m" => {
                let kind = match c.next() {
                    Some(k) => k,
                    None => return c.err(c.end_column, "expected match kind after `-m`"),
                };
                matches.push(parse_match(&mut c, kind)?);
            }
            Some(t) if t.text == "-j" => {
                let verdict = match c.next() {
                    Some(v) if v.text.eq_ignore_ascii_case("DROP") => Verdict::Drop,
                    Some(v) if v.text.eq_ignore_ascii_case("ACCEPT") => Verdict::Accept,
                    Some(v) => return c.err(v.column, format!("unknown verdict `{}`", v.text)),
                    None => return c.err(c.end_column, "expected verdict after `-j`"),
                };
                if let Some(extra) = c.next() {
                    return c.err(extra.column, "trailing tokens after verdict");
                }
                return Ok(Rule { matches, verdict });
            }
            Some(t) => return c.err(t.column, format!("expected `-m` or `-j`, found `{}`", t.text)),
            None => return c.err(c.end_column, "missing `-j` verdict"),
        }
    }
}

/// Parses a rules file: one gtables line per line, `#` starts a comment.
pub fn parse_rules(text: &str) -> Result<RuleChain, RulesFileError> {
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let rule = parse_rule_line(line).map_err(|source| RulesFileError {
            line: i + 1,
            source,
        })?;
        rules.push(rule);
    }
    Ok(RuleChain::new(rules))
}
