//! Line-oriented parser for `.vgl` scenario files.
//!
//! ```text
//! script  := header line* endline
//! header  := 'scenario' STRING
//! line    := 'at' TIME 'eyes' ('open'|'closed')
//!          | 'at' TIME 'alcohol' PPM
//!          | 'at' TIME 'noise' 'seed' INT 'jitter' REAL 'flip' REAL
//! endline := 'end' TIME
//! TIME    := REAL 's' ; PPM := REAL 'ppm'
//! ```
//!
//! The parser keeps going after an error so one pass reports every problem
//! it can find. It never panics, whatever the input.

use std::fmt;

use super::{ScenarioEvent, ScenarioScript, TimedEvent};
use crate::sensors::{NoiseSpec, MAX_GROUND_TRUTH_PPM, MQ3_SPAN_PPM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Severity {
    Error,
    Warning,
}

/// A positioned message. Line and column are 1-based; columns count
/// characters, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub severity: Severity,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.severity {
            Severity::Error => write!(f, "{}:{}: {}", self.line, self.column, self.message),
            Severity::Warning => {
                write!(
                    f,
                    "{}:{}: warning: {}",
                    self.line, self.column, self.message
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub script: ScenarioScript,
    pub warnings: Vec<Diagnostic>,
}

/// Parses raw bytes, reporting invalid UTF-8 at its position.
pub fn parse_scenario_bytes(bytes: &[u8]) -> Result<Parsed, Vec<Diagnostic>> {
    match std::str::from_utf8(bytes) {
        Ok(src) => parse_scenario(src),
        Err(e) => {
            let valid = &bytes[..e.valid_up_to()];
            // the valid prefix is UTF-8 by construction
            let prefix = std::str::from_utf8(valid).unwrap_or_default();
            let line = prefix.matches('\n').count() + 1;
            let column = prefix.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            Err(vec![Diagnostic {
                line,
                column,
                message: "invalid UTF-8".into(),
                severity: Severity::Error,
            }])
        }
    }
}

pub fn parse_scenario(src: &str) -> Result<Parsed, Vec<Diagnostic>> {
    let mut p = Parser::default();
    let mut line_count = 0;
    for (idx, raw) in src.split('\n').enumerate() {
        line_count = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        p.line(idx + 1, line);
    }
    p.finish(line_count)
}

#[derive(Debug, Clone)]
struct Token<'a> {
    col: usize,
    text: &'a str,
    quoted: Option<String>,
}

#[derive(Default)]
struct Parser {
    name: Option<String>,
    header_seen: bool,
    events: Vec<TimedEvent>,
    end: Option<(f64, usize)>,
    diagnostics: Vec<Diagnostic>,
}

impl Parser {
    fn error(&mut self, line: usize, column: usize, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            line,
            column,
            message: message.into(),
            severity: Severity::Error,
        });
    }

    fn warning(&mut self, line: usize, column: usize, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            line,
            column,
            message: message.into(),
            severity: Severity::Warning,
        });
    }

    fn line(&mut self, ln: usize, text: &str) {
        let tokens = match tokenize(text) {
            Ok(t) => t,
            Err((col, msg)) => return self.error(ln, col, msg),
        };
        let Some(first) = tokens.first() else {
            return;
        };
        let eol = text.chars().count() + 1;
        if first.quoted.is_some() {
            return self.error(ln, first.col, "expected a keyword, found a string");
        }
        match first.text {
            "scenario" => self.header(ln, &tokens, eol),
            "at" | "end" if !self.header_seen => {
                self.error(ln, first.col, "expected `scenario \"name\"` header first");
                // keep checking the rest as if the header were there
                self.header_seen = true;
                self.body(ln, &tokens, eol);
            }
            "at" | "end" => self.body(ln, &tokens, eol),
            other => self.error(ln, first.col, format!("unknown keyword `{other}`")),
        }
    }

    fn header(&mut self, ln: usize, tokens: &[Token<'_>], eol: usize) {
        if self.header_seen {
            return self.error(ln, tokens[0].col, "duplicate `scenario` header");
        }
        self.header_seen = true;
        match tokens.get(1) {
            Some(Token {
                quoted: Some(name), ..
            }) => self.name = Some(name.clone()),
            Some(t) => return self.error(ln, t.col, "expected a quoted scenario name"),
            None => return self.error(ln, eol, "expected a quoted scenario name"),
        }
        if let Some(extra) = tokens.get(2) {
            self.error(ln, extra.col, format!("unexpected `{}`", extra.text));
        }
    }

    fn body(&mut self, ln: usize, tokens: &[Token<'_>], eol: usize) {
        if let Some((_, end_line)) = self.end {
            let what = if tokens[0].text == "end" {
                format!("duplicate `end` (first on line {end_line})")
            } else {
                format!("event after `end` on line {end_line}")
            };
            return self.error(ln, tokens[0].col, what);
        }
        let mut cur = Cursor {
            tokens,
            pos: 1,
            eol,
        };
        let result = if tokens[0].text == "end" {
            self.end_line(ln, &mut cur)
        } else {
            self.at_line(ln, &mut cur)
        };
        if let Err((col, msg)) = result {
            return self.error(ln, col, msg);
        }
        if let Some(extra) = cur.peek() {
            self.error(ln, extra.col, format!("unexpected `{}`", extra.text));
        }
    }

    fn end_line(&mut self, ln: usize, cur: &mut Cursor<'_, '_>) -> Result<(), (usize, String)> {
        let (col, at) = cur.suffixed("s", "time")?;
        if let Some(last) = self.events.last() {
            if at < last.at {
                return Err((
                    col,
                    format!("end {at}s precedes the last event at {}s", last.at),
                ));
            }
        }
        self.end = Some((at, ln));
        Ok(())
    }

    fn at_line(&mut self, ln: usize, cur: &mut Cursor<'_, '_>) -> Result<(), (usize, String)> {
        let (time_col, at) = cur.suffixed("s", "time")?;
        let (kind_col, kind) = cur.word("event kind (`eyes`, `alcohol` or `noise`)")?;
        let event = match kind {
            "eyes" => {
                let (col, state) = cur.word("`open` or `closed`")?;
                match state {
                    "open" => ScenarioEvent::Eyes { closed: false },
                    "closed" => ScenarioEvent::Eyes { closed: true },
                    other => {
                        return Err((col, format!("expected `open` or `closed`, found `{other}`")))
                    }
                }
            }
            "alcohol" => {
                let (col, ppm) = cur.suffixed("ppm", "concentration")?;
                if ppm > MAX_GROUND_TRUTH_PPM {
                    return Err((
                        col,
                        format!("{ppm}ppm exceeds the {MAX_GROUND_TRUTH_PPM}ppm limit"),
                    ));
                }
                if ppm > MQ3_SPAN_PPM {
                    self.warning(
                        ln,
                        col,
                        format!("{ppm}ppm is above the sensor span; readings saturate"),
                    );
                }
                ScenarioEvent::Alcohol { ppm }
            }
            "noise" => {
                cur.keyword("seed")?;
                let (_, seed) = cur.integer()?;
                cur.keyword("jitter")?;
                let (_, jitter) = cur.real()?;
                cur.keyword("flip")?;
                let (flip_col, flip) = cur.real()?;
                if flip > 1.0 {
                    return Err((flip_col, format!("flip probability {flip} is above 1")));
                }
                ScenarioEvent::Noise(NoiseSpec {
                    seed,
                    alcohol_jitter: jitter,
                    eye_flip_prob: flip,
                })
            }
            other => {
                return Err((
                    kind_col,
                    format!("unknown event `{other}`, expected `eyes`, `alcohol` or `noise`"),
                ))
            }
        };
        if let Some(last) = self.events.last() {
            if at < last.at {
                return Err((
                    time_col,
                    format!("time {at}s goes backwards (previous event at {}s)", last.at),
                ));
            }
        }
        let duplicate = self
            .events
            .iter()
            .rev()
            .take_while(|e| e.at == at)
            .any(|e| e.event.keyword() == event.keyword());
        if duplicate {
            return Err((
                kind_col,
                format!("second `{}` event at {at}s", event.keyword()),
            ));
        }
        self.events.push(TimedEvent { at, event });
        Ok(())
    }

    fn finish(mut self, line_count: usize) -> Result<Parsed, Vec<Diagnostic>> {
        if !self.header_seen {
            self.error(1, 1, "missing `scenario \"name\"` header");
        }
        if self.end.is_none() {
            self.error(line_count.max(1), 1, "missing `end` line");
        }
        let has_error = self
            .diagnostics
            .iter()
            .any(|d| d.severity == Severity::Error);
        match (has_error, self.name, self.end) {
            (false, Some(name), Some((end_at, _))) => Ok(Parsed {
                script: ScenarioScript {
                    name,
                    events: self.events,
                    end_at,
                },
                warnings: self.diagnostics,
            }),
            _ => Err(self.diagnostics),
        }
    }
}

struct Cursor<'t, 'a> {
    tokens: &'t [Token<'a>],
    pos: usize,
    eol: usize,
}

impl<'a> Cursor<'_, 'a> {
    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self, expected: &str) -> Result<&Token<'a>, (usize, String)> {
        let eol = self.eol;
        let tok = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| (eol, format!("expected {expected}, found end of line")))?;
        self.pos += 1;
        if tok.quoted.is_some() {
            return Err((tok.col, format!("expected {expected}, found a string")));
        }
        Ok(tok)
    }

    fn word(&mut self, expected: &str) -> Result<(usize, &'a str), (usize, String)> {
        let t = self.next(expected)?;
        Ok((t.col, t.text))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), (usize, String)> {
        let (col, w) = self.word(&format!("`{kw}`"))?;
        if w != kw {
            return Err((col, format!("expected `{kw}`, found `{w}`")));
        }
        Ok(())
    }

    fn real(&mut self) -> Result<(usize, f64), (usize, String)> {
        let (col, w) = self.word("a number")?;
        parse_real(w)
            .map(|v| (col, v))
            .ok_or_else(|| (col, format!("expected a number, found `{w}`")))
    }

    fn integer(&mut self) -> Result<(usize, u64), (usize, String)> {
        let (col, w) = self.word("an integer")?;
        if !w.is_empty() && w.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(v) = w.parse() {
                return Ok((col, v));
            }
        }
        Err((
            col,
            format!("expected an unsigned 64-bit integer, found `{w}`"),
        ))
    }

    /// A number immediately followed by `unit`, as in `5.0s` or `450ppm`.
    fn suffixed(&mut self, unit: &str, what: &str) -> Result<(usize, f64), (usize, String)> {
        let (col, w) = self.word(&format!("a {what} like `1.5{unit}`"))?;
        let Some(num) = w.strip_suffix(unit) else {
            return Err((
                col,
                format!("expected a {what} ending in `{unit}`, found `{w}`"),
            ));
        };
        parse_real(num).map(|v| (col, v)).ok_or_else(|| {
            (
                col,
                format!("expected a {what} like `1.5{unit}`, found `{w}`"),
            )
        })
    }
}

/// `digits` or `digits.digits`; rejects signs, exponents, `inf` and `nan`.
fn parse_real(s: &str) -> Option<f64> {
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || frac.is_some_and(|f| !digits(f)) {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn tokenize(line: &str) -> Result<Vec<Token<'_>>, (usize, String)> {
    let mut tokens = Vec::new();
    let mut chars = line.char_indices().enumerate().peekable();
    while let Some(&(col0, (start, c))) = chars.peek() {
        let col = col0 + 1;
        if c.is_whitespace() {
            chars.next();
        } else if c == '#' {
            break;
        } else if c == '"' {
            chars.next();
            let mut value = String::new();
            let mut closed = None;
            while let Some((_, (i, ch))) = chars.next() {
                match ch {
                    '"' => {
                        closed = Some(i + 1);
                        break;
                    }
                    '\\' => match chars.next() {
                        Some((_, (_, e @ ('"' | '\\')))) => value.push(e),
                        Some((ecol, (_, e))) => {
                            return Err((ecol + 1, format!("unknown escape `\\{e}`")))
                        }
                        None => break,
                    },
                    other => value.push(other),
                }
            }
            let Some(end) = closed else {
                return Err((col, "unterminated string".into()));
            };
            tokens.push(Token {
                col,
                text: &line[start..end],
                quoted: Some(value),
            });
        } else {
            let mut end = line.len();
            while let Some(&(_, (i, ch))) = chars.peek() {
                if ch.is_whitespace() || ch == '#' || ch == '"' {
                    end = i;
                    break;
                }
                chars.next();
            }
            tokens.push(Token {
                col,
                text: &line[start..end],
                quoted: None,
            });
        }
    }
    Ok(tokens)
}
