use chrono::NaiveTime;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// One trading session, `(open, close]` in local time. A bar stamped at the
/// end of its minute belongs to the session when `open < time <= close`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub open: NaiveTime,
    pub close: NaiveTime,
}

/// Ordered, non-overlapping trading sessions of one exchange day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCalendar {
    sessions: Vec<Session>,
    timezone: String,
}

impl Default for SessionCalendar {
    /// Shanghai/Shenzhen hours: 09:30–11:30 and 13:00–15:00, Beijing time.
    fn default() -> Self {
        let t = |h, m| NaiveTime::from_hms_opt(h, m, 0).expect("valid time");
        Self {
            sessions: vec![
                Session {
                    open: t(9, 30),
                    close: t(11, 30),
                },
                Session {
                    open: t(13, 0),
                    close: t(15, 0),
                },
            ],
            timezone: "Asia/Shanghai".to_string(),
        }
    }
}

impl SessionCalendar {
    pub fn new(sessions: Vec<Session>, timezone: impl Into<String>) -> Result<Self> {
        if sessions.is_empty() {
            return Err(invalid("calendar needs at least one session"));
        }
        for s in &sessions {
            if s.open >= s.close {
                return Err(invalid(format!("session {}-{} is empty", s.open, s.close)));
            }
        }
        if sessions.windows(2).any(|w| w[1].open < w[0].close) {
            return Err(invalid("sessions must be ordered and non-overlapping"));
        }
        Ok(Self {
            sessions,
            timezone: timezone.into(),
        })
    }

    pub fn sessions(&self) -> &[Session] {
        &self.sessions
    }

    pub fn timezone(&self) -> &str {
        &self.timezone
    }

    /// Index of the session containing `time`, if any.
    pub fn session_of(&self, time: NaiveTime) -> Option<usize> {
        self.sessions
            .iter()
            .position(|s| time > s.open && time <= s.close)
    }

    /// Parses a key-value calendar file:
    ///
    /// ```text
    /// # comment
    /// timezone = Asia/Shanghai
    /// session = 09:30-11:30
    /// session = 13:00-15:00
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut sessions = Vec::new();
        let mut timezone = Self::default().timezone;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: i as u64 + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            let value = value.trim().trim_matches('"');
            match key.trim() {
                "timezone" => timezone = value.to_string(),
                "session" => {
                    let (open, close) = value
                        .split_once('-')
                        .ok_or_else(|| parse_err(format!("expected HH:MM-HH:MM, got `{value}`")))?;
                    let time = |s: &str| {
                        NaiveTime::parse_from_str(s.trim(), "%H:%M")
                            .map_err(|e| parse_err(format!("bad time `{s}`: {e}")))
                    };
                    sessions.push(Session {
                        open: time(open)?,
                        close: time(close)?,
                    });
                }
                other => return Err(parse_err(format!("unknown key `{other}`"))),
            }
        }
        if sessions.is_empty() {
            sessions = Self::default().sessions;
        }
        Self::new(sessions, timezone)
    }
}
