use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Base letter of an A–F grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    F,
    D,
    C,
    B,
    A,
}

impl Letter {
    pub const ALL: [Letter; 5] = [Letter::F, Letter::D, Letter::C, Letter::B, Letter::A];

    /// Grade points of the bare letter on the 4.0 scale.
    pub fn points(self) -> f64 {
        match self {
            Letter::A => 4.0,
            Letter::B => 3.0,
            Letter::C => 2.0,
            Letter::D => 1.0,
            Letter::F => 0.0,
        }
    }

    /// Lowest letter whose points are at least `points`.
    pub fn ceil_from_points(points: f64) -> Letter {
        Letter::ALL
            .into_iter()
            .find(|l| l.points() >= points - 1e-12)
            .unwrap_or(Letter::A)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Letter::A => "A",
            Letter::B => "B",
            Letter::C => "C",
            Letter::D => "D",
            Letter::F => "F",
        };
        f.write_str(s)
    }
}

impl FromStr for Letter {
    type Err = GradeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Letter::A),
            "B" => Ok(Letter::B),
            "C" => Ok(Letter::C),
            "D" => Ok(Letter::D),
            "F" => Ok(Letter::F),
            _ => Err(GradeParseError::NonLetter(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modifier {
    None,
    Plus,
    Minus,
}

/// A letter grade with optional `+`/`-` modifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LetterGrade {
    pub letter: Letter,
    pub modifier: Modifier,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GradeParseError {
    #[error("non-letter grade '{0}'")]
    NonLetter(String),
    #[error("invalid grade modifier in '{0}'")]
    InvalidModifier(String),
}

impl LetterGrade {
    pub fn new(letter: Letter, modifier: Modifier) -> Self {
        LetterGrade { letter, modifier }
    }

    /// Grade points including the modifier (A=4.0, A-=3.7, B+=3.3, ...).
    /// `A+` is capped at 4.0.
    pub fn points(self) -> f64 {
        let base = self.letter.points();
        match (self.letter, self.modifier) {
            (_, Modifier::None) | (Letter::A, Modifier::Plus) => base,
            (_, Modifier::Plus) => base + 0.3,
            (_, Modifier::Minus) => base - 0.3,
        }
    }
}

impl From<Letter> for LetterGrade {
    fn from(letter: Letter) -> Self {
        LetterGrade::new(letter, Modifier::None)
    }
}

impl fmt::Display for LetterGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = match self.modifier {
            Modifier::None => "",
            Modifier::Plus => "+",
            Modifier::Minus => "-",
        };
        write!(f, "{}{}", self.letter, suffix)
    }
}

impl FromStr for LetterGrade {
    type Err = GradeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let mut chars = t.chars();
        let first = chars.next().ok_or_else(|| GradeParseError::NonLetter(s.to_string()))?;
        let letter: Letter = first.to_string().parse().map_err(|_| GradeParseError::NonLetter(s.to_string()))?;
        let rest = chars.as_str();
        let modifier = match rest {
            "" => Modifier::None,
            "+" => Modifier::Plus,
            // ASCII hyphen or the typographic minus sign
            "-" | "\u{2212}" => Modifier::Minus,
            _ if rest.chars().all(|c| c.is_ascii_alphabetic()) => {
                return Err(GradeParseError::NonLetter(s.to_string()));
            }
            _ => return Err(GradeParseError::InvalidModifier(s.to_string())),
        };
        if letter == Letter::F && modifier != Modifier::None {
            return Err(GradeParseError::InvalidModifier(s.to_string()));
        }
        Ok(LetterGrade { letter, modifier })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_letters_and_modifiers() {
        assert_eq!("A".parse::<LetterGrade>().unwrap(), Letter::A.into());
        assert_eq!("b+".parse::<LetterGrade>().unwrap(), LetterGrade::new(Letter::B, Modifier::Plus));
        assert_eq!("C−".parse::<LetterGrade>().unwrap(), LetterGrade::new(Letter::C, Modifier::Minus));
    }

    #[test]
    fn rejects_pass_fail_and_junk() {
        assert!(matches!("P".parse::<LetterGrade>(), Err(GradeParseError::NonLetter(_))));
        assert!(matches!("NP".parse::<LetterGrade>(), Err(GradeParseError::NonLetter(_))));
        assert!(matches!("CR".parse::<LetterGrade>(), Err(GradeParseError::NonLetter(_))));
        assert!("".parse::<LetterGrade>().is_err());
        assert!(matches!("F+".parse::<LetterGrade>(), Err(GradeParseError::InvalidModifier(_))));
        assert!(matches!("B++".parse::<LetterGrade>(), Err(GradeParseError::InvalidModifier(_))));
    }

    #[test]
    fn point_mapping() {
        let expect = [
            ("A", 4.0),
            ("A-", 3.7),
            ("B+", 3.3),
            ("B", 3.0),
            ("B-", 2.7),
            ("C+", 2.3),
            ("C", 2.0),
            ("C-", 1.7),
            ("D+", 1.3),
            ("D", 1.0),
            ("D-", 0.7),
            ("F", 0.0),
        ];
        for (g, p) in expect {
            let grade: LetterGrade = g.parse().unwrap();
            assert!((grade.points() - p).abs() < 1e-12, "{g}");
        }
    }

    #[test]
    fn ceil_rounds_up_between_letters() {
        assert_eq!(Letter::ceil_from_points(2.5), Letter::B);
        assert_eq!(Letter::ceil_from_points(3.0), Letter::B);
        assert_eq!(Letter::ceil_from_points(0.0), Letter::F);
    }
}
