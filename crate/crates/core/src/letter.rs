use std::fmt;

/// Upper bound on the number of atomic propositions a letter can carry.
pub const MAX_PROPS: usize = 32;

/// A subset of atomic propositions, stored as a bitmask over an ordered
/// proposition list. Bit `i` is set iff the `i`-th proposition holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Letter(pub u32);

impl Letter {
    pub const EMPTY: Letter = Letter(0);

    pub fn contains(self, prop: usize) -> bool {
        self.0 & (1 << prop) != 0
    }

    pub fn with(self, prop: usize) -> Letter {
        Letter(self.0 | (1 << prop))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Indices of the propositions in this letter, ascending.
    pub fn props(self) -> impl Iterator<Item = usize> {
        (0..MAX_PROPS).filter(move |&i| self.contains(i))
    }

    /// Builds a letter from proposition names, resolving them against `props`.
    /// Returns the first name that is not declared.
    pub fn from_names<'a, I>(props: &[String], names: I) -> Result<Letter, String>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut letter = Letter::EMPTY;
        for name in names {
            match props.iter().position(|p| p == name) {
                Some(i) => letter = letter.with(i),
                None => return Err(name.to_string()),
            }
        }
        Ok(letter)
    }

    pub fn names(self, props: &[String]) -> Vec<&str> {
        self.props()
            .take_while(|&i| i < props.len())
            .map(|i| props[i].as_str())
            .collect()
    }

    /// All `2^n` letters over `n` propositions.
    pub fn all(n: usize) -> impl Iterator<Item = Letter> {
        (0..(1u32 << n)).map(Letter)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.props().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}
