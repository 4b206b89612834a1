//! Minimal cursor machine shared by the Snowball stemmers.
//!
//! Mirrors the string-manipulation primitives of the Snowball runtime
//! (`cursor`, `limit`, `limit_backward`, `bra`, `ket`, `among` lookup) over
//! a `Vec<char>`, so the stemming rules can be written down step by step.

pub(crate) struct Env {
    pub s: Vec<char>,
    pub cursor: usize,
    pub limit: usize,
    pub limit_backward: usize,
    pub bra: usize,
    pub ket: usize,
}

impl Env {
    pub fn new(word: &str) -> Self {
        let s: Vec<char> = word.chars().collect();
        let limit = s.len();
        Env {
            s,
            cursor: 0,
            limit,
            limit_backward: 0,
            bra: 0,
            ket: limit,
        }
    }

    pub fn into_string(self) -> String {
        self.s.into_iter().collect()
    }

    /// Char immediately before the cursor, if it lies above `limit_backward`.
    pub fn prev(&self) -> Option<char> {
        (self.cursor > self.limit_backward).then(|| self.s[self.cursor - 1])
    }

    pub fn next(&self) -> Option<char> {
        (self.cursor < self.limit).then(|| self.s[self.cursor])
    }

    pub fn eq_c(&mut self, c: char) -> bool {
        if self.next() == Some(c) {
            self.cursor += 1;
            true
        } else {
            false
        }
    }

    pub fn eq_c_b(&mut self, c: char) -> bool {
        if self.prev() == Some(c) {
            self.cursor -= 1;
            true
        } else {
            false
        }
    }

    pub fn in_grouping(&mut self, g: &[char]) -> bool {
        match self.next() {
            Some(c) if g.contains(&c) => {
                self.cursor += 1;
                true
            }
            _ => false,
        }
    }

    pub fn in_grouping_b(&mut self, g: &[char]) -> bool {
        match self.prev() {
            Some(c) if g.contains(&c) => {
                self.cursor -= 1;
                true
            }
            _ => false,
        }
    }

    pub fn out_grouping_b(&mut self, g: &[char]) -> bool {
        match self.prev() {
            Some(c) if !g.contains(&c) => {
                self.cursor -= 1;
                true
            }
            _ => false,
        }
    }

    /// Advance to the next char in `g` (cursor left on it).
    pub fn go_out_grouping(&mut self, g: &[char]) -> bool {
        while self.cursor < self.limit {
            if g.contains(&self.s[self.cursor]) {
                return true;
            }
            self.cursor += 1;
        }
        false
    }

    /// Advance to the next char not in `g` (cursor left on it).
    pub fn go_in_grouping(&mut self, g: &[char]) -> bool {
        while self.cursor < self.limit {
            if !g.contains(&self.s[self.cursor]) {
                return true;
            }
            self.cursor += 1;
        }
        false
    }

    /// Move backwards until the char before the cursor is in `g`.
    pub fn go_out_grouping_b(&mut self, g: &[char]) -> bool {
        while self.cursor > self.limit_backward {
            if g.contains(&self.s[self.cursor - 1]) {
                return true;
            }
            self.cursor -= 1;
        }
        false
    }

    fn ends_at_cursor(&self, pat: &str) -> Option<usize> {
        let n = pat.chars().count();
        if self.cursor < self.limit_backward + n {
            return None;
        }
        let start = self.cursor - n;
        pat.chars()
            .zip(&self.s[start..self.cursor])
            .all(|(a, &b)| a == b)
            .then_some(n)
    }

    fn starts_at_cursor(&self, pat: &str) -> Option<usize> {
        let n = pat.chars().count();
        if self.cursor + n > self.limit {
            return None;
        }
        pat.chars()
            .zip(&self.s[self.cursor..self.cursor + n])
            .all(|(a, &b)| a == b)
            .then_some(n)
    }

    pub fn eq_s_b(&mut self, pat: &str) -> bool {
        match self.ends_at_cursor(pat) {
            Some(n) => {
                self.cursor -= n;
                true
            }
            None => false,
        }
    }

    /// Longest entry of `among` ending at the cursor; moves the cursor to its
    /// start and returns its result code, or 0 when nothing matches.
    pub fn find_among_b(&mut self, among: &[(&str, i32)]) -> i32 {
        let best = among
            .iter()
            .filter_map(|&(pat, res)| self.ends_at_cursor(pat).map(|n| (n, res)))
            .max_by_key(|&(n, _)| n);
        match best {
            Some((n, res)) => {
                self.cursor -= n;
                res
            }
            None => 0,
        }
    }

    pub fn find_among(&mut self, among: &[(&str, i32)]) -> i32 {
        let best = among
            .iter()
            .filter_map(|&(pat, res)| self.starts_at_cursor(pat).map(|n| (n, res)))
            .max_by_key(|&(n, _)| n);
        match best {
            Some((n, res)) => {
                self.cursor += n;
                res
            }
            None => 0,
        }
    }

    /// Replace `bra..ket` with `rep`, shifting cursor and limit like the
    /// Snowball runtime does.
    pub fn slice_from(&mut self, rep: &str) {
        let (bra, ket) = (self.bra, self.ket);
        let rep: Vec<char> = rep.chars().collect();
        let rep_len = rep.len();
        let adjustment = rep.len() as isize - (ket - bra) as isize;
        self.s.splice(bra..ket, rep);
        self.limit = (self.limit as isize + adjustment) as usize;
        if self.cursor >= ket {
            self.cursor = (self.cursor as isize + adjustment) as usize;
        } else if self.cursor > bra {
            self.cursor = bra;
        }
        self.ket = bra + rep_len;
    }

    pub fn slice_del(&mut self) {
        self.slice_from("");
    }
}
