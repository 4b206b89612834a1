//! Snowball German stemmer.

use super::snowball::Env;

const V: &[char] = &['a', 'e', 'i', 'o', 'u', 'y', 'ä', 'ö', 'ü'];
const ET_ENDING: &[char] = &[
    'U', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'r', 's', 't', 'z', 'ä',
];
const S_ENDING: &[char] = &['b', 'd', 'f', 'g', 'h', 'k', 'l', 'm', 'n', 'r', 't'];
const ST_ENDING: &[char] = &['b', 'd', 'f', 'g', 'h', 'k', 'l', 'm', 'n', 't'];

const PRELUDE: &[(&str, i32)] = &[
    ("", 5),
    ("ae", 2),
    ("oe", 3),
    ("qu", -1),
    ("ue", 4),
    ("ß", 1),
];

const POSTLUDE: &[(&str, i32)] = &[
    ("", 5),
    ("U", 2),
    ("Y", 1),
    ("ä", 3),
    ("ö", 4),
    ("ü", 2),
];

const STEP_1: &[(&str, i32)] = &[
    ("e", 3),
    ("em", 1),
    ("en", 3),
    ("erinnen", 2),
    ("erin", 2),
    ("ln", 5),
    ("ern", 2),
    ("er", 2),
    ("s", 4),
    ("es", 3),
    ("lns", 5),
];

const ET_EXCEPTIONS: &[(&str, i32)] = &[
    ("tick", -1),
    ("plan", -1),
    ("geordn", -1),
    ("intern", -1),
    ("tr", -1),
];

const STEP_2: &[(&str, i32)] = &[("en", 1), ("er", 1), ("et", 3), ("st", 2), ("est", 1)];

const IG_LICH: &[(&str, i32)] = &[("ig", 1), ("lich", 1)];

const STEP_3: &[(&str, i32)] = &[
    ("end", 1),
    ("ig", 2),
    ("ung", 1),
    ("lich", 3),
    ("isch", 2),
    ("ik", 2),
    ("heit", 3),
    ("keit", 4),
];

const APOSTROPHE: &[(&str, i32)] = &[("'", 1), ("'sch", 1), ("'s", 1)];

struct German {
    env: Env,
    p1: usize,
    p2: usize,
}

pub fn stem(word: &str) -> String {
    let mut st = German {
        env: Env::new(word),
        p1: 0,
        p2: 0,
    };
    st.prelude();
    st.env.cursor = 0;
    st.mark_regions();
    st.env.cursor = 0;
    st.env.limit_backward = 0;
    st.env.cursor = st.env.limit;
    st.standard_suffix();
    st.env.cursor = st.env.limit_backward;
    st.postlude();
    st.env.into_string()
}

impl German {
    fn r1(&self) -> bool {
        self.p1 <= self.env.cursor
    }

    fn r2(&self) -> bool {
        self.p2 <= self.env.cursor
    }

    fn prelude(&mut self) {
        let e = &mut self.env;
        // u or y between vowels is marked as consonant
        loop {
            let mut found = None;
            while e.cursor <= e.limit {
                let here = e.cursor;
                if e.in_grouping(V) {
                    e.bra = e.cursor;
                    let marker = if e.eq_c('u') && e.in_grouping(V) {
                        Some("U")
                    } else {
                        e.cursor = e.bra;
                        if e.eq_c('y') && e.in_grouping(V) {
                            Some("Y")
                        } else {
                            None
                        }
                    };
                    if let Some(m) = marker {
                        e.ket = e.bra + 1;
                        e.cursor = here;
                        found = Some(m);
                        break;
                    }
                }
                e.cursor = here;
                if e.cursor >= e.limit {
                    break;
                }
                e.cursor += 1;
            }
            match found {
                Some(m) => e.slice_from(m),
                None => break,
            }
        }
        e.cursor = 0;
        loop {
            e.bra = e.cursor;
            let var = e.find_among(PRELUDE);
            e.ket = e.cursor;
            match var {
                1 => e.slice_from("ss"),
                2 => e.slice_from("ä"),
                3 => e.slice_from("ö"),
                4 => e.slice_from("ü"),
                5 => {
                    if e.cursor >= e.limit {
                        break;
                    }
                    e.cursor += 1;
                }
                _ => {}
            }
        }
    }

    fn mark_regions(&mut self) {
        let e = &mut self.env;
        self.p1 = e.limit;
        self.p2 = e.limit;
        if e.cursor + 3 > e.limit {
            return;
        }
        let x = e.cursor + 3;
        if !e.go_out_grouping(V) {
            return;
        }
        e.cursor += 1;
        if !e.go_in_grouping(V) {
            return;
        }
        e.cursor += 1;
        self.p1 = e.cursor.max(x);
        if !e.go_out_grouping(V) {
            return;
        }
        e.cursor += 1;
        if !e.go_in_grouping(V) {
            return;
        }
        e.cursor += 1;
        self.p2 = e.cursor;
    }

    fn standard_suffix(&mut self) {
        let from_end = self.env.limit - self.env.cursor;
        self.step_1();
        self.env.cursor = self.env.limit - from_end;

        let from_end = self.env.limit - self.env.cursor;
        self.step_2();
        self.env.cursor = self.env.limit - from_end;

        let from_end = self.env.limit - self.env.cursor;
        self.step_3();
        self.env.cursor = self.env.limit - from_end;

        let from_end = self.env.limit - self.env.cursor;
        self.step_apostrophe();
        self.env.cursor = self.env.limit - from_end;
    }

    fn step_1(&mut self) {
        self.env.ket = self.env.cursor;
        let var = self.env.find_among_b(STEP_1);
        if var == 0 {
            return;
        }
        self.env.bra = self.env.cursor;
        if !self.r1() {
            return;
        }
        let e = &mut self.env;
        match var {
            1 => {
                if e.eq_s_b("syst") {
                    return;
                }
                e.slice_del();
            }
            2 => e.slice_del(),
            3 => {
                e.slice_del();
                let keep = e.limit - e.cursor;
                e.ket = e.cursor;
                if e.eq_c_b('s') {
                    e.bra = e.cursor;
                    if e.eq_s_b("nis") {
                        e.slice_del();
                        return;
                    }
                }
                e.cursor = e.limit - keep;
            }
            4 => {
                if !e.in_grouping_b(S_ENDING) {
                    return;
                }
                e.slice_del();
            }
            _ => e.slice_from("l"),
        }
    }

    fn step_2(&mut self) {
        self.env.ket = self.env.cursor;
        let var = self.env.find_among_b(STEP_2);
        if var == 0 {
            return;
        }
        self.env.bra = self.env.cursor;
        if !self.r1() {
            return;
        }
        let e = &mut self.env;
        match var {
            1 => e.slice_del(),
            2 => {
                if !e.in_grouping_b(ST_ENDING) {
                    return;
                }
                if e.cursor < e.limit_backward + 3 {
                    return;
                }
                e.cursor -= 3;
                e.slice_del();
            }
            _ => {
                let keep = e.limit - e.cursor;
                if !e.in_grouping_b(ET_ENDING) {
                    return;
                }
                e.cursor = e.limit - keep;
                if e.find_among_b(ET_EXCEPTIONS) != 0 {
                    return;
                }
                e.cursor = e.limit - keep;
                e.slice_del();
            }
        }
    }

    fn step_3(&mut self) {
        self.env.ket = self.env.cursor;
        let var = self.env.find_among_b(STEP_3);
        if var == 0 {
            return;
        }
        self.env.bra = self.env.cursor;
        if !self.r2() {
            return;
        }
        match var {
            1 => {
                self.env.slice_del();
                let keep = self.env.limit - self.env.cursor;
                self.env.ket = self.env.cursor;
                if self.env.eq_s_b("ig") {
                    self.env.bra = self.env.cursor;
                    if self.env.prev() != Some('e') && self.r2() {
                        self.env.slice_del();
                        return;
                    }
                }
                self.env.cursor = self.env.limit - keep;
            }
            2 => {
                if self.env.prev() == Some('e') {
                    return;
                }
                self.env.slice_del();
            }
            3 => {
                self.env.slice_del();
                let keep = self.env.limit - self.env.cursor;
                self.env.ket = self.env.cursor;
                if self.env.eq_s_b("er") || self.env.eq_s_b("en") {
                    self.env.bra = self.env.cursor;
                    if self.r1() {
                        self.env.slice_del();
                        return;
                    }
                }
                self.env.cursor = self.env.limit - keep;
            }
            _ => {
                self.env.slice_del();
                let keep = self.env.limit - self.env.cursor;
                self.env.ket = self.env.cursor;
                if self.env.find_among_b(IG_LICH) != 0 {
                    self.env.bra = self.env.cursor;
                    if self.r2() {
                        self.env.slice_del();
                        return;
                    }
                }
                self.env.cursor = self.env.limit - keep;
            }
        }
    }

    fn step_apostrophe(&mut self) {
        let e = &mut self.env;
        e.ket = e.cursor;
        if e.find_among_b(APOSTROPHE) == 0 {
            return;
        }
        e.bra = e.cursor;
        if e.cursor <= e.limit_backward {
            return;
        }
        e.cursor -= 1;
        if e.cursor <= e.limit_backward {
            return;
        }
        e.slice_del();
    }

    fn postlude(&mut self) {
        let e = &mut self.env;
        loop {
            e.bra = e.cursor;
            let var = e.find_among(POSTLUDE);
            e.ket = e.cursor;
            match var {
                1 => e.slice_from("y"),
                2 => e.slice_from("u"),
                3 => e.slice_from("a"),
                4 => e.slice_from("o"),
                _ => {
                    if e.cursor >= e.limit {
                        break;
                    }
                    e.cursor += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::stem;

    #[test]
    fn compounds_and_umlauts() {
        assert_eq!(stem("sozialwissenschaften"), "sozialwissenschaft");
        assert_eq!(stem("bildung"), "bildung");
        assert_eq!(stem("armut"), "armut");
        assert_eq!(stem("größe"), "gross");
    }

    #[test]
    fn empty_and_short() {
        assert_eq!(stem(""), "");
        assert_eq!(stem("ab"), "ab");
    }
}
