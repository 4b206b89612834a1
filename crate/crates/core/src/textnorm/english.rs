//! Snowball English ("Porter2") stemmer.

use super::snowball::Env;

const V: &[char] = &['a', 'e', 'i', 'o', 'u', 'y'];
const V_WXY: &[char] = &['Y', 'a', 'e', 'i', 'o', 'u', 'w', 'x', 'y'];
const AEO: &[char] = &['a', 'e', 'o'];
const VALID_LI: &[char] = &['c', 'd', 'e', 'g', 'h', 'k', 'm', 'n', 'r', 't'];

const REGION_PREFIXES: &[(&str, i32)] = &[
    ("arsen", -1),
    ("commun", -1),
    ("emerg", -1),
    ("gener", -1),
    ("inter", -1),
    ("later", -1),
    ("organ", -1),
    ("past", -1),
    ("univers", -1),
];

const APOSTROPHE: &[(&str, i32)] = &[("'", 1), ("'s'", 1), ("'s", 1)];

const STEP_1A: &[(&str, i32)] = &[
    ("ied", 2),
    ("s", 3),
    ("ies", 2),
    ("sses", 1),
    ("ss", -1),
    ("us", -1),
];

const EED_GUARD: &[(&str, i32)] = &[("succ", 1), ("proc", 1), ("exc", 1)];

const ING_GUARD: &[(&str, i32)] = &[
    ("even", 2),
    ("cann", 2),
    ("inn", 2),
    ("earr", 2),
    ("herr", 2),
    ("out", 2),
    ("y", 1),
];

const STEP_1B: &[(&str, i32)] = &[
    ("", -1),
    ("ed", 2),
    ("eed", 1),
    ("ing", 3),
    ("edly", 2),
    ("eedly", 1),
    ("ingly", 2),
];

const STEP_1B_TAIL: &[(&str, i32)] = &[
    ("", 3),
    ("bb", 2),
    ("dd", 2),
    ("ff", 2),
    ("gg", 2),
    ("bl", 1),
    ("mm", 2),
    ("nn", 2),
    ("pp", 2),
    ("rr", 2),
    ("at", 1),
    ("tt", 2),
    ("iz", 1),
];

const STEP_2: &[(&str, i32)] = &[
    ("anci", 3),
    ("enci", 2),
    ("ogi", 14),
    ("li", 16),
    ("bli", 12),
    ("abli", 4),
    ("alli", 8),
    ("fulli", 9),
    ("lessli", 15),
    ("ousli", 10),
    ("entli", 5),
    ("aliti", 8),
    ("biliti", 12),
    ("iviti", 11),
    ("tional", 1),
    ("ational", 7),
    ("alism", 8),
    ("ation", 7),
    ("ization", 6),
    ("izer", 6),
    ("ator", 7),
    ("iveness", 11),
    ("fulness", 9),
    ("ousness", 10),
    ("ogist", 13),
];

const STEP_3: &[(&str, i32)] = &[
    ("icate", 4),
    ("ative", 6),
    ("alize", 3),
    ("iciti", 4),
    ("ical", 4),
    ("tional", 1),
    ("ational", 2),
    ("ful", 5),
    ("ness", 5),
];

const STEP_4: &[(&str, i32)] = &[
    ("ic", 1),
    ("ance", 1),
    ("ence", 1),
    ("able", 1),
    ("ible", 1),
    ("ate", 1),
    ("ive", 1),
    ("ize", 1),
    ("iti", 1),
    ("al", 1),
    ("ism", 1),
    ("ion", 2),
    ("er", 1),
    ("ous", 1),
    ("ant", 1),
    ("ent", 1),
    ("ment", 1),
    ("ement", 1),
];

const STEP_5: &[(&str, i32)] = &[("e", 1), ("l", 2)];

/// Whole-word exceptions and their replacements (`None` = keep as is).
const EXCEPTIONS: &[(&str, Option<&str>)] = &[
    ("andes", None),
    ("atlas", None),
    ("bias", None),
    ("cosmos", None),
    ("early", Some("earli")),
    ("gently", Some("gentl")),
    ("howe", None),
    ("idly", Some("idl")),
    ("news", None),
    ("only", Some("onli")),
    ("singly", Some("singl")),
    ("skies", Some("sky")),
    ("skis", Some("ski")),
    ("sky", None),
    ("ugly", Some("ugli")),
];

struct English {
    env: Env,
    y_found: bool,
    p1: usize,
    p2: usize,
}

pub fn stem(word: &str) -> String {
    if let Some((_, rep)) = EXCEPTIONS.iter().find(|(w, _)| *w == word) {
        return rep.unwrap_or(word).to_string();
    }
    if word.chars().count() < 3 {
        return word.to_string();
    }
    let mut st = English {
        env: Env::new(word),
        y_found: false,
        p1: 0,
        p2: 0,
    };
    st.prelude();
    st.mark_regions();
    let e = &mut st.env;
    e.limit_backward = e.cursor;
    e.cursor = e.limit;
    st.backward(English::step_1a);
    st.backward(English::step_1b);
    st.backward(English::step_1c);
    st.backward(English::step_2);
    st.backward(English::step_3);
    st.backward(English::step_4);
    st.backward(English::step_5);
    st.env.cursor = st.env.limit_backward;
    st.postlude();
    st.env.into_string()
}

impl English {
    /// Run a backward step, restoring the cursor relative to the end afterwards.
    fn backward(&mut self, step: fn(&mut Self) -> bool) {
        let from_end = self.env.limit - self.env.cursor;
        step(self);
        self.env.cursor = self.env.limit - from_end;
    }

    fn r1(&self) -> bool {
        self.p1 <= self.env.cursor
    }

    fn r2(&self) -> bool {
        self.p2 <= self.env.cursor
    }

    fn prelude(&mut self) {
        let e = &mut self.env;
        self.y_found = false;
        let start = e.cursor;
        e.bra = e.cursor;
        if e.eq_c('\'') {
            e.ket = e.cursor;
            e.slice_del();
        }
        e.cursor = start;
        e.bra = e.cursor;
        if e.eq_c('y') {
            e.ket = e.cursor;
            e.slice_from("Y");
            self.y_found = true;
        }
        e.cursor = start;
        // vowel followed by y: mark the y as consonant
        loop {
            let mut found = false;
            while e.cursor < e.limit {
                let here = e.cursor;
                if e.in_grouping(V) {
                    e.bra = e.cursor;
                    if e.eq_c('y') {
                        e.ket = e.cursor;
                        e.cursor = here;
                        found = true;
                        break;
                    }
                }
                e.cursor = here + 1;
            }
            if !found {
                break;
            }
            e.slice_from("Y");
            self.y_found = true;
        }
        e.cursor = start;
    }

    fn mark_regions(&mut self) {
        let e = &mut self.env;
        self.p1 = e.limit;
        self.p2 = e.limit;
        let start = e.cursor;
        'regions: {
            if e.find_among(REGION_PREFIXES) == 0 {
                e.cursor = start;
                if !e.go_out_grouping(V) {
                    break 'regions;
                }
                e.cursor += 1;
                if !e.go_in_grouping(V) {
                    break 'regions;
                }
                e.cursor += 1;
            }
            self.p1 = e.cursor;
            if !e.go_out_grouping(V) {
                break 'regions;
            }
            e.cursor += 1;
            if !e.go_in_grouping(V) {
                break 'regions;
            }
            e.cursor += 1;
            self.p2 = e.cursor;
        }
        e.cursor = start;
    }

    fn shortv(&mut self) -> bool {
        let e = &mut self.env;
        let from_end = e.limit - e.cursor;
        if e.out_grouping_b(V_WXY) && e.in_grouping_b(V) && e.out_grouping_b(V) {
            return true;
        }
        e.cursor = e.limit - from_end;
        if e.out_grouping_b(V) && e.in_grouping_b(V) && e.cursor <= e.limit_backward {
            return true;
        }
        e.cursor = e.limit - from_end;
        e.eq_s_b("past")
    }

    fn step_1a(&mut self) -> bool {
        let e = &mut self.env;
        let from_end = e.limit - e.cursor;
        e.ket = e.cursor;
        if e.find_among_b(APOSTROPHE) != 0 {
            e.bra = e.cursor;
            e.slice_del();
        } else {
            e.cursor = e.limit - from_end;
        }
        e.ket = e.cursor;
        let var = e.find_among_b(STEP_1A);
        if var == 0 {
            return false;
        }
        e.bra = e.cursor;
        match var {
            1 => e.slice_from("ss"),
            2 => {
                if e.cursor >= e.limit_backward + 2 {
                    e.cursor -= 2;
                    e.slice_from("i");
                } else {
                    e.slice_from("ie");
                }
            }
            3 => {
                if e.cursor <= e.limit_backward {
                    return false;
                }
                e.cursor -= 1;
                if !e.go_out_grouping_b(V) {
                    return false;
                }
                e.cursor -= 1;
                e.slice_del();
            }
            _ => {}
        }
        true
    }

    fn step_1b(&mut self) -> bool {
        self.env.ket = self.env.cursor;
        let var = self.env.find_among_b(STEP_1B);
        self.env.bra = self.env.cursor;
        let from_end = self.env.limit - self.env.cursor;

        // Cases that either finish the step or fall through to deletion.
        let delete = match var {
            1 => {
                if self.r1() {
                    let e = &mut self.env;
                    let keep = e.limit - e.cursor;
                    let guarded =
                        e.find_among_b(EED_GUARD) != 0 && e.cursor <= e.limit_backward;
                    if !guarded {
                        e.cursor = e.limit - keep;
                        e.slice_from("ee");
                    }
                    e.cursor = e.limit - keep;
                }
                false
            }
            2 => true,
            3 => {
                let e = &mut self.env;
                match e.find_among_b(ING_GUARD) {
                    0 => true,
                    1 => {
                        let keep = e.limit - e.cursor;
                        if e.out_grouping_b(V) && e.cursor <= e.limit_backward {
                            e.cursor = e.limit - keep;
                            e.bra = e.cursor;
                            e.slice_from("ie");
                            false
                        } else {
                            true
                        }
                    }
                    _ => e.cursor > e.limit_backward,
                }
            }
            _ => false,
        };
        if !delete {
            return true;
        }

        let e = &mut self.env;
        e.cursor = e.limit - from_end;
        let keep = e.limit - e.cursor;
        if !e.go_out_grouping_b(V) {
            return false;
        }
        e.cursor = e.limit - keep;
        e.slice_del();
        e.ket = e.cursor;
        e.bra = e.cursor;
        let before_tail = e.limit - e.cursor;
        match e.find_among_b(STEP_1B_TAIL) {
            1 => {
                e.slice_from("e");
                return false;
            }
            2 => {
                let keep = e.limit - e.cursor;
                if e.in_grouping_b(AEO) && e.cursor <= e.limit_backward {
                    return false;
                }
                e.cursor = e.limit - keep;
            }
            _ => {
                if e.cursor != self.p1 {
                    return false;
                }
                let keep = e.limit - e.cursor;
                if !self.shortv() {
                    return false;
                }
                let e = &mut self.env;
                e.cursor = e.limit - keep;
                e.slice_from("e");
                return false;
            }
        }
        let e = &mut self.env;
        e.cursor = e.limit - before_tail;
        e.ket = e.cursor;
        if e.cursor <= e.limit_backward {
            return false;
        }
        e.cursor -= 1;
        e.bra = e.cursor;
        e.slice_del();
        true
    }

    fn step_1c(&mut self) -> bool {
        let e = &mut self.env;
        e.ket = e.cursor;
        if !(e.eq_c_b('y') || e.eq_c_b('Y')) {
            return false;
        }
        e.bra = e.cursor;
        if !e.out_grouping_b(V) {
            return false;
        }
        if e.cursor <= e.limit_backward {
            return false;
        }
        e.slice_from("i");
        true
    }

    fn step_2(&mut self) -> bool {
        self.env.ket = self.env.cursor;
        let var = self.env.find_among_b(STEP_2);
        if var == 0 {
            return false;
        }
        self.env.bra = self.env.cursor;
        if !self.r1() {
            return false;
        }
        let e = &mut self.env;
        let rep = match var {
            1 => "tion",
            2 => "ence",
            3 => "ance",
            4 => "able",
            5 => "ent",
            6 => "ize",
            7 => "ate",
            8 => "al",
            9 => "ful",
            10 => "ous",
            11 => "ive",
            12 => "ble",
            13 => "og",
            14 => {
                if !e.eq_c_b('l') {
                    return false;
                }
                "og"
            }
            15 => "less",
            _ => {
                if !e.in_grouping_b(VALID_LI) {
                    return false;
                }
                ""
            }
        };
        e.slice_from(rep);
        true
    }

    fn step_3(&mut self) -> bool {
        self.env.ket = self.env.cursor;
        let var = self.env.find_among_b(STEP_3);
        if var == 0 {
            return false;
        }
        self.env.bra = self.env.cursor;
        if !self.r1() {
            return false;
        }
        let rep = match var {
            1 => "tion",
            2 => "ate",
            3 => "al",
            4 => "ic",
            5 => "",
            _ => {
                if !self.r2() {
                    return false;
                }
                ""
            }
        };
        self.env.slice_from(rep);
        true
    }

    fn step_4(&mut self) -> bool {
        self.env.ket = self.env.cursor;
        let var = self.env.find_among_b(STEP_4);
        if var == 0 {
            return false;
        }
        self.env.bra = self.env.cursor;
        if !self.r2() {
            return false;
        }
        let e = &mut self.env;
        if var == 2 && !(e.eq_c_b('s') || e.eq_c_b('t')) {
            return false;
        }
        e.slice_del();
        true
    }

    fn step_5(&mut self) -> bool {
        self.env.ket = self.env.cursor;
        let var = self.env.find_among_b(STEP_5);
        if var == 0 {
            return false;
        }
        self.env.bra = self.env.cursor;
        if var == 1 {
            if !self.r2() {
                if !self.r1() {
                    return false;
                }
                let keep = self.env.limit - self.env.cursor;
                if self.shortv() {
                    return false;
                }
                self.env.cursor = self.env.limit - keep;
            }
        } else {
            if !self.r2() {
                return false;
            }
            if !self.env.eq_c_b('l') {
                return false;
            }
        }
        self.env.slice_del();
        true
    }

    fn postlude(&mut self) {
        if !self.y_found {
            return;
        }
        for c in self.env.s.iter_mut() {
            if *c == 'Y' {
                *c = 'y';
            }
        }
    }
}
