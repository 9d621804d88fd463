//! The frozen combinator library.
//!
//! Every constructive bound in the crate is certified by a program built
//! from these terms, so every reported constant `c_*` is the code length
//! of one of them. Their encodings are pinned by golden tests; changing a
//! definition changes published numbers.
//!
//! Programs take two arguments, the condition list `z` and the data
//! stream `d`. Lists use `cons h t = λf. f h t` and `nil = false`.

use std::sync::OnceLock;

use crate::machine::io::{bits_to_list, bool_term};
use crate::machine::syntax::Library;
use crate::machine::term::{encode_term, Term};
use crate::machine::BitString;

const DEFINITIONS: &[(&str, &str)] = &[
    ("false", r"\a b. b"),
    ("true", r"\a b. a"),
    ("nil", r"\a b. b"),
    ("cons", r"\h t f. f h t"),
    // Recursion by self-application: `self (\g ...)` passes `g` itself,
    // so recursive calls are written `g g`.
    ("self", r"\s. s s"),
    // enc x y = 0^|x| 1 x y, in one pass: emit a 0 per element of x while
    // stacking a continuation that later emits the element itself.
    (
        "enc",
        r"\x y. self (\g l k. l (\h t _. \f. f false (g g t (\r. k (\f. f h r)))) (\f. f true (k y))) x (\r. r)",
    ),
    // Walks the header of an encoded pair, building one continuation step
    // per 0; at the terminating 1 the accumulated continuation gets the body.
    ("walk", r"\step. self (\g l k. l (\b t _. b (k t) (g g t (step k))) nil)"),
    ("keep", r"\k r. r (\h r2 _. \f. f h (k r2)) nil"),
    ("drop", r"\k r. r (\h r2 _. k r2) nil"),
    ("fst", r"\l. walk keep l (\r. nil)"),
    ("snd", r"\l. walk drop l (\r. r)"),
    // Echoes a binary lambda calculus code read from stream s, then
    // continues with k on the rest of the stream.
    ("echo_var", r"self (\v s k. s (\b s1 _. \f. f b (b (v v s1 k) (k s1))) nil)"),
    (
        "echo_code",
        r"self (\e s k. s (\b s1 _. \f. f b (b (echo_var s1 k) (s1 (\b2 s2 _. \f. f b2 (b2 (e e s2 (\s3. e e s3 k)) (e e s2 k))) nil))) nil)",
    ),
    // Echoes n stream bits (n a Church numeral).
    ("echo_n", r"\n. n (\g s. s (\b s2 _. \f. f b (g s2)) nil) (\s. nil)"),
    // Consumes one stream cell, then continues with the rest.
    ("skip_bit", r"\k d. d (\h. k)"),
    // Forces every element of a list, then returns r.
    ("force", r"self (\g l r. l (\h t _. h (g g t r) (g g t r)) r)"),
    // ---- program combinators ----
    ("COPY", r"\z d. z"),
    ("IGNORE", r"\w z d. w (fst z) d"),
    ("PAIR", r"\x y z d. enc (x z d) (y z d)"),
    ("SWAP", r"(\walk w z d. (\l. enc (walk drop l (\r. r)) (walk keep l (\r. nil))) (w z d)) walk"),
    ("PROJ", r"\w z d. (\l. force l (fst l)) (w z d)"),
    (
        "CHAIN",
        r"(\enc x k y z d. (\v. enc v (y (enc v (enc k z)) d)) (x z d)) enc",
    ),
    ("PRINT", r"\z d. echo_code d (\s. nil)"),
    ("PRINTK", r"\n z d. echo_code d (\s. echo_n n s)"),
    ("ECHO", r"\n z d. echo_n n d"),
    ("PAD", r"\x e z. e skip_bit (x z)"),
    ("FST_Z", r"\z d. fst z"),
    ("SND_Z", r"\z d. snd z"),
    ("FST_SND_Z", r"(\walk z d. walk keep (walk drop z (\r. r)) (\r. nil)) walk"),
    ("SND_SND_Z", r"(\walk z d. walk drop (walk drop z (\r. r)) (\r. r)) walk"),
];

/// Names of the program-level combinators whose sizes are published.
pub const PUBLISHED: &[&str] = &[
    "COPY", "IGNORE", "PAIR", "SWAP", "PROJ", "CHAIN", "PRINT", "PRINTK", "ECHO", "PAD", "FST_Z",
    "SND_Z", "FST_SND_Z", "SND_SND_Z",
];

/// The compiled library.
pub fn library() -> &'static Library {
    static LIB: OnceLock<Library> = OnceLock::new();
    LIB.get_or_init(|| {
        let mut lib = Library::new();
        for (name, src) in DEFINITIONS {
            lib.define(name, src)
                .unwrap_or_else(|e| panic!("combinator {name}: {e}"));
        }
        lib
    })
}

/// A library term by name. Panics on unknown names.
pub fn get(name: &str) -> Term {
    library()
        .get(name)
        .unwrap_or_else(|| panic!("no combinator named {name}"))
        .clone()
}

pub fn size(name: &str) -> usize {
    get(name).code_len()
}

/// Church numeral `λf x. f^n x`.
pub fn numeral(n: usize) -> Term {
    let mut body = Term::var(1);
    for _ in 0..n {
        body = Term::app(Term::var(2), body);
    }
    Term::lams(2, body)
}

/// Code length of [`numeral`] `n`: `00 00 (01 110)^n 10`.
pub fn numeral_len(n: usize) -> usize {
    6 + 5 * n
}

/// A literal list term spelling `x`.
pub fn literal(x: &BitString) -> Term {
    bits_to_list(x)
}

/// Code length of [`literal`]: 14 bits per 0, 15 per 1, plus 6 for nil.
pub fn literal_len(x: &BitString) -> usize {
    6 + x.bits().iter().map(|&b| if b { 15 } else { 14 }).sum::<usize>()
}

pub fn bit(b: bool) -> Term {
    bool_term(b)
}

/// `(name, code length, code)` for every published combinator.
pub fn published_table() -> Vec<(&'static str, usize, BitString)> {
    PUBLISHED
        .iter()
        .map(|&name| {
            let code = encode_term(&get(name));
            (name, code.len(), code)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::eval::{reduce, Gas};
    use crate::machine::io::{list_to_bits, nil_term};

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn eval_list(t: Term) -> BitString {
        let (nf, _) = reduce(&t, Gas::new(1_000_000)).unwrap();
        list_to_bits(&nf).unwrap()
    }

    #[test]
    fn all_definitions_are_closed() {
        for (name, _) in DEFINITIONS {
            assert!(get(name).is_closed(), "{name}");
        }
    }

    #[test]
    fn literal_and_numeral_lengths() {
        for x in ["", "0", "1", "0110", "111000"] {
            let x = bs(x);
            assert_eq!(encode_term(&literal(&x)).len(), literal_len(&x));
        }
        for n in 0..6 {
            assert_eq!(encode_term(&numeral(n)).len(), numeral_len(n));
        }
    }

    #[test]
    fn list_level_pairing_matches_bit_level() {
        use crate::machine::io::encode_pair;
        for (x, y) in [("", ""), ("1", "0"), ("011", "10"), ("", "1101"), ("10", "")] {
            let (x, y) = (bs(x), bs(y));
            let t = Term::apps(get("enc"), [literal(&x), literal(&y)]);
            assert_eq!(eval_list(t), encode_pair(&x, &y), "enc {x} {y}");
            let p = literal(&encode_pair(&x, &y));
            assert_eq!(eval_list(Term::app(get("fst"), p.clone())), x);
            assert_eq!(eval_list(Term::app(get("snd"), p.clone())), y);
            let swapped = Term::apps(get("SWAP"), [get("COPY"), p, nil_term()]);
            assert_eq!(eval_list(swapped), encode_pair(&y, &x));
        }
    }

    #[test]
    fn golden_sizes() {
        let sizes: Vec<(&str, usize)> =
            published_table().iter().map(|(n, l, _)| (*n, *l)).collect();
        assert_eq!(
            sizes,
            [
                ("COPY", 7),
                ("IGNORE", 180),
                ("PAIR", 178),
                ("SWAP", 384),
                ("PROJ", 287),
                ("CHAIN", 234),
                ("PRINT", 357),
                ("PRINTK", 428),
                ("ECHO", 80),
                ("PAD", 35),
                ("FST_Z", 168),
                ("SND_Z", 149),
                ("FST_SND_Z", 217),
                ("SND_SND_Z", 198),
            ]
        );
    }

    #[test]
    fn golden_encodings() {
        use sha2::{Digest, Sha256};
        assert_eq!(encode_term(&get("COPY")).to_string(), "0000110");
        assert_eq!(
            encode_term(&get("PAD")).to_string(),
            "00000001011100000011000111001111010"
        );
        let mut h = Sha256::new();
        for (_, _, code) in published_table() {
            h.update(code.to_string());
            h.update(b"\n");
        }
        assert_eq!(
            format!("{:x}", h.finalize()),
            "64434001e5df90327f4803f78ef085d23d89aae6650181151641fbffdb373c28"
        );
    }
}
