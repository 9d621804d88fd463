//! Closed-term codes in length-then-lexicographic order.

use crate::machine::term::{decode_term, Term};
use crate::machine::BitString;

/// Default upper limit on `max_len` for [`enumerate_codes`].
pub const DEFAULT_MAX_LEN: usize = 40;

// Token order matches bit order: Lam (00) < App (01) < Var 1 (10) < Var 2 (110) < ...
#[derive(Clone, Copy, Debug)]
enum Tok {
    Lam,
    App,
    Var(u32),
}

impl Tok {
    fn width(self) -> usize {
        match self {
            Tok::Lam | Tok::App => 2,
            Tok::Var(i) => i as usize + 1,
        }
    }
}

struct Frame {
    tok: Tok,
    // Depth of the slot this token filled, to restore on backtrack.
    slot: u32,
}

/// Depth-first generator of every closed code of exactly `len` bits.
struct ExactLen {
    len: usize,
    bits: Vec<bool>,
    // Binder depths of the open slots, next slot last.
    slots: Vec<u32>,
    frames: Vec<Frame>,
    started: bool,
    done: bool,
}

impl ExactLen {
    fn new(len: usize) -> ExactLen {
        ExactLen {
            len,
            bits: Vec::with_capacity(len),
            slots: vec![0],
            frames: Vec::new(),
            started: false,
            done: false,
        }
    }

    fn min_bits(depth: u32) -> usize {
        // λ1 at depth 0, Var 1 under a binder.
        if depth == 0 {
            4
        } else {
            2
        }
    }

    fn feasible(&self) -> bool {
        let need: usize = self.slots.iter().map(|&d| Self::min_bits(d)).sum();
        self.bits.len() + need <= self.len
    }

    fn first_tok() -> Tok {
        Tok::Lam
    }

    fn next_tok(tok: Tok, depth: u32) -> Option<Tok> {
        match tok {
            Tok::Lam => Some(Tok::App),
            Tok::App if depth >= 1 => Some(Tok::Var(1)),
            Tok::App => None,
            Tok::Var(i) if i < depth => Some(Tok::Var(i + 1)),
            Tok::Var(_) => None,
        }
    }

    fn apply(&mut self, tok: Tok) -> bool {
        let slot = self.slots.pop().expect("open slot");
        if tok.width() + self.bits.len() > self.len {
            self.slots.push(slot);
            return false;
        }
        match tok {
            Tok::Lam => {
                self.bits.extend([false, false]);
                self.slots.push(slot + 1);
            }
            Tok::App => {
                self.bits.extend([false, true]);
                self.slots.push(slot);
                self.slots.push(slot);
            }
            Tok::Var(i) => {
                self.bits.extend(std::iter::repeat_n(true, i as usize));
                self.bits.push(false);
            }
        }
        self.frames.push(Frame { tok, slot });
        if self.feasible() {
            true
        } else {
            self.undo();
            false
        }
    }

    fn undo(&mut self) -> Frame {
        let f = self.frames.pop().expect("frame to undo");
        self.bits.truncate(self.bits.len() - f.tok.width());
        match f.tok {
            Tok::Lam => {
                self.slots.pop();
            }
            Tok::App => {
                self.slots.pop();
                self.slots.pop();
            }
            Tok::Var(_) => {}
        }
        self.slots.push(f.slot);
        f
    }

    // Tries `tok` and its successors in the current slot.
    fn advance_from(&mut self, mut tok: Tok) -> bool {
        let depth = *self.slots.last().expect("open slot");
        loop {
            if self.apply(tok) {
                return true;
            }
            match Self::next_tok(tok, depth) {
                Some(t) => tok = t,
                None => return false,
            }
        }
    }

    // Backtracks to the next untried alternative; false when exhausted.
    fn backtrack(&mut self) -> bool {
        while !self.frames.is_empty() {
            let f = self.undo();
            if let Some(t) = Self::next_tok(f.tok, f.slot) {
                if self.advance_from(t) {
                    return true;
                }
            }
        }
        false
    }

    // Extends until complete or stuck, backtracking as needed.
    fn descend(&mut self) -> bool {
        loop {
            if self.slots.is_empty() {
                if self.bits.len() == self.len {
                    return true;
                }
                if !self.backtrack() {
                    return false;
                }
                continue;
            }
            if !self.advance_from(Self::first_tok()) && !self.backtrack() {
                return false;
            }
        }
    }
}

impl Iterator for ExactLen {
    type Item = BitString;

    fn next(&mut self) -> Option<BitString> {
        if self.done {
            return None;
        }
        let found = if !self.started {
            self.started = true;
            self.feasible() && self.descend()
        } else {
            self.backtrack() && self.descend()
        };
        if found {
            Some(BitString::from_bits(self.bits.clone()))
        } else {
            self.done = true;
            None
        }
    }
}

/// Every closed code of exactly `len` bits, in lexicographic order.
pub fn codes_of_len(len: usize) -> impl Iterator<Item = BitString> {
    ExactLen::new(len)
}

/// Every closed-term code of length ≤ `max_len`, shortest first and
/// lexicographic within a length, paired with its term.
///
/// Panics if `max_len` exceeds [`DEFAULT_MAX_LEN`]; use
/// [`enumerate_codes_unchecked`] to go further.
pub fn enumerate_codes(max_len: usize) -> impl Iterator<Item = (BitString, Term)> {
    assert!(
        max_len <= DEFAULT_MAX_LEN,
        "max_len {max_len} exceeds the ceiling {DEFAULT_MAX_LEN}"
    );
    enumerate_codes_unchecked(max_len)
}

pub fn enumerate_codes_unchecked(max_len: usize) -> impl Iterator<Item = (BitString, Term)> {
    (0..=max_len).flat_map(codes_of_len).map(|code| {
        let (t, _) = decode_term(&code).expect("generated code parses");
        (code, t)
    })
}
