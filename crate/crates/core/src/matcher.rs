//! Multi-pattern phrase matching over token streams.
//!
//! An Aho–Corasick automaton whose alphabet is whole tokens rather than
//! bytes, so every match starts and ends on a token boundary by
//! construction. Patterns are normalized strings split on single spaces.

use std::collections::{HashMap, VecDeque};

const ROOT: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PhraseMatch {
    /// Index of the pattern in construction order.
    pub pattern: usize,
    pub start: usize,
    /// Inclusive.
    pub end: usize,
}

#[derive(Debug, Default, Clone)]
struct State {
    fail: u32,
    // patterns ending here, including those inherited through failure links
    outputs: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct PhraseMatcher {
    vocab: HashMap<String, u32>,
    goto: HashMap<(u32, u32), u32>,
    states: Vec<State>,
    pattern_lens: Vec<usize>,
}

impl PhraseMatcher {
    /// Build from normalized patterns. Empty patterns are accepted but never
    /// match.
    pub fn new<I, S>(patterns: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut m = PhraseMatcher {
            vocab: HashMap::new(),
            goto: HashMap::new(),
            states: vec![State::default()],
            pattern_lens: Vec::new(),
        };
        for (pi, pat) in patterns.into_iter().enumerate() {
            let mut state = ROOT;
            let mut len = 0;
            for tok in pat.as_ref().split(' ').filter(|t| !t.is_empty()) {
                let next_id = m.vocab.len() as u32;
                let sym = *m.vocab.entry(tok.to_owned()).or_insert(next_id);
                state = match m.goto.get(&(state, sym)) {
                    Some(&s) => s,
                    None => {
                        let s = m.states.len() as u32;
                        m.states.push(State::default());
                        m.goto.insert((state, sym), s);
                        s
                    }
                };
                len += 1;
            }
            m.pattern_lens.push(len);
            if len > 0 {
                m.states[state as usize].outputs.push(pi as u32);
            }
        }
        m.link_failures();
        m
    }

    fn link_failures(&mut self) {
        // children lists by parent, for BFS
        let mut children: Vec<Vec<(u32, u32)>> = vec![Vec::new(); self.states.len()];
        for (&(from, sym), &to) in &self.goto {
            children[from as usize].push((sym, to));
        }
        for c in &mut children {
            c.sort_unstable();
        }
        let mut queue = VecDeque::new();
        for &(_, child) in &children[ROOT as usize] {
            self.states[child as usize].fail = ROOT;
            queue.push_back(child);
        }
        while let Some(s) = queue.pop_front() {
            for &(sym, child) in &children[s as usize] {
                let mut f = self.states[s as usize].fail;
                let fail = loop {
                    if let Some(&t) = self.goto.get(&(f, sym)) {
                        break t;
                    }
                    if f == ROOT {
                        break ROOT;
                    }
                    f = self.states[f as usize].fail;
                };
                self.states[child as usize].fail = fail;
                let inherited = self.states[fail as usize].outputs.clone();
                self.states[child as usize].outputs.extend(inherited);
                queue.push_back(child);
            }
        }
    }

    pub fn pattern_count(&self) -> usize {
        self.pattern_lens.len()
    }

    fn step(&self, mut state: u32, sym: Option<u32>) -> u32 {
        let Some(sym) = sym else {
            return ROOT;
        };
        loop {
            if let Some(&next) = self.goto.get(&(state, sym)) {
                return next;
            }
            if state == ROOT {
                return ROOT;
            }
            state = self.states[state as usize].fail;
        }
    }

    /// Call `f` for every occurrence of every pattern, including overlapping
    /// ones. Occurrences are reported in order of their end position.
    pub fn for_each_match<'t, I, F>(&self, tokens: I, mut f: F)
    where
        I: IntoIterator<Item = &'t str>,
        F: FnMut(PhraseMatch),
    {
        let mut state = ROOT;
        for (pos, tok) in tokens.into_iter().enumerate() {
            state = self.step(state, self.vocab.get(tok).copied());
            for &p in &self.states[state as usize].outputs {
                let len = self.pattern_lens[p as usize];
                f(PhraseMatch {
                    pattern: p as usize,
                    start: pos + 1 - len,
                    end: pos,
                });
            }
        }
    }

    /// All matches sorted by `(start, end, pattern)`.
    pub fn find_all<'t, I>(&self, tokens: I) -> Vec<PhraseMatch>
    where
        I: IntoIterator<Item = &'t str>,
    {
        let mut out = Vec::new();
        self.for_each_match(tokens, |m| out.push(m));
        out.sort_unstable_by_key(|m| (m.start, m.end, m.pattern));
        out
    }

    pub fn is_match<'t, I>(&self, tokens: I) -> bool
    where
        I: IntoIterator<Item = &'t str>,
    {
        let mut state = ROOT;
        for tok in tokens {
            state = self.step(state, self.vocab.get(tok).copied());
            if !self.states[state as usize].outputs.is_empty() {
                return true;
            }
        }
        false
    }
}
