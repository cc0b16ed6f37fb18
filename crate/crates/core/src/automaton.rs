//! Finite automata over completed-interaction traces.
//!
//! Traces end with the `√` marker; an automaton accepts a word exactly when
//! its last symbol is `√` and it reaches an accepting state by it.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

/// Symbol used for successful termination.
pub const TICK: &str = "√";

/// Nondeterministic automaton with silent (`None`) moves.
#[derive(Clone, Debug, Default)]
pub struct TraceAutomaton {
    pub initial: usize,
    pub accepting: Vec<bool>,
    pub transitions: Vec<Vec<(Option<String>, usize)>>,
}

impl TraceAutomaton {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_state(&mut self, accepting: bool) -> usize {
        self.accepting.push(accepting);
        self.transitions.push(Vec::new());
        self.accepting.len() - 1
    }

    pub fn add_transition(&mut self, from: usize, symbol: Option<String>, to: usize) {
        self.transitions[from].push((symbol, to));
    }

    pub fn len(&self) -> usize {
        self.accepting.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepting.is_empty()
    }

    fn closure(&self, states: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        let mut stack: Vec<usize> = states.into_iter().collect();
        while let Some(s) = stack.pop() {
            if !seen.insert(s) {
                continue;
            }
            for (sym, t) in &self.transitions[s] {
                if sym.is_none() && !seen.contains(t) {
                    stack.push(*t);
                }
            }
        }
        seen
    }

    fn step(&self, set: &BTreeSet<usize>, symbol: &str) -> BTreeSet<usize> {
        let targets = set.iter().flat_map(|&s| {
            self.transitions[s]
                .iter()
                .filter(move |(sym, _)| sym.as_deref() == Some(symbol))
                .map(|(_, t)| *t)
        });
        self.closure(targets)
    }

    fn symbols_from(&self, set: &BTreeSet<usize>) -> BTreeSet<String> {
        set.iter()
            .flat_map(|&s| self.transitions[s].iter().filter_map(|(sym, _)| sym.clone()))
            .collect()
    }

    /// Subset construction. State 0 of the result is the initial subset.
    pub fn determinize(&self) -> Dfa {
        let start = self.closure([self.initial]);
        let mut index: HashMap<BTreeSet<usize>, usize> = HashMap::new();
        let mut dfa = Dfa::default();
        let mut queue = VecDeque::new();
        index.insert(start.clone(), 0);
        dfa.accepting.push(start.iter().any(|&s| self.accepting[s]));
        dfa.transitions.push(BTreeMap::new());
        queue.push_back(start);
        while let Some(set) = queue.pop_front() {
            let from = index[&set];
            for sym in self.symbols_from(&set) {
                let next = self.step(&set, &sym);
                let to = match index.get(&next) {
                    Some(&i) => i,
                    None => {
                        let i = dfa.accepting.len();
                        dfa.accepting.push(next.iter().any(|&s| self.accepting[s]));
                        dfa.transitions.push(BTreeMap::new());
                        index.insert(next.clone(), i);
                        queue.push_back(next);
                        i
                    }
                };
                dfa.transitions[from].insert(sym, to);
            }
        }
        dfa
    }
}

/// Deterministic automaton; missing transitions lead to an implicit rejecting sink.
#[derive(Clone, Debug, Default)]
pub struct Dfa {
    pub accepting: Vec<bool>,
    pub transitions: Vec<BTreeMap<String, usize>>,
}

impl Dfa {
    pub fn len(&self) -> usize {
        self.accepting.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepting.is_empty()
    }

    pub fn accepts<S: AsRef<str>>(&self, word: &[S]) -> bool {
        let mut q = 0;
        for sym in word {
            match self.transitions[q].get(sym.as_ref()) {
                Some(&next) => q = next,
                None => return false,
            }
        }
        self.accepting[q]
    }
}

/// Shortest word accepted by `sub` and rejected by `sup`, if any.
///
/// `sup` is determinized and complemented on the fly; the product is explored
/// breadth-first with symbols in sorted order, so the counterexample is
/// deterministic.
pub fn inclusion_counterexample(sub: &TraceAutomaton, sup: &TraceAutomaton) -> Option<Vec<String>> {
    let sup = sup.determinize();
    let start_sub = sub.closure([sub.initial]);
    // `None` on the right is the rejecting sink
    type Node = (BTreeSet<usize>, Option<usize>);
    let start: Node = (start_sub, Some(0));
    let mut parent: HashMap<Node, Option<(Node, String)>> = HashMap::new();
    parent.insert(start.clone(), None);
    let mut queue = VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        let (left, right) = &node;
        let left_accepts = left.iter().any(|&s| sub.accepting[s]);
        let right_accepts = right.is_some_and(|q| sup.accepting[q]);
        if left_accepts && !right_accepts {
            let mut word = Vec::new();
            let mut cur = node.clone();
            while let Some(Some((prev, sym))) = parent.get(&cur) {
                word.push(sym.clone());
                cur = prev.clone();
            }
            word.reverse();
            return Some(word);
        }
        for sym in sub.symbols_from(left) {
            let next_left = sub.step(left, &sym);
            let next_right = right.and_then(|q| sup.transitions[q].get(&sym).copied());
            let next = (next_left, next_right);
            if !parent.contains_key(&next) {
                parent.insert(next.clone(), Some((node.clone(), sym)));
                queue.push_back(next);
            }
        }
    }
    None
}
