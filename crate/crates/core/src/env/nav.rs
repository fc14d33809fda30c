//! Screen-level search over the world: the brute-force reachability oracle
//! and the shortest-path search the scripted reasoner plans with.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{pointer_action, EnvError, EnvState, GuiWorld, ScreenKey};
use crate::action::{Action, ActionKind, Platform};

/// Largest world (in screen-level states) the reachability oracle accepts.
pub const ORACLE_STATE_CAP: usize = 10_000;

pub fn reachable_states(world: &GuiWorld, from: &EnvState) -> Result<BTreeSet<ScreenKey>, EnvError> {
    reachable_states_with_cap(world, from, ORACLE_STATE_CAP)
}

/// Breadth-first closure over screen-level projections. PressBack contributes
/// the entries of `from`'s back stack (mobile only), which successive pops
/// reach in order.
pub fn reachable_states_with_cap(
    world: &GuiWorld,
    from: &EnvState,
    cap: usize,
) -> Result<BTreeSet<ScreenKey>, EnvError> {
    let states = world.screen_count();
    if states > cap {
        return Err(EnvError::OracleTooLarge { states, cap });
    }
    let start = from.screen_key();
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue: VecDeque<ScreenKey> = VecDeque::from([start]);
    // Only mobile has a back button.
    let stack: &[ScreenKey] = if world.platform == Platform::Mobile { &from.back_stack } else { &[] };
    for k in stack.iter().rev() {
        if seen.insert(k.clone()) {
            queue.push_back(k.clone());
        }
    }
    while let Some(key) = queue.pop_front() {
        for (_, next) in screen_edges(world, &key) {
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    Ok(seen)
}

/// Push-style navigation edges out of a screen, in a fixed order.
fn screen_edges(world: &GuiWorld, key: &ScreenKey) -> Vec<(Action, ScreenKey)> {
    let mut out = Vec::new();
    let Some(screen) = world.screen(key) else { return out };
    for el in screen.elements.iter().chain(world.taskbar()) {
        let dest = if let Some(app) = &el.launches {
            world.app(app).map(|a| a.entry_key())
        } else {
            el.target.as_ref().map(|t| ScreenKey { app: key.app.clone(), screen: t.clone() })
        };
        let Some(dest) = dest else { continue };
        let kind = if el.affords(ActionKind::Click) {
            ActionKind::Click
        } else if el.affords(ActionKind::LeftDouble) {
            ActionKind::LeftDouble
        } else {
            continue;
        };
        out.push((pointer_action(kind, el).expect("pointer kind"), dest));
    }
    if world.platform == Platform::Mobile {
        for app in &world.apps {
            out.push((Action::Launch { app: app.app_id.to_string() }, app.entry_key()));
        }
        if !key.is_home() {
            out.push((Action::PressHome, ScreenKey::home()));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    /// Reached from the start by `n` consecutive PressBack pops.
    Popped(usize),
    /// Reached after at least one push; identified by its screen alone.
    At(usize),
}

/// Shortest action sequences from one state to every reachable screen.
///
/// Once a path has pushed onto the back stack, PressBack only returns to a
/// screen already on the path, so optimal paths are a run of pops followed
/// by pushes. The search is exact under that observation.
#[derive(Debug, Clone)]
pub struct NavSearch {
    keys: Vec<ScreenKey>,
    /// node -> (parent, action)
    parents: HashMap<Node, (Option<Node>, Option<Action>)>,
    /// screen -> (distance, first node reaching it)
    best: HashMap<ScreenKey, (usize, Node)>,
    node_keys: HashMap<Node, ScreenKey>,
}

impl NavSearch {
    pub fn new(world: &GuiWorld, from: &EnvState) -> Self {
        let mut search = NavSearch {
            keys: Vec::new(),
            parents: HashMap::new(),
            best: HashMap::new(),
            node_keys: HashMap::new(),
        };
        let mut at_index: HashMap<ScreenKey, usize> = HashMap::new();
        let mut queue: VecDeque<(Node, usize)> = VecDeque::new();

        let start = Node::Popped(0);
        search.visit(start, from.screen_key(), None, None, 0);
        queue.push_back((start, 0));

        while let Some((node, dist)) = queue.pop_front() {
            let key = search.node_keys[&node].clone();
            if let Node::Popped(n) = node {
                if world.platform == Platform::Mobile && n < from.back_stack.len() {
                    let next = Node::Popped(n + 1);
                    let dest = from.back_stack[from.back_stack.len() - 1 - n].clone();
                    search.visit(next, dest, Some(node), Some(Action::PressBack), dist + 1);
                    queue.push_back((next, dist + 1));
                }
            }
            for (action, dest) in screen_edges(world, &key) {
                if at_index.contains_key(&dest) {
                    continue;
                }
                let idx = search.keys.len();
                search.keys.push(dest.clone());
                at_index.insert(dest.clone(), idx);
                let next = Node::At(idx);
                search.visit(next, dest, Some(node), Some(action), dist + 1);
                queue.push_back((next, dist + 1));
            }
        }
        search
    }

    fn visit(&mut self, node: Node, key: ScreenKey, parent: Option<Node>, action: Option<Action>, dist: usize) {
        self.parents.insert(node, (parent, action));
        self.node_keys.insert(node, key.clone());
        self.best.entry(key).or_insert((dist, node));
    }

    pub fn distance(&self, key: &ScreenKey) -> Option<usize> {
        self.best.get(key).map(|(d, _)| *d)
    }

    /// Every reachable screen with its distance.
    pub fn distances(&self) -> impl Iterator<Item = (&ScreenKey, usize)> {
        self.best.iter().map(|(k, (d, _))| (k, *d))
    }

    pub fn path_to(&self, key: &ScreenKey) -> Option<Vec<Action>> {
        let (_, mut node) = *self.best.get(key)?;
        let mut path = Vec::new();
        loop {
            let (parent, action) = &self.parents[&node];
            match (parent, action) {
                (Some(p), Some(a)) => {
                    path.push(a.clone());
                    node = *p;
                }
                _ => break,
            }
        }
        path.reverse();
        Some(path)
    }

    /// Closest members of `targets`, sorted, all at the same minimal distance.
    pub fn nearest<'a>(&self, targets: impl IntoIterator<Item = &'a ScreenKey>) -> (Option<usize>, Vec<ScreenKey>) {
        let mut best: Option<usize> = None;
        let mut out = Vec::new();
        for t in targets {
            if let Some(d) = self.distance(t) {
                match best {
                    Some(b) if d > b => {}
                    Some(b) if d == b => out.push(t.clone()),
                    _ => {
                        best = Some(d);
                        out.clear();
                        out.push(t.clone());
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        (best, out)
    }
}
