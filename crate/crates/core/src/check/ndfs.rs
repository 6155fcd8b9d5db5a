//! Nested depth-first search for accepting cycles (two-color scheme of
//! Courcoubetis, Vardi, Wolper and Yannakakis), iterative so deep graphs do
//! not exhaust the call stack.

/// A finite graph with labeled edges and accepting nodes.
#[derive(Debug, Clone)]
pub struct ExplicitGraph<E> {
    pub succ: Vec<Vec<(usize, E)>>,
    pub accepting: Vec<bool>,
    pub initial: Vec<usize>,
}

/// An accepting lasso: the edges from an initial node to the accepting
/// seed, then the edges of a nonempty cycle through the seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphLasso<E> {
    pub start: usize,
    pub prefix: Vec<(usize, E)>,
    pub cycle: Vec<(usize, E)>,
}

/// Finds an initial-reachable cycle through an accepting node.
pub fn find_accepting_lasso<E: Clone>(graph: &ExplicitGraph<E>) -> Option<GraphLasso<E>> {
    let n = graph.succ.len();
    let mut outer_seen = vec![false; n];
    let mut inner_seen = vec![false; n];
    for &root in &graph.initial {
        if outer_seen[root] {
            continue;
        }
        outer_seen[root] = true;
        // (node, next child index, edge label that led here)
        let mut stack: Vec<(usize, usize, Option<E>)> = vec![(root, 0, None)];
        while let Some(top) = stack.last_mut() {
            let (v, child) = (top.0, top.1);
            if let Some((w, label)) = graph.succ[v].get(child) {
                top.1 += 1;
                if !outer_seen[*w] {
                    outer_seen[*w] = true;
                    stack.push((*w, 0, Some(label.clone())));
                }
                continue;
            }
            // postorder
            if graph.accepting[v] {
                if let Some(cycle) = inner_search(graph, v, &mut inner_seen) {
                    let prefix = stack
                        .iter()
                        .skip(1)
                        .map(|(node, _, label)| (*node, label.clone().expect("non-root has an edge")))
                        .collect();
                    return Some(GraphLasso { start: root, prefix, cycle });
                }
            }
            stack.pop();
        }
    }
    None
}

fn inner_search<E: Clone>(graph: &ExplicitGraph<E>, seed: usize, seen: &mut [bool]) -> Option<Vec<(usize, E)>> {
    let mut stack: Vec<(usize, usize, Option<E>)> = vec![(seed, 0, None)];
    while let Some(top) = stack.last_mut() {
        let (v, child) = (top.0, top.1);
        if let Some((w, label)) = graph.succ[v].get(child) {
            top.1 += 1;
            if *w == seed {
                let mut cycle: Vec<(usize, E)> = stack
                    .iter()
                    .skip(1)
                    .map(|(node, _, l)| (*node, l.clone().expect("non-root has an edge")))
                    .collect();
                cycle.push((seed, label.clone()));
                return Some(cycle);
            }
            if !seen[*w] {
                seen[*w] = true;
                stack.push((*w, 0, Some(label.clone())));
            }
            continue;
        }
        stack.pop();
    }
    None
}
