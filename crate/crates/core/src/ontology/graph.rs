use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::{has_path_connecting, tarjan_scc};
use petgraph::graph::{DiGraph, NodeIndex};

use super::vocab;
use super::{Iri, Ontology, Term};

/// Directed `rdfs:subClassOf` graph over named classes.
///
/// Nodes are the named classes of the signature; an edge `A -> B` exists iff
/// the ontology states `A rdfs:subClassOf B` with both ends named.
#[derive(Debug, Clone)]
pub struct ClassGraph {
    graph: DiGraph<Iri, ()>,
    index: BTreeMap<Iri, NodeIndex>,
}

impl ClassGraph {
    pub fn of(o: &Ontology) -> ClassGraph {
        let mut graph = DiGraph::new();
        let mut index = BTreeMap::new();
        for class in o.signature().classes {
            let node = graph.add_node(class.clone());
            index.insert(class, node);
        }
        let sub_class_of = vocab::iri(vocab::RDFS_SUBCLASS_OF);
        for t in o.triples().iter().filter(|t| t.predicate == sub_class_of) {
            if let (Term::Iri(sub), Term::Iri(sup)) = (&t.subject, &t.object) {
                if let (Some(&a), Some(&b)) = (index.get(sub), index.get(sup)) {
                    graph.update_edge(a, b, ());
                }
            }
        }
        ClassGraph { graph, index }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Iri> {
        self.index.keys()
    }

    pub fn edges(&self) -> BTreeSet<(Iri, Iri)> {
        self.graph
            .edge_indices()
            .filter_map(|e| self.graph.edge_endpoints(e))
            .map(|(a, b)| (self.graph[a].clone(), self.graph[b].clone()))
            .collect()
    }

    pub fn has_edge(&self, from: &Iri, to: &Iri) -> bool {
        match (self.index.get(from), self.index.get(to)) {
            (Some(&a), Some(&b)) => self.graph.contains_edge(a, b),
            _ => false,
        }
    }

    /// Reflexive-transitive reachability: `from ⊑* to`.
    pub fn reaches(&self, from: &Iri, to: &Iri) -> bool {
        if from == to {
            return true;
        }
        match (self.index.get(from), self.index.get(to)) {
            (Some(&a), Some(&b)) => has_path_connecting(&self.graph, a, b, None),
            _ => false,
        }
    }

    /// Classes involved in subclass cycles: strongly connected components
    /// with at least two members, and self-loops. Each cycle is sorted and
    /// the list is ordered by first member.
    pub fn cycles(&self) -> Vec<Vec<Iri>> {
        let mut out: Vec<Vec<Iri>> = tarjan_scc(&self.graph)
            .into_iter()
            .filter(|scc| scc.len() > 1 || self.graph.contains_edge(scc[0], scc[0]))
            .map(|scc| {
                let mut members: Vec<Iri> = scc.into_iter().map(|n| self.graph[n].clone()).collect();
                members.sort();
                members
            })
            .collect();
        out.sort();
        out
    }
}
