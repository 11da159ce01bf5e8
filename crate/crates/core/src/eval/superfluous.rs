use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ontology::{Iri, Ontology, TermKind, TermRef};

/// Superfluous terms of one kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindReport {
    pub superfluous: BTreeSet<Iri>,
    pub total: usize,
}

impl KindReport {
    /// `superfluous / total`, or `None` when the candidate has no term of
    /// this kind.
    pub fn rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.superfluous.len() as f64 / self.total as f64)
    }

    pub fn count(&self) -> usize {
        self.superfluous.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperfluousReport {
    pub classes: KindReport,
    pub object_properties: KindReport,
    pub data_properties: KindReport,
}

impl SuperfluousReport {
    pub fn kind(&self, kind: TermKind) -> &KindReport {
        match kind {
            TermKind::Class => &self.classes,
            TermKind::ObjectProperty => &self.object_properties,
            TermKind::DataProperty => &self.data_properties,
        }
    }

    pub fn is_clean(&self) -> bool {
        TermKind::ALL.iter().all(|k| self.kind(*k).superfluous.is_empty())
    }
}

/// Named classes and properties of `candidate` that no validation query
/// uses.
pub fn superfluous(candidate: &Ontology, used: &BTreeSet<TermRef>) -> SuperfluousReport {
    let sig = candidate.signature();
    let per_kind = |kind: TermKind| {
        let all = sig.terms(kind);
        KindReport {
            superfluous: all
                .iter()
                .filter(|i| !used.contains(&TermRef::new((*i).clone(), kind)))
                .cloned()
                .collect(),
            total: all.len(),
        }
    };
    SuperfluousReport {
        classes: per_kind(TermKind::Class),
        object_properties: per_kind(TermKind::ObjectProperty),
        data_properties: per_kind(TermKind::DataProperty),
    }
}
