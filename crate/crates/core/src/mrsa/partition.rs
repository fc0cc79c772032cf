use serde::{Deserialize, Serialize};

use crate::graph::FrameId;
use crate::ontology::{Ontology, INFINITE_DISTANCE};

/// Label used for a group whose members span different ontology roots.
pub const SUPER_ROOT_LABEL: &str = "All Topics";

/// Representative of a group: an ontology concept, the virtual super-root,
/// or nothing for frames without a concept.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Representative {
    SuperRoot,
    Concept(String),
    None,
}

impl Representative {
    fn sort_key(&self) -> &str {
        match self {
            Representative::SuperRoot | Representative::None => "",
            Representative::Concept(c) => c,
        }
    }

    pub fn concept(&self) -> Option<&str> {
        match self {
            Representative::Concept(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptGroup {
    pub representative: Representative,
    /// Sorted member frame ids.
    pub members: Vec<FrameId>,
}

impl ConceptGroup {
    pub fn label(&self, o: &Ontology) -> Option<String> {
        match &self.representative {
            Representative::SuperRoot => Some(SUPER_ROOT_LABEL.to_string()),
            Representative::Concept(c) => o.concept(c).map(|c| c.name.clone()),
            Representative::None => None,
        }
    }
}

fn rep_distance(o: &Ontology, a: &Representative, b: &Representative) -> u32 {
    use Representative::*;
    match (a, b) {
        (None, _) | (_, None) => INFINITE_DISTANCE,
        (SuperRoot, SuperRoot) => 0,
        (SuperRoot, Concept(c)) | (Concept(c), SuperRoot) => {
            if !o.has_super_root() {
                return INFINITE_DISTANCE;
            }
            o.depth(c).map_or(INFINITE_DISTANCE, |d| d + 1)
        }
        (Concept(x), Concept(y)) => o.concept_distance(x, y).unwrap_or(INFINITE_DISTANCE),
    }
}

fn rep_lca(o: &Ontology, a: &Representative, b: &Representative) -> Representative {
    use Representative::*;
    match (a, b) {
        (Concept(x), Concept(y)) => match o.lowest_common_ancestor(x, y) {
            Ok(Some(c)) => Concept(c.id.clone()),
            _ => SuperRoot,
        },
        _ => SuperRoot,
    }
}

/// Merge order: distance, representative ids, first member ids.
type MergeKey<'a> = (u32, &'a str, &'a str, &'a FrameId, &'a FrameId);

/// Agglomerative grouping of frames by concept.
///
/// Frames sharing a concept start in one group; the two groups whose
/// representatives are closest in the ontology then merge, repeatedly,
/// until at most `g_th` groups remain or no pair is at finite distance.
/// Ties go to the lexicographically smallest representative pair, then to
/// the smallest member ids. Frames without a concept stay alone.
pub fn concept_partition(frames: &[(FrameId, Option<String>)], o: &Ontology, g_th: usize) -> Vec<ConceptGroup> {
    let mut groups: Vec<ConceptGroup> = Vec::new();
    for (id, concept) in frames {
        let known = concept.as_ref().filter(|c| o.concept(c).is_some());
        match known {
            Some(c) => {
                let rep = Representative::Concept(c.clone());
                match groups.iter_mut().find(|g| g.representative == rep) {
                    Some(g) => g.members.push(id.clone()),
                    None => groups.push(ConceptGroup {
                        representative: rep,
                        members: vec![id.clone()],
                    }),
                }
            }
            None => groups.push(ConceptGroup {
                representative: Representative::None,
                members: vec![id.clone()],
            }),
        }
    }
    for g in &mut groups {
        g.members.sort();
    }

    while groups.len() > g_th.max(1) {
        let mut best: Option<(MergeKey<'_>, usize, usize)> = None;
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                let (a, b) = (&groups[i], &groups[j]);
                let d = rep_distance(o, &a.representative, &b.representative);
                if d == INFINITE_DISTANCE {
                    continue;
                }
                let (ka, kb) = (a.representative.sort_key(), b.representative.sort_key());
                let (ma, mb) = (&a.members[0], &b.members[0]);
                let key = (d, ka.min(kb), ka.max(kb), ma.min(mb), ma.max(mb));
                if best.as_ref().is_none_or(|(k, _, _)| key < *k) {
                    best = Some((key, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        let b = groups.remove(j);
        let a = &mut groups[i];
        a.representative = rep_lca(o, &a.representative, &b.representative);
        a.members.extend(b.members);
        a.members.sort();
    }
    groups.sort_by(|a, b| a.members[0].cmp(&b.members[0]));
    groups
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ontology::tests::fixture_ontology;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    /// Brute-force agglomeration: distances recomputed from root paths for
    /// every candidate pair on every round.
    pub(crate) fn oracle_partition(frames: &[(FrameId, Option<String>)], o: &Ontology, g_th: usize) -> Vec<(Option<String>, Vec<FrameId>)> {
        // None = concept-less; Some("") = super-root.
        let path = |c: &str| -> Vec<String> { o.path_to_root(c).unwrap().iter().map(|x| x.id.clone()).collect() };
        let dist = |a: &Option<String>, b: &Option<String>| -> Option<usize> {
            let (a, b) = (a.as_ref()?, b.as_ref()?);
            match (a.is_empty(), b.is_empty()) {
                (true, true) => Some(0),
                (true, false) => Some(path(b).len()),
                (false, true) => Some(path(a).len()),
                (false, false) => {
                    let (pa, pb) = (path(a), path(b));
                    match pa.iter().position(|x| pb.contains(x)) {
                        Some(i) => Some(i + pb.iter().position(|x| *x == pa[i]).unwrap()),
                        None => Some(pa.len() + pb.len()),
                    }
                }
            }
        };
        let lca = |a: &str, b: &str| -> String {
            if a.is_empty() || b.is_empty() {
                return String::new();
            }
            let pb = path(b);
            path(a).into_iter().find(|x| pb.contains(x)).unwrap_or_default()
        };
        let mut groups: Vec<(Option<String>, Vec<FrameId>)> = Vec::new();
        for (id, c) in frames {
            match c {
                Some(c) if o.concept(c).is_some() => {
                    if let Some(g) = groups.iter_mut().find(|g| g.0.as_deref() == Some(c)) {
                        g.1.push(id.clone());
                    } else {
                        groups.push((Some(c.clone()), vec![id.clone()]));
                    }
                }
                _ => groups.push((None, vec![id.clone()])),
            }
        }
        loop {
            if groups.len() <= g_th {
                break;
            }
            let mut cands = Vec::new();
            for i in 0..groups.len() {
                for j in 0..groups.len() {
                    if i >= j {
                        continue;
                    }
                    if let Some(d) = dist(&groups[i].0, &groups[j].0) {
                        let ka = groups[i].0.clone().unwrap();
                        let kb = groups[j].0.clone().unwrap();
                        let ma = groups[i].1.iter().min().unwrap().clone();
                        let mb = groups[j].1.iter().min().unwrap().clone();
                        let (k1, k2) = if ka <= kb { (ka, kb) } else { (kb, ka) };
                        let (m1, m2) = if ma <= mb { (ma, mb) } else { (mb, ma) };
                        cands.push(((d, k1, k2, m1, m2), i, j));
                    }
                }
            }
            cands.sort();
            let Some((_, i, j)) = cands.into_iter().next() else { break };
            let b = groups.remove(j);
            let a = &mut groups[i];
            a.0 = Some(lca(a.0.as_ref().unwrap(), b.0.as_ref().unwrap()));
            a.1.extend(b.1);
        }
        let mut out: Vec<(Option<String>, Vec<FrameId>)> = groups
            .into_iter()
            .map(|(c, mut m)| {
                m.sort();
                (c, m)
            })
            .collect();
        out.sort_by(|a, b| a.1[0].cmp(&b.1[0]));
        out
    }

    pub(crate) fn as_oracle_shape(groups: &[ConceptGroup]) -> Vec<(Option<String>, Vec<FrameId>)> {
        groups
            .iter()
            .map(|g| {
                let rep = match &g.representative {
                    Representative::SuperRoot => Some(String::new()),
                    Representative::Concept(c) => Some(c.clone()),
                    Representative::None => None,
                };
                (rep, g.members.clone())
            })
            .collect()
    }

    fn fr(id: &str, c: &str) -> (FrameId, Option<String>) {
        (id.into(), Some(c.into()))
    }

    #[test]
    fn work_and_life_actions_split_in_two() {
        let o = fixture_ontology();
        let frames = [
            fr("earn", "income"),
            fr("wrote", "authorship"),
            fr("is", "fame"),
            fr("lived", "residence"),
            fr("born", "birth"),
            fr("had", "offspring"),
        ];
        let groups = concept_partition(&frames, &o, 2);
        assert_eq!(groups.len(), 2);
        let labels: BTreeSet<String> = groups.iter().map(|g| g.label(&o).unwrap()).collect();
        assert_eq!(labels, ["Personal Life", "Work"].map(String::from).into());
        let work = groups.iter().find(|g| g.label(&o).unwrap() == "Work").unwrap();
        assert_eq!(work.members, ["earn", "is", "wrote"].map(FrameId::from));
    }

    #[test]
    fn few_singletons_are_left_alone() {
        let o = fixture_ontology();
        let frames = [fr("a", "income"), fr("b", "birth"), fr("c", "war")];
        let groups = concept_partition(&frames, &o, 6);
        assert_eq!(groups.len(), 3);
        assert!(groups.iter().all(|g| g.members.len() == 1));
    }

    #[test]
    fn conceptless_frames_stay_singletons() {
        let o = fixture_ontology();
        let frames = [
            (FrameId::from("x"), None),
            (FrameId::from("y"), None),
            fr("a", "income"),
            fr("b", "employment"),
        ];
        let groups = concept_partition(&frames, &o, 1);
        assert_eq!(groups.len(), 3);
        let merged = groups.iter().find(|g| g.members.len() == 2).unwrap();
        assert_eq!(merged.representative, Representative::Concept("career".into()));
    }

    #[test]
    fn cross_root_merge_uses_super_root() {
        let o = fixture_ontology();
        let frames = [fr("a", "income"), fr("b", "birth")];
        let groups = concept_partition(&frames, &o, 1);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].representative, Representative::SuperRoot);
        assert_eq!(groups[0].label(&o).unwrap(), SUPER_ROOT_LABEL);
        let without = fixture_ontology().with_super_root(false);
        assert_eq!(concept_partition(&frames, &without, 1).len(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_brute_force(picks in prop::collection::vec(any::<prop::sample::Index>(), 1..14), g_th in 1usize..7) {
            let o = fixture_ontology();
            let concepts: Vec<&str> = o.concepts().iter().map(|c| c.id.as_str()).collect();
            let frames: Vec<(FrameId, Option<String>)> = picks
                .iter()
                .enumerate()
                .map(|(i, p)| (FrameId(format!("f{i:02}")), Some(concepts[p.index(concepts.len())].to_string())))
                .collect();
            let got = concept_partition(&frames, &o, g_th);
            prop_assert!(got.len() <= g_th.max(1));
            prop_assert_eq!(as_oracle_shape(&got), oracle_partition(&frames, &o, g_th));
        }
    }
}
