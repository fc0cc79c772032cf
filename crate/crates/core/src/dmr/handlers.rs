use super::{fill_children, fill_frames_and_relations, Accumulator, FillContext, Filled, Handler};
use crate::graph::{Attribute, FrameId, RelationKind};
use crate::sept::SeptNode;

type HandlerResult = Result<Filled, String>;

const SPATIAL_PREPOSITIONS: [&str; 11] = ["in", "at", "on", "before", "near", "behind", "under", "into", "to", "from", "inside"];

pub(super) fn run(h: Handler, ctx: &FillContext<'_>, node: &SeptNode, acc: &mut Accumulator) -> HandlerResult {
    match h {
        Handler::Clause => clause(ctx, node, acc),
        Handler::Connective => connective(ctx, node, acc),
        Handler::NounPhrase => noun_phrase(ctx, node, acc),
        Handler::VerbPhrase => verb_phrase(ctx, node, acc),
        Handler::PrepPhrase => prep_phrase(ctx, node, acc),
        Handler::Pronoun => pronoun(ctx, node, acc).map(Filled::head),
    }
}

fn children<'a>(ctx: &FillContext<'a>, node: &'a SeptNode) -> Vec<&'a SeptNode> {
    ctx.sept.children(node).collect()
}

fn is_verb(n: &SeptNode) -> bool {
    n.is_terminal() && (n.label.starts_with("VB") || n.label == "MD")
}

fn actions(acc: &Accumulator, ids: &[FrameId]) -> Vec<FrameId> {
    ids.iter()
        .filter(|id| acc.graph.frames.get(*id).is_some_and(|f| f.is_action()))
        .cloned()
        .collect()
}

fn entities(acc: &Accumulator, ids: &[FrameId]) -> Vec<FrameId> {
    ids.iter()
        .filter(|id| acc.graph.frames.get(*id).is_some_and(|f| f.is_entity()))
        .cloned()
        .collect()
}

fn attach(acc: &mut Accumulator, extras: &[(RelationKind, FrameId)], to: &[FrameId]) {
    for (kind, e) in extras {
        for a in to {
            acc.relate(*kind, e, a);
        }
    }
}

/// `S -> NP VP`: the subject becomes the agent of every head action.
fn clause(ctx: &FillContext<'_>, node: &SeptNode, acc: &mut Accumulator) -> HandlerResult {
    let kids = children(ctx, node);
    let Some(first_vp) = kids.iter().position(|c| c.label == "VP") else {
        return Ok(fill_children(ctx, node, acc));
    };
    let subject = kids[..first_vp].iter().position(|c| c.label == "NP");
    let mut subj = Filled::default();
    let mut heads = Vec::new();
    let mut extras = Vec::new();
    for (i, c) in kids.iter().enumerate() {
        let filled = fill_frames_and_relations(ctx, c, acc);
        if Some(i) == subject {
            subj = filled;
        } else if c.label == "VP" {
            heads.extend(actions(acc, &filled.heads));
            extras.extend(filled.extras);
        } else {
            extras.extend(filled.extras);
        }
    }
    for e in entities(acc, &subj.heads) {
        for a in &heads {
            acc.relate(RelationKind::Agent, &e, a);
        }
    }
    attach(acc, &subj.extras, &heads);
    attach(acc, &extras, &heads);
    Ok(Filled { heads, extras: vec![] })
}

/// `S -> DS because DS` and friends: one domain or temporal relation from
/// the first clause's action to the second's.
fn connective(ctx: &FillContext<'_>, node: &SeptNode, acc: &mut Accumulator) -> HandlerResult {
    let kids = children(ctx, node);
    let first = kids.iter().position(|c| c.is_terminal()).ok_or("no connective word")?;
    let last = kids.iter().rposition(|c| c.is_terminal()).unwrap();
    let word = kids[first..=last]
        .iter()
        .filter_map(|c| c.token.as_deref())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ");
    let kind = ctx.rules.connective(&word).ok_or_else(|| format!("unknown connective `{word}`"))?;
    if first == 0 || last + 1 == kids.len() {
        return Err(format!("connective `{word}` lacks a clause on one side"));
    }
    let mut left = Filled::default();
    for c in &kids[..first] {
        left.extend(fill_frames_and_relations(ctx, c, acc));
    }
    let mut right = Filled::default();
    for c in &kids[last + 1..] {
        right.extend(fill_frames_and_relations(ctx, c, acc));
    }
    let la = actions(acc, &left.heads);
    let ra = actions(acc, &right.heads);
    let (Some(a), Some(b)) = (la.first(), ra.first()) else {
        return Err(format!("connective `{word}` needs an action on both sides"));
    };
    acc.relate(kind, a, b);
    let mut out = left;
    out.extend(right);
    Ok(out)
}

fn attribute_kind(ctx: &FillContext<'_>, n: &SeptNode) -> String {
    let from_ontology = n
        .sense
        .as_deref()
        .and_then(|s| ctx.ontology.concept_of_sense(s))
        .and_then(|c| ctx.ontology.attribute_kind(&c.id));
    match from_ontology {
        Some(k) => k.to_string(),
        None if n.label.starts_with("JJ") => "quality".into(),
        None if n.label == "CD" => "quantity".into(),
        None => "modifier".into(),
    }
}

fn modifier_attributes(ctx: &FillContext<'_>, n: &SeptNode, out: &mut Vec<Attribute>) {
    if n.is_terminal() {
        let skip = matches!(n.label.as_str(), "DT" | "PRP$" | "POS" | "CC" | "," | "WDT" | "PDT");
        if !skip {
            out.push(Attribute {
                kind: attribute_kind(ctx, n),
                value: n.token.clone().unwrap_or_default(),
            });
        }
    } else if matches!(n.label.as_str(), "ADJP" | "QP") {
        for t in ctx.sept.yield_of(n) {
            modifier_attributes(ctx, t, out);
        }
    }
}

/// Noun phrases: the last noun (or pronoun, or number) is the head and the
/// other pre-modifiers become attributes. `NP -> NP PP` keeps the inner
/// head and hands the PP object up as an extra.
fn noun_phrase(ctx: &FillContext<'_>, node: &SeptNode, acc: &mut Accumulator) -> HandlerResult {
    let kids = children(ctx, node);
    let head = kids
        .iter()
        .rposition(|c| c.is_terminal() && c.is_noun_family() && c.label != "PRP$")
        .or_else(|| kids.iter().rposition(|c| c.is_terminal() && c.label == "CD"));
    let mut out = Filled::default();
    match head {
        Some(h) => {
            let head = kids[h];
            let id = if head.label.starts_with("PRP") {
                pronoun(ctx, head, acc)?
            } else {
                let mut attrs = Vec::new();
                for (i, c) in kids.iter().enumerate() {
                    if i != h && (i < h || !c.is_terminal()) {
                        modifier_attributes(ctx, c, &mut attrs);
                    }
                }
                let coord = ctx.doc.coord_of(&head.id).ok_or("head noun has no coordinate")?;
                acc.entity(ctx.ontology, coord, head, attrs)
            };
            out.heads.push(id);
            for c in kids.iter().filter(|c| !c.is_terminal() && !matches!(c.label.as_str(), "ADJP" | "QP")) {
                let f = fill_frames_and_relations(ctx, c, acc);
                out.extras.extend(f.extras);
            }
        }
        None => {
            let nested: Vec<&&SeptNode> = kids.iter().filter(|c| c.label == "NP").collect();
            if nested.is_empty() {
                return Err("noun phrase without a head".into());
            }
            for c in &kids {
                if c.is_terminal() {
                    continue;
                }
                let f = fill_frames_and_relations(ctx, c, acc);
                if c.label == "NP" {
                    out.heads.extend(f.heads);
                }
                out.extras.extend(f.extras);
            }
        }
    }
    Ok(out)
}

/// A pronoun links to the frame of the noun it refers to. When that noun has
/// no frame yet, the frame is created from the noun itself.
fn pronoun(ctx: &FillContext<'_>, node: &SeptNode, acc: &mut Accumulator) -> Result<FrameId, String> {
    let own = ctx.doc.coord_of(&node.id).ok_or("pronoun has no coordinate")?;
    let Some(target) = ctx.doc.resolve_referent_coord(node) else {
        return Ok(acc.entity(ctx.ontology, own, node, vec![]));
    };
    let id = match acc.frame_at(target).cloned() {
        Some(id) => id,
        None => {
            let noun = ctx.doc.terminal(target).ok_or("referent target vanished")?;
            acc.entity(ctx.ontology, target, noun, vec![])
        }
    };
    acc.register(own, &id);
    Ok(id)
}

fn role_for(ctx: &FillContext<'_>, acc: &Accumulator, prep: &str, object: &FrameId) -> RelationKind {
    let frame = &acc.graph.frames[object];
    let kind = frame.concept.as_deref().and_then(|c| ctx.ontology.attribute_kind(c));
    let is_year = |s: &str| s.len() == 4 && s.bytes().all(|b| b.is_ascii_digit());
    if kind == Some("time") || is_year(&frame.surface) {
        return RelationKind::Time;
    }
    if kind == Some("place") {
        return RelationKind::Location;
    }
    match prep {
        "with" | "by" => RelationKind::Instrument,
        "of" => RelationKind::Possession,
        p if SPATIAL_PREPOSITIONS.contains(&p) => RelationKind::Location,
        _ => RelationKind::Theme,
    }
}

/// `PP -> IN NP`: the object entity is handed up as an extra under the role
/// picked from its concept and the preposition.
fn prep_phrase(ctx: &FillContext<'_>, node: &SeptNode, acc: &mut Accumulator) -> HandlerResult {
    let kids = children(ctx, node);
    let prep = kids
        .iter()
        .find(|c| c.is_terminal() && matches!(c.label.as_str(), "IN" | "TO"))
        .and_then(|c| c.token.as_deref())
        .map(str::to_lowercase);
    let mut out = Filled::default();
    for c in kids.iter().filter(|c| !c.is_terminal()) {
        let f = fill_frames_and_relations(ctx, c, acc);
        if c.label == "NP" {
            if let Some(p) = &prep {
                for e in entities(acc, &f.heads) {
                    let role = role_for(ctx, acc, p, &e);
                    out.extras.push((role, e));
                }
            }
        } else {
            out.heads.extend(f.heads);
        }
        out.extras.extend(f.extras);
    }
    Ok(out)
}

/// Verb phrases: the last verb is the head unless a nested VP carries it.
/// Object NPs become themes; PP objects attach under their own roles. A
/// copula with an adjective complement keeps the adjective as qualifier.
fn verb_phrase(ctx: &FillContext<'_>, node: &SeptNode, acc: &mut Accumulator) -> HandlerResult {
    let kids = children(ctx, node);
    let verb = kids.iter().rposition(|c| is_verb(c));
    let has_nested = kids.iter().any(|c| c.label == "VP");
    let mut heads = Vec::new();
    let mut themes = Vec::new();
    let mut extras = Vec::new();
    let mut linked = Vec::new();

    let mut action_at = None;
    if !has_nested {
        let v = verb.ok_or("verb phrase without a verb")?;
        let head = kids[v];
        let is_copula = head.base_form().is_some_and(|b| b.eq_ignore_ascii_case("be"));
        let qualifier = is_copula
            .then(|| {
                let adj: Vec<String> = kids
                    .iter()
                    .filter(|c| c.label == "ADJP" || (c.is_terminal() && c.label.starts_with("JJ")))
                    .flat_map(|c| ctx.sept.yield_of(c))
                    .filter_map(|t| t.token.clone())
                    .collect();
                (!adj.is_empty()).then(|| adj.join(" "))
            })
            .flatten();
        let coord = ctx.doc.coord_of(&head.id).ok_or("verb has no coordinate")?;
        heads.push(acc.action(ctx.ontology, coord, head, qualifier));
        action_at = Some(v);
    }

    for (i, c) in kids.iter().enumerate() {
        if Some(i) == action_at || c.is_terminal() || c.label == "ADJP" {
            continue;
        }
        let f = fill_frames_and_relations(ctx, c, acc);
        match c.label.as_str() {
            "VP" => {
                let inner = actions(acc, &f.heads);
                linked.push(inner.clone());
                heads.extend(inner);
                extras.extend(f.extras);
            }
            "NP" => {
                themes.extend(entities(acc, &f.heads));
                extras.extend(f.extras);
            }
            _ => extras.extend(f.extras),
        }
    }
    if heads.is_empty() {
        return Err("verb phrase yields no action".into());
    }
    // Coordinated VPs without a shared verb: chain them as a conjunction.
    if verb.is_none() {
        for pair in linked.windows(2) {
            if let (Some(a), Some(b)) = (pair[0].first(), pair[1].first()) {
                acc.relate(RelationKind::Conjunction, a, b);
            }
        }
    }
    for e in &themes {
        for a in &heads {
            acc.relate(RelationKind::Theme, e, a);
        }
    }
    attach(acc, &extras, &heads);
    Ok(Filled { heads, extras: vec![] })
}
