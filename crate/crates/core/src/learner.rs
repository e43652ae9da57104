//! Learning an activity schema from one ground experience: generalization,
//! abstraction, feature extraction, loop rolling and scope inference.

use std::collections::{BTreeSet, HashMap};

use log::debug;

use crate::loops::{detect_and_roll, RolledPlan};
use crate::model::{
    AbstractionHierarchy, ActivitySchema, Atom, EnrichedAbstractOperator, Experience, KeyProperty, ModelError,
    Substitution, Temporal, Term,
};
use crate::scope::{canonical_abstraction, struct_of_keyprops};

/// Replaces every constant by a fresh variable `?v1, ?v2, ...`, numbered by
/// first occurrence over the plan, then the task, then the key-properties.
/// Returns the generalized experience and the substitution used.
pub fn generalize_with_map(e: &Experience) -> (Experience, Vec<(String, Term)>) {
    let mut sub: Substitution = HashMap::new();
    let mut order = Vec::new();
    let atoms = e.plan.iter().chain(std::iter::once(&e.task)).chain(e.key_properties.iter().map(|k| &k.atom));
    for a in atoms {
        for t in &a.args {
            if let Term::Const(c) = t {
                if !sub.contains_key(t) {
                    let v = Term::Var(format!("v{}", order.len() + 1));
                    sub.insert(t.clone(), v.clone());
                    order.push((c.clone(), v));
                }
            }
        }
    }
    let g = Experience {
        name: e.name.clone(),
        domain: e.domain.clone(),
        task: e.task.apply(&sub),
        key_properties: e.key_properties.iter().map(|k| k.apply(&sub)).collect(),
        plan: e.plan.iter().map(|a| a.apply(&sub)).collect(),
        objects: None,
    };
    (g, order)
}

pub fn generalize(e: &Experience) -> Experience {
    generalize_with_map(e).0
}

/// Maps key-properties and plan through the hierarchy. Nil-mapped entries
/// disappear; key-properties that collapse onto the same abstract atom are
/// kept once, plan actions are not merged.
pub fn abstract_experience(e: &Experience, h: &AbstractionHierarchy) -> Result<Experience, ModelError> {
    let mut seen = BTreeSet::new();
    let mut keys = Vec::new();
    for k in &e.key_properties {
        if let Some(a) = h.parent_predicate(&k.atom)? {
            let kp = KeyProperty::new(k.temporal, a);
            if seen.insert(kp.clone()) {
                keys.push(kp);
            }
        }
    }
    let mut plan = Vec::new();
    for a in &e.plan {
        if let Some(p) = h.parent_operator(a)? {
            plan.push(p);
        }
    }
    let objects = e.objects.as_ref().map(|_| {
        let mut seen = BTreeSet::new();
        let mut objs = Vec::new();
        for a in std::iter::once(&e.task).chain(keys.iter().map(|k| &k.atom)).chain(plan.iter()) {
            for t in &a.args {
                if let Term::Const(c) = t {
                    if seen.insert(c.clone()) {
                        objs.push(c.clone());
                    }
                }
            }
        }
        objs
    });
    Ok(Experience {
        name: e.name.clone(),
        domain: h.abstract_domain.clone().or_else(|| e.domain.clone()),
        task: e.task.clone(),
        key_properties: keys,
        plan,
        objects,
    })
}

/// A key-property is a feature of an action when it shares an argument with
/// the action and an argument with the task.
pub fn is_feature(k: &KeyProperty, action: &Atom, task: &Atom) -> bool {
    k.atom.args.iter().any(|t| action.mentions(t)) && k.atom.args.iter().any(|t| task.mentions(t))
}

/// An `end` key-property over the action's own arguments only.
pub fn is_outcome(k: &KeyProperty, action: &Atom) -> bool {
    k.temporal == Temporal::End && !k.atom.args.is_empty() && k.atom.args.iter().all(|t| action.mentions(t))
}

/// Pairs every abstract action with its features, outcomes and the
/// canonical class of each of its arguments.
pub fn extract_features(e: &Experience) -> Vec<EnrichedAbstractOperator> {
    let structure = struct_of_keyprops(&e.key_properties, &e.task.args);
    let classes = structure.classes();
    e.plan
        .iter()
        .map(|action| {
            let types = action
                .args
                .iter()
                .map(|t| match structure.index_of(&t.to_string()) {
                    Some(i) => classes[i].clone(),
                    None => Default::default(),
                })
                .collect();
            EnrichedAbstractOperator {
                head: action.clone(),
                types,
                features: e.key_properties.iter().filter(|k| is_feature(k, action, &e.task)).cloned().collect(),
                outcomes: e.key_properties.iter().filter(|k| is_outcome(k, action)).cloned().collect(),
            }
        })
        .collect()
}

/// Intermediate products of learning, exposed for inspection.
#[derive(Clone, Debug)]
pub struct LearnTrace {
    pub generalized: Experience,
    pub abstracted: Experience,
    pub enriched: Vec<EnrichedAbstractOperator>,
    pub rolled: RolledPlan,
}

pub fn learn_schema(e: &Experience, h: &AbstractionHierarchy) -> Result<ActivitySchema, ModelError> {
    learn_schema_traced(e, h).map(|(s, _)| s)
}

pub fn learn_schema_traced(e: &Experience, h: &AbstractionHierarchy) -> Result<(ActivitySchema, LearnTrace), ModelError> {
    e.validate()?;
    let generalized = generalize(e);
    let abstracted = abstract_experience(&generalized, h)?;
    let enriched = extract_features(&abstracted);
    let rolled = detect_and_roll(&enriched, &abstracted.task);
    let scope = canonical_abstraction(&struct_of_keyprops(&abstracted.key_properties, &abstracted.task.args));
    debug!(
        "learned {}: {} abstract actions, {} loops, scope {} nodes ({} summary)",
        e.name,
        enriched.len(),
        rolled.iterations.iter().filter(|i| i.is_some()).count(),
        scope.len(),
        scope.summary_count()
    );
    let schema = ActivitySchema {
        name: e.name.clone(),
        domain: h.abstract_domain.clone(),
        task: abstracted.task.clone(),
        scope,
        plan: rolled.plan.clone(),
    };
    Ok((schema, LearnTrace { generalized, abstracted, enriched, rolled }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MapEntry;

    fn a(s: &str) -> Atom {
        let parts: Vec<&str> = s.split_whitespace().collect();
        Atom::from_tokens(parts[0], &parts[1..])
    }

    fn small() -> Experience {
        Experience {
            name: "e".into(),
            domain: None,
            task: a("stack t1 p1"),
            key_properties: vec![
                KeyProperty::new(Temporal::Init, a("ontable b1 t1")),
                KeyProperty::new(Temporal::Static, a("pallet x1")),
            ],
            plan: vec![a("pickup crane1 b1 t1 l1")],
            objects: Some(vec!["t1".into(), "p1".into(), "b1".into(), "crane1".into(), "l1".into(), "x1".into()]),
        }
    }

    #[test]
    fn generalization_order() {
        let (g, map) = generalize_with_map(&small());
        assert_eq!(g.plan[0].to_string(), "(pickup ?v1 ?v2 ?v3 ?v4)");
        assert_eq!(g.key_properties[0].to_string(), "(init (ontable ?v2 ?v3))");
        assert_eq!(g.task.to_string(), "(stack ?v3 ?v5)");
        assert_eq!(g.key_properties[1].to_string(), "(static (pallet ?v6))");
        assert_eq!(map.len(), 6);
        let inverse: Substitution = map.iter().map(|(c, v)| (v.clone(), Term::constant(c))).collect();
        assert_eq!(g.plan[0].apply(&inverse), small().plan[0]);
    }

    #[test]
    fn abstraction_drops_nil() {
        let h = AbstractionHierarchy {
            name: "h".into(),
            concrete_domain: None,
            abstract_domain: None,
            predicates: vec![
                MapEntry::new(a("ontable ?x ?t"), Some(a("ontable ?x ?t"))).unwrap(),
                MapEntry::new(a("pallet ?x"), None).unwrap(),
            ],
            operators: vec![MapEntry::new(a("pickup ?h ?x ?t ?l"), Some(a("pick ?x ?t"))).unwrap()],
        };
        let g = generalize(&small());
        let ab = abstract_experience(&g, &h).unwrap();
        assert_eq!(ab.plan[0].to_string(), "(pick ?v2 ?v3)");
        assert_eq!(ab.key_properties.len(), 1);
        let feats = extract_features(&ab);
        assert_eq!(feats[0].features.len(), 1);
    }
}
