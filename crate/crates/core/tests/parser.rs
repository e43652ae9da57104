mod common;

use common::*;
use ebpd::domains::{self, stacking_blocks};
use ebpd::parser::*;
use ebpd::planner::retrieve;

#[test]
fn bundled_files_round_trip() {
    let files = [
        (domains::STACK_DOMAIN, "domain"),
        (domains::STACK_ABSTRACT, "domain"),
        (domains::STACK_HIERARCHY, "hierarchy"),
        (domains::STACK_EXPERIENCE, "experience"),
        (domains::CAFE_DOMAIN, "domain"),
        (domains::CAFE_ABSTRACT, "domain"),
        (domains::CAFE_HIERARCHY, "hierarchy"),
        (domains::CAFE_PROBLEM, "problem"),
    ];
    for (text, kind) in files {
        let doc = parse_any(text).unwrap();
        assert_eq!(doc.kind(), kind);
        assert_eq!(parse_any(&doc.serialize()).unwrap(), doc);
    }
}

#[test]
fn learned_schemas_survive_serialization() {
    let b = stacking_blocks();
    let library = class_library(4);
    let reparsed: Vec<_> = library.iter().map(|s| parse_schema(&serialize_schema(s)).unwrap()).collect();
    assert_eq!(reparsed, library);
    let p = domains::gen_stack(3, 9, 9, 4).unwrap();
    assert_eq!(retrieve(&p, &reparsed, &b.hierarchy).unwrap(), vec![2]);
}

#[test]
fn errors_point_at_the_offending_line() {
    let text = "(define (problem p)\n  (:objects a b)\n  (:task (t a))\n  (:init (on a c)))\n";
    let e = parse_problem(text).unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::Undeclared);
    assert_eq!(e.span.line, 4);
    assert_eq!(&text[e.span.start..e.span.end], "(on a c)");
    assert!(e.to_string().starts_with("4:"));
}

#[test]
fn unbalanced_input_is_a_syntax_error() {
    for text in ["(define (domain d)", "(define (domain d)))", "(define (domain d) (:predicates (p ?x)"] {
        assert_eq!(parse_any(text).unwrap_err().kind, ParseErrorKind::Syntax, "{}", text);
    }
}

#[test]
fn during_is_not_a_temporal_symbol() {
    let text = "(define (experience e) (:objects a b) (:task (t a))\n (:key-properties (during (on a b))) (:plan))";
    let e = parse_any(text).unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::UnknownTemporal);
    assert_eq!(e.span.line, 2);
}

#[test]
fn arity_mismatch_in_operator_body() {
    let e = parse_domain("(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x ?y) :precondition (p ?x ?y)))")
        .unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::Arity);
}

#[test]
fn plans_must_be_ground() {
    let e = parse_plan("(pick b1 t1)\n(put ?b p1)\n").unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::NotGround);
    assert_eq!(e.span.line, 2);
    let exp = domains::stack_experience();
    assert_eq!(parse_plan(&serialize_plan(&exp.plan)).unwrap(), exp.plan);
}
