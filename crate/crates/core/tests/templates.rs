use kbqa_core::logic::{enumerate_forms, mask_bits, render_form};
use kbqa_core::templater::{normalize_whitespace, parse_lexicon, realize_question};
use kbqa_core::{KnowledgeBase, LogicalForm, RelationLexicon, SubgraphPair};

const ARISE_STEMS: [&str; 14] = [
    "which of the following is an antonym of arise and meanwhile is not related to sit up ?",
    "which of the following is an antonym of arise and meanwhile is related to sit up ?",
    "which of the following is an antonym of arise ?",
    "which of the following is not an antonym of arise and meanwhile is related to sit up ?",
    "which of the following is an antonym of arise or is related to sit up, but not both of them ?",
    "which of the following  is related to sit up ?",
    "which of the following is an antonym of arise or is related to sit up ?",
    "which of the following is not an antonym of arise and is not related to sit up ?",
    "which of the following  is not related to sit up ?",
    "which of the following is an antonym of arise and is related to sit up, or neither of them ?",
    "which of the following is an antonym of arise or is not related to sit up ?",
    "which of the following is not an antonym of arise ?",
    "which of the following is not an antonym of arise or is not related to sit up ?",
    "which of the following is not an antonym of arise or is related to sit up ?",
];

fn only_chain(kb: &KnowledgeBase) -> SubgraphPair {
    let all: Vec<_> = kb.subgraphs().collect();
    assert_eq!(all.len(), 1);
    all[0]
}

#[test]
fn arise_stems_for_every_form() {
    let kb = KnowledgeBase::from_named_triples([
        ("arise", "Antonym", "sit"),
        ("sit", "RelatedTo", "sit up"),
    ]);
    let sg = only_chain(&kb);
    let lexicon = RelationLexicon::builtin();
    for (form, expected) in enumerate_forms().into_iter().zip(ARISE_STEMS) {
        let got = realize_question(&sg, form, &lexicon, &kb).unwrap();
        assert_eq!(
            normalize_whitespace(&got),
            normalize_whitespace(expected),
            "form {form}"
        );
    }
}

#[test]
fn alone_people_sing_in_church() {
    let kb = KnowledgeBase::from_named_triples([
        ("alone", "Antonym", "people"),
        ("people", "CapableOf", "sing in church"),
    ]);
    let sg = only_chain(&kb);
    let form = LogicalForm::from_index(1).unwrap();
    let got = realize_question(&sg, form, &RelationLexicon::builtin(), &kb).unwrap();
    assert_eq!(
        got,
        "which of the following is an antonym of alone and meanwhile is capable of sing in church?"
    );
}

#[test]
fn form_table() {
    let expected: [(&str, &str); 14] = [
        ("1000", "(A R1 ?) AND NOT(? R2 C)"),
        ("0100", "(A R1 ?) AND (? R2 C)"),
        ("1100", "(A R1 ?)"),
        ("0010", "NOT(A R1 ?) AND (? R2 C)"),
        (
            "1010",
            "((A R1 ?) OR (? R2 C)) AND NOT((A R1 ?) AND (? R2 C))",
        ),
        ("0110", "(? R2 C)"),
        ("1110", "(A R1 ?) OR (? R2 C)"),
        ("0001", "NOT(A R1 ?) AND NOT(? R2 C)"),
        ("1001", "NOT(? R2 C)"),
        (
            "0101",
            "((A R1 ?) AND (? R2 C)) OR (NOT(A R1 ?) AND NOT(? R2 C))",
        ),
        ("1101", "(A R1 ?) OR NOT(? R2 C)"),
        ("0011", "NOT(A R1 ?)"),
        ("1011", "NOT(A R1 ?) OR NOT(? R2 C)"),
        ("0111", "NOT(A R1 ?) OR (? R2 C)"),
    ];
    for (form, (bits, text)) in enumerate_forms().into_iter().zip(expected) {
        assert_eq!(mask_bits(form), bits, "form {form}");
        assert_eq!(render_form(form), text, "form {form}");
    }
}

#[test]
fn custom_lexicon_changes_wording() {
    let kb = KnowledgeBase::from_named_triples([
        ("arise", "Antonym", "sit"),
        ("sit", "RelatedTo", "sit up"),
    ]);
    let sg = only_chain(&kb);
    let (lexicon, warnings) = parse_lexicon(
        r#"{"RelatedTo": {"affirmative": "goes with", "negative": "does not go with"}}"#,
    )
    .unwrap();
    assert!(warnings.is_empty());
    let form = LogicalForm::from_index(8).unwrap();
    let got = realize_question(&sg, form, &lexicon, &kb).unwrap();
    assert_eq!(got, "which of the following does not go with sit up?");
}

#[test]
fn unknown_relation_needs_fallback() {
    let kb = KnowledgeBase::from_named_triples([("a", "Foo", "b"), ("b", "BarBaz", "c")]);
    let sg = only_chain(&kb);
    let form = LogicalForm::from_index(1).unwrap();
    let strict = RelationLexicon::empty().with_fallback(false);
    assert!(realize_question(&sg, form, &strict, &kb).is_err());
    let got = realize_question(&sg, form, &RelationLexicon::empty(), &kb).unwrap();
    assert_eq!(
        got,
        "which of the following is foo of a and meanwhile is bar baz of c?"
    );
}
