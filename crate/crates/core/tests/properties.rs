use chainruler::backends::{cosine, mock_heuristic_choice, mock_score, FallbackEmbedder};
use chainruler::cnl::{parse_statement, render_all, render_literal, render_statement, split_sentences};
use chainruler::generator::{sample_problem, NegationRates};
use chainruler::logic::{closure, derive_chain, effective_distraction, transpose};
use chainruler::metrics::{bleu2, redundancy, total_luck};
use chainruler::predict::{argmax_first, binary_normalize};
use chainruler::{Lexicon, Literal, Predicate, Property, Rule, Statement};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lexicon() -> &'static Lexicon {
    static LEX: std::sync::OnceLock<Lexicon> = std::sync::OnceLock::new();
    LEX.get_or_init(Lexicon::builtin)
}

fn predicates() -> Vec<Predicate> {
    lexicon().predicates().cloned().collect()
}

fn property() -> impl Strategy<Value = Property> {
    let preds = predicates();
    (0..preds.len(), any::<bool>()).prop_map(move |(i, a)| Property::new(preds[i].clone(), a))
}

fn name() -> impl Strategy<Value = String> {
    let names = lexicon().names().to_vec();
    (0..names.len()).prop_map(move |i| names[i].clone())
}

fn literal() -> impl Strategy<Value = Literal> {
    (name(), property()).prop_map(|(n, p)| Literal::new(n, p))
}

fn rule() -> impl Strategy<Value = Rule> {
    (property(), property()).prop_map(|(a, c)| Rule::new(a, c))
}

fn statement() -> impl Strategy<Value = Statement> {
    prop_oneof![literal().prop_map(Statement::Literal), rule().prop_map(Statement::Rule)]
}

fn text_of(stmts: &[Statement]) -> String {
    render_all(stmts.iter())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rendering_then_parsing_is_identity(s in statement()) {
        let text = render_statement(&s);
        prop_assert_eq!(parse_statement(&text, lexicon()).unwrap(), s);
    }

    #[test]
    fn fewer_sentences_is_a_prefix(text in "[A-Za-z \".!?]{0,80}", n in 0usize..6, extra in 0usize..4) {
        let short = split_sentences(&text, n);
        let long = split_sentences(&text, n + extra);
        prop_assert!(short.len() <= n);
        prop_assert!(long.len() >= short.len());
        prop_assert_eq!(&long[..short.len()], &short[..]);
    }

    #[test]
    fn rendered_contexts_split_into_their_statements(stmts in prop::collection::vec(statement(), 1..8)) {
        let text = text_of(&stmts);
        let sentences = split_sentences(&text, stmts.len());
        let rendered: Vec<String> = stmts.iter().map(render_statement).collect();
        prop_assert_eq!(sentences, rendered);
    }

    #[test]
    fn closure_grows_with_rules(fact in literal(), base in prop::collection::vec(rule(), 0..6), more in prop::collection::vec(rule(), 0..4)) {
        let small = closure(&fact, &base, lexicon());
        let all: Vec<Rule> = base.iter().chain(&more).cloned().collect();
        let big = closure(&fact, &all, lexicon());
        prop_assert!(small.is_subset(&big));
        prop_assert!(small.contains(&fact));
    }

    #[test]
    fn transposition_is_an_involution(r in rule()) {
        prop_assert_eq!(transpose(&transpose(&r)), r.clone());
        // A rule and its contrapositive license the same closure.
        let fact = Literal::new("Jill", r.antecedent.clone());
        prop_assert_eq!(closure(&fact, std::slice::from_ref(&r), lexicon()), closure(&fact, &[transpose(&r)], lexicon()));
    }

    #[test]
    fn binary_normalization(a in -200.0f64..0.0, b in -200.0f64..0.0, shift in -50.0f64..50.0, up in 0.001f64..10.0) {
        let p = binary_normalize(a, b);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p + binary_normalize(b, a) - 1.0).abs() < 1e-12);
        prop_assert!((binary_normalize(a + shift, b + shift) - p).abs() < 1e-9);
        prop_assert!(binary_normalize(a + up, b) >= p);
    }

    #[test]
    fn mock_argmax_is_the_heuristic_choice(stmts in prop::collection::vec(statement(), 0..10), answers in prop::collection::vec(literal(), 1..4)) {
        let prompt = format!("{} ", text_of(&stmts));
        let answers: Vec<String> = answers.iter().map(render_literal).collect();
        let scores: Vec<f64> = answers.iter().map(|a| mock_score(&prompt, a, lexicon())).collect();
        prop_assert!(scores.iter().all(|s| *s <= 0.0));
        prop_assert_eq!(argmax_first(&scores), mock_heuristic_choice(&prompt, &answers, lexicon()));
    }

    #[test]
    fn luck_adds_over_concatenation(a in prop::collection::vec(statement(), 0..6), b in prop::collection::vec(statement(), 0..6), c in literal()) {
        let (ta, tb) = (text_of(&a), text_of(&b));
        let joined = total_luck(&format!("{ta} {tb}"), "", &c).total;
        prop_assert_eq!(joined, total_luck(&ta, "", &c).total + total_luck(&tb, "", &c).total);
        let split = total_luck(&ta, &tb, &c);
        prop_assert_eq!(split.total, joined);
        prop_assert_eq!(split.context_hits + split.elaboration_hits, split.total);
    }

    #[test]
    fn bleu_is_one_on_itself_and_ignores_case(stmts in prop::collection::vec(statement(), 1..5), other in prop::collection::vec(statement(), 0..5)) {
        let x = text_of(&stmts);
        let y = text_of(&other);
        prop_assert!((bleu2(&x, &x) - 1.0).abs() < 1e-12);
        prop_assert_eq!(bleu2(&x.to_uppercase(), &y), bleu2(&x, &y));
        let v = bleu2(&x, &y);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn redundancy_of_copies_is_one(s in statement(), k in 1usize..6) {
        let copies = vec![render_statement(&s); k];
        prop_assert!((redundancy(&copies).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fallback_embedding_ignores_trailing_whitespace(stmts in prop::collection::vec(statement(), 1..4), pad in "[ \t\n]{0,4}") {
        let text = text_of(&stmts);
        let a = FallbackEmbedder.vector(&text);
        let b = FallbackEmbedder.vector(&format!("{text}{pad}"));
        prop_assert_eq!(&a, &b);
        prop_assert!((cosine(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_problems_are_well_formed(seed in any::<u64>(), depth in 1usize..6, breadth in 0usize..6, cp in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = sample_problem(depth, breadth, cp, lexicon(), &NegationRates::default(), &mut rng).unwrap();
        prop_assert!(p.validate(lexicon()).is_ok());
        prop_assert_eq!(p.depth(), depth);
        prop_assert_eq!(p.breadth(), breadth);
        prop_assert!(effective_distraction(&p) <= breadth);
        let derived = derive_chain(&p.fact, &p.chain);
        prop_assert_eq!(derived.last(), Some(&p.conclusion));
        let answers = p.answers();
        let closed = p.closure(lexicon());
        prop_assert!(closed.contains(&answers[0]));
        prop_assert!(!closed.contains(&answers[1]));
    }
}
