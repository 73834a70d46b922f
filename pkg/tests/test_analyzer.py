import pytest
from hypothesis import given, settings, strategies as st

from reltune.analyzer import (AnalyzerConfig, analyze, analyze_document, analyze_query, apply_rewrites,
                              format_rules, parse_rules, stem, tokenize)
from reltune.errors import DocumentError, RuleError

RN = AnalyzerConfig(rewrite_rules=((("rn",), ("registered", "nurse")),))
ES = AnalyzerConfig(stem_rules=(("es", ""),), min_stem=3)


def test_tokenize_lowercases_and_splits_punctuation():
    assert tokenize("Registered Nurse, ICU", AnalyzerConfig()) == ("registered", "nurse", "icu")


def test_tokenize_empty():
    assert tokenize("", AnalyzerConfig()) == ()


def test_plus_is_a_delimiter_by_default():
    assert tokenize("C++ Engineer", AnalyzerConfig()) == ("c", "engineer")


def test_keep_chars_keep_plus_inside_tokens():
    assert tokenize("C++ Engineer", AnalyzerConfig(keep_chars="+")) == ("c++", "engineer")


def test_rewrite_single_substitution():
    assert apply_rewrites(("rn",), RN) == ("registered", "nurse")


def test_rewrite_identity_without_match():
    assert apply_rewrites(("registered", "nurse"), RN) == ("registered", "nurse")


def test_rewrite_at_final_position():
    assert apply_rewrites(("front", "desk", "rn"), RN) == ("front", "desk", "registered", "nurse")


def test_rewrite_longest_match_wins():
    cfg = AnalyzerConfig(rewrite_rules=((("sr",), ("senior",)), (("sr", "dev"), ("senior", "developer"))))
    assert apply_rewrites(("sr", "dev", "ops"), cfg) == ("senior", "developer", "ops")


def test_rewrite_output_is_not_rewritten_again():
    cfg = AnalyzerConfig(rewrite_rules=((("a",), ("b",)), (("b",), ("c",))))
    assert apply_rewrites(("a", "b"), cfg) == ("b", "c")


def test_rewrite_cycle_rejected():
    with pytest.raises(RuleError):
        AnalyzerConfig(rewrite_rules=((("a",), ("b",)), (("b",), ("a",))))


def test_stem_examples():
    assert stem("nurses", ES) == "nurs"
    assert stem("nurse", ES) == "nurse"
    assert stem("es", ES) == "es"


def test_bundled_rules_on_spot_tokens(analyzer):
    assert stem("nurses", analyzer) == "nurs"
    assert stem("nurse", analyzer) == "nurs"
    assert stem("es", analyzer) == "es"


def test_document_analysis_registered_nurse(analyzer):
    doc = analyze_document({"title": "Registered Nurse"}, analyzer)
    assert doc["title"] == ("registered", "nurse")
    assert doc["title_analyzed"] == ("regist", "nurs")


def test_document_analysis_rn_rewrite(analyzer):
    doc = analyze_document({"title": "RN"}, analyzer)
    assert doc["title_analyzed"] == ("regist", "nurs")


def test_empty_title_rejected(analyzer):
    with pytest.raises(DocumentError):
        analyze_document({"title": ""}, analyzer)
    with pytest.raises(DocumentError):
        analyze_document({"title": "  ,, "}, analyzer)


def test_query_kinds(analyzer):
    q = analyze_query("RN nurses", analyzer)
    assert q.raw == ("rn", "nurses")
    assert q.analyzed == ("regist", "nurs", "nurs")
    assert q.terms("analyzed") == ("regist", "nurs")


def test_rule_file_round_trip(analyzer):
    assert parse_rules(format_rules(analyzer)) == analyzer


def test_rule_file_syntax():
    cfg = parse_rules("# comment\n@min_stem\t4\n@keep\t+#\nrn\tregistered nurse\n-ing\n-ies\ty\n")
    assert cfg.min_stem == 4 and set(cfg.keep_chars) == {"+", "#"}
    assert cfg.rewrite_rules == ((("rn",), ("registered", "nurse")),)
    assert cfg.stem_rules == (("ing", ""), ("ies", "y"))


@pytest.mark.parametrize("text", ["rn\n", "-\tx\n", "@bogus\t1\n", "a\tb\tc\n"])
def test_bad_rule_lines(text):
    with pytest.raises(RuleError):
        parse_rules(text)


words = st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=0, max_size=14)


@settings(max_examples=400, deadline=None)
@given(words)
def test_stem_is_idempotent(analyzer, word):
    once = stem(word, analyzer)
    assert stem(once, analyzer) == once


@settings(max_examples=400, deadline=None)
@given(words)
def test_stem_respects_min_length(analyzer, word):
    out = stem(word, analyzer)
    assert out == word or len(out) >= analyzer.min_stem


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=60))
def test_tokens_are_lowercase_and_delimiter_free(text):
    cfg = AnalyzerConfig()
    for tok in tokenize(text, cfg):
        assert tok and tok == tok.lower()
        assert not any(ch.isspace() for ch in tok)
        assert "_" not in tok


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(["rn", "front", "desk", "sr", "dev", "nurse"]), max_size=8))
def test_rewrite_without_rules_is_identity(tokens):
    assert apply_rewrites(tuple(tokens), AnalyzerConfig()) == tuple(tokens)


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="abc XYZ-", max_size=40))
def test_analysis_is_deterministic(analyzer, text):
    assert analyze(text, analyzer) == analyze(text, analyzer)
