from __future__ import annotations

import re
from fractions import Fraction

import pytest

from lantree.analysis.arithmetic import (
    evaluate_expression,
    evaluate_question,
    gen_arithmetic_qa,
    perturb_last_token,
    read_qa_jsonl,
    render_answer,
    write_qa_jsonl,
)

QUESTION_RE = re.compile(r"^Calculate -?\d+(\.\d+)? [+\-*/] \(?-?\d+(\.\d+)?\)?\.$")


def parse_answer(text: str) -> Fraction:
    """Independent answer parsing: integer, decimal, or p/q fraction."""
    if "/" in text:
        num, den = text.split("/")
        return Fraction(int(num), int(den))
    return Fraction(text)


class TestEvaluator:
    def test_simple_sum(self):
        assert evaluate_question("Calculate 2 + 3.") == 5

    def test_source_dataset_fraction_chain(self):
        assert evaluate_expression("42/60*40/70") == Fraction(2, 5)

    def test_source_dataset_signed_chain(self):
        assert evaluate_expression("-5*39/(-130) - (-20)/(-8)") == -1

    def test_source_dataset_decimal_sum(self):
        value = evaluate_expression("-841880142.544 + 411127")
        assert value == Fraction("-841469015.544")

    def test_division_by_zero(self):
        with pytest.raises(ZeroDivisionError):
            evaluate_expression("3/0")

    def test_malformed(self):
        with pytest.raises(ValueError):
            evaluate_expression("2 +")
        with pytest.raises(ValueError):
            evaluate_expression("(2")
        with pytest.raises(ValueError):
            evaluate_question("What is 2 + 2?")


class TestRendering:
    def test_integer(self):
        assert render_answer(Fraction(5), decimal_style=False) == "5"
        assert render_answer(Fraction(-1), decimal_style=True) == "-1"

    def test_reduced_fraction(self):
        assert render_answer(Fraction(2, 5), decimal_style=False) == "2/5"
        assert render_answer(Fraction(-3, 7), decimal_style=False) == "-3/7"

    def test_exact_decimal(self):
        assert render_answer(Fraction("-841469015.544"), decimal_style=True) == "-841469015.544"
        assert render_answer(Fraction(1, 4), decimal_style=True) == "0.25"

    def test_non_terminating_division_falls_back_to_fraction(self):
        assert render_answer(Fraction(1, 3), decimal_style=True) == "1/3"

    def test_decimal_style_off_keeps_fraction(self):
        assert render_answer(Fraction(1, 4), decimal_style=False) == "1/4"


class TestGenerator:
    def test_deterministic_per_seed(self):
        assert gen_arithmetic_qa(20, 5) == gen_arithmetic_qa(20, 5)
        assert gen_arithmetic_qa(20, 5) != gen_arithmetic_qa(20, 6)

    def test_question_pattern(self):
        for pair in gen_arithmetic_qa(200, 1):
            assert QUESTION_RE.match(pair.question), pair.question

    def test_answers_match_exact_evaluation(self):
        # Oracle equivalence: every answer equals an independent exact
        # evaluation of its own question text.
        for pair in gen_arithmetic_qa(300, 2):
            assert parse_answer(pair.answer) == evaluate_question(pair.question), pair

    def test_restricted_ops(self):
        for pair in gen_arithmetic_qa(50, 3, ops={"+"}):
            assert " + " in pair.question

    def test_division_never_draws_zero(self):
        for pair in gen_arithmetic_qa(300, 4, ops={"/"}):
            evaluate_question(pair.question)  # would raise ZeroDivisionError

    def test_bad_args(self):
        with pytest.raises(ValueError):
            gen_arithmetic_qa(0, 1)
        with pytest.raises(ValueError):
            gen_arithmetic_qa(1, 1, ops={"^"})


class TestPerturbation:
    def test_terminator_swap(self):
        assert perturb_last_token("Calculate 2 + 3.") == "Calculate 2 + 3。"

    def test_only_final_span_changes(self):
        question = "Calculate 1.5 + 2."
        perturbed = perturb_last_token(question)
        assert perturbed[:-1] == question[:-1]
        assert perturbed[-1] == "。"
        assert question.count(".") - perturbed.count(".") == 1

    def test_double_perturbation_refused(self):
        once = perturb_last_token("Calculate 2 + 3.")
        with pytest.raises(ValueError):
            perturb_last_token(once)

    def test_custom_replacement(self):
        assert perturb_last_token("Calculate 2 + 3.", "!") == "Calculate 2 + 3!"


class TestSerialization:
    def test_jsonl_round_trip(self, tmp_path):
        pairs = gen_arithmetic_qa(25, 7)
        path = tmp_path / "qa.jsonl"
        write_qa_jsonl(pairs, path)
        assert read_qa_jsonl(path) == pairs
