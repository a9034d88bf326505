"""Arithmetic QA generation with exact-rational answers.

Questions follow the pattern "Calculate {a} {op} {b}." and answers are
computed with Fraction arithmetic, then rendered as an integer, an exact
decimal (when the operands were decimals and the value terminates), or a
reduced fraction like "2/5". A tiny recursive-descent evaluator handles any
question in the pattern family, including parenthesized negatives and chained
operators, so generated answers can be cross-checked against the question
text itself.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

QUESTION_PREFIX = "Calculate "
QUESTION_TERMINATOR = "."
DEFAULT_OPS = ("+", "-", "*", "/")

_NUMBER = re.compile(r"\d+(?:\.\d+)?")


@dataclass(frozen=True)
class QaPair:
    question: str
    answer: str


# ---------------------------------------------------------------------------
# Exact expression evaluation


class _Parser:
    """expr := term (('+'|'-') term)* ; term := factor (('*'|'/') factor)* ;
    factor := '-' factor | '(' expr ')' | number"""

    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] == " ":
            self.pos += 1

    def _peek(self) -> str:
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _take(self, ch: str) -> None:
        if self._peek() != ch:
            raise ValueError(f"expected {ch!r} at position {self.pos} in {self.text!r}")
        self.pos += 1

    def parse(self) -> Fraction:
        value = self._expr()
        self._skip_ws()
        if self.pos != len(self.text):
            raise ValueError(f"trailing characters in expression {self.text!r}")
        return value

    def _expr(self) -> Fraction:
        value = self._term()
        while self._peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self._term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def _term(self) -> Fraction:
        value = self._factor()
        while self._peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self._factor()
            if op == "*":
                value = value * rhs
            else:
                if rhs == 0:
                    raise ZeroDivisionError(f"division by zero in {self.text!r}")
                value = value / rhs
        return value

    def _factor(self) -> Fraction:
        ch = self._peek()
        if ch == "-":
            self.pos += 1
            return -self._factor()
        if ch == "(":
            self._take("(")
            value = self._expr()
            self._take(")")
            return value
        m = _NUMBER.match(self.text, self.pos)
        if not m:
            raise ValueError(f"expected a number at position {self.pos} in {self.text!r}")
        self.pos = m.end()
        return Fraction(m.group())


def evaluate_expression(expr: str) -> Fraction:
    return _Parser(expr).parse()


def evaluate_question(question: str) -> Fraction:
    """Exact value of a question in the "Calculate <expr>." pattern."""
    if not question.startswith(QUESTION_PREFIX) or not question.endswith(QUESTION_TERMINATOR):
        raise ValueError(f"not a calculate question: {question!r}")
    return evaluate_expression(question[len(QUESTION_PREFIX) : -len(QUESTION_TERMINATOR)])


# ---------------------------------------------------------------------------
# Answer rendering


def _terminating_decimal(value: Fraction) -> str | None:
    q = value.denominator
    twos = fives = 0
    while q % 2 == 0:
        q //= 2
        twos += 1
    while q % 5 == 0:
        q //= 5
        fives += 1
    if q != 1:
        return None
    scale = max(twos, fives)
    digits = abs(value.numerator) * 10**scale // value.denominator
    text = str(digits).rjust(scale + 1, "0")
    sign = "-" if value < 0 else ""
    return f"{sign}{text[:-scale]}.{text[-scale:]}" if scale else f"{sign}{text}"


def render_answer(value: Fraction, decimal_style: bool) -> str:
    """Integer when whole; exact decimal for decimal-style questions when the
    value terminates; otherwise a reduced fraction with the sign up front."""
    if value.denominator == 1:
        return str(value.numerator)
    if decimal_style:
        decimal = _terminating_decimal(value)
        if decimal is not None:
            return decimal
    return f"{value.numerator}/{value.denominator}"


# ---------------------------------------------------------------------------
# Generation


def _render_operand(value: Fraction, decimals: int) -> str:
    if decimals == 0:
        return str(value.numerator)
    text = _terminating_decimal(value)
    assert text is not None  # generated decimals always terminate
    return text


def gen_arithmetic_qa(
    n: int,
    rng_seed: int,
    ops: tuple[str, ...] | set[str] = DEFAULT_OPS,
    decimal_fraction: float = 0.25,
    max_int: int = 999,
) -> list[QaPair]:
    """Deterministic arithmetic QA pairs in the corpus pattern.

    Negative right-hand operands are parenthesized, mirroring the source
    dataset's "(-20)/(-8)" style. Division never draws a zero divisor.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    op_list = sorted(set(ops))
    if not op_list or any(op not in DEFAULT_OPS for op in op_list):
        raise ValueError(f"ops must be a non-empty subset of {DEFAULT_OPS}")
    rng = random.Random(rng_seed)
    pairs: list[QaPair] = []
    for _ in range(n):
        op = rng.choice(op_list)
        decimal_style = rng.random() < decimal_fraction

        def draw(avoid_zero: bool) -> tuple[Fraction, int]:
            while True:
                decimals = rng.choice((1, 2, 3)) if decimal_style else 0
                raw = rng.randint(-max_int * 10**decimals, max_int * 10**decimals)
                value = Fraction(raw, 10**decimals)
                if not (avoid_zero and value == 0):
                    return value, decimals

        a, a_dec = draw(avoid_zero=False)
        b, b_dec = draw(avoid_zero=(op == "/"))
        a_text = _render_operand(a, a_dec)
        b_text = _render_operand(b, b_dec)
        if b < 0:
            b_text = f"({b_text})"
        question = f"{QUESTION_PREFIX}{a_text} {op} {b_text}{QUESTION_TERMINATOR}"
        value = evaluate_question(question)
        pairs.append(QaPair(question=question, answer=render_answer(value, decimal_style)))
    return pairs


# ---------------------------------------------------------------------------
# Perturbation


def perturb_last_token(question: str, replacement: str = "。") -> str:
    """Replace the final "." with ``replacement``; everything else untouched.

    Refuses questions that do not end with the original terminator rather
    than silently perturbing elsewhere.
    """
    if not question.endswith(QUESTION_TERMINATOR):
        raise ValueError(f"question does not end with {QUESTION_TERMINATOR!r}: {question!r}")
    return question[: -len(QUESTION_TERMINATOR)] + replacement


# ---------------------------------------------------------------------------
# Serialization


def write_qa_jsonl(pairs: list[QaPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for pair in pairs:
            f.write(json.dumps({"question": pair.question, "answer": pair.answer}, ensure_ascii=False))
            f.write("\n")


def read_qa_jsonl(path: str | Path) -> list[QaPair]:
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rec = json.loads(line)
                pairs.append(QaPair(question=rec["question"], answer=rec["answer"]))
    return pairs
