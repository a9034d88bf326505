"""Token-bias harness: measure exact-match QA accuracy with and without a
single-character perturbation of the question terminator.

All text handling goes through the backend's own tokenize/detokenize
endpoints, so the harness works against any conforming model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from lantree.analysis.arithmetic import QaPair, perturb_last_token
from lantree.errors import ProbeError
from lantree.probe.client import ProbeClient

GENERATION_CAP = 16  # answers are single-line; stop at newline or this many tokens


@dataclass
class BiasReport:
    n: int
    acc_original: Optional[float] = None
    acc_perturbed: Optional[float] = None
    items: list[dict] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "acc_original": self.acc_original,
            "acc_perturbed": self.acc_perturbed,
            "items": self.items,
        }


def _stop_tokens(client: ProbeClient) -> list[int]:
    # The dataset's answers are single-line: stop at the newline token when
    # the backend's tokenizer has one (whitespace tokenizers do not).
    ids = client.tokenize_text("\n")
    return ids if len(ids) == 1 else []


def _grade_one(client: ProbeClient, question: str, answer: str, stop: list[int]) -> dict:
    item: dict = {"question": question, "expected": answer}
    try:
        # The QA template separates question and answer with a newline; when
        # the tokenizer represents it, the separator belongs to the prompt
        # (otherwise generation would stop on it immediately).
        prompt = client.tokenize_text(question + "\n" if stop else question)
        generated = client.greedy_generate(prompt, max_new=GENERATION_CAP, stop=stop)
        text = client.detokenize_tokens(generated) if generated else ""
        item["generated"] = text
        item["correct"] = text.strip() == answer.strip()
    except ProbeError as e:
        item["generated"] = None
        item["correct"] = False
        item["error"] = str(e)
    return item


def bias_eval(
    client: ProbeClient,
    pairs: list[QaPair],
    perturbed: bool,
    replacement: str = "。",
) -> BiasReport:
    """Exact-match accuracy over the pairs; backend errors count as incorrect
    and are flagged on the item."""
    if not pairs:
        raise ValueError("pairs must be non-empty")
    stop = _stop_tokens(client)
    items = []
    correct = 0
    for pair in pairs:
        question = perturb_last_token(pair.question, replacement) if perturbed else pair.question
        item = _grade_one(client, question, pair.answer, stop)
        item["perturbed"] = perturbed
        items.append(item)
        correct += int(item["correct"])
    accuracy = correct / len(pairs)
    report = BiasReport(n=len(pairs), items=items)
    if perturbed:
        report.acc_perturbed = accuracy
    else:
        report.acc_original = accuracy
    return report


def run_bias_experiment(
    client: ProbeClient, pairs: list[QaPair], replacement: str = "。"
) -> BiasReport:
    """Original and perturbed accuracy in one report (the Fig.-6-style pair)."""
    original = bias_eval(client, pairs, perturbed=False, replacement=replacement)
    perturbed = bias_eval(client, pairs, perturbed=True, replacement=replacement)
    return BiasReport(
        n=len(pairs),
        acc_original=original.acc_original,
        acc_perturbed=perturbed.acc_perturbed,
        items=original.items + perturbed.items,
    )
