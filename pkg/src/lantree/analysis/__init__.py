from lantree.analysis.arithmetic import (
    QaPair,
    evaluate_expression,
    gen_arithmetic_qa,
    perturb_last_token,
    read_qa_jsonl,
    render_answer,
    write_qa_jsonl,
)
from lantree.analysis.bias import BiasReport, bias_eval, run_bias_experiment
from lantree.analysis.cooccur import CooccurTable, cooccur, cooccur_text

__all__ = [
    "BiasReport",
    "CooccurTable",
    "QaPair",
    "bias_eval",
    "cooccur",
    "cooccur_text",
    "evaluate_expression",
    "gen_arithmetic_qa",
    "perturb_last_token",
    "read_qa_jsonl",
    "render_answer",
    "run_bias_experiment",
    "write_qa_jsonl",
]
