"""Evaluation metric battery for phrase, box, sentence, and description answers."""
from .bleu import bleu
from .cider import cider_d
from .classification import accuracy, macro_f1
from .detection import ap_at_50, mean_iou, prediction_box
from .judge import HttpJudge, JudgeClient, JudgeError, StubJudge, judge_score, make_judge
from .meteor import meteor, meteor_pair
from .normalize import normalize_answer, tokenize
from .report import (
    ALL_METRICS,
    ROUTING,
    EvalError,
    EvalPair,
    MetricReport,
    align_files,
    evaluate,
    normalize_metric_names,
)
from .rouge import lcs_length, rouge1, rouge1_pair, rouge_l, rouge_l_pair
from .stem import porter_stem

__all__ = [
    "ALL_METRICS",
    "ROUTING",
    "EvalError",
    "EvalPair",
    "HttpJudge",
    "JudgeClient",
    "JudgeError",
    "MetricReport",
    "StubJudge",
    "accuracy",
    "align_files",
    "ap_at_50",
    "bleu",
    "cider_d",
    "evaluate",
    "judge_score",
    "lcs_length",
    "macro_f1",
    "make_judge",
    "mean_iou",
    "meteor",
    "meteor_pair",
    "normalize_answer",
    "normalize_metric_names",
    "porter_stem",
    "prediction_box",
    "rouge1",
    "rouge1_pair",
    "rouge_l",
    "rouge_l_pair",
    "tokenize",
]
