"""Exact Match, ROUGE-N / ROUGE-L and extraction-quality scoring."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from statistics import fmean
from typing import Iterable, Sequence

from .datasets import GoldTable
from .extraction import RecordSet, cell_text

_EDGE_CHARS = ".,:;!?\"'`“”‘’"
METRICS = ("em", "rouge1_f", "rougeL_f")
EXTRACTION_METRICS = ("x_rouge1_f", "x_rougeL_f")


def normalize_answer(text: str) -> str:
    """Lowercase and collapse whitespace, then strip edge punctuation and quotes."""
    s = " ".join(text.lower().split())
    while True:
        t = s.strip(_EDGE_CHARS).strip()
        if t == s:
            return s
        s = t


def exact_match(pred: str, golds: Sequence[str]) -> int:
    if not golds:
        raise ValueError("golds must be nonempty")
    p = normalize_answer(pred)
    return int(any(p == normalize_answer(g) for g in golds))


_SUFFIXES = ("ingly", "edly", "ing", "ies", "ed", "es", "ly", "s")


def light_stem(token: str) -> str:
    """Crude suffix stripping; only used when stemming is switched on."""
    for suf in _SUFFIXES:
        if token.endswith(suf) and len(token) - len(suf) >= 3:
            return token[: -len(suf)] + ("y" if suf == "ies" else "")
    return token


def tokenize(text: str, stem: bool = False) -> list[str]:
    toks = normalize_answer(text).split()
    return [light_stem(t) for t in toks] if stem else toks


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _prf(overlap: int, n_pred: int, n_ref: int) -> tuple[float, float, float]:
    if n_pred == 0 and n_ref == 0:
        return 1.0, 1.0, 1.0
    if n_pred == 0 or n_ref == 0:
        return 0.0, 0.0, 0.0
    p, r = overlap / n_pred, overlap / n_ref
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f


def _best(scores: Iterable[tuple[float, float, float]]) -> tuple[float, float, float]:
    best = None
    for s in scores:
        if best is None or s[2] > best[2]:
            best = s
    return best


def rouge_n(pred: str, refs: Sequence[str], n: int = 1, stem: bool = False) -> tuple[float, float, float]:
    if n < 1:
        raise ValueError("n must be positive")
    if not refs:
        raise ValueError("refs must be nonempty")
    pg = _ngrams(tokenize(pred, stem), n)
    out = []
    for ref in refs:
        rg = _ngrams(tokenize(ref, stem), n)
        overlap = sum((pg & rg).values())
        out.append(_prf(overlap, sum(pg.values()), sum(rg.values())))
    return _best(out)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(pred: str, refs: Sequence[str], stem: bool = False) -> tuple[float, float, float]:
    if not refs:
        raise ValueError("refs must be nonempty")
    pt = tokenize(pred, stem)
    out = []
    for ref in refs:
        rt = tokenize(ref, stem)
        out.append(_prf(lcs_length(pt, rt), len(pt), len(rt)))
    return _best(out)


def linearize(slots: Sequence[str], rows: Iterable[dict]) -> str:
    return "\n".join("; ".join(f"{s}: {cell_text(r.get(s))}" for s in slots) for r in rows)


def extraction_quality(records: RecordSet, gold: GoldTable | None) -> tuple[float | None, float | None]:
    """ROUGE-1 and ROUGE-L F1 of linearized records against a gold table.

    Returns (None, None) when there is no gold to compare with.
    """
    if gold is None or not gold.rows:
        return None, None
    return extraction_quality_table(records.schema.names, [r.as_dict() for r in records.rows], gold)


def extraction_quality_table(slots: Sequence[str], rows: list[dict], gold: GoldTable | None):
    if gold is None or not gold.rows:
        return None, None
    pred = linearize(slots, rows)
    ref = linearize(gold.slots, gold.as_dicts())
    return rouge_n(pred, [ref], 1)[2], rouge_l(pred, [ref])[2]


# reports ------------------------------------------------------------------

@dataclass
class ItemScore:
    task_id: str
    em: float | None = None
    rouge1_f: float | None = None
    rougeL_f: float | None = None
    error: str | None = None
    # extraction quality against a gold table, when the task has one
    x_rouge1_f: float | None = None
    x_rougeL_f: float | None = None


def score_item(task_id: str, pred: str | None, golds: Sequence[str], error: str | None = None) -> ItemScore:
    if pred is None:
        return ItemScore(task_id, error=error)
    return ItemScore(task_id, exact_match(pred, golds), rouge_n(pred, golds, 1)[2], rouge_l(pred, golds)[2])


def _mean(values) -> float | None:
    vals = [v for v in values if v is not None]
    return fmean(vals) if vals else None


@dataclass
class MetricReport:
    per_item: list[ItemScore] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.per_item)

    @property
    def aggregates(self) -> dict[str, float | None]:
        return {m: _mean(getattr(it, m) for it in self.per_item) for m in METRICS + EXTRACTION_METRICS}

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "aggregates": self.aggregates,
            "per_item": [vars(it).copy() for it in self.per_item],
        }

    @classmethod
    def from_json(cls, obj) -> "MetricReport":
        return cls([ItemScore(**it) for it in obj["per_item"]])


def pct(x: float | None) -> str:
    return "-" if x is None else f"{100 * x:.2f}"


def format_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    def line(cells):
        return "  ".join(str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(cells, widths)))
    out = [line(header), "  ".join("-" * w for w in widths)]
    out += [line(r) for r in rows]
    return "\n".join(out)


def report_text(report: MetricReport, metrics: Sequence[str] = METRICS, title: str | None = None) -> str:
    rows = [[it.task_id] + [pct(getattr(it, m)) for m in metrics] for it in report.per_item]
    agg = report.aggregates
    rows.append(["MEAN"] + [pct(agg[m]) for m in metrics])
    text = format_table(["task"] + list(metrics), rows)
    return f"{title}\n{text}" if title else text


def dumps_report(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
