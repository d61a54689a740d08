"""Judgment files, weighted/unweighted score tables and error reduction.

Each unique test attribute set is judged once per system.  The *weighted*
table counts a set as often as it occurs in the test data, the *unweighted*
table counts it once.  Error reduction compares Correct-only accuracy with
a baseline system: ``1 - (1 - acc) / (1 - acc_baseline)``.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Template, canonical, parse_attribute_set
from .errors import DuplicateJudgment, EvaluationError, MissingJudgment


class Rank(enum.Enum):
    CORRECT = "Correct"
    OK = "OK"
    BAD = "Bad"
    NO_OUTPUT = "NoOutput"

    @classmethod
    def parse(cls, text: str) -> "Rank":
        for r in cls:
            if r.value.lower() == text.strip().lower():
                return r
        raise EvaluationError(f"unknown rank {text!r}; expected one of "
                              + ", ".join(r.value for r in cls))


COLUMNS = {Rank.CORRECT: "% Correct", Rank.OK: "% OK", Rank.BAD: "% Bad",
           Rank.NO_OUTPUT: "% No output"}


@dataclass(frozen=True)
class Judgment:
    attribute_set: frozenset
    system: str
    rank: Rank


def dedupe_attribute_sets(test: Iterable[Template]) -> list[tuple[frozenset, int]]:
    """Unique attribute sets of the test templates with their multiplicities,
    most frequent first."""
    counts = Counter(t.attributes for t in test)
    return sorted(counts.items(), key=lambda kv: (-kv[1], canonical(kv[0])))


@dataclass
class ScoreReport:
    systems: list[str]
    baseline: str | None
    weighted: dict[str, dict[Rank, float]] = field(default_factory=dict)
    unweighted: dict[str, dict[Rank, float]] = field(default_factory=dict)
    error_reduction: dict[str, dict[str, float | None]] = field(default_factory=dict)
    n_sets: int = 0
    n_items: int = 0

    def table(self, weighting: str) -> dict[str, dict[Rank, float]]:
        return self.weighted if weighting == "weighted" else self.unweighted

    def format(self) -> str:
        blocks = []
        for weighting in ("weighted", "unweighted"):
            n = self.n_items if weighting == "weighted" else self.n_sets
            head = ["System"] + list(COLUMNS.values()) + ["% error reduction"]
            rows = [head]
            for s in self.systems:
                pct = self.table(weighting)[s]
                er = self.error_reduction[weighting].get(s)
                rows.append([s] + [f"{pct[r]:.1f}" for r in Rank]
                            + ["-" if er is None else f"{er:.0f}"])
            widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
            lines = [f"{weighting.capitalize()} evaluation ({n} items"
                     + (f", error reduction from {self.baseline}" if self.baseline else "") + ")"]
            for k, r in enumerate(rows):
                lines.append("  ".join(c.ljust(widths[i]) if i == 0 else c.rjust(widths[i])
                                       for i, c in enumerate(r)))
                if k == 0:
                    lines.append("  ".join("-" * w for w in widths))
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"


def error_reduction(accuracy: float, baseline_accuracy: float) -> float:
    """Percent of the baseline's errors removed (accuracies given as fractions)."""
    if baseline_accuracy >= 1.0:
        return 0.0 if accuracy >= 1.0 else float("-inf")
    return 100.0 * (1.0 - (1.0 - accuracy) / (1.0 - baseline_accuracy))


def score_report(judgments: Iterable[Judgment], counts: Sequence[tuple[frozenset, int]] | Mapping,
                 baseline: str | None = "nlg1") -> ScoreReport:
    counts = dict(counts)
    table: dict[str, dict[frozenset, Rank]] = {}
    for j in judgments:
        if j.attribute_set not in counts:
            raise EvaluationError(
                f"judgment for {{{canonical(j.attribute_set)}}} which is not a test attribute set")
        per = table.setdefault(j.system, {})
        if j.attribute_set in per:
            raise DuplicateJudgment(j.system, canonical(j.attribute_set))
        per[j.attribute_set] = j.rank
    systems = sorted(table)
    if baseline is not None and baseline not in table:
        raise EvaluationError(f"baseline system {baseline!r} has no judgments")
    for s in systems:
        for attrs in sorted(counts, key=canonical):
            if attrs not in table[s]:
                raise MissingJudgment(s, canonical(attrs))

    total_w = sum(counts.values())
    total_u = len(counts)
    report = ScoreReport(systems, baseline, n_sets=total_u, n_items=total_w)
    for s in systems:
        w, u = Counter(), Counter()
        # sorted so float sums do not depend on judgment order
        for attrs in sorted(counts, key=canonical):
            w[table[s][attrs]] += counts[attrs]
            u[table[s][attrs]] += 1
        report.weighted[s] = {r: 100.0 * w[r] / total_w for r in Rank}
        report.unweighted[s] = {r: 100.0 * u[r] / total_u for r in Rank}
    for weighting in ("weighted", "unweighted"):
        pct = report.table(weighting)
        report.error_reduction[weighting] = {
            s: None if baseline is None or s == baseline else
            error_reduction(pct[s][Rank.CORRECT] / 100.0, pct[baseline][Rank.CORRECT] / 100.0)
            for s in systems
        }
    return report


# -- judgment files -----------------------------------------------------------

def parse_judgments(lines: Iterable[str]) -> list[Judgment]:
    out = []
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise EvaluationError(f"line {lineno}: expected system<TAB>attribute-set<TAB>rank")
        system, attrs, rank = parts
        out.append(Judgment(parse_attribute_set(attrs), system.strip(), Rank.parse(rank)))
    return out


def read_judgments(path) -> list[Judgment]:
    with open(path, encoding="utf-8") as fh:
        return parse_judgments(fh)


def format_judgments(judgments: Iterable[Judgment]) -> str:
    return "".join(f"{j.system}\t{canonical(j.attribute_set)}\t{j.rank.value}\n"
                   for j in judgments)


def write_judgments(path, judgments: Iterable[Judgment]) -> None:
    Path(path).write_text(format_judgments(judgments), encoding="utf-8")


def exact_match_judgments(system: str, outputs: Mapping[frozenset, Template | None],
                          accepts) -> list[Judgment]:
    """Automatic judging for synthetic data: Correct iff ``accepts(template)``.

    ``accepts`` decides membership in the reference set (for the synthetic
    grammar, :meth:`SynthGrammar.accepts`).  Outputs that are not in the
    reference set are ranked Bad; there is no automatic OK category.
    """
    out = []
    for attrs in sorted(outputs, key=canonical):
        t = outputs[attrs]
        if t is None:
            rank = Rank.NO_OUTPUT
        elif t.attributes == attrs and accepts(t):
            rank = Rank.CORRECT
        else:
            rank = Rank.BAD
        out.append(Judgment(attrs, system, rank))
    return out
