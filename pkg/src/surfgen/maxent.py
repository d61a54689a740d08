"""Conditional maximum-entropy models trained with Improved Iterative Scaling.

A model defines ``p(w | h)`` over the training vocabulary plus a stop symbol::

    p(w | h) = prod_j alpha_j ** f_j(w, h) / Z(h)

Features are binary: ``f_j(w, h) = 1`` iff ``w`` is the feature's outcome and
the feature's *context* (a fully instantiated pattern) holds in ``h``.
Weights are kept as ``log(alpha_j)``.

Histories are plain mappings from predicate name to value.  The reserved key
``"attrs"`` holds the frozenset of attributes that remain to be generated.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import SurfgenError

log = logging.getLogger(__name__)

STOP = "*stop*"
ATTRS = "attrs"

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Pattern:
    """A feature pattern: equality tests on history fields plus an attribute test.

    ``attrs`` is ``None`` (no attribute test), ``"member"`` (one context per
    remaining attribute, the attribute becoming the last value) or
    ``"empty"`` (holds only when no attribute remains).
    """

    name: str
    fields: tuple[str, ...] = ()
    attrs: str | None = None

    def __post_init__(self):
        if self.attrs not in (None, "member", "empty"):
            raise ValueError(f"bad attribute test {self.attrs!r}")

    def contexts(self, history: Mapping) -> list[tuple]:
        base = (self.name,) + tuple(history[f] for f in self.fields)
        if self.attrs == "member":
            return [base + (a,) for a in sorted(history[ATTRS])]
        if self.attrs == "empty":
            return [base] if not history[ATTRS] else []
        return [base]

    def matches(self, values: tuple, history: Mapping) -> bool:
        n = len(self.fields)
        if any(history[f] != v for f, v in zip(self.fields, values[:n])):
            return False
        if self.attrs == "member":
            return values[n] in history[ATTRS]
        if self.attrs == "empty":
            return not history[ATTRS]
        return True


@dataclass(frozen=True)
class Feature:
    pattern: Pattern
    values: tuple
    outcome: str
    weight: float = 1.0

    @property
    def context(self) -> tuple:
        return (self.pattern.name,) + self.values

    def fires(self, outcome: str, history: Mapping) -> int:
        return int(outcome == self.outcome and self.pattern.matches(self.values, history))

    def describe(self) -> str:
        parts = [f"w={self.outcome}"]
        parts += [f"{k}={v}" for k, v in zip(self.pattern.fields, self.values)]
        if self.pattern.attrs == "member":
            parts.append(f"{self.values[-1]} in attrs")
        elif self.pattern.attrs == "empty":
            parts.append("attrs={}")
        return " & ".join(parts)


@dataclass(frozen=True)
class Event:
    history: Mapping
    outcome: str
    count: int = 1

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("event count must be >= 1")


class Vocabulary:
    """Sorted training words followed by the stop symbol."""

    def __init__(self, words: Iterable[str]):
        words = sorted(set(words))
        if STOP in words:
            raise SurfgenError(f"{STOP} is reserved and cannot be a corpus word")
        self.outcomes: tuple[str, ...] = tuple(words) + (STOP,)
        self.index = {w: i for i, w in enumerate(self.outcomes)}

    @property
    def words(self) -> tuple[str, ...]:
        return self.outcomes[:-1]

    @property
    def stop_index(self) -> int:
        return len(self.outcomes) - 1

    def __len__(self):
        return len(self.outcomes) - 1

    def __contains__(self, word):
        return word in self.index

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.outcomes == other.outcomes

    def __repr__(self):
        return f"Vocabulary({len(self)} words)"


@dataclass
class Diagnostics:
    iterations: int = 0
    converged: bool = False
    gap: float = math.inf
    loglik: list[float] = field(default_factory=list)
    gaps: list[float] = field(default_factory=list)


def active_contexts(patterns: Sequence[Pattern], history: Mapping) -> list[tuple]:
    out = []
    for p in patterns:
        out.extend(p.contexts(history))
    return out


def instantiate_features(events: Sequence[Event], patterns: Sequence[Pattern],
                         cutoff: int = 1) -> list[Feature]:
    """Every (context, outcome) instantiation seen at least ``cutoff`` times."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    by_name = {p.name: p for p in patterns}
    if len(by_name) != len(patterns):
        raise ValueError("pattern names must be unique")
    counts: Counter = Counter()
    for ev in events:
        for ctx in active_contexts(patterns, ev.history):
            counts[ctx, ev.outcome] += ev.count
    order = {p.name: i for i, p in enumerate(patterns)}
    kept = sorted((k for k, c in counts.items() if c >= cutoff),
                  key=lambda k: (order[k[0][0]], k[0][1:], k[1]))
    return [Feature(by_name[ctx[0]], ctx[1:], outcome) for ctx, outcome in kept]


def feature_counts(features: Sequence[Feature], events: Sequence[Event]) -> np.ndarray:
    """Empirical count of each feature over ``events`` (count-weighted)."""
    ids = {(f.context, f.outcome): j for j, f in enumerate(features)}
    patterns = _unique_patterns(features)
    emp = np.zeros(len(features))
    for ev in events:
        for ctx in active_contexts(patterns, ev.history):
            j = ids.get((ctx, ev.outcome))
            if j is not None:
                emp[j] += ev.count
    return emp


def _unique_patterns(features: Iterable[Feature]) -> tuple[Pattern, ...]:
    seen: dict[str, Pattern] = {}
    for f in features:
        if seen.setdefault(f.pattern.name, f.pattern) != f.pattern:
            raise ValueError(f"two different patterns named {f.pattern.name!r}")
    return tuple(seen.values())


class MaxentModel:
    def __init__(self, vocabulary: Vocabulary, features: Sequence[Feature],
                 log_weights=None, patterns: Sequence[Pattern] | None = None,
                 cutoff: int = 1, meta: Mapping[str, str] | None = None):
        self.vocabulary = vocabulary
        self.cutoff = cutoff
        self.meta = dict(meta or {})
        self.patterns = tuple(patterns) if patterns is not None else _unique_patterns(features)
        self._specs = [(f.pattern.name, f.values, f.outcome) for f in features]
        names = {p.name for p in self.patterns}
        for f in features:
            if f.pattern.name not in names:
                raise ValueError(f"feature uses unknown pattern {f.pattern.name!r}")
            if f.outcome not in vocabulary.index:
                raise ValueError(f"feature outcome {f.outcome!r} not in vocabulary")
        if log_weights is None:
            log_weights = [math.log(f.weight) for f in features]
        self.log_weights = np.array(log_weights, dtype=np.float64)
        self.log_weights.setflags(write=False)
        if self.log_weights.shape != (len(features),):
            raise ValueError("one log-weight per feature required")

        ids: dict[tuple, int] = {}
        grouped: dict[tuple, list[tuple[int, int]]] = {}
        for j, f in enumerate(features):
            ids[f.context, f.outcome] = j
            grouped.setdefault(f.context, []).append((vocabulary.index[f.outcome], j))
        self._feature_id = ids
        self._index = {
            ctx: (np.array([o for o, _ in pairs], dtype=np.int32),
                  np.array([j for _, j in pairs], dtype=np.int32))
            for ctx, pairs in grouped.items()
        }
        self.diagnostics = Diagnostics()

    # -- evaluation ---------------------------------------------------------

    @property
    def n_outcomes(self) -> int:
        return len(self.vocabulary.outcomes)

    @property
    def features(self) -> list[Feature]:
        by_name = {p.name: p for p in self.patterns}
        return [Feature(by_name[name], values, outcome, math.exp(lw))
                for (name, values, outcome), lw in zip(self._specs, self.log_weights)]

    def __len__(self):
        return len(self._specs)

    def active_pairs(self, history: Mapping) -> tuple[np.ndarray, np.ndarray]:
        outs, fids = [], []
        for ctx in active_contexts(self.patterns, history):
            hit = self._index.get(ctx)
            if hit is not None:
                outs.append(hit[0])
                fids.append(hit[1])
        if not outs:
            return np.empty(0, np.int32), np.empty(0, np.int32)
        return np.concatenate(outs), np.concatenate(fids)

    def log_probs(self, history: Mapping) -> np.ndarray:
        """Log-probability of every outcome, indexed like ``vocabulary.outcomes``."""
        outs, fids = self.active_pairs(history)
        return kernels.log_softmax_scores(outs, fids, self.log_weights, self.n_outcomes)

    def distribution(self, history: Mapping) -> dict[str, float]:
        return dict(zip(self.vocabulary.outcomes, np.exp(self.log_probs(history)).tolist()))

    def prob(self, outcome: str, history: Mapping) -> float:
        return float(np.exp(self.log_probs(history)[self.vocabulary.index[outcome]]))

    # -- persistence --------------------------------------------------------

    def save(self, path) -> None:
        lines = [f"surfgen-maxent\t{FORMAT_VERSION}", f"cutoff\t{self.cutoff}"]
        for k, v in sorted(self.meta.items()):
            lines.append(f"meta\t{k}\t{v}")
        for p in self.patterns:
            lines.append("\t".join(["pattern", p.name, p.attrs or "-", *p.fields]))
        for w in self.vocabulary.words:
            lines.append(f"word\t{w}")
        for (name, values, outcome), lw in zip(self._specs, self.log_weights.tolist()):
            lines.append("\t".join(["feature", float.hex(lw), outcome, name, *values]))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "MaxentModel":
        with open(path, encoding="utf-8") as fh:
            rows = [line.rstrip("\n").split("\t") for line in fh if line.strip()]
        if not rows or rows[0][0] != "surfgen-maxent":
            raise SurfgenError(f"{path}: not a surfgen model file")
        if int(rows[0][1]) != FORMAT_VERSION:
            raise SurfgenError(f"{path}: unsupported model version {rows[0][1]}")
        cutoff, meta, patterns, words, feats, weights = 1, {}, {}, [], [], []
        for row in rows[1:]:
            kind = row[0]
            if kind == "cutoff":
                cutoff = int(row[1])
            elif kind == "meta":
                meta[row[1]] = row[2]
            elif kind == "pattern":
                patterns[row[1]] = Pattern(row[1], tuple(row[3:]), None if row[2] == "-" else row[2])
            elif kind == "word":
                words.append(row[1])
            elif kind == "feature":
                weights.append(float.fromhex(row[1]))
                feats.append(Feature(patterns[row[3]], tuple(row[4:]), row[2]))
            else:
                raise SurfgenError(f"{path}: unknown record {kind!r}")
        return cls(Vocabulary(words), feats, weights, patterns=list(patterns.values()),
                   cutoff=cutoff, meta=meta)


def conditional_prob(model: MaxentModel, history: Mapping) -> dict[str, float]:
    return model.distribution(history)


def log_likelihood(model: MaxentModel, events: Iterable[Event]) -> float:
    total = 0.0
    cache: dict = {}
    for ev in events:
        key = tuple(active_contexts(model.patterns, ev.history))
        lp = cache.get(key)
        if lp is None:
            lp = cache[key] = model.log_probs(ev.history)
        total += ev.count * float(lp[model.vocabulary.index[ev.outcome]])
    return total


# -- training ---------------------------------------------------------------

@dataclass
class _Compiled:
    hist_ptr: np.ndarray
    pair_out: np.ndarray
    pair_fid: np.ndarray
    hist_weight: np.ndarray
    ev_ptr: np.ndarray
    ev_out: np.ndarray
    ev_count: np.ndarray
    empirical: np.ndarray
    max_fsharp: int

    @property
    def n_histories(self):
        return len(self.hist_weight)


def _compile(model: MaxentModel, events: Sequence[Event]) -> _Compiled:
    """Group events by their set of active feature contexts and lay them out as CSR."""
    ctx_ids = {ctx: i for i, ctx in enumerate(model._index)}
    ctx_list = list(model._index)
    groups: dict[tuple, int] = {}
    weights: list[float] = []
    observed: list[Counter] = []
    empirical = np.zeros(len(model))
    vindex = model.vocabulary.index
    for ev in events:
        if ev.outcome not in vindex:
            raise SurfgenError(f"event outcome {ev.outcome!r} not in vocabulary")
        active = [ctx_ids[c] for c in active_contexts(model.patterns, ev.history) if c in ctx_ids]
        key = tuple(sorted(active))
        g = groups.get(key)
        if g is None:
            g = groups[key] = len(weights)
            weights.append(0.0)
            observed.append(Counter())
        weights[g] += ev.count
        observed[g][vindex[ev.outcome]] += ev.count
        for c in active:
            j = model._feature_id.get((ctx_list[c], ev.outcome))
            if j is not None:
                empirical[j] += ev.count

    hist_ptr = [0]
    outs, fids = [], []
    ev_ptr = [0]
    ev_out, ev_count = [], []
    max_fsharp = 1
    for key, g in groups.items():
        for c in key:
            o, f = model._index[ctx_list[c]]
            outs.append(o)
            fids.append(f)
        hist_ptr.append(hist_ptr[-1] + sum(len(model._index[ctx_list[c]][0]) for c in key))
        if key:
            fs = np.bincount(np.concatenate([model._index[ctx_list[c]][0] for c in key]))
            max_fsharp = max(max_fsharp, int(fs.max()))
        for o, n in sorted(observed[g].items()):
            ev_out.append(o)
            ev_count.append(n)
        ev_ptr.append(len(ev_out))
    cat = (lambda xs: np.concatenate(xs) if xs else np.empty(0, np.int32))
    return _Compiled(
        hist_ptr=np.array(hist_ptr, dtype=np.int64),
        pair_out=np.ascontiguousarray(cat(outs), dtype=np.int32),
        pair_fid=np.ascontiguousarray(cat(fids), dtype=np.int32),
        hist_weight=np.array(weights, dtype=np.float64),
        ev_ptr=np.array(ev_ptr, dtype=np.int64),
        ev_out=np.array(ev_out, dtype=np.int32),
        ev_count=np.array(ev_count, dtype=np.float64),
        empirical=empirical,
        max_fsharp=max_fsharp,
    )


def _expectations(data: _Compiled, log_w: np.ndarray, n_out: int, workers: int):
    """Sum shard expectations in canonical (ascending shard) order."""
    bounds = np.linspace(0, data.n_histories, max(1, workers) + 1).astype(int)
    shards = list(zip(bounds[:-1], bounds[1:]))

    def run(lo_hi):
        lo, hi = lo_hi
        return kernels.iis_expectations(
            data.hist_ptr, data.pair_out, data.pair_fid, data.hist_weight,
            data.ev_ptr, data.ev_out, data.ev_count, log_w, n_out, data.max_fsharp,
            int(lo), int(hi))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, shards))
    else:
        results = [run(s) for s in shards]
    expected = results[0][0]
    loglik = results[0][1]
    for e, ll in results[1:]:
        expected = expected + e
        loglik += ll
    return expected, loglik


def _iis_deltas(expected: np.ndarray, empirical: np.ndarray) -> np.ndarray:
    """Solve sum_m expected[j, m] * exp(delta_j * m) = empirical[j] for every j.

    Newton's method on the log of the left side, which is convex and
    increasing in delta.  When all mass sits at one feature-sum C the first
    step is already the closed form log(empirical / expected) / C.
    """
    m = np.arange(expected.shape[1], dtype=np.float64)
    with np.errstate(divide="ignore"):
        log_a = np.log(expected)
    target = np.log(empirical)
    total = expected.sum(axis=1)
    dead = total <= 0.0
    total[dead] = 1.0
    mean_m = (expected * m).sum(axis=1) / total
    mean_m[dead] = 1.0
    delta = (target - np.log(total)) / mean_m
    delta[dead] = 0.0
    for _ in range(100):
        z = log_a + delta[:, None] * m
        top = z.max(axis=1)
        top[dead] = 0.0
        w = np.exp(z - top[:, None])
        s = w.sum(axis=1)
        s[dead] = 1.0
        phi = top + np.log(s) - target
        slope = (w * m).sum(axis=1) / s
        step = np.where(dead, 0.0, phi / np.where(dead, 1.0, slope))
        delta -= step
        if np.all(np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(delta))):
            break
    return delta


def train_iis(events: Sequence[Event], features: Sequence[Feature], max_iters: int = 100,
              tol: float = 1e-4, vocabulary: Vocabulary | None = None,
              patterns: Sequence[Pattern] | None = None, cutoff: int = 1,
              meta: Mapping[str, str] | None = None, workers: int = 1,
              callback=None) -> MaxentModel:
    """Fit feature weights by Improved Iterative Scaling.

    Stops after ``max_iters`` updates or once every feature's expected count
    is within ``tol * max(1, empirical)`` of its empirical count.  Hitting
    the iteration limit is not an error; see ``model.diagnostics``.
    ``callback(iteration, loglik, gap)`` is called after every pass.
    """
    if vocabulary is None:
        vocabulary = Vocabulary(ev.outcome for ev in events if ev.outcome != STOP)
    model = MaxentModel(vocabulary, features, patterns=patterns, cutoff=cutoff, meta=meta)
    data = _compile(model, events)
    if len(features) and np.any(data.empirical <= 0):
        bad = features[int(np.argmin(data.empirical))]
        raise SurfgenError(f"feature never fires on the training events: {bad.describe()}")

    diag = Diagnostics()
    log_w = np.zeros(len(features))
    n_out = model.n_outcomes
    scale = np.maximum(1.0, data.empirical)
    for it in range(max_iters + 1):
        expected, loglik = _expectations(data, log_w, n_out, workers)
        totals = expected.sum(axis=1)
        gap = float(np.max(np.abs(totals - data.empirical) / scale)) if len(features) else 0.0
        diag.loglik.append(loglik)
        diag.gaps.append(gap)
        diag.iterations = it
        diag.gap = gap
        if callback is not None:
            callback(it, loglik, gap)
        log.debug("iis iteration %d loglik %.6f gap %.3g", it, loglik, gap)
        if gap < tol:
            diag.converged = True
            break
        if it == max_iters:
            break
        log_w = log_w + _iis_deltas(expected, data.empirical)

    trained = MaxentModel(vocabulary, features, log_w, patterns=model.patterns,
                          cutoff=cutoff, meta=meta)
    trained.diagnostics = diag
    return trained
