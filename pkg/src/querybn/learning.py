"""Parameter fitting for a fixed structure.

Two fitters are provided.  ``ofe`` fills each CPT row with (optionally
Laplace-smoothed) observed frequencies from complete tuples, ignoring the
query distribution.  ``fit_cpt`` minimizes the empirical squared-error
score over a set of labeled queries by analytic gradient descent.

The per-entry derivative of an answered conditional is

    dB(x|y) / de[q|r] = B(x|y) * (B(q,r | x,y) - B(q,r | y)) / e[q|r]

so the derivative of one query's squared error is ``2 (B(x|y) - p)``
times that.  It vanishes exactly when the answer is already correct, and
when the evidence d-separates the entry's family from the target (those
entries are skipped without inference).  For queries whose evidence
covers the target's Markov blanket the whole gradient reduces to local
CPT arithmetic (``_grad_blanket``); entries consistent with the query's
assignment follow the closed form

    2 (B - p) / e[q|r] * B * (1 - B)

The optimizer never touches entries directly: each row is parameterized
as softmax of unconstrained scores, so rows sum to one by construction
and stay strictly inside the simplex; entry gradients are chained
through the softmax Jacobian.  Scores are clipped to +-score_bound and
materialized rows are clamped into [eps_clamp, 1 - eps_clamp].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import bounds
from .inference import (ZeroEvidence, cond_prob, family_posterior,
                        is_markov_blanket_query, marginal, mb_posterior)
from .network import Assignment, BayesNet, EntryId, clamp_row, d_separated
from .queries import LabeledQuery, StatQuery
from .sampling import Dataset, collect_until_matched, cond_freq


# -- observed frequency estimates -------------------------------------------------


def ofe(structure: BayesNet, data: Dataset, alpha: float = 0.0) -> BayesNet:
    """Fill every CPT entry with the observed conditional frequency
    ``(count(q, r) + alpha) / (count(r) + alpha * arity)``.

    With ``alpha = 0`` a parent configuration that never occurs gets a
    uniform row.  Only the structure (variables + dag) of ``structure`` is
    used; its CPT values are ignored.
    """
    if alpha < 0:
        raise ValueError("smoothing must be non-negative")
    cols = {v: data.column(v) for v in structure.names}
    tables: dict[str, np.ndarray] = {}
    n = len(data)
    for v in structure.names:
        arity = structure.arity(v)
        n_rows = structure.cpts[v].table.shape[0]
        rows = np.zeros(n, dtype=np.int64)
        for p in structure.parents(v):
            rows = rows * structure.arity(p) + data.codes[:, cols[p]]
        flat = rows * arity + data.codes[:, cols[v]]
        counts = np.bincount(flat, minlength=n_rows * arity).reshape(n_rows, arity).astype(float)
        counts += alpha
        totals = counts.sum(axis=1, keepdims=True)
        table = np.divide(counts, totals, out=np.full_like(counts, 1.0 / arity), where=totals > 0)
        tables[v] = table
    return structure.with_tables(tables)


# -- analytic gradients ------------------------------------------------------------


def _family_can_affect(b: BayesNet, v: str, q: StatQuery) -> bool:
    """False only when the derivative of B(target|evidence) with respect to
    every entry of ``v``'s CPT is identically zero: the entry's family is
    either fully fixed by the evidence or d-separated from the target."""
    fam = {v, *b.parents(v)}
    if fam & q.target.keys():
        return True
    free = fam - q.evidence.keys()
    if not free:
        return False
    return not d_separated(b, free, set(q.target), set(q.evidence))


def db_dentry(b: BayesNet, q: StatQuery, e: EntryId) -> float:
    """Derivative of the answered conditional with respect to one raw CPT
    entry, holding all other entries fixed."""
    if not _family_can_affect(b, e.var, q):
        return 0.0
    value = b.entry_value(e)
    if value <= 0.0:
        raise ValueError(f"entry {b.describe_entry(e)} is zero; the derivative form "
                         "divides by it (fit against a clamped net)")
    xy = {**q.target, **q.evidence}
    m_y = marginal(b, q.evidence)
    if m_y <= 0.0:
        raise ZeroEvidence(q.evidence)
    m_xy = marginal(b, xy)
    B = m_xy / m_y
    qr = dict(b.decode_row(e.var, e.row))
    qr[e.var] = b.label(e.var, e.value)
    t1 = _cond_of_event(b, qr, xy, m_xy)
    t0 = _cond_of_event(b, qr, q.evidence, m_y)
    if t1 == t0:
        return 0.0
    return B * (t1 - t0) / value


def _cond_of_event(b: BayesNet, event: Assignment, given: Assignment, p_given: float) -> float:
    """B(event | given), with inconsistent events scoring 0."""
    for k, val in event.items():
        if k in given and given[k] != val:
            return 0.0
    merged = dict(given)
    merged.update(event)
    return marginal(b, merged) / p_given


def derr_dentry(b: BayesNet, lq: LabeledQuery, e: EntryId) -> float:
    """Derivative of one query's squared error with respect to a raw entry:
    ``2 (B(x|y) - p) * dB/de``; exactly zero when the answer matches the
    label."""
    B = cond_prob(b, lq.query.target, lq.query.evidence)
    resid = B - lq.label
    if resid == 0.0:
        return 0.0
    return 2.0 * resid * db_dentry(b, lq.query, e)


def derr_dentry_mb(b: BayesNet, lq: LabeledQuery, e: EntryId) -> float:
    """Blanket-query closed form for the squared-error derivative.

    Requires the query's evidence to cover the target's Markov blanket.
    Entries whose event (value, parent row) is not consistent with the
    query's target-plus-evidence assignment contribute 0 by convention.
    """
    q = lq.query
    if not is_markov_blanket_query(b, q):
        raise ValueError("query is not a Markov-blanket query")
    (v, v_val), = q.target.items()
    assignment = {**q.target, **q.evidence}
    fam = (e.var, *b.parents(e.var))
    if any(f not in assignment for f in fam):
        return 0.0
    event = dict(b.decode_row(e.var, e.row))
    event[e.var] = b.label(e.var, e.value)
    if any(assignment[f] != val for f, val in event.items()):
        return 0.0
    if v not in fam:
        return 0.0  # family fully fixed by the evidence; no effect on B(x|y)
    B = float(mb_posterior(b, v, q.evidence)[b.code(v, v_val)])
    resid = B - lq.label
    if resid == 0.0 or B == 0.0 or B == 1.0:
        return 0.0
    value = b.entry_value(e)
    if value <= 0.0:
        raise ValueError(f"entry {b.describe_entry(e)} is zero; gradient undefined")
    return 2.0 * resid * B * (1.0 - B) / value


def grad(b: BayesNet, qs: Sequence[LabeledQuery], weights: Sequence[float] | None = None,
         ) -> dict[str, np.ndarray]:
    """Weighted sum of per-query error derivatives for every CPT entry.

    Returns one array per variable, shaped like its CPT.  With the default
    weights ``1/len(qs)`` this is the gradient of :func:`scoring.empirical_err`.
    Blanket queries take the local-arithmetic path; entries whose family is
    d-separated from a query's target get exact zeros without inference.
    """
    if weights is None:
        weights = [1.0 / len(qs)] * len(qs)
    if len(weights) != len(qs):
        raise ValueError("weights must match queries")
    g = {v: np.zeros_like(b.cpts[v].table) for v in b.names}
    for lq, w in zip(qs, weights):
        if is_markov_blanket_query(b, lq.query):
            _grad_blanket(g, b, lq, w)
        else:
            _grad_general(g, b, lq, w)
    return g


def _grad_general(g: dict[str, np.ndarray], b: BayesNet, lq: LabeledQuery, w: float) -> None:
    q = lq.query
    xy = {**q.target, **q.evidence}
    m_y = marginal(b, q.evidence)
    if m_y <= 0.0:
        raise ZeroEvidence(q.evidence)
    B = marginal(b, xy) / m_y
    resid = B - lq.label
    if resid == 0.0:
        return
    coeff = 2.0 * w * resid * B
    for v in b.names:
        if not _family_can_affect(b, v, q):
            continue
        table = b.cpts[v].table
        if (table <= 0.0).any():
            row, col = np.argwhere(table <= 0.0)[0]
            raise ValueError(f"entry {b.describe_entry(EntryId(v, int(row), int(col)))} is zero; "
                             "the derivative form divides by it (fit against a clamped net)")
        p1 = family_posterior(b, v, xy)
        p0 = family_posterior(b, v, q.evidence)
        g[v] += coeff * (p1 - p0) / table


def _grad_blanket(g: dict[str, np.ndarray], b: BayesNet, lq: LabeledQuery, w: float) -> None:
    """Local-arithmetic gradient for a blanket query.

    Only the target's own row and its children's rows can matter.  For the
    row configurations consistent with the evidence, the value matching the
    query's assignment follows the ``2(B-p) B (1-B) / e`` closed form and
    every sibling value v' follows ``-2(B-p) B B(v'|y) / e``; both fall out
    of the same normalized score vector.
    """
    q = lq.query
    (v, v_val), = q.target.items()
    y = q.evidence
    post = mb_posterior(b, v, y)
    val = b.code(v, v_val)
    B = float(post[val])
    resid = B - lq.label
    if resid == 0.0:
        return
    coeff = 2.0 * w * resid * B

    def add(var: str, row: int, col: int, numer: float) -> None:
        if numer == 0.0:
            return
        entry = b.cpts[var].table[row, col]
        if entry <= 0.0:
            raise ValueError(f"entry {b.describe_entry(EntryId(var, row, col))} is zero; "
                             "gradient undefined")
        g[var][row, col] += numer / entry

    own_row = b.row_index(v, y)
    for k in range(b.arity(v)):
        numer = coeff * (1.0 - B) if k == val else -coeff * float(post[k])
        add(v, own_row, k, numer)

    local = dict(y)
    for k in range(b.arity(v)):
        local[v] = b.label(v, k)
        numer = coeff * (1.0 - B) if k == val else -coeff * float(post[k])
        for c in b.children(v):
            add(c, b.row_index(c, local), b.code(c, y[c]), numer)


def flatten_grad(b: BayesNet, g: Mapping[str, np.ndarray]) -> dict[EntryId, float]:
    """Per-entry view of a gradient, for reports and tests."""
    out: dict[EntryId, float] = {}
    for v, table in g.items():
        rows, arity = table.shape
        for r in range(rows):
            for k in range(arity):
                out[EntryId(v, r, k)] = float(table[r, k])
    return out


# -- gradient-descent fitter -------------------------------------------------------


@dataclass(frozen=True)
class FitOptions:
    """Knobs for :func:`fit_cpt`.

    ``init`` selects the first restart's starting point: ``"uniform"``,
    ``"dirichlet"`` (symmetric, ``dirichlet_alpha``), ``"ofe"`` (requires
    ``init_data``), or ``"net"`` (requires ``init_net``).  Restarts after
    the first always draw fresh Dirichlet rows, since deterministic inits
    would just repeat themselves.
    """

    init: str = "dirichlet"
    dirichlet_alpha: float = 1.0
    restarts: int = 5
    max_iters: int = 200
    step: float = 1.0
    max_halvings: int = 30
    tol: float = 1e-8
    eps_clamp: float = 1e-6
    seed: int = 0
    score_bound: float = 30.0

    def __post_init__(self):
        if self.init not in ("uniform", "dirichlet", "ofe", "net"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be at least 1")
        if not 0.0 < self.eps_clamp < 0.5:
            raise ValueError("eps_clamp must lie in (0, 0.5)")
        if self.step <= 0 or self.tol < 0 or self.score_bound <= 0:
            raise ValueError("step and score_bound must be positive, tol non-negative")


@dataclass(frozen=True)
class TraceRow:
    restart: int
    iteration: int
    err: float
    grad_norm: float
    step: float
    accepted: bool


@dataclass
class FitResult:
    net: BayesNet
    err: float
    trace: list[TraceRow]
    restart: int
    converged: bool
    labeled_queries: list[LabeledQuery] = field(default_factory=list)

    def write_trace_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["restart", "iteration", "err", "grad_norm", "step", "accepted"])
            for r in self.trace:
                w.writerow([r.restart, r.iteration, repr(r.err), repr(r.grad_norm),
                            repr(r.step), int(r.accepted)])


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _materialize(structure: BayesNet, scores: dict[str, np.ndarray], eps: float) -> BayesNet:
    return structure.with_tables({v: clamp_row(_softmax_rows(s), eps) for v, s in scores.items()})


def _chain_to_scores(scores: dict[str, np.ndarray], g_entries: Mapping[str, np.ndarray],
                     eps: float) -> dict[str, np.ndarray]:
    """Pull an entry-space gradient back through clamp(softmax(scores)).

    Row map: entry_k = eps + (1 - m*eps) * softmax(s)_k, so
    d err / d s_j = (1 - m*eps) * sm_j * (g_j - sum_k sm_k g_k).
    """
    out = {}
    for v, s in scores.items():
        sm = _softmax_rows(s)
        m = s.shape[1]
        ge = g_entries[v]
        inner = (sm * ge).sum(axis=1, keepdims=True)
        out[v] = (1.0 - m * eps) * sm * (ge - inner)
    return out


def _grad_norm(g: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float((t * t).sum()) for t in g.values())))


def _empirical_err_value(net: BayesNet, qs: Sequence[LabeledQuery]) -> float:
    from .scoring import empirical_err  # local import to avoid a cycle

    report = empirical_err(net, qs)
    if report.n_errors:
        bad = next(r.query for r in report.rows if r.note is not None)
        raise ZeroEvidence(bad.evidence)
    return report.aggregate


def _scores_from_tables(structure: BayesNet, tables: Mapping[str, np.ndarray],
                        bound: float, eps: float) -> dict[str, np.ndarray]:
    """Scores whose materialization reproduces the given rows.

    Inverts entry = eps + (1 - m*eps) softmax(s); rows with entries at or
    below the clamp floor land on the floor instead.
    """
    out = {}
    for v in structure.names:
        t = np.asarray(tables[v], dtype=float)
        m = t.shape[1]
        inner = np.clip((t - eps) / (1.0 - m * eps), 1e-300, None)
        s = np.log(inner)
        s = s - s.mean(axis=1, keepdims=True)
        out[v] = np.clip(s, -bound, bound)
    return out


def _initial_scores(structure: BayesNet, opts: FitOptions, restart: int,
                    rng: np.random.Generator, init_net: BayesNet | None,
                    init_data: Dataset | None) -> dict[str, np.ndarray]:
    shapes = {v: structure.cpts[v].table.shape for v in structure.names}
    if restart > 0 or opts.init == "dirichlet":
        alpha = opts.dirichlet_alpha
        return {v: np.log(rng.dirichlet([alpha] * shape[1], size=shape[0]))
                for v, shape in shapes.items()}
    if opts.init == "uniform":
        return {v: np.zeros(shape) for v, shape in shapes.items()}
    if opts.init == "ofe":
        if init_data is None:
            raise ValueError("init='ofe' requires init_data")
        fitted = ofe(structure, init_data, alpha=1.0)
        return _scores_from_tables(structure, {v: fitted.cpts[v].table for v in structure.names},
                                   opts.score_bound, opts.eps_clamp)
    if init_net is None:
        raise ValueError("init='net' requires init_net")
    return _scores_from_tables(structure, {v: init_net.cpts[v].table for v in structure.names},
                               opts.score_bound, opts.eps_clamp)


def fit_cpt(structure: BayesNet, qs: Sequence[LabeledQuery], opts: FitOptions = FitOptions(),
            *, init_net: BayesNet | None = None, init_data: Dataset | None = None,
            on_step: Callable[[BayesNet, int, float], None] | None = None) -> FitResult:
    """Fit CPTs to labeled queries by clamped gradient descent with restarts.

    Each restart runs backtracking line search (step halved until the error
    decreases), so accepted steps never increase the empirical error, and
    stops when the score-space gradient norm falls below ``tol``, the step
    search stalls, or ``max_iters`` is reached.  The best restart by final
    error wins (ties broken by restart index).  No global optimality is
    claimed: the returned net is a local fit.
    """
    if not qs:
        raise ValueError("fit_cpt needs at least one labeled query")
    rng = np.random.default_rng(opts.seed)
    trace: list[TraceRow] = []
    best: tuple[float, int, BayesNet, bool] | None = None
    for restart in range(opts.restarts):
        scores = {v: np.clip(s, -opts.score_bound, opts.score_bound)
                  for v, s in _initial_scores(structure, opts, restart, rng,
                                              init_net, init_data).items()}
        net = _materialize(structure, scores, opts.eps_clamp)
        err = _empirical_err_value(net, qs)
        step = opts.step
        converged = False
        for it in range(1, opts.max_iters + 1):
            g_entries = grad(net, qs)
            g_scores = _chain_to_scores(scores, g_entries, opts.eps_clamp)
            gnorm = _grad_norm(g_scores)
            if gnorm < opts.tol:
                trace.append(TraceRow(restart, it, err, gnorm, 0.0, False))
                converged = True
                break
            accepted = False
            t = step
            for _ in range(opts.max_halvings + 1):
                candidate = {v: np.clip(s - t * g_scores[v], -opts.score_bound, opts.score_bound)
                             for v, s in scores.items()}
                cand_net = _materialize(structure, candidate, opts.eps_clamp)
                cand_err = _empirical_err_value(cand_net, qs)
                if cand_err < err:
                    accepted = True
                    break
                t *= 0.5
            trace.append(TraceRow(restart, it, err, gnorm, t if accepted else 0.0, accepted))
            if not accepted:
                break
            scores, net, err = candidate, cand_net, cand_err
            step = t * 2.0
            if on_step is not None:
                on_step(net, it, err)
        if best is None or err < best[0]:
            best = (err, restart, net, converged)
    err, restart, net, converged = best
    return FitResult(net=net, err=err, trace=trace, restart=restart, converged=converged)


def fit_cpt_from_events(structure: BayesNet, qs: Sequence[StatQuery], source: BayesNet,
                        opts: FitOptions = FitOptions(), eps: float = 0.2, delta: float = 0.2,
                        *, cap: int = 10_000_000) -> FitResult:
    """Fit from unlabeled queries plus an event source.

    Draws tuples from ``source`` until every distinct evidence pattern has
    the required number of matches, labels each query with its observed
    conditional frequency, then runs :func:`fit_cpt` on the labeled set.
    """
    if not qs:
        raise ValueError("fit_cpt_from_events needs at least one query")
    per = bounds.m_prime_d(eps, delta, bounds.m_sq(eps, delta))
    seen: list[Assignment] = []
    keys = set()
    for q in qs:
        key = tuple(sorted(q.evidence.items()))
        if key not in keys:
            keys.add(key)
            seen.append(q.evidence)
    data = collect_until_matched(source, seen, per, cap=cap, seed=opts.seed)
    labeled = [LabeledQuery(q, cond_freq(data, q.target, q.evidence)) for q in qs]
    result = fit_cpt(structure, labeled, opts)
    result.labeled_queries = labeled
    return result
