"""Arbiter query interfaces, exact and too-close-to-call, with query accounting.

Query kinds:
  * real    -- exact distance value (noisy in the TCTC model)
  * triplet -- is a closer to b or to c
  * quad    -- is pair (a,b) farther apart than pair (x,y)

The TCTC model adds the answer ``TCTC`` (-1): comparisons whose true
difference is at most ``alpha_l`` are always declared too close to call,
differences inside (alpha_l, alpha_h) fall to the configured gray policy, and
anything at least ``alpha_h`` apart is answered truthfully.  Real answers in
the TCTC model carry noise bounded strictly below ``alpha_h``.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from fairmetric.rng import derive_rng
from fairmetric.universe import TIE_TOL, Element, InvalidParameterError, Universe

#: Sentinel relative-query answer: too close to call.
TCTC = -1

GRAY_POLICIES = ("always-answer", "always-tctc", "bernoulli")
NOISE_MODELS = ("zero", "uniform", "adversarial-sign")


@dataclass
class PhaseCounts:
    real: int = 0
    triplet: int = 0
    quad: int = 0

    def total(self) -> int:
        return self.real + self.triplet + self.quad


class QueryLedger:
    """Monotone counters of arbiter queries, broken down by phase label."""

    def __init__(self):
        self.real_count = 0
        self.triplet_count = 0
        self.quad_count = 0
        self.by_phase: dict[str, PhaseCounts] = {}
        self._phase = "default"

    def set_phase(self, label: str) -> None:
        self._phase = label

    @property
    def phase(self) -> str:
        return self._phase

    def record(self, kind: str) -> None:
        counts = self.by_phase.setdefault(self._phase, PhaseCounts())
        if kind == "real":
            self.real_count += 1
            counts.real += 1
        elif kind == "triplet":
            self.triplet_count += 1
            counts.triplet += 1
        elif kind == "quad":
            self.quad_count += 1
            counts.quad += 1
        else:
            raise ValueError(f"unknown query kind {kind!r}")

    def total(self) -> int:
        return self.real_count + self.triplet_count + self.quad_count

    def to_json_dict(self) -> dict:
        return {
            "real": self.real_count,
            "triplet": self.triplet_count,
            "quad": self.quad_count,
            "by_phase": {
                label: {"real": c.real, "triplet": c.triplet, "quad": c.quad}
                for label, c in sorted(self.by_phase.items())
            },
        }


@dataclass(frozen=True)
class TctcParams:
    """Relaxed-arbiter constants and behavior knobs.

    ``gray_q`` is only used by the ``bernoulli`` gray policy (probability of
    answering truthfully inside the gray zone).  ``noise_eta`` bounds the
    real-answer noise magnitude and must stay strictly below ``alpha_h``; the
    ``adversarial-sign`` model alternates the noise sign between successive
    real queries, starting with ``noise_sign``, which is the worst case for
    pairwise differences.
    """

    alpha_l: float
    alpha_h: float
    gray_policy: str = "always-answer"
    gray_q: float = 0.5
    noise_model: str = "zero"
    noise_eta: float = 0.0
    noise_sign: int = 1

    def __post_init__(self):
        if not (0 < self.alpha_l < 1):
            raise InvalidParameterError("alpha_l must lie in (0,1)")
        if not (self.alpha_l <= self.alpha_h < 1):
            raise InvalidParameterError("need alpha_l <= alpha_h < 1")
        if self.gray_policy not in GRAY_POLICIES:
            raise InvalidParameterError(f"gray_policy must be one of {GRAY_POLICIES}")
        if self.noise_model not in NOISE_MODELS:
            raise InvalidParameterError(f"noise_model must be one of {NOISE_MODELS}")
        if self.noise_model != "zero" and not (0 <= self.noise_eta < self.alpha_h):
            raise InvalidParameterError("noise magnitude must be strictly below alpha_h")
        if self.noise_sign not in (-1, 1):
            raise InvalidParameterError("noise_sign must be +1 or -1")

    def to_json_dict(self) -> dict:
        return {
            "alpha_l": self.alpha_l,
            "alpha_h": self.alpha_h,
            "gray_policy": self.gray_policy,
            "gray_q": self.gray_q,
            "noise_model": self.noise_model,
            "noise_eta": self.noise_eta,
            "noise_sign": self.noise_sign,
        }


class _SimulatedArbiter:
    """Shared truth access with per-anchor distance-row caching.

    Caching only avoids recomputing the same ground-truth value; every query
    is still recorded in the ledger individually.
    """

    universe: Universe
    ledger: QueryLedger

    def set_phase(self, label: str) -> None:
        self.ledger.set_phase(label)

    def _row(self, eid: str) -> "np.ndarray":
        rows = self.__dict__.setdefault("_rows", {})
        row = rows.get(eid)
        if row is None:
            row = self.universe.distances_from_id(eid)
            rows[eid] = row
        return row

    def _d(self, a: Element, b: Element) -> float:
        if a.id == b.id:
            self.universe.index_of(a.id)
            return 0.0
        rows = self.__dict__.setdefault("_rows", {})
        row = rows.get(a.id)
        if row is None:
            row = rows.get(b.id)
            if row is not None:
                return float(row[self.universe.index_of(a.id)])
            row = self._row(a.id)
        return float(row[self.universe.index_of(b.id)])


class ExactArbiter(_SimulatedArbiter):
    """Simulated arbiter answering every query exactly from the ground metric."""

    is_tctc = False

    def __init__(self, universe: Universe, ledger: QueryLedger | None = None):
        self.universe = universe
        self.ledger = ledger or QueryLedger()

    def o_real(self, a: Element, b: Element) -> float:
        self.ledger.record("real")
        return self._d(a, b)

    def o_triplet(self, a: Element, b: Element, c: Element) -> int:
        """1 iff D(a,b) < D(a,c); ties answer 0."""
        self.ledger.record("triplet")
        return 1 if self._d(a, b) < self._d(a, c) - TIE_TOL else 0

    def o_quad(self, a: Element, b: Element, x: Element, y: Element) -> int:
        """1 iff D(a,b) > D(x,y); ties answer 0."""
        self.ledger.record("quad")
        return 1 if self._d(a, b) > self._d(x, y) + TIE_TOL else 0


class TctcArbiter(_SimulatedArbiter):
    """Simulated arbiter with an indistinguishability floor and bounded noise."""

    is_tctc = True

    def __init__(self, universe: Universe, params: TctcParams, seed: int = 0,
                 ledger: QueryLedger | None = None):
        self.universe = universe
        self.params = params
        self.ledger = ledger or QueryLedger()
        self._rng = derive_rng(seed, "tctc-arbiter")
        self._real_calls = 0

    def _noise(self) -> float:
        p = self.params
        if p.noise_model == "zero":
            return 0.0
        if p.noise_model == "uniform":
            return float(self._rng.uniform(-p.noise_eta, p.noise_eta))
        sign = p.noise_sign if self._real_calls % 2 == 0 else -p.noise_sign
        return sign * p.noise_eta

    def o_real(self, a: Element, b: Element) -> float:
        self.ledger.record("real")
        eta = self._noise()
        self._real_calls += 1
        return float(min(1.0, max(0.0, self._d(a, b) + eta)))

    def _relative(self, d1: float, d2: float, kind: str) -> int:
        # d1 vs d2 compared per the exact-model convention once answering.
        p = self.params
        diff = abs(d1 - d2)
        if diff <= p.alpha_l:
            return TCTC
        if diff < p.alpha_h:
            if p.gray_policy == "always-tctc":
                return TCTC
            if p.gray_policy == "bernoulli" and self._rng.random() >= p.gray_q:
                return TCTC
        if kind == "triplet":
            return 1 if d1 < d2 - TIE_TOL else 0
        return 1 if d1 > d2 + TIE_TOL else 0

    def o_triplet(self, a: Element, b: Element, c: Element) -> int:
        """1 iff D(a,b) < D(a,c), 0 for the reverse, TCTC when too close."""
        self.ledger.record("triplet")
        return self._relative(self._d(a, b), self._d(a, c), "triplet")

    def o_quad(self, a: Element, b: Element, x: Element, y: Element) -> int:
        """1 iff D(a,b) > D(x,y), 0 for the reverse, TCTC when too close."""
        self.ledger.record("quad")
        return self._relative(self._d(a, b), self._d(x, y), "quad")


# ---------------------------------------------------------------------------
# Human bridge: a blocking request/answer queue driven through the service API.
# ---------------------------------------------------------------------------


class SessionAborted(RuntimeError):
    """The human session was aborted while a query was pending."""


class AnswerTimeout(RuntimeError):
    """No answer was posted within the configured timeout."""


class ReplayMismatch(RuntimeError):
    """A replayed log does not match the query sequence the engine produced."""


@dataclass
class LogEntry:
    seq: int
    kind: str
    operands: list[str]
    answer: float | int
    t: float

    def to_json_dict(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "operands": self.operands,
                "answer": self.answer, "t": self.t}


@dataclass
class PendingQuery:
    seq: int
    kind: str
    operands: list[Element]


@dataclass
class SessionRecord:
    """Append-only log of queries and answers for one arbiter session."""

    session_id: str
    status: str = "running"
    log: list[LogEntry] = field(default_factory=list)

    def append(self, entry: LogEntry) -> None:
        self.log.append(entry)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_json_dict()) + "\n" for e in self.log)

    @classmethod
    def log_from_jsonl(cls, text: str) -> list[LogEntry]:
        entries = []
        for line in text.splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            entries.append(LogEntry(doc["seq"], doc["kind"], list(doc["operands"]),
                                    doc["answer"], doc["t"]))
        return entries


class HumanBridgeArbiter:
    """Arbiter that forwards each query to a live human session.

    The elicitation engine calls the ``o_*`` methods from its worker thread;
    each call blocks until the service posts an answer (or aborts).  At most
    one query is outstanding per session.  When ``replay`` entries are given,
    they are consumed first without blocking, which is how a restarted service
    reaches the same pending query after a crash.
    """

    def __init__(self, record: SessionRecord, tctc: bool = False,
                 timeout: float | None = None,
                 replay: Sequence[LogEntry] = (),
                 durable_write: Callable[[LogEntry], None] | None = None):
        self.record = record
        self.is_tctc = tctc
        self.timeout = timeout
        self.ledger = QueryLedger()
        self.params = None  # TctcParams attached by the session for TCTC runs
        self._cond = threading.Condition()
        self._pending: PendingQuery | None = None
        self._answer: float | int | None = None
        self._aborted = False
        self._seq = 0
        self._replay = list(replay)
        self._durable_write = durable_write

    def set_phase(self, label: str) -> None:
        self.ledger.set_phase(label)

    # -- engine side -----------------------------------------------------------

    def ask(self, kind: str, operands: list[Element]) -> float | int:
        self.ledger.record(kind)
        seq = self._seq
        self._seq += 1
        if self._replay:
            entry = self._replay.pop(0)
            if entry.kind != kind or entry.operands != [e.id for e in operands]:
                raise ReplayMismatch(
                    f"log entry {entry.seq} ({entry.kind} {entry.operands}) does not match "
                    f"engine query {seq} ({kind} {[e.id for e in operands]})")
            self.record.append(entry)
            return entry.answer
        with self._cond:
            if self._aborted:
                raise SessionAborted(self.record.session_id)
            self._pending = PendingQuery(seq, kind, list(operands))
            self._answer = None
            self.record.status = "awaiting-human"
            self._cond.notify_all()
            deadline = None if self.timeout is None else time.monotonic() + self.timeout
            while self._answer is None:
                if self._aborted:
                    self._pending = None
                    raise SessionAborted(self.record.session_id)
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    self._pending = None
                    self.record.status = "running"
                    raise AnswerTimeout(f"query {seq} timed out")
                self._cond.wait(timeout=remaining)
            answer = self._answer
            self._answer = None
            self.record.status = "running"
            self._cond.notify_all()
        return answer

    def o_real(self, a: Element, b: Element) -> float:
        return float(self.ask("real", [a, b]))

    def o_triplet(self, a: Element, b: Element, c: Element) -> int:
        return int(self.ask("triplet", [a, b, c]))

    def o_quad(self, a: Element, b: Element, x: Element, y: Element) -> int:
        return int(self.ask("quad", [a, b, x, y]))

    # -- service side ------------------------------------------------------------

    def pending(self) -> PendingQuery | None:
        with self._cond:
            return self._pending

    def wait_for_pending(self, timeout: float | None = None) -> PendingQuery | None:
        with self._cond:
            if self._pending is None and not self._aborted:
                self._cond.wait(timeout=timeout)
            return self._pending

    def post_answer(self, seq: int, answer: float | int) -> None:
        """Record an answer for the pending query.

        The answer is appended to the durable log before this call returns
        (i.e. before acknowledgment) and before the engine resumes.
        """
        with self._cond:
            if self._pending is None or self._pending.seq != seq:
                raise StaleSeqError(f"no pending query with seq {seq}")
            self._validate(self._pending.kind, answer)
            entry = LogEntry(seq, self._pending.kind,
                             [e.id for e in self._pending.operands], answer, time.time())
            if self._durable_write is not None:
                self._durable_write(entry)
            self.record.append(entry)
            self._answer = answer
            self._pending = None
            self._cond.notify_all()

    def abort(self) -> None:
        with self._cond:
            self._aborted = True
            self._cond.notify_all()

    def _validate(self, kind: str, answer: float | int) -> None:
        if kind == "real":
            if not isinstance(answer, (int, float)) or not (0.0 <= float(answer) <= 1.0):
                raise InvalidAnswerError("real answers must lie in [0,1]")
        else:
            allowed = {0, 1, TCTC} if self.is_tctc else {0, 1}
            if answer not in allowed:
                raise InvalidAnswerError(f"{kind} answers must be one of {sorted(allowed)}")


class StaleSeqError(ValueError):
    """An answer was posted for a query that is not the pending one."""


class InvalidAnswerError(ValueError):
    """An answer was outside the allowed range for the query kind and mode."""


class LoggingArbiter:
    """Wraps any arbiter and records every query/answer as session log entries."""

    def __init__(self, inner):
        self.inner = inner
        self.entries: list[LogEntry] = []
        self._seq = 0

    @property
    def is_tctc(self) -> bool:
        return getattr(self.inner, "is_tctc", False)

    @property
    def params(self):
        return getattr(self.inner, "params", None)

    @property
    def ledger(self) -> QueryLedger:
        return self.inner.ledger

    def set_phase(self, label: str) -> None:
        self.inner.set_phase(label)

    def _log(self, kind: str, operands: list[Element], answer: float | int):
        self.entries.append(LogEntry(self._seq, kind, [e.id for e in operands],
                                     answer, time.time()))
        self._seq += 1
        return answer

    def o_real(self, a: Element, b: Element) -> float:
        return self._log("real", [a, b], self.inner.o_real(a, b))

    def o_triplet(self, a: Element, b: Element, c: Element) -> int:
        return self._log("triplet", [a, b, c], self.inner.o_triplet(a, b, c))

    def o_quad(self, a: Element, b: Element, x: Element, y: Element) -> int:
        return self._log("quad", [a, b, x, y], self.inner.o_quad(a, b, x, y))

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_json_dict()) + "\n" for e in self.entries)
