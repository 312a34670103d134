"""The discrimination test: can a viewer tell real images from rendered ones?

A session shows a subject one stimulus per trial; the subject answers "real"
or "synthetic".  If the count of correct answers is statistically
indistinguishable from coin flipping (one-sided exact binomial against
chance 0.5), the rendered images pass.

Note the polarity: verdict PASSED means *failure to reject* the null of
chance performance.  Every report carries the caveat string below verbatim.
"""

from __future__ import annotations

import hashlib
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import DuplicateResponseError, SessionStateError

KINDS = ("real", "synthetic")

DEFAULT_ALPHA = 0.05

# Default trial count. At alpha = 0.05 the rejection threshold for n = 64 is
# k >= 40, which gives power 0.92 against a subject who is right 70% of the
# time (see test suite for the enumeration backing this).
DEFAULT_TRIALS = 64

EPISTEMIC_CAVEAT = "absence of evidence of discrimination at alpha"

VERDICT_PASSED = "PASSED"  # indistinguishable from chance
VERDICT_FAILED = "FAILED"  # subject discriminates reality


@dataclass(frozen=True)
class Stimulus:
    """One image a subject can be shown.

    ``kind`` is the ground truth and must never reach a subject-facing
    payload.  ``reference_path`` optionally names a comparison image used by
    threshold-mode simulated observers.
    """

    id: str
    kind: str
    image_path: Path
    provenance: str = ""
    reference_path: Path | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.id:
            raise ValueError("stimulus id must be non-empty")


@dataclass(frozen=True)
class PlannedTrial:
    trial_index: int
    stimulus_id: str


@dataclass(frozen=True)
class TrialPlan:
    session_id: str
    trials: tuple[PlannedTrial, ...]
    seed: int
    n: int


@dataclass(frozen=True)
class Response:
    trial_index: int
    choice: str
    timestamp: float


@dataclass
class SessionRecord:
    """A plan plus the responses collected so far.

    Responses are append-only, at most one per trial, accepted in any order
    while the session is open.  The session is complete once every trial has
    an answer.
    """

    plan: TrialPlan
    responses: dict[int, Response] = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "complete" if len(self.responses) == self.plan.n else "open"

    @property
    def is_complete(self) -> bool:
        return self.status == "complete"


@dataclass(frozen=True)
class TestResult:
    n: int
    k_correct: int
    p_value: float
    alpha: float
    verdict: str

    def __post_init__(self) -> None:
        if not (0 <= self.k_correct <= self.n):
            raise ValueError("k_correct out of range")
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError("p_value out of range")

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "k_correct": self.k_correct,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "verdict": self.verdict,
            "caveat": EPISTEMIC_CAVEAT,
        }


@dataclass(frozen=True)
class SimulatedObserver:
    """A stand-in subject.

    Exactly one mode must be set: ``per_trial_accuracy`` answers correctly
    with independent probability q per trial; ``difference_threshold`` judges
    a stimulus synthetic when its mean absolute pixel difference from the
    stimulus's reference image exceeds the threshold.
    """

    per_trial_accuracy: float | None = None
    difference_threshold: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        modes = (self.per_trial_accuracy is not None) + (
            self.difference_threshold is not None
        )
        if modes != 1:
            raise ValueError("set exactly one of per_trial_accuracy / difference_threshold")
        if self.per_trial_accuracy is not None and not (
            0.0 <= self.per_trial_accuracy <= 1.0
        ):
            raise ValueError(
                f"per_trial_accuracy must be in [0, 1], got {self.per_trial_accuracy}"
            )


def plan_trials(pool: list[Stimulus], n: int, seed: int) -> TrialPlan:
    """Build a seeded, kind-balanced trial schedule.

    Real and synthetic counts differ by at most 1 (which kind gets the odd
    trial is itself seed-determined).  Stimuli of each kind are cycled in
    seeded-shuffled order so repetition is as even as the pool allows.  The
    trial order is a seeded shuffle; nothing about position encodes kind.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    reals = [s for s in pool if s.kind == "real"]
    synths = [s for s in pool if s.kind == "synthetic"]
    if not reals or not synths:
        raise ValueError("pool must contain at least one real and one synthetic stimulus")

    rng = random.Random(seed)
    n_real = n // 2
    if n % 2 == 1 and rng.random() < 0.5:
        n_real += 1

    def cycle(stims: list[Stimulus], count: int) -> list[Stimulus]:
        order = list(stims)
        rng.shuffle(order)
        return [order[i % len(order)] for i in range(count)]

    chosen = cycle(reals, n_real) + cycle(synths, n - n_real)
    rng.shuffle(chosen)

    digest = hashlib.sha256()
    digest.update(f"{seed}:{n}:".encode())
    digest.update(",".join(s.id for s in pool).encode())
    session_id = digest.hexdigest()[:12]

    trials = tuple(
        PlannedTrial(trial_index=i, stimulus_id=s.id) for i, s in enumerate(chosen)
    )
    return TrialPlan(session_id=session_id, trials=trials, seed=seed, n=n)


def record_response(
    session: SessionRecord,
    trial_index: int,
    choice: str,
    timestamp: float | None = None,
) -> SessionRecord:
    """Record one answer; trials may be answered in any order."""
    if session.is_complete:
        raise SessionStateError(
            f"session {session.plan.session_id} is complete; no further responses"
        )
    if not (0 <= trial_index < session.plan.n):
        raise ValueError(
            f"trial_index {trial_index} out of range for n={session.plan.n}"
        )
    if choice not in KINDS:
        raise ValueError(f"choice must be one of {KINDS}, got {choice!r}")
    if trial_index in session.responses:
        raise DuplicateResponseError(
            f"trial {trial_index} of session {session.plan.session_id} "
            "already has a response"
        )
    session.responses[trial_index] = Response(
        trial_index=trial_index,
        choice=choice,
        timestamp=time.time() if timestamp is None else timestamp,
    )
    return session


def binomial_p_value(n: int, k: int, chance: float = 0.5) -> float:
    """One-sided exact tail P(K >= k) for K ~ Binomial(n, chance).

    For the fair-coin case the tail is summed in exact integer arithmetic and
    converted to float once, so results are correctly rounded for any n this
    lab will see (n <= 10^4 takes well under a second).  Other chance levels
    use log-space summation.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not (0 <= k <= n):
        raise ValueError(f"k must be in [0, n], got k={k}, n={n}")
    if not (0.0 < chance < 1.0):
        raise ValueError(f"chance must be in (0, 1), got {chance}")
    if k == 0:
        return 1.0
    if chance == 0.5:
        tail = 0
        c = math.comb(n, k)
        for j in range(k, n + 1):
            tail += c
            c = c * (n - j) // (j + 1)
        return float(Fraction(tail, 1 << n))
    log_p = math.log(chance)
    log_q = math.log1p(-chance)
    log_terms = [
        math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1)
        + j * log_p + (n - j) * log_q
        for j in range(k, n + 1)
    ]
    peak = max(log_terms)
    return min(1.0, math.exp(peak) * math.fsum(math.exp(t - peak) for t in log_terms))


def evaluate(
    session: SessionRecord, pool: list[Stimulus], alpha: float = DEFAULT_ALPHA
) -> TestResult:
    """Score a complete session against chance.

    PASSED (images indistinguishable) exactly when p > alpha: the subject's
    accuracy gave no evidence of discrimination.
    """
    if not session.is_complete:
        raise SessionStateError(
            f"session {session.plan.session_id} is {session.status}; "
            "evaluation needs a complete session"
        )
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    kind_by_id = {s.id: s.kind for s in pool}
    k = 0
    for trial in session.plan.trials:
        truth = kind_by_id.get(trial.stimulus_id)
        if truth is None:
            raise ValueError(f"stimulus {trial.stimulus_id!r} missing from pool")
        if session.responses[trial.trial_index].choice == truth:
            k += 1
    p = binomial_p_value(session.plan.n, k)
    verdict = VERDICT_PASSED if p > alpha else VERDICT_FAILED
    return TestResult(
        n=session.plan.n, k_correct=k, p_value=p, alpha=alpha, verdict=verdict
    )


def simulate_subject(
    observer: SimulatedObserver, plan: TrialPlan, pool: list[Stimulus]
) -> SessionRecord:
    """Run a simulated observer through a plan, producing a complete session."""
    by_id = {s.id: s for s in pool}
    session = SessionRecord(plan=plan)

    if observer.per_trial_accuracy is not None:
        q = observer.per_trial_accuracy
        rng = random.Random(observer.seed)
        for trial in plan.trials:
            truth = by_id[trial.stimulus_id].kind
            correct = rng.random() < q
            choice = truth if correct else _other_kind(truth)
            record_response(session, trial.trial_index, choice)
        return session

    tau = observer.difference_threshold
    from .render.imageio import read_image  # deferred: keeps protocol import light

    cache: dict[Path, object] = {}

    def load(path: Path):
        if path not in cache:
            cache[path] = read_image(path)
        return cache[path]

    for trial in plan.trials:
        stim = by_id[trial.stimulus_id]
        if stim.reference_path is None:
            raise ValueError(
                f"stimulus {stim.id!r} has no reference image; "
                "threshold observers need one per stimulus"
            )
        shown = load(stim.image_path)
        ref = load(stim.reference_path)
        diff = float(abs(shown - ref).mean())
        choice = "synthetic" if diff > tau else "real"
        record_response(session, trial.trial_index, choice)
    return session


def _other_kind(kind: str) -> str:
    return "synthetic" if kind == "real" else "real"


def trial_payload(
    plan: TrialPlan, trial_index: int, image_url: str, answered: int
) -> dict:
    """The subject-facing view of one trial.

    This is the only shape a trial may take on the wire; it carries no ground
    truth (no kind, no provenance, no stimulus id).
    """
    if not (0 <= trial_index < plan.n):
        raise ValueError(f"trial_index {trial_index} out of range for n={plan.n}")
    return {
        "trial_index": trial_index,
        "image_url": image_url,
        "progress": {"answered": answered, "total": plan.n},
    }
