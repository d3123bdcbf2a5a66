"""
Adversarial search for estimate violations.

A seeded random phase samples initial states and piecewise-constant inputs
from the search region; a (1+1) evolution strategy with the one-fifth
success rule then refines the worst sample. Every child stream is spawned
from the master seed by sample index, so reports do not depend on how the
random phase is scheduled across workers.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass

import numpy as np

from configuration import CertificateTolerance, SearchRegion, Tolerances
from system_model import InputSignal, InputSystem, ball_samples, simulate

from .checks import check_trajectory
from .reports import CheckReport, Verdict
from .spec import EstimateForm, EstimateSpec

RANDOM_FRACTION = 0.5
INITIAL_STEP = 0.3
STEP_UP = np.exp(1.0 / 3.0)
STEP_DOWN = np.exp(-1.0 / 12.0)
MIN_STEP = 1e-8
# a switching offset moves its breakpoint by at most this fraction of a nominal segment
OFFSET_REACH = 0.45


def _project(block: np.ndarray, radius: float) -> np.ndarray:
    """Radial projection of each row onto the closed ball of ``radius``."""
    norms = np.linalg.norm(block, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        factors = np.where(norms > radius, radius / norms, 1.0)
    return block * factors


@dataclass(frozen=True)
class SearchEncoding:
    """Maps a flat parameter vector to (xi, u) inside the search region.

    The vector holds xi / R, the k segment values divided by U and, for
    inputs, k - 1 switching offsets in [-1, 1] that move each interior
    breakpoint within its neighbouring nominal segments. All blocks are
    unit scaled so one step size serves them together.
    """

    state_dimension: int
    input_dimension: int
    region: SearchRegion

    @property
    def size(self) -> int:
        return self.state_dimension + self.input_dimension * self.region.segments + self.offset_count

    @property
    def offset_count(self) -> int:
        return self.region.segments - 1 if self.input_dimension else 0

    @property
    def breakpoints(self) -> np.ndarray:
        """Nominal breakpoints, every offset at zero."""
        return np.linspace(0.0, self.region.horizon, self.region.segments + 1)[:-1]

    def shifted_breakpoints(self, offsets: np.ndarray) -> np.ndarray:
        k = self.region.segments
        moves = np.concatenate(([0.0], OFFSET_REACH * np.clip(offsets, -1.0, 1.0)))
        return (np.arange(k) + moves[:k]) * (self.region.horizon / k)

    def project(self, vector: np.ndarray) -> np.ndarray:
        n, m, k = self.state_dimension, self.input_dimension, self.region.segments
        xi = _project(vector[:n], 1.0)
        values = _project(vector[n:n + m * k].reshape(k, m), 1.0) if m else np.zeros((k, 0))
        offsets = np.clip(vector[n + m * k:], -1.0, 1.0)
        return np.concatenate((xi, values.ravel(), offsets))

    def decode(self, vector: np.ndarray) -> tuple[np.ndarray, InputSignal]:
        n, m, k = self.state_dimension, self.input_dimension, self.region.segments
        vector = self.project(vector)
        xi = self.region.radius * vector[:n]
        values = self.region.input_bound * vector[n:n + m * k].reshape(k, m)
        breakpoints = self.shifted_breakpoints(vector[n + m * k:]) if m else self.breakpoints
        return xi, InputSignal(breakpoints, values)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        n, m, k = self.state_dimension, self.input_dimension, self.region.segments
        xi = ball_samples(rng, 1, n, 1.0).ravel()
        values = ball_samples(rng, k, m, 1.0).ravel()
        offsets = rng.uniform(-1.0, 1.0, self.offset_count)
        return np.concatenate((xi, values, offsets))


class Falsifier:
    """Searches a region for the (xi, u) pair with the smallest estimate margin."""

    def __init__(self, system: InputSystem, spec: EstimateSpec, region: SearchRegion,
                 tolerances: Tolerances | None = None, tolerance: CertificateTolerance | None = None,
                 jobs: int = 1):
        self.system = system
        self.spec = spec
        self.region = region
        self.tolerances = tolerances or Tolerances()
        self.tolerance = tolerance or CertificateTolerance()
        self.jobs = max(1, jobs)
        self.encoding = SearchEncoding(system.state_dimension, system.input_dimension, region)
        bound = spec.constant("M")
        if bound is not None:
            clipped = {"input_bound": min(region.input_bound, bound)}
            if spec.form is EstimateForm.SEMIGLOBAL:
                clipped["radius"] = min(region.radius, bound)
            if any(getattr(region, key) != value for key, value in clipped.items()):
                logging.warning(f"Search region clipped to the semiglobal bound M = {bound:g}")
                self.region = region.model_copy(update=clipped)
                self.encoding = SearchEncoding(system.state_dimension, system.input_dimension, self.region)

    def evaluate(self, vector: np.ndarray) -> CheckReport:
        xi, signal = self.encoding.decode(vector)
        trajectory = simulate(self.system, xi, signal, self.region.horizon, self.tolerances)
        return check_trajectory(trajectory, xi, self.spec, self.tolerance, validate=False)

    def _random_phase(self, streams: list[np.random.SeedSequence]) -> list[tuple[np.ndarray, CheckReport]]:
        vectors = [self.encoding.sample(np.random.default_rng(stream)) for stream in streams]
        results: list[tuple[np.ndarray, CheckReport] | None] = [None] * len(vectors)
        if self.jobs == 1:
            return [(v, self.evaluate(v)) for v in vectors]

        with ThreadPoolExecutor(max_workers=self.jobs) as executor:
            future_to_index = {executor.submit(self.evaluate, v): i for i, v in enumerate(vectors)}
            for future in as_completed(future_to_index):
                index = future_to_index[future]
                results[index] = (vectors[index], future.result())
        return results

    def _refine(self, start: np.ndarray, report: CheckReport, rng: np.random.Generator,
                budget: int) -> tuple[CheckReport, int]:
        """(1+1)-ES: accept strictly better children, grow the step on success and shrink it otherwise."""
        parent, best, step, used = start, report, INITIAL_STEP, 0
        while used < budget and step > MIN_STEP:
            child = self.encoding.project(parent + step * rng.standard_normal(parent.size))
            candidate = self.evaluate(child)
            used += 1
            if candidate.margin < best.margin:
                parent, best = child, candidate
                step *= STEP_UP
            else:
                step *= STEP_DOWN
        logging.debug(f"Refinement used {used} evaluations, final step {step:.3g}")
        return best, used

    def run(self, budget: int, seed: int = 0) -> CheckReport:
        """Spend ``budget`` simulations; the report carries the worst margin found and its witness."""
        if budget < 1:
            raise ValueError("budget must be at least 1")
        self.spec.validate_classes()
        random_count = budget if budget == 1 else max(1, int(budget * RANDOM_FRACTION))
        master = np.random.SeedSequence(seed)
        streams = master.spawn(random_count + 1)
        logging.info(f"Falsifying {self.spec.form.value}: {random_count} random samples, "
                     f"{budget - random_count} refinement steps, seed {seed}")

        samples = self._random_phase(streams[:random_count])
        # ties go to the lowest sample index
        best_index = min(range(len(samples)), key=lambda i: samples[i][1].margin)
        start, best = samples[best_index]
        used = random_count
        if budget > random_count and self.encoding.size > 0:
            best, refined = self._refine(start, best, np.random.default_rng(streams[-1]), budget - random_count)
            used += refined

        notes = list(best.notes)
        if best.verdict is Verdict.HOLDS:
            notes.append("no violation found among the sampled inputs; this is not a proof")
        logging.info(f"Falsification finished: {best.verdict.value}, margin {best.margin:.6g}, {used} evaluations")
        return best.model_copy(update={"seed": seed, "evaluations": used, "tolerances": self.tolerances,
                                       "notes": notes})


def falsify(system: InputSystem, spec: EstimateSpec, region: SearchRegion, budget: int, seed: int = 0,
            tolerances: Tolerances | None = None, tolerance: CertificateTolerance | None = None,
            jobs: int = 1) -> CheckReport:
    """Search ``region`` for a violation of ``spec`` with ``budget`` simulations."""
    return Falsifier(system, spec, region, tolerances, tolerance, jobs).run(budget, seed)
