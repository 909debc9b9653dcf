import logging
import math
from typing import Optional

import numpy as np
from celery import group
from django.conf import settings
from django.core.exceptions import ValidationError

from optics.models import Blocker, Channel, StageLabel
from optics.services.optics_services import OpticsServices
from optics.values import Angle, LoopSpec, StageSpec
from pilotwave.services.pilot_wave_services import PilotWaveServices
from pilotwave.values import McResult, Trajectory

logger = logging.getLogger(__name__)

MAX_SEED = 2 ** 64
MAX_CHAIN_LENGTH = 60
# Philox emits four 64-bit words per counter step.
WORDS_PER_BLOCK = 4


class MonteCarloServices:
    """
    Reproducible trajectory sampler for the pilot-wave model.

    Trial `i` of a run reads its uniforms from Philox counter blocks
    reserved for index `i` under the key `seed`, so a run gives the same
    counts however it is split into chunks.
    """

    @classmethod
    def _validate_run(cls, n: int, seed: int, chain: tuple[LoopSpec, ...]) -> None:
        if n is None or int(n) < 1:
            raise ValidationError(f'Empty run: trial count must be at least 1, got {n}')
        if not 0 <= int(seed) < MAX_SEED:
            raise ValidationError(f'Seed must be in [0, 2^64), got {seed}')
        if len(chain) > MAX_CHAIN_LENGTH:
            raise ValidationError(f'Chains longer than {MAX_CHAIN_LENGTH} loops are not supported')

    @classmethod
    def _uniforms(cls, seed: int, start: int, stop: int, width: int) -> np.ndarray:
        """
        Uniforms in [0, 1) for trials [start, stop), `width` per trial.
        """
        blocks = -(-width // WORDS_PER_BLOCK)
        bit_generator = np.random.Philox(key=seed, counter=start * blocks)
        raw = bit_generator.random_raw((stop - start) * blocks * WORDS_PER_BLOCK)
        raw = raw.reshape(stop - start, blocks * WORDS_PER_BLOCK)[:, :width]
        return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 2 ** 53)

    @classmethod
    def _channel_string(cls, code: int, depth: int) -> str:
        return ''.join(
            str(Channel.MINUS) if (code >> j) & 1 else str(Channel.PLUS)
            for j in range(depth)
        )

    @classmethod
    def simulate_chunk(cls, stage_payload: dict, post_select: bool, seed: int, start: int, stop: int) -> dict:
        """
        Run trials [start, stop) of a run.

        Column 0 of each trial's uniforms samples the left outcome (probability
        one half); column 1 + j picks the photon's channel in loop j.

        :param stage_payload: Stage in `StageSpec.to_payload` form.
        :type stage_payload: dict
        :param post_select: Whether to sample the left detection. When false every trial enters the chain.
        :type post_select: bool
        :param seed: Run seed.
        :type seed: int
        :param start: First trial index.
        :type start: int
        :param stop: One past the last trial index.
        :type stop: int
        :return: JSON-safe partial counts.
        :rtype: dict
        """
        stage = StageSpec.from_payload(stage_payload)
        chain = stage.right_chain
        uniforms = cls._uniforms(seed, start, stop, 1 + len(chain))

        if post_select:
            conditioned = uniforms[:, 0] < 0.5
        else:
            conditioned = np.ones(stop - start, dtype=bool)
        draws = uniforms[conditioned, 1:]
        k = draws.shape[0]

        guide = np.full(k, PilotWaveServices.initial_guide(stage).value)
        alive = np.ones(k, dtype=bool)
        codes = np.zeros(k, dtype=np.int64)
        depth = np.zeros(k, dtype=np.int64)

        for j, loop in enumerate(chain):
            plus = draws[:, j] < np.cos(loop.axis.value - guide) ** 2
            minus = ~plus
            codes |= (minus & alive).astype(np.int64) << j
            depth += alive

            if loop.blocker == Blocker.BLOCK_MINUS:
                absorbed = alive & minus
                guide[alive & plus] = loop.axis.value
            elif loop.blocker == Blocker.BLOCK_PLUS:
                absorbed = alive & plus
                guide[alive & minus] = OpticsServices.complement(loop.axis).value
            else:
                absorbed = np.zeros(k, dtype=bool)
            alive &= ~absorbed

        counts = {}
        codes_detected, detected_counts = np.unique(codes[alive], return_counts=True)
        for code, count in zip(codes_detected.tolist(), detected_counts.tolist()):
            counts[cls._channel_string(code, len(chain))] = count

        undetected = {}
        pairs = np.stack([depth[~alive], codes[~alive]], axis=1)
        if pairs.shape[0]:
            pairs_undetected, undetected_counts = np.unique(pairs, axis=0, return_counts=True)
            for (stopped_at, code), count in zip(pairs_undetected.tolist(), undetected_counts.tolist()):
                undetected[cls._channel_string(code, stopped_at)] = count

        return {
            'n_trials': stop - start,
            'n_conditioned': int(k),
            'counts': counts,
            'undetected': undetected,
        }

    @classmethod
    def sample_trajectory(cls, stage: StageSpec, seed: int, index: int) -> Optional[Trajectory]:
        """
        Replay trial `index` of a post-selected run one loop at a time.

        :return: The trajectory, or None if the trial failed the left post-selection.
        :rtype: Trajectory | None
        """
        chain = stage.right_chain
        uniforms = cls._uniforms(int(seed), index, index + 1, 1 + len(chain))[0]
        if uniforms[0] >= 0.5:
            return None

        guide = PilotWaveServices.initial_guide(stage)
        record = ''
        for j, loop in enumerate(chain):
            plus = uniforms[1 + j] < math.cos(loop.axis.value - guide.value) ** 2
            channel = Channel.PLUS if plus else Channel.MINUS
            record += str(channel)
            if PilotWaveServices.is_absorbed(loop, channel):
                return Trajectory(left_outcome=stage.left_outcome, channel_record=record, detected=False)
            guide = PilotWaveServices.guide_after(loop, channel, guide)
        return Trajectory(left_outcome=stage.left_outcome, channel_record=record, detected=True)

    @classmethod
    def _chunk_bounds(cls, n: int, workers: int) -> list[tuple[int, int]]:
        workers = max(1, min(int(workers), n))
        edges = [n * i // workers for i in range(workers + 1)]
        return [(lo, hi) for lo, hi in zip(edges, edges[1:]) if hi > lo]

    @classmethod
    def _run(cls, stage: StageSpec, n: int, seed: int, workers: Optional[int], post_select: bool) -> McResult:
        from pilotwave.tasks import run_trajectory_chunk_task

        cls._validate_run(n, seed, stage.right_chain)
        n, seed = int(n), int(seed)
        workers = settings.MC_WORKERS if workers is None else workers
        bounds = cls._chunk_bounds(n, workers)
        logger.info(
            'MonteCarloServices - run %s: n=%s seed=%s chunks=%s', stage.label, n, seed, len(bounds)
        )

        payload = stage.to_payload()
        job = group([
            run_trajectory_chunk_task.s(payload, post_select, seed, lo, hi)
            for lo, hi in bounds
        ])
        partials = job.apply_async().join()

        counts: dict[str, int] = {}
        undetected: dict[str, int] = {}
        n_conditioned = 0
        for partial in partials:
            n_conditioned += partial['n_conditioned']
            for channels, count in partial['counts'].items():
                counts[channels] = counts.get(channels, 0) + count
            for channels, count in partial['undetected'].items():
                undetected[channels] = undetected.get(channels, 0) + count

        return McResult(
            label=str(stage.label),
            n=n,
            n_conditioned=n_conditioned,
            seed=seed,
            counts=dict(sorted(counts.items())),
            undetected=dict(sorted(undetected.items())),
        )

    @classmethod
    def pw_monte_carlo(cls, stage: StageSpec, n: int, seed: int, workers: Optional[int] = None) -> McResult:
        """
        Simulate `n` source emissions for a stage and keep the trials whose left detection matches.

        Deterministic in (stage, n, seed); `workers` only changes how the
        trials are split into Celery chunks.

        :param stage: Stage to simulate.
        :type stage: StageSpec
        :param n: Number of emitted pairs.
        :type n: int
        :param seed: Run seed in [0, 2^64).
        :type seed: int
        :param workers: Number of chunks, defaults to settings.MC_WORKERS.
        :type workers: int | None
        :raises ValidationError: If n < 1, the seed is out of range or the chain is too long.
        :return: Counts over the conditioned trials.
        :rtype: McResult
        """
        return cls._run(stage, n, seed, workers, post_select=True)

    @classmethod
    def run_single_particle(
        cls,
        axis: Angle,
        chain: tuple[LoopSpec, ...],
        n: int,
        seed: int,
        workers: Optional[int] = None
    ) -> McResult:
        """
        Send `n` lone photons polarized along `axis` through `chain`; no partner, no post-selection.
        """
        stage = StageSpec(
            left_outcome=OpticsServices.complement(axis),
            right_chain=tuple(chain),
            label=StageLabel.CUSTOM,
        )
        return cls._run(stage, n, seed, workers, post_select=False)

    @classmethod
    def derive_seed(cls, seed: int, *path: int) -> int:
        """
        Independent child seed for a sub-run, e.g. one grid point and stage of a scan.
        """
        state = np.random.SeedSequence([int(seed), *[int(p) for p in path]]).generate_state(1, dtype=np.uint64)
        return int(state[0])

    @classmethod
    def within_band(cls, observed: float, expected: float, stderr: float, n: int, k: float = 4.0) -> bool:
        """
        Whether `observed` lies within k standard errors of `expected`.

        A frequency that is exactly 0 or 1 has zero sample error; the band
        then falls back to one count so deterministic outcomes still compare.
        """
        band = k * max(stderr, math.sqrt(expected * (1.0 - expected) / n), 1.0 / n)
        return abs(observed - expected) <= band
