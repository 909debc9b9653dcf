import logging

from celery import shared_task

from pilotwave.services.monte_carlo_services import MonteCarloServices

logger = logging.getLogger(__name__)


@shared_task(name='run_trajectory_chunk_task')
def run_trajectory_chunk_task(stage_payload: dict, post_select: bool, seed: int, start: int, stop: int) -> dict:
    try:
        return MonteCarloServices.simulate_chunk(stage_payload, post_select, seed, start, stop)
    except Exception as ex:
        logger.exception("CeleryTasks - run_trajectory_chunk_task exception: %s" % ex)
        raise
