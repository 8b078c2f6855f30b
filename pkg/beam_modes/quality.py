from __future__ import annotations

import logging
from typing import Callable, TypeVar

from tenacity import Retrying, before_sleep_log, retry_if_exception_type, stop_after_attempt

from .config import IntegratorConfig, get_settings
from .errors import NumericalQualityError
from .logger import get_logger

logger = get_logger(__name__)

T = TypeVar("T")

TIGHTENING_FACTOR = 100.0


def with_tightening(operation: Callable[[IntegratorConfig], T], config: IntegratorConfig) -> T:
    """Run ``operation`` and retry quality failures with tolerances tightened 100x per attempt."""
    settings = get_settings()
    retrying = Retrying(
        stop=stop_after_attempt(max(1, settings.quality_retries)),
        retry=retry_if_exception_type(NumericalQualityError),
        before_sleep=before_sleep_log(logger, logging.WARNING),
        reraise=True,
    )
    for attempt in retrying:
        with attempt:
            number = attempt.retry_state.attempt_number
            attempt_config = config if number == 1 else config.tightened(TIGHTENING_FACTOR ** (number - 1))
            return operation(attempt_config)
    raise AssertionError("unreachable")  # pragma: no cover
