"""
Logging helpers for the engine.

Handlers and formatters are declared in ``settings.LOGGING``; this module
only wraps the named loggers the apps write to.
"""
import logging
import time
from contextlib import contextmanager


class PerformanceLogger:
    """
    Logger for stage timings (matrix builds, GA runs, oracle searches)
    """

    SLOW_STAGE_SECONDS = 60.0

    def __init__(self):
        self.logger = logging.getLogger('performance')

    def log_stage_time(self, stage, duration, **context):
        """Log how long a pipeline stage took"""
        details = ' '.join(f'{key}={value}' for key, value in sorted(context.items()))
        if duration > self.SLOW_STAGE_SECONDS:
            self.logger.warning(f'Slow stage: {stage} - {duration:.3f}s {details}'.rstrip())
        else:
            self.logger.info(f'Stage: {stage} - {duration:.3f}s {details}'.rstrip())

    @contextmanager
    def stage(self, stage, **context):
        """Time the enclosed block and log it as ``stage``"""
        start_time = time.perf_counter()
        try:
            yield
        finally:
            self.log_stage_time(stage, time.perf_counter() - start_time, **context)


performance_logger = PerformanceLogger()


__all__ = [
    'PerformanceLogger',
    'performance_logger',
]
