import functools
import logging
import time

logger = logging.getLogger(__name__)


def timeit(method):
    @functools.wraps(method)
    def timed(*args, **kw):
        ts = time.perf_counter()
        result = method(*args, **kw)
        te = time.perf_counter()
        logger.debug(f"{method.__qualname__!r}  {(te - ts) * 1000:2.2f} ms")
        return result

    return timed
