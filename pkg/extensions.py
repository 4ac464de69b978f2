# extensions.py
import logging
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(verbose=False):
    """One stream handler on the root logger; DEBUG when verbose."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    return root


@contextmanager
def worker_pool(threads=1):
    """Yield an order-preserving map: builtin map for one worker, a process pool otherwise."""
    if threads is None or threads <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=threads) as pool:
        yield pool.map
