# gzap/infra/log.py
import logging
import sys

logger = logging.getLogger("gzap")

_HANDLER_TAG = "_gzap_handler"


def configure_logging(debug: bool = False) -> logging.Logger:
    """Install the shared stream handler once; later calls only adjust the level."""
    level = logging.DEBUG if debug else logging.INFO
    logger.setLevel(level)
    if not any(getattr(h, _HANDLER_TAG, False) for h in logger.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)-7s %(message)s", "%H:%M:%S"))
        setattr(handler, _HANDLER_TAG, True)
        logger.addHandler(handler)
        logger.propagate = False
    return logger
