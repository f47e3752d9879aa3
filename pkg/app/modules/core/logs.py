import logging

from app.modules.core.config import settings

LOG_FORMAT = "%(asctime)s level=%(levelname)s logger=%(name)s %(message)s"


def configure_logging(level: str | None = None) -> None:
    """Install the package log format on the ``app`` logger hierarchy."""
    root = logging.getLogger("app")
    root.setLevel((level or settings.log_level).upper())
    if not any(getattr(h, "_hamid", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._hamid = True
        root.addHandler(handler)
