import logging

from rich.console import Console
from rich.logging import RichHandler

# Records go to stdout, so everything human-facing goes to stderr.
STDERR = Console(stderr=True)


def configure_logging(level: str = "INFO") -> None:
    """Install a single rich handler on the root logger

    Args:
        level: logging level name, e.g. "INFO" or "DEBUG"
    """
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=STDERR, show_path=False, rich_tracebacks=True)],
        force=True,
    )
