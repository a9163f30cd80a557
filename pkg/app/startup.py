import logging
import os


def startup() -> None:
    # called once before the first command runs
    level = os.environ.get("TORIC_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    # sympy's polynomial machinery is chatty at DEBUG
    logging.getLogger("sympy").setLevel(logging.WARNING)
