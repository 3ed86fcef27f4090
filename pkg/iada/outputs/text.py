import logging
import os

from ..io.atomic import atomic_write

log = logging.getLogger("IADA")


class text:
    """
    Write the rendered report to <report_dir>/<tag>.txt
    """

    def __init__(self, *args, **kwargs) -> None:
        log.debug(f"processor.text __init__ kwargs {kwargs}")

    def output(self, data=None, tag=None, report_dir="report"):
        log.info("Using output processor: text")
        if not data or "text" not in data:
            return None
        os.makedirs(report_dir, exist_ok=True)
        path = os.path.join(report_dir, f"{tag or data.get('title', 'report')}.txt")
        with atomic_write(path, "w") as f:
            f.write(data["text"])
        log.info(f"wrote {path}")
        return path
