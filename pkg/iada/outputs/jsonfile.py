import json
import logging
import os

from ..io.atomic import atomic_write

log = logging.getLogger("IADA")


class jsonfile:
    def __init__(self, *args, **kwargs) -> None:
        log.debug(f"processor.jsonfile __init__ kwargs {kwargs}")

    def output(self, data=None, tag=None, report_dir="report"):
        log.info("Using output processor: jsonfile")
        if not data or "json" not in data:
            return None
        os.makedirs(report_dir, exist_ok=True)
        path = os.path.join(report_dir, f"{tag or data.get('title', 'report')}.json")
        with atomic_write(path, "w") as f:
            json.dump(data["json"], f, indent=2, sort_keys=True, ensure_ascii=False)
        log.info(f"wrote {path}")
        return path
