import logging

log = logging.getLogger("IADA")


class screen:
    def __init__(self, *args, **kwargs) -> None:
        log.debug(f"processor.screen __init__ kwargs {kwargs}")

    def output(self, data=None, tag=None, report_dir=None):
        log.info("Using output processor: screen")
        if not data:
            return
        print(data.get("text", ""), end="")
