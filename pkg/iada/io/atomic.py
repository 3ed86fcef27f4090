import contextlib
import fcntl
import logging
import os

log = logging.getLogger("IADA")

LOCK_NAME = ".lock"


@contextlib.contextmanager
def atomic_write(path, mode="wb"):
    """
    Write to a temporary sibling then rename over path, so an interrupted write
    never leaves a partial file under the final name
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        encoding = None if "b" in mode else "utf-8"
        with open(tmp, mode, encoding=encoding) as f:
            yield f
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
        log.debug(f"wrote {path}")
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


@contextlib.contextmanager
def directory_lock(directory):
    """
    Exclusive lock file serializing writers of one directory across processes
    """
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, LOCK_NAME), "w") as lock:
        fcntl.flock(lock, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(lock, fcntl.LOCK_UN)
