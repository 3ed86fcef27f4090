import importlib
import logging

from ..exceptions import InvalidArgumentError

log = logging.getLogger("IADA")

REGIMES = ("ada", "ada_union", "iada")


def get_regime(mode):
    """
    Take a mode name (ada, ada_union / ada-union, iada)
    import the module of the same name and instantiate its class
    """
    regime_id = str(mode).lower().replace("-", "_")
    if regime_id not in REGIMES:
        raise InvalidArgumentError(f"unknown adaptation mode {mode}, expected one of {', '.join(REGIMES)}")
    regime_module = importlib.import_module("iada.regimes." + regime_id, ".")
    regime_class = getattr(regime_module, regime_id)
    log.debug(f"using regime {regime_id}")
    return regime_class()
