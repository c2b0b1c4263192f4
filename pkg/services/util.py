import logging
import sys

from joblib import Parallel, delayed


# Thanks Joel! https://joelmccune.com/python-dictionary-as-object/
class DictObj:
    def __init__(self, in_dict: dict):
        self._dict = in_dict
        assert isinstance(in_dict, dict)
        for key, val in in_dict.items():
            if isinstance(val, (list, tuple)):
                setattr(self, key, [DictObj(x) if isinstance(x, dict) else x for x in val])
            else:
                setattr(self, key, DictObj(val) if isinstance(val, dict) else val)

    def get(self, key):
        if key in self._dict:
            return self._dict[key]
        return None

    def has(self, key):
        return key in self._dict

    def toDict(self):
        return self._dict


loggers = {}

log_level = logging.INFO


def setLogLevel(level):
    global log_level

    log_level = level
    for logger in loggers.values():
        logger.setLevel(level)


def createLogger(name):
    # stdout carries the report, so log lines go to stderr
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    if name not in loggers:
        logger = logging.getLogger(name)
        logger.setLevel(log_level)

        loggers[name] = logger

    return loggers[name]


class AnalysisError(Exception):
    """Base error of every service. `exit_code` is what entry.py exits with."""

    exit_code = 1


class InputError(AnalysisError):
    exit_code = 2


class ValidationError(AnalysisError):
    exit_code = 3


class NumericalError(AnalysisError):
    exit_code = 4


# Evaluate fn over items on a thread pool. Results come back in input order,
# so any reduction done afterwards does not depend on the worker count.
def parallel_map(fn, items, threads=1):
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    return Parallel(n_jobs=threads, backend="threading")(delayed(fn)(x) for x in items)
