"""Utility classes shared by every hilbert module: run statistics and errors."""
from collections import Counter
import sys
import time

_get_time = time.perf_counter   # wall-time


class HilbertError(Exception):
    pass


class PolynomialSyntaxError(HilbertError):
    ''' Raised by the polynomial grammar. position is the 0-based offset
        of the offending character in the parsed text.
    '''
    def __init__(self, message, position=None, text=None):
        self.message = message
        self.position = position
        self.text = text
        if position is None:
            super().__init__(message)
        else:
            super().__init__(f"{message} (at position {position})")


class UnknownVariableError(HilbertError):
    def __init__(self, name, position=None):
        self.name = name
        self.position = position
        where = "" if position is None else f" (at position {position})"
        super().__init__(f"unknown variable `{name}`{where}")


class VariableTableMismatch(HilbertError):
    pass


class TheoryError(HilbertError):
    def __init__(self, message, label=None):
        self.label = label
        if label is not None:
            message = f"[{label}] {message}"
        super().__init__(message)


class DatasetError(HilbertError):
    pass


class DegreeOverflowError(HilbertError):
    pass


class FormulationError(HilbertError):
    pass


class SolverError(HilbertError):
    pass


class CertificateFormatError(HilbertError):
    pass


def error_exit(error, details, exception=None):
    sys.stderr.write("\033[31;1mERROR:\033[m %s\n\033[33m%s\033[m\n" % (error, details))
    if exception is not None:
        sys.stderr.write(str(exception) + "\n")
    sys.exit(1)


class Statistics(object):
    """
    >>> s = Statistics()

    Timed blocks use a context manager and may be nested. Times accumulate
    per category and every timed category is also counted.
    >>> with s.time("formulate"):
    ...     with s.time("basis"):
    ...         pass
    >>> sorted(s.get_times())
    ['basis', 'formulate', 'total']
    >>> s.get_counts()
    Counter({'formulate': 1, 'basis': 1})

    Plain counters:
    >>> s.increment_counter('pivots', 3)
    >>> s.increment_counter('pivots')
    >>> s.get_counts()['pivots']
    4
    """
    def __init__(self):
        self._start = _get_time()
        self._times = Counter()
        self._counts = Counter()
        self._active_timers = {}   # dict: key=category, value=start time

    def time(self, category):
        return self.TimerContext(self, category)

    # Context manager class for time() method
    class TimerContext(object):
        def __init__(self, stats, category):
            self._stats = stats
            self._category = category

        def __enter__(self):
            self._stats.start_time(self._category)

        def __exit__(self, ex_type, ex_value, traceback):
            self._stats.end_time(self._category)
            return False

    def increment_counter(self, category, amount=1):
        self._counts[category] += amount

    def start_time(self, category):
        assert category not in self._active_timers
        self.increment_counter(category)
        self._active_timers[category] = _get_time()

    def end_time(self, category):
        self.update_time(category)
        del self._active_timers[category]

    def update_time(self, category):
        now = _get_time()
        self._times[category] += now - self._active_timers[category]
        self._active_timers[category] = now

    def total_time(self):
        return _get_time() - self._start

    def get_times(self):
        self._times['total'] = self.total_time()
        for category in self._active_timers:
            self.update_time(category)
        return self._times

    def get_counts(self):
        return self._counts

    def asDict(self):
        out = {f"time_{key}": round(value, 4) for key, value in sorted(self.get_times().items())}
        out.update({key: value for key, value in sorted(self._counts.items())})
        return out
