"""Pass/fail lines collected by the acceptance suite, printed at session end."""
import contextlib

RESULTS = {}


@contextlib.contextmanager
def criterion(number, title):
    RESULTS[number] = ["RUNNING", title, ""]
    try:
        yield
    except BaseException as exc:
        msg = str(exc).splitlines()[0] if str(exc) else ""
        entry = RESULTS[number]
        entry[0] = "FAIL"
        entry[2] = "; ".join(x for x in (entry[2], f"{type(exc).__name__} {msg}".strip()) if x)
        raise
    RESULTS[number][0] = "PASS"


def note(number, detail):
    RESULTS[number][2] = detail
