import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vgnet.series import PriceSeries

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def daily_series(prices, start="2020-01-01", **kwargs) -> PriceSeries:
    prices = np.asarray(prices, dtype=float)
    ts = np.datetime64(start, "D") + np.arange(len(prices))
    return PriceSeries(ts.astype("datetime64[s]"), prices, **kwargs)


def random_family(family: str, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if family == "uniform":
        return rng.uniform(size=n)
    if family == "walk":
        return np.cumsum(rng.normal(size=n))
    if family == "sinusoid":
        t = np.arange(n)
        return np.sin(2 * np.pi * t / max(n / 5, 2)) + 0.3 * rng.normal(size=n)
    raise ValueError(family)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(number, title)`` then ``.done(ok, detail)``."""

    class Line:
        def __init__(self):
            self.entry = None

        def __call__(self, number, title):
            self.entry = {"number": number, "title": title, "ok": False, "detail": "did not finish"}
            ACCEPTANCE.append(self.entry)
            return self

        def done(self, ok, detail=""):
            self.entry.update(ok=bool(ok), detail=detail)
            print(self.format(self.entry))
            return ok

        @staticmethod
        def format(e):
            return f"[{'PASS' if e['ok'] else 'FAIL'}] criterion {e['number']}: {e['title']} ({e['detail']})"

    return Line()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for e in sorted(ACCEPTANCE, key=lambda e: e["number"]):
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {e['number']}: {e['title']} ({e['detail']})")
