from __future__ import annotations

import numpy as np
import pytest

from hxe.nnet.tensor import Tensor, no_grad


def fd_relative_error(loss_fn, tensors: list[Tensor], h: float = 1e-5, max_coords: int | None = None,
                      rng: np.random.Generator | None = None) -> float:
    """Central finite differences against backprop for every tensor in ``tensors``.

    The error is max |analytic - numeric| divided by the largest numeric gradient
    magnitude over all checked coordinates. Coordinates whose true gradient is zero
    (e.g. attention key biases) are still checked, just not used as a denominator.
    """
    for t in tensors:
        t.grad = None
    loss_fn().backward()
    grads = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors]
    analytic, numeric = [], []
    with no_grad():
        for t, g in zip(tensors, grads):
            idx = np.arange(t.data.size)
            if max_coords is not None and t.data.size > max_coords:
                idx = (rng or np.random.default_rng(0)).choice(t.data.size, max_coords, replace=False)
            flat = t.data.reshape(-1)
            for i in idx:
                orig = flat[i]
                flat[i] = orig + h
                up = loss_fn().item()
                flat[i] = orig - h
                down = loss_fn().item()
                flat[i] = orig
                numeric.append((up - down) / (2 * h))
                analytic.append(g.reshape(-1)[i])
    analytic, numeric = np.array(analytic), np.array(numeric)
    scale = max(np.abs(numeric).max(), 1e-12)
    return float(np.abs(analytic - numeric).max() / scale)


@pytest.fixture(scope="session")
def arm_dataset():
    from hxe.datapipe.generate import generate_dataset

    return generate_dataset("two_object_reach", "arm_a", 12, seed=5)


@pytest.fixture(scope="session")
def nav_dataset():
    from hxe.datapipe.generate import generate_dataset

    return generate_dataset("corridor_nav", "nav_a", 8, seed=6)


# ---------------------------------------------------------------- acceptance summary

_ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(cid): acceptance criterion this test decides")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    cid = marker.args[0]
    detail = dict(item.user_properties).get("detail", "")
    _ACCEPTANCE[cid] = ("PASS" if report.passed else "FAIL", detail)


@pytest.fixture
def record_detail(record_property):
    """Attach a one-line measurement to the acceptance summary."""

    def record(text: str) -> None:
        record_property("detail", text)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_ACCEPTANCE, key=lambda c: int(c[1:])):
        status, detail = _ACCEPTANCE[cid]
        terminalreporter.write_line(f"{cid} {status}  {detail}")
