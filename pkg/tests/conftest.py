import pytest

from kmslab.settings import reset_settings


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    for name in (
        "KMSLAB_TOL",
        "KMSLAB_RESIDUAL_TOL",
        "KMSLAB_DEPTH",
        "KMSLAB_MAX_ITER",
        "KMSLAB_ARPACK_THRESHOLD",
        "KMSLAB_M_MAX",
        "KMSLAB_L_MAX",
        "KMSLAB_RECURRENCE_TERMS",
        "KMSLAB_RECURRENCE_BOUND",
        "KMSLAB_LOG_LEVEL",
    ):
        monkeypatch.delenv(name, raising=False)
    reset_settings()
    yield
    reset_settings()
