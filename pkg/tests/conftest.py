import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cgec.core import PipelineConfig  # noqa: E402
from cgec.lexicons import load_bundled_lexicons  # noqa: E402
from cgec.tagger import Tagger  # noqa: E402


@pytest.fixture(scope="session")
def lexicons():
    return load_bundled_lexicons()


@pytest.fixture(scope="session")
def small_cfg():
    return PipelineConfig(d_model=32, enc_layers=1, dec_layers=1, heads=2, ffn_hidden=64, dropout=0.0, max_len=64)


@pytest.fixture(scope="session")
def tagger(lexicons, small_cfg):
    return Tagger.from_lexicons(lexicons, small_cfg)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, text = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}: {text}")
