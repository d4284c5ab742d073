import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hdformula.corpus import synth_corpus  # noqa: E402


@pytest.fixture(scope="session")
def small_corpus():
    """60 synthetic records over levels 1-4 and 1-3 lines."""
    return synth_corpus(60, levels=(1, 2, 3, 4), lines=(1, 2, 3), seed=11)


@pytest.fixture(scope="session")
def training_corpus():
    return synth_corpus(200, levels=(1, 2, 3), seed=7)
