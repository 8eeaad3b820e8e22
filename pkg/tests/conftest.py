import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_dictionary():
    from emogan.emotext import EmoticonDictionary

    return EmoticonDictionary({
        "fear": ["D:"], "sadness": [":("], "anger": [">:("], "disgust": [],
        "calm": [], "happiness": [":)", ":-)", ":))"], "surprise": [":O"],
    })
