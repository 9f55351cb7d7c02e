import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

from fecluster.corpus import ArgumentInstance, Dataset, Position  # noqa: E402


def make_instance(i, frame="Giving", fe="Donor", emb=None, dim=4, sentence=None,
                  position=Position.BEFORE, dep="nsubj", verb="give"):
    if emb is None:
        rng = np.random.default_rng(i)
        emb = rng.normal(size=dim)
    return ArgumentInstance(
        instance_id=f"i{i}",
        sentence_id=sentence or f"s{i}",
        frame=frame,
        fe_label=fe,
        verb_lemma=verb,
        position=position,
        dep_label=dep,
        embedding=np.asarray(emb, dtype=np.float32),
    )


@pytest.fixture
def giving_sentence_two():
    """The worked example: 'I will now donate the money to charity.'"""
    return Dataset.from_instances([
        make_instance(0, frame="Giving", fe="Donor", sentence="s2",
                      position=Position.BEFORE, dep="nsubj", dim=4),
        make_instance(1, frame="Giving", fe="Theme", sentence="s2",
                      position=Position.AFTER, dep="obj", dim=4),
        make_instance(2, frame="Giving", fe="Recipient", sentence="s2",
                      position=Position.AFTER, dep="obl", dim=4),
    ])
