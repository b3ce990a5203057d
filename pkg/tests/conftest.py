import pytest

import synthdata
from typedesc.corpus import Entity
from typedesc.stage1 import ModelDims


@pytest.fixture(scope="session")
def tiny_dims():
    return ModelDims(d_h=6, d_word=6, d_prop=4, d_pos=4)


@pytest.fixture(scope="session")
def rue_cazotte():
    return Entity(
        entity_id="Q3451725",
        label="rue cazotte",
        description="street in paris , france",
        statements=[
            ("p31", "instance of", "street"),
            ("p17", "country", "france"),
            ("p131", "located in the administrative territorial entity", "paris"),
            ("p138", "named after", "jacques cazotte"),
            ("p625", "coordinate location", "48.886 2.344"),
        ],
    )


@pytest.fixture(scope="session")
def small_corpus():
    return synthdata.make_corpus(n=16, seed=3)


@pytest.fixture(scope="session")
def small_vocabs(small_corpus):
    return synthdata.make_vocabs(small_corpus)
