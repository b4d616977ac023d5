import pytest

from helpers import make_corpus, make_record


@pytest.fixture(scope="session")
def auto_20pct_corpus():
    """41,000 ads: object 0 in half of every category (a corpus-wide
    stop-object), object 900 in exactly 20.17% of the 10,000 Auto ads
    (0.0492 corpus-wide, below the stop threshold), low-frequency filler."""
    records = []
    for i in range(41000):
        category = "Auto" if i < 10000 else f"Other{i % 4}"
        ids = []
        if i % 2 == 0:
            ids.append(0)
        if i < 2017:
            ids.append(900)
        filler = 10 + (i % 150)
        while len(ids) < 5:
            ids.append(filler)
            filler += 150
        records.append(make_record(f"r{i}", category=category, label_ids=tuple(sorted(ids))))
    return make_corpus(records)
