import numpy as np

from adlens.corpus import AdRecord, Corpus, ObjectLabel


def make_labels(class_ids=(1, 2, 3, 4, 5), scores=None):
    if scores is None:
        scores = [0.9 - 0.1 * i for i in range(len(class_ids))]
    return tuple(
        ObjectLabel(class_id=cid, name=f"object_{cid:04d}", score=score)
        for cid, score in zip(class_ids, scores)
    )


def make_record(rid, category="Auto", width=300, height=250, impressions=5000,
                clicks=100, label_ids=(1, 2, 3, 4, 5), scores=None, vector=None, dim=4):
    if vector is None:
        vector = np.zeros(dim)
    return AdRecord(
        id=str(rid),
        width=width,
        height=height,
        category=category,
        impressions=impressions,
        clicks=clicks,
        labels=make_labels(label_ids, scores),
        vector=np.asarray(vector, dtype=np.float64),
    )


def make_corpus(records, dim=4, num_classes=1000):
    return Corpus(records=list(records), dim=dim, num_classes=num_classes)
