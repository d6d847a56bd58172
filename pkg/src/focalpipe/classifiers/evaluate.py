"""Model evaluation over a feature matrix with per-sample records."""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import EmptyMatrix
from ..features.extract import FeatureMatrix
from .forest import ForestModel, VoteTally


@dataclass(frozen=True)
class PredictionRecord:
    sample_id: str
    true_label: str
    predicted: str
    tally: VoteTally | None = None  # filled for forests


def evaluate(model, test: FeatureMatrix) -> tuple[float, list[PredictionRecord]]:
    """Accuracy plus one record per sample; forest records carry the full
    vote tally for the authentication stage."""
    if test.n_samples < 1:
        raise EmptyMatrix("evaluation needs at least one test row")
    records = []
    correct = 0
    is_forest = isinstance(model, ForestModel)
    for sid, label, row in zip(test.ids, test.labels, test.values):
        if is_forest:
            tally = model.votes(row)
            predicted = tally.categories[tally.top_two()[0]]
        else:
            tally = None
            predicted = model.classify(row)
        correct += predicted == label
        records.append(PredictionRecord(sample_id=sid, true_label=label,
                                        predicted=predicted, tally=tally))
    return correct / test.n_samples, records
