"""Regenerate the golden model fixture. Run from the repo root:

    python tests/fixtures/make_golden.py

Only needed when the model format or training algorithm intentionally
changes; the committed files pin cross-platform reproducibility.
"""

import json
from pathlib import Path

import numpy as np

from escalade.forest import TrainConfig, save_model, train_arrays

HERE = Path(__file__).parent


def main() -> None:
    rng = np.random.default_rng(20240817)
    x = rng.uniform(0, 40, size=(60, 22))
    y = ((x[:, 2] > 24) | (x[:, 13] > 30)).astype(np.uint8)
    model = train_arrays(x, y, TrainConfig(n_trees=5, max_depth=4, seed=99))
    save_model(model, HERE / "golden_model.json")

    probe = np.round(rng.uniform(0, 40, size=(25, 22)), 3)
    conf = model.confidences(probe)
    (HERE / "golden_predictions.json").write_text(
        json.dumps(
            {"inputs": probe.tolist(), "confidences": conf.tolist()},
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    print("wrote golden_model.json and golden_predictions.json")


if __name__ == "__main__":
    main()
