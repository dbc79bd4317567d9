"""Regenerate the golden bundle files. Only run after a deliberate format change."""

import json
from pathlib import Path


from hydraq.datasets import generate
from hydraq.models import ModelConfig, build_and_train

HERE = Path(__file__).parent


def main():
    ds = generate(60, seed=3, noise_level=0.05)
    config = ModelConfig(seed=3, epochs=2, batch_size=16)
    bundle = build_and_train("qsm", ds, "conductivity", config)
    bundle.save(HERE / "golden_bundle.json")
    probe = generate(5, seed=99).features()
    expected = {"inputs": probe.tolist(), "predictions": bundle.predict(probe).tolist()}
    (HERE / "golden_predictions.json").write_text(json.dumps(expected, indent=1) + "\n")


if __name__ == "__main__":
    main()
