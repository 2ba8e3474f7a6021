"""Build a model bundle + calibration + service config for frontend tests.

Usage: python3 make_fixtures.py <out_dir> <port>
"""

import json
import sys
from pathlib import Path

from voicefem.calibration import fit_isotonic
from voicefem.classifier import MlpSpec, build_model, save_model


def main() -> None:
    out = Path(sys.argv[1])
    port = int(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)

    bundle = build_model(MlpSpec(layer_sizes=(32,), input_dim=48), seed=7,
                         metadata={"training_corpus": "frontend-fixture"})
    save_model(bundle, out / "model.vfem")
    (out / "calib.json").write_text(
        fit_isotonic([(0.0, 0.0), (1.0, 100.0)]).to_json(), encoding="utf-8")
    (out / "service.json").write_text(json.dumps({
        "model_path": str(out / "model.vfem"),
        "calibration_path": str(out / "calib.json"),
        "host": "127.0.0.1",
        "port": port,
    }), encoding="utf-8")


if __name__ == "__main__":
    main()
