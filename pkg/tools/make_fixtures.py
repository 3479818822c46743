#!/usr/bin/env python3
"""Regenerate the packaged fixtures: blob dataset PNGs and tiny CNN weights.

Deterministic given the seeds in absgrad.fixtures; reruns reproduce the
checked-in files byte for byte.
"""

from pathlib import Path

from absgrad import fixtures

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "absgrad" / "data"


def main() -> None:
    manifest = fixtures.write_blob_dataset(DATA_DIR / "blobs")
    print(f"dataset written: {manifest}")
    net, accuracy = fixtures.train_fixture_network()
    print(f"train accuracy: {accuracy:.4f}")
    if accuracy < 0.95:
        raise SystemExit("training failed to reach 95% accuracy; adjust before committing")
    weights = DATA_DIR / fixtures.WEIGHTS_FILENAME
    fixtures.save_tiny_cnn(net, weights)
    print(f"weights written: {weights}")


if __name__ == "__main__":
    main()
