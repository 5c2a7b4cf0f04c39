import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def write_toy_csv(path, periods=24, total=400, channels=2, noise=0.05, seed=0):
    """Synthetic CSV in benchmark layout: header, timestamp column, numeric
    channels carrying a daily-period signal."""
    r = np.random.default_rng(seed)
    t = np.arange(total)
    cols = []
    for c in range(channels):
        phase = 2 * np.pi * c / max(channels, 1)
        cols.append(np.sin(2 * np.pi * t / periods + phase)
                    + noise * r.normal(size=total))
    vals = np.stack(cols, axis=1)
    header = "date," + ",".join(f"ch{c}" for c in range(channels))
    lines = [header]
    for i in range(total):
        lines.append(f"2020-01-01T{i}," + ",".join(f"{v:.6f}" for v in vals[i]))
    path.write_text("\n".join(lines) + "\n")
    return vals


@pytest.fixture
def toy_csv(tmp_path):
    path = tmp_path / "toy.csv"
    write_toy_csv(path)
    return path
