"""Published architecture and training constants, read from paper.md and compared with the code.

Skipped when paper.md is not next to the package (e.g. in an installed copy).
"""

import re
from pathlib import Path

import pytest

from amnet.anet import LATERAL, LAYERS
from amnet.model import ModelConfig
from amnet.train import TrainConfig

PAPER = Path(__file__).resolve().parents[1] / "paper.md"
pytestmark = pytest.mark.skipif(not PAPER.is_file(), reason="paper.md not available")


@pytest.fixture(scope="module")
def text():
    return PAPER.read_text()


def table_rows(text):
    row = re.compile(r"\\textbf\{(?:Atrous )?Conv(\d)\}\s*&(\d)\*(\d)\s*&(\d+)\s*&(\d)\s*&(?:Atrous )?Conv(\d)")
    return [tuple(int(g) for g in m.groups()) for m in row.finditer(text)]


def test_layer_table(text):
    rows = table_rows(text)
    assert len(rows) == 6
    prev_out = 3
    for (idx, kh, kw, out, rate, _), (name, k, cin, cout, r) in zip(rows, LAYERS):
        assert name == f"conv{idx}"
        assert (kh, kw) == (k, k)
        assert (cout, r) == (out, rate)
        assert cin == prev_out
        prev_out = cout


def test_lateral_connections(text):
    pairs = {(idx - 1, lateral - 1) for idx, *_, lateral in table_rows(text)}
    for a, b in LATERAL:
        assert (a, b) in pairs and (b, a) in pairs


def test_patch_sizes(text):
    m = re.search(r"templates[^.]*?(\d+)\s*\$\{\\times\}\$\s*(\d+)[^.]*?ROIs[^.]*?(\d+)", text)
    assert m is not None
    cfg = ModelConfig()
    assert (int(m.group(1)), int(m.group(2))) == (cfg.template_size, cfg.template_size)
    assert int(m.group(3)) == cfg.roi_size
    assert cfg.roi_size == 3 * cfg.template_size


def test_training_hyperparameters(text):
    cfg = TrainConfig()
    decay = [float(v) for v in re.findall(r"weight decay\D{0,6}(\d+\.\d+)", text)]
    assert decay == [cfg.weight_decay]
    rates = re.findall(r"learning rate\D{0,16}1 \* 10-(\d)\D{0,30}1 \* 10-(\d)", text)
    assert [(10.0 ** -int(a), 10.0 ** -int(b)) for a, b in rates] == [(cfg.lr_start, cfg.lr_end)]
    batch = [int(v) for v in re.findall(r"batch size\D{0,12}(\d+)", text)]
    assert batch == [cfg.batch_size]
