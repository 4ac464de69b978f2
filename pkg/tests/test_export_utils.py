import hashlib
import json
import math

import numpy as np
import pytest

from config import RunConfig
from models.errors import ExportError
from models.stroboscopic_analysis import CycleType
from utils.export_utils import ResultWriter, _plain, dumps_json
from utils.svg_utils import SvgPlot


@pytest.fixture
def writer(tmp_path):
    return ResultWriter(str(tmp_path / 'out'), 'demo', RunConfig.defaults(), '0.0.test')


def test_csv_uses_lf_and_repr_floats(writer):
    path = writer.write_csv('rows.csv', ['xi', 'class'], [(0.1, CycleType.CANARD), {'xi': 2.0, 'class': 'x'}])
    with open(path, 'rb') as f:
        data = f.read()
    assert data == b"xi,class\n0.1,canard-type\n2.0,x\n"
    assert writer.files['rows.csv'] == hashlib.sha256(data).hexdigest()


def test_rewrite_is_byte_identical(tmp_path):
    rows = [(k / 7.0, math.sin(k)) for k in range(20)]
    digests = []
    for run in ('a', 'b'):
        w = ResultWriter(str(tmp_path / run), 'demo', RunConfig.defaults(), '0.0.test')
        w.write_csv('rows.csv', ['a', 'b'], rows)
        w.write_json('summary.json', {'b': np.float64(1.5), 'a': [1, 2]})
        digests.append(dict(w.files))
    assert digests[0] == digests[1]


def test_manifest_lists_files_and_config(writer, tmp_path):
    writer.write_text('plot.svg', '<svg/>')
    writer.write_json('data.json', {'x': 1})
    path = writer.write_manifest()
    assert path.endswith('demo_manifest.json')
    with open(path, encoding='utf-8') as f:
        manifest = json.load(f)
    assert list(manifest['files']) == ['data.json', 'plot.svg']
    assert manifest['command'] == 'demo'
    assert manifest['version'] == '0.0.test'
    assert manifest['config'] == RunConfig.defaults().to_text()
    assert manifest['config_sha256'] == hashlib.sha256(manifest['config'].encode('utf-8')).hexdigest()
    assert set(manifest['tolerances']) == {'TOL_RTOL', 'TOL_ATOL', 'TOL_NEWTON', 'TOL_THRESHOLD'}


def test_unwritable_directory_raises_export_error(tmp_path):
    blocker = tmp_path / 'file'
    blocker.write_text('')
    w = ResultWriter(str(blocker / 'sub'), 'demo', RunConfig.defaults(), '0')
    with pytest.raises(ExportError):
        w.write_text('a.txt', 'x')


def test_json_is_sorted_and_plain():
    text = dumps_json({'b': np.array([1.0, 2.0]), 'a': CycleType.PURE_STICK, 'c': math.inf})
    assert text.endswith('}\n')
    assert list(json.loads(text)) == ['a', 'b', 'c']
    assert json.loads(text) == {'a': 'pure-stick', 'b': [1.0, 2.0], 'c': 'inf'}


def test_plain_converts_numpy_and_complex():
    assert _plain(np.int64(3)) == 3
    assert _plain(np.bool_(True)) is True
    assert _plain(complex(1.0, -2.0)) == [1.0, -2.0]
    assert _plain((np.float32(0.5),)) == [0.5]
    assert _plain(float('nan')) == 'nan'


def test_svg_render():
    plot = SvgPlot(title='R0 & fixed points', xlabel='y2', ylabel='R0')
    plot.polyline([0.0, 1.0, 2.0], [1.0, 0.0, 1.0], label='graph')
    plot.polyline([0.0, math.nan], [0.0, 1.0])
    plot.marker(1.0, 0.0, color='#d62728', shape='square')
    plot.hline(0.5)
    svg = plot.render()
    assert svg.startswith('<?xml')
    assert svg.endswith('</svg>\n')
    assert 'R0 &amp; fixed points' in svg
    assert svg.count('<polyline') == 2
    assert svg.count('<rect') == 4
    assert 'stroke-dasharray' in svg
