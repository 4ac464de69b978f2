import pytest

from config import SCHEMA, RunConfig
from models.errors import ConfigError


def test_defaults_give_standard_parameters():
    config = RunConfig.defaults()
    assert config['MODEL_DELTA'] == 0.6
    assert config['PHI_FAMILY'] == 'standard'
    assert config['SINGULAR_XI_VALUES'] == ()
    params = config.model_params()
    assert params.mu == pytest.approx(2.75)
    assert params.eps == 0.01
    assert set(config.values) == set(SCHEMA)


def test_text_round_trip():
    config = RunConfig.from_text("MODEL_XI=0.9397\nCYCLES_SEEDS_Y2=0.1, -0.2\n")
    assert config['MODEL_XI'] == 0.9397
    assert config['CYCLES_SEEDS_Y2'] == (0.1, -0.2)
    again = RunConfig.from_text(config.to_text())
    assert again.values == config.values
    assert again.to_text() == config.to_text()


def test_to_text_is_sorted_and_lf_terminated():
    lines = RunConfig.defaults().to_text().split('\n')
    assert lines[-1] == ''
    keys = [line.split('=', 1)[0] for line in lines[:-1]]
    assert keys == sorted(keys)


def test_empty_value_means_default():
    assert RunConfig.from_text("MODEL_MU_D=\n")['MODEL_MU_D'] == 0.4


@pytest.mark.parametrize("text", [
    "MODEL_COLOUR=blue\n",
    "MODEL_DELTA=wide\n",
    "MODEL_MU_S=0.3\n",
    "TOL_RTOL=0\n",
    "THRESHOLDS_PD_LO=1.3\n",
    "PHI_FAMILY=cubic\n",
    "EVIDENCE_GRID=0\n",
    "CONTINUE_STEP=-0.01\n",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        RunConfig.from_text(text)


def test_load_from_file(tmp_path):
    path = tmp_path / 'run.env'
    path.write_text("# reference point\nMODEL_XI=0.5\nMODEL_EPS=0.05\n")
    config = RunConfig.load(str(path))
    assert config.model_params().xi == 0.5
    assert config.model_params(xi=0.7).xi == 0.7


def test_missing_file():
    with pytest.raises(ConfigError):
        RunConfig.load('/nonexistent/run.env')


def test_load_without_path_gives_defaults():
    assert RunConfig.load(None).values == RunConfig.defaults().values


def test_section():
    section = RunConfig.defaults().section('continue')
    assert section['xi_start'] == 0.95
    assert section['seed_y2'] == 0.0
    assert 'model_xi' not in section


def test_tolerance_override():
    config = RunConfig.defaults().with_tol_override(1e-6)
    assert config['TOL_RTOL'] == 1e-6
    assert config['TOL_NEWTON'] == 1e-6
    assert config.tols == (1e-6, config['TOL_ATOL'])
    with pytest.raises(ConfigError):
        RunConfig.defaults().with_overrides(TOL_BOGUS=1.0)


def test_tanh_family_is_selected():
    params = RunConfig.from_text("PHI_FAMILY=tanh\n").model_params()
    assert params.regularization.family == 'tanh'
